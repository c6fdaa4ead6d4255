//! Named point-generation families shared by the sweeps.

use serde::{Deserialize, Serialize};

use crate::cones::IDEAL_TRUNCATION;
use crate::error::Result;
use crate::klein::{uniform_hyperbolic_ball, Isometry, KleinPoint};
use crate::rng::{stream_rng, unit_vector};

/// Hyperbolic radius of the small balls that make up a cluster.
pub const CLUSTER_SPREAD: f64 = 0.5;

/// Points per cluster in the `clustered` family.
pub const CLUSTER_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Uniform directions at norm `1 - 1e-6`.
    #[default]
    UniformIdeal,
    /// Hyperbolic-uniform in a ball around the origin.
    UniformBall,
    /// Groups of [`CLUSTER_POINTS`] points in balls of radius [`CLUSTER_SPREAD`]
    /// whose centers are hyperbolic-uniform in a ball around the origin.
    Clustered,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::UniformIdeal => "uniform-ideal",
            Family::UniformBall => "uniform-ball",
            Family::Clustered => "clustered",
        }
    }
}

/// `count` points of `family` in dimension `n`; `ball_radius` is the
/// hyperbolic radius used by the ball-based families.
pub fn generate_family(family: Family, n: usize, count: usize, ball_radius: f64, seed: u64) -> Result<Vec<KleinPoint>> {
    let mut rng = stream_rng(seed, 0);
    match family {
        Family::UniformIdeal => (0..count)
            .map(|_| KleinPoint::new(unit_vector(&mut rng, n).into_iter().map(|x| x * IDEAL_TRUNCATION).collect()))
            .collect(),
        Family::UniformBall => (0..count).map(|_| KleinPoint::new(uniform_hyperbolic_ball(&mut rng, n, ball_radius))).collect(),
        Family::Clustered => {
            let k = count.div_ceil(CLUSTER_POINTS).max(1);
            let centers: Vec<Isometry> = (0..k)
                .map(|_| {
                    let c = KleinPoint::new(uniform_hyperbolic_ball(&mut rng, n, ball_radius))?;
                    Ok(Isometry::translate_to_origin(&c).inverse())
                })
                .collect::<Result<_>>()?;
            (0..count)
                .map(|i| KleinPoint::new(centers[i % k].apply_raw(&uniform_hyperbolic_ball(&mut rng, n, CLUSTER_SPREAD))))
                .collect()
        }
    }
}
