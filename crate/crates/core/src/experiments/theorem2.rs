//! Hull of an epsilon-extension against the extension itself.

use rayon::prelude::*;
use serde::Serialize;

use super::{median, to_csv, Check, CommandOutput, RunConfig};
use crate::error::Result;
use crate::extension::{
    euclidean_extension_ratio, greedy_packing, random_cluster, theorem2_ratio, two_point_cloud, ExtensionRatio,
};
use crate::klein::{ball_volume, uniform_hyperbolic_ball, Isometry, KleinPoint};
use crate::rng::{derive_seed, stream_rng};
use crate::volume::Budget;

/// Hyperbolic distance from the origin to a cluster center.
pub const CLUSTER_OFFSET: f64 = 1.0;
/// Hyperbolic radius of the ball a cluster is drawn from.
pub const CLUSTER_RADIUS: f64 = 2.0;
/// Spacing and transverse jitter of chain points.
pub const CHAIN_SPACING: f64 = 1.0;
pub const CHAIN_JITTER: f64 = 0.1;
pub const CHAIN_LENGTHS: [usize; 3] = [4, 8, 16];
/// Dense-ball instance: points and hyperbolic radius of the filled ball.
pub const DENSE_POINTS: usize = 300;
pub const DENSE_RADIUS: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceFamily {
    TwoPoint,
    Cluster,
    Chain,
    DenseBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    Hyperbolic,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Row {
    pub instance: usize,
    pub family: InstanceFamily,
    pub mode: Geometry,
    pub n: usize,
    pub epsilon: f64,
    /// Separation for two-point instances, replicate or length otherwise.
    pub parameter: f64,
    pub points: usize,
    pub packing_count: usize,
    pub packing_lower_bound: f64,
    pub hull_volume: f64,
    pub hull_volume_inscribed: f64,
    pub extension_volume: f64,
    pub extension_std_error: f64,
    pub ratio: f64,
    pub ratio_std_error: f64,
    pub ratio_inscribed: f64,
    pub low_confidence: bool,
    pub seed: u64,
    pub samples: usize,
    pub support_directions: usize,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub family: InstanceFamily,
    pub mode: Geometry,
    pub n: usize,
    pub epsilon: f64,
    pub parameter: f64,
    pub points: Vec<KleinPoint>,
    /// Euclidean-mode centers (unused in hyperbolic mode).
    pub euclidean_points: Vec<Vec<f64>>,
    pub support_directions: usize,
    pub seed: u64,
}

pub struct Theorem2Settings {
    pub dimensions: Vec<usize>,
    pub epsilon: f64,
    pub separations: Vec<f64>,
    pub clusters: usize,
    pub cluster_size: usize,
    pub support_directions: Option<usize>,
    pub budget: Budget,
    pub seed: u64,
}

impl Theorem2Settings {
    pub fn from_config(config: &RunConfig) -> Self {
        Theorem2Settings {
            dimensions: config.dimensions.clone().unwrap_or_else(|| vec![2, 3]),
            epsilon: config.epsilon.unwrap_or(1.0),
            separations: config.separations.clone().unwrap_or_else(|| (1..=10).map(f64::from).collect()),
            clusters: config.clusters.unwrap_or(10),
            cluster_size: config.cluster_size.unwrap_or(20),
            support_directions: config.support_directions,
            budget: config.budget_or(Budget::with_samples(200_000)),
            seed: config.seed,
        }
    }

    fn directions_for(&self, n: usize) -> usize {
        self.support_directions.unwrap_or(if n == 2 { 512 } else { 1024 })
    }
}

/// Points along a geodesic through the origin with small transverse jitter.
pub fn chain_cloud(n: usize, count: usize, spacing: f64, jitter: f64, seed: u64) -> Result<Vec<KleinPoint>> {
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|k| {
            let s = (k as f64 - (count as f64 - 1.0) / 2.0) * spacing;
            let mut axis = vec![0.0; n];
            axis[0] = s.tanh();
            let place = Isometry::translate_to_origin(&KleinPoint::new(axis)?).inverse();
            KleinPoint::new(place.apply_raw(&uniform_hyperbolic_ball(&mut rng, n, jitter)))
        })
        .collect()
}

pub fn instances(s: &Theorem2Settings) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    let eps = s.epsilon;
    let mut push = |family, mode, n, parameter, points: Vec<KleinPoint>, euclidean_points, tag: &[u64]| {
        out.push(Instance {
            family,
            mode,
            n,
            epsilon: eps,
            parameter,
            points,
            euclidean_points,
            support_directions: s.directions_for(n),
            seed: derive_seed(s.seed, tag),
        })
    };
    for &d in &s.separations {
        let tag = [1, d.to_bits()];
        push(InstanceFamily::TwoPoint, Geometry::Hyperbolic, 2, d, two_point_cloud(2, d)?, Vec::new(), &tag);
        let euc = vec![vec![-d / 2.0, 0.0], vec![d / 2.0, 0.0]];
        push(InstanceFamily::TwoPoint, Geometry::Euclidean, 2, d, Vec::new(), euc, &[2, d.to_bits()]);
    }
    for &n in &s.dimensions {
        for k in 0..s.clusters {
            let seed = derive_seed(s.seed, &[3, n as u64, k as u64]);
            let pts = random_cluster(n, s.cluster_size, CLUSTER_OFFSET, CLUSTER_RADIUS, seed)?;
            push(InstanceFamily::Cluster, Geometry::Hyperbolic, n, k as f64, pts, Vec::new(), &[3, n as u64, k as u64]);
        }
        for &len in &CHAIN_LENGTHS {
            let seed = derive_seed(s.seed, &[4, n as u64, len as u64]);
            let pts = chain_cloud(n, len, CHAIN_SPACING, CHAIN_JITTER, seed)?;
            push(InstanceFamily::Chain, Geometry::Hyperbolic, n, len as f64, pts, Vec::new(), &[4, n as u64, len as u64]);
        }
    }
    if s.dimensions.contains(&2) {
        let mut rng = stream_rng(derive_seed(s.seed, &[5]), 0);
        let pts = (0..DENSE_POINTS).map(|_| KleinPoint::new(uniform_hyperbolic_ball(&mut rng, 2, DENSE_RADIUS))).collect::<Result<_>>()?;
        out.push(Instance {
            family: InstanceFamily::DenseBall,
            mode: Geometry::Hyperbolic,
            n: 2,
            epsilon: eps,
            parameter: DENSE_RADIUS,
            points: pts,
            euclidean_points: Vec::new(),
            support_directions: s.support_directions.unwrap_or(512),
            seed: derive_seed(s.seed, &[6]),
        });
    }
    Ok(out)
}

fn evaluate(index: usize, inst: &Instance, budget: &Budget) -> Result<Theorem2Row> {
    let (r, count, packing_count, lower): (ExtensionRatio, usize, usize, f64) = match inst.mode {
        Geometry::Hyperbolic => {
            let r = theorem2_ratio(&inst.points, inst.epsilon, inst.support_directions, budget, inst.seed)?;
            let pack = greedy_packing(&inst.points, inst.epsilon, inst.seed)?;
            let lower = pack.len() as f64 * ball_volume(inst.n, inst.epsilon / 2.0)?;
            (r, inst.points.len(), pack.len(), lower)
        }
        Geometry::Euclidean => {
            let r = euclidean_extension_ratio(&inst.euclidean_points, inst.epsilon, inst.support_directions, budget.samples, inst.seed)?;
            (r, inst.euclidean_points.len(), 0, 0.0)
        }
    };
    Ok(Theorem2Row {
        instance: index,
        family: inst.family,
        mode: inst.mode,
        n: inst.n,
        epsilon: inst.epsilon,
        parameter: inst.parameter,
        points: count,
        packing_count,
        packing_lower_bound: lower,
        hull_volume: r.hull_volume.estimate.value,
        hull_volume_inscribed: r.hull_volume.inscribed,
        ratio_inscribed: r.ratio_inscribed,
        extension_volume: r.extension_volume.value,
        extension_std_error: r.extension_volume.std_error,
        ratio: r.ratio,
        ratio_std_error: r.ratio_std_error,
        low_confidence: r.low_confidence,
        seed: inst.seed,
        samples: budget.samples,
        support_directions: inst.support_directions,
    })
}

pub fn evaluate_all(instances: &[Instance], budget: &Budget) -> Result<Vec<Theorem2Row>> {
    instances.par_iter().enumerate().map(|(i, inst)| evaluate(i, inst, budget)).collect()
}

fn two_point(rows: &[Theorem2Row], mode: Geometry) -> Vec<(f64, f64)> {
    rows.iter().filter(|r| r.family == InstanceFamily::TwoPoint && r.mode == mode).map(|r| (r.parameter, r.ratio)).collect()
}

/// `max / min` of the hyperbolic two-point ratios with separation in `[lo, hi]`.
pub fn plateau_spread(rows: &[Theorem2Row], lo: f64, hi: f64) -> Option<f64> {
    let r: Vec<f64> = two_point(rows, Geometry::Hyperbolic).into_iter().filter(|p| p.0 >= lo && p.0 <= hi).map(|p| p.1).collect();
    if r.is_empty() {
        return None;
    }
    Some(r.iter().copied().fold(f64::MIN, f64::max) / r.iter().copied().fold(f64::MAX, f64::min))
}

/// Family groups `(family, n)` with their ratios, in first-appearance order.
pub fn family_groups(rows: &[Theorem2Row]) -> Vec<((InstanceFamily, usize), Vec<&Theorem2Row>)> {
    let mut groups: Vec<((InstanceFamily, usize), Vec<&Theorem2Row>)> = Vec::new();
    for r in rows.iter().filter(|r| r.mode == Geometry::Hyperbolic && r.family != InstanceFamily::TwoPoint) {
        match groups.iter_mut().find(|g| g.0 == (r.family, r.n)) {
            Some(g) => g.1.push(r),
            None => groups.push(((r.family, r.n), vec![r])),
        }
    }
    groups
}

pub fn checks(rows: &[Theorem2Row]) -> Vec<Check> {
    let mut checks = Vec::new();
    if let Some(spread) = plateau_spread(rows, 5.0, 10.0) {
        checks.push(Check::new("two_point_plateau", spread <= 1.5, format!("max/min ratio over d in [5, 10] = {spread:.4}")));
    }
    let hyp = two_point(rows, Geometry::Hyperbolic);
    let euc = two_point(rows, Geometry::Euclidean);
    if let (Some(h), Some(e)) = (hyp.last(), euc.last()) {
        let growing = euc.windows(2).all(|w| w[1].1 > w[0].1);
        checks.push(Check::new(
            "euclidean_contrast",
            growing && e.1 > h.1,
            format!("euclidean ratio at d={} is {:.4} vs hyperbolic {:.4}; increasing: {growing}", e.0, e.1, h.1),
        ));
    }
    for ((family, n), group) in family_groups(rows) {
        let name = format!("{}_n{n}", serde_json::to_value(family).unwrap().as_str().unwrap_or("family"));
        let ratios: Vec<f64> = group.iter().map(|r| r.ratio).collect();
        let below: Vec<usize> = group.iter().filter(|r| !(r.ratio.is_finite() && r.ratio + 3.0 * r.ratio_std_error >= 1.0)).map(|r| r.instance).collect();
        checks.push(Check::new(format!("{name}_ratio_at_least_one"), below.is_empty(), format!("instances failing: {below:?}")));
        let plateau = median(&ratios);
        let max = ratios.iter().copied().fold(f64::MIN, f64::max);
        checks.push(Check::new(format!("{name}_bounded_by_plateau"), max <= 1.5 * plateau, format!("max {max:.4}, median {plateau:.4}")));
        if family == InstanceFamily::DenseBall {
            checks.push(Check::new(format!("{name}_near_convex"), max <= 1.1, format!("ratio {max:.4} (limit 1.1)")));
        }
    }
    let weak: Vec<usize> = rows
        .iter()
        .filter(|r| r.mode == Geometry::Hyperbolic && r.extension_volume + 3.0 * r.extension_std_error < r.packing_lower_bound)
        .map(|r| r.instance)
        .collect();
    checks.push(Check::new("packing_lower_bound", weak.is_empty(), format!("instances failing: {weak:?}")));
    checks
}

pub fn run(config: &RunConfig) -> Result<CommandOutput> {
    let s = Theorem2Settings::from_config(config);
    let rows = evaluate_all(&instances(&s)?, &s.budget)?;
    Ok(CommandOutput { body: to_csv(&rows)?, checks: checks(&rows), attachments: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::klein::dist_raw;

    #[test]
    fn chain_points_follow_the_axis() {
        let pts = chain_cloud(3, 5, 1.0, 0.1, 2).unwrap();
        for w in pts.windows(2) {
            let d = dist_raw(w[0].coords(), w[1].coords());
            assert!((d - 1.0).abs() <= 0.2 + 1e-9);
        }
    }

    #[test]
    fn small_run_is_deterministic() {
        let cfg = RunConfig {
            dimensions: Some(vec![2]),
            separations: Some(vec![2.0, 6.0]),
            clusters: Some(2),
            cluster_size: Some(5),
            support_directions: Some(32),
            budget: Some(Budget::with_samples(20_000)),
            ..RunConfig::default()
        };
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.body, b.body);
        assert!(a.body.starts_with("instance,family,mode,n,epsilon,parameter"));
    }
}
