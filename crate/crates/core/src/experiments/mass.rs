//! How much of a regular simplex lies near its vertices.

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{to_csv, CommandOutput, RunConfig};
use crate::cones::tangent_basis;
use crate::error::Result;
use crate::klein::{dist_raw, norm, KleinPoint};
use crate::rng::{derive_seed, parallel_chunks};
use crate::volume::{Budget, ConeSampler, FacetCone};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassRow {
    pub n: usize,
    pub radius: f64,
    pub c: f64,
    pub threshold: f64,
    pub fraction: f64,
    pub std_error: f64,
    pub low_confidence: bool,
    pub simplex_volume: f64,
    pub seed: u64,
    pub samples: usize,
}

/// Regular simplex centered at the origin with pairwise vertex distance `r`.
///
/// Vertices are `t v_i` with `v_i · v_j = -1/n`; `cosh r = (1 + t²/n)/(1 - t²)`
/// gives `t² = (cosh r - 1)/(cosh r + 1/n)`.
pub fn regular_simplex(n: usize, r: f64) -> Result<Vec<KleinPoint>> {
    let t = ((r.cosh() - 1.0) / (r.cosh() + 1.0 / n as f64)).sqrt();
    let ones: Vec<f64> = vec![1.0 / ((n + 1) as f64).sqrt(); n + 1];
    let basis = tangent_basis(&ones);
    (0..=n)
        .map(|i| {
            let v: Vec<f64> = basis.iter().map(|b| b[i]).collect();
            let len = norm(&v);
            KleinPoint::new(v.into_iter().map(|x| t * x / len).collect())
        })
        .collect()
}

/// Weighted hyperbolic-uniform sample of the simplex: `(weight, distance to nearest vertex)`.
pub fn nearest_vertex_sample(vertices: &[KleinPoint], samples: usize, seed: u64) -> Vec<(f64, f64)> {
    let n = vertices.len() - 1;
    let cones: Vec<FacetCone> = (0..=n)
        .filter_map(|skip| {
            FacetCone::new(vertices.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| v.coords().to_vec()).collect())
        })
        .collect();
    let sampler = ConeSampler::new(cones);
    parallel_chunks(samples, seed, |rng: &mut ChaCha8Rng, count| {
        (0..count)
            .map(|_| {
                let d = sampler.draw(rng);
                let near = vertices.iter().map(|v| dist_raw(v.coords(), &d.point)).fold(f64::INFINITY, f64::min);
                (d.weight, near)
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Weighted fraction of the sample within `threshold`, with its delta-method standard error.
pub fn fraction_within(sample: &[(f64, f64)], threshold: f64) -> (f64, f64) {
    let total: f64 = sample.iter().map(|s| s.0).sum();
    let inside: f64 = sample.iter().filter(|s| s.1 <= threshold).map(|s| s.0).sum();
    let f = inside / total;
    let var: f64 = sample.iter().map(|s| (s.0 * ((s.1 <= threshold) as u8 as f64 - f)).powi(2)).sum();
    (f, var.sqrt() / total)
}

pub fn default_thresholds() -> Vec<f64> {
    (1..=20).map(|k| 0.05 * k as f64).collect()
}

pub fn run(config: &RunConfig) -> Result<CommandOutput> {
    let dims = config.dimensions.clone().unwrap_or_else(|| vec![2, 3]);
    let radii = config.radii.clone().unwrap_or_else(|| vec![1.0, 2.0, 5.0, 10.0]);
    let cs = config.thresholds.clone().unwrap_or_else(default_thresholds);
    let budget = config.budget_or(Budget::with_samples(200_000));
    let mut rows = Vec::new();
    for &n in &dims {
        for &r in &radii {
            let seed = derive_seed(config.seed, &[n as u64, r.to_bits()]);
            let sample = nearest_vertex_sample(&regular_simplex(n, r)?, budget.samples, seed);
            let volume = sample.iter().map(|s| s.0).sum::<f64>() / sample.len() as f64;
            for &c in &cs {
                let (fraction, std_error) = fraction_within(&sample, c * r);
                rows.push(MassRow {
                    n,
                    radius: r,
                    c,
                    threshold: c * r,
                    fraction,
                    std_error,
                    low_confidence: std_error > 0.05,
                    simplex_volume: volume,
                    seed,
                    samples: budget.samples,
                });
            }
        }
    }
    Ok(CommandOutput { body: to_csv(&rows)?, checks: Vec::new(), attachments: Vec::new() })
}
