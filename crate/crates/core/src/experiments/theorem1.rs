//! Hull volume against vertex count.

use rayon::prelude::*;
use serde::Serialize;

use super::{families::generate_family, log_log_slope, to_csv, Check, CommandOutput, Family, RunConfig};
use crate::error::{HypError, Result};
use crate::hull::convex_hull;
use crate::rng::derive_seed;
use crate::volume::{polytope_volume, Budget, VolumeEstimate, VolumeMethod};

/// Fresh-seed attempts for a degenerate or unstable hull.
const HULL_ATTEMPTS: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Row {
    pub n: usize,
    pub size: usize,
    pub replicate: usize,
    pub family: &'static str,
    pub hull_vertices: usize,
    pub hull_volume: f64,
    pub volume_per_point: f64,
    pub std_error: f64,
    pub rel_error: f64,
    pub method: VolumeMethod,
    pub attempts: u64,
    pub seed: u64,
    pub rel_tol: f64,
    pub samples: usize,
}

pub struct Theorem1Settings {
    pub dimensions: Vec<usize>,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub family: Family,
    pub ball_radius: f64,
    pub method: VolumeMethod,
    pub budget: Budget,
    pub seed: u64,
}

impl Theorem1Settings {
    pub fn from_config(config: &RunConfig) -> Self {
        Theorem1Settings {
            dimensions: config.dimensions.clone().unwrap_or_else(|| vec![2, 3]),
            sizes: config.sizes.clone().unwrap_or_else(|| vec![8, 16, 32, 64, 128, 256]),
            replicates: config.replicates.unwrap_or(5),
            family: config.family.unwrap_or_default(),
            ball_radius: config.ball_radius.unwrap_or(3.0),
            method: config.method.unwrap_or_default(),
            budget: config.budget_or(Budget::default()),
            seed: config.seed,
        }
    }
}

fn one_instance(s: &Theorem1Settings, n: usize, size: usize, replicate: usize) -> Result<Theorem1Row> {
    let base = derive_seed(s.seed, &[n as u64, size as u64, replicate as u64]);
    let mut last_err = None;
    for attempt in 0..HULL_ATTEMPTS {
        let seed = if attempt == 0 { base } else { derive_seed(base, &[attempt]) };
        let points = generate_family(s.family, n, size, s.ball_radius, seed)?;
        match convex_hull(&points) {
            Ok(poly) => {
                let v: VolumeEstimate = polytope_volume(&poly, s.method, &s.budget, seed)?;
                return Ok(Theorem1Row {
                    n,
                    size,
                    replicate,
                    family: s.family.name(),
                    hull_vertices: poly.vertices().len(),
                    hull_volume: v.value,
                    volume_per_point: v.value / size as f64,
                    std_error: v.std_error,
                    rel_error: v.achieved_rel_error,
                    method: v.method,
                    attempts: attempt + 1,
                    seed,
                    rel_tol: s.budget.rel_tol,
                    samples: s.budget.samples,
                });
            }
            Err(e @ (HypError::DegenerateHull { .. } | HypError::HullUnstable)) => {
                log::warn!("n={n} N={size} replicate {replicate}: {e}; retrying with a fresh seed");
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(HypError::HullUnstable))
}

pub fn sweep(s: &Theorem1Settings) -> Result<Vec<Theorem1Row>> {
    let tasks: Vec<(usize, usize, usize)> = s
        .dimensions
        .iter()
        .flat_map(|&n| s.sizes.iter().flat_map(move |&size| (0..s.replicates).map(move |r| (n, size, r))))
        .collect();
    tasks.par_iter().map(|&(n, size, r)| one_instance(s, n, size, r)).collect()
}

/// Mean hull volume per size for dimension `n`, in size order.
pub fn mean_volumes(rows: &[Theorem1Row], n: usize) -> Vec<(f64, f64)> {
    let mut sizes: Vec<usize> = rows.iter().filter(|r| r.n == n).map(|r| r.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|size| {
            let v: Vec<f64> = rows.iter().filter(|r| r.n == n && r.size == size).map(|r| r.hull_volume).collect();
            (size as f64, v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect()
}

/// Slope of log mean volume against log size over sizes in `[max/10, max]`.
pub fn top_decade_slope(means: &[(f64, f64)]) -> Option<f64> {
    let top = means.iter().map(|m| m.0).fold(0.0, f64::max);
    let decade: Vec<(f64, f64)> = means.iter().copied().filter(|m| m.0 >= top / 10.0).collect();
    (decade.len() >= 2).then(|| log_log_slope(&decade))
}

/// Planar fan bound `Vol <= (N - 2) π`, allowing the reported error.
pub fn within_fan_bound(row: &Theorem1Row) -> bool {
    let bound = (row.size as f64 - 2.0) * std::f64::consts::PI;
    let slack = 3.0 * row.std_error + (row.rel_error.max(row.rel_tol) * row.hull_volume);
    row.hull_volume <= bound + slack
}

pub fn checks(rows: &[Theorem1Row], dimensions: &[usize]) -> Vec<Check> {
    let mut checks = Vec::new();
    for &n in dimensions {
        let means = mean_volumes(rows, n);
        match top_decade_slope(&means) {
            Some(slope) => checks.push(Check::new(format!("n{n}_top_decade_slope"), slope <= 1.05, format!("slope {slope:.4} (limit 1.05)"))),
            None => checks.push(Check::new(format!("n{n}_top_decade_slope"), true, "fewer than two sizes in the top decade; skipped")),
        }
        let per_point: Vec<f64> = means.iter().map(|m| m.1 / m.0).collect();
        if let (Some(&last), Some(max)) = (per_point.last(), per_point.iter().copied().reduce(f64::max)) {
            checks.push(Check::new(format!("n{n}_volume_per_point_bounded"), last <= max, format!("last {last:.4}, max {max:.4}")));
        }
        if n == 2 {
            let bad: Vec<String> = rows.iter().filter(|r| r.n == 2 && !within_fan_bound(r)).map(|r| format!("N={} rep {}", r.size, r.replicate)).collect();
            checks.push(Check::new("n2_fan_bound", bad.is_empty(), if bad.is_empty() { "Vol <= (N-2)π on every row".to_string() } else { bad.join(", ") }));
        }
    }
    checks
}

pub fn run(config: &RunConfig) -> Result<CommandOutput> {
    let s = Theorem1Settings::from_config(config);
    let rows = sweep(&s)?;
    Ok(CommandOutput { body: to_csv(&rows)?, checks: checks(&rows, &s.dimensions), attachments: Vec::new() })
}
