//! Simulated annealing over ideal configurations, against a baseline of
//! disjoint regular ideal simplices.

use rand::Rng;
use serde::Serialize;

use super::{to_csv, AnnealingConfig, Check, CommandOutput, RunConfig};
use crate::cones::{tangent_basis, IDEAL_TRUNCATION};
use crate::error::{HypError, Result};
use crate::hull::{convex_hull, Simplex};
use crate::klein::{dot, norm, write_point_cloud, KleinPoint};
use crate::rng::{derive_seed, gaussian_vector, stream_rng, unit_vector, SphereSequence};
use crate::volume::{polytope_volume, simplex_volume, Budget, VolumeMethod};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub points: usize,
    pub step: usize,
    pub current_volume: f64,
    pub best_volume: f64,
    pub temperature: f64,
    pub accepted: bool,
    pub baseline_volume: f64,
    pub seed: u64,
    pub rel_tol: f64,
}

/// Ideal directions of `count / (n+1)` regular ideal simplices in pairwise
/// disjoint spherical caps, with the total of their volumes.
///
/// Each simplex is a cap center plus `n` points on a small circle around it
/// placed as a regular simplex of the tangent space; the configuration is
/// Möbius-equivalent to a regular ideal simplex whatever the cap size.
/// Caps of angular radius `α` around centers at least `β > 2α` apart have
/// disjoint convex hulls, so the simplices are disjoint.
pub fn disjoint_simplices(n: usize, count: usize, budget: &Budget, seed: u64) -> Result<(Vec<Vec<f64>>, f64)> {
    if count < n + 1 {
        return Err(HypError::NotEnoughPoints { got: count, need: n + 1 });
    }
    let k = count / (n + 1);
    let centers = cap_centers(n, k, seed);
    let mut min_angle = std::f64::consts::PI;
    for (i, a) in centers.iter().enumerate() {
        for b in &centers[i + 1..] {
            min_angle = min_angle.min(dot(a, b).clamp(-1.0, 1.0).acos());
        }
    }
    let spread = 0.9 * 0.45 * min_angle;
    let pattern = regular_pattern(n - 1, n);
    let mut dirs = Vec::with_capacity(k * (n + 1));
    let mut total = 0.0;
    for c in &centers {
        let basis = tangent_basis(c);
        let mut simplex = vec![c.clone()];
        for coef in &pattern {
            let mut d: Vec<f64> = c.iter().map(|x| spread.cos() * x).collect();
            for (w, e) in coef.iter().zip(&basis) {
                for (di, ei) in d.iter_mut().zip(e) {
                    *di += spread.sin() * w * ei;
                }
            }
            simplex.push(d);
        }
        let verts: Vec<KleinPoint> = simplex.iter().map(|d| truncated(d)).collect::<Result<_>>()?;
        let method = if n == 2 { VolumeMethod::Exact2d } else { VolumeMethod::Quadrature };
        total += simplex_volume(&Simplex::new(verts)?, method, budget, seed)?.value;
        dirs.extend(simplex);
    }
    Ok((dirs, total))
}

/// `count` unit vectors in `R^dim` forming a regular simplex (for `dim = 1`, `±1`).
fn regular_pattern(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let ones: Vec<f64> = vec![1.0 / (count as f64).sqrt(); count];
    let basis = tangent_basis(&ones);
    (0..count)
        .map(|i| {
            let coords: Vec<f64> = basis.iter().take(dim).map(|b| b[i]).collect();
            let len = norm(&coords);
            coords.into_iter().map(|x| x / len).collect()
        })
        .collect()
}

fn cap_centers(n: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    if n == 2 {
        return (0..k).map(|j| {
            let a = std::f64::consts::TAU * j as f64 / k as f64;
            vec![a.cos(), a.sin()]
        }).collect();
    }
    if k <= 2 * n {
        return (0..k)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j / 2] = if j % 2 == 0 { 1.0 } else { -1.0 };
                e
            })
            .collect();
    }
    // Farthest-point selection from a low-discrepancy pool.
    let pool = SphereSequence::new(n, seed).take(64 * k);
    let mut chosen = vec![pool[0].clone()];
    let mut closest: Vec<f64> = pool.iter().map(|p| dot(p, &pool[0])).collect();
    while chosen.len() < k {
        let next = (0..pool.len()).min_by(|&a, &b| closest[a].total_cmp(&closest[b])).unwrap();
        for (c, p) in closest.iter_mut().zip(&pool) {
            *c = c.max(dot(p, &pool[next]));
        }
        chosen.push(pool[next].clone());
    }
    chosen
}

fn truncated(d: &[f64]) -> Result<KleinPoint> {
    let len = norm(d);
    KleinPoint::new(d.iter().map(|x| x / len * IDEAL_TRUNCATION).collect())
}

/// Hull volume of ideal directions; degenerate configurations score zero.
pub fn configuration_volume(dirs: &[Vec<f64>], budget: &Budget, seed: u64) -> Result<f64> {
    let pts: Vec<KleinPoint> = dirs.iter().map(|d| truncated(d)).collect::<Result<_>>()?;
    let method = if pts[0].dim() == 2 { VolumeMethod::Exact2d } else { VolumeMethod::Quadrature };
    match convex_hull(&pts) {
        Ok(poly) => Ok(polytope_volume(&poly, method, budget, seed)?.value),
        Err(HypError::DegenerateHull { .. } | HypError::HullUnstable) => Ok(0.0),
        Err(e) => Err(e),
    }
}

pub struct SearchResult {
    pub trace: Vec<TraceRow>,
    pub best: Vec<Vec<f64>>,
    pub best_volume: f64,
    pub baseline_volume: f64,
}

/// Elitist annealing: the best configuration seen is kept and reported.
pub fn search(n: usize, count: usize, annealing: &AnnealingConfig, budget: &Budget, seed: u64) -> Result<SearchResult> {
    let (mut state, baseline_volume) = disjoint_simplices(n, count, budget, seed)?;
    let mut rng = stream_rng(seed, 1);
    while state.len() < count {
        state.push(unit_vector(&mut rng, n));
    }
    let row = |step, current, best, temperature, accepted| TraceRow {
        n,
        points: count,
        step,
        current_volume: current,
        best_volume: best,
        temperature,
        accepted,
        baseline_volume,
        seed,
        rel_tol: budget.rel_tol,
    };
    let mut current = configuration_volume(&state, budget, seed)?;
    let mut best = (current, state.clone());
    let mut temperature = annealing.initial_temperature;
    let mut trace = vec![row(0, current, current, temperature, true)];
    for step in 1..=annealing.steps {
        let i = rng.random_range(0..count);
        let kick = gaussian_vector(&mut rng, n);
        let mut proposal = state.clone();
        let moved: Vec<f64> = state[i].iter().zip(&kick).map(|(d, g)| d + annealing.move_scale * g).collect();
        let len = norm(&moved);
        let u: f64 = rng.random();
        let mut accepted = false;
        if len > 1e-12 {
            proposal[i] = moved.into_iter().map(|x| x / len).collect();
            let value = configuration_volume(&proposal, budget, seed)?;
            if value >= current || (temperature > 0.0 && u < ((value - current) / temperature).exp()) {
                state = proposal;
                current = value;
                accepted = true;
                if current > best.0 {
                    best = (current, state.clone());
                }
            }
        }
        temperature *= annealing.cooling;
        trace.push(row(step, current, best.0, temperature, accepted));
    }
    Ok(SearchResult { trace, best: best.1, best_volume: best.0, baseline_volume })
}

pub fn run(config: &RunConfig) -> Result<CommandOutput> {
    let dims = config.dimensions.clone().unwrap_or_else(|| vec![2]);
    let count = config.points.unwrap_or(6);
    let annealing = config.annealing.unwrap_or_default();
    let budget = config.budget_or(Budget::with_rel_tol(1e-3));
    let mut trace = Vec::new();
    let mut checks = Vec::new();
    let mut attachments = Vec::new();
    for &n in &dims {
        let seed = derive_seed(config.seed, &[n as u64]);
        let r = search(n, count, &annealing, &budget, seed)?;
        let monotone = r.trace.windows(2).all(|w| w[1].best_volume >= w[0].best_volume);
        checks.push(Check::new(
            format!("n{n}_best_at_least_baseline"),
            r.best_volume >= r.baseline_volume * (1.0 - budget.rel_tol),
            format!("best {:.6}, baseline {:.6}, ratio {:.4}", r.best_volume, r.baseline_volume, r.best_volume / r.baseline_volume),
        ));
        checks.push(Check::new(format!("n{n}_best_trace_non_decreasing"), monotone, format!("{} steps", r.trace.len() - 1)));
        let pts: Vec<KleinPoint> = r.best.iter().map(|d| truncated(d)).collect::<Result<_>>()?;
        let mut buf = Vec::new();
        write_point_cloud(&mut buf, &pts)?;
        attachments.push((format!("n{n}.best.csv"), String::from_utf8(buf).map_err(|e| HypError::Io(e.to_string()))?));
        trace.extend(r.trace);
    }
    Ok(CommandOutput { body: to_csv(&trace)?, checks, attachments })
}
