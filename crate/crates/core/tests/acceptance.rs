//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a subset:
//! `cargo test --test acceptance -- 2 5`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hypervol::cones::{
    cone_integral_bound, explicit_majorant, first_summand, first_summand_quadrature, lemma1_determinant, lemma1_map,
    lemma1_selector, t_function, verify_facet_decomposition, BarycentricPoint, SectionKind, VertexCone, ANGLE_CAP,
    IDEAL_TRUNCATION,
};
use hypervol::experiments::cone_table::default_angles;
use hypervol::experiments::theorem1::{self, Theorem1Settings};
use hypervol::experiments::theorem2::{self, Geometry, InstanceFamily, Theorem2Settings};
use hypervol::experiments::{self, AnnealingConfig, Command, Family, RunConfig};
use hypervol::extension::{extension_volume, greedy_packing, random_cluster};
use hypervol::hull::convex_hull;
use hypervol::klein::{ball_volume, density, dist, write_point_cloud};
use hypervol::quadrature::{gauss_kronrod, Tolerance};
use hypervol::rng::{dirichlet_weights, stream_rng, uniform_in_ball, unit_vector};
use hypervol::volume::{
    polytope_volume, region_volume_mc, simplex_volume, triangle_area_2d, HyperbolicBall,
};
use hypervol::{Budget, Isometry, KleinPoint, Polytope, Simplex, VolumeMethod};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct Suite {
    failed: usize,
}

impl Suite {
    fn line(&mut self, id: &str, name: &str, passed: bool, detail: String) {
        println!("{} {id} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            self.failed += 1;
        }
    }

    fn timed(&mut self, id: &str, limit: Duration, start: Instant) {
        let took = start.elapsed();
        self.line(id, "runtime", took <= limit, format!("{:.1}s (limit {}s)", took.as_secs_f64(), limit.as_secs()));
    }
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, max_norm: f64) -> KleinPoint {
    KleinPoint::new(uniform_in_ball(rng, n).into_iter().map(|x| x * max_norm).collect()).unwrap()
}

fn ideal_point(rng: &mut ChaCha8Rng, n: usize) -> KleinPoint {
    KleinPoint::new(unit_vector(rng, n).into_iter().map(|x| x * IDEAL_TRUNCATION).collect()).unwrap()
}

/// Length of the chord from `p` to `q` under the Klein line element
/// `ds² = |dx|²/(1-|x|²) + (x·dx)²/(1-|x|²)²`.
fn line_element_length(p: &[f64], q: &[f64]) -> f64 {
    let v: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let speed = |t: f64| {
        let x: Vec<f64> = p.iter().zip(&v).map(|(a, b)| a + t * b).collect();
        let w = 1.0 - x.iter().map(|c| c * c).sum::<f64>();
        let xv: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
        (vv / w + xv * xv / (w * w)).sqrt()
    };
    gauss_kronrod(speed, 0.0, 1.0, Tolerance::relative(1e-13).with_abs(1e-15)).value
}

fn criterion_1(s: &mut Suite) {
    let start = Instant::now();
    let mut rng = stream_rng(101, 0);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let n = 2 + k % 4;
        let p = random_point(&mut rng, n, 0.98);
        let q = random_point(&mut rng, n, 0.98);
        let d = dist(&p, &q).unwrap();
        worst = worst.max((d - line_element_length(p.coords(), q.coords())).abs());
    }
    s.line("1", "distance_vs_line_element", worst <= 1e-6, format!("max deviation {worst:.2e} over 100 pairs"));
    let rho = density(&KleinPoint::origin(3));
    s.line("1", "density_at_origin", rho == 1.0, format!("{rho}"));
    let mut worst: f64 = 0.0;
    for r in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0f64] {
        let exact = 2.0 * PI * (r.cosh() - 1.0);
        worst = worst.max((ball_volume(2, r).unwrap() - exact).abs() / exact);
    }
    s.line("1", "planar_ball_volume", worst <= 1e-9, format!("max relative deviation {worst:.2e}"));
    s.timed("1", Duration::from_secs(10), start);
}

fn criterion_2(s: &mut Suite) {
    let start = Instant::now();
    let mut rng = stream_rng(202, 0);
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let v: Vec<KleinPoint> = (0..3).map(|_| random_point(&mut rng, 2, 0.995)).collect();
        let exact = triangle_area_2d(&v[0].clone().into(), &v[1].clone().into(), &v[2].clone().into()).unwrap();
        let simplex = Simplex::new(v).unwrap();
        let quad = simplex_volume(&simplex, VolumeMethod::Quadrature, &Budget::default(), k).unwrap();
        let mc = simplex_volume(&simplex, VolumeMethod::MonteCarlo, &Budget::with_samples(1_000_000), k).unwrap();
        for (label, est) in [("quadrature", &quad), ("monte_carlo", &mc)] {
            let tol = (1e-4 * exact).max(3.0 * est.uncertainty());
            let dev = (est.value - exact).abs();
            worst = worst.max(dev / tol);
            if dev > tol {
                bad.push(format!("#{k} {label}: {} vs {exact}", est.value));
            }
        }
    }
    s.line("2", "triangle_oracle", bad.is_empty(), format!("worst deviation/tolerance {worst:.3}; failures {bad:?}"));
    s.timed("2", Duration::from_secs(120), start);
}

fn criterion_3(s: &mut Suite) {
    let start = Instant::now();
    let mut rng = stream_rng(303, 0);
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let n = 2 + (k as usize % 2);
        let iso = Isometry::random(&mut rng, n, 2.0);
        let (a, b) = if k % 4 < 2 {
            let pts: Vec<KleinPoint> = (0..8).map(|_| random_point(&mut rng, n, 0.9)).collect();
            let moved: Vec<KleinPoint> = pts.iter().map(|p| iso.apply(p).unwrap()).collect();
            let budget = Budget::with_rel_tol(1e-6);
            let a = polytope_volume(&convex_hull(&pts).unwrap(), VolumeMethod::Quadrature, &budget, k).unwrap();
            let b = polytope_volume(&convex_hull(&moved).unwrap(), VolumeMethod::Quadrature, &budget, k).unwrap();
            (a, b)
        } else {
            let center = random_point(&mut rng, n, 0.5);
            let radius = rng.random_range(0.5..2.0);
            let ball = HyperbolicBall { center: center.clone(), radius };
            let moved = HyperbolicBall { center: iso.apply(&center).unwrap(), radius };
            (region_volume_mc(&ball, 400_000, k).unwrap(), region_volume_mc(&moved, 400_000, k + 1000).unwrap())
        };
        let se = (a.uncertainty().powi(2) + b.uncertainty().powi(2)).sqrt().max(1e-12 * a.value);
        let z = (a.value - b.value).abs() / se;
        worst = worst.max(z);
        if z > 3.0 {
            bad.push(format!("#{k}: {} vs {}", a.value, b.value));
        }
    }
    s.line("3", "isometry_invariance", bad.is_empty(), format!("worst |Δ|/σ {worst:.2}; failures {bad:?}"));
    s.timed("3", Duration::from_secs(120), start);
}

/// Ideal polytope with the origin strictly inside and a random facet of it.
fn random_facet(rng: &mut ChaCha8Rng, n: usize) -> (Polytope, Vec<usize>) {
    loop {
        let count = if n == 2 { 7 } else { 12 };
        let pts: Vec<KleinPoint> = (0..count).map(|_| ideal_point(rng, n)).collect();
        let Ok(poly) = convex_hull(&pts) else { continue };
        if !poly.is_strictly_interior(&vec![0.0; n]) {
            continue;
        }
        let f = rng.random_range(0..poly.facets().len());
        let facet = poly.facets()[f].clone();
        return (poly, facet);
    }
}

fn criterion_4(s: &mut Suite) {
    let start = Instant::now();
    let mut rng = stream_rng(404, 0);
    let mut detail = Vec::new();
    let mut exact = true;
    for n in 2..=5 {
        let verts: Vec<KleinPoint> = (0..n).map(|_| random_point(&mut rng, n, 0.9)).collect();
        let det = (0..n).map(|i| lemma1_determinant(&verts, i).unwrap()).collect::<Vec<_>>();
        let target = 2f64.powi(-(n as i32));
        exact &= det.iter().all(|d| (d - target).abs() <= 1e-12);
        detail.push(format!("n={n}: det {:.6} vs 2^-n {target:.6}", det[0]));
    }
    s.line("4a", "determinant_is_2^-n", exact, detail.join("; "));

    let mut violations = 0;
    for n in 2..=5 {
        let verts: Vec<KleinPoint> = (0..n).map(|_| ideal_point(&mut rng, n)).collect();
        for _ in 0..100_000 {
            let mut w = dirichlet_weights(&mut rng, n + 1);
            w.pop();
            let y = BarycentricPoint::new(w).unwrap();
            let i = lemma1_selector(&verts, &y).unwrap();
            let image = lemma1_map(&verts, &y, i).unwrap().norm();
            let r: f64 = y.point(&verts).iter().map(|x| x * x).sum::<f64>().sqrt();
            if image < r * (1.0 - 1e-12) {
                violations += 1;
            }
        }
    }
    s.line("4b", "selected_map_moves_outward", violations == 0, format!("{violations} violations in 4 x 100000 points"));

    let mut bad = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    for n in [2, 3] {
        for k in 0..20u64 {
            let (poly, facet) = random_facet(&mut rng, n);
            let verts: Vec<KleinPoint> = facet.iter().map(|&i| poly.vertices()[i].clone()).collect();
            let cones: Vec<VertexCone> =
                facet.iter().map(|&i| VertexCone::at_vertex(&poly, i, SectionKind::Truncated).unwrap()).collect();
            let r = verify_facet_decomposition(&verts, &cones, 200_000, k).unwrap();
            ratios.push(r.ratio);
            if !r.holds {
                bad.push(format!("n={n} #{k}: ratio {:.3}", r.ratio));
            }
        }
    }
    let max = ratios.iter().copied().fold(0.0, f64::max);
    s.line("4c", "facet_decomposition", bad.is_empty(), format!("max Vol(D)/ΣVol(D_i) {max:.3}; failures {bad:?}"));
    s.timed("4", Duration::from_secs(600), start);
}

fn criterion_5(s: &mut Suite) {
    let start = Instant::now();
    let angles = default_angles();
    let mut negative = 0;
    let mut root: f64 = 0.0;
    for &phi in &angles {
        for k in 0..=10_000 {
            if t_function(k as f64 / 10_000.0, phi) < 0.0 {
                negative += 1;
            }
        }
        for u in [0.0, 1.0, phi.sin().powi(2)] {
            root = root.max(t_function(u, phi).abs());
        }
    }
    s.line("5", "t_nonnegative", negative == 0, format!("{negative} negative values over {} angles", angles.len()));
    s.line("5", "t_roots", root <= 1e-12, format!("max |t| at 0, 1, sin²φ: {root:.2e}"));
    let mut over = Vec::new();
    let mut first: f64 = 0.0;
    for n in 2..=8 {
        for &phi in angles.iter().filter(|&&p| p < ANGLE_CAP) {
            match cone_integral_bound(n, phi) {
                Ok(v) if v <= explicit_majorant(n, phi) => {}
                Ok(v) => over.push(format!("n={n} φ={phi:.3e}: {v} > {}", explicit_majorant(n, phi))),
                Err(e) => over.push(format!("n={n} φ={phi:.3e}: {e}")),
            }
            let exact = first_summand(n, phi);
            first = first.max((first_summand_quadrature(n, phi) - exact).abs() / exact);
        }
    }
    s.line("5", "integral_within_majorant", over.is_empty(), format!("cells over: {over:?}"));
    s.line("5", "first_summand_quadrature", first <= 1e-8, format!("max relative deviation {first:.2e}"));
    s.timed("5", Duration::from_secs(300), start);
}

fn criterion_6(s: &mut Suite) {
    let start = Instant::now();
    let settings = Theorem1Settings::from_config(&RunConfig {
        dimensions: Some(vec![2, 3]),
        sizes: Some(vec![8, 16, 32, 64, 128, 256]),
        replicates: Some(5),
        family: Some(Family::UniformIdeal),
        seed: 606,
        ..RunConfig::default()
    });
    let rows = theorem1::sweep(&settings).unwrap();
    for n in [2, 3] {
        let means = theorem1::mean_volumes(&rows, n);
        let slope = theorem1::top_decade_slope(&means).unwrap();
        let curve: Vec<String> = means.iter().map(|m| format!("{}:{:.2}", m.0, m.1)).collect();
        s.line("6", &format!("n{n}_top_decade_slope"), slope <= 1.05, format!("slope {slope:.4} (limit 1.05); mean volumes {}", curve.join(" ")));
    }
    let bad: Vec<String> =
        rows.iter().filter(|r| r.n == 2 && !theorem1::within_fan_bound(r)).map(|r| format!("N={} rep {}", r.size, r.replicate)).collect();
    s.line("6", "n2_fan_bound", bad.is_empty(), format!("{} planar rows; failures {bad:?}", rows.iter().filter(|r| r.n == 2).count()));
    s.timed("6", Duration::from_secs(1800), start);
}

fn criterion_7(s: &mut Suite) {
    let start = Instant::now();
    let settings = Theorem2Settings::from_config(&RunConfig {
        dimensions: Some(vec![2, 3]),
        epsilon: Some(1.0),
        separations: Some((1..=10).map(f64::from).collect()),
        cluster_size: Some(20),
        seed: 707,
        ..RunConfig::default()
    });
    let instances: Vec<_> = theorem2::instances(&settings)
        .unwrap()
        .into_iter()
        .filter(|i| matches!(i.family, InstanceFamily::TwoPoint | InstanceFamily::Cluster))
        .collect();
    let rows = theorem2::evaluate_all(&instances, &settings.budget).unwrap();
    let spread = theorem2::plateau_spread(&rows, 5.0, 10.0).unwrap();
    s.line("7", "two_point_plateau", spread <= 1.5, format!("max/min over d in [5, 10] = {spread:.4} (limit 1.5)"));
    let at = |mode| rows.iter().find(|r| r.family == InstanceFamily::TwoPoint && r.mode == mode && r.parameter == 10.0).unwrap().ratio;
    let (hyp, euc) = (at(Geometry::Hyperbolic), at(Geometry::Euclidean));
    s.line("7", "euclidean_factor", euc >= 3.0 * hyp, format!("euclidean {euc:.4} / hyperbolic {hyp:.4} = {:.3} (limit 3)", euc / hyp));
    for ((_, n), group) in theorem2::family_groups(&rows) {
        let ratios: Vec<f64> = group.iter().map(|r| r.ratio).collect();
        let finite = ratios.iter().all(|r| r.is_finite());
        let below: Vec<String> =
            group.iter().filter(|r| r.ratio + 3.0 * r.ratio_std_error < 1.0).map(|r| format!("{:.4}", r.ratio)).collect();
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        let plateau = sorted[sorted.len() / 2];
        let max = *sorted.last().unwrap();
        s.line(
            "7",
            &format!("clusters_n{n}"),
            finite && below.is_empty() && max <= 1.5 * plateau,
            format!("{} ratios in [{:.4}, {max:.4}], median {plateau:.4}; below 1: {below:?}", ratios.len(), sorted[0]),
        );
    }
    s.timed("7", Duration::from_secs(1800), start);
}

fn criterion_8(s: &mut Suite) {
    let start = Instant::now();
    let mut rng = stream_rng(808, 0);
    let mut structural = Vec::new();
    let mut volume = Vec::new();
    for k in 0..50u64 {
        let n = 2 + (k as usize % 2);
        let eps = rng.random_range(0.3..1.5);
        let count = rng.random_range(5..60);
        let points = random_cluster(n, count, rng.random_range(0.0..3.0), rng.random_range(0.5..3.0), k).unwrap();
        let pack = greedy_packing(&points, eps, k).unwrap();
        if !(pack.is_separated() && pack.covers(&points)) {
            structural.push(k);
        }
        let est = extension_volume(&points, eps, &Budget::with_samples(100_000), k).unwrap();
        let lower = pack.len() as f64 * ball_volume(n, eps / 2.0).unwrap();
        if est.value + 3.0 * est.std_error < lower {
            volume.push(format!("#{k}: {} < {lower}", est.value));
        }
    }
    s.line("8", "packing_invariants", structural.is_empty(), format!("failing instances {structural:?}"));
    s.line("8", "packing_lower_bound", volume.is_empty(), format!("failing instances {volume:?}"));
    s.timed("8", Duration::from_secs(600), start);
}

fn small_config(command: Command, input: &std::path::Path) -> RunConfig {
    let mut c = RunConfig { seed: 909, dimensions: Some(vec![2]), budget: Some(Budget::with_samples(20_000)), ..RunConfig::default() };
    match command {
        Command::Theorem1Sweep => {
            c.sizes = Some(vec![8, 16]);
            c.replicates = Some(2);
            c.dimensions = Some(vec![2, 3]);
            c.budget = None;
        }
        Command::Theorem2Check => {
            c.separations = Some(vec![2.0, 6.0]);
            c.clusters = Some(2);
            c.cluster_size = Some(6);
            c.support_directions = Some(32);
            c.dimensions = Some(vec![3]);
        }
        Command::ConeTable => {
            c.dimensions = Some(vec![2, 5]);
            c.angles = Some(vec![1e-3, 0.05]);
        }
        Command::ExtremalSearch => {
            c.points = Some(5);
            c.annealing = Some(AnnealingConfig { steps: 40, ..AnnealingConfig::default() });
        }
        Command::MassNearVertices => {
            c.radii = Some(vec![2.0]);
            c.dimensions = Some(vec![3]);
        }
        Command::HullVolume => {
            c.dimensions = None;
            c.input = Some(input.to_path_buf());
            c.method = Some(VolumeMethod::MonteCarlo);
        }
    }
    c
}

fn criterion_9(s: &mut Suite) {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("cloud.csv");
    let mut rng = stream_rng(909, 0);
    let pts: Vec<KleinPoint> = (0..12).map(|_| random_point(&mut rng, 3, 0.9)).collect();
    write_point_cloud(std::fs::File::create(&input).unwrap(), &pts).unwrap();
    for command in Command::ALL {
        let config = small_config(command, &input);
        let outputs: Vec<_> = [1, 4, 4]
            .into_iter()
            .map(|threads| {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
                pool.install(|| experiments::run(command, &config).unwrap())
            })
            .collect();
        let same = outputs.windows(2).all(|w| w[0].body == w[1].body && w[0].attachments == w[1].attachments);
        s.line("9", command.name(), same, format!("{} bytes, identical across runs with 1 and 4 threads: {same}", outputs[0].body.len()));
    }
}

fn main() -> ExitCode {
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn(&mut Suite)); 9] = [
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
        ("9", criterion_9),
    ];
    let mut suite = Suite { failed: 0 };
    for (id, run) in criteria {
        if wanted.is_empty() || wanted.iter().any(|w| w == id) {
            run(&mut suite);
        }
    }
    println!("acceptance: {} failing line(s)", suite.failed);
    if suite.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
