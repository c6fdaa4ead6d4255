//! Epsilon-extensions of point clouds.
//!
//! `A_ε` is the union of closed hyperbolic `ε`-balls around the points of a
//! finite cloud `A`. This module builds greedy maximal packings of `A`, checks
//! the inclusions `∪ B(x_i, ε/2) ⊂ A_ε ⊂ ∪ B(x_i, 2ε)` on probes, estimates
//! `Vol(A_ε)`, and compares it with the volume of `Conv(A_ε)`, computed from
//! polytopes inscribed at its support points. A Euclidean companion runs
//! the same comparison with Euclidean balls.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{HypError, Result};
use crate::hull::{convex_hull, Polytope};
use crate::klein::{ball_volume, dist_raw, dot, norm, uniform_hyperbolic_ball, unit_ball_volume, Isometry, KleinPoint};
use crate::rng::{parallel_chunks, spread_directions, stream_rng, uniform_in_ball, unit_vector};
use crate::volume::{polytope_volume, Budget, Moments, Region, VolumeEstimate, VolumeMethod};

/// Centers of a greedy maximal `ε`-packing of a point cloud.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingResult {
    pub centers: Vec<KleinPoint>,
    pub epsilon: f64,
    pub input_size: usize,
}

impl PackingResult {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Smallest pairwise center distance (infinite for a single center).
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.centers.iter().enumerate() {
            for b in &self.centers[i + 1..] {
                best = best.min(dist_raw(a.coords(), b.coords()));
            }
        }
        best
    }

    /// Pairwise distances strictly exceed `ε`.
    pub fn is_separated(&self) -> bool {
        self.min_separation() > self.epsilon
    }

    /// Every point of `points` is within `ε` of a center.
    pub fn covers(&self, points: &[KleinPoint]) -> bool {
        points.iter().all(|p| self.centers.iter().any(|c| dist_raw(p.coords(), c.coords()) <= self.epsilon))
    }
}

fn check_cloud(points: &[KleinPoint], epsilon: f64) -> Result<usize> {
    let n = points.first().map(|p| p.dim()).ok_or(HypError::NotEnoughPoints { got: 0, need: 1 })?;
    if let Some(p) = points.iter().find(|p| p.dim() != n) {
        return Err(HypError::DimensionMismatch { left: n, right: p.dim() });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(HypError::NonPositiveRadius(epsilon));
    }
    Ok(n)
}

/// Scans the cloud in a seed-shuffled order, keeping each point farther than
/// `ε` from every center kept so far.
pub fn greedy_packing(points: &[KleinPoint], epsilon: f64, seed: u64) -> Result<PackingResult> {
    check_cloud(points, epsilon)?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(&mut stream_rng(seed, 0));
    let mut centers: Vec<KleinPoint> = Vec::new();
    for i in order {
        let p = &points[i];
        if centers.iter().all(|c| dist_raw(c.coords(), p.coords()) > epsilon) {
            centers.push(p.clone());
        }
    }
    Ok(PackingResult { centers, epsilon, input_size: points.len() })
}

/// Union of closed hyperbolic balls with a common radius.
#[derive(Debug, Clone)]
pub struct UnionOfBalls {
    centers: Vec<KleinPoint>,
    radius: f64,
    /// Isometries carrying the origin to each center.
    placements: Vec<Isometry>,
}

impl UnionOfBalls {
    pub fn new(centers: Vec<KleinPoint>, radius: f64) -> Result<Self> {
        check_cloud(&centers, radius)?;
        let placements = centers.iter().map(|c| Isometry::translate_to_origin(c).inverse()).collect();
        Ok(UnionOfBalls { centers, radius, placements })
    }

    pub fn centers(&self) -> &[KleinPoint] {
        &self.centers
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of balls containing `p`.
    pub fn multiplicity(&self, p: &[f64]) -> usize {
        self.centers.iter().filter(|c| dist_raw(c.coords(), p) <= self.radius).count()
    }

    /// Hyperbolic-uniform point in ball `k`.
    fn sample_in<R: Rng + ?Sized>(&self, rng: &mut R, k: usize) -> Vec<f64> {
        let p = uniform_hyperbolic_ball(rng, self.centers[k].dim(), self.radius);
        self.placements[k].apply_raw(&p)
    }
}

impl Region for UnionOfBalls {
    fn dim(&self) -> usize {
        self.centers[0].dim()
    }
    fn contains(&self, p: &[f64]) -> bool {
        self.centers.iter().any(|c| dist_raw(c.coords(), p) <= self.radius)
    }
    fn bounding_radius(&self) -> f64 {
        self.centers.iter().map(|c| (c.norm().atanh() + self.radius).tanh()).fold(0.0, f64::max)
    }
}

/// Volume of a union of equal balls by the Karp-Luby estimator: pick a ball
/// uniformly, a point uniformly in it, and score `K V_ball / m(x)` with `m(x)`
/// the number of balls covering the point.
pub fn union_volume(union: &UnionOfBalls, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    if samples == 0 {
        return Err(HypError::InvalidArgument("samples must be positive".into()));
    }
    let n = union.dim();
    let k = union.centers.len();
    let total = k as f64 * ball_volume(n, union.radius)?;
    let parts = parallel_chunks(samples, seed, |rng: &mut ChaCha8Rng, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            let b = rng.random_range(0..k);
            let p = union.sample_in(rng, b);
            let mult = union.multiplicity(&p).max(1);
            m.push(total / mult as f64, true);
        }
        m
    });
    Ok(Moments::merge(parts).estimate())
}

/// `Vol(A_ε)` for a point cloud.
pub fn extension_volume(points: &[KleinPoint], epsilon: f64, budget: &Budget, seed: u64) -> Result<VolumeEstimate> {
    union_volume(&UnionOfBalls::new(points.to_vec(), epsilon)?, budget.samples, seed)
}

/// Probe counts for the two inclusions around a packing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SandwichReport {
    pub probes: usize,
    /// Probes within `ε/2` of a center but outside `A_ε`.
    pub inner_violations: usize,
    /// Probes inside `A_ε` but farther than `2ε` from every center.
    pub outer_violations: usize,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.inner_violations == 0 && self.outer_violations == 0
    }
}

/// Checks `∪ B(x_i, ε/2) ⊂ A_ε ⊂ ∪ B(x_i, 2ε)` on `probes` points drawn
/// hyperbolic-uniformly from `3ε`-balls around random cloud points.
pub fn sandwich_check(pack: &PackingResult, points: &[KleinPoint], probes: usize, seed: u64) -> Result<SandwichReport> {
    let eps = pack.epsilon;
    check_cloud(points, eps)?;
    let n = points[0].dim();
    let placements: Vec<Isometry> = points.iter().map(|c| Isometry::translate_to_origin(c).inverse()).collect();
    let within = |set: &[KleinPoint], p: &[f64], r: f64| set.iter().any(|c| dist_raw(c.coords(), p) <= r);
    let parts = parallel_chunks(probes, seed, |rng: &mut ChaCha8Rng, count| {
        let (mut inner, mut outer) = (0usize, 0usize);
        for _ in 0..count {
            let k = rng.random_range(0..points.len());
            let p = placements[k].apply_raw(&uniform_hyperbolic_ball(rng, n, 3.0 * eps));
            if norm(&p) >= 1.0 {
                continue;
            }
            let in_ext = within(points, &p, eps);
            if within(&pack.centers, &p, eps / 2.0) && !in_ext {
                inner += 1;
            }
            if in_ext && !within(&pack.centers, &p, 2.0 * eps) {
                outer += 1;
            }
        }
        (inner, outer)
    });
    Ok(SandwichReport {
        probes,
        inner_violations: parts.iter().map(|p| p.0).sum(),
        outer_violations: parts.iter().map(|p| p.1).sum(),
    })
}

/// The ball `B(c, ε)` as the Klein-model ellipsoid `(x - m)ᵀ A (x - m) <= ρ`,
/// with `A = K I + c cᵀ`, `K = cosh²ε (1 - |c|²)`, `s = K + |c|²`, `m = c / s`
/// and `ρ = K - 1 + |c|²/s = K (1 - |c|²) sinh²ε / s`. The last form avoids
/// cancellation for balls near the boundary, where `ρ` is tiny.
struct KleinEllipsoid {
    c: Vec<f64>,
    k: f64,
    s: f64,
    rho: f64,
}

impl KleinEllipsoid {
    fn new(center: &KleinPoint, epsilon: f64) -> Self {
        let c = center.coords().to_vec();
        let gap = center.conformal_gap();
        let k = epsilon.cosh().powi(2) * gap;
        let s = k + (1.0 - gap);
        KleinEllipsoid { c, k, s, rho: k * gap * epsilon.sinh().powi(2) / s }
    }

    /// Support value `max u·x` over the ellipsoid: `u·m + sqrt(ρ uᵀA⁻¹u)`,
    /// with `A⁻¹ = (I - c cᵀ / s) / K`.
    fn support(&self, u: &[f64]) -> f64 {
        let cu = dot(&self.c, u);
        let q = (dot(u, u) - cu * cu / self.s) / self.k;
        cu / self.s + (self.rho * q).sqrt()
    }

    /// Unit outward normal `A (x - m)` at a boundary point.
    fn normal(&self, x: &[f64]) -> Vec<f64> {
        let cx = dot(&self.c, x) - dot(&self.c, &self.c) / self.s;
        let g: Vec<f64> = x.iter().zip(&self.c).map(|(xi, ci)| self.k * (xi - ci / self.s) + ci * cx).collect();
        let len = norm(&g);
        g.into_iter().map(|v| v / len).collect()
    }
}

fn check_directions(n: usize, directions: usize) -> Result<()> {
    if directions < 2 * n {
        return Err(HypError::InvalidArgument(format!("need at least {} support directions", 2 * n)));
    }
    Ok(())
}

/// Boundary points of `Conv(A_ε)`: `directions` well-spread points on each
/// ball, spread in the ball's own frame, kept when their ball attains the
/// support value of the union in the direction of the outward normal there.
fn extension_support_points(points: &[KleinPoint], epsilon: f64, directions: usize, seed: u64) -> Result<Vec<KleinPoint>> {
    let balls: Vec<KleinEllipsoid> = points.iter().map(|p| KleinEllipsoid::new(p, epsilon)).collect();
    let dirs = spread_directions(points[0].dim(), directions, seed);
    let t = epsilon.tanh();
    let mut out = Vec::new();
    for (p, ball) in points.iter().zip(&balls) {
        let from_origin = Isometry::translate_to_origin(p).inverse();
        for u in &dirs {
            let x = from_origin.apply_raw(&u.iter().map(|v| t * v).collect::<Vec<_>>());
            let normal = ball.normal(&x);
            let h = dot(&normal, &x);
            let others = balls.iter().filter(|b| !std::ptr::eq(*b, ball)).map(|b| b.support(&normal)).fold(f64::MIN, f64::max);
            if h >= others {
                out.push(KleinPoint::new(x)?);
            }
        }
    }
    Ok(out)
}

/// Polytope inscribed in `Conv(A_ε)` with every vertex on its boundary; see
/// [`extension_support_points`]. `directions` is the number of candidate
/// points per ball.
pub fn hull_of_extension(points: &[KleinPoint], epsilon: f64, directions: usize, seed: u64) -> Result<Polytope> {
    let n = check_cloud(points, epsilon)?;
    check_directions(n, directions)?;
    convex_hull(&extension_support_points(points, epsilon, directions, seed)?)
}

/// Combines inscribed volumes at `m` and `m/2` directions. The deficit of an
/// inscribed polytope decays like `m^{-2/(n-1)}`, so one Richardson step
/// removes its leading term; the size of that step is added to the error.
fn richardson(fine: VolumeEstimate, coarse: &VolumeEstimate, n: usize) -> VolumeEstimate {
    let step = (fine.value - coarse.value) / (2f64.powf(2.0 / (n as f64 - 1.0)) - 1.0);
    VolumeEstimate {
        value: fine.value + step,
        std_error: (fine.uncertainty().powi(2) + step * step).sqrt(),
        evaluations: fine.evaluations + coarse.evaluations,
        ..fine
    }
}

/// Estimate of `Vol(Conv(A_ε))` with the volume of the inscribed polytope it
/// starts from, which is a lower bound up to integration error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullVolume {
    pub estimate: VolumeEstimate,
    pub inscribed: f64,
}

/// `Vol(Conv(A_ε))` from [`hull_of_extension`] at `directions` and half as
/// many directions, integrated with `VolumeMethod::Quadrature` (Monte Carlo
/// beyond four dimensions).
pub fn extension_hull_volume(points: &[KleinPoint], epsilon: f64, directions: usize, budget: &Budget, seed: u64) -> Result<HullVolume> {
    let n = check_cloud(points, epsilon)?;
    check_directions(n, directions / 2)?;
    let volume = |m| -> Result<VolumeEstimate> {
        let hull = hull_of_extension(points, epsilon, m, seed)?;
        polytope_volume(&hull, VolumeMethod::Quadrature, budget, seed)
    };
    let fine = volume(directions)?;
    let coarse = volume(directions / 2)?;
    Ok(HullVolume { inscribed: fine.value, estimate: richardson(fine, &coarse, n) })
}

/// Hull and extension volumes with their ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionRatio {
    pub hull_volume: HullVolume,
    pub extension_volume: VolumeEstimate,
    pub ratio: f64,
    /// Standard error of the ratio from both estimates (delta method).
    pub ratio_std_error: f64,
    /// Ratio with the inscribed polytope in place of the hull.
    pub ratio_inscribed: f64,
    pub low_confidence: bool,
}

impl ExtensionRatio {
    fn from_parts(hull_volume: HullVolume, extension_volume: VolumeEstimate) -> Self {
        let h = &hull_volume.estimate;
        let ratio = h.value / extension_volume.value;
        let rel = ((h.uncertainty() / h.value).powi(2) + (extension_volume.std_error / extension_volume.value).powi(2)).sqrt();
        let low_confidence = h.low_confidence
            || h.uncertainty() > 0.05 * h.value
            || extension_volume.low_confidence
            || !(extension_volume.value > 0.0)
            || extension_volume.std_error > 0.05 * extension_volume.value;
        ExtensionRatio {
            ratio_std_error: ratio * rel,
            ratio_inscribed: hull_volume.inscribed / extension_volume.value,
            hull_volume,
            extension_volume,
            ratio,
            low_confidence,
        }
    }
}

/// `Vol(Conv(A_ε)) / Vol(A_ε)`; `budget.samples` drives the union estimate.
pub fn theorem2_ratio(points: &[KleinPoint], epsilon: f64, directions: usize, budget: &Budget, seed: u64) -> Result<ExtensionRatio> {
    let hull_volume = extension_hull_volume(points, epsilon, directions, budget, seed)?;
    let extension_volume = extension_volume(points, epsilon, budget, crate::rng::derive_seed(seed, &[1]))?;
    Ok(ExtensionRatio::from_parts(hull_volume, extension_volume))
}

/// The same ratio with Euclidean balls of radius `epsilon` around Euclidean
/// points `points` in `R^n`.
///
/// The configuration is scaled into the unit ball to reuse the hull code; the
/// ratio does not depend on the scale.
pub fn euclidean_extension_ratio(
    points: &[Vec<f64>],
    epsilon: f64,
    directions: usize,
    samples: usize,
    seed: u64,
) -> Result<ExtensionRatio> {
    let n = points.first().map(|p| p.len()).ok_or(HypError::NotEnoughPoints { got: 0, need: 1 })?;
    if !(epsilon > 0.0) {
        return Err(HypError::NonPositiveRadius(epsilon));
    }
    check_directions(n, directions / 2)?;
    let reach = points.iter().map(|p| norm(p)).fold(0.0, f64::max) + epsilon;
    let scale = 0.5 / reach;
    let centers: Vec<Vec<f64>> = points.iter().map(|p| p.iter().map(|x| x * scale).collect()).collect();
    let radius = epsilon * scale;
    let volume = |m| -> Result<VolumeEstimate> {
        let dirs = spread_directions(n, m, seed);
        let mut pts = Vec::new();
        for c in &centers {
            for u in &dirs {
                let top = centers.iter().map(|d| dot(d, u)).fold(f64::MIN, f64::max);
                if dot(c, u) >= top - 1e-12 {
                    pts.push(KleinPoint::new(c.iter().zip(u).map(|(ci, ui)| ci + radius * ui).collect())?);
                }
            }
        }
        let hull = convex_hull(&pts)?;
        Ok(VolumeEstimate {
            value: hull.euclidean_volume(),
            std_error: 0.0,
            evaluations: hull.facets().len() as u64,
            method: VolumeMethod::Quadrature,
            achieved_rel_error: 0.0,
            low_confidence: false,
        })
    };
    let fine = volume(directions)?;
    let coarse = volume(directions / 2)?;
    let hull_volume = HullVolume { inscribed: fine.value, estimate: richardson(fine, &coarse, n) };
    let k = centers.len();
    let total = k as f64 * unit_ball_volume(n) * radius.powi(n as i32);
    let parts = parallel_chunks(samples, crate::rng::derive_seed(seed, &[1]), |rng: &mut ChaCha8Rng, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            let b = rng.random_range(0..k);
            let u = uniform_in_ball(rng, n);
            let p: Vec<f64> = centers[b].iter().zip(&u).map(|(c, x)| c + radius * x).collect();
            let mult = centers
                .iter()
                .filter(|c| {
                    let d: Vec<f64> = c.iter().zip(&p).map(|(a, b)| a - b).collect();
                    norm(&d) <= radius
                })
                .count()
                .max(1);
            m.push(total / mult as f64, true);
        }
        m
    });
    Ok(ExtensionRatio::from_parts(hull_volume, Moments::merge(parts).estimate()))
}

/// Two points at hyperbolic distance `d` on the first axis, symmetric about the origin.
pub fn two_point_cloud(n: usize, d: f64) -> Result<Vec<KleinPoint>> {
    let t = (d / 2.0).tanh();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    a[0] = -t;
    b[0] = t;
    Ok(vec![KleinPoint::new(a)?, KleinPoint::new(b)?])
}

/// `count` points within hyperbolic distance `spread` of a random center at
/// distance `offset` from the origin.
pub fn random_cluster(n: usize, count: usize, offset: f64, spread: f64, seed: u64) -> Result<Vec<KleinPoint>> {
    let mut rng = stream_rng(seed, 0);
    let dir = unit_vector(&mut rng, n);
    let center = KleinPoint::new(dir.iter().map(|x| x * offset.tanh()).collect())?;
    let place = Isometry::translate_to_origin(&center).inverse();
    (0..count).map(|_| KleinPoint::new(place.apply_raw(&uniform_hyperbolic_ball(&mut rng, n, spread)))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{region_volume_mc, HyperbolicBall};

    fn cloud(n: usize, count: usize, rho: f64, seed: u64) -> Vec<KleinPoint> {
        let mut rng = stream_rng(seed, 0);
        (0..count).map(|_| KleinPoint::new(uniform_hyperbolic_ball(&mut rng, n, rho)).unwrap()).collect()
    }

    #[test]
    fn trivial_packings() {
        let one = greedy_packing(&[KleinPoint::origin(2)], 0.5, 0).unwrap();
        assert_eq!(one.len(), 1);
        let two = two_point_cloud(2, 1.5).unwrap();
        assert_eq!(greedy_packing(&two, 0.5, 0).unwrap().len(), 2);
        assert_eq!(greedy_packing(&two, 2.0, 0).unwrap().len(), 1);
        assert!(greedy_packing(&two, 0.0, 0).is_err());
    }

    #[test]
    fn packing_certificates_and_disjoint_half_balls() {
        let points = cloud(2, 1000, 2.0, 41);
        let pack = greedy_packing(&points, 0.5, 7).unwrap();
        assert!(pack.is_separated());
        assert!(pack.covers(&points));
        let enlarged = region_volume_mc(&HyperbolicBall { center: KleinPoint::origin(2), radius: 2.25 }, 200_000, 3).unwrap();
        let packed = pack.len() as f64 * ball_volume(2, 0.25).unwrap();
        assert!(packed <= enlarged.value + 3.0 * enlarged.std_error, "{packed} vs {}", enlarged.value);
    }

    #[test]
    fn packing_is_seed_deterministic() {
        let points = cloud(3, 300, 1.5, 42);
        assert_eq!(greedy_packing(&points, 0.4, 9).unwrap(), greedy_packing(&points, 0.4, 9).unwrap());
    }

    #[test]
    fn packing_count_below_half_radius_cover() {
        let points = cloud(2, 500, 1.5, 43);
        let pack = greedy_packing(&points, 0.6, 1).unwrap();
        let cover = greedy_packing(&points, 0.3, 2).unwrap();
        assert!(cover.covers(&points));
        assert!(pack.len() <= cover.len());
    }

    #[test]
    fn sandwich_has_no_violations() {
        let points = cloud(2, 200, 1.5, 44);
        let pack = greedy_packing(&points, 0.4, 3).unwrap();
        let r = sandwich_check(&pack, &points, 20_000, 5).unwrap();
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn single_ball_extension_volume() {
        let c = KleinPoint::new(vec![0.4, -0.2, 0.1]).unwrap();
        let est = extension_volume(&[c], 0.8, &Budget::with_samples(10_000), 1).unwrap();
        assert!((est.value - ball_volume(3, 0.8).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn separated_balls_add_and_overlapping_balls_agree_with_region_mc() {
        let far = two_point_cloud(2, 6.0).unwrap();
        let est = extension_volume(&far, 1.0, &Budget::with_samples(10_000), 2).unwrap();
        assert!((est.value - 2.0 * ball_volume(2, 1.0).unwrap()).abs() < 1e-9);
        let near = two_point_cloud(2, 1.0).unwrap();
        let kl = extension_volume(&near, 1.0, &Budget::with_samples(200_000), 3).unwrap();
        let union = UnionOfBalls::new(near, 1.0).unwrap();
        let mc = region_volume_mc(&union, 400_000, 4).unwrap();
        assert!(kl.agrees_with(mc.value, mc.std_error, 3.0, 0.0), "{kl:?} vs {mc:?}");
    }

    #[test]
    fn extension_volume_grows_with_epsilon() {
        let points = cloud(2, 30, 1.0, 45);
        let mut last = 0.0;
        for &eps in &[0.2, 0.4, 0.8, 1.6] {
            let v = extension_volume(&points, eps, &Budget::with_samples(50_000), 6).unwrap();
            assert!(v.value > last);
            last = v.value;
        }
    }

    #[test]
    fn support_points_lie_on_the_ball() {
        let c = KleinPoint::new(vec![0.5, -0.3, 0.2]).unwrap();
        let hull = hull_of_extension(&[c.clone()], 0.7, 64, 3).unwrap();
        for v in hull.vertices() {
            assert!((dist_raw(v.coords(), c.coords()) - 0.7).abs() < 1e-9);
        }
        assert!(hull_of_extension(&[c], 0.7, 5, 3).is_err());
    }

    #[test]
    fn inscribed_hull_converges_to_the_ball() {
        let c = KleinPoint::new(vec![0.3, 0.1, 0.0]).unwrap();
        let exact = ball_volume(3, 1.0).unwrap();
        let h = extension_hull_volume(&[c], 1.0, 2048, &Budget::default(), 5).unwrap();
        assert!(h.inscribed < exact);
        // The extrapolated value is much closer than the inscribed one.
        assert!((h.estimate.value - exact).abs() < 0.1 * (exact - h.inscribed), "{h:?} vs {exact}");
        assert!((h.estimate.value - exact).abs() < 3.0 * h.estimate.std_error);
    }

    #[test]
    fn single_ball_ratio_near_one() {
        let r = theorem2_ratio(&[KleinPoint::origin(2)], 1.0, 256, &Budget::with_samples(10_000), 3).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-5, "{}", r.ratio);
        assert!(r.ratio_inscribed < 1.0);
    }

    #[test]
    fn far_balls_keep_their_support_points() {
        // Centers at Klein norm 1 - 8e-8; the ellipsoids are very thin there.
        let pts = two_point_cloud(3, 17.0).unwrap();
        let hull = hull_of_extension(&pts, 1.0, 256, 2).unwrap();
        let far = hull.vertices().iter().filter(|v| v.coords()[0] > 0.0).count();
        assert!(far > 64, "{far}");
        let r = theorem2_ratio(&pts, 1.0, 512, &Budget::with_samples(20_000), 2).unwrap();
        assert!(r.ratio > 1.0, "{r:?}");
    }

    #[test]
    fn euclidean_stadium_ratio() {
        let pts = vec![vec![-5.0, 0.0], vec![5.0, 0.0]];
        let r = euclidean_extension_ratio(&pts, 1.0, 512, 10_000, 1).unwrap();
        let exact = (std::f64::consts::PI + 20.0) / (2.0 * std::f64::consts::PI);
        assert!((r.ratio - exact).abs() < 1e-3 * exact, "{} vs {exact}", r.ratio);
    }

    #[test]
    fn clusters_stay_near_their_center() {
        let pts = random_cluster(3, 20, 2.0, 0.5, 4).unwrap();
        assert_eq!(pts.len(), 20);
        let pack = greedy_packing(&pts, 1.0, 0).unwrap();
        assert_eq!(pack.len(), 1);
    }
}
