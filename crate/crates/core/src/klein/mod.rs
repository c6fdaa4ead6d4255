//! Klein-model primitives.
//!
//! A point of hyperbolic n-space is a vector in the open Euclidean unit ball.
//! The volume density is `(1 - r^2)^{-(n+1)/2}`; straight chords are
//! geodesics.

mod cloud;
mod isometry;

pub use cloud::{read_point_cloud, parse_point_cloud, write_point_cloud, CloudModel};
pub use isometry::Isometry;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HypError, Result};
use crate::quadrature::{gauss_kronrod, kronrod15, Tolerance};
use crate::rng::SphereSequence;

/// Points with Euclidean norm at or above `1 - BOUNDARY_TOL` are rejected.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Largest dimension supported by [`ball_volume`].
pub const MAX_BALL_DIM: usize = 8;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// A hyperbolic point in Klein coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct KleinPoint {
    coords: Vec<f64>,
}

impl TryFrom<Vec<f64>> for KleinPoint {
    type Error = HypError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        KleinPoint::new(v)
    }
}

impl From<KleinPoint> for Vec<f64> {
    fn from(p: KleinPoint) -> Self {
        p.coords
    }
}

impl KleinPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(HypError::UnsupportedDimension { dim: coords.len(), min: 2, max: usize::MAX });
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(HypError::NonFinite);
        }
        let r = norm(&coords);
        if r >= 1.0 - BOUNDARY_TOL {
            return Err(HypError::BoundaryProximity { norm: r });
        }
        Ok(KleinPoint { coords })
    }

    pub fn origin(dim: usize) -> Self {
        assert!(dim >= 2, "dimension must be at least 2");
        KleinPoint { coords: vec![0.0; dim] }
    }

    /// Converts a Poincaré-ball point: `p -> 2p / (1 + |p|^2)`.
    pub fn from_poincare(p: &[f64]) -> Result<Self> {
        let s = norm_sq(p);
        if s >= 1.0 {
            return Err(HypError::BoundaryProximity { norm: s.sqrt() });
        }
        KleinPoint::new(p.iter().map(|x| 2.0 * x / (1.0 + s)).collect())
    }

    /// Converts a hyperboloid point `(x0, x1..xn)` with `x0 > 0`.
    pub fn from_hyperboloid(h: &[f64]) -> Result<Self> {
        if h.len() < 3 {
            return Err(HypError::UnsupportedDimension { dim: h.len().saturating_sub(1), min: 2, max: usize::MAX });
        }
        if !(h[0] > 0.0) {
            return Err(HypError::InvalidArgument("hyperboloid time coordinate must be positive".into()));
        }
        KleinPoint::new(h[1..].iter().map(|x| x / h[0]).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    /// `1 - |p|^2`.
    pub fn conformal_gap(&self) -> f64 {
        1.0 - norm_sq(&self.coords)
    }

    /// Unit-normalized lift `(1, p) / sqrt(1 - |p|^2)` to the hyperboloid.
    pub fn lift(&self) -> Vec<f64> {
        let g = 1.0 / self.conformal_gap().sqrt();
        std::iter::once(g).chain(self.coords.iter().map(|x| g * x)).collect()
    }
}

/// A point on the sphere at infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealPoint {
    direction: Vec<f64>,
}

impl IdealPoint {
    /// Normalizes `direction` onto the unit sphere.
    pub fn new(direction: Vec<f64>) -> Result<Self> {
        if direction.len() < 2 {
            return Err(HypError::UnsupportedDimension { dim: direction.len(), min: 2, max: usize::MAX });
        }
        if direction.iter().any(|x| !x.is_finite()) {
            return Err(HypError::NonFinite);
        }
        let r = norm(&direction);
        if r < 1e-300 {
            return Err(HypError::ZeroVector);
        }
        Ok(IdealPoint { direction: direction.into_iter().map(|x| x / r).collect() })
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// Finite representative at Euclidean norm `radius` along the direction.
    pub fn truncate(&self, radius: f64) -> Result<KleinPoint> {
        KleinPoint::new(self.direction.iter().map(|x| radius * x).collect())
    }
}

/// Klein-model volume density `(1 - |p|^2)^{-(n+1)/2}`.
pub fn density(p: &KleinPoint) -> f64 {
    density_raw(p.coords())
}

/// Density at raw coordinates. Callers guarantee `|x| < 1`.
#[inline]
pub fn density_raw(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    (1.0 - norm_sq(x)).powf(-0.5 * (n + 1.0))
}

/// Hyperbolic distance.
pub fn dist(p: &KleinPoint, q: &KleinPoint) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(HypError::DimensionMismatch { left: p.dim(), right: q.dim() });
    }
    Ok(dist_raw(p.coords(), q.coords()))
}

/// Distance from `acosh((1 - <p,q>) / sqrt((1-|p|^2)(1-|q|^2)))`, rearranged
/// so that nearby points do not lose precision:
/// `cosh d - 1 = (|w|^2 - |p ^ w|^2) / ((a + b) b)` with `w = q - p`.
pub fn dist_raw(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len();
    let w: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    let w2 = norm_sq(&w);
    if w2 == 0.0 {
        return 0.0;
    }
    let mut wedge = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let t = p[i] * w[j] - p[j] * w[i];
            wedge += t * t;
        }
    }
    let a = 1.0 - dot(p, q);
    let b = ((1.0 - norm_sq(p)) * (1.0 - norm_sq(q))).sqrt();
    let x = ((w2 - wedge) / ((a + b) * b)).max(0.0);
    (x + (x * (x + 2.0)).sqrt()).ln_1p()
}

/// Surface area of the unit k-sphere `S^k` in `R^{k+1}`.
pub fn unit_sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => std::f64::consts::TAU,
        _ => std::f64::consts::TAU / (k as f64 - 1.0) * unit_sphere_area(k - 2),
    }
}

/// Euclidean volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    unit_sphere_area(n - 1) / n as f64
}

/// `∫_0^rho sinh^{n-1}(t) dt`, the hyperbolic radial mass per unit solid angle.
pub fn radial_mass(n: usize, rho: f64) -> f64 {
    let k = n - 1;
    if rho <= 0.0 {
        return 0.0;
    }
    if rho <= 1.0 {
        return kronrod15(|t| t.sinh().powi(k as i32), 0.0, rho);
    }
    // I_k = sinh^{k-1} cosh / k - (k-1)/k I_{k-2}
    let (s, c) = (rho.sinh(), rho.cosh());
    let mut prev2 = rho; // I_0
    let mut prev1 = c - 1.0; // I_1
    if k == 0 {
        return prev2;
    }
    for j in 2..=k {
        let jf = j as f64;
        let cur = s.powi(j as i32 - 1) * c / jf - (jf - 1.0) / jf * prev2;
        prev2 = prev1;
        prev1 = cur;
    }
    prev1
}

/// Samples a hyperbolic radius in `[0, rho_max]` with density proportional to
/// `sinh^{n-1}`, from a uniform variate `u`.
pub fn sample_radius(n: usize, rho_max: f64, u: f64) -> f64 {
    let target = u * radial_mass(n, rho_max);
    let (mut lo, mut hi) = (0.0, rho_max);
    let mut rho = if n == 1 { u * rho_max } else { rho_max * u.powf(1.0 / n as f64) };
    for _ in 0..200 {
        let f = radial_mass(n, rho) - target;
        if f.abs() <= 1e-15 * target {
            return rho;
        }
        if f > 0.0 {
            hi = rho;
        } else {
            lo = rho;
        }
        if (hi - lo) <= 1e-15 * rho_max {
            return rho;
        }
        let d = rho.sinh().powi(n as i32 - 1);
        let next = if d > 0.0 { rho - f / d } else { f64::NAN };
        rho = if next.is_finite() && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    rho
}

/// Hyperbolic-uniform point in `B_H(0, rho_max)`, returned as raw Klein
/// coordinates.
pub fn uniform_hyperbolic_ball<R: Rng + ?Sized>(rng: &mut R, n: usize, rho_max: f64) -> Vec<f64> {
    let dir = crate::rng::unit_vector(rng, n);
    let rho = sample_radius(n, rho_max, rng.random::<f64>());
    let t = rho.tanh();
    dir.into_iter().map(|x| t * x).collect()
}

/// Volume of a hyperbolic ball of radius `r` in dimension `n`.
pub fn ball_volume(n: usize, r: f64) -> Result<f64> {
    if !(2..=MAX_BALL_DIM).contains(&n) {
        return Err(HypError::UnsupportedDimension { dim: n, min: 2, max: MAX_BALL_DIM });
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(HypError::NonPositiveRadius(r));
    }
    let res = gauss_kronrod(|t| t.sinh().powi(n as i32 - 1), 0.0, r, Tolerance::relative(1e-10).with_abs(1e-300));
    Ok(unit_sphere_area(n - 1) * res.value)
}

/// `count` points on the hyperbolic sphere of radius `r` about `center`.
/// Directions come from a seeded low-discrepancy sequence, so a smaller count
/// yields a prefix of a larger one.
pub fn ball_boundary_points(center: &KleinPoint, r: f64, count: usize, seed: u64) -> Result<Vec<KleinPoint>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(HypError::NonPositiveRadius(r));
    }
    if count == 0 {
        return Err(HypError::InvalidArgument("count must be at least 1".into()));
    }
    let n = center.dim();
    let t = r.tanh();
    let seq = SphereSequence::new(n, seed);
    let to_center = Isometry::translate_to_origin(center).inverse();
    (0..count)
        .map(|k| {
            let p: Vec<f64> = seq.point(k).into_iter().map(|x| t * x).collect();
            KleinPoint::new(to_center.apply_raw(&p))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn random_point<R: Rng>(rng: &mut R, n: usize, max_norm: f64) -> KleinPoint {
        let u = crate::rng::uniform_in_ball(rng, n);
        KleinPoint::new(u.into_iter().map(|x| x * max_norm).collect()).unwrap()
    }

    /// ds_K along the straight segment, integrated numerically.
    fn segment_length(p: &[f64], q: &[f64]) -> f64 {
        let w: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
        let speed = |t: f64| {
            let x: Vec<f64> = p.iter().zip(&w).map(|(a, b)| a + t * b).collect();
            let g = 1.0 - norm_sq(&x);
            let xw = dot(&x, &w);
            (norm_sq(&w) / g + xw * xw / (g * g)).sqrt()
        };
        gauss_kronrod(speed, 0.0, 1.0, Tolerance::relative(1e-12)).value
    }

    #[test]
    fn density_values() {
        assert_eq!(density(&KleinPoint::origin(2)), 1.0);
        assert_eq!(density(&KleinPoint::origin(3)), 1.0);
        let p = KleinPoint::new(vec![0.75f64.sqrt(), 0.0]).unwrap();
        assert!((density(&p) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn density_rejects_boundary() {
        assert!(matches!(KleinPoint::new(vec![1.0, 0.0]), Err(HypError::BoundaryProximity { .. })));
        assert!(KleinPoint::new(vec![1.0 - 1e-6, 0.0]).is_ok());
        assert!(KleinPoint::new(vec![0.1]).is_err());
    }

    #[test]
    fn dist_examples() {
        let o = KleinPoint::origin(2);
        assert_eq!(dist(&o, &o).unwrap(), 0.0);
        let p = KleinPoint::new(vec![0.5, 0.0]).unwrap();
        assert!((dist(&o, &p).unwrap() - 0.5f64.atanh()).abs() < 1e-15);
        let q = KleinPoint::new(vec![0.0, 0.5, 0.0]).unwrap();
        assert!(matches!(dist(&o, &q), Err(HypError::DimensionMismatch { .. })));
    }

    #[test]
    fn dist_matches_line_element_quadrature() {
        let mut rng = stream_rng(11, 0);
        for n in [2, 3, 5] {
            for _ in 0..30 {
                let p = random_point(&mut rng, n, 0.95);
                let q = random_point(&mut rng, n, 0.95);
                let d = dist(&p, &q).unwrap();
                let l = segment_length(p.coords(), q.coords());
                assert!((d - l).abs() < 1e-6 * l.max(1.0), "{d} vs {l}");
            }
        }
    }

    #[test]
    fn dist_is_accurate_for_close_points() {
        let p = KleinPoint::new(vec![0.3, 0.2]).unwrap();
        let q = KleinPoint::new(vec![0.3 + 1e-9, 0.2]).unwrap();
        let expected = segment_length(p.coords(), q.coords());
        assert!((dist(&p, &q).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn ball_volume_closed_form_2d() {
        for r in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let v = ball_volume(2, r).unwrap();
            let exact = std::f64::consts::TAU * (r.cosh() - 1.0);
            assert!((v - exact).abs() <= 1e-9 * exact);
        }
        assert!((ball_volume(2, 1.0).unwrap() - 3.41228).abs() < 1e-4);
    }

    #[test]
    fn ball_volume_small_radius_is_euclidean() {
        for n in 2..=MAX_BALL_DIM {
            let r = 1e-3;
            let ratio = ball_volume(n, r).unwrap() / (unit_ball_volume(n) * r.powi(n as i32));
            assert!((ratio - 1.0).abs() < 0.01);
        }
        assert!(ball_volume(9, 1.0).is_err());
        assert!(ball_volume(2, 0.0).is_err());
    }

    #[test]
    fn radial_mass_agrees_with_adaptive_quadrature() {
        for n in 2..=8 {
            for rho in [1e-3, 0.3, 0.99, 1.0, 1.01, 3.0, 8.0] {
                let q = gauss_kronrod(|t: f64| t.sinh().powi(n as i32 - 1), 0.0, rho, Tolerance::relative(1e-13).with_abs(1e-300)).value;
                let m = radial_mass(n, rho);
                assert!((m - q).abs() <= 1e-11 * q, "n={n} rho={rho}: {m} vs {q}");
            }
        }
    }

    #[test]
    fn sample_radius_inverts_cdf() {
        for n in [2, 3, 6] {
            for u in [0.0, 0.1, 0.5, 0.9, 1.0] {
                let rho = sample_radius(n, 4.0, u);
                let frac = radial_mass(n, rho) / radial_mass(n, 4.0);
                assert!((frac - u).abs() < 1e-10 || (u == 0.0 && rho < 1e-7), "n={n} u={u} frac={frac}");
            }
        }
    }

    #[test]
    fn boundary_points_lie_on_sphere() {
        let o = KleinPoint::origin(3);
        let pts = ball_boundary_points(&o, 1.5, 20, 7).unwrap();
        for p in &pts {
            assert!((p.norm() - 1.5f64.tanh()).abs() < 1e-14);
        }
        let c = KleinPoint::new(vec![0.6, -0.3, 0.5]).unwrap();
        let pts = ball_boundary_points(&c, 0.8, 50, 7).unwrap();
        for p in &pts {
            assert!((dist(&c, p).unwrap() - 0.8).abs() < 1e-9);
        }
        assert_eq!(pts, ball_boundary_points(&c, 0.8, 50, 7).unwrap());
        assert_eq!(pts[..10], ball_boundary_points(&c, 0.8, 10, 7).unwrap()[..]);
        assert!(ball_boundary_points(&c, -1.0, 5, 7).is_err());
    }

    #[test]
    fn poincare_and_hyperboloid_conversions() {
        let k = KleinPoint::from_poincare(&[0.5, 0.0]).unwrap();
        assert!((k.coords()[0] - 0.8).abs() < 1e-15);
        let p = KleinPoint::new(vec![0.3, -0.4]).unwrap();
        let back = KleinPoint::from_hyperboloid(&p.lift()).unwrap();
        assert!(norm(&back.coords().iter().zip(p.coords()).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-15);
    }

    #[test]
    fn ideal_point_normalizes() {
        let x = IdealPoint::new(vec![3.0, 4.0]).unwrap();
        assert!((norm(x.direction()) - 1.0).abs() < 1e-12);
        assert!(IdealPoint::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn unit_sphere_areas() {
        assert!((unit_sphere_area(2) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
