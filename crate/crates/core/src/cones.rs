//! Cones hanging from ideal vertices.
//!
//! For a polytope `A` containing the origin and a vertex direction `x` on the
//! sphere at infinity, each unit tangent `θ ⊥ x` cuts a planar section
//! `A ∩ {a x + b θ : b >= 0}`. The boundary edge of that section leaving `x`
//! ends at `z` inside `A` and, extended, at `y` on the sphere. The triangles
//! `conv(x, (x+y)/2, 0)` and `conv(x, (x+z)/2, 0)` swept over all `θ` form the
//! full and truncated vertex cones.
//!
//! Cone volumes are revolution integrals around the axis `[0, x]`: in section
//! coordinates the hyperbolic volume element is `b^{n-2} (1 - a^2 - b^2)^{-(n+1)/2}`
//! times the measure of the `(n-2)`-sphere of directions.
//!
//! The module also carries the facet decomposition maps
//! `T_i(y) = y/2 + (Σα) x_i / 2` and the bounding integral over the region
//! `{0 <= u <= 1, 0 <= v <= L(u)}`.

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HypError, Result};
use crate::hull::Polytope;
use crate::klein::{dot, norm, unit_sphere_area, IdealPoint, KleinPoint};
use crate::quadrature::{cubature, gauss_kronrod, Tolerance};
use crate::rng::{parallel_chunks, SphereSequence};
use crate::volume::{Budget, ConeSampler, FacetCone, Moments, VolumeEstimate, VolumeMethod};

/// Sections whose origin angle reaches this are flagged as too wide.
pub const ANGLE_CAP: f64 = 0.099_668_652_491_162_04; // atan(1/10)

/// Norm at which ideal vertices are represented inside the ball.
pub const IDEAL_TRUNCATION: f64 = 1.0 - 1e-6;

/// Largest value the bounding integral may reach before it is treated as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

/// Tolerance for matching an ideal direction to a polytope vertex.
const VERTEX_MATCH_TOL: f64 = 1e-6;

/// Clipped section vertices closer than this are merged.
const SECTION_DEDUP_TOL: f64 = 1e-11;

/// Which far point spans the section triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    /// Uses `y`, where the boundary edge meets the sphere.
    Full,
    /// Uses `z`, the far end of the boundary edge inside the polytope.
    Truncated,
}

/// Planar triangle `conv(x, far_point, 0)` in the plane spanned by `x` and `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSection {
    pub apex: IdealPoint,
    pub direction: Vec<f64>,
    pub far_point: KleinPoint,
    /// Euclidean angle at the origin between `x` and `far_point`.
    pub origin_angle: f64,
    pub kind: SectionKind,
}

impl ConeSection {
    /// Right-angled section with origin angle `phi`: the far point is the
    /// midpoint of the chord from `x` to the ideal point at angle `2 phi`.
    pub fn from_angle(apex: IdealPoint, direction: Vec<f64>, phi: f64) -> Result<Self> {
        if !(phi > 0.0 && phi < std::f64::consts::FRAC_PI_2) {
            return Err(HypError::InvalidArgument(format!("origin angle {phi} outside (0, π/2)")));
        }
        check_tangent(&apex, &direction)?;
        let (s, c) = phi.sin_cos();
        let far = apex.direction().iter().zip(&direction).map(|(x, t)| c * (c * x + s * t)).collect();
        Ok(ConeSection { apex, direction, far_point: KleinPoint::new(far)?, origin_angle: phi, kind: SectionKind::Full })
    }

    pub fn dim(&self) -> usize {
        self.apex.dim()
    }

    /// Far point in section coordinates `(a, b)`.
    pub fn far_coords(&self) -> (f64, f64) {
        let m = self.far_point.coords();
        (dot(m, self.apex.direction()), dot(m, &self.direction))
    }

    pub fn exceeds_cap(&self) -> bool {
        self.origin_angle >= ANGLE_CAP
    }

    /// True if section point `(a, b)` lies in the closed triangle.
    pub fn contains_planar(&self, a: f64, b: f64) -> bool {
        let (ma, mb) = self.far_coords();
        in_triangle((a, b), (1.0, 0.0), (ma, mb))
    }

    /// `∫ b^{n-2} (1 - a^2 - b^2)^{-(n+1)/2} da db` over the triangle.
    ///
    /// Evaluated in the chart `(u, v) = (1 - a, b)` with the triangle collapsed
    /// onto the ideal apex and the radial parameter squared, which absorbs the
    /// `u^{-1/2}` apex singularity of the planar case.
    pub fn revolution_integral(&self, tol: Tolerance) -> crate::quadrature::QuadResult {
        let n = self.dim();
        let (ma, mb) = self.far_coords();
        let p1 = (1.0 - ma, mb);
        let p2 = (1.0, 0.0);
        let det = (p1.0 * p2.1 - p1.1 * p2.0).abs();
        let expo = (n as f64 + 1.0) / 2.0;
        let f = |st: &[f64]| {
            let (s, t) = (st[0], st[1]);
            let w = s * s;
            let u = w * ((1.0 - t) * p1.0 + t * p2.0);
            let v = w * ((1.0 - t) * p1.1 + t * p2.1);
            let gap = u * (2.0 - u) - v * v;
            if !(gap > 0.0) {
                return 0.0;
            }
            2.0 * s * s * s * det * v.powi(n as i32 - 2) / gap.powf(expo)
        };
        cubature(f, &[0.0, 0.0], &[1.0, 1.0], tol)
    }
}

fn in_triangle(p: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    // Triangle (0, q1, q2); signed areas with a small relative slack.
    let cross = |a: (f64, f64), b: (f64, f64)| a.0 * b.1 - a.1 * b.0;
    let total = cross(q1, q2);
    if total == 0.0 {
        return false;
    }
    let s = total.signum();
    let eps = 1e-12 * total.abs();
    let d1 = s * cross(q1, p);
    let d2 = s * cross(p, q2);
    let d3 = s * cross((q2.0 - q1.0, q2.1 - q1.1), (p.0 - q1.0, p.1 - q1.1));
    d1 >= -eps && d2 >= -eps && d3 >= -eps
}

fn check_tangent(x: &IdealPoint, theta: &[f64]) -> Result<()> {
    if theta.len() != x.dim() {
        return Err(HypError::DimensionMismatch { left: x.dim(), right: theta.len() });
    }
    if (norm(theta) - 1.0).abs() > 1e-9 || dot(theta, x.direction()).abs() > 1e-12 {
        return Err(HypError::InvalidArgument("direction must be a unit vector orthogonal to the apex".into()));
    }
    Ok(())
}

/// Orthonormal basis of the complement of unit vector `x`.
pub fn tangent_basis(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs()).then(i.cmp(&j)));
    let mut basis: Vec<Vec<f64>> = vec![x.to_vec()];
    for &k in &order {
        if basis.len() == n {
            break;
        }
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        // Two passes of Gram-Schmidt for orthogonality to rounding.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&e, b);
                for (ei, bi) in e.iter_mut().zip(b) {
                    *ei -= c * bi;
                }
            }
        }
        let len = norm(&e);
        if len > 0.3 {
            basis.push(e.into_iter().map(|v| v / len).collect());
        }
    }
    basis.remove(0);
    basis
}

/// Unit tangent directions at `x` discretizing the sphere of directions.
///
/// Two opposite directions for `n = 2`, a uniform circle grid for `n = 3` and
/// a fixed low-discrepancy sequence for `n >= 4`. Grids for `n >= 3` are
/// nested: `2k` directions contain the first `k`.
pub fn tangent_directions(x: &IdealPoint, count: usize) -> Vec<Vec<f64>> {
    let basis = tangent_basis(x.direction());
    let n = x.dim();
    let combine = |coef: &[f64]| -> Vec<f64> {
        let mut t = vec![0.0; n];
        for (c, e) in coef.iter().zip(&basis) {
            for (ti, ei) in t.iter_mut().zip(e) {
                *ti += c * ei;
            }
        }
        let len = norm(&t);
        t.into_iter().map(|v| v / len).collect()
    };
    match n {
        2 => vec![basis[0].clone(), basis[0].iter().map(|v| -v).collect()],
        3 => (0..count)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / count as f64;
                combine(&[a.cos(), a.sin()])
            })
            .collect(),
        _ => SphereSequence::new(n - 1, 0).take(count).iter().map(|c| combine(c)).collect(),
    }
}

/// Cone hanging from one vertex of a polytope that contains the origin.
#[derive(Debug, Clone)]
pub struct VertexCone {
    halfspaces: Vec<(Vec<f64>, f64)>,
    apex: IdealPoint,
    /// Norm of the finite vertex representing the apex.
    apex_radius: f64,
    kind: SectionKind,
}

impl VertexCone {
    /// The vertex whose direction matches `x` within 1e-6 is used; the apex
    /// direction is taken from that vertex.
    pub fn new(poly: &Polytope, x: &IdealPoint, kind: SectionKind) -> Result<Self> {
        if x.dim() != poly.dim() {
            return Err(HypError::DimensionMismatch { left: poly.dim(), right: x.dim() });
        }
        let origin = vec![0.0; poly.dim()];
        if !poly.is_strictly_interior(&origin) {
            return Err(HypError::ApexNotInterior);
        }
        let vertex = poly
            .vertices()
            .iter()
            .filter(|v| v.norm() > 0.0)
            .map(|v| {
                let dir: Vec<f64> = v.coords().iter().map(|c| c / v.norm()).collect();
                let gap: Vec<f64> = dir.iter().zip(x.direction()).map(|(a, b)| a - b).collect();
                (norm(&gap), v)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .filter(|(gap, _)| *gap <= VERTEX_MATCH_TOL)
            .map(|(_, v)| v)
            .ok_or_else(|| HypError::InvalidArgument("apex direction does not match a polytope vertex".into()))?;
        Ok(VertexCone {
            halfspaces: poly.halfspaces().iter().map(|h| (h.normal.clone(), h.offset)).collect(),
            apex: IdealPoint::new(vertex.coords().to_vec())?,
            apex_radius: vertex.norm(),
            kind,
        })
    }

    /// Cone at vertex `index` of the polytope.
    pub fn at_vertex(poly: &Polytope, index: usize, kind: SectionKind) -> Result<Self> {
        let v = poly
            .vertices()
            .get(index)
            .ok_or_else(|| HypError::InvalidArgument(format!("vertex {index} out of range")))?;
        VertexCone::new(poly, &IdealPoint::new(v.coords().to_vec())?, kind)
    }

    pub fn apex(&self) -> &IdealPoint {
        &self.apex
    }

    pub fn kind(&self) -> SectionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.apex.dim()
    }

    /// Section polygon of the polytope in coordinates `(a, b)`, `b >= 0`.
    fn section_polygon(&self, theta: &[f64]) -> Vec<(f64, f64)> {
        let x = self.apex.direction();
        let mut poly = vec![(-1.5, 0.0), (1.5, 0.0), (1.5, 1.5), (-1.5, 1.5)];
        for (normal, offset) in &self.halfspaces {
            let (na, nb) = (dot(normal, x), dot(normal, theta));
            let f = |p: &(f64, f64)| na * p.0 + nb * p.1 - offset;
            let mut out = Vec::with_capacity(poly.len() + 1);
            for k in 0..poly.len() {
                let p = poly[k];
                let q = poly[(k + 1) % poly.len()];
                let (fp, fq) = (f(&p), f(&q));
                if fp <= 0.0 {
                    out.push(p);
                }
                if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
                    let t = fp / (fp - fq);
                    out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
                }
            }
            poly = out;
            if poly.is_empty() {
                break;
            }
        }
        let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(poly.len());
        for p in poly {
            if dedup.last().is_none_or(|q| (p.0 - q.0).hypot(p.1 - q.1) > SECTION_DEDUP_TOL) {
                dedup.push(p);
            }
        }
        while dedup.len() > 1 {
            let (p, q) = (dedup[0], dedup[dedup.len() - 1]);
            if (p.0 - q.0).hypot(p.1 - q.1) > SECTION_DEDUP_TOL {
                break;
            }
            dedup.pop();
        }
        dedup
    }

    /// Section-coordinate endpoints `(y, z)` of the boundary edge through the apex.
    fn boundary_edge(&self, theta: &[f64]) -> Result<((f64, f64), (f64, f64))> {
        let poly = self.section_polygon(theta);
        if poly.len() < 3 {
            return Err(HypError::NoSection);
        }
        let r = self.apex_radius;
        let near = |p: &(f64, f64)| (p.0 - r).hypot(p.1);
        let k = (0..poly.len()).min_by(|&i, &j| near(&poly[i]).total_cmp(&near(&poly[j]))).unwrap();
        if near(&poly[k]) > VERTEX_MATCH_TOL {
            return Err(HypError::NoSection);
        }
        // Walk both ways past clipping debris at the apex; keep the side rising into b > 0.
        let walk = |step: isize| {
            let m = poly.len() as isize;
            let mut idx = k as isize;
            for _ in 0..poly.len() {
                idx = (idx + step).rem_euclid(m);
                if near(&poly[idx as usize]) > 1e-8 {
                    return poly[idx as usize];
                }
            }
            poly[k]
        };
        let (fwd, back) = (walk(1), walk(-1));
        let z = if fwd.1 >= back.1 { fwd } else { back };
        if !(z.1 > 1e-12) {
            return Err(HypError::NoSection);
        }
        let d = (z.0 - r, z.1);
        // Larger root of |(r, 0) + t d| = 1.
        let (qa, qb, qc) = (d.0 * d.0 + d.1 * d.1, 2.0 * r * d.0, r * r - 1.0);
        let t = (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
        let y = (r + t * d.0, t * d.1);
        let len = y.0.hypot(y.1);
        Ok(((y.0 / len, y.1 / len), z))
    }

    fn lift(&self, theta: &[f64], p: (f64, f64)) -> Vec<f64> {
        self.apex.direction().iter().zip(theta).map(|(x, t)| p.0 * x + p.1 * t).collect()
    }

    /// Far points `(y, z)` of the boundary edge leaving the apex in direction `theta`.
    pub fn boundary_ray(&self, theta: &[f64]) -> Result<(IdealPoint, KleinPoint)> {
        check_tangent(&self.apex, theta)?;
        let (y, z) = self.boundary_edge(theta)?;
        Ok((IdealPoint::new(self.lift(theta, y))?, KleinPoint::new(self.lift(theta, z))?))
    }

    /// Section triangle in direction `theta`.
    pub fn section(&self, theta: &[f64]) -> Result<ConeSection> {
        check_tangent(&self.apex, theta)?;
        let (y, z) = self.boundary_edge(theta)?;
        let far = match self.kind {
            SectionKind::Full => y,
            SectionKind::Truncated => z,
        };
        let m = ((1.0 + far.0) / 2.0, far.1 / 2.0);
        Ok(ConeSection {
            apex: self.apex.clone(),
            direction: theta.to_vec(),
            far_point: KleinPoint::new(self.lift(theta, m))?,
            origin_angle: m.1.atan2(m.0),
            kind: self.kind,
        })
    }

    pub fn sections(&self, grid_size: usize) -> Result<Vec<ConeSection>> {
        cone_sections_for(self, grid_size)
    }

    /// Membership of a raw Klein point in the swept cone.
    pub fn contains(&self, p: &[f64]) -> bool {
        let x = self.apex.direction();
        let a = dot(p, x);
        let perp: Vec<f64> = p.iter().zip(x).map(|(pi, xi)| pi - a * xi).collect();
        let b = norm(&perp);
        if b < 1e-14 {
            return (0.0..=1.0).contains(&a);
        }
        let theta: Vec<f64> = perp.into_iter().map(|v| v / b).collect();
        match self.section(&theta) {
            Ok(s) => s.contains_planar(a, b),
            Err(_) => false,
        }
    }
}

/// Far points `(y, z)` for apex `x` of `poly` in tangent direction `theta`.
pub fn boundary_ray(poly: &Polytope, x: &IdealPoint, theta: &[f64]) -> Result<(IdealPoint, KleinPoint)> {
    VertexCone::new(poly, x, SectionKind::Full)?.boundary_ray(theta)
}

/// One section per grid direction at apex `x`.
pub fn cone_sections(poly: &Polytope, x: &IdealPoint, grid_size: usize, kind: SectionKind) -> Result<Vec<ConeSection>> {
    cone_sections_for(&VertexCone::new(poly, x, kind)?, grid_size)
}

fn cone_sections_for(cone: &VertexCone, grid_size: usize) -> Result<Vec<ConeSection>> {
    if cone.dim() > 2 && grid_size < 8 {
        return Err(HypError::InvalidArgument(format!("angular grid of {grid_size} directions; need at least 8")));
    }
    tangent_directions(cone.apex(), grid_size).iter().map(|t| cone.section(t)).collect()
}

/// Volume of the cone swept by `sections`: the measure of the `(n-2)`-sphere
/// times the grid mean of the per-section revolution integrals. For `n = 2`
/// this is the sum of the two triangle areas.
pub fn cone_volume(sections: &[ConeSection], n: usize, budget: &Budget) -> Result<VolumeEstimate> {
    if sections.is_empty() {
        return Err(HypError::InvalidArgument("no sections".into()));
    }
    if let Some(s) = sections.iter().find(|s| s.dim() != n) {
        return Err(HypError::DimensionMismatch { left: n, right: s.dim() });
    }
    let apex = &sections[0].apex;
    if sections.iter().any(|s| &s.apex != apex) {
        return Err(HypError::InvalidArgument("sections must share an apex".into()));
    }
    let tol = Tolerance::relative(budget.rel_tol).with_abs(1e-300).with_max_evals(budget.max_evaluations.max(10_000));
    let results: Vec<_> = {
        use rayon::prelude::*;
        sections.par_iter().map(|s| s.revolution_integral(tol)).collect()
    };
    let scale = unit_sphere_area(n - 2) / sections.len() as f64;
    let value = scale * results.iter().map(|r| r.value).sum::<f64>();
    let error = scale * results.iter().map(|r| r.error).sum::<f64>();
    let rel = if value > 0.0 { error / value } else { 0.0 };
    Ok(VolumeEstimate {
        value,
        std_error: 0.0,
        evaluations: results.iter().map(|r| r.evaluations as u64).sum(),
        method: VolumeMethod::Quadrature,
        achieved_rel_error: rel,
        low_confidence: rel > budget.rel_tol,
    })
}

/// `t(u) = u - u^2 - L(u)^2`, evaluated in factored form so it is exactly
/// zero at `u = 0`, `sin^2 φ` and `1`, and nonnegative in between.
pub fn t_function(u: f64, phi: f64) -> f64 {
    let s2 = phi.sin().powi(2);
    if u <= s2 {
        u * (1.0 - u / s2)
    } else {
        (1.0 - u) * (u - s2) / phi.cos().powi(2)
    }
}

/// `t(u)` evaluated literally from `L(u)`, for cross-checking [`t_function`].
pub fn t_function_direct(u: f64, phi: f64) -> f64 {
    let l = boundary_height(u, phi);
    u - u * u - l * l
}

/// `L(u)`: `u cot φ` up to `sin^2 φ`, `(1 - u) tan φ` after.
pub fn boundary_height(u: f64, phi: f64) -> f64 {
    if u <= phi.sin().powi(2) {
        u / phi.tan()
    } else {
        (1.0 - u) * phi.tan()
    }
}

fn check_bound_args(n: usize, phi: f64) -> Result<()> {
    if n < 2 {
        return Err(HypError::UnsupportedDimension { dim: n, min: 2, max: usize::MAX });
    }
    if !(phi > 0.0 && phi < std::f64::consts::FRAC_PI_2) {
        return Err(HypError::InvalidArgument(format!("angle {phi} outside (0, π/2)")));
    }
    Ok(())
}

/// `∫_0^1 ∫_0^{L(u)} v^{n-2} / (1 - (1-u)^2 - v^2)^{(n+1)/2} dv du`.
///
/// The inner integral is rescaled to `[0, 1]`; the outer one is split at
/// `sin^2 φ` with `u = q^2` on the first piece to remove the `u^{(n-3)/2}`
/// behaviour at the apex.
pub fn cone_integral_bound(n: usize, phi: f64) -> Result<f64> {
    check_bound_args(n, phi)?;
    let expo = (n as f64 + 1.0) / 2.0;
    let inner_tol = Tolerance::relative(1e-12).with_abs(1e-300);
    let inner = |u: f64| -> f64 {
        let l = boundary_height(u, phi);
        if !(l > 0.0) || u <= 0.0 {
            return 0.0;
        }
        let c = u * (2.0 - u);
        let r = gauss_kronrod(|tau| tau.powi(n as i32 - 2) / (c - l * l * tau * tau).powf(expo), 0.0, 1.0, inner_tol);
        l.powi(n as i32 - 1) * r.value
    };
    let s = phi.sin();
    let outer_tol = Tolerance::relative(1e-11).with_abs(1e-300);
    let first = gauss_kronrod(|q| 2.0 * q * inner(q * q), 0.0, s, outer_tol);
    let second = gauss_kronrod(inner, s * s, 1.0, outer_tol);
    let value = first.value + second.value;
    if !(value.is_finite() && value < DIVERGENCE_LIMIT) {
        return Err(HypError::SingularIntegral(value));
    }
    Ok(value)
}

/// Closed form of `∫_0^{sin^2 φ} cot^{n-1} φ · u^{(n-3)/2} du`, which is
/// `(2/(n-1)) cos^{n-1} φ`.
pub fn first_summand(n: usize, phi: f64) -> f64 {
    2.0 / (n as f64 - 1.0) * phi.cos().powi(n as i32 - 1)
}

/// Quadrature of the same piece, for checking [`first_summand`].
pub fn first_summand_quadrature(n: usize, phi: f64) -> f64 {
    let cot = 1.0 / phi.tan();
    // u = q^2 turns u^{(n-3)/2} du into 2 q^{n-2} dq.
    let r = gauss_kronrod(|q| 2.0 * q.powi(n as i32 - 2), 0.0, phi.sin(), Tolerance::relative(1e-14).with_abs(1e-300));
    cot.powi(n as i32 - 1) * r.value
}

/// `(1/(n-1)) tan^{n-1} φ ∫_{sin^2 φ}^1 (1-u)^{n-1} u^{-(n+1)/2} du`, the
/// second piece of `(1/(n-1)) ∫ L(u)^{n-1} u^{-(n+1)/2} du`.
pub fn second_summand(n: usize, phi: f64) -> f64 {
    let expo = (n as f64 + 1.0) / 2.0;
    let r = gauss_kronrod(
        |u| (1.0 - u).powi(n as i32 - 1) / u.powf(expo),
        phi.sin().powi(2),
        1.0,
        Tolerance::relative(1e-12).with_abs(1e-300),
    );
    phi.tan().powi(n as i32 - 1) * r.value / (n as f64 - 1.0)
}

/// `(1/(n-1)) ∫_0^1 L(u)^{n-1} u^{-(n+1)/2} du`, the integral with the
/// denominator replaced by `u^{(n+1)/2}`.
pub fn corrected_majorant(n: usize, phi: f64) -> f64 {
    first_summand(n, phi) / (n as f64 - 1.0) + second_summand(n, phi)
}

/// Supremum over `φ > 0` of [`second_summand`] beyond 1, i.e.
/// `max(0, 2/(n-1)^2 - 1)`; the small-angle limit of the second piece is
/// `2/(n-1)^2`, which only exceeds 1 in the plane.
pub fn second_summand_excess(n: usize) -> f64 {
    (2.0 / (n as f64 - 1.0).powi(2) - 1.0).max(0.0)
}

/// `(2/(n-1)) cos^{n-1} φ + 1 + C'_n` with `C'_n` from [`second_summand_excess`].
pub fn explicit_majorant(n: usize, phi: f64) -> f64 {
    first_summand(n, phi) + 1.0 + second_summand_excess(n)
}

/// Point `Σ α_j x_j` of `D = conv(0, x_1..x_n)` by its facet weights; the
/// origin carries the remaining weight `1 - Σ α_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycentricPoint {
    weights: Vec<f64>,
}

impl BarycentricPoint {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(HypError::NonFinite);
        }
        if weights.iter().any(|&w| w < 0.0) || weights.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(HypError::InvalidArgument("weights must be nonnegative with sum at most 1".into()));
        }
        Ok(BarycentricPoint { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, vertices: &[KleinPoint]) -> Vec<f64> {
        combine(vertices, &self.weights)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        BarycentricPoint::new(self.weights.iter().map(|w| lambda * w).collect())
    }
}

fn combine(vertices: &[KleinPoint], weights: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; vertices[0].dim()];
    for (v, w) in vertices.iter().zip(weights) {
        for (yi, vi) in y.iter_mut().zip(v.coords()) {
            *yi += w * vi;
        }
    }
    y
}

fn map_weights(weights: &[f64], i: usize) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut out: Vec<f64> = weights.iter().map(|w| 0.5 * w).collect();
    out[i] += 0.5 * total;
    out
}

fn check_facet(vertices: &[KleinPoint], y: &BarycentricPoint) -> Result<()> {
    let n = vertices.first().map(|v| v.dim()).unwrap_or(0);
    if vertices.len() != n || y.weights.len() != n {
        return Err(HypError::DimensionMismatch { left: n, right: y.weights.len().min(vertices.len()) });
    }
    Ok(())
}

/// `T_i(y) = y/2 + (Σ α_j) x_i / 2`, with `i` counted from zero.
pub fn lemma1_map(vertices: &[KleinPoint], y: &BarycentricPoint, i: usize) -> Result<KleinPoint> {
    check_facet(vertices, y)?;
    if i >= vertices.len() {
        return Err(HypError::InvalidArgument(format!("map index {i} out of range")));
    }
    KleinPoint::new(combine(vertices, &map_weights(&y.weights, i)))
}

/// Index maximizing `|T_i(y)|`, lowest index on ties.
pub fn lemma1_selector(vertices: &[KleinPoint], y: &BarycentricPoint) -> Result<usize> {
    check_facet(vertices, y)?;
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..vertices.len() {
        let r = norm(&combine(vertices, &map_weights(&y.weights, i)));
        if r > best.1 {
            best = (i, r);
        }
    }
    Ok(best.0)
}

/// Matrix of `T_i` acting on facet weights: `I/2 + e_i 1^T / 2`.
pub fn lemma1_weight_matrix(n: usize, i: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n, n) * 0.5;
    for j in 0..n {
        m[(i, j)] += 0.5;
    }
    m
}

/// Determinant of `T_i` as a linear map of `R^n`, computed as
/// `det(X M X^{-1})` with `X` the vertex matrix.
pub fn lemma1_determinant(vertices: &[KleinPoint], i: usize) -> Result<f64> {
    let n = vertices.len();
    if vertices.iter().any(|v| v.dim() != n) || i >= n {
        return Err(HypError::InvalidArgument("need n vertices in dimension n and a valid index".into()));
    }
    let x = DMatrix::from_fn(n, n, |r, c| vertices[c].coords()[r]);
    let inv = x.clone().try_inverse().ok_or(HypError::DegenerateHull { rank: n - 1, dim: n })?;
    Ok((x * lemma1_weight_matrix(n, i) * inv).determinant())
}

/// Outcome of comparing `Vol(D)` with `2^n Σ Vol(D ∩ C̃_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FacetDecompositionReport {
    pub dim: usize,
    pub volume: VolumeEstimate,
    pub part_volumes: Vec<VolumeEstimate>,
    /// `Vol(D) / Σ Vol(D_i)`; infinite if every part is empty.
    pub ratio: f64,
    pub bound: f64,
    /// Paired estimate of `2^n Σ Vol(D_i) - Vol(D)`.
    pub margin: VolumeEstimate,
    /// Margin is above minus three standard errors.
    pub holds: bool,
    pub low_confidence: bool,
}

/// Monte Carlo check of `Vol(D) <= 2^n Σ_i Vol(D ∩ C̃_i)` for
/// `D = conv(0, F)`, with `cones[i]` the truncated cone at `facet[i]`.
///
/// All volumes share one hyperbolic-uniform sample of `D`, so the margin is a
/// paired estimate.
pub fn verify_facet_decomposition(
    facet: &[KleinPoint],
    cones: &[VertexCone],
    samples: usize,
    seed: u64,
) -> Result<FacetDecompositionReport> {
    let n = facet.first().map(|v| v.dim()).ok_or(HypError::NotEnoughPoints { got: 0, need: 2 })?;
    if facet.len() != n || cones.len() != n {
        return Err(HypError::InvalidArgument(format!("need {n} facet vertices and {n} cones")));
    }
    let bound = 2f64.powi(n as i32);
    let Some(cone) = FacetCone::new(facet.iter().map(|v| v.coords().to_vec()).collect()) else {
        let zero = VolumeEstimate::zero(VolumeMethod::MonteCarlo);
        return Ok(FacetDecompositionReport {
            dim: n,
            volume: zero.clone(),
            part_volumes: vec![zero.clone(); n],
            ratio: f64::NAN,
            bound,
            margin: zero,
            holds: true,
            low_confidence: false,
        });
    };
    let sampler = ConeSampler::new(vec![cone]);
    let parts = parallel_chunks(samples, seed, |rng: &mut ChaCha8Rng, count| {
        let mut whole = Moments::default();
        let mut each = vec![Moments::default(); n];
        let mut margin = Moments::default();
        for _ in 0..count {
            let d = sampler.draw(rng);
            let mut inside = 0.0;
            for (m, c) in each.iter_mut().zip(cones) {
                let hit = c.contains(&d.point);
                m.push(if hit { d.weight } else { 0.0 }, hit);
                inside += hit as u8 as f64;
            }
            whole.push(d.weight, true);
            margin.push(bound * inside * d.weight - d.weight, true);
        }
        (whole, each, margin)
    });
    let whole = Moments::merge(parts.iter().map(|p| p.0));
    let margin = Moments::merge(parts.iter().map(|p| p.2));
    let each: Vec<Moments> = (0..n).map(|i| Moments::merge(parts.iter().map(|p| p.1[i]))).collect();
    let part_volumes: Vec<VolumeEstimate> = each.iter().map(|m| m.estimate()).collect();
    let sum: f64 = part_volumes.iter().map(|v| v.value).sum();
    let margin_est = margin.estimate();
    Ok(FacetDecompositionReport {
        dim: n,
        volume: whole.estimate(),
        ratio: if sum > 0.0 { whole.mean() / sum } else { f64::INFINITY },
        bound,
        holds: margin_est.value >= -3.0 * margin_est.std_error,
        margin: margin_est,
        low_confidence: each.iter().any(|m| m.hits == 0),
        part_volumes,
    })
}

/// Cone report for one vertex: per-direction angles, the assembled volume
/// and the majorant averaged over the same directions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeReport {
    pub apex: IdealPoint,
    pub kind: SectionKind,
    pub grid_size: usize,
    pub angles: Vec<f64>,
    pub volume: VolumeEstimate,
    pub majorant: f64,
    pub within_majorant: bool,
    pub angles_over_cap: usize,
}

impl ConeReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

pub fn cone_report(cone: &VertexCone, grid_size: usize, budget: &Budget) -> Result<ConeReport> {
    let sections = cone.sections(grid_size)?;
    let n = cone.dim();
    let volume = cone_volume(&sections, n, budget)?;
    let angles: Vec<f64> = sections.iter().map(|s| s.origin_angle).collect();
    let majorant =
        unit_sphere_area(n - 2) * angles.iter().map(|&phi| corrected_majorant(n, phi)).sum::<f64>() / angles.len() as f64;
    Ok(ConeReport {
        apex: cone.apex().clone(),
        kind: cone.kind(),
        grid_size: sections.len(),
        angles_over_cap: sections.iter().filter(|s| s.exceeds_cap()).count(),
        within_majorant: volume.value <= majorant * (1.0 + 1e-9),
        angles,
        volume,
        majorant,
    })
}

/// Adds ideal points until every full-cone section angle (on a grid of
/// `grid_size` directions per vertex) is below `cap`, or `max_points` is reached.
///
/// Each offending section contributes the ideal point in the direction of its
/// far point, which halves that section's angle. Points are returned at norm
/// [`IDEAL_TRUNCATION`]; `Ok((points, true))` means the cap was met.
pub fn densify_ideal_net(points: &[IdealPoint], cap: f64, grid_size: usize, max_points: usize) -> Result<(Vec<KleinPoint>, bool)> {
    let mut dirs: Vec<Vec<f64>> = points.iter().map(|p| p.direction().to_vec()).collect();
    loop {
        let pts: Vec<KleinPoint> =
            dirs.iter().map(|d| KleinPoint::new(d.iter().map(|x| x * IDEAL_TRUNCATION).collect())).collect::<Result<_>>()?;
        let poly = crate::hull::convex_hull(&pts)?;
        let mut additions: Vec<Vec<f64>> = Vec::new();
        for v in 0..poly.vertices().len() {
            let cone = VertexCone::at_vertex(&poly, v, SectionKind::Full)?;
            for s in cone.sections(grid_size)? {
                if s.origin_angle >= cap {
                    let m = s.far_point.coords();
                    let len = norm(m);
                    let d: Vec<f64> = m.iter().map(|x| x / len).collect();
                    let fresh = dirs.iter().chain(&additions).all(|e| {
                        let gap: Vec<f64> = e.iter().zip(&d).map(|(a, b)| a - b).collect();
                        norm(&gap) > 1e-9
                    });
                    if fresh {
                        additions.push(d);
                    }
                }
            }
        }
        if additions.is_empty() {
            return Ok((pts, true));
        }
        if dirs.len() + additions.len() > max_points {
            return Ok((pts, false));
        }
        dirs.extend(additions);
    }
}
