//! Hyperbolic volumes.
//!
//! Deterministic route: move an interior anchor to the origin with an
//! isometry, split the body into cones from the origin over its facets, and
//! integrate in polar form. Along each ray the radial factor
//! `(1 - r^2)^{-(n+1)/2} r^{n-1} dr` becomes `sinh^{n-1}(w) dw` with
//! `w = atanh(r)`, which integrates in closed form, so only the bounded
//! angular integral over each flat facet is left:
//!
//! ```text
//! Vol(conv(0, F)) = ∫_F  h · M(atanh|y|) / |y|^n  dA(y),   M(w) = ∫_0^w sinh^{n-1}
//! ```
//!
//! where `h` is the distance from the origin to the facet plane. The facet
//! integral is adaptive cubature for `n <= 4`; larger `n` fall back to Monte
//! Carlo over the same representation.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HypError, Result};
use crate::hull::{facet_normal, Polytope, Simplex};
use crate::klein::{
    ball_volume, density_raw, dist_raw, dot, norm, radial_mass, uniform_hyperbolic_ball, unit_ball_volume, IdealPoint,
    Isometry, KleinPoint,
};
use crate::quadrature::{simplex_cubature, simplex_measure, Tolerance};
use crate::rng::{dirichlet_weights, parallel_chunks, uniform_in_ball};

/// Largest dimension integrated by deterministic cubature.
pub const MAX_QUADRATURE_DIM: usize = 4;

/// Bounding radius above which region sampling switches to hyperbolic-radial draws.
pub const RADIAL_SAMPLING_THRESHOLD: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    #[default]
    Quadrature,
    MonteCarlo,
    Exact2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    /// Target relative error for cubature.
    pub rel_tol: f64,
    /// Cap on integrand evaluations for cubature.
    pub max_evaluations: usize,
    /// Monte Carlo sample count.
    pub samples: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { rel_tol: 1e-4, max_evaluations: 50_000_000, samples: 1_000_000 }
    }
}

impl Budget {
    pub fn with_samples(samples: usize) -> Self {
        Budget { samples, ..Budget::default() }
    }

    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Budget { rel_tol, ..Budget::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub evaluations: u64,
    pub method: VolumeMethod,
    /// Estimated relative error of a cubature result.
    #[serde(skip)]
    pub achieved_rel_error: f64,
    /// Set when cubature missed its tolerance or Monte Carlo saw no hits.
    #[serde(skip)]
    pub low_confidence: bool,
}

impl VolumeEstimate {
    pub fn zero(method: VolumeMethod) -> Self {
        VolumeEstimate { value: 0.0, std_error: 0.0, evaluations: 0, method, achieved_rel_error: 0.0, low_confidence: false }
    }

    pub fn exact(value: f64) -> Self {
        VolumeEstimate { value, std_error: 0.0, evaluations: 0, method: VolumeMethod::Exact2d, achieved_rel_error: 0.0, low_confidence: false }
    }

    /// Absolute uncertainty: the standard error for Monte Carlo, the error
    /// estimate for cubature.
    pub fn uncertainty(&self) -> f64 {
        self.std_error.max(self.achieved_rel_error * self.value.abs())
    }

    /// True if `|self - other| <= sigmas * combined standard error + rel * max(|self|, |other|)`.
    pub fn agrees_with(&self, other: f64, other_std: f64, sigmas: f64, rel: f64) -> bool {
        let se = (self.std_error.powi(2) + other_std.powi(2)).sqrt();
        (self.value - other).abs() <= sigmas * se + rel * self.value.abs().max(other.abs())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("estimate serializes")
    }
}

/// A set in the Klein ball described by a membership test.
pub trait Region: Sync {
    fn dim(&self) -> usize;
    /// Membership for raw Klein coordinates (`|p| < 1`).
    fn contains(&self, p: &[f64]) -> bool;
    /// Euclidean radius of a centered ball containing the region.
    fn bounding_radius(&self) -> f64;
}

/// Region from a closure.
pub struct FnRegion<F> {
    dim: usize,
    bounding_radius: f64,
    membership: F,
}

impl<F: Fn(&[f64]) -> bool + Sync> FnRegion<F> {
    pub fn new(dim: usize, bounding_radius: f64, membership: F) -> Self {
        FnRegion { dim, bounding_radius, membership }
    }
}

impl<F: Fn(&[f64]) -> bool + Sync> Region for FnRegion<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn contains(&self, p: &[f64]) -> bool {
        (self.membership)(p)
    }
    fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }
}

impl Region for Polytope {
    fn dim(&self) -> usize {
        Polytope::dim(self)
    }
    fn contains(&self, p: &[f64]) -> bool {
        self.max_slack(p) <= crate::hull::MEMBERSHIP_TOL
    }
    fn bounding_radius(&self) -> f64 {
        self.vertices().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Closed hyperbolic ball as a region.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicBall {
    pub center: KleinPoint,
    pub radius: f64,
}

impl Region for HyperbolicBall {
    fn dim(&self) -> usize {
        self.center.dim()
    }
    fn contains(&self, p: &[f64]) -> bool {
        dist_raw(self.center.coords(), p) <= self.radius
    }
    fn bounding_radius(&self) -> f64 {
        (self.center.norm().atanh() + self.radius).tanh()
    }
}

/// Cone from the origin over one flat facet (n points in `R^n`).
#[derive(Debug, Clone)]
pub(crate) struct FacetCone {
    verts: Vec<Vec<f64>>,
    height: f64,
    area: f64,
}

impl FacetCone {
    /// `None` when the facet plane passes through the origin (zero volume).
    pub(crate) fn new(mut verts: Vec<Vec<f64>>) -> Option<Self> {
        // Collapse the cubature map at the vertex nearest the boundary.
        let far = (0..verts.len()).max_by(|&a, &b| norm(&verts[a]).total_cmp(&norm(&verts[b]))).unwrap();
        verts.swap(0, far);
        let raw: Vec<&[f64]> = verts.iter().map(|v| v.as_slice()).collect();
        let (normal, scale) = facet_normal(&raw);
        let len = norm(&normal);
        if !(len > 1e-14 * scale) {
            return None;
        }
        let height = dot(&normal, &verts[0]).abs() / len;
        let area = simplex_measure(&verts);
        if height < 1e-15 || area == 0.0 {
            return None;
        }
        Some(FacetCone { verts, height, area })
    }

    fn dim(&self) -> usize {
        self.verts[0].len()
    }

    /// Angular density at facet point `y`: `h M(atanh|y|) / |y|^n`.
    #[inline]
    fn integrand(&self, y: &[f64]) -> f64 {
        let n = self.dim();
        let r = norm(y);
        self.height * radial_mass(n, r.atanh()) / r.powi(n as i32)
    }

    fn quadrature(&self, tol: Tolerance) -> crate::quadrature::QuadResult {
        simplex_cubature(|y| self.integrand(y), &self.verts, tol)
    }

    /// Uniform point on the facet.
    fn sample_facet<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let w = dirichlet_weights(rng, self.verts.len());
        let mut y = vec![0.0; self.dim()];
        for (v, wi) in self.verts.iter().zip(&w) {
            for (yi, x) in y.iter_mut().zip(v) {
                *yi += wi * x;
            }
        }
        y
    }

    /// Cheap centroid-rule estimate used to allocate samples.
    fn pilot(&self) -> f64 {
        let c = crate::hull::centroid(self.verts.iter().map(|v| v.as_slice()));
        self.area * self.integrand(&c)
    }
}

/// Hyperbolic-uniform sample inside a family of facet cones.
pub(crate) struct ConeSampler {
    cones: Vec<FacetCone>,
    cdf: Vec<f64>,
    probs: Vec<f64>,
}

/// One draw: point and importance weight (volume contribution).
pub(crate) struct ConeDraw {
    pub point: Vec<f64>,
    pub weight: f64,
}

impl ConeSampler {
    pub(crate) fn new(cones: Vec<FacetCone>) -> Self {
        let pilots: Vec<f64> = cones.iter().map(|c| c.pilot().max(1e-300)).collect();
        let total: f64 = pilots.iter().sum();
        // Mix with uniform so no cone is starved by a poor pilot.
        let k = cones.len() as f64;
        let probs: Vec<f64> = pilots.iter().map(|p| 0.9 * p / total + 0.1 / k).collect();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        ConeSampler { cones, cdf, probs }
    }

    /// Draws a facet point and the unbiased estimate of the total cone volume;
    /// the radial position is not sampled.
    fn draw_ray<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, f64) {
        let u: f64 = rng.random::<f64>() * self.cdf.last().copied().unwrap_or(1.0);
        let k = self.cdf.partition_point(|&c| c < u).min(self.cones.len() - 1);
        let cone = &self.cones[k];
        let y = cone.sample_facet(rng);
        let w = cone.area * cone.integrand(&y) / self.probs[k];
        (y, w)
    }

    /// Full draw including a hyperbolic-uniform radial position along the ray.
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ConeDraw {
        let (y, w) = self.draw_ray(rng);
        let n = y.len();
        let r = norm(&y);
        let rho = crate::klein::sample_radius(n, r.atanh(), rng.random::<f64>());
        let t = rho.tanh() / r;
        ConeDraw { point: y.into_iter().map(|x| x * t).collect(), weight: w }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    pub sum: f64,
    pub sum_sq: f64,
    pub count: u64,
    pub hits: u64,
}

impl Moments {
    pub(crate) fn push(&mut self, w: f64, hit: bool) {
        self.sum += w;
        self.sum_sq += w * w;
        self.count += 1;
        self.hits += hit as u64;
    }

    pub(crate) fn merge(parts: impl IntoIterator<Item = Moments>) -> Moments {
        parts.into_iter().fold(Moments::default(), |a, b| Moments {
            sum: a.sum + b.sum,
            sum_sq: a.sum_sq + b.sum_sq,
            count: a.count + b.count,
            hits: a.hits + b.hits,
        })
    }

    pub(crate) fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    pub(crate) fn std_error(&self) -> f64 {
        let n = self.count as f64;
        if self.count < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let var = ((self.sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }

    pub(crate) fn estimate(&self) -> VolumeEstimate {
        VolumeEstimate {
            value: self.mean(),
            std_error: self.std_error(),
            evaluations: self.count,
            method: VolumeMethod::MonteCarlo,
            achieved_rel_error: 0.0,
            low_confidence: false,
        }
    }
}

fn cones_monte_carlo(cones: Vec<FacetCone>, samples: usize, seed: u64) -> VolumeEstimate {
    if cones.is_empty() || samples == 0 {
        return VolumeEstimate::zero(VolumeMethod::MonteCarlo);
    }
    let sampler = ConeSampler::new(cones);
    let parts = parallel_chunks(samples, seed, |rng: &mut ChaCha8Rng, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            let (_, w) = sampler.draw_ray(rng);
            m.push(w, true);
        }
        m
    });
    Moments::merge(parts).estimate()
}

fn cones_quadrature(cones: Vec<FacetCone>, budget: &Budget) -> VolumeEstimate {
    if cones.is_empty() {
        return VolumeEstimate::zero(VolumeMethod::Quadrature);
    }
    let per_facet = (budget.max_evaluations / cones.len()).max(10_000);
    // Facets are each held to a tenth of the target so the sum meets it.
    let tol = Tolerance::relative(0.1 * budget.rel_tol).with_abs(1e-300).with_max_evals(per_facet);
    let results: Vec<_> = {
        use rayon::prelude::*;
        cones.par_iter().map(|c| c.quadrature(tol)).collect()
    };
    let value: f64 = results.iter().map(|r| r.value).sum();
    let error: f64 = results.iter().map(|r| r.error).sum();
    let evaluations: u64 = results.iter().map(|r| r.evaluations as u64).sum();
    let rel = if value > 0.0 { error / value } else { 0.0 };
    VolumeEstimate {
        value,
        std_error: 0.0,
        evaluations,
        method: VolumeMethod::Quadrature,
        achieved_rel_error: rel,
        low_confidence: rel > budget.rel_tol || results.iter().any(|r| !r.converged && r.error > budget.rel_tol * value),
    }
}

fn integrate_cones(cones: Vec<FacetCone>, n: usize, method: VolumeMethod, budget: &Budget, seed: u64) -> VolumeEstimate {
    match method {
        VolumeMethod::Quadrature if n <= MAX_QUADRATURE_DIM => cones_quadrature(cones, budget),
        _ => cones_monte_carlo(cones, budget.samples, seed),
    }
}

/// Facets of `conv(0, ...)` decomposition after mapping `anchor` to the origin.
fn centered_cones(vertices: &[&[f64]], facets: &[Vec<usize>], anchor: &[f64]) -> Result<Vec<FacetCone>> {
    let g = Isometry::translate_to_origin(&KleinPoint::new(anchor.to_vec())?);
    let moved: Vec<Vec<f64>> = vertices.iter().map(|v| g.apply_raw(v)).collect();
    Ok(facets
        .iter()
        .filter_map(|f| FacetCone::new(f.iter().map(|&i| moved[i].clone()).collect()))
        .collect())
}

/// Hyperbolic volume of a full-dimensional simplex.
///
/// `Exact2d` is only available for triangles; `Quadrature` in dimension five
/// and above is served by Monte Carlo with `budget.samples` draws.
pub fn simplex_volume(s: &Simplex, method: VolumeMethod, budget: &Budget, seed: u64) -> Result<VolumeEstimate> {
    let n = s.dim();
    if s.vertices().len() != n + 1 {
        return Err(HypError::InvalidArgument(format!("simplex in dimension {n} needs {} vertices", n + 1)));
    }
    if method == VolumeMethod::Exact2d {
        if n != 2 {
            return Err(HypError::InvalidArgument("exact_2d needs n = 2".into()));
        }
        let v = s.vertices();
        let area = triangle_area_2d(&v[0].clone().into(), &v[1].clone().into(), &v[2].clone().into())?;
        return Ok(VolumeEstimate::exact(area));
    }
    if !s.is_full_dimensional() {
        return Ok(VolumeEstimate::zero(method));
    }
    let raw: Vec<&[f64]> = s.vertices().iter().map(|v| v.coords()).collect();
    let facets: Vec<Vec<usize>> = (0..=n).map(|skip| (0..=n).filter(|&i| i != skip).collect()).collect();
    let cones = centered_cones(&raw, &facets, &s.centroid())?;
    Ok(integrate_cones(cones, n, method, budget, seed))
}

/// Interior point used as the cone apex for a polytope.
pub fn polytope_anchor(poly: &Polytope) -> Vec<f64> {
    let origin = vec![0.0; poly.dim()];
    if poly.max_slack(&origin) < -1e-6 {
        origin
    } else {
        poly.vertex_centroid()
    }
}

/// Hyperbolic volume of a polytope: the sum over its apex triangulation.
pub fn polytope_volume(poly: &Polytope, method: VolumeMethod, budget: &Budget, seed: u64) -> Result<VolumeEstimate> {
    let n = poly.dim();
    let anchor = polytope_anchor(poly);
    if !poly.is_strictly_interior(&anchor) {
        return Ok(VolumeEstimate::zero(method));
    }
    if method == VolumeMethod::Exact2d {
        if n != 2 {
            return Err(HypError::InvalidArgument("exact_2d needs n = 2".into()));
        }
        let apex: TriangleVertex = KleinPoint::new(anchor)?.into();
        let mut total = 0.0;
        for f in poly.facets() {
            let a: TriangleVertex = poly.vertices()[f[0]].clone().into();
            let b: TriangleVertex = poly.vertices()[f[1]].clone().into();
            total += triangle_area_2d(&apex, &a, &b)?;
        }
        return Ok(VolumeEstimate::exact(total));
    }
    let raw: Vec<&[f64]> = poly.vertices().iter().map(|v| v.coords()).collect();
    let cones = centered_cones(&raw, poly.facets(), &anchor)?;
    Ok(integrate_cones(cones, n, method, budget, seed))
}

/// Volume of the hull of `points`; degenerate hulls give zero.
pub fn hull_volume(points: &[KleinPoint], method: VolumeMethod, budget: &Budget, seed: u64) -> Result<VolumeEstimate> {
    match crate::hull::convex_hull(points) {
        Ok(poly) => polytope_volume(&poly, method, budget, seed),
        Err(HypError::DegenerateHull { .. }) => Ok(VolumeEstimate::zero(method)),
        Err(e) => Err(e),
    }
}

/// Monte Carlo volume of a membership region.
///
/// Points are Euclidean-uniform in the bounding ball and weighted by the
/// density; for bounding radii above [`RADIAL_SAMPLING_THRESHOLD`] they are
/// drawn hyperbolic-uniformly instead. With no hits the value is zero and the
/// standard error is that of the Beta(1, N+1) hit-rate posterior.
pub fn region_volume_mc(region: &dyn Region, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    let n = region.dim();
    let radius = region.bounding_radius();
    if !(radius < 1.0) {
        return Err(HypError::InvalidArgument(format!("bounding radius {radius} must be below 1")));
    }
    if samples == 0 {
        return Err(HypError::InvalidArgument("samples must be positive".into()));
    }
    let radius = radius.max(1e-12);
    let radial = radius > RADIAL_SAMPLING_THRESHOLD;
    let rho_max = radius.atanh();
    let box_volume = if radial { ball_volume(n, rho_max)? } else { unit_ball_volume(n) * radius.powi(n as i32) };
    let parts = parallel_chunks(samples, seed, |rng: &mut ChaCha8Rng, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            if radial {
                let p = uniform_hyperbolic_ball(rng, n, rho_max);
                let hit = region.contains(&p);
                m.push(if hit { box_volume } else { 0.0 }, hit);
            } else {
                let p: Vec<f64> = uniform_in_ball(rng, n).into_iter().map(|x| x * radius).collect();
                let hit = region.contains(&p);
                m.push(if hit { box_volume * density_raw(&p) } else { 0.0 }, hit);
            }
        }
        m
    });
    let m = Moments::merge(parts);
    let mut est = m.estimate();
    if m.hits == 0 {
        let nn = m.count as f64;
        let hyperbolic_box = ball_volume(n, rho_max)?;
        est.value = 0.0;
        est.std_error = hyperbolic_box * ((nn + 1.0) / ((nn + 2.0).powi(2) * (nn + 3.0))).sqrt();
        est.low_confidence = true;
    }
    Ok(est)
}

/// Vertex of a hyperbolic triangle: finite or on the circle at infinity.
#[derive(Debug, Clone, PartialEq)]
pub enum TriangleVertex {
    Finite(KleinPoint),
    Ideal(IdealPoint),
}

impl From<KleinPoint> for TriangleVertex {
    fn from(p: KleinPoint) -> Self {
        TriangleVertex::Finite(p)
    }
}

impl From<IdealPoint> for TriangleVertex {
    fn from(p: IdealPoint) -> Self {
        TriangleVertex::Ideal(p)
    }
}

impl TriangleVertex {
    fn coords(&self) -> &[f64] {
        match self {
            TriangleVertex::Finite(p) => p.coords(),
            TriangleVertex::Ideal(x) => x.direction(),
        }
    }
}

/// Interior angle at a finite vertex `p`, measured with the Klein metric
/// tensor `g = I/(1-r^2) + p p^T/(1-r^2)^2`.
fn klein_angle(p: &[f64], q1: &[f64], q2: &[f64]) -> f64 {
    let u = [q1[0] - p[0], q1[1] - p[1]];
    let w = [q2[0] - p[0], q2[1] - p[1]];
    let gap = 1.0 - dot(p, p);
    let pu = dot(p, &u);
    let pw = dot(p, &w);
    let g_uw = dot(&u, &w) / gap + pu * pw / (gap * gap);
    let cross = u[0] * w[1] - u[1] * w[0];
    let sqrt_det = gap.powf(-1.5);
    (sqrt_det * cross.abs()).atan2(g_uw)
}

/// Exact area of a hyperbolic triangle by angle defect, `π - α - β - γ`.
/// Ideal vertices contribute a zero angle; collinear vertices give zero.
pub fn triangle_area_2d(a: &TriangleVertex, b: &TriangleVertex, c: &TriangleVertex) -> Result<f64> {
    let pts = [a, b, c];
    for p in pts {
        if p.coords().len() != 2 {
            return Err(HypError::UnsupportedDimension { dim: p.coords().len(), min: 2, max: 2 });
        }
    }
    let (pa, pb, pc) = (a.coords(), b.coords(), c.coords());
    let u = [pb[0] - pa[0], pb[1] - pa[1]];
    let w = [pc[0] - pa[0], pc[1] - pa[1]];
    let cross = u[0] * w[1] - u[1] * w[0];
    let scale = norm(&u) * norm(&w) * norm(&[pc[0] - pb[0], pc[1] - pb[1]]).max(1e-300);
    if cross.abs() <= 1e-15 * scale.max(norm(&u) * norm(&w)) || norm(&u) == 0.0 || norm(&w) == 0.0 {
        return Ok(0.0);
    }
    let mut angles = 0.0;
    for (i, p) in pts.iter().enumerate() {
        if let TriangleVertex::Finite(fp) = p {
            let q1 = pts[(i + 1) % 3].coords();
            let q2 = pts[(i + 2) % 3].coords();
            angles += klein_angle(fp.coords(), q1, q2);
        }
    }
    Ok((PI - angles).max(0.0))
}
