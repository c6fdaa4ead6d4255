//! Convex hulls inside the Klein ball.
//!
//! Chords of the ball are hyperbolic geodesics, so the Euclidean hull of a
//! finite set of Klein points is also its hyperbolic hull. The hull is built
//! incrementally (beneath–beyond) with floating-point visibility tests; if the
//! result fails its own consistency checks the input is re-run after a tiny
//! seeded perturbation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{HypError, Result};
use crate::klein::{dot, norm, KleinPoint, BOUNDARY_TOL};
use crate::quadrature::factorial;
use crate::rng::{stream_rng, uniform_in_ball};

pub const MIN_HULL_DIM: usize = 2;
pub const MAX_HULL_DIM: usize = 6;

/// Slack allowed by [`contains`] and by the vertex/halfspace invariant.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
const VISIBILITY_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-10;
const DUPLICATE_TOL: f64 = 1e-13;
const DEFAULT_PERTURBATION: f64 = 1e-9;

/// `normal · x <= offset`, with a unit outward normal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    /// Signed distance of `p` beyond the supporting hyperplane.
    pub fn slack(&self, p: &[f64]) -> f64 {
        dot(&self.normal, p) - self.offset
    }
}

/// A simplex given by its vertices (n+1 of them when full-dimensional).
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    vertices: Vec<KleinPoint>,
}

impl Simplex {
    pub fn new(vertices: Vec<KleinPoint>) -> Result<Self> {
        let first = vertices.first().ok_or(HypError::NotEnoughPoints { got: 0, need: 1 })?;
        let n = first.dim();
        if let Some(bad) = vertices.iter().find(|v| v.dim() != n) {
            return Err(HypError::DimensionMismatch { left: n, right: bad.dim() });
        }
        if vertices.len() > n + 1 {
            return Err(HypError::InvalidArgument(format!("{} vertices for a simplex in dimension {n}", vertices.len())));
        }
        Ok(Simplex { vertices })
    }

    pub fn vertices(&self) -> &[KleinPoint] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.vertices.len() == self.dim() + 1 && self.euclidean_volume() > 0.0
    }

    /// `|det(v_i - v_0)| / n!`; zero for lower-dimensional simplices.
    pub fn euclidean_volume(&self) -> f64 {
        let n = self.dim();
        if self.vertices.len() != n + 1 {
            return 0.0;
        }
        let raw: Vec<&[f64]> = self.vertices.iter().map(|v| v.coords()).collect();
        simplex_euclidean_volume(&raw)
    }

    pub fn centroid(&self) -> Vec<f64> {
        centroid(self.vertices.iter().map(|v| v.coords()))
    }
}

pub(crate) fn centroid<'a>(points: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut sum: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for p in points {
        if sum.is_empty() {
            sum = vec![0.0; p.len()];
        }
        for (s, x) in sum.iter_mut().zip(p) {
            *s += x;
        }
        count += 1;
    }
    sum.into_iter().map(|s| s / count as f64).collect()
}

/// Euclidean volume of the full-dimensional simplex with raw vertices.
pub(crate) fn simplex_euclidean_volume(vertices: &[&[f64]]) -> f64 {
    let n = vertices[0].len();
    let m = DMatrix::from_fn(n, n, |i, j| vertices[j + 1][i] - vertices[0][i]);
    m.determinant().abs() / factorial(n)
}

/// A convex polytope with simplicial facets, in both vertex and halfspace form.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    vertices: Vec<KleinPoint>,
    facets: Vec<Vec<usize>>,
    halfspaces: Vec<Halfspace>,
}

#[derive(Serialize)]
struct PolytopeDump<'a> {
    vertices: Vec<&'a [f64]>,
    facets: &'a [Vec<usize>],
    halfspaces: &'a [Halfspace],
}

impl Serialize for Polytope {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PolytopeDump {
            vertices: self.vertices.iter().map(|v| v.coords()).collect(),
            facets: &self.facets,
            halfspaces: &self.halfspaces,
        }
        .serialize(serializer)
    }
}

impl Polytope {
    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn vertices(&self) -> &[KleinPoint] {
        &self.vertices
    }

    /// Facets as vertex-index tuples (each of length `dim`).
    pub fn facets(&self) -> &[Vec<usize>] {
        &self.facets
    }

    /// One supporting halfspace per facet, in facet order.
    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn facet_vertices(&self, facet: usize) -> Vec<&[f64]> {
        self.facets[facet].iter().map(|&i| self.vertices[i].coords()).collect()
    }

    pub fn vertex_centroid(&self) -> Vec<f64> {
        centroid(self.vertices.iter().map(|v| v.coords()))
    }

    /// Largest halfspace slack at `p` (negative inside).
    pub fn max_slack(&self, p: &[f64]) -> f64 {
        self.halfspaces.iter().map(|h| h.slack(p)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_strictly_interior(&self, p: &[f64]) -> bool {
        self.max_slack(p) < -VISIBILITY_TOL
    }

    pub fn euclidean_volume(&self) -> f64 {
        let apex = self.vertex_centroid();
        (0..self.facets.len())
            .map(|f| {
                let mut verts = vec![apex.as_slice()];
                verts.extend(self.facet_vertices(f));
                simplex_euclidean_volume(&verts)
            })
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("polytope serializes")
    }
}

/// True iff `p` satisfies every halfspace within [`MEMBERSHIP_TOL`].
pub fn contains(poly: &Polytope, p: &KleinPoint) -> bool {
    p.dim() == poly.dim() && poly.max_slack(p.coords()) <= MEMBERSHIP_TOL
}

/// Cones from `apex` over every facet. The simplices tile the polytope.
pub fn apex_triangulation(poly: &Polytope, apex: &KleinPoint) -> Result<Vec<Simplex>> {
    if apex.dim() != poly.dim() {
        return Err(HypError::DimensionMismatch { left: poly.dim(), right: apex.dim() });
    }
    if !poly.is_strictly_interior(apex.coords()) {
        return Err(HypError::ApexNotInterior);
    }
    Ok(poly
        .facets
        .iter()
        .map(|f| {
            let mut v = vec![apex.clone()];
            v.extend(f.iter().map(|&i| poly.vertices[i].clone()));
            Simplex { vertices: v }
        })
        .collect())
}

/// Moves each point by a seeded random offset of Euclidean length at most
/// `magnitude`. Offsets that would reach the boundary tolerance are halved
/// until the point stays inside.
pub fn simplicial_perturbation(points: &[KleinPoint], magnitude: f64, seed: u64) -> Result<Vec<KleinPoint>> {
    if !(magnitude > 0.0) || !magnitude.is_finite() {
        return Err(HypError::InvalidArgument(format!("perturbation magnitude must be positive, got {magnitude}")));
    }
    let mut rng = stream_rng(seed, 0);
    points
        .iter()
        .map(|p| {
            let mut offset: Vec<f64> = uniform_in_ball(&mut rng, p.dim()).into_iter().map(|x| x * magnitude).collect();
            loop {
                let q: Vec<f64> = p.coords().iter().zip(&offset).map(|(a, b)| a + b).collect();
                if norm(&q) < 1.0 - 2.0 * BOUNDARY_TOL {
                    return KleinPoint::new(q);
                }
                offset.iter_mut().for_each(|x| *x *= 0.5);
                if offset.iter().all(|x| x.abs() < 1e-300) {
                    return Ok(p.clone());
                }
            }
        })
        .collect()
}

/// Convex hull of Klein points, `2 <= n <= 6`.
pub fn convex_hull(points: &[KleinPoint]) -> Result<Polytope> {
    let n = points.first().map(|p| p.dim()).ok_or(HypError::NotEnoughPoints { got: 0, need: 3 })?;
    if !(MIN_HULL_DIM..=MAX_HULL_DIM).contains(&n) {
        return Err(HypError::UnsupportedDimension { dim: n, min: MIN_HULL_DIM, max: MAX_HULL_DIM });
    }
    if let Some(bad) = points.iter().find(|p| p.dim() != n) {
        return Err(HypError::DimensionMismatch { left: n, right: bad.dim() });
    }
    if points.len() < n + 1 {
        return Err(HypError::NotEnoughPoints { got: points.len(), need: n + 1 });
    }
    let raw: Vec<&[f64]> = points.iter().map(|p| p.coords()).collect();
    match build(&raw) {
        Ok(h) => Ok(h.into_polytope(points)),
        Err(BuildError::Degenerate(rank)) => Err(HypError::DegenerateHull { rank, dim: n }),
        Err(BuildError::Unstable) => {
            let mut magnitude = DEFAULT_PERTURBATION;
            for attempt in 0..5u64 {
                log::debug!("hull unstable, retrying with perturbation {magnitude:e}");
                let moved = simplicial_perturbation(points, magnitude, 0x5eed_0000 + attempt)?;
                let raw: Vec<&[f64]> = moved.iter().map(|p| p.coords()).collect();
                match build(&raw) {
                    Ok(h) => return Ok(h.into_polytope(&moved)),
                    Err(BuildError::Degenerate(rank)) => return Err(HypError::DegenerateHull { rank, dim: n }),
                    Err(BuildError::Unstable) => magnitude *= 10.0,
                }
            }
            Err(HypError::HullUnstable)
        }
    }
}

enum BuildError {
    Degenerate(usize),
    Unstable,
}

struct RawFacet {
    verts: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    alive: bool,
}

struct RawHull {
    facets: Vec<RawFacet>,
}

impl RawHull {
    fn into_polytope(self, points: &[KleinPoint]) -> Polytope {
        let mut used: Vec<usize> = self.facets.iter().flat_map(|f| f.verts.iter().copied()).collect();
        used.sort_unstable();
        used.dedup();
        let mut remap = vec![usize::MAX; points.len()];
        for (new, &old) in used.iter().enumerate() {
            remap[old] = new;
        }
        let vertices = used.iter().map(|&i| points[i].clone()).collect();
        let mut facets = Vec::with_capacity(self.facets.len());
        let mut halfspaces = Vec::with_capacity(self.facets.len());
        for f in self.facets {
            facets.push(f.verts.iter().map(|&i| remap[i]).collect());
            halfspaces.push(Halfspace { normal: f.normal, offset: f.offset });
        }
        Polytope { vertices, facets, halfspaces }
    }
}

/// Unnormalized normal of the hyperplane through `d` points in `R^d`
/// (generalized cross product of the edge vectors), with the product of edge
/// lengths for scale.
pub(crate) fn facet_normal(verts: &[&[f64]]) -> (Vec<f64>, f64) {
    let d = verts[0].len();
    let base = verts[0];
    let edges: Vec<Vec<f64>> = verts[1..].iter().map(|v| (0..d).map(|i| v[i] - base[i]).collect()).collect();
    let mut normal = vec![0.0; d];
    if d == 2 {
        normal[0] = edges[0][1];
        normal[1] = -edges[0][0];
    } else {
        for (col, slot) in normal.iter_mut().enumerate() {
            let minor = DMatrix::from_fn(d - 1, d - 1, |r, c| edges[r][if c < col { c } else { c + 1 }]);
            let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
            *slot = sign * minor.determinant();
        }
    }
    let scale: f64 = edges.iter().map(|e| norm(e)).product();
    (normal, scale)
}

/// Supporting hyperplane through `verts`, oriented away from `interior`.
fn hyperplane(points: &[&[f64]], verts: &[usize], interior: &[f64]) -> Option<(Vec<f64>, f64)> {
    let raw: Vec<&[f64]> = verts.iter().map(|&v| points[v]).collect();
    let base = raw[0];
    let (mut normal, scale) = facet_normal(&raw);
    let len = norm(&normal);
    if !(len > 1e-13 * scale) || len == 0.0 {
        return None;
    }
    normal.iter_mut().for_each(|x| *x /= len);
    let mut offset = dot(&normal, base);
    let side = dot(&normal, interior) - offset;
    if side.abs() < 1e-14 {
        return None;
    }
    if side > 0.0 {
        normal.iter_mut().for_each(|x| *x = -*x);
        offset = -offset;
    }
    Some((normal, offset))
}

fn dedup_indices(points: &[&[f64]]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
    let mut keep = vec![true; points.len()];
    for (pos, &i) in order.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        for &j in &order[pos + 1..] {
            if points[j][0] - points[i][0] > DUPLICATE_TOL {
                break;
            }
            if keep[j] {
                let d2: f64 = points[i].iter().zip(points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2.sqrt() <= DUPLICATE_TOL {
                    keep[j] = false;
                }
            }
        }
    }
    (0..points.len()).filter(|&i| keep[i]).collect()
}

/// Picks `d+1` affinely independent points spread as far apart as possible.
fn initial_simplex(points: &[&[f64]], candidates: &[usize]) -> std::result::Result<Vec<usize>, BuildError> {
    let d = points[0].len();
    let i0 = *candidates
        .iter()
        .min_by(|&&a, &&b| points[a][0].total_cmp(&points[b][0]))
        .expect("nonempty candidates");
    let origin = points[i0];
    let diff = |i: usize| -> Vec<f64> { (0..d).map(|k| points[i][k] - origin[k]).collect() };
    let diameter = candidates.iter().map(|&i| norm(&diff(i))).fold(0.0, f64::max);
    if diameter == 0.0 {
        return Err(BuildError::Degenerate(0));
    }
    let mut chosen = vec![i0];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for k in 1..=d {
        let mut best = (0.0, usize::MAX, Vec::new());
        for &i in candidates {
            let mut r = diff(i);
            for b in &basis {
                let c = dot(&r, b);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let len = norm(&r);
            if len > best.0 {
                best = (len, i, r);
            }
        }
        if best.0 <= RANK_TOL * diameter {
            return Err(BuildError::Degenerate(k - 1));
        }
        let (len, i, r) = best;
        basis.push(r.into_iter().map(|x| x / len).collect());
        chosen.push(i);
    }
    Ok(chosen)
}

fn build(points: &[&[f64]]) -> std::result::Result<RawHull, BuildError> {
    let d = points[0].len();
    let candidates = dedup_indices(points);
    if candidates.len() < d + 1 {
        // Too few distinct points cannot span the space.
        let rank = initial_simplex(points, &candidates).err().map_or(d, |e| match e {
            BuildError::Degenerate(r) => r,
            BuildError::Unstable => d,
        });
        return Err(BuildError::Degenerate(rank.min(candidates.len().saturating_sub(1))));
    }
    let simplex = initial_simplex(points, &candidates)?;
    let interior = centroid(simplex.iter().map(|&i| points[i]));

    let mut facets: Vec<RawFacet> = Vec::new();
    for skip in 0..=d {
        let mut verts: Vec<usize> = simplex.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &i)| i).collect();
        verts.sort_unstable();
        let (normal, offset) = hyperplane(points, &verts, &interior).ok_or(BuildError::Unstable)?;
        facets.push(RawFacet { verts, normal, offset, alive: true });
    }

    let mut alive_count = facets.len();
    for &idx in &candidates {
        if simplex.contains(&idx) {
            continue;
        }
        let p = points[idx];
        let visible: Vec<usize> = (0..facets.len())
            .filter(|&f| facets[f].alive && dot(&facets[f].normal, p) - facets[f].offset > VISIBILITY_TOL)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut ridges: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for &f in &visible {
            let verts = &facets[f].verts;
            for skip in 0..d {
                let ridge: Vec<usize> = verts.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &v)| v).collect();
                *ridges.entry(ridge).or_insert(0) += 1;
            }
        }
        for &f in &visible {
            facets[f].alive = false;
        }
        alive_count -= visible.len();
        for (ridge, count) in ridges {
            if count != 1 {
                continue;
            }
            let mut verts = ridge;
            verts.push(idx);
            verts.sort_unstable();
            let (normal, offset) = hyperplane(points, &verts, &interior).ok_or(BuildError::Unstable)?;
            facets.push(RawFacet { verts, normal, offset, alive: true });
            alive_count += 1;
        }
        if facets.len() > 2 * alive_count + 64 {
            facets.retain(|f| f.alive);
        }
    }
    facets.retain(|f| f.alive);

    // Closed simplicial surface: every ridge is shared by exactly two facets.
    let mut ridges: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for f in &facets {
        for skip in 0..d {
            let ridge: Vec<usize> = f.verts.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &v)| v).collect();
            *ridges.entry(ridge).or_insert(0) += 1;
        }
    }
    if ridges.values().any(|&c| c != 2) {
        return Err(BuildError::Unstable);
    }
    for &i in &candidates {
        if facets.iter().any(|f| dot(&f.normal, points[i]) - f.offset > MEMBERSHIP_TOL) {
            return Err(BuildError::Unstable);
        }
    }
    Ok(RawHull { facets })
}

/// Draws a uniformly random affine combination check point; used by tests and
/// experiments to probe hull interiors.
pub fn random_point_in_simplex<R: Rng + ?Sized>(rng: &mut R, simplex: &Simplex) -> Vec<f64> {
    let w = crate::rng::dirichlet_weights(rng, simplex.vertices.len());
    let n = simplex.dim();
    let mut p = vec![0.0; n];
    for (v, wi) in simplex.vertices.iter().zip(&w) {
        for (pi, x) in p.iter_mut().zip(v.coords()) {
            *pi += wi * x;
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::unit_vector;

    fn kp(v: &[f64]) -> KleinPoint {
        KleinPoint::new(v.to_vec()).unwrap()
    }

    fn random_cloud(seed: u64, n: usize, count: usize, radius: f64) -> Vec<KleinPoint> {
        let mut rng = stream_rng(seed, 0);
        (0..count)
            .map(|_| KleinPoint::new(uniform_in_ball(&mut rng, n).into_iter().map(|x| x * radius).collect()).unwrap())
            .collect()
    }

    #[test]
    fn simplex_hull_has_n_plus_one_facets() {
        for n in 2..=6 {
            let mut pts = vec![KleinPoint::origin(n)];
            for i in 0..n {
                let mut v = vec![0.0; n];
                v[i] = 0.5;
                pts.push(kp(&v));
            }
            let poly = convex_hull(&pts).unwrap();
            assert_eq!(poly.facets().len(), n + 1);
            assert_eq!(poly.vertices().len(), n + 1);
            let expected = 0.5f64.powi(n as i32) / factorial(n);
            assert!((poly.euclidean_volume() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn duplicates_are_ignored() {
        let mut pts = random_cloud(1, 3, 30, 0.9);
        let base = convex_hull(&pts).unwrap();
        pts.extend(pts.clone());
        let again = convex_hull(&pts).unwrap();
        assert_eq!(base.vertices().len(), again.vertices().len());
        assert!((base.euclidean_volume() - again.euclidean_volume()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_input_reports_rank() {
        let pts: Vec<KleinPoint> = (0..5).map(|i| kp(&[0.1 * i as f64, 0.05 * i as f64, 0.0])).collect();
        assert_eq!(convex_hull(&pts), Err(HypError::DegenerateHull { rank: 1, dim: 3 }));
        let planar: Vec<KleinPoint> = (0..8).map(|i| kp(&[0.1 * (i % 3) as f64, 0.1 * (i / 3) as f64, 0.2])).collect();
        assert_eq!(convex_hull(&planar), Err(HypError::DegenerateHull { rank: 2, dim: 3 }));
        let same = vec![kp(&[0.1, 0.1]); 4];
        assert_eq!(convex_hull(&same), Err(HypError::DegenerateHull { rank: 0, dim: 2 }));
    }

    #[test]
    fn rejects_unsupported_dimension() {
        let pts = vec![KleinPoint::origin(7); 8];
        assert!(matches!(convex_hull(&pts), Err(HypError::UnsupportedDimension { .. })));
    }

    #[test]
    fn square_and_cube_are_triangulated() {
        let sq: Vec<KleinPoint> = [[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]].iter().map(|v| kp(v)).collect();
        let poly = convex_hull(&sq).unwrap();
        assert_eq!(poly.facets().len(), 4);
        assert!((poly.euclidean_volume() - 1.0).abs() < 1e-12);
        let mut cube = Vec::new();
        for m in 0..8 {
            cube.push(kp(&[
                if m & 1 == 0 { -0.4 } else { 0.4 },
                if m & 2 == 0 { -0.4 } else { 0.4 },
                if m & 4 == 0 { -0.4 } else { 0.4 },
            ]));
        }
        let poly = convex_hull(&cube).unwrap();
        assert_eq!(poly.vertices().len(), 8);
        assert_eq!(poly.facets().len(), 12);
        assert!((poly.euclidean_volume() - 0.512).abs() < 1e-8);
    }

    #[test]
    fn planar_facet_count_equals_vertex_count() {
        for seed in 0..10 {
            let poly = convex_hull(&random_cloud(seed, 2, 40, 0.95)).unwrap();
            assert_eq!(poly.facets().len(), poly.vertices().len());
        }
    }

    #[test]
    fn all_inputs_contained_and_vertices_on_boundary() {
        for n in 2..=5 {
            let pts = random_cloud(n as u64, n, 60, 0.9);
            let poly = convex_hull(&pts).unwrap();
            for p in &pts {
                assert!(contains(&poly, p));
            }
            for (f, facet) in poly.facets().iter().enumerate() {
                for &v in facet {
                    assert!(poly.halfspaces()[f].slack(poly.vertices()[v].coords()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn contains_examples() {
        let pts = random_cloud(3, 3, 40, 0.8);
        let poly = convex_hull(&pts).unwrap();
        assert!(contains(&poly, &poly.vertices()[0]));
        let h = &poly.halfspaces()[0];
        let facet = poly.facet_vertices(0);
        let c = centroid(facet.into_iter());
        let out: Vec<f64> = c.iter().zip(&h.normal).map(|(x, nn)| x + 0.1 * nn).collect();
        assert!(!contains(&poly, &kp(&out)));
        let ideal: Vec<KleinPoint> = {
            let mut rng = stream_rng(8, 0);
            (0..30).map(|_| kp(&unit_vector(&mut rng, 3).into_iter().map(|x| x * 0.99).collect::<Vec<_>>())).collect()
        };
        let poly = convex_hull(&ideal).unwrap();
        assert!(contains(&poly, &KleinPoint::origin(3)));
    }

    #[test]
    fn apex_triangulation_partitions_volume() {
        for n in 2..=5 {
            let poly = convex_hull(&random_cloud(20 + n as u64, n, 30, 0.9)).unwrap();
            let apex = kp(&poly.vertex_centroid());
            let simplices = apex_triangulation(&poly, &apex).unwrap();
            assert_eq!(simplices.len(), poly.facets().len());
            let total: f64 = simplices.iter().map(|s| s.euclidean_volume()).sum();
            // Independent: triangulate from a vertex-centroid-shifted apex.
            let other = kp(&poly.vertex_centroid().iter().map(|x| x * 0.9).collect::<Vec<_>>());
            let alt: f64 = apex_triangulation(&poly, &other).unwrap().iter().map(|s| s.euclidean_volume()).sum();
            assert!((total - alt).abs() < 1e-9 * total);
            let mut rng = stream_rng(n as u64, 1);
            for s in simplices.iter().take(10) {
                for _ in 0..10 {
                    let p = random_point_in_simplex(&mut rng, s);
                    assert!(contains(&poly, &kp(&p)));
                }
            }
        }
        let poly = convex_hull(&random_cloud(2, 2, 10, 0.5)).unwrap();
        let outside = kp(&[0.9, 0.0]);
        assert_eq!(apex_triangulation(&poly, &outside), Err(HypError::ApexNotInterior));
    }

    #[test]
    fn simplex_apex_at_centroid_gives_n_plus_one_pieces() {
        let pts = vec![kp(&[0.1, 0.1, 0.1]), kp(&[0.5, 0.0, 0.0]), kp(&[0.0, 0.5, 0.0]), kp(&[0.0, 0.0, 0.5])];
        let poly = convex_hull(&pts).unwrap();
        let s = Simplex::new(pts).unwrap();
        let parts = apex_triangulation(&poly, &kp(&s.centroid())).unwrap();
        assert_eq!(parts.len(), 4);
        let sum: f64 = parts.iter().map(|p| p.euclidean_volume()).sum();
        assert!((sum - s.euclidean_volume()).abs() < 1e-15);
    }

    #[test]
    fn perturbation_respects_magnitude_and_boundary() {
        let pts = random_cloud(4, 3, 20, 0.9);
        assert!(simplicial_perturbation(&pts, 0.0, 1).is_err());
        let moved = simplicial_perturbation(&pts, 1e-6, 1).unwrap();
        for (a, b) in pts.iter().zip(&moved) {
            let d: Vec<f64> = a.coords().iter().zip(b.coords()).map(|(x, y)| x - y).collect();
            assert!(norm(&d) <= 1e-6);
        }
        let edge = vec![kp(&[1.0 - 2e-12, 0.0])];
        let moved = simplicial_perturbation(&edge, 1e-3, 2).unwrap();
        assert!(moved[0].norm() < 1.0 - BOUNDARY_TOL);
    }

    #[test]
    fn json_dump_field_order() {
        let pts = vec![kp(&[0.0, 0.0]), kp(&[0.5, 0.0]), kp(&[0.0, 0.5])];
        let poly = convex_hull(&pts).unwrap();
        let json = serde_json::to_string(&poly).unwrap();
        assert_eq!(
            json,
            r#"{"vertices":[[0.0,0.0],[0.5,0.0],[0.0,0.5]],"facets":[[1,2],[0,2],[0,1]],"halfspaces":[{"normal":[0.7071067811865475,0.7071067811865475],"offset":0.35355339059327373},{"normal":[-1.0,0.0],"offset":-0.0},{"normal":[0.0,-1.0],"offset":0.0}]}"#
        );
    }
}
