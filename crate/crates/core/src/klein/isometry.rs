use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{norm_sq, KleinPoint};
use crate::error::Result;
use crate::rng::random_orthogonal;

/// A hyperbolic isometry, stored as an `(n+1)x(n+1)` Lorentz matrix acting on
/// hyperboloid lifts `(1, x)`. Klein points are recovered by dividing by the
/// time coordinate, so the map is projective on the ball and sends chords to
/// chords.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    lorentz: DMatrix<f64>,
}

impl Isometry {
    pub fn identity(dim: usize) -> Self {
        Isometry { lorentz: DMatrix::identity(dim + 1, dim + 1) }
    }

    /// Wraps a Lorentz matrix. No check is made here; see [`Self::minkowski_defect`].
    pub fn from_matrix(lorentz: DMatrix<f64>) -> Self {
        assert!(lorentz.is_square() && lorentz.nrows() >= 3);
        Isometry { lorentz }
    }

    pub fn dim(&self) -> usize {
        self.lorentz.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.lorentz
    }

    /// Rotation about the origin by an orthogonal `n x n` matrix.
    pub fn rotation(q: &DMatrix<f64>) -> Self {
        let n = q.nrows();
        let mut m = DMatrix::identity(n + 1, n + 1);
        m.view_mut((1, 1), (n, n)).copy_from(q);
        Isometry { lorentz: m }
    }

    /// The boost sending `p` to the origin.
    pub fn translate_to_origin(p: &KleinPoint) -> Self {
        Self::boost(p.coords())
    }

    /// Lorentz boost with velocity `v` (a Klein point): maps `v` to the origin.
    fn boost(v: &[f64]) -> Self {
        let n = v.len();
        let b2 = norm_sq(v);
        let mut m = DMatrix::identity(n + 1, n + 1);
        if b2 == 0.0 {
            return Isometry { lorentz: m };
        }
        let gamma = 1.0 / (1.0 - b2).sqrt();
        m[(0, 0)] = gamma;
        // (gamma - 1)/|v|^2 written to avoid cancellation for small |v|
        let k = gamma * gamma / (gamma + 1.0);
        for i in 0..n {
            m[(0, i + 1)] = -gamma * v[i];
            m[(i + 1, 0)] = -gamma * v[i];
            for j in 0..n {
                m[(i + 1, j + 1)] += k * v[i] * v[j];
            }
        }
        Isometry { lorentz: m }
    }

    /// Random isometry: a Haar rotation composed with a boost that moves the
    /// origin to a random point at hyperbolic distance at most `max_shift`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_shift: f64) -> Self {
        let rot = Self::rotation(&random_orthogonal(rng, dim));
        let dir = crate::rng::unit_vector(rng, dim);
        let shift = max_shift * rng.random::<f64>();
        let t = shift.tanh();
        let target: Vec<f64> = dir.into_iter().map(|x| t * x).collect();
        Self::boost(&target).inverse().compose(&rot)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry { lorentz: &self.lorentz * &other.lorentz }
    }

    /// Inverse via `J L^T J` with `J = diag(-1, 1, ..., 1)`.
    pub fn inverse(&self) -> Isometry {
        let mut m = self.lorentz.transpose();
        let n1 = m.nrows();
        for i in 1..n1 {
            m[(0, i)] = -m[(0, i)];
            m[(i, 0)] = -m[(i, 0)];
        }
        Isometry { lorentz: m }
    }

    /// Largest entry of `L^T J L - J`.
    pub fn minkowski_defect(&self) -> f64 {
        let n1 = self.lorentz.nrows();
        let mut j = DMatrix::identity(n1, n1);
        j[(0, 0)] = -1.0;
        (self.lorentz.transpose() * &j * &self.lorentz - j).abs().max()
    }

    /// Applies the map to raw Klein coordinates (also valid for ideal points).
    pub fn apply_raw(&self, x: &[f64]) -> Vec<f64> {
        let h = DVector::from_iterator(x.len() + 1, std::iter::once(1.0).chain(x.iter().copied()));
        let y = &self.lorentz * h;
        let t = y[0];
        y.iter().skip(1).map(|c| c / t).collect()
    }

    pub fn apply(&self, p: &KleinPoint) -> Result<KleinPoint> {
        KleinPoint::new(self.apply_raw(p.coords()))
    }
}
