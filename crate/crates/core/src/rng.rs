//! Seeded random streams and sphere point sets.
//!
//! Every randomized routine takes an explicit 64-bit seed. Work is split into
//! fixed-size chunks and chunk `k` draws from ChaCha stream `k` of that seed,
//! so results do not depend on how many worker threads run the chunks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

/// Samples per parallel chunk.
pub const CHUNK_SIZE: usize = 4096;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a list of tags into an independent child seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Runs `total` samples split into chunks, each with its own stream, and
/// returns the per-chunk results in chunk order.
pub fn parallel_chunks<T, F>(total: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunks = total.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let count = CHUNK_SIZE.min(total - k * CHUNK_SIZE);
            let mut rng = stream_rng(seed, k as u64);
            f(&mut rng, count)
        })
        .collect()
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Uniform direction on the unit sphere in `R^n`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let g = gaussian_vector(rng, n);
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return g.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Euclidean-uniform point in the unit ball of `R^n`.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let dir = unit_vector(rng, n);
    let u: f64 = rng.random();
    let r = u.powf(1.0 / n as f64);
    dir.into_iter().map(|x| r * x).collect()
}

/// Uniform barycentric weights on a simplex with `k` vertices.
pub fn dirichlet_weights<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Haar-random orthogonal matrix (QR of a Gaussian matrix with sign fix).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// `count` well-spread unit vectors in `R^n`, randomly rotated by the seed:
/// equally spaced on the circle, a Fibonacci lattice on the 2-sphere, and a
/// [`SphereSequence`] prefix beyond.
pub fn spread_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, u64::MAX - 1);
    match n {
        2 => {
            let phase = rng.random::<f64>();
            (0..count)
                .map(|k| {
                    let a = std::f64::consts::TAU * (k as f64 + phase) / count as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        }
        3 => {
            let q = random_orthogonal(&mut rng, 3);
            let golden = 0.618_033_988_749_894_9;
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = std::f64::consts::TAU * (k as f64 * golden).fract();
                    let v = &q * nalgebra::DVector::from_vec(vec![r * a.cos(), r * a.sin(), z]);
                    v.iter().copied().collect()
                })
                .collect()
        }
        _ => SphereSequence::new(n, seed).take(count),
    }
}

/// Low-discrepancy point set on the unit sphere of `R^n`, randomly rotated by
/// the seed. Prefixes are nested: the first `k` points do not depend on how
/// many points are requested.
#[derive(Debug, Clone)]
pub struct SphereSequence {
    dim: usize,
    rotation: DMatrix<f64>,
    phase: f64,
}

impl SphereSequence {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1 && dim <= 2 * PRIMES.len(), "sphere sequence dimension out of range");
        let mut rng = stream_rng(seed, u64::MAX);
        let phase = rng.random::<f64>();
        let rotation = random_orthogonal(&mut rng, dim);
        SphereSequence { dim, rotation, phase }
    }

    /// Unrotated point `k` of the sequence.
    fn raw(&self, k: usize) -> Vec<f64> {
        let n = self.dim;
        if n == 1 {
            return vec![if k % 2 == 0 { 1.0 } else { -1.0 }];
        }
        if n == 2 {
            let golden = 0.618_033_988_749_894_9;
            let t = (self.phase + k as f64 * golden).fract();
            let a = std::f64::consts::TAU * t;
            return vec![a.cos(), a.sin()];
        }
        let idx = k as u64 + 1;
        let mut g = Vec::with_capacity(n + 1);
        let mut p = 0;
        while g.len() < n {
            let u1 = (halton(idx, PRIMES[p]) + self.phase).fract().max(1e-300);
            let u2 = halton(idx, PRIMES[p + 1]);
            let r = (-2.0 * u1.ln()).sqrt();
            let a = std::f64::consts::TAU * u2;
            g.push(r * a.cos());
            g.push(r * a.sin());
            p += 2;
        }
        g.truncate(n);
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        g.into_iter().map(|x| x / norm).collect()
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        let raw = self.raw(k);
        if self.dim == 2 {
            return raw;
        }
        let v = &self.rotation * nalgebra::DVector::from_vec(raw);
        v.iter().copied().collect()
    }

    pub fn take(&self, count: usize) -> Vec<Vec<f64>> {
        (0..count).map(|k| self.point(k)).collect()
    }
}
