//! Adaptive quadrature: Gauss–Kronrod (7/15) on intervals, Genz–Malik
//! (degree 7/5) on boxes, and the Duffy collapse from simplices to cubes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_evals: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Tolerance { abs: 0.0, rel, max_evals: 2_000_000 }
    }

    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }

    fn satisfied(&self, value: f64, error: f64) -> bool {
        error <= self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult { value: 0.0, error: 0.0, evaluations: 0, converged: true }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel; returns (kronrod, error estimate). The error
/// uses the QUADPACK scaling of `|kronrod - gauss|`.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [0.0; 15];
    fv[7] = f(c);
    for j in 0..7 {
        let dx = h * XGK[j];
        fv[j] = f(c - dx);
        fv[14 - j] = f(c + dx);
    }
    let mut k = WGK[7] * fv[7];
    let mut g = WG[3] * fv[7];
    let mut resabs = WGK[7] * fv[7].abs();
    for j in 0..7 {
        let s = fv[j] + fv[14 - j];
        k += WGK[j] * s;
        resabs += WGK[j] * (fv[j].abs() + fv[14 - j].abs());
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    let mean = 0.5 * k;
    let mut resasc = WGK[7] * (fv[7] - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let h = h.abs();
    let (resabs, resasc) = (resabs * h, resasc * h);
    let mut err = ((k - g) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (k * (b - a) * 0.5, err)
}

/// Fixed (non-adaptive) 15-point Kronrod rule.
pub fn kronrod15<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    gk15(&mut f, a, b).0
}

struct Panel<T> {
    error: f64,
    value: f64,
    data: T,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    if a == b {
        return QuadResult::zero();
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { error: e, value: v, data: (a, b) });
    let (mut total, mut err) = (v, e);
    let mut converged = true;
    while !tol.satisfied(total, err) {
        if evals + 30 > tol.max_evals {
            converged = false;
            break;
        }
        let worst = heap.pop().expect("heap never empties");
        let (lo, hi) = worst.data;
        let mid = 0.5 * (lo + hi);
        if !(mid > lo.min(hi) && mid < lo.max(hi)) {
            heap.push(worst);
            converged = false;
            break;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evals += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel { error: e1, value: v1, data: (lo, mid) });
        heap.push(Panel { error: e2, value: v2, data: (mid, hi) });
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let total: f64 = heap.iter().map(|p| p.value).sum();
    let err: f64 = heap.iter().map(|p| p.error).sum();
    QuadResult { value: total, error: err, evaluations: evals, converged: converged && tol.satisfied(total, err) }
}

struct GenzMalik {
    dim: usize,
    w: [f64; 5],
    w5: [f64; 4],
}

const LAMBDA2: f64 = 0.358_568_582_800_318_1; // sqrt(9/70)
const LAMBDA4: f64 = 0.948_683_298_050_513_8; // sqrt(9/10)
const LAMBDA5: f64 = 0.688_247_201_611_685_3; // sqrt(9/19)

impl GenzMalik {
    fn new(dim: usize) -> Self {
        let d = dim as f64;
        let w = [
            (12824.0 - 9120.0 * d + 400.0 * d * d) / 19683.0,
            980.0 / 6561.0,
            (1820.0 - 400.0 * d) / 19683.0,
            200.0 / 19683.0,
            6859.0 / 19683.0 / 2f64.powi(dim as i32),
        ];
        let w5 = [
            (729.0 - 950.0 * d + 50.0 * d * d) / 729.0,
            245.0 / 486.0,
            (265.0 - 100.0 * d) / 1458.0,
            25.0 / 729.0,
        ];
        GenzMalik { dim, w, w5 }
    }

    fn evals(&self) -> usize {
        let d = self.dim;
        (1 << d) + 2 * d * d + 2 * d + 1
    }

    /// Returns (value, error, split axis).
    fn apply<F: FnMut(&[f64]) -> f64>(&self, f: &mut F, center: &[f64], half: &[f64]) -> (f64, f64, usize) {
        let d = self.dim;
        let mut x = center.to_vec();
        let f1 = f(&x);
        let mut sum2 = 0.0;
        let mut sum3 = 0.0;
        let mut best_axis = 0;
        let mut best_diff = -1.0;
        let ratio = (LAMBDA2 / LAMBDA4).powi(2);
        for i in 0..d {
            x[i] = center[i] - LAMBDA2 * half[i];
            let a = f(&x);
            x[i] = center[i] + LAMBDA2 * half[i];
            let b = f(&x);
            x[i] = center[i] - LAMBDA4 * half[i];
            let c = f(&x);
            x[i] = center[i] + LAMBDA4 * half[i];
            let e = f(&x);
            x[i] = center[i];
            let f2 = a + b;
            let f3 = c + e;
            sum2 += f2;
            sum3 += f3;
            let diff = (f2 - 2.0 * f1 - ratio * (f3 - 2.0 * f1)).abs();
            if diff > best_diff {
                best_diff = diff;
                best_axis = i;
            }
        }
        let mut sum4 = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                for (si, sj) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                    x[i] = center[i] + si * LAMBDA4 * half[i];
                    x[j] = center[j] + sj * LAMBDA4 * half[j];
                    sum4 += f(&x);
                }
                x[i] = center[i];
                x[j] = center[j];
            }
        }
        let mut sum5 = 0.0;
        for mask in 0..(1usize << d) {
            for i in 0..d {
                let s = if mask & (1 << i) != 0 { 1.0 } else { -1.0 };
                x[i] = center[i] + s * LAMBDA5 * half[i];
            }
            sum5 += f(&x);
        }
        let vol: f64 = half.iter().map(|h| 2.0 * h).product();
        let w = &self.w;
        let i7 = vol * (w[0] * f1 + w[1] * sum2 + w[2] * sum3 + w[3] * sum4 + w[4] * sum5);
        let w5 = &self.w5;
        let i5 = vol * (w5[0] * f1 + w5[1] * sum2 + w5[2] * sum3 + w5[3] * sum4);
        (i7, (i7 - i5).abs(), best_axis)
    }
}

/// Adaptive cubature over the box `[lower, upper]`. Dimension 1 falls back to
/// Gauss–Kronrod.
pub fn cubature<F: FnMut(&[f64]) -> f64>(mut f: F, lower: &[f64], upper: &[f64], tol: Tolerance) -> QuadResult {
    let d = lower.len();
    assert_eq!(d, upper.len());
    if d == 0 {
        return QuadResult { value: f(&[]), error: 0.0, evaluations: 1, converged: true };
    }
    if d == 1 {
        let mut x = [0.0];
        return gauss_kronrod(
            |t| {
                x[0] = t;
                f(&x)
            },
            lower[0],
            upper[0],
            tol,
        );
    }
    let rule = GenzMalik::new(d);
    let per = rule.evals();
    let center: Vec<f64> = lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect();
    let half: Vec<f64> = lower.iter().zip(upper).map(|(a, b)| 0.5 * (b - a)).collect();
    let (v, e, axis) = rule.apply(&mut f, &center, &half);
    let mut evals = per;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { error: e, value: v, data: (center, half, axis) });
    let (mut total, mut err) = (v, e);
    let mut converged = true;
    while !tol.satisfied(total, err) {
        if evals + 2 * per > tol.max_evals {
            converged = false;
            break;
        }
        let worst = heap.pop().expect("heap never empties");
        let (c, h, axis) = &worst.data;
        if h[*axis] < 1e-15 {
            heap.push(worst);
            converged = false;
            break;
        }
        let mut h2 = h.clone();
        h2[*axis] *= 0.5;
        let mut c1 = c.clone();
        c1[*axis] -= h2[*axis];
        let mut c2 = c.clone();
        c2[*axis] += h2[*axis];
        let (v1, e1, a1) = rule.apply(&mut f, &c1, &h2);
        let (v2, e2, a2) = rule.apply(&mut f, &c2, &h2);
        evals += 2 * per;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel { error: e1, value: v1, data: (c1, h2.clone(), a1) });
        heap.push(Panel { error: e2, value: v2, data: (c2, h2, a2) });
    }
    let total: f64 = heap.iter().map(|p| p.value).sum();
    let err: f64 = heap.iter().map(|p| p.error).sum();
    QuadResult { value: total, error: err, evaluations: evals, converged: converged && tol.satisfied(total, err) }
}

/// k-dimensional measure of the simplex spanned by `vertices` (k+1 points in
/// any ambient dimension), via the Gram determinant.
pub fn simplex_measure(vertices: &[Vec<f64>]) -> f64 {
    let k = vertices.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let m = vertices[0].len();
    let edges: Vec<Vec<f64>> = vertices[1..]
        .iter()
        .map(|v| (0..m).map(|i| v[i] - vertices[0][i]).collect())
        .collect();
    let gram = nalgebra::DMatrix::from_fn(k, k, |i, j| edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum::<f64>());
    let det = gram.determinant().max(0.0);
    det.sqrt() / factorial(k)
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Integrates `f` over the simplex with the given vertices (k+1 points in
/// `R^m`, k <= m) using the Duffy collapse onto `[0,1]^k`. The collapse is at
/// `vertices[0]`, whose neighbourhood gets the vanishing Jacobian.
pub fn simplex_cubature<F: FnMut(&[f64]) -> f64>(mut f: F, vertices: &[Vec<f64>], tol: Tolerance) -> QuadResult {
    let k = vertices.len() - 1;
    let m = vertices[0].len();
    let measure = simplex_measure(vertices);
    if measure == 0.0 {
        return QuadResult::zero();
    }
    let scale = measure * factorial(k);
    let diffs: Vec<Vec<f64>> = (1..=k)
        .map(|j| (0..m).map(|i| vertices[j][i] - vertices[j - 1][i]).collect())
        .collect();
    let mut x = vec![0.0; m];
    let g = |u: &[f64]| {
        x.copy_from_slice(&vertices[0]);
        let mut prod = 1.0;
        let mut jac = scale;
        for j in 0..k {
            prod *= u[j];
            if j + 1 < k {
                jac *= u[j].powi((k - 1 - j) as i32);
            }
            for i in 0..m {
                x[i] += prod * diffs[j][i];
            }
        }
        if jac == 0.0 {
            0.0
        } else {
            jac * f(&x)
        }
    };
    cubature(g, &vec![0.0; k], &vec![1.0; k], tol)
}
