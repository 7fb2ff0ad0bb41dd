//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{PidmdError, Result};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;
pub type RealMatrix = DMatrix<f64>;

/// Relative singular value cutoff used for numerical rank and pseudo-inverses.
pub const RANK_RTOL: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_complex(m: &RealMatrix) -> Matrix {
    m.map(|v| c64(v, 0.0))
}

pub fn is_real(m: &Matrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Exchange (anti-identity) permutation applied to the rows of `m`.
pub fn flip_rows(m: &Matrix) -> Matrix {
    let n = m.nrows();
    Matrix::from_fn(n, m.ncols(), |i, j| m[(n - 1 - i, j)])
}

pub fn flip_cols(m: &Matrix) -> Matrix {
    let c = m.ncols();
    Matrix::from_fn(m.nrows(), c, |i, j| m[(i, c - 1 - j)])
}

/// Index of the largest-magnitude entry, taking the first one among near-ties.
pub fn dominant_index<'a>(v: impl Iterator<Item = &'a C64> + Clone) -> usize {
    let max = v.clone().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let cutoff = max * (1.0 - 1e-12);
    v.map(|z| z.norm())
        .position(|a| a >= cutoff)
        .unwrap_or(0)
}

/// Scales a column to unit norm with its largest entry real and positive.
pub fn normalize_column(m: &mut Matrix, j: usize) -> C64 {
    let norm = m.column(j).norm();
    if norm == 0.0 {
        return ONE;
    }
    let k = dominant_index(m.column(j).iter());
    let z = m[(k, j)];
    let phase = z.conj() / z.norm();
    let factor = phase / norm;
    m.column_mut(j).scale_mut_c(factor);
    factor
}

trait ScaleC {
    fn scale_mut_c(&mut self, f: C64);
}

impl<S> ScaleC for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_c(&mut self, f: C64) {
        for z in self.iter_mut() {
            *z *= f;
        }
    }
}

/// Thin SVD with singular values in descending order.
///
/// Each left singular vector has its largest-magnitude entry real and positive;
/// the right singular vectors are rotated by the same phase.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn rank(&self, rtol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&s| s > rtol * smax).count()
    }

    pub fn truncate(&self, r: usize) -> Svd {
        Svd {
            u: self.u.columns(0, r).into_owned(),
            s: self.s[..r].to_vec(),
            v: self.v.columns(0, r).into_owned(),
        }
    }

    pub fn pinv(&self, rtol: f64) -> Matrix {
        let r = self.rank(rtol);
        let mut out = Matrix::zeros(self.v.nrows(), self.u.nrows());
        for k in 0..r {
            let vk = self.v.column(k);
            let uk = self.u.column(k);
            out += (vk * uk.adjoint()).unscale(self.s[k]);
        }
        out
    }
}

pub fn svd(a: &Matrix) -> Svd {
    let (n, m) = a.shape();
    let k = n.min(m);
    if k == 0 {
        return Svd {
            u: Matrix::zeros(n, 0),
            s: Vec::new(),
            v: Matrix::zeros(m, 0),
        };
    }
    let dec = nalgebra::linalg::SVD::new(a.clone(), true, true);
    let mut u = dec.u.expect("left singular vectors requested");
    let mut v = dec.v_t.expect("right singular vectors requested").adjoint();
    let s: Vec<f64> = dec.singular_values.iter().copied().collect();
    for j in 0..k {
        let idx = dominant_index(u.column(j).iter());
        let z = u[(idx, j)];
        if z.norm() > 0.0 {
            let phase = z.conj() / z.norm();
            u.column_mut(j).scale_mut_c(phase);
            v.column_mut(j).scale_mut_c(phase);
        }
    }
    Svd { u, s, v }
}

pub fn pinv(a: &Matrix) -> Matrix {
    svd(a).pinv(RANK_RTOL)
}

pub fn rank(a: &Matrix) -> usize {
    svd(a).rank(RANK_RTOL)
}

/// 2-norm condition number, infinite when singular.
pub fn condition_number(a: &Matrix) -> f64 {
    let s = svd(a).s;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Indices that put eigenvalues in canonical order: descending modulus,
/// then descending real part, then descending imaginary part.
pub fn canonical_order(vals: &[C64]) -> Vec<usize> {
    let scale = vals.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let q = |x: f64| (x / scale * 1e10).round() as i64;
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by_key(|&i| {
        let z = vals[i];
        (
            std::cmp::Reverse(q(z.norm())),
            std::cmp::Reverse(q(z.re)),
            std::cmp::Reverse(q(z.im)),
            i,
        )
    });
    idx
}

/// Eigen-decomposition of a general complex matrix.
///
/// Eigenvalues come back in canonical order; eigenvectors are unit columns with
/// their largest entry real and positive.
pub fn eig(a: &Matrix) -> Result<(Vec<C64>, Matrix)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(PidmdError::DimensionMismatch(format!(
            "eigen-decomposition needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), Matrix::zeros(0, 0)));
    }
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| PidmdError::Numerical("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let vals: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let vecs = q * triangular_eigenvectors(&t);
    Ok(sort_eigenpairs(vals, vecs))
}

/// Eigenvectors of an upper-triangular matrix by back substitution, in diagonal order.
pub fn triangular_eigenvectors(t: &Matrix) -> Matrix {
    let n = t.nrows();
    let tnorm = t.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let small = (tnorm * f64::EPSILON).max(f64::MIN_POSITIVE);
    let mut v = Matrix::zeros(n, n);
    for k in 0..n {
        let lam = t[(k, k)];
        v[(k, k)] = ONE;
        for i in (0..k).rev() {
            let mut acc = ZERO;
            for j in i + 1..=k {
                acc += t[(i, j)] * v[(j, k)];
            }
            let mut d = t[(i, i)] - lam;
            if d.norm() < small {
                d = c64(small, 0.0);
            }
            v[(i, k)] = -acc / d;
        }
    }
    v
}

fn sort_eigenpairs(vals: Vec<C64>, vecs: Matrix) -> (Vec<C64>, Matrix) {
    let order = canonical_order(&vals);
    let n = vecs.nrows();
    let mut out = Matrix::zeros(n, order.len());
    let mut sorted = Vec::with_capacity(order.len());
    for (dst, &src) in order.iter().enumerate() {
        sorted.push(vals[src]);
        out.set_column(dst, &vecs.column(src));
        normalize_column(&mut out, dst);
    }
    (sorted, out)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
pub fn eigh(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let h = (a + a.adjoint()).unscale(2.0);
    let dec = nalgebra::linalg::SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| dec.eigenvalues[j].total_cmp(&dec.eigenvalues[i]));
    let mut vecs = Matrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in idx.iter().enumerate() {
        vals.push(dec.eigenvalues[src]);
        vecs.set_column(dst, &dec.eigenvectors.column(src));
        normalize_column(&mut vecs, dst);
    }
    (vals, vecs)
}

pub fn expm(a: &Matrix) -> Matrix {
    a.exp()
}

#[derive(Debug, Clone)]
pub struct MinNormSolution {
    pub x: Vector,
    pub rank: usize,
    /// Eigenvalues of the system matrix, descending.
    pub eigenvalues: Vec<f64>,
}

/// Minimum-norm solution of the Hermitian positive semi-definite system `h x = d`,
/// discarding eigenvalues below `rtol` times the largest.
pub fn hermitian_min_norm_solve(h: &Matrix, d: &Vector, rtol: f64) -> MinNormSolution {
    let (vals, vecs) = eigh(h);
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let mut x = Vector::zeros(h.nrows());
    let mut rank = 0;
    for (k, &lam) in vals.iter().enumerate() {
        if top > 0.0 && lam > rtol * top {
            rank += 1;
            let vk = vecs.column(k);
            let coef = vk.dotc(d) / lam;
            x += vk * coef;
        }
    }
    MinNormSolution {
        x,
        rank,
        eigenvalues: vals,
    }
}

/// Factorization `x = r q` with `q` (p x m) having orthonormal rows and `r` (n x p)
/// satisfying `r[i][k] = 0` for `k < i - (n - p)`, where `p = min(n, m)`.
///
/// For square or wide data `r` is upper triangular.
#[derive(Debug, Clone)]
pub struct Rq {
    pub r: Matrix,
    pub q: Matrix,
}

pub fn rq(x: &Matrix) -> Rq {
    let (n, m) = x.shape();
    let p = n.min(m);
    let flipped = flip_rows(x).adjoint();
    let qr = flipped.qr();
    let q1 = qr.q();
    let r1 = qr.r();
    let r = flip_cols(&flip_rows(&r1.adjoint()));
    let q = flip_rows(&q1.adjoint());
    debug_assert_eq!(r.shape(), (n, p));
    debug_assert_eq!(q.shape(), (p, m));
    Rq { r, q }
}

pub fn frobenius(m: &Matrix) -> f64 {
    m.norm()
}

/// Relative Frobenius distance `||a - b|| / max(||b||, tiny)`.
pub fn rel_diff(a: &Matrix, b: &Matrix) -> f64 {
    let denom = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

pub fn residual(a: &Matrix, x: &Matrix, y: &Matrix) -> f64 {
    (y - a * x).norm()
}
