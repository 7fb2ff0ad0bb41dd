//! Unitary DFT helpers. `F[j][k] = exp(2 pi i j k / n) / sqrt(n)`; circulant
//! matrices are `F diag(a) F*`.

use rustfft::{FftDirection, FftPlanner};

use crate::linalg::{Matrix, C64, ZERO};

fn transform_columns(m: &Matrix, direction: FftDirection, scale: f64) -> Matrix {
    let n = m.nrows();
    let mut out = m.clone();
    if n == 0 || m.ncols() == 0 {
        return out;
    }
    let fft = FftPlanner::new().plan_fft(n, direction);
    // column-major storage: the whole buffer is a sequence of length-n transforms
    fft.process(out.as_mut_slice());
    if scale != 1.0 {
        out.scale_mut(scale);
    }
    out
}

/// `F* m`: the unitary forward transform of every column.
pub fn to_fourier(m: &Matrix) -> Matrix {
    let n = m.nrows() as f64;
    transform_columns(m, FftDirection::Forward, 1.0 / n.sqrt())
}

/// `F m`: inverse of [`to_fourier`].
pub fn from_fourier(m: &Matrix) -> Matrix {
    let n = m.nrows() as f64;
    transform_columns(m, FftDirection::Inverse, 1.0 / n.sqrt())
}

/// Unnormalized forward DFT of a vector, `sum_l v_l exp(-2 pi i j l / n)`.
pub fn fft(v: &[C64]) -> Vec<C64> {
    let mut buf = v.to_vec();
    if !buf.is_empty() {
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    }
    buf
}

/// Unnormalized inverse DFT of a vector, `sum_j v_j exp(2 pi i j l / n)`.
pub fn ifft(v: &[C64]) -> Vec<C64> {
    let mut buf = v.to_vec();
    if !buf.is_empty() {
        FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    }
    buf
}

/// Signed wavenumber carried by DFT index `j`; the Nyquist index maps to `-n/2`.
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if 2 * j < n {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

pub fn index_of_wavenumber(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// First column of `F diag(eigs) F*`.
pub fn circulant_column(eigs: &[C64]) -> Vec<C64> {
    let n = eigs.len() as f64;
    ifft(eigs).into_iter().map(|z| z / n).collect()
}

/// Dense circulant with first column `c`: `A[j][k] = c[(j - k) mod n]`.
pub fn circulant_from_column(c: &[C64]) -> Matrix {
    let n = c.len();
    Matrix::from_fn(n, n, |j, k| c[(j + n - k) % n])
}

pub fn circulant_matrix(eigs: &[C64]) -> Matrix {
    circulant_from_column(&circulant_column(eigs))
}

/// `F diag(eigs) F* x` for every column of `x`, in O(n log n) per column.
pub fn apply_circulant(eigs: &[C64], x: &Matrix) -> Matrix {
    let mut xh = to_fourier(x);
    for (i, &a) in eigs.iter().enumerate() {
        for z in xh.row_mut(i).iter_mut() {
            *z *= a;
        }
    }
    from_fourier(&xh)
}

/// Fourier mode `j` as a unit column, i.e. column `j` of `F`.
pub fn fourier_mode(j: usize, n: usize) -> Vec<C64> {
    let s = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|l| {
            let theta = 2.0 * std::f64::consts::PI * ((j * l) % n) as f64 / n as f64;
            C64::from_polar(s, theta)
        })
        .collect()
}

pub fn row_energy(m: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; m.nrows()];
    for col in m.column_iter() {
        for (acc, z) in out.iter_mut().zip(col.iter()) {
            *acc += z.norm_sqr();
        }
    }
    out
}

/// Row-wise inner products `sum_t a[j][t] * conj(b[j][t])`.
pub fn row_inner(a: &Matrix, b: &Matrix) -> Vec<C64> {
    let mut out = vec![ZERO; a.nrows()];
    for (ca, cb) in a.column_iter().zip(b.column_iter()) {
        for ((acc, x), y) in out.iter_mut().zip(ca.iter()).zip(cb.iter()) {
            *acc += x * y.conj();
        }
    }
    out
}
