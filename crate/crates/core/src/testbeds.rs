//! Ground-truth operators with known structure, used to generate data and to
//! check the solvers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Result};
use crate::fourier::{circulant_matrix, wavenumber};
use crate::linalg::{c64, expm, Matrix, RealMatrix, Vector, C64, I, ONE};
use crate::random::{gaussian_complex, gaussian_real, normal, rng};
use crate::snapshot::{Grid, TimeKind};

#[derive(Debug, Clone)]
pub struct Testbed {
    pub name: String,
    pub operator: Matrix,
    pub time_kind: TimeKind,
    /// Continuous testbeds evolve as `du/dt = time_scale * operator * u`.
    pub time_scale: C64,
    pub grid: Grid,
    pub analytic_spectrum: Option<Vec<C64>>,
}

impl Testbed {
    pub fn n(&self) -> usize {
        self.operator.nrows()
    }

    pub fn generator(&self) -> Matrix {
        &self.operator * self.time_scale
    }

    /// One-step map over `dt`: the operator itself for discrete testbeds.
    pub fn propagator(&self, dt: f64) -> Matrix {
        match self.time_kind {
            TimeKind::Discrete => self.operator.clone(),
            TimeKind::Continuous => expm(&(self.generator() * c64(dt, 0.0))),
        }
    }
}

/// Spectral advection operator `u_t + c u_x = 0` on the periodic interval `[-1, 1)`
/// advanced by `dt`.
pub fn advection_testbed(n: usize, c: f64, dt: f64) -> Result<Testbed> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(invalid(format!("advection needs an even n >= 4, got {n}")));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt must be positive"));
    }
    let eigs: Vec<C64> = (0..n)
        .map(|j| C64::from_polar(1.0, -PI * wavenumber(j, n) as f64 * c * dt))
        .collect();
    Ok(Testbed {
        name: "advection".into(),
        operator: circulant_matrix(&eigs),
        time_kind: TimeKind::Discrete,
        time_scale: ONE,
        grid: Grid::uniform_periodic(n, -1.0, 1.0)?,
        analytic_spectrum: Some(eigs),
    })
}

/// Smooth random convection speed `a(x)` built from three Fourier harmonics.
pub fn convection_speed(seed: u64) -> impl Fn(f64) -> f64 {
    let mut g = rng(seed);
    let a0 = normal(&mut g);
    let coef: Vec<(f64, f64)> = (0..3).map(|_| (normal(&mut g), normal(&mut g))).collect();
    move |x| {
        a0 + coef
            .iter()
            .enumerate()
            .map(|(k, (ca, sa))| {
                let w = (k + 1) as f64 * PI * x;
                ca * w.cos() + sa * w.sin()
            })
            .sum::<f64>()
    }
}

/// `u_xx + a(x) u_x` on `n` points `x_i = -1 + 2i/n` with `u_x(-1) = 0` (mirror ghost
/// point) and `u(1) = 0` (eliminated node).
pub fn convection_diffusion_testbed(n: usize, seed: u64) -> Result<Testbed> {
    if n < 8 {
        return Err(invalid(format!("convection-diffusion needs n >= 8, got {n}")));
    }
    let h = 2.0 / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * h).collect();
    let a = convection_speed(seed);
    let mut op = RealMatrix::zeros(n, n);
    let d2 = 1.0 / (h * h);
    op[(0, 0)] = -2.0 * d2;
    op[(0, 1)] = 2.0 * d2;
    for i in 1..n {
        let ai = a(xs[i]) / (2.0 * h);
        op[(i, i - 1)] = d2 - ai;
        op[(i, i)] = -2.0 * d2;
        if i + 1 < n {
            op[(i, i + 1)] = d2 + ai;
        }
    }
    Ok(Testbed {
        name: "convection_diffusion".into(),
        operator: op.map(|v| c64(v, 0.0)),
        time_kind: TimeKind::Continuous,
        time_scale: ONE,
        grid: Grid::new(xs)?,
        analytic_spectrum: None,
    })
}

/// Hamiltonian `-u'' + V u` on the interior points of `[-1, 1]` with hard walls,
/// where `V = depth` outside `|x| < 1/2`; evolves as `i du/dt = H u`.
pub fn schrodinger_well_testbed(n: usize, depth: f64) -> Result<Testbed> {
    if n < 3 {
        return Err(invalid(format!("schrodinger well needs n >= 3, got {n}")));
    }
    if !depth.is_finite() {
        return Err(invalid("well depth must be finite"));
    }
    let h = 2.0 / (n + 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + (i + 1) as f64 * h).collect();
    let d2 = 1.0 / (h * h);
    let mut op = RealMatrix::zeros(n, n);
    for i in 0..n {
        let v = if xs[i].abs() < 0.5 { 0.0 } else { depth };
        op[(i, i)] = 2.0 * d2 + v;
        if i + 1 < n {
            op[(i, i + 1)] = -d2;
            op[(i + 1, i)] = -d2;
        }
    }
    let analytic = (depth == 0.0).then(|| {
        let mut vals: Vec<C64> = (1..=n)
            .map(|k| {
                let s = (k as f64 * PI / (2.0 * (n + 1) as f64)).sin();
                c64(4.0 * d2 * s * s, 0.0)
            })
            .collect();
        vals.reverse();
        vals
    });
    Ok(Testbed {
        name: "schrodinger_well".into(),
        operator: op.map(|v| c64(v, 0.0)),
        time_kind: TimeKind::Continuous,
        time_scale: -I,
        grid: Grid::new(xs)?,
        analytic_spectrum: analytic,
    })
}

fn volterra_kernel(x: f64, v: f64) -> f64 {
    ((1.0 - x * x).max(0.0) * (1.0 - v * v).max(0.0)).sqrt()
}

/// Exact value of `int_{-1}^{x} K(x, v) dv` for the Volterra kernel.
pub fn volterra_row_integral(x: f64) -> f64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    s * (x * s + x.asin() + PI / 2.0) / 2.0
}

/// Trapezoid discretization of `du/dt(x) = int_{-1}^{x} K(x, v) u(v) dv` on `n` points
/// spanning `[-1, 1]`, with state `i` at `x = 1 - 2i/(n-1)` so the matrix is upper
/// triangular. The grid coordinate is `-x`.
pub fn volterra_testbed(n: usize) -> Result<Testbed> {
    if n < 8 {
        return Err(invalid(format!("volterra needs n >= 8, got {n}")));
    }
    let h = 2.0 / (n - 1) as f64;
    let x_of = |i: usize| 1.0 - i as f64 * h;
    let mut op = RealMatrix::zeros(n, n);
    for i in 0..n {
        // integration runs over states i..n-1 (from x_i down to -1)
        if i == n - 1 {
            continue;
        }
        for j in i..n {
            let w = if j == i || j == n - 1 { h / 2.0 } else { h };
            op[(i, j)] = w * volterra_kernel(x_of(i), x_of(j));
        }
    }
    Ok(Testbed {
        name: "volterra".into(),
        operator: op.map(|v| c64(v, 0.0)),
        time_kind: TimeKind::Continuous,
        time_scale: ONE,
        grid: Grid::new((0..n).map(|i| -x_of(i)).collect())?,
        analytic_spectrum: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Unitary,
    Symmetric,
    Skew,
    Circulant,
    Tridiagonal,
    UpperTriangular,
    Toeplitz,
    Hankel,
}

/// Random member of the named matrix family, deterministic per seed. All kinds are
/// real except `Circulant`, whose eigenvalues are random complex numbers.
pub fn random_manifold_operator(kind: ManifoldKind, n: usize, seed: u64) -> Matrix {
    let mut g = rng(seed);
    match kind {
        ManifoldKind::Unitary => {
            let b = gaussian_real(&mut g, n, n);
            let qr = b.qr();
            let (q, r) = (qr.q(), qr.r());
            let mut q = q;
            for j in 0..n {
                if r[(j, j)].re < 0.0 {
                    q.column_mut(j).neg_mut();
                }
            }
            q
        }
        ManifoldKind::Symmetric => {
            let b = gaussian_real(&mut g, n, n);
            (&b + b.transpose()).unscale(2.0)
        }
        ManifoldKind::Skew => {
            let b = gaussian_real(&mut g, n, n);
            (&b - b.transpose()).unscale(2.0)
        }
        ManifoldKind::Circulant => {
            let e = gaussian_complex(&mut g, n, 1);
            circulant_matrix(e.as_slice())
        }
        ManifoldKind::Tridiagonal => {
            let b = gaussian_real(&mut g, n, n);
            Matrix::from_fn(n, n, |i, j| if i.abs_diff(j) <= 1 { b[(i, j)] } else { C64::default() })
        }
        ManifoldKind::UpperTriangular => {
            let b = gaussian_real(&mut g, n, n);
            b.upper_triangle()
        }
        ManifoldKind::Toeplitz => {
            let c = gaussian_real(&mut g, 2 * n - 1, 1);
            Matrix::from_fn(n, n, |i, j| c[i + n - 1 - j])
        }
        ManifoldKind::Hankel => {
            let c = gaussian_real(&mut g, 2 * n - 1, 1);
            Matrix::from_fn(n, n, |i, j| c[i + j])
        }
    }
}

/// Trajectory of `m` columns starting at `x0` under a fixed one-step map.
pub fn iterate(step: &Matrix, x0: &Vector, m: usize) -> Result<Matrix> {
    if step.nrows() != x0.len() {
        return Err(mismatch(format!(
            "operator is {}x{} but initial state has length {}",
            step.nrows(),
            step.ncols(),
            x0.len()
        )));
    }
    let mut out = Matrix::zeros(x0.len(), m);
    if m == 0 {
        return Ok(out);
    }
    out.set_column(0, x0);
    for j in 1..m {
        let next = step * out.column(j - 1);
        out.set_column(j, &next);
    }
    Ok(out)
}

pub fn evolve(testbed: &Testbed, x0: &Vector, m: usize, dt: f64) -> Result<Matrix> {
    if testbed.time_kind == TimeKind::Continuous && !(dt > 0.0) {
        return Err(invalid("continuous evolution needs dt > 0"));
    }
    iterate(&testbed.propagator(dt), x0, m)
}
