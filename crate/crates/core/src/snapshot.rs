//! Snapshot matrices, pairing, noise injection and CSV I/O.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, PidmdError, Result};
use crate::linalg::{all_finite, c64, is_real, Matrix, C64};
use crate::random::{normal, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    Discrete,
    Derivative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeKind {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    periodic: bool,
    origin: f64,
    period_length: f64,
}

impl Grid {
    /// Non-periodic grid from strictly increasing points.
    pub fn new(points: Vec<f64>) -> Result<Grid> {
        check_increasing(&points)?;
        let origin = points[0];
        let span = points[points.len() - 1] - origin;
        Ok(Grid {
            points,
            periodic: false,
            origin,
            period_length: span,
        })
    }

    /// Periodic grid; every point must lie in `[origin, origin + period_length)`.
    pub fn periodic(points: Vec<f64>, origin: f64, period_length: f64) -> Result<Grid> {
        check_increasing(&points)?;
        if !(period_length > 0.0) {
            return Err(invalid("period length must be positive"));
        }
        if points[0] < origin || points[points.len() - 1] >= origin + period_length {
            return Err(invalid("periodic grid points must lie in [origin, origin + period)"));
        }
        Ok(Grid {
            points,
            periodic: true,
            origin,
            period_length,
        })
    }

    /// `n` evenly spaced points on the periodic interval `[a, b)`.
    pub fn uniform_periodic(n: usize, a: f64, b: f64) -> Result<Grid> {
        if n == 0 {
            return Err(invalid("grid needs at least one point"));
        }
        let h = (b - a) / n as f64;
        Grid::periodic((0..n).map(|i| a + i as f64 * h).collect(), a, b - a)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn period_length(&self) -> f64 {
        self.period_length
    }
}

fn check_increasing(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(PidmdError::EmptyInput);
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(invalid("grid points must be finite"));
    }
    if points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("grid points must be strictly increasing"));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SnapshotPair {
    pub x: Matrix,
    pub y: Matrix,
    pub pairing: Pairing,
    pub dt: f64,
    pub grid: Option<Grid>,
}

impl SnapshotPair {
    pub fn new(x: Matrix, y: Matrix) -> Result<SnapshotPair> {
        if x.shape() != y.shape() {
            return Err(mismatch(format!(
                "X is {}x{} but Y is {}x{}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(PidmdError::EmptyInput);
        }
        if !all_finite(&x) || !all_finite(&y) {
            return Err(invalid("snapshot entries must be finite"));
        }
        Ok(SnapshotPair {
            x,
            y,
            pairing: Pairing::Discrete,
            dt: 1.0,
            grid: None,
        })
    }

    pub fn with_pairing(mut self, pairing: Pairing, dt: f64) -> Self {
        self.pairing = pairing;
        self.dt = dt;
        self
    }

    pub fn with_grid(mut self, grid: Grid) -> Result<Self> {
        if grid.len() != self.n() {
            return Err(mismatch(format!(
                "grid has {} points but snapshots have {} states",
                grid.len(),
                self.n()
            )));
        }
        self.grid = Some(grid);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_real(&self) -> bool {
        is_real(&self.x) && is_real(&self.y)
    }

    /// Side-by-side concatenation of pairs sharing state dimension and pairing.
    pub fn concat(pairs: &[SnapshotPair]) -> Result<SnapshotPair> {
        let first = pairs.first().ok_or(PidmdError::EmptyInput)?;
        let n = first.n();
        if pairs.iter().any(|p| p.n() != n || p.pairing != first.pairing) {
            return Err(mismatch("pairs must share state dimension and pairing"));
        }
        let m: usize = pairs.iter().map(|p| p.m()).sum();
        let mut x = Matrix::zeros(n, m);
        let mut y = Matrix::zeros(n, m);
        let mut at = 0;
        for p in pairs {
            x.columns_mut(at, p.m()).copy_from(&p.x);
            y.columns_mut(at, p.m()).copy_from(&p.y);
            at += p.m();
        }
        Ok(SnapshotPair {
            x,
            y,
            pairing: first.pairing,
            dt: first.dt,
            grid: first.grid.clone(),
        })
    }
}

pub fn make_snapshot_pairs(series: &Matrix, pairing: Pairing, dt: f64) -> Result<SnapshotPair> {
    let m = series.ncols();
    if m < 3 {
        return Err(PidmdError::InsufficientSnapshots { needed: 3, got: m });
    }
    match pairing {
        Pairing::Discrete => {
            let x = series.columns(0, m - 1).into_owned();
            let y = series.columns(1, m - 1).into_owned();
            Ok(SnapshotPair::new(x, y)?.with_pairing(Pairing::Discrete, dt))
        }
        Pairing::Derivative => {
            if !(dt > 0.0) {
                return Err(invalid("derivative pairing needs dt > 0"));
            }
            let x = series.columns(1, m - 2).into_owned();
            let fwd = series.columns(2, m - 2);
            let bwd = series.columns(0, m - 2);
            let y = (fwd - bwd).unscale(2.0 * dt);
            Ok(SnapshotPair::new(x, y)?.with_pairing(Pairing::Derivative, dt))
        }
    }
}

fn rms(m: &Matrix) -> f64 {
    let count = (m.nrows() * m.ncols()).max(1) as f64;
    (m.norm_squared() / count).sqrt()
}

/// `m + level * rms(m) * G` with `G` standard normal, complex for complex `m`.
pub fn add_gaussian_noise(m: &Matrix, level: f64, seed: u64) -> Result<Matrix> {
    if !(level >= 0.0) || !level.is_finite() {
        return Err(invalid(format!("noise level must be non-negative, got {level}")));
    }
    if level == 0.0 {
        return Ok(m.clone());
    }
    let scale = level * rms(m);
    let complex = !is_real(m);
    let mut g = rng(seed);
    let mut out = m.clone();
    if complex {
        let s = scale * std::f64::consts::FRAC_1_SQRT_2;
        for z in out.iter_mut() {
            *z += c64(s * normal(&mut g), s * normal(&mut g));
        }
    } else {
        for z in out.iter_mut() {
            z.re += scale * normal(&mut g);
        }
    }
    Ok(out)
}

pub fn parse_token(token: &str) -> std::result::Result<C64, String> {
    let t = token.trim();
    if t.is_empty() {
        return Err("empty token".into());
    }
    let finite = |v: f64| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite value '{t}'"))
        }
    };
    let Some(body) = t.strip_suffix('i') else {
        let v: f64 = t.parse().map_err(|_| format!("cannot parse '{t}'"))?;
        return Ok(c64(finite(v)?, 0.0));
    };
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re_part, im_part) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let im = match im_part {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => s.parse().map_err(|_| format!("cannot parse imaginary part of '{t}'"))?,
    };
    let re = if re_part.is_empty() {
        0.0
    } else {
        re_part
            .parse()
            .map_err(|_| format!("cannot parse real part of '{t}'"))?
    };
    Ok(c64(finite(re)?, finite(im)?))
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (col, tok) in line.split(',').enumerate() {
            let z = parse_token(tok).map_err(|message| PidmdError::Parse {
                line: lineno + 1,
                column: col + 1,
                message,
            })?;
            row.push(z);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(PidmdError::Parse {
                    line: lineno + 1,
                    column: row.len().min(first.len()) + 1,
                    message: format!("expected {} tokens, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(PidmdError::EmptyInput);
    }
    let (n, m) = (rows.len(), rows[0].len());
    Ok(Matrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&text)
}

fn format_real(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn format_token(z: C64) -> String {
    if z.im == 0.0 {
        return format_real(z.re);
    }
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", format_real(z.re), sign, format_real(z.im.abs()))
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_token(m[(i, j)]));
        }
        let _ = writeln!(out);
    }
    out
}

pub fn save_matrix(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_matrix(m))?;
    Ok(())
}
