//! Each check fits one solver on seeded random data and compares it with the
//! brute-force parameterized least-squares solution.

use pidmd::causal::{Orientation, TriangularMethod};
use pidmd::linalg::{Matrix, RealMatrix};
use pidmd::local::{fit_banded, LocalityPenalty};
use pidmd::random::{rng, uniform};
use pidmd::selfadjoint::SymmetryKind;
use pidmd::shift_invariant::{CirculantVariant, ToeplitzFlavor};
use pidmd::snapshot::Grid;
use pidmd::{fit, ManifoldSpec, SnapshotPair};
use rand::Rng;

use super::*;

pub const TOL: f64 = 1e-6;

struct Case {
    pair: SnapshotPair,
    n: usize,
    seed: u64,
}

/// `n` in `lo..=hi_n`, `m` in `n..=hi_m`, complex data on odd seeds.
fn case(seed: u64, lo: usize, hi_n: usize, hi_m: usize) -> Case {
    let mut g = rng(seed ^ 0x5eed);
    let n = g.random_range(lo..=hi_n);
    let m = g.random_range(n..=hi_m);
    Case {
        pair: random_pair(seed, n, m, seed % 2 == 1),
        n,
        seed,
    }
}

fn compare(label: &str, c: &Case, fitted: &Matrix, basis: &[Matrix], penalty: Option<&[f64]>) -> Result<(), String> {
    let want = real_param_lstsq(basis, &c.pair.x, &c.pair.y, penalty);
    let err = rel_to_oracle(fitted, &want, &c.pair);
    ensure(err <= TOL, || {
        format!("{label}: seed {} n {} m {} relative error {err:.3e}", c.seed, c.n, c.pair.m())
    })
}

fn fitted(c: &Case, spec: ManifoldSpec) -> Result<Matrix, String> {
    fit(&c.pair, &spec).map(|m| m.materialize()).map_err(|e| format!("seed {}: {e}", c.seed))
}

pub fn circulant_plain(seed: u64) -> Result<(), String> {
    let c = case(seed, 2, 8, 12);
    let a = fitted(&c, ManifoldSpec::Circulant { variant: CirculantVariant::Plain })?;
    compare("circulant", &c, &a, &circulant_basis(c.n), None)
}

pub fn circulant_symmetric(seed: u64) -> Result<(), String> {
    let c = case(seed, 2, 8, 12);
    let a = fitted(&c, ManifoldSpec::Circulant { variant: CirculantVariant::Symmetric })?;
    compare("symmetric circulant", &c, &a, &hermitian_circulant_basis(c.n, false), None)
}

pub fn circulant_skew(seed: u64) -> Result<(), String> {
    let c = case(seed, 2, 8, 12);
    let a = fitted(&c, ManifoldSpec::Circulant { variant: CirculantVariant::Skew })?;
    compare("skew circulant", &c, &a, &hermitian_circulant_basis(c.n, true), None)
}

pub fn toeplitz(seed: u64) -> Result<(), String> {
    let c = case(seed, 2, 8, 12);
    let a = fitted(&c, ManifoldSpec::Toeplitz { flavor: ToeplitzFlavor::Toeplitz })?;
    compare("toeplitz", &c, &a, &toeplitz_basis(c.n, false), None)
}

pub fn hankel(seed: u64) -> Result<(), String> {
    let c = case(seed, 2, 8, 12);
    let a = fitted(&c, ManifoldSpec::Toeplitz { flavor: ToeplitzFlavor::Hankel })?;
    compare("hankel", &c, &a, &toeplitz_basis(c.n, true), None)
}

/// No convex parameterization exists, so recover a known unitary from clean data.
pub fn unitary(seed: u64) -> Result<(), String> {
    let mut g = rng(seed);
    let n = g.random_range(1..=8);
    let m = g.random_range(n..=12);
    let q = random_unitary(&mut g, n);
    let x = random_data(&mut g, n, m, true);
    let pair = SnapshotPair::new(x.clone(), &q * &x).unwrap();
    let a = fit(&pair, &ManifoldSpec::Unitary { pod_rank: None })
        .map_err(|e| e.to_string())?
        .materialize();
    let err = rel(&a, &q);
    ensure(err <= 1e-8, || format!("unitary: seed {seed} n {n} m {m} relative error {err:.3e}"))
}

pub fn symmetric(seed: u64) -> Result<(), String> {
    let c = case(seed, 1, 6, 10);
    let a = fitted(&c, ManifoldSpec::Symmetric { kind: SymmetryKind::Symmetric, rank: None })?;
    compare("symmetric", &c, &a, &hermitian_basis(c.n, false), None)
}

pub fn skew(seed: u64) -> Result<(), String> {
    let c = case(seed, 1, 6, 10);
    let a = fitted(&c, ManifoldSpec::Symmetric { kind: SymmetryKind::Skew, rank: None })?;
    compare("skew", &c, &a, &hermitian_basis(c.n, true), None)
}

pub fn tridiagonal(seed: u64) -> Result<(), String> {
    let c = case(seed, 3, 6, 10);
    let periodic = seed.is_multiple_of(3);
    let a = fitted(&c, ManifoldSpec::Tridiagonal { periodic })?;
    let ones = vec![1; c.n];
    compare("tridiagonal", &c, &a, &entry_basis(c.n, &band_entries(c.n, &ones, &ones, periodic)), None)
}

pub fn banded(seed: u64) -> Result<(), String> {
    let c = case(seed, 2, 6, 10);
    let mut g = rng(seed ^ 0xba4d);
    let lower: Vec<usize> = (0..c.n).map(|_| g.random_range(0..c.n)).collect();
    let upper: Vec<usize> = (0..c.n).map(|_| g.random_range(0..c.n)).collect();
    let a = fit_banded(&c.pair, &lower, &upper, false)
        .map_err(|e| e.to_string())?
        .materialize();
    compare("banded", &c, &a, &entry_basis(c.n, &band_entries(c.n, &lower, &upper, false)), None)
}

pub fn symmetric_tridiagonal(seed: u64) -> Result<(), String> {
    let c = case(seed, 2, 6, 10);
    let a = fitted(&c, ManifoldSpec::SymmetricTridiagonal)?;
    compare("symmetric tridiagonal", &c, &a, &symmetric_tridiagonal_basis(c.n), None)
}

pub fn regularized_local(seed: u64) -> Result<(), String> {
    let c = case(seed, 2, 6, 10);
    let mut g = rng(seed ^ 0x10ca1);
    let sigma = uniform(&mut g, 0.2, 1.0);
    let lambda = uniform(&mut g, 0.01, 2.0);
    let n = c.n;
    let a = fitted(&c, ManifoldSpec::RegularizedLocal { sigma, lambda, allow_large: false })?;
    // default grid: i / n, not periodic
    let h = RealMatrix::from_fn(n, n, |i, j| ((i.abs_diff(j) as f64 / n as f64) / (2.0 * sigma * sigma)).exp());
    let lib = LocalityPenalty::kernel(&Grid::new((0..n).map(|i| i as f64 / n as f64).collect()).unwrap(), sigma, lambda)
        .map_err(|e| e.to_string())?;
    ensure((lib.weights() - &h).abs().max() <= 1e-12 * h.max(), || format!("kernel weights differ, seed {seed}"))?;
    let entries: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let penalty: Vec<f64> = entries.iter().flat_map(|&(i, j)| [lambda * h[(i, j)]; 2]).collect();
    compare("regularized local", &c, &a, &entry_basis(n, &entries), Some(&penalty))
}

fn triangular(seed: u64, method: TriangularMethod, orientation: Orientation) -> Result<(), String> {
    let c = case(seed, 1, 8, 12);
    let a = fitted(&c, ManifoldSpec::Triangular { method, orientation })?;
    let mut entries = upper_entries(c.n);
    if orientation == Orientation::Lower {
        entries = entries.into_iter().map(|(i, j)| (j, i)).collect();
    }
    compare(&format!("triangular {method:?} {orientation:?}"), &c, &a, &entry_basis(c.n, &entries), None)
}

pub fn triangular_naive(seed: u64) -> Result<(), String> {
    triangular(seed, TriangularMethod::Naive, Orientation::Upper)
}

pub fn triangular_fast(seed: u64) -> Result<(), String> {
    triangular(seed, TriangularMethod::FastUpdate, Orientation::Upper)
}

pub fn triangular_rq(seed: u64) -> Result<(), String> {
    triangular(seed, TriangularMethod::RqStable, Orientation::Upper)
}

pub fn triangular_rq_lower(seed: u64) -> Result<(), String> {
    triangular(seed, TriangularMethod::RqStable, Orientation::Lower)
}

pub const ALL: &[(&str, Check)] = &[
    ("circulant plain", circulant_plain),
    ("circulant symmetric", circulant_symmetric),
    ("circulant skew", circulant_skew),
    ("toeplitz", toeplitz),
    ("hankel", hankel),
    ("unitary", unitary),
    ("symmetric", symmetric),
    ("skew", skew),
    ("tridiagonal", tridiagonal),
    ("banded", banded),
    ("symmetric tridiagonal", symmetric_tridiagonal),
    ("regularized local", regularized_local),
    ("triangular naive", triangular_naive),
    ("triangular fast update", triangular_fast),
    ("triangular rq stable", triangular_rq),
    ("lower triangular rq stable", triangular_rq_lower),
];
