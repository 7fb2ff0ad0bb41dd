//! Seeded property checks, one per module invariant. Each returns a description
//! of the first violation it finds.

use std::path::Path;
use std::process::Command;

use pidmd::causal::{fit_triangular, Orientation, TriangularMethod};
use pidmd::conservative::fit_unitary;
use pidmd::diagnostics::{nearest_on_manifold, predict, residual, resolvent_modes};
use pidmd::exact_dmd::fit_exact;
use pidmd::flags::RowFlag;
use pidmd::linalg::{c64, condition_number, eig, rq, Matrix, Vector, C64};
use pidmd::local::{fit_banded, fit_tridiagonal};
use pidmd::model::DenseModel;
use pidmd::random::{gaussian_complex, gaussian_real, rng, uniform};
use pidmd::selfadjoint::{fit_symmetric, variance_profile, SymmetryKind, VarianceKind};
use pidmd::shift_invariant::{fit_circulant, CirculantVariant, ToeplitzFlavor};
use pidmd::snapshot::{add_gaussian_noise, format_matrix, load_matrix, make_snapshot_pairs, parse_matrix, save_matrix};
use pidmd::testbeds::{
    advection_testbed, convection_diffusion_testbed, evolve, iterate, random_manifold_operator, ManifoldKind,
};
use pidmd::{fit, ManifoldSpec, Pairing, PiDmdModel, SnapshotPair, TimeKind};
use rand::seq::SliceRandom;
use rand::Rng;

use super::*;

fn dims(seed: u64, lo: usize, hi_n: usize, hi_m: usize) -> (usize, usize) {
    let mut g = rng(seed ^ 0xd1);
    let n = g.random_range(lo..=hi_n);
    (n, g.random_range(2..=hi_m.max(2)))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

// ---- snapshot_core

pub fn save_load_identity(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 10, 10);
    let mut g = rng(seed);
    let mut a = random_data(&mut g, n, m, seed.is_multiple_of(2));
    for z in a.iter_mut() {
        let scale = 10f64.powf(uniform(&mut g, -8.0, 8.0));
        *z *= c64(scale, 0.0);
    }
    let dir = tempfile::tempdir().map_err(err)?;
    let path = dir.path().join("a.csv");
    save_matrix(&a, &path).map_err(err)?;
    let back = load_matrix(&path).map_err(err)?;
    ensure(back == a, || format!("file round trip changed entries, seed {seed}"))?;
    let back = parse_matrix(&format_matrix(&a)).map_err(err)?;
    ensure(back == a, || format!("text round trip changed entries, seed {seed}"))
}

pub fn discrete_pairing_shift(seed: u64) -> Result<(), String> {
    let (n, _) = dims(seed, 1, 10, 1);
    let m = rng(seed).random_range(3..20);
    let s = random_data(&mut rng(seed), n, m, seed % 2 == 1);
    let p = make_snapshot_pairs(&s, Pairing::Discrete, 1.0).map_err(err)?;
    for j in 0..p.m() - 1 {
        ensure(p.x.column(j + 1) == p.y.column(j), || format!("column {j} breaks the shift, seed {seed}"))?;
    }
    Ok(())
}

pub fn noise_seeds_differ(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 10, 10);
    let mut g = rng(seed);
    let a = random_data(&mut g, n, m, seed % 2 == 1);
    let level = uniform(&mut g, 1e-3, 1.0);
    let one = add_gaussian_noise(&a, level, seed).map_err(err)?;
    let two = add_gaussian_noise(&a, level, seed.wrapping_add(1)).map_err(err)?;
    ensure(one != two, || format!("seeds {seed} and {} gave identical noise", seed.wrapping_add(1)))
}

// ---- testbeds

pub fn analytic_spectrum_matches(seed: u64) -> Result<(), String> {
    let mut g = rng(seed);
    let n = 2 * g.random_range(2..=32);
    let c = uniform(&mut g, -2.0, 2.0);
    let dt = uniform(&mut g, 0.01, 0.5);
    let tb = advection_testbed(n, c, dt).map_err(err)?;
    let analytic = tb.analytic_spectrum.clone().ok_or("advection lacks its spectrum")?;
    let (computed, _) = eig(&tb.operator).map_err(err)?;
    let gap = multiset_gap(&analytic, &computed);
    ensure(gap <= 1e-10, || format!("advection n {n}: eigenvalue gap {gap:.3e}"))
}

pub fn evolve_discrete_steps(seed: u64) -> Result<(), String> {
    let mut g = rng(seed);
    let n = 2 * g.random_range(2..=16);
    let tb = advection_testbed(n, uniform(&mut g, -1.0, 1.0), 0.1).map_err(err)?;
    let x0 = gaussian_complex(&mut g, n, 1).column(0).into_owned();
    let traj = evolve(&tb, &x0, 12, 0.1).map_err(err)?;
    let step = random_manifold_operator(ManifoldKind::Toeplitz, n, seed);
    let other = iterate(&step, &x0, 12).map_err(err)?;
    for (a, t) in [(&tb.operator, &traj), (&step, &other)] {
        for j in 0..t.ncols() - 1 {
            let next = a * t.column(j);
            ensure(t.column(j + 1) == next, || format!("step {j} is not A times the previous column, seed {seed}"))?;
        }
    }
    Ok(())
}

pub fn generators_deterministic(seed: u64) -> Result<(), String> {
    let n = 8 + (seed % 8) as usize;
    for kind in [
        ManifoldKind::Unitary,
        ManifoldKind::Symmetric,
        ManifoldKind::Skew,
        ManifoldKind::Circulant,
        ManifoldKind::Tridiagonal,
        ManifoldKind::UpperTriangular,
        ManifoldKind::Toeplitz,
        ManifoldKind::Hankel,
    ] {
        ensure(random_manifold_operator(kind, n, seed) == random_manifold_operator(kind, n, seed), || {
            format!("{kind:?} not deterministic, seed {seed}")
        })?;
    }
    let a = convection_diffusion_testbed(n, seed).map_err(err)?;
    let b = convection_diffusion_testbed(n, seed).map_err(err)?;
    ensure(a.operator == b.operator, || format!("convection-diffusion not deterministic, seed {seed}"))?;
    let x = gaussian_real(&mut rng(seed), n, 5);
    ensure(gaussian_real(&mut rng(seed), n, 5) == x, || "gaussian draws not deterministic".into())?;
    let noisy = add_gaussian_noise(&x, 0.1, seed).map_err(err)?;
    ensure(add_gaussian_noise(&x, 0.1, seed).map_err(err)? == noisy, || "noise not deterministic".into())
}

// ---- exact_dmd

pub fn exact_residual_nonincreasing(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 2, 10, 14);
    let mut g = rng(seed);
    let a = random_data(&mut g, n, n, seed % 2 == 1);
    let x = random_data(&mut g, n, m, seed % 2 == 1);
    let pair = SnapshotPair::new(x.clone(), &a * &x).unwrap();
    let mut prev = f64::INFINITY;
    for r in 1..=n.min(m) {
        let model = fit_exact(&pair, r).map_err(err)?;
        let res = (&pair.y - model.projected_operator() * &pair.x).norm();
        ensure(res <= prev + 1e-12 * pair.y.norm(), || {
            format!("residual rose from {prev:.6e} to {res:.6e} at rank {r}, seed {seed}")
        })?;
        prev = res;
    }
    Ok(())
}

pub fn exact_eigs_unitary_invariant(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 8, 12);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let r = rng(seed ^ 7).random_range(1..=n.min(m));
    let w = random_unitary(&mut rng(seed ^ 11), n);
    let moved = SnapshotPair::new(&w * &pair.x, &w * &pair.y).unwrap();
    let a = fit_exact(&pair, r).map_err(err)?.eigenvalues;
    let b = fit_exact(&moved, r).map_err(err)?.eigenvalues;
    let gap = multiset_gap(&a, &b);
    ensure(gap <= 1e-10, || format!("eigenvalues moved by {gap:.3e}, n {n} m {m} r {r}, seed {seed}"))
}

// ---- shift_invariant

fn circulant_variants(n: usize, seed: u64) -> Vec<CirculantVariant> {
    vec![
        CirculantVariant::Symmetric,
        CirculantVariant::Skew,
        CirculantVariant::Unitary,
        CirculantVariant::LowRank {
            rank: rng(seed).random_range(1..=n),
        },
        CirculantVariant::Tls,
    ]
}

pub fn circulant_variants_never_beat_plain(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 12, 12);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let plain = fit_circulant(&pair, CirculantVariant::Plain).map_err(err)?.residual(&pair);
    for v in circulant_variants(n, seed) {
        let r = fit_circulant(&pair, v).map_err(err)?.residual(&pair);
        ensure(r >= plain - 1e-12, || format!("{v:?} residual {r:.6e} below plain {plain:.6e}, seed {seed}"))?;
    }
    Ok(())
}

pub fn circulant_constant_diagonals(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 12, 12);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let mut variants = circulant_variants(n, seed);
    variants.push(CirculantVariant::Plain);
    for v in variants {
        let a = fit_circulant(&pair, v).map_err(err)?.materialize();
        let tol = 1e-12 * a.norm();
        for i in 0..n {
            for j in 0..n {
                let d = (a[(i, j)] - a[((i + 1) % n, (j + 1) % n)]).norm();
                ensure(d <= tol, || format!("{v:?}: diagonal deviation {d:.3e} at ({i},{j}), seed {seed}"))?;
            }
        }
    }
    Ok(())
}

pub fn circulant_unitary_radius(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 16, 12);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let model = fit_circulant(&pair, CirculantVariant::Unitary).map_err(err)?;
    let radius = model
        .eigenvalues
        .iter()
        .zip(&model.flags)
        .filter(|(_, f)| **f == RowFlag::Ok)
        .map(|(l, _)| l.norm())
        .fold(0.0, f64::max);
    ensure((radius - 1.0).abs() <= 4.0 * f64::EPSILON, || format!("spectral radius {radius:.17}, seed {seed}"))
}

// ---- conservative

fn noisy_unitary_pair(seed: u64, n: usize, m: usize, noise: f64) -> (Matrix, SnapshotPair) {
    let mut g = rng(seed);
    let q = random_unitary(&mut g, n);
    let x = gaussian_complex(&mut g, n, m);
    let y = &q * &x;
    let x = add_gaussian_noise(&x, noise, seed ^ 1).unwrap();
    let y = add_gaussian_noise(&y, noise, seed ^ 2).unwrap();
    (q, SnapshotPair::new(x, y).unwrap())
}

pub fn unitary_spectrum_on_circle(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 12, 16);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let a = fit_unitary(&pair, None).map_err(err)?.materialize();
    let (vals, _) = eig(&a).map_err(err)?;
    for l in vals {
        ensure((l.norm() - 1.0).abs() <= 1e-10, || format!("|lambda| = {:.12}, seed {seed}", l.norm()))?;
    }
    Ok(())
}

pub fn unitary_preserves_norm(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 12, 16);
    let (_, pair) = noisy_unitary_pair(seed, n, m, 0.1);
    let model = fit_unitary(&pair, None).map_err(err)?;
    let xs = gaussian_complex(&mut rng(seed ^ 3), n, 100);
    let ax = model.apply(&xs);
    for j in 0..100 {
        let (before, after) = (xs.column(j).norm(), ax.column(j).norm());
        ensure((after - before).abs() <= 1e-10 * before, || format!("norm {before} became {after}, seed {seed}"))?;
    }
    Ok(())
}

pub fn unitary_residual_bound(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 12, 16);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let r = (&pair.y - fit_unitary(&pair, None).map_err(err)?.apply(&pair.x)).norm();
    let free = unconstrained_residual(&pair);
    ensure(r >= free - 1e-12, || format!("unitary residual {r:.6e} below unconstrained {free:.6e}, seed {seed}"))
}

/// Noise on both sides: the Procrustes fit lands closer to the truth on average than
/// exact DMD projected onto the unitary group afterwards.
pub fn unitary_noise_symmetry(seed: u64) -> Result<(), String> {
    let (n, m) = (6, 12);
    let mut g = rng(seed);
    let q = random_unitary(&mut g, n);
    // anisotropic snapshots so the errors-in-variables bias is not a plain rescaling
    let scales: Vec<f64> = (0..n).map(|i| 0.5f64.powi(i as i32)).collect();
    let (mut procrustes, mut projected) = (0.0, 0.0);
    let trials = 200;
    for _ in 0..trials {
        let mut x = gaussian_complex(&mut g, n, m);
        for i in 0..n {
            x.row_mut(i).scale_mut(scales[i]);
        }
        let y = &q * &x;
        let sigma = 0.2;
        let x = &x + gaussian_complex(&mut g, n, m) * c64(sigma, 0.0);
        let y = &y + gaussian_complex(&mut g, n, m) * c64(sigma, 0.0);
        let pair = SnapshotPair::new(x, y).unwrap();
        procrustes += (fit_unitary(&pair, None).map_err(err)?.materialize() - &q).norm();
        let exact = fit_exact(&pair, n).map_err(err)?.operator();
        let snapped = nearest_on_manifold(&exact, &ManifoldSpec::Unitary { pod_rank: None }).map_err(err)?;
        projected += (snapped.materialize() - &q).norm();
    }
    let (a, b) = (procrustes / trials as f64, projected / trials as f64);
    ensure(a < b, || format!("mean error {a:.4} for the unitary fit vs {b:.4} for projected exact DMD, seed {seed}"))
}

// ---- selfadjoint

pub fn selfadjoint_spectrum(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 10, 12);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let rank = if seed.is_multiple_of(3) { Some(rng(seed).random_range(1..=n.min(m))) } else { None };
    for kind in [SymmetryKind::Symmetric, SymmetryKind::Skew] {
        let a = fit_symmetric(&pair, kind, rank).map_err(err)?.materialize();
        for l in eig(&a).map_err(err)?.0 {
            let off = match kind {
                SymmetryKind::Symmetric => l.im.abs(),
                SymmetryKind::Skew => l.re.abs(),
            };
            ensure(off <= 1e-10, || format!("{kind:?} eigenvalue {l}, seed {seed}"))?;
        }
    }
    Ok(())
}

pub fn variance_profile_ordering(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 12, 16);
    let x = gaussian_real(&mut rng(seed), n, m);
    let r = rng(seed ^ 5).random_range(1..=n.min(m));
    let e = variance_profile(&x, r, VarianceKind::Exact).map_err(err)?;
    let s = variance_profile(&x, r, VarianceKind::Symmetric).map_err(err)?;
    for i in 0..n {
        for j in 0..n {
            ensure(s[(i, j)] <= e[(i, j)] * (1.0 + 1e-12), || {
                format!("Var_s {:.6e} > Var_e {:.6e} at ({i},{j}), seed {seed}", s[(i, j)], e[(i, j)])
            })?;
        }
    }
    Ok(())
}

// ---- local

pub fn banded_zero_pattern(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 2, 10, 12);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let mut g = rng(seed ^ 9);
    let lower: Vec<usize> = (0..n).map(|_| g.random_range(0..n)).collect();
    let upper: Vec<usize> = (0..n).map(|_| g.random_range(0..n)).collect();
    let a = fit_banded(&pair, &lower, &upper, false).map_err(err)?.materialize();
    for i in 0..n {
        for j in 0..n {
            let inside = j + lower[i] >= i && j <= i + upper[i];
            ensure(inside || a[(i, j)] == C64::new(0.0, 0.0), || format!("nonzero at ({i},{j}), seed {seed}"))?;
        }
    }
    Ok(())
}

fn row_residuals(a: &Matrix, pair: &SnapshotPair) -> Vec<f64> {
    let r = &pair.y - a * &pair.x;
    (0..r.nrows()).map(|i| r.row(i).norm()).collect()
}

pub fn banded_widening_monotone(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 2, 10, 12);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let mut g = rng(seed ^ 13);
    let lower: Vec<usize> = (0..n).map(|_| g.random_range(0..n)).collect();
    let upper: Vec<usize> = (0..n).map(|_| g.random_range(0..n)).collect();
    let wider_lower: Vec<usize> = lower.iter().map(|&l| (l + g.random_range(0..=1)).min(n - 1)).collect();
    let wider_upper: Vec<usize> = upper.iter().map(|&u| (u + g.random_range(0..=1)).min(n - 1)).collect();
    let narrow = row_residuals(&fit_banded(&pair, &lower, &upper, false).map_err(err)?.materialize(), &pair);
    let wide = row_residuals(&fit_banded(&pair, &wider_lower, &wider_upper, false).map_err(err)?.materialize(), &pair);
    for i in 0..n {
        ensure(wide[i] <= narrow[i] + 1e-12, || {
            format!("row {i}: widening raised the residual {:.6e} -> {:.6e}, seed {seed}", narrow[i], wide[i])
        })?;
    }
    Ok(())
}

pub fn row_shuffle_hurts_locality(seed: u64) -> Result<(), String> {
    let n = 32;
    let tb = convection_diffusion_testbed(n, seed).map_err(err)?;
    let x0 = gaussian_real(&mut rng(seed), n, 1).column(0).into_owned();
    let dt = 1e-5;
    let series = evolve(&tb, &x0, 80, dt).map_err(err)?;
    let pair = make_snapshot_pairs(&series, Pairing::Derivative, dt).map_err(err)?;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng(seed ^ 17));
    let shuffle = |m: &Matrix| Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(perm[i], j)]);
    let shuffled = SnapshotPair::new(shuffle(&pair.x), shuffle(&pair.y)).unwrap();
    let model = PiDmdModel::Banded(fit_tridiagonal(&pair, false).map_err(err)?);
    let moved = PiDmdModel::Banded(fit_tridiagonal(&shuffled, false).map_err(err)?);
    let (a, b) = (residual(&model, &pair).map_err(err)?, residual(&moved, &shuffled).map_err(err)?);
    ensure(a < b, || format!("residual {a:.6e} on the grid vs {b:.6e} shuffled, seed {seed}"))
}

// ---- causal

pub fn rq_identity(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 10, 12);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let a = fit_triangular(&pair, TriangularMethod::RqStable).map_err(err)?.materialize();
    let f = rq(&pair.x);
    let lhs = (&pair.y - &a * &pair.x).norm_squared();
    let yq = &pair.y * f.q.adjoint();
    let rhs = pair.y.norm_squared() - yq.norm_squared() + (&yq - &a * &f.r).norm_squared();
    ensure((lhs - rhs).abs() <= 1e-8 * lhs.max(pair.y.norm_squared() * 1e-3), || {
        format!("identity off: {lhs:.10e} vs {rhs:.10e}, seed {seed}")
    })
}

pub fn triangular_residual_bound(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 10, 12);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let free = unconstrained_residual(&pair);
    for method in [TriangularMethod::Naive, TriangularMethod::FastUpdate, TriangularMethod::RqStable] {
        let r = (&pair.y - fit_triangular(&pair, method).map_err(err)?.apply(&pair.x)).norm();
        ensure(r >= free - 1e-12, || format!("{method:?} residual {r:.6e} below {free:.6e}, seed {seed}"))?;
    }
    Ok(())
}

/// Asserted only while `X` is well conditioned; beyond that the update is allowed to drift.
pub fn fast_update_vs_naive(seed: u64) -> Result<(), String> {
    let (n, m) = dims(seed, 1, 16, 20);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let kappa = condition_number(&pair.x);
    let naive = fit_triangular(&pair, TriangularMethod::Naive).map_err(err)?.materialize();
    let fast = fit_triangular(&pair, TriangularMethod::FastUpdate).map_err(err)?.materialize();
    let d = rel(&fast, &naive);
    if kappa > 1e6 {
        return Ok(());
    }
    ensure(d <= 1e-6, || format!("fast update differs by {d:.3e} at condition {kappa:.3e}, seed {seed}"))
}

// ---- diagnostics

fn all_specs(n: usize, m: usize, seed: u64) -> Vec<ManifoldSpec> {
    let mut g = rng(seed ^ 21);
    let r = g.random_range(1..=n.min(m));
    let mut specs = vec![
        ManifoldSpec::Exact { rank: r },
        ManifoldSpec::Exact { rank: n.min(m) },
        ManifoldSpec::Circulant { variant: CirculantVariant::Plain },
        ManifoldSpec::Circulant { variant: CirculantVariant::Symmetric },
        ManifoldSpec::Circulant { variant: CirculantVariant::Skew },
        ManifoldSpec::Circulant { variant: CirculantVariant::Unitary },
        ManifoldSpec::Circulant {
            variant: CirculantVariant::LowRank { rank: g.random_range(1..=n) },
        },
        ManifoldSpec::Circulant { variant: CirculantVariant::Tls },
        ManifoldSpec::Toeplitz { flavor: ToeplitzFlavor::Toeplitz },
        ManifoldSpec::Toeplitz { flavor: ToeplitzFlavor::Hankel },
        ManifoldSpec::Unitary { pod_rank: None },
        ManifoldSpec::Unitary { pod_rank: Some(r) },
        ManifoldSpec::Symmetric { kind: SymmetryKind::Symmetric, rank: None },
        ManifoldSpec::Symmetric { kind: SymmetryKind::Skew, rank: Some(r) },
        ManifoldSpec::Tridiagonal { periodic: false },
        ManifoldSpec::Banded { lower: 1, upper: 2.min(n - 1), periodic: false },
        ManifoldSpec::SymmetricTridiagonal,
        ManifoldSpec::RegularizedLocal { sigma: 0.3, lambda: 0.5, allow_large: false },
    ];
    if n >= 3 {
        specs.push(ManifoldSpec::Tridiagonal { periodic: true });
    }
    if m >= 4 {
        specs.push(ManifoldSpec::TridiagonalTls);
    }
    for method in [TriangularMethod::Naive, TriangularMethod::FastUpdate, TriangularMethod::RqStable] {
        for orientation in [Orientation::Upper, Orientation::Lower] {
            specs.push(ManifoldSpec::Triangular { method, orientation });
        }
    }
    specs
}

pub fn every_solver_above_unconstrained(seed: u64) -> Result<(), String> {
    let mut g = rng(seed ^ 0xd2);
    let n = g.random_range(2..=8);
    let m = g.random_range(2..=12);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let free = unconstrained_residual(&pair);
    for spec in all_specs(n, m, seed) {
        let model = fit(&pair, &spec).map_err(|e| format!("{spec:?}: {e}"))?;
        let r = residual(&model, &pair).map_err(err)?;
        ensure(r >= free - 1e-12, || format!("{spec:?}: residual {r:.6e} below {free:.6e}, seed {seed}"))?;
    }
    Ok(())
}

pub fn one_step_prediction(seed: u64) -> Result<(), String> {
    let mut g = rng(seed ^ 0xd3);
    let n = g.random_range(2..=8);
    let m = g.random_range(2..=12);
    let pair = random_pair(seed, n, m, seed % 2 == 1);
    let x0: Vector = gaussian_complex(&mut g, n, 1).column(0).into_owned();
    for spec in all_specs(n, m, seed) {
        let model = fit(&pair, &spec).map_err(err)?;
        let traj = predict(&model, &x0, 1, TimeKind::Discrete, 1.0).map_err(err)?;
        let want = model.materialize() * &x0;
        let d = (traj.column(1) - &want).norm();
        ensure(d <= 1e-12 * want.norm().max(x0.norm()), || format!("{spec:?}: one step off by {d:.3e}, seed {seed}"))?;
    }
    Ok(())
}

pub fn resolvent_unitary_similarity(seed: u64) -> Result<(), String> {
    let mut g = rng(seed);
    let n = g.random_range(2..=10);
    let a = gaussian_complex(&mut g, n, n);
    let w = random_unitary(&mut g, n);
    let b = &w * &a * w.adjoint();
    let omega = uniform(&mut g, -3.0, 3.0);
    let dense = |op: Matrix| PiDmdModel::Dense(DenseModel { operator: op });
    let ga = resolvent_modes(&dense(a), omega, n).map_err(err)?.gains;
    let gb = resolvent_modes(&dense(b), omega, n).map_err(err)?.gains;
    for (x, y) in ga.iter().zip(&gb) {
        ensure((x - y).abs() <= 1e-8 * x.abs().max(1.0), || format!("gain {x} became {y} at omega {omega}, seed {seed}"))?;
    }
    Ok(())
}

// ---- cli

fn pidmd(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pidmd")).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Result<(), String> {
    let out = pidmd(args);
    ensure(out.status.success(), || {
        format!("pidmd {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn files_equal(a: &Path, b: &Path, name: &str) -> Result<(), String> {
    let (x, y) = (std::fs::read(a.join(name)).map_err(err)?, std::fs::read(b.join(name)).map_err(err)?);
    ensure(x == y, || format!("{name} differs between identical runs"))
}

fn generate_args<'a>(seed: &'a str, out: &'a str) -> Vec<&'a str> {
    vec!["generate", "advection", "--n", "16", "--m", "24", "--noise", "0.05", "--seed", seed, "--out", out]
}

pub fn cli_deterministic_and_exit_codes(seed: u64) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(err)?;
    let s = seed.to_string();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        run_ok(&generate_args(&s, d.to_str().unwrap()))?;
    }
    for name in ["X.csv", "Y.csv", "truth_spectrum.csv", "meta.json"] {
        files_equal(&a, &b, name)?;
    }
    let manifolds = ["circulant", "unitary", "tridiagonal", "upper-triangular", "symmetric"];
    let manifold = manifolds[(seed % manifolds.len() as u64) as usize];
    let (fa, fb) = (dir.path().join("fa"), dir.path().join("fb"));
    for (d, f) in [(&a, &fa), (&b, &fb)] {
        let (x, y) = (d.join("X.csv"), d.join("Y.csv"));
        run_ok(&["fit", "--x", x.to_str().unwrap(), "--y", y.to_str().unwrap(), "--manifold", manifold, "--out", f.to_str().unwrap()])?;
    }
    files_equal(&fa, &fb, "operator.csv")?;
    files_equal(&fa, &fb, "model.json")?;

    let x = a.join("X.csv");
    let bad = pidmd(&["fit", "--x", x.to_str().unwrap(), "--y", x.to_str().unwrap(), "--manifold", "wobbly", "--out", "unused"]);
    ensure(bad.status.code() == Some(2), || format!("unknown manifold gave {:?}", bad.status.code()))?;

    // an exactly singular resolvent is a numerical failure
    let zero = dir.path().join("zero.csv");
    let ident = dir.path().join("ident.csv");
    save_matrix(&Matrix::zeros(3, 4), &zero).map_err(err)?;
    save_matrix(&gaussian_real(&mut rng(seed), 3, 4), &ident).map_err(err)?;
    let fz = dir.path().join("fz");
    run_ok(&["fit", "--x", ident.to_str().unwrap(), "--y", zero.to_str().unwrap(), "--manifold", "symmetric", "--time-kind", "continuous", "--out", fz.to_str().unwrap()])?;
    let model = fz.join("model.json");
    let out = pidmd(&["resolvent", "--model", model.to_str().unwrap(), "--omega", "0", "--out", dir.path().join("r").to_str().unwrap()]);
    ensure(out.status.code() == Some(1), || format!("singular resolvent gave {:?}", out.status.code()))
}

fn check_outputs(dir: &Path) -> Result<(), String> {
    for entry in std::fs::read_dir(dir).map_err(err)? {
        let path = entry.map_err(err)?.path();
        let text = std::fs::read_to_string(&path).map_err(err)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => {
                let v: serde_json::Value = serde_json::from_str(&text).map_err(err)?;
                ensure(v.get("schema_version").is_some(), || format!("{} lacks schema_version", path.display()))?;
            }
            Some("csv") => {
                let m = load_matrix(&path).map_err(err)?;
                ensure(format_matrix(&m) == text, || format!("{} does not round-trip", path.display()))?;
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn cli_outputs_contract(seed: u64) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(err)?;
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let s = seed.to_string();
    run_ok(&generate_args(&s, &p("gen")))?;
    let (x, y) = (p("gen/X.csv"), p("gen/Y.csv"));
    run_ok(&["fit", "--x", &x, "--y", &y, "--manifold", "circulant", "--out", &p("fit")])?;
    let model = p("fit/model.json");
    save_matrix(&gaussian_real(&mut rng(seed), 16, 1), p("x0.csv")).map_err(err)?;
    run_ok(&["spectrum", "--model", &model, "--x0", &p("x0.csv"), "--out", &p("spec")])?;
    run_ok(&["predict", "--model", &model, "--x0", &p("x0.csv"), "--steps", "5", "--out", &p("pred")])?;
    run_ok(&["resolvent", "--model", &model, "--omega", "0.5,2", "--out", &p("res")])?;
    run_ok(&["compare", "--x", &x, "--y", &y, "--manifold", "circulant", "--truth", &p("gen/truth_spectrum.csv"), "--out", &p("cmp")])?;
    for d in ["gen", "fit", "spec", "pred", "res", "cmp"] {
        check_outputs(&dir.path().join(d))?;
    }
    Ok(())
}

pub const ALL: &[(&str, Check)] = &[
    ("snapshot: save/load identity", save_load_identity),
    ("snapshot: discrete pairing shift", discrete_pairing_shift),
    ("snapshot: noise seeds differ", noise_seeds_differ),
    ("testbeds: analytic spectrum", analytic_spectrum_matches),
    ("testbeds: evolve steps", evolve_discrete_steps),
    ("testbeds: deterministic", generators_deterministic),
    ("exact: residual non-increasing in rank", exact_residual_nonincreasing),
    ("exact: eigenvalues invariant under unitary rows", exact_eigs_unitary_invariant),
    ("circulant: variants never beat plain", circulant_variants_never_beat_plain),
    ("circulant: constant diagonals", circulant_constant_diagonals),
    ("circulant: oracle plain", super::oracle::circulant_plain),
    ("circulant: oracle symmetric", super::oracle::circulant_symmetric),
    ("circulant: oracle skew", super::oracle::circulant_skew),
    ("toeplitz: oracle", super::oracle::toeplitz),
    ("hankel: oracle", super::oracle::hankel),
    ("circulant: unitary radius", circulant_unitary_radius),
    ("unitary: spectrum on circle", unitary_spectrum_on_circle),
    ("unitary: preserves norm", unitary_preserves_norm),
    ("unitary: residual bound", unitary_residual_bound),
    ("unitary: noise symmetry trend", unitary_noise_symmetry),
    ("selfadjoint: spectrum", selfadjoint_spectrum),
    ("selfadjoint: oracle symmetric", super::oracle::symmetric),
    ("selfadjoint: oracle skew", super::oracle::skew),
    ("selfadjoint: variance ordering", variance_profile_ordering),
    ("local: zero pattern", banded_zero_pattern),
    ("local: widening monotone", banded_widening_monotone),
    ("local: oracle tridiagonal", super::oracle::tridiagonal),
    ("local: oracle banded", super::oracle::banded),
    ("local: oracle symmetric tridiagonal", super::oracle::symmetric_tridiagonal),
    ("local: row shuffle", row_shuffle_hurts_locality),
    ("causal: rq identity", rq_identity),
    ("causal: residual bound", triangular_residual_bound),
    ("causal: fast update vs naive", fast_update_vs_naive),
    ("diagnostics: residual above unconstrained", every_solver_above_unconstrained),
    ("diagnostics: one-step prediction", one_step_prediction),
    ("diagnostics: resolvent similarity", resolvent_unitary_similarity),
    ("cli: determinism and exit codes", cli_deterministic_and_exit_codes),
    ("cli: output contract", cli_outputs_contract),
];
