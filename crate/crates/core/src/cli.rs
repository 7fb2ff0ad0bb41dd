//! Command-line front end. `run` executes a parsed command; the binary maps
//! errors to exit codes (1 numerical failure, 2 usage or input error).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::causal::{Orientation, TriangularMethod};
use crate::diagnostics::{match_eigenvalues, predict, residual, resolvent_modes, spectrum, Spectrum};
use crate::error::{invalid, mismatch, PidmdError, Result};
use crate::flags::{FitWarning, RowFlag};
use crate::linalg::{c64, canonical_order, eig, Matrix, Vector, C64};
use crate::model::{fit, ManifoldSpec, PiDmdModel};
use crate::random::{gaussian_complex, gaussian_real, rng, uniform};
use crate::selfadjoint::SymmetryKind;
use crate::shift_invariant::{CirculantVariant, ToeplitzFlavor};
use crate::snapshot::{add_gaussian_noise, load_matrix, make_snapshot_pairs, save_matrix, Pairing, SnapshotPair, TimeKind};
use crate::testbeds::{
    advection_testbed, convection_diffusion_testbed, evolve, schrodinger_well_testbed, volterra_testbed, Testbed,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Operators larger than this are not written out densely by `fit`.
pub const OPERATOR_CSV_LIMIT: usize = 1024;

#[derive(Debug, Parser)]
#[command(name = "pidmd", version, about = "Fit structured linear operators to snapshot data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a testbed and write X.csv, Y.csv, truth_spectrum.csv and meta.json.
    Generate(GenerateArgs),
    /// Fit a model and write model.json, operator.csv and report.json.
    Fit(FitArgs),
    /// Eigenvalues and modes of a fitted model.
    Spectrum(SpectrumArgs),
    /// Trajectory of a fitted model from an initial state.
    Predict(PredictArgs),
    /// Resolvent gains, forcings and responses at one or more frequencies.
    Resolvent(ResolventArgs),
    /// Fit exact DMD and a structured model on the same data and score both spectra.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestbedName {
    Advection,
    ConvectionDiffusion,
    Schrodinger,
    Volterra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairingArg {
    Discrete,
    Derivative,
}

impl From<PairingArg> for Pairing {
    fn from(p: PairingArg) -> Pairing {
        match p {
            PairingArg::Discrete => Pairing::Discrete,
            PairingArg::Derivative => Pairing::Derivative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimeKindArg {
    Discrete,
    Continuous,
}

impl From<TimeKindArg> for TimeKind {
    fn from(t: TimeKindArg) -> TimeKind {
        match t {
            TimeKindArg::Discrete => TimeKind::Discrete,
            TimeKindArg::Continuous => TimeKind::Continuous,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub testbed: TestbedName,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    /// Snapshots per trajectory.
    #[arg(long, default_value_t = 200)]
    pub m: usize,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    /// Relative noise level (fraction of the RMS of the data).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Advection speed.
    #[arg(long, default_value_t = 0.1)]
    pub speed: f64,
    /// Potential outside the well.
    #[arg(long, default_value_t = 0.0)]
    pub depth: f64,
    #[arg(long, value_enum, default_value_t = PairingArg::Discrete)]
    pub pairing: PairingArg,
    #[arg(long, default_value_t = 1)]
    pub trajectories: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ManifoldName {
    Exact,
    Circulant,
    Toeplitz,
    Hankel,
    Unitary,
    Symmetric,
    Skew,
    Tridiagonal,
    Banded,
    SymmetricTridiagonal,
    TridiagonalTls,
    RegularizedLocal,
    UpperTriangular,
    LowerTriangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Plain,
    Symmetric,
    Skew,
    Unitary,
    LowRank,
    Tls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Naive,
    FastUpdate,
    RqStable,
}

#[derive(Debug, Clone, Args)]
pub struct ManifoldArgs {
    #[arg(long, value_enum)]
    pub manifold: ManifoldName,
    /// Circulant variant.
    #[arg(long, value_enum, default_value_t = VariantArg::Plain)]
    pub variant: VariantArg,
    /// Exact DMD rank, POD rank (unitary, symmetric, skew) or circulant low-rank size.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub periodic: bool,
    #[arg(long, default_value_t = 1)]
    pub lower: usize,
    #[arg(long, default_value_t = 1)]
    pub upper: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::RqStable)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Lift the size guard of the regularized locality fit.
    #[arg(long)]
    pub allow_large: bool,
}

impl ManifoldArgs {
    pub fn to_spec(&self, n: usize, m: usize) -> Result<ManifoldSpec> {
        let method = match self.method {
            MethodArg::Naive => TriangularMethod::Naive,
            MethodArg::FastUpdate => TriangularMethod::FastUpdate,
            MethodArg::RqStable => TriangularMethod::RqStable,
        };
        let spec = match self.manifold {
            ManifoldName::Exact => ManifoldSpec::Exact {
                rank: self.rank.unwrap_or(n.min(m)),
            },
            ManifoldName::Circulant => ManifoldSpec::Circulant {
                variant: match self.variant {
                    VariantArg::Plain => CirculantVariant::Plain,
                    VariantArg::Symmetric => CirculantVariant::Symmetric,
                    VariantArg::Skew => CirculantVariant::Skew,
                    VariantArg::Unitary => CirculantVariant::Unitary,
                    VariantArg::Tls => CirculantVariant::Tls,
                    VariantArg::LowRank => CirculantVariant::LowRank {
                        rank: self.rank.ok_or_else(|| invalid("--variant low-rank needs --rank"))?,
                    },
                },
            },
            ManifoldName::Toeplitz => ManifoldSpec::Toeplitz {
                flavor: ToeplitzFlavor::Toeplitz,
            },
            ManifoldName::Hankel => ManifoldSpec::Toeplitz {
                flavor: ToeplitzFlavor::Hankel,
            },
            ManifoldName::Unitary => ManifoldSpec::Unitary { pod_rank: self.rank },
            ManifoldName::Symmetric => ManifoldSpec::Symmetric {
                kind: SymmetryKind::Symmetric,
                rank: self.rank,
            },
            ManifoldName::Skew => ManifoldSpec::Symmetric {
                kind: SymmetryKind::Skew,
                rank: self.rank,
            },
            ManifoldName::Tridiagonal => ManifoldSpec::Tridiagonal {
                periodic: self.periodic,
            },
            ManifoldName::Banded => ManifoldSpec::Banded {
                lower: self.lower,
                upper: self.upper,
                periodic: self.periodic,
            },
            ManifoldName::SymmetricTridiagonal => ManifoldSpec::SymmetricTridiagonal,
            ManifoldName::TridiagonalTls => ManifoldSpec::TridiagonalTls,
            ManifoldName::RegularizedLocal => ManifoldSpec::RegularizedLocal {
                sigma: self.sigma,
                lambda: self.lambda,
                allow_large: self.allow_large,
            },
            ManifoldName::UpperTriangular => ManifoldSpec::Triangular {
                method,
                orientation: Orientation::Upper,
            },
            ManifoldName::LowerTriangular => ManifoldSpec::Triangular {
                method,
                orientation: Orientation::Lower,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["x", "series"])))]
pub struct InputArgs {
    #[arg(long, requires = "y", conflicts_with = "series")]
    pub x: Option<PathBuf>,
    #[arg(long, requires = "x")]
    pub y: Option<PathBuf>,
    /// A single time series, paired according to --pairing.
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PairingArg::Discrete)]
    pub pairing: PairingArg,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Time kind of an X/Y pair; series input takes it from --pairing.
    #[arg(long, value_enum, default_value_t = TimeKindArg::Discrete)]
    pub time_kind: TimeKindArg,
}

impl InputArgs {
    fn load(&self) -> Result<(SnapshotPair, TimeKind)> {
        match (&self.x, &self.y, &self.series) {
            (Some(x), Some(y), None) => {
                let x = load_matrix(x)?;
                let y = load_matrix(y)?;
                if x.shape() != y.shape() {
                    return Err(mismatch(format!(
                        "X is {}x{} but Y is {}x{}",
                        x.nrows(),
                        x.ncols(),
                        y.nrows(),
                        y.ncols()
                    )));
                }
                let kind: TimeKind = self.time_kind.into();
                let pairing = match kind {
                    TimeKind::Discrete => Pairing::Discrete,
                    TimeKind::Continuous => Pairing::Derivative,
                };
                Ok((SnapshotPair::new(x, y)?.with_pairing(pairing, self.dt), kind))
            }
            (None, None, Some(s)) => {
                let pairing: Pairing = self.pairing.into();
                let pair = make_snapshot_pairs(&load_matrix(s)?, pairing, self.dt)?;
                let kind = match pairing {
                    Pairing::Discrete => TimeKind::Discrete,
                    Pairing::Derivative => TimeKind::Continuous,
                };
                Ok((pair, kind))
            }
            _ => Err(invalid("give either --x and --y, or --series")),
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Initial state (n x 1 CSV) used to compute mode amplitudes.
    #[arg(long)]
    pub x0: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x0: PathBuf,
    #[arg(long)]
    pub steps: usize,
    /// Step size for continuous-time models; defaults to the fit's dt.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum)]
    pub time_kind: Option<TimeKindArg>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResolventArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub omega: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    /// Rank of the exact DMD baseline; defaults to the full rank.
    #[arg(long)]
    pub exact_rank: Option<usize>,
    /// Reference eigenvalues (one complex token per line).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Contents of model.json.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub time_kind: TimeKind,
    pub dt: f64,
    pub spec: ManifoldSpec,
    pub model: PiDmdModel,
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Resolvent(a) => cmd_resolvent(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| PidmdError::Serialization(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn read_model(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| PidmdError::Serialization(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(invalid(format!("unsupported model schema version {}", file.schema_version)));
    }
    Ok(file)
}

fn column(vals: &[C64]) -> Matrix {
    Matrix::from_column_slice(vals.len(), 1, vals)
}

fn load_vector(path: &Path, n: usize) -> Result<Vector> {
    let m = load_matrix(path)?;
    if m.len() != n || (m.ncols() != 1 && m.nrows() != 1) {
        return Err(mismatch(format!(
            "initial state is {}x{} but the model needs a vector of length {n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(Vector::from_iterator(n, m.iter().copied()))
}

fn build_testbed(a: &GenerateArgs) -> Result<Testbed> {
    match a.testbed {
        TestbedName::Advection => advection_testbed(a.n, a.speed, a.dt),
        TestbedName::ConvectionDiffusion => convection_diffusion_testbed(a.n, a.seed),
        TestbedName::Schrodinger => schrodinger_well_testbed(a.n, a.depth),
        TestbedName::Volterra => volterra_testbed(a.n),
    }
}

/// Initial state of trajectory `k`: a Gaussian pulse for advection (centred at 0
/// for the first trajectory, random afterwards), seeded random data otherwise.
pub fn initial_state(tb: &Testbed, name: TestbedName, k: usize, seed: u64) -> Vector {
    let n = tb.n();
    let mut g = rng(seed.wrapping_mul(7919).wrapping_add(k as u64));
    match name {
        TestbedName::Advection => {
            let (centre, width) = if k == 0 {
                (0.0, 0.1)
            } else {
                (uniform(&mut g, -1.0, 1.0), uniform(&mut g, 0.05, 0.2))
            };
            let p = tb.grid.points();
            Vector::from_iterator(n, p.iter().map(|&x| c64((-((x - centre) / width).powi(2)).exp(), 0.0)))
        }
        TestbedName::Schrodinger => gaussian_complex(&mut g, n, 1).column(0).into_owned(),
        _ => gaussian_real(&mut g, n, 1).column(0).into_owned(),
    }
}

/// Eigenvalues of the map the generated pairs sample: the one-step propagator
/// for discrete pairing, the generator for derivative pairing.
pub fn truth_spectrum(tb: &Testbed, pairing: Pairing, dt: f64) -> Result<Vec<C64>> {
    let generator_eigs = || -> Result<Vec<C64>> {
        Ok(match &tb.analytic_spectrum {
            Some(s) => s.iter().map(|v| v * tb.time_scale).collect(),
            None => eig(&tb.generator())?.0,
        })
    };
    let vals = match (tb.time_kind, pairing) {
        (TimeKind::Discrete, Pairing::Discrete) => match &tb.analytic_spectrum {
            Some(s) => s.clone(),
            None => eig(&tb.operator)?.0,
        },
        (TimeKind::Discrete, Pairing::Derivative) => {
            return Err(invalid("derivative pairing needs a continuous-time testbed"));
        }
        (TimeKind::Continuous, Pairing::Discrete) => generator_eigs()?.iter().map(|v| (v * dt).exp()).collect(),
        (TimeKind::Continuous, Pairing::Derivative) => generator_eigs()?,
    };
    let order = canonical_order(&vals);
    Ok(order.iter().map(|&i| vals[i]).collect())
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    if a.trajectories == 0 {
        return Err(invalid("need at least one trajectory"));
    }
    let tb = build_testbed(a)?;
    let pairing: Pairing = a.pairing.into();
    let truth = truth_spectrum(&tb, pairing, a.dt)?;
    let mut pairs = Vec::with_capacity(a.trajectories);
    for k in 0..a.trajectories {
        let x0 = initial_state(&tb, a.testbed, k, a.seed);
        let mut series = evolve(&tb, &x0, a.m, a.dt)?;
        if a.testbed == TestbedName::Advection {
            // the physical field is real
            series = series.map(|z| c64(z.re, 0.0));
        }
        let noisy = add_gaussian_noise(&series, a.noise, a.seed.wrapping_add(1_000_003 * (k as u64 + 1)))?;
        pairs.push(make_snapshot_pairs(&noisy, pairing, a.dt)?);
    }
    let pair = SnapshotPair::concat(&pairs)?;
    fs::create_dir_all(&a.out)?;
    save_matrix(&pair.x, a.out.join("X.csv"))?;
    save_matrix(&pair.y, a.out.join("Y.csv"))?;
    save_matrix(&column(&truth), a.out.join("truth_spectrum.csv"))?;
    let time_kind = match pairing {
        Pairing::Discrete => TimeKind::Discrete,
        Pairing::Derivative => TimeKind::Continuous,
    };
    write_json(
        &a.out.join("meta.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "testbed": a.testbed,
            "n": a.n,
            "m": a.m,
            "dt": a.dt,
            "noise": a.noise,
            "seed": a.seed,
            "speed": a.speed,
            "depth": a.depth,
            "pairing": pairing,
            "trajectories": a.trajectories,
            "time_kind": time_kind,
            "x_shape": [pair.n(), pair.m()],
            "y_shape": [pair.y.nrows(), pair.y.ncols()],
        }),
    )
}

fn warnings_of(model: &PiDmdModel) -> Vec<FitWarning> {
    match model {
        PiDmdModel::Exact(m) => m.warnings.clone(),
        PiDmdModel::Toeplitz(m) => m.warnings.clone(),
        PiDmdModel::Symmetric(m) => m.warnings.clone(),
        PiDmdModel::Banded(m) => m.warnings.clone(),
        _ => Vec::new(),
    }
}

fn row_flags_of(model: &PiDmdModel) -> Vec<RowFlag> {
    match model {
        PiDmdModel::Circulant(m) => m.flags.clone(),
        PiDmdModel::Banded(m) => m.flags.clone(),
        PiDmdModel::Triangular(m) => m.pivot_flags.clone(),
        PiDmdModel::Unitary(m) => vec![m.flag],
        _ => Vec::new(),
    }
}

fn flagged_rows(flags: &[RowFlag]) -> serde_json::Value {
    let count = |f: RowFlag| flags.iter().filter(|&&g| g == f).count();
    json!({
        "undetermined": count(RowFlag::Undetermined),
        "tls_degenerate": count(RowFlag::TlsDegenerate),
        "small_pivot": count(RowFlag::SmallPivot),
    })
}

struct Fitted {
    model: PiDmdModel,
    spec: ManifoldSpec,
    seconds: f64,
    residual: f64,
    relative_residual: f64,
}

fn fit_timed(pair: &SnapshotPair, spec: ManifoldSpec) -> Result<Fitted> {
    let start = Instant::now();
    let model = fit(pair, &spec)?;
    let seconds = start.elapsed().as_secs_f64();
    let res = residual(&model, pair)?;
    let ynorm = pair.y.norm();
    Ok(Fitted {
        model,
        spec,
        seconds,
        residual: res,
        relative_residual: if ynorm > 0.0 { res / ynorm } else { res },
    })
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let (pair, time_kind) = a.input.load()?;
    let spec = a.manifold.to_spec(pair.n(), pair.m())?;
    let fitted = fit_timed(&pair, spec)?;
    fs::create_dir_all(&a.out)?;
    let n = fitted.model.n();
    let operator_written = n <= OPERATOR_CSV_LIMIT;
    if operator_written {
        save_matrix(&fitted.model.materialize(), a.out.join("operator.csv"))?;
    }
    let unique = match &fitted.model {
        PiDmdModel::Unitary(m) => Some(m.unique),
        _ => None,
    };
    write_json(
        &a.out.join("report.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "manifold": fitted.model.kind(),
            "spec": fitted.spec,
            "n": pair.n(),
            "m": pair.m(),
            "time_kind": time_kind,
            "residual": fitted.residual,
            "relative_residual": fitted.relative_residual,
            "fit_seconds": fitted.seconds,
            "unique": unique,
            "warnings": warnings_of(&fitted.model),
            "flagged_rows": flagged_rows(&row_flags_of(&fitted.model)),
            "operator_csv": operator_written,
        }),
    )?;
    write_json(
        &a.out.join("model.json"),
        &ModelFile {
            schema_version: SCHEMA_VERSION,
            time_kind,
            dt: pair.dt,
            spec: fitted.spec,
            model: fitted.model,
        },
    )
}

fn spectrum_json(spec: &Spectrum) -> serde_json::Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "time_kind": spec.time_kind,
        "eigenvalues": spec.eigenvalues,
        "reliable": spec.reliable,
        "amplitudes": spec.amplitudes,
    })
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<()> {
    let file = read_model(&a.model)?;
    let mut spec = spectrum(&file.model, file.time_kind)?;
    if let Some(path) = &a.x0 {
        spec = spec.with_amplitudes(&load_vector(path, file.model.n())?)?;
    }
    fs::create_dir_all(&a.out)?;
    save_matrix(&column(&spec.eigenvalues), a.out.join("spectrum.csv"))?;
    save_matrix(&spec.modes, a.out.join("modes.csv"))?;
    write_json(&a.out.join("spectrum.json"), &spectrum_json(&spec))
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let file = read_model(&a.model)?;
    let x0 = load_vector(&a.x0, file.model.n())?;
    let kind = a.time_kind.map(TimeKind::from).unwrap_or(file.time_kind);
    let dt = a.dt.unwrap_or(file.dt);
    let traj = predict(&file.model, &x0, a.steps, kind, dt)?;
    fs::create_dir_all(&a.out)?;
    save_matrix(&traj, a.out.join("prediction.csv"))
}

fn cmd_resolvent(a: &ResolventArgs) -> Result<()> {
    let file = read_model(&a.model)?;
    let mut gains = Vec::with_capacity(a.omega.len());
    let mut sets = Vec::with_capacity(a.omega.len());
    for &w in &a.omega {
        let set = resolvent_modes(&file.model, w, a.k)?;
        let mut row = vec![c64(w, 0.0)];
        row.extend(set.gains.iter().map(|&g| c64(g, 0.0)));
        gains.push(row);
        sets.push(set);
    }
    let width = gains.iter().map(|r| r.len()).max().unwrap_or(1);
    let table = Matrix::from_fn(gains.len(), width, |i, j| gains[i].get(j).copied().unwrap_or_default());
    fs::create_dir_all(&a.out)?;
    save_matrix(&table, a.out.join("resolvent.csv"))?;
    write_json(
        &a.out.join("resolvent.json"),
        &json!({ "schema_version": SCHEMA_VERSION, "sets": sets }),
    )
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let (pair, time_kind) = a.input.load()?;
    let full = pair.n().min(pair.m());
    let exact = fit_timed(
        &pair,
        ManifoldSpec::Exact {
            rank: a.exact_rank.unwrap_or(full),
        },
    )?;
    let structured = fit_timed(&pair, a.manifold.to_spec(pair.n(), pair.m())?)?;
    let exact_spec = spectrum(&exact.model, time_kind)?;
    let structured_spec = spectrum(&structured.model, time_kind)?;
    let truth = match &a.truth {
        Some(p) => Some(load_matrix(p)?.iter().copied().collect::<Vec<C64>>()),
        None => None,
    };
    let summary = |f: &Fitted, s: &Spectrum| {
        json!({
            "manifold": f.model.kind(),
            "residual": f.residual,
            "relative_residual": f.relative_residual,
            "fit_seconds": f.seconds,
            "spectral_error": truth.as_ref().map(|t| match_eigenvalues(&s.eigenvalues, t)),
        })
    };
    fs::create_dir_all(&a.out)?;
    save_matrix(&column(&exact_spec.eigenvalues), a.out.join("exact_spectrum.csv"))?;
    save_matrix(&column(&structured_spec.eigenvalues), a.out.join("pidmd_spectrum.csv"))?;
    write_json(
        &a.out.join("compare.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "n": pair.n(),
            "m": pair.m(),
            "time_kind": time_kind,
            "exact": summary(&exact, &exact_spec),
            "pidmd": summary(&structured, &structured_spec),
        }),
    )
}

/// Exit code for a failed command.
pub fn exit_code(err: &PidmdError) -> i32 {
    if err.is_numerical() {
        1
    } else {
        2
    }
}
