//! Ensemble sweeps over the window length, the time step and `α²`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lss_core::{
    adjoint_sensitivity, assemble_adjoint, integrate, max_eigenvalue, member_seed, min_eigenvalue,
    random_initial_state, restrict_to_coarse, time_average, CoupledOscillator, DynamicalSystem,
    Lorenz63, LssConfig, LssError, SchemeOrder, TimeGrid, Trajectory,
};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::sci;

/// Tolerance of the `λ_min` inverse iteration.
pub const LAMBDA_MIN_TOL: f64 = 1e-8;
/// Tolerance of the `λ_max` power iteration.
pub const LAMBDA_MAX_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Lorenz63,
    Oscillator,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Lorenz63 => "lorenz63",
            SystemKind::Oscillator => "oscillator",
        }
    }

    pub fn build(self) -> Box<dyn DynamicalSystem> {
        match self {
            SystemKind::Lorenz63 => Box::new(Lorenz63::default()),
            SystemKind::Oscillator => Box::new(CoupledOscillator::default()),
        }
    }

    pub fn default_dt(self) -> f64 {
        match self {
            SystemKind::Lorenz63 => 0.02,
            SystemKind::Oscillator => 0.01,
        }
    }
}

impl FromStr for SystemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lorenz63" | "lorenz" => Ok(SystemKind::Lorenz63),
            "oscillator" | "coupled-oscillator" => Ok(SystemKind::Oscillator),
            _ => Err(format!(
                "unknown system `{s}` (expected lorenz63 or oscillator)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Horizon,
    TimeStep,
    Alpha2,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::Horizon => "T",
            SweepVariable::TimeStep => "dt",
            SweepVariable::Alpha2 => "alpha2",
        }
    }
}

/// Adjoint boundary values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryMode {
    Homogeneous,
    /// `ψ(0) = ψ(T) = c·𝟙`
    Constant(f64),
}

impl BoundaryMode {
    pub fn from_value(c: f64) -> Self {
        if c == 0.0 {
            BoundaryMode::Homogeneous
        } else {
            BoundaryMode::Constant(c)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            BoundaryMode::Homogeneous => 0.0,
            BoundaryMode::Constant(c) => c,
        }
    }

    pub fn lss_config(self, dim: usize, alpha2: f64, scheme: SchemeOrder) -> LssConfig {
        LssConfig::constant_bc(dim, alpha2, scheme, self.value())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemKind,
    pub sweep: SweepVariable,
    /// `T` values, coarse time steps or `α²` values.
    pub values: Vec<f64>,
    pub ensemble: usize,
    /// Trajectory time step; the fine step of a `dt` sweep.
    pub dt: f64,
    /// Window length when `T` is not swept.
    pub horizon: f64,
    pub alpha2: f64,
    pub scheme: SchemeOrder,
    pub bc: BoundaryMode,
    pub seed: u64,
    /// Overrides the system's default spin-up time.
    pub spin_up: Option<f64>,
    /// Estimate `λ_min(L_H)` for every member of a `T` sweep.
    pub lambda_min: bool,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(system: SystemKind, sweep: SweepVariable, values: Vec<f64>) -> Self {
        Self {
            system,
            sweep,
            values,
            ensemble: 1,
            dt: system.default_dt(),
            horizon: 50.0,
            alpha2: 100.0,
            scheme: SchemeOrder::SecondOrder,
            bc: BoundaryMode::Homogeneous,
            seed: 0,
            spin_up: None,
            lambda_min: false,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(Error::Usage(m));
        if self.values.is_empty() {
            return usage("the sweep needs at least one value".into());
        }
        if !self.values.iter().all(|v| v.is_finite() && *v > 0.0) {
            return usage("sweep values must be positive".into());
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return usage("sweep values must be strictly increasing".into());
        }
        if self.ensemble == 0 {
            return usage("ensemble size must be at least 1".into());
        }
        for (name, v) in [
            ("dt", self.dt),
            ("T", self.horizon),
            ("alpha2", self.alpha2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return usage(format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(t) = self.spin_up {
            if !(t.is_finite() && t >= 0.0) {
                return usage(format!("spin-up must be non-negative, got {t}"));
            }
        }
        if !self.bc.value().is_finite() {
            return usage("boundary value must be finite".into());
        }
        Ok(())
    }

    /// The configuration in the key-value format read by `--config`, for
    /// the subcommand `command`.
    pub fn snapshot(&self, command: &str) -> String {
        let list = |v: &[f64]| v.iter().map(|&x| sci(x)).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let _ = writeln!(out, "# command: {command}");
        let _ = writeln!(out, "system = {}", self.system.name());
        let _ = writeln!(out, "dt = {}", sci(self.dt));
        match self.sweep {
            SweepVariable::Horizon => {
                let _ = writeln!(out, "T = {}", list(&self.values));
                let _ = writeln!(out, "alpha2 = {}", sci(self.alpha2));
                if self.lambda_min && command == "sweep-t" {
                    let _ = writeln!(out, "lambda-min = true");
                }
            }
            SweepVariable::TimeStep => {
                let factors: Vec<String> = self
                    .values
                    .iter()
                    .map(|h| format!("{}", (h / self.dt).round() as usize))
                    .collect();
                let _ = writeln!(out, "T = {}", sci(self.horizon));
                let _ = writeln!(out, "factors = {}", factors.join(","));
                let _ = writeln!(out, "alpha2 = {}", sci(self.alpha2));
            }
            SweepVariable::Alpha2 => {
                let _ = writeln!(out, "T = {}", sci(self.horizon));
                let _ = writeln!(out, "alpha2-sweep = {}", list(&self.values));
            }
        }
        let _ = writeln!(out, "ensemble = {}", self.ensemble);
        let _ = writeln!(out, "scheme = {}", self.scheme.as_str());
        let _ = writeln!(out, "bc = {}", sci(self.bc.value()));
        let _ = writeln!(out, "seed = {}", self.seed);
        if let Some(t) = self.spin_up {
            let _ = writeln!(out, "spin-up = {}", sci(t));
        }
        out
    }

    fn spin_up_for(&self, sys: &dyn DynamicalSystem) -> f64 {
        self.spin_up.unwrap_or_else(|| sys.default_spin_up())
    }
}

/// What the error columns are measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorReference {
    /// The exact `dJ̄/ds` of the system.
    TrueValue(f64),
    /// Per member, `S(h) + (S(h) − S(2h))/3` from the second-order scheme
    /// on the fine trajectory and on its factor-2 restriction.
    FineRichardson,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberResult {
    pub seed: u64,
    pub djds: f64,
    /// `djds` minus the reference, when there is one.
    pub error: Option<f64>,
    pub asymmetry: f64,
    pub lambda_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub value: f64,
    pub mean: Option<f64>,
    pub std_dev: Option<f64>,
    /// Mean over members of `|djds − reference|`.
    pub mean_abs_error: Option<f64>,
    /// `|mean djds − reference|`
    pub abs_mean_error: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    /// Largest relative asymmetry of any assembled `L_H` in the row.
    pub max_asymmetry: f64,
    pub members: Vec<MemberResult>,
}

impl TableRow {
    fn from_members(value: f64, members: Vec<MemberResult>) -> Self {
        let k = members.len() as f64;
        let mean = members.iter().map(|m| m.djds).sum::<f64>() / k;
        let var = if members.len() > 1 {
            members.iter().map(|m| (m.djds - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let errors: Option<Vec<f64>> = members.iter().map(|m| m.error).collect();
        let (mean_abs_error, abs_mean_error) = match errors {
            Some(e) => (
                Some(e.iter().map(|x| x.abs()).sum::<f64>() / k),
                Some((e.iter().sum::<f64>() / k).abs()),
            ),
            None => (None, None),
        };
        let lambdas: Option<Vec<f64>> = members.iter().map(|m| m.lambda_min).collect();
        Self {
            value,
            mean: Some(mean),
            std_dev: Some(var.sqrt()),
            mean_abs_error,
            abs_mean_error,
            lambda_min: lambdas.map(|l| l.iter().sum::<f64>() / k),
            lambda_max: None,
            max_asymmetry: members.iter().map(|m| m.asymmetry).fold(0.0, f64::max),
            members,
        }
    }

    pub fn inv_lambda_min(&self) -> Option<f64> {
        self.lambda_min.map(|l| 1.0 / l)
    }

    /// `λ_max / λ_min`
    pub fn condition(&self) -> Option<f64> {
        Some(self.lambda_max? / self.lambda_min?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    /// Subcommand that produces this table.
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub reference: ErrorReference,
    pub rows: Vec<TableRow>,
}

pub const TABLE_COLUMNS: [&str; 10] = [
    "mean_djds",
    "std_djds",
    "mean_abs_error",
    "abs_mean_error",
    "lambda_min",
    "inv_lambda_min",
    "lambda_max",
    "condition",
    "max_asymmetry",
    "members",
];

impl ExperimentTable {
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    /// Error of the ensemble-mean sensitivity, `|mean djds − reference|`,
    /// per row. This is the statistic the slopes are fitted to.
    pub fn errors(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.abs_mean_error).collect()
    }

    /// Log-log slope of [`errors`](Self::errors) over the whole sweep.
    pub fn error_slope(&self) -> Option<f64> {
        fit_slope(&self.values(), &self.errors()?)
    }

    /// Slopes of the first and second half of the sweep.
    pub fn error_slopes_split(&self) -> Option<(f64, f64)> {
        split_slopes(&self.values(), &self.errors()?)
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.max_asymmetry)
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let opt = |x: Option<f64>| x.map(sci).unwrap_or_default();
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec![self.config.sweep.as_str()];
        header.extend(TABLE_COLUMNS);
        csv.write_record(&header)?;
        for r in &self.rows {
            csv.write_record([
                sci(r.value),
                opt(r.mean),
                opt(r.std_dev),
                opt(r.mean_abs_error),
                opt(r.abs_mean_error),
                opt(r.lambda_min),
                opt(r.inv_lambda_min()),
                opt(r.lambda_max),
                opt(r.condition()),
                sci(r.max_asymmetry),
                r.members.len().to_string(),
            ])?;
        }
        csv.flush().map_err(|e| Error::io("<table>", e))?;
        Ok(())
    }

    /// Writes the CSV to `path` and the configuration snapshot next to it
    /// with extension `cfg`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let cfg = path.with_extension("cfg");
        std::fs::write(&cfg, self.config.snapshot(self.command)).map_err(|e| Error::io(cfg, e))
    }
}

/// Least-squares slope of `log y` against `log x`. `None` with fewer than
/// two points or a non-positive entry.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slopes over points `0..=m` and `m..` with `m = len / 2`; the midpoint is
/// shared.
pub fn split_slopes(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() < 3 || x.len() != y.len() {
        return None;
    }
    let m = x.len() / 2;
    Some((fit_slope(&x[..=m], &y[..=m])?, fit_slope(&x[m..], &y[m..])?))
}

/// Integrates one ensemble member on `[0, horizon]` from a random state.
pub fn member_trajectory(
    sys: &dyn DynamicalSystem,
    seed: u64,
    dt: f64,
    horizon: f64,
    spin_up: f64,
) -> lss_core::Result<Trajectory> {
    let u0 = random_initial_state(sys, seed)?;
    let grid = TimeGrid::from_horizon(dt, horizon)?;
    integrate(sys, &u0, grid, spin_up, seed)
}

/// Adjoint LSS on one trajectory, returning `(dJ̄/ds, asymmetry of L_H,
/// λ_min if requested)`.
pub fn solve_member(
    traj: &Trajectory,
    sys: &dyn DynamicalSystem,
    cfg: &LssConfig,
    want_lambda: bool,
) -> lss_core::Result<(f64, f64, Option<f64>)> {
    let jbar = time_average(traj, sys)?;
    let system = assemble_adjoint(traj, sys, cfg, jbar)?;
    let psi = system.solve()?;
    let res = adjoint_sensitivity(&psi, traj, sys)?;
    let lambda = if want_lambda {
        Some(min_eigenvalue(system.matrix(), LAMBDA_MIN_TOL)?.lambda)
    } else {
        None
    };
    Ok((res.djds, system.asymmetry(), lambda))
}

fn run_error(
    cfg: &ExperimentConfig,
    value: f64,
    member: usize,
    seed: u64,
) -> impl FnOnce(LssError) -> Error {
    let system = cfg.system.name().to_string();
    let variable = cfg.sweep.as_str();
    move |source| Error::Run {
        system,
        variable,
        value,
        member,
        seed,
        source,
    }
}

fn expect_sweep(cfg: &ExperimentConfig, sweep: SweepVariable) -> Result<()> {
    cfg.validate()?;
    if cfg.sweep != sweep {
        return Err(Error::Usage(format!(
            "expected a {} sweep, got {}",
            sweep.as_str(),
            cfg.sweep.as_str()
        )));
    }
    Ok(())
}

/// Ensemble LSS sensitivities for every window length in `cfg.values`.
///
/// Every `(T, member)` pair gets its own random initial state, seeded with
/// `member_seed(cfg.seed, j · ensemble + m)` for the `j`-th `T` value.
pub fn sweep_t(cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    expect_sweep(cfg, SweepVariable::Horizon)?;
    let sys = cfg.system.build();
    let sys = sys.as_ref();
    let spin_up = cfg.spin_up_for(sys);
    let truth = sys.true_sensitivity();
    let lss = cfg.bc.lss_config(sys.dim(), cfg.alpha2, cfg.scheme);
    let e = cfg.ensemble;

    let jobs: Vec<(usize, usize)> = (0..cfg.values.len())
        .flat_map(|j| (0..e).map(move |m| (j, m)))
        .collect();
    let results: Vec<MemberResult> = jobs
        .par_iter()
        .map(|&(j, m)| {
            let horizon = cfg.values[j];
            let seed = member_seed(cfg.seed, (j * e + m) as u64);
            let fail = run_error(cfg, horizon, m, seed);
            let run = || -> lss_core::Result<MemberResult> {
                let traj = member_trajectory(sys, seed, cfg.dt, horizon, spin_up)?;
                let (djds, asymmetry, lambda_min) = solve_member(&traj, sys, &lss, cfg.lambda_min)?;
                Ok(MemberResult {
                    seed,
                    djds,
                    error: truth.map(|t| djds - t),
                    asymmetry,
                    lambda_min,
                })
            };
            run().map_err(fail)
        })
        .collect::<Result<_>>()?;

    let mut results = results.into_iter();
    let rows = cfg
        .values
        .iter()
        .map(|&v| TableRow::from_members(v, results.by_ref().take(e).collect()))
        .collect();
    Ok(ExperimentTable {
        command: "sweep-t",
        config: cfg.clone(),
        reference: truth.map_or(ErrorReference::None, ErrorReference::TrueValue),
        rows,
    })
}

/// Restriction factor of a coarse step relative to the fine step.
fn coarse_factor(coarse: f64, fine: f64, n_fine: usize) -> Result<usize> {
    let f = (coarse / fine).round();
    if f < 1.0 || (f * fine - coarse).abs() > 1e-9 * coarse {
        return Err(Error::Usage(format!(
            "coarse step {coarse} is not an integer multiple of {fine}"
        )));
    }
    let f = f as usize;
    if !n_fine.is_multiple_of(f) {
        return Err(LssError::NotDivisible {
            n_steps: n_fine,
            factor: f,
        }
        .into());
    }
    Ok(f)
}

/// Discretization error for the coarse steps in `cfg.values`, with the
/// trajectories integrated once at the fine step `cfg.dt` on `[0, cfg.horizon]`
/// and restricted. Errors are relative to [`ErrorReference::FineRichardson`],
/// which removes the finite-window error shared by all grids of a member.
pub fn sweep_dt(cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    expect_sweep(cfg, SweepVariable::TimeStep)?;
    let sys = cfg.system.build();
    let sys = sys.as_ref();
    let spin_up = cfg.spin_up_for(sys);
    let n_fine = TimeGrid::from_horizon(cfg.dt, cfg.horizon)?.n_steps();
    if n_fine % 2 != 0 {
        return Err(LssError::NotDivisible {
            n_steps: n_fine,
            factor: 2,
        }
        .into());
    }
    let factors = cfg
        .values
        .iter()
        .map(|&h| coarse_factor(h, cfg.dt, n_fine))
        .collect::<Result<Vec<_>>>()?;
    let lss = cfg.bc.lss_config(sys.dim(), cfg.alpha2, cfg.scheme);
    let reference = cfg
        .bc
        .lss_config(sys.dim(), cfg.alpha2, SchemeOrder::SecondOrder);

    let per_member: Vec<Vec<MemberResult>> = (0..cfg.ensemble)
        .into_par_iter()
        .map(|m| {
            let seed = member_seed(cfg.seed, m as u64);
            let fine = member_trajectory(sys, seed, cfg.dt, cfg.horizon, spin_up)
                .map_err(run_error(cfg, cfg.dt, m, seed))?;
            let on = |factor: usize, lss: &LssConfig| -> lss_core::Result<(f64, f64)> {
                let coarse = restrict_to_coarse(&fine, factor)?;
                let (djds, asym, _) = solve_member(&coarse, sys, lss, false)?;
                Ok((djds, asym))
            };
            let (s1, a1) = on(1, &reference).map_err(run_error(cfg, cfg.dt, m, seed))?;
            let (s2, a2) = on(2, &reference).map_err(run_error(cfg, 2.0 * cfg.dt, m, seed))?;
            let s_ref = s1 + (s1 - s2) / 3.0;
            factors
                .iter()
                .zip(&cfg.values)
                .map(|(&f, &h)| {
                    let (djds, asym) = on(f, &lss).map_err(run_error(cfg, h, m, seed))?;
                    Ok(MemberResult {
                        seed,
                        djds,
                        error: Some(djds - s_ref),
                        asymmetry: asym.max(a1).max(a2),
                        lambda_min: None,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let rows = cfg
        .values
        .iter()
        .enumerate()
        .map(|(j, &h)| TableRow::from_members(h, per_member.iter().map(|m| m[j].clone()).collect()))
        .collect();
    Ok(ExperimentTable {
        command: "sweep-dt",
        config: cfg.clone(),
        reference: ErrorReference::FineRichardson,
        rows,
    })
}

/// `λ_min(L_H)` on a single trajectory per sweep value.
///
/// A `T` sweep integrates every window from the same initial state
/// (`member_seed(cfg.seed, 0)`), so shorter windows are prefixes of longer
/// ones. An `α²` sweep reuses one trajectory of length `cfg.horizon` and
/// also estimates `λ_max`.
pub fn sweep_condition(cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    cfg.validate()?;
    if cfg.sweep == SweepVariable::TimeStep {
        return Err(Error::Usage("condition sweeps vary T or alpha2".into()));
    }
    let sys = cfg.system.build();
    let sys = sys.as_ref();
    let spin_up = cfg.spin_up_for(sys);
    let seed = member_seed(cfg.seed, 0);
    let shared =
        match cfg.sweep {
            SweepVariable::Alpha2 => {
                Some(
                    member_trajectory(sys, seed, cfg.dt, cfg.horizon, spin_up)
                        .map_err(run_error(cfg, cfg.horizon, 0, seed))?,
                )
            }
            _ => None,
        };

    let rows = cfg
        .values
        .par_iter()
        .map(|&v| {
            let run = || -> lss_core::Result<TableRow> {
                let (traj, alpha2) = match &shared {
                    Some(t) => (t.clone(), v),
                    None => (
                        member_trajectory(sys, seed, cfg.dt, v, spin_up)?,
                        cfg.alpha2,
                    ),
                };
                let lss = cfg.bc.lss_config(sys.dim(), alpha2, cfg.scheme);
                let jbar = time_average(&traj, sys)?;
                let system = assemble_adjoint(&traj, sys, &lss, jbar)?;
                let lo = min_eigenvalue(system.matrix(), LAMBDA_MIN_TOL)?;
                let hi = match cfg.sweep {
                    SweepVariable::Alpha2 => {
                        Some(max_eigenvalue(system.matrix(), LAMBDA_MAX_TOL)?.lambda)
                    }
                    _ => None,
                };
                Ok(TableRow {
                    value: v,
                    mean: None,
                    std_dev: None,
                    mean_abs_error: None,
                    abs_mean_error: None,
                    lambda_min: Some(lo.lambda),
                    lambda_max: hi,
                    max_asymmetry: system.asymmetry(),
                    members: Vec::new(),
                })
            };
            run().map_err(run_error(cfg, v, 0, seed))
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentTable {
        command: "sweep-cond",
        config: cfg.clone(),
        reference: ErrorReference::None,
        rows,
    })
}
