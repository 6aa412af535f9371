use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lss_core::{
    adjoint_sensitivity, assemble_adjoint, assemble_forward, forward_sensitivity, member_seed,
    min_eigenvalue, time_average, DynamicalSystem, LssConfig, SchemeOrder, Trajectory,
};

use crate::config::{load_config, to_args};
use crate::error::{Error, Result};
use crate::experiments::{
    member_trajectory, sweep_condition, sweep_dt, sweep_t, BoundaryMode, ExperimentConfig,
    ExperimentTable, SweepVariable, SystemKind, LAMBDA_MIN_TOL,
};
use crate::io::{load_trajectory, save_trajectory, sci, write_lh, write_results};
use crate::plot::tables_plot;

const SUBCOMMANDS: [&str; 6] = [
    "trajectory",
    "solve",
    "sweep-t",
    "sweep-dt",
    "sweep-cond",
    "duality-check",
];

#[derive(Debug, Parser)]
#[command(
    name = "lss",
    version,
    about = "Adjoint least-squares shadowing sensitivities of chaotic ODEs",
    arg_required_else_help = true
)]
struct Cli {
    /// Key-value file supplying defaults for the subcommand's flags; flags
    /// given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scheme {
    First,
    Second,
}

impl From<Scheme> for SchemeOrder {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::First => SchemeOrder::FirstOrder,
            Scheme::Second => SchemeOrder::SecondOrder,
        }
    }
}

#[derive(Debug, Args)]
struct SystemArgs {
    /// lorenz63 or oscillator
    #[arg(long, default_value = "lorenz63")]
    system: SystemKind,
    /// Time step (default 0.02 for lorenz63, 0.01 for oscillator)
    #[arg(long)]
    dt: Option<f64>,
    /// Root seed of the random initial states
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Spin-up time discarded before the window (default: per system)
    #[arg(long = "spin-up")]
    spin_up: Option<f64>,
}

impl SystemArgs {
    fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| self.system.default_dt())
    }

    fn spin_up(&self, sys: &dyn DynamicalSystem) -> f64 {
        self.spin_up.unwrap_or_else(|| sys.default_spin_up())
    }

    fn experiment(&self, sweep: SweepVariable, values: Vec<f64>) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(self.system, sweep, values);
        cfg.dt = self.dt();
        cfg.seed = self.seed;
        cfg.spin_up = self.spin_up;
        cfg
    }
}

#[derive(Debug, Args)]
struct LssArgs {
    /// Time-dilation weight α²
    #[arg(long, default_value_t = 100.0)]
    alpha2: f64,
    #[arg(long, value_enum, default_value = "second")]
    scheme: Scheme,
    /// Adjoint boundary value c in ψ(0) = ψ(T) = c·1
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    bc: f64,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// CSV output (stdout when omitted); a `.cfg` snapshot is written next to it
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG log-log plot of the table
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory and save its midpoint states
    #[command(args_override_self = true)]
    Trajectory {
        #[command(flatten)]
        sys: SystemArgs,
        /// Window length
        #[arg(long = "T", default_value_t = 100.0)]
        horizon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Adjoint LSS sensitivity of one trajectory
    #[command(args_override_self = true)]
    Solve {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        lss: LssArgs,
        /// Window length of a freshly integrated trajectory
        #[arg(long = "T", default_value_t = 100.0)]
        horizon: f64,
        /// Use a saved trajectory instead of integrating one
        #[arg(long, conflicts_with_all = ["dt", "horizon", "seed", "spin_up"])]
        trajectory: Option<PathBuf>,
        /// Also estimate λ_min(L_H)
        #[arg(long = "lambda-min")]
        lambda_min: bool,
        /// Write L_H in the block text format
        #[arg(long = "dump-lh")]
        dump_lh: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ensemble sensitivity error against the window length
    #[command(name = "sweep-t", args_override_self = true)]
    SweepT {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        lss: LssArgs,
        /// Window lengths, comma-separated
        #[arg(long = "T", value_delimiter = ',', required = true, action = clap::ArgAction::Set, num_args = 1)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        ensemble: usize,
        /// Also estimate λ_min(L_H) for every member
        #[arg(long = "lambda-min")]
        lambda_min: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Discretization error on restrictions of a fine trajectory
    #[command(name = "sweep-dt", args_override_self = true)]
    SweepDt {
        #[command(flatten)]
        sys: SystemArgs,
        /// Fixed window length
        #[arg(long = "T", default_value_t = 50.0)]
        horizon: f64,
        /// Coarsening factors of the fine step, comma-separated
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16", action = clap::ArgAction::Set, num_args = 1)]
        factors: Vec<usize>,
        /// Schemes to run, comma-separated
        #[arg(long = "scheme", value_enum, value_delimiter = ',', default_value = "first,second", action = clap::ArgAction::Set, num_args = 1)]
        schemes: Vec<Scheme>,
        #[arg(long, default_value_t = 100.0)]
        alpha2: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        bc: f64,
        #[arg(long, default_value_t = 10)]
        ensemble: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// 1/λ_min(L_H) against T, or λ_max/λ_min against α²
    #[command(name = "sweep-cond", args_override_self = true)]
    SweepCond {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        lss: LssArgs,
        /// Window lengths; a single value when sweeping α²
        #[arg(long = "T", value_delimiter = ',', required = true, action = clap::ArgAction::Set, num_args = 1)]
        values: Vec<f64>,
        /// α² values, comma-separated
        #[arg(long = "alpha2-sweep", value_delimiter = ',', action = clap::ArgAction::Set, num_args = 1)]
        alpha2_sweep: Option<Vec<f64>>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare forward and adjoint sensitivities on one trajectory
    #[command(name = "duality-check", args_override_self = true)]
    DualityCheck {
        #[command(flatten)]
        sys: SystemArgs,
        /// Number of time steps
        #[arg(long = "N", default_value_t = 200)]
        n_steps: usize,
        #[arg(long, default_value_t = 100.0)]
        alpha2: f64,
        #[arg(long, value_enum, default_value = "second")]
        scheme: Scheme,
        /// Largest accepted difference
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

/// Moves `--config FILE` out of `argv` and splices the file's entries in
/// right after the subcommand name, so later command-line flags override them.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(
                it.next()
                    .ok_or_else(|| Error::Usage("--config needs a file".into()))?,
            );
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let extra = to_args(&load_config(Path::new(&path))?);
    let Some(pos) = rest
        .iter()
        .skip(1)
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
    else {
        return Err(Error::Usage("--config needs a subcommand".into()));
    };
    let at = pos + 2;
    rest.splice(at..at, extra);
    Ok(rest)
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 on success, 1 for invalid input, 2 for numerical failures.
pub fn run_cli<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn write_table(tables: &[ExperimentTable], output: &OutputArgs, out: &mut dyn Write) -> Result<()> {
    match &output.out {
        Some(path) if tables.len() == 1 => tables[0].save(path)?,
        Some(path) => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
            for t in tables {
                let name = format!("{stem}_{}.csv", t.config.scheme.as_str());
                t.save(&path.with_file_name(name))?;
            }
        }
        None => {
            for t in tables {
                if tables.len() > 1 {
                    writeln!(out, "# scheme: {}", t.config.scheme.as_str())
                        .map_err(|e| Error::io("<stdout>", e))?;
                }
                t.write_csv(&mut *out)?;
            }
        }
    }
    if let Some(path) = &output.plot {
        let refs: Vec<&ExperimentTable> = tables.iter().collect();
        std::fs::write(path, tables_plot(&refs).to_svg()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn lss_config(lss: &LssArgs, dim: usize) -> LssConfig {
    BoundaryMode::from_value(lss.bc).lss_config(dim, lss.alpha2, lss.scheme.into())
}

fn fresh_trajectory(
    sys_args: &SystemArgs,
    sys: &dyn DynamicalSystem,
    horizon: f64,
) -> Result<Trajectory> {
    let seed = member_seed(sys_args.seed, 0);
    Ok(member_trajectory(
        sys,
        seed,
        sys_args.dt(),
        horizon,
        sys_args.spin_up(sys),
    )?)
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let stdout_err = |e| Error::io("<stdout>", e);
    match command {
        Command::Trajectory {
            sys: sys_args,
            horizon,
            out: path,
        } => {
            let sys = sys_args.system.build();
            let traj = fresh_trajectory(&sys_args, sys.as_ref(), horizon)?;
            save_trajectory(&path, &traj)?;
            writeln!(
                err,
                "wrote {} midpoint states to {}",
                traj.n_steps() + 2,
                path.display()
            )
            .map_err(stdout_err)?;
        }
        Command::Solve {
            sys: sys_args,
            lss,
            horizon,
            trajectory,
            lambda_min,
            dump_lh,
            out: path,
        } => {
            let sys = sys_args.system.build();
            let sys = sys.as_ref();
            let traj = match &trajectory {
                Some(p) => {
                    let t = load_trajectory(p)?;
                    if t.system_name() != sys.name() {
                        return Err(Error::Usage(format!(
                            "{} holds a {} trajectory but --system is {}",
                            p.display(),
                            t.system_name(),
                            sys.name()
                        )));
                    }
                    t
                }
                None => fresh_trajectory(&sys_args, sys, horizon)?,
            };
            let cfg = lss_config(&lss, sys.dim());
            let jbar = time_average(&traj, sys)?;
            let system = assemble_adjoint(&traj, sys, &cfg, jbar)?;
            if let Some(p) = &dump_lh {
                let file = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
                write_lh(std::io::BufWriter::new(file), system.matrix())?;
            }
            let psi = system.solve()?;
            let mut result = adjoint_sensitivity(&psi, &traj, sys)?;
            if lambda_min {
                result.lambda_min = Some(min_eigenvalue(system.matrix(), LAMBDA_MIN_TOL)?.lambda);
            }
            match &path {
                Some(p) => {
                    let file = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
                    write_results(file, &[result])?;
                }
                None => write_results(&mut *out, &[result])?,
            }
        }
        Command::SweepT {
            sys,
            lss,
            values,
            ensemble,
            lambda_min,
            output,
        } => {
            let mut cfg = sys.experiment(SweepVariable::Horizon, values);
            cfg.alpha2 = lss.alpha2;
            cfg.scheme = lss.scheme.into();
            cfg.bc = BoundaryMode::from_value(lss.bc);
            cfg.ensemble = ensemble;
            cfg.lambda_min = lambda_min;
            cfg.output = output.out.clone();
            write_table(&[sweep_t(&cfg)?], &output, out)?;
        }
        Command::SweepDt {
            sys,
            horizon,
            factors,
            schemes,
            alpha2,
            bc,
            ensemble,
            output,
        } => {
            if factors.contains(&0) {
                return Err(Error::Usage("factors must be at least 1".into()));
            }
            let dt = sys.dt();
            let mut tables = Vec::new();
            for scheme in schemes {
                let mut cfg = sys.experiment(
                    SweepVariable::TimeStep,
                    factors.iter().map(|&f| f as f64 * dt).collect(),
                );
                cfg.horizon = horizon;
                cfg.alpha2 = alpha2;
                cfg.bc = BoundaryMode::from_value(bc);
                cfg.scheme = scheme.into();
                cfg.ensemble = ensemble;
                cfg.output = output.out.clone();
                let table = sweep_dt(&cfg)?;
                if let Some(p) = table.error_slope() {
                    writeln!(err, "{} scheme: fitted order {p:.3}", cfg.scheme.as_str())
                        .map_err(stdout_err)?;
                }
                tables.push(table);
            }
            write_table(&tables, &output, out)?;
        }
        Command::SweepCond {
            sys,
            lss,
            values,
            alpha2_sweep,
            output,
        } => {
            let cfg = match alpha2_sweep {
                Some(a) => {
                    let [horizon] = values[..] else {
                        return Err(Error::Usage(
                            "an alpha2 sweep takes a single --T value".into(),
                        ));
                    };
                    let mut cfg = sys.experiment(SweepVariable::Alpha2, a);
                    cfg.horizon = horizon;
                    cfg
                }
                None => {
                    let mut cfg = sys.experiment(SweepVariable::Horizon, values);
                    cfg.alpha2 = lss.alpha2;
                    cfg
                }
            };
            let mut cfg = cfg;
            cfg.scheme = lss.scheme.into();
            cfg.bc = BoundaryMode::from_value(lss.bc);
            cfg.output = output.out.clone();
            write_table(&[sweep_condition(&cfg)?], &output, out)?;
        }
        Command::DualityCheck {
            sys: sys_args,
            n_steps,
            alpha2,
            scheme,
            tol,
        } => {
            let sys = sys_args.system.build();
            let sys = sys.as_ref();
            let horizon = n_steps as f64 * sys_args.dt();
            let traj = fresh_trajectory(&sys_args, sys, horizon)?;
            let cfg = LssConfig::homogeneous(sys.dim(), alpha2, scheme.into());
            let jbar = time_average(&traj, sys)?;
            let psi = assemble_adjoint(&traj, sys, &cfg, jbar)?.solve()?;
            let adjoint = adjoint_sensitivity(&psi, &traj, sys)?.djds;
            let fsol = assemble_forward(&traj, sys, &cfg)?.solve()?;
            let forward = forward_sensitivity(&fsol, &traj, sys, jbar)?.djds;
            let difference = (forward - adjoint).abs();
            writeln!(out, "adjoint,{}", sci(adjoint)).map_err(stdout_err)?;
            writeln!(out, "forward,{}", sci(forward)).map_err(stdout_err)?;
            writeln!(out, "difference,{}", sci(difference)).map_err(stdout_err)?;
            if !(difference < tol) {
                return Err(Error::Duality {
                    difference,
                    limit: tol,
                });
            }
        }
    }
    Ok(())
}
