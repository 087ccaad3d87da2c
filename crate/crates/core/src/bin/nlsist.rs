use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nlsist::asymptotics::{asymptotic_on_grid, evolve_linear};
use nlsist::experiment::{compare, verify_bounds, write_bound_rows, ExperimentConfig, Suite};
use nlsist::pde;
use nlsist::perturbation::{evolve_perturbed, EvolveOptions, PerturbationSpec, Profile, TimeStepper, TrajectoryRecord};
use nlsist::rhp::{reconstruct_on_grid, RhpConfig};
use nlsist::scattering::direct_scattering;
use nlsist::{ComplexField, Error, Grid1D, ReflectionData};

const EXIT_ACCEPTANCE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "nlsist", version, about = "Inverse scattering experiments for the perturbed defocusing NLS")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reflection coefficient of a potential.
    Scatter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true, default_value_t = -8.0)]
        zmin: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 8.0)]
        zmax: f64,
        #[arg(long, default_value_t = 1024)]
        nz: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Potential at time t from reflection data at time 0.
    Reconstruct {
        #[arg(long)]
        r: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = -20.0)]
        xmin: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 20.0)]
        xmax: f64,
        #[arg(long, default_value_t = 512)]
        nx: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scattering data at time t of the unperturbed flow, r(0)·e^{-itz²}.
    Evolve {
        #[arg(long)]
        r: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Leading-order long-time profile.
    Asymptote {
        #[arg(long)]
        r: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = -40.0)]
        xmin: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 40.0)]
        xmax: f64,
        #[arg(long, default_value_t = 256)]
        nx: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Perturbed reflection flow dr/dt = εF.
    Perturb {
        #[arg(long)]
        r0: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = 4.0)]
        l: f64,
        #[arg(long, default_value = "gaussian:1.0")]
        profile: String,
        #[arg(long = "T", default_value_t = 8.0)]
        t_final: f64,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        /// Use Picard sweeps over the whole horizon instead of RK4.
        #[arg(long)]
        picard: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split-step oracle for the perturbed PDE.
    Pde {
        #[arg(long)]
        q0: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = 4.0)]
        l: f64,
        #[arg(long, default_value = "gaussian:1.0")]
        profile: String,
        #[arg(long = "T", default_value_t = 10.0)]
        t_final: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        mass_trace: Option<PathBuf>,
    },
    /// Empirical checks of decay and boundedness claims.
    VerifyBounds {
        #[arg(long)]
        suite: Suite,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// IST vs asymptotic profile vs split-step oracle on a t-sweep.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Pass,
    Fail,
}

fn spec_from(epsilon: f64, l: f64, profile: &str) -> nlsist::Result<PerturbationSpec> {
    PerturbationSpec::new(epsilon, l, profile.parse::<Profile>()?)
}

fn read_r(path: &Path) -> nlsist::Result<ReflectionData> {
    ReflectionData::new(ComplexField::read_csv(path)?)
}

fn load_config(path: &Option<PathBuf>) -> nlsist::Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn write_trajectory(dir: &Path, traj: &TrajectoryRecord) -> nlsist::Result<()> {
    fs::create_dir_all(dir)?;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        snap.r().write_csv(dir.join(format!("r_{k:05}.csv")))?;
    }
    let mut w = csv::Writer::from_path(dir.join("norms.csv"))?;
    w.write_record(["t", "h11", "sup", "f_h11"])?;
    for k in 0..traj.times.len() {
        let f = traj.f_norms.get(k).copied().unwrap_or(f64::NAN);
        w.write_record(&[
            traj.times[k].to_string(),
            traj.h11_norms[k].to_string(),
            traj.sup_norms[k].to_string(),
            f.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run(cmd: Command) -> nlsist::Result<Outcome> {
    match cmd {
        Command::Scatter { input, zmin, zmax, nz, out } => {
            let q = ComplexField::read_csv(&input)?;
            let r = direct_scattering(&q, &Grid1D::from_range(zmin, zmax, nz)?)?;
            r.r().write_csv(&out)?;
            log::info!("sup |r| = {:.6}, ‖r‖_H11 = {:.6}", r.rho(), r.eta());
        }
        Command::Reconstruct { r, t, xmin, xmax, nx, tol, out } => {
            let r = read_r(&r)?;
            let rec = reconstruct_on_grid(&r, t, &Grid1D::from_range(xmin, xmax, nx)?, RhpConfig::with_tol(tol))?;
            rec.q.write_csv(&out)?;
            let mut w = csv::Writer::from_path(sidecar(&out, "residuals"))?;
            w.write_record(["x", "residual", "iterations"])?;
            for d in &rec.diagnostics {
                w.write_record(&[d.x.to_string(), d.residual.to_string(), d.iterations.to_string()])?;
            }
            w.flush()?;
        }
        Command::Evolve { r, t, out } => {
            evolve_linear(&read_r(&r)?, t).r().write_csv(&out)?;
        }
        Command::Asymptote { r, t, xmin, xmax, nx, out } => {
            let q = asymptotic_on_grid(&read_r(&r)?, t, &Grid1D::from_range(xmin, xmax, nx)?)?;
            q.write_csv(&out)?;
        }
        Command::Perturb { r0, epsilon, l, profile, t_final, steps, picard, out } => {
            let spec = spec_from(epsilon, l, &profile)?;
            let stepper = if picard { TimeStepper::Picard { tol: 1e-10, max_sweeps: 50 } } else { TimeStepper::Rk4 };
            let opts = EvolveOptions { stepper, ..Default::default() };
            match evolve_perturbed(&read_r(&r0)?, &spec, t_final, steps, &opts) {
                Ok(traj) => write_trajectory(&out, &traj)?,
                Err(Error::Instability { t, reason, completed_steps, trajectory }) => {
                    if let Some(traj) = &trajectory {
                        write_trajectory(&out, traj)?;
                    }
                    return Err(Error::Instability { t, reason, completed_steps, trajectory });
                }
                Err(e) => return Err(e),
            }
        }
        Command::Pde { q0, epsilon, l, profile, t_final, dt, out, mass_trace } => {
            let spec = spec_from(epsilon, l, &profile)?;
            let q0 = ComplexField::read_csv(&q0)?;
            let res = pde::run(&q0, &spec, t_final, dt)?;
            res.state.q.write_csv(&out)?;
            if let Some(path) = mass_trace {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["t", "mass"])?;
                for (t, m) in &res.mass_trace {
                    w.write_record(&[t.to_string(), m.to_string()])?;
                }
                w.flush()?;
            }
            log::info!("mass drift {:.3e}, max edge ratio {:.3e}", res.mass_drift(), res.max_edge_ratio);
        }
        Command::VerifyBounds { suite, config, out } => {
            let cfg = load_config(&config)?;
            let rows = verify_bounds(suite, &cfg)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                cfg.echo(dir)?;
            }
            write_bound_rows(&rows, &out)?;
            if rows.iter().any(|r| !r.pass) {
                return Ok(Outcome::Fail);
            }
        }
        Command::Compare { config, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(out) = out {
                cfg.output = out;
            }
            cfg.echo(&cfg.output)?;
            let report = compare(&cfg)?;
            report.write_csv(cfg.output.join("compare.csv"))?;
            for (t, msg) in &report.failures {
                eprintln!("t = {t}: {msg}");
            }
            if !report.failures.is_empty() {
                return Err(Error::SolverFailure { history: Vec::new() });
            }
            if report.passes() == Some(false) {
                return Ok(Outcome::Fail);
            }
        }
    }
    Ok(Outcome::Pass)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SolverFailure { .. }
        | Error::FEvaluation { .. }
        | Error::IntegratorFailure(_)
        | Error::Instability { .. }
        | Error::DegenerateEntry { .. } => EXIT_SOLVER,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with 2 on usage errors, which is reserved for acceptance failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not set thread count: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(EXIT_ACCEPTANCE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
