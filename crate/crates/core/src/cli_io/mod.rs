//! Command-line driver: `solve`, `sweep`, `evolve` and `verify`.
//!
//! Exit codes: 0 success, 2 usage or unreadable input, 3 solver error,
//! 4 every sweep row failed, 5 verification failed, 1 output I/O failure.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::constitutive::{ConstitutiveModel, ValidatedModel};
use crate::error::SolverError;
use crate::fixed_point::{Parameters, PicardDiagnostics, DEFAULT_MAX_ITER, DEFAULT_PICARD_TOL};
use crate::radial_ops::{reconstruct_geometry, RadialGrid, ZetaProfile, DEFAULT_INTERVALS};
use crate::shooting::{mu_grid, solve_separable, sweep, SolutionProfile, SolveSettings, DEFAULT_TOL_BC, DEFAULT_TOL_BRHO};
use crate::temporal::{assemble_motion, collapse_time, evolve_q, total_mass, Regime};
use crate::verify::{pk_stress, residual_report, residual_tolerance, EQUIVALENCE_TOL};

use config::Config;
use output::{fmt_num, read_csv, sha256_file, write_csv, CsvTable, RunManifest};

pub const DEFAULT_MODEL: &str = "builtin:kappa=3100";
pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_DT: f64 = 1e-3;
/// Relative tolerance for stored columns against values recomputed from `zeta`.
pub const COLUMN_TOL: f64 = 1e-12;

pub const PROFILE_FILE: &str = "profile.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const Q_FILE: &str = "q.csv";
pub const VERIFY_FILE: &str = "verify.txt";

pub const PROFILE_COLUMNS: [&str; 9] = ["R", "zeta", "f", "fprime", "lambda", "y", "c1", "c2", "rho_t0"];
pub const SWEEP_COLUMNS: [&str; 8] = ["mu", "brho0", "y1", "fprime0", "zeta_norm", "iters", "bc_residual", "error"];
pub const Q_COLUMNS: [&str; 4] = ["t", "q", "qdot", "energy_drift"];
pub const SNAPSHOT_COLUMNS: [&str; 4] = ["R", "phi", "u", "rho"];

#[derive(Parser, Debug)]
#[command(name = "homolog", version, about = "Separable solutions of a self-gravitating hyperelastic ball")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve for the profile and reference density at one mu.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
    },
    /// Solve over an equispaced range of mu.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        mu_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        mu_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Integrate the amplitude equation and emit field snapshots.
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        qdot0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t_end: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        dt: Option<f64>,
        /// Comma-separated times, e.g. `0,1.5,3`.
        #[arg(long, allow_hyphen_values = true)]
        snapshot_times: Option<String>,
        /// Directory of a previous `solve`; otherwise snapshots trigger a solve.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Check a solved profile directory against both forms of the profile equation.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        max_residual: Option<f64>,
        #[arg(long)]
        max_equivalence: Option<f64>,
        #[arg(long)]
        max_bc: Option<f64>,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Constitutive model, `builtin:kappa=<float>`.
    #[arg(long)]
    pub model: Option<String>,
    /// Gravitational constant.
    #[arg(long = "G", allow_hyphen_values = true)]
    pub gravity: Option<f64>,
    /// Grid intervals, even and at least 16.
    #[arg(long = "N", allow_hyphen_values = true)]
    pub intervals: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol_picard: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol_bc: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol_brho: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Solver(SolverError),
    AllFailed,
    VerificationFailed(Vec<String>),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(_) => 3,
            CliError::AllFailed => 4,
            CliError::VerificationFailed(_) => 5,
            CliError::Io(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => format!("usage error: {m}"),
            CliError::Solver(e) => format!("solver error: {}: {e}", e.kind()),
            CliError::AllFailed => "every sweep row failed".into(),
            CliError::VerificationFailed(checks) => format!("verification failed: {}", checks.join(", ")),
            CliError::Io(m) => format!("i/o error: {m}"),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        CliError::Solver(e)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

pub fn run() -> i32 {
    run_with(std::env::args())
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run_with<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let command_line = args.iter().skip(1).cloned().collect();
    match dispatch(cli.command, command_line) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("homolog: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, command_line: Vec<String>) -> Result<(), CliError> {
    match command {
        Command::Solve { common, mu } => run_solve(&common, mu, command_line),
        Command::Sweep { common, mu_min, mu_max, steps, jobs } => {
            run_sweep(&common, SweepArgs { mu_min, mu_max, steps, jobs }, command_line)
        }
        Command::Evolve { common, mu, qdot0, t_end, dt, snapshot_times, profile } => run_evolve(
            &common,
            EvolveArgs { mu, qdot0, t_end, dt, snapshot_times, profile },
            command_line,
        ),
        Command::Verify { common, profile, max_residual, max_equivalence, max_bc } => run_verify(
            &common,
            VerifyArgs { profile, max_residual, max_equivalence, max_bc },
            command_line,
        ),
    }
}

/// Flag values merged over the configuration file.
struct Resolver {
    config: Config,
}

impl Resolver {
    fn new(common: &CommonArgs) -> Result<Self, CliError> {
        let config = match &common.config {
            Some(p) => Config::load(p).map_err(CliError::Usage)?,
            None => Config::default(),
        };
        Ok(Resolver { config })
    }

    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.config.get(key).map_err(CliError::Usage),
        }
    }
}

struct Common {
    model_spec: String,
    gravity: f64,
    grid: RadialGrid,
    settings: SolveSettings,
    out: PathBuf,
}

impl Common {
    fn validated_model(&self) -> Result<ValidatedModel, CliError> {
        let model = ConstitutiveModel::parse(&self.model_spec).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(ValidatedModel::new(model)?)
    }

    fn manifest(&self, command: &str, command_line: Vec<String>) -> RunManifest {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            command_line,
            model: self.model_spec.clone(),
            gravity: self.gravity,
            intervals: self.grid.intervals(),
            mu: None,
            tolerances: output::Tolerances {
                picard: self.settings.tol_picard,
                bc: self.settings.tol_bc,
                brho: self.settings.tol_brho,
                max_iter: self.settings.max_iter,
            },
            brho0: None,
            boundary_residual: None,
            iterations: None,
            residuals: None,
            evolve: None,
            sweep: None,
            files: BTreeMap::new(),
            metadata: output::Metadata { wall_time_seconds: 0.0 },
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be finite, got {v}")))
    }
}

fn resolve_common(args: &CommonArgs, r: &Resolver) -> Result<Common, CliError> {
    let model_spec = r.pick(args.model.clone(), "model")?.unwrap_or_else(|| DEFAULT_MODEL.into());
    let gravity = positive("G", r.pick(args.gravity, "G")?.unwrap_or(1.0))?;
    let n = r.pick(args.intervals, "N")?.unwrap_or(DEFAULT_INTERVALS as i64);
    let grid = usize::try_from(n)
        .ok()
        .and_then(|n| RadialGrid::new(n).ok())
        .ok_or_else(|| CliError::Usage(format!("--N must be even and >= 16, got {n}")))?;
    let settings = SolveSettings {
        tol_picard: positive("tol-picard", r.pick(args.tol_picard, "tol-picard")?.unwrap_or(DEFAULT_PICARD_TOL))?,
        tol_bc: positive("tol-bc", r.pick(args.tol_bc, "tol-bc")?.unwrap_or(DEFAULT_TOL_BC))?,
        tol_brho: positive("tol-brho", r.pick(args.tol_brho, "tol-brho")?.unwrap_or(DEFAULT_TOL_BRHO))?,
        max_iter: DEFAULT_MAX_ITER,
    };
    let out = r.pick(args.out.clone(), "out")?.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok(Common { model_spec, gravity, grid, settings, out })
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn finish_manifest(
    mut manifest: RunManifest,
    dir: &Path,
    files: &[String],
    started: Instant,
) -> Result<(), CliError> {
    manifest.hash_files(dir, files).map_err(io_err(dir))?;
    manifest.metadata.wall_time_seconds = started.elapsed().as_secs_f64();
    let path = dir.join(MANIFEST_FILE);
    manifest.write(&path).map_err(io_err(&path))
}

const PROFILE_UNITS: &str = "R and f in reference radii; zeta, fprime, lambda, y dimensionless; \
c1, c2 (Piola-Kirchhoff stress) and rho_t0 (density at t = 0) in units set by G and the reference density";

pub fn write_profile(path: &Path, p: &SolutionProfile) -> std::io::Result<()> {
    let geo = &p.geometry;
    let brho = p.params.brho;
    let rows = (0..p.grid.len()).map(|i| {
        let (c1, c2) = pk_stress(&p.model, brho, geo.y_dev[i], geo.lambda[i]);
        let rho = brho / (geo.fprime[i] * geo.lambda[i] * geo.lambda[i]);
        [p.grid.node(i), p.zeta.values[i], geo.f[i], geo.fprime[i], geo.lambda[i], geo.y[i], c1, c2, rho]
            .into_iter()
            .map(fmt_num)
            .collect()
    });
    write_csv(path, PROFILE_UNITS, &PROFILE_COLUMNS, rows)
}

fn run_solve(args: &CommonArgs, mu: Option<f64>, command_line: Vec<String>) -> Result<(), CliError> {
    let started = Instant::now();
    let r = Resolver::new(args)?;
    let common = resolve_common(args, &r)?;
    let mu = finite("mu", r.pick(mu, "mu")?.unwrap_or(0.0))?;
    let model = common.validated_model()?;
    let profile = solve_separable(&model, mu, common.gravity, common.grid, &common.settings)?;

    create_dir(&common.out)?;
    let path = common.out.join(PROFILE_FILE);
    write_profile(&path, &profile).map_err(io_err(&path))?;

    let mut manifest = common.manifest("solve", command_line);
    manifest.mu = Some(mu);
    manifest.brho0 = Some(profile.rho0());
    manifest.boundary_residual = Some(profile.boundary_residual);
    manifest.iterations = Some(output::Iterations {
        bisection: profile.bisection_iterations,
        picard: profile.picard.iterations,
    });
    manifest.residuals = profile.residuals.clone();
    finish_manifest(manifest, &common.out, &[PROFILE_FILE.to_string()], started)?;
    println!(
        "solve: mu = {mu}, brho0 = {}, g'(y(1)) = {:e}, wrote {}",
        fmt_num(profile.rho0()),
        profile.boundary_residual,
        common.out.display()
    );
    Ok(())
}

struct SweepArgs {
    mu_min: Option<f64>,
    mu_max: Option<f64>,
    steps: Option<usize>,
    jobs: Option<usize>,
}

fn run_sweep(args: &CommonArgs, sweep_args: SweepArgs, command_line: Vec<String>) -> Result<(), CliError> {
    let started = Instant::now();
    let r = Resolver::new(args)?;
    let common = resolve_common(args, &r)?;
    let steps = r
        .pick(sweep_args.steps, "steps")?
        .ok_or_else(|| CliError::Usage("--steps is required".into()))?;
    let default_jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let jobs = r.pick(sweep_args.jobs, "jobs")?.unwrap_or(default_jobs);
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let mu_min = r.pick(sweep_args.mu_min, "mu-min")?;
    let mu_max = r.pick(sweep_args.mu_max, "mu-max")?;
    let (lo, hi) = match (mu_min, mu_max, steps) {
        (lo, hi, 0) => (lo.unwrap_or(0.0), hi.unwrap_or(0.0)),
        (Some(lo), Some(hi), _) => (finite("mu-min", lo)?, finite("mu-max", hi)?),
        _ => return Err(CliError::Usage("--mu-min and --mu-max are required".into())),
    };
    if lo > hi {
        return Err(CliError::Usage(format!("--mu-min {lo} exceeds --mu-max {hi}")));
    }
    let model = common.validated_model()?;
    let rows = sweep(&model, common.gravity, &mu_grid(lo, hi, steps), common.grid, &common.settings, jobs);
    let succeeded = rows.iter().filter(|r| r.outcome.is_ok()).count();

    create_dir(&common.out)?;
    let path = common.out.join(SWEEP_FILE);
    let table = rows.iter().map(|row| {
        let mut cells = vec![fmt_num(row.mu)];
        match &row.outcome {
            Ok(s) => {
                cells.extend([s.brho0, s.y1, s.fprime0, s.zeta_norm].map(fmt_num));
                cells.push(s.iterations.to_string());
                cells.push(fmt_num(s.bc_residual));
                cells.push(String::new());
            }
            Err(e) => {
                cells.extend(std::iter::repeat_n(String::new(), 6));
                cells.push(format!("{}: {e}", e.kind()));
            }
        }
        cells
    });
    write_csv(
        &path,
        "mu, brho0 and bc_residual in model units; y1, fprime0, zeta_norm dimensionless; iters counts bisection steps",
        &SWEEP_COLUMNS,
        table,
    )
    .map_err(io_err(&path))?;

    let mut manifest = common.manifest("sweep", command_line);
    manifest.sweep = Some(output::SweepRecord {
        mu_min: lo,
        mu_max: hi,
        steps,
        jobs,
        succeeded,
        failed: rows.len() - succeeded,
    });
    finish_manifest(manifest, &common.out, &[SWEEP_FILE.to_string()], started)?;
    println!("sweep: {succeeded}/{} rows solved, wrote {}", rows.len(), common.out.display());
    if steps > 0 && succeeded == 0 {
        return Err(CliError::AllFailed);
    }
    Ok(())
}

struct EvolveArgs {
    mu: Option<f64>,
    qdot0: Option<f64>,
    t_end: Option<f64>,
    dt: Option<f64>,
    snapshot_times: Option<String>,
    profile: Option<PathBuf>,
}

fn parse_times(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad snapshot time '{s}'")))
        })
        .collect()
}

fn run_evolve(args: &CommonArgs, ev: EvolveArgs, command_line: Vec<String>) -> Result<(), CliError> {
    let started = Instant::now();
    let r = Resolver::new(args)?;
    let common = resolve_common(args, &r)?;
    let t_end = r
        .pick(ev.t_end, "t-end")?
        .ok_or_else(|| CliError::Usage("--t-end is required".into()))?;
    let t_end = positive("t-end", t_end)?;
    let dt = positive("dt", r.pick(ev.dt, "dt")?.unwrap_or(DEFAULT_DT))?;
    let qdot0 = finite("qdot0", r.pick(ev.qdot0, "qdot0")?.unwrap_or(0.0))?;
    let times = match r.pick(ev.snapshot_times, "snapshot-times")? {
        Some(s) => parse_times(&s)?,
        None => Vec::new(),
    };
    if let Some(t) = times.iter().find(|&&t| !(0.0..=t_end).contains(&t)) {
        return Err(CliError::Usage(format!("snapshot time {t} outside [0, {t_end}]")));
    }
    let profile_dir: Option<PathBuf> = r.pick(ev.profile, "profile")?;
    let loaded = match &profile_dir {
        Some(dir) => Some(load_profile(dir)?),
        None => None,
    };
    let mu_flag = r.pick(ev.mu, "mu")?;
    let mu = match (&loaded, mu_flag) {
        (Some(l), Some(mu)) if mu != l.solution.params.mu => {
            return Err(CliError::Usage(format!(
                "--mu {mu} differs from the profile's mu {}",
                l.solution.params.mu
            )))
        }
        (Some(l), _) => l.solution.params.mu,
        (None, mu) => finite("mu", mu.unwrap_or(0.0))?,
    };

    let temporal = evolve_q(mu, qdot0, t_end, dt)?;
    let collapse = match temporal.regime {
        Regime::Collapsing => Some(collapse_time(mu, qdot0, dt)?),
        _ => None,
    };
    let solution = match (loaded, times.is_empty()) {
        (Some(l), _) => Some(l.solution),
        (None, false) => {
            let model = common.validated_model()?;
            Some(solve_separable(&model, mu, common.gravity, common.grid, &common.settings)?)
        }
        (None, true) => None,
    };

    create_dir(&common.out)?;
    let mut files = vec![Q_FILE.to_string()];
    let q_path = common.out.join(Q_FILE);
    let rows = (0..temporal.t.len()).map(|j| {
        [temporal.t[j], temporal.q[j], temporal.qdot[j], temporal.energy_drift[j]]
            .into_iter()
            .map(fmt_num)
            .collect()
    });
    write_csv(
        &q_path,
        "t in units set by G and the reference density; q dimensionless; qdot per unit t; energy_drift per unit t squared",
        &Q_COLUMNS,
        rows,
    )
    .map_err(io_err(&q_path))?;

    let mut snapshots = Vec::new();
    if let Some(sol) = &solution {
        for (k, &t) in times.iter().enumerate() {
            let fields = assemble_motion(sol, &temporal, t)?;
            let name = format!("snapshot_{k:03}.csv");
            let path = common.out.join(&name);
            let rows = (0..sol.grid.len()).map(|i| {
                [sol.grid.node(i), fields.phi[i], fields.u[i], fields.rho[i]]
                    .into_iter()
                    .map(fmt_num)
                    .collect()
            });
            write_csv(
                &path,
                &format!("t = {}; R and phi in reference radii; u per unit t; rho in model density units", fmt_num(t)),
                &SNAPSHOT_COLUMNS,
                rows,
            )
            .map_err(io_err(&path))?;
            snapshots.push(output::Snapshot { file: name.clone(), t, q: fields.q, mass: total_mass(sol, &fields) });
            files.push(name);
        }
    }

    let mut manifest = common.manifest("evolve", command_line);
    if let Some(sol) = &solution {
        manifest.model = sol.model.label();
        manifest.gravity = sol.params.gravity;
        manifest.intervals = sol.grid.intervals();
        manifest.brho0 = Some(sol.rho0());
        manifest.boundary_residual = Some(sol.boundary_residual);
    }
    manifest.mu = Some(mu);
    manifest.evolve = Some(output::EvolveRecord {
        qdot0,
        t_end,
        dt,
        regime: temporal.regime.to_string(),
        method: format!("{:?}", temporal.method),
        e_eff: temporal.e_eff,
        max_energy_drift: temporal.max_drift,
        stopped_at_min: temporal.stopped_at_min,
        samples: temporal.t.len(),
        collapse_time: collapse.as_ref().map(|c| c.time),
        collapse_exponent: collapse.as_ref().map(|c| c.exponent),
        snapshots,
    });
    finish_manifest(manifest, &common.out, &files, started)?;
    print!("evolve: regime {}, q({}) = {}", temporal.regime, temporal.t_max(), temporal.q.last().unwrap());
    if let Some(c) = &collapse {
        print!(", collapse time {}", c.time);
    }
    println!(", wrote {}", common.out.display());
    Ok(())
}

/// A profile directory read back from disk.
pub struct LoadedProfile {
    pub manifest: RunManifest,
    pub table: CsvTable,
    pub solution: SolutionProfile,
}

/// Reads `profile.csv` and `manifest.json` and rebuilds the geometry from the `zeta` column.
pub fn load_profile(dir: &Path) -> Result<LoadedProfile, CliError> {
    let manifest = RunManifest::read(&dir.join(MANIFEST_FILE)).map_err(CliError::Usage)?;
    let table = read_csv(&dir.join(PROFILE_FILE)).map_err(CliError::Usage)?;
    if table.header != PROFILE_COLUMNS {
        return Err(CliError::Usage(format!("unexpected profile columns {:?}", table.header)));
    }
    let (Some(brho), Some(mu)) = (manifest.brho0, manifest.mu) else {
        return Err(CliError::Usage("manifest does not describe a solved profile".into()));
    };
    let grid = RadialGrid::new(table.rows.len().saturating_sub(1))
        .map_err(|_| CliError::Usage(format!("profile has {} rows", table.rows.len())))?;
    let radii = table.numbers("R").map_err(CliError::Usage)?;
    if radii.iter().enumerate().any(|(i, &r)| r != grid.node(i)) {
        return Err(CliError::Usage("R column does not match a uniform grid on [0, 1]".into()));
    }
    let zeta = table.numbers("zeta").map_err(CliError::Usage)?;
    let zeta = ZetaProfile::new(grid, zeta).map_err(|e| CliError::Usage(e.to_string()))?;
    let model = ConstitutiveModel::parse(&manifest.model).map_err(|e| CliError::Usage(e.to_string()))?;
    let model = ValidatedModel::new(model)?;
    let settings = SolveSettings {
        tol_picard: manifest.tolerances.picard,
        tol_bc: manifest.tolerances.bc,
        tol_brho: manifest.tolerances.brho,
        max_iter: manifest.tolerances.max_iter,
    };
    reconstruct_geometry(&zeta)?;
    let solution = SolutionProfile::from_zeta(
        model,
        Parameters::new(brho, mu, manifest.gravity),
        zeta,
        PicardDiagnostics::default(),
        settings,
    )?;
    Ok(LoadedProfile { manifest, table, solution })
}

struct VerifyArgs {
    profile: Option<PathBuf>,
    max_residual: Option<f64>,
    max_equivalence: Option<f64>,
    max_bc: Option<f64>,
}

/// Largest relative difference between a stored column and recomputed values.
fn column_mismatch(table: &CsvTable, name: &str, expected: &[f64]) -> Result<f64, CliError> {
    let stored = table.numbers(name).map_err(CliError::Usage)?;
    Ok(stored
        .iter()
        .zip(expected)
        .map(|(s, e)| {
            let d = (s - e).abs() / e.abs().max(1.0);
            if d.is_nan() { f64::INFINITY } else { d }
        })
        .fold(0.0, f64::max))
}

fn run_verify(args: &CommonArgs, va: VerifyArgs, _command_line: Vec<String>) -> Result<(), CliError> {
    let r = Resolver::new(args)?;
    let dir: PathBuf = r
        .pick(va.profile, "profile")?
        .ok_or_else(|| CliError::Usage("--profile <dir> is required".into()))?;
    let out: PathBuf = r.pick(args.out.clone(), "out")?.unwrap_or_else(|| dir.clone());
    let loaded = load_profile(&dir)?;
    let sol = &loaded.solution;
    let geo = &sol.geometry;
    let report = residual_report(&sol.model, sol)?;

    let brho = sol.params.brho;
    let n = sol.grid.len();
    let (c1, c2): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|i| pk_stress(&sol.model, brho, geo.y_dev[i], geo.lambda[i]))
        .unzip();
    let rho: Vec<f64> = (0..n)
        .map(|i| brho / (geo.fprime[i] * geo.lambda[i] * geo.lambda[i]))
        .collect();
    let mut columns = 0.0_f64;
    for (name, values) in [
        ("f", &geo.f),
        ("fprime", &geo.fprime),
        ("lambda", &geo.lambda),
        ("y", &geo.y),
        ("c1", &c1),
        ("c2", &c2),
        ("rho_t0", &rho),
    ] {
        columns = columns.max(column_mismatch(&loaded.table, name, values)?);
    }
    let stored_f1 = loaded.table.numbers("f").map_err(CliError::Usage)?[n - 1];
    let hash_ok = match loaded.manifest.files.get(PROFILE_FILE) {
        Some(h) => sha256_file(&dir.join(PROFILE_FILE)).map(|a| &a == h).unwrap_or(false),
        None => false,
    };

    let max_residual = r.pick(va.max_residual, "max-residual")?.unwrap_or(residual_tolerance(&sol.grid));
    let max_equivalence = r.pick(va.max_equivalence, "max-equivalence")?.unwrap_or(EQUIVALENCE_TOL);
    let max_bc = r.pick(va.max_bc, "max-bc")?.unwrap_or(loaded.manifest.tolerances.bc);
    let checks = [
        ("residual_separated", report.residual_separated, max_residual),
        ("residual_reformulation", report.residual_reformulation, max_residual),
        ("equivalence_relative", report.equivalence_relative, max_equivalence),
        ("boundary_residual", report.boundary_residual.abs(), max_bc),
        ("normalization", (stored_f1 - 1.0).abs(), COLUMN_TOL),
        ("column_consistency", columns, COLUMN_TOL),
        ("content_hash", if hash_ok { 0.0 } else { 1.0 }, 0.0),
    ];

    let mut text = String::new();
    let mut line = |k: &str, v: String| text.push_str(&format!("{k} = {v}\n"));
    line("profile", dir.display().to_string());
    line("N", report.grid_size.to_string());
    line("stencil_order", report.stencil_order.to_string());
    line("residual_separated", fmt_num(report.residual_separated));
    line("residual_reformulation", fmt_num(report.residual_reformulation));
    line("equivalence_discrepancy", fmt_num(report.equivalence_discrepancy));
    line("equivalence_relative", fmt_num(report.equivalence_relative));
    line("boundary_residual", fmt_num(report.boundary_residual));
    line("normalization_error", fmt_num((stored_f1 - 1.0).abs()));
    line("column_mismatch", fmt_num(columns));
    line("content_hash", if hash_ok { "match" } else { "mismatch" }.into());
    let mut failed = Vec::new();
    for (name, value, limit) in checks {
        let pass = value <= limit;
        if !pass {
            failed.push(name.to_string());
        }
        line(
            &format!("check.{name}"),
            format!("{} ({} <= {})", if pass { "pass" } else { "fail" }, fmt_num(value), fmt_num(limit)),
        );
    }
    line("status", if failed.is_empty() { "pass" } else { "fail" }.into());

    create_dir(&out)?;
    let path = out.join(VERIFY_FILE);
    fs::write(&path, &text).map_err(io_err(&path))?;
    print!("{text}");
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed(failed))
    }
}
