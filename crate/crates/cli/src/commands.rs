//! Subcommand implementations and the exit-code contract:
//! 0 success, 2 configuration/argument error, 3 early termination,
//! 4 verification failure, 5 plant-solve failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use nashseek::analysis::{
    common_period, compute_metrics, reduced_payoff_probe, verify_averaging_integrals, verify_ne,
    RunMetrics,
};
use nashseek::controller::{parse_freq, validate_frequencies, Freq, SeekerParams};
use nashseek::game::GameModel;
use nashseek::sim::{simulate, SimConfig, Trajectory};
use nashseek::Error as CoreError;

use crate::config::{load_config, resolve, ConfigError, FileConfig, MetricsSection, ResolvedConfig};
use crate::output::{fmt17, parse_trajectory_csv, trajectory_csv, write_atomic};
use crate::report::{ArmReport, MetricsOut, SummaryReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EARLY_TERMINATION: i32 = 3;
pub const EXIT_VERIFICATION_FAILED: i32 = 4;
pub const EXIT_PLANT_SOLVE: i32 = 5;

/// A command failure carrying its exit code; the message goes to stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: e.0,
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::PlantSolve(_) | CoreError::Divergence(_) | CoreError::NumericalDomain(_) => {
                EXIT_PLANT_SOLVE
            }
            CoreError::InvalidArgument(_)
            | CoreError::DimensionMismatch { .. }
            | CoreError::FrequencyViolation(_) => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 1,
            message: format!("i/o error: {e}"),
        }
    }
}

type CmdResult = Result<i32, Failure>;

#[derive(Debug, Parser)]
#[command(
    name = "nashseek",
    version,
    about = "Simulate and verify perturbation-based equilibrium seeking in differential games"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one closed-loop run described by a config file
    Run(RunArgs),
    /// Run the vanishing-amplitude and fixed-amplitude arms side by side
    Compare(CompareArgs),
    /// Check a candidate equilibrium for stationarity and stability
    VerifyNe(VerifyNeArgs),
    /// Check probing frequencies against the non-resonance conditions
    CheckFreqs(CheckFreqsArgs),
    /// Average the probing-signal moments and compare to their exact values
    AvgIntegrals(AvgIntegralsArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Path to the run configuration file
    #[arg(long)]
    pub config: PathBuf,
    /// Override the output directory ([outputs].dir)
    #[arg(long)]
    pub out: Option<String>,
    /// Override the seeker scheme ([sim].mode)
    #[arg(long)]
    pub mode: Option<String>,
    /// Run even when the frequency conditions fail; recorded in the report
    #[arg(long)]
    pub allow_frequency_violations: bool,
    /// Override the settling band ([metrics].epsilon)
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Suppress informational output (errors still print)
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Path to the run configuration file
    #[arg(long)]
    pub config: PathBuf,
    /// Override the output directory ([outputs].dir)
    #[arg(long)]
    pub out: Option<String>,
    /// Run even when the frequency conditions fail; recorded in the report
    #[arg(long)]
    pub allow_frequency_violations: bool,
    /// Override the settling band ([metrics].epsilon)
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Suppress informational output (errors still print)
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct VerifyNeArgs {
    /// Path to the run configuration file (provides the game)
    #[arg(long)]
    pub config: PathBuf,
    /// Candidate actions, comma-separated (defaults to [metrics].u_star)
    #[arg(long, value_name = "U1,U2,..", allow_hyphen_values = true)]
    pub u_star: Option<String>,
    /// Finite-difference step for the probes
    #[arg(long, default_value_t = 1e-4)]
    pub fd_step: f64,
    /// Stationarity tolerance on the sup norm of the pseudo-gradient
    #[arg(long, default_value_t = 1e-6)]
    pub grad_tol: f64,
    /// Also write the report under this directory as verify_ne.json
    #[arg(long)]
    pub out: Option<String>,
    /// Suppress informational output (errors still print)
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct CheckFreqsArgs {
    /// Probing frequencies as exact rationals ("2", "5/2", ...)
    #[arg(required = true, value_name = "FREQ")]
    pub freqs: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AvgIntegralsArgs {
    /// Probing frequencies, comma-separated exact rationals ("2,3")
    #[arg(long, value_name = "F1,F2,..")]
    pub freqs: String,
    /// Probe phases, comma-separated (defaults to all zero)
    #[arg(long, value_name = "P1,P2,..", allow_hyphen_values = true)]
    pub phases: Option<String>,
    /// Averaging horizon; rounded up to whole common periods (defaults to
    /// one common period)
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Also write the table under this directory as avg_integrals.csv
    #[arg(long)]
    pub out: Option<String>,
}

/// Dispatches a parsed command line, returning the process exit code.
pub fn dispatch(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::VerifyNe(args) => cmd_verify_ne(&args),
        Command::CheckFreqs(args) => cmd_check_freqs(&args),
        Command::AvgIntegrals(args) => cmd_avg_integrals(&args),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load_with_overrides(
    path: &Path,
    out: &Option<String>,
    mode: &Option<String>,
    allow_frequency_violations: bool,
    epsilon: &Option<f64>,
) -> Result<(FileConfig, ResolvedConfig), Failure> {
    let mut cfg = load_config(path)?;
    if let Some(dir) = out {
        cfg.outputs.dir = dir.clone();
    }
    if let Some(m) = mode {
        cfg.sim.mode = m.clone();
    }
    if allow_frequency_violations {
        cfg.sim.allow_frequency_violations = true;
    }
    if let Some(eps) = epsilon {
        match &mut cfg.metrics {
            Some(m) => m.epsilon = *eps,
            None => {
                return Err(ConfigError(
                    "--epsilon adjusts [metrics].epsilon; the config has no [metrics] section"
                        .into(),
                )
                .into())
            }
        }
    }
    let resolved = resolve(&cfg)?;
    Ok((cfg, resolved))
}

/// The horizon below which the trailing 10 percent of the run is shorter
/// than one period of the slowest probe, making tail metrics unreliable.
fn tail_window_warning(params: &[SeekerParams], horizon: f64) -> Option<String> {
    let min_omega = params
        .iter()
        .map(SeekerParams::omega_value)
        .fold(f64::INFINITY, f64::min);
    let threshold = 10.0 * (2.0 * std::f64::consts::PI / min_omega);
    (horizon < threshold).then(|| {
        format!(
            "tail window shorter than one perturbation period: horizon {horizon} < {threshold:.3}"
        )
    })
}

/// Frequency gate shared by run and compare: errors with exit 2 when the
/// conditions fail and the override is off. With the override on, the
/// simulation itself records the violation warning on the trajectory.
fn frequency_gate(
    resolved: &ResolvedConfig,
) -> Result<nashseek::controller::FrequencyReport, Failure> {
    let freqs: Vec<Freq> = resolved.params.iter().map(|p| p.omega).collect();
    let report = validate_frequencies(&freqs)?;
    if !report.ok && !resolved.sim.allow_frequency_violations {
        return Err(Failure {
            code: EXIT_CONFIG,
            message: format!(
                "probing-frequency conditions violated: {}; rerun with \
                 --allow-frequency-violations (or sim.allow_frequency_violations = true) \
                 to force the run",
                report.summary()
            ),
        });
    }
    Ok(report)
}

/// Appends warnings not already present (the compare arms repeat shared
/// warnings verbatim).
fn extend_warnings(into: &mut Vec<String>, from: &[String]) {
    for w in from {
        if !into.iter().any(|have| have == w) {
            into.push(w.clone());
        }
    }
}

/// Reference payoffs for metrics: explicit `j_star`, or the payoffs at the
/// plant's settled state under `u_star`.
fn resolve_j_star(game: &GameModel, metrics: &MetricsSection) -> Result<Vec<f64>, Failure> {
    match &metrics.j_star {
        Some(j) => Ok(j.clone()),
        None => reduced_payoff_probe(game, &metrics.u_star).map_err(|e| Failure {
            code: EXIT_PLANT_SOLVE,
            message: format!(
                "cannot resolve reference payoffs from metrics.u_star: {e}; \
                 set metrics.j_star explicitly if the plant cannot settle there"
            ),
        }),
    }
}

fn metrics_out(
    traj: &Trajectory,
    metrics: &MetricsSection,
    j_star: &[f64],
) -> MetricsOut {
    MetricsOut {
        u_star: metrics.u_star.clone(),
        j_star: j_star.to_vec(),
        epsilon: metrics.epsilon,
        metrics: compute_metrics(traj, &metrics.u_star, j_star, metrics.epsilon),
    }
}

fn arm_report(traj: &Trajectory, mode: &str, metrics: Option<MetricsOut>) -> ArmReport {
    let last = traj.len() - 1;
    ArmReport {
        mode: mode.to_string(),
        final_time: traj.final_time(),
        final_estimates: traj.estimates[last].clone(),
        final_actions: traj.actions[last].clone(),
        final_amplitudes: traj.amplitudes[last].clone(),
        terminated_early: traj.terminated_early.clone(),
        metrics,
        csv_path: None,
    }
}

fn write_outputs(
    resolved: &ResolvedConfig,
    report: &SummaryReport,
    csvs: &[(String, String)],
) -> Result<Vec<String>, Failure> {
    let dir = Path::new(&resolved.outputs.dir);
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if resolved.outputs.csv {
        for (name, content) in csvs {
            let path = dir.join(name);
            write_atomic(&path, content)?;
            written.push(path.display().to_string());
        }
    }
    if resolved.outputs.json {
        let path = dir.join("summary.json");
        write_atomic(&path, &report.to_json())?;
        written.push(path.display().to_string());
    }
    Ok(written)
}

fn print_run_summary(quiet: bool, report: &SummaryReport, written: &[String]) {
    if quiet {
        return;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for arm in &report.arms {
        let settle = arm
            .metrics
            .as_ref()
            .map(|m| match m.metrics.settling_time {
                Some(t) => format!("settling_time = {t}"),
                None => "settling_time = none".to_string(),
            })
            .unwrap_or_else(|| "no [metrics] reference".to_string());
        println!(
            "arm {}: t = {}, u_hat = {:?}, {}{}",
            arm.mode,
            arm.final_time,
            arm.final_estimates,
            settle,
            match &arm.terminated_early {
                Some(term) => format!(" [terminated early at t = {}: {}]", term.time, term.reason),
                None => String::new(),
            }
        );
    }
    for path in written {
        println!("wrote {path}");
    }
}

pub fn cmd_run(args: &RunArgs) -> CmdResult {
    let (_, resolved) = load_with_overrides(
        &args.config,
        &args.out,
        &args.mode,
        args.allow_frequency_violations,
        &args.epsilon,
    )?;
    let mut report = SummaryReport::new("run");
    report.config_echo = Some(resolved.echo.clone());
    report.frequency_report = Some(frequency_gate(&resolved)?);
    if let Some(w) = tail_window_warning(&resolved.params, resolved.sim.horizon) {
        report.warnings.push(w);
    }

    let traj = simulate(&resolved.game, &resolved.params, &resolved.sim)?;
    extend_warnings(&mut report.warnings, &traj.warnings);

    let metrics = match &resolved.metrics {
        Some(m) => {
            let j_star = resolve_j_star(&resolved.game, m)?;
            Some(metrics_out(&traj, m, &j_star))
        }
        None => None,
    };
    let mut arm = arm_report(&traj, &resolved.sim.mode, metrics);

    let csv_name = "trajectory.csv";
    if resolved.outputs.csv {
        arm.csv_path = Some(
            Path::new(&resolved.outputs.dir)
                .join(csv_name)
                .display()
                .to_string(),
        );
    }
    report.arms.push(arm);

    let csv = trajectory_csv(&traj);
    let written = write_outputs(&resolved, &report, &[(csv_name.to_string(), csv)])?;
    print_run_summary(args.quiet, &report, &written);

    Ok(if traj.terminated_early.is_some() {
        EXIT_EARLY_TERMINATION
    } else {
        EXIT_OK
    })
}

pub fn cmd_compare(args: &CompareArgs) -> CmdResult {
    let (_, resolved) = load_with_overrides(
        &args.config,
        &args.out,
        &None,
        args.allow_frequency_violations,
        &args.epsilon,
    )?;
    let mut report = SummaryReport::new("compare");
    report.config_echo = Some(resolved.echo.clone());
    report.frequency_report = Some(frequency_gate(&resolved)?);
    if let Some(w) = tail_window_warning(&resolved.params, resolved.sim.horizon) {
        report.warnings.push(w);
    }

    // Both arms share everything except the seeker scheme. They are
    // independent, so they run concurrently.
    let arms = ["wsso", "classical"];
    let sims: Vec<SimConfig> = arms
        .iter()
        .map(|mode| SimConfig {
            mode: (*mode).to_string(),
            ..resolved.sim.clone()
        })
        .collect();
    let mut results: Vec<Option<Result<Trajectory, CoreError>>> = vec![None, None];
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(2);
        for sim in &sims {
            let game = &resolved.game;
            let params = &resolved.params;
            handles.push(scope.spawn(move || simulate(game, params, sim)));
        }
        for (slot, handle) in results.iter_mut().zip(handles) {
            *slot = Some(handle.join().expect("simulation thread panicked"));
        }
    });
    let mut trajectories = Vec::with_capacity(2);
    for r in results {
        trajectories.push(r.expect("both arms ran")?);
    }

    let j_star = match &resolved.metrics {
        Some(m) => Some(resolve_j_star(&resolved.game, m)?),
        None => None,
    };
    // Residual oscillation has no dependence on the reference point, so the
    // ratio is always computable: score against a zero reference when the
    // config gives none and keep only the oscillation field.
    let oscillation = |traj: &Trajectory| -> Vec<f64> {
        match (&resolved.metrics, &j_star) {
            (Some(m), Some(j)) => compute_metrics(traj, &m.u_star, j, m.epsilon).residual_oscillation,
            _ => {
                let zeros = vec![0.0; traj.n_players()];
                compute_metrics(traj, &zeros, &zeros, 1.0).residual_oscillation
            }
        }
    };

    let mut csvs = Vec::new();
    for (i, traj) in trajectories.iter().enumerate() {
        extend_warnings(&mut report.warnings, &traj.warnings);
        let metrics = match (&resolved.metrics, &j_star) {
            (Some(m), Some(j)) => Some(metrics_out(traj, m, j)),
            _ => None,
        };
        let mut arm = arm_report(traj, arms[i], metrics);
        let csv_name = format!("trajectory_{}.csv", arms[i]);
        if resolved.outputs.csv {
            arm.csv_path = Some(
                Path::new(&resolved.outputs.dir)
                    .join(&csv_name)
                    .display()
                    .to_string(),
            );
        }
        report.arms.push(arm);
        csvs.push((csv_name, trajectory_csv(traj)));
    }

    let osc_wsso = oscillation(&trajectories[0]);
    let osc_classical = oscillation(&trajectories[1]);
    report.oscillation_ratio = Some(
        osc_wsso
            .iter()
            .zip(&osc_classical)
            .map(|(&w, &c)| (w != 0.0).then(|| c / w))
            .collect(),
    );

    let written = write_outputs(&resolved, &report, &csvs)?;
    print_run_summary(args.quiet, &report, &written);
    if !args.quiet {
        if let Some(ratio) = &report.oscillation_ratio {
            let shown: Vec<String> = ratio
                .iter()
                .map(|r| match r {
                    Some(v) => format!("{v:.3e}"),
                    None => "inf (wsso oscillation is zero)".to_string(),
                })
                .collect();
            println!("residual-oscillation ratio classical/wsso: [{}]", shown.join(", "));
        }
    }

    Ok(if trajectories.iter().any(|t| t.terminated_early.is_some()) {
        EXIT_EARLY_TERMINATION
    } else {
        EXIT_OK
    })
}

fn parse_float_list(label: &str, text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|e| Failure {
                code: EXIT_CONFIG,
                message: format!("{label}: bad number \"{tok}\": {e}"),
            })
        })
        .collect()
}

pub fn cmd_verify_ne(args: &VerifyNeArgs) -> CmdResult {
    let cfg = load_config(&args.config)?;
    let resolved = resolve(&cfg)?;
    let u_star = match (&args.u_star, &resolved.metrics) {
        (Some(text), _) => parse_float_list("--u-star", text)?,
        (None, Some(m)) => m.u_star.clone(),
        (None, None) => {
            return Err(Failure {
                code: EXIT_CONFIG,
                message: "no candidate to verify: pass --u-star or add [metrics].u_star"
                    .into(),
            })
        }
    };
    if u_star.len() != resolved.game.n_players() {
        return Err(Failure {
            code: EXIT_CONFIG,
            message: format!(
                "u_star must have one entry per player: expected {}, got {}",
                resolved.game.n_players(),
                u_star.len()
            ),
        });
    }
    if let Some((player, value)) = resolved.game.bounds_violation(&u_star) {
        return Err(Failure {
            code: EXIT_CONFIG,
            message: format!(
                "u_star component {} = {value} lies outside player {}'s admissible interval",
                player + 1,
                player + 1
            ),
        });
    }
    if !(args.fd_step > 0.0) {
        return Err(Failure {
            code: EXIT_CONFIG,
            message: format!("--fd-step must be positive, got {}", args.fd_step),
        });
    }

    let stability = verify_ne(&resolved.game, &u_star, args.fd_step, args.grad_tol).map_err(
        |e| match e {
            CoreError::PlantSolve(_) | CoreError::Divergence(_) => Failure {
                code: EXIT_PLANT_SOLVE,
                message: format!(
                    "the candidate is unverifiable here: the plant did not settle during a \
                     probe ({e})"
                ),
            },
            other => other.into(),
        },
    )?;

    let accepted = stability.accepted;
    let mut report = SummaryReport::new("verify-ne");
    report.config_echo = Some(resolved.echo.clone());
    report.stability = Some(stability);
    print!("{}", report.to_json());
    if let Some(dir) = &args.out {
        let dir = Path::new(dir);
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join("verify_ne.json"), &report.to_json())?;
    }
    if !args.quiet {
        eprintln!(
            "candidate {u_star:?}: {}",
            if accepted { "accepted" } else { "rejected" }
        );
    }
    Ok(if accepted { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

pub fn cmd_check_freqs(args: &CheckFreqsArgs) -> CmdResult {
    let mut freqs = Vec::with_capacity(args.freqs.len());
    for tok in &args.freqs {
        freqs.push(parse_freq(tok).map_err(|e| Failure {
            code: EXIT_CONFIG,
            message: format!("frequency \"{tok}\": {e}"),
        })?);
    }
    let report = validate_frequencies(&freqs)?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    print!("{json}");
    Ok(if report.ok { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

pub fn cmd_avg_integrals(args: &AvgIntegralsArgs) -> CmdResult {
    let mut freqs: Vec<Freq> = Vec::new();
    for tok in args.freqs.split(',') {
        freqs.push(parse_freq(tok).map_err(|e| Failure {
            code: EXIT_CONFIG,
            message: format!("--freqs entry \"{tok}\": {e}"),
        })?);
    }
    let phases = match &args.phases {
        Some(text) => parse_float_list("--phases", text)?,
        None => vec![0.0; freqs.len()],
    };
    let horizon = match args.horizon {
        Some(h) => h,
        None => common_period(&freqs)?,
    };
    let report = verify_averaging_integrals(&freqs, &phases, horizon)?;

    let mut table = String::from("integrand,measured,expected,abs_error\n");
    for row in &report.rows {
        table.push_str(&format!(
            "{},{},{},{}\n",
            row.integrand,
            fmt17(row.measured),
            fmt17(row.expected),
            fmt17(row.abs_error)
        ));
    }
    print!("{table}");
    if let Some(dir) = &args.out {
        let dir = Path::new(dir);
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join("avg_integrals.csv"), &table)?;
    }

    let worst = report
        .rows
        .iter()
        .map(|r| r.abs_error)
        .fold(0.0f64, f64::max);
    if worst <= 1e-6 {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "largest moment deviation {worst:.3e} exceeds 1e-6 over t in [0, {}]",
            report.t_effective
        );
        Ok(EXIT_VERIFICATION_FAILED)
    }
}

/// Recomputes metrics from a written CSV; used by tests to confirm the CSV
/// is lossless against the JSON metrics.
pub fn metrics_from_csv(
    csv_text: &str,
    u_star: &[f64],
    j_star: &[f64],
    epsilon: f64,
) -> Result<RunMetrics, Failure> {
    let traj = parse_trajectory_csv(csv_text)?;
    Ok(compute_metrics(&traj, u_star, j_star, epsilon))
}
