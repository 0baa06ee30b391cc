//! Command-line front end. The binary is a thin wrapper over [`main_with`].
//!
//! Exit codes: 0 success, 1 a golden check failed, 2 bad input or config,
//! 3 numeric failure at run time.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::belief::bayes_update;
use crate::error::Error;
use crate::game::{expected_pharma_utility, solve_bne, solve_stackelberg, Responder};
use crate::info::{channel_capacity, qre_channels, rate_distortion_curve, DistortionWeights};
use crate::population::{fitness, integrate_replicator, PharmaStrategy, Policy, PopulationState};
use crate::scenarios::{competitor_entry, launch_game, market_shift_game, DEFER_LIKELIHOODS};
use crate::sim::{epsilon_schedule, run_experiment, write_steps_csv, ScenarioConfig};
use crate::types::{Belief, GameSpec};

#[derive(Debug, Parser)]
#[command(name = "egpf", version, about = "Strategic personalization simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario file and write steps.csv, summary.json (and
    /// trajectory.csv when the scenario has a population layer).
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long, env = "EGPF_SEED")]
        seed: Option<u64>,
    },
    /// Replay the published worked examples as golden checks.
    VerifyPaper {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Only list the checks.
        #[arg(long)]
        list: bool,
        /// Use this game file instead of the built-in launch game.
        #[arg(long)]
        game: Option<PathBuf>,
    },
    /// Blahut-Arimoto capacity of each type's quantal-response channel.
    Capacity {
        /// Game JSON; defaults to the launch game.
        #[arg(long)]
        game: Option<PathBuf>,
        #[arg(long, default_value_t = crate::defaults::CAPACITY_TOL)]
        tol: f64,
        #[arg(long, default_value_t = crate::defaults::CAPACITY_MAX_ITERS)]
        max_iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate replicator dynamics; defaults to the market-shift scenario.
    Replicator {
        /// Scenario file with a population layer.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate-distortion curve; defaults to three types and one-hot distortion.
    RdCurve {
        /// JSON `{"prior": [...], "distortion": [[...]], "lambda_r": x, "lambda_p": y}`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Comma-separated slopes.
        #[arg(long, value_delimiter = ',')]
        slopes: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// What a command did.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandResult {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

impl CommandResult {
    fn ok(summary: impl Into<String>, artifacts: Vec<PathBuf>) -> Self {
        Self { exit_code: 0, artifacts, summary: summary.into() }
    }

    fn config(msg: impl Into<String>) -> Self {
        Self { exit_code: 2, artifacts: Vec::new(), summary: msg.into() }
    }

    fn numeric(msg: impl Into<String>) -> Self {
        Self { exit_code: 3, artifacts: Vec::new(), summary: msg.into() }
    }
}

fn classify(e: Error) -> CommandResult {
    match e {
        Error::Json(_) | Error::Invalid(_) | Error::Dimension(_) | Error::UnsortedTypes { .. } => {
            CommandResult::config(e.to_string())
        }
        Error::Io(_) | Error::Csv(_) => CommandResult::config(e.to_string()),
        _ => CommandResult::numeric(e.to_string()),
    }
}

fn read_text(path: &Path, what: &str) -> std::result::Result<String, CommandResult> {
    fs::read_to_string(path)
        .map_err(|e| CommandResult::config(format!("{what} not found: {} ({e})", path.display())))
}

fn load_game(path: Option<&Path>) -> std::result::Result<GameSpec, CommandResult> {
    match path {
        None => Ok(launch_game()),
        Some(p) => GameSpec::from_json(&read_text(p, "game")?)
            .map_err(|e| CommandResult::config(format!("{}: {e}", p.display()))),
    }
}

fn write(path: &Path, bytes: &[u8]) -> std::result::Result<(), CommandResult> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CommandResult::config(e.to_string()))?;
        }
    }
    fs::write(path, bytes).map_err(|e| CommandResult::config(format!("{}: {e}", path.display())))
}

/// Runs a scenario and writes its artifacts into `out_dir`.
pub fn cmd_run(
    scenario: &Path,
    out_dir: &Path,
    replications: Option<usize>,
    seed: Option<u64>,
) -> CommandResult {
    match cmd_run_inner(scenario, out_dir, replications, seed) {
        Ok(r) | Err(r) => r,
    }
}

fn cmd_run_inner(
    scenario: &Path,
    out_dir: &Path,
    replications: Option<usize>,
    seed: Option<u64>,
) -> std::result::Result<CommandResult, CommandResult> {
    let text = read_text(scenario, "scenario")?;
    let mut cfg: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| CommandResult::config(format!("{}: {e}", scenario.display())))?;
    if let Some(r) = replications {
        cfg.replications = r;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()
        .map_err(|e| CommandResult::config(format!("{}: {e}", scenario.display())))?;
    let res = run_experiment(&cfg, true).map_err(classify)?;

    let mut artifacts = Vec::new();
    let mut steps = Vec::new();
    write_steps_csv(&res.runs[0], cfg.game.num_types(), &mut steps).map_err(classify)?;
    let p = out_dir.join("steps.csv");
    write(&p, &steps)?;
    artifacts.push(p);

    let mut summary = serde_json::to_string_pretty(&res.summary).map_err(|e| classify(e.into()))?;
    summary.push('\n');
    let p = out_dir.join("summary.json");
    write(&p, summary.as_bytes())?;
    artifacts.push(p);

    if let Some(traj) = &res.trajectory {
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).map_err(classify)?;
        let p = out_dir.join("trajectory.csv");
        write(&p, &buf)?;
        artifacts.push(p);
    }
    let egpf = &res.summary.strategies[0];
    let line = format!(
        "{}: {} replications × {} steps; actions {}; mean regret {:.4}",
        if cfg.name.is_empty() { "scenario" } else { &cfg.name },
        cfg.replications,
        cfg.horizon,
        egpf.first_actions.iter().take(8).cloned().collect::<Vec<_>>().join("→"),
        egpf.final_regret.mean
    );
    Ok(CommandResult::ok(line, artifacts))
}

/// One golden comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenCheck {
    pub id: &'static str,
    pub description: &'static str,
    pub expected: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Identifiers and descriptions of the golden checks.
pub const GOLDEN_CHECKS: [(&str, &str); 16] = [
    ("launch.u_a1", "prior expected pharma utility of clinical deep-dive"),
    ("launch.u_a2", "prior expected pharma utility of KOL webinar"),
    ("launch.u_a3", "prior expected pharma utility of patient story"),
    ("launch.initial_action", "initial equilibrium action (index, KOL webinar = 1)"),
    ("launch.posterior_1", "posterior on evidence type after defer"),
    ("launch.posterior_2", "posterior on peer type after defer"),
    ("launch.posterior_3", "posterior on patient type after defer"),
    ("launch.switch_action", "post-update Stackelberg action (clinical = 0)"),
    ("launch.switch_value", "post-update expected utility of clinical deep-dive"),
    ("launch.fitness_1", "evidence-type fitness under clinical deep-dive"),
    ("launch.fitness_2", "peer-type fitness under clinical deep-dive"),
    ("launch.fitness_3", "patient-type fitness under clinical deep-dive"),
    ("eps.t1_k3", "exploration rate at t = 1 with K = 3"),
    ("defaults.tau", "rationality default"),
    ("defaults.window", "drift window default"),
    ("defaults.tau_drift", "drift threshold default"),
];

/// Evaluates every golden check against `game` (the launch game unless
/// overridden).
pub fn golden_checks(game: &GameSpec) -> Vec<GoldenCheck> {
    let mut measured: Vec<f64> = Vec::new();
    let prior = game.prior();
    let m = game.num_actions().min(3);
    for a in 0..3 {
        measured.push(if a < m {
            expected_pharma_utility(game, a, prior, Responder::BestResponse)
        } else {
            f64::NAN
        });
    }
    measured.push(solve_bne(game).pure_action().map_or(f64::NAN, |a| a as f64));
    let post = if game.num_types() == 3 {
        bayes_update(prior, &DEFER_LIKELIHOODS).ok()
    } else {
        None
    };
    for k in 0..3 {
        measured.push(post.as_ref().map_or(f64::NAN, |p| p[k]));
    }
    let (switch, value) = post
        .as_ref()
        .map_or((f64::NAN, f64::NAN), |p| {
            let (a, _) = solve_stackelberg(game, p);
            (a as f64, expected_pharma_utility(game, 0, p, Responder::BestResponse))
        });
    measured.push(switch);
    measured.push(value);
    let f = fitness(&PopulationState::uniform(game.num_types()), game, &PharmaStrategy::Pure(0))
        .map(|f| f.values)
        .unwrap_or_default();
    for k in 0..3 {
        measured.push(f.get(k).copied().unwrap_or(f64::NAN));
    }
    measured.push(epsilon_schedule(1, 3.0));
    measured.push(crate::defaults::TAU);
    measured.push(crate::defaults::DRIFT_WINDOW as f64);
    measured.push(crate::defaults::TAU_DRIFT);

    let expected: [(f64, f64); 16] = [
        (0.555, 1e-9),
        (0.605, 1e-9),
        (0.440, 1e-9),
        (1.0, 0.0),
        (0.5723, 5e-4),
        (0.2264, 5e-4),
        (0.2013, 5e-4),
        (0.0, 0.0),
        (0.666, 5e-4),
        (0.85, 1e-12),
        (0.30, 1e-12),
        (0.25, 1e-12),
        (1.0, 0.0),
        (3.0, 0.0),
        (30.0, 0.0),
        (0.15, 0.0),
    ];
    GOLDEN_CHECKS
        .iter()
        .zip(expected)
        .zip(measured)
        .map(|(((id, description), (expected, tolerance)), measured)| GoldenCheck {
            id,
            description,
            expected,
            measured,
            tolerance,
            passed: (measured - expected).abs() <= tolerance,
        })
        .collect()
}

fn golden_table(checks: &[GoldenCheck]) -> String {
    let mut s = format!("{:<22} {:>10} {:>12} {:>8}  result\n", "check", "expected", "measured", "tol");
    for c in checks {
        s.push_str(&format!(
            "{:<22} {:>10.4} {:>12.6} {:>8.0e}  {}\n",
            c.id,
            c.expected,
            c.measured,
            c.tolerance,
            if c.passed { "pass" } else { "FAIL" }
        ));
    }
    s
}

/// Runs (or lists) the golden checks.
pub fn cmd_verify_paper(out_dir: Option<&Path>, list: bool, game: Option<&Path>) -> CommandResult {
    if list {
        let s = GOLDEN_CHECKS
            .iter()
            .map(|(id, d)| format!("{id:<22} {d}"))
            .collect::<Vec<_>>()
            .join("\n");
        return CommandResult::ok(s, Vec::new());
    }
    let game = match load_game(game) {
        Ok(g) => g,
        Err(r) => return r,
    };
    let checks = golden_checks(&game);
    let table = golden_table(&checks);
    let mut artifacts = Vec::new();
    if let Some(dir) = out_dir {
        let p = dir.join("verify.json");
        let body = serde_json::to_string_pretty(&checks).expect("checks serialize") + "\n";
        if let Err(r) = write(&p, body.as_bytes()) {
            return r;
        }
        artifacts.push(p);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    CommandResult {
        exit_code: if failed == 0 { 0 } else { 1 },
        artifacts,
        summary: format!("{table}{} of {} checks passed", checks.len() - failed, checks.len()),
    }
}

fn emit(out: Option<&Path>, body: String, summary: String) -> CommandResult {
    match out {
        Some(p) => match write(p, body.as_bytes()) {
            Ok(()) => CommandResult::ok(summary, vec![p.to_path_buf()]),
            Err(r) => r,
        },
        None => CommandResult::ok(format!("{body}{summary}"), Vec::new()),
    }
}

/// Capacity of every type's channel as CSV
/// `type,capacity_bits,iterations,converged,best_action`.
pub fn cmd_capacity(game: Option<&Path>, tol: f64, max_iters: usize, out: Option<&Path>) -> CommandResult {
    let game = match load_game(game) {
        Ok(g) => g,
        Err(r) => return r,
    };
    let mut body = String::from("type,capacity_bits,iterations,converged,best_action\n");
    let mut all_converged = true;
    for (k, ch) in qre_channels(&game).iter().enumerate() {
        let c = channel_capacity(ch, tol, max_iters);
        all_converged &= c.converged;
        let best = (0..c.input.len()).fold(0, |b, i| if c.input[i] > c.input[b] { i } else { b });
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            k + 1,
            c.capacity,
            c.iterations,
            c.converged,
            game.pharma_actions()[best]
        ));
    }
    let mut r = emit(out, body, format!("{} channels", game.num_types()));
    if !all_converged && r.exit_code == 0 {
        r.exit_code = 3;
        r.summary.push_str("; not converged");
    }
    r
}

/// Replicator trajectory CSV.
pub fn cmd_replicator(
    scenario: Option<&Path>,
    horizon: Option<f64>,
    dt: Option<f64>,
    out: Option<&Path>,
) -> CommandResult {
    let (game, initial, mut h, mut step, policy, events) = match scenario {
        None => (
            market_shift_game(),
            vec![0.35, 0.45, 0.20],
            200.0,
            crate::defaults::REPLICATOR_DT,
            Policy::Fixed(PharmaStrategy::Pure(0)),
            vec![competitor_entry(100.0)],
        ),
        Some(p) => {
            let text = match read_text(p, "scenario") {
                Ok(t) => t,
                Err(r) => return r,
            };
            let cfg = match ScenarioConfig::from_json(&text) {
                Ok(c) => c,
                Err(e) => return CommandResult::config(format!("{}: {e}", p.display())),
            };
            let Some(layer) = cfg.population else {
                return CommandResult::config(format!("{}: no population layer", p.display()));
            };
            (layer.game.unwrap_or(cfg.game), layer.initial, layer.horizon, layer.dt, layer.policy, layer.events)
        }
    };
    if let Some(x) = horizon {
        h = x;
    }
    if let Some(x) = dt {
        step = x;
    }
    let x0 = match PopulationState::new(initial, 0.0) {
        Ok(x) => x,
        Err(e) => return CommandResult::config(e.to_string()),
    };
    let traj = match integrate_replicator(&x0, &game, &policy, h, step, &events) {
        Ok(t) => t,
        Err(e) => return classify(e),
    };
    let mut buf = Vec::new();
    if let Err(e) = traj.write_csv(&mut buf) {
        return classify(e);
    }
    let end = traj.last().shares().iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    emit(out, String::from_utf8(buf).expect("csv is utf-8"), format!("final shares ({end})"))
}

#[derive(Debug, serde::Deserialize)]
struct RdInput {
    prior: Vec<f64>,
    distortion: Vec<Vec<f64>>,
    #[serde(default)]
    lambda_r: f64,
    #[serde(default)]
    lambda_p: f64,
}

/// Rate-distortion CSV `lambda,rate_bits,distortion`.
pub fn cmd_rd_curve(input: Option<&Path>, slopes: Option<&[f64]>, out: Option<&Path>) -> CommandResult {
    let inp = match input {
        None => RdInput {
            prior: vec![1.0 / 3.0; 3],
            distortion: (0..3)
                .map(|i| (0..3).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
                .collect(),
            lambda_r: 0.0,
            lambda_p: 0.0,
        },
        Some(p) => {
            let text = match read_text(p, "input") {
                Ok(t) => t,
                Err(r) => return r,
            };
            match serde_json::from_str(&text) {
                Ok(x) => x,
                Err(e) => return CommandResult::config(format!("{}: {e}", p.display())),
            }
        }
    };
    let default: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
    let slopes = slopes.unwrap_or(&default);
    let prior = match Belief::new(inp.prior) {
        Ok(b) => b,
        Err(e) => return CommandResult::config(e.to_string()),
    };
    let w = DistortionWeights { lambda_r: inp.lambda_r, lambda_p: inp.lambda_p };
    let pts = match rate_distortion_curve(&prior, &inp.distortion, w, slopes, 1e-12, 100_000) {
        Ok(p) => p,
        Err(e) => return classify(e),
    };
    let mut body = String::from("lambda,rate_bits,distortion\n");
    for p in &pts {
        body.push_str(&format!("{},{},{}\n", p.lambda, p.rate, p.distortion));
    }
    let mut r = emit(out, body, format!("{} points", pts.len()));
    if pts.iter().any(|p| !p.converged) && r.exit_code == 0 {
        r.exit_code = 3;
        r.summary.push_str("; some slopes did not converge");
    }
    r
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return CommandResult { exit_code: code, artifacts: Vec::new(), summary: e.to_string() };
        }
    };
    match cli.command {
        Command::Run { scenario, out, replications, seed } => cmd_run(&scenario, &out, replications, seed),
        Command::VerifyPaper { out, list, game } => cmd_verify_paper(out.as_deref(), list, game.as_deref()),
        Command::Capacity { game, tol, max_iters, out } => cmd_capacity(game.as_deref(), tol, max_iters, out.as_deref()),
        Command::Replicator { scenario, horizon, dt, out } => {
            cmd_replicator(scenario.as_deref(), horizon, dt, out.as_deref())
        }
        Command::RdCurve { input, slopes, out } => cmd_rd_curve(input.as_deref(), slopes.as_deref(), out.as_deref()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::LAUNCH_PRIOR;

    #[test]
    fn golden_checks_pass_on_launch_game() {
        let r = cmd_verify_paper(None, false, None);
        assert_eq!(r.exit_code, 0, "{}", r.summary);
    }

    #[test]
    fn perturbed_payoffs_fail_golden_checks() {
        let g = launch_game();
        let mut doc: serde_json::Value = serde_json::from_str(&g.to_json().unwrap()).unwrap();
        doc["u_P"][0][0][0] = serde_json::json!(1.0);
        let bad = GameSpec::from_json(&doc.to_string()).unwrap();
        let checks = golden_checks(&bad);
        assert!(!checks.iter().find(|c| c.id == "launch.u_a1").unwrap().passed);
    }

    #[test]
    fn listing_does_not_run() {
        let r = cmd_verify_paper(None, true, Some(Path::new("/nonexistent.json")));
        assert_eq!(r.exit_code, 0);
        assert!(r.summary.contains("launch.u_a2"));
    }

    #[test]
    fn missing_scenario_is_a_config_error() {
        let r = cmd_run(Path::new("/nonexistent/scenario.json"), Path::new("/tmp"), None, None);
        assert_eq!(r.exit_code, 2);
        assert!(r.summary.contains("scenario not found"));
    }

    #[test]
    fn prior_constant_matches_game() {
        assert_eq!(launch_game().prior().weights(), &LAUNCH_PRIOR);
    }
}
