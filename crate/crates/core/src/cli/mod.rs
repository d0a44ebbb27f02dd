//! Config-driven experiment runner behind the `orbitglue` binary.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::deviations::{
    estimate_deviation_level1, estimate_deviation_level2, rate_function_oracle, rate_function_profile,
    tempered_variation_profile, DecayExperiment, EmpiricalDecay, FlowProblem, TestBasis,
};
use crate::error::Error;
use crate::gluing::{glue_discrete, glue_flow, verify_discrete, verify_flow_shadowing, DEFAULT_SHADOW_THRESHOLD};
use crate::suspension::FlowObservable;
use crate::thermo::{equilibrium_markov, verify_gibbs_with_budget, DEFAULT_CYLINDER_BUDGET};
use config::{point, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

const DEFAULT_STEP: f64 = 0.01;
const DEFAULT_RESOLUTION: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "orbitglue", version, about = "Gluing certificates and large-deviation experiments on suspension flows")]
pub struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving the CSV and JSON artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the seed given in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Sampling step for flow shadowing checks.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Topological pressure of the potential.
    Pressure,
    /// Equilibrium Markov measure of the potential.
    Equilibrium,
    /// Gibbs ratios of the equilibrium measure on cylinders.
    VerifyGibbs,
    /// Glue discrete orbit segments and check shadowing.
    Glue,
    /// Glue flow orbit segments and check shadowing in the suspension metric.
    GlueFlow,
    /// Rate function of flow time averages.
    RateFunction,
    /// Monte Carlo decay of interval deviations.
    LdpSimulate,
    /// Monte Carlo decay of empirical-measure deviations.
    LdpLevel2,
    /// Bowen-ball oscillation profile of Birkhoff integrals.
    TemperedProfile,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Equilibrium => "equilibrium",
            Command::VerifyGibbs => "verify-gibbs",
            Command::Glue => "glue",
            Command::GlueFlow => "glue-flow",
            Command::RateFunction => "rate-function",
            Command::LdpSimulate => "ldp-simulate",
            Command::LdpLevel2 => "ldp-level2",
            Command::TemperedProfile => "tempered-profile",
        }
    }
}

/// Error reported on stderr as `{"error": {kind, path, message}}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: &'static str,
    pub path: Option<String>,
    pub message: String,
    #[serde(skip)]
    pub code: i32,
}

impl CliError {
    pub fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind: "validation", path: Some(path.into()), message: message.into(), code: EXIT_VALIDATION }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self { kind: "io", path: Some(path.display().to_string()), message: err.to_string(), code: EXIT_VALIDATION }
    }

    pub fn at(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    fn to_json(&self) -> String {
        json!({ "error": self }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (kind, code) = if e.is_numerical() { ("numerical", EXIT_NUMERICAL) } else { ("validation", EXIT_VALIDATION) };
        Self { kind, path: None, message: e.to_string(), code }
    }
}

/// Artifacts of one subcommand before they are written.
struct Outcome {
    csv: String,
    results: Value,
    seed: Option<u64>,
    passed: bool,
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter("ORBITGLUE_LOG")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.code
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let de = toml::Deserializer::new(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let path = if at == "." { "config".to_string() } else { at };
        CliError::validation(path, e.into_inner().message().to_string())
    })
}

/// Config after command-line overrides; this is what gets hashed.
fn resolve(cli: &Cli, mut cfg: ExperimentConfig) -> Result<ExperimentConfig, CliError> {
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
        for slot in [
            cfg.ldp_simulate.as_mut().map(|c| &mut c.seed),
            cfg.ldp_level2.as_mut().map(|c| &mut c.seed),
            cfg.tempered_profile.as_mut().map(|c| &mut c.seed),
        ]
        .into_iter()
        .flatten()
        {
            *slot = Some(seed);
        }
    }
    if let Some(step) = cli.step {
        if !(step > 0.0) || !step.is_finite() {
            return Err(CliError::validation("--step", "sampling step must be positive"));
        }
        if let Some(g) = cfg.glue_flow.as_mut() {
            g.step = Some(step);
        }
    }
    Ok(cfg)
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::validation("--config", "a config file is required"))?;
    if cli.workers == Some(0) {
        return Err(CliError::validation("--workers", "worker count must be positive"));
    }
    let cfg = resolve(cli, load_config(path)?)?;
    let started = Instant::now();
    let outcome = match cli.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::validation("--workers", e.to_string()))?
            .install(|| dispatch(cli.command, &cfg))?,
        None => dispatch(cli.command, &cfg)?,
    };
    let elapsed = started.elapsed().as_secs_f64();
    log::info!("{} finished in {elapsed:.3}s", cli.command.name());
    let summary = json!({
        "tool": "orbitglue",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": cli.command.name(),
        "config_hash": config_hash(&cfg),
        "config": cfg,
        "seed": outcome.seed,
        "wall_time_seconds": elapsed,
        "results": outcome.results,
    });
    fs::create_dir_all(&cli.out).map_err(|e| CliError::io(&cli.out, e))?;
    let stem = cli.out.join(cli.command.name());
    write(&stem.with_extension("csv"), &outcome.csv)?;
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write(&stem.with_extension("json"), &text)?;
    Ok(if outcome.passed { EXIT_OK } else { EXIT_VERIFICATION })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn section<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::validation(name, format!("missing [{name}] section")))
}

fn seed_for(cfg: &ExperimentConfig, local: Option<u64>, command: Command) -> Result<u64, CliError> {
    local.or(cfg.seed).ok_or_else(|| {
        CliError::validation("seed", format!("{} needs a seed (config or --seed)", command.name()))
    })
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn dispatch(command: Command, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let base = cfg.base()?;
    match command {
        Command::Pressure => {
            let u = cfg.potential(&base)?;
            let p = crate::thermo::pressure(&base, &u)?;
            Ok(Outcome { csv: format!("pressure\n{p}\n"), results: json!({ "pressure": p }), seed: None, passed: true })
        }
        Command::Equilibrium => {
            let u = cfg.potential(&base)?;
            let mu = equilibrium_markov(&base, &u)?;
            let states: Vec<String> = mu.states().iter().map(|w| base.render_word(w)).collect();
            let mut csv = String::from("from,to,probability\n");
            for (i, from) in states.iter().enumerate() {
                for &j in mu.successors(i) {
                    csv.push_str(&format!("{from},{},{}\n", states[j], mu.transition(i, j)));
                }
            }
            let stationary: Vec<Value> =
                states.iter().zip(mu.stationary()).map(|(s, m)| json!({ "state": s, "mass": m })).collect();
            let results = json!({
                "pressure": mu.log_perron(),
                "entropy": mu.entropy(),
                "potential_integral": mu.integral(&u)?,
                "block_depth": mu.block_depth(),
                "stationary": stationary,
            });
            Ok(Outcome { csv, results, seed: None, passed: true })
        }
        Command::VerifyGibbs => {
            let g = section(&cfg.verify_gibbs, "verify_gibbs")?;
            let u = cfg.potential(&base)?;
            let mu = equilibrium_markov(&base, &u)?;
            let p = g.pressure.unwrap_or(mu.log_perron());
            let budget = g.budget.map(u128::from).unwrap_or(DEFAULT_CYLINDER_BUDGET);
            let report = verify_gibbs_with_budget(&base, &mu, &u, p, g.n_max, budget)
                .map_err(|e| CliError::from(e).at("verify_gibbs"))?;
            let results = json!({
                "pressure_constant": p,
                "equilibrium_pressure": mu.log_perron(),
                "growth_flag": report.growth_flag,
            });
            Ok(Outcome { csv: report.to_csv(), results, seed: None, passed: report.growth_flag })
        }
        Command::Glue => {
            let g = section(&cfg.glue, "glue")?;
            let segments = g
                .segments
                .iter()
                .enumerate()
                .map(|(i, s)| Ok((point(&base, &s.preperiod, &s.cycle, &format!("glue.segments[{i}]"))?, s.length)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let glued = glue_discrete(&base, &segments, g.epsilon).map_err(|e| CliError::from(e).at("glue"))?;
            let pass = verify_discrete(&glued, &segments);
            let mut csv = String::from("segment,j,distance\n");
            let mut max = 0.0f64;
            for (i, ((x, n), &offset)) in segments.iter().zip(&glued.offsets).enumerate() {
                for j in 0..*n {
                    let d = glued.point.distance_shifted(offset + j, x, j);
                    max = max.max(d);
                    csv.push_str(&format!("{i},{j},{d}\n"));
                }
            }
            let results = json!({
                "pass": pass,
                "gaps": glued.gaps,
                "bound": glued.bound,
                "offsets": glued.offsets,
                "max": max,
                "point": glued.point.render(&base),
            });
            Ok(Outcome { csv, results, seed: None, passed: pass })
        }
        Command::GlueFlow => {
            let g = section(&cfg.glue_flow, "glue_flow")?;
            let sys = cfg.suspension(&base)?;
            let segments = cfg.flow_segments(&sys, &g.segments)?;
            let glued = glue_flow(&sys, &segments, g.epsilon).map_err(|e| CliError::from(e).at("glue_flow"))?;
            let step = g.step.unwrap_or(DEFAULT_STEP);
            let threshold = g.threshold.unwrap_or(DEFAULT_SHADOW_THRESHOLD);
            let report = verify_flow_shadowing(&sys, &glued, &segments, g.epsilon, step, threshold)
                .map_err(|e| CliError::from(e).at("glue_flow"))?;
            let results = json!({
                "pass": report.pass,
                "max": report.overall_max(),
                "max_per_segment": report.max_distance,
                "bound": glued.bound,
                "gaps": glued.gaps,
                "xi": glued.xi,
                "cases": glued.cases.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "laps": glued.laps,
                "start": { "point": glued.start.base().render(&base), "height": glued.start.height() },
                "step": step,
                "threshold": threshold,
            });
            Ok(Outcome { csv: report.to_csv(), results, seed: None, passed: report.pass })
        }
        Command::RateFunction => {
            let r = section(&cfg.rate_function, "rate_function")?;
            let sys = cfg.suspension(&base)?;
            let phi = FlowObservable::new(cfg.potential(&base)?);
            let psi = cfg.observable(&base)?;
            let profile = rate_function_profile(&sys, &phi, &psi, &r.s)?;
            let mut results = json!({
                "feasible_min": profile.feasible_min,
                "feasible_max": profile.feasible_max,
                "rate": profile.rate.iter().map(|&v| finite(v)).collect::<Vec<_>>(),
            });
            if r.oracle {
                let resolution = r.resolution.unwrap_or(DEFAULT_RESOLUTION);
                let oracle = r
                    .s
                    .iter()
                    .zip(&profile.rate)
                    .map(|(&s, i)| {
                        if i.is_finite() {
                            rate_function_oracle(&sys, &phi, &psi, s, resolution).map(Some)
                        } else {
                            Ok(None)
                        }
                    })
                    .collect::<crate::Result<Vec<_>>>()?;
                results["oracle"] = json!(oracle);
            }
            Ok(Outcome { csv: profile.to_csv(), results, seed: None, passed: true })
        }
        Command::LdpSimulate => {
            let l = section(&cfg.ldp_simulate, "ldp_simulate")?;
            let seed = seed_for(cfg, l.seed, command)?;
            let sys = cfg.suspension(&base)?;
            let phi = FlowObservable::new(cfg.potential(&base)?);
            let psi = cfg.observable(&base)?;
            let (_, mu) = crate::deviations::flow_equilibrium(&sys, &phi)?;
            let experiment = DecayExperiment { times: l.times.clone(), samples: l.samples, seed, workers: None };
            let decay = estimate_deviation_level1(&sys, &mu, &psi, l.interval, &experiment)
                .map_err(|e| CliError::from(e).at("ldp_simulate"))?;
            let theoretical = interval_rate(&sys, &phi, &psi, l.interval)?.map(|i| -i);
            let mut results = decay_summary(&decay);
            results["theoretical_slope"] = json!(theoretical);
            Ok(Outcome { csv: decay.to_csv(), results, seed: Some(seed), passed: true })
        }
        Command::LdpLevel2 => {
            let l = section(&cfg.ldp_level2, "ldp_level2")?;
            let seed = seed_for(cfg, l.seed, command)?;
            let sys = cfg.suspension(&base)?;
            let phi = FlowObservable::new(cfg.potential(&base)?);
            let basis = l
                .basis
                .iter()
                .enumerate()
                .map(|(i, t)| t.build(&base, &format!("ldp_level2.basis[{i}]")).map(FlowObservable::new))
                .collect::<Result<Vec<_>, CliError>>()?;
            let basis = TestBasis::new(basis).map_err(|e| CliError::from(e).at("ldp_level2.basis"))?;
            let (_, mu) = crate::deviations::flow_equilibrium(&sys, &phi)?;
            let experiment = DecayExperiment { times: l.times.clone(), samples: l.samples, seed, workers: None };
            let decay = estimate_deviation_level2(&sys, &mu, &basis, &l.center, l.radius, &experiment)
                .map_err(|e| CliError::from(e).at("ldp_level2"))?;
            let mut results = decay_summary(&decay);
            results["weights"] = json!(basis.weights());
            Ok(Outcome { csv: decay.to_csv(), results, seed: Some(seed), passed: true })
        }
        Command::TemperedProfile => {
            let t = section(&cfg.tempered_profile, "tempered_profile")?;
            let seed = seed_for(cfg, t.seed, command)?;
            let sys = cfg.suspension(&base)?;
            let phi = FlowObservable::new(cfg.potential(&base)?);
            let psi = cfg.observable(&base)?;
            let (_, mu) = crate::deviations::flow_equilibrium(&sys, &phi)?;
            let profile = tempered_variation_profile(&sys, &mu, &psi, t.delta, &t.times, t.pairs, seed)
                .map_err(|e| CliError::from(e).at("tempered_profile"))?;
            let mut csv = String::from("t,gamma_over_t\n");
            for (time, g) in &profile {
                csv.push_str(&format!("{time},{g}\n"));
            }
            let decreasing = profile.windows(2).all(|w| w[1].1 <= w[0].1);
            let results = json!({
                "decreasing": decreasing,
                "last": profile.last().map(|p| p.1),
                "delta": t.delta,
                "pairs": t.pairs,
            });
            Ok(Outcome { csv, results, seed: Some(seed), passed: true })
        }
    }
}

fn decay_summary(decay: &EmpiricalDecay) -> Value {
    json!({
        "slope": decay.slope,
        "stderr": decay.slope_se,
        "intercept": decay.intercept,
        "samples": decay.samples,
        "fitted_points": decay.in_fit.iter().filter(|&&b| b).count(),
        "empty_times": decay.empty,
    })
}

/// `inf_{[a, b]} I`, or `None` when the interval misses the feasible range.
fn interval_rate(
    sys: &crate::suspension::SuspensionSystem,
    phi: &FlowObservable,
    psi: &FlowObservable,
    (a, b): (f64, f64),
) -> Result<Option<f64>, CliError> {
    let problem = FlowProblem::new(sys, phi, psi)?;
    let mean = problem.derivative(0.0)?;
    if a <= mean && mean <= b {
        return Ok(Some(0.0));
    }
    let nearest = if mean < a { a } else { b };
    match problem.rate(nearest) {
        Ok((i, _)) => Ok(Some(i)),
        Err(Error::OutsideFeasibleRange { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}
