//! Command-line front end.
//!
//! Exit codes: 0 success or acceptable, 2 usage error, 3 unacceptable
//! candidate, 4 numerical failure (including failed validation assertions),
//! 5 data error.
//!
//! Settings resolve as flag, then `--config` file, then built-in default.
//! The config file is TOML with any of these top-level keys:
//!
//! ```toml
//! nu = 0.8
//! gamma = 0.8
//! seed = 7
//! threads = 4
//! objective_scale = 1.0
//! loss_weight = 0.0
//! feas_tol = 1e-8
//! gap_tol = 1e-8
//! max_iter = 200
//! cut_eps = 1e-8
//! cut_margin = 1e-7
//! max_generators = 200
//! ```

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::accept::{self, AcceptOptions, Decision, KnowledgeBase, Provenance};
use crate::assemble::RiskParams;
use crate::conic::SolverOptions;
use crate::error::{Error, Result};
use crate::hca::{self, HcResult, MaximizeOptions};
use crate::network::RadialNetwork;
use crate::scenario::{load_scenarios, ScenarioSet};
use crate::validate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNACCEPTABLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_DATA: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "hostcap", version, about = "CVaR-constrained solar hosting capacity for radial feeders")]
pub struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// TOML file with default settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Where to write the run manifest (default: next to the main output).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximize total installed capacity under CVaR limits.
    Maximize(MaximizeArgs),
    /// Test candidate capacities for acceptability, reusing a knowledge base.
    Test(TestArgs),
    /// Empirical CVaR of one CSV column.
    Cvar(CvarArgs),
    /// Re-check a saved maximization result.
    Validate(ValidateArgs),
    /// Summarize a knowledge base file.
    KbInspect(KbInspectArgs),
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MaximizeArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub scenarios: PathBuf,
    #[command(flatten)]
    pub risk: RiskArgs,
    /// Solve on a random subsample of this many scenarios.
    #[arg(long)]
    pub subsample: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiplier on the objective handed to the solver.
    #[arg(long)]
    pub objective_scale: Option<f64>,
    #[arg(long)]
    pub loss_weight: Option<f64>,
    /// Run a subsampling study over these sizes instead of one solve.
    #[arg(long, value_delimiter = ',')]
    pub study_sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub scenarios: PathBuf,
    #[command(flatten)]
    pub risk: RiskArgs,
    /// Candidates, one per line, comma or whitespace separated.
    #[arg(long)]
    pub psi: PathBuf,
    /// Knowledge base; created if missing, updated in place.
    #[arg(long)]
    pub kb: PathBuf,
    /// Confirm cheap decisions with a full solve.
    #[arg(long)]
    pub shadow_check: bool,
    /// Test the corners of the capacity box before the candidates.
    #[arg(long)]
    pub seed_corners: bool,
    #[arg(long)]
    pub max_generators: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CvarArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub delta: f64,
    /// Column name, or 1-based position (default: first column).
    #[arg(long)]
    pub column: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub result: PathBuf,
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub scenarios: PathBuf,
    /// Write violation fractions as CSV, with a plotting script beside it.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KbInspectArgs {
    #[arg(long)]
    pub kb: PathBuf,
}

/// Values read from `--config`.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub nu: Option<f64>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub objective_scale: Option<f64>,
    pub loss_weight: Option<f64>,
    pub feas_tol: Option<f64>,
    pub gap_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub cut_eps: Option<f64>,
    pub cut_margin: Option<f64>,
    pub max_generators: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::parse(None, format!("config {}: {e}", path.display())))
    }

    fn solver(&self) -> SolverOptions {
        let d = SolverOptions::default();
        SolverOptions {
            feas_tol: self.feas_tol.unwrap_or(d.feas_tol),
            gap_tol: self.gap_tol.unwrap_or(d.gap_tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            ..d
        }
    }

    fn risk(&self, args: &RiskArgs) -> Result<RiskParams> {
        let nu = args.nu.or(self.nu).ok_or_else(|| usage("--nu is required"))?;
        let gamma = args.gamma.or(self.gamma).ok_or_else(|| usage("--gamma is required"))?;
        RiskParams::new(nu, gamma)
    }
}

fn usage(msg: &str) -> Error {
    Error::Usage(msg.to_string())
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) | Error::BadDelta(_) | Error::BadCount { .. } => EXIT_USAGE,
        Error::NumericalFailure(_)
        | Error::NonConvergence { .. }
        | Error::NoSolution(_)
        | Error::InvalidCertificate(_)
        | Error::InvariantViolation(_)
        | Error::ShadowDisagreement(_) => EXIT_NUMERICAL,
        Error::GraphNotTree(_)
        | Error::InvalidNetwork(_)
        | Error::DimensionMismatch(_)
        | Error::Parse { .. }
        | Error::EmptyFile
        | Error::BaseInfeasible
        | Error::ProvenanceMismatch(_)
        | Error::Io { .. }
        | Error::Json(_) => EXIT_DATA,
    }
}

/// Reproduction record written next to a command's output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub argv: Vec<String>,
    /// SHA-256 of each input file's bytes, keyed by path.
    pub inputs: serde_json::Map<String, Value>,
    pub settings: Value,
    pub seed: Option<u64>,
    pub phase_seconds: serde_json::Map<String, Value>,
}

impl RunManifest {
    fn new(subcommand: &str, argv: &[String]) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            argv: argv.to_vec(),
            inputs: Default::default(),
            settings: Value::Null,
            seed: None,
            phase_seconds: Default::default(),
        }
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs
            .insert(path.display().to_string(), Value::String(hex::encode(Sha256::digest(&bytes))));
        Ok(())
    }

    fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.phase_seconds.insert(name.to_string(), json!(t.elapsed().as_secs_f64()));
        out
    }
}

/// Pretty JSON with keys sorted, so equal values print identically.
pub fn stable_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&serde_json::to_value(value)?)?)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn manifest_path(explicit: &Option<PathBuf>, output: Option<&Path>) -> Option<PathBuf> {
    explicit.clone().or_else(|| {
        output.map(|p| {
            let mut s = p.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    })
}

struct Ctx {
    json: bool,
    config: ConfigFile,
    manifest_override: Option<PathBuf>,
    argv: Vec<String>,
}

struct Outcome {
    code: i32,
    human: String,
    json: Value,
}

/// Parse `args` (program name first) and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let json_mode = cli.json;
    match execute(cli, args.iter().map(|a| a.to_string_lossy().into_owned()).collect()) {
        Ok(out) => {
            if json_mode {
                println!("{}", stable_json(&out.json).unwrap_or_default());
            } else {
                print!("{}", out.human);
            }
            out.code
        }
        Err(err) => {
            let code = exit_code(&err);
            eprintln!("error: {err}");
            if json_mode {
                let v = json!({"error": {"message": err.to_string(), "exit_code": code}});
                println!("{}", stable_json(&v).unwrap_or_default());
            }
            code
        }
    }
}

fn execute(cli: Cli, argv: Vec<String>) -> Result<Outcome> {
    let config = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let threads = cli.threads.or(config.threads);
    let ctx = Ctx {
        json: cli.json,
        config,
        manifest_override: cli.manifest.clone(),
        argv,
    };
    let go = || match cli.command {
        Command::Maximize(a) => cmd_maximize(&ctx, a),
        Command::Test(a) => cmd_test(&ctx, a),
        Command::Cvar(a) => cmd_cvar(&ctx, a),
        Command::Validate(a) => cmd_validate(&ctx, a),
        Command::KbInspect(a) => cmd_kb_inspect(&ctx, a),
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| usage(&format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

fn finish_manifest(ctx: &Ctx, m: &RunManifest, output: Option<&Path>) -> Result<()> {
    if let Some(p) = manifest_path(&ctx.manifest_override, output) {
        write_file(&p, &(stable_json(m)? + "\n"))?;
    }
    Ok(())
}

fn load_inputs(m: &mut RunManifest, network: &Path, scenarios: &Path) -> Result<(RadialNetwork, ScenarioSet)> {
    m.input(network)?;
    m.input(scenarios)?;
    m.phase("load", || {
        let net = RadialNetwork::load(network)?;
        let scen = load_scenarios(scenarios, net.n())?;
        Ok((net, scen))
    })
}

fn cmd_maximize(ctx: &Ctx, a: MaximizeArgs) -> Result<Outcome> {
    let cfg = &ctx.config;
    let risk = cfg.risk(&a.risk)?;
    let mut m = RunManifest::new("maximize", &ctx.argv);
    let (net, full) = load_inputs(&mut m, &a.network, &a.scenarios)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let opts = MaximizeOptions {
        objective_scale: a.objective_scale.or(cfg.objective_scale).unwrap_or(1.0),
        loss_weight: a.loss_weight.or(cfg.loss_weight).unwrap_or(0.0),
        solver: cfg.solver(),
    };
    m.seed = Some(seed);
    m.settings = json!({"nu": risk.nu, "gamma": risk.gamma, "maximize": opts, "subsample": a.subsample});

    if !a.study_sizes.is_empty() {
        let rows = m.phase("study", || {
            hca::subsample_study(&net, &full, &risk, &a.study_sizes, a.trials, seed, &opts)
        })?;
        let value = serde_json::to_value(&rows)?;
        if let Some(out) = &a.out {
            write_file(out, &(stable_json(&value)? + "\n"))?;
        }
        finish_manifest(ctx, &m, a.out.as_deref())?;
        let mut human = String::from("size  trials  solved  mean        std\n");
        for r in &rows {
            human.push_str(&format!(
                "{:<5} {:<7} {:<7} {:<11.6} {:.6}{}\n",
                r.size,
                r.trials,
                r.solved,
                r.mean,
                r.std,
                if r.std_defined { "" } else { " (undefined)" }
            ));
        }
        return Ok(Outcome {
            code: EXIT_OK,
            human,
            json: value,
        });
    }

    let scen = match a.subsample {
        Some(k) => full.subsample(k, seed)?,
        None => full,
    };
    let res = m.phase("solve", || hca::maximize_capacity(&net, &scen, &risk, &opts))?;
    let value = serde_json::to_value(&res)?;
    if let Some(out) = &a.out {
        write_file(out, &(stable_json(&value)? + "\n"))?;
    }
    finish_manifest(ctx, &m, a.out.as_deref())?;
    let human = format!(
        "psi* = {:?}\nobjective = {:.9}\nnu = {}, gamma = {}, K = {}\nsolver: {} iterations, primal residual {:.2e}, dual residual {:.2e}\n",
        res.psi_star,
        res.objective,
        res.nu,
        res.gamma,
        res.scenarios,
        res.solver.iterations,
        res.solver.primal_residual,
        res.solver.dual_residual
    );
    let json = if ctx.json { value } else { Value::Null };
    Ok(Outcome {
        code: EXIT_OK,
        human,
        json,
    })
}

/// Candidates from a text file: one per line, comma or whitespace separated,
/// `#` starts a comment.
pub fn read_candidates(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect();
        let row = row.map_err(|e| Error::parse(Some(i + 1), format!("bad number: {e}")))?;
        if row.len() != dim {
            return Err(Error::parse(Some(i + 1), format!("expected {dim} values, found {}", row.len())));
        }
        out.push(row);
    }
    if out.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(out)
}

fn cmd_test(ctx: &Ctx, a: TestArgs) -> Result<Outcome> {
    let cfg = &ctx.config;
    let risk = cfg.risk(&a.risk)?;
    let mut m = RunManifest::new("test", &ctx.argv);
    let (net, scen) = load_inputs(&mut m, &a.network, &a.scenarios)?;
    m.input(&a.psi)?;
    let candidates = read_candidates(&a.psi, net.num_lines())?;
    let d = AcceptOptions::default();
    let opts = AcceptOptions {
        cut_eps: cfg.cut_eps.unwrap_or(d.cut_eps),
        cut_margin: cfg.cut_margin.unwrap_or(d.cut_margin),
        max_generators: a.max_generators.or(cfg.max_generators),
        shadow_check: a.shadow_check,
        solver: cfg.solver(),
    };
    m.settings = json!({"nu": risk.nu, "gamma": risk.gamma, "accept": opts, "seed_corners": a.seed_corners});
    let mut kb = if a.kb.exists() {
        m.input(&a.kb)?;
        accept::load_kb(&a.kb, &Provenance::of(&net, &scen, &risk))?
    } else {
        KnowledgeBase::new(&net, &scen, &risk)
    };
    if a.seed_corners {
        m.phase("corners", || accept::seed_corners(&mut kb, &net, &scen, &risk, &opts))?;
    }
    let outcomes = m.phase("test", || {
        candidates
            .iter()
            .map(|psi| accept::test(&mut kb, &net, &scen, &risk, psi, &opts))
            .collect::<Result<Vec<_>>>()
    });
    // keep what was learned before a failure
    accept::save_kb(&kb, &a.kb)?;
    let outcomes = outcomes?;
    finish_manifest(ctx, &m, Some(&a.kb))?;

    let disagreements: Vec<&Vec<f64>> = candidates
        .iter()
        .zip(&outcomes)
        .filter(|(_, o)| !o.shadow_agrees())
        .map(|(p, _)| p)
        .collect();
    if !disagreements.is_empty() {
        return Err(Error::ShadowDisagreement(format!(
            "cheap decisions contradicted by full solves at {disagreements:?}"
        )));
    }
    let mut human = String::new();
    for (psi, o) in candidates.iter().zip(&outcomes) {
        human.push_str(&format!(
            "{psi:?}: {:?} via {:?} in {:.3e} s\n",
            o.decision, o.method, o.seconds
        ));
    }
    let code = if outcomes.iter().all(|o| o.decision == Decision::Acceptable) {
        EXIT_OK
    } else {
        EXIT_UNACCEPTABLE
    };
    let rows: Vec<Value> = candidates
        .iter()
        .zip(&outcomes)
        .map(|(psi, o)| json!({"psi": psi, "decision": o.decision, "method": o.method, "seconds": o.seconds, "status": o.status, "cut_added": o.cut_added}))
        .collect();
    Ok(Outcome {
        code,
        human,
        json: json!({"results": rows}),
    })
}

/// One column of a CSV file; a first row that does not parse is a header.
pub fn read_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::parse(None, format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    for r in rdr.records() {
        records.push(r.map_err(|e| Error::parse(e.position().map(|p| p.line() as usize), e.to_string()))?);
    }
    let Some(first) = records.first() else {
        return Err(Error::EmptyFile);
    };
    let has_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let idx = match column {
        None => 0,
        Some(c) => match c.parse::<usize>() {
            Ok(k) if k >= 1 => k - 1,
            _ if has_header => first
                .iter()
                .position(|f| f == c)
                .ok_or_else(|| Error::parse(Some(1), format!("no column named {c}")))?,
            _ => return Err(Error::parse(None, format!("no column named {c}"))),
        },
    };
    let mut out = Vec::new();
    for (i, rec) in records.iter().enumerate().skip(usize::from(has_header)) {
        let field = rec
            .get(idx)
            .ok_or_else(|| Error::parse(Some(i + 1), format!("row has no column {}", idx + 1)))?;
        out.push(field.parse().map_err(|_| Error::parse(Some(i + 1), format!("bad number {field:?}")))?);
    }
    if out.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(out)
}

fn cmd_cvar(ctx: &Ctx, a: CvarArgs) -> Result<Outcome> {
    let mut m = RunManifest::new("cvar", &ctx.argv);
    m.input(&a.input)?;
    let values = read_column(&a.input, a.column.as_deref())?;
    let value = crate::cvar::cvar(&values, a.delta)?;
    m.settings = json!({"delta": a.delta, "column": a.column});
    finish_manifest(ctx, &m, None)?;
    Ok(Outcome {
        code: EXIT_OK,
        human: format!("{value}\n"),
        json: json!({"cvar": value, "delta": a.delta, "count": values.len()}),
    })
}

fn cmd_validate(ctx: &Ctx, a: ValidateArgs) -> Result<Outcome> {
    let mut m = RunManifest::new("validate", &ctx.argv);
    let (net, scen) = load_inputs(&mut m, &a.network, &a.scenarios)?;
    m.input(&a.result)?;
    let text = std::fs::read_to_string(&a.result).map_err(|e| Error::io(&a.result, e))?;
    let res: HcResult = serde_json::from_str(&text).map_err(|e| Error::parse(Some(e.line()), e.to_string()))?;
    let report = m.phase("validate", || validate::validate(&res, &scen, &net))?;
    if let Some(path) = &a.out_csv {
        write_file(path, &report.histogram.to_csv()?)?;
        let mut script = path.as_os_str().to_owned();
        script.push(".py");
        write_file(Path::new(&script), &validate::plot_script(&path.display().to_string()))?;
    }
    finish_manifest(ctx, &m, a.out_csv.as_deref())?;
    let human = format!(
        "relaxation gap: max {:.3e}, min {:.3e}, {} loose entries\n\
         gap direction: {}\nchance bounds: {}\nCVaR limits: {} (smallest margin {:.3e})\n",
        report.gap.max_gap,
        report.gap.min_gap,
        report.gap.loose.len(),
        ok(report.gap_direction_ok),
        ok(report.chance_bounds_ok),
        ok(report.cvar_ok),
        report.cvar.min_margin()
    );
    let json = json!({
        "passed": report.passed(),
        "gap_direction_ok": report.gap_direction_ok,
        "relaxation_tight": report.relaxation_tight,
        "chance_bounds_ok": report.chance_bounds_ok,
        "cvar_ok": report.cvar_ok,
        "max_gap": report.gap.max_gap,
        "min_gap": report.gap.min_gap,
        "loose": report.gap.loose,
        "histogram": report.histogram,
        "cvar": report.cvar,
    });
    Ok(Outcome {
        code: if report.passed() { EXIT_OK } else { EXIT_NUMERICAL },
        human,
        json,
    })
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

fn cmd_kb_inspect(ctx: &Ctx, a: KbInspectArgs) -> Result<Outcome> {
    let kb = accept::read_kb(&a.kb)?;
    let summary = kb.stats.summary();
    let mut human = format!(
        "network {}\nscenarios {}\nnu {} gamma {}\naccepted {}  rejected {}  cuts {}\n\
         shadow checks {} (disagreements {})  conflicts {}  uncertified rejections {}\n",
        kb.provenance.network_digest,
        kb.provenance.scenario_digest,
        kb.provenance.nu,
        kb.provenance.gamma,
        kb.accepted.len(),
        kb.rejected.len(),
        kb.cuts.len(),
        kb.stats.shadow_checks,
        kb.stats.shadow_disagreements,
        kb.stats.conflicts,
        kb.stats.uncertified_rejections
    );
    human.push_str("test                       count  mean (s)     median (s)\n");
    for r in &summary {
        human.push_str(&format!(
            "{:<26} {:<6} {:<12.3e} {:.3e}\n",
            r.label, r.count, r.mean_seconds, r.median_seconds
        ));
    }
    let _ = ctx;
    Ok(Outcome {
        code: EXIT_OK,
        human,
        json: json!({
            "provenance": kb.provenance,
            "accepted": kb.accepted.len(),
            "rejected": kb.rejected.len(),
            "cuts": kb.cuts.len(),
            "summary": summary,
            "shadow_checks": kb.stats.shadow_checks,
            "shadow_disagreements": kb.stats.shadow_disagreements,
        }),
    })
}
