//! Command-line entry point. Every subcommand writes its outputs and a
//! `manifest.json` into `--output-dir`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corpus::{parse_corpus, Corpus, CorpusFilters, Role};
use crate::diversity::{self, DiversityConfig, DiversityRun, Measure, PeerPolicy, Scope};
use crate::effectiveness::{self, EffectivenessRecord, WindowComparison};
use crate::error::{Error, Result};
use crate::langmodel::SamplingParams;
use crate::lifestage::tenured_stage_index;
use crate::probe::{self, ProbeConfig, ProbeGrid};
use crate::report::{self, OutputDir};
use crate::segmentation::{Component, ComponentWordStats, DEFAULT_CHARACTERISTIC_THRESHOLD};
use crate::synthgen::{self, Scenario};
use crate::trends::{self, Heatmap};
use crate::usage_shift::{self, ShiftTable, DEFAULT_CORE_USER_FRACTION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_EMPTY: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "lingdiv", version, about = "Longitudinal linguistic diversity analysis", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Generate a synthetic corpus and its ground truth.
    Simulate(SimulateArgs),
    /// Within, between, and relative diversity per life-stage.
    Diversity(DiversityArgs),
    /// Per-component diversity and characteristic words.
    Components(ComponentsArgs),
    /// Increase-fraction heatmap, surface statistics, and tenure-duration correlation.
    Trends(DiversityArgs),
    /// Core vocabulary usage shifts between the first and the tenured stage.
    Shift(ShiftArgs),
    /// Diversity terciles against the share of helpful ratings.
    Effectiveness(EffectivenessArgs),
    /// Paired early-versus-tenured classification probe.
    Probe(ProbeArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Diversity(_) => "diversity",
            Command::Components(_) => "components",
            Command::Trends(_) => "trends",
            Command::Shift(_) => "shift",
            Command::Effectiveness(_) => "effectiveness",
            Command::Probe(_) => "probe",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CommonArgs {
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores. Never changes results.
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    pub threads: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct InputArgs {
    /// Corpus in JSONL format.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 120)]
    pub min_conversations: usize,
    #[arg(long, default_value_t = 10)]
    pub min_counselor_messages: usize,
}

impl InputArgs {
    fn load(&self) -> Result<Corpus> {
        parse_corpus(
            &self.input,
            CorpusFilters {
                min_conversations: self.min_conversations,
                min_counselor_messages: self.min_counselor_messages,
            },
        )
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PeerArg {
    SameCohort,
    Any,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleArg {
    Counselor,
    Texter,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BudgetArgs {
    /// Tokens sampled to fit each model (whole conversations; components use a fifth).
    #[arg(long, default_value_t = 2000)]
    pub train_budget: usize,
    /// Tokens sampled from each scored conversation.
    #[arg(long, default_value_t = 200)]
    pub eval_budget: usize,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 20)]
    pub stage_width: usize,
    #[arg(long, default_value_t = 1)]
    pub min_test_convs: usize,
    #[arg(long, value_enum, default_value_t = PeerArg::SameCohort)]
    pub peers: PeerArg,
}

impl BudgetArgs {
    fn config(&self) -> DiversityConfig {
        DiversityConfig {
            sampling: SamplingParams {
                train_budget: self.train_budget,
                eval_budget: self.eval_budget,
                n_samples: self.samples,
            },
            min_test_convs: self.min_test_convs,
            peer_policy: match self.peers {
                PeerArg::SameCohort => PeerPolicy::SameCohort,
                PeerArg::Any => PeerPolicy::Any,
            },
            stage_width: self.stage_width,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = Scenario::Mixed)]
    pub scenario: Scenario,
    #[arg(long, default_value_t = 200)]
    pub agents: usize,
    #[arg(long, default_value_t = 120)]
    pub convs: usize,
    /// Overrides the scenario's mean counselor messages per conversation.
    #[arg(long)]
    pub messages_per_conv: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DiversityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ComponentsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Minimum log-ratio for a characteristic word.
    #[arg(long, default_value_t = DEFAULT_CHARACTERISTIC_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ShiftArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Share of long-serving individuals that must use a core word.
    #[arg(long, default_value_t = DEFAULT_CORE_USER_FRACTION)]
    pub core_fraction: f64,
    /// Restrict to words characteristic of one component (name or index).
    #[arg(long)]
    pub component: Option<Component>,
    #[arg(long, default_value_t = DEFAULT_CHARACTERISTIC_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EffectivenessArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, value_delimiter = ',', default_values_t = Measure::ALL)]
    pub measures: Vec<Measure>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = RoleArg::Counselor)]
    pub role: RoleArg,
    /// Share of eligible individuals sampled into pairs.
    #[arg(long, default_value_t = 1.0)]
    pub sample_fraction: f64,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 3)]
    pub inner_folds: usize,
    #[arg(long, default_value_t = 150)]
    pub iterations: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0, 10.0])]
    pub c: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [10_000usize, 50_000])]
    pub max_features: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0])]
    pub max_df: Vec<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub outputs: Vec<String>,
    pub threads: usize,
    pub wall_time_secs: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

/// Outcome of a subcommand that completed without error.
enum Outcome {
    Done,
    /// Outputs were written but hold no eligible results.
    Empty(String),
}

fn empty_if(condition: bool, what: &str) -> Outcome {
    if condition {
        Outcome::Empty(format!("no eligible {what}"))
    } else {
        Outcome::Done
    }
}

/// Parses `argv` (including the program name) and runs it. Returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Command::Replay(args) = &cli.command {
        return replay(args);
    }
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli.command, recorded) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::Empty(msg)) => {
            eprintln!("lingdiv: {msg}");
            EXIT_EMPTY
        }
        Err(e) => {
            eprintln!("lingdiv: {e}");
            if e.is_eligibility() {
                EXIT_EMPTY
            } else {
                EXIT_VALIDATION
            }
        }
    }
}

fn replay(args: &ReplayArgs) -> i32 {
    let manifest = match RunManifest::load(&args.manifest) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("lingdiv: {e}");
            return EXIT_VALIDATION;
        }
    };
    let mut argv = vec!["lingdiv".to_owned()];
    argv.extend(manifest.argv);
    if let Some(dir) = &args.output_dir {
        argv.extend(["--output-dir".to_owned(), dir.to_string_lossy().into_owned()]);
    }
    if let Some(n) = args.threads {
        argv.extend(["--threads".to_owned(), n.to_string()]);
    }
    run(argv)
}

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Simulate(a) => &a.common,
        Command::Diversity(a) | Command::Trends(a) => &a.common,
        Command::Components(a) => &a.common,
        Command::Shift(a) => &a.common,
        Command::Effectiveness(a) => &a.common,
        Command::Probe(a) => &a.common,
        Command::Replay(_) => unreachable!("replay is dispatched before execution"),
    }
}

fn input(cmd: &Command) -> Option<&InputArgs> {
    match cmd {
        Command::Diversity(a) | Command::Trends(a) => Some(&a.input),
        Command::Components(a) => Some(&a.input),
        Command::Shift(a) => Some(&a.input),
        Command::Effectiveness(a) => Some(&a.input),
        Command::Probe(a) => Some(&a.input),
        Command::Simulate(_) | Command::Replay(_) => None,
    }
}

fn execute(cmd: &Command, argv: Vec<String>) -> Result<Outcome> {
    let start = Instant::now();
    let common = common(cmd);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    let mut out = OutputDir::create(&common.output_dir)?;
    let outcome = pool.install(|| -> Result<Outcome> {
        match cmd {
            Command::Simulate(a) => simulate(a, &mut out),
            Command::Diversity(a) => run_diversity(a, &mut out),
            Command::Components(a) => run_components(a, &mut out),
            Command::Trends(a) => run_trends(a, &mut out),
            Command::Shift(a) => run_shift(a, &mut out),
            Command::Effectiveness(a) => run_effectiveness(a, &mut out),
            Command::Probe(a) => run_probe(a, &mut out),
            Command::Replay(_) => unreachable!("replay is dispatched before execution"),
        }
    })?;
    let config = serde_json::to_value(cmd)?
        .as_object()
        .and_then(|o| o.values().next().cloned())
        .unwrap_or_default();
    let manifest = RunManifest {
        command: cmd.name().to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        argv,
        config,
        seed: common.seed,
        input: input(cmd).map(|i| i.input.clone()),
        output_dir: common.output_dir.clone(),
        outputs: out.written().to_vec(),
        threads: pool.current_num_threads(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    out.write_json(report::MANIFEST_JSON, &manifest)?;
    Ok(outcome)
}

fn simulate(a: &SimulateArgs, out: &mut OutputDir) -> Result<Outcome> {
    let (mut cfg, profiles) = synthgen::scenario(a.scenario, a.agents, a.common.seed);
    cfg.convs_per_agent = a.convs;
    if let Some(m) = a.messages_per_conv {
        cfg.messages_per_conv = m;
    }
    let generated = synthgen::generate(&cfg, &profiles)?;
    let mut corpus = Vec::new();
    generated.write_jsonl(&mut corpus)?;
    out.write_bytes(report::CORPUS_JSONL, &corpus)?;
    out.write_json(report::GROUND_TRUTH_JSON, &generated.ground_truth)?;
    Ok(Outcome::Done)
}

fn run_diversity(a: &DiversityArgs, out: &mut OutputDir) -> Result<Outcome> {
    let corpus = a.input.load()?;
    let run = diversity::compute_all(&corpus, &a.budget.config(), a.common.seed)?;
    out.write_bytes(report::DIVERSITY_CSV, &report::diversity_csv(&run.records, false)?)?;
    Ok(empty_if(run.records.is_empty(), "diversity cells"))
}

fn component_runs(corpus: &Corpus, cfg: &DiversityConfig, seed: u64) -> Result<Vec<(Component, DiversityRun)>> {
    let cfg = cfg.scaled_for_components();
    Component::ALL
        .into_iter()
        .map(|c| Ok((c, diversity::compute_scope(corpus, &cfg, Scope::Component(c), seed)?)))
        .collect()
}

fn run_components(a: &ComponentsArgs, out: &mut OutputDir) -> Result<Outcome> {
    let corpus = a.input.load()?;
    let runs = component_runs(&corpus, &a.budget.config(), a.common.seed)?;
    let records: Vec<_> = runs.iter().flat_map(|(_, r)| r.records.iter().cloned()).collect();
    out.write_bytes(report::DIVERSITY_CSV, &report::diversity_csv(&records, true)?)?;
    let stats = ComponentWordStats::from_corpus(&corpus);
    let words: Vec<_> = Component::ALL
        .into_iter()
        .flat_map(|c| stats.characteristic(&corpus, c, a.threshold))
        .collect();
    out.write_bytes(report::CHARACTERISTIC_WORDS_CSV, &report::characteristic_words_csv(&words)?)?;
    Ok(empty_if(records.is_empty(), "component diversity cells"))
}

fn run_trends(a: &DiversityArgs, out: &mut OutputDir) -> Result<Outcome> {
    let corpus = a.input.load()?;
    let cfg = a.budget.config();
    let seed = a.common.seed;
    let whole = diversity::compute_all(&corpus, &cfg, seed)?;
    let components = component_runs(&corpus, &cfg, seed)?;
    let heatmap = Heatmap::from_runs(&whole, &components, tenured_stage_index(cfg.stage_width));
    out.write_bytes(report::TREND_HEATMAP_CSV, &report::heatmap_csv(&heatmap)?)?;
    out.write_json(report::TREND_HEATMAP_JSON, &heatmap)?;
    let surface = trends::surface_stats(&corpus, cfg.stage_width, seed)?;
    out.write_bytes(report::SURFACE_STATS_CSV, &report::surface_stats_csv(&surface)?)?;
    match trends::tenure_duration_correlation(&corpus, &whole) {
        Ok(corr) => out.write_json(report::DURATION_CORRELATION_JSON, &corr)?,
        Err(e) if e.is_eligibility() => eprintln!("lingdiv: skipping duration correlation: {e}"),
        Err(e) => return Err(e),
    }
    Ok(empty_if(heatmap.cells.iter().all(|c| c.cell.is_none()), "heatmap cells"))
}

#[derive(Serialize)]
struct ShiftSummary<'a> {
    component: Option<Component>,
    n_core_words: usize,
    n_entries: usize,
    median: Option<f64>,
    table: &'a ShiftTable,
}

fn run_shift(a: &ShiftArgs, out: &mut OutputDir) -> Result<Outcome> {
    if !(a.core_fraction > 0.0 && a.core_fraction <= 1.0) {
        return Err(Error::Parameter(format!("core fraction must be in (0, 1], got {}", a.core_fraction)));
    }
    let corpus = a.input.load()?;
    let core = usage_shift::core_vocabulary(&corpus, a.core_fraction);
    let table = match a.component {
        None => usage_shift::shift_table(&corpus, &core),
        Some(c) => {
            let stats = ComponentWordStats::from_corpus(&corpus);
            usage_shift::component_shift_table(&corpus, &core, &stats, c, a.threshold)
        }
    };
    out.write_bytes(report::SHIFT_TABLE_CSV, &report::shift_table_csv(&table)?)?;
    out.write_bytes(report::SHIFT_HIST_CSV, &report::shift_hist_csv(&table)?)?;
    out.write_json(
        report::SHIFT_SUMMARY_JSON,
        &ShiftSummary {
            component: a.component,
            n_core_words: core.len(),
            n_entries: table.entries.len(),
            median: table.median,
            table: &table,
        },
    )?;
    Ok(empty_if(table.entries.is_empty(), "words"))
}

#[derive(Serialize)]
struct EffectivenessReport {
    records: BTreeMap<String, Vec<EffectivenessRecord>>,
    concurrent: Vec<WindowComparison>,
    lagged: Vec<WindowComparison>,
}

fn run_effectiveness(a: &EffectivenessArgs, out: &mut OutputDir) -> Result<Outcome> {
    let corpus = a.input.load()?;
    let cfg = a.budget.config();
    let seed = a.common.seed;
    let mut report = EffectivenessReport {
        records: BTreeMap::new(),
        concurrent: Vec::new(),
        lagged: Vec::new(),
    };
    for w in [effectiveness::EARLIER_WINDOW, effectiveness::EXPERIENCED_WINDOW] {
        report
            .records
            .insert(format!("{}-{}", w.start, w.end), effectiveness::all_effectiveness(&corpus, w));
    }
    for &m in &a.measures {
        report.concurrent.push(effectiveness::concurrent_compare(&corpus, &cfg, m, seed)?);
        report.lagged.push(effectiveness::lagged_compare(&corpus, &cfg, m, seed)?);
    }
    out.write_json(report::EFFECTIVENESS_JSON, &report)?;
    Ok(Outcome::Done)
}

fn run_probe(a: &ProbeArgs, out: &mut OutputDir) -> Result<Outcome> {
    let corpus = a.input.load()?;
    let cfg = ProbeConfig {
        role: match a.role {
            RoleArg::Counselor => Role::Counselor,
            RoleArg::Texter => Role::Texter,
        },
        k_folds: a.folds,
        inner_folds: a.inner_folds,
        grid: ProbeGrid {
            c: a.c.clone(),
            max_features: a.max_features.clone(),
            max_df: a.max_df.clone(),
        },
        iterations: a.iterations,
    };
    let report = probe::run_probe(&corpus, a.sample_fraction, &cfg, a.common.seed)?;
    out.write_json(report::PROBE_REPORT_JSON, &report)?;
    Ok(Outcome::Done)
}
