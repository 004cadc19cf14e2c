//! `demoaudit`: mask vignettes, generate demographic variants, query a
//! predictor, and report how its answers move.
//!
//! Exit codes: 0 success, 1 validation refusal or usage/IO error, 2 predictor
//! or protocol failure (including runs that finished with failed requests).

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use demoaudit_core::dataset::{self, BuildError, BuildOptions, MaskedVignette};
use demoaudit_core::dimensions::{enumerate_profiles, validate_name_lists, DimensionConfig};
use demoaudit_core::gateway::{self, MockPredictor, PredictionStore, PredictorSpec, RunError, RunOptions};
use demoaudit_core::metrics::{self, MachineReport, NameDenominator};
use demoaudit_core::report;
use demoaudit_core::templates::{mask, GenderLexicon};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

#[derive(Parser)]
#[command(name = "demoaudit", version, about = "Demographic counterfactual audits for multiple-choice QA predictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mask gender-indicative tokens in raw vignettes (JSONL in, JSONL out).
    Mask(MaskArgs),
    /// Expand vignettes into the variant dataset.
    Generate(GenerateArgs),
    /// Query a predictor for every dataset instance.
    Run(RunArgs),
    /// Aggregate predictions into a machine report.
    Score(ScoreArgs),
    /// Render a machine report as markdown or CSV.
    Report(ReportArgs),
    /// Compare two machine reports made on the same dataset.
    Diff(DiffArgs),
    /// Print the per-vignette profile breakdown and name-list check.
    Profiles(ProfilesArgs),
    /// Serve a mock predictor over the line protocol on stdin/stdout.
    MockServer(MockServerArgs),
}

#[derive(Args)]
struct LexiconArg {
    /// Gender lexicon TSV (defaults to the built-in lexicon).
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Args)]
struct MaskArgs {
    /// Raw vignettes, one JSON object per line.
    #[arg(long)]
    vignettes: PathBuf,
    #[command(flatten)]
    lexicon: LexiconArg,
    /// Output JSONL of masked vignettes with their mask reports.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// Raw or masked vignettes (JSONL).
    #[arg(long)]
    vignettes: PathBuf,
    /// Dimension config TOML (defaults to the built-in standard config).
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    lexicon: LexiconArg,
    /// Dataset JSONL; the manifest is also written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Build even when templates still need review.
    #[arg(long)]
    force: bool,
    /// Skip the random-change baseline.
    #[arg(long)]
    no_random: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Dataset JSONL from `generate`.
    #[arg(long)]
    dataset: PathBuf,
    /// `mock:oracle`, `mock:constant:K`, `mock:lexical-hash`, an http(s) URL,
    /// or a shell command (optionally prefixed `cmd:`).
    #[arg(long)]
    predictor: PredictorSpec,
    /// Label for the predictor; keys the cache and the report.
    #[arg(long)]
    model_id: String,
    /// Prediction cache directory.
    #[arg(long, env = "DEMOAUDIT_CACHE_DIR", default_value = ".demoaudit-cache")]
    cache: PathBuf,
    /// Requests in flight.
    #[arg(short = 'j', long, default_value_t = 4)]
    jobs: usize,
    /// Per-request timeout.
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
    /// Extra attempts for a failed request.
    #[arg(long, default_value_t = 2)]
    max_retries: u32,
    /// Predictions JSONL.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Denominator {
    Pairs,
    Majority,
}

#[derive(Args)]
struct ScoreArgs {
    /// Dataset JSONL the predictions were made on.
    #[arg(long)]
    dataset: PathBuf,
    /// Predictions JSONL from `run`.
    #[arg(long)]
    predictions: PathBuf,
    /// Machine report JSON.
    #[arg(long)]
    out: PathBuf,
    /// How name attributes are counted.
    #[arg(long, value_enum, default_value = "pairs")]
    name_denominator: Denominator,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Md,
    Csv,
}

#[derive(Args)]
struct ReportArgs {
    /// Machine report JSON from `score`.
    #[arg(long)]
    machine: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiffArgs {
    /// Machine report of model A.
    a: PathBuf,
    /// Machine report of model B.
    b: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfilesArgs {
    /// Dimension config TOML (defaults to the built-in standard config).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also list every profile.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct MockServerArgs {
    /// `constant:K` or `lexical-hash`.
    kind: MockPredictor,
}

/// An error with its process exit code.
struct Exit {
    code: u8,
    error: anyhow::Error,
}

fn refuse(error: anyhow::Error) -> Exit {
    Exit { code: 1, error }
}

fn predictor_failure(error: anyhow::Error) -> Exit {
    Exit { code: 2, error }
}

impl<E: Into<anyhow::Error>> From<E> for Exit {
    fn from(e: E) -> Self {
        refuse(e.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Mask(a) => cmd_mask(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Run(a) => cmd_run(a),
        Command::Score(a) => cmd_score(a),
        Command::Report(a) => cmd_report(a),
        Command::Diff(a) => cmd_diff(a),
        Command::Profiles(a) => cmd_profiles(a),
        Command::MockServer(a) => cmd_mock_server(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

fn load_lexicon(arg: &LexiconArg) -> Result<GenderLexicon> {
    match &arg.lexicon {
        None => Ok(GenderLexicon::builtin()),
        Some(p) => {
            let src = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            GenderLexicon::parse(&src).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<DimensionConfig> {
    match path {
        None => Ok(DimensionConfig::standard()),
        Some(p) => DimensionConfig::load(p).with_context(|| format!("loading config {}", p.display())),
    }
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_report(path: &Path) -> Result<MachineReport> {
    let r: MachineReport =
        serde_json::from_reader(open_reader(path)?).with_context(|| format!("parsing report {}", path.display()))?;
    if r.format != metrics::REPORT_FORMAT {
        bail!("{}: unsupported report format {:?}", path.display(), r.format);
    }
    Ok(r)
}

fn cmd_mask(a: MaskArgs) -> Result<(), Exit> {
    let lexicon = load_lexicon(&a.lexicon)?;
    let vignettes = demoaudit_core::templates::vignette::read_jsonl(open_reader(&a.vignettes)?)?;
    let mut w = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    let mut review = 0;
    for v in vignettes {
        let m = mask(&v, &lexicon);
        for issue in &m.report.issues {
            eprintln!("{}: {issue}", v.id);
        }
        if m.report.needs_review {
            review += 1;
        }
        let line = MaskedVignette {
            vignette: v,
            template: m.template,
            report: Some(m.report),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    if review > 0 {
        eprintln!("{review} template(s) need review before `generate` (or pass --force)");
    }
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Exit> {
    let lexicon = load_lexicon(&a.lexicon)?;
    let cfg = load_config(a.config.as_deref())?;
    let items = dataset::read_inputs(open_reader(&a.vignettes)?, &lexicon)?;
    let opts = BuildOptions {
        force: a.force,
        skip_random: a.no_random,
    };
    let ds = match dataset::build(&items, &cfg, &opts) {
        Ok(ds) => ds,
        Err(e @ BuildError::Unreviewed(_)) => return Err(refuse(anyhow::Error::new(e).context("build refused"))),
        Err(e) => return Err(e.into()),
    };
    dataset::write_dataset(&ds, &a.out)?;
    for s in &ds.manifest.sets {
        eprintln!("{:<28} {:>4} per vignette  {:>6} instances", s.label, s.profiles_per_vignette, s.instances);
    }
    let rb = &ds.manifest.random_baseline;
    if rb.enabled {
        eprintln!("{:<28} {:>4} applicable     {:>6} inapplicable", dataset::RANDOM, rb.applicable, rb.inapplicable.len());
    }
    eprintln!("total {} variant instances over {} vignettes", ds.manifest.total_instances, ds.manifest.vignettes);
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<(), Exit> {
    let ds = dataset::read_dataset(&a.dataset)?;
    let store = PredictionStore::open(&a.cache, &a.model_id)?;
    let predictor = gateway::connect(&a.predictor, Duration::from_millis(a.timeout_ms))
        .map_err(|e| predictor_failure(anyhow::Error::new(e).context("starting predictor")))?;
    let opts = RunOptions {
        model_id: a.model_id.clone(),
        jobs: a.jobs.max(1),
        max_retries: a.max_retries,
    };
    let outcome = match gateway::run(&ds, predictor.as_ref(), &store, &opts) {
        Ok(o) => o,
        Err(e @ (RunError::Health(_) | RunError::Protocol(_))) => return Err(predictor_failure(e.into())),
        Err(e) => return Err(e.into()),
    };
    drop(predictor);
    gateway::write_predictions(&outcome.set, &a.out)?;
    let s = outcome.stats;
    eprintln!(
        "instances={} cache_hits={} round_trips={} failures={}",
        s.instances, s.cache_hits, s.round_trips, s.failures
    );
    if s.failures > 0 {
        return Err(predictor_failure(anyhow::anyhow!(
            "{} request(s) failed; see {}",
            s.failures,
            a.out.display()
        )));
    }
    Ok(())
}

fn cmd_score(a: ScoreArgs) -> Result<(), Exit> {
    let ds = dataset::read_dataset(&a.dataset)?;
    let preds = gateway::read_predictions(&a.predictions)?;
    let denom = match a.name_denominator {
        Denominator::Pairs => NameDenominator::Pairs,
        Denominator::Majority => NameDenominator::Majority,
    };
    let report = metrics::score(&ds, &preds, denom)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_output(Some(&a.out), &text)?;
    if !preds.failures.is_empty() {
        eprintln!("{} failed prediction(s); affected cells are marked incomplete", preds.failures.len());
    }
    Ok(())
}

fn render(reports: &[&MachineReport], format: Format) -> String {
    match format {
        Format::Md => report::to_markdown(reports[0]),
        Format::Csv => report::to_csv(reports),
    }
}

fn cmd_report(a: ReportArgs) -> Result<(), Exit> {
    let r = read_report(&a.machine)?;
    write_output(a.out.as_deref(), &render(&[&r], a.format))?;
    Ok(())
}

fn cmd_diff(a: DiffArgs) -> Result<(), Exit> {
    let ra = read_report(&a.a)?;
    let rb = read_report(&a.b)?;
    let d = metrics::diff_models(&ra, &rb)?;
    let text = match a.format {
        Format::Md => report::diff_markdown(&d),
        Format::Csv => report::to_csv(&[&d.a, &d.b]),
    };
    write_output(a.out.as_deref(), &text)?;
    Ok(())
}

fn cmd_profiles(a: ProfilesArgs) -> Result<(), Exit> {
    let cfg = load_config(a.config.as_deref())?;
    let e = enumerate_profiles(&cfg)?;
    let mut out = String::new();
    for (label, n) in e.breakdown() {
        out.push_str(&format!("{label:<28} {n:>4}\n"));
    }
    out.push_str(&format!("{:<28} {:>4}\n", "total", e.entries.len()));
    out.push_str(&format!("names: {}\n", validate_name_lists(&cfg)));
    if a.list {
        for entry in &e.entries {
            out.push_str(&format!("{}\t{}\t{}\n", entry.set_label, entry.attribute, entry.profile));
        }
    }
    write_output(None, &out)?;
    Ok(())
}

fn cmd_mock_server(a: MockServerArgs) -> Result<(), Exit> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    gateway::mock::serve(a.kind, stdin.lock(), stdout.lock())?;
    Ok(())
}
