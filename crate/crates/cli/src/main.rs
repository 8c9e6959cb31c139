//! `dtou`: staged command-line pipeline for finding price-responsive
//! customers on dynamic time-of-use tariffs.

mod plot;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use dtou_core::billing::BillingPath;
use dtou_core::io as dio;
use dtou_core::metrics::CustomerMetrics;
use dtou_core::mixture::{FitMethod, DEFAULT_BINS};
use dtou_core::model::{Group, ValidationReport};
use dtou_core::permutation::{SamplerConfig, SeedingMode, DEFAULT_SAMPLES};
use dtou_core::pipeline::{self, AnalysisConfig, Dataset, DEFAULT_CONFIDENCE_LEVEL};
use dtou_core::synth::{generate_scenario, ScenarioFile};
use dtou_core::Error;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "dtou",
    version,
    about = "Baseline-free responsiveness analysis for dynamic time-of-use tariffs"
)]
struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset with ground-truth labels.
    Simulate(SimulateArgs),
    /// Check ingestion files and report per-customer problems.
    Validate(InputArgs),
    /// Compute per-customer bills, phi and z (the expensive stage).
    Metrics(MetricsArgs),
    /// Rank, bias-correct, classify and fit the mixture from a metrics file.
    Analyze(AnalyzeArgs),
    /// Summarize analysis outputs, optionally scoring them against labels.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Flat TOML scenario file; built-in defaults when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    num_treatment: Option<usize>,
    #[arg(long)]
    num_control: Option<usize>,
    #[arg(long)]
    num_days: Option<usize>,
    #[arg(long)]
    slots_per_day: Option<usize>,
    #[arg(long)]
    response_strength: Option<f64>,
    #[arg(long)]
    signal_bias_strength: Option<f64>,
    /// Output directory for consumption.csv, prices.csv, groups.csv, labels.csv.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long)]
    consumption: PathBuf,
    #[arg(long)]
    prices: PathBuf,
    #[arg(long)]
    groups: PathBuf,
    #[arg(long, default_value_t = 48)]
    slots_per_day: usize,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// independent | shared-pool
    #[arg(long, default_value = "independent")]
    seeding_mode: SeedingMode,
    /// day-matrix | direct
    #[arg(long, default_value = "day-matrix")]
    billing_path: BillingPath,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Drop customers that fail validation instead of stopping.
    #[arg(long)]
    skip_invalid: bool,
    /// Output directory; metrics.csv is written there.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE_LEVEL)]
    confidence_level: f64,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// binned-likelihood | least-squares
    #[arg(long, default_value = "binned-likelihood")]
    fit_method: FitMethod,
    /// Also render SVG histograms.
    #[arg(long)]
    plots: bool,
    /// Leave generation timestamps out of plot files.
    #[arg(long)]
    no_timestamps: bool,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory written by `analyze`.
    #[arg(long)]
    analysis: PathBuf,
    /// Ground-truth labels from `simulate`.
    #[arg(long)]
    labels: Option<PathBuf>,
}

/// A failure with its exit code and JSON payload for stderr.
struct Failure {
    exit: u8,
    body: serde_json::Value,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::NoUsableCustomers
            | Error::EmptyControl
            | Error::TooFewPairs { .. }
            | Error::ConstantSequence
            | Error::EndpointSingularity { .. }
            | Error::TooFewScores { .. }
            | Error::DegenerateScores => 1,
            _ => 2,
        };
        Failure { exit, body: json!({ "error": e.code(), "message": e.to_string() }) }
    }
}

fn validation_failure(report: &ValidationReport) -> Failure {
    let failures: Vec<_> = report
        .failures()
        .map(|o| json!({ "customer_id": o.customer_id, "reason": o.failure.map(|f| f.as_str()) }))
        .collect();
    Failure {
        exit: 2,
        body: json!({
            "error": "validation_failed",
            "message": format!("{} customer(s) failed validation", report.failed),
            "failures": failures,
        }),
    }
}

struct Progress {
    quiet: bool,
}

impl Progress {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())).into())
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<fs::File>) -> dtou_core::Result<()>,
) -> Result<(), Failure> {
    let file = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn simulate(args: SimulateArgs, progress: &Progress) -> Result<(), Failure> {
    let mut file = match &args.scenario {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| match e.kind() {
                io::ErrorKind::NotFound => Error::MissingInput(path.display().to_string()),
                _ => Error::Io(e.to_string()),
            })?;
            ScenarioFile::parse(&text)?
        }
        None => ScenarioFile::default(),
    };
    file.num_treatment = args.num_treatment.or(file.num_treatment);
    file.num_control = args.num_control.or(file.num_control);
    file.num_days = args.num_days.or(file.num_days);
    file.slots_per_day = args.slots_per_day.or(file.slots_per_day);
    file.response_strength = args.response_strength.or(file.response_strength);
    file.signal_bias_strength = args.signal_bias_strength.or(file.signal_bias_strength);
    let config = file.into_config()?;
    let scenario = generate_scenario(&config, args.seed)?;

    create_dir(&args.out)?;
    write_file(&args.out.join("consumption.csv"), |w| dio::write_consumption(w, &scenario.series))?;
    write_file(&args.out.join("prices.csv"), |w| dio::write_prices(w, &scenario.signal))?;
    write_file(&args.out.join("groups.csv"), |w| dio::write_groups(w, &scenario.series))?;
    write_file(&args.out.join("labels.csv"), |w| dio::write_labels(w, &scenario.labels))?;
    progress.say(format!("wrote synthetic dataset to {}", args.out.display()));
    println!(
        "{}",
        json!({
            "treatment": config.num_treatment,
            "control": config.num_control,
            "responsive": scenario.labels.iter().filter(|l| l.responsive).count(),
            "slots_per_day": config.grid.slots_per_day(),
            "num_days": config.grid.num_days(),
        })
    );
    Ok(())
}

fn load(input: &InputArgs) -> Result<Dataset, Failure> {
    Ok(pipeline::load_dataset(&input.consumption, &input.prices, &input.groups, input.slots_per_day)?)
}

fn validate(args: InputArgs) -> Result<(), Failure> {
    let data = load(&args)?;
    println!(
        "{}",
        json!({
            "treatment": data.report.treatment,
            "control": data.report.control,
            "failed": data.report.failed,
            "slots_per_day": data.signal.grid().slots_per_day(),
            "num_days": data.signal.grid().num_days(),
        })
    );
    if data.report.all_passed() {
        Ok(())
    } else {
        Err(validation_failure(&data.report))
    }
}

fn metrics(args: MetricsArgs, progress: &Progress) -> Result<(), Failure> {
    let data = load(&args.input)?;
    if !data.report.all_passed() {
        if !args.skip_invalid {
            return Err(validation_failure(&data.report));
        }
        progress.say(format!("skipping {} customer(s) that failed validation", data.report.failed));
    }
    if data.series.is_empty() {
        return Err(Error::EmptyInput.into());
    }
    let config = SamplerConfig {
        seed: args.seed,
        samples: args.samples,
        seeding_mode: args.seeding_mode,
        billing_path: args.billing_path,
    };
    let total = data.series.len();
    let step = (total / 20).max(1);
    let started = Instant::now();
    let quiet = progress.quiet;
    let report = move |done: usize, total: usize| {
        if !quiet && (done.is_multiple_of(step) || done == total) {
            eprintln!("metrics: {done}/{total} customers ({:.1?})", started.elapsed());
        }
    };
    let metrics =
        pipeline::compute_metrics_with_progress(&data.series, &data.signal, &config, args.threads, &report)?;

    create_dir(&args.out)?;
    write_file(&args.out.join("metrics.csv"), |w| dio::write_metrics(w, &metrics))?;
    let count = |g: Group| metrics.iter().filter(|m| m.group == g).count();
    println!(
        "{}",
        json!({
            "treatment": count(Group::Treatment),
            "control": count(Group::Control),
            "degenerate": metrics.iter().filter(|m| m.degenerate).count(),
            "skipped": data.report.failed,
            "samples": args.samples,
            "seed": args.seed,
        })
    );
    Ok(())
}

fn analyze(args: AnalyzeArgs, progress: &Progress) -> Result<(), Failure> {
    let metrics: Vec<CustomerMetrics> = dio::read_metrics(dio::open_input(&args.metrics)?)?;
    let config = AnalysisConfig {
        confidence_level: args.confidence_level,
        bins: args.bins,
        fit_method: args.fit_method,
    };
    let analysis = pipeline::analyze(&metrics, &config)?;
    for w in &analysis.warnings {
        eprintln!("warning: {w}");
    }
    create_dir(&args.out)?;
    for (name, bytes) in pipeline::render_analysis(&analysis)? {
        fs::write(args.out.join(name), bytes).map_err(Error::from)?;
    }
    if args.plots {
        let stamp = (!args.no_timestamps).then(plot::unix_timestamp);
        for (name, svg) in plot::render(&analysis, stamp) {
            fs::write(args.out.join(name), svg).map_err(Error::from)?;
        }
    }
    progress.say(format!("wrote analysis to {}", args.out.display()));
    println!(
        "{}",
        json!({
            "ranked": analysis.ranks.entries.len(),
            "excluded": analysis.excluded.len(),
            "confidence_level": args.confidence_level,
            "responsive_at_level": analysis.summary.as_ref().map(|s| s.responsive.len()),
            "fraction_at_level": analysis.summary.as_ref().map(|s| s.fraction),
            "mixture": analysis.mixture.as_ref().map(dio::MixtureReport::from),
            "warnings": analysis.warnings,
        })
    );
    Ok(())
}

fn optional<T>(
    path: &Path,
    read: impl FnOnce(io::BufReader<fs::File>) -> dtou_core::Result<T>,
) -> Result<Option<T>, Failure> {
    if path.exists() {
        Ok(Some(read(dio::open_input(path)?)?))
    } else {
        Ok(None)
    }
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let dir = &args.analysis;
    let ranks = dio::read_ranks(dio::open_input(&dir.join("ranks.csv"))?)?;
    let classification = optional(&dir.join("classification.csv"), dio::read_classification)?;
    let mixture = optional(&dir.join("mixture.json"), dio::read_mixture_report)?;
    let flagged = classification.as_ref().map(|rows| rows.iter().filter(|r| r.responsive_at_level).count());
    let mut out = json!({
        "ranked": ranks.len(),
        "responsive_at_level": flagged,
        "mixture": mixture,
    });
    if let Some(path) = &args.labels {
        let labels = dio::read_labels(dio::open_input(path)?)?;
        let eval = pipeline::evaluate(&ranks, classification.as_deref(), mixture.as_ref(), &labels)?;
        out["evaluation"] = serde_json::to_value(eval).map_err(|e| Error::Io(e.to_string()))?;
    }
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| Error::Io(e.to_string()))?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let progress = Progress { quiet: cli.quiet };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, &progress),
        Command::Validate(a) => validate(a),
        Command::Metrics(a) => metrics(a, &progress),
        Command::Analyze(a) => analyze(a, &progress),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.body);
            ExitCode::from(f.exit)
        }
    }
}
