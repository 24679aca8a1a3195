use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use trendforge::attribute_model::solver_registry;
use trendforge::fpgrowth::{absolute_min_support, miner_registry, AttributeSet, MinerParams};
use trendforge::noise::{confusion, load_noise_scores, metrics, Threshold, DEFAULT_THRESHOLD};
use trendforge::pipeline::{configure_threads_from_env, run, PipelineConfig, PipelineError};
use trendforge::synthgen::{generate, GeneratorSpec, SynthError};

const EXIT_DATA: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "trendforge", version, about = "Seasonal clothing-feature trend mining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with a ground-truth manifest.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full pipeline over an input directory.
    Run(Box<RunArgs>),
    /// Confusion matrix and accuracy/precision/recall/F1 of labeled noise scores.
    Metrics {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        noise_threshold: f64,
    },
    /// Mine frequent itemsets from a bare transaction file (one transaction
    /// per line, attributes separated by commas or whitespace).
    Mine {
        #[arg(long)]
        input: PathBuf,
        /// Relative support in (0,1]; ignored when --min-count is given.
        #[arg(long, default_value_t = 0.05)]
        min_support: f64,
        /// Absolute support count.
        #[arg(long)]
        min_count: Option<u64>,
        #[arg(long, default_value = "fpgrowth")]
        miner: String,
        #[arg(long)]
        max_itemset_size: Option<usize>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the registered miners and MAP solvers.
    Strategies,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct RunArgs {
    /// Directory holding taxonomy.json, items.csv, transactions.csv and attributes.csv.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Defaults to noise_scores.csv in the input directory when present.
    #[arg(long)]
    noise_scores: Option<PathBuf>,
    #[arg(long)]
    window_start: Option<NaiveDate>,
    #[arg(long)]
    window_end: Option<NaiveDate>,
    #[arg(long)]
    noise_threshold: Option<f64>,
    #[arg(long)]
    top_percent: Option<f64>,
    /// JSON object mapping month numbers "1".."12" to seasons.
    #[arg(long)]
    season_map: Option<PathBuf>,
    #[arg(long)]
    min_support: Option<f64>,
    #[arg(long)]
    attr_cutoff: Option<f64>,
    #[arg(long)]
    max_itemset_size: Option<usize>,
    #[arg(long)]
    miner: Option<String>,
    #[arg(long, value_enum)]
    crf_rescore: Option<Switch>,
    #[arg(long)]
    crf_sweeps: Option<usize>,
    #[arg(long)]
    map_solver: Option<String>,
    #[arg(long)]
    smoothing_alpha: Option<f64>,
    #[arg(long)]
    tau_classic: Option<f64>,
    #[arg(long)]
    tau_popular: Option<f64>,
    #[arg(long)]
    flat_band: Option<f64>,
}

impl RunArgs {
    fn into_config(self) -> PipelineConfig {
        let mut c = PipelineConfig::new(self.input, self.output);
        c.noise_scores = self.noise_scores;
        c.season_map = self.season_map;
        c.max_itemset_size = self.max_itemset_size;
        c.window_start = self.window_start.unwrap_or(c.window_start);
        c.window_end = self.window_end.unwrap_or(c.window_end);
        c.noise_threshold = self.noise_threshold.unwrap_or(c.noise_threshold);
        c.top_percent = self.top_percent.unwrap_or(c.top_percent);
        c.min_support = self.min_support.unwrap_or(c.min_support);
        c.attr_cutoff = self.attr_cutoff.unwrap_or(c.attr_cutoff);
        c.miner = self.miner.unwrap_or(c.miner);
        c.crf_rescore = self.crf_rescore.map_or(c.crf_rescore, |s| matches!(s, Switch::On));
        c.crf_sweeps = self.crf_sweeps.unwrap_or(c.crf_sweeps);
        c.map_solver = self.map_solver.unwrap_or(c.map_solver);
        c.smoothing_alpha = self.smoothing_alpha.unwrap_or(c.smoothing_alpha);
        c.tau_classic = self.tau_classic.unwrap_or(c.tau_classic);
        c.tau_popular = self.tau_popular.unwrap_or(c.tau_popular);
        c.flat_band = self.flat_band.unwrap_or(c.flat_band);
        c
    }
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.to_string(),
        }
    }

    fn data(message: impl ToString) -> Self {
        Failure {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    configure_threads_from_env().map_err(Failure::config)?;
    match command {
        Command::Gen { spec, out } => cmd_gen(&spec, &out),
        Command::Run(args) => cmd_run(*args),
        Command::Metrics {
            scores,
            noise_threshold,
        } => cmd_metrics(&scores, noise_threshold),
        Command::Mine {
            input,
            min_support,
            min_count,
            miner,
            max_itemset_size,
            output,
        } => cmd_mine(
            &input,
            min_support,
            min_count,
            &miner,
            max_itemset_size,
            output.as_deref(),
        ),
        Command::Strategies => {
            for (kind, list) in [
                ("miner", miner_registry().list()),
                ("map-solver", solver_registry().list()),
            ] {
                for (name, description) in list {
                    println!("{kind}\t{name}\t{description}");
                }
            }
            Ok(())
        }
    }
}

fn cmd_gen(spec_path: &Path, out: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(spec_path).map_err(|e| Failure::config(format!("{}: {e}", spec_path.display())))?;
    let spec = GeneratorSpec::from_json_str(&text).map_err(Failure::config)?;
    let truth = generate(&spec, out).map_err(|e| match e {
        SynthError::Io { .. } => Failure::data(e),
        other => Failure::config(other),
    })?;
    println!(
        "wrote {} items, {} transactions, {} noise items to {}",
        truth.n_items,
        truth.transaction_count,
        truth.noise_items.len(),
        out.display()
    );
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let config = args.into_config();
    let out = run(&config).map_err(|e| match e {
        PipelineError::Config(_) => Failure::config(e),
        other => Failure {
            code: other.exit_code() as u8,
            message: other.to_string(),
        },
    })?;
    let r = &out.report;
    let d = &r.diagnostics;
    if d.warnings + d.errors > 0 {
        eprintln!(
            "{} warnings, {} errors (see {})",
            d.warnings,
            d.errors,
            config.output_dir.join(trendforge::pipeline::DIAGNOSTICS_FILE).display()
        );
    }
    println!(
        "{} transactions counted in {} cells; {} items pruned as noise",
        r.popularity.transactions.included,
        r.popularity.cells.len(),
        r.noise.pruned
    );
    for (season, view) in &r.merged_features {
        println!(
            "{season}: classic/attractive [{}] popular [{}] unpopular [{}]",
            view.classic_attractive.join(", "),
            view.popular.join(", "),
            view.unpopular.join(", ")
        );
    }
    println!("reports written to {}", config.output_dir.display());
    Ok(())
}

fn cmd_metrics(path: &Path, threshold: f64) -> Result<(), Failure> {
    let threshold = Threshold::new(threshold).map_err(Failure::config)?;
    let (scores, diags, _) = load_noise_scores(path).map_err(Failure::data)?;
    for d in &diags {
        eprintln!("{d}");
    }
    let cm = confusion(&scores, threshold.value()).map_err(Failure::data)?;
    let m = metrics(&cm).map_err(Failure::data)?;
    let out = serde_json::json!({
        "threshold": threshold.value(),
        "confusion": cm,
        "metrics": m,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    Ok(())
}

fn read_bare_transactions(path: &Path) -> io::Result<Vec<AttributeSet>> {
    let file = io::BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for line in file.lines() {
        let line = line?;
        if line.trim_start().starts_with('#') {
            continue;
        }
        out.push(
            line.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect(),
        );
    }
    Ok(out)
}

fn cmd_mine(
    input: &Path,
    min_support: f64,
    min_count: Option<u64>,
    miner: &str,
    max_itemset_size: Option<usize>,
    output: Option<&Path>,
) -> Result<(), Failure> {
    if max_itemset_size == Some(0) {
        return Err(Failure::config("--max-itemset-size must be at least 1"));
    }
    let miner = miner_registry()
        .create(miner, &MinerParams { max_itemset_size })
        .map_err(Failure::config)?;
    let txs = read_bare_transactions(input).map_err(|e| Failure::data(format!("{}: {e}", input.display())))?;
    let min_count = match min_count {
        Some(0) => return Err(Failure::config("--min-count must be at least 1")),
        Some(c) => c,
        None => absolute_min_support(min_support, txs.len()).map_err(Failure::config)?,
    };
    let itemsets = miner.mine(&txs, min_count).map_err(Failure::data)?;
    let sink: Box<dyn Write> = match output {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| Failure::data(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = io::BufWriter::new(sink);
    let write = |w: &mut io::BufWriter<Box<dyn Write>>| -> io::Result<()> {
        writeln!(w, "items,support")?;
        for s in &itemsets {
            writeln!(w, "{},{}", s.joined(), s.support)?;
        }
        w.flush()
    };
    write(&mut w).map_err(Failure::data)
}
