//! Batch front-end for the biclustering library: generates simulated
//! datasets, runs the pipeline on CSV matrices, scores stored results
//! against truth or labels, exports plot data, and times runs. All
//! indices in files and messages are 1-based; library indices are
//! 0-based and converted at the boundary.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use reldenclu::datagen;
use reldenclu::evaluate;
use reldenclu::{Bicluster, DataMatrix, ParameterSet, RunReport};

#[derive(Parser)]
#[command(name = "reldenclu", version, about = "Relative-density biclustering of numeric tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on a CSV matrix and write the results.
    Run(RunArgs),
    /// Write a simulated dataset together with its planted biclusters.
    Generate(GenerateArgs),
    /// Score a biclusters file against truth, class labels, or an indicator.
    Evaluate(EvaluateArgs),
    /// Export one feature pair as x, y, membership-flag rows for plotting.
    PlotData(PlotDataArgs),
    /// Time pipeline runs and print seconds.
    Bench(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Numeric CSV matrix; a non-numeric first row is taken as a header.
    #[arg(long)]
    input: PathBuf,
    /// TOML file of parameter overrides; absent keys use the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for biclusters.json, membership.csv, manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// Dataset family tag, for example base, overlap, or large.
    #[arg(long)]
    family: String,
    /// Generation seed; equal seeds reproduce identical files.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for data.csv, truth.json, recipe.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvaluateMode {
    /// Best membership accuracy against each planted bicluster.
    Truth,
    /// Two-class agreement with one label per row.
    Classes,
    /// Best match against the rows above an indicator percentile.
    Percentile,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Biclusters file written by the run command.
    #[arg(long)]
    biclusters: PathBuf,
    #[arg(long, value_enum)]
    mode: EvaluateMode,
    /// Truth file written by the generate command (mode truth).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// File with one class label per row, no header, exactly two
    /// distinct values; the lexicographically larger one is the
    /// positive class (mode classes).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Single-column numeric CSV, header optional (mode percentile).
    #[arg(long)]
    indicator: Option<PathBuf>,
    /// Percentile in (0, 100]; rows strictly above it are members.
    #[arg(long, default_value_t = 90.0)]
    percentile: f64,
}

#[derive(Args)]
struct PlotDataArgs {
    /// CSV matrix the biclusters were computed from.
    #[arg(long)]
    input: PathBuf,
    /// Biclusters file written by the run command.
    #[arg(long)]
    biclusters: PathBuf,
    /// 1-based feature pair to export, written as I,J.
    #[arg(long, value_parser = parse_pair)]
    pair: (usize, usize),
    /// 1-based bicluster to flag; default flags membership in any.
    #[arg(long)]
    bicluster: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Numeric CSV matrix to time the pipeline on.
    #[arg(long)]
    input: PathBuf,
    /// TOML file of parameter overrides; absent keys use the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of timed runs.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
}

fn parse_pair(text: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = text.split(',').collect();
    let [i, j] = parts.as_slice() else {
        return Err(format!("expected two comma-separated indices, got '{text}'"));
    };
    let parse = |p: &str| {
        p.trim()
            .parse::<usize>()
            .ok()
            .filter(|&v| v >= 1)
            .ok_or_else(|| format!("'{p}' is not a 1-based index"))
    };
    Ok((parse(i)?, parse(j)?))
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch() -> Result<()> {
    configure_threads()?;
    match Cli::parse().command {
        Command::Run(args) => cmd_run(&args),
        Command::Generate(args) => cmd_generate(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::PlotData(args) => cmd_plot_data(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

/// Applies `RELDENCLU_THREADS` to the global worker pool; 0 or unset
/// leaves the automatic thread count.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("RELDENCLU_THREADS") else {
        return Ok(());
    };
    let count: usize = raw
        .parse()
        .map_err(|_| anyhow!("RELDENCLU_THREADS must be a number, got '{raw}'"))?;
    if count == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(count)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(())
}

/// On-disk bicluster with 1-based indices.
#[derive(Serialize, Deserialize)]
struct BiclusterEntry {
    observations: Vec<usize>,
    features: Vec<usize>,
}

impl BiclusterEntry {
    fn from_internal(b: &Bicluster) -> Self {
        BiclusterEntry {
            observations: b.observations.iter().map(|r| r + 1).collect(),
            features: b.features.iter().map(|c| c + 1).collect(),
        }
    }

    fn to_internal(&self, n_rows: usize, n_cols: usize) -> Result<Bicluster> {
        let shift = |indices: &[usize], limit: usize, what: &str| -> Result<Vec<usize>> {
            indices
                .iter()
                .map(|&i| {
                    if (1..=limit).contains(&i) {
                        Ok(i - 1)
                    } else {
                        bail!("{what} index {i} outside 1..={limit}")
                    }
                })
                .collect()
        };
        Ok(Bicluster::new(
            shift(&self.observations, n_rows, "observation")?,
            shift(&self.features, n_cols, "feature")?,
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct BiclusterFile {
    n_rows: usize,
    n_cols: usize,
    density_path: String,
    parameters: ParameterSet,
    biclusters: Vec<BiclusterEntry>,
}

#[derive(Serialize, Deserialize)]
struct TruthFile {
    family: String,
    seed: u64,
    n_rows: usize,
    n_cols: usize,
    biclusters: Vec<BiclusterEntry>,
}

#[derive(Serialize)]
struct RunManifest {
    input: String,
    config: Option<String>,
    threads: String,
    n_rows: usize,
    n_cols: usize,
    parameters: ParameterSet,
    density_path: String,
    constant_columns: Vec<usize>,
    n_seeds: usize,
    n_biclusters: usize,
    elapsed_seconds: f64,
}

/// Reads a numeric CSV matrix, taking a non-numeric first row as a
/// header. Row numbers in errors count file lines, so they include any
/// header; columns are 1-based.
fn read_matrix(path: &Path) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let line = line + 1;
        let record = record.with_context(|| format!("reading {}", path.display()))?;
        let mut values = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                Ok(_) => bail!(
                    "non-finite value at row {line}, column {} of {}",
                    col + 1,
                    path.display()
                ),
                Err(_) if line == 1 => {
                    values.clear();
                    break;
                }
                Err(_) => bail!(
                    "'{field}' at row {line}, column {} of {} is not a number",
                    col + 1,
                    path.display()
                ),
            }
        }
        if !values.is_empty() {
            rows.push(values);
        }
    }
    DataMatrix::from_rows(rows).with_context(|| format!("validating {}", path.display()))
}

/// Reads a single-column numeric file with an optional header.
fn read_indicator(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut values = Vec::new();
    for (line, raw) in text.lines().enumerate() {
        let field = raw.trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => bail!("non-finite value at row {} of {}", line + 1, path.display()),
            Err(_) if line == 0 => continue,
            Err(_) => bail!(
                "'{field}' at row {} of {} is not a number",
                line + 1,
                path.display()
            ),
        }
    }
    Ok(values)
}

/// Reads one class label per line and encodes the lexicographically
/// larger of the two distinct values as the positive class.
fn read_labels(path: &Path) -> Result<(Vec<bool>, String, String)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let labels: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let distinct: BTreeSet<&str> = labels.iter().copied().collect();
    let [negative, positive] = distinct.iter().copied().collect::<Vec<_>>()[..] else {
        bail!(
            "{} must hold exactly two distinct labels, found {} (is the first line a header?)",
            path.display(),
            distinct.len()
        );
    };
    let membership = labels.iter().map(|&l| l == positive).collect();
    Ok((membership, negative.to_string(), positive.to_string()))
}

fn read_parameters(config: Option<&PathBuf>) -> Result<ParameterSet> {
    let Some(path) = config else {
        return Ok(ParameterSet::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("opening {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_bicluster_file(path: &Path) -> Result<(BiclusterFile, Vec<Bicluster>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let file: BiclusterFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let internal = file
        .biclusters
        .iter()
        .map(|e| e.to_internal(file.n_rows, file.n_cols))
        .collect::<Result<Vec<_>>>()
        .with_context(|| format!("validating {}", path.display()))?;
    Ok((file, internal))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let params = read_parameters(args.config.as_ref())?;
    let matrix = read_matrix(&args.input)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let start = Instant::now();
    let report = reldenclu::run_reldenclu_detailed(&matrix, &params)?;
    let elapsed = start.elapsed().as_secs_f64();
    warn_constant_columns(&report);

    let file = BiclusterFile {
        n_rows: matrix.n_rows(),
        n_cols: matrix.n_cols(),
        density_path: report.density_path.as_str().to_string(),
        parameters: params.clone(),
        biclusters: report.biclusters.iter().map(BiclusterEntry::from_internal).collect(),
    };
    write_json(&args.out.join("biclusters.json"), &file)?;
    write_membership(&args.out.join("membership.csv"), &report.biclusters, matrix.n_rows())?;
    let manifest = RunManifest {
        input: args.input.display().to_string(),
        config: args.config.as_ref().map(|p| p.display().to_string()),
        threads: std::env::var("RELDENCLU_THREADS").unwrap_or_else(|_| "auto".to_string()),
        n_rows: matrix.n_rows(),
        n_cols: matrix.n_cols(),
        parameters: params,
        density_path: report.density_path.as_str().to_string(),
        constant_columns: report.constant_columns.iter().map(|c| c + 1).collect(),
        n_seeds: report.n_seeds,
        n_biclusters: report.biclusters.len(),
        elapsed_seconds: elapsed,
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;

    println!(
        "wrote {} biclusters to {} ({} density path, {elapsed:.3} s)",
        report.biclusters.len(),
        args.out.display(),
        report.density_path.as_str()
    );
    Ok(())
}

fn warn_constant_columns(report: &RunReport) {
    for &c in &report.constant_columns {
        eprintln!(
            "warning: column {} is constant and was excluded from pair analysis",
            c + 1
        );
    }
}

/// Writes a row,bicluster_1,...,bicluster_K table of 0/1 flags.
fn write_membership(path: &Path, list: &[Bicluster], n_rows: usize) -> Result<()> {
    let flags = evaluate::export_membership_features(list, n_rows)?;
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["row".to_string()];
    header.extend((1..=list.len()).map(|k| format!("bicluster_{k}")));
    writer.write_record(&header)?;
    for (r, row) in flags.iter().enumerate() {
        let mut record = vec![(r + 1).to_string()];
        record.extend(row.iter().map(u8::to_string));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let dataset = datagen::generate_named(&args.family, args.seed)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let data_path = args.out.join("data.csv");
    let mut writer = csv::Writer::from_path(&data_path)
        .with_context(|| format!("writing {}", data_path.display()))?;
    let header: Vec<String> = (1..=dataset.matrix.n_cols()).map(|c| format!("f{c}")).collect();
    writer.write_record(&header)?;
    for r in 0..dataset.matrix.n_rows() {
        let record: Vec<String> = dataset.matrix.row(r).iter().map(|v| v.to_string()).collect();
        writer.write_record(&record)?;
    }
    writer.flush()?;

    let truth = TruthFile {
        family: dataset.recipe.family.clone(),
        seed: dataset.recipe.seed,
        n_rows: dataset.matrix.n_rows(),
        n_cols: dataset.matrix.n_cols(),
        biclusters: dataset.truth.iter().map(BiclusterEntry::from_internal).collect(),
    };
    write_json(&args.out.join("truth.json"), &truth)?;
    write_json(&args.out.join("recipe.json"), &dataset.recipe)?;

    println!(
        "wrote {} {}x{} with {} planted biclusters to {}",
        dataset.recipe.family,
        dataset.matrix.n_rows(),
        dataset.matrix.n_cols(),
        dataset.truth.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let (file, found) = read_bicluster_file(&args.biclusters)?;
    match args.mode {
        EvaluateMode::Truth => {
            let path = args
                .truth
                .as_ref()
                .ok_or_else(|| anyhow!("mode truth needs --truth"))?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("opening {}", path.display()))?;
            let truth: TruthFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            if (truth.n_rows, truth.n_cols) != (file.n_rows, file.n_cols) {
                bail!(
                    "dimension mismatch: biclusters are {}x{}, truth is {}x{}",
                    file.n_rows,
                    file.n_cols,
                    truth.n_rows,
                    truth.n_cols
                );
            }
            let mut scores = Vec::new();
            for (t, entry) in truth.biclusters.iter().enumerate() {
                let planted = entry.to_internal(truth.n_rows, truth.n_cols)?;
                let best = evaluate::best_match(&found, &planted, file.n_rows, file.n_cols)?;
                println!(
                    "truth {}: accuracy {:.4} (bicluster {} of {})",
                    t + 1,
                    best.accuracy,
                    best.index + 1,
                    found.len()
                );
                scores.push(best.accuracy);
            }
            if scores.len() > 1 {
                let (mean, _) = evaluate::mean_and_deviation(&scores);
                println!("mean accuracy: {mean:.4}");
            }
        }
        EvaluateMode::Classes => {
            let path = args
                .labels
                .as_ref()
                .ok_or_else(|| anyhow!("mode classes needs --labels"))?;
            let (labels, negative, positive) = read_labels(path)?;
            if labels.len() != file.n_rows {
                bail!(
                    "dimension mismatch: biclusters have {} rows, labels have {}",
                    file.n_rows,
                    labels.len()
                );
            }
            let mut best: Option<(usize, evaluate::TwoClassReport)> = None;
            for (k, b) in found.iter().enumerate() {
                let mut membership = vec![false; file.n_rows];
                for &r in &b.observations {
                    membership[r] = true;
                }
                let report = evaluate::precision_recall_gscore(&membership, &labels)?;
                println!("bicluster {}: match accuracy {:.4}", k + 1, report.match_accuracy);
                if best.is_none_or(|(_, b)| report.match_accuracy > b.match_accuracy) {
                    best = Some((k, report));
                }
            }
            let (k, report) = best.ok_or_else(|| anyhow!("the biclusters file is empty"))?;
            println!("best: bicluster {} (match accuracy {:.4})", k + 1, report.match_accuracy);
            print_class_metrics(&positive, report.in_class);
            print_class_metrics(&negative, report.out_class);
        }
        EvaluateMode::Percentile => {
            let path = args
                .indicator
                .as_ref()
                .ok_or_else(|| anyhow!("mode percentile needs --indicator"))?;
            let indicator = read_indicator(path)?;
            if indicator.len() != file.n_rows {
                bail!(
                    "dimension mismatch: biclusters have {} rows, indicator has {}",
                    file.n_rows,
                    indicator.len()
                );
            }
            let best = evaluate::percentile_match(&found, &indicator, args.percentile)?;
            println!(
                "best match above percentile {}: bicluster {} (accuracy {:.4}, threshold {})",
                args.percentile,
                best.index + 1,
                best.accuracy,
                best.threshold
            );
            let features: Vec<String> = found[best.index]
                .features
                .iter()
                .map(|c| (c + 1).to_string())
                .collect();
            println!("features: {}", features.join(", "));
        }
    }
    Ok(())
}

fn print_class_metrics(label: &str, metrics: evaluate::ClassMetrics) {
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!(
        "class '{label}': precision {}, recall {}, g-score {}",
        show(metrics.precision),
        show(metrics.recall),
        show(metrics.gscore)
    );
}

fn cmd_plot_data(args: &PlotDataArgs) -> Result<()> {
    let matrix = read_matrix(&args.input)?;
    let (file, found) = read_bicluster_file(&args.biclusters)?;
    if file.n_rows != matrix.n_rows() || file.n_cols != matrix.n_cols() {
        bail!(
            "dimension mismatch: input is {}x{}, biclusters are {}x{}",
            matrix.n_rows(),
            matrix.n_cols(),
            file.n_rows,
            file.n_cols
        );
    }
    let (i, j) = args.pair;
    if i > matrix.n_cols() || j > matrix.n_cols() {
        bail!("pair {i},{j} outside the {} available features", matrix.n_cols());
    }

    let mut flags = vec![false; matrix.n_rows()];
    let selected: &[Bicluster] = match args.bicluster {
        Some(k) => {
            if !(1..=found.len()).contains(&k) {
                bail!("bicluster {k} outside 1..={}", found.len());
            }
            std::slice::from_ref(&found[k - 1])
        }
        None => &found,
    };
    for b in selected {
        for &r in &b.observations {
            flags[r] = true;
        }
    }

    let mut writer = csv::Writer::from_path(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    writer.write_record(["x", "y", "in_bicluster"])?;
    let x = matrix.column(i - 1);
    let y = matrix.column(j - 1);
    for r in 0..matrix.n_rows() {
        writer.write_record([
            x[r].to_string(),
            y[r].to_string(),
            u8::from(flags[r]).to_string(),
        ])?;
    }
    writer.flush()?;

    println!(
        "wrote {} points for features {i},{j} ({} flagged) to {}",
        matrix.n_rows(),
        flags.iter().filter(|&&f| f).count(),
        args.out.display()
    );
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    if args.repeat == 0 {
        bail!("--repeat must be at least 1");
    }
    let params = read_parameters(args.config.as_ref())?;
    let matrix = read_matrix(&args.input)?;
    let mut seconds = Vec::with_capacity(args.repeat);
    let mut last = None;
    for run in 1..=args.repeat {
        let start = Instant::now();
        let report = reldenclu::run_reldenclu_detailed(&matrix, &params)?;
        let elapsed = start.elapsed().as_secs_f64();
        println!("run {run}: {elapsed:.3} s");
        seconds.push(elapsed);
        last = Some(report);
    }
    let report = last.expect("at least one run");
    let (mean, _) = evaluate::mean_and_deviation(&seconds);
    println!(
        "mean: {mean:.3} s over {} runs ({} density path, {} biclusters)",
        args.repeat,
        report.density_path.as_str(),
        report.biclusters.len()
    );
    Ok(())
}
