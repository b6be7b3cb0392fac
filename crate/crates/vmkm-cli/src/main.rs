//! Command-line surface: cluster one dataset, compare algorithms, run the
//! initialization-sensitivity study, or segment a grayscale image.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 data, 5 internal.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vmkm::dataio::{
    read_csv_dataset, read_pgm, write_comparison_csv, write_labels_csv, write_report_json,
    write_segmented_pgm, write_sensitivity_series_csv, write_sensitivity_summary_csv, CsvOptions,
    LabelMap,
};
use vmkm::{
    build_comparison_table, init_centers_random, run_algorithm, run_sensitivity, Algorithm,
    Dataset, Error, GammaChoice, RunConfig, RunReport,
};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DATA: u8 = 4;
const EXIT_INTERNAL: u8 = 5;

#[derive(Parser)]
#[command(
    name = "vmkm",
    version,
    about = "Variance-based moving k-means clustering and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on a dataset and write its report and labels.
    Cluster(ClusterArgs),
    /// Run several algorithms from shared centers and tabulate mean MSE.
    Compare(CompareArgs),
    /// Paired initialization-sensitivity trials across algorithms.
    Sensitivity(SensitivityArgs),
    /// Segment a grayscale PGM image into K intensity clusters.
    Segment(SegmentArgs),
}

#[derive(Args)]
struct CommonOpts {
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    output_dir: PathBuf,

    /// Seed for every random choice in the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Initial transfer threshold, in the open interval (0, 1/3).
    #[arg(long, default_value_t = 0.30)]
    alpha0: f64,

    /// Iteration cap for every algorithm's main loop.
    #[arg(long = "max-iter", default_value_t = 100, value_name = "N")]
    max_iter: usize,

    /// RBF kernel width for kernel k-means: a number or "auto".
    #[arg(long, default_value = "auto")]
    gamma: String,

    /// Apply the main-loop threshold decay to alpha_a exactly as printed.
    #[arg(long = "strict-eq10", default_value_t = false)]
    strict_eq10: bool,

    /// Treat the first CSV row as a header.
    #[arg(long = "has-header", default_value_t = false)]
    has_header: bool,
}

#[derive(Args)]
struct ClusterArgs {
    /// Input dataset: .pgm for images, anything else is numeric CSV.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// Algorithm to run.
    #[arg(long, default_value = "vmkm")]
    algo: String,

    /// Number of clusters.
    #[arg(long)]
    k: usize,

    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct CompareArgs {
    /// Input dataset(s); the table gains one row per dataset.
    #[arg(long, value_name = "FILE", required = true, num_args = 1..)]
    input: Vec<PathBuf>,

    /// Comma-separated algorithms to compare.
    #[arg(long, default_value = "vmkm,km,mkm,fcm,kernel")]
    algos: String,

    /// Number of clusters.
    #[arg(long)]
    k: usize,

    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct SensitivityArgs {
    /// Input dataset.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// Comma-separated algorithms to compare.
    #[arg(long, default_value = "vmkm,km")]
    algos: String,

    /// Number of clusters.
    #[arg(long)]
    k: usize,

    /// Number of paired trials; trial t uses seed `seed + t`.
    #[arg(long, default_value_t = 20)]
    trials: usize,

    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct SegmentArgs {
    /// Input grayscale image (PGM, P2 or P5).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// Algorithm to segment with.
    #[arg(long, default_value = "vmkm")]
    algo: String,

    /// Number of intensity clusters.
    #[arg(long, default_value_t = 5)]
    k: usize,

    #[command(flatten)]
    common: CommonOpts,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cluster(args) => cmd_cluster(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sensitivity(args) => cmd_sensitivity(args),
        Command::Segment(args) => cmd_segment(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match &err {
            Error::Io { .. } => EXIT_IO,
            Error::InvalidParams(_) => EXIT_USAGE,
            Error::Json { .. } => EXIT_INTERNAL,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

/// Validates the shared flags and assembles the per-algorithm config.
fn build_config(k: usize, common: &CommonOpts) -> Result<RunConfig, Failure> {
    if k == 0 {
        return Err(Failure::usage("--k must be at least 1"));
    }
    if !(common.alpha0 > 0.0 && common.alpha0 < 1.0 / 3.0) {
        return Err(Failure::usage(format!(
            "--alpha0 must lie strictly between 0 and 1/3, got {}",
            common.alpha0
        )));
    }
    if common.max_iter == 0 {
        return Err(Failure::usage("--max-iter must be at least 1"));
    }
    let gamma: GammaChoice = common
        .gamma
        .parse()
        .map_err(|e| Failure::usage(format!("--gamma: {e}")))?;
    if let GammaChoice::Fixed(g) = gamma {
        if g <= 0.0 || !g.is_finite() {
            return Err(Failure::usage(format!(
                "--gamma must be positive, got {g}"
            )));
        }
    }
    let mut cfg = RunConfig::new(k, common.seed);
    cfg.alpha0 = common.alpha0;
    cfg.max_iterations = common.max_iter;
    cfg.strict_eq10 = common.strict_eq10;
    cfg.rbf_gamma = gamma;
    Ok(cfg)
}

fn parse_algorithms(spec: &str) -> Result<Vec<Algorithm>, Failure> {
    let mut algos = Vec::new();
    for name in spec.split(',') {
        let name = name.trim();
        if name.is_empty() {
            continue;
        }
        let algo: Algorithm = name.parse().map_err(Failure::usage)?;
        if !algos.contains(&algo) {
            algos.push(algo);
        }
    }
    if algos.is_empty() {
        return Err(Failure::usage("no algorithm selected"));
    }
    Ok(algos)
}

fn read_dataset(path: &Path, common: &CommonOpts) -> Result<Dataset, Failure> {
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let ds = if is_pgm {
        read_pgm(path)?
    } else {
        read_csv_dataset(
            path,
            &CsvOptions {
                has_header: common.has_header,
                ..CsvOptions::default()
            },
        )?
    };
    Ok(ds)
}

fn ensure_output_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::from(Error::io(dir, e)))
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn print_outcome(report: &RunReport) {
    println!("mse: {}", report.mse);
    println!("termination_reason: {}", report.termination_reason);
}

fn cmd_cluster(args: ClusterArgs) -> Result<(), Failure> {
    let cfg = build_config(args.k, &args.common)?;
    let algo: Algorithm = args.algo.parse().map_err(Failure::usage)?;
    let ds = read_dataset(&args.input, &args.common)?;
    let centers = init_centers_random(&ds, cfg.k, cfg.seed)?;
    let report = run_algorithm(algo, &ds, &centers, &cfg)?;
    ensure_output_dir(&args.common.output_dir)?;
    let stem = stem_of(&args.input);
    let labels = LabelMap::from_state(&report.final_state, ds.image_shape());
    write_report_json(
        args.common.output_dir.join(format!("{stem}_{algo}_report.json")),
        &report,
    )?;
    write_labels_csv(
        args.common.output_dir.join(format!("{stem}_{algo}_labels.csv")),
        &labels,
    )?;
    print_outcome(&report);
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), Failure> {
    let cfg = build_config(args.k, &args.common)?;
    let algos = parse_algorithms(&args.algos)?;
    ensure_output_dir(&args.common.output_dir)?;
    let mut rows = Vec::new();
    let mut report_files = Vec::new();
    let mut any_success = false;
    for input in &args.input {
        let ds = read_dataset(input, &args.common)?;
        let centers = init_centers_random(&ds, cfg.k, cfg.seed)?;
        let stem = stem_of(input);
        let mut cells = Vec::new();
        for &algo in &algos {
            match run_algorithm(algo, &ds, &centers, &cfg) {
                Ok(report) => {
                    any_success = true;
                    report_files.push((
                        args.common.output_dir.join(format!("{stem}_{algo}_report.json")),
                        report.clone(),
                    ));
                    cells.push(vec![report]);
                }
                Err(err) => {
                    eprintln!("warning: {algo} on {stem}: {err}");
                    cells.push(Vec::new());
                }
            }
        }
        rows.push((stem, cells));
    }
    if !any_success {
        return Err(Failure {
            code: EXIT_DATA,
            message: "every run failed; no table to write".into(),
        });
    }
    let table = build_comparison_table(&algos, &rows);
    for (path, report) in &report_files {
        write_report_json(path, report)?;
    }
    write_comparison_csv(args.common.output_dir.join("comparison.csv"), &table)?;
    println!(
        "comparison table: {} dataset(s) x {} algorithm(s)",
        table.rows.len(),
        table.algorithms.len()
    );
    Ok(())
}

fn cmd_sensitivity(args: SensitivityArgs) -> Result<(), Failure> {
    if args.trials == 0 {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    let cfg = build_config(args.k, &args.common)?;
    let algos = parse_algorithms(&args.algos)?;
    let ds = read_dataset(&args.input, &args.common)?;
    let result = run_sensitivity(&ds, &algos, args.trials, cfg.seed, &cfg)?;
    if result
        .trials
        .iter()
        .all(|t| t.final_mse.iter().all(Option::is_none))
    {
        return Err(Failure {
            code: EXIT_DATA,
            message: "every trial failed; nothing to write".into(),
        });
    }
    ensure_output_dir(&args.common.output_dir)?;
    write_sensitivity_series_csv(
        args.common.output_dir.join("sensitivity_series.csv"),
        &result,
    )?;
    write_sensitivity_summary_csv(
        args.common.output_dir.join("sensitivity_summary.csv"),
        &result,
    )?;
    for (i, algo) in result.algorithms.iter().enumerate() {
        if let Some(s) = &result.per_algorithm_summary[i] {
            println!(
                "{algo}: mean {} std {} median {} over {} trial(s)",
                s.mean, s.std, s.median, s.count
            );
        } else {
            println!("{algo}: all trials failed");
        }
    }
    Ok(())
}

fn cmd_segment(args: SegmentArgs) -> Result<(), Failure> {
    let cfg = build_config(args.k, &args.common)?;
    let algo: Algorithm = args.algo.parse().map_err(Failure::usage)?;
    let ds = read_pgm(&args.input)?;
    let centers = init_centers_random(&ds, cfg.k, cfg.seed)?;
    let report = run_algorithm(algo, &ds, &centers, &cfg)?;
    ensure_output_dir(&args.common.output_dir)?;
    let stem = stem_of(&args.input);
    let labels = LabelMap::from_state(&report.final_state, ds.image_shape());
    write_segmented_pgm(
        args.common.output_dir.join(format!("{stem}_segmented.pgm")),
        &labels,
        report.final_state.centroids(),
    )?;
    write_labels_csv(
        args.common.output_dir.join(format!("{stem}_labels.csv")),
        &labels,
    )?;
    write_report_json(
        args.common.output_dir.join(format!("{stem}_report.json")),
        &report,
    )?;
    print_outcome(&report);
    Ok(())
}
