//! Command-line front end: train, predict, evaluate, tune, simulate, study.
//!
//! Machine-readable results go to standard output as JSON (schema_version
//! "1") or to the file named by `--out`; progress and diagnostics go to
//! standard error. Exit codes: 0 success, 2 input or data error, 3 solver
//! non-convergence (the model file is still written), 4 internal failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::{Array1, Array2};
use serde::Serialize;

use npdmd::dataset::save_csv;
use npdmd::simulation::{generate, run_study, Method, SimSpec, SummaryRow, DIMENSION_SWEEP};
use npdmd::{
    cross_validate, evaluate, load_table, piling_index, predict, roc_curve, train_npdmd,
    write_roc_csv, CvOutcome, Dataset, Error, EvalReport, GridPoint, Hyperparams, LabelColumn,
    RawTable, TableFormat, TrainedModel, DEFAULT_C0_GRID, DEFAULT_LAMBDA_GRID, DEFAULT_METHODS,
};

const SCHEMA_VERSION: &str = "1";

const EXIT_INPUT: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "npdmd",
    version,
    about = "Dispersion-seeking linear classifier for high-dimension low-sample-size data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a two-class table and write it as JSON.
    Train(TrainArgs),
    /// Score a feature table with a trained model.
    Predict(PredictArgs),
    /// Evaluate a model on labeled data, or drive one-vs-rest over classes.
    Evaluate(EvaluateArgs),
    /// Grid-search hyperparameters by stratified cross-validation.
    Tune(TuneArgs),
    /// Generate one replication of the two-Gaussian benchmark as CSV.
    Simulate(SimulateArgs),
    /// Run the benchmark study across dimensions, methods, replications.
    Study(StudyArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input table path.
    #[arg(long)]
    data: PathBuf,
    /// Input table format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Label column: "last", a zero-based index, or a header name.
    #[arg(long, default_value = "last")]
    labels_col: String,
}

#[derive(Args)]
struct HyperArgs {
    /// Dispersion weight as a fraction of the spectral bound, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    lambda_frac: f64,
    /// Box bound on the dual variables (soft-margin cost).
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    /// Stopping tolerance on the dual optimality gap.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Cap on solver passes; unlimited when absent.
    #[arg(long)]
    max_passes: Option<usize>,
}

impl HyperArgs {
    fn to_hyperparams(&self) -> Hyperparams {
        Hyperparams {
            lambda_frac: self.lambda_frac,
            c0: self.c0,
            tol: self.tol,
            max_passes: self.max_passes,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Libsvm,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> TableFormat {
        match f {
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::Libsvm => TableFormat::Libsvm,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OutFormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Model file to write (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Feature table. All CSV columns are read as features unless
    /// --labels-col names one to drop; LIBSVM labels are always ignored.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Label column to drop ("last", an index, or a name).
    #[arg(long)]
    labels_col: Option<String>,
    /// Predictions CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Trained model file. Required unless --ovr trains its own models.
    #[arg(long, required_unless_present = "ovr", conflicts_with = "ovr")]
    model: Option<PathBuf>,
    #[command(flatten)]
    input: DataArgs,
    /// Train one model per class of a multi-class table (that class against
    /// the rest) and pool the per-class cells on held-out data.
    #[arg(long, requires = "test")]
    ovr: bool,
    /// Held-out table scored by the one-vs-rest models.
    #[arg(long)]
    test: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Report path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormatArg::Json)]
    out_format: OutFormatArg,
    /// ROC curve CSV path (single-model mode only).
    #[arg(long)]
    roc_out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    input: DataArgs,
    /// Comma-separated dispersion-fraction grid; built-in default when absent.
    #[arg(long, value_delimiter = ',')]
    grid_lambda: Vec<f64>,
    /// Comma-separated box-bound grid; built-in default when absent.
    #[arg(long, value_delimiter = ',')]
    grid_c0: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent cross-validation repetitions with derived seeds.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    max_passes: Option<usize>,
    /// Fold-by-fold table path (CSV, or full results as JSON with
    /// --out-format json).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormatArg::Csv)]
    out_format: OutFormatArg,
}

#[derive(Args)]
struct SimulateArgs {
    /// Feature-space dimension.
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which replication's substreams to draw.
    #[arg(long, default_value_t = 0)]
    replication: usize,
    /// Mahalanobis distance between the class means.
    #[arg(long, default_value_t = 2.7)]
    mahalanobis: f64,
    #[arg(long, default_value_t = 120)]
    n_plus: usize,
    #[arg(long, default_value_t = 90)]
    n_minus: usize,
    #[arg(long, default_value_t = 1500)]
    n_test_per_class: usize,
    /// Directory receiving train.csv and test.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StudyArgs {
    /// Comma-separated dimension sweep; built-in default when absent.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    /// Comma-separated methods: npdmd, svm, md, bayes-oracle.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for study cells; all processors when absent.
    #[arg(long)]
    jobs: Option<usize>,
    /// Per-cell CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Per-(dimension, method) summary CSV path; the summary is always also
    /// printed to standard output as JSON.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn run(command: Command) -> npdmd::Result<ExitCode> {
    match command {
        Command::Train(args) => run_train(args),
        Command::Predict(args) => run_predict(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Tune(args) => run_tune(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Study(args) => run_study_cmd(args),
    }
}

fn parse_label_column(text: &str) -> LabelColumn {
    if text.eq_ignore_ascii_case("last") {
        return LabelColumn::Last;
    }
    match text.parse::<usize>() {
        Ok(index) => LabelColumn::Index(index),
        Err(_) => LabelColumn::Name(text.to_string()),
    }
}

fn load_input(args: &DataArgs) -> npdmd::Result<Dataset> {
    load_table(
        &args.data,
        args.format.into(),
        &parse_label_column(&args.labels_col),
    )
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serializes")
    );
}

#[derive(Serialize)]
struct TrainSummary {
    schema_version: &'static str,
    command: &'static str,
    model_path: String,
    n: usize,
    d: usize,
    n_support: usize,
    converged: bool,
    kkt_violation: f64,
    iterations: usize,
    lambda: f64,
    seconds: f64,
}

fn run_train(args: TrainArgs) -> npdmd::Result<ExitCode> {
    let ds = load_input(&args.input)?;
    let hp = args.hyper.to_hyperparams();
    let started = Instant::now();
    let model = train_npdmd(&ds, &hp)?;
    let seconds = started.elapsed().as_secs_f64();
    model.save(&args.out)?;
    print_json(&TrainSummary {
        schema_version: SCHEMA_VERSION,
        command: "train",
        model_path: args.out.display().to_string(),
        n: ds.n(),
        d: ds.dim(),
        n_support: model.support_indices.len(),
        converged: model.converged,
        kkt_violation: model.kkt_violation,
        iterations: model.iterations,
        lambda: model.lambda,
        seconds,
    });
    if model.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("warning: solver did not converge; model written anyway");
        Ok(ExitCode::from(EXIT_NO_CONVERGENCE))
    }
}

/// Parses a plain numeric CSV with no label column. The first row is taken
/// as a header when any field fails to parse as a number.
fn load_feature_csv(path: &Path) -> npdmd::Result<Array2<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<f64> = Vec::new();
    let mut width = 0usize;
    let mut n = 0usize;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if n == 0 => continue,
            Err(_) => {
                return Err(Error::MalformedRow {
                    row: idx,
                    message: "non-numeric field in feature row".to_string(),
                })
            }
        };
        if n == 0 {
            width = values.len();
        } else if values.len() != width {
            return Err(Error::MalformedRow {
                row: idx,
                message: format!("expected {width} fields, got {}", values.len()),
            });
        }
        for (col, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { row: idx, col });
            }
        }
        rows.extend(values);
        n += 1;
    }
    Array2::from_shape_vec((n, width), rows).map_err(|e| Error::MalformedRow {
        row: 0,
        message: e.to_string(),
    })
}

fn load_features(
    data: &Path,
    format: FormatArg,
    labels_col: &Option<String>,
) -> npdmd::Result<Array2<f64>> {
    match (format, labels_col) {
        (FormatArg::Libsvm, _) => {
            Ok(RawTable::load(data, TableFormat::Libsvm, &LabelColumn::Last)?.features)
        }
        (FormatArg::Csv, Some(col)) => {
            Ok(RawTable::load(data, TableFormat::Csv, &parse_label_column(col))?.features)
        }
        (FormatArg::Csv, None) => load_feature_csv(data),
    }
}

fn write_predictions<W: Write>(
    mut out: W,
    labels: &Array1<f64>,
    scores: &Array1<f64>,
) -> std::io::Result<()> {
    writeln!(out, "index,score,label")?;
    for i in 0..labels.len() {
        let label = if labels[i] > 0.0 { 1 } else { -1 };
        writeln!(out, "{},{},{}", i, scores[i], label)?;
    }
    Ok(())
}

fn run_predict(args: PredictArgs) -> npdmd::Result<ExitCode> {
    let model = TrainedModel::load(&args.model)?;
    let x = load_features(&args.data, args.format, &args.labels_col)?;
    let (labels, scores) = predict(&model, &x.view())?;
    match &args.out {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            write_predictions(&mut out, &labels, &scores)?;
            out.flush()?;
        }
        None => write_predictions(std::io::stdout().lock(), &labels, &scores)?,
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct EvaluateSummary {
    schema_version: &'static str,
    command: &'static str,
    data: String,
    n: usize,
    #[serde(flatten)]
    report: EvalReport,
}

fn write_report_csv<W: Write>(mut out: W, report: &EvalReport) -> std::io::Result<()> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    writeln!(out, "ccr,mwe,auc,angle_deg,piling_index,tp,fn,fp,tn")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{}",
        report.ccr,
        report.mwe,
        report.auc,
        opt(report.angle_deg),
        opt(report.piling_index),
        report.confusion[0][0],
        report.confusion[0][1],
        report.confusion[1][0],
        report.confusion[1][1],
    )
}

fn run_evaluate(args: EvaluateArgs) -> npdmd::Result<ExitCode> {
    if args.ovr {
        return run_evaluate_ovr(args);
    }
    let model_path = args.model.as_ref().expect("clap enforces --model");
    let model = TrainedModel::load(model_path)?;
    let ds = load_input(&args.input)?;
    let (y_pred, scores) = predict(&model, &ds.features.view())?;
    let mut report = evaluate(ds.labels.view(), y_pred.view(), scores.view())?;
    report.piling_index = piling_index(&model, &ds).ok();
    if let Some(path) = &args.roc_out {
        let points = roc_curve(ds.labels.view(), scores.view())?;
        write_roc_csv(&points, BufWriter::new(File::create(path)?))?;
    }
    let summary = EvaluateSummary {
        schema_version: SCHEMA_VERSION,
        command: "evaluate",
        data: args.input.data.display().to_string(),
        n: ds.n(),
        report,
    };
    match (&args.out, args.out_format) {
        (None, _) => print_json(&summary),
        (Some(path), OutFormatArg::Json) => {
            let mut out = BufWriter::new(File::create(path)?);
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&summary).expect("report serializes")
            )?;
        }
        (Some(path), OutFormatArg::Csv) => {
            write_report_csv(BufWriter::new(File::create(path)?), &summary.report)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct OvrClassRow {
    class: String,
    n_test: usize,
    ccr: f64,
    mwe: f64,
}

#[derive(Serialize)]
struct OvrSummary {
    schema_version: &'static str,
    command: &'static str,
    mode: &'static str,
    n_classes: usize,
    /// Correct predictions over all one-vs-rest cells divided by total
    /// predictions; not comparable to a single multi-class accuracy.
    pooled_cell_ccr: f64,
    classes: Vec<OvrClassRow>,
}

fn run_evaluate_ovr(args: EvaluateArgs) -> npdmd::Result<ExitCode> {
    let format: TableFormat = args.input.format.into();
    let label_col = parse_label_column(&args.input.labels_col);
    let train_raw = RawTable::load(&args.input.data, format, &label_col)?;
    let test_path = args.test.as_ref().expect("clap enforces --test");
    let test_raw = RawTable::load(test_path, format, &label_col)?;
    let hp = args.hyper.to_hyperparams();

    let mut classes = Vec::new();
    let mut correct = 0usize;
    let mut total = 0usize;
    for class in train_raw.classes() {
        let tr = train_raw.one_vs_rest(&class)?;
        let te = test_raw.one_vs_rest(&class)?;
        let model = train_npdmd(&tr, &hp)?;
        let (y_pred, scores) = predict(&model, &te.features.view())?;
        let report = evaluate(te.labels.view(), y_pred.view(), scores.view())?;
        correct += y_pred
            .iter()
            .zip(te.labels.iter())
            .filter(|(p, t)| p == t)
            .count();
        total += te.n();
        eprintln!(
            "ovr: class {class:?} ccr {:.4} mwe {:.4}",
            report.ccr, report.mwe
        );
        classes.push(OvrClassRow {
            class,
            n_test: te.n(),
            ccr: report.ccr,
            mwe: report.mwe,
        });
    }
    let summary = OvrSummary {
        schema_version: SCHEMA_VERSION,
        command: "evaluate",
        mode: "one-vs-rest",
        n_classes: classes.len(),
        pooled_cell_ccr: correct as f64 / total as f64,
        classes,
    };
    match &args.out {
        None => print_json(&summary),
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&summary).expect("report serializes")
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct TuneRun {
    seed: u64,
    lambda_frac: f64,
    c0: f64,
    mean_ccr: f64,
}

#[derive(Serialize)]
struct TuneSummary {
    schema_version: &'static str,
    command: &'static str,
    data: String,
    folds: usize,
    repeats: u64,
    grid_lambda: Vec<f64>,
    grid_c0: Vec<f64>,
    /// Winner of the first repetition (the seed as given).
    best: GridPoint,
    best_mean_ccr: f64,
    /// Winning mean CCR averaged over repetitions.
    mean_best_ccr: f64,
    runs: Vec<TuneRun>,
}

fn write_cv_table_csv<W: Write>(mut out: W, runs: &[CvOutcome]) -> std::io::Result<()> {
    writeln!(out, "repeat,lambda_frac,c0,fold,ccr")?;
    for (r, run) in runs.iter().enumerate() {
        for cell in &run.table {
            writeln!(
                out,
                "{},{},{},{},{}",
                r, cell.lambda_frac, cell.c0, cell.fold, cell.ccr
            )?;
        }
    }
    Ok(())
}

fn run_tune(args: TuneArgs) -> npdmd::Result<ExitCode> {
    let ds = load_input(&args.input)?;
    let grid_lambda = if args.grid_lambda.is_empty() {
        DEFAULT_LAMBDA_GRID.to_vec()
    } else {
        args.grid_lambda.clone()
    };
    let grid_c0 = if args.grid_c0.is_empty() {
        DEFAULT_C0_GRID.to_vec()
    } else {
        args.grid_c0.clone()
    };
    let base = Hyperparams {
        tol: args.tol,
        max_passes: args.max_passes,
        ..Hyperparams::default()
    };
    let mut runs = Vec::new();
    for r in 0..args.repeats {
        runs.push(cross_validate(
            &ds,
            &grid_lambda,
            &grid_c0,
            args.folds,
            args.seed.wrapping_add(r),
            &base,
        )?);
    }
    if let Some(path) = &args.out {
        let mut out = BufWriter::new(File::create(path)?);
        match args.out_format {
            OutFormatArg::Csv => write_cv_table_csv(&mut out, &runs)?,
            OutFormatArg::Json => writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&runs).expect("table serializes")
            )?,
        }
        out.flush()?;
    }
    let summary = TuneSummary {
        schema_version: SCHEMA_VERSION,
        command: "tune",
        data: args.input.data.display().to_string(),
        folds: args.folds,
        repeats: args.repeats,
        grid_lambda,
        grid_c0,
        best: runs[0].best.clone(),
        best_mean_ccr: runs[0].best_mean_ccr,
        mean_best_ccr: runs.iter().map(|r| r.best_mean_ccr).sum::<f64>() / runs.len() as f64,
        runs: runs
            .iter()
            .map(|r| TuneRun {
                seed: r.seed,
                lambda_frac: r.best.lambda_frac,
                c0: r.best.c0,
                mean_ccr: r.best_mean_ccr,
            })
            .collect(),
    };
    print_json(&summary);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SimulateSummary {
    schema_version: &'static str,
    command: &'static str,
    d: usize,
    seed: u64,
    replication: usize,
    train_path: String,
    test_path: String,
    n_train: usize,
    n_test: usize,
    /// Every coordinate of the oracle direction has this value.
    oracle_w_coord: f64,
    oracle_b: f64,
}

fn run_simulate(args: SimulateArgs) -> npdmd::Result<ExitCode> {
    let spec = SimSpec {
        d: args.d,
        n_plus: args.n_plus,
        n_minus: args.n_minus,
        mahalanobis: args.mahalanobis,
        n_test_per_class: args.n_test_per_class,
        seed: args.seed,
        replications: args.replication + 1,
    };
    let (train, test, (w_star, b_star)) = generate(&spec, args.replication);
    std::fs::create_dir_all(&args.out)?;
    let train_path = args.out.join("train.csv");
    let test_path = args.out.join("test.csv");
    save_csv(&train, &train_path)?;
    save_csv(&test, &test_path)?;
    print_json(&SimulateSummary {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        d: args.d,
        seed: args.seed,
        replication: args.replication,
        train_path: train_path.display().to_string(),
        test_path: test_path.display().to_string(),
        n_train: train.n(),
        n_test: test.n(),
        oracle_w_coord: w_star[0],
        oracle_b: b_star,
    });
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct StudySummary {
    schema_version: &'static str,
    command: &'static str,
    seed: u64,
    folds: usize,
    cells_ok: usize,
    cells_failed: usize,
    rows: Vec<SummaryRow>,
}

fn write_summary_csv<W: Write>(mut out: W, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(
        out,
        "d,method,cells_ok,cells_failed,mean_ccr,mean_mwe,mean_angle_deg,mean_piling_index"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.d,
            r.method.name(),
            r.cells_ok,
            r.cells_failed,
            r.mean_ccr,
            r.mean_mwe,
            r.mean_angle_deg,
            r.mean_piling_index
        )?;
    }
    Ok(())
}

fn run_study_cmd(args: StudyArgs) -> npdmd::Result<ExitCode> {
    let dims = if args.dims.is_empty() {
        DIMENSION_SWEEP.to_vec()
    } else {
        args.dims.clone()
    };
    let methods = if args.methods.is_empty() {
        DEFAULT_METHODS.to_vec()
    } else {
        args.methods
            .iter()
            .map(|m| {
                Method::parse(m).ok_or_else(|| {
                    Error::BadLabel(format!(
                        "unknown method {m:?} (expected npdmd, svm, md, bayes-oracle)"
                    ))
                })
            })
            .collect::<npdmd::Result<Vec<Method>>>()?
    };
    if let Some(jobs) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("warning: worker pool already initialized: {e}");
        }
    }
    let reps = args.reps as usize;
    let template = SimSpec {
        replications: reps,
        ..SimSpec::new(dims[0], args.seed)
    };
    eprintln!(
        "study: {} cells ({} dims x {} methods x {} replications)",
        dims.len() * methods.len() * reps,
        dims.len(),
        methods.len(),
        reps
    );
    let started = Instant::now();
    let table = run_study(&dims, &methods, &template, args.folds);
    let cells_ok = table.rows.iter().filter(|r| r.metrics.is_some()).count();
    let cells_failed = table.rows.len() - cells_ok;
    for row in table.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "study: cell d={} method={} replication={} failed: {}",
            row.d,
            row.method.name(),
            row.replication,
            row.error.as_deref().unwrap_or("unknown")
        );
    }
    eprintln!(
        "study: {cells_ok} of {} cells ok in {:.1}s",
        table.rows.len(),
        started.elapsed().as_secs_f64()
    );
    let mut out = BufWriter::new(File::create(&args.out)?);
    table.write_csv(&mut out)?;
    out.flush()?;
    let rows = table.summarize();
    if let Some(path) = &args.summary_out {
        write_summary_csv(BufWriter::new(File::create(path)?), &rows)?;
    }
    print_json(&StudySummary {
        schema_version: SCHEMA_VERSION,
        command: "study",
        seed: args.seed,
        folds: args.folds,
        cells_ok,
        cells_failed,
        rows,
    });
    if cells_ok == 0 {
        eprintln!("error: every study cell failed");
        return Ok(ExitCode::from(EXIT_INTERNAL));
    }
    Ok(ExitCode::SUCCESS)
}
