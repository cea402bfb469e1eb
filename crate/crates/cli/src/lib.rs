//! `proxylight` command-line interface.
//!
//! Exit codes: 0 on success (batch runs may still report per-file failures),
//! 1 on I/O or decode errors, 2 on usage errors and invalid parameters.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use proxylight::dataset::{self, ablation_grid, FAILURES_FILE, MANIFEST_FILE};
use proxylight::fusion::{DEFAULT_GAMMA, DEFAULT_LAMBDA_L, DEFAULT_LAMBDA_U};
use proxylight::image::{read_image, write_image};
use proxylight::metrics::{evaluate_dirs, report_jsonl, EvalKind, ReportRecord};
use proxylight::{EncodeFormat, Error, GenerateOptions, LowLightPool, Mode, RasterImage, TranslationParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable holding the log filter (`error`, `warn`, `info`, ...).
pub const LOG_ENV: &str = "PROXYLIGHT_LOG";

#[derive(Debug, Parser)]
#[command(name = "proxylight", version, about = "Translate well-lit images into proxy low-light images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Translate a single image with one low-light exemplar.
    Translate(TranslateArgs),
    /// Build a proxy dataset from a directory of well-lit images.
    Generate(GenerateArgs),
    /// Render a contact sheet over a grid of parameter settings.
    Sweep(SweepArgs),
    /// Score prediction maps against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliMode {
    /// Blackman-tapered band-pass fusion
    Ours,
    /// Hard low-frequency amplitude swap
    Fda,
    /// Band-pass with a flat window
    Rect,
    /// Blackman low-pass without a lower cutoff
    Lowpass,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Self {
        match m {
            CliMode::Ours => Mode::Ours,
            CliMode::Fda => Mode::Fda,
            CliMode::Rect => Mode::AblationRect,
            CliMode::Lowpass => Mode::AblationLowpass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliFormat {
    Png,
    Jpeg,
}

impl From<CliFormat> for EncodeFormat {
    fn from(f: CliFormat) -> Self {
        match f {
            CliFormat::Png => EncodeFormat::Png,
            CliFormat::Jpeg => EncodeFormat::Jpeg,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Lower cutoff as a fraction of the image size
    #[arg(long = "lambda-l", default_value_t = DEFAULT_LAMBDA_L)]
    pub lambda_l: f64,
    /// Upper cutoff as a fraction of the image size
    #[arg(long = "lambda-u", default_value_t = DEFAULT_LAMBDA_U)]
    pub lambda_u: f64,
    /// Darkening exponent (6 suits very dark exemplars)
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = CliMode::Ours)]
    pub mode: CliMode,
}

impl ParamArgs {
    pub fn params(&self) -> proxylight::Result<TranslationParams> {
        TranslationParams::new(self.lambda_l, self.lambda_u, self.gamma, self.mode.into())
    }
}

#[derive(Debug, Clone, Args)]
pub struct TranslateArgs {
    /// Well-lit input image
    #[arg(long)]
    pub well: PathBuf,
    /// Low-light exemplar image
    #[arg(long)]
    pub low: PathBuf,
    /// Output image path
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value_t = CliFormat::Png)]
    pub format: CliFormat,
}

#[derive(Debug, Clone, Args)]
#[command(group = clap::ArgGroup::new("pool_source").required(true).args(["pool_dir", "pool"]))]
pub struct GenerateArgs {
    /// Directory of well-lit images (png/jpg/jpeg)
    #[arg(long = "well-dir")]
    pub well_dir: PathBuf,
    /// Directory of low-light exemplars
    #[arg(long = "pool-dir")]
    pub pool_dir: Option<PathBuf>,
    /// Text file listing low-light exemplars, one path per line
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Output directory for proxies and the manifest
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Seed for exemplar sampling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = available parallelism)
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = CliFormat::Png)]
    pub format: CliFormat,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub well: PathBuf,
    #[arg(long)]
    pub low: PathBuf,
    /// Contact sheet path; the cell manifest is written next to it
    #[arg(long)]
    pub out: PathBuf,
    /// Grid cell as MODE:LAMBDA_L:LAMBDA_U:GAMMA (repeatable). Defaults to
    /// the four-cell ablation grid at gamma 2.5.
    #[arg(long = "cell")]
    pub cells: Vec<String>,
    /// Cells per row (default: ceil(sqrt(cells)))
    #[arg(long)]
    pub columns: Option<usize>,
    #[arg(long, value_enum, default_value_t = CliFormat::Png)]
    pub format: CliFormat,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory of predicted maps
    #[arg(long = "pred-dir")]
    pub pred_dir: PathBuf,
    /// Directory of ground-truth maps, matched by file stem
    #[arg(long = "gt-dir")]
    pub gt_dir: PathBuf,
    /// Report path (line-delimited JSON); stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Score as depth maps instead of saliency maps
    #[arg(long)]
    pub depth: bool,
}

/// Errors carry the exit code they map to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: if e.is_usage() { EXIT_USAGE } else { EXIT_RUNTIME }, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_RUNTIME, message: format!("{}: {e}", path.display()) }
}

pub fn init_logging() {
    let env = env_logger::Env::default().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).try_init();
}

/// Parses `args` (including the program name) and runs the subcommand,
/// writing human-readable output to `out`. Returns the process exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Translate(a) => run_translate(a, out),
        Command::Generate(a) => run_generate(a, out),
        Command::Sweep(a) => run_sweep(a, out),
        Command::Eval(a) => run_eval(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_RUNTIME, message: format!("{what} {} does not exist", path.display()) })
    }
}

fn require_dir(path: &Path, what: &str) -> Result<(), Failure> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_RUNTIME, message: format!("{what} {} is not a directory", path.display()) })
    }
}

pub fn run_translate(args: &TranslateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let params = args.params.params()?;
    require_file(&args.well, "well-lit image")?;
    require_file(&args.low, "low-light image")?;
    let well: RasterImage = read_image(&args.well)?;
    let low: RasterImage = read_image(&args.low)?;
    let proxy = proxylight::translate(&well, &low, &params)?;
    write_image(&proxy.image, &args.out, args.format.into())?;
    let _ = writeln!(
        out,
        "lambda_l={} lambda_u={} gamma={} mode={} -> {}",
        params.lambda_l(),
        params.lambda_u(),
        params.gamma(),
        params.mode(),
        args.out.display()
    );
    if proxy.degenerate_band {
        let _ = writeln!(
            out,
            "warning: frequency band is empty for a {}x{} image; output is gamma only",
            well.height(),
            well.width()
        );
    }
    Ok(())
}

pub fn run_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let params = args.params.params()?;
    require_dir(&args.well_dir, "well-lit directory")?;
    let exemplars = match (&args.pool_dir, &args.pool) {
        (Some(dir), _) => {
            require_dir(dir, "pool directory")?;
            dataset::list_images(dir)?
        }
        (None, Some(list)) => {
            require_file(list, "pool list")?;
            dataset::read_file_list(list)?
        }
        (None, None) => return Err(usage("one of --pool-dir or --pool is required")),
    };
    let pool = LowLightPool::new(exemplars)?;
    let inputs = dataset::list_images(&args.well_dir)?;
    let opts = GenerateOptions { out_dir: args.out_dir.clone(), format: args.format.into(), workers: args.workers };
    let manifest = proxylight::generate(&inputs, &pool, &params, args.seed, &opts)?;

    let manifest_path = args.out_dir.join(MANIFEST_FILE);
    std::fs::write(&manifest_path, manifest.to_jsonl()).map_err(|e| io_failure(&manifest_path, e))?;
    if !manifest.failures.is_empty() {
        let path = args.out_dir.join(FAILURES_FILE);
        std::fs::write(&path, manifest.failures_jsonl()).map_err(|e| io_failure(&path, e))?;
    }
    let degenerate = manifest.entries.iter().filter(|e| e.degenerate_band).count();
    if degenerate > 0 {
        let _ = writeln!(out, "warning: {degenerate} images were too small for the frequency band");
    }
    let _ = writeln!(out, "{} ok, {} failed", manifest.entries.len(), manifest.failures.len());
    Ok(())
}

/// Parses `MODE:LAMBDA_L:LAMBDA_U:GAMMA`.
pub fn parse_cell(text: &str) -> Result<TranslationParams, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let [mode, l, u, g] = parts.as_slice() else {
        return Err(usage(format!("cell `{text}` must look like MODE:LAMBDA_L:LAMBDA_U:GAMMA")));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| usage(format!("`{s}` in cell `{text}` is not a number")));
    let mode: Mode = mode.parse()?;
    Ok(TranslationParams::new(num(l)?, num(u)?, num(g)?, mode)?)
}

pub fn run_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let grid = if args.cells.is_empty() {
        ablation_grid()
    } else {
        args.cells.iter().map(|c| parse_cell(c)).collect::<Result<_, _>>()?
    };
    if args.columns == Some(0) {
        return Err(usage("--columns must be at least 1"));
    }
    require_file(&args.well, "well-lit image")?;
    require_file(&args.low, "low-light image")?;
    let well: RasterImage = read_image(&args.well)?;
    let low: RasterImage = read_image(&args.low)?;
    let sweep = proxylight::sweep(&well, &low, &grid, args.columns)?;
    write_image(&sweep.sheet, &args.out, args.format.into())?;
    let cells_path = args.out.with_extension("cells.jsonl");
    std::fs::write(&cells_path, sweep.cells_jsonl()).map_err(|e| io_failure(&cells_path, e))?;
    let _ = writeln!(
        out,
        "{} cells -> {} ({}x{}), cells in {}",
        sweep.cells.len(),
        args.out.display(),
        sweep.sheet.height(),
        sweep.sheet.width(),
        cells_path.display()
    );
    Ok(())
}

pub fn run_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), Failure> {
    require_dir(&args.pred_dir, "prediction directory")?;
    require_dir(&args.gt_dir, "ground-truth directory")?;
    let kind = if args.depth { EvalKind::Depth } else { EvalKind::Saliency };
    let records = evaluate_dirs(&args.pred_dir, &args.gt_dir, kind)?;
    let report = report_jsonl(&records);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &report).map_err(|e| io_failure(path, e))?;
            let skipped = records.iter().filter(|r| matches!(r, ReportRecord::Skipped { .. })).count();
            let _ = writeln!(out, "{} records ({} skipped) -> {}", records.len(), skipped, path.display());
        }
        None => {
            let _ = out.write_all(report.as_bytes());
        }
    }
    Ok(())
}
