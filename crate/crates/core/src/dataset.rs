//! Batch proxy-dataset generation over a directory of well-lit images and a
//! small pool of real low-light exemplars, plus parameter sweeps rendered as
//! contact sheets.
//!
//! Exemplar choice for input `i` depends only on `(seed, i)`, so any worker
//! count yields the same assignments and bit-identical outputs.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{ExemplarAmplitude, Mode, TranslationParams, Translator, ABLATION_GAMMA};
use crate::image::{read_image, write_image, EncodeFormat, Raster};

pub const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const FAILURES_FILE: &str = "failures.jsonl";
/// Width of the black separator between contact-sheet cells.
pub const GUTTER: usize = 2;

/// Real low-light exemplars; never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowLightPool {
    exemplars: Vec<PathBuf>,
}

impl LowLightPool {
    pub fn new(exemplars: Vec<PathBuf>) -> Result<Self> {
        if exemplars.is_empty() {
            return Err(Error::Argument("the low-light pool needs at least one image".into()));
        }
        Ok(Self { exemplars })
    }

    pub fn exemplars(&self) -> &[PathBuf] {
        &self.exemplars
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }
}

/// Pool index used for input `index`: uniform with replacement, seeded per
/// input. A single-image pool is used as is.
pub fn sample_exemplar(pool_len: usize, seed: u64, index: usize) -> usize {
    assert!(pool_len > 0, "empty pool");
    if pool_len == 1 {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.gen_range(0..pool_len)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub input_path: String,
    pub exemplar_path: String,
    pub lambda_l: f64,
    pub lambda_u: f64,
    pub gamma: f64,
    pub mode: Mode,
    pub seed: u64,
    /// Relative to the output directory.
    pub output_path: String,
    pub degenerate_band: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub index: usize,
    pub input_path: String,
    pub error: String,
}

/// Outcome of a batch run: one entry per successfully written proxy, in
/// input order, and one failure record per input that could not be processed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub failures: Vec<EntryFailure>,
}

impl DatasetManifest {
    pub fn to_jsonl(&self) -> String {
        to_jsonl(&self.entries)
    }

    pub fn failures_jsonl(&self) -> String {
        to_jsonl(&self.failures)
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<ManifestEntry>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Argument(format!("manifest line {}: {e}", i + 1))))
            .collect()
    }
}

pub(crate) fn to_jsonl<S: Serialize>(records: &[S]) -> String {
    let mut out = String::new();
    for r in records {
        // Plain structs of strings and numbers always serialize.
        let line = serde_json::to_string(r).expect("record serializes");
        let _ = writeln!(out, "{line}");
    }
    out
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub out_dir: PathBuf,
    pub format: EncodeFormat,
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
}

impl GenerateOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self { out_dir: out_dir.into(), format: EncodeFormat::Png, workers: 0 }
    }
}

/// `<stem>__prx__<mode>__g<gamma>.<ext>`
pub fn output_name(stem: &str, params: &TranslationParams, format: EncodeFormat) -> String {
    format!("{stem}__prx__{}__g{}.{}", params.mode(), params.gamma(), format.extension())
}

fn output_names(inputs: &[PathBuf], params: &TranslationParams, format: EncodeFormat) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    inputs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| format!("image{i}"));
            let count = seen.entry(stem.clone()).or_insert(0);
            *count += 1;
            let stem = if *count > 1 { format!("{stem}__{i}") } else { stem };
            output_name(&stem, params, format)
        })
        .collect()
}

/// Pool index, height, width and channel count of a prepared exemplar.
type ExemplarKey = (usize, usize, usize, usize);

/// Translates every image of `d_well` with an exemplar drawn from `pool` and
/// writes the proxies into `opts.out_dir`. Undecodable inputs are recorded
/// as failures and the run continues; an unreadable pool image aborts.
pub fn generate(
    d_well: &[PathBuf],
    pool: &LowLightPool,
    params: &TranslationParams,
    seed: u64,
    opts: &GenerateOptions,
) -> Result<DatasetManifest> {
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| Error::io(&opts.out_dir, e))?;
    if d_well.is_empty() {
        return Ok(DatasetManifest::default());
    }
    let exemplars: Vec<Raster> = pool.exemplars.iter().map(read_image).collect::<Result<_>>()?;
    let names = output_names(d_well, params, opts.format);
    let translator = Translator::<f64>::new();
    let prepared: RwLock<HashMap<ExemplarKey, Arc<ExemplarAmplitude>>> = RwLock::default();
    let exemplar_for = |pick: usize, well: &Raster| -> Result<Arc<ExemplarAmplitude>> {
        let (h, w) = well.dims();
        let key = (pick, h, w, well.channels());
        if let Some(e) = prepared.read().expect("exemplar cache poisoned").get(&key) {
            return Ok(Arc::clone(e));
        }
        let e = Arc::new(translator.prepare_exemplar(&exemplars[pick], h, w, well.channels())?);
        Ok(Arc::clone(prepared.write().expect("exemplar cache poisoned").entry(key).or_insert(e)))
    };

    let process = |index: usize| -> std::result::Result<ManifestEntry, EntryFailure> {
        let input = &d_well[index];
        let pick = sample_exemplar(pool.len(), seed, index);
        let result = read_image::<f64>(input).and_then(|well| {
            let exemplar = exemplar_for(pick, &well)?;
            let proxy = translator.translate_prepared(&well, &exemplar, params)?;
            write_image(&proxy.image, opts.out_dir.join(&names[index]), opts.format)?;
            Ok(proxy.degenerate_band)
        });
        match result {
            Ok(degenerate_band) => {
                if degenerate_band {
                    log::warn!("{}: frequency band is empty at this size; output is gamma only", input.display());
                }
                Ok(ManifestEntry {
                    input_path: input.display().to_string(),
                    exemplar_path: pool.exemplars[pick].display().to_string(),
                    lambda_l: params.lambda_l(),
                    lambda_u: params.lambda_u(),
                    gamma: params.gamma(),
                    mode: params.mode(),
                    seed,
                    output_path: names[index].clone(),
                    degenerate_band,
                })
            }
            Err(e) => {
                log::error!("{}: {e}", input.display());
                Err(EntryFailure { index, input_path: input.display().to_string(), error: e.to_string() })
            }
        }
    };

    let workers = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start {} workers: {e}", opts.workers)))?;
    let results: Vec<_> = workers.install(|| (0..d_well.len()).into_par_iter().map(process).collect());

    let mut manifest = DatasetManifest::default();
    for r in results {
        match r {
            Ok(entry) => manifest.entries.push(entry),
            Err(failure) => manifest.failures.push(failure),
        }
    }
    Ok(manifest)
}

fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// PNG/JPEG files directly inside `dir`, sorted by path.
pub fn list_images(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_image_path(&path) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// One path per line; blank lines and `#` comments are skipped. Relative
/// paths resolve against the list file's directory.
pub fn read_file_list(list: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let list = list.as_ref();
    let text = std::fs::read_to_string(list).map_err(|e| Error::io(list, e))?;
    let base = list.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let p = PathBuf::from(l);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub cell: usize,
    pub row: usize,
    pub col: usize,
    pub lambda_l: f64,
    pub lambda_u: f64,
    pub gamma: f64,
    pub mode: Mode,
    pub degenerate_band: bool,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub sheet: Raster,
    pub cells: Vec<SweepCell>,
}

impl Sweep {
    pub fn cells_jsonl(&self) -> String {
        to_jsonl(&self.cells)
    }
}

/// The four ablation settings: flat low-pass, windowed low-pass, windowed
/// band-pass, and band-pass with a wide upper cutoff.
pub fn ablation_grid() -> Vec<TranslationParams> {
    [(0.0, 0.1, Mode::AblationRect), (0.0, 0.1, Mode::Ours), (0.01, 0.1, Mode::Ours), (0.01, 0.5, Mode::Ours)]
        .into_iter()
        .map(|(l, u, mode)| TranslationParams::new(l, u, ABLATION_GAMMA, mode).expect("valid ablation settings"))
        .collect()
}

/// Translates `well` with every parameter set and tiles the results
/// row-major, `columns` per row (default `ceil(sqrt(n))`), separated by
/// black gutters.
pub fn sweep(well: &Raster, low: &Raster, grid: &[TranslationParams], columns: Option<usize>) -> Result<Sweep> {
    if grid.is_empty() {
        return Err(Error::Argument("sweep grid must not be empty".into()));
    }
    let n = grid.len();
    let cols = columns.unwrap_or_else(|| (n as f64).sqrt().ceil() as usize).clamp(1, n);
    let rows = n.div_ceil(cols);
    let (h, w, c) = (well.height(), well.width(), well.channels());
    let sheet_h = rows * h + (rows - 1) * GUTTER;
    let sheet_w = cols * w + (cols - 1) * GUTTER;
    let mut data = vec![0.0; sheet_h * sheet_w * c];

    let translator = Translator::new();
    let exemplar = translator.prepare_exemplar(low, h, w, c)?;
    let mut cells = Vec::with_capacity(n);
    for (k, params) in grid.iter().enumerate() {
        let proxy = translator.translate_prepared(well, &exemplar, params)?;
        let (row, col) = (k / cols, k % cols);
        let (y0, x0) = (row * (h + GUTTER), col * (w + GUTTER));
        for (y, src) in proxy.image.data().chunks(w * c).enumerate() {
            let start = ((y0 + y) * sheet_w + x0) * c;
            data[start..start + w * c].copy_from_slice(src);
        }
        cells.push(SweepCell {
            cell: k,
            row,
            col,
            lambda_l: params.lambda_l(),
            lambda_u: params.lambda_u(),
            gamma: params.gamma(),
            mode: params.mode(),
            degenerate_band: proxy.degenerate_band,
        });
    }
    Ok(Sweep { sheet: Raster::new(sheet_h, sheet_w, c, data)?, cells })
}
