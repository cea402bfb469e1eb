//! Map-comparison metrics: MAE and adaptive-threshold F-measure for saliency
//! maps, and the δ-threshold / REL / RMSE family for depth maps.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{list_images, to_jsonl};
use crate::error::{Error, Result};
use crate::image::{read_image, Raster};
use crate::scalar::Scalar;

/// Conventional precision weight for saliency F-measure.
pub const DEFAULT_BETA_SQ: f64 = 0.3;
/// Base of the δ accuracy thresholds (`δ_k: ratio < 1.25^k`).
pub const DELTA_BASE: f64 = 1.25;

/// Single-channel map with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayMap<T = f64> {
    height: usize,
    width: usize,
    values: Vec<T>,
}

impl<T: Scalar> GrayMap<T> {
    pub fn new(height: usize, width: usize, values: Vec<T>) -> Result<Self> {
        Raster::new(height, width, 1, values).map(Self::from)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// 1 where the value is at least `threshold`, else 0.
    pub fn binarize(&self, threshold: T) -> Self {
        let values = self.values.iter().map(|v| if *v >= threshold { T::one() } else { T::zero() }).collect();
        Self { height: self.height, width: self.width, values }
    }

    pub fn mean(&self) -> T {
        mean(&self.values)
    }
}

impl<T: Scalar> From<Raster<T>> for GrayMap<T> {
    /// Color rasters are reduced to luma.
    fn from(raster: Raster<T>) -> Self {
        let gray = raster.with_channels(1).expect("1 and 3 channel rasters convert to gray");
        Self { height: gray.height(), width: gray.width(), values: gray.into_data() }
    }
}

/// Strictly positive map, e.g. metric or normalized depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap<T = f64> {
    height: usize,
    width: usize,
    values: Vec<T>,
}

impl<T: Scalar> DepthMap<T> {
    pub fn new(height: usize, width: usize, values: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values for {height}x{width}", height * width),
                actual: format!("{} values", values.len()),
            });
        }
        if let Some(i) = values.iter().position(|v| !(*v > T::zero() && v.is_finite())) {
            return Err(Error::Argument(format!("depth value {} at index {i} is not positive", values[i])));
        }
        Ok(Self { height, width, values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

impl<T: Scalar> TryFrom<GrayMap<T>> for DepthMap<T> {
    type Error = Error;

    fn try_from(map: GrayMap<T>) -> Result<Self> {
        Self::new(map.height, map.width, map.values)
    }
}

fn mean<T: Scalar>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |a, v| a + *v) / T::of_usize(values.len())
}

fn check_dims(pred: (usize, usize), gt: (usize, usize)) -> Result<()> {
    if pred != gt {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{} (ground truth)", gt.0, gt.1),
            actual: format!("{}x{} (prediction)", pred.0, pred.1),
        });
    }
    Ok(())
}

pub fn mae<T: Scalar>(pred: &GrayMap<T>, gt: &GrayMap<T>) -> Result<T> {
    check_dims((pred.height, pred.width), (gt.height, gt.width))?;
    let sum = pred.values.iter().zip(&gt.values).fold(T::zero(), |a, (p, g)| a + (*p - *g).abs());
    Ok(sum / T::of_usize(pred.values.len()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FMeasure<T = f64> {
    pub value: T,
    pub precision: T,
    pub recall: T,
    /// Adaptive binarization threshold applied to the prediction.
    pub threshold: T,
    /// Ground truth had no positives; `value` is reported as 0.
    pub recall_undefined: bool,
}

/// `(1 + β²)·P·R / (β²·P + R)`, or 0 when the denominator vanishes.
pub fn weighted_f<T: Scalar>(precision: T, recall: T, beta_sq: T) -> T {
    let denom = beta_sq * precision + recall;
    if denom == T::zero() {
        T::zero()
    } else {
        (T::one() + beta_sq) * precision * recall / denom
    }
}

/// F-measure of `pred` binarized at `min(2·mean(pred), 1)`. Pixels equal to
/// zero are never counted as positive, so an all-zero prediction scores 0.
pub fn f_measure<T: Scalar>(pred: &GrayMap<T>, gt_binary: &GrayMap<T>, beta_sq: T) -> Result<FMeasure<T>> {
    check_dims((pred.height, pred.width), (gt_binary.height, gt_binary.width))?;
    if gt_binary.values.iter().any(|v| *v != T::zero() && *v != T::one()) {
        return Err(Error::Argument("ground truth for F-measure must be binary".into()));
    }
    let threshold = (pred.mean() + pred.mean()).min(T::one());
    let (mut tp, mut predicted, mut actual) = (0usize, 0usize, 0usize);
    for (p, g) in pred.values.iter().zip(&gt_binary.values) {
        let positive = *p >= threshold && *p > T::zero();
        let truth = *g == T::one();
        predicted += positive as usize;
        actual += truth as usize;
        tp += (positive && truth) as usize;
    }
    let ratio = |num: usize, den: usize| if den == 0 { T::zero() } else { T::of_usize(num) / T::of_usize(den) };
    let precision = ratio(tp, predicted);
    let recall = ratio(tp, actual);
    let recall_undefined = actual == 0;
    let value = if recall_undefined { T::zero() } else { weighted_f(precision, recall, beta_sq) };
    Ok(FMeasure { value, precision, recall, threshold, recall_undefined })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthMetrics<T = f64> {
    pub delta1: T,
    pub delta2: T,
    pub delta3: T,
    pub rel: T,
    pub rmse: T,
}

pub fn depth_metrics<T: Scalar>(pred: &DepthMap<T>, gt: &DepthMap<T>) -> Result<DepthMetrics<T>> {
    check_dims((pred.height, pred.width), (gt.height, gt.width))?;
    let base = T::of(DELTA_BASE);
    let thresholds = [base, base * base, base * base * base];
    let mut hits = [0usize; 3];
    let (mut rel, mut sq) = (T::zero(), T::zero());
    for (p, g) in pred.values.iter().zip(&gt.values) {
        let ratio = (*p / *g).max(*g / *p);
        for (hit, t) in hits.iter_mut().zip(thresholds) {
            *hit += (ratio < t) as usize;
        }
        let diff = *p - *g;
        rel = rel + diff.abs() / *g;
        sq = sq + diff * diff;
    }
    let n = T::of_usize(pred.values.len());
    Ok(DepthMetrics {
        delta1: T::of_usize(hits[0]) / n,
        delta2: T::of_usize(hits[1]) / n,
        delta3: T::of_usize(hits[2]) / n,
        rel: rel / n,
        rmse: (sq / n).sqrt(),
    })
}

/// One line of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportRecord {
    Metric { pair: String, metric: String, value: f64 },
    Skipped { pair: String, skipped: String },
}

impl ReportRecord {
    fn metric(pair: &str, metric: &str, value: f64) -> Self {
        ReportRecord::Metric { pair: pair.into(), metric: metric.into(), value }
    }
}

pub fn report_jsonl(records: &[ReportRecord]) -> String {
    to_jsonl(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalKind {
    /// MAE and F-measure.
    #[default]
    Saliency,
    /// δ1..δ3, REL and RMSE.
    Depth,
}

fn by_stem(dir: &Path) -> Result<BTreeMap<String, std::path::PathBuf>> {
    Ok(list_images(dir)?.into_iter().filter_map(|p| Some((p.file_stem()?.to_string_lossy().into_owned(), p))).collect())
}

/// Scores every prediction in `pred_dir` against the ground-truth file with
/// the same stem in `gt_dir`. Unmatched or unreadable pairs become skip
/// records.
pub fn evaluate_dirs(pred_dir: &Path, gt_dir: &Path, kind: EvalKind) -> Result<Vec<ReportRecord>> {
    let preds = by_stem(pred_dir)?;
    let gts = by_stem(gt_dir)?;
    let mut records = Vec::new();
    for (stem, pred_path) in &preds {
        let Some(gt_path) = gts.get(stem) else {
            records.push(ReportRecord::Skipped { pair: stem.clone(), skipped: "missing ground truth".into() });
            continue;
        };
        match score_pair(pred_path, gt_path, kind) {
            Ok(mut r) => records.extend(r.drain(..).map(|(m, v)| ReportRecord::metric(stem, m, v))),
            Err(e) => records.push(ReportRecord::Skipped { pair: stem.clone(), skipped: e.to_string() }),
        }
    }
    for stem in gts.keys().filter(|s| !preds.contains_key(*s)) {
        records.push(ReportRecord::Skipped { pair: stem.clone(), skipped: "missing prediction".into() });
    }
    Ok(records)
}

fn score_pair(pred_path: &Path, gt_path: &Path, kind: EvalKind) -> Result<Vec<(&'static str, f64)>> {
    let pred = GrayMap::from(read_image::<f64>(pred_path)?);
    let gt = GrayMap::from(read_image::<f64>(gt_path)?);
    match kind {
        EvalKind::Saliency => {
            let f = f_measure(&pred, &gt.binarize(0.5), DEFAULT_BETA_SQ)?;
            Ok(vec![("mae", mae(&pred, &gt)?), ("f_measure", f.value)])
        }
        EvalKind::Depth => {
            let d = depth_metrics(&DepthMap::try_from(pred)?, &DepthMap::try_from(gt)?)?;
            Ok(vec![("delta1", d.delta1), ("delta2", d.delta2), ("delta3", d.delta3), ("rel", d.rel), ("rmse", d.rmse)])
        }
    }
}
