//! Precision/recall, PR curves over 8-bit thresholds, F-measure and a
//! dataset harness.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::io::load_gray;
use crate::segment::SegmentationMask;

pub const ALPHA_SQ: f64 = 0.3;
pub const THRESHOLDS: usize = 256;

/// What an empty denominator yields.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EmptyPolicy {
    /// Empty selection ⇒ P = 1, empty ground truth ⇒ R = 1.
    #[default]
    One,
    Nan,
}

impl EmptyPolicy {
    fn ratio(self, num: usize, den: usize) -> f64 {
        match (den, self) {
            (0, EmptyPolicy::One) => 1.0,
            (0, EmptyPolicy::Nan) => f64::NAN,
            _ => num as f64 / den as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrPoint {
    pub threshold: u8,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrCurve {
    points: Vec<PrPoint>,
}

impl PrCurve {
    pub fn points(&self) -> &[PrPoint] {
        &self.points
    }

    /// Point with the highest F (lowest threshold wins ties).
    pub fn best(&self, alpha_sq: f64) -> (PrPoint, f64) {
        let mut best = (
            self.points[0],
            f_alpha(self.points[0].precision, self.points[0].recall, alpha_sq),
        );
        for p in &self.points[1..] {
            let f = f_alpha(p.precision, p.recall, alpha_sq);
            if f > best.1 {
                best = (*p, f);
            }
        }
        best
    }

    /// Threshold-wise mean of several curves.
    pub fn mean(curves: &[PrCurve]) -> Option<PrCurve> {
        if curves.is_empty() {
            return None;
        }
        let n = curves.len() as f64;
        let points = (0..THRESHOLDS)
            .map(|t| PrPoint {
                threshold: t as u8,
                precision: curves.iter().map(|c| c.points[t].precision).sum::<f64>() / n,
                recall: curves.iter().map(|c| c.points[t].recall).sum::<f64>() / n,
            })
            .collect();
        Some(PrCurve { points })
    }

    /// `t,precision,recall` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,precision,recall\n");
        for p in &self.points {
            out.push_str(&format!("{},{:.6},{:.6}\n", p.threshold, p.precision, p.recall));
        }
        out
    }
}

fn check_shapes(mask: &SegmentationMask, gt: &SegmentationMask) -> Result<()> {
    if !mask.same_shape(gt) {
        return Err(Error::shape(format!(
            "mask is {}x{}, ground truth is {}x{}",
            mask.height(),
            mask.width(),
            gt.height(),
            gt.width()
        )));
    }
    Ok(())
}

pub fn precision_recall(mask: &SegmentationMask, gt: &SegmentationMask) -> Result<(f64, f64)> {
    precision_recall_with(mask, gt, EmptyPolicy::One)
}

pub fn precision_recall_with(
    mask: &SegmentationMask,
    gt: &SegmentationMask,
    policy: EmptyPolicy,
) -> Result<(f64, f64)> {
    check_shapes(mask, gt)?;
    let (mut s, mut g, mut both) = (0, 0, 0);
    for (&a, &b) in mask.bits().iter().zip(gt.bits()) {
        s += a as usize;
        g += b as usize;
        both += (a & b) as usize;
    }
    Ok((policy.ratio(both, s), policy.ratio(both, g)))
}

/// 256-point curve; pixel selected at threshold t when `value·255 >= t`.
pub fn pr_curve(map: &GrayImage, gt: &SegmentationMask) -> Result<PrCurve> {
    pr_curve_with(map, gt, EmptyPolicy::One)
}

pub fn pr_curve_with(map: &GrayImage, gt: &SegmentationMask, policy: EmptyPolicy) -> Result<PrCurve> {
    if map.height() != gt.height() || map.width() != gt.width() {
        return Err(Error::shape(format!(
            "map is {}x{}, ground truth is {}x{}",
            map.height(),
            map.width(),
            gt.height(),
            gt.width()
        )));
    }
    // histogram of the highest threshold each pixel passes, split by gt
    let mut hist = [[0usize; THRESHOLDS]; 2];
    for (&v, &g) in map.data().iter().zip(gt.bits()) {
        let top = ((v * 255.0 + 1e-9).floor() as usize).min(THRESHOLDS - 1);
        hist[g as usize][top] += 1;
    }
    let g_total: usize = hist[1].iter().sum();
    let (mut sel, mut hit) = (0, 0);
    let mut points = vec![
        PrPoint {
            threshold: 0,
            precision: 0.0,
            recall: 0.0
        };
        THRESHOLDS
    ];
    for t in (0..THRESHOLDS).rev() {
        sel += hist[0][t] + hist[1][t];
        hit += hist[1][t];
        points[t] = PrPoint {
            threshold: t as u8,
            precision: policy.ratio(hit, sel),
            recall: policy.ratio(hit, g_total),
        };
    }
    Ok(PrCurve { points })
}

/// Weighted harmonic mean `(1+α²)PR / (α²P + R)`; 0 when the denominator is 0.
pub fn f_alpha(precision: f64, recall: f64, alpha_sq: f64) -> f64 {
    let den = alpha_sq * precision + recall;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + alpha_sq) * precision * recall / den
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageScore {
    pub path: PathBuf,
    pub best_t: u8,
    pub precision: f64,
    pub recall: f64,
    pub f_alpha: f64,
    pub curve: PrCurve,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Skipped {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub alpha_sq: f64,
    pub images: Vec<ImageScore>,
    pub skipped: Vec<Skipped>,
    /// Best point of the threshold-wise mean curve.
    pub pooled: Option<(PrPoint, f64)>,
    pub mean_curve: Option<PrCurve>,
}

impl EvalReport {
    /// Mean over images of each image's best F.
    pub fn mean_best(&self) -> Option<f64> {
        if self.images.is_empty() {
            None
        } else {
            Some(self.images.iter().map(|s| s.f_alpha).sum::<f64>() / self.images.len() as f64)
        }
    }

    /// Per-image rows, then `mean_best` and `pooled` summary rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let row = |w: &mut csv::Writer<Vec<u8>>, cells: [String; 5]| {
            w.write_record(&cells).map_err(|e| Error::domain(e.to_string()))
        };
        row(
            &mut w,
            ["path", "best_t", "precision", "recall", "f_alpha"].map(String::from),
        )?;
        for s in &self.images {
            row(
                &mut w,
                [
                    s.path.display().to_string(),
                    s.best_t.to_string(),
                    format!("{:.6}", s.precision),
                    format!("{:.6}", s.recall),
                    format!("{:.6}", s.f_alpha),
                ],
            )?;
        }
        if let Some(mean) = self.mean_best() {
            row(
                &mut w,
                [
                    "mean_best".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("{mean:.6}"),
                ],
            )?;
        }
        if let Some((p, f)) = self.pooled {
            row(
                &mut w,
                [
                    "pooled".into(),
                    p.threshold.to_string(),
                    format!("{:.6}", p.precision),
                    format!("{:.6}", p.recall),
                    format!("{f:.6}"),
                ],
            )?;
        }
        let bytes = w.into_inner().map_err(|e| Error::domain(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Reads a two-column index (`image<TAB>gt` or `image,gt`); blank lines and
/// `#` comments are ignored, relative paths resolve against the index's folder.
pub fn read_index(path: impl AsRef<Path>) -> Result<Vec<(PathBuf, PathBuf)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(['\t', ',']).map(str::trim).collect();
        if cells.len() != 2 {
            return Err(Error::Parse {
                line: idx + 1,
                reason: format!("expected 2 columns, found {}", cells.len()),
            });
        }
        if idx == 0 && cells == ["image", "gt"] {
            continue;
        }
        pairs.push((base.join(cells[0]), base.join(cells[1])));
    }
    Ok(pairs)
}

/// Scores a method over image/ground-truth pairs. Unreadable or mismatched
/// pairs are skipped and listed in the report.
pub fn evaluate_dataset<F>(index: &[(PathBuf, PathBuf)], method: F, alpha_sq: f64) -> EvalReport
where
    F: Fn(&GrayImage) -> Result<GrayImage> + Sync,
{
    evaluate_dataset_with(index, method, alpha_sq, EmptyPolicy::One)
}

pub fn evaluate_dataset_with<F>(
    index: &[(PathBuf, PathBuf)],
    method: F,
    alpha_sq: f64,
    policy: EmptyPolicy,
) -> EvalReport
where
    F: Fn(&GrayImage) -> Result<GrayImage> + Sync,
{
    let results: Vec<std::result::Result<ImageScore, Skipped>> = index
        .par_iter()
        .map(|(image, gt)| {
            score_pair(image, gt, &method, alpha_sq, policy).map_err(|e| Skipped {
                path: image.clone(),
                reason: e.to_string(),
            })
        })
        .collect();
    let mut images = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(s) => images.push(s),
            Err(s) => skipped.push(s),
        }
    }
    let curves: Vec<PrCurve> = images.iter().map(|s| s.curve.clone()).collect();
    let mean_curve = PrCurve::mean(&curves);
    let pooled = mean_curve.as_ref().map(|c| c.best(alpha_sq));
    EvalReport {
        alpha_sq,
        images,
        skipped,
        pooled,
        mean_curve,
    }
}

fn score_pair<F>(image: &Path, gt: &Path, method: &F, alpha_sq: f64, policy: EmptyPolicy) -> Result<ImageScore>
where
    F: Fn(&GrayImage) -> Result<GrayImage>,
{
    let img = load_gray(image)?;
    let gt = SegmentationMask::from_gray(&load_gray(gt)?);
    let map = method(&img)?;
    let curve = pr_curve_with(&map, &gt, policy)?;
    let (p, f) = curve.best(alpha_sq);
    Ok(ImageScore {
        path: image.to_path_buf(),
        best_t: p.threshold,
        precision: p.precision,
        recall: p.recall,
        f_alpha: f,
        curve,
    })
}
