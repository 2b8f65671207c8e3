//! DCT sharpness features and the per-pixel blur map.
//!
//! For every pixel a centered `m`×`m` patch is transformed with an
//! orthonormal 2-D DCT-II, both as observed and after re-blurring with a
//! known Gaussian. Coefficients on each anti-diagonal (same total
//! frequency) are averaged, the two frequency profiles are divided, and the
//! resulting ratio profile is collapsed into a single band-weighted score
//! (the DCR) that is squashed into `[0, 1)`. Sharp patches lose much more
//! high-frequency energy to the re-blur than already-blurred ones, so they
//! score higher.
//!
//! The raw map is then refined by a non-local weighted mean driven by
//! low-order DCT descriptors, and finally cleaned with a double threshold.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{convolve_raw, default_radius, reflect, GaussianKernel, GrayImage};

/// Floor applied to the re-blurred profile before dividing.
pub const RATIO_FLOOR: f64 = 1e-2;

/// Precomputed orthonormal DCT-II basis for `m`-point transforms.
#[derive(Clone, Debug)]
pub struct DctPlan {
    m: usize,
    // basis[k * m + u] = α(k) cos(π k (2u + 1) / 2m)
    basis: Vec<f64>,
}

impl DctPlan {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("DCT size must be >= 1"));
        }
        let mut basis = Vec::with_capacity(m * m);
        for k in 0..m {
            let alpha = if k == 0 {
                (1.0 / m as f64).sqrt()
            } else {
                (2.0 / m as f64).sqrt()
            };
            for u in 0..m {
                basis.push(alpha * (PI * k as f64 * (2 * u + 1) as f64 / (2 * m) as f64).cos());
            }
        }
        Ok(Self { m, basis })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    /// `B · P · Bᵀ` for a row-major `m`×`m` block.
    pub fn forward(&self, block: &[f64]) -> Vec<f64> {
        let m = self.m;
        debug_assert_eq!(block.len(), m * m);
        // rows first: tmp[u][y] = Σ_v P[u][v] B[y][v]
        let mut tmp = vec![0.0; m * m];
        for u in 0..m {
            let row = &block[u * m..(u + 1) * m];
            for y in 0..m {
                let b = &self.basis[y * m..(y + 1) * m];
                tmp[u * m + y] = row.iter().zip(b).map(|(p, c)| p * c).sum();
            }
        }
        let mut out = vec![0.0; m * m];
        for x in 0..m {
            let b = &self.basis[x * m..(x + 1) * m];
            for u in 0..m {
                let bu = b[u];
                let t = &tmp[u * m..(u + 1) * m];
                let o = &mut out[x * m..(x + 1) * m];
                for y in 0..m {
                    o[y] += bu * t[y];
                }
            }
        }
        out
    }

    /// `Bᵀ · C · B`, the exact inverse of [`forward`](Self::forward).
    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut tmp = vec![0.0; m * m];
        for x in 0..m {
            for v in 0..m {
                let mut acc = 0.0;
                for y in 0..m {
                    acc += coeffs[x * m + y] * self.basis[y * m + v];
                }
                tmp[x * m + v] = acc;
            }
        }
        let mut out = vec![0.0; m * m];
        for u in 0..m {
            for v in 0..m {
                let mut acc = 0.0;
                for x in 0..m {
                    acc += self.basis[x * m + u] * tmp[x * m + v];
                }
                out[u * m + v] = acc;
            }
        }
        out
    }
}

/// `m`×`m` DCT coefficient block, row-major; `coeffs[0]` is the DC term.
#[derive(Clone, Debug, PartialEq)]
pub struct DctMatrix {
    m: usize,
    coeffs: Vec<f64>,
}

impl DctMatrix {
    pub fn new(m: usize, coeffs: Vec<f64>) -> Result<Self> {
        if m == 0 || coeffs.len() != m * m {
            return Err(Error::shape(format!("{} coefficients for m = {m}", coeffs.len())));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("non-finite DCT coefficient"));
        }
        Ok(Self { m, coeffs })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Zero-based (row, column) access.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.coeffs[x * self.m + y]
    }
}

pub fn dct2(patch: &GrayImage, m: usize) -> Result<DctMatrix> {
    if patch.height() != m || patch.width() != m {
        return Err(Error::shape(format!(
            "expected a {m}x{m} patch, got {}x{}",
            patch.height(),
            patch.width()
        )));
    }
    let plan = DctPlan::new(m)?;
    Ok(DctMatrix {
        m,
        coeffs: plan.forward(patch.data()),
    })
}

pub fn idct2(coeffs: &DctMatrix) -> Vec<f64> {
    DctPlan::new(coeffs.m)
        .expect("DctMatrix has m >= 1")
        .inverse(&coeffs.coeffs)
}

/// Frequency profile of length `2m − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SharpnessVector(Vec<f64>);

impl SharpnessVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len().is_multiple_of(2) {
            return Err(Error::shape(format!(
                "profile length must be 2m-1, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite profile entry"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Mean of the coefficients on each anti-diagonal `u + v = k`.
pub fn freq_average(c: &DctMatrix) -> SharpnessVector {
    SharpnessVector(anti_diagonal_means(c.m, &c.coeffs))
}

fn anti_diagonal_means(m: usize, coeffs: &[f64]) -> Vec<f64> {
    let n = 2 * m - 1;
    let mut sums = vec![0.0; n];
    for u in 0..m {
        for v in 0..m {
            sums[u + v] += coeffs[u * m + v];
        }
    }
    for (k, s) in sums.iter_mut().enumerate() {
        let count = k.min(n - 1 - k) + 1;
        *s /= count as f64;
    }
    sums
}

/// `|c| / max(|c_a|, floor)` elementwise.
pub fn sharpness_ratio(c: &SharpnessVector, c_a: &SharpnessVector, floor: f64) -> Result<SharpnessVector> {
    if c.len() != c_a.len() {
        return Err(Error::shape(format!(
            "profile lengths differ: {} vs {}",
            c.len(),
            c_a.len()
        )));
    }
    if !(floor > 0.0) {
        return Err(Error::domain(format!("ratio floor must be > 0, got {floor}")));
    }
    Ok(SharpnessVector(ratio(&c.0, &c_a.0, floor)))
}

fn ratio(c: &[f64], c_a: &[f64], floor: f64) -> Vec<f64> {
    c.iter().zip(c_a).map(|(x, xa)| x.abs() / xa.abs().max(floor)).collect()
}

/// Band split and weights for the DCR, plus the squashing constants.
#[derive(Clone, Debug, PartialEq)]
pub struct DcrParams {
    /// First index (1-based) of the middle band.
    pub l: usize,
    /// First index (1-based) of the high band.
    pub h: usize,
    pub a: f64,
    pub b: f64,
    pub y: f64,
    pub map_b: f64,
    pub map_base: f64,
}

impl DcrParams {
    /// Thirds of the `2m − 1` profile, unit weights.
    pub fn for_patch(m: usize) -> Self {
        let n = (2 * m).saturating_sub(1);
        Self {
            l: n.div_ceil(3) + 1,
            h: (2 * n).div_ceil(3) + 1,
            a: 1.0,
            b: 1.0,
            y: 1.0,
            map_b: 0.4,
            map_base: std::f64::consts::E,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(1 < self.l && self.l < self.h && self.h <= n) {
            return Err(Error::domain(format!(
                "band split needs 1 < l < h <= n, got l={} h={} n={n}",
                self.l, self.h
            )));
        }
        self.validate_weights()
    }

    fn validate_weights(&self) -> Result<()> {
        let ws = [self.a, self.b, self.y];
        if ws.iter().any(|w| !(*w >= 0.0)) || ws.iter().sum::<f64>() <= 0.0 {
            return Err(Error::domain(format!(
                "band weights must be >= 0 with a positive sum, got {ws:?}"
            )));
        }
        if !(self.map_b > 0.0) {
            return Err(Error::domain(format!(
                "mapping constant must be > 0, got {}",
                self.map_b
            )));
        }
        if !(self.map_base > 1.0) {
            return Err(Error::domain(format!(
                "mapping base must be > 1, got {}",
                self.map_base
            )));
        }
        Ok(())
    }
}

impl Default for DcrParams {
    fn default() -> Self {
        Self::for_patch(8)
    }
}

/// Band-weighted mean of a profile.
pub fn dcr(r: &SharpnessVector, params: &DcrParams) -> Result<f64> {
    params.validate(r.len())?;
    Ok(dcr_unchecked(&r.0, params))
}

fn dcr_unchecked(r: &[f64], p: &DcrParams) -> f64 {
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    p.a * mean(&r[..p.l - 1]) + p.b * mean(&r[p.l - 1..p.h - 1]) + p.y * mean(&r[p.h - 1..])
}

/// Squashes a DCR into `[0, 1)`: `(1 − ξ^(−bD)) / (1 + ξ^(−bD))`.
pub fn map_dcr(d: f64, params: &DcrParams) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::domain(format!("DCR must be >= 0, got {d}")));
    }
    params.validate_weights()?;
    Ok(map_unchecked(d, params))
}

#[inline]
fn map_unchecked(d: f64, p: &DcrParams) -> f64 {
    // identical to the ratio form, without overflow for large D
    (0.5 * p.map_b * d * p.map_base.ln()).tanh()
}

/// Low-order DCT coefficients with `x + y − 1 <= m_max` (1-based), row-major.
pub fn alg1_descriptors(patch: &GrayImage, m: usize, m_max: usize) -> Result<Vec<f64>> {
    check_order(m, m_max)?;
    let c = dct2(patch, m)?;
    Ok(select_descriptors(m, m_max, &c.coeffs))
}

fn check_order(m: usize, m_max: usize) -> Result<()> {
    if m_max < 1 || m_max > 2 * m - 1 {
        return Err(Error::domain(format!(
            "descriptor order must be in 1..={}, got {m_max}",
            2 * m - 1
        )));
    }
    Ok(())
}

fn select_descriptors(m: usize, m_max: usize, coeffs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(descriptor_count(m, m_max));
    for x in 0..m {
        for y in 0..m {
            if x + y < m_max {
                out.push(coeffs[x * m + y]);
            }
        }
    }
    out
}

/// Number of descriptors for a given patch size and order bound.
pub fn descriptor_count(m: usize, m_max: usize) -> usize {
    (0..m)
        .flat_map(|x| (0..m).map(move |y| x + y))
        .filter(|s| *s < m_max)
        .count()
}

/// Search windows and weighting for the non-local refinement.
#[derive(Clone, Debug, PartialEq)]
pub struct RefineParams {
    pub min_window: usize,
    pub max_window: usize,
    pub f_dct: f64,
    pub alpha_w: f64,
    pub beta_w: f64,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            min_window: 5,
            max_window: 11,
            f_dct: 10.0,
            alpha_w: 0.5,
            beta_w: 0.5,
        }
    }
}

impl RefineParams {
    pub fn validate(&self) -> Result<()> {
        let odd = |w: usize| w >= 3 && w % 2 == 1;
        if !odd(self.min_window) || !odd(self.max_window) || self.min_window > self.max_window {
            return Err(Error::domain(format!(
                "windows must be odd, >= 3 and min <= max, got {} / {}",
                self.min_window, self.max_window
            )));
        }
        if !(self.f_dct > 0.0) {
            return Err(Error::domain(format!(
                "filtering parameter must be > 0, got {}",
                self.f_dct
            )));
        }
        if !(self.alpha_w >= 0.0 && self.beta_w >= 0.0) || self.alpha_w + self.beta_w <= 0.0 {
            return Err(Error::domain("combination weights must be >= 0 and not both 0"));
        }
        Ok(())
    }
}

/// Per-pixel sharpness in `[0, 1]`; higher means sharper.
#[derive(Clone, Debug, PartialEq)]
pub struct BlurMap(GrayImage);

impl BlurMap {
    pub fn new(image: GrayImage) -> Self {
        Self(image)
    }

    pub fn from_values(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        GrayImage::new(height, width, values).map(Self)
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn values(&self) -> &[f64] {
        self.0.data()
    }

    pub fn as_image(&self) -> &GrayImage {
        &self.0
    }

    pub fn into_image(self) -> GrayImage {
        self.0
    }

    pub fn mean(&self) -> f64 {
        self.values().iter().sum::<f64>() / self.values().len() as f64
    }
}

/// Descriptor vectors for every pixel of a map, `len` values each.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorField {
    height: usize,
    width: usize,
    len: usize,
    values: Vec<f64>,
}

impl DescriptorField {
    pub fn new(height: usize, width: usize, len: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width * len {
            return Err(Error::shape(format!(
                "{} descriptor values for {height}x{width}x{len}",
                values.len()
            )));
        }
        Ok(Self {
            height,
            width,
            len,
            values,
        })
    }

    /// Same descriptor at every pixel.
    pub fn uniform(height: usize, width: usize, descriptor: &[f64]) -> Self {
        let values = descriptor
            .iter()
            .copied()
            .cycle()
            .take(height * width * descriptor.len())
            .collect();
        Self {
            height,
            width,
            len: descriptor.len(),
            values,
        }
    }

    pub fn descriptor_len(&self) -> usize {
        self.len
    }

    pub fn at(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.width + col) * self.len;
        &self.values[start..start + self.len]
    }
}

/// Non-local refinement: each pixel becomes a blend of two descriptor-weighted
/// window means (a small and a large search window).
pub fn refine_map(raw: &BlurMap, descriptors: &DescriptorField, params: &RefineParams) -> Result<BlurMap> {
    params.validate()?;
    let (h, w) = (raw.height(), raw.width());
    if descriptors.height != h || descriptors.width != w {
        return Err(Error::shape(format!(
            "descriptor field {}x{} does not match map {h}x{w}",
            descriptors.height, descriptors.width
        )));
    }
    let img = raw.as_image();
    let rmin = (params.min_window / 2) as isize;
    let rmax = (params.max_window / 2) as isize;
    let inv_f = 1.0 / params.f_dct;
    let wsum = params.alpha_w + params.beta_w;

    let rows: Vec<Vec<f64>> = (0..h)
        .into_par_iter()
        .map(|row| {
            let mut out = Vec::with_capacity(w);
            for col in 0..w {
                let center = descriptors.at(row, col);
                let (mut n_min, mut d_min, mut n_max, mut d_max) = (0.0, 0.0, 0.0, 0.0);
                for dy in -rmax..=rmax {
                    let rr = reflect(row as isize + dy, h);
                    for dx in -rmax..=rmax {
                        let cc = reflect(col as isize + dx, w);
                        let other = descriptors.at(rr, cc);
                        let dist: f64 = center.iter().zip(other).map(|(a, b)| (b - a) * (b - a)).sum();
                        let wt = (-dist * inv_f).exp();
                        let v = img.get(rr, cc);
                        n_max += wt * v;
                        d_max += wt;
                        if dy.abs() <= rmin && dx.abs() <= rmin {
                            n_min += wt * v;
                            d_min += wt;
                        }
                    }
                }
                let v = (params.alpha_w * (n_min / d_min) + params.beta_w * (n_max / d_max)) / wsum;
                out.push(v);
            }
            out
        })
        .collect();
    Ok(BlurMap(GrayImage::from_filtered(h, w, rows.concat())))
}

/// Keeps values `>= th1` or `<= th2`; everything in between becomes 0.
pub fn double_threshold(map: &BlurMap, th1: f64, th2: f64) -> Result<BlurMap> {
    if !(0.0 <= th2 && th2 <= th1 && th1 <= 1.0) {
        return Err(Error::domain(format!(
            "thresholds need 0 <= th2 <= th1 <= 1, got th1={th1} th2={th2}"
        )));
    }
    let values = map
        .values()
        .iter()
        .map(|&v| if v >= th1 || v <= th2 { v } else { 0.0 })
        .collect();
    Ok(BlurMap(GrayImage::from_filtered(map.height(), map.width(), values)))
}

/// Everything that shapes a blur map.
#[derive(Clone, Debug, PartialEq)]
pub struct BlurMapConfig {
    /// Patch side `m`.
    pub patch: usize,
    pub reblur_sigma: f64,
    /// Re-blur kernel radius; `None` means `ceil(3σ)`.
    pub reblur_radius: Option<usize>,
    pub ratio_floor: f64,
    /// Score the ratio profile (true) or the raw observed profile (false).
    pub use_ratio: bool,
    /// `None` derives the band split from the patch size.
    pub dcr: Option<DcrParams>,
    /// Descriptor order bound; `None` means `m`.
    pub descriptor_order: Option<usize>,
    pub refine: Option<RefineParams>,
    /// Double threshold `(th1, th2)`; `None` skips it.
    pub threshold: Option<(f64, f64)>,
}

impl Default for BlurMapConfig {
    fn default() -> Self {
        Self {
            patch: 8,
            reblur_sigma: 1.0,
            reblur_radius: None,
            ratio_floor: RATIO_FLOOR,
            use_ratio: true,
            dcr: None,
            descriptor_order: None,
            refine: Some(RefineParams::default()),
            threshold: Some((0.7, 0.3)),
        }
    }
}

impl BlurMapConfig {
    pub fn dcr_params(&self) -> DcrParams {
        self.dcr.clone().unwrap_or_else(|| DcrParams::for_patch(self.patch))
    }

    pub fn order(&self) -> usize {
        self.descriptor_order.unwrap_or(self.patch)
    }
}

/// Intermediate quantities for one patch.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchSharpness {
    pub observed: Vec<f64>,
    pub reblurred: Vec<f64>,
    pub ratio: Vec<f64>,
    pub dcr: f64,
    pub mapped: f64,
}

/// Reusable per-patch sharpness evaluator (plan, kernel and bands fixed up front).
#[derive(Clone, Debug)]
pub struct SharpnessEstimator {
    plan: DctPlan,
    kernel: GaussianKernel,
    dcr: DcrParams,
    floor: f64,
    use_ratio: bool,
}

impl SharpnessEstimator {
    pub fn new(cfg: &BlurMapConfig) -> Result<Self> {
        if cfg.patch < 2 {
            return Err(Error::domain(format!("patch size must be >= 2, got {}", cfg.patch)));
        }
        let radius = cfg.reblur_radius.unwrap_or_else(|| default_radius(cfg.reblur_sigma));
        let kernel = GaussianKernel::new(cfg.reblur_sigma, radius)?;
        let dcr = cfg.dcr_params();
        dcr.validate(2 * cfg.patch - 1)?;
        if !(cfg.ratio_floor > 0.0) {
            return Err(Error::domain(format!(
                "ratio floor must be > 0, got {}",
                cfg.ratio_floor
            )));
        }
        Ok(Self {
            plan: DctPlan::new(cfg.patch)?,
            kernel,
            dcr,
            floor: cfg.ratio_floor,
            use_ratio: cfg.use_ratio,
        })
    }

    pub fn patch_size(&self) -> usize {
        self.plan.size()
    }

    /// Scores a row-major `m`×`m` patch; also returns its DCT coefficients.
    fn measure_raw(&self, patch: &[f64]) -> (PatchSharpness, Vec<f64>) {
        let m = self.plan.size();
        let coeffs = self.plan.forward(patch);
        let reblurred = convolve_raw(m, m, patch, &self.kernel);
        let coeffs_a = self.plan.forward(&reblurred);
        let observed = anti_diagonal_means(m, &coeffs);
        let reblurred = anti_diagonal_means(m, &coeffs_a);
        let ratio = ratio(&observed, &reblurred, self.floor);
        let dcr = if self.use_ratio {
            dcr_unchecked(&ratio, &self.dcr)
        } else {
            let abs: Vec<f64> = observed.iter().map(|v| v.abs()).collect();
            dcr_unchecked(&abs, &self.dcr)
        };
        let mapped = map_unchecked(dcr, &self.dcr);
        (
            PatchSharpness {
                observed,
                reblurred,
                ratio,
                dcr,
                mapped,
            },
            coeffs,
        )
    }

    pub fn measure(&self, patch: &GrayImage) -> Result<PatchSharpness> {
        let m = self.plan.size();
        if patch.height() != m || patch.width() != m {
            return Err(Error::shape(format!(
                "expected a {m}x{m} patch, got {}x{}",
                patch.height(),
                patch.width()
            )));
        }
        Ok(self.measure_raw(patch.data()).0)
    }
}

/// Unrefined map plus the descriptor field the refinement needs.
pub fn raw_blur_map(image: &GrayImage, cfg: &BlurMapConfig) -> Result<(BlurMap, DescriptorField)> {
    let m = cfg.patch;
    if image.height() < m || image.width() < m {
        return Err(Error::domain(format!(
            "image {}x{} is smaller than the {m}x{m} patch",
            image.height(),
            image.width()
        )));
    }
    let est = SharpnessEstimator::new(cfg)?;
    let order = cfg.order();
    check_order(m, order)?;
    let eta = descriptor_count(m, order);
    let (h, w) = (image.height(), image.width());
    let back = ((m - 1) / 2) as isize;

    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..h)
        .into_par_iter()
        .map(|row| {
            let mut scores = Vec::with_capacity(w);
            let mut descr = Vec::with_capacity(w * eta);
            let mut patch = vec![0.0; m * m];
            for col in 0..w {
                let (top, left) = (row as isize - back, col as isize - back);
                for r in 0..m {
                    for c in 0..m {
                        patch[r * m + c] = image.get_mirrored(top + r as isize, left + c as isize);
                    }
                }
                let (s, coeffs) = est.measure_raw(&patch);
                scores.push(s.mapped);
                descr.extend(select_descriptors(m, order, &coeffs));
            }
            (scores, descr)
        })
        .collect();

    let mut scores = Vec::with_capacity(h * w);
    let mut descr = Vec::with_capacity(h * w * eta);
    for (s, d) in rows {
        scores.extend(s);
        descr.extend(d);
    }
    Ok((
        BlurMap(GrayImage::from_filtered(h, w, scores)),
        DescriptorField::new(h, w, eta, descr)?,
    ))
}

/// Refinement and double threshold, as configured.
pub fn finish_blur_map(raw: BlurMap, descriptors: &DescriptorField, cfg: &BlurMapConfig) -> Result<BlurMap> {
    let refined = match &cfg.refine {
        Some(p) => refine_map(&raw, descriptors, p)?,
        None => raw,
    };
    match cfg.threshold {
        Some((th1, th2)) => double_threshold(&refined, th1, th2),
        None => Ok(refined),
    }
}

pub fn blur_map(image: &GrayImage, cfg: &BlurMapConfig) -> Result<BlurMap> {
    let (raw, descr) = raw_blur_map(image, cfg)?;
    finish_blur_map(raw, &descr, cfg)
}
