//! In-focus segmentation: blur map → PCNN firing → component filtering.

use std::collections::VecDeque;

use crate::dct::{finish_blur_map, raw_blur_map, BlurMap, BlurMapConfig};
use crate::error::{Error, Result};
use crate::image::{bilateral_filter, stats, to_u8, GrayImage, ImageStats};
use crate::pcnn::{run_traced, FireMap, PcnnParams};

/// Binary in-focus mask (1 = in focus). Ground-truth masks may also carry
/// the soft matte they were derived from.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationMask {
    height: usize,
    width: usize,
    bits: Vec<u8>,
    chi: Option<Vec<f64>>,
}

impl SegmentationMask {
    pub fn new(height: usize, width: usize, bits: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || bits.len() != height * width {
            return Err(Error::shape(format!("{} bits for a {height}x{width} mask", bits.len())));
        }
        if bits.iter().any(|b| *b > 1) {
            return Err(Error::domain("mask bits must be 0 or 1"));
        }
        Ok(Self {
            height,
            width,
            bits,
            chi: None,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![0; height * width])
    }

    /// Hard mask from a matte, keeping the matte: bit = (χ >= 0.5).
    pub fn from_matte(matte: &GrayImage) -> Self {
        Self {
            height: matte.height(),
            width: matte.width(),
            bits: matte.data().iter().map(|&c| (c >= 0.5) as u8).collect(),
            chi: Some(matte.data().to_vec()),
        }
    }

    /// Binarizes any grayscale image at 8-bit level 128.
    pub fn from_gray(image: &GrayImage) -> Self {
        Self {
            height: image.height(),
            width: image.width(),
            bits: image.data().iter().map(|&v| (to_u8(v) >= 128) as u8).collect(),
            chi: None,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn chi(&self) -> Option<&[f64]> {
        self.chi.as_deref()
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.width + col]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b == 1).count()
    }

    pub fn same_shape(&self, other: &SegmentationMask) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// 0.0 / 1.0 image, for writing as a black/white PGM.
    pub fn to_image(&self) -> GrayImage {
        GrayImage::new(self.height, self.width, self.bits.iter().map(|&b| b as f64).collect())
            .expect("mask shape is valid")
    }
}

/// `χ·fg + (1 − χ)·bg` pixelwise.
pub fn compose(fg: &GrayImage, bg: &GrayImage, chi: &GrayImage) -> Result<GrayImage> {
    if !fg.same_shape(bg) || !fg.same_shape(chi) {
        return Err(Error::shape(format!(
            "compose needs equal shapes, got {}x{}, {}x{}, {}x{}",
            fg.height(),
            fg.width(),
            bg.height(),
            bg.width(),
            chi.height(),
            chi.width()
        )));
    }
    let data = fg
        .data()
        .iter()
        .zip(bg.data())
        .zip(chi.data())
        .map(|((f, b), c)| (c * f + (1.0 - c) * b).clamp(0.0, 1.0))
        .collect();
    GrayImage::new(fg.height(), fg.width(), data)
}

/// 8-connected component labels; 0 is background and labels are assigned
/// in row-major order of each component's first pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabels {
    pub labels: Vec<u32>,
    pub count: u32,
}

impl ComponentLabels {
    /// Pixel count per label, index 0 = background.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count as usize + 1];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }
}

pub fn connected_components(mask: &SegmentationMask) -> ComponentLabels {
    let (h, w) = (mask.height as isize, mask.width as isize);
    let mut labels = vec![0u32; mask.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if mask.bits[start] == 0 || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            let (r, c) = ((p / mask.width) as isize, (p % mask.width) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr >= h || cc >= w {
                        continue;
                    }
                    let q = (rr * w + cc) as usize;
                    if mask.bits[q] == 1 && labels[q] == 0 {
                        labels[q] = count;
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    ComponentLabels { labels, count }
}

/// Minimum component size: components must be strictly larger to survive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AreaThreshold {
    Pixels(usize),
    /// Fraction of the image's pixel count, rounded down.
    Fraction(f64),
}

impl AreaThreshold {
    pub fn resolve(&self, pixels: usize) -> usize {
        match *self {
            AreaThreshold::Pixels(n) => n,
            AreaThreshold::Fraction(f) => (f * pixels as f64).floor() as usize,
        }
    }
}

impl Default for AreaThreshold {
    fn default() -> Self {
        AreaThreshold::Fraction(0.001)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub dct: BlurMapConfig,
    pub pcnn: PcnnParams,
    pub area_threshold: AreaThreshold,
    /// A firing wave is a candidate when its mean stimulus reaches this
    /// fraction of the full stimulus range.
    pub candidate_level: f64,
    /// Bilateral smoothing of the raw map, `(sigma_spatial, sigma_range)`.
    pub bilateral: Option<(f64, f64)>,
}

/// Lower threshold as a fraction of the upper one.
pub const THRESHOLD_RATIO: f64 = 0.4;

impl Default for PipelineConfig {
    fn default() -> Self {
        let th1 = 0.7;
        Self {
            dct: BlurMapConfig {
                threshold: Some((th1, THRESHOLD_RATIO * th1)),
                ..BlurMapConfig::default()
            },
            pcnn: PcnnParams::default(),
            area_threshold: AreaThreshold::default(),
            candidate_level: 0.5,
            bilateral: None,
        }
    }
}

/// Candidate waves → 8-connected components → size filter.
pub fn classify_pixels(fire: &FireMap, stimulus: &GrayImage, cfg: &PipelineConfig) -> Result<SegmentationMask> {
    if fire.height() != stimulus.height() || fire.width() != stimulus.width() {
        return Err(Error::shape("fire map and stimulus differ in shape"));
    }
    let waves = fire.waves() as usize;
    let mut sum = vec![0.0; waves + 1];
    let mut count = vec![0usize; waves + 1];
    for (&k, &s) in fire.values().iter().zip(stimulus.data()) {
        sum[k as usize] += s;
        count[k as usize] += 1;
    }
    // wave 0 holds the never-fired neurons and is never a candidate
    let candidate: Vec<bool> = (0..=waves)
        .map(|k| k > 0 && count[k] > 0 && sum[k] / count[k] as f64 >= cfg.candidate_level)
        .collect();
    let bits: Vec<u8> = fire.values().iter().map(|&k| candidate[k as usize] as u8).collect();
    let candidates = SegmentationMask::new(fire.height(), fire.width(), bits)?;
    Ok(filter_components(
        &candidates,
        cfg.area_threshold.resolve(candidates.len()),
    ))
}

/// Drops every component of `area_threshold` pixels or fewer.
pub fn filter_components(mask: &SegmentationMask, area_threshold: usize) -> SegmentationMask {
    let labels = connected_components(mask);
    let sizes = labels.sizes();
    let bits = labels
        .labels
        .iter()
        .map(|&l| (l != 0 && sizes[l as usize] > area_threshold) as u8)
        .collect();
    SegmentationMask {
        height: mask.height,
        width: mask.width,
        bits,
        chi: None,
    }
}

/// Every intermediate product of one segmentation run.
#[derive(Clone, Debug)]
pub struct SegmentationOutput {
    pub stats: ImageStats,
    pub blur_map: BlurMap,
    pub pcnn: PcnnParams,
    pub fire: FireMap,
    /// Neurons fired per iteration.
    pub trace: Vec<usize>,
    pub mask: SegmentationMask,
}

pub fn segment_detailed(image: &GrayImage, cfg: &PipelineConfig) -> Result<SegmentationOutput> {
    let stats = stats(image);
    let (raw, descriptors) = raw_blur_map(image, &cfg.dct)?;
    let raw = match cfg.bilateral {
        Some((ss, sr)) => BlurMap::new(bilateral_filter(raw.as_image(), ss, sr)?),
        None => raw,
    };
    let blur_map = finish_blur_map(raw, &descriptors, &cfg.dct)?;
    let stimulus = blur_map.as_image();
    let pcnn = cfg.pcnn.adapted_to(stimulus);
    let (fire, trace) = run_traced(stimulus, &pcnn)?;
    let mask = classify_pixels(&fire, stimulus, cfg)?;
    Ok(SegmentationOutput {
        stats,
        blur_map,
        pcnn,
        fire,
        trace,
        mask,
    })
}

pub fn segment(image: &GrayImage, cfg: &PipelineConfig) -> Result<SegmentationMask> {
    segment_detailed(image, cfg).map(|o| o.mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(h: usize, w: usize, bits: &[u8]) -> SegmentationMask {
        SegmentationMask::new(h, w, bits.to_vec()).unwrap()
    }

    #[test]
    fn compose_cases() {
        let fg = GrayImage::filled(2, 3, 0.8).unwrap();
        let bg = GrayImage::filled(2, 3, 0.2).unwrap();
        let one = GrayImage::filled(2, 3, 1.0).unwrap();
        let zero = GrayImage::filled(2, 3, 0.0).unwrap();
        let half = GrayImage::filled(2, 3, 0.5).unwrap();
        assert_eq!(compose(&fg, &bg, &one).unwrap(), fg);
        assert_eq!(compose(&fg, &bg, &zero).unwrap(), bg);
        assert!(compose(&fg, &bg, &half)
            .unwrap()
            .data()
            .iter()
            .all(|v| (v - 0.5).abs() < 1e-15));
        let other = GrayImage::filled(3, 2, 0.5).unwrap();
        assert!(matches!(compose(&fg, &other, &one), Err(Error::Shape(_))));
    }

    #[test]
    fn matte_and_gray_binarization() {
        let matte = GrayImage::new(1, 4, vec![0.0, 0.49, 0.5, 1.0]).unwrap();
        let m = SegmentationMask::from_matte(&matte);
        assert_eq!(m.bits(), &[0, 0, 1, 1]);
        assert!(m.chi().is_some());
        let g = GrayImage::new(1, 3, vec![127.0 / 255.0, 128.0 / 255.0, 1.0]).unwrap();
        assert_eq!(SegmentationMask::from_gray(&g).bits(), &[0, 1, 1]);
    }

    #[test]
    fn components_small_cases() {
        assert_eq!(connected_components(&mask(2, 2, &[0; 4])).count, 0);
        let one = connected_components(&mask(2, 2, &[0, 0, 1, 0]));
        assert_eq!((one.count, one.labels[2]), (1, 1));
        let checker = connected_components(&mask(2, 2, &[1, 0, 0, 1]));
        assert_eq!(checker.count, 1);
        let two = connected_components(&mask(1, 3, &[1, 0, 1]));
        assert_eq!((two.count, two.labels.clone()), (2, vec![1, 0, 2]));
    }

    #[test]
    fn labels_follow_first_pixel_order() {
        // component starting at (0,2) is discovered before the one at (1,0)
        let m = mask(3, 3, &[0, 0, 1, 1, 0, 0, 1, 0, 0]);
        let l = connected_components(&m);
        assert_eq!(l.labels, vec![0, 0, 1, 2, 0, 0, 2, 0, 0]);
    }

    fn fire_with(h: usize, w: usize, f: impl Fn(usize, usize) -> u32) -> FireMap {
        let v = (0..h * w).map(|i| f(i / w, i % w)).collect();
        FireMap::new(h, w, v).unwrap()
    }

    fn cfg(t: usize) -> PipelineConfig {
        PipelineConfig {
            area_threshold: AreaThreshold::Pixels(t),
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn classify_drops_small_components() {
        // a 5x6 block fired in wave 1, plus isolated singletons also in wave 1
        let singles = [(0usize, 15usize), (12, 2), (15, 15), (9, 12)];
        let fire = fire_with(16, 16, |r, c| {
            let block = (2..7).contains(&r) && (3..9).contains(&c);
            if block || singles.contains(&(r, c)) {
                1
            } else {
                4
            }
        });
        let stim = GrayImage::from_fn(16, 16, |r, c| if fire.get(r, c) == 1 { 0.9 } else { 0.1 }).unwrap();
        let out = classify_pixels(&fire, &stim, &cfg(5)).unwrap();
        assert_eq!(out.count_ones(), 30);
        for r in 0..16 {
            for c in 0..16 {
                let block = (2..7).contains(&r) && (3..9).contains(&c);
                assert_eq!(out.get(r, c) == 1, block);
            }
        }
        let unfiltered = classify_pixels(&fire, &stim, &cfg(0)).unwrap();
        assert_eq!(unfiltered.count_ones(), 34);
    }

    #[test]
    fn classify_all_first_wave() {
        let fire = fire_with(4, 4, |_, _| 1);
        let stim = GrayImage::filled(4, 4, 0.8).unwrap();
        let out = classify_pixels(&fire, &stim, &cfg(3)).unwrap();
        assert_eq!(out.count_ones(), 16);
    }

    #[test]
    fn classify_without_candidates_is_empty() {
        let fire = fire_with(4, 4, |_, _| 0);
        let stim = GrayImage::filled(4, 4, 0.0).unwrap();
        assert_eq!(classify_pixels(&fire, &stim, &cfg(0)).unwrap().count_ones(), 0);
    }

    #[test]
    fn area_threshold_resolution() {
        assert_eq!(AreaThreshold::Fraction(0.001).resolve(4096), 4);
        assert_eq!(AreaThreshold::Pixels(7).resolve(10), 7);
    }
}
