//! Grayscale rasters and the low-level filters the pipeline is built on.
//!
//! All filters use symmetric (mirror) border extension: the sample just
//! outside the edge repeats the edge pixel, `... c b a | a b c ...`.

use crate::error::{Error, Result};

/// Single-channel image with intensities in `[0, 1]`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::shape(format!("empty image {height}x{width}")));
        }
        if data.len() != height * width {
            return Err(Error::shape(format!(
                "{} samples for a {height}x{width} image",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain(format!("intensity {v} outside [0, 1]")));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    /// Builds an image from filter output, snapping round-off excursions
    /// (a few ulps past 0 or 1) back into range.
    pub(crate) fn from_filtered(height: usize, width: usize, mut data: Vec<f64>) -> Self {
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        debug_assert_eq!(data.len(), height * width);
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Sample at a possibly out-of-range position, mirrored back inside.
    #[inline]
    pub fn get_mirrored(&self, row: isize, col: isize) -> f64 {
        self.get(reflect(row, self.height), reflect(col, self.width))
    }

    pub fn same_shape(&self, other: &GrayImage) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Copies the `size`×`size` window whose top-left corner is at
    /// (`top`, `left`), mirroring any part that falls outside the image.
    pub fn window(&self, top: isize, left: isize, size: usize) -> GrayImage {
        let mut data = Vec::with_capacity(size * size);
        for r in 0..size as isize {
            for c in 0..size as isize {
                data.push(self.get_mirrored(top + r, left + c));
            }
        }
        GrayImage {
            height: size,
            width: size,
            data,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GrayImage> {
        GrayImage::new(self.height, self.width, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Round-trips every sample through 8-bit storage.
    pub fn quantized(&self) -> GrayImage {
        GrayImage {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| to_u8(v) as f64 / 255.0).collect(),
        }
    }
}

/// Maps an arbitrary index onto `0..n` by symmetric reflection with period `2n`.
#[inline]
pub fn reflect(index: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let k = index.rem_euclid(period);
    (if k < n { k } else { period - 1 - k }) as usize
}

#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Normalized, sampled 2-D Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    sigma: f64,
    radius: usize,
    weights: Vec<f64>,
    // Normalized 1-D factor; `weights[i][j] == axis[i] * axis[j]`.
    axis: Vec<f64>,
}

impl GaussianKernel {
    pub fn new(sigma: f64, radius: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("gaussian sigma must be > 0, got {sigma}")));
        }
        if radius < 1 {
            return Err(Error::domain("gaussian radius must be >= 1"));
        }
        let r = radius as isize;
        let two_s2 = 2.0 * sigma * sigma;
        let mut axis: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / two_s2).exp()).collect();
        let sum: f64 = axis.iter().sum();
        axis.iter_mut().for_each(|w| *w /= sum);

        let side = 2 * radius + 1;
        let mut weights = Vec::with_capacity(side * side);
        for i in -r..=r {
            for j in -r..=r {
                weights.push((-((i * i + j * j) as f64) / two_s2).exp());
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);

        Ok(Self {
            sigma,
            radius,
            weights,
            axis,
        })
    }

    /// Kernel with the default support of `ceil(3σ)`.
    pub fn with_sigma(sigma: f64) -> Result<Self> {
        Self::new(sigma, default_radius(sigma))
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset (`dy`, `dx`) from the center.
    pub fn weight(&self, dy: isize, dx: isize) -> f64 {
        let r = self.radius as isize;
        self.weights[((dy + r) * (2 * r + 1) + dx + r) as usize]
    }
}

pub fn default_radius(sigma: f64) -> usize {
    ((3.0 * sigma).ceil() as usize).max(1)
}

pub fn gaussian_kernel(sigma: f64, radius: usize) -> Result<GaussianKernel> {
    GaussianKernel::new(sigma, radius)
}

/// Convolves with a Gaussian kernel (two separable passes).
pub fn convolve(image: &GrayImage, kernel: &GaussianKernel) -> GrayImage {
    let out = convolve_raw(image.height, image.width, &image.data, kernel);
    GrayImage::from_filtered(image.height, image.width, out)
}

/// Separable mirror-border convolution over a bare row-major buffer.
pub(crate) fn convolve_raw(h: usize, w: usize, data: &[f64], kernel: &GaussianKernel) -> Vec<f64> {
    let r = kernel.radius as isize;
    let axis = &kernel.axis;

    let mut tmp = vec![0.0; h * w];
    for row in 0..h {
        let line = &data[row * w..(row + 1) * w];
        for col in 0..w {
            let mut acc = 0.0;
            for (k, wt) in axis.iter().enumerate() {
                acc += wt * line[reflect(col as isize + k as isize - r, w)];
            }
            tmp[row * w + col] = acc;
        }
    }

    let mut out = vec![0.0; h * w];
    for row in 0..h {
        for (k, wt) in axis.iter().enumerate() {
            let src = reflect(row as isize + k as isize - r, h) * w;
            let dst = row * w;
            for col in 0..w {
                out[dst + col] += wt * tmp[src + col];
            }
        }
    }
    out
}

/// Edge-preserving smoothing: each output pixel is the mean of its
/// `ceil(2σ_s)` neighborhood weighted by spatial and intensity Gaussians.
pub fn bilateral_filter(image: &GrayImage, sigma_spatial: f64, sigma_range: f64) -> Result<GrayImage> {
    if !(sigma_spatial > 0.0) || !(sigma_range > 0.0) {
        return Err(Error::domain(format!(
            "bilateral sigmas must be > 0, got spatial={sigma_spatial} range={sigma_range}"
        )));
    }
    let radius = ((2.0 * sigma_spatial).ceil() as isize).max(1);
    let side = (2 * radius + 1) as usize;
    let inv_s = 1.0 / (2.0 * sigma_spatial * sigma_spatial);
    let inv_r = 1.0 / (2.0 * sigma_range * sigma_range);
    let mut spatial = Vec::with_capacity(side * side);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            spatial.push((-((dy * dy + dx * dx) as f64) * inv_s).exp());
        }
    }

    let (h, w) = (image.height, image.width);
    let mut out = Vec::with_capacity(h * w);
    for row in 0..h as isize {
        for col in 0..w as isize {
            let center = image.get(row as usize, col as usize);
            let (mut num, mut den) = (0.0, 0.0);
            let mut k = 0;
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    let v = image.get_mirrored(row + dy, col + dx);
                    let d = v - center;
                    let wt = spatial[k] * (-d * d * inv_r).exp();
                    num += wt * v;
                    den += wt;
                    k += 1;
                }
            }
            out.push(num / den);
        }
    }
    Ok(GrayImage::from_filtered(h, w, out))
}

/// Global intensity extremes and mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageStats {
    pub high: f64,
    pub low: f64,
    pub avg: f64,
}

pub fn stats(image: &GrayImage) -> ImageStats {
    let (mut high, mut low, mut sum) = (f64::NEG_INFINITY, f64::INFINITY, 0.0);
    for &v in &image.data {
        high = high.max(v);
        low = low.min(v);
        sum += v;
    }
    let avg = (sum / image.data.len() as f64).clamp(low, high);
    ImageStats { high, low, avg }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(h: usize, w: usize, seed: u64) -> GrayImage {
        // xorshift, good enough for test inputs
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        GrayImage::from_fn(h, w, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .unwrap()
    }

    fn brute_convolve(img: &GrayImage, k: &GaussianKernel) -> Vec<f64> {
        let r = k.radius() as isize;
        let mut out = Vec::new();
        for y in 0..img.height() as isize {
            for x in 0..img.width() as isize {
                let mut acc = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        acc += k.weight(dy, dx) * img.get_mirrored(y + dy, x + dx);
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    #[test]
    fn rejects_bad_images() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn reflect_repeats_the_edge() {
        let got: Vec<usize> = (-3..7).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![2, 1, 0, 0, 1, 2, 3, 3, 2, 1]);
        assert_eq!(reflect(-5, 1), 0);
        assert_eq!(reflect(9, 1), 0);
    }

    #[test]
    fn kernel_center_weight_sigma_one() {
        // exp(-(i²+j²)/2) over the 3x3 support, center share
        let k = gaussian_kernel(1.0, 1).unwrap();
        assert!((k.weight(0, 0) - 0.204_180).abs() < 1e-5);
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        for (sigma, radius) in [(0.3, 3), (1.0, 1), (1.7, 5), (4.0, 12)] {
            let k = gaussian_kernel(sigma, radius).unwrap();
            let sum: f64 = k.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let r = radius as isize;
            for dy in -r..=r {
                for dx in -r..=r {
                    let w = k.weight(dy, dx);
                    assert!(w > 0.0);
                    assert_eq!(w, k.weight(-dy, dx));
                    assert_eq!(w, k.weight(dy, -dx));
                    assert_eq!(w, k.weight(dx, dy));
                }
            }
        }
    }

    #[test]
    fn narrow_kernel_is_nearly_a_delta() {
        let k = gaussian_kernel(0.3, 3).unwrap();
        assert!(k.weight(0, 0) > 0.98);
        let img = noise(8, 8, 3);
        let out = convolve(&img, &k);
        let worst = img
            .data()
            .iter()
            .zip(out.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 2e-2, "{worst}");
    }

    #[test]
    fn kernel_rejects_nonpositive_sigma() {
        assert!(matches!(gaussian_kernel(0.0, 2), Err(Error::Domain(_))));
        assert!(matches!(gaussian_kernel(-1.0, 2), Err(Error::Domain(_))));
        assert!(gaussian_kernel(1.0, 0).is_err());
    }

    #[test]
    fn kernel_decreases_with_distance() {
        let k = gaussian_kernel(1.3, 4).unwrap();
        for d in 0..4 {
            assert!(k.weight(0, d) > k.weight(0, d + 1));
            assert!(k.weight(d, d) > k.weight(d + 1, d + 1));
        }
    }

    #[test]
    fn convolve_matches_brute_force() {
        let img = noise(8, 8, 11);
        let k = GaussianKernel::with_sigma(1.5).unwrap();
        let fast = convolve(&img, &k);
        for (a, b) in fast.data().iter().zip(brute_convolve(&img, &k)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn convolve_constant_is_identity() {
        let img = GrayImage::filled(7, 5, 0.5).unwrap();
        let out = convolve(&img, &GaussianKernel::with_sigma(2.0).unwrap());
        for v in out.data() {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn bilateral_constant_is_identity() {
        let img = GrayImage::filled(6, 6, 0.3).unwrap();
        let out = bilateral_filter(&img, 1.5, 0.1).unwrap();
        for v in out.data() {
            assert!((v - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn bilateral_preserves_step() {
        let img = GrayImage::from_fn(8, 8, |_, c| if c < 4 { 0.0 } else { 1.0 }).unwrap();
        let out = bilateral_filter(&img, 2.0, 0.05).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                let before = img.get(r, c) >= 0.5;
                assert_eq!(out.get(r, c) >= 0.5, before);
            }
        }
    }

    #[test]
    fn bilateral_matches_direct_oracle() {
        let img = noise(8, 8, 5);
        let (ss, sr) = (1.2, 0.2);
        let out = bilateral_filter(&img, ss, sr).unwrap();
        let rad = (2.0f64 * ss).ceil() as isize;
        for y in 0..8isize {
            for x in 0..8isize {
                let c = img.get(y as usize, x as usize);
                let (mut n, mut d) = (0.0, 0.0);
                for dy in -rad..=rad {
                    for dx in -rad..=rad {
                        let v = img.get_mirrored(y + dy, x + dx);
                        let wt = (-((dy * dy + dx * dx) as f64) / (2.0 * ss * ss)).exp()
                            * (-(v - c) * (v - c) / (2.0 * sr * sr)).exp();
                        n += wt * v;
                        d += wt;
                    }
                }
                assert!((out.get(y as usize, x as usize) - n / d).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bilateral_with_huge_range_is_gaussian() {
        let img = noise(10, 9, 8);
        let ss = 1.5;
        let out = bilateral_filter(&img, ss, 1e6).unwrap();
        let k = gaussian_kernel(ss, (2.0f64 * ss).ceil() as usize).unwrap();
        let g = convolve(&img, &k);
        for (a, b) in out.data().iter().zip(g.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn bilateral_rejects_bad_sigma() {
        let img = GrayImage::filled(3, 3, 0.5).unwrap();
        assert!(bilateral_filter(&img, 0.0, 0.1).is_err());
        assert!(bilateral_filter(&img, 1.0, -0.1).is_err());
    }

    #[test]
    fn stats_small_cases() {
        let img = GrayImage::new(2, 2, vec![0.0, 1.0, 0.5, 0.5]).unwrap();
        assert_eq!(
            stats(&img),
            ImageStats {
                high: 1.0,
                low: 0.0,
                avg: 0.5
            }
        );
        let s = stats(&GrayImage::filled(4, 4, 0.7).unwrap());
        assert_eq!((s.high, s.low), (0.7, 0.7));
        assert!((s.avg - 0.7).abs() < 1e-15);
    }

    #[test]
    fn stats_matches_fold() {
        let img = noise(16, 16, 21);
        let s = stats(&img);
        let hi = img.data().iter().cloned().fold(f64::MIN, f64::max);
        let lo = img.data().iter().cloned().fold(f64::MAX, f64::min);
        let mean = img.data().iter().sum::<f64>() / 256.0;
        assert_eq!(s.high, hi);
        assert_eq!(s.low, lo);
        assert!((s.avg - mean).abs() < 1e-15);
    }
}
