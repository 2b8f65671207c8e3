//! Synthetic fixtures: a sharp textured rectangle composited over a
//! Gaussian-blurred copy of the same texture, with its hard matte.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{convolve, default_radius, gaussian_kernel, GrayImage};
use crate::io::{write_pgm, write_text};
use crate::segment::{compose, SegmentationMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Texture {
    /// Uniform i.i.d. noise in [0, 1).
    Noise,
    /// Alternating 0.2 / 0.8 squares of the given side.
    Checker(usize),
}

/// Foreground rectangle, `left <= x < right`, `top <= y < bottom`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub left: usize,
    pub top: usize,
    pub right: usize,
    pub bottom: usize,
}

impl Rect {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.top..self.bottom).contains(&row) && (self.left..self.right).contains(&col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthSpec {
    pub height: usize,
    pub width: usize,
    pub texture: Texture,
    pub rect: Rect,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            texture: Texture::Noise,
            rect: Rect {
                left: 16,
                top: 16,
                right: 48,
                bottom: 48,
            },
            sigma: 4.0,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::domain("image size must be positive"));
        }
        let r = self.rect;
        if r.left >= r.right || r.top >= r.bottom || r.right > self.width || r.bottom > self.height {
            return Err(Error::domain(format!(
                "rectangle ({},{})-({},{}) is empty or outside the {}x{} image",
                r.left, r.top, r.right, r.bottom, self.width, self.height
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::domain(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if let Texture::Checker(0) = self.texture {
            return Err(Error::domain("checker cell must be at least 1 pixel"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    /// Composite, quantized to 8 bits.
    pub image: GrayImage,
    pub matte: GrayImage,
}

impl Fixture {
    pub fn mask(&self) -> SegmentationMask {
        SegmentationMask::from_matte(&self.matte)
    }
}

pub fn texture(spec: &SynthSpec) -> Result<GrayImage> {
    match spec.texture {
        Texture::Noise => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let data = (0..spec.height * spec.width).map(|_| rng.gen::<f64>()).collect();
            GrayImage::new(spec.height, spec.width, data)
        }
        Texture::Checker(cell) => GrayImage::from_fn(spec.height, spec.width, |r, c| {
            if (r / cell + c / cell) % 2 == 0 {
                0.2
            } else {
                0.8
            }
        }),
    }
}

pub fn synthesize(spec: &SynthSpec) -> Result<Fixture> {
    spec.validate()?;
    let tex = texture(spec)?;
    let kernel = gaussian_kernel(spec.sigma, default_radius(spec.sigma))?;
    let bg = convolve(&tex, &kernel);
    let matte = GrayImage::from_fn(spec.height, spec.width, |r, c| spec.rect.contains(r, c) as u8 as f64)?;
    let image = compose(&tex, &bg, &matte)?.quantized();
    Ok(Fixture { image, matte })
}

/// Paths written by [`write_fixture`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureFiles {
    pub image: PathBuf,
    pub gt: PathBuf,
    pub manifest: PathBuf,
}

/// Writes `<name>.pgm`, `<name>_gt.pgm` and the index `<name>.tsv`.
pub fn write_fixture(fixture: &Fixture, dir: impl AsRef<Path>, name: &str) -> Result<FixtureFiles> {
    let dir = dir.as_ref();
    let image_name = format!("{name}.pgm");
    let gt_name = format!("{name}_gt.pgm");
    let files = FixtureFiles {
        image: dir.join(&image_name),
        gt: dir.join(&gt_name),
        manifest: dir.join(format!("{name}.tsv")),
    };
    write_pgm(&files.image, &fixture.image)?;
    write_pgm(&files.gt, &fixture.matte)?;
    write_text(&files.manifest, &format!("{image_name}\t{gt_name}\n"))?;
    Ok(files)
}
