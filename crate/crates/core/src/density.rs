//! Kernel-density inpainting of undetermined trimap pixels.
//!
//! Each undetermined pixel is scored by the mean Gaussian kernel between its
//! RGB value and a sample of annotated sky pixels; scores above `p_c` become
//! sky, the rest not-sky.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{ColorSpace, PlanarImage};
use crate::trimap::{Label, Trimap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DensityParams {
    /// Kernel standard deviation in RGB units on the `[0, 1]` scale.
    pub sigma: f64,
    /// Number of sky pixels drawn as kernel centers.
    pub n_samples: usize,
    /// Scores strictly above this become sky.
    pub p_c: f64,
    pub seed: u64,
    /// Scale the kernel so that `K(x, x) = 1` instead of using the Gaussian
    /// normalization constant `(2 pi sigma^2)^(-3/2)`.
    pub normalize_kernel: bool,
}

impl Default for DensityParams {
    fn default() -> Self {
        DensityParams {
            sigma: 0.01,
            n_samples: 1024,
            p_c: 0.6,
            seed: 0,
            normalize_kernel: true,
        }
    }
}

impl DensityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || self.n_samples == 0 || !(self.p_c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "density estimation needs sigma > 0, n_samples >= 1, p_c > 0; got {self:?}"
            )));
        }
        Ok(())
    }

    /// Multiplier in front of the exponential.
    pub fn kernel_scale(&self) -> f64 {
        if self.normalize_kernel {
            1.0
        } else {
            (2.0 * std::f64::consts::PI * self.sigma * self.sigma).powf(-1.5)
        }
    }
}

/// Indices (row-major, ascending) of the sky pixels used as kernel centers.
///
/// All sky pixels are used when there are at most `n_samples` of them;
/// otherwise `n_samples` are drawn without replacement.
pub fn sample_sky_pixels(t: &Trimap, params: &DensityParams) -> Result<Vec<usize>> {
    let sky: Vec<usize> = t
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == Label::Sky)
        .map(|(i, _)| i)
        .collect();
    if sky.is_empty() {
        return Err(Error::EmptyReference);
    }
    if sky.len() <= params.n_samples {
        return Ok(sky);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, sky.len(), params.n_samples)
        .into_iter()
        .map(|k| sky[k])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Sky probability of every undetermined pixel; other pixels get 0.
///
/// The result is tagged `Generic` because unnormalized kernels exceed 1.
pub fn sky_probability(img: &PlanarImage, t: &Trimap, params: &DensityParams) -> Result<PlanarImage> {
    params.validate()?;
    img.check_channels(3, "density estimation image")?;
    t.check_size(img)?;
    let centers: Vec<[f64; 3]> = sample_sky_pixels(t, params)?
        .into_iter()
        .map(|i| pixel_at(img, i))
        .collect();
    let inv_two_var = 1.0 / (2.0 * params.sigma * params.sigma);
    let scale = params.kernel_scale() / centers.len() as f64;

    let data: Vec<f64> = t
        .labels()
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            if label != Label::Undetermined {
                return 0.0;
            }
            let q = pixel_at(img, i);
            let sum: f64 = centers
                .iter()
                .map(|c| {
                    let d2 = (q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2) + (q[2] - c[2]).powi(2);
                    (-d2 * inv_two_var).exp()
                })
                .sum();
            sum * scale
        })
        .collect();
    PlanarImage::from_vec(img.width(), img.height(), 1, ColorSpace::Generic, data)
}

fn pixel_at(img: &PlanarImage, i: usize) -> [f64; 3] {
    img.pixel3(i % img.width(), i / img.width())
}

/// Result of [`inpaint`].
#[derive(Debug, Clone, PartialEq)]
pub struct Inpainted {
    /// Trimap with every undetermined pixel resolved.
    pub trimap: Trimap,
    /// Pixels that were undetermined and became sky.
    pub inpainted_sky: Vec<bool>,
}

/// Resolves undetermined pixels: probability above `p_c` becomes sky.
pub fn inpaint(t: &Trimap, p: &PlanarImage, p_c: f64) -> Result<Inpainted> {
    p.check_channels(1, "sky probability")?;
    t.check_size(p)?;
    let mut trimap = t.clone();
    let mut inpainted_sky = vec![false; t.labels().len()];
    for ((label, flag), &prob) in trimap
        .labels_mut()
        .iter_mut()
        .zip(&mut inpainted_sky)
        .zip(p.plane(0))
    {
        if *label == Label::Undetermined {
            if prob > p_c {
                *label = Label::Sky;
                *flag = true;
            } else {
                *label = Label::NotSky;
            }
        }
    }
    Ok(Inpainted {
        trimap,
        inpainted_sky,
    })
}
