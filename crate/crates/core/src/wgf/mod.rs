//! The confidence-weighted guided filter.
//!
//! The filter models the output matte as a locally affine function of a
//! three-channel (YUV) reference image. Local expectations come from a
//! confidence-weighted bilinear downsample by `s`, so the per-pixel 3x3
//! least-squares systems are only solved on the `ceil(W/s) x ceil(H/s)` grid.
//! The affine coefficients are then brought back to full resolution with a
//! multi-stage triangle upsample and applied to the reference:
//!
//! ```text
//! I_lo  = wds(I)            P_lo = wds(P)
//! Sigma = wds(I (x) I) - I_lo (x) I_lo + diag(eps_l^2, eps_c^2, eps_c^2)
//! sigma = wds(I o P) - I_lo o P_lo
//! A_lo  = ldl_solve(Sigma, sigma)
//! b_lo  = P_lo - A_lo . I_lo
//! Y     = up(A_lo) . I + up(b_lo)
//! ```
//!
//! where `wds(X) = ds(X o C) / ds(C)`. The output is clamped to `[0, 1]`.

mod ldl;
mod resample;

pub use ldl::{ldl3_solve, solve_image_ldl3, PixelSolve};
pub use resample::{
    bilinear_downsample, smooth_upsample, smooth_upsample_to, upsample_stages, weighted_downsample,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{
    clamp_unit, dot3, hadamard, outer3, resize_bilinear, sub, ColorSpace, PlanarImage,
};

/// Downsampling factor and luma/chroma regularizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidedFilterParams {
    pub s: usize,
    pub eps_l: f64,
    pub eps_c: f64,
}

impl GuidedFilterParams {
    pub fn new(s: usize, eps_l: f64, eps_c: f64) -> Result<Self> {
        let p = GuidedFilterParams { s, eps_l, eps_c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s < 1 {
            return Err(Error::InvalidParameter("s must be >= 1".into()));
        }
        if !(self.eps_l > 0.0) || !(self.eps_c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "regularizers must be positive, got eps_l = {}, eps_c = {}",
                self.eps_l, self.eps_c
            )));
        }
        Ok(())
    }
}

/// Low-resolution weighted first and second moments of the filter inputs.
#[derive(Debug, Clone)]
pub struct Moments {
    /// Weighted mean of the reference, 3 channels.
    pub mean_ref: PlanarImage,
    /// Weighted mean of the input mask, 1 channel.
    pub mean_input: PlanarImage,
    /// Reference covariance (upper triangle, 6 channels), not yet regularized.
    pub covariance: PlanarImage,
    /// Cross-covariance of reference and input, 3 channels.
    pub cross: PlanarImage,
}

/// Low-resolution affine coefficients: `Y = A . I + b`.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub a: PlanarImage,
    pub b: PlanarImage,
}

impl Coefficients {
    /// Number of per-pixel linear systems that were solved.
    pub fn systems_solved(&self) -> usize {
        self.a.pixel_count()
    }
}

fn check_inputs(reference: &PlanarImage, p: &PlanarImage, c: &PlanarImage) -> Result<()> {
    reference.check_channels(3, "guided filter reference")?;
    p.check_channels(1, "guided filter input")?;
    c.check_channels(1, "confidence")?;
    reference.check_same_size(p)?;
    reference.check_same_size(c)
}

/// Weighted moments at `1/s` resolution.
pub fn weighted_moments(
    reference: &PlanarImage,
    p: &PlanarImage,
    c: &PlanarImage,
    s: usize,
) -> Result<Moments> {
    check_inputs(reference, p, c)?;
    let mean_ref = weighted_downsample(reference, c, s)?;
    let mean_input = weighted_downsample(p, c, s)?;
    let covariance = sub(
        &weighted_downsample(&outer3(reference, reference)?, c, s)?,
        &outer3(&mean_ref, &mean_ref)?,
    )?;
    let cross = sub(
        &weighted_downsample(&hadamard(reference, p)?, c, s)?,
        &hadamard(&mean_ref, &mean_input)?,
    )?;
    Ok(Moments {
        mean_ref,
        mean_input,
        covariance,
        cross,
    })
}

/// Regularizes the covariance and solves for the affine coefficients.
pub fn solve_coefficients(moments: &Moments, params: &GuidedFilterParams) -> Result<Coefficients> {
    params.validate()?;
    let mut sigma = moments.covariance.clone();
    let reg = [
        (0, params.eps_l * params.eps_l),
        (3, params.eps_c * params.eps_c),
        (5, params.eps_c * params.eps_c),
    ];
    for (ch, r) in reg {
        for v in sigma.plane_mut(ch) {
            *v += r;
        }
    }
    let a = solve_image_ldl3(&sigma, &moments.cross)?;
    let b = sub(&moments.mean_input, &dot3(&a, &moments.mean_ref)?)?;
    Ok(Coefficients { a, b })
}

/// Coefficients of the filter without applying them.
pub fn guided_coefficients(
    reference: &PlanarImage,
    p: &PlanarImage,
    c: &PlanarImage,
    params: &GuidedFilterParams,
) -> Result<Coefficients> {
    params.validate()?;
    let m = weighted_moments(reference, p, c, params.s)?;
    solve_coefficients(&m, params)
}

/// Upsamples the coefficients to the reference resolution and evaluates
/// `A . I + b`, clamped to `[0, 1]`.
pub fn apply_coefficients(
    coeffs: &Coefficients,
    reference: &PlanarImage,
    s: usize,
) -> Result<PlanarImage> {
    reference.check_channels(3, "guided filter reference")?;
    let (w, h) = (reference.width(), reference.height());
    let a = smooth_upsample_to(&coeffs.a, s, w, h)?;
    let b = smooth_upsample_to(&coeffs.b, s, w, h)?;
    let y = dot3(&a, reference)?;
    let data = y
        .plane(0)
        .iter()
        .zip(b.plane(0))
        .map(|(ai, bi)| clamp_unit(ai + bi))
        .collect();
    PlanarImage::mask(w, h, data)
}

/// Filters mask `p` guided by `reference` (YUV) under per-pixel confidence `c`.
pub fn modified_guided_filter(
    reference: &PlanarImage,
    p: &PlanarImage,
    c: &PlanarImage,
    params: &GuidedFilterParams,
) -> Result<PlanarImage> {
    let coeffs = guided_coefficients(reference, p, c, params)?;
    apply_coefficients(&coeffs, reference, params.s)
}

/// Brings a probability map and its confidence to the reference resolution
/// by bilinear resizing. Maps already at that resolution pass through.
pub fn match_reference_size(
    reference: &PlanarImage,
    p: &PlanarImage,
    c: &PlanarImage,
) -> Result<(PlanarImage, PlanarImage)> {
    p.check_same_size(c)?;
    if p.same_size(reference) {
        return Ok((p.clone(), c.clone()));
    }
    if p.width() > reference.width() || p.height() > reference.height() {
        return Err(Error::InvalidInput(format!(
            "probability map {}x{} is larger than the reference {}x{}",
            p.width(),
            p.height(),
            reference.width(),
            reference.height()
        )));
    }
    let (w, h) = (reference.width(), reference.height());
    let p = resize_bilinear(p, w, h).with_space(ColorSpace::Mask)?;
    let c = resize_bilinear(c, w, h);
    Ok((p, c))
}
