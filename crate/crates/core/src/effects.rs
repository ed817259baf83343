//! Sky grading: darkening, contrast, denoise compositing and dual white
//! balance, each blended into the image through the sky matte.
//!
//! Tonemapping acts on the HSV value channel. Since scaling an RGB triple by
//! `k` scales V by `k` and leaves H and S alone, the curves are applied by
//! multiplying RGB with `V' / V`, which avoids a lossy HSV round trip.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::BiasCurve;
use crate::error::{Error, Result};
use crate::imagecore::{clamp_unit, lerp, ColorSpace, PlanarImage};

/// Default contrast threshold.
pub const DEFAULT_T_C: f64 = 0.085;
/// Default denoise mask threshold.
pub const DEFAULT_T_D: f64 = 0.8;

/// A 2-D lookup table on a rectilinear grid, `values[y][x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lut2d {
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

fn strictly_increasing(axis: &[f64]) -> bool {
    axis.iter().all(|v| v.is_finite()) && axis.windows(2).all(|w| w[0] < w[1])
}

impl Lut2d {
    pub fn new(x_axis: Vec<f64>, y_axis: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let lut = Lut2d {
            x_axis,
            y_axis,
            values,
        };
        lut.validate()?;
        Ok(lut)
    }

    pub fn validate(&self) -> Result<()> {
        let (nx, ny) = (self.x_axis.len(), self.y_axis.len());
        if nx < 2 || ny < 2 {
            return Err(Error::Config(format!("LUT needs at least 2x2 entries, got {nx}x{ny}")));
        }
        if !strictly_increasing(&self.x_axis) || !strictly_increasing(&self.y_axis) {
            return Err(Error::Config("LUT axes must be strictly increasing".into()));
        }
        if self.values.len() != ny || self.values.iter().any(|row| row.len() != nx) {
            return Err(Error::Config(format!(
                "LUT values must be {ny} rows of {nx} entries"
            )));
        }
        Ok(())
    }

    /// Reads a LUT from a JSON file and validates it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lut: Lut2d = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        lut.validate()
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(lut)
    }

    /// Bilinear interpolation; queries outside the grid are clamped to it.
    pub fn lookup(&self, x: f64, y: f64) -> f64 {
        let (i, tx) = locate(&self.x_axis, x);
        let (j, ty) = locate(&self.y_axis, y);
        let row0 = &self.values[j];
        let row1 = &self.values[j + 1];
        let top = lerp(row0[i], row0[i + 1], tx);
        let bottom = lerp(row1[i], row1[i + 1], tx);
        lerp(top, bottom, ty)
    }
}

/// Cell index and fractional position of `v` on a sorted axis, clamped.
fn locate(axis: &[f64], v: f64) -> (usize, f64) {
    let last = axis.len() - 1;
    if !(v > axis[0]) {
        return (0, 0.0);
    }
    if v >= axis[last] {
        return (last - 1, 1.0);
    }
    let i = axis.partition_point(|&a| a <= v) - 1;
    (i, (v - axis[i]) / (axis[i + 1] - axis[i]))
}

/// Validates, then evaluates the LUT.
pub fn lut2d_lookup(lut: &Lut2d, x: f64, y: f64) -> Result<f64> {
    lut.validate()?;
    Ok(lut.lookup(x, y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffectParams {
    /// Darkening bias shape; 0.5 leaves the sky unchanged.
    pub b_d: f64,
    /// Contrast bias shape.
    pub b_c: f64,
    /// Values below this are left alone by the contrast curve.
    pub t_c: f64,
    /// Matte values below this keep the foreground rendition.
    pub t_d: f64,
    pub gains_fg: [f64; 3],
    pub gains_sky: [f64; 3],
    /// Maps (scene brightness, sky brightness) to `b_d`.
    pub b_d_lut: Option<Lut2d>,
    /// Maps (exposure time, SNR) to `b_c`.
    pub b_c_lut: Option<Lut2d>,
}

impl Default for EffectParams {
    fn default() -> Self {
        EffectParams {
            b_d: 0.5,
            b_c: 0.5,
            t_c: DEFAULT_T_C,
            t_d: DEFAULT_T_D,
            gains_fg: [1.0; 3],
            gains_sky: [1.0; 3],
            b_d_lut: None,
            b_c_lut: None,
        }
    }
}

impl EffectParams {
    pub fn validate(&self) -> Result<()> {
        BiasCurve::new(self.b_d)?;
        BiasCurve::new(self.b_c)?;
        check_t_c(self.t_c)?;
        check_t_d(self.t_d)?;
        check_gains(self.gains_fg)?;
        check_gains(self.gains_sky)?;
        for lut in self.b_d_lut.iter().chain(&self.b_c_lut) {
            lut.validate()?;
        }
        Ok(())
    }
}

fn check_t_c(t_c: f64) -> Result<()> {
    if (0.0..1.0).contains(&t_c) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("t_c must lie in [0, 1), got {t_c}")))
    }
}

fn check_t_d(t_d: f64) -> Result<()> {
    if t_d > 0.0 && t_d < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("t_d must lie in (0, 1), got {t_d}")))
    }
}

fn check_gains(g: [f64; 3]) -> Result<()> {
    if g.iter().all(|&v| v > 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("white balance gains must be positive, got {g:?}")))
    }
}

fn check_pair(img: &PlanarImage, alpha: &PlanarImage) -> Result<()> {
    img.check_channels(3, "graded image")?;
    alpha.check_channels(1, "sky matte")?;
    img.check_same_size(alpha)
}

/// Builds an RGB image from a per-pixel function of (pixel index, RGB, alpha).
fn per_pixel(
    img: &PlanarImage,
    alpha: &PlanarImage,
    f: impl Fn(usize, [f64; 3], f64) -> [f64; 3] + Sync,
) -> Result<PlanarImage> {
    check_pair(img, alpha)?;
    let n = img.pixel_count();
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let a = alpha.plane(0);
    let out: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|i| f(i, [r[i], g[i], b[i]], a[i]))
        .collect();
    let mut data = vec![0.0; 3 * n];
    for (i, px) in out.into_iter().enumerate() {
        for (c, v) in px.into_iter().enumerate() {
            data[c * n + i] = v;
        }
    }
    PlanarImage::from_vec(img.width(), img.height(), 3, ColorSpace::Rgb, data)
}

/// Replaces V by `curve(V)` and blends the result in by `alpha`.
fn tonemap_value(
    img: &PlanarImage,
    alpha: &PlanarImage,
    curve: impl Fn(f64) -> f64 + Sync,
) -> Result<PlanarImage> {
    per_pixel(img, alpha, |_, px, a| {
        let v = px[0].max(px[1]).max(px[2]);
        if v <= 0.0 {
            return px;
        }
        let k = curve(v) / v;
        px.map(|c| clamp_unit(lerp(c, c * k, a)))
    })
}

/// Darkens the sky with `V' = bias(V, b_d)`.
pub fn darken_sky(img: &PlanarImage, alpha: &PlanarImage, b_d: f64) -> Result<PlanarImage> {
    let curve = BiasCurve::new(b_d)?;
    tonemap_value(img, alpha, |v| curve.apply(v))
}

/// The contrast curve on a single value.
pub fn contrast_curve(v: f64, curve: &BiasCurve, t_c: f64) -> f64 {
    if v < t_c {
        v
    } else {
        (1.0 - t_c) * curve.apply((v - t_c) / (1.0 - t_c)) + t_c
    }
}

/// Raises the contrast of mid-brightness sky pixels.
pub fn enhance_contrast(
    img: &PlanarImage,
    alpha: &PlanarImage,
    b_c: f64,
    t_c: f64,
) -> Result<PlanarImage> {
    let curve = BiasCurve::new(b_c)?;
    check_t_c(t_c)?;
    tonemap_value(img, alpha, |v| contrast_curve(v, &curve, t_c))
}

/// The matte used for denoise compositing: zero below `t_d`, rescaled to
/// `[0, 1]` above.
pub fn denoise_weight(alpha: f64, t_d: f64) -> f64 {
    if alpha < t_d {
        0.0
    } else {
        (alpha - t_d) / (1.0 - t_d)
    }
}

/// Blends a sky-tuned rendition `sky` into the foreground rendition `fg`.
pub fn composite_denoised(
    fg: &PlanarImage,
    sky: &PlanarImage,
    alpha: &PlanarImage,
    t_d: f64,
) -> Result<PlanarImage> {
    check_t_d(t_d)?;
    sky.check_channels(3, "sky rendition")?;
    fg.check_same_size(sky)?;
    let (sr, sg, sb) = (sky.plane(0), sky.plane(1), sky.plane(2));
    per_pixel(fg, alpha, |i, px, a| {
        let w = denoise_weight(a, t_d);
        let s = [sr[i], sg[i], sb[i]];
        [0, 1, 2].map(|c| lerp(px[c], s[c], w))
    })
}

/// Applies foreground and sky white-balance gains, blended by `alpha`.
pub fn apply_dual_wb(
    img: &PlanarImage,
    alpha: &PlanarImage,
    gains_fg: [f64; 3],
    gains_sky: [f64; 3],
) -> Result<PlanarImage> {
    check_gains(gains_fg)?;
    check_gains(gains_sky)?;
    per_pixel(img, alpha, |_, px, a| {
        [0, 1, 2].map(|c| clamp_unit(lerp(gains_fg[c] * px[c], gains_sky[c] * px[c], a)))
    })
}

/// A fully resolved grading step.
#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    Denoise { sky: PlanarImage, t_d: f64 },
    Darken { b_d: f64 },
    Contrast { b_c: f64, t_c: f64 },
    DualWb { gains_fg: [f64; 3], gains_sky: [f64; 3] },
}

impl Effect {
    /// Position in the canonical chain order.
    pub fn rank(&self) -> usize {
        match self {
            Effect::Denoise { .. } => 0,
            Effect::Darken { .. } => 1,
            Effect::Contrast { .. } => 2,
            Effect::DualWb { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Effect::Denoise { .. } => "denoise",
            Effect::Darken { .. } => "darken",
            Effect::Contrast { .. } => "contrast",
            Effect::DualWb { .. } => "dual_wb",
        }
    }

    pub fn apply(&self, img: &PlanarImage, alpha: &PlanarImage) -> Result<PlanarImage> {
        match self {
            Effect::Denoise { sky, t_d } => composite_denoised(img, sky, alpha, *t_d),
            Effect::Darken { b_d } => darken_sky(img, alpha, *b_d),
            Effect::Contrast { b_c, t_c } => enhance_contrast(img, alpha, *b_c, *t_c),
            Effect::DualWb {
                gains_fg,
                gains_sky,
            } => apply_dual_wb(img, alpha, *gains_fg, *gains_sky),
        }
    }
}

/// Runs the effects one after the other in canonical order (denoise,
/// darken, contrast, white balance). Effects of the same kind keep their
/// relative order.
pub fn apply_chain(img: &PlanarImage, alpha: &PlanarImage, effects: &[Effect]) -> Result<PlanarImage> {
    check_pair(img, alpha)?;
    let mut ordered: Vec<&Effect> = effects.iter().collect();
    ordered.sort_by_key(|e| e.rank());
    if ordered.iter().zip(effects).any(|(a, b)| !std::ptr::eq(*a, b)) {
        log::info!(
            "effects reordered to {:?}",
            ordered.iter().map(|e| e.name()).collect::<Vec<_>>()
        );
    }
    let mut out = img.clone();
    for e in ordered {
        out = e.apply(&out, alpha)?;
    }
    Ok(out)
}

/// One entry of a grading config. Missing parameters fall back to the
/// config's [`EffectParams`]; `at` evaluates a LUT instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case", deny_unknown_fields)]
pub enum EffectStep {
    Denoise {
        /// The sky-tuned rendition to blend in.
        rendition: PathBuf,
        t_d: Option<f64>,
    },
    Darken {
        b_d: Option<f64>,
        lut: Option<PathBuf>,
        /// (scene brightness, sky brightness)
        at: Option<[f64; 2]>,
    },
    Contrast {
        b_c: Option<f64>,
        t_c: Option<f64>,
        lut: Option<PathBuf>,
        /// (exposure time, SNR)
        at: Option<[f64; 2]>,
    },
    DualWb {
        gains_fg: Option<[f64; 3]>,
        gains_sky: Option<[f64; 3]>,
    },
}

/// JSON grading config: shared parameters plus an ordered effect list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradingConfig {
    pub params: EffectParams,
    pub effects: Vec<EffectStep>,
}

impl GradingConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Loads LUTs and renditions (relative paths resolve against `base`)
    /// and returns the effects ready to run.
    pub fn resolve(&self, base: &Path) -> Result<Vec<Effect>> {
        let p = &self.params;
        p.validate()?;
        let load_lut = |file: &Option<PathBuf>, inline: &Option<Lut2d>| -> Result<Option<Lut2d>> {
            match file {
                Some(f) => Lut2d::load(&base.join(f)).map(Some),
                None => Ok(inline.clone()),
            }
        };
        let from_lut = |lut: Option<Lut2d>, at: Option<[f64; 2]>, fixed: Option<f64>, default: f64| {
            match (at, lut) {
                (Some(_), None) => Err(Error::Config("'at' given without a LUT".into())),
                (Some([x, y]), Some(lut)) => Ok(lut.lookup(x, y)),
                (None, _) => Ok(fixed.unwrap_or(default)),
            }
        };
        self.effects
            .iter()
            .map(|step| {
                Ok(match step {
                    EffectStep::Denoise { rendition, t_d } => Effect::Denoise {
                        sky: crate::io::read_rgb(&base.join(rendition), crate::io::Transfer::Encoded)?,
                        t_d: t_d.unwrap_or(p.t_d),
                    },
                    EffectStep::Darken { b_d, lut, at } => Effect::Darken {
                        b_d: from_lut(load_lut(lut, &p.b_d_lut)?, *at, *b_d, p.b_d)?,
                    },
                    EffectStep::Contrast { b_c, t_c, lut, at } => Effect::Contrast {
                        b_c: from_lut(load_lut(lut, &p.b_c_lut)?, *at, *b_c, p.b_c)?,
                        t_c: t_c.unwrap_or(p.t_c),
                    },
                    EffectStep::DualWb {
                        gains_fg,
                        gains_sky,
                    } => Effect::DualWb {
                        gains_fg: gains_fg.unwrap_or(p.gains_fg),
                        gains_sky: gains_sky.unwrap_or(p.gains_sky),
                    },
                })
            })
            .collect()
    }
}
