//! Synthetic sky scenes with a known alpha matte, for tests and demos.
//!
//! A vertical sky gradient is composited over a checkerboard foreground
//! through an anti-aliased skyline (hills plus boxy buildings) and a few thin
//! cables. The image is exactly `alpha * sky + (1 - alpha) * fg`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imagecore::{ColorSpace, PlanarImage};
use crate::trimap::{Label, Trimap};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    /// Half-width of the anti-aliased ramp at the skyline, in pixels.
    pub aa_radius: f64,
    /// Block size of the coarse annotation.
    pub block: usize,
    pub sky_top: [f64; 3],
    pub sky_horizon: [f64; 3],
    pub checker: [[f64; 3]; 2],
    pub checker_size: usize,
    pub cables: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            aa_radius: 1.5,
            block: 16,
            sky_top: [0.42, 0.60, 0.88],
            sky_horizon: [0.44, 0.62, 0.89],
            checker: [[0.16, 0.24, 0.10], [0.36, 0.22, 0.12]],
            checker_size: 8,
            cables: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub image: PlanarImage,
    pub alpha: PlanarImage,
    /// Blocky binary mask, as a careless annotator would draw it.
    pub annotation: PlanarImage,
    /// Sky where alpha is 1, not-sky where it is 0, undetermined elsewhere.
    pub trimap: Trimap,
    pub sky: PlanarImage,
    pub foreground: PlanarImage,
}

struct Building {
    x0: f64,
    x1: f64,
    top: f64,
}

struct Cable {
    y_left: f64,
    y_right: f64,
    sag: f64,
}

/// Scene with default parameters.
pub fn make_synthetic_scene(width: usize, height: usize, seed: u64) -> Result<SyntheticScene> {
    make_synthetic_scene_with(width, height, seed, &SceneParams::default())
}

pub fn make_synthetic_scene_with(
    width: usize,
    height: usize,
    seed: u64,
    params: &SceneParams,
) -> Result<SyntheticScene> {
    if width < 16 || height < 16 {
        return Err(Error::InvalidInput(format!(
            "synthetic scenes need at least 16x16 pixels, got {width}x{height}"
        )));
    }
    if !(params.aa_radius > 0.0) || params.block == 0 || params.checker_size == 0 {
        return Err(Error::InvalidParameter(format!("bad scene parameters {params:?}")));
    }
    let (w, h) = (width as f64, height as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: [f64; 2] = [rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.0..std::f64::consts::TAU)];
    let buildings: Vec<Building> = (0..3)
        .map(|_| {
            let x0 = rng.random_range(0.0..0.85) * w;
            Building {
                x0,
                x1: x0 + rng.random_range(0.06..0.15) * w,
                top: rng.random_range(0.35..0.5) * h,
            }
        })
        .collect();
    let cables: Vec<Cable> = (0..params.cables)
        .map(|_| Cable {
            y_left: rng.random_range(0.12..0.3) * h,
            y_right: rng.random_range(0.12..0.3) * h,
            sag: rng.random_range(0.02..0.06) * h,
        })
        .collect();

    let horizon = |x: f64| {
        let t = std::f64::consts::TAU * x / w;
        h * (0.62 + 0.06 * (2.0 * t + phase[0]).sin() + 0.03 * (5.0 * t + phase[1]).sin())
    };
    // Signed distance from the foreground, positive in the sky.
    let sky_distance = |x: f64, y: f64| {
        let mut d = horizon(x) - y;
        for b in &buildings {
            let dx = (b.x0 - x).max(x - b.x1);
            let dy = b.top - y;
            let outside = (dx.max(0.0).powi(2) + dy.max(0.0).powi(2)).sqrt();
            let inside = dx.max(dy).min(0.0);
            d = d.min(outside + inside);
        }
        d
    };
    let r = params.aa_radius;
    let ramp = |d: f64| (0.5 + d / (2.0 * r)).clamp(0.0, 1.0);

    let alpha = PlanarImage::from_fn(width, height, 1, ColorSpace::Mask, |xi, yi, _| {
        let (x, y) = (xi as f64 + 0.5, yi as f64 + 0.5);
        let mut a = ramp(sky_distance(x, y));
        for c in &cables {
            let u = x / w;
            let cy = c.y_left + (c.y_right - c.y_left) * u + c.sag * 4.0 * u * (1.0 - u);
            // Cables are about one pixel thick.
            a *= 1.0 - ramp(0.5 - (y - cy).abs());
        }
        a
    })?;

    let sky = PlanarImage::from_fn(width, height, 3, ColorSpace::Rgb, |_, y, c| {
        let t = y as f64 / (h - 1.0);
        params.sky_top[c] + (params.sky_horizon[c] - params.sky_top[c]) * t
    })?;
    let n = params.checker_size;
    let foreground = PlanarImage::from_fn(width, height, 3, ColorSpace::Rgb, |x, y, c| {
        params.checker[(x / n + y / n) % 2][c]
    })?;
    let image = PlanarImage::from_fn(width, height, 3, ColorSpace::Rgb, |x, y, c| {
        let a = alpha.get(x, y, 0);
        a * sky.get(x, y, c) + (1.0 - a) * foreground.get(x, y, c)
    })?;

    let annotation = blocky_annotation(&alpha, params.block)?;
    let labels = alpha
        .plane(0)
        .iter()
        .map(|&a| {
            if a >= 1.0 {
                Label::Sky
            } else if a <= 0.0 {
                Label::NotSky
            } else {
                Label::Undetermined
            }
        })
        .collect();
    let trimap = Trimap::new(width, height, labels)?;

    Ok(SyntheticScene {
        image,
        alpha,
        annotation,
        trimap,
        sky,
        foreground,
    })
}

/// Majority vote of `alpha >= 0.5` over `block x block` tiles.
fn blocky_annotation(alpha: &PlanarImage, block: usize) -> Result<PlanarImage> {
    let (w, h) = (alpha.width(), alpha.height());
    let mut out = vec![0.0; w * h];
    for by in (0..h).step_by(block) {
        for bx in (0..w).step_by(block) {
            let (x1, y1) = ((bx + block).min(w), (by + block).min(h));
            let mut sky = 0;
            for y in by..y1 {
                for x in bx..x1 {
                    sky += (alpha.get(x, y, 0) >= 0.5) as usize;
                }
            }
            let v = if 2 * sky >= (x1 - bx) * (y1 - by) { 1.0 } else { 0.0 };
            for y in by..y1 {
                out[y * w + bx..y * w + x1].fill(v);
            }
        }
    }
    PlanarImage::mask(w, h, out)
}
