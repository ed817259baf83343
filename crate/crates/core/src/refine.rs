//! Coarse sky annotations to continuous alpha mattes.
//!
//! Binary masks are turned into trimaps by marking a dilated band around the
//! mask edges as undetermined. Undetermined pixels are resolved by density
//! inpainting, every pixel gets a provenance confidence, and the weighted
//! guided filter (guided by the image in YUV) produces the matte. An
//! optional sigmoid pushes intermediate values toward 0 and 1.

use serde::{Deserialize, Serialize};

use crate::confidence::{trimap_confidence, TrimapConfidenceParams};
use crate::density::{inpaint, sky_probability, DensityParams};
use crate::error::{Error, Result};
use crate::imagecore::{rgb_to_yuv, PlanarImage, RangePolicy};
use crate::trimap::{Label, Trimap};
use crate::wgf::{modified_guided_filter, GuidedFilterParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinePipelineParams {
    /// Disk radius used to widen mask edges into the undetermined band.
    pub dilation_radius: usize,
    pub gf: GuidedFilterParams,
    pub density: DensityParams,
    pub conf: TrimapConfidenceParams,
    /// Resolve undetermined pixels by density inpainting. When off, the
    /// filter sees the raw mask with confidence 1 everywhere.
    pub inpaint: bool,
    /// Sigmoid sharpness applied after filtering, if any.
    pub sharpen: Option<f64>,
}

impl RefinePipelineParams {
    pub fn validate(&self) -> Result<()> {
        self.gf.validate()?;
        self.density.validate()?;
        self.conf.validate()?;
        if let Some(t) = self.sharpen {
            check_sharpness(t)?;
        }
        Ok(())
    }
}

/// What a refinement job starts from.
#[derive(Debug, Clone)]
pub enum Annotation {
    /// A binary sky mask, plus optional regions (e.g. trees) to treat as
    /// undetermined.
    Binary {
        mask: PlanarImage,
        extra_undetermined: Option<PlanarImage>,
    },
    /// A hand-made trimap, used as is.
    Trimap(Trimap),
    /// An existing continuous matte; filtered with uniform confidence.
    Alpha(PlanarImage),
}

/// 4-neighbor Laplacian edges of a binary mask, dilated by a disk.
///
/// Returns a mask with 1 on the band and 0 elsewhere. Neighbors outside the
/// image repeat the edge pixel.
pub fn boundary_band(mask: &PlanarImage, radius: usize) -> Result<PlanarImage> {
    mask.check_channels(1, "boundary mask")?;
    let (w, h) = (mask.width(), mask.height());
    let m = mask.plane(0);
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        m[y * w + x]
    };
    let mut edges = Vec::new();
    for y in 0..h as isize {
        for x in 0..w as isize {
            let lap = at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4.0 * at(x, y);
            if lap != 0.0 {
                edges.push((x, y));
            }
        }
    }
    let r = radius as isize;
    let disk: Vec<(isize, isize)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|(dx, dy)| dx * dx + dy * dy <= r * r)
        .collect();
    let mut band = vec![0.0; w * h];
    for (x, y) in edges {
        for (dx, dy) in &disk {
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                band[ny as usize * w + nx as usize] = 1.0;
            }
        }
    }
    PlanarImage::mask(w, h, band)
}

/// Trimap from a binary mask: the band and any extra region are
/// undetermined, everything else keeps its mask label.
pub fn build_trimap(
    mask: &PlanarImage,
    band: &PlanarImage,
    extra_undetermined: Option<&PlanarImage>,
) -> Result<Trimap> {
    mask.check_same_size(band)?;
    if let Some(extra) = extra_undetermined {
        mask.check_same_size(extra)?;
    }
    let mut t = Trimap::from_mask(mask);
    for (i, label) in t.labels_mut().iter_mut().enumerate() {
        let undet = band.plane(0)[i] >= 0.5
            || extra_undetermined.is_some_and(|e| e.plane(0)[i] >= 0.5);
        if undet {
            *label = Label::Undetermined;
        }
    }
    Ok(t)
}

fn check_sharpness(t_s: f64) -> Result<()> {
    if t_s > 0.0 && t_s.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "sharpness must be positive, got {t_s}"
        )))
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Normalized sigmoid `S(x)` with sharpness `t_s`; fixes 0, 1/2 and 1.
pub fn sharpen_value(x: f64, t_s: f64) -> f64 {
    let lo = logistic(-t_s / 2.0);
    let hi = logistic(t_s / 2.0);
    let range = hi - lo;
    // For tiny t_s the logistic differences cancel; S(x) tends to x there.
    if range < 1e-9 {
        return x;
    }
    (logistic(t_s * (x - 0.5)) - lo) / range
}

pub fn sharpen_mask(alpha: &PlanarImage, t_s: f64) -> Result<PlanarImage> {
    check_sharpness(t_s)?;
    alpha.check_channels(1, "alpha matte")?;
    let data = alpha.plane(0).iter().map(|&v| sharpen_value(v, t_s)).collect();
    PlanarImage::mask(alpha.width(), alpha.height(), data)
}

/// Intermediate products of [`refine_annotation`], for inspection.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub trimap: Option<Trimap>,
    pub confidence: PlanarImage,
    pub filtered: PlanarImage,
    pub alpha: PlanarImage,
}

/// Runs the full refinement and keeps the intermediates.
pub fn refine_annotation_detailed(
    img: &PlanarImage,
    annotation: &Annotation,
    params: &RefinePipelineParams,
) -> Result<Refinement> {
    params.validate()?;
    img.check_channels(3, "refinement image")?;
    let (w, h) = (img.width(), img.height());
    let uniform = |v: f64| PlanarImage::filled(w, h, &[v], crate::imagecore::ColorSpace::Mask);

    let (input, confidence, trimap) = match annotation {
        Annotation::Alpha(alpha) => {
            img.check_same_size(alpha)?;
            (alpha.clone(), uniform(params.conf.c_det)?, None)
        }
        Annotation::Binary { mask, .. } if !params.inpaint => {
            img.check_same_size(mask)?;
            (Trimap::from_mask(mask).to_mask(), uniform(1.0)?, None)
        }
        Annotation::Trimap(t) if !params.inpaint => {
            t.check_size(img)?;
            (t.to_mask(), uniform(1.0)?, None)
        }
        Annotation::Binary {
            mask,
            extra_undetermined,
        } => {
            img.check_same_size(mask)?;
            let band = boundary_band(mask, params.dilation_radius)?;
            let t = build_trimap(mask, &band, extra_undetermined.as_ref())?;
            resolve(img, &t, params)?
        }
        Annotation::Trimap(t) => {
            t.check_size(img)?;
            resolve(img, t, params)?
        }
    };

    let reference = rgb_to_yuv(img, RangePolicy::Clamp)?;
    let filtered = modified_guided_filter(&reference, &input, &confidence, &params.gf)?;
    let alpha = match params.sharpen {
        Some(t_s) => sharpen_mask(&filtered, t_s)?,
        None => filtered.clone(),
    };
    Ok(Refinement {
        trimap,
        confidence,
        filtered,
        alpha,
    })
}

fn resolve(
    img: &PlanarImage,
    t: &Trimap,
    params: &RefinePipelineParams,
) -> Result<(PlanarImage, PlanarImage, Option<Trimap>)> {
    let probability = sky_probability(img, t, &params.density)?;
    let resolved = inpaint(t, &probability, params.density.p_c)?;
    let confidence = trimap_confidence(t, &resolved.inpainted_sky, &params.conf)?;
    Ok((resolved.trimap.to_mask(), confidence, Some(resolved.trimap)))
}

/// Refines a coarse annotation of `img` (RGB) into an alpha matte.
pub fn refine_annotation(
    img: &PlanarImage,
    annotation: &Annotation,
    params: &RefinePipelineParams,
) -> Result<PlanarImage> {
    Ok(refine_annotation_detailed(img, annotation, params)?.alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::ColorSpace;

    fn mask(w: usize, h: usize, f: impl Fn(usize, usize) -> bool) -> PlanarImage {
        PlanarImage::from_fn(w, h, 1, ColorSpace::Mask, |x, y, _| f(x, y) as u8 as f64).unwrap()
    }

    fn set(img: &PlanarImage) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for y in 0..img.height() {
            for x in 0..img.width() {
                if img.get(x, y, 0) > 0.5 {
                    v.push((x, y));
                }
            }
        }
        v
    }

    #[test]
    fn uniform_mask_has_no_band() {
        let m = mask(8, 8, |_, _| true);
        assert!(set(&boundary_band(&m, 3).unwrap()).is_empty());
    }

    #[test]
    fn half_plane_band_is_two_rows() {
        let m = mask(6, 8, |_, y| y < 4);
        let band = boundary_band(&m, 0).unwrap();
        let rows: Vec<usize> = set(&band).into_iter().map(|p| p.1).collect();
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(|&y| y == 3 || y == 4));
    }

    #[test]
    fn disk_band_matches_brute_force_dilation() {
        let m = mask(8, 8, |x, y| {
            let (dx, dy) = (x as f64 - 3.5, y as f64 - 3.5);
            dx * dx + dy * dy <= 6.25
        });
        let band = boundary_band(&m, 2).unwrap();
        // Brute force: edge = pixel with a differing 4-neighbor; band = every
        // pixel within Euclidean distance 2 of an edge pixel.
        let inside = |x: i32, y: i32| {
            let x = x.clamp(0, 7) as usize;
            let y = y.clamp(0, 7) as usize;
            m.get(x, y, 0) > 0.5
        };
        let mut edges = Vec::new();
        for y in 0..8 {
            for x in 0..8 {
                let c = inside(x, y);
                if [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(dx, dy)| inside(x + dx, y + dy) != c) {
                    edges.push((x, y));
                }
            }
        }
        for y in 0..8 {
            for x in 0..8 {
                let want = edges.iter().any(|&(ex, ey)| (ex - x).pow(2) + (ey - y).pow(2) <= 4);
                assert_eq!(band.get(x as usize, y as usize, 0) > 0.5, want, "({x}, {y})");
            }
        }
    }

    #[test]
    fn trimap_construction() {
        let m = mask(6, 6, |_, y| y < 3);
        let empty = mask(6, 6, |_, _| false);
        let t = build_trimap(&m, &empty, None).unwrap();
        assert_eq!(t.count(Label::Undetermined), 0);
        assert_eq!(t.count(Label::Sky), 18);

        let full = mask(6, 6, |_, _| true);
        let t = build_trimap(&m, &full, None).unwrap();
        assert_eq!(t.count(Label::Undetermined), 36);
    }

    #[test]
    fn trimap_with_band_and_extra_region() {
        // Disk of radius 4.5 centered in a 12x12 grid, 1-pixel band, 3x3
        // extra region in the bottom-right corner.
        let m = mask(12, 12, |x, y| {
            let (dx, dy) = (x as f64 - 5.5, y as f64 - 5.5);
            dx * dx + dy * dy <= 20.25
        });
        let band = boundary_band(&m, 1).unwrap();
        let extra = mask(12, 12, |x, y| x >= 9 && y >= 9);
        let t = build_trimap(&m, &band, Some(&extra)).unwrap();
        let want = [
            "nnnuuuuuunnn",
            "nnuuuuuuuunn",
            "nuuuuuuuuuun",
            "uuuuuuuuuuuu",
            "uuuussssuuuu",
            "uuuussssuuuu",
            "uuuussssuuuu",
            "uuuussssuuuu",
            "uuuuuuuuuuuu",
            "nuuuuuuuuuuu",
            "nnuuuuuuuuuu",
            "nnnuuuuuuuuu",
        ];
        let got: Vec<String> = t
            .labels()
            .chunks(12)
            .map(|row| {
                row.iter()
                    .map(|l| match l {
                        Label::NotSky => 'n',
                        Label::Undetermined => 'u',
                        Label::Sky => 's',
                    })
                    .collect()
            })
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn sharpen_fixed_points_and_limits() {
        for t_s in [0.5, 5.0, 15.0, 40.0] {
            assert!(sharpen_value(0.0, t_s).abs() < 1e-12);
            assert!((sharpen_value(0.5, t_s) - 0.5).abs() < 1e-12);
            assert!((sharpen_value(1.0, t_s) - 1.0).abs() < 1e-12);
        }
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            assert!((sharpen_value(x, 1e-4) - x).abs() < 1e-3);
        }
        // logistic(3.75) = 0.9770226301, logistic(7.5) = 0.9994472214,
        // logistic(-7.5) = 0.0005527786
        let s = sharpen_value(0.75, 15.0);
        let hand = (0.977_022_630_1 - 0.000_552_778_6) / (0.999_447_221_4 - 0.000_552_778_6);
        assert!((s - hand).abs() < 1e-9, "{s} vs {hand}");
        assert!((s - 0.977_550_59).abs() < 1e-8);
        assert!(sharpen_mask(&mask(2, 2, |_, _| true), 0.0).is_err());
    }

    #[test]
    fn sharpen_is_strictly_increasing() {
        let xs: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        for t_s in [1.0, 15.0] {
            for w in xs.windows(2) {
                assert!(sharpen_value(w[1], t_s) > sharpen_value(w[0], t_s));
            }
        }
    }
}
