//! Tent-kernel resampling: bilinear downsampling with a spatial bandwidth of
//! `s` pixels, and multi-stage triangle upsampling.
//!
//! Both directions share one pixel-center convention: low-resolution sample
//! `j` sits at full-resolution coordinate `(j + 0.5) * s - 0.5`. Samples that
//! fall outside the image are replaced by the nearest edge sample.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::PlanarImage;

/// One output sample as a weighted sum of input samples.
type Taps = Vec<(usize, f64)>;

/// Tent taps of half-width `s` for each of the `ceil(n / s)` output samples.
fn downsample_taps(n: usize, s: usize) -> Vec<Taps> {
    let out = n.div_ceil(s);
    let sf = s as f64;
    (0..out)
        .map(|j| {
            let center = (j as f64 + 0.5) * sf - 0.5;
            let lo = (center - sf).floor() as i64 + 1;
            let hi = (center + sf).ceil() as i64 - 1;
            let mut taps: Taps = Vec::with_capacity((hi - lo + 1) as usize);
            for i in lo..=hi {
                let w = 1.0 - (i as f64 - center).abs() / sf;
                if w <= 0.0 {
                    continue;
                }
                let idx = i.clamp(0, n as i64 - 1) as usize;
                match taps.last_mut() {
                    Some(last) if last.0 == idx => last.1 += w,
                    _ => taps.push((idx, w)),
                }
            }
            let total: f64 = taps.iter().map(|t| t.1).sum();
            for t in &mut taps {
                t.1 /= total;
            }
            taps
        })
        .collect()
}

fn downsample_plane(plane: &[f64], width: usize, height: usize, s: usize) -> Vec<f64> {
    let xt = downsample_taps(width, s);
    let yt = downsample_taps(height, s);
    let ow = xt.len();
    let oh = yt.len();

    let mut rows = vec![0.0; ow * height];
    rows.par_chunks_mut(ow).enumerate().for_each(|(y, out)| {
        let src = &plane[y * width..(y + 1) * width];
        for (o, taps) in out.iter_mut().zip(&xt) {
            *o = taps.iter().map(|&(i, w)| w * src[i]).sum();
        }
    });

    let mut out = vec![0.0; ow * oh];
    out.par_chunks_mut(ow).zip(yt.par_iter()).for_each(|(dst, taps)| {
        for &(row, w) in taps {
            let src = &rows[row * ow..(row + 1) * ow];
            for (d, v) in dst.iter_mut().zip(src) {
                *d += w * v;
            }
        }
    });
    out
}

/// Bilinear downsample by factor `s` (tent kernel of half-width `s`),
/// producing `ceil(width / s) x ceil(height / s)` samples.
pub fn bilinear_downsample(x: &PlanarImage, s: usize) -> Result<PlanarImage> {
    check_factor(s)?;
    let (ow, oh) = (x.width().div_ceil(s), x.height().div_ceil(s));
    let mut data = Vec::with_capacity(ow * oh * x.channels());
    for plane in x.planes() {
        data.extend(downsample_plane(plane, x.width(), x.height(), s));
    }
    PlanarImage::from_vec(ow, oh, x.channels(), x.space(), data)
}

/// Confidence-weighted bilinear downsample, `ds(x * c) / ds(c)`.
///
/// `c` is a single channel broadcast over the channels of `x` and must be
/// strictly positive everywhere.
pub fn weighted_downsample(x: &PlanarImage, c: &PlanarImage, s: usize) -> Result<PlanarImage> {
    check_factor(s)?;
    c.check_channels(1, "confidence")?;
    x.check_same_size(c)?;
    if let Some(i) = c.plane(0).iter().position(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "confidence must be positive; found {} at ({}, {})",
            c.plane(0)[i],
            i % c.width(),
            i / c.width()
        )));
    }
    let (w, h) = (x.width(), x.height());
    let weight = downsample_plane(c.plane(0), w, h, s);
    let mut data = Vec::with_capacity(weight.len() * x.channels());
    let mut weighted = vec![0.0; w * h];
    for plane in x.planes() {
        for ((dst, v), cv) in weighted.iter_mut().zip(plane).zip(c.plane(0)) {
            *dst = v * cv;
        }
        let num = downsample_plane(&weighted, w, h, s);
        data.extend(num.iter().zip(&weight).map(|(n, d)| n / d));
    }
    PlanarImage::from_vec(w.div_ceil(s), h.div_ceil(s), x.channels(), x.space(), data)
}

/// Factors `s` into at most three integer stages, as balanced as possible:
/// the largest stage is minimized first, then the smallest is maximized.
/// Stages are returned largest first; `s = 1` needs no stage.
pub fn upsample_stages(s: usize) -> Vec<usize> {
    let mut best: Option<[usize; 3]> = None;
    for a in 1..=s {
        if !s.is_multiple_of(a) {
            continue;
        }
        for b in 1..=a {
            if !(s / a).is_multiple_of(b) {
                continue;
            }
            let c = s / a / b;
            if c > b {
                continue;
            }
            let cand = [a, b, c];
            let better = match best {
                None => true,
                Some(cur) => (cand[0], std::cmp::Reverse(cand[2])) < (cur[0], std::cmp::Reverse(cur[2])),
            };
            if better {
                best = Some(cand);
            }
        }
    }
    best.map(|f| f.into_iter().filter(|&v| v > 1).collect())
        .unwrap_or_default()
}

/// Linear-interpolation taps for one `f`-fold upsampling stage.
fn upsample_taps(n: usize, f: usize) -> Vec<(usize, usize, f64)> {
    (0..n * f)
        .map(|i| {
            let u = (i as f64 + 0.5) / f as f64 - 0.5;
            let i0 = u.floor();
            let t = u - i0;
            let clamp = |k: f64| k.clamp(0.0, (n - 1) as f64) as usize;
            (clamp(i0), clamp(i0 + 1.0), t)
        })
        .collect()
}

fn upsample_stage(plane: &[f64], width: usize, height: usize, f: usize) -> Vec<f64> {
    let xt = upsample_taps(width, f);
    let yt = upsample_taps(height, f);
    let ow = width * f;

    let mut rows = vec![0.0; ow * height];
    rows.par_chunks_mut(ow).enumerate().for_each(|(y, out)| {
        let src = &plane[y * width..(y + 1) * width];
        for (o, &(i0, i1, t)) in out.iter_mut().zip(&xt) {
            *o = src[i0] + t * (src[i1] - src[i0]);
        }
    });

    let mut out = vec![0.0; ow * height * f];
    out.par_chunks_mut(ow).zip(yt.par_iter()).for_each(|(dst, &(r0, r1, t))| {
        let a = &rows[r0 * ow..(r0 + 1) * ow];
        let b = &rows[r1 * ow..(r1 + 1) * ow];
        for ((d, va), vb) in dst.iter_mut().zip(a).zip(b) {
            *d = va + t * (vb - va);
        }
    });
    out
}

/// Upsamples by `s` through consecutive triangle-kernel stages (see
/// [`upsample_stages`]). The output is exactly `s` times larger.
pub fn smooth_upsample(x: &PlanarImage, s: usize) -> Result<PlanarImage> {
    check_factor(s)?;
    smooth_upsample_to(x, s, x.width() * s, x.height() * s)
}

/// [`smooth_upsample`] cropped to `width x height`, which must not exceed
/// the `s`-fold size.
pub fn smooth_upsample_to(
    x: &PlanarImage,
    s: usize,
    width: usize,
    height: usize,
) -> Result<PlanarImage> {
    check_factor(s)?;
    if width > x.width() * s || height > x.height() * s {
        return Err(Error::InvalidInput(format!(
            "{width}x{height} exceeds {s}x upsampling of {}x{}",
            x.width(),
            x.height()
        )));
    }
    let stages = upsample_stages(s);
    let mut data = Vec::with_capacity(width * height * x.channels());
    for plane in x.planes() {
        let (mut w, mut h) = (x.width(), x.height());
        let mut cur = plane.to_vec();
        for &f in &stages {
            cur = upsample_stage(&cur, w, h, f);
            w *= f;
            h *= f;
        }
        for row in cur.chunks_exact(w).take(height) {
            data.extend_from_slice(&row[..width]);
        }
    }
    PlanarImage::from_vec(width, height, x.channels(), x.space(), data)
}

fn check_factor(s: usize) -> Result<()> {
    if s == 0 {
        Err(Error::InvalidParameter("downsampling factor must be >= 1".into()))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::ColorSpace;

    fn plane(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> PlanarImage {
        PlanarImage::from_fn(w, h, 1, ColorSpace::Generic, |x, y, _| f(x, y)).unwrap()
    }

    #[test]
    fn stage_factorizations() {
        assert_eq!(upsample_stages(64), vec![4, 4, 4]);
        assert_eq!(upsample_stages(16), vec![4, 2, 2]);
        assert_eq!(upsample_stages(48), vec![4, 4, 3]);
        assert_eq!(upsample_stages(8), vec![2, 2, 2]);
        assert_eq!(upsample_stages(1), Vec::<usize>::new());
        assert_eq!(upsample_stages(2), vec![2]);
        assert_eq!(upsample_stages(7), vec![7]);
        for s in 1..200 {
            let st = upsample_stages(s);
            assert!(st.len() <= 3);
            assert_eq!(st.iter().product::<usize>().max(1), s);
        }
    }

    #[test]
    fn downsample_taps_sum_to_one() {
        for s in [1, 2, 3, 4, 8, 16] {
            for taps in downsample_taps(37, s) {
                let total: f64 = taps.iter().map(|t| t.1).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factor_one_is_identity() {
        let img = plane(5, 4, |x, y| (x * 3 + y) as f64);
        assert_eq!(bilinear_downsample(&img, 1).unwrap().data(), img.data());
        assert_eq!(smooth_upsample(&img, 1).unwrap().data(), img.data());
    }

    #[test]
    fn ceil_dimensions() {
        let img = plane(10, 7, |_, _| 1.0);
        let ds = bilinear_downsample(&img, 4).unwrap();
        assert_eq!((ds.width(), ds.height()), (3, 2));
    }

    #[test]
    fn weighted_downsample_constant_and_uniform() {
        let x = plane(12, 9, |_, _| 0.37);
        let c = plane(12, 9, |x, y| 0.1 + 0.05 * ((x * y) % 7) as f64);
        let out = weighted_downsample(&x, &c, 4).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.37).abs() < 1e-14));

        let x = plane(12, 9, |x, y| (x as f64).sin() + y as f64);
        let uniform = plane(12, 9, |_, _| 0.3);
        let a = weighted_downsample(&x, &uniform, 4).unwrap();
        let b = bilinear_downsample(&x, 4).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_downsample_rejects_nonpositive_confidence() {
        let x = plane(4, 4, |_, _| 1.0);
        let c = plane(4, 4, |x, y| if x == 2 && y == 1 { 0.0 } else { 1.0 });
        let err = weighted_downsample(&x, &c, 2).unwrap_err();
        assert!(err.to_string().contains("(2, 1)"));
    }

    #[test]
    fn upsample_reproduces_constants() {
        let x = plane(3, 2, |_, _| 0.625);
        for s in [2, 8, 16, 48, 64] {
            let up = smooth_upsample(&x, s).unwrap();
            assert_eq!((up.width(), up.height()), (3 * s, 2 * s));
            assert!(up.data().iter().all(|&v| v == 0.625));
        }
    }

    #[test]
    fn upsample_crop_rejects_oversize() {
        let x = plane(3, 2, |_, _| 0.0);
        assert!(smooth_upsample_to(&x, 4, 13, 8).is_err());
        assert!(smooth_upsample_to(&x, 4, 10, 7).is_ok());
    }
}
