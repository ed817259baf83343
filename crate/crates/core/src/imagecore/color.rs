//! RGB <-> YUV (BT.601, full range) and RGB <-> HSV conversions.

use super::{clamp_unit, ColorSpace, PlanarImage};
use crate::error::{Error, Result};

const KR: f64 = 0.299;
const KB: f64 = 0.114;
const KG: f64 = 1.0 - KR - KB;

/// BT.601 full-range matrix; rows produce Y, U (Cb), V (Cr).
pub const YUV_FROM_RGB: [[f64; 3]; 3] = [
    [KR, KG, KB],
    [-KR / (2.0 * (1.0 - KB)), -KG / (2.0 * (1.0 - KB)), 0.5],
    [0.5, -KG / (2.0 * (1.0 - KR)), -KB / (2.0 * (1.0 - KR))],
];

/// How colorspace conversions treat samples outside `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RangePolicy {
    /// Clamp into range and log a warning.
    #[default]
    Clamp,
    /// Refuse out-of-range input.
    Strict,
}

fn checked_rgb(img: &PlanarImage, policy: RangePolicy, op: &str) -> Result<PlanarImage> {
    if img.space() != ColorSpace::Rgb {
        return Err(Error::InvalidInput(format!(
            "{op} expects an RGB image, got {:?} with {} channel(s)",
            img.space(),
            img.channels()
        )));
    }
    let outside = img.data().iter().filter(|v| !(0.0..=1.0).contains(*v)).count();
    if outside == 0 {
        return Ok(img.clone());
    }
    match policy {
        RangePolicy::Strict => Err(Error::InvalidInput(format!(
            "{op}: {outside} sample(s) outside [0, 1]"
        ))),
        RangePolicy::Clamp => {
            log::warn!("{op}: clamping {outside} sample(s) into [0, 1]");
            img.map(clamp_unit)
        }
    }
}

pub fn rgb_to_yuv(img: &PlanarImage, policy: RangePolicy) -> Result<PlanarImage> {
    let rgb = checked_rgb(img, policy, "rgb_to_yuv")?;
    let n = rgb.pixel_count();
    let mut data = vec![0.0; 3 * n];
    for i in 0..n {
        let p = [rgb.plane(0)[i], rgb.plane(1)[i], rgb.plane(2)[i]];
        for (row, m) in YUV_FROM_RGB.iter().enumerate() {
            data[row * n + i] = m[0] * p[0] + m[1] * p[1] + m[2] * p[2];
        }
    }
    PlanarImage::from_vec(rgb.width(), rgb.height(), 3, ColorSpace::Yuv, data)
}

pub fn yuv_to_rgb(img: &PlanarImage) -> Result<PlanarImage> {
    if img.space() != ColorSpace::Yuv {
        return Err(Error::InvalidInput(format!(
            "yuv_to_rgb expects a YUV image, got {:?}",
            img.space()
        )));
    }
    let n = img.pixel_count();
    let mut data = vec![0.0; 3 * n];
    for i in 0..n {
        let (y, u, v) = (img.plane(0)[i], img.plane(1)[i], img.plane(2)[i]);
        let r = y + 2.0 * (1.0 - KR) * v;
        let b = y + 2.0 * (1.0 - KB) * u;
        let g = (y - KR * r - KB * b) / KG;
        data[i] = r;
        data[n + i] = g;
        data[2 * n + i] = b;
    }
    PlanarImage::from_vec(img.width(), img.height(), 3, ColorSpace::Rgb, data)
}

/// Hue in turns `[0, 1)`, saturation and value in `[0, 1]`.
#[inline]
pub fn rgb_to_hsv_pixel([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta <= 0.0 {
        return [0.0, s, max];
    }
    let sector = if max == r {
        (g - b) / delta
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let h = (sector / 6.0).rem_euclid(1.0);
    [if h >= 1.0 { 0.0 } else { h }, s, max]
}

#[inline]
pub fn hsv_to_rgb_pixel([h, s, v]: [f64; 3]) -> [f64; 3] {
    if s <= 0.0 {
        return [v, v, v];
    }
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = (h6.floor() as usize).min(5);
    let f = h6 - sector as f64;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

pub fn rgb_to_hsv(img: &PlanarImage, policy: RangePolicy) -> Result<PlanarImage> {
    let rgb = checked_rgb(img, policy, "rgb_to_hsv")?;
    map_pixels(&rgb, ColorSpace::Hsv, rgb_to_hsv_pixel)
}

pub fn hsv_to_rgb(img: &PlanarImage) -> Result<PlanarImage> {
    if img.space() != ColorSpace::Hsv {
        return Err(Error::InvalidInput(format!(
            "hsv_to_rgb expects an HSV image, got {:?}",
            img.space()
        )));
    }
    map_pixels(img, ColorSpace::Rgb, hsv_to_rgb_pixel)
}

fn map_pixels(
    img: &PlanarImage,
    space: ColorSpace,
    f: impl Fn([f64; 3]) -> [f64; 3],
) -> Result<PlanarImage> {
    let n = img.pixel_count();
    let mut data = vec![0.0; 3 * n];
    for i in 0..n {
        let out = f([img.plane(0)[i], img.plane(1)[i], img.plane(2)[i]]);
        data[i] = out[0];
        data[n + i] = out[1];
        data[2 * n + i] = out[2];
    }
    PlanarImage::from_vec(img.width(), img.height(), 3, space, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rgb1(p: [f64; 3]) -> PlanarImage {
        PlanarImage::filled(1, 1, &p, ColorSpace::Rgb).unwrap()
    }

    #[test]
    fn yuv_black_and_white() {
        assert_eq!(rgb_to_yuv(&rgb1([0.0; 3]), RangePolicy::Strict).unwrap().data(), &[0.0; 3]);
        let w = rgb_to_yuv(&rgb1([1.0; 3]), RangePolicy::Strict).unwrap();
        assert!((w.data()[0] - 1.0).abs() < 1e-15);
        assert!(w.data()[1].abs() < 1e-15 && w.data()[2].abs() < 1e-15);
    }

    #[test]
    fn yuv_matches_matrix_oracle() {
        // BT.601 full range, written out independently of YUV_FROM_RGB.
        let m = [
            [0.299, 0.587, 0.114],
            [-0.168_735_891_647_856, -0.331_264_108_352_144, 0.5],
            [0.5, -0.418_687_589_158_345, -0.081_312_410_841_655],
        ];
        let p = [0.5, 0.25, 0.75];
        let got = rgb_to_yuv(&rgb1(p), RangePolicy::Strict).unwrap();
        for (row, coeffs) in m.iter().enumerate() {
            let want: f64 = coeffs.iter().zip(p).map(|(a, b)| a * b).sum();
            assert!((got.data()[row] - want).abs() < 1e-12, "row {row}");
        }
    }

    #[test]
    fn yuv_rejects_wrong_tag() {
        let g = PlanarImage::filled(1, 1, &[0.1, 0.2, 0.3], ColorSpace::Generic).unwrap();
        assert!(rgb_to_yuv(&g, RangePolicy::Clamp).is_err());
        let m = PlanarImage::mask(1, 1, vec![0.1]).unwrap();
        assert!(rgb_to_yuv(&m, RangePolicy::Clamp).is_err());
    }

    #[test]
    fn hsv_examples() {
        assert_eq!(rgb_to_hsv_pixel([1.0, 0.0, 0.0]), [0.0, 1.0, 1.0]);
        assert_eq!(rgb_to_hsv_pixel([0.3, 0.3, 0.3]), [0.0, 0.0, 0.3]);
        // max = G = 0.6, min = 0.2, delta = 0.4; hue = 60 * ((B - R) / delta + 2) = 150 deg.
        let [h, s, v] = rgb_to_hsv_pixel([0.2, 0.6, 0.4]);
        assert!((h - 150.0 / 360.0).abs() < 1e-12);
        assert!((s - 0.4 / 0.6).abs() < 1e-12);
        assert!((v - 0.6).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_policy() {
        let img = rgb1([1.2, 0.5, -0.1]);
        assert!(rgb_to_hsv(&img, RangePolicy::Strict).is_err());
        let hsv = rgb_to_hsv(&img, RangePolicy::Clamp).unwrap();
        assert_eq!(hsv.data()[2], 1.0);
    }

    proptest! {
        #[test]
        fn conversions_round_trip(r in 0.0f64..=1.0, g in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let img = rgb1([r, g, b]);
            let back = yuv_to_rgb(&rgb_to_yuv(&img, RangePolicy::Strict).unwrap()).unwrap();
            for (x, y) in back.data().iter().zip(img.data()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
            let hsv = rgb_to_hsv(&img, RangePolicy::Strict).unwrap();
            prop_assert_eq!(hsv.data()[2], r.max(g).max(b));
            let back = hsv_to_rgb(&hsv).unwrap();
            for (x, y) in back.data().iter().zip(img.data()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }
}
