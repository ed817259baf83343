//! PNG (8/16-bit), PFM and trimap readers and writers.
//!
//! PNG pixels are sRGB-encoded. [`Transfer::Encoded`] keeps the encoded
//! values as they are; [`Transfer::Linear`] decodes to linear light on read
//! and re-encodes on write. Masks and probability maps never go through the
//! transfer function.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::imagecore::{clamp_unit, ColorSpace, PlanarImage};
use crate::trimap::{Label, Trimap};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transfer {
    /// Work on gamma-encoded (display-referred) values.
    #[default]
    Encoded,
    /// Work on linear-light values.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

pub fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn is_pfm(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pfm"))
}

fn open_png(path: &Path) -> Result<DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| Error::codec(path, e))
}

fn is_16bit(img: &DynamicImage) -> bool {
    matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    )
}

/// Bit depth of a PNG file; PFM files report `Sixteen`.
pub fn bit_depth(path: &Path) -> Result<BitDepth> {
    if is_pfm(path) {
        return Ok(BitDepth::Sixteen);
    }
    Ok(if is_16bit(&open_png(path)?) {
        BitDepth::Sixteen
    } else {
        BitDepth::Eight
    })
}

/// Reads a color image (PNG or 3-channel PFM) as RGB in `[0, 1]`.
pub fn read_rgb(path: &Path, transfer: Transfer) -> Result<PlanarImage> {
    let img = if is_pfm(path) {
        let img = read_pfm(path)?;
        if img.channels() != 3 {
            return Err(Error::codec(path, "expected a color PFM"));
        }
        img.with_space(ColorSpace::Rgb)?
    } else {
        let png = open_png(path)?;
        let (w, h) = (png.width() as usize, png.height() as usize);
        let data: Vec<f64> = if is_16bit(&png) {
            let buf = png.to_rgb16();
            planar_from_interleaved(buf.as_raw(), 3, |v| v as f64 / 65535.0)
        } else {
            let buf = png.to_rgb8();
            planar_from_interleaved(buf.as_raw(), 3, |v| v as f64 / 255.0)
        };
        PlanarImage::from_vec(w, h, 3, ColorSpace::Rgb, data)?
    };
    Ok(match transfer {
        Transfer::Encoded => img,
        Transfer::Linear => img.map(srgb_to_linear)?,
    })
}

/// Reads a single-channel mask (grayscale PNG or 1-channel PFM), clamped to `[0, 1]`.
///
/// Color PNGs are accepted and reduced to their first channel.
pub fn read_mask(path: &Path) -> Result<PlanarImage> {
    if is_pfm(path) {
        let img = read_pfm(path)?;
        if img.channels() != 1 {
            return Err(Error::codec(path, "expected a grayscale PFM"));
        }
        return img.with_space(ColorSpace::Mask);
    }
    let png = open_png(path)?;
    let (w, h) = (png.width() as usize, png.height() as usize);
    let data = if is_16bit(&png) {
        png.to_luma16().as_raw().iter().map(|&v| v as f64 / 65535.0).collect()
    } else if png.color().has_color() {
        png.to_rgb8().as_raw().iter().step_by(3).map(|&v| v as f64 / 255.0).collect()
    } else {
        png.to_luma8().as_raw().iter().map(|&v| v as f64 / 255.0).collect()
    };
    PlanarImage::mask(w, h, data)
}

fn planar_from_interleaved<T: Copy>(raw: &[T], channels: usize, f: impl Fn(T) -> f64) -> Vec<f64> {
    let n = raw.len() / channels;
    let mut out = vec![0.0; raw.len()];
    for (i, px) in raw.chunks_exact(channels).enumerate() {
        for (c, &v) in px.iter().enumerate() {
            out[c * n + i] = f(v);
        }
    }
    out
}

fn interleaved<T>(img: &PlanarImage, f: impl Fn(f64) -> T) -> Vec<T> {
    let n = img.pixel_count();
    let ch = img.channels();
    let mut out = Vec::with_capacity(n * ch);
    for i in 0..n {
        for c in 0..ch {
            out.push(f(img.plane(c)[i]));
        }
    }
    out
}

/// Writes a 1- or 3-channel image as PNG. `transfer` applies to 3-channel
/// images only.
pub fn write_png(path: &Path, img: &PlanarImage, depth: BitDepth, transfer: Transfer) -> Result<()> {
    let encode = |v: f64| {
        let v = if img.channels() == 3 && transfer == Transfer::Linear {
            linear_to_srgb(clamp_unit(v))
        } else {
            v
        };
        clamp_unit(v)
    };
    let (w, h) = (img.width() as u32, img.height() as u32);
    let dynamic = match (img.channels(), depth) {
        (1, BitDepth::Eight) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, interleaved(img, |v| quantize8(encode(v))))
                .expect("buffer size"),
        ),
        (1, BitDepth::Sixteen) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, interleaved(img, |v| quantize16(encode(v))))
                .expect("buffer size"),
        ),
        (3, BitDepth::Eight) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, interleaved(img, |v| quantize8(encode(v))))
                .expect("buffer size"),
        ),
        (3, BitDepth::Sixteen) => DynamicImage::ImageRgb16(
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, interleaved(img, |v| quantize16(encode(v))))
                .expect("buffer size"),
        ),
        (c, _) => {
            return Err(Error::InvalidInput(format!(
                "PNG output needs 1 or 3 channels, got {c}"
            )))
        }
    };
    dynamic
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::codec(path, e))
}

fn quantize8(v: f64) -> u8 {
    (v * 255.0).round() as u8
}

fn quantize16(v: f64) -> u16 {
    (v * 65535.0).round() as u16
}

/// Writes a 1- or 3-channel image as little-endian PFM.
pub fn write_pfm(path: &Path, img: &PlanarImage) -> Result<()> {
    let tag = match img.channels() {
        1 => "Pf",
        3 => "PF",
        c => {
            return Err(Error::InvalidInput(format!(
                "PFM output needs 1 or 3 channels, got {c}"
            )))
        }
    };
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut bytes = format!("{tag}\n{} {}\n-1.0\n", img.width(), img.height()).into_bytes();
    // PFM rows run bottom to top.
    for y in (0..img.height()).rev() {
        for x in 0..img.width() {
            for c in 0..img.channels() {
                bytes.extend_from_slice(&(img.get(x, y, c) as f32).to_le_bytes());
            }
        }
    }
    out.write_all(&bytes)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<PlanarImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut pos = 0;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::codec(path, "truncated PFM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let channels = match token()?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::codec(path, format!("bad PFM magic {other:?}"))),
    };
    let bad = |what: &str| Error::codec(path, format!("bad PFM {what}"));
    let width: usize = token()?.parse().map_err(|_| bad("width"))?;
    let height: usize = token()?.parse().map_err(|_| bad("height"))?;
    let scale: f64 = token()?.parse().map_err(|_| bad("scale"))?;
    // Exactly one whitespace byte separates the header from the raster.
    let data_start = pos + 1;
    let need = width * height * channels * 4;
    if bytes.len() < data_start + need {
        return Err(Error::codec(path, "truncated PFM raster"));
    }
    let raster = &bytes[data_start..data_start + need];
    let little = scale < 0.0;
    let mut img = PlanarImage::zeros(width, height, channels, ColorSpace::Generic)?;
    for (k, chunk) in raster.chunks_exact(4).enumerate() {
        let arr = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(arr)
        } else {
            f32::from_be_bytes(arr)
        };
        let c = k % channels;
        let px = k / channels;
        let (x, row) = (px % width, px / width);
        img.set(x, height - 1 - row, c, v as f64);
    }
    Ok(img)
}

/// Writes a matte as PFM or 16-bit PNG depending on the extension.
pub fn write_matte(path: &Path, img: &PlanarImage) -> Result<()> {
    if is_pfm(path) {
        write_pfm(path, img)
    } else {
        write_png(path, img, BitDepth::Sixteen, Transfer::Encoded)
    }
}

/// Writes a trimap as an indexed PNG whose palette index equals the gray
/// level: 0 = not sky, 128 = undetermined, 255 = sky.
pub fn write_trimap(path: &Path, t: &Trimap) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), t.width() as u32, t.height() as u32);
    enc.set_color(png::ColorType::Indexed);
    enc.set_depth(png::BitDepth::Eight);
    let palette: Vec<u8> = (0..=255u8).flat_map(|v| [v, v, v]).collect();
    enc.set_palette(palette);
    let mut writer = enc.write_header().map_err(|e| Error::codec(path, e))?;
    let data: Vec<u8> = t.labels().iter().map(|l| l.level()).collect();
    writer
        .write_image_data(&data)
        .and_then(|_| writer.finish())
        .map_err(|e| Error::codec(path, e))
}

/// Reads a trimap PNG (indexed or grayscale); each pixel maps to the nearest
/// of the three label levels.
pub fn read_trimap(path: &Path) -> Result<Trimap> {
    let png = open_png(path)?;
    let (w, h) = (png.width() as usize, png.height() as usize);
    let labels = png
        .to_rgb8()
        .as_raw()
        .iter()
        .step_by(3)
        .map(|&v| Label::from_level(v))
        .collect();
    Trimap::new(w, h, labels)
}
