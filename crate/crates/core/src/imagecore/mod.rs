//! Planar floating-point rasters and the pixelwise algebra shared by every
//! other module.
//!
//! A [`PlanarImage`] stores each channel as a contiguous `width * height`
//! plane, so separable filters walk rows without striding over the other
//! channels.

mod algebra;
mod color;
mod resize;

pub use algebra::{add, dot3, hadamard, outer3, scale, sub};
pub use color::{
    hsv_to_rgb, hsv_to_rgb_pixel, rgb_to_hsv, rgb_to_hsv_pixel, rgb_to_yuv, yuv_to_rgb,
    RangePolicy, YUV_FROM_RGB,
};
pub use resize::resize_bilinear;

use crate::error::{Error, Result};

/// What the channels of a [`PlanarImage`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorSpace {
    Rgb,
    Yuv,
    /// Hue is stored as a fraction of a full turn in `[0, 1)`.
    Hsv,
    /// Single channel in `[0, 1]`: alpha mattes, probabilities, confidences.
    Mask,
    Generic,
}

/// An `H x W x C` raster of `f64` samples in channel-planar layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarImage {
    width: usize,
    height: usize,
    channels: usize,
    space: ColorSpace,
    data: Vec<f64>,
}

impl PlanarImage {
    /// A zero-filled image.
    pub fn zeros(width: usize, height: usize, channels: usize, space: ColorSpace) -> Result<Self> {
        Self::from_vec(width, height, channels, space, vec![0.0; width * height * channels])
    }

    /// Wraps planar `data` (all of channel 0, then channel 1, ...).
    ///
    /// Mask images are clamped to `[0, 1]` on construction.
    pub fn from_vec(
        width: usize,
        height: usize,
        channels: usize,
        space: ColorSpace,
        mut data: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels == 0 {
            return Err(Error::InvalidInput("image needs at least one channel".into()));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidInput(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        match space {
            ColorSpace::Mask => {
                if channels != 1 {
                    return Err(Error::InvalidInput(format!(
                        "mask images have one channel, got {channels}"
                    )));
                }
                for v in &mut data {
                    *v = clamp_unit(*v);
                }
            }
            ColorSpace::Rgb | ColorSpace::Yuv | ColorSpace::Hsv if channels != 3 => {
                return Err(Error::InvalidInput(format!(
                    "{space:?} images have three channels, got {channels}"
                )));
            }
            _ => {}
        }
        Ok(PlanarImage {
            width,
            height,
            channels,
            space,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y, channel)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        space: ColorSpace,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::from_vec(width, height, channels, space, data)
    }

    /// An image with the same value per channel at every pixel.
    pub fn filled(width: usize, height: usize, values: &[f64], space: ColorSpace) -> Result<Self> {
        Self::from_fn(width, height, values.len(), space, |_, _, c| values[c])
    }

    /// A single-channel mask; values are clamped to `[0, 1]`.
    pub fn mask(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_vec(width, height, 1, ColorSpace::Mask, data)
    }

    /// Stacks single- or multi-channel images of equal size into one image.
    pub fn stack(parts: &[&PlanarImage], space: ColorSpace) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("cannot stack zero images".into()))?;
        let mut data = Vec::new();
        for p in parts {
            first.check_same_size(p)?;
            data.extend_from_slice(&p.data);
        }
        let channels = parts.iter().map(|p| p.channels).sum();
        Self::from_vec(first.width, first.height, channels, space, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.pixel_count();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn planes(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.pixel_count())
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// The three channels of pixel `(x, y)` of a 3-channel image.
    #[inline]
    pub fn pixel3(&self, x: usize, y: usize) -> [f64; 3] {
        let i = y * self.width + x;
        let n = self.pixel_count();
        [self.data[i], self.data[n + i], self.data[2 * n + i]]
    }

    /// A copy of one channel as a standalone image.
    pub fn channel(&self, c: usize) -> PlanarImage {
        PlanarImage {
            width: self.width,
            height: self.height,
            channels: 1,
            space: ColorSpace::Generic,
            data: self.plane(c).to_vec(),
        }
    }

    /// Retags the image. Retagging as a mask clamps to `[0, 1]`.
    pub fn with_space(self, space: ColorSpace) -> Result<Self> {
        Self::from_vec(self.width, self.height, self.channels, space, self.data)
    }

    pub fn same_size(&self, other: &PlanarImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_size(&self, other: &PlanarImage) -> Result<()> {
        if self.same_size(other) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "spatial size mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub(crate) fn check_channels(&self, want: usize, what: &str) -> Result<()> {
        if self.channels == want {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "{what} needs {want} channel(s), got {}",
                self.channels
            )))
        }
    }

    /// Applies `f` to every sample, keeping shape and tag.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<PlanarImage> {
        Self::from_vec(
            self.width,
            self.height,
            self.channels,
            self.space,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Mirrors the image left to right.
    pub fn flip_horizontal(&self) -> PlanarImage {
        let mut out = self.clone();
        for c in 0..self.channels {
            for row in out.plane_mut(c).chunks_exact_mut(self.width) {
                row.reverse();
            }
        }
        out
    }
}

#[inline]
pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Linear interpolation that is exact at `t = 0`, `t = 1` and when `a == b`.
#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else if t == 1.0 {
        b
    } else {
        a + t * (b - a)
    }
}
