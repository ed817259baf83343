use super::{ColorSpace, PlanarImage};
use crate::error::{Error, Result};

/// Upper triangle of the per-pixel outer product of two 3-channel images.
///
/// Output channels are ordered `(1,1), (1,2), (1,3), (2,2), (2,3), (3,3)`.
pub fn outer3(x: &PlanarImage, y: &PlanarImage) -> Result<PlanarImage> {
    x.check_channels(3, "outer3 operand")?;
    y.check_channels(3, "outer3 operand")?;
    x.check_same_size(y)?;
    const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let n = x.pixel_count();
    let mut data = Vec::with_capacity(6 * n);
    for (i, j) in PAIRS {
        data.extend(x.plane(i).iter().zip(y.plane(j)).map(|(a, b)| a * b));
    }
    PlanarImage::from_vec(x.width(), x.height(), 6, ColorSpace::Generic, data)
}

/// Elementwise product. A 1-channel operand is broadcast across the other's
/// channels.
pub fn hadamard(x: &PlanarImage, y: &PlanarImage) -> Result<PlanarImage> {
    zip_broadcast(x, y, |a, b| a * b)
}

/// Elementwise sum with the same broadcasting rule as [`hadamard`].
pub fn add(x: &PlanarImage, y: &PlanarImage) -> Result<PlanarImage> {
    zip_broadcast(x, y, |a, b| a + b)
}

/// Elementwise difference with the same broadcasting rule as [`hadamard`].
pub fn sub(x: &PlanarImage, y: &PlanarImage) -> Result<PlanarImage> {
    zip_broadcast(x, y, |a, b| a - b)
}

pub fn scale(x: &PlanarImage, k: f64) -> PlanarImage {
    let data = x.data().iter().map(|v| v * k).collect();
    PlanarImage::from_vec(x.width(), x.height(), x.channels(), ColorSpace::Generic, data)
        .expect("shape preserved")
}

/// Hadamard product summed over channels.
pub fn dot3(x: &PlanarImage, y: &PlanarImage) -> Result<PlanarImage> {
    x.check_channels(3, "dot3 operand")?;
    y.check_channels(3, "dot3 operand")?;
    x.check_same_size(y)?;
    let data = (0..x.pixel_count())
        .map(|i| {
            x.plane(0)[i] * y.plane(0)[i]
                + x.plane(1)[i] * y.plane(1)[i]
                + x.plane(2)[i] * y.plane(2)[i]
        })
        .collect();
    PlanarImage::from_vec(x.width(), x.height(), 1, ColorSpace::Generic, data)
}

fn zip_broadcast(
    x: &PlanarImage,
    y: &PlanarImage,
    f: impl Fn(f64, f64) -> f64,
) -> Result<PlanarImage> {
    x.check_same_size(y)?;
    let channels = match (x.channels(), y.channels()) {
        (a, b) if a == b => a,
        (1, b) => b,
        (a, 1) => a,
        (a, b) => {
            return Err(Error::InvalidInput(format!(
                "cannot broadcast {a}-channel and {b}-channel images"
            )))
        }
    };
    let n = x.pixel_count();
    let mut data = Vec::with_capacity(channels * n);
    for c in 0..channels {
        let xp = x.plane(if x.channels() == 1 { 0 } else { c });
        let yp = y.plane(if y.channels() == 1 { 0 } else { c });
        data.extend(xp.iter().zip(yp).map(|(&a, &b)| f(a, b)));
    }
    let space = if x.channels() == channels { x.space() } else { y.space() };
    let space = if space == ColorSpace::Mask { ColorSpace::Generic } else { space };
    PlanarImage::from_vec(x.width(), x.height(), channels, space, data)
}
