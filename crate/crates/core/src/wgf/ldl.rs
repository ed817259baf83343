use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::{ColorSpace, PlanarImage};

/// Outcome of one 3x3 LDL solve: the solution, or the failing pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PixelSolve {
    Solved([f64; 3]),
    BadPivot { pivot: u8, value: f64 },
}

/// Solves `A x = b` for one symmetric 3x3 system given as its upper triangle
/// `[a11, a12, a13, a22, a23, a33]`, via `A = L D L^T`.
#[inline]
pub fn ldl3_solve(a: [f64; 6], b: [f64; 3]) -> PixelSolve {
    let [a11, a12, a13, a22, a23, a33] = a;
    let d1 = a11;
    if !(d1 > 0.0) {
        return PixelSolve::BadPivot { pivot: 1, value: d1 };
    }
    let l12 = a12 / d1;
    let d2 = a22 - l12 * a12;
    if !(d2 > 0.0) {
        return PixelSolve::BadPivot { pivot: 2, value: d2 };
    }
    let l13 = a13 / d1;
    let l23 = (a23 - l13 * a12) / d2;
    let d3 = a33 - l13 * a13 - l23 * l23 * d2;
    if !(d3 > 0.0) {
        return PixelSolve::BadPivot { pivot: 3, value: d3 };
    }
    let y1 = b[0];
    let y2 = b[1] - l12 * y1;
    let y3 = b[2] - l13 * y1 - l23 * y2;
    let x3 = y3 / d3;
    let x2 = y2 / d2 - l23 * x3;
    let x1 = y1 / d1 - l12 * x2 - l13 * x3;
    PixelSolve::Solved([x1, x2, x3])
}

/// Solutions of one row and its first failing pixel (x, pivot, value).
type RowSolve = (Vec<[f64; 3]>, Option<(usize, u8, f64)>);

/// Solves one 3x3 SPD system per pixel.
///
/// `a` holds six channels (the upper triangle of each matrix, ordered as by
/// [`outer3`](crate::imagecore::outer3)); `b` holds three. A nonpositive pivot
/// fails the whole image with the first offending pixel in row-major order.
pub fn solve_image_ldl3(a: &PlanarImage, b: &PlanarImage) -> Result<PlanarImage> {
    a.check_channels(6, "LDL system matrix")?;
    b.check_channels(3, "LDL right-hand side")?;
    a.check_same_size(b)?;
    let (w, h) = (a.width(), a.height());
    let n = w * h;

    let rows: Vec<RowSolve> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut xs = Vec::with_capacity(w);
            let mut fail = None;
            for x in 0..w {
                let i = y * w + x;
                let m = std::array::from_fn(|c| a.data()[c * n + i]);
                let rhs = std::array::from_fn(|c| b.data()[c * n + i]);
                match ldl3_solve(m, rhs) {
                    PixelSolve::Solved(v) => xs.push(v),
                    PixelSolve::BadPivot { pivot, value } => {
                        fail.get_or_insert((x, pivot, value));
                        xs.push([f64::NAN; 3]);
                    }
                }
            }
            (xs, fail)
        })
        .collect();

    let mut data = vec![0.0; 3 * n];
    for (y, (xs, fail)) in rows.into_iter().enumerate() {
        if let Some((x, pivot, value)) = fail {
            return Err(Error::SingularSystem { x, y, pivot, value });
        }
        for (x, v) in xs.into_iter().enumerate() {
            for (c, vc) in v.into_iter().enumerate() {
                data[c * n + y * w + x] = vc;
            }
        }
    }
    PlanarImage::from_vec(w, h, 3, ColorSpace::Generic, data)
}
