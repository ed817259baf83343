//! Matte quality metrics: binarized IoU and misclassification rate, RMSE,
//! MAE, gradient boundary loss and Bernoulli Jensen-Shannon divergence.
//!
//! Sums use a fixed pairwise tree over row-major order, so every metric is
//! bit-stable regardless of thread count.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::imagecore::PlanarImage;

/// Binarization threshold; values equal to it count as sky.
pub const THRESHOLD: f64 = 0.5;
/// Probability clamp used before the logarithms of [`jsd`].
pub const JSD_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub miou_05: f64,
    pub mcr_05: f64,
    pub rmse: f64,
    pub mae: f64,
    pub boundary_loss: f64,
    pub jsd: f64,
    pub pixels: usize,
}

impl MetricsReport {
    /// Column names in output order.
    pub const COLUMNS: [&'static str; 7] =
        ["miou_05", "mcr_05", "rmse", "mae", "boundary_loss", "jsd", "pixels"];

    /// Per-field mean over images; `pixels` is summed. `None` when empty.
    pub fn mean(reports: &[MetricsReport]) -> Option<MetricsReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| {
            pairwise_sum(&reports.iter().map(f).collect::<Vec<_>>()) / n
        };
        Some(MetricsReport {
            miou_05: avg(|r| r.miou_05),
            mcr_05: avg(|r| r.mcr_05),
            rmse: avg(|r| r.rmse),
            mae: avg(|r| r.mae),
            boundary_loss: avg(|r| r.boundary_loss),
            jsd: avg(|r| r.jsd),
            pixels: reports.iter().map(|r| r.pixels).sum(),
        })
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn planes<'a>(pred: &'a PlanarImage, gt: &'a PlanarImage) -> Result<(&'a [f64], &'a [f64])> {
    pred.check_channels(1, "predicted matte")?;
    gt.check_channels(1, "ground-truth matte")?;
    pred.check_same_size(gt)?;
    Ok((pred.plane(0), gt.plane(0)))
}

/// `(mIOU, MCR)` of the sky class after thresholding both mattes at 0.5.
///
/// With no positives in either matte the IoU is defined as 1.
pub fn binarized_metrics(pred: &PlanarImage, gt: &PlanarImage) -> Result<(f64, f64)> {
    let (p, g) = planes(pred, gt)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&x, &y) in p.iter().zip(g) {
        match (x >= THRESHOLD, y >= THRESHOLD) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let union = tp + fp + fn_;
    let miou = if union == 0 {
        log::warn!("no sky in prediction or ground truth; IoU taken as 1");
        1.0
    } else {
        tp as f64 / union as f64
    };
    Ok((miou, (fp + fn_) as f64 / p.len() as f64))
}

/// `(RMSE, MAE)`.
pub fn continuous_metrics(pred: &PlanarImage, gt: &PlanarImage) -> Result<(f64, f64)> {
    let (p, g) = planes(pred, gt)?;
    let m = p.len() as f64;
    let diff: Vec<f64> = p.iter().zip(g).map(|(x, y)| x - y).collect();
    let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
    let abs: Vec<f64> = diff.iter().map(|d| d.abs()).collect();
    Ok(((pairwise_sum(&sq) / m).sqrt(), pairwise_sum(&abs) / m))
}

/// Forward differences along x and y; the last column/row gets 0.
fn gradient(v: &[f64], w: usize, h: usize, x: usize, y: usize) -> (f64, f64) {
    let i = y * w + x;
    let dx = if x + 1 < w { v[i + 1] - v[i] } else { 0.0 };
    let dy = if y + 1 < h { v[i + w] - v[i] } else { 0.0 };
    (dx, dy)
}

/// RMS difference of the spatial gradients.
pub fn boundary_loss(pred: &PlanarImage, gt: &PlanarImage) -> Result<f64> {
    let (p, g) = planes(pred, gt)?;
    let (w, h) = (pred.width(), pred.height());
    let mut terms = Vec::with_capacity(p.len());
    for y in 0..h {
        for x in 0..w {
            let (px, py) = gradient(p, w, h, x, y);
            let (gx, gy) = gradient(g, w, h, x, y);
            terms.push((px - gx).powi(2) + (py - gy).powi(2));
        }
    }
    Ok((pairwise_sum(&terms) / p.len() as f64).sqrt())
}

fn bernoulli_kl(p: f64, q: f64) -> f64 {
    p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
}

/// Jensen-Shannon divergence of two Bernoulli distributions, in nats.
pub fn bernoulli_jsd(p: f64, q: f64) -> f64 {
    let p = p.clamp(JSD_DELTA, 1.0 - JSD_DELTA);
    let q = q.clamp(JSD_DELTA, 1.0 - JSD_DELTA);
    let m = 0.5 * (p + q);
    0.5 * bernoulli_kl(p, m) + 0.5 * bernoulli_kl(q, m)
}

/// Mean per-pixel Bernoulli JSD.
pub fn jsd(pred: &PlanarImage, gt: &PlanarImage) -> Result<f64> {
    let (p, g) = planes(pred, gt)?;
    let terms: Vec<f64> = p.iter().zip(g).map(|(&x, &y)| bernoulli_jsd(x, y)).collect();
    Ok(pairwise_sum(&terms) / p.len() as f64)
}

/// All six metrics for one prediction.
pub fn evaluate(pred: &PlanarImage, gt: &PlanarImage) -> Result<MetricsReport> {
    let (miou_05, mcr_05) = binarized_metrics(pred, gt)?;
    let (rmse, mae) = continuous_metrics(pred, gt)?;
    Ok(MetricsReport {
        miou_05,
        mcr_05,
        rmse,
        mae,
        boundary_loss: boundary_loss(pred, gt)?,
        jsd: jsd(pred, gt)?,
        pixels: pred.pixel_count(),
    })
}
