//! Per-pixel confidence for the weighted guided filter.
//!
//! Two sources: a calibrated function of a network's sky probability
//! ([`inference_confidence`]), and a three-level map derived from annotation
//! provenance ([`trimap_confidence`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::PlanarImage;
use crate::trimap::{Label, Trimap};

/// Schlick's bias curve `x / ((1/b - 2)(1 - x) + 1)`.
///
/// Fixes 0 and 1, is the identity at `b = 0.5`, bows below the diagonal for
/// `b < 0.5` and above it for `b > 0.5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasCurve {
    k: f64,
}

impl BiasCurve {
    pub fn new(b: f64) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "bias shape must lie in (0, 1), got {b}"
            )));
        }
        Ok(BiasCurve { k: 1.0 / b - 2.0 })
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        x / (self.k * (1.0 - x) + 1.0)
    }
}

/// [`BiasCurve`] evaluated once.
pub fn bias(x: f64, b: f64) -> Result<f64> {
    Ok(BiasCurve::new(b)?.apply(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfidenceParams {
    /// Below this probability the pixel leans "not sky".
    pub l: f64,
    /// Above this probability the pixel leans "sky".
    pub h: f64,
    /// Bias shape of both ramps.
    pub b: f64,
    /// Confidence floor.
    pub eps: f64,
}

impl Default for InferenceConfidenceParams {
    fn default() -> Self {
        InferenceConfidenceParams {
            l: 0.3,
            h: 0.5,
            b: 0.8,
            eps: 0.01,
        }
    }
}

impl InferenceConfidenceParams {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.l
            && self.l <= self.h
            && self.h < 1.0
            && 0.0 < self.b
            && self.b < 1.0
            && 0.0 < self.eps
            && self.eps < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "inference confidence needs 0 < l <= h < 1, 0 < b < 1, 0 < eps < 1; got {self:?}"
            )))
        }
    }

    /// Confidence for a single probability.
    #[inline]
    pub fn confidence(&self, p: f64, curve: &BiasCurve) -> f64 {
        if p < self.l {
            self.eps.max(curve.apply((self.l - p) / self.l))
        } else if p > self.h {
            self.eps.max(curve.apply((p - self.h) / (1.0 - self.h)))
        } else {
            self.eps
        }
    }
}

/// Confidence in `[eps, 1]` for every pixel of a probability map.
///
/// Probabilities inside `[l, h]` get the floor; confidence rises toward
/// both ends. Both ramps apply the same curve over their own span.
pub fn inference_confidence(
    p: &PlanarImage,
    params: &InferenceConfidenceParams,
) -> Result<PlanarImage> {
    params.validate()?;
    p.check_channels(1, "probability map")?;
    let curve = BiasCurve::new(params.b)?;
    let data = p
        .plane(0)
        .iter()
        .map(|&v| params.confidence(v.clamp(0.0, 1.0), &curve))
        .collect();
    PlanarImage::mask(p.width(), p.height(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrimapConfidenceParams {
    /// Manually annotated pixels.
    pub c_det: f64,
    /// Pixels relabeled as sky by density inpainting.
    pub c_inpaint: f64,
    /// Everything else.
    pub c_undet: f64,
}

impl Default for TrimapConfidenceParams {
    fn default() -> Self {
        TrimapConfidenceParams {
            c_det: 0.8,
            c_inpaint: 0.6,
            c_undet: 0.4,
        }
    }
}

impl TrimapConfidenceParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if unit(self.c_det)
            && unit(self.c_inpaint)
            && unit(self.c_undet)
            && self.c_det >= self.c_inpaint
            && self.c_inpaint >= self.c_undet
        {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "trimap confidences must satisfy 1 >= c_det >= c_inpaint >= c_undet > 0; got {self:?}"
            )))
        }
    }
}

/// Three-level confidence from the original annotation and the inpainting flags.
///
/// `annotated` is the trimap before inpainting; `inpainted_sky` marks pixels
/// that inpainting relabeled as sky and may only be set on pixels that were
/// undetermined in `annotated`.
pub fn trimap_confidence(
    annotated: &Trimap,
    inpainted_sky: &[bool],
    params: &TrimapConfidenceParams,
) -> Result<PlanarImage> {
    params.validate()?;
    if inpainted_sky.len() != annotated.labels().len() {
        return Err(Error::InvalidInput(format!(
            "{} inpainting flags for a {}x{} trimap",
            inpainted_sky.len(),
            annotated.width(),
            annotated.height()
        )));
    }
    let mut data = Vec::with_capacity(inpainted_sky.len());
    for (i, (&label, &flag)) in annotated.labels().iter().zip(inpainted_sky).enumerate() {
        let v = match (label, flag) {
            (Label::Undetermined, true) => params.c_inpaint,
            (Label::Undetermined, false) => params.c_undet,
            (_, false) => params.c_det,
            (_, true) => {
                return Err(Error::InvalidInput(format!(
                    "pixel ({}, {}) is annotated but flagged as inpainted",
                    i % annotated.width(),
                    i / annotated.width()
                )))
            }
        };
        data.push(v);
    }
    PlanarImage::mask(annotated.width(), annotated.height(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bias_examples() {
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert_eq!(bias(x, 0.5).unwrap(), x);
        }
        for b in [0.1, 0.25, 0.8, 0.95] {
            assert_eq!(bias(0.0, b).unwrap(), 0.0);
            assert_eq!(bias(1.0, b).unwrap(), 1.0);
        }
        assert!((bias(0.5, 0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!((bias(0.5, 0.8).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn bias_rejects_bad_shape() {
        for b in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(bias(0.5, b).is_err());
        }
    }

    #[test]
    fn inference_confidence_examples() {
        let params = InferenceConfidenceParams::default();
        let p = PlanarImage::mask(5, 1, vec![0.4, 0.0, 1.0, 0.75, 0.3]).unwrap();
        let c = inference_confidence(&p, &params).unwrap();
        assert_eq!(c.data()[0], 0.01);
        assert_eq!(c.data()[1], 1.0);
        assert_eq!(c.data()[2], 1.0);
        assert!((c.data()[3] - 0.8).abs() < 1e-12);
        // The threshold itself belongs to the floor branch.
        assert_eq!(c.data()[4], 0.01);
    }

    #[test]
    fn trimap_confidence_table() {
        use Label::*;
        let t = Trimap::new(
            3,
            3,
            vec![Sky, Sky, Undetermined, Sky, Undetermined, NotSky, Undetermined, NotSky, NotSky],
        )
        .unwrap();
        let mut flags = vec![false; 9];
        flags[4] = true;
        let c = trimap_confidence(&t, &flags, &TrimapConfidenceParams::default()).unwrap();
        assert_eq!(c.data(), &[0.8, 0.8, 0.4, 0.8, 0.6, 0.8, 0.4, 0.8, 0.8]);

        flags[0] = true;
        assert!(trimap_confidence(&t, &flags, &TrimapConfidenceParams::default()).is_err());
    }

    #[test]
    fn trimap_confidence_without_inpainting() {
        let t = Trimap::new(2, 1, vec![Label::Sky, Label::Undetermined]).unwrap();
        let params = TrimapConfidenceParams {
            c_det: 1.0,
            c_inpaint: 0.5,
            c_undet: 0.5,
        };
        let c = trimap_confidence(&t, &[false, false], &params).unwrap();
        assert_eq!(c.data(), &[1.0, 0.5]);
        let all = Trimap::filled(4, 4, Label::NotSky).unwrap();
        let c = trimap_confidence(&all, &[false; 16], &TrimapConfidenceParams::default()).unwrap();
        assert!(c.data().iter().all(|&v| v == 0.8));
    }

    #[test]
    fn params_validation() {
        let bad = InferenceConfidenceParams { l: 0.6, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = TrimapConfidenceParams { c_undet: 0.9, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn bias_strictly_increasing(b in 0.01f64..0.99, x in 0.0f64..0.999, dx in 1e-6f64..1e-3) {
            let curve = BiasCurve::new(b).unwrap();
            let x2 = (x + dx).min(1.0);
            prop_assert!(curve.apply(x2) > curve.apply(x));
        }

        #[test]
        fn confidence_is_bounded_and_pixelwise(v in prop::collection::vec(0.0f64..=1.0, 8)) {
            let params = InferenceConfidenceParams::default();
            let p = PlanarImage::mask(8, 1, v.clone()).unwrap();
            let c = inference_confidence(&p, &params).unwrap();
            prop_assert!(c.data().iter().all(|&x| (0.01..=1.0).contains(&x)));
            let mut rev = v.clone();
            rev.reverse();
            let cr = inference_confidence(&PlanarImage::mask(8, 1, rev).unwrap(), &params).unwrap();
            let mut expect = c.data().to_vec();
            expect.reverse();
            prop_assert_eq!(cr.data(), &expect[..]);
        }
    }
}
