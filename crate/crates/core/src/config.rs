//! Run configuration and named parameter presets.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confidence::{InferenceConfidenceParams, TrimapConfidenceParams};
use crate::density::DensityParams;
use crate::error::{Error, Result};
use crate::refine::RefinePipelineParams;
use crate::wgf::GuidedFilterParams;

/// Named parameter bundles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Refinement of an in-house dataset: small `s`, density inpainting,
    /// no sharpening.
    PaperInternal,
    /// ADE20K refinement with the guided filter only.
    Ade20kGf,
    /// ADE20K refinement with density inpainting, the guided filter and
    /// sharpening.
    Ade20kDeGf,
    /// On-device upsampling of a low-resolution network output.
    PipelineS64,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::PaperInternal,
        Preset::Ade20kGf,
        Preset::Ade20kDeGf,
        Preset::PipelineS64,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperInternal => "paper-internal",
            Preset::Ade20kGf => "ade20k-gf",
            Preset::Ade20kDeGf => "ade20k-de-gf",
            Preset::PipelineS64 => "pipeline-s64",
        }
    }

    pub fn guided_filter(self) -> GuidedFilterParams {
        let s = match self {
            Preset::PaperInternal => 8,
            Preset::Ade20kGf => 48,
            Preset::Ade20kDeGf => 16,
            Preset::PipelineS64 => 64,
        };
        GuidedFilterParams {
            s,
            eps_l: 0.01,
            eps_c: 0.01,
        }
    }

    pub fn refine(self) -> RefinePipelineParams {
        let density = DensityParams {
            p_c: if self == Preset::Ade20kDeGf { 0.97 } else { 0.6 },
            ..DensityParams::default()
        };
        RefinePipelineParams {
            dilation_radius: 4,
            gf: self.guided_filter(),
            density,
            conf: TrimapConfidenceParams::default(),
            inpaint: self != Preset::Ade20kGf,
            sharpen: (self == Preset::Ade20kDeGf).then_some(15.0),
        }
    }

    pub fn upsample(self) -> UpsampleParams {
        UpsampleParams {
            gf: self.guided_filter(),
            confidence: InferenceConfidenceParams::default(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!("unknown preset {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Parameters of the low-resolution-to-full-resolution upsampling path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpsampleParams {
    pub gf: GuidedFilterParams,
    pub confidence: InferenceConfidenceParams,
}

/// JSON run configuration. Every field is optional; unset fields come from
/// the preset, and command-line flags override both.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub gf: Option<GuidedFilterParams>,
    pub confidence: Option<InferenceConfidenceParams>,
    pub density: Option<DensityParams>,
    pub trimap_confidence: Option<TrimapConfidenceParams>,
    pub dilation_radius: Option<usize>,
    pub inpaint: Option<bool>,
    pub sharpen: Option<bool>,
    pub t_s: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(&self, top: &RunConfig) -> RunConfig {
        RunConfig {
            preset: top.preset.or(self.preset),
            seed: top.seed.or(self.seed),
            threads: top.threads.or(self.threads),
            gf: top.gf.or(self.gf),
            confidence: top.confidence.or(self.confidence),
            density: top.density.or(self.density),
            trimap_confidence: top.trimap_confidence.or(self.trimap_confidence),
            dilation_radius: top.dilation_radius.or(self.dilation_radius),
            inpaint: top.inpaint.or(self.inpaint),
            sharpen: top.sharpen.or(self.sharpen),
            t_s: top.t_s.or(self.t_s),
        }
    }

    /// Refinement parameters; the preset defaults to `paper-internal`.
    pub fn refine_params(&self) -> Result<RefinePipelineParams> {
        let mut p = self.preset.unwrap_or(Preset::PaperInternal).refine();
        if let Some(gf) = self.gf {
            p.gf = gf;
        }
        if let Some(d) = self.density {
            p.density = d;
        }
        if let Some(seed) = self.seed {
            p.density.seed = seed;
        }
        if let Some(c) = self.trimap_confidence {
            p.conf = c;
        }
        if let Some(r) = self.dilation_radius {
            p.dilation_radius = r;
        }
        if let Some(i) = self.inpaint {
            p.inpaint = i;
        }
        let t_s = self.t_s.or(p.sharpen).unwrap_or(15.0);
        match self.sharpen {
            Some(true) => p.sharpen = Some(t_s),
            Some(false) => p.sharpen = None,
            None if self.t_s.is_some() => p.sharpen = Some(t_s),
            None => {}
        }
        p.validate()?;
        Ok(p)
    }

    /// Upsampling parameters; the preset defaults to `pipeline-s64`.
    pub fn upsample_params(&self) -> Result<UpsampleParams> {
        let mut p = self.preset.unwrap_or(Preset::PipelineS64).upsample();
        if let Some(gf) = self.gf {
            p.gf = gf;
        }
        if let Some(c) = self.confidence {
            p.confidence = c;
        }
        p.gf.validate()?;
        p.confidence.validate()?;
        Ok(p)
    }
}
