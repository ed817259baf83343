//! Soft sky alpha mattes.
//!
//! Coarse sky annotations become soft mattes through a confidence-weighted
//! guided filter evaluated at low resolution; the same filter brings a
//! network's low-resolution sky probability up to full resolution. Around
//! that sit color-density inpainting for unlabeled regions, matte-driven sky
//! effects, evaluation metrics, and the batch drivers used by the CLI.
//!
//! ```
//! use skymatte::config::Preset;
//! use skymatte::refine::{refine_annotation, Annotation};
//! use skymatte::synth::make_synthetic_scene;
//!
//! let scene = make_synthetic_scene(128, 96, 1)?;
//! let ann = Annotation::Binary { mask: scene.annotation.clone(), extra_undetermined: None };
//! let alpha = refine_annotation(&scene.image, &ann, &Preset::PaperInternal.refine())?;
//! assert_eq!((alpha.width(), alpha.height()), (128, 96));
//! # Ok::<(), skymatte::Error>(())
//! ```
//!
//! The guide in `book/` walks through each stage.

pub mod config;
pub mod confidence;
pub mod density;
pub mod driver;
pub mod effects;
pub mod error;
pub mod imagecore;
pub mod io;
pub mod metrics;
pub mod refine;
pub mod synth;
pub mod trimap;
pub mod wgf;

pub use error::{Error, Result};
pub use imagecore::{ColorSpace, PlanarImage};

// Runs the book's snippets as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/images.md")]
    mod images {}
    #[doc = include_str!("../../../book/src/guided-filter.md")]
    mod guided_filter {}
    #[doc = include_str!("../../../book/src/confidence.md")]
    mod confidence {}
    #[doc = include_str!("../../../book/src/density-inpainting.md")]
    mod density_inpainting {}
    #[doc = include_str!("../../../book/src/refinement.md")]
    mod refinement {}
    #[doc = include_str!("../../../book/src/effects.md")]
    mod effects {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
