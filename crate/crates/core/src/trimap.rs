use crate::error::{Error, Result};
use crate::imagecore::PlanarImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    NotSky,
    Undetermined,
    Sky,
}

impl Label {
    /// Gray level used when the label is serialized to an image.
    pub fn level(self) -> u8 {
        match self {
            Label::NotSky => 0,
            Label::Undetermined => 128,
            Label::Sky => 255,
        }
    }

    /// Nearest label for a gray level.
    pub fn from_level(v: u8) -> Label {
        match v {
            0..=63 => Label::NotSky,
            64..=191 => Label::Undetermined,
            _ => Label::Sky,
        }
    }
}

/// Per-pixel sky / not-sky / undetermined annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trimap {
    width: usize,
    height: usize,
    labels: Vec<Label>,
}

impl Trimap {
    pub fn new(width: usize, height: usize, labels: Vec<Label>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "trimap of {} labels does not fit {width}x{height}",
                labels.len()
            )));
        }
        Ok(Trimap {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, label: Label) -> Result<Self> {
        Self::new(width, height, vec![label; width * height])
    }

    /// Binary trimap from a mask: `>= 0.5` is sky.
    pub fn from_mask(mask: &PlanarImage) -> Self {
        let labels = mask
            .plane(0)
            .iter()
            .map(|&v| if v >= 0.5 { Label::Sky } else { Label::NotSky })
            .collect();
        Trimap {
            width: mask.width(),
            height: mask.height(),
            labels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [Label] {
        &mut self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Sky as 1, everything else as 0.
    pub fn to_mask(&self) -> PlanarImage {
        let data = self
            .labels
            .iter()
            .map(|&l| if l == Label::Sky { 1.0 } else { 0.0 })
            .collect();
        PlanarImage::mask(self.width, self.height, data).expect("trimap dimensions are valid")
    }

    pub(crate) fn check_size(&self, img: &PlanarImage) -> Result<()> {
        if img.width() == self.width && img.height() == self.height {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "trimap is {}x{} but image is {}x{}",
                self.width,
                self.height,
                img.width(),
                img.height()
            )))
        }
    }
}
