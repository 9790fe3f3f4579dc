//! Flip and rotate augmentations that carry their corner labels along.

use std::fmt;
use std::str::FromStr;

use super::labels::{LabeledImage, Units};
use super::order::reorder_canonical;
use super::DatapipeError;
use crate::camera::PixelPoint;
use crate::vision::RasterImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugmentOp {
    Rot180,
    HFlip,
    VFlip,
}

impl AugmentOp {
    pub const ALL: [AugmentOp; 3] = [AugmentOp::Rot180, AugmentOp::HFlip, AugmentOp::VFlip];

    pub fn name(self) -> &'static str {
        match self {
            AugmentOp::Rot180 => "rot180",
            AugmentOp::HFlip => "hflip",
            AugmentOp::VFlip => "vflip",
        }
    }

    pub fn apply_image(self, img: &RasterImage) -> RasterImage {
        match self {
            AugmentOp::Rot180 => img.rot180(),
            AugmentOp::HFlip => img.hflip(),
            AugmentOp::VFlip => img.vflip(),
        }
    }

    /// Maps one pixel-unit point in a `width`×`height` image.
    pub fn apply_point(self, p: PixelPoint, width: usize, height: usize) -> PixelPoint {
        let (w1, h1) = ((width - 1) as f64, (height - 1) as f64);
        match self {
            AugmentOp::Rot180 => PixelPoint::new(w1 - p.u, h1 - p.v),
            AugmentOp::HFlip => PixelPoint::new(w1 - p.u, p.v),
            AugmentOp::VFlip => PixelPoint::new(p.u, h1 - p.v),
        }
    }

    /// `photo.pgm` → `photo_hflip.pgm`.
    pub fn derived_id(self, id: &str) -> String {
        match id.rsplit_once('.') {
            Some((stem, ext)) if !stem.is_empty() => format!("{stem}_{}.{ext}", self.name()),
            _ => format!("{id}_{}", self.name()),
        }
    }
}

impl fmt::Display for AugmentOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AugmentOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AugmentOp::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| format!("unknown augmentation {s:?} (expected rot180, hflip or vflip)"))
    }
}

/// Transforms the image and its labels, then restores canonical order so
/// each corner slot keeps its meaning (slot 1 is still top-left).
pub fn augment(
    image: &RasterImage,
    item: &LabeledImage,
    op: AugmentOp,
) -> Result<(RasterImage, LabeledImage), DatapipeError> {
    item.require_units(Units::Pixels)?;
    let (w, h) = (image.width(), image.height());
    let moved = item.corners.points().map(|p| op.apply_point(p, w, h));
    let corners = reorder_canonical(&moved)?;
    Ok((
        op.apply_image(image),
        LabeledImage::new(op.derived_id(&item.id), corners, Units::Pixels),
    ))
}

/// Originals followed by one augmented copy per op, item by item.
pub fn augment_dataset(
    items: &[(RasterImage, LabeledImage)],
    ops: &[AugmentOp],
) -> Result<Vec<(RasterImage, LabeledImage)>, DatapipeError> {
    let mut out = Vec::with_capacity(items.len() * (ops.len() + 1));
    for (image, label) in items {
        out.push((image.clone(), label.clone()));
        for &op in ops {
            out.push(augment(image, label, op)?);
        }
    }
    Ok(out)
}
