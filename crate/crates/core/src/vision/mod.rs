//! Edge-based auto-annotation of four-cornered targets.

pub mod canny;
pub mod image;
pub mod quad;
pub mod render;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use canny::{canny, CannyParams, EdgeMap};
pub use image::RasterImage;
pub use quad::{extract_quadrilateral, extract_quadrilateral_with, CornerQuad, QuadParams};
pub use render::{render_quad, render_quad_with, RenderOptions};

#[derive(Debug, thiserror::Error)]
pub enum VisionError {
    #[error("expected {expected}-channel image, got {found}")]
    Channels { expected: usize, found: usize },
    #[error("invalid image dimensions: {0}")]
    Dimensions(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no target: edge map is empty")]
    NoTarget,
    #[error("degenerate quadrilateral: {0}")]
    DegenerateQuad(String),
    #[error("invalid quadrilateral: {0}")]
    InvalidQuad(String),
    #[error("image format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// ITU-R BT.601 luma, `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn to_grayscale(img: &RasterImage) -> Result<RasterImage, VisionError> {
    if img.channels() != 3 {
        return Err(VisionError::Channels {
            expected: 3,
            found: img.channels(),
        });
    }
    let data = img
        .data()
        .chunks_exact(3)
        .map(|px| {
            let y = 0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    RasterImage::new(img.width(), img.height(), 1, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnnotateParams {
    pub canny: CannyParams,
    pub quad: QuadParams,
}

/// Grayscale (if RGB) → Canny → extremal-intercept corners.
pub fn annotate(img: &RasterImage, params: &AnnotateParams) -> Result<CornerQuad, VisionError> {
    let gray;
    let gray_ref = if img.channels() == 3 {
        gray = to_grayscale(img)?;
        &gray
    } else {
        img
    };
    let edges = canny(gray_ref, &params.canny)?;
    extract_quadrilateral_with(&edges, &params.quad)
}

/// Outcome for one file of a batch.
#[derive(Debug)]
pub struct Annotation {
    pub path: PathBuf,
    pub size: Option<(usize, usize)>,
    pub result: Result<CornerQuad, VisionError>,
}

/// Annotates files in parallel; results come back in input order.
pub fn annotate_files(paths: &[PathBuf], params: &AnnotateParams) -> Vec<Annotation> {
    paths
        .par_iter()
        .map(|path| match RasterImage::load(path) {
            Ok(img) => Annotation {
                path: path.clone(),
                size: Some((img.width(), img.height())),
                result: annotate(&img, params),
            },
            Err(e) => Annotation {
                path: path.clone(),
                size: None,
                result: Err(e),
            },
        })
        .collect()
}

/// `.pgm` / `.ppm` files directly inside `dir`, sorted by name.
pub fn list_images(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("pgm" | "ppm" | "PGM" | "PPM")
                )
        })
        .collect();
    paths.sort();
    Ok(paths)
}
