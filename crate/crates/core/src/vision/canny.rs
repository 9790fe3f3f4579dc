//! Canny edge detection.
//!
//! Gaussian blur (radius ⌈3σ⌉, replicated borders) → 3×3 Sobel →
//! magnitude `√(gx² + gy²)` rescaled so the image maximum is 255 →
//! non-maximum suppression along the gradient quantized to 0°/45°/90°/135°
//! → double threshold → 8-connected hysteresis from strong pixels.
//!
//! Suppression keeps a pixel that beats both neighbours along the gradient.
//! Equal magnitudes go to the brighter smoothed pixel, so a symmetric step
//! leaves a one-pixel-wide edge on its bright side and the result commutes
//! with flips. Raster order decides only when intensities tie too.

use std::collections::VecDeque;

use super::{RasterImage, VisionError};

/// Magnitudes closer than this are treated as equal during suppression.
const TIE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyParams {
    pub sigma: f64,
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            low: 50.0,
            high: 100.0,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<(), VisionError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(VisionError::InvalidParameter(format!("sigma {} must be positive", self.sigma)));
        }
        if !(self.low >= 0.0 && self.low <= self.high) {
            return Err(VisionError::InvalidParameter(format!(
                "thresholds must satisfy 0 <= low <= high (low {}, high {})",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

/// Binary edge mask with the dimensions of its source image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    pub fn from_points(width: usize, height: usize, points: &[(usize, usize)]) -> Self {
        let mut map = Self::new(width, height);
        for &(x, y) in points {
            map.set(x, y, true);
        }
        map
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.mask[y * self.width + x] = on;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    /// Edge pixels in raster order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| (i % self.width, i / self.width))
    }

    /// Renders the mask as a gray image (edges 255).
    pub fn to_image(&self) -> RasterImage {
        let data = self.mask.iter().map(|&b| if b { 255 } else { 0 }).collect();
        RasterImage::new(self.width, self.height, 1, data).expect("matching dimensions")
    }
}

/// Gradient direction quantized to the four suppression axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionBin {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl DirectionBin {
    fn from_gradient(gx: f64, gy: f64) -> Self {
        let mut angle = gy.atan2(gx).to_degrees();
        if angle < 0.0 {
            angle += 180.0;
        }
        if !(22.5..157.5).contains(&angle) {
            DirectionBin::Deg0
        } else if angle < 67.5 {
            DirectionBin::Deg45
        } else if angle < 112.5 {
            DirectionBin::Deg90
        } else {
            DirectionBin::Deg135
        }
    }

    /// Offset to the neighbour that comes first in raster order; the other
    /// neighbour is its negation.
    pub fn offset(self) -> (isize, isize) {
        match self {
            DirectionBin::Deg0 => (-1, 0),
            DirectionBin::Deg45 => (-1, -1),
            DirectionBin::Deg90 => (0, -1),
            DirectionBin::Deg135 => (1, -1),
        }
    }
}

/// Scaled gradient magnitude and quantized direction per pixel.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    /// Magnitude rescaled so the largest value is 255 (all zero if flat).
    pub magnitude: Vec<f64>,
    pub direction: Vec<DirectionBin>,
    /// Gaussian-smoothed intensities.
    pub smoothed: Vec<f64>,
}

impl GradientField {
    pub fn compute(img: &RasterImage, sigma: f64) -> Result<Self, VisionError> {
        require_gray(img)?;
        let (w, h) = (img.width(), img.height());
        let samples: Vec<f64> = img.data().iter().map(|&v| f64::from(v)).collect();
        let blurred = gaussian_blur(&samples, w, h, sigma);
        let at = |x: isize, y: isize| {
            let xc = x.clamp(0, w as isize - 1) as usize;
            let yc = y.clamp(0, h as isize - 1) as usize;
            blurred[yc * w + xc]
        };
        let mut magnitude = vec![0.0; w * h];
        let mut direction = vec![DirectionBin::Deg0; w * h];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                    - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
                let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                    - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
                let i = y as usize * w + x as usize;
                magnitude[i] = gx.hypot(gy);
                direction[i] = DirectionBin::from_gradient(gx, gy);
            }
        }
        let peak = magnitude.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            let scale = 255.0 / peak;
            magnitude.iter_mut().for_each(|m| *m *= scale);
        }
        Ok(Self {
            width: w,
            height: h,
            magnitude,
            direction,
            smoothed: blurred,
        })
    }

    /// Magnitude at a signed position; zero outside the image.
    pub fn magnitude_at(&self, x: isize, y: isize) -> f64 {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            0.0
        } else {
            self.magnitude[y as usize * self.width + x as usize]
        }
    }

    /// Thinned magnitudes: suppressed pixels are zero.
    pub fn suppress_non_maxima(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.magnitude.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                let i = y * self.width + x;
                if self.magnitude[i] <= 0.0 {
                    continue;
                }
                let (dx, dy) = self.direction[i].offset();
                let (xi, yi) = (x as isize, y as isize);
                if self.beats(i, xi + dx, yi + dy, true) && self.beats(i, xi - dx, yi - dy, false) {
                    out[i] = self.magnitude[i];
                }
            }
        }
        out
    }

    /// Whether pixel `i` wins against the neighbour at `(x, y)`.
    fn beats(&self, i: usize, x: isize, y: isize, neighbour_first: bool) -> bool {
        let m = self.magnitude[i];
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            return true;
        }
        let other = self.magnitude_at(x, y);
        if (m - other).abs() > TIE_EPS {
            return m > other;
        }
        let j = y as usize * self.width + x as usize;
        let (mine, theirs) = (self.smoothed[i], self.smoothed[j]);
        if (mine - theirs).abs() > TIE_EPS {
            return mine > theirs;
        }
        neighbour_first
    }
}

fn require_gray(img: &RasterImage) -> Result<(), VisionError> {
    if img.channels() != 1 {
        return Err(VisionError::Channels {
            expected: 1,
            found: img.channels(),
        });
    }
    Ok(())
}

pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(samples: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let xs = (x as isize + j as isize - r).clamp(0, w as isize - 1) as usize;
                acc += kv * samples[y * w + xs];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let ys = (y as isize + j as isize - r).clamp(0, h as isize - 1) as usize;
                acc += kv * tmp[ys * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Full Canny pipeline on a gray image.
pub fn canny(img: &RasterImage, params: &CannyParams) -> Result<EdgeMap, VisionError> {
    params.validate()?;
    let field = GradientField::compute(img, params.sigma)?;
    Ok(hysteresis(&field.suppress_non_maxima(), field.width, field.height, params.low, params.high))
}

/// Keeps pixels `>= high` and every pixel `>= low` 8-connected to one.
pub fn hysteresis(thinned: &[f64], w: usize, h: usize, low: f64, high: f64) -> EdgeMap {
    let mut map = EdgeMap::new(w, h);
    let mut queue = VecDeque::new();
    for (i, &m) in thinned.iter().enumerate() {
        if m > 0.0 && m >= high && !map.mask[i] {
            map.mask[i] = true;
            queue.push_back(i);
            while let Some(j) = queue.pop_front() {
                let (x, y) = ((j % w) as isize, (j / w) as isize);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let n = ny as usize * w + nx as usize;
                        if !map.mask[n] && thinned[n] > 0.0 && thinned[n] >= low {
                            map.mask[n] = true;
                            queue.push_back(n);
                        }
                    }
                }
            }
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized() {
        let k = gaussian_kernel(1.4);
        assert_eq!(k.len(), 2 * 5 + 1);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(k.windows(2).take(5).all(|w| w[0] < w[1]));
    }

    #[test]
    fn uniform_image_has_no_edges() {
        let img = RasterImage::filled(20, 20, 1, 128);
        let edges = canny(&img, &CannyParams::default()).unwrap();
        assert!(edges.is_empty());
    }

    #[test]
    fn rejects_rgb_and_bad_thresholds() {
        let rgb = RasterImage::filled(4, 4, 3, 0);
        assert!(matches!(
            canny(&rgb, &CannyParams::default()),
            Err(VisionError::Channels { .. })
        ));
        let gray = RasterImage::filled(4, 4, 1, 0);
        let bad = CannyParams {
            low: 120.0,
            ..Default::default()
        };
        assert!(canny(&gray, &bad).is_err());
        let bad_sigma = CannyParams {
            sigma: 0.0,
            ..Default::default()
        };
        assert!(canny(&gray, &bad_sigma).is_err());
    }

    #[test]
    fn direction_bins() {
        assert_eq!(DirectionBin::from_gradient(1.0, 0.0), DirectionBin::Deg0);
        assert_eq!(DirectionBin::from_gradient(-1.0, 0.0), DirectionBin::Deg0);
        assert_eq!(DirectionBin::from_gradient(1.0, 1.0), DirectionBin::Deg45);
        assert_eq!(DirectionBin::from_gradient(0.0, -1.0), DirectionBin::Deg90);
        assert_eq!(DirectionBin::from_gradient(-1.0, 1.0), DirectionBin::Deg135);
    }

    #[test]
    fn hysteresis_follows_weak_chains() {
        // strong at 0, weak chain 1..3, isolated weak at 6.
        let thinned = [150.0, 60.0, 60.0, 60.0, 0.0, 0.0, 60.0];
        let map = hysteresis(&thinned, 7, 1, 50.0, 100.0);
        let on: Vec<_> = map.edges().map(|(x, _)| x).collect();
        assert_eq!(on, vec![0, 1, 2, 3]);
    }
}
