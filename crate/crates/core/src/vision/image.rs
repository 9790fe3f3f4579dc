//! 8-bit raster images and binary PGM/PPM I/O.

use std::io::{self, BufRead, Write};
use std::path::Path;

use super::VisionError;

/// Row-major 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self, VisionError> {
        if channels != 1 && channels != 3 {
            return Err(VisionError::Channels {
                expected: 1,
                found: channels,
            });
        }
        if width == 0 || height == 0 || data.len() != width * height * channels {
            return Err(VisionError::Dimensions(format!(
                "{width}x{height}x{channels} with {} samples",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Self {
        Self::new(width, height, channels, vec![value; width * height * channels])
            .expect("valid dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn set(&mut self, x: usize, y: usize, c: usize, value: u8) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    fn remap(&self, f: impl Fn(usize, usize) -> (usize, usize)) -> Self {
        let mut out = self.clone();
        let ch = self.channels;
        for y in 0..self.height {
            for x in 0..self.width {
                let (sx, sy) = f(x, y);
                let dst = (y * self.width + x) * ch;
                let src = (sy * self.width + sx) * ch;
                out.data[dst..dst + ch].copy_from_slice(&self.data[src..src + ch]);
            }
        }
        out
    }

    pub fn hflip(&self) -> Self {
        self.remap(|x, y| (self.width - 1 - x, y))
    }

    pub fn vflip(&self) -> Self {
        self.remap(|x, y| (x, self.height - 1 - y))
    }

    pub fn rot180(&self) -> Self {
        self.remap(|x, y| (self.width - 1 - x, self.height - 1 - y))
    }

    /// Writes P5 (gray) or P6 (RGB) with maxval 255.
    pub fn write_pnm<W: Write>(&self, mut out: W) -> io::Result<()> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        write!(out, "{magic}\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.data)
    }

    pub fn read_pnm<R: BufRead>(mut input: R) -> Result<Self, VisionError> {
        let magic = read_token(&mut input)?;
        let channels = match magic.as_str() {
            "P5" => 1,
            "P6" => 3,
            other => return Err(VisionError::Format(format!("unsupported magic {other:?}"))),
        };
        let width = parse_header_number(&mut input, "width")?;
        let height = parse_header_number(&mut input, "height")?;
        let maxval = parse_header_number(&mut input, "maxval")?;
        if maxval != 255 {
            return Err(VisionError::Format(format!("maxval {maxval} (only 255 supported)")));
        }
        let mut data = vec![0u8; width * height * channels];
        input
            .read_exact(&mut data)
            .map_err(|e| VisionError::Format(format!("truncated pixel data: {e}")))?;
        Self::new(width, height, channels, data)
    }

    pub fn load(path: &Path) -> Result<Self, VisionError> {
        let file = std::fs::File::open(path)?;
        Self::read_pnm(io::BufReader::new(file))
    }

    pub fn save(&self, path: &Path) -> Result<(), VisionError> {
        let mut file = io::BufWriter::new(std::fs::File::create(path)?);
        self.write_pnm(&mut file)?;
        file.flush()?;
        Ok(())
    }
}

/// Reads one whitespace-delimited header token, skipping `#` comments, and
/// consumes exactly one whitespace byte after it.
fn read_token<R: BufRead>(input: &mut R) -> Result<String, VisionError> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if input.read(&mut byte)? == 0 {
            return Err(VisionError::Format("unexpected end of header".into()));
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut skipped = Vec::new();
                input.read_until(b'\n', &mut skipped)?;
            }
            b if b.is_ascii_whitespace() => {
                if !token.is_empty() {
                    break;
                }
            }
            b => token.push(b),
        }
    }
    String::from_utf8(token).map_err(|_| VisionError::Format("non-ASCII header".into()))
}

fn parse_header_number<R: BufRead>(input: &mut R, what: &str) -> Result<usize, VisionError> {
    let token = read_token(input)?;
    token
        .parse()
        .map_err(|_| VisionError::Format(format!("bad {what} {token:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize, ch: usize) -> RasterImage {
        let data = (0..w * h * ch).map(|i| (i * 37 % 251) as u8).collect();
        RasterImage::new(w, h, ch, data).unwrap()
    }

    #[test]
    fn pnm_bytes_are_exact() {
        let img = RasterImage::new(2, 1, 1, vec![0, 255]).unwrap();
        let mut buf = Vec::new();
        img.write_pnm(&mut buf).unwrap();
        assert_eq!(buf, b"P5\n2 1\n255\n\x00\xff");
        let rgb = gradient(3, 2, 3);
        let mut buf = Vec::new();
        rgb.write_pnm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(RasterImage::read_pnm(buf.as_slice()).unwrap(), rgb);
    }

    #[test]
    fn header_comments_and_whitespace() {
        let mut raw = b"P5 # gray\n# another\n 2\t2 255\n".to_vec();
        // Pixel data may start with a byte that looks like whitespace.
        raw.extend_from_slice(&[b'\n', 1, 2, 3]);
        let img = RasterImage::read_pnm(raw.as_slice()).unwrap();
        assert_eq!(img.data(), &[b'\n', 1, 2, 3]);
    }

    #[test]
    fn bad_headers() {
        assert!(RasterImage::read_pnm(&b"P2\n1 1\n255\n0"[..]).is_err());
        assert!(RasterImage::read_pnm(&b"P5\n1 1\n65535\n00"[..]).is_err());
        assert!(RasterImage::read_pnm(&b"P5\n2 2\n255\n\x00"[..]).is_err());
        assert!(RasterImage::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(RasterImage::new(2, 2, 1, vec![0; 3]).is_err());
    }

    #[test]
    fn flips() {
        let img = gradient(5, 4, 3);
        assert_eq!(img.hflip().hflip(), img);
        assert_eq!(img.vflip().vflip(), img);
        assert_eq!(img.hflip().vflip(), img.rot180());
        assert_eq!(img.hflip().get(0, 1, 2), img.get(4, 1, 2));
        assert_eq!(img.vflip().get(2, 0, 0), img.get(2, 3, 0));
    }
}
