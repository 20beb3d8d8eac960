//! Grayscale image storage, loading, and resampling. Intensities live in
//! [0,1]; 8-bit inputs are divided by 255 on load.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!("empty image {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::param(format!(
                "pixel count {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        GrayImage::new(width, height, vec![value; width * height]).unwrap()
    }

    /// Builds an image from a per-pixel function of (x, y).
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage::new(width, height, data).unwrap()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = v;
    }

    /// Bilinear sample at real coordinates; positions outside the pixel grid
    /// clamp to the border.
    pub fn bilinear(&self, fx: f32, fy: f32) -> f32 {
        let x = fx.clamp(0.0, (self.width - 1) as f32);
        let y = fy.clamp(0.0, (self.height - 1) as f32);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let tx = x - x0 as f32;
        let ty = y - y0 as f32;
        let a = self.get(x0, y0);
        let b = self.get(x1, y0);
        let c = self.get(x0, y1);
        let d = self.get(x1, y1);
        // Lerp form: exact on constant neighborhoods, so flat images survive
        // resampling bit for bit.
        let top = a + tx * (b - a);
        let bot = c + tx * (d - c);
        top + ty * (bot - top)
    }

    /// Resizes with bilinear interpolation and pixel-center alignment.
    pub fn resize_bilinear(&self, new_w: usize, new_h: usize) -> GrayImage {
        assert!(new_w >= 1 && new_h >= 1);
        let sx = self.width as f32 / new_w as f32;
        let sy = self.height as f32 / new_h as f32;
        GrayImage::from_fn(new_w, new_h, |x, y| {
            let fx = (x as f32 + 0.5) * sx - 0.5;
            let fy = (y as f32 + 0.5) * sy - 0.5;
            self.bilinear(fx, fy)
        })
    }

    pub fn transpose(&self) -> GrayImage {
        GrayImage::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }
}

/// Fixed luma weights for color conversion. The integer form keeps equal
/// channels exact: (299 r + 587 g + 114 b) / 1000 / 255.
#[inline]
pub fn luma01(r: u8, g: u8, b: u8) -> f32 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32) as f64 / (1000.0 * 255.0)) as f32
}

pub fn from_rgb8(pixels: &[u8], width: usize, height: usize) -> Result<GrayImage> {
    if pixels.len() != width * height * 3 {
        return Err(Error::param("rgb buffer size mismatch"));
    }
    let data = pixels
        .chunks_exact(3)
        .map(|p| luma01(p[0], p[1], p[2]))
        .collect();
    GrayImage::new(width, height, data)
}

pub fn from_luma8(pixels: &[u8], width: usize, height: usize) -> Result<GrayImage> {
    if pixels.len() != width * height {
        return Err(Error::param("luma buffer size mismatch"));
    }
    let data = pixels.iter().map(|&v| v as f32 / 255.0).collect();
    GrayImage::new(width, height, data)
}

/// Loads a PNG or 8-bit PGM image, converting color input by the fixed luma
/// weights. The format is sniffed from the file content, not the extension.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    let bytes = crate::io::read_file(path)?;
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        return parse_pgm(&bytes, path);
    }
    if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        return parse_png(&bytes, path);
    }
    Err(Error::format(path, 0, "not a PNG or PGM file"))
}

fn parse_png(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, 0, format!("png decode: {e}")))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::format(path, 0, "zero-dimension image"));
    }
    from_rgb8(rgb.as_raw(), w, h)
}

/// Minimal PGM reader: P5 (binary) and P2 (ascii), maxval up to 255,
/// '#' comments allowed in the header.
fn parse_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let mut pos = 2usize;
    let binary = bytes[1] == b'5';

    let next_token = |pos: &mut usize| -> Result<u32> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::format(path, start as u64, "expected integer"));
        }
        std::str::from_utf8(&bytes[start..*pos])
            .unwrap()
            .parse::<u32>()
            .map_err(|e| Error::format(path, start as u64, format!("bad integer: {e}")))
    };

    let w = next_token(&mut pos)? as usize;
    let h = next_token(&mut pos)? as usize;
    let maxval = next_token(&mut pos)?;
    if w == 0 || h == 0 {
        return Err(Error::format(path, 0, "zero-dimension image"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(
            path,
            pos as u64,
            format!("unsupported maxval {maxval}, only 8-bit PGM is accepted"),
        ));
    }
    // Division, not multiplication by a reciprocal: v/maxval is correctly
    // rounded, so quantize/load round trips reproduce values exactly.
    let denom = maxval as f32;
    let mut data = Vec::with_capacity(w * h);
    if binary {
        // Exactly one whitespace byte separates the header from the pixels.
        pos += 1;
        if pos + w * h > bytes.len() {
            return Err(Error::format(path, bytes.len() as u64, "truncated pixels"));
        }
        data.extend(bytes[pos..pos + w * h].iter().map(|&v| v as f32 / denom));
    } else {
        for _ in 0..w * h {
            let v = next_token(&mut pos)?;
            if v > maxval {
                return Err(Error::format(path, pos as u64, "sample above maxval"));
            }
            data.push(v as f32 / denom);
        }
    }
    GrayImage::new(w, h, data)
}

/// Writes an 8-bit binary PGM, quantizing [0,1] to 0..=255 by rounding.
pub fn save_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let mut buf = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    buf.extend(
        img.data()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    crate::io::write_file(path, &buf)
}

/// Writes a 16-bit binary PGM (big-endian samples per the format), used for
/// label maps.
pub fn save_pgm16(values: &[u16], width: usize, height: usize, path: &Path) -> Result<()> {
    assert_eq!(values.len(), width * height);
    let mut buf = format!("P5\n{width} {height}\n65535\n").into_bytes();
    for v in values {
        buf.extend_from_slice(&v.to_be_bytes());
    }
    crate::io::write_file(path, &buf)
}

/// Writes interleaved 8-bit RGB rows as a PNG.
pub fn save_rgb_png(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    assert_eq!(rgb.len(), width * height * 3);
    let buf = image::RgbImage::from_raw(width as u32, height as u32, rgb.to_vec())
        .expect("raw buffer length checked above");
    let mut bytes = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, 0, format!("png encode: {e}")))?;
    crate::io::write_file(path, &bytes.into_inner())
}

/// Shrinks `img` so its area is close to `target_area`; images at or below
/// the target pass through untouched (no upscaling).
pub fn downsample_to_area(img: &GrayImage, target_area: usize) -> GrayImage {
    let area = img.width() * img.height();
    if area <= target_area {
        return img.clone();
    }
    let f = (target_area as f64 / area as f64).sqrt();
    let new_w = ((img.width() as f64 * f).round() as usize).max(1);
    let new_h = ((img.height() as f64 * f).round() as usize).max(1);
    img.resize_bilinear(new_w, new_h)
}
