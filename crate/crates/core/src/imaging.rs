//! Pixel-grid helpers shared by cropping and augmentation.
//!
//! Frames are 8-bit RGB ([`RgbImage`]). On disk they are either PNG files or
//! raw planar RGB (`.rgb`: the full R plane, then G, then B, row-major, no
//! header), chosen by file extension.

use std::fs;
use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Codec {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: raw frame needs {expected} bytes for {width}x{height}, found {found}")]
    RawSize {
        path: String,
        width: u32,
        height: u32,
        expected: usize,
        found: usize,
    },
    #[error("{path}: raw frames need explicit dimensions")]
    RawDimensionsMissing { path: String },
    #[error("{path}: unsupported frame extension (expected .png or .rgb)")]
    UnsupportedFormat { path: String },
}

/// On-disk frame encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameFormat {
    Png,
    RawPlanar,
}

impl FrameFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "png" => Some(Self::Png),
            "rgb" => Some(Self::RawPlanar),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Png => "png",
            Self::RawPlanar => "rgb",
        }
    }
}

/// Resamples `src` to `out_w` x `out_h` with bilinear interpolation.
///
/// Pixel centres sit at half-integers (`align_corners = false`); samples
/// past the border clamp to the edge pixel.
pub fn resize_bilinear(src: &RgbImage, out_w: u32, out_h: u32) -> RgbImage {
    let (in_w, in_h) = src.dimensions();
    if (in_w, in_h) == (out_w, out_h) {
        return src.clone();
    }
    let taps = |out_len: u32, in_len: u32| -> Vec<(u32, u32, f64)> {
        let ratio = f64::from(in_len) / f64::from(out_len);
        (0..out_len)
            .map(|o| {
                let s = ((f64::from(o) + 0.5) * ratio - 0.5).clamp(0.0, f64::from(in_len - 1));
                let lo = s.floor() as u32;
                let hi = (lo + 1).min(in_len - 1);
                (lo, hi, s - f64::from(lo))
            })
            .collect()
    };
    let xs = taps(out_w, in_w);
    let ys = taps(out_h, in_h);

    let mut out = RgbImage::new(out_w, out_h);
    for (oy, &(y0, y1, fy)) in ys.iter().enumerate() {
        for (ox, &(x0, x1, fx)) in xs.iter().enumerate() {
            let p00 = src.get_pixel(x0, y0);
            let p10 = src.get_pixel(x1, y0);
            let p01 = src.get_pixel(x0, y1);
            let p11 = src.get_pixel(x1, y1);
            let mut px = [0u8; 3];
            for c in 0..3 {
                let top = f64::from(p00[c]) * (1.0 - fx) + f64::from(p10[c]) * fx;
                let bottom = f64::from(p01[c]) * (1.0 - fx) + f64::from(p11[c]) * fx;
                px[c] = to_u8(top * (1.0 - fy) + bottom * fy);
            }
            out.put_pixel(ox as u32, oy as u32, Rgb(px));
        }
    }
    out
}

/// Samples `src` at a real-valued position with bilinear weights; positions
/// outside the image contribute zeros.
pub fn sample_zero_fill(src: &RgbImage, x: f64, y: f64) -> [f64; 3] {
    let (w, h) = (i64::from(src.width()), i64::from(src.height()));
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as i64, y0 as i64);
    let mut acc = [0.0; 3];
    for (dx, dy, wgt) in [
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ] {
        let (px, py) = (x0 + dx, y0 + dy);
        if wgt == 0.0 || px < 0 || py < 0 || px >= w || py >= h {
            continue;
        }
        let p = src.get_pixel(px as u32, py as u32);
        for c in 0..3 {
            acc[c] += wgt * f64::from(p[c]);
        }
    }
    acc
}

/// Rounds to nearest and clamps into `0..=255`.
pub fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Decodes planar RGB bytes.
pub fn from_raw_planar(bytes: &[u8], width: u32, height: u32) -> Option<RgbImage> {
    let plane = width as usize * height as usize;
    if bytes.len() != plane * 3 {
        return None;
    }
    let (r, rest) = bytes.split_at(plane);
    let (g, b) = rest.split_at(plane);
    let mut interleaved = Vec::with_capacity(plane * 3);
    for i in 0..plane {
        interleaved.extend_from_slice(&[r[i], g[i], b[i]]);
    }
    RgbImage::from_raw(width, height, interleaved)
}

pub fn to_raw_planar(img: &RgbImage) -> Vec<u8> {
    let plane = img.width() as usize * img.height() as usize;
    let mut out = vec![0u8; plane * 3];
    for (i, p) in img.pixels().enumerate() {
        out[i] = p[0];
        out[plane + i] = p[1];
        out[2 * plane + i] = p[2];
    }
    out
}

/// Reads a frame, dispatching on the extension. Raw frames need `raw_dims`.
pub fn read_frame(path: &Path, raw_dims: Option<(u32, u32)>) -> Result<RgbImage, ImagingError> {
    let shown = path.display().to_string();
    match FrameFormat::from_path(path) {
        Some(FrameFormat::Png) => {
            let bytes = fs::read(path).map_err(|source| ImagingError::Io {
                path: shown.clone(),
                source,
            })?;
            image::load_from_memory_with_format(&bytes, ImageFormat::Png)
                .map(|img| img.to_rgb8())
                .map_err(|source| ImagingError::Codec { path: shown, source })
        }
        Some(FrameFormat::RawPlanar) => {
            let (width, height) = raw_dims.ok_or_else(|| ImagingError::RawDimensionsMissing { path: shown.clone() })?;
            let bytes = fs::read(path).map_err(|source| ImagingError::Io {
                path: shown.clone(),
                source,
            })?;
            let found = bytes.len();
            from_raw_planar(&bytes, width, height).ok_or(ImagingError::RawSize {
                path: shown,
                width,
                height,
                expected: width as usize * height as usize * 3,
                found,
            })
        }
        None => Err(ImagingError::UnsupportedFormat { path: shown }),
    }
}

/// Encodes a frame in the given format. PNG output is deterministic.
pub fn encode_frame(img: &RgbImage, format: FrameFormat) -> Vec<u8> {
    match format {
        FrameFormat::Png => {
            let mut buf = std::io::Cursor::new(Vec::new());
            img.write_to(&mut buf, ImageFormat::Png)
                .expect("PNG encoding into memory does not fail");
            buf.into_inner()
        }
        FrameFormat::RawPlanar => to_raw_planar(img),
    }
}
