//! Grayscale images in `[0, 1]` and their column-stacked matrix form.
//!
//! Files are 8-bit at the boundary only: PGM (P2/P5, maxval 255) and PNG.
//! Every image is scanned row-major into one matrix column.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// `pixels` in row-major order, each in `[0, 1]`.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("pixel value {bad} outside [0, 1]")));
        }
        Ok(GrayImage { width, height, pixels })
    }

    /// Clamps each value into `[0, 1]`; NaN becomes 0.
    pub fn from_clamped(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        let pixels = values
            .iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    fn quantized(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| quantize(v)).collect()
    }
}

/// `round(clamp(v, 0, 1) * 255)`, halves rounded away from zero.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// A set of equally sized images stored one per column.
#[derive(Clone, Debug)]
pub struct ImageStack {
    width: usize,
    height: usize,
    matrix: Matrix,
}

impl ImageStack {
    pub fn from_matrix(matrix: Matrix, width: usize, height: usize) -> Result<Self> {
        if matrix.rows() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "matrix has {} rows, a {width}x{height} image needs {}",
                matrix.rows(),
                width * height
            )));
        }
        Ok(ImageStack { width, height, matrix })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn count(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }
}

/// Column `j` of the result is the row-major pixel scan of `images[j]`.
pub fn stack(images: &[GrayImage]) -> Result<ImageStack> {
    let Some(first) = images.first() else {
        return Err(Error::invalid("cannot stack an empty image list"));
    };
    let dims = first.dims();
    if let Some(i) = images.iter().position(|im| im.dims() != dims) {
        return Err(Error::ShapeMismatch(format!(
            "image {i} is {}x{}, expected {}x{}",
            images[i].width, images[i].height, dims.0, dims.1
        )));
    }
    let columns: Vec<Vec<f64>> = images.iter().map(|im| im.pixels.clone()).collect();
    ImageStack::from_matrix(Matrix::from_columns(&columns)?, dims.0, dims.1)
}

/// Inverse of [`stack`]; values outside `[0, 1]` are clamped.
pub fn unstack(s: &ImageStack) -> Result<Vec<GrayImage>> {
    if s.matrix.rows() != s.width * s.height {
        return Err(Error::ShapeMismatch(
            "stack matrix does not match its image size".into(),
        ));
    }
    (0..s.count())
        .map(|j| GrayImage::from_clamped(s.width, s.height, &s.matrix.column(j)))
        .collect()
}

/// Bilinear resampling with pixel centers at `(i + 0.5) / n` and edge clamping.
pub fn resize_bilinear(img: &GrayImage, new_w: usize, new_h: usize) -> Result<GrayImage> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::invalid(format!(
            "target size must be positive, got {new_w}x{new_h}"
        )));
    }
    if (new_w, new_h) == img.dims() {
        return Ok(img.clone());
    }
    let xs = sample_positions(img.width, new_w);
    let ys = sample_positions(img.height, new_h);
    let mut pixels = Vec::with_capacity(new_w * new_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx;
            let bottom = img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx;
            pixels.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0));
        }
    }
    GrayImage::new(new_w, new_h, pixels)
}

/// For each output index: the two source indices and the blend factor.
fn sample_positions(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = pos.floor();
            let hi = (lo + 1.0).min(last);
            (lo as usize, hi as usize, pos - lo)
        })
        .collect()
}

/// Reads an 8-bit PGM (P2 or P5) or a grayscale/RGB PNG.
///
/// RGB is collapsed with luma `0.299 R + 0.587 G + 0.114 B` before scaling by
/// `1/255`.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        decode_pgm(path, &bytes)
    } else if bytes.starts_with(b"\x89PNG") {
        decode_png(path, &bytes)
    } else {
        Err(Error::UnsupportedFormat(path.to_path_buf()))
    }
}

/// Writes `.pgm` as binary P5 or `.png` as 8-bit grayscale, chosen by extension.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let data = img.quantized();
    match ext.as_deref() {
        Some("pgm") => {
            let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
            out.extend_from_slice(&data);
            let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            file.write_all(&out).map_err(|e| Error::io(path, e))
        }
        Some("png") => {
            let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, data)
                .expect("buffer length matches dimensions");
            buf.save_with_format(path, image::ImageFormat::Png)
                .map_err(|e| match e {
                    image::ImageError::IoError(io) => Error::io(path, io),
                    other => Error::io(path, std::io::Error::other(other)),
                })
        }
        _ => Err(Error::UnsupportedFormat(path.to_path_buf())),
    }
}

fn decode_pgm(path: &Path, bytes: &[u8]) -> Result<GrayImage> {
    let malformed = |reason: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let binary = bytes[1] == b'5';
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (slot, name) in fields.iter_mut().zip(["width", "height", "maxval"]) {
        let token = next_header_token(bytes, &mut pos).ok_or_else(|| malformed(&format!("missing {name}")))?;
        *slot = token
            .parse()
            .map_err(|_| malformed(&format!("{name} '{token}' is not a number")))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(malformed("zero image dimension"));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedDepth {
            path: path.to_path_buf(),
            detail: format!("maxval {maxval}, only 255 is supported"),
        });
    }
    let count = width * height;
    let bad_data = |reason: String| Error::MalformedData {
        path: path.to_path_buf(),
        reason,
    };

    let raw: Vec<u8> = if binary {
        // Exactly one whitespace byte separates maxval from the raster.
        let start = pos + 1;
        let end = start + count;
        if bytes.len() < end {
            return Err(bad_data(format!(
                "expected {count} raster bytes, found {}",
                bytes.len().saturating_sub(start)
            )));
        }
        bytes[start..end].to_vec()
    } else {
        let text = std::str::from_utf8(&bytes[pos..]).map_err(|_| bad_data("raster is not ASCII".into()))?;
        let mut values = Vec::with_capacity(count);
        for token in text.split_ascii_whitespace().take(count) {
            let v: usize = token
                .parse()
                .map_err(|_| bad_data(format!("'{token}' is not a pixel value")))?;
            if v > maxval {
                return Err(bad_data(format!("pixel value {v} exceeds maxval {maxval}")));
            }
            values.push(v as u8);
        }
        if values.len() != count {
            return Err(bad_data(format!(
                "expected {count} pixel values, found {}",
                values.len()
            )));
        }
        values
    };
    GrayImage::new(width, height, raw.iter().map(|&b| b as f64 / 255.0).collect())
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn next_header_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
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
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    (*pos > start).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<GrayImage> {
    use image::DynamicImage;

    let decoded =
        image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(|e| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let luma = |r: u8, g: u8, b: u8| (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0;
    let pixels: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        other => {
            return Err(Error::UnsupportedDepth {
                path: path.to_path_buf(),
                detail: format!("{:?}, only 8-bit PNG is supported", other.color()),
            })
        }
    };
    // Luma of in-range channels can exceed 1 by an ulp.
    GrayImage::from_clamped(w, h, &pixels)
}
