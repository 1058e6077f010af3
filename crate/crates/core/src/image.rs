//! Grayscale images, binary PGM I/O, bilinear resizing and the 2-level pyramid.

use crate::error::{Error, Result};

/// Row-major 8-bit grayscale image.
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch { width, height, len: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Applies `f` to every pixel.
    pub fn map(&self, mut f: impl FnMut(u8) -> u8) -> Image {
        Image { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

/// Parses a binary (P5) PGM file.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::BadMagic);
    }
    let mut pos = 2;
    let width = read_header_uint(bytes, &mut pos, "width")?;
    let height = read_header_uint(bytes, &mut pos, "height")?;
    let maxval = read_header_uint(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 {
        return Err(Error::MalformedHeader("maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(Error::MaxvalUnsupported(u32::try_from(maxval).unwrap_or(u32::MAX)));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedHeader("missing whitespace after maxval".into())),
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedData { expected, found: payload.len() });
    }
    Image::new(width, height, payload[..expected].to_vec())
}

fn read_header_uint(bytes: &[u8], pos: &mut usize, field: &str) -> Result<usize> {
    // skip whitespace and comments
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            }
            Some(_) => break,
            None => return Err(Error::MalformedHeader(format!("unexpected end of header reading {field}"))),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::MalformedHeader(format!("expected decimal {field}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::MalformedHeader(format!("{field} out of range")))
}

/// Serializes an image as binary PGM with maxval 255.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

/// Downscales `src` with endpoint-aligned bilinear interpolation.
///
/// Destination pixel `(dx, dy)` samples source position
/// `(dx * (sw - 1) / (dw - 1), dy * (sh - 1) / (dh - 1))`, so corners map to
/// corners. The blend is rounded once, half away from zero.
pub fn resize_bilinear(src: &Image, dst_width: usize, dst_height: usize) -> Result<Image> {
    let (sw, sh) = src.dims();
    let err = |reason| Error::InvalidResize { src_w: sw, src_h: sh, dst_w: dst_width, dst_h: dst_height, reason };
    if dst_width == 0 || dst_height == 0 {
        return Err(err("zero destination dimension"));
    }
    if dst_width < 2 || dst_height < 2 {
        return Err(err("destination must be at least 2x2"));
    }
    if dst_width > sw || dst_height > sh {
        return Err(err("upscaling is not supported"));
    }

    // Source position along an axis is `num / den`; blending stays in integers
    // so exact .5 ties round away from zero.
    let axis = |dst: usize, src_len: usize, dst_len: usize| -> (usize, usize, u64) {
        let num = dst * (src_len - 1);
        let den = dst_len - 1;
        let i0 = num / den;
        (i0, (i0 + 1).min(src_len - 1), (num % den) as u64)
    };
    let (dx_den, dy_den) = ((dst_width - 1) as u64, (dst_height - 1) as u64);
    let den = dx_den * dy_den;
    let cols: Vec<_> = (0..dst_width).map(|x| axis(x, sw, dst_width)).collect();

    let mut data = Vec::with_capacity(dst_width * dst_height);
    for y in 0..dst_height {
        let (y0, y1, fy) = axis(y, sh, dst_height);
        let (r0, r1) = (src.row(y0), src.row(y1));
        for &(x0, x1, fx) in &cols {
            let top = u64::from(r0[x0]) * (dx_den - fx) + u64::from(r0[x1]) * fx;
            let bottom = u64::from(r1[x0]) * (dx_den - fx) + u64::from(r1[x1]) * fx;
            let num = top * (dy_den - fy) + bottom * fy;
            data.push(((2 * num + den) / (2 * den)) as u8);
        }
    }
    Image::new(dst_width, dst_height, data)
}

/// Two-level image pyramid; level 1 is level 0 downscaled by [`Pyramid::SCALE`].
#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: [Image; 2],
}

impl Pyramid {
    pub const SCALE: f64 = 1.2;

    /// Level-1 dimensions for a level-0 image of the given size.
    ///
    /// Integer form of `floor(w / 1.2)`, which avoids the float landing just
    /// below an exact quotient (e.g. 120 / 1.2).
    pub fn level1_dims(width: usize, height: usize) -> (usize, usize) {
        (width * 5 / 6, height * 5 / 6)
    }

    pub fn levels(&self) -> &[Image; 2] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> &Image {
        &self.levels[i]
    }

    pub fn scale(&self) -> f64 {
        Self::SCALE
    }
}

pub fn build_pyramid(src: &Image) -> Result<Pyramid> {
    let (w, h) = Pyramid::level1_dims(src.width(), src.height());
    if w < 2 || h < 2 {
        return Err(Error::PyramidTooSmall { width: src.width(), height: src.height() });
    }
    let level1 = resize_bilinear(src, w, h)?;
    Ok(Pyramid { levels: [src.clone(), level1] })
}
