//! 7x7 integer Gaussian smoothing and steered BRIEF descriptors.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fast::Coordinate;
use crate::image::Image;
use crate::orientation::{rotate_to_pixel, Orientation};

pub const DEFAULT_PAIRS: usize = 256;
pub const DEFAULT_PATTERN_SEED: u64 = 0x4F52_4232;

/// Radius of the disc pattern offsets are drawn from.
pub const PATTERN_RADIUS: i32 = 13;
pub const PATTERN_SIGMA: f64 = 6.5;

/// Separable 7x7 kernel: outer product of integer taps quantized from a
/// sigma = 2 Gaussian. The taps sum to 64, so the 2-D weights sum to 4096.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussianKernel {
    pub taps: [u32; 7],
}

impl GaussianKernel {
    pub const SIGMA2: GaussianKernel = GaussianKernel { taps: [5, 8, 12, 14, 12, 8, 5] };
    pub const SIZE: usize = 7;
    pub const APRON: usize = 3;
    pub const SHIFT: u32 = 12;
    pub const DIVISOR: u32 = 1 << Self::SHIFT;

    pub fn weight(&self, dx: usize, dy: usize) -> u32 {
        self.taps[dx] * self.taps[dy]
    }

    /// Normalized output for a 7x7 neighborhood given as `pixel(col, row)`.
    #[inline]
    pub fn apply(&self, mut pixel: impl FnMut(usize, usize) -> u8) -> u8 {
        let mut acc = 0u32;
        for (j, &ty) in self.taps.iter().enumerate() {
            let mut row = 0u32;
            for (i, &tx) in self.taps.iter().enumerate() {
                row += tx * u32::from(pixel(i, j));
            }
            acc += ty * row;
        }
        ((acc + Self::DIVISOR / 2) >> Self::SHIFT) as u8
    }
}

impl Default for GaussianKernel {
    fn default() -> Self {
        Self::SIGMA2
    }
}

/// Smooths with [`GaussianKernel::SIGMA2`], replicating border pixels.
pub fn gaussian_smooth(img: &Image) -> Image {
    let k = GaussianKernel::SIGMA2;
    let (w, h) = img.dims();
    let a = GaussianKernel::APRON as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    Image::from_fn(w, h, |x, y| {
        k.apply(|i, j| {
            img.get(clamp(x as isize + i as isize - a, w), clamp(y as isize + j as isize - a, h))
        })
    })
}

/// Two sampling offsets relative to the feature point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternPair {
    pub a: (i32, i32),
    pub b: (i32, i32),
}

/// Draws `pairs` point pairs from an isotropic Gaussian (sigma 6.5), rounded
/// to integers and rejection-sampled into the radius-13 disc. Pairs whose two
/// points coincide are redrawn.
pub fn generate_pattern(pairs: usize, seed: u64) -> Result<Vec<PatternPair>> {
    if pairs == 0 {
        return Err(Error::EmptyPattern);
    }
    let mut sampler = OffsetSampler::new(seed);
    let mut point = || sampler.next_in_disc();
    let mut out = Vec::with_capacity(pairs);
    while out.len() < pairs {
        let (a, b) = (point(), point());
        if a != b {
            out.push(PatternPair { a, b });
        }
    }
    Ok(out)
}

struct OffsetSampler {
    rng: ChaCha8Rng,
    normal: Normal<f64>,
}

impl OffsetSampler {
    fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), normal: Normal::new(0.0, PATTERN_SIGMA).expect("valid sigma") }
    }

    fn raw(&mut self) -> (f64, f64) {
        (self.normal.sample(&mut self.rng), self.normal.sample(&mut self.rng))
    }

    fn next_in_disc(&mut self) -> (i32, i32) {
        loop {
            let (x, y) = self.raw();
            let (x, y) = (x.round() as i32, y.round() as i32);
            if x * x + y * y <= PATTERN_RADIUS * PATTERN_RADIUS {
                return (x, y);
            }
        }
    }
}

/// One BRIEF comparison: set when the first intensity is not smaller.
#[inline]
pub fn brief_test(ia: u8, ib: u8) -> bool {
    ia >= ib
}

/// Packed bit vector; bit of pair 0 is the most significant bit of byte 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Descriptor {
    bytes: Vec<u8>,
    len: usize,
    pub feature: Coordinate,
}

impl Descriptor {
    pub fn from_bits(bits: impl IntoIterator<Item = bool>, feature: Coordinate) -> Self {
        let mut bytes = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % 8 == 0 {
                bytes.push(0);
            }
            if bit {
                bytes[len / 8] |= 0x80 >> (len % 8);
            }
            len += 1;
        }
        Self { bytes, len, feature }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range");
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Same feature, every bit flipped.
    pub fn complement(&self) -> Descriptor {
        Descriptor::from_bits((0..self.len).map(|i| !self.bit(i)), self.feature)
    }
}

impl fmt::Debug for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Descriptor({:?}, {})", self.feature, self.to_hex())
    }
}

/// Steered BRIEF over a patch given as `pixel(dx, dy)` relative to the feature.
pub(crate) fn descriptor_with(
    pattern: &[PatternPair],
    o: Orientation,
    feature: Coordinate,
    mut pixel: impl FnMut(i32, i32) -> u8,
) -> Descriptor {
    Descriptor::from_bits(
        pattern.iter().map(|pair| {
            let (ax, ay) = rotate_to_pixel(pair.a, o);
            let (bx, by) = rotate_to_pixel(pair.b, o);
            brief_test(pixel(ax, ay), pixel(bx, by))
        }),
        feature,
    )
}

/// Rotates every pattern pair by `o` and compares the smoothed intensities.
pub fn compute_descriptor(
    smoothed: &Image,
    f: Coordinate,
    o: Orientation,
    pattern: &[PatternPair],
) -> Result<Descriptor> {
    let (w, h) = smoothed.dims();
    if !f.in_margin(w, h) {
        return Err(Error::MarginViolation { x: f.x, y: f.y, width: w, height: h });
    }
    Ok(descriptor_with(pattern, o, f, |dx, dy| {
        smoothed.get((f.x as i32 + dx) as usize, (f.y as i32 + dy) as usize)
    }))
}

/// Number of differing bits.
pub fn hamming(a: &Descriptor, b: &Descriptor) -> Result<u32> {
    if a.len != b.len {
        return Err(Error::DescriptorLengthMismatch(a.len, b.len));
    }
    Ok(a.bytes.iter().zip(&b.bytes).map(|(x, y)| (x ^ y).count_ones()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = GaussianKernel::SIGMA2;
        let total: u32 = (0..7).flat_map(|y| (0..7).map(move |x| k.weight(x, y))).sum();
        assert_eq!(total, GaussianKernel::DIVISOR);
        for y in 0..7 {
            for x in 0..7 {
                assert_eq!(k.weight(x, y), k.weight(6 - x, y));
                assert_eq!(k.weight(x, y), k.weight(x, 6 - y));
            }
        }
    }

    #[test]
    fn smoothing_preserves_constants() {
        for c in [0u8, 1, 77, 254, 255] {
            let img = Image::filled(40, 40, c);
            assert!(gaussian_smooth(&img).data().iter().all(|&v| v == c));
        }
    }

    #[test]
    fn smoothing_impulse() {
        let mut img = Image::filled(41, 41, 0);
        img.set(20, 20, 255);
        let s = gaussian_smooth(&img);
        // center weight 14 * 14 = 196
        assert_eq!(u32::from(s.get(20, 20)), (196 * 255 + 2048) / 4096);
        assert_eq!(s.get(20, 20), 12);
    }

    #[test]
    fn smoothing_step_edge_rows_identical() {
        let img = Image::from_fn(40, 40, |x, _| if x < 20 { 10 } else { 240 });
        let s = gaussian_smooth(&img);
        for y in 1..40 {
            assert_eq!(s.row(y), s.row(0));
        }
    }

    #[test]
    fn pattern_deterministic_and_bounded() {
        let a = generate_pattern(DEFAULT_PAIRS, DEFAULT_PATTERN_SEED).unwrap();
        let b = generate_pattern(DEFAULT_PAIRS, DEFAULT_PATTERN_SEED).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 256);
        for p in &a {
            for (x, y) in [p.a, p.b] {
                assert!(x * x + y * y <= 169);
            }
            assert_ne!(p.a, p.b);
        }
        assert_ne!(a, generate_pattern(DEFAULT_PAIRS, 1).unwrap());
        assert_eq!(generate_pattern(0, 1), Err(Error::EmptyPattern));
    }

    #[test]
    fn raw_draws_have_requested_sigma() {
        let mut s = OffsetSampler::new(DEFAULT_PATTERN_SEED);
        let draws: Vec<(f64, f64)> = (0..10_000).map(|_| s.raw()).collect();
        for axis in [0, 1] {
            let v: Vec<f64> = draws.iter().map(|d| if axis == 0 { d.0 } else { d.1 }).collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
            assert!((sd - PATTERN_SIGMA).abs() <= 0.1 * PATTERN_SIGMA, "axis {axis}: {sd}");
        }
    }

    #[test]
    fn brief_tie_rule() {
        assert!(brief_test(200, 100));
        assert!(!brief_test(100, 200));
        assert!(brief_test(150, 150));
    }

    #[test]
    fn bit_packing_msb_first() {
        let f = Coordinate::new(0, 0, 0);
        let d = Descriptor::from_bits([true, false, false, false, false, false, false, true, true], f);
        assert_eq!(d.as_bytes(), &[0x81, 0x80]);
        assert_eq!(d.to_hex(), "8180");
        assert_eq!(d.len(), 9);
    }

    #[test]
    fn hamming_basics() {
        let f = Coordinate::new(0, 0, 0);
        let d = Descriptor::from_bits((0..256).map(|i| i % 3 == 0), f);
        assert_eq!(hamming(&d, &d), Ok(0));
        assert_eq!(hamming(&d, &d.complement()), Ok(256));
        let short = Descriptor::from_bits([true; 8], f);
        assert_eq!(hamming(&d, &short), Err(Error::DescriptorLengthMismatch(256, 8)));
    }

    #[test]
    fn descriptor_margin_checked() {
        let img = Image::filled(40, 40, 9);
        let pat = generate_pattern(8, 3).unwrap();
        assert!(compute_descriptor(&img, Coordinate::new(0, 17, 20), Orientation::IDENTITY, &pat).is_err());
        let d = compute_descriptor(&img, Coordinate::new(0, 18, 20), Orientation::IDENTITY, &pat).unwrap();
        assert!((0..8).all(|i| d.bit(i)));
    }
}
