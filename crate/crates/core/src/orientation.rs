//! Intensity-centroid orientation with fixed-point word-length truncation.
//!
//! Moments are accumulated exactly over a radius-15 disc. Before the
//! orientation is evaluated, both moments can be shortened to `N + 1` bits:
//! the leading zero bits they share are dropped, the next `N` bits are kept,
//! and the sign is re-attached. [`wordlength_sweep`] measures how far points
//! of the 31x31 patch move when rotated with the truncated orientation
//! instead of the exact one.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fast::Coordinate;
use crate::image::Image;

pub const PATCH_RADIUS: u32 = 15;

/// Width of a moment magnitude before truncation (sign kept separately).
pub const MAGNITUDE_BITS: u32 = 20;

pub const MAX_MAGNITUDE: i64 = (1 << MAGNITUDE_BITS) - 1;

pub const DEFAULT_WORD_LENGTH: u32 = 8;

/// Per-row half-widths of the circular patch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircularMask {
    radius: u32,
    extents: Vec<u32>,
}

impl CircularMask {
    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Largest `|dx|` included on row `dy`, or `None` outside the disc.
    pub fn extent(&self, dy: i32) -> Option<u32> {
        let r = self.radius as i32;
        (-r..=r).contains(&dy).then(|| self.extents[(dy + r) as usize])
    }

    /// All `(dx, dy)` offsets in the disc, row by row.
    pub fn offsets(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        let r = self.radius as i32;
        (-r..=r).flat_map(move |dy| {
            let e = self.extents[(dy + r) as usize] as i32;
            (-e..=e).map(move |dx| (dx, dy))
        })
    }

    /// Σ dx over the offsets with dx > 0.
    pub fn positive_dx_sum(&self) -> i64 {
        self.extents.iter().map(|&e| i64::from(e) * i64::from(e + 1) / 2).sum()
    }

    /// Largest reachable `|m10|` (or `|m01|`) for 8-bit intensities.
    pub fn max_moment(&self) -> i64 {
        255 * self.positive_dx_sum()
    }
}

/// Disc of the given radius with row extents `round(sqrt(r² - dy²))`.
pub fn circular_mask(radius: u32) -> Result<CircularMask> {
    if radius != PATCH_RADIUS {
        return Err(Error::UnsupportedRadius(radius));
    }
    let r = radius as i32;
    let extents = (-r..=r)
        .map(|dy| f64::from(r * r - dy * dy).sqrt().round() as u32)
        .collect();
    Ok(CircularMask { radius, extents })
}

/// First-order patch moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Moments {
    pub m10: i64,
    pub m01: i64,
}

impl Moments {
    pub fn new(m10: i64, m01: i64) -> Self {
        Self { m10, m01 }
    }
}

/// Moments shortened to a sign bit plus `bits` magnitude bits each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedMoments {
    pub negative10: bool,
    pub negative01: bool,
    pub mag10: u32,
    pub mag01: u32,
    pub bits: u32,
}

impl TruncatedMoments {
    pub fn signed(&self) -> (i64, i64) {
        let s = |neg: bool, m: u32| if neg { -i64::from(m) } else { i64::from(m) };
        (s(self.negative10, self.mag10), s(self.negative01, self.mag01))
    }
}

/// Anything that yields an `(m10, m01)` pair for orientation.
pub trait MomentPair {
    fn components(&self) -> (i64, i64);
}

impl MomentPair for Moments {
    fn components(&self) -> (i64, i64) {
        (self.m10, self.m01)
    }
}

impl MomentPair for TruncatedMoments {
    fn components(&self) -> (i64, i64) {
        self.signed()
    }
}

/// Word length used by the orientation unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordLength {
    Full,
    Bits(u32),
}

impl WordLength {
    pub fn bits(n: u32) -> Result<Self> {
        if (1..=MAGNITUDE_BITS).contains(&n) {
            Ok(Self::Bits(n))
        } else {
            Err(Error::WordLengthOutOfRange(n))
        }
    }

    /// Orientation of `m` after applying this word length.
    pub fn orientation(&self, m: Moments) -> Result<Orientation> {
        match *self {
            WordLength::Full => Ok(compute_sincos(&m)),
            WordLength::Bits(n) => Ok(compute_sincos(&truncate_moments(m, n)?)),
        }
    }
}

impl Default for WordLength {
    fn default() -> Self {
        WordLength::Bits(DEFAULT_WORD_LENGTH)
    }
}

impl fmt::Display for WordLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordLength::Full => f.write_str("full"),
            WordLength::Bits(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for WordLength {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(WordLength::Full);
        }
        let n: u32 = s.parse().map_err(|_| format!("expected 1..=20 or \"full\", got {s:?}"))?;
        WordLength::bits(n).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub sin: f64,
    pub cos: f64,
}

impl Orientation {
    pub const IDENTITY: Orientation = Orientation { sin: 0.0, cos: 1.0 };
}

/// Exact moments of the disc around `center`; offsets are image-axis aligned
/// (dy grows downwards).
pub fn compute_moments(img: &Image, center: Coordinate, mask: &CircularMask) -> Result<Moments> {
    let r = mask.radius() as usize;
    let (w, h) = img.dims();
    if center.x < r || center.y < r || center.x + r >= w || center.y + r >= h {
        return Err(Error::MarginViolation { x: center.x, y: center.y, width: w, height: h });
    }
    Ok(moments_with(mask, |dx, dy| {
        img.get((center.x as i32 + dx) as usize, (center.y as i32 + dy) as usize)
    }))
}

/// Moments over the disc with intensities supplied by `pixel(dx, dy)`.
pub(crate) fn moments_with(mask: &CircularMask, mut pixel: impl FnMut(i32, i32) -> u8) -> Moments {
    let mut m = Moments::default();
    for (dx, dy) in mask.offsets() {
        let v = i64::from(pixel(dx, dy));
        m.m10 += i64::from(dx) * v;
        m.m01 += i64::from(dy) * v;
    }
    m
}

/// Drops the leading zeros shared by both 20-bit magnitudes, keeps the next
/// `bits` bits (zero-filled when fewer remain) and re-attaches the signs.
pub fn truncate_moments(m: Moments, bits: u32) -> Result<TruncatedMoments> {
    if !(1..=MAGNITUDE_BITS).contains(&bits) {
        return Err(Error::WordLengthOutOfRange(bits));
    }
    for v in [m.m10, m.m01] {
        if v.abs() > MAX_MAGNITUDE {
            return Err(Error::MomentOverflow(v));
        }
    }
    let a10 = m.m10.unsigned_abs() as u32;
    let a01 = m.m01.unsigned_abs() as u32;
    let either = a10 | a01;
    let shared_zeros = if either == 0 { MAGNITUDE_BITS } else { either.leading_zeros() - (32 - MAGNITUDE_BITS) };
    let keep = |a: u32| {
        let aligned = (a << shared_zeros) & ((1 << MAGNITUDE_BITS) - 1);
        aligned >> (MAGNITUDE_BITS - bits)
    };
    Ok(TruncatedMoments {
        negative10: m.m10 < 0,
        negative01: m.m01 < 0,
        mag10: keep(a10),
        mag01: keep(a01),
        bits,
    })
}

/// `sin = m01 / |m|`, `cos = m10 / |m|`; the zero vector maps to no rotation.
pub fn compute_sincos(m: &impl MomentPair) -> Orientation {
    let (m10, m01) = m.components();
    if m10 == 0 && m01 == 0 {
        return Orientation::IDENTITY;
    }
    let (x, y) = (m10 as f64, m01 as f64);
    let norm = (x * x + y * y).sqrt();
    Orientation { sin: y / norm, cos: x / norm }
}

/// Rotates an offset: `x' = x cos + y sin`, `y' = y cos - x sin`.
pub fn rotate_point(p: (i32, i32), o: Orientation) -> (f64, f64) {
    let (x, y) = (f64::from(p.0), f64::from(p.1));
    (x * o.cos + y * o.sin, y * o.cos - x * o.sin)
}

/// Rotated offset rounded to the nearest pixel and clamped to the patch.
pub fn rotate_to_pixel(p: (i32, i32), o: Orientation) -> (i32, i32) {
    let r = PATCH_RADIUS as i32;
    let (x, y) = rotate_point(p, o);
    ((x.round() as i32).clamp(-r, r), (y.round() as i32).clamp(-r, r))
}

/// Distance between `p` rotated by `full` and by `truncated`, unrounded.
pub fn rotation_error(p: (i32, i32), full: Orientation, truncated: Orientation) -> f64 {
    let (x, y) = rotate_point(p, full);
    let (xn, yn) = rotate_point(p, truncated);
    (x - xn).hypot(y - yn)
}

/// Which moment pairs the sweep evaluates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSpec {
    /// Include the deterministic magnitude x angle grid.
    pub grid: bool,
    /// Number of uniformly random pairs over the full signed 21-bit range.
    pub random: usize,
    pub seed: u64,
}

impl SampleSpec {
    pub const DEFAULT_RANDOM: usize = 10_000;
    pub const DEFAULT_SEED: u64 = 0x5EED_0F0A;
    const GRID_MAGNITUDES: usize = 33;
    const GRID_ANGLES: usize = 360;

    pub fn moments(&self) -> Vec<Moments> {
        let mut out = Vec::new();
        if self.grid {
            // magnitudes spaced geometrically from 2^4 to the 20-bit ceiling
            let lo = 16f64.ln();
            let hi = (MAX_MAGNITUDE as f64).ln();
            for i in 0..Self::GRID_MAGNITUDES {
                let r = (lo + (hi - lo) * i as f64 / (Self::GRID_MAGNITUDES - 1) as f64).exp();
                for a in 0..Self::GRID_ANGLES {
                    let t = (a as f64).to_radians();
                    let c = |v: f64| (v.round() as i64).clamp(-MAX_MAGNITUDE, MAX_MAGNITUDE);
                    out.push(Moments::new(c(r * t.cos()), c(r * t.sin())));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.random {
            let m10 = rng.random_range(-MAX_MAGNITUDE..=MAX_MAGNITUDE);
            let m01 = rng.random_range(-MAX_MAGNITUDE..=MAX_MAGNITUDE);
            out.push(Moments::new(m10, m01));
        }
        out
    }
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self { grid: true, random: Self::DEFAULT_RANDOM, seed: Self::DEFAULT_SEED }
    }
}

/// One line of the word-length sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub bits: u32,
    pub max_error: f64,
    pub mean_error: f64,
    pub argmax: (i32, i32),
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "N,max_error,mean_error,argmax_dx,argmax_dy";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.6},{:.6},{},{}",
            self.bits, self.max_error, self.mean_error, self.argmax.0, self.argmax.1
        )
    }
}

/// Offsets of the full 31x31 window the orientation is applied to.
pub fn window_offsets() -> Vec<(i32, i32)> {
    let r = PATCH_RADIUS as i32;
    (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dx, dy))).collect()
}

#[derive(Clone, Copy)]
struct Extreme {
    error: f64,
    point: (i32, i32),
}

impl Extreme {
    // Larger error wins; on equal error the point farther from the center
    // wins so an all-zero sweep still reports a corner.
    fn better_than(&self, other: &Extreme) -> bool {
        let r2 = |p: (i32, i32)| p.0 * p.0 + p.1 * p.1;
        self.error > other.error || (self.error == other.error && r2(self.point) > r2(other.point))
    }
}

/// Max/mean rotation error over every sample and every window offset, per word length.
pub fn wordlength_sweep(word_lengths: &[u32], samples: &SampleSpec) -> Result<Vec<SweepRow>> {
    for &n in word_lengths {
        WordLength::bits(n)?;
    }
    let moments = samples.moments();
    if moments.is_empty() {
        return Err(Error::EmptySamples);
    }
    let points = window_offsets();
    let full: Vec<Orientation> = moments.iter().map(compute_sincos).collect();

    word_lengths
        .iter()
        .map(|&bits| {
            // collect per-sample partials in order so the final sum is deterministic
            let partials: Vec<(Extreme, f64)> = moments
                .par_iter()
                .zip(full.par_iter())
                .map(|(&m, &exact)| {
                    let approx = compute_sincos(&truncate_moments(m, bits)?);
                    let mut best = Extreme { error: -1.0, point: (0, 0) };
                    let mut sum = 0.0;
                    for &p in &points {
                        let e = rotation_error(p, exact, approx);
                        sum += e;
                        let cand = Extreme { error: e, point: p };
                        if cand.better_than(&best) {
                            best = cand;
                        }
                    }
                    Ok((best, sum))
                })
                .collect::<Result<_>>()?;

            let mut best = partials[0].0;
            let mut total = 0.0;
            for (ext, sum) in &partials {
                if ext.better_than(&best) {
                    best = *ext;
                }
                total += sum;
            }
            Ok(SweepRow {
                bits,
                max_error: best.error,
                mean_error: total / (partials.len() * points.len()) as f64,
                argmax: best.point,
            })
        })
        .collect()
}
