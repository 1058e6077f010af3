//! FAST-9 segment test and per-level corner detection.

use crate::image::Image;
use rayon::prelude::*;

pub const DEFAULT_THRESHOLD: u8 = 20;

/// Minimum contiguous arc length for a corner.
pub const ARC_LENGTH: usize = 9;

/// Distance from the image border a feature must keep: the 15-pixel patch
/// radius plus the 3-pixel apron of the 7x7 smoothing filter.
pub const MARGIN: usize = 18;

/// Smallest image side on which detection can emit anything.
pub const MIN_DETECT_SIDE: usize = 2 * MARGIN + 2;

/// Bresenham circle of radius 3, clockwise from the top pixel.
pub const RING: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Feature location on a pyramid level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coordinate {
    // field order gives (level, y, x) ordering
    pub level: u8,
    pub y: usize,
    pub x: usize,
}

impl Coordinate {
    pub fn new(level: u8, x: usize, y: usize) -> Self {
        Self { level, y, x }
    }

    /// Whether the coordinate keeps [`MARGIN`] pixels from every border.
    pub fn in_margin(&self, width: usize, height: usize) -> bool {
        self.x >= MARGIN && self.y >= MARGIN && self.x + MARGIN < width && self.y + MARGIN < height
    }
}

/// True when at least [`ARC_LENGTH`] contiguous ring pixels (with
/// wraparound) are all brighter than `center + threshold` or all darker than
/// `center - threshold`.
pub fn segment_test(center: u8, ring: &[u8; 16], threshold: u8) -> bool {
    let c = i16::from(center);
    let t = i16::from(threshold);
    let mut bright = 0u16;
    let mut dark = 0u16;
    for (i, &p) in ring.iter().enumerate() {
        let p = i16::from(p);
        if p > c + t {
            bright |= 1 << i;
        } else if p < c - t {
            dark |= 1 << i;
        }
    }
    has_arc(bright) || has_arc(dark)
}

/// Whether the circular 16-bit mask has a run of at least [`ARC_LENGTH`] set bits.
#[inline]
pub(crate) fn has_arc(mask: u16) -> bool {
    if mask.count_ones() < ARC_LENGTH as u32 {
        return false;
    }
    // Doubling the mask into 32 bits turns wraparound runs into plain runs;
    // AND-ing with shifted copies leaves a bit set only where a full run starts.
    let wide = u32::from(mask) | (u32::from(mask) << 16);
    let mut run = wide;
    for s in 1..ARC_LENGTH as u32 {
        run &= wide >> s;
    }
    run & 0xFFFF != 0
}

/// Gathers the 16 ring intensities around `(x, y)`; caller guarantees a 3-pixel border.
#[inline]
pub fn ring_at(img: &Image, x: usize, y: usize) -> [u8; 16] {
    let mut ring = [0u8; 16];
    for (slot, &(dx, dy)) in ring.iter_mut().zip(RING.iter()) {
        *slot = img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize);
    }
    ring
}

/// Every in-margin pixel that passes the segment test, in raster order.
///
/// No non-maximum suppression is applied.
pub fn detect_features(img: &Image, threshold: u8, level: u8) -> Vec<Coordinate> {
    let (w, h) = img.dims();
    if w < MIN_DETECT_SIDE || h < MIN_DETECT_SIDE {
        return Vec::new();
    }
    (MARGIN..h - MARGIN)
        .into_par_iter()
        .flat_map_iter(|y| {
            (MARGIN..w - MARGIN)
                .filter(move |&x| segment_test(img.get(x, y), &ring_at(img, x, y), threshold))
                .map(move |x| Coordinate::new(level, x, y))
        })
        .collect()
}
