//! ORB feature extraction modeled on a streaming hardware datapath.
//!
//! The crate exposes two equivalent execution paths over a 2-level image
//! pyramid:
//!
//! - a batch path ([`extract_batch`]) that detects FAST-9 corners, computes
//!   intensity-centroid moments, truncates them to a configurable word length
//!   and builds steered BRIEF descriptors on a Gaussian-smoothed copy of the
//!   level;
//! - a streaming path ([`stream::run_stream`]) that pushes pixels one at a
//!   time through line buffers and register banks and stalls the pipeline
//!   while each descriptor is computed.
//!
//! Both paths produce byte-identical descriptors.

pub mod descriptor;
pub mod error;
pub mod fast;
pub mod image;
pub mod orientation;
pub mod pipeline;
pub mod stream;

pub use descriptor::{
    brief_test, compute_descriptor, gaussian_smooth, generate_pattern, hamming, Descriptor,
    GaussianKernel, PatternPair, DEFAULT_PAIRS, DEFAULT_PATTERN_SEED,
};
pub use error::{Error, Result};
pub use fast::{detect_features, segment_test, Coordinate, DEFAULT_THRESHOLD, MARGIN};
pub use image::{build_pyramid, decode_pgm, encode_pgm, resize_bilinear, Image, Pyramid};
pub use orientation::{
    circular_mask, compute_moments, compute_sincos, rotate_point, rotation_error,
    truncate_moments, wordlength_sweep, CircularMask, Moments, Orientation, SampleSpec,
    SweepRow, TruncatedMoments, WordLength, PATCH_RADIUS,
};
pub use pipeline::{extract_batch, Extraction, ExtractorParams, FeaturePoint};
pub use stream::{memory_report, run_stream, MemoryReport, StreamState};
