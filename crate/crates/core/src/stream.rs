//! Pixel-serial model of the extractor datapath.
//!
//! Raw pixels enter in raster order and feed two line buffers: LB1 (31 lines)
//! exposes the 31x31 register bank RB1 used for the segment test and the
//! moments; LB2 (7 lines) exposes the 7x7 bank RB2 feeding the Gaussian
//! filter. Filter output is written into LB3 (31 lines) and RB3 (31x31), from
//! which descriptors are read. LB3 trails LB1/LB2 by a fixed latency of
//! `3 * width + 3` pixels, the filter's apron.
//!
//! One pushed pixel is one shifting cycle. A detected feature waits in a
//! queue until RB3 is centered on it; the whole pipeline then stalls for one
//! cycle per pattern pair while the descriptor is produced, and no buffer
//! moves until it resumes.

use std::collections::VecDeque;
use std::fmt;

use crate::descriptor::{descriptor_with, Descriptor, GaussianKernel, PatternPair};
use crate::error::{Error, Result};
use crate::fast::{segment_test, Coordinate, RING};
use crate::image::Pyramid;
use crate::orientation::{moments_with, CircularMask, WordLength, PATCH_RADIUS};
use crate::pipeline::{Extraction, ExtractorParams, FeaturePoint};

pub const PATCH_LINES: usize = 2 * PATCH_RADIUS as usize + 1;
pub const FILTER_LINES: usize = GaussianKernel::SIZE;

/// Bytes of on-chip memory the paper-reported savings correspond to (575 KiB).
pub const PAPER_REFERENCE_BYTES: i64 = 575 * 1024;
pub const PAPER_REFERENCE_TEXT: &str = "575K bytes";

/// Ring of image lines with a raster write cursor.
#[derive(Clone)]
pub struct LineBuffer {
    lines: usize,
    width: usize,
    storage: Vec<u8>,
    row: usize,
    col: usize,
    writes: u64,
}

impl LineBuffer {
    pub fn new(lines: usize, width: usize) -> Self {
        Self { lines, width, storage: vec![0; lines * width], row: 0, col: 0, writes: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.storage.len()
    }

    pub fn writes(&self) -> u64 {
        self.writes
    }

    /// Row and column the next write lands on.
    pub fn cursor(&self) -> (usize, usize) {
        (self.row, self.col)
    }

    /// Writes at the cursor; wrapping to a new row recycles the oldest line.
    pub fn push(&mut self, v: u8) {
        self.storage[(self.row % self.lines) * self.width + self.col] = v;
        self.writes += 1;
        self.col += 1;
        if self.col == self.width {
            self.col = 0;
            self.row += 1;
        }
    }

    /// Column `col` of the `lines` most recent rows ending at `newest_row`,
    /// oldest first. Rows before the frame read as zero.
    fn column(&self, col: usize, newest_row: usize, out: &mut [u8]) {
        debug_assert_eq!(out.len(), self.lines);
        for (i, slot) in out.iter_mut().enumerate() {
            let row = newest_row as isize - (self.lines - 1 - i) as isize;
            *slot = if row < 0 {
                0
            } else {
                self.storage[(row as usize % self.lines) * self.width + col]
            };
        }
    }
}

/// Sliding window of the most recent `width` columns, each `height` tall.
#[derive(Clone)]
pub struct RegisterBank {
    height: usize,
    width: usize,
    columns: Vec<u8>,
    head: usize,
    shifts: u64,
}

impl RegisterBank {
    pub fn new(height: usize, width: usize) -> Self {
        Self { height, width, columns: vec![0; height * width], head: 0, shifts: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.columns.len()
    }

    pub fn shifts(&self) -> u64 {
        self.shifts
    }

    fn shift_in(&mut self, load: impl FnOnce(&mut [u8])) {
        let slot = self.head;
        load(&mut self.columns[slot * self.height..(slot + 1) * self.height]);
        self.head = (self.head + 1) % self.width;
        self.shifts += 1;
    }

    /// Value at window column `cx` (0 = oldest) and row `ry` (0 = top).
    #[inline]
    pub fn get(&self, cx: usize, ry: usize) -> u8 {
        let slot = (self.head + cx) % self.width;
        self.columns[slot * self.height + ry]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Shifting,
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    FeatureDetected,
    StallBegin,
    StallEnd,
    DescriptorEmitted,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::FeatureDetected => "feature_detected",
            EventKind::StallBegin => "stall_begin",
            EventKind::StallEnd => "stall_end",
            EventKind::DescriptorEmitted => "descriptor_emitted",
        })
    }
}

/// Write counts of every buffer at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cursors {
    pub lb1: u64,
    pub lb2: u64,
    pub lb3: u64,
    pub rb1: u64,
    pub rb2: u64,
    pub rb3: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub cycle: u64,
    pub kind: EventKind,
    pub x: usize,
    pub y: usize,
    pub level: u8,
    pub cursors: Cursors,
}

impl TraceEvent {
    pub const CSV_HEADER: &'static str = "cycle,event,x,y,level";

    pub fn to_csv(&self) -> String {
        format!("{},{},{},{},{}", self.cycle, self.kind, self.x, self.y, self.level)
    }
}

/// Per-level streaming core.
pub struct StreamState {
    width: usize,
    height: usize,
    level: u8,
    threshold: u8,
    word_length: WordLength,
    mask: CircularMask,
    pattern: Vec<PatternPair>,
    kernel: GaussianKernel,

    lb1: LineBuffer,
    rb1: RegisterBank,
    lb2: LineBuffer,
    rb2: RegisterBank,
    lb3: LineBuffer,
    rb3: RegisterBank,
    control: Control,
    pending: VecDeque<FeaturePoint>,

    pushed: usize,
    cycle: u64,
    stall_cycles: u64,
    stall_events: u64,
    queue_high_water: usize,
    trace: Option<Vec<TraceEvent>>,
}

impl StreamState {
    pub fn new(width: usize, height: usize, level: u8, params: &ExtractorParams) -> Result<Self> {
        let (mask, pattern) = params.tables()?;
        Ok(Self::with_tables(width, height, level, params, mask, pattern))
    }

    fn with_tables(
        width: usize,
        height: usize,
        level: u8,
        params: &ExtractorParams,
        mask: CircularMask,
        pattern: Vec<PatternPair>,
    ) -> Self {
        Self {
            width,
            height,
            level,
            threshold: params.threshold,
            word_length: params.word_length,
            mask,
            pattern,
            kernel: GaussianKernel::SIGMA2,
            lb1: LineBuffer::new(PATCH_LINES, width),
            rb1: RegisterBank::new(PATCH_LINES, PATCH_LINES),
            lb2: LineBuffer::new(FILTER_LINES, width),
            rb2: RegisterBank::new(FILTER_LINES, FILTER_LINES),
            lb3: LineBuffer::new(PATCH_LINES, width),
            rb3: RegisterBank::new(PATCH_LINES, PATCH_LINES),
            control: Control::Shifting,
            pending: VecDeque::new(),
            pushed: 0,
            cycle: 0,
            stall_cycles: 0,
            stall_events: 0,
            queue_high_water: 0,
            trace: None,
        }
    }

    /// Records every control event from now on.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[TraceEvent] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.take().unwrap_or_default()
    }

    pub fn control(&self) -> Control {
        self.control
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn stall_cycles(&self) -> u64 {
        self.stall_cycles
    }

    pub fn stall_events(&self) -> u64 {
        self.stall_events
    }

    pub fn queue_high_water(&self) -> usize {
        self.queue_high_water
    }

    pub fn pixels_pushed(&self) -> usize {
        self.pushed
    }

    pub fn is_complete(&self) -> bool {
        self.pushed == self.width * self.height
    }

    /// Delay, in pixels, between a raw pixel entering LB1/LB2 and the
    /// filtered pixel at the same position entering LB3.
    pub fn filter_latency(&self) -> usize {
        GaussianKernel::APRON * self.width + GaussianKernel::APRON
    }

    /// Static storage of all line buffers and register banks.
    pub fn capacity_bytes(&self) -> usize {
        self.lb1.capacity()
            + self.lb2.capacity()
            + self.lb3.capacity()
            + self.rb1.capacity()
            + self.rb2.capacity()
            + self.rb3.capacity()
    }

    pub fn cursors(&self) -> Cursors {
        Cursors {
            lb1: self.lb1.writes(),
            lb2: self.lb2.writes(),
            lb3: self.lb3.writes(),
            rb1: self.rb1.shifts(),
            rb2: self.rb2.shifts(),
            rb3: self.rb3.shifts(),
        }
    }

    fn record(&mut self, kind: EventKind, c: Coordinate) {
        let cursors = self.cursors();
        let cycle = self.cycle;
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEvent { cycle, kind, x: c.x, y: c.y, level: c.level, cursors });
        }
    }

    /// Advances the pipeline by one raw pixel and returns any descriptors
    /// completed as a result.
    pub fn push_pixel(&mut self, p: u8) -> Result<Vec<(FeaturePoint, Descriptor)>> {
        if self.is_complete() {
            return Err(Error::PushAfterEndOfFrame);
        }
        debug_assert_eq!(self.control, Control::Shifting);
        let w = self.width;
        let (x, y) = (self.pushed % w, self.pushed / w);
        self.pushed += 1;
        self.cycle += 1;

        // stage 1: raw line buffers and their windows
        self.lb1.push(p);
        self.lb2.push(p);
        let mut col = [0u8; PATCH_LINES];
        self.lb1.column(x, y, &mut col);
        self.rb1.shift_in(|dst| dst.copy_from_slice(&col));
        self.lb2.column(x, y, &mut col[..FILTER_LINES]);
        self.rb2.shift_in(|dst| dst.copy_from_slice(&col[..FILTER_LINES]));

        let r = PATCH_RADIUS as usize;
        if x >= 2 * r && y >= 2 * r {
            let center = Coordinate::new(self.level, x - r, y - r);
            if center.in_margin(self.width, self.height) {
                self.detect(center)?;
            }
        }

        // stage 2: filter into LB3/RB3, trailing by the filter latency
        let latency = self.filter_latency();
        if self.pushed > latency {
            let a = GaussianKernel::APRON;
            let smoothed = if x >= 2 * a && y >= 2 * a {
                let rb2 = &self.rb2;
                self.kernel.apply(|i, j| rb2.get(i, j))
            } else {
                // filter window not fully inside the frame
                0
            };
            let s = self.pushed - 1 - latency;
            let (sx, sy) = (s % w, s / w);
            debug_assert_eq!(self.lb3.cursor(), (sy, sx));
            self.lb3.push(smoothed);
            self.lb3.column(sx, sy, &mut col);
            self.rb3.shift_in(|dst| dst.copy_from_slice(&col));

            if sx >= 2 * r && sy >= 2 * r {
                let center = (sx - r, sy - r);
                return self.describe_ready(center);
            }
        }
        Ok(Vec::new())
    }

    fn detect(&mut self, center: Coordinate) -> Result<()> {
        let r = PATCH_RADIUS as i32;
        let rb1 = &self.rb1;
        let at = |dx: i32, dy: i32| rb1.get((r + dx) as usize, (r + dy) as usize);
        let mut ring = [0u8; 16];
        for (slot, &(dx, dy)) in ring.iter_mut().zip(RING.iter()) {
            *slot = at(dx, dy);
        }
        if !segment_test(at(0, 0), &ring, self.threshold) {
            return Ok(());
        }
        let moments = moments_with(&self.mask, at);
        let orientation = self.word_length.orientation(moments)?;
        self.pending.push_back(FeaturePoint { coord: center, moments, orientation });
        self.queue_high_water = self.queue_high_water.max(self.pending.len());
        self.record(EventKind::FeatureDetected, center);
        Ok(())
    }

    fn describe_ready(&mut self, center: (usize, usize)) -> Result<Vec<(FeaturePoint, Descriptor)>> {
        let mut out = Vec::new();
        while let Some(&fp) = self.pending.front() {
            let c = fp.coord;
            debug_assert!((c.y, c.x) >= (center.1, center.0), "feature passed RB3 unserved");
            if (c.x, c.y) != center {
                break;
            }
            self.pending.pop_front();

            self.control = Control::Stalled;
            self.stall_events += 1;
            self.record(EventKind::StallBegin, c);
            let r = PATCH_RADIUS as i32;
            let rb3 = &self.rb3;
            let desc = descriptor_with(&self.pattern, fp.orientation, c, |dx, dy| {
                rb3.get((r + dx) as usize, (r + dy) as usize)
            });
            // one comparison per cycle
            let n = self.pattern.len() as u64;
            self.cycle += n;
            self.stall_cycles += n;
            self.record(EventKind::StallEnd, c);
            self.control = Control::Shifting;
            self.record(EventKind::DescriptorEmitted, c);
            out.push((fp, desc));
        }
        Ok(out)
    }
}

/// Totals from streaming both pyramid levels.
#[derive(Debug, Clone, Default)]
pub struct StreamRun {
    pub extraction: Extraction,
    pub cycles: u64,
    pub stall_cycles: u64,
    pub stall_events: u64,
    pub queue_high_water: usize,
    pub peak_buffer_bytes: usize,
    pub trace: Vec<TraceEvent>,
}

/// Streams level 0 then level 1 through the datapath.
pub fn run_stream(pyramid: &Pyramid, params: &ExtractorParams, trace: bool) -> Result<StreamRun> {
    let (mask, pattern) = params.tables()?;
    let mut run = StreamRun::default();
    for (level, img) in pyramid.levels().iter().enumerate() {
        let mut state =
            StreamState::with_tables(img.width(), img.height(), level as u8, params, mask.clone(), pattern.clone());
        if trace {
            state.enable_trace();
        }
        let mut items = Vec::new();
        for &p in img.data() {
            items.extend(state.push_pixel(p)?);
        }
        debug_assert!(state.pending.is_empty());
        run.extraction.push_level(level, items);
        run.cycles += state.cycle();
        run.stall_cycles += state.stall_cycles();
        run.stall_events += state.stall_events();
        run.queue_high_water = run.queue_high_water.max(state.queue_high_water());
        run.peak_buffer_bytes = run.peak_buffer_bytes.max(state.capacity_bytes());
        run.trace.extend(state.take_trace());
    }
    Ok(run)
}

/// Streaming buffer storage against holding both filtered levels whole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryReport {
    pub level_dims: [(usize, usize); 2],
    pub line_buffer_bytes: usize,
    pub register_bank_bytes: usize,
    pub streaming_bytes: usize,
    pub baseline_bytes: usize,
    pub savings_bytes: i64,
    pub paper_reference_bytes: i64,
}

impl MemoryReport {
    /// Human-readable derivation of the figures.
    pub fn formula(&self) -> String {
        let [(w0, h0), (w1, h1)] = self.level_dims;
        format!(
            "streaming = (31 + 7 + 31) lines x ({w0} + {w1}) px + (31*31 + 7*7 + 31*31) = {} + {} = {} B; \
             baseline = {w0}*{h0} + {w1}*{h1} = {} B; savings = baseline - streaming = {} B",
            self.line_buffer_bytes,
            self.register_bank_bytes,
            self.streaming_bytes,
            self.baseline_bytes,
            self.savings_bytes
        )
    }
}

/// Line buffers are counted once per level width (LB1 + LB2 + LB3), register
/// banks once; the baseline stores both smoothed levels in full.
pub fn memory_report(level_dims: [(usize, usize); 2]) -> MemoryReport {
    let lines = 2 * PATCH_LINES + FILTER_LINES;
    let line_buffer_bytes: usize = level_dims.iter().map(|&(w, _)| lines * w).sum();
    let register_bank_bytes = 2 * PATCH_LINES * PATCH_LINES + FILTER_LINES * FILTER_LINES;
    let streaming_bytes = line_buffer_bytes + register_bank_bytes;
    let baseline_bytes: usize = level_dims.iter().map(|&(w, h)| w * h).sum();
    MemoryReport {
        level_dims,
        line_buffer_bytes,
        register_bank_bytes,
        streaming_bytes,
        baseline_bytes,
        savings_bytes: baseline_bytes as i64 - streaming_bytes as i64,
        paper_reference_bytes: PAPER_REFERENCE_BYTES,
    }
}
