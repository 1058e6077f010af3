//! Serializable output records.

use std::path::Path;

use orb_core::stream::{MemoryReport, StreamRun};
use orb_core::{Extraction, ExtractorParams, Image, Pyramid, WordLength};
use serde::Serialize;

#[derive(Serialize)]
#[serde(untagged)]
pub enum WordLengthField {
    Bits(u32),
    Full(&'static str),
}

impl From<WordLength> for WordLengthField {
    fn from(w: WordLength) -> Self {
        match w {
            WordLength::Full => WordLengthField::Full("full"),
            WordLength::Bits(n) => WordLengthField::Bits(n),
        }
    }
}

#[derive(Serialize)]
pub struct StreamStats {
    pub cycles: u64,
    pub stall_cycles: u64,
    pub stall_events: u64,
    pub queue_high_water: usize,
    pub buffer_bytes: usize,
}

#[derive(Serialize)]
pub struct Metadata {
    pub width: usize,
    pub height: usize,
    pub levels: [[usize; 2]; 2],
    pub threshold: u8,
    pub wordlen: WordLengthField,
    pub pairs: usize,
    pub seed: u64,
    pub mode: &'static str,
    pub level_counts: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream: Option<StreamStats>,
}

#[derive(Serialize)]
pub struct FeatureRecord {
    pub level: u8,
    pub x: usize,
    pub y: usize,
    pub sin: f64,
    pub cos: f64,
    pub descriptor: String,
}

#[derive(Serialize)]
pub struct ExtractionRecord {
    pub metadata: Metadata,
    pub features: Vec<FeatureRecord>,
}

impl ExtractionRecord {
    pub fn new(
        img: &Image,
        pyramid: &Pyramid,
        params: &ExtractorParams,
        mode: &'static str,
        extraction: &Extraction,
        run: Option<&StreamRun>,
    ) -> Self {
        let dims = |i: usize| [pyramid.level(i).width(), pyramid.level(i).height()];
        let mut level_counts = [0; 2];
        let features = extraction
            .features
            .iter()
            .map(|(fp, desc)| {
                level_counts[fp.coord.level as usize] += 1;
                FeatureRecord {
                    level: fp.coord.level,
                    x: fp.coord.x,
                    y: fp.coord.y,
                    sin: fp.orientation.sin,
                    cos: fp.orientation.cos,
                    descriptor: desc.to_hex(),
                }
            })
            .collect();
        let stream = run.map(|r| StreamStats {
            cycles: r.cycles,
            stall_cycles: r.stall_cycles,
            stall_events: r.stall_events,
            queue_high_water: r.queue_high_water,
            buffer_bytes: r.peak_buffer_bytes,
        });
        Self {
            metadata: Metadata {
                width: img.width(),
                height: img.height(),
                levels: [dims(0), dims(1)],
                threshold: params.threshold,
                wordlen: params.word_length.into(),
                pairs: params.pairs,
                seed: params.seed,
                mode,
                level_counts,
                stream,
            },
            features,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,x,y,sin,cos,descriptor\n");
        for f in &self.features {
            s.push_str(&format!("{},{},{},{},{},{}\n", f.level, f.x, f.y, f.sin, f.cos, f.descriptor));
        }
        s
    }
}

#[derive(Serialize)]
pub struct BenchReport {
    pub label: &'static str,
    pub input: String,
    pub width: usize,
    pub height: usize,
    pub mode: &'static str,
    pub frames: usize,
    pub mean_ms: f64,
    pub fps: f64,
    pub features: usize,
}

impl BenchReport {
    pub fn new(input: &Path, img: &Image, mode: &'static str, frames: usize, elapsed_s: f64, features: usize) -> Self {
        let mean_s = elapsed_s / frames as f64;
        Self {
            label: "software timing on this host; not comparable to FPGA hardware latency",
            input: input.display().to_string(),
            width: img.width(),
            height: img.height(),
            mode,
            frames,
            mean_ms: mean_s * 1e3,
            fps: if mean_s > 0.0 { 1.0 / mean_s } else { f64::INFINITY },
            features,
        }
    }
}

#[derive(Serialize)]
pub struct MemReport {
    pub levels: [[usize; 2]; 2],
    pub line_buffer_bytes: usize,
    pub register_bank_bytes: usize,
    pub streaming_bytes: usize,
    pub baseline_bytes: usize,
    pub savings_bytes: i64,
    pub paper_reference_bytes: i64,
    pub formula: String,
}

impl From<MemoryReport> for MemReport {
    fn from(r: MemoryReport) -> Self {
        let [(w0, h0), (w1, h1)] = r.level_dims;
        Self {
            levels: [[w0, h0], [w1, h1]],
            line_buffer_bytes: r.line_buffer_bytes,
            register_bank_bytes: r.register_bank_bytes,
            streaming_bytes: r.streaming_bytes,
            baseline_bytes: r.baseline_bytes,
            savings_bytes: r.savings_bytes,
            paper_reference_bytes: r.paper_reference_bytes,
            formula: r.formula(),
        }
    }
}

impl MemReport {
    pub fn to_text(&self, paper_text: &str) -> String {
        let kib = |b: i64| b as f64 / 1024.0;
        let mut s = String::new();
        s.push_str(&format!("levels:          {}x{}, {}x{}\n", self.levels[0][0], self.levels[0][1], self.levels[1][0], self.levels[1][1]));
        s.push_str(&format!("streaming bytes: {} ({:.1} KiB)\n", self.streaming_bytes, kib(self.streaming_bytes as i64)));
        s.push_str(&format!("baseline bytes:  {} ({:.1} KiB)\n", self.baseline_bytes, kib(self.baseline_bytes as i64)));
        s.push_str(&format!("savings bytes:   {} ({:.1} KiB)\n", self.savings_bytes, kib(self.savings_bytes)));
        s.push_str(&format!(
            "reference:       {} ({} bytes as 575 x 1024)\n",
            paper_text, self.paper_reference_bytes
        ));
        if self.savings_bytes <= 0 {
            s.push_str("note:            streaming buffers exceed the frame; no savings at this size\n");
        }
        s.push_str(&format!("formula:         {}\n", self.formula));
        s
    }
}
