//! The online two-stage segmentation pipeline and the survey coverage
//! geometry.
//!
//! Stage one (gather) preprocesses incoming frames and deposits them into a
//! single-slot latest-wins mailbox; stage two (segment) consumes from the
//! mailbox, runs inference and appends to the coverage log. A stale frame
//! in the slot is overwritten and counted as dropped. The pipeline runs
//! either on two real threads paced by the wall clock or single-threaded
//! under a virtual clock, which makes tests deterministic.
//!
//! Coverage is judged by the footprint/displacement/overlap chain:
//! `h_fp = a * h_image / f`, `d_kf = v / framerate`,
//! `overlap = (h_fp - d_kf) / h_fp`.

use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{preprocess, write_pgm_gray};
use crate::types::{Image, ProbabilityMap};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{context}: {detail}")]
    InvalidArgument { context: &'static str, detail: String },
    #[error("empty run: the source yielded no segmentable frame within {duration_s} s")]
    EmptyRun { duration_s: f64 },
    #[error("segmenter failed on frame {frame_id}: {detail}")]
    SegmenterFailed {
        frame_id: u64,
        detail: String,
        /// Everything segmented before the failure.
        partial: Box<CoverageLog>,
    },
    #[error("frame timestamps must be strictly increasing: {prev} then {next}")]
    NonMonotonicTimestamps { prev: f64, next: f64 },
    #[error("invalid frame meta on frame {frame_id}: {detail}")]
    InvalidMeta { frame_id: u64, detail: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("pipeline thread panicked")]
    ThreadPanicked,
}

// ---------------------------------------------------------------------
// Coverage geometry (the footprint/displacement/overlap chain)
// ---------------------------------------------------------------------

/// Physical height of the imaged seafloor strip: `(a * h_image) / f`.
pub fn footprint_height(
    altitude_m: f64,
    image_height_px: f64,
    focal_px: f64,
) -> Result<f64, PipelineError> {
    for (name, v) in [
        ("altitude", altitude_m),
        ("image height", image_height_px),
        ("focal length", focal_px),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(PipelineError::InvalidArgument {
                context: "footprint_height",
                detail: format!("{name} must be positive, got {v}"),
            });
        }
    }
    Ok(altitude_m * image_height_px / focal_px)
}

/// Vehicle travel between consecutive segmented frames: `v / framerate`.
pub fn keyframe_displacement(velocity_mps: f64, framerate_fps: f64) -> Result<f64, PipelineError> {
    if !(framerate_fps > 0.0 && framerate_fps.is_finite()) {
        return Err(PipelineError::InvalidArgument {
            context: "keyframe_displacement",
            detail: format!("framerate must be positive, got {framerate_fps}"),
        });
    }
    if !(velocity_mps >= 0.0 && velocity_mps.is_finite()) {
        return Err(PipelineError::InvalidArgument {
            context: "keyframe_displacement",
            detail: format!("velocity must be non-negative, got {velocity_mps}"),
        });
    }
    Ok(velocity_mps / framerate_fps)
}

/// Fraction of consecutive footprints that coincide: `(h_fp - d_kf) / h_fp`.
/// Negative values signal a coverage gap.
pub fn overlap(footprint_m: f64, displacement_m: f64) -> Result<f64, PipelineError> {
    if !(footprint_m > 0.0 && footprint_m.is_finite()) {
        return Err(PipelineError::InvalidArgument {
            context: "overlap",
            detail: format!("footprint height must be positive, got {footprint_m}"),
        });
    }
    Ok((footprint_m - displacement_m) / footprint_m)
}

/// Footprint height, keyframe displacement and overlap at one operating
/// point, plus the framerate that produced them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub footprint_height_m: f64,
    pub keyframe_displacement_m: f64,
    pub overlap: f64,
    pub achieved_framerate_fps: f64,
}

/// Evaluates the full chain at one operating point.
pub fn overlap_report(
    altitude_m: f64,
    velocity_mps: f64,
    framerate_fps: f64,
    image_height_px: f64,
    focal_px: f64,
) -> Result<OverlapReport, PipelineError> {
    let h_fp = footprint_height(altitude_m, image_height_px, focal_px)?;
    let d_kf = keyframe_displacement(velocity_mps, framerate_fps)?;
    Ok(OverlapReport {
        footprint_height_m: h_fp,
        keyframe_displacement_m: d_kf,
        overlap: overlap(h_fp, d_kf)?,
        achieved_framerate_fps: framerate_fps,
    })
}

/// Pass/fail verdict with every intermediate spelled out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageVerdict {
    pub pass: bool,
    pub explanation: String,
}

/// Coverage passes iff `overlap > min_overlap` (strict).
pub fn validate_coverage(report: &OverlapReport, min_overlap: f64) -> CoverageVerdict {
    let pass = report.overlap > min_overlap;
    let mut explanation = format!(
        "footprint h_fp = {:.4} m, keyframe displacement d_kf = {:.4} m at {:.4} fps, \
         overlap = (h_fp - d_kf) / h_fp = {:.4} ({:.1}%), required > {:.4}: {}",
        report.footprint_height_m,
        report.keyframe_displacement_m,
        report.achieved_framerate_fps,
        report.overlap,
        report.overlap * 100.0,
        min_overlap,
        if pass { "pass" } else { "fail" }
    );
    if report.overlap < 0.0 {
        explanation.push_str(&format!(
            "; consecutive footprints miss each other by {:.4} m",
            report.keyframe_displacement_m - report.footprint_height_m
        ));
    }
    CoverageVerdict { pass, explanation }
}

// ---------------------------------------------------------------------
// Frames, sources, segmenters
// ---------------------------------------------------------------------

/// Navigation state attached to one camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub frame_id: u64,
    pub timestamp_s: f64,
    pub altitude_m: f64,
    pub velocity_mps: f64,
    /// Survey-local position in meters.
    pub geopose: (f64, f64),
}

/// Pipeline geometry and policy knobs. The mailbox policy is fixed:
/// latest wins, stale frames drop.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Preprocess target height; also `h_image` in the footprint formula.
    pub image_height_px: usize,
    /// Preprocess target width.
    pub image_width_px: usize,
    pub focal_px: f64,
    /// Coverage passes iff overlap exceeds this (default 0: any positive
    /// overlap).
    pub min_overlap: f64,
    /// Rectification hook applied in the gather stage; identity by default.
    pub rectify: fn(&Image) -> Image,
}

fn identity_rectify(image: &Image) -> Image {
    image.clone()
}

impl PipelineConfig {
    pub fn new(image_height_px: usize, image_width_px: usize, focal_px: f64) -> Self {
        Self {
            image_height_px,
            image_width_px,
            focal_px,
            min_overlap: 0.0,
            rectify: identity_rectify,
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.image_height_px == 0 || self.image_width_px == 0 {
            return Err(PipelineError::InvalidArgument {
                context: "pipeline config",
                detail: "image extents must be positive".into(),
            });
        }
        if !(self.focal_px > 0.0) {
            return Err(PipelineError::InvalidArgument {
                context: "pipeline config",
                detail: format!("focal length must be positive, got {}", self.focal_px),
            });
        }
        if !(0.0..1.0).contains(&self.min_overlap) {
            return Err(PipelineError::InvalidArgument {
                context: "pipeline config",
                detail: format!("min overlap must lie in [0, 1), got {}", self.min_overlap),
            });
        }
        Ok(())
    }
}

/// A stream of frames with navigation metadata.
pub trait FrameSource: Send {
    fn next_frame(&mut self) -> Option<(FrameMeta, Image)>;
}

/// Consumes preprocessed frames and produces probability maps.
pub trait PipelineSegmenter: Send {
    fn segment(&mut self, image: &Image) -> Result<ProbabilityMap, String>;

    /// Extra wall-clock latency a stub simulates in real-time mode. The
    /// virtual clock takes its latency from [`RunMode::Virtual`] instead.
    fn simulated_latency(&self) -> Option<Duration> {
        None
    }
}

impl PipelineSegmenter for crate::network::Model<f32> {
    fn segment(&mut self, image: &Image) -> Result<ProbabilityMap, String> {
        self.predict(image).map_err(|e| e.to_string())
    }
}

/// Fixed-latency segmenter that emits a constant map.
pub struct StubSegmenter {
    pub latency: Duration,
    pub fill: f32,
}

impl PipelineSegmenter for StubSegmenter {
    fn segment(&mut self, image: &Image) -> Result<ProbabilityMap, String> {
        Ok(ProbabilityMap::constant(image.height(), image.width(), self.fill))
    }

    fn simulated_latency(&self) -> Option<Duration> {
        Some(self.latency)
    }
}

/// Synthetic survey source: frames at a fixed rate, constant altitude and
/// velocity, pose advancing along +x, images cycling through a seeded
/// synthetic dataset.
pub struct SimulatedSource {
    rate_fps: f64,
    altitude_m: f64,
    velocity_mps: f64,
    images: Vec<Image>,
    next: u64,
}

impl SimulatedSource {
    pub fn new(
        rate_fps: f64,
        altitude_m: f64,
        velocity_mps: f64,
        images: Vec<Image>,
    ) -> Result<Self, PipelineError> {
        if !(rate_fps > 0.0) {
            return Err(PipelineError::InvalidArgument {
                context: "simulated source",
                detail: format!("frame rate must be positive, got {rate_fps}"),
            });
        }
        if images.is_empty() {
            return Err(PipelineError::InvalidArgument {
                context: "simulated source",
                detail: "need at least one image to cycle".into(),
            });
        }
        Ok(Self {
            rate_fps,
            altitude_m,
            velocity_mps,
            images,
            next: 0,
        })
    }
}

impl FrameSource for SimulatedSource {
    fn next_frame(&mut self) -> Option<(FrameMeta, Image)> {
        let t = self.next as f64 / self.rate_fps;
        let meta = FrameMeta {
            frame_id: self.next,
            timestamp_s: t,
            altitude_m: self.altitude_m,
            velocity_mps: self.velocity_mps,
            geopose: (self.velocity_mps * t, 0.0),
        };
        let image = self.images[(self.next as usize) % self.images.len()].clone();
        self.next += 1;
        Some((meta, image))
    }
}

// ---------------------------------------------------------------------
// Coverage log
// ---------------------------------------------------------------------

/// One segmented frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub frame_id: u64,
    /// Capture timestamp of the frame.
    pub timestamp_s: f64,
    /// Segmentation completion time.
    pub completed_s: f64,
    pub geopose: (f64, f64),
    /// Where the output map was written, when map saving is on.
    pub map_path: Option<String>,
    /// Frames overwritten in the mailbox since the previous output.
    pub drop_count: u64,
    /// Footprint overlap with the previous segmented frame.
    pub overlap_to_previous: Option<f64>,
}

/// Counters plus the per-frame records of one run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CoverageLog {
    pub produced: u64,
    pub segmented: u64,
    pub dropped: u64,
    pub entries: Vec<CoverageEntry>,
}

impl CoverageLog {
    /// Newline-delimited JSON records.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &std::path::Path) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_jsonl()).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// How the run is clocked.
#[derive(Debug, Clone, Copy)]
pub enum RunMode {
    /// Single-threaded, deterministic; segmentation takes exactly
    /// `segment_latency_s` of virtual time per frame.
    Virtual { segment_latency_s: f64 },
    /// Two real threads paced by the wall clock.
    RealTime,
}

/// Run settings beyond the pipeline geometry.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub duration_s: f64,
    pub mode: RunMode,
    /// Directory for per-frame probability maps (PGM); omitted maps leave
    /// `map_path` empty in the log.
    pub map_out_dir: Option<PathBuf>,
}

struct LogBuilder {
    config_focal: f64,
    config_h: usize,
    map_out_dir: Option<PathBuf>,
    log: CoverageLog,
    last_pose: Option<(f64, f64)>,
    drop_since_last: u64,
    alt_sum: f64,
    vel_sum: f64,
}

impl LogBuilder {
    fn new(config: &PipelineConfig, map_out_dir: Option<PathBuf>) -> Self {
        Self {
            config_focal: config.focal_px,
            config_h: config.image_height_px,
            map_out_dir,
            log: CoverageLog::default(),
            last_pose: None,
            drop_since_last: 0,
            alt_sum: 0.0,
            vel_sum: 0.0,
        }
    }

    fn on_produced(&mut self, meta: &FrameMeta) {
        self.log.produced += 1;
        self.alt_sum += meta.altitude_m;
        self.vel_sum += meta.velocity_mps;
    }

    fn on_dropped(&mut self) {
        self.log.dropped += 1;
        self.drop_since_last += 1;
    }

    fn on_segmented(
        &mut self,
        meta: &FrameMeta,
        completed_s: f64,
        map: &ProbabilityMap,
    ) -> Result<(), PipelineError> {
        let map_path = match &self.map_out_dir {
            Some(dir) => {
                let path = dir.join(format!("frame_{:06}.pgm", meta.frame_id));
                write_pgm_gray(&path, map.height(), map.width(), map.data()).map_err(|e| {
                    PipelineError::Io {
                        path: path.clone(),
                        source: std::io::Error::other(e.to_string()),
                    }
                })?;
                Some(path.to_string_lossy().into_owned())
            }
            None => None,
        };
        let overlap_to_previous = self.last_pose.map(|(px, py)| {
            let d = ((meta.geopose.0 - px).powi(2) + (meta.geopose.1 - py).powi(2)).sqrt();
            let h_fp = meta.altitude_m * self.config_h as f64 / self.config_focal;
            (h_fp - d) / h_fp
        });
        self.last_pose = Some(meta.geopose);
        self.log.segmented += 1;
        self.log.entries.push(CoverageEntry {
            frame_id: meta.frame_id,
            timestamp_s: meta.timestamp_s,
            completed_s,
            geopose: meta.geopose,
            map_path,
            drop_count: self.drop_since_last,
            overlap_to_previous,
        });
        self.drop_since_last = 0;
        Ok(())
    }

    fn finish(
        self,
        config: &PipelineConfig,
        duration_s: f64,
    ) -> Result<(CoverageLog, OverlapReport), PipelineError> {
        if self.log.segmented == 0 {
            return Err(PipelineError::EmptyRun { duration_s });
        }
        let n = self.log.produced as f64;
        let mean_alt = self.alt_sum / n;
        let mean_vel = self.vel_sum / n;
        let achieved = self.log.segmented as f64 / duration_s;
        let h_fp = footprint_height(mean_alt, config.image_height_px as f64, config.focal_px)?;
        let d_kf = keyframe_displacement(mean_vel, achieved)?;
        let report = OverlapReport {
            footprint_height_m: h_fp,
            keyframe_displacement_m: d_kf,
            overlap: overlap(h_fp, d_kf)?,
            achieved_framerate_fps: achieved,
        };
        Ok((self.log, report))
    }
}

fn check_meta(prev_t: &mut Option<f64>, meta: &FrameMeta) -> Result<(), PipelineError> {
    if let Some(prev) = *prev_t {
        if meta.timestamp_s <= prev {
            return Err(PipelineError::NonMonotonicTimestamps {
                prev,
                next: meta.timestamp_s,
            });
        }
    }
    if !(meta.altitude_m > 0.0) {
        return Err(PipelineError::InvalidMeta {
            frame_id: meta.frame_id,
            detail: format!("altitude must be positive, got {}", meta.altitude_m),
        });
    }
    if !(meta.velocity_mps >= 0.0) {
        return Err(PipelineError::InvalidMeta {
            frame_id: meta.frame_id,
            detail: format!("velocity must be non-negative, got {}", meta.velocity_mps),
        });
    }
    *prev_t = Some(meta.timestamp_s);
    Ok(())
}

/// Runs the two-stage pipeline and reports the coverage log plus the
/// overlap at the run's mean altitude, mean velocity and achieved
/// framerate.
pub fn run_pipeline(
    source: &mut dyn FrameSource,
    segmenter: &mut dyn PipelineSegmenter,
    config: &PipelineConfig,
    options: &RunOptions,
) -> Result<(CoverageLog, OverlapReport), PipelineError> {
    config.validate()?;
    if !(options.duration_s > 0.0) {
        return Err(PipelineError::InvalidArgument {
            context: "run_pipeline",
            detail: format!("duration must be positive, got {}", options.duration_s),
        });
    }
    match options.mode {
        RunMode::Virtual { segment_latency_s } => {
            run_virtual(source, segmenter, segment_latency_s, config, options)
        }
        RunMode::RealTime => run_threaded(source, segmenter, config, options),
    }
}

fn gather_preprocess(config: &PipelineConfig, image: &Image) -> Image {
    let rectified = (config.rectify)(image);
    preprocess(&rectified, config.image_height_px, config.image_width_px)
}

fn run_virtual(
    source: &mut dyn FrameSource,
    segmenter: &mut dyn PipelineSegmenter,
    segment_latency_s: f64,
    config: &PipelineConfig,
    options: &RunOptions,
) -> Result<(CoverageLog, OverlapReport), PipelineError> {
    if !(segment_latency_s > 0.0) {
        return Err(PipelineError::InvalidArgument {
            context: "run_virtual",
            detail: format!("segment latency must be positive, got {segment_latency_s}"),
        });
    }
    let mut builder = LogBuilder::new(config, options.map_out_dir.clone());
    let mut mailbox: Option<(FrameMeta, Image, f64)> = None;
    let mut seg_free_at = 0.0f64;
    let mut prev_t = None;

    let segment_now = |builder: &mut LogBuilder,
                           segmenter: &mut dyn PipelineSegmenter,
                           meta: FrameMeta,
                           image: Image,
                           pickup: f64|
     -> Result<f64, PipelineError> {
        let map = segmenter
            .segment(&image)
            .map_err(|detail| PipelineError::SegmenterFailed {
                frame_id: meta.frame_id,
                detail,
                partial: Box::new(builder.log.clone()),
            })?;
        let completed = pickup + segment_latency_s;
        builder.on_segmented(&meta, completed, &map)?;
        Ok(completed)
    };

    while let Some((meta, image)) = source.next_frame() {
        if meta.timestamp_s >= options.duration_s {
            break;
        }
        check_meta(&mut prev_t, &meta)?;
        let t = meta.timestamp_s;
        // The segment stage picks up the mailbox as soon as it is free.
        if let Some((m, img, dep_t)) = mailbox.take() {
            let pickup = seg_free_at.max(dep_t);
            if pickup <= t {
                seg_free_at = segment_now(&mut builder, segmenter, m, img, pickup)?;
            } else {
                mailbox = Some((m, img, dep_t));
            }
        }
        builder.on_produced(&meta);
        let prepped = gather_preprocess(config, &image);
        if mailbox.is_some() {
            builder.on_dropped();
        }
        mailbox = Some((meta, prepped, t));
    }
    // Source ended: drain the slot deterministically.
    if let Some((m, img, dep_t)) = mailbox.take() {
        let pickup = seg_free_at.max(dep_t);
        segment_now(&mut builder, segmenter, m, img, pickup)?;
    }
    builder.finish(config, options.duration_s)
}

/// Single-slot latest-wins mailbox: one writer, one reader. Deposits never
/// block (they overwrite); takes block until a frame exists or the stream
/// closes.
pub struct Mailbox<T> {
    state: Mutex<MailboxState<T>>,
    available: Condvar,
}

struct MailboxState<T> {
    slot: Option<T>,
    closed: bool,
}

impl<T> Default for Mailbox<T> {
    fn default() -> Self {
        Self {
            state: Mutex::new(MailboxState {
                slot: None,
                closed: false,
            }),
            available: Condvar::new(),
        }
    }
}

impl<T> Mailbox<T> {
    /// Stores a value, returning `true` when it overwrote a stale one.
    pub fn deposit(&self, value: T) -> bool {
        let mut state = self.state.lock().expect("mailbox lock");
        let overwrote = state.slot.replace(value).is_some();
        self.available.notify_one();
        overwrote
    }

    /// Blocks until a value is present or the mailbox is closed; `None`
    /// only after close with an empty slot.
    pub fn take(&self) -> Option<T> {
        let mut state = self.state.lock().expect("mailbox lock");
        loop {
            if let Some(v) = state.slot.take() {
                return Some(v);
            }
            if state.closed {
                return None;
            }
            state = self.available.wait(state).expect("mailbox wait");
        }
    }

    pub fn close(&self) {
        let mut state = self.state.lock().expect("mailbox lock");
        state.closed = true;
        self.available.notify_all();
    }
}

fn run_threaded(
    source: &mut dyn FrameSource,
    segmenter: &mut dyn PipelineSegmenter,
    config: &PipelineConfig,
    options: &RunOptions,
) -> Result<(CoverageLog, OverlapReport), PipelineError> {
    struct GatherOut {
        produced: Vec<FrameMeta>,
        dropped_ids: u64,
        error: Option<PipelineError>,
    }

    let mailbox: Mailbox<(FrameMeta, Image)> = Mailbox::default();
    let start = Instant::now();
    let duration = Duration::from_secs_f64(options.duration_s);

    let (gather_out, segment_result) = std::thread::scope(|scope| {
        let mailbox_ref = &mailbox;
        let config_ref = &*config;
        let gather = scope.spawn(move || {
            let mut out = GatherOut {
                produced: Vec::new(),
                dropped_ids: 0,
                error: None,
            };
            let mut prev_t = None;
            while let Some((meta, image)) = source.next_frame() {
                if meta.timestamp_s >= options.duration_s {
                    break;
                }
                if let Err(e) = check_meta(&mut prev_t, &meta) {
                    out.error = Some(e);
                    break;
                }
                // Pace to the frame's own timeline.
                let due = Duration::from_secs_f64(meta.timestamp_s);
                let elapsed = start.elapsed();
                if due > elapsed {
                    std::thread::sleep(due - elapsed);
                }
                if start.elapsed() >= duration {
                    break;
                }
                let prepped = gather_preprocess(config_ref, &image);
                out.produced.push(meta);
                if mailbox_ref.deposit((meta, prepped)) {
                    out.dropped_ids += 1;
                }
            }
            mailbox_ref.close();
            out
        });

        let segment = scope.spawn(move || {
            let mut segmented: Vec<(FrameMeta, f64, ProbabilityMap)> = Vec::new();
            while let Some((meta, image)) = mailbox_ref.take() {
                let before = Instant::now();
                match segmenter.segment(&image) {
                    Ok(map) => {
                        if let Some(extra) = segmenter.simulated_latency() {
                            let spent = before.elapsed();
                            if extra > spent {
                                std::thread::sleep(extra - spent);
                            }
                        }
                        segmented.push((meta, start.elapsed().as_secs_f64(), map));
                    }
                    Err(detail) => return Err((meta.frame_id, detail, segmented)),
                }
            }
            Ok(segmented)
        });

        let gather_out = gather.join();
        let segment_result = segment.join();
        (gather_out, segment_result)
    });

    let gather_out = gather_out.map_err(|_| PipelineError::ThreadPanicked)?;
    let segment_result = segment_result.map_err(|_| PipelineError::ThreadPanicked)?;
    if let Some(e) = gather_out.error {
        return Err(e);
    }

    let mut builder = LogBuilder::new(config, options.map_out_dir.clone());
    for meta in &gather_out.produced {
        builder.on_produced(meta);
    }
    match segment_result {
        Ok(segmented) => {
            // Drops interleave with outputs; recover per-entry counts from
            // the id gaps between consecutive segmented frames.
            let mut last_seg_id: Option<u64> = None;
            for (meta, completed, map) in &segmented {
                if let Some(prev) = last_seg_id {
                    let skipped = gather_out
                        .produced
                        .iter()
                        .filter(|m| m.frame_id > prev && m.frame_id < meta.frame_id)
                        .count() as u64;
                    for _ in 0..skipped {
                        builder.on_dropped();
                    }
                }
                last_seg_id = Some(meta.frame_id);
                builder.on_segmented(meta, *completed, map)?;
            }
            // Frames produced after the last segmented one were dropped.
            if let Some(prev) = last_seg_id {
                let tail = gather_out
                    .produced
                    .iter()
                    .filter(|m| m.frame_id > prev)
                    .count() as u64;
                for _ in 0..tail {
                    builder.on_dropped();
                }
            }
            builder.finish(config, options.duration_s)
        }
        Err((frame_id, detail, partial)) => {
            for (meta, completed, map) in &partial {
                builder.on_segmented(meta, *completed, map)?;
            }
            Err(PipelineError::SegmenterFailed {
                frame_id,
                detail,
                partial: Box::new(builder.log),
            })
        }
    }
}
