//! Batch driver: manifest in, feature matrices and evaluation report out.
//!
//! Videos are processed on a bounded worker pool. Results come back in
//! manifest order and are written by the calling thread only, so outputs do
//! not depend on scheduling.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use microstrain_core::eval::{cross_validate, EvalReport};
use microstrain_core::flow::flow_sequence;
use microstrain_core::lbptop::{block_histograms, zero_noise_blocks};
use microstrain_core::osf::{max_normalize, osf_vector};
use microstrain_core::osw::osw_vector;
use microstrain_core::resample::resample_temporal;
use microstrain_core::strain::strain_sequence;
use microstrain_core::{concat_features, FeatureVector, FlowField, FrameSequence, Grid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{hex_digest, protocol_name, FailurePolicy, FeatureSet, PipelineConfig};
use crate::error::{io_err, Error, Result};
use crate::formats::{confusion_to_csv, features_to_csv, predictions_to_csv, read_features, report_to_json, write_flow};
use crate::frames::{load_sequence, save_gray_png};
use crate::manifest::{DatasetManifest, ManifestRecord};

pub const OSF_FILE: &str = "osf.csv";
pub const OSW_FILE: &str = "osw.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const LBPTOP_FILE: &str = "lbptop.csv";
pub const CACHE_FILE: &str = "features.meta.json";
pub const REPORT_FILE: &str = "report.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const RUN_FILE: &str = "run.json";
pub const CONFIG_FILE: &str = "config.txt";

/// Intermediate product requested from `extract`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Stage {
    Flow,
    Strain,
    Osf,
    Lbptop,
    Osw,
    All,
}

/// Wall-clock milliseconds spent per stage, summed over videos.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub load_ms: f64,
    pub osf_ms: f64,
    pub osw_ms: f64,
    pub extract_wall_ms: f64,
    pub evaluate_ms: f64,
}

impl StageTimings {
    fn add(&mut self, other: &StageTimings) {
        self.load_ms += other.load_ms;
        self.osf_ms += other.osf_ms;
        self.osw_ms += other.osw_ms;
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoFailure {
    pub video_id: String,
    pub error: String,
}

/// One row per successfully processed video, in manifest order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureMatrices {
    pub osf: Vec<FeatureVector>,
    pub osw: Vec<FeatureVector>,
    pub combined: Vec<FeatureVector>,
}

impl FeatureMatrices {
    pub fn select(&self, set: FeatureSet) -> &[FeatureVector] {
        match set {
            FeatureSet::Osf => &self.osf,
            FeatureSet::Osw => &self.osw,
            FeatureSet::All => &self.combined,
        }
    }

    pub fn len(&self) -> usize {
        self.combined.len()
    }

    pub fn is_empty(&self) -> bool {
        self.combined.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub features: FeatureMatrices,
    pub failures: Vec<VideoFailure>,
    pub timings: StageTimings,
}

/// Loads a record and resamples it when the configuration asks for it.
pub fn prepare_sequence(record: &ManifestRecord, cfg: &PipelineConfig) -> Result<FrameSequence> {
    let seq = load_sequence(record)?;
    match cfg.resampling() {
        Some(len) => Ok(resample_temporal(&seq, len)?),
        None => Ok(seq),
    }
}

/// Frames behind the OSF strain maps.
fn osf_frames(seq: &FrameSequence, cfg: &PipelineConfig) -> Result<FrameSequence> {
    let f = &cfg.features;
    if f.gaussian_osf {
        Ok(seq.smoothed(f.gaussian_size, f.gaussian_sigma)?)
    } else {
        Ok(seq.clone())
    }
}

fn osw_frames(seq: &FrameSequence, cfg: &PipelineConfig) -> Result<FrameSequence> {
    let f = &cfg.features;
    if f.gaussian_osw {
        Ok(seq.smoothed(f.gaussian_size, f.gaussian_sigma)?)
    } else {
        Ok(seq.clone())
    }
}

/// Per-video product of one stage.
enum Artifact {
    Flows(Vec<FlowField>),
    StrainMaps(Vec<Grid>),
    Vector(FeatureVector),
    All(Box<AllFeatures>),
}

struct AllFeatures {
    osf: FeatureVector,
    osw: FeatureVector,
    combined: FeatureVector,
    strain_dumps: Vec<Grid>,
}

fn process(record: &ManifestRecord, cfg: &PipelineConfig, stage: Stage) -> Result<(Artifact, StageTimings)> {
    let mut t = StageTimings::default();
    let start = Instant::now();
    let seq = prepare_sequence(record, cfg)?;
    t.load_ms = ms(start.elapsed());
    let f = &cfg.features;
    let strain_pngs = |seq: &FrameSequence| -> Result<Vec<Grid>> {
        let frames = osf_frames(seq, cfg)?;
        Ok(strain_sequence(frames.frames(), &f.flow)?
            .iter()
            .map(|m| max_normalize(&m.magnitude))
            .collect())
    };
    let artifact = match stage {
        Stage::Flow => Artifact::Flows(flow_sequence(osf_frames(&seq, cfg)?.frames(), &f.flow)?),
        Stage::Strain => Artifact::StrainMaps(strain_pngs(&seq)?),
        Stage::Osf => {
            let start = Instant::now();
            let v = osf_vector(&seq, f)?;
            t.osf_ms = ms(start.elapsed());
            Artifact::Vector(v)
        }
        Stage::Lbptop => {
            let frames = osw_frames(&seq, cfg)?;
            let hists = zero_noise_blocks(block_histograms(frames.frames(), &f.lbptop)?, f.noise_blocks)?;
            Artifact::Vector(FeatureVector::for_sequence(&seq, hists.into_vec()))
        }
        Stage::Osw => {
            let start = Instant::now();
            let v = osw_vector(&seq, f)?;
            t.osw_ms = ms(start.elapsed());
            Artifact::Vector(v)
        }
        Stage::All => {
            let start = Instant::now();
            let osf = osf_vector(&seq, f)?;
            t.osf_ms = ms(start.elapsed());
            let start = Instant::now();
            let osw = osw_vector(&seq, f)?;
            t.osw_ms = ms(start.elapsed());
            let combined = concat_features(&osf, &osw)?;
            let strain_dumps = if cfg.dump_strain { strain_pngs(&seq)? } else { Vec::new() };
            Artifact::All(Box::new(AllFeatures {
                osf,
                osw,
                combined,
                strain_dumps,
            }))
        }
    };
    Ok((artifact, t))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

struct StageRun {
    artifacts: Vec<(String, Artifact)>,
    failures: Vec<VideoFailure>,
    timings: StageTimings,
}

/// Runs `stage` over every record; failures are skipped or abort per config.
fn run_stage(manifest: &DatasetManifest, cfg: &PipelineConfig, stage: Stage) -> Result<StageRun> {
    if manifest.is_empty() {
        return Err(Error::EmptyManifest);
    }
    manifest.validate()?;
    cfg.validate()?;
    let start = Instant::now();
    let results: Vec<Result<(Artifact, StageTimings)>> =
        thread_pool(cfg.jobs)?.install(|| manifest.records.par_iter().map(|r| process(r, cfg, stage)).collect());
    let mut timings = StageTimings {
        extract_wall_ms: ms(start.elapsed()),
        ..StageTimings::default()
    };
    let mut artifacts = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (record, result) in manifest.records.iter().zip(results) {
        match result {
            Ok((artifact, t)) => {
                timings.add(&t);
                artifacts.push((record.video_id.clone(), artifact));
            }
            Err(e) => match cfg.on_error {
                FailurePolicy::Abort => {
                    return Err(Error::Video {
                        video_id: record.video_id.clone(),
                        source: Box::new(e),
                    })
                }
                FailurePolicy::Skip => {
                    log::warn!("skipping video {}: {e}", record.video_id);
                    failures.push(VideoFailure {
                        video_id: record.video_id.clone(),
                        error: e.to_string(),
                    });
                }
            },
        }
    }
    Ok(StageRun {
        artifacts,
        failures,
        timings,
    })
}

/// OSF, OSW and combined features of every video, in memory.
pub fn extract_features(manifest: &DatasetManifest, cfg: &PipelineConfig) -> Result<Extraction> {
    let run = run_stage(manifest, cfg, Stage::All)?;
    let mut features = FeatureMatrices::default();
    for (_, artifact) in run.artifacts {
        if let Artifact::All(all) = artifact {
            features.osf.push(all.osf);
            features.osw.push(all.osw);
            features.combined.push(all.combined);
        }
    }
    Ok(Extraction {
        features,
        failures: run.failures,
        timings: run.timings,
    })
}

/// Cross-validates the configured feature set.
pub fn evaluate(features: &FeatureMatrices, cfg: &PipelineConfig) -> Result<EvalReport> {
    let rows = features.select(cfg.feature_set);
    if rows.is_empty() {
        return Err(Error::NoFeatures);
    }
    Ok(cross_validate(rows, cfg.protocol, &cfg.svm)?)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

/// Identifies the cached feature matrices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct CacheKey {
    feature_hash: String,
    manifest_hash: String,
}

fn cache_key(manifest: &DatasetManifest, cfg: &PipelineConfig) -> Result<CacheKey> {
    Ok(CacheKey {
        feature_hash: cfg.feature_hash(),
        manifest_hash: hex_digest(manifest.to_csv()?.as_bytes()),
    })
}

fn load_cached(dir: &Path, key: &CacheKey) -> Option<FeatureMatrices> {
    let stored: CacheKey = serde_json::from_slice(&fs::read(dir.join(CACHE_FILE)).ok()?).ok()?;
    if &stored != key {
        return None;
    }
    let features = FeatureMatrices {
        osf: read_features(&dir.join(OSF_FILE)).ok()?,
        osw: read_features(&dir.join(OSW_FILE)).ok()?,
        combined: read_features(&dir.join(FEATURES_FILE)).ok()?,
    };
    let consistent = features.osf.len() == features.combined.len() && features.osw.len() == features.combined.len();
    consistent.then_some(features)
}

fn write_matrices(dir: &Path, features: &FeatureMatrices) -> Result<()> {
    write(&dir.join(OSF_FILE), features_to_csv(&features.osf)?)?;
    write(&dir.join(OSW_FILE), features_to_csv(&features.osw)?)?;
    write(&dir.join(FEATURES_FILE), features_to_csv(&features.combined)?)
}

/// Contents of the run metadata file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config_hash: String,
    pub feature_hash: String,
    pub protocol: String,
    pub jobs: usize,
    pub videos: usize,
    pub cache_hit: bool,
    pub failures: Vec<VideoFailure>,
    pub timings: StageTimings,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: EvalReport,
    pub features: FeatureMatrices,
    pub metadata: RunMetadata,
    pub output_dir: PathBuf,
}

/// Extracts (or reuses cached) features, cross-validates and writes every
/// artifact to `cfg.output_dir`. Nothing is written for an empty manifest.
pub fn run_pipeline(manifest: &DatasetManifest, cfg: &PipelineConfig, use_cache: bool) -> Result<RunOutput> {
    if manifest.is_empty() {
        return Err(Error::EmptyManifest);
    }
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    let key = cache_key(manifest, cfg)?;
    let cached = if use_cache { load_cached(&dir, &key) } else { None };
    let cache_hit = cached.is_some();
    let (features, failures, mut timings) = match cached {
        Some(features) => {
            log::info!("reusing cached features in {}", dir.display());
            (features, Vec::new(), StageTimings::default())
        }
        None => {
            let extraction = extract_features(manifest, cfg)?;
            create_dir(&dir)?;
            write_matrices(&dir, &extraction.features)?;
            write(&dir.join(CACHE_FILE), serde_json::to_vec_pretty(&key)?)?;
            (extraction.features, extraction.failures, extraction.timings)
        }
    };
    let start = Instant::now();
    let report = evaluate(&features, cfg)?;
    timings.evaluate_ms = ms(start.elapsed());

    create_dir(&dir)?;
    write(&dir.join(REPORT_FILE), report_to_json(&report)?)?;
    write(&dir.join(PREDICTIONS_FILE), predictions_to_csv(&report)?)?;
    write(&dir.join(CONFUSION_FILE), confusion_to_csv(&report.confusion)?)?;
    write(&dir.join(CONFIG_FILE), cfg.to_text())?;
    let metadata = RunMetadata {
        config_hash: cfg.hash(),
        feature_hash: key.feature_hash,
        protocol: protocol_name(cfg.protocol).into(),
        jobs: cfg.jobs,
        videos: features.len(),
        cache_hit,
        failures,
        timings,
    };
    write(&dir.join(RUN_FILE), serde_json::to_vec_pretty(&metadata)?)?;
    Ok(RunOutput {
        report,
        features,
        metadata,
        output_dir: dir,
    })
}

/// Summary of an `extract` run.
#[derive(Debug, Clone)]
pub struct StageOutput {
    pub written: Vec<PathBuf>,
    pub failures: Vec<VideoFailure>,
}

/// Runs one stage and writes its artifacts under `cfg.output_dir`.
pub fn extract_stage(manifest: &DatasetManifest, cfg: &PipelineConfig, stage: Stage) -> Result<StageOutput> {
    let StageRun { artifacts, failures, .. } = run_stage(manifest, cfg, stage)?;
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let mut written = Vec::new();
    let write_pngs = |sub: &str, id: &str, maps: &[Grid], written: &mut Vec<PathBuf>| -> Result<()> {
        let video_dir = dir.join(sub).join(id);
        create_dir(&video_dir)?;
        for (k, map) in maps.iter().enumerate() {
            let path = video_dir.join(format!("pair_{k:03}.png"));
            save_gray_png(map, &path)?;
            written.push(path);
        }
        Ok(())
    };
    let mut vectors = Vec::new();
    let mut matrices = FeatureMatrices::default();
    for (id, artifact) in &artifacts {
        match artifact {
            Artifact::Flows(flows) => {
                let video_dir = dir.join("flow").join(id);
                create_dir(&video_dir)?;
                for (k, flow) in flows.iter().enumerate() {
                    let path = video_dir.join(format!("pair_{k:03}.flo"));
                    write_flow(flow, &path)?;
                    written.push(path);
                }
            }
            Artifact::StrainMaps(maps) => write_pngs("strain", id, maps, &mut written)?,
            Artifact::Vector(v) => vectors.push(v.clone()),
            Artifact::All(all) => {
                matrices.osf.push(all.osf.clone());
                matrices.osw.push(all.osw.clone());
                matrices.combined.push(all.combined.clone());
                write_pngs("strain", id, &all.strain_dumps, &mut written)?;
            }
        }
    }
    let file = match stage {
        Stage::Osf => Some(OSF_FILE),
        Stage::Osw => Some(OSW_FILE),
        Stage::Lbptop => Some(LBPTOP_FILE),
        _ => None,
    };
    if let Some(name) = file {
        let path = dir.join(name);
        write(&path, features_to_csv(&vectors)?)?;
        written.push(path);
    }
    if stage == Stage::All {
        write_matrices(dir, &matrices)?;
        write(&dir.join(CACHE_FILE), serde_json::to_vec_pretty(&cache_key(manifest, cfg)?)?)?;
        written.extend([OSF_FILE, OSW_FILE, FEATURES_FILE].map(|n| dir.join(n)));
    }
    Ok(StageOutput { written, failures })
}
