//! Pipeline configuration as a plain `key = value` text file.
//!
//! Blank lines and lines starting with `#` are ignored. Every key in
//! [`KEYS`] may appear at most once; missing keys keep their defaults.
//! [`PipelineConfig::to_text`] writes every key, and parsing that text
//! restores the exact same configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use microstrain_core::eval::Protocol;
use microstrain_core::svm::SvmParams;
use microstrain_core::FeatureConfig;
use sha2::{Digest, Sha256};

use crate::error::{io_err, Error, Result};

/// When to standardize sequence length before feature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleMode {
    /// Resample under LOSO, keep native length under LOVO.
    Auto,
    On,
    Off,
}

/// Which descriptor feeds the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSet {
    Osf,
    Osw,
    All,
}

/// Reaction to a video that fails to load or extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailurePolicy {
    Skip,
    Abort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub resample: ResampleMode,
    pub resample_length: usize,
    pub protocol: Protocol,
    pub feature_set: FeatureSet,
    pub svm: SvmParams,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub on_error: FailurePolicy,
    pub output_dir: PathBuf,
    /// Also write per-pair strain magnitude PNGs during extraction.
    pub dump_strain: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            resample: ResampleMode::Auto,
            resample_length: 10,
            protocol: Protocol::Loso,
            feature_set: FeatureSet::All,
            svm: SvmParams::default(),
            jobs: 0,
            on_error: FailurePolicy::Skip,
            output_dir: PathBuf::from("out"),
            dump_strain: false,
        }
    }
}

/// Every configuration key with a one-line description, in file order.
pub const KEYS: &[(&str, &str)] = &[
    ("p_xy", "LBP neighbours on the XY plane"),
    ("p_xt", "LBP neighbours on the XT plane"),
    ("p_yt", "LBP neighbours on the YT plane"),
    ("r_x", "LBP radius along x"),
    ("r_y", "LBP radius along y"),
    ("r_t", "LBP radius along t"),
    ("n_blocks", "blocks per side of the LBP-TOP grid"),
    ("bins_per_plane", "histogram bins per plane (15 or 16 for P=4)"),
    ("rho_l", "lower clipping fraction"),
    ("rho_u", "upper clipping fraction"),
    ("edge_quantile", "quantile of vertical-edge response to suppress"),
    ("flow_window", "optical flow window side"),
    ("min_eigenvalue", "smallest accepted flow normal-matrix eigenvalue"),
    ("max_condition", "largest accepted flow normal-matrix condition number"),
    ("gaussian_size", "Gaussian kernel side"),
    ("gaussian_sigma", "Gaussian standard deviation"),
    ("gaussian_osf", "smooth frames before OSF strain"),
    ("gaussian_osw", "smooth frames before LBP-TOP and OSW weights"),
    ("noise_blocks", "zero the two bottom-corner LBP blocks"),
    ("osw_preprocess", "edge-suppress and clip the OSW strain maps"),
    ("resample", "temporal resampling: auto, on or off"),
    ("resample_length", "frames after resampling"),
    ("protocol", "cross-validation protocol: loso or lovo"),
    ("feature_set", "classifier input: osf, osw or all"),
    ("svm_c", "SVM penalty"),
    ("svm_tolerance", "SVM stopping tolerance"),
    ("svm_max_epochs", "SVM epoch limit"),
    ("svm_seed", "SVM visiting-order seed"),
    ("standardize", "z-score features before the SVM"),
    ("jobs", "worker threads, 0 for all cores"),
    ("on_error", "per-video failure handling: skip or abort"),
    ("output_dir", "directory for all outputs"),
    ("dump_strain", "write strain magnitude PNGs during extraction"),
];

/// Keys whose values change the extracted features.
const FEATURE_KEYS: &[&str] = &[
    "p_xy",
    "p_xt",
    "p_yt",
    "r_x",
    "r_y",
    "r_t",
    "n_blocks",
    "bins_per_plane",
    "rho_l",
    "rho_u",
    "edge_quantile",
    "flow_window",
    "min_eigenvalue",
    "max_condition",
    "gaussian_size",
    "gaussian_sigma",
    "gaussian_osf",
    "gaussian_osw",
    "noise_blocks",
    "osw_preprocess",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

impl PipelineConfig {
    pub fn get(&self, key: &str) -> Result<String> {
        let f = &self.features;
        let l = &f.lbptop;
        Ok(match key {
            "p_xy" => l.p_xy.to_string(),
            "p_xt" => l.p_xt.to_string(),
            "p_yt" => l.p_yt.to_string(),
            "r_x" => l.r_x.to_string(),
            "r_y" => l.r_y.to_string(),
            "r_t" => l.r_t.to_string(),
            "n_blocks" => l.n_blocks.to_string(),
            "bins_per_plane" => l.bins_per_plane.to_string(),
            "rho_l" => f.rho_l.to_string(),
            "rho_u" => f.rho_u.to_string(),
            "edge_quantile" => f.edge_quantile.to_string(),
            "flow_window" => f.flow.window.to_string(),
            "min_eigenvalue" => f.flow.min_eigenvalue.to_string(),
            "max_condition" => f.flow.max_condition.to_string(),
            "gaussian_size" => f.gaussian_size.to_string(),
            "gaussian_sigma" => f.gaussian_sigma.to_string(),
            "gaussian_osf" => f.gaussian_osf.to_string(),
            "gaussian_osw" => f.gaussian_osw.to_string(),
            "noise_blocks" => f.noise_blocks.to_string(),
            "osw_preprocess" => f.osw_preprocess.to_string(),
            "resample" => match self.resample {
                ResampleMode::Auto => "auto",
                ResampleMode::On => "on",
                ResampleMode::Off => "off",
            }
            .into(),
            "resample_length" => self.resample_length.to_string(),
            "protocol" => protocol_name(self.protocol).into(),
            "feature_set" => match self.feature_set {
                FeatureSet::Osf => "osf",
                FeatureSet::Osw => "osw",
                FeatureSet::All => "all",
            }
            .into(),
            "svm_c" => self.svm.c.to_string(),
            "svm_tolerance" => self.svm.tolerance.to_string(),
            "svm_max_epochs" => self.svm.max_epochs.to_string(),
            "svm_seed" => self.svm.seed.to_string(),
            "standardize" => self.svm.standardize.to_string(),
            "jobs" => self.jobs.to_string(),
            "on_error" => match self.on_error {
                FailurePolicy::Skip => "skip",
                FailurePolicy::Abort => "abort",
            }
            .into(),
            "output_dir" => self.output_dir.to_string_lossy().into_owned(),
            "dump_strain" => self.dump_strain.to_string(),
            _ => return Err(Error::Config(format!("unknown key {key}"))),
        })
    }

    /// Sets one key from its text form. Ranges are checked by [`Self::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let f = &mut self.features;
        let l = &mut f.lbptop;
        match key {
            "p_xy" => l.p_xy = parse(key, value)?,
            "p_xt" => l.p_xt = parse(key, value)?,
            "p_yt" => l.p_yt = parse(key, value)?,
            "r_x" => l.r_x = parse(key, value)?,
            "r_y" => l.r_y = parse(key, value)?,
            "r_t" => l.r_t = parse(key, value)?,
            "n_blocks" => l.n_blocks = parse(key, value)?,
            "bins_per_plane" => l.bins_per_plane = parse(key, value)?,
            "rho_l" => f.rho_l = parse(key, value)?,
            "rho_u" => f.rho_u = parse(key, value)?,
            "edge_quantile" => f.edge_quantile = parse(key, value)?,
            "flow_window" => f.flow.window = parse(key, value)?,
            "min_eigenvalue" => f.flow.min_eigenvalue = parse(key, value)?,
            "max_condition" => f.flow.max_condition = parse(key, value)?,
            "gaussian_size" => f.gaussian_size = parse(key, value)?,
            "gaussian_sigma" => f.gaussian_sigma = parse(key, value)?,
            "gaussian_osf" => f.gaussian_osf = parse_bool(key, value)?,
            "gaussian_osw" => f.gaussian_osw = parse_bool(key, value)?,
            "noise_blocks" => f.noise_blocks = parse_bool(key, value)?,
            "osw_preprocess" => f.osw_preprocess = parse_bool(key, value)?,
            "resample" => {
                self.resample = match value.to_ascii_lowercase().as_str() {
                    "auto" => ResampleMode::Auto,
                    "on" | "true" => ResampleMode::On,
                    "off" | "false" => ResampleMode::Off,
                    _ => return Err(Error::Config(format!("invalid resample mode {value:?}"))),
                }
            }
            "resample_length" => self.resample_length = parse(key, value)?,
            "protocol" => self.protocol = parse_protocol(value)?,
            "feature_set" => {
                self.feature_set = match value.to_ascii_lowercase().as_str() {
                    "osf" => FeatureSet::Osf,
                    "osw" => FeatureSet::Osw,
                    "all" => FeatureSet::All,
                    _ => return Err(Error::Config(format!("invalid feature set {value:?}"))),
                }
            }
            "svm_c" => self.svm.c = parse(key, value)?,
            "svm_tolerance" => self.svm.tolerance = parse(key, value)?,
            "svm_max_epochs" => self.svm.max_epochs = parse(key, value)?,
            "svm_seed" => self.svm.seed = parse(key, value)?,
            "standardize" => self.svm.standardize = parse_bool(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            "on_error" => {
                self.on_error = match value.to_ascii_lowercase().as_str() {
                    "skip" => FailurePolicy::Skip,
                    "abort" => FailurePolicy::Abort,
                    _ => return Err(Error::Config(format!("invalid failure policy {value:?}"))),
                }
            }
            "output_dir" => {
                if value.is_empty() {
                    return Err(Error::Config("output_dir must not be empty".into()));
                }
                self.output_dir = PathBuf::from(value)
            }
            "dump_strain" => self.dump_strain = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.svm.validate()?;
        if self.resample_length < 2 {
            return Err(Error::Config("resample_length must be at least 2".into()));
        }
        Ok(())
    }

    /// Parses configuration text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(Error::Config(format!("line {}: duplicate key {key}", n + 1)));
            }
            seen.push(key);
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, help) in KEYS {
            let value = self.get(key).expect("listed keys are known");
            writeln!(out, "# {help}\n{key} = {value}").unwrap();
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(io_err(path))
    }

    /// Applies `(key, value)` overrides in order, then validates.
    pub fn apply_overrides<'a>(&mut self, overrides: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        for (k, v) in overrides {
            self.set(k, v)?;
        }
        self.validate()
    }

    /// Whether sequences are resampled under this configuration.
    pub fn resampling(&self) -> Option<usize> {
        let on = match self.resample {
            ResampleMode::On => true,
            ResampleMode::Off => false,
            ResampleMode::Auto => self.protocol == Protocol::Loso,
        };
        on.then_some(self.resample_length)
    }

    /// SHA-256 of the full configuration text.
    pub fn hash(&self) -> String {
        hex_digest(self.to_text().as_bytes())
    }

    /// SHA-256 over the settings that determine feature values.
    pub fn feature_hash(&self) -> String {
        let mut text = String::new();
        for key in FEATURE_KEYS {
            writeln!(text, "{key}={}", self.get(key).expect("feature keys are known")).unwrap();
        }
        writeln!(text, "resample_effective={:?}", self.resampling()).unwrap();
        hex_digest(text.as_bytes())
    }
}

pub fn protocol_name(p: Protocol) -> &'static str {
    match p {
        Protocol::Loso => "loso",
        Protocol::Lovo => "lovo",
    }
}

pub fn parse_protocol(value: &str) -> Result<Protocol> {
    match value.trim().to_ascii_lowercase().as_str() {
        "loso" => Ok(Protocol::Loso),
        "lovo" => Ok(Protocol::Lovo),
        _ => Err(Error::Config(format!("invalid protocol {value:?}"))),
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
