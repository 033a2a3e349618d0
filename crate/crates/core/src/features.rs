//! Feature vectors and the settings shared by both feature paths.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::FlowParams;
use crate::image::{gaussian_kernel, FrameSequence};
use crate::lbptop::LbpTopParams;
use crate::osf::{self, OSF_LEN};
use crate::osw;

/// Flat descriptor of one video.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureVector {
    pub video_id: String,
    pub subject_id: String,
    pub label: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(video_id: impl Into<String>, subject_id: impl Into<String>, label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            video_id: video_id.into(),
            subject_id: subject_id.into(),
            label: label.into(),
            values,
        }
    }

    pub fn for_sequence(seq: &FrameSequence, values: Vec<f64>) -> Self {
        Self::new(seq.video_id(), seq.subject_id(), seq.label(), values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// OSW values followed by OSF values.
pub fn concat_features(osf: &FeatureVector, osw: &FeatureVector) -> Result<FeatureVector> {
    if osf.video_id != osw.video_id {
        return Err(Error::IdMismatch);
    }
    let mut values = Vec::with_capacity(osw.len() + osf.len());
    values.extend_from_slice(&osw.values);
    values.extend_from_slice(&osf.values);
    Ok(FeatureVector { values, ..osw.clone() })
}

/// Everything that determines the feature values of a video.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureConfig {
    pub flow: FlowParams,
    pub lbptop: LbpTopParams,
    pub rho_l: f64,
    pub rho_u: f64,
    pub edge_quantile: f64,
    pub gaussian_size: usize,
    pub gaussian_sigma: f64,
    /// Smooth frames before computing OSF strain.
    pub gaussian_osf: bool,
    /// Smooth frames before LBP-TOP and the OSW strain weights.
    pub gaussian_osw: bool,
    /// Zero the two bottom-corner blocks of the LBP-TOP histograms.
    pub noise_blocks: bool,
    /// Apply edge suppression and band clipping to the strain maps behind the OSW weights.
    pub osw_preprocess: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            flow: FlowParams::default(),
            lbptop: LbpTopParams::default(),
            rho_l: 0.05,
            rho_u: 0.05,
            edge_quantile: 0.9,
            gaussian_size: 5,
            gaussian_sigma: 0.5,
            gaussian_osf: true,
            gaussian_osw: true,
            noise_blocks: false,
            osw_preprocess: false,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        self.flow.validate()?;
        self.lbptop.validate()?;
        if !(0.0..=1.0).contains(&self.rho_l) || !(0.0..=1.0).contains(&self.rho_u) {
            return Err(Error::InvalidParameter("rho_l and rho_u must be in [0, 1]"));
        }
        if !(self.edge_quantile > 0.0 && self.edge_quantile < 1.0) {
            return Err(Error::InvalidParameter("edge_quantile must be in (0, 1)"));
        }
        gaussian_kernel(self.gaussian_size, self.gaussian_sigma)?;
        if self.noise_blocks && self.lbptop.n_blocks < 2 {
            return Err(Error::InvalidParameter("noise blocks need n_blocks >= 2"));
        }
        Ok(())
    }

    pub fn osw_len(&self) -> usize {
        self.lbptop.descriptor_len()
    }

    pub fn combined_len(&self) -> usize {
        self.osw_len() + OSF_LEN
    }
}

/// OSF, OSW and their concatenation for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoFeatures {
    pub osf: FeatureVector,
    pub osw: FeatureVector,
    pub combined: FeatureVector,
}

pub fn extract_all(seq: &FrameSequence, cfg: &FeatureConfig) -> Result<VideoFeatures> {
    let osf = osf::osf_vector(seq, cfg)?;
    let osw = osw::osw_vector(seq, cfg)?;
    let combined = concat_features(&osf, &osw)?;
    Ok(VideoFeatures { osf, osw, combined })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn concat_lengths_and_order() {
        let osf = FeatureVector::new("v1", "s", "a", vec![0.0; 2500]);
        let osw = FeatureVector::new("v1", "s", "a", vec![0.0; 1125]);
        let c = concat_features(&osf, &osw).unwrap();
        assert_eq!(c.len(), 3625);
        assert!(c.values.iter().all(|v| *v == 0.0));

        let osf = FeatureVector::new("v1", "s", "a", vec![2.0; 3]);
        let osw = FeatureVector::new("v1", "s", "a", vec![1.0; 2]);
        assert_eq!(concat_features(&osf, &osw).unwrap().values, vec![1.0, 1.0, 2.0, 2.0, 2.0]);

        let other = FeatureVector::new("v2", "s", "a", vec![]);
        assert_eq!(concat_features(&osf, &other), Err(Error::IdMismatch));
    }

    #[test]
    fn default_lengths() {
        let cfg = FeatureConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.combined_len(), 3625);
        let mut big = cfg;
        big.lbptop.n_blocks = 8;
        big.lbptop.bins_per_plane = 16;
        assert_eq!(big.osw_len(), 3072);
        assert_eq!(big.combined_len(), 5572);
    }
}
