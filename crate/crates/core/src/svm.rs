//! Linear maximum-margin classifier.
//!
//! Binary problems are solved with dual coordinate descent on the L1-loss
//! (hinge) SVM, with the bias folded in as a constant feature. Multiclass
//! problems use one-vs-rest; equal scores resolve to the lowest class index.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SvmParams {
    /// Misclassification penalty.
    pub c: f64,
    /// Stop once the projected-gradient spread falls below this.
    pub tolerance: f64,
    pub max_epochs: usize,
    /// Seed of the per-epoch visiting order.
    pub seed: u64,
    /// Z-score features with training-fold statistics before fitting.
    pub standardize: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 10_000.0,
            tolerance: 0.01,
            max_epochs: 1000,
            seed: 0,
            standardize: false,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParameter("svm c must be positive"));
        }
        if !(self.tolerance > 0.0) || self.max_epochs == 0 {
            return Err(Error::InvalidParameter("svm tolerance and epochs must be positive"));
        }
        Ok(())
    }
}

/// `score(x) = w·x + b`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits a binary hinge-loss SVM. `targets` must be ±1.
pub fn train_binary(samples: &[Vec<f64>], targets: &[f64], params: &SvmParams) -> LinearModel {
    let n = samples.len();
    let dim = samples.first().map_or(0, Vec::len);
    let mut w = vec![0.0; dim];
    let mut bias = 0.0;
    let mut alpha = vec![0.0; n];
    // Diagonal of the kernel matrix, bias feature included.
    let q_diag: Vec<f64> = samples.iter().map(|x| dot(x, x) + 1.0).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let c = params.c;

    for _ in 0..params.max_epochs {
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let yi = targets[i];
            let g = yi * (dot(&w, &samples[i]) + bias) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * yi;
                if step != 0.0 {
                    for (wj, xj) in w.iter_mut().zip(&samples[i]) {
                        *wj += step * xj;
                    }
                    bias += step;
                }
            }
        }
        if pg_max - pg_min <= params.tolerance {
            break;
        }
    }
    LinearModel { weights: w, bias }
}

/// Per-feature affine map fitted on training data.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(samples: &[Vec<f64>]) -> Self {
        let n = samples.len() as f64;
        let dim = samples.first().map_or(0, Vec::len);
        let mut mean = vec![0.0; dim];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; dim];
        for s in samples {
            for ((acc, v), m) in var.iter_mut().zip(s).zip(&mean) {
                *acc += (v - m) * (v - m) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = libm::sqrt(v);
                if sd > 1e-12 {
                    1.0 / sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) * s).collect()
    }
}

/// One-vs-rest ensemble over the classes seen in training, in sorted order.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OneVsRest {
    pub classes: Vec<String>,
    pub models: Vec<LinearModel>,
    pub standardizer: Option<Standardizer>,
}

impl OneVsRest {
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let owned;
        let x = match &self.standardizer {
            Some(s) => {
                owned = s.apply(x);
                &owned[..]
            }
            None => x,
        };
        self.models.iter().map(|m| m.score(x)).collect()
    }

    /// Index into `classes` of the highest score; the first wins ties.
    pub fn predict_index(&self, x: &[f64]) -> usize {
        let scores = self.scores(x);
        let mut best = 0;
        for (k, s) in scores.iter().enumerate().skip(1) {
            if *s > scores[best] {
                best = k;
            }
        }
        best
    }

    pub fn predict(&self, x: &[f64]) -> &str {
        &self.classes[self.predict_index(x)]
    }
}

/// Checks that every vector is finite and all share one length.
pub(crate) fn check_features(samples: &[&FeatureVector]) -> Result<usize> {
    let dim = samples.first().ok_or(Error::Empty("training samples"))?.len();
    for s in samples {
        if s.len() != dim {
            return Err(Error::InvalidFeatures("inconsistent feature lengths"));
        }
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFeatures("non-finite feature value"));
        }
    }
    Ok(dim)
}

pub fn train_linear_svm(train: &[&FeatureVector], params: &SvmParams) -> Result<OneVsRest> {
    params.validate()?;
    check_features(train)?;
    let classes: Vec<String> = train.iter().map(|s| s.label.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let standardizer = params
        .standardize
        .then(|| Standardizer::fit(&train.iter().map(|s| s.values.clone()).collect::<Vec<_>>()));
    let samples: Vec<Vec<f64>> = train
        .iter()
        .map(|s| match &standardizer {
            Some(st) => st.apply(&s.values),
            None => s.values.clone(),
        })
        .collect();
    let models = classes
        .iter()
        .map(|class| {
            let targets: Vec<f64> = train.iter().map(|s| if &s.label == class { 1.0 } else { -1.0 }).collect();
            train_binary(&samples, &targets, params)
        })
        .collect();
    Ok(OneVsRest {
        classes,
        models,
        standardizer,
    })
}
