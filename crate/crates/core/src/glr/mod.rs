//! Evidence decomposition of a generalized logistic regression classifier.
//!
//! Any classifier ending in a linear layer plus sigmoid predicts
//! `p = S(Σ_j β_j·φ_j(x) + β_0)`. Splitting the bias as `β_0 = Σ_j α_j` turns
//! the logit into a sum of per-feature summands `w_j = β_j·φ_j + α_j`, each of
//! which is the weight of evidence of a simple mass function for road (w > 0)
//! or not-road (w < 0). Fusing those simple masses with Dempster's rule gives
//! a closed-form mass function whose plausibility transform reproduces the
//! classifier's probability exactly — the classifier is reinterpreted as
//! evidence fusion without retraining.
//!
//! The α split is not unique: any vector summing to β_0 yields the same
//! predictions. [`optimize_alpha_closed_form`] picks the split that makes the evidence
//! maximally uncommitted (largest m(Ω)) over a dataset, via the closed form
//! obtained from minimizing the summed squared weights.
//!
//! The trainable stand-in classifier producing the features lives in
//! [`model`].

pub mod model;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::belief::MassFunction;
use crate::{Error, Result};

pub use model::{train_glr, GlrClassifier, TrainConfig, TrainOutcome};

/// Penultimate feature vector φ(x).
pub type FeatureVector = Vec<f64>;

/// Final linear layer of a GLR classifier, with the bias already split into
/// per-feature offsets α (Σα_j = β_0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub betas: Vec<f64>,
    pub beta0: f64,
    pub alphas: Vec<f64>,
}

impl LinearHead {
    /// Tolerance on |Σα_j − β_0|.
    pub const ALPHA_SUM_TOL: f64 = 1e-9;

    pub fn new(betas: Vec<f64>, beta0: f64, alphas: Vec<f64>) -> Result<Self> {
        if betas.len() != alphas.len() {
            return Err(Error::DimensionMismatch(format!(
                "betas ({}) vs alphas ({})",
                betas.len(),
                alphas.len()
            )));
        }
        let sum: f64 = alphas.iter().sum();
        if (sum - beta0).abs() > Self::ALPHA_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "alphas sum to {sum}, expected beta0 = {beta0}"
            )));
        }
        Ok(Self { betas, beta0, alphas })
    }

    /// Head whose β_0 is defined as the sum of the given α (always
    /// consistent).
    pub fn from_alphas(betas: Vec<f64>, alphas: Vec<f64>) -> Result<Self> {
        if betas.len() != alphas.len() {
            return Err(Error::DimensionMismatch(format!(
                "betas ({}) vs alphas ({})",
                betas.len(),
                alphas.len()
            )));
        }
        let beta0 = alphas.iter().sum();
        Ok(Self { betas, beta0, alphas })
    }

    pub fn dim(&self) -> usize {
        self.betas.len()
    }

    /// Logit of the predicted probability: Σ β_j φ_j + β_0.
    pub fn logit(&self, phi: &[f64]) -> Result<f64> {
        if phi.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "features ({}) vs head ({})",
                phi.len(),
                self.dim()
            )));
        }
        Ok(self.betas.iter().zip(phi).map(|(b, p)| b * p).sum::<f64>() + self.beta0)
    }

    /// Predicted road probability.
    pub fn predict_prob(&self, phi: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.logit(phi)?))
    }
}

/// Logistic sigmoid, overflow-safe on both tails.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-feature weights of evidence `w_j = β_j·φ_j + α_j`. Their sum is the
/// logit of the predicted probability.
pub fn weights_of_evidence(head: &LinearHead, phi: &[f64]) -> Result<Vec<f64>> {
    if phi.len() != head.dim() {
        return Err(Error::DimensionMismatch(format!(
            "features ({}) vs head ({})",
            phi.len(),
            head.dim()
        )));
    }
    Ok(head
        .betas
        .iter()
        .zip(&head.alphas)
        .zip(phi)
        .map(|((b, a), p)| b * p + a)
        .collect())
}

/// Dempster fusion of the simple masses encoded by signed weights of
/// evidence: positive weights vote road, negative vote not-road. With
/// w⁺ = Σ max(0, w_j) and w⁻ = Σ max(0, −w_j):
///
/// ```text
/// m(R)  = (1 − e^{−w⁺})·e^{−w⁻} / (1−K)      K = (1 − e^{−w⁺})(1 − e^{−w⁻})
/// m(¬R) = (1 − e^{−w⁻})·e^{−w⁺} / (1−K)
/// m(Ω)  = e^{−(w⁺+w⁻)} / (1−K)
/// ```
///
/// Evaluated with the common factor e^{−min(w⁺,w⁻)} cancelled so large
/// weights cannot underflow the normalizer (K < 1 holds for all finite w,
/// but 1−K is not representable near certainty).
pub fn mass_from_weights(w: &[f64]) -> Result<MassFunction> {
    let mut pos = 0.0;
    let mut neg = 0.0;
    for &wi in w {
        if !wi.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite weight {wi}")));
        }
        if wi > 0.0 {
            pos += wi;
        } else {
            neg -= wi;
        }
    }
    // Numerators of (m(R), m(¬R), m(Ω)) scaled by e^{min(pos,neg)}; their sum
    // is the scaled 1−K, so normalization is exact and never 0/0.
    // 1 − e^{−x} as −expm1(−x) keeps precision for small weights.
    let one_m_epos = -(-pos).exp_m1();
    let one_m_eneg = -(-neg).exp_m1();
    let (road, not_road, omega) = if pos <= neg {
        (one_m_epos * (pos - neg).exp(), one_m_eneg, (-neg).exp())
    } else {
        (one_m_epos, one_m_eneg * (neg - pos).exp(), (-pos).exp())
    };
    let total = road + not_road + omega;
    Ok(MassFunction { road: road / total, not_road: not_road / total, omega: omega / total })
}

/// Closed-form α minimizing the summed squared weights of evidence over a
/// dataset with per-feature means `feature_means`, subject to Σα_j = β_0:
///
/// `α_j = β_0/d + (Σ_q β_q·φ̄_q)/d − β_j·φ̄_j`
///
/// Squashing the weights toward zero makes each per-point mass as
/// uncommitted (large m(Ω)) as the prediction-preserving constraint allows.
pub fn optimize_alpha_closed_form(head: &LinearHead, feature_means: &[f64]) -> Result<Vec<f64>> {
    if feature_means.len() != head.dim() {
        return Err(Error::DimensionMismatch(format!(
            "feature means ({}) vs head ({})",
            feature_means.len(),
            head.dim()
        )));
    }
    let d = head.dim() as f64;
    let mean_activation: f64 =
        head.betas.iter().zip(feature_means).map(|(b, m)| b * m).sum();
    Ok(head
        .betas
        .iter()
        .zip(feature_means)
        .map(|(b, m)| head.beta0 / d + mean_activation / d - b * m)
        .collect())
}

/// Recomputes α from the per-dimension means of `features` and returns the
/// updated head. Predictions are unchanged for every input (the α sum is
/// still β_0).
pub fn optimize_alpha_on_dataset(
    head: &LinearHead,
    features: &[FeatureVector],
) -> Result<LinearHead> {
    if features.is_empty() {
        return Err(Error::EmptyInput("alpha optimization needs a non-empty dataset".into()));
    }
    let d = head.dim();
    let mut means = vec![0.0; d];
    for phi in features {
        if phi.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "feature vector ({}) vs head ({})",
                phi.len(),
                d
            )));
        }
        for (m, p) in means.iter_mut().zip(phi) {
            *m += p;
        }
    }
    for m in &mut means {
        *m /= features.len() as f64;
    }
    let alphas = optimize_alpha_closed_form(head, &means)?;
    LinearHead::new(head.betas.clone(), head.beta0, alphas)
}

/// Dempster fusion of per-classifier masses for one point. Equivalent to a
/// Bayesian independent-opinion-poll fusion of the classifiers'
/// probabilities: the plausibility of the result is the sigmoid of the summed
/// logits.
pub fn fuse_classifier_masses(masses: &[MassFunction]) -> Result<MassFunction> {
    let mut out = MassFunction::vacuous();
    for m in masses {
        out = out.combine(m)?;
    }
    Ok(out)
}

/// Writes per-point masses as CSV with columns `m_R,m_notR,m_omega`.
pub fn write_masses_csv(path: &Path, masses: &[MassFunction]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for m in masses {
        w.serialize(MassRow { m_r: m.road, m_not_r: m.not_road, m_omega: m.omega })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads per-point masses from the CSV format of [`write_masses_csv`],
/// validating every row.
pub fn read_masses_csv(path: &Path) -> Result<Vec<MassFunction>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: MassRow = row?;
        out.push(MassFunction::new(row.m_r, row.m_not_r, row.m_omega)?);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct MassRow {
    #[serde(rename = "m_R")]
    m_r: f64,
    #[serde(rename = "m_notR")]
    m_not_r: f64,
    #[serde(rename = "m_omega")]
    m_omega: f64,
}
