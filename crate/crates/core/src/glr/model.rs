//! Small trainable classifier producing the features behind a [`LinearHead`].
//!
//! Architecture: one tanh hidden layer, per-feature standardization of the
//! hidden activations (statistics taken over the training set and frozen),
//! then the linear head. The standardization stage centers the features, so
//! the closed-form α optimization in the parent module applies to it
//! directly, and the L2 penalty on the head keeps the weights of evidence
//! small — together they make the emitted masses cautious rather than
//! overconfident.
//!
//! Training is full-batch gradient descent on (optionally soft) binary
//! cross-entropy, with step-size halving whenever the loss rises and early
//! stopping after a configurable patience without improvement.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{
    mass_from_weights, sigmoid, weights_of_evidence, FeatureVector, LinearHead,
};
use crate::belief::MassFunction;
use crate::{Error, Result};

/// Stabilizer inside the standardization square root.
pub const NORM_EPSILON: f64 = 1e-5;

/// Trained classifier: tanh hidden layer, frozen feature standardization,
/// linear head.
#[derive(Clone, Debug, PartialEq)]
pub struct GlrClassifier {
    input_dim: usize,
    hidden_dim: usize,
    /// Hidden weights, row-major `hidden_dim × input_dim`.
    hidden_w: Vec<f64>,
    hidden_b: Vec<f64>,
    /// Frozen per-feature mean of the tanh activations over the training set.
    norm_mean: Vec<f64>,
    /// Frozen per-feature (population) variance of the tanh activations.
    norm_var: Vec<f64>,
    head: LinearHead,
}

impl GlrClassifier {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn head(&self) -> &LinearHead {
        &self.head
    }

    /// Replaces the α split of the head. The α must still sum to β_0, so
    /// predictions are unchanged; only the evidence decomposition moves.
    pub fn set_alphas(&mut self, alphas: Vec<f64>) -> Result<()> {
        self.head = LinearHead::new(self.head.betas.clone(), self.head.beta0, alphas)?;
        Ok(())
    }

    /// Standardized penultimate features φ(x).
    pub fn features(&self, x: &[f64]) -> Result<FeatureVector> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "input ({}) vs classifier ({})",
                x.len(),
                self.input_dim
            )));
        }
        let mut phi = vec![0.0; self.hidden_dim];
        for j in 0..self.hidden_dim {
            let row = &self.hidden_w[j * self.input_dim..(j + 1) * self.input_dim];
            let pre: f64 =
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.hidden_b[j];
            let u = pre.tanh();
            phi[j] = (u - self.norm_mean[j]) / (self.norm_var[j] + NORM_EPSILON).sqrt();
        }
        Ok(phi)
    }

    /// Predicted road probability, always strictly inside (0,1).
    pub fn predict_prob(&self, x: &[f64]) -> Result<f64> {
        self.head.predict_prob(&self.features(x)?)
    }

    /// Hard decision at probability 0.5.
    pub fn predict_class(&self, x: &[f64]) -> Result<bool> {
        Ok(self.predict_prob(x)? > 0.5)
    }

    /// Evidential mass for one input: the head's weights of evidence fused
    /// as simple mass functions.
    pub fn mass(&self, x: &[f64]) -> Result<MassFunction> {
        let phi = self.features(x)?;
        let w = weights_of_evidence(&self.head, &phi)?;
        mass_from_weights(&w)
    }

    /// Fraction of correct hard decisions against targets in [0,1]
    /// (thresholded at 0.5).
    pub fn accuracy(&self, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch(format!(
                "inputs ({}) vs targets ({})",
                inputs.len(),
                targets.len()
            )));
        }
        let mut hits = 0usize;
        for (x, &y) in inputs.iter().zip(targets) {
            if self.predict_class(x)? == (y > 0.5) {
                hits += 1;
            }
        }
        Ok(hits as f64 / inputs.len() as f64)
    }

    /// Serializes all parameters to a plain-text file: a version line, the
    /// dimensions, then one labeled block per parameter group with
    /// round-trippable decimal floats.
    pub fn write_params(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "glr-classifier-params v1");
        let _ = writeln!(s, "input_dim {}", self.input_dim);
        let _ = writeln!(s, "hidden_dim {}", self.hidden_dim);
        let _ = writeln!(s, "epsilon {}", NORM_EPSILON);
        let block = |s: &mut String, name: &str, vals: &[f64]| {
            let _ = write!(s, "{name}");
            for v in vals {
                let _ = write!(s, " {v}");
            }
            let _ = writeln!(s);
        };
        block(&mut s, "hidden_weights", &self.hidden_w);
        block(&mut s, "hidden_bias", &self.hidden_b);
        block(&mut s, "norm_mean", &self.norm_mean);
        block(&mut s, "norm_var", &self.norm_var);
        block(&mut s, "betas", &self.head.betas);
        block(&mut s, "alphas", &self.head.alphas);
        block(&mut s, "beta0", &[self.head.beta0]);
        std::fs::write(path, s)?;
        Ok(())
    }

    /// Reads a parameter file produced by [`GlrClassifier::write_params`].
    pub fn read_params(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header.trim() != "glr-classifier-params v1" {
            return Err(Error::Parse(format!("unrecognized parameter header: {header:?}")));
        }
        let mut input_dim = None;
        let mut hidden_dim = None;
        let mut blocks: std::collections::BTreeMap<String, Vec<f64>> =
            std::collections::BTreeMap::new();
        for line in lines {
            let mut toks = line.split_whitespace();
            let Some(key) = toks.next() else { continue };
            match key {
                "input_dim" => input_dim = Some(parse_usize(toks.next())?),
                "hidden_dim" => hidden_dim = Some(parse_usize(toks.next())?),
                "epsilon" => {
                    // Stored for the file to be self-describing; the value is
                    // a crate constant.
                    let _ = parse_f64(toks.next())?;
                }
                _ => {
                    let vals: Result<Vec<f64>> =
                        toks.map(|t| parse_f64(Some(t))).collect();
                    blocks.insert(key.to_string(), vals?);
                }
            }
        }
        let input_dim =
            input_dim.ok_or_else(|| Error::Parse("missing input_dim".into()))?;
        let hidden_dim =
            hidden_dim.ok_or_else(|| Error::Parse("missing hidden_dim".into()))?;
        let mut take = |name: &str, expect: usize| -> Result<Vec<f64>> {
            let vals = blocks
                .remove(name)
                .ok_or_else(|| Error::Parse(format!("missing block {name}")))?;
            if vals.len() != expect {
                return Err(Error::Parse(format!(
                    "block {name} has {} values, expected {expect}",
                    vals.len()
                )));
            }
            Ok(vals)
        };
        let hidden_w = take("hidden_weights", input_dim * hidden_dim)?;
        let hidden_b = take("hidden_bias", hidden_dim)?;
        let norm_mean = take("norm_mean", hidden_dim)?;
        let norm_var = take("norm_var", hidden_dim)?;
        let betas = take("betas", hidden_dim)?;
        let alphas = take("alphas", hidden_dim)?;
        let beta0 = take("beta0", 1)?[0];
        Ok(Self {
            input_dim,
            hidden_dim,
            hidden_w,
            hidden_b,
            norm_mean,
            norm_var,
            head: LinearHead::new(betas, beta0, alphas)?,
        })
    }
}

fn parse_usize(tok: Option<&str>) -> Result<usize> {
    tok.ok_or_else(|| Error::Parse("missing integer".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad integer: {e}")))
}

fn parse_f64(tok: Option<&str>) -> Result<f64> {
    tok.ok_or_else(|| Error::Parse("missing number".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad number: {e}")))
}

/// Hyperparameters for [`train_glr`].
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Coefficient of the L2 penalty on the head (betas and alphas).
    pub l2: f64,
    /// Epochs without a new best loss before training stops.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 16,
            epochs: 600,
            learning_rate: 0.3,
            l2: 1e-4,
            patience: 40,
            seed: 7,
        }
    }
}

/// A trained classifier together with its per-epoch loss trajectory.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub classifier: GlrClassifier,
    /// Loss (mean cross-entropy + L2 penalty) per epoch, evaluated before
    /// that epoch's update.
    pub loss_history: Vec<f64>,
}

/// Trains the stand-in classifier with full-batch gradient descent.
///
/// Targets may be soft (any value in [0,1]); class presence for the
/// degeneracy check is judged at 0.5. The hidden activations are
/// standardized with the statistics of the current batch during training and
/// with the final dataset statistics (frozen) afterwards.
///
/// Inputs are standardized per dimension over the training set before the
/// hidden layer sees them, so features on physical scales (meters next to
/// unit intensities) train on an even footing instead of saturating the
/// tanh. The affine transform is folded back into the hidden weights and
/// biases at the end, so the returned classifier consumes raw inputs.
pub fn train_glr(inputs: &[Vec<f64>], targets: &[f64], cfg: &TrainConfig) -> Result<TrainOutcome> {
    let n = inputs.len();
    if n == 0 || n != targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "inputs ({n}) vs targets ({})",
            targets.len()
        )));
    }
    let d_in = inputs[0].len();
    if d_in == 0 {
        return Err(Error::EmptyInput("zero-dimensional inputs".into()));
    }
    for x in inputs {
        if x.len() != d_in {
            return Err(Error::DimensionMismatch(format!(
                "ragged inputs: {} vs {}",
                x.len(),
                d_in
            )));
        }
    }
    for &y in targets {
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::InvalidArgument(format!("target {y} outside [0,1]")));
        }
    }
    let pos = targets.iter().filter(|&&y| y > 0.5).count();
    if pos < 2 || n - pos < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 samples per class, got {pos} positive / {} negative",
            n - pos
        )));
    }
    if cfg.hidden_dim == 0 || cfg.epochs == 0 {
        return Err(Error::InvalidArgument(
            "hidden_dim and epochs must be positive".into(),
        ));
    }

    let h = cfg.hidden_dim;

    // Per-dimension input statistics; the deviation is floored so constant
    // features standardize to exactly zero instead of dividing by zero.
    let mut in_mean = vec![0.0; d_in];
    for x in inputs {
        for (m, v) in in_mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    for m in &mut in_mean {
        *m /= n as f64;
    }
    let mut in_sd = vec![0.0; d_in];
    for x in inputs {
        for (s, (v, m)) in in_sd.iter_mut().zip(x.iter().zip(&in_mean)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut in_sd {
        *s = (*s / n as f64).sqrt().max(NORM_EPSILON);
    }
    let scaled: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| {
            x.iter()
                .zip(in_mean.iter().zip(&in_sd))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let limit = (6.0 / (d_in + h) as f64).sqrt();
    let mut w: Vec<f64> = (0..h * d_in).map(|_| rng.gen_range(-limit..limit)).collect();
    let mut b = vec![0.0; h];
    let mut betas: Vec<f64> = (0..h).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let mut alphas = vec![0.0; h];

    // Per-epoch work buffers.
    let mut u = vec![0.0; n * h]; // tanh activations
    let mut phi = vec![0.0; n * h]; // standardized activations
    let mut mean = vec![0.0; h];
    let mut var = vec![0.0; h];
    let mut glogit = vec![0.0; n];

    let mut lr = cfg.learning_rate;
    let mut prev_loss = f64::INFINITY;
    let mut best_loss = f64::INFINITY;
    let mut stall = 0usize;
    let mut history = Vec::with_capacity(cfg.epochs);

    let forward = |data: &[Vec<f64>],
                   w: &[f64],
                   b: &[f64],
                   u: &mut [f64],
                   mean: &mut [f64],
                   var: &mut [f64],
                   phi: &mut [f64]| {
        for (i, x) in data.iter().enumerate() {
            for j in 0..h {
                let row = &w[j * d_in..(j + 1) * d_in];
                let pre: f64 = row.iter().zip(x).map(|(wv, xv)| wv * xv).sum::<f64>() + b[j];
                u[i * h + j] = pre.tanh();
            }
        }
        for j in 0..h {
            let mut m = 0.0;
            for i in 0..n {
                m += u[i * h + j];
            }
            m /= n as f64;
            let mut v = 0.0;
            for i in 0..n {
                let dv = u[i * h + j] - m;
                v += dv * dv;
            }
            v /= n as f64;
            mean[j] = m;
            var[j] = v;
            let s = (v + NORM_EPSILON).sqrt();
            for i in 0..n {
                phi[i * h + j] = (u[i * h + j] - m) / s;
            }
        }
    };

    for _epoch in 0..cfg.epochs {
        forward(&scaled, &w, &b, &mut u, &mut mean, &mut var, &mut phi);

        let bias: f64 = alphas.iter().sum();
        let mut loss = 0.0;
        for i in 0..n {
            let logit: f64 =
                (0..h).map(|j| betas[j] * phi[i * h + j]).sum::<f64>() + bias;
            let p = sigmoid(logit);
            let pc = p.clamp(1e-12, 1.0 - 1e-12);
            loss -= targets[i] * pc.ln() + (1.0 - targets[i]) * (1.0 - pc).ln();
            glogit[i] = (p - targets[i]) / n as f64;
        }
        loss /= n as f64;
        loss += cfg.l2
            * (betas.iter().map(|v| v * v).sum::<f64>()
                + alphas.iter().map(|v| v * v).sum::<f64>());
        history.push(loss);

        if loss > prev_loss {
            lr *= 0.5;
        }
        prev_loss = loss;
        if loss < best_loss - 1e-12 {
            best_loss = loss;
            stall = 0;
        } else {
            stall += 1;
            if stall >= cfg.patience {
                break;
            }
        }

        // Backward pass. Standardization backprop uses the full batch
        // statistics (the mean/variance depend on every sample).
        let mut gbeta = vec![0.0; h];
        let mut galpha = vec![0.0; h];
        let gsum: f64 = glogit.iter().sum();
        for j in 0..h {
            let mut gb = 0.0;
            for i in 0..n {
                gb += glogit[i] * phi[i * h + j];
            }
            gbeta[j] = gb + 2.0 * cfg.l2 * betas[j];
            galpha[j] = gsum + 2.0 * cfg.l2 * alphas[j];
        }
        let mut gw = vec![0.0; h * d_in];
        let mut gbias = vec![0.0; h];
        for j in 0..h {
            // dL/dφ_ij = glogit_i · β_j; fold in the batch-statistics terms:
            // du = (dφ − mean(dφ) − φ·mean(dφ⊙φ)) / s
            let mut gphi_mean = 0.0;
            let mut gphi_phi_mean = 0.0;
            for i in 0..n {
                let gphi = glogit[i] * betas[j];
                gphi_mean += gphi;
                gphi_phi_mean += gphi * phi[i * h + j];
            }
            gphi_mean /= n as f64;
            gphi_phi_mean /= n as f64;
            let s = (var[j] + NORM_EPSILON).sqrt();
            for i in 0..n {
                let gphi = glogit[i] * betas[j];
                let du = (gphi - gphi_mean - phi[i * h + j] * gphi_phi_mean) / s;
                let uv = u[i * h + j];
                let dpre = du * (1.0 - uv * uv);
                let row = &mut gw[j * d_in..(j + 1) * d_in];
                for (gr, xv) in row.iter_mut().zip(&scaled[i]) {
                    *gr += dpre * xv;
                }
                gbias[j] += dpre;
            }
        }

        for (wv, g) in w.iter_mut().zip(&gw) {
            *wv -= lr * g;
        }
        for (bv, g) in b.iter_mut().zip(&gbias) {
            *bv -= lr * g;
        }
        for (bv, g) in betas.iter_mut().zip(&gbeta) {
            *bv -= lr * g;
        }
        for (av, g) in alphas.iter_mut().zip(&galpha) {
            *av -= lr * g;
        }
    }

    // Fold the input standardization into the hidden layer — w·(x−μ)/σ + b
    // equals (w/σ)·x + (b − Σ_k (w_k/σ_k)·μ_k) — so inference needs no
    // separate preprocessing stage.
    for j in 0..h {
        let row = &mut w[j * d_in..(j + 1) * d_in];
        let mut shift = 0.0;
        for (wv, (m, s)) in row.iter_mut().zip(in_mean.iter().zip(&in_sd)) {
            *wv /= s;
            shift += *wv * m;
        }
        b[j] -= shift;
    }

    // Freeze the standardization statistics of the final weights over the
    // whole training set, through the same raw-input path inference takes.
    forward(inputs, &w, &b, &mut u, &mut mean, &mut var, &mut phi);

    let head = LinearHead::from_alphas(betas, alphas)?;
    Ok(TrainOutcome {
        classifier: GlrClassifier {
            input_dim: d_in,
            hidden_dim: h,
            hidden_w: w,
            hidden_b: b,
            norm_mean: mean,
            norm_var: var,
            head,
        },
        loss_history: history,
    })
}
