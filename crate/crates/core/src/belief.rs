//! Belief-function algebra on the binary frame {road, ¬road}.
//!
//! A [`MassFunction`] assigns belief to the two singletons and to the whole
//! frame Ω ("don't know"); the empty set always carries zero mass and is not
//! stored. The module provides Dempster's rule of combination, the commonality
//! transform that turns repeated combination into a sum of logarithms (the
//! trick that makes per-cell batch fusion cheap), the plausibility transform
//! back to a probability, and a decomposable entropy.
//!
//! The same algebra is reused for the structurally identical binary frames
//! {obstacle, ¬obstacle} and {displaced, ¬displaced} in the grid mapper; only
//! the interpretation of the `road` slot changes.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on |m(R)+m(¬R)+m(Ω) − 1| when validating a mass function.
pub const MASS_SUM_TOL: f64 = 1e-9;

/// Floor applied to every component before logarithmic fusion, so that all
/// commonalities are strictly positive and their logs finite. Small enough to
/// never change a fused result materially.
pub const MASS_FLOOR: f64 = 1e-12;

/// One of the two singleton hypotheses of the binary frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    Road,
    NotRoad,
}

/// Mass function on the binary frame: belief committed to {road}, {¬road}
/// and Ω = {road, ¬road}. Components are nonnegative and sum to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassFunction {
    pub road: f64,
    pub not_road: f64,
    pub omega: f64,
}

impl MassFunction {
    /// Validating constructor: components must be finite, nonnegative and sum
    /// to one within [`MASS_SUM_TOL`].
    pub fn new(road: f64, not_road: f64, omega: f64) -> Result<Self> {
        let m = Self { road, not_road, omega };
        if !m.is_valid() {
            return Err(Error::InvalidMass(format!(
                "components ({road}, {not_road}, {omega}) must be nonnegative and sum to 1"
            )));
        }
        Ok(m)
    }

    /// Total ignorance: all mass on Ω. Neutral element of [`Self::combine`].
    pub const fn vacuous() -> Self {
        Self { road: 0.0, not_road: 0.0, omega: 1.0 }
    }

    /// Full certainty in one hypothesis.
    pub const fn certain(focal: Hypothesis) -> Self {
        match focal {
            Hypothesis::Road => Self { road: 1.0, not_road: 0.0, omega: 0.0 },
            Hypothesis::NotRoad => Self { road: 0.0, not_road: 1.0, omega: 0.0 },
        }
    }

    /// Simple mass function encoded by a weight of evidence `w ≥ 0` (natural
    /// log units): puts `1 − exp(−w)` on the focal hypothesis and the rest
    /// on Ω.
    pub fn simple(focal: Hypothesis, weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "weight of evidence must be finite and ≥ 0, got {weight}"
            )));
        }
        let s = 1.0 - (-weight).exp();
        Ok(match focal {
            Hypothesis::Road => Self { road: s, not_road: 0.0, omega: 1.0 - s },
            Hypothesis::NotRoad => Self { road: 0.0, not_road: s, omega: 1.0 - s },
        })
    }

    /// True when components are finite, nonnegative and sum to one within
    /// [`MASS_SUM_TOL`].
    pub fn is_valid(&self) -> bool {
        let finite = self.road.is_finite() && self.not_road.is_finite() && self.omega.is_finite();
        finite
            && self.road >= 0.0
            && self.not_road >= 0.0
            && self.omega >= 0.0
            && ((self.road + self.not_road + self.omega) - 1.0).abs() <= MASS_SUM_TOL
    }

    /// Dempster's rule of combination. The conflict
    /// `K = m₁(R)·m₂(¬R) + m₁(¬R)·m₂(R)` is renormalized away; `K = 1`
    /// (mutually exclusive certainties) is an error.
    ///
    /// The normalizer is computed as the sum of the retained products —
    /// algebraically `1 − K`, but exact in floating point, so long fusion
    /// chains stay normalized instead of accumulating drift.
    pub fn combine(&self, other: &Self) -> Result<Self> {
        debug_assert!(self.is_valid() && other.is_valid());
        let road = self.road * other.road + self.road * other.omega + self.omega * other.road;
        let not_road = self.not_road * other.not_road
            + self.not_road * other.omega
            + self.omega * other.not_road;
        let omega = self.omega * other.omega;
        let total = road + not_road + omega;
        if total <= 0.0 {
            return Err(Error::TotalConflict);
        }
        Ok(Self { road: road / total, not_road: not_road / total, omega: omega / total })
    }

    /// Copy with every component clamped to at least `floor`, renormalized.
    /// Used before logarithmic fusion so no commonality is zero.
    pub fn floored(&self, floor: f64) -> Self {
        let road = self.road.max(floor);
        let not_road = self.not_road.max(floor);
        let omega = self.omega.max(floor);
        let total = road + not_road + omega;
        Self { road: road / total, not_road: not_road / total, omega: omega / total }
    }

    /// Commonality transform: `q(A) = Σ_{B ⊇ A} m(B)`.
    pub fn commonality(&self) -> Commonality {
        Commonality {
            road: self.road + self.omega,
            not_road: self.not_road + self.omega,
            omega: self.omega,
        }
    }

    /// Plausibility transform to a road probability:
    /// `(m(R) + m(Ω)) / (m(R) + m(¬R) + 2·m(Ω))`.
    pub fn plausibility_road(&self) -> f64 {
        (self.road + self.omega) / (self.road + self.not_road + 2.0 * self.omega)
    }

    /// Decomposable entropy in bits:
    /// `H = −q(R)·log₂ q(R) − q(¬R)·log₂ q(¬R) + m(Ω)·log₂ m(Ω)`
    /// with `0·log₂ 0 = 0`. Note this gives 0 for the vacuous mass and 1 for
    /// the uniform Bayesian mass, i.e. it measures probabilistic rather than
    /// ignorance-driven uncertainty.
    pub fn entropy_bits(&self) -> f64 {
        fn xlog2(v: f64) -> f64 {
            if v > 0.0 {
                v * v.log2()
            } else {
                0.0
            }
        }
        -xlog2(self.road + self.omega) - xlog2(self.not_road + self.omega) + xlog2(self.omega)
    }
}

/// Commonality representation of a binary-frame mass function:
/// `q(A) = Σ_{B ⊇ A} m(B)` for A ∈ {{R}, {¬R}, Ω}.
///
/// Under Dempster combination commonalities multiply (up to renormalization),
/// so sums of their logarithms fuse arbitrarily many masses in one pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Commonality {
    pub road: f64,
    pub not_road: f64,
    pub omega: f64,
}

impl Commonality {
    /// Möbius inversion back to a mass function, renormalizing so that the
    /// empty set carries no mass (`1/(1−m(∅))`, exactly Dempster's conflict
    /// normalization when the commonalities come from an unnormalized
    /// product).
    ///
    /// Errors if a recovered component is more negative than `−1e-9`
    /// (inconsistent input) or if the recovered total is ≤ 0 (total conflict).
    pub fn mass(&self) -> Result<MassFunction> {
        const NEG_TOL: f64 = -1e-9;
        let road = self.road - self.omega;
        let not_road = self.not_road - self.omega;
        let omega = self.omega;
        if road < NEG_TOL || not_road < NEG_TOL || omega < NEG_TOL {
            return Err(Error::InconsistentCommonality(format!(
                "recovered masses ({road}, {not_road}, {omega}) have a negative component"
            )));
        }
        let road = road.max(0.0);
        let not_road = not_road.max(0.0);
        let omega = omega.max(0.0);
        let total = road + not_road + omega;
        if total <= 0.0 {
            return Err(Error::TotalConflict);
        }
        Ok(MassFunction { road: road / total, not_road: not_road / total, omega: omega / total })
    }
}

/// Fuses a batch of masses in one logarithmic pass; equals the left fold of
/// [`MassFunction::combine`] over the sequence (within 1e-9).
///
/// Each input is floored via [`MassFunction::floored`] with [`MASS_FLOOR`]
/// first, so the logs stay finite. An empty batch is total ignorance by
/// convention. Total conflict (both singleton commonality products underflow
/// to zero) is an error; grid callers reset such cells to vacuous.
pub fn combine_all(masses: &[MassFunction]) -> Result<MassFunction> {
    if masses.is_empty() {
        return Ok(MassFunction::vacuous());
    }
    let mut log_q = LogCommonalitySum::new();
    for m in masses {
        log_q.add(m);
    }
    log_q.mass()
}

/// Running sum of log-commonalities: the accumulator behind [`combine_all`],
/// exposed so the grid mapper can histogram thousands of points per cell
/// without materializing per-cell mass vectors.
#[derive(Clone, Copy, Debug, Default)]
pub struct LogCommonalitySum {
    pub road: f64,
    pub not_road: f64,
    pub omega: f64,
    pub count: u32,
}

impl LogCommonalitySum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one mass function (floored to keep logs finite).
    pub fn add(&mut self, m: &MassFunction) {
        let q = m.floored(MASS_FLOOR).commonality();
        self.road += q.road.ln();
        self.not_road += q.not_road.ln();
        self.omega += q.omega.ln();
        self.count += 1;
    }

    /// Exponentiates the accumulated sums and inverts back to a normalized
    /// mass function. Empty accumulator → vacuous.
    pub fn mass(&self) -> Result<MassFunction> {
        if self.count == 0 {
            return Ok(MassFunction::vacuous());
        }
        let q = Commonality {
            road: self.road.exp(),
            not_road: self.not_road.exp(),
            omega: self.omega.exp(),
        };
        q.mass()
    }
}
