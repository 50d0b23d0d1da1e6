//! Planar dead-reckoning from wheel/CAN odometry: an extended Kalman filter
//! over a constant-turn-rate-and-velocity (CTRV) motion model.
//!
//! The filter consumes speed/heading fixes (typically 10 Hz) and yaw-rate
//! readings (typically 100 Hz) and maintains a five-dimensional state
//! (x, y, θ, v, ω) with full covariance. Its only consumer in this crate is
//! grid reprojection, which needs the rigid motion between two filter
//! snapshots ([`pose_delta`]); absolute position updates (GNSS and the like)
//! are deliberately out of scope.

use std::path::Path;

use nalgebra::{Matrix5, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::geom::{Pose2D, Se2};
use crate::{Error, Result};

/// Below this |ω| (rad/s) the arc equations are replaced by their
/// second-order Taylor expansion to avoid dividing by a vanishing turn rate.
pub const OMEGA_EPSILON: f64 = 1e-6;

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Continuous-time process-noise intensities for the CTRV model, expressed as
/// standard deviations of an unmodeled linear acceleration and yaw
/// acceleration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessNoise {
    /// Linear-acceleration noise, m/s².
    pub accel_sd: f64,
    /// Yaw-acceleration noise, rad/s².
    pub yaw_accel_sd: f64,
}

impl Default for ProcessNoise {
    fn default() -> Self {
        Self { accel_sd: 0.5, yaw_accel_sd: 0.2 }
    }
}

/// Filter state: planar pose, speed, turn rate, time, and covariance over
/// (x, y, θ, v, ω) in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct CtrvState {
    /// Position east, m.
    pub x: f64,
    /// Position north, m.
    pub y: f64,
    /// Heading, rad CCW from +x, kept in (−π, π].
    pub theta: f64,
    /// Speed along the heading, m/s.
    pub v: f64,
    /// Turn rate, rad/s.
    pub omega: f64,
    /// State time, s.
    pub stamp: f64,
    /// Covariance over (x, y, θ, v, ω).
    pub covariance: Matrix5<f64>,
}

impl CtrvState {
    /// Builds a state, validating that the covariance is symmetric within
    /// 1e-9 and has a nonnegative diagonal.
    pub fn new(
        x: f64,
        y: f64,
        theta: f64,
        v: f64,
        omega: f64,
        stamp: f64,
        covariance: Matrix5<f64>,
    ) -> Result<Self> {
        let s = Self { x, y, theta: wrap_angle(theta), v, omega, stamp, covariance };
        if !s.covariance_valid() {
            return Err(Error::InvalidArgument(
                "covariance must be symmetric with a nonnegative diagonal".into(),
            ));
        }
        Ok(s)
    }

    /// A state at the origin with the given diagonal covariance.
    pub fn from_diagonal(stamp: f64, diag: [f64; 5]) -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
            v: 0.0,
            omega: 0.0,
            stamp,
            covariance: Matrix5::from_diagonal(&SVector::from(diag)),
        }
    }

    /// Whether the covariance is symmetric within 1e-9 with diagonal ≥ 0.
    pub fn covariance_valid(&self) -> bool {
        for i in 0..5 {
            if !(self.covariance[(i, i)] >= 0.0) {
                return false;
            }
            for j in (i + 1)..5 {
                if (self.covariance[(i, j)] - self.covariance[(j, i)]).abs() > 1e-9 {
                    return false;
                }
            }
        }
        true
    }

    /// The planar pose carried by the state.
    pub fn pose(&self) -> Pose2D {
        Pose2D::new(self.x, self.y, self.theta)
    }
}

/// One odometry reading. Variances must be strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdoMeasurement {
    pub kind: MeasurementKind,
    /// Measurement time, s.
    pub timestamp: f64,
}

/// What the reading observes: either (speed, heading) or the yaw rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeasurementKind {
    SpeedHeading { v: f64, heading: f64, var_v: f64, var_heading: f64 },
    YawRate { omega: f64, var: f64 },
}

impl OdoMeasurement {
    pub fn speed_heading(timestamp: f64, v: f64, heading: f64, var_v: f64, var_heading: f64) -> Result<Self> {
        if !(var_v > 0.0) || !(var_heading > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "measurement variances must be > 0, got var_v={var_v}, var_heading={var_heading}"
            )));
        }
        Ok(Self { kind: MeasurementKind::SpeedHeading { v, heading, var_v, var_heading }, timestamp })
    }

    pub fn yaw_rate(timestamp: f64, omega: f64, var: f64) -> Result<Self> {
        if !(var > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "measurement variance must be > 0, got {var}"
            )));
        }
        Ok(Self { kind: MeasurementKind::YawRate { omega, var }, timestamp })
    }
}

/// Propagates the state `dt` seconds forward under constant turn rate and
/// velocity.
///
/// For |ω| ≥ [`OMEGA_EPSILON`] the exact circular-arc equations are used;
/// below that, their second-order Taylor expansion in ω, which is continuous
/// across the switch and exact at ω = 0 (straight-line motion). The
/// covariance is propagated through the motion Jacobian and inflated by
/// white-noise linear/yaw acceleration integrated over `dt`.
pub fn ctrv_predict(s: &CtrvState, dt: f64, noise: &ProcessNoise) -> Result<CtrvState> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidArgument(format!("prediction requires dt ≥ 0, got {dt}")));
    }
    let (sin_t, cos_t) = s.theta.sin_cos();
    let mut f = Matrix5::<f64>::identity();
    let (dx, dy);
    if s.omega.abs() >= OMEGA_EPSILON {
        let radius = s.v / s.omega;
        let theta_end = s.theta + s.omega * dt;
        let (sin_e, cos_e) = theta_end.sin_cos();
        dx = radius * (sin_e - sin_t);
        dy = radius * (cos_t - cos_e);
        f[(0, 2)] = radius * (cos_e - cos_t);
        f[(0, 3)] = (sin_e - sin_t) / s.omega;
        f[(0, 4)] = radius * dt * cos_e - dx / s.omega;
        f[(1, 2)] = radius * (sin_e - sin_t);
        f[(1, 3)] = (cos_t - cos_e) / s.omega;
        f[(1, 4)] = radius * dt * sin_e - dy / s.omega;
    } else {
        // Second-order expansion: straight-line motion plus the leading
        // curvature correction ½·v·ω·dt² perpendicular to the heading.
        let lin = s.v * dt;
        let curve = 0.5 * s.v * s.omega * dt * dt;
        dx = lin * cos_t - curve * sin_t;
        dy = lin * sin_t + curve * cos_t;
        f[(0, 2)] = -lin * sin_t - curve * cos_t;
        f[(0, 3)] = dt * cos_t - 0.5 * s.omega * dt * dt * sin_t;
        f[(0, 4)] = -0.5 * s.v * dt * dt * sin_t;
        f[(1, 2)] = lin * cos_t - curve * sin_t;
        f[(1, 3)] = dt * sin_t + 0.5 * s.omega * dt * dt * cos_t;
        f[(1, 4)] = 0.5 * s.v * dt * dt * cos_t;
    }
    f[(2, 4)] = dt;

    // Process noise: white accelerations entering through
    // g = ∂(state)/∂(a, ω̇) integrated over dt.
    let half_dt2 = 0.5 * dt * dt;
    let mut g = SMatrix::<f64, 5, 2>::zeros();
    g[(0, 0)] = half_dt2 * cos_t;
    g[(1, 0)] = half_dt2 * sin_t;
    g[(2, 1)] = half_dt2;
    g[(3, 0)] = dt;
    g[(4, 1)] = dt;
    let noise_diag =
        SMatrix::<f64, 2, 2>::from_diagonal(&SVector::from([noise.accel_sd.powi(2), noise.yaw_accel_sd.powi(2)]));
    let q = g * noise_diag * g.transpose();

    let covariance = symmetrize(&(f * s.covariance * f.transpose() + q));
    Ok(CtrvState {
        x: s.x + dx,
        y: s.y + dy,
        theta: wrap_angle(s.theta + s.omega * dt),
        v: s.v,
        omega: s.omega,
        stamp: s.stamp + dt,
        covariance,
    })
}

/// Predicts the state to the measurement time, then folds the measurement in
/// with a linear Kalman update (Joseph-form covariance).
///
/// Heading residuals are wrapped to (−π, π], so a measured heading of −3.1
/// against a state heading of 3.1 counts as a small disagreement, not a full
/// turn. Fails if the measurement is older than the state.
pub fn ekf_update(s: &CtrvState, z: &OdoMeasurement, noise: &ProcessNoise) -> Result<CtrvState> {
    let dt = z.timestamp - s.stamp;
    if dt < 0.0 {
        return Err(Error::NonMonotoneTimestamp(format!(
            "measurement at t={} is older than filter state at t={}",
            z.timestamp, s.stamp
        )));
    }
    let mut pred = ctrv_predict(s, dt, noise)?;
    match z.kind {
        MeasurementKind::SpeedHeading { v, heading, var_v, var_heading } => {
            if !(var_v > 0.0) || !(var_heading > 0.0) {
                return Err(Error::InvalidArgument("measurement variances must be > 0".into()));
            }
            let mut h = SMatrix::<f64, 2, 5>::zeros();
            h[(0, 3)] = 1.0;
            h[(1, 2)] = 1.0;
            let residual = SVector::from([v - pred.v, wrap_angle(heading - pred.theta)]);
            let r = SMatrix::<f64, 2, 2>::from_diagonal(&SVector::from([var_v, var_heading]));
            apply_linear_update(&mut pred, &h, &residual, &r)?;
        }
        MeasurementKind::YawRate { omega, var } => {
            if !(var > 0.0) {
                return Err(Error::InvalidArgument("measurement variance must be > 0".into()));
            }
            let mut h = SMatrix::<f64, 1, 5>::zeros();
            h[(0, 4)] = 1.0;
            let residual = SVector::from([omega - pred.omega]);
            let r = SMatrix::<f64, 1, 1>::from_diagonal(&SVector::from([var]));
            apply_linear_update(&mut pred, &h, &residual, &r)?;
        }
    }
    pred.stamp = z.timestamp;
    Ok(pred)
}

/// Kalman correction with an observation matrix `h`, pre-computed residual,
/// and measurement covariance `r`. Uses the Joseph form so the covariance
/// stays symmetric PSD under rounding.
fn apply_linear_update<const D: usize>(
    state: &mut CtrvState,
    h: &SMatrix<f64, D, 5>,
    residual: &SVector<f64, D>,
    r: &SMatrix<f64, D, D>,
) -> Result<()> {
    let p = state.covariance;
    let innovation_cov = h * p * h.transpose() + r;
    let innovation_inv = innovation_cov
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular innovation covariance".into()))?;
    let gain = p * h.transpose() * innovation_inv;
    let delta = gain * residual;
    state.x += delta[0];
    state.y += delta[1];
    state.theta = wrap_angle(state.theta + delta[2]);
    state.v += delta[3];
    state.omega += delta[4];
    let i_kh = Matrix5::<f64>::identity() - gain * h;
    state.covariance = symmetrize(&(i_kh * p * i_kh.transpose() + gain * r * gain.transpose()));
    Ok(())
}

fn symmetrize(m: &Matrix5<f64>) -> Matrix5<f64> {
    0.5 * (m + m.transpose())
}

/// Rigid motion taking coordinates in `prev`'s sensor frame to `cur`'s sensor
/// frame — the transform grid reprojection consumes between consecutive
/// frames.
pub fn pose_delta(prev: &CtrvState, cur: &CtrvState) -> Se2 {
    Se2::between(&prev.pose(), &cur.pose())
}

#[derive(Serialize, Deserialize)]
struct MeasurementRow {
    timestamp: f64,
    kind: String,
    v: Option<f64>,
    heading: Option<f64>,
    omega: Option<f64>,
    var_v: Option<f64>,
    var_heading: Option<f64>,
    var_omega: Option<f64>,
}

/// Writes a measurement log as CSV with one row per reading. Fields that do
/// not apply to a reading's kind are left empty.
pub fn write_measurements_csv(path: &Path, measurements: &[OdoMeasurement]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for m in measurements {
        let row = match m.kind {
            MeasurementKind::SpeedHeading { v, heading, var_v, var_heading } => MeasurementRow {
                timestamp: m.timestamp,
                kind: "speed_heading".into(),
                v: Some(v),
                heading: Some(heading),
                omega: None,
                var_v: Some(var_v),
                var_heading: Some(var_heading),
                var_omega: None,
            },
            MeasurementKind::YawRate { omega, var } => MeasurementRow {
                timestamp: m.timestamp,
                kind: "yaw_rate".into(),
                v: None,
                heading: None,
                omega: Some(omega),
                var_v: None,
                var_heading: None,
                var_omega: Some(var),
            },
        };
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a measurement log written by [`write_measurements_csv`], validating
/// kinds and variances.
pub fn read_measurements_csv(path: &Path) -> Result<Vec<OdoMeasurement>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: MeasurementRow = row?;
        let m = match row.kind.as_str() {
            "speed_heading" => {
                let (v, heading, var_v, var_heading) = match (row.v, row.heading, row.var_v, row.var_heading) {
                    (Some(v), Some(h), Some(vv), Some(vh)) => (v, h, vv, vh),
                    _ => {
                        return Err(Error::Parse(
                            "speed_heading row is missing v/heading/var_v/var_heading".into(),
                        ))
                    }
                };
                OdoMeasurement::speed_heading(row.timestamp, v, heading, var_v, var_heading)?
            }
            "yaw_rate" => {
                let (omega, var) = match (row.omega, row.var_omega) {
                    (Some(o), Some(vo)) => (o, vo),
                    _ => return Err(Error::Parse("yaw_rate row is missing omega/var_omega".into())),
                };
                OdoMeasurement::yaw_rate(row.timestamp, omega, var)?
            }
            other => return Err(Error::Parse(format!("unknown measurement kind {other:?}"))),
        };
        out.push(m);
    }
    Ok(out)
}
