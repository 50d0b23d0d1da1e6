//! Synthetic worlds and a rotating-LIDAR simulator: procedural road maps
//! with static clutter and moving vehicles, ray-cast scans with per-point
//! ground truth, and noisy odometry streams — everything the pipeline needs
//! to run end to end without real sensor data.
//!
//! The world lives on a flat ground plane at z = 0 with the sensor mounted
//! `sensor_height` above it, so ground returns sit near z = −sensor_height
//! in the sensor frame. Scans are deterministic given a seed; a sequence
//! derives one child seed per frame so any frame can be regenerated on its
//! own without simulating the ones before it.

mod raycast;
pub mod io;

pub use io::{read_truth_csv, read_world, write_truth_csv, write_world};
pub use raycast::{simulate_scan, simulate_scan_with_motion, SimulatedScan};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::belief::{Hypothesis, MassFunction};
use crate::geom::{Polygon, Pose2D};
use crate::glr::model::GlrClassifier;
use crate::odometry::{wrap_angle, OdoMeasurement};
use crate::scan::{PointRecord, AZIMUTH_STEP_DEG, RINGS};
use crate::vecmap::VectorMap;
use crate::{Error, Result};

/// Laser elevation angles of the default 32-ring sensor, degrees, topmost
/// first: a non-uniform spread from +15° down to −25°, densest around the
/// horizon.
pub const DEFAULT_ELEVATIONS_DEG: [f64; 32] = [
    15.0, 10.333, 7.0, 4.667, 3.333, 2.333, 1.667, 1.333, 1.0, 0.667, 0.333, 0.0, -0.333, -0.667,
    -1.0, -1.333, -1.667, -2.0, -2.333, -2.667, -3.0, -3.333, -3.667, -4.0, -4.667, -5.333,
    -6.148, -7.254, -8.843, -11.31, -15.639, -25.0,
];

/// Geometry and noise model of the simulated sensor. The ring count and
/// azimuth step are pinned to the range-image geometry (32 × 1800 = 57,600
/// rays per revolution); the elevation table itself is configurable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    /// Per-ring elevation angles, degrees, strictly descending.
    pub elevations_deg: Vec<f64>,
    /// Azimuth quantization, degrees.
    pub azimuth_step_deg: f64,
    /// Sweep rate, Hz.
    pub rate_hz: f64,
    /// Returns beyond this range are dropped, meters.
    pub max_range: f64,
    /// Gaussian range noise σ, meters.
    pub range_sigma: f64,
    /// Probability that a return is lost entirely.
    pub dropout: f64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self {
            elevations_deg: DEFAULT_ELEVATIONS_DEG.to_vec(),
            azimuth_step_deg: AZIMUTH_STEP_DEG,
            rate_hz: 10.0,
            max_range: 100.0,
            range_sigma: 0.02,
            dropout: 0.02,
        }
    }
}

impl SensorSpec {
    /// Validates the sensor parameters: 32 strictly descending elevations, the 0.2°
    /// azimuth step the range image is built around (so one revolution is
    /// exactly 57,600 rays), and sane noise parameters.
    pub fn validate(&self) -> Result<()> {
        if self.elevations_deg.len() != RINGS {
            return Err(Error::InvalidArgument(format!(
                "need {} ring elevations, got {}",
                RINGS,
                self.elevations_deg.len()
            )));
        }
        if self.elevations_deg.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidArgument(
                "ring elevations must be strictly descending, topmost first".into(),
            ));
        }
        if self.azimuth_step_deg != AZIMUTH_STEP_DEG {
            return Err(Error::InvalidArgument(format!(
                "azimuth step must be {AZIMUTH_STEP_DEG}°, got {}",
                self.azimuth_step_deg
            )));
        }
        if !(self.rate_hz > 0.0) || !(self.max_range > 0.0) || !(self.range_sigma >= 0.0) {
            return Err(Error::InvalidArgument(
                "rate and max range must be positive, range σ nonnegative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!(
                "dropout must be a probability, got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    /// Rays per revolution (57,600 for a valid spec).
    pub fn rays_per_scan(&self) -> usize {
        self.elevations_deg.len() * (360.0 / self.azimuth_step_deg).round() as usize
    }
}

/// Static obstacle: a box or cylinder standing on the ground plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Obstacle {
    /// Axis-aligned box footprint.
    Box { center: (f64, f64), half_extents: (f64, f64), height: f64 },
    /// Vertical cylinder.
    Cylinder { center: (f64, f64), radius: f64, height: f64 },
}

/// Time-parameterized pose track: linear position interpolation, shortest-arc
/// heading interpolation, clamped beyond the ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    keys: Vec<(f64, Pose2D)>,
}

impl Trajectory {
    pub fn new(keys: Vec<(f64, Pose2D)>) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::EmptyInput("trajectory needs at least one key".into()));
        }
        if keys.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument("trajectory keys must be strictly time-ordered".into()));
        }
        Ok(Self { keys })
    }

    pub fn keys(&self) -> &[(f64, Pose2D)] {
        &self.keys
    }

    /// Time of the last key.
    pub fn duration(&self) -> f64 {
        self.keys.last().unwrap().0
    }

    pub fn pose_at(&self, t: f64) -> Pose2D {
        let keys = &self.keys;
        if t <= keys[0].0 {
            return keys[0].1;
        }
        if t >= keys[keys.len() - 1].0 {
            return keys[keys.len() - 1].1;
        }
        let hi = keys.partition_point(|&(kt, _)| kt <= t);
        let (t0, a) = keys[hi - 1];
        let (t1, b) = keys[hi];
        let f = (t - t0) / (t1 - t0);
        Pose2D::new(
            a.x + f * (b.x - a.x),
            a.y + f * (b.y - a.y),
            a.heading + f * wrap_angle(b.heading - a.heading),
        )
    }

    /// Sample window for finite-difference rates, clipped to the keyed time
    /// span so endpoint queries use one-sided differences instead of
    /// straddling the clamp (which would halve the reported rate).
    fn rate_window(&self, t: f64) -> Option<(Pose2D, Pose2D, f64)> {
        let h = 1e-3;
        let t0 = (t - h).max(self.keys[0].0);
        let t1 = (t + h).min(self.duration());
        (t1 > t0).then(|| (self.pose_at(t0), self.pose_at(t1), t1 - t0))
    }

    /// Ground speed at `t` by finite differences; zero for a stationary
    /// (single-key) trajectory.
    pub fn speed_at(&self, t: f64) -> f64 {
        self.rate_window(t)
            .map(|(a, b, dt)| ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt() / dt)
            .unwrap_or(0.0)
    }

    /// Turn rate at `t` by finite differences; zero for a stationary
    /// trajectory.
    pub fn yaw_rate_at(&self, t: f64) -> f64 {
        self.rate_window(t)
            .map(|(a, b, dt)| wrap_angle(b.heading - a.heading) / dt)
            .unwrap_or(0.0)
    }
}

/// A vehicle driving through the world: an oriented box footprint following
/// a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovingVehicle {
    pub trajectory: Trajectory,
    /// Half length along the vehicle's heading, m.
    pub half_length: f64,
    /// Half width across it, m.
    pub half_width: f64,
    /// Height above ground, m.
    pub height: f64,
}

/// Complete scene: road polygons, static clutter, moving vehicles, the ego
/// trajectory, and the sensor's mounting height above the ground plane.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub map: VectorMap,
    pub obstacles: Vec<Obstacle>,
    pub vehicles: Vec<MovingVehicle>,
    pub ego: Trajectory,
    /// Sensor height above ground, m (> 0, so ground returns have negative
    /// sensor-frame z).
    pub sensor_height: f64,
}

/// Road topology family of a generated world.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoadFamily {
    Straight,
    Curve,
    Junction,
    Roundabout,
}

impl std::str::FromStr for RoadFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "straight" => Ok(Self::Straight),
            "curve" => Ok(Self::Curve),
            "junction" => Ok(Self::Junction),
            "roundabout" => Ok(Self::Roundabout),
            other => Err(Error::InvalidArgument(format!(
                "unknown road family {other:?} (expected straight, curve, junction or roundabout)"
            ))),
        }
    }
}

impl std::fmt::Display for RoadFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Straight => "straight",
            Self::Curve => "curve",
            Self::Junction => "junction",
            Self::Roundabout => "roundabout",
        })
    }
}

/// Parameters of the procedural world generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub family: RoadFamily,
    /// Road surface width, m.
    pub road_width: f64,
    /// Straight/junction road length, m.
    pub road_length: f64,
    /// Sensor mounting height, m.
    pub sensor_height: f64,
    /// Ego speed along its route, m/s.
    pub ego_speed: f64,
    /// Drive duration, s.
    pub duration: f64,
    /// Number of static obstacles scattered beside the road.
    pub static_obstacles: usize,
    /// Number of moving vehicles.
    pub moving_vehicles: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            family: RoadFamily::Straight,
            road_width: 10.0,
            road_length: 240.0,
            sensor_height: 1.8,
            ego_speed: 30.0 / 3.6,
            duration: 12.0,
            static_obstacles: 12,
            moving_vehicles: 1,
        }
    }
}

/// Builds a deterministic world for the given seed: the road layout from the
/// configured family, the ego driving along it, clutter scattered beside the
/// road surface, and vehicles following road centerlines.
pub fn generate_world(seed: u64, cfg: &WorldConfig) -> Result<World> {
    if !(cfg.sensor_height > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sensor height must be > 0, got {}",
            cfg.sensor_height
        )));
    }
    if !(cfg.road_width > 0.0) || !(cfg.road_length > 0.0) || !(cfg.ego_speed > 0.0) || !(cfg.duration > 0.0) {
        return Err(Error::InvalidArgument(
            "road dimensions, ego speed and duration must be positive".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let w = cfg.road_width;
    let half_w = 0.5 * w;
    let drive = cfg.ego_speed * cfg.duration;

    let (map, ego, vehicle_tracks): (VectorMap, Trajectory, Vec<Trajectory>) = match cfg.family {
        RoadFamily::Straight => {
            let half_l = 0.5 * cfg.road_length.max(drive + 40.0);
            let road = Polygon::new(vec![
                (-half_l, -half_w),
                (half_l, -half_w),
                (half_l, half_w),
                (-half_l, half_w),
            ])?;
            let x0 = -0.5 * drive;
            let ego = Trajectory::new(vec![
                (0.0, Pose2D::new(x0, 0.0, 0.0)),
                (cfg.duration, Pose2D::new(x0 + drive, 0.0, 0.0)),
            ])?;
            // Oncoming traffic in the other lane.
            let vehicles = (0..cfg.moving_vehicles)
                .map(|i| {
                    let speed = cfg.ego_speed * rng.gen_range(0.8..1.2);
                    let xv = 0.5 * speed * cfg.duration + 15.0 * i as f64;
                    Trajectory::new(vec![
                        (0.0, Pose2D::new(xv, 0.25 * w, std::f64::consts::PI)),
                        (cfg.duration, Pose2D::new(xv - speed * cfg.duration, 0.25 * w, std::f64::consts::PI)),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            (VectorMap::new(vec![road], (0.0, 0.0)), ego, vehicles)
        }
        RoadFamily::Curve => {
            // Quarter arc: centerline radius chosen so the drive fits on it,
            // with the surface extending a few degrees past both ends so the
            // drive starts and finishes on road rather than on its edge.
            let radius = (drive / std::f64::consts::FRAC_PI_2).max(40.0);
            let center = (0.0, radius);
            let road = arc_band(center, radius - half_w, radius + half_w, -96.0, 6.0, 52)?;
            let ego = arc_track(center, radius, -90.0, cfg.ego_speed, cfg.duration, false);
            let vehicles = (0..cfg.moving_vehicles)
                .map(|_| {
                    let speed = cfg.ego_speed * rng.gen_range(0.8..1.2);
                    // Oncoming around the outer lane, entering from the far end.
                    Ok(arc_track(center, radius + 0.25 * w, 0.0, speed, cfg.duration, true))
                })
                .collect::<Result<Vec<_>>>()?;
            (VectorMap::new(vec![road], (0.0, 0.0)), ego, vehicles)
        }
        RoadFamily::Junction => {
            let half_l = 0.5 * cfg.road_length.max(drive + 40.0);
            let east = Polygon::new(vec![
                (-half_l, -half_w),
                (half_l, -half_w),
                (half_l, half_w),
                (-half_l, half_w),
            ])?;
            let north = Polygon::new(vec![
                (-half_w, -half_l),
                (half_w, -half_l),
                (half_w, half_l),
                (-half_w, half_l),
            ])?;
            let x0 = -0.5 * drive;
            let ego = Trajectory::new(vec![
                (0.0, Pose2D::new(x0, 0.0, 0.0)),
                (cfg.duration, Pose2D::new(x0 + drive, 0.0, 0.0)),
            ])?;
            // Cross traffic through the junction, southbound.
            let vehicles = (0..cfg.moving_vehicles)
                .map(|i| {
                    let speed = cfg.ego_speed * rng.gen_range(0.8..1.2);
                    let y0 = 0.5 * speed * cfg.duration + 12.0 * i as f64;
                    Trajectory::new(vec![
                        (0.0, Pose2D::new(0.25 * w, y0, -std::f64::consts::FRAC_PI_2)),
                        (
                            cfg.duration,
                            Pose2D::new(0.25 * w, y0 - speed * cfg.duration, -std::f64::consts::FRAC_PI_2),
                        ),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            (VectorMap::new(vec![east, north], (0.0, 0.0)), ego, vehicles)
        }
        RoadFamily::Roundabout => {
            // Ring of four quarter-annulus polygons plus four arms; the ego
            // circulates the ring centerline.
            let ring_radius = (drive / (2.0 * std::f64::consts::PI)).max(16.0);
            let arm_len = 30.0;
            let mut polys = Vec::new();
            for q in 0..4 {
                let a0 = 90.0 * q as f64;
                polys.push(arc_band(
                    (0.0, 0.0),
                    ring_radius - half_w,
                    ring_radius + half_w,
                    a0,
                    a0 + 90.0,
                    24,
                )?);
            }
            for q in 0..4 {
                let angle = std::f64::consts::FRAC_PI_2 * q as f64;
                let (s, c) = angle.sin_cos();
                let rot = |x: f64, y: f64| (c * x - s * y, s * x + c * y);
                polys.push(Polygon::new(vec![
                    rot(ring_radius, -half_w),
                    rot(ring_radius + arm_len, -half_w),
                    rot(ring_radius + arm_len, half_w),
                    rot(ring_radius, half_w),
                ])?);
            }
            let ego = arc_track((0.0, 0.0), ring_radius, -90.0, cfg.ego_speed, cfg.duration, false);
            let vehicles = (0..cfg.moving_vehicles)
                .map(|i| {
                    let speed = cfg.ego_speed * rng.gen_range(0.8..1.2);
                    Ok(arc_track(
                        (0.0, 0.0),
                        ring_radius,
                        90.0 + 45.0 * i as f64,
                        speed,
                        cfg.duration,
                        false,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            (VectorMap::new(polys, (0.0, 0.0)), ego, vehicles)
        }
    };

    // Clutter beside the road: rejection-sample positions near the ego route
    // until they land off the road surface.
    let mut obstacles = Vec::with_capacity(cfg.static_obstacles);
    if cfg.family == RoadFamily::Roundabout {
        // Center island fixture.
        obstacles.push(Obstacle::Cylinder { center: (0.0, 0.0), radius: 2.0, height: 3.0 });
    }
    while obstacles.len() < cfg.static_obstacles {
        let t = rng.gen_range(0.0..cfg.duration);
        let anchor = ego.pose_at(t);
        let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let lateral = side * (half_w + rng.gen_range(1.5..8.0));
        let along = rng.gen_range(-10.0..10.0);
        let center = anchor.to_world((along, lateral));
        if map.contains(center) {
            continue;
        }
        let height = rng.gen_range(0.5..3.0);
        let ob = if rng.gen_bool(0.5) {
            Obstacle::Box {
                center,
                half_extents: (rng.gen_range(0.3..1.2), rng.gen_range(0.3..1.2)),
                height,
            }
        } else {
            Obstacle::Cylinder { center, radius: rng.gen_range(0.2..0.8), height }
        };
        obstacles.push(ob);
    }

    let vehicles = vehicle_tracks
        .into_iter()
        .map(|trajectory| MovingVehicle {
            trajectory,
            half_length: 2.2,
            half_width: 0.9,
            height: 1.5,
        })
        .collect();

    Ok(World { map, obstacles, vehicles, ego, sensor_height: cfg.sensor_height })
}

/// Annular band between `r_in` and `r_out` around `center`, from `a0` to
/// `a1` degrees, discretized into a simple polygon: outer arc forward, inner
/// arc back.
fn arc_band(
    center: (f64, f64),
    r_in: f64,
    r_out: f64,
    a0: f64,
    a1: f64,
    steps: usize,
) -> Result<Polygon> {
    let mut vertices = Vec::with_capacity(2 * (steps + 1));
    for k in 0..=steps {
        let a = (a0 + (a1 - a0) * k as f64 / steps as f64).to_radians();
        vertices.push((center.0 + r_out * a.cos(), center.1 + r_out * a.sin()));
    }
    for k in (0..=steps).rev() {
        let a = (a0 + (a1 - a0) * k as f64 / steps as f64).to_radians();
        vertices.push((center.0 + r_in * a.cos(), center.1 + r_in * a.sin()));
    }
    Polygon::new(vertices)
}

/// Constant-speed track along a circle of `radius` around `center`, starting
/// at `start_deg`, sampled densely enough that linear interpolation stays
/// within millimeters of the true arc. `clockwise` flips the direction.
fn arc_track(
    center: (f64, f64),
    radius: f64,
    start_deg: f64,
    speed: f64,
    duration: f64,
    clockwise: bool,
) -> Trajectory {
    let omega = (speed / radius) * if clockwise { -1.0 } else { 1.0 };
    let tangent = if clockwise { -std::f64::consts::FRAC_PI_2 } else { std::f64::consts::FRAC_PI_2 };
    let dt = 0.05;
    let steps = (duration / dt).ceil() as usize;
    let keys = (0..=steps)
        .map(|k| {
            let t = (k as f64 * dt).min(duration);
            let a = start_deg.to_radians() + omega * t;
            (t, Pose2D::new(center.0 + radius * a.cos(), center.1 + radius * a.sin(), wrap_angle(a + tangent)))
        })
        .collect();
    Trajectory::new(keys).expect("arc keys are strictly time-ordered")
}

/// Per-point ground truth of a simulated return. `Ground { road }` and
/// `Obstacle` are mutually exclusive, and road implies ground by
/// construction. Dropped-out rays keep the truth of what the undisturbed ray
/// hit; rays that hit nothing are `NoReturn`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truth {
    NoReturn,
    Ground { road: bool },
    Obstacle,
}

impl Truth {
    pub fn is_ground(self) -> bool {
        matches!(self, Truth::Ground { .. })
    }

    pub fn is_road(self) -> bool {
        matches!(self, Truth::Ground { road: true })
    }

    pub fn is_obstacle(self) -> bool {
        matches!(self, Truth::Obstacle)
    }
}

/// Feature vector handed to the point classifier.
pub fn point_features(p: &PointRecord) -> [f64; 5] {
    [p.x, p.y, p.z, p.range, p.intensity]
}

/// Idealized classifier output straight from the ground truth: certainty in
/// R for road returns, certainty in ¬R for every other valid return, vacuity
/// for invalid rays.
pub fn perfect_masses(points: &[PointRecord], truth: &[Truth]) -> Result<Vec<MassFunction>> {
    if points.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} points vs {} truth labels",
            points.len(),
            truth.len()
        )));
    }
    Ok(points
        .iter()
        .zip(truth)
        .map(|(p, t)| {
            if !p.valid {
                MassFunction::vacuous()
            } else if t.is_road() {
                MassFunction::certain(Hypothesis::Road)
            } else {
                MassFunction::certain(Hypothesis::NotRoad)
            }
        })
        .collect())
}

/// Classifier output for every valid point (vacuous for invalid rays).
pub fn classifier_masses(points: &[PointRecord], classifier: &GlrClassifier) -> Result<Vec<MassFunction>> {
    points
        .iter()
        .map(|p| {
            if !p.valid {
                Ok(MassFunction::vacuous())
            } else {
                classifier.mass(&point_features(p))
            }
        })
        .collect()
}

/// Gaussian noise applied to the simulated odometry streams. Zero is allowed
/// (noise-free streams); the reported measurement variances are floored at
/// 1e-12 so they stay valid for the filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdoNoise {
    /// Speed noise σ, m/s.
    pub speed_sd: f64,
    /// Heading noise σ, rad.
    pub heading_sd: f64,
    /// Yaw-rate noise σ, rad/s.
    pub yaw_rate_sd: f64,
}

impl Default for OdoNoise {
    fn default() -> Self {
        Self { speed_sd: 0.1, heading_sd: 0.005, yaw_rate_sd: 0.01 }
    }
}

impl OdoNoise {
    /// Noise-free streams.
    pub fn none() -> Self {
        Self { speed_sd: 0.0, heading_sd: 0.0, yaw_rate_sd: 0.0 }
    }
}

/// A planned drive: frame times and true poses at the scan rate, one child
/// seed per frame, and the full odometry stream. Scans are not stored — at
/// 57,600 points each, a two-minute drive would not fit in memory — but any
/// frame regenerates deterministically via [`SimSequence::scan`].
#[derive(Clone, Debug, PartialEq)]
pub struct SimSequence {
    pub frame_times: Vec<f64>,
    pub poses: Vec<Pose2D>,
    pub frame_seeds: Vec<u64>,
    pub odometry: Vec<OdoMeasurement>,
}

impl SimSequence {
    pub fn len(&self) -> usize {
        self.frame_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame_times.is_empty()
    }

    /// Regenerates frame `k`'s scan.
    pub fn scan(&self, world: &World, spec: &SensorSpec, k: usize) -> SimulatedScan {
        simulate_scan(world, &self.poses[k], self.frame_times[k], spec, self.frame_seeds[k])
    }
}

/// Deterministic child seed for frame `k` of a sequence seeded with `seed`.
pub fn frame_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Plans a drive along the world's ego trajectory: scan frames at the sensor
/// rate, speed/heading odometry at the same rate, and yaw-rate odometry at
/// ten times that (the classic 10 Hz / 100 Hz split at the default 10 Hz
/// sensor). Measurements are time-ordered; where a yaw-rate and a
/// speed/heading tick coincide, the yaw-rate row comes first.
pub fn simulate_sequence(
    world: &World,
    spec: &SensorSpec,
    noise: &OdoNoise,
    seed: u64,
) -> Result<SimSequence> {
    spec.validate()?;
    if !(noise.speed_sd >= 0.0) || !(noise.heading_sd >= 0.0) || !(noise.yaw_rate_sd >= 0.0) {
        return Err(Error::InvalidArgument("odometry noise σ must be nonnegative".into()));
    }
    let duration = world.ego.duration();
    let frames = (duration * spec.rate_hz + 1e-9).floor() as usize;
    if frames == 0 {
        return Err(Error::EmptyInput(format!(
            "ego trajectory of {duration} s yields no frames at {} Hz",
            spec.rate_hz
        )));
    }
    let frame_times: Vec<f64> = (0..frames).map(|k| k as f64 / spec.rate_hz).collect();
    let poses: Vec<Pose2D> = frame_times.iter().map(|&t| world.ego.pose_at(t)).collect();
    let frame_seeds: Vec<u64> = (0..frames).map(|k| frame_seed(seed, k)).collect();

    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x6f64_6f6d_6574_7279);
    let speed_noise = Normal::new(0.0, noise.speed_sd)
        .map_err(|e| Error::InvalidArgument(format!("speed noise: {e}")))?;
    let heading_noise = Normal::new(0.0, noise.heading_sd)
        .map_err(|e| Error::InvalidArgument(format!("heading noise: {e}")))?;
    let yaw_noise = Normal::new(0.0, noise.yaw_rate_sd)
        .map_err(|e| Error::InvalidArgument(format!("yaw-rate noise: {e}")))?;
    let var_floor = 1e-12;

    let yaw_rate_hz = 10.0 * spec.rate_hz;
    let yaw_ticks = (duration * yaw_rate_hz + 1e-9).floor() as usize;
    let mut odometry = Vec::with_capacity(yaw_ticks + frames);
    for k in 0..yaw_ticks {
        let t = k as f64 / yaw_rate_hz;
        let z = world.ego.yaw_rate_at(t) + yaw_noise.sample(&mut rng);
        odometry.push(OdoMeasurement::yaw_rate(t, z, noise.yaw_rate_sd.powi(2).max(var_floor))?);
        if k % 10 == 0 {
            let pose = world.ego.pose_at(t);
            let v = world.ego.speed_at(t) + speed_noise.sample(&mut rng);
            let heading = wrap_angle(pose.heading + heading_noise.sample(&mut rng));
            odometry.push(OdoMeasurement::speed_heading(
                t,
                v,
                heading,
                noise.speed_sd.powi(2).max(var_floor),
                noise.heading_sd.powi(2).max(var_floor),
            )?);
        }
    }

    Ok(SimSequence { frame_times, poses, frame_seeds, odometry })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odometry::{ekf_update, CtrvState, MeasurementKind, ProcessNoise};
    use nalgebra::{Matrix5, SVector};

    #[test]
    fn default_sensor_covers_the_full_revolution() {
        let spec = SensorSpec::default();
        spec.validate().unwrap();
        assert_eq!(spec.rays_per_scan(), 57_600);
    }

    #[test]
    fn sensor_spec_rejects_bad_tables() {
        let mut spec = SensorSpec::default();
        spec.elevations_deg.truncate(31);
        assert!(spec.validate().is_err());

        let mut spec = SensorSpec::default();
        spec.elevations_deg[5] = spec.elevations_deg[4];
        assert!(spec.validate().is_err());

        let mut spec = SensorSpec::default();
        spec.dropout = 1.5;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn trajectory_interpolates_and_clamps() {
        let tr = Trajectory::new(vec![
            (0.0, Pose2D::new(0.0, 0.0, 0.0)),
            (2.0, Pose2D::new(4.0, 2.0, 1.0)),
        ])
        .unwrap();
        let mid = tr.pose_at(1.0);
        assert!((mid.x - 2.0).abs() < 1e-12 && (mid.y - 1.0).abs() < 1e-12);
        assert!((mid.heading - 0.5).abs() < 1e-12);
        assert_eq!(tr.pose_at(-5.0), tr.keys()[0].1);
        assert_eq!(tr.pose_at(99.0), tr.keys()[1].1);
    }

    #[test]
    fn trajectory_heading_interpolation_takes_the_short_arc() {
        use std::f64::consts::PI;
        let tr = Trajectory::new(vec![
            (0.0, Pose2D::new(0.0, 0.0, PI - 0.1)),
            (1.0, Pose2D::new(1.0, 0.0, -(PI - 0.1))),
        ])
        .unwrap();
        // Halfway between +3.04 and −3.04 through ±π, not through 0.
        let h = tr.pose_at(0.5).heading;
        assert!(h.abs() > 3.0, "heading interpolated the long way: {h}");
    }

    #[test]
    fn trajectory_rejects_disorder() {
        assert!(Trajectory::new(vec![]).is_err());
        assert!(Trajectory::new(vec![
            (0.0, Pose2D::new(0.0, 0.0, 0.0)),
            (0.0, Pose2D::new(1.0, 0.0, 0.0)),
        ])
        .is_err());
    }

    #[test]
    fn speed_and_yaw_rate_recover_track_parameters() {
        let track = arc_track((0.0, 0.0), 20.0, -90.0, 5.0, 10.0, false);
        assert!((track.speed_at(4.0) - 5.0).abs() < 1e-3);
        assert!((track.yaw_rate_at(4.0) - 0.25).abs() < 1e-3);
    }

    #[test]
    fn generated_worlds_are_deterministic() {
        let cfg = WorldConfig::default();
        let a = generate_world(42, &cfg).unwrap();
        let b = generate_world(42, &cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_world(43, &cfg).unwrap();
        assert_ne!(a.obstacles, c.obstacles);
    }

    #[test]
    fn straight_family_is_one_rectangle() {
        let cfg = WorldConfig { static_obstacles: 4, ..WorldConfig::default() };
        let world = generate_world(1, &cfg).unwrap();
        assert_eq!(world.map.polygons.len(), 1);
        assert_eq!(world.map.polygons[0].vertices.len(), 4);
        assert_eq!(world.vehicles.len(), 1);
        assert_eq!(world.obstacles.len(), 4);
        // Ego stays on the road the whole drive.
        for k in 0..=120 {
            let p = world.ego.pose_at(k as f64 * 0.1);
            assert!(world.map.contains((p.x, p.y)));
        }
    }

    #[test]
    fn roundabout_family_builds_ring_and_arms() {
        let cfg = WorldConfig { family: RoadFamily::Roundabout, ..WorldConfig::default() };
        let world = generate_world(5, &cfg).unwrap();
        // Four quarter-ring bands plus four arms.
        assert_eq!(world.map.polygons.len(), 8);
        // The ring interior (center island) is off-road, the centerline is on.
        assert!(!world.map.contains((0.0, 0.0)));
        let ring_radius = (cfg.ego_speed * cfg.duration / (2.0 * std::f64::consts::PI)).max(16.0);
        for a in [0.3f64, 1.8, 3.3, 5.1] {
            assert!(world.map.contains((ring_radius * a.cos(), ring_radius * a.sin())));
        }
        // Arms reach outward.
        assert!(world.map.contains((ring_radius + 20.0, 0.0)));
        assert!(world.map.contains((0.0, -(ring_radius + 20.0))));
        // Ego circulates on the road.
        for k in 0..=120 {
            let p = world.ego.pose_at(k as f64 * 0.1);
            assert!(world.map.contains((p.x, p.y)), "ego off road at tick {k}");
        }
    }

    #[test]
    fn curve_and_junction_keep_ego_on_road() {
        for family in [RoadFamily::Curve, RoadFamily::Junction] {
            let cfg = WorldConfig { family, ..WorldConfig::default() };
            let world = generate_world(9, &cfg).unwrap();
            for k in 0..=120 {
                let p = world.ego.pose_at(k as f64 * 0.1);
                assert!(world.map.contains((p.x, p.y)), "{family} ego off road at tick {k}");
            }
        }
    }

    #[test]
    fn obstacles_land_off_road() {
        for family in [RoadFamily::Straight, RoadFamily::Curve, RoadFamily::Junction, RoadFamily::Roundabout] {
            let cfg = WorldConfig { family, static_obstacles: 10, ..WorldConfig::default() };
            let world = generate_world(17, &cfg).unwrap();
            for ob in &world.obstacles {
                let center = match ob {
                    Obstacle::Box { center, .. } | Obstacle::Cylinder { center, .. } => *center,
                };
                assert!(!world.map.contains(center), "{family}: obstacle at {center:?} is on the road");
            }
        }
    }

    #[test]
    fn thirty_kmh_drive_yields_120_frames_spaced_0833m() {
        let cfg = WorldConfig::default();
        let world = generate_world(3, &cfg).unwrap();
        let seq = simulate_sequence(&world, &SensorSpec::default(), &OdoNoise::none(), 7).unwrap();
        assert_eq!(seq.len(), 120);
        let step = 30.0 / 3.6 / 10.0;
        for k in 1..seq.len() {
            let (a, b) = (seq.poses[k - 1], seq.poses[k]);
            let d = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
            assert!((d - step).abs() < 1e-9, "frame {k} spacing {d}");
        }
    }

    #[test]
    fn sequence_odometry_has_both_cadences() {
        let cfg = WorldConfig { duration: 2.0, ..WorldConfig::default() };
        let world = generate_world(3, &cfg).unwrap();
        let seq = simulate_sequence(&world, &SensorSpec::default(), &OdoNoise::default(), 7).unwrap();
        let yaw = seq
            .odometry
            .iter()
            .filter(|m| matches!(m.kind, MeasurementKind::YawRate { .. }))
            .count();
        let speed = seq.odometry.len() - yaw;
        assert_eq!(yaw, 200);
        assert_eq!(speed, 20);
        // Time-ordered.
        for w in seq.odometry.windows(2) {
            assert!(w[0].timestamp <= w[1].timestamp);
        }
    }

    #[test]
    fn noise_free_odometry_drives_the_filter_back_onto_the_track() {
        let cfg = WorldConfig { family: RoadFamily::Curve, duration: 10.0, ..WorldConfig::default() };
        let world = generate_world(11, &cfg).unwrap();
        let seq = simulate_sequence(&world, &SensorSpec::default(), &OdoNoise::none(), 1).unwrap();
        let start = world.ego.pose_at(0.0);
        let mut state = CtrvState {
            x: start.x,
            y: start.y,
            theta: start.heading,
            v: world.ego.speed_at(0.0),
            omega: world.ego.yaw_rate_at(0.0),
            stamp: 0.0,
            covariance: Matrix5::from_diagonal(&SVector::from([1e-6; 5])),
        };
        for z in &seq.odometry {
            state = ekf_update(&state, z, &ProcessNoise::default()).unwrap();
        }
        let end = world.ego.pose_at(state.stamp);
        let err = ((state.x - end.x).powi(2) + (state.y - end.y).powi(2)).sqrt();
        // ~83 m of curved driving: the 1 cm/100 m dead-reckoning budget.
        assert!(err < 0.01, "drift {err} m over the drive");
    }

    #[test]
    fn sequence_is_deterministic() {
        let world = generate_world(3, &WorldConfig { duration: 1.0, ..WorldConfig::default() }).unwrap();
        let spec = SensorSpec::default();
        let a = simulate_sequence(&world, &spec, &OdoNoise::default(), 21).unwrap();
        let b = simulate_sequence(&world, &spec, &OdoNoise::default(), 21).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.scan(&world, &spec, 3), b.scan(&world, &spec, 3));
    }
}
