//! Ray casting a rotating LIDAR against the synthetic world: flat ground
//! plane, box/cylinder clutter, and moving vehicles as oriented boxes.
//!
//! Geometry is resolved in parallel over the 57,600 rays of a revolution;
//! noise (range jitter, intensity, dropout) is applied in a second,
//! sequential pass so results are identical regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::geom::Pose2D;
use crate::scan::PointRecord;

use super::{Obstacle, SensorSpec, Truth, World};

/// Mean and σ of the simulated return intensity per surface class. Road
/// paint is dark, verges brighter, obstacle bodywork brightest.
const ROAD_INTENSITY: (f64, f64) = (0.30, 0.05);
const OFFROAD_INTENSITY: (f64, f64) = (0.55, 0.06);
const OBSTACLE_INTENSITY: (f64, f64) = (0.85, 0.07);

/// One simulated revolution: 57,600 point records in range-image order
/// (ring-major, azimuth within ring) with the per-ray ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedScan {
    pub points: Vec<PointRecord>,
    pub truth: Vec<Truth>,
}

#[derive(Clone, Copy)]
enum HitKind {
    Ground { road: bool },
    Obstacle,
}

#[derive(Clone, Copy)]
struct RayHit {
    s: f64,
    kind: HitKind,
}

/// Simulates one scan from a rigid sensor pose (no motion during the sweep).
/// Deterministic for a fixed seed. Panics on an invalid sensor spec — specs
/// are validated where they enter the system.
pub fn simulate_scan(
    world: &World,
    pose: &Pose2D,
    t: f64,
    spec: &SensorSpec,
    seed: u64,
) -> SimulatedScan {
    simulate_scan_with_motion(world, pose, t, spec, seed, 0.0)
}

/// Simulates one scan from a sensor that advances along its heading at
/// `forward_speed` during the sweep (a ray at azimuth θ fires after
/// θ/360° of the sweep period). Points are expressed relative to the sensor
/// position at the moment each ray fired, which is what a real rotating
/// sensor reports; forward-motion compensation maps them back to the
/// sweep-start frame.
pub fn simulate_scan_with_motion(
    world: &World,
    pose: &Pose2D,
    t: f64,
    spec: &SensorSpec,
    seed: u64,
    forward_speed: f64,
) -> SimulatedScan {
    spec.validate().expect("sensor spec must be valid");
    let cols = (360.0 / spec.azimuth_step_deg).round() as usize;
    let rings = spec.elevations_deg.len();
    let sweep_period = 1.0 / spec.rate_hz;
    let (sin_h, cos_h) = pose.heading.sin_cos();
    let height = world.sensor_height;

    // Vehicles frozen at scan time: (footprint pose, half length, half
    // width, height).
    let vehicles: Vec<(Pose2D, f64, f64, f64)> = world
        .vehicles
        .iter()
        .map(|v| (v.trajectory.pose_at(t), v.half_length, v.half_width, v.height))
        .collect();

    let directions: Vec<(f64, f64, f64)> = (0..rings * cols)
        .map(|idx| {
            let (se, ce) = spec.elevations_deg[idx / cols].to_radians().sin_cos();
            let (sa, ca) = ((idx % cols) as f64 * spec.azimuth_step_deg).to_radians().sin_cos();
            (ce * ca, ce * sa, se)
        })
        .collect();

    let hits: Vec<Option<RayHit>> = (0..rings * cols)
        .into_par_iter()
        .map(|idx| {
            let ds = directions[idx];
            let dw = (cos_h * ds.0 - sin_h * ds.1, sin_h * ds.0 + cos_h * ds.1, ds.2);
            let advance = forward_speed * sweep_period * ((idx % cols) as f64 * spec.azimuth_step_deg) / 360.0;
            let origin = (pose.x + advance * cos_h, pose.y + advance * sin_h, height);
            nearest_hit(world, &vehicles, origin, dw, spec.max_range)
        })
        .collect();

    // Sequential noise pass in ray order.
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let range_noise = Normal::new(0.0, spec.range_sigma).expect("validated σ");
    let road_intensity = Normal::new(ROAD_INTENSITY.0, ROAD_INTENSITY.1).unwrap();
    let offroad_intensity = Normal::new(OFFROAD_INTENSITY.0, OFFROAD_INTENSITY.1).unwrap();
    let obstacle_intensity = Normal::new(OBSTACLE_INTENSITY.0, OBSTACLE_INTENSITY.1).unwrap();

    let mut points = Vec::with_capacity(rings * cols);
    let mut truth = Vec::with_capacity(rings * cols);
    for (idx, hit) in hits.iter().enumerate() {
        let ring = (idx / cols) as u8;
        let azimuth_deg = (idx % cols) as f64 * spec.azimuth_step_deg;
        let elevation_deg = spec.elevations_deg[idx / cols];
        match hit {
            None => {
                points.push(PointRecord::invalid(ring, azimuth_deg, elevation_deg));
                truth.push(Truth::NoReturn);
            }
            Some(RayHit { s, kind }) => {
                let range = (s + range_noise.sample(&mut rng)).max(0.01);
                let intensity_dist = match kind {
                    HitKind::Ground { road: true } => &road_intensity,
                    HitKind::Ground { road: false } => &offroad_intensity,
                    HitKind::Obstacle => &obstacle_intensity,
                };
                let intensity = intensity_dist.sample(&mut rng).max(0.0);
                let dropped = rng.gen_bool(spec.dropout);
                truth.push(match kind {
                    HitKind::Ground { road } => Truth::Ground { road: *road },
                    HitKind::Obstacle => Truth::Obstacle,
                });
                if dropped {
                    points.push(PointRecord::invalid(ring, azimuth_deg, elevation_deg));
                } else {
                    let ds = directions[idx];
                    points.push(PointRecord {
                        x: range * ds.0,
                        y: range * ds.1,
                        z: range * ds.2,
                        range,
                        azimuth_deg,
                        elevation_deg,
                        ring,
                        intensity,
                        valid: true,
                    });
                }
            }
        }
    }
    SimulatedScan { points, truth }
}

/// Nearest intersection of the world ray `origin + s·dir` with the ground
/// plane, static obstacles, or vehicles, within `max_range`.
fn nearest_hit(
    world: &World,
    vehicles: &[(Pose2D, f64, f64, f64)],
    origin: (f64, f64, f64),
    dir: (f64, f64, f64),
    max_range: f64,
) -> Option<RayHit> {
    let mut best: Option<RayHit> = None;
    let mut consider = |s: f64, kind: HitKind| {
        if s > 1e-9 && s <= max_range && best.map_or(true, |b| s < b.s) {
            best = Some(RayHit { s, kind });
        }
    };

    if dir.2 < -1e-12 {
        let s = -origin.2 / dir.2;
        let hit = (origin.0 + s * dir.0, origin.1 + s * dir.1);
        consider(s, HitKind::Ground { road: world.map.contains(hit) });
    }

    for ob in &world.obstacles {
        let entry = match *ob {
            Obstacle::Box { center, half_extents, height } => {
                box_entry(center, half_extents, height, origin, dir)
            }
            Obstacle::Cylinder { center, radius, height } => {
                cylinder_entry(center, radius, height, origin, dir)
            }
        };
        if let Some(s) = entry {
            consider(s, HitKind::Obstacle);
        }
    }

    for &(footprint, half_length, half_width, height) in vehicles {
        if let Some(s) = oriented_box_entry(&footprint, half_length, half_width, height, origin, dir) {
            consider(s, HitKind::Obstacle);
        }
    }
    best
}

/// Parameter interval where one coordinate of the ray lies within [lo, hi].
fn slab(lo: f64, hi: f64, origin: f64, dir: f64) -> Option<(f64, f64)> {
    if dir.abs() < 1e-12 {
        if origin < lo || origin > hi {
            None
        } else {
            Some((f64::NEG_INFINITY, f64::INFINITY))
        }
    } else {
        let (a, b) = ((lo - origin) / dir, (hi - origin) / dir);
        Some(if a <= b { (a, b) } else { (b, a) })
    }
}

/// Entry parameter of the intersection of interval constraints, if the ray
/// enters the solid in front of the sensor.
fn interval_entry(intervals: &[(f64, f64)]) -> Option<f64> {
    let lo = intervals.iter().map(|i| i.0).fold(f64::NEG_INFINITY, f64::max);
    let hi = intervals.iter().map(|i| i.1).fold(f64::INFINITY, f64::min);
    if lo <= hi && lo > 1e-9 {
        Some(lo)
    } else {
        None
    }
}

fn box_entry(
    center: (f64, f64),
    half_extents: (f64, f64),
    height: f64,
    origin: (f64, f64, f64),
    dir: (f64, f64, f64),
) -> Option<f64> {
    let sx = slab(center.0 - half_extents.0, center.0 + half_extents.0, origin.0, dir.0)?;
    let sy = slab(center.1 - half_extents.1, center.1 + half_extents.1, origin.1, dir.1)?;
    let sz = slab(0.0, height, origin.2, dir.2)?;
    interval_entry(&[sx, sy, sz])
}

fn cylinder_entry(
    center: (f64, f64),
    radius: f64,
    height: f64,
    origin: (f64, f64, f64),
    dir: (f64, f64, f64),
) -> Option<f64> {
    let (ox, oy) = (origin.0 - center.0, origin.1 - center.1);
    let a = dir.0 * dir.0 + dir.1 * dir.1;
    let lateral = if a < 1e-16 {
        if ox * ox + oy * oy <= radius * radius {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            return None;
        }
    } else {
        let b = 2.0 * (ox * dir.0 + oy * dir.1);
        let c = ox * ox + oy * oy - radius * radius;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a))
    };
    let sz = slab(0.0, height, origin.2, dir.2)?;
    interval_entry(&[lateral, sz])
}

/// Box oriented by `footprint` (center + heading): the ray is transformed
/// into the box frame, where the test reduces to axis-aligned slabs. The
/// parameter is preserved because rotation does not change lengths.
fn oriented_box_entry(
    footprint: &Pose2D,
    half_length: f64,
    half_width: f64,
    height: f64,
    origin: (f64, f64, f64),
    dir: (f64, f64, f64),
) -> Option<f64> {
    let local_origin = footprint.to_local((origin.0, origin.1));
    let (s, c) = footprint.heading.sin_cos();
    let local_dir = (c * dir.0 + s * dir.1, -s * dir.0 + c * dir.1);
    let sx = slab(-half_length, half_length, local_origin.0, local_dir.0)?;
    let sy = slab(-half_width, half_width, local_origin.1, local_dir.1)?;
    let sz = slab(0.0, height, origin.2, dir.2)?;
    interval_entry(&[sx, sy, sz])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Polygon;
    use crate::scan::{motion_compensate, SweepConfig};
    use crate::sim::{generate_world, MovingVehicle, Trajectory, WorldConfig};
    use crate::vecmap::VectorMap;

    /// Empty flat world: one 100 m × 10 m road, no clutter, sensor 1.8 m up.
    fn flat_world() -> World {
        World {
            map: VectorMap::new(
                vec![Polygon::new(vec![(-50.0, -5.0), (50.0, -5.0), (50.0, 5.0), (-50.0, 5.0)]).unwrap()],
                (0.0, 0.0),
            ),
            obstacles: vec![],
            vehicles: vec![],
            ego: Trajectory::new(vec![(0.0, Pose2D::new(0.0, 0.0, 0.0))]).unwrap(),
            sensor_height: 1.8,
        }
    }

    fn quiet_spec() -> SensorSpec {
        SensorSpec { range_sigma: 0.0, dropout: 0.0, ..SensorSpec::default() }
    }

    fn ray_index(ring: usize, col: usize) -> usize {
        ring * 1800 + col
    }

    #[test]
    fn ground_range_is_height_over_sine() {
        let world = flat_world();
        let scan = simulate_scan(&world, &Pose2D::new(0.0, 0.0, 0.0), 0.0, &quiet_spec(), 1);
        // Ring 31 points 25° down.
        let p = &scan.points[ray_index(31, 0)];
        assert!(p.valid);
        let want = 1.8 / 25.0_f64.to_radians().sin();
        assert!((p.range - want).abs() < 1e-9, "range {}", p.range);
        assert!((p.z + 1.8).abs() < 1e-9);
        assert_eq!(scan.truth[ray_index(31, 0)], Truth::Ground { road: true });
        // A shallower ring looking sideways lands ~51 m out, past the verge.
        assert_eq!(scan.truth[ray_index(17, 450)], Truth::Ground { road: false });
        // Upward rings never return on the empty world.
        assert!(!scan.points[ray_index(0, 0)].valid);
        assert_eq!(scan.truth[ray_index(0, 0)], Truth::NoReturn);
    }

    #[test]
    fn box_face_at_ten_meters_returns_ten_meters() {
        let mut world = flat_world();
        world.obstacles.push(Obstacle::Box {
            center: (10.5, 0.0),
            half_extents: (0.5, 2.0),
            height: 2.0,
        });
        let scan = simulate_scan(&world, &Pose2D::new(0.0, 0.0, 0.0), 0.0, &quiet_spec(), 1);
        // Ring 11 is the 0.0° (horizontal) laser: it can only hit the box.
        let p = &scan.points[ray_index(11, 0)];
        assert!(p.valid);
        assert!((p.range - 10.0).abs() < 1e-9, "range {}", p.range);
        assert!((p.x - 10.0).abs() < 1e-9 && p.y.abs() < 1e-9);
        assert_eq!(scan.truth[ray_index(11, 0)], Truth::Obstacle);
        // The topmost laser points 15° up and clears the 2 m box entirely.
        let over = &scan.points[ray_index(0, 0)];
        assert!(!over.valid, "15° laser cleared a 2 m box");
    }

    #[test]
    fn cylinder_is_hit_at_tangent_adjusted_range() {
        let mut world = flat_world();
        world.obstacles.push(Obstacle::Cylinder { center: (8.0, 0.0), radius: 1.0, height: 2.5 });
        let scan = simulate_scan(&world, &Pose2D::new(0.0, 0.0, 0.0), 0.0, &quiet_spec(), 1);
        let p = &scan.points[ray_index(11, 0)];
        assert!(p.valid);
        assert!((p.range - 7.0).abs() < 1e-9, "center-line hit: {}", p.range);
        assert_eq!(scan.truth[ray_index(11, 0)], Truth::Obstacle);
    }

    #[test]
    fn moving_vehicle_blocks_rays_only_while_in_front() {
        let mut world = flat_world();
        // Crossing left to right 12 m ahead, passing x ≈ 12 m at t = 2.
        world.vehicles.push(MovingVehicle {
            trajectory: Trajectory::new(vec![
                (0.0, Pose2D::new(12.0, 20.0, -std::f64::consts::FRAC_PI_2)),
                (4.0, Pose2D::new(12.0, -20.0, -std::f64::consts::FRAC_PI_2)),
            ])
            .unwrap(),
            half_length: 2.2,
            half_width: 0.9,
            height: 2.0,
        });
        let spec = quiet_spec();
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        // While crossing the beam: the near flank is at 12 − 0.9 = 11.1 m.
        let during = simulate_scan(&world, &pose, 2.0, &spec, 1);
        let p = &during.points[ray_index(11, 0)];
        assert!(p.valid);
        assert!((p.range - 11.1).abs() < 1e-9, "flank at {}", p.range);
        assert_eq!(during.truth[ray_index(11, 0)], Truth::Obstacle);
        // Long gone: the horizontal ray hits nothing.
        let after = simulate_scan(&world, &pose, 4.0, &spec, 1);
        assert!(!after.points[ray_index(11, 0)].valid);
    }

    #[test]
    fn oriented_vehicle_presents_its_rotated_silhouette() {
        let mut world = flat_world();
        // Heading 90°: the length runs along world y, so the beam at azimuth
        // 0 meets the half-width flank at 9 − 0.9 = 8.1 m.
        world.vehicles.push(MovingVehicle {
            trajectory: Trajectory::new(vec![(0.0, Pose2D::new(9.0, 0.0, std::f64::consts::FRAC_PI_2))])
                .unwrap(),
            half_length: 2.2,
            half_width: 0.9,
            height: 2.0,
        });
        let scan = simulate_scan(&world, &Pose2D::new(0.0, 0.0, 0.0), 0.0, &quiet_spec(), 1);
        let p = &scan.points[ray_index(11, 0)];
        assert!(p.valid);
        assert!((p.range - 8.1).abs() < 1e-9, "rotated flank at {}", p.range);
        // At 90° azimuth the beam passes beside the car and stays unreturned.
        assert!(!scan.points[ray_index(11, 450)].valid);
    }

    #[test]
    fn full_dropout_invalidates_every_point() {
        let world = flat_world();
        let spec = SensorSpec { dropout: 1.0, ..SensorSpec::default() };
        let scan = simulate_scan(&world, &Pose2D::new(0.0, 0.0, 0.0), 0.0, &spec, 9);
        assert!(scan.points.iter().all(|p| !p.valid));
        // Geometry truth is still recorded for rays that would have returned.
        assert!(scan.truth.iter().any(|t| t.is_ground()));
    }

    #[test]
    fn scans_are_deterministic_per_seed() {
        let world = generate_world(4, &WorldConfig::default()).unwrap();
        let spec = SensorSpec::default();
        let pose = world.ego.pose_at(1.0);
        let a = simulate_scan(&world, &pose, 1.0, &spec, 33);
        let b = simulate_scan(&world, &pose, 1.0, &spec, 33);
        assert_eq!(a, b);
        let c = simulate_scan(&world, &pose, 1.0, &spec, 34);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_only_affects_measurements_not_geometry_truth() {
        let world = flat_world();
        let spec = quiet_spec();
        // Same pose, different seeds, no range noise or dropout: geometry and
        // truth agree bit for bit; only intensity draws differ.
        let a = simulate_scan(&world, &Pose2D::new(0.0, 0.0, 0.0), 0.0, &spec, 1);
        let b = simulate_scan(&world, &Pose2D::new(0.0, 0.0, 0.0), 0.0, &spec, 2);
        assert_eq!(a.truth, b.truth);
        let mut intensity_diff = false;
        for (pa, pb) in a.points.iter().zip(&b.points) {
            assert_eq!(pa.x, pb.x);
            assert_eq!(pa.y, pb.y);
            assert_eq!(pa.z, pb.z);
            assert_eq!(pa.range, pb.range);
            assert_eq!(pa.valid, pb.valid);
            intensity_diff |= pa.intensity != pb.intensity;
        }
        assert!(intensity_diff);
    }

    #[test]
    fn ranges_equal_coordinate_norms_and_truth_partitions() {
        let world = generate_world(8, &WorldConfig::default()).unwrap();
        let pose = world.ego.pose_at(3.0);
        let scan = simulate_scan(&world, &pose, 3.0, &SensorSpec::default(), 5);
        let (mut road, mut offroad, mut obstacle) = (0usize, 0usize, 0usize);
        for (p, t) in scan.points.iter().zip(&scan.truth) {
            if t.is_road() {
                assert!(t.is_ground());
                road += 1;
            }
            if t.is_obstacle() {
                assert!(!t.is_ground());
                obstacle += 1;
            }
            if t.is_ground() && !t.is_road() {
                offroad += 1;
            }
            if p.valid {
                let norm = (p.x * p.x + p.y * p.y + p.z * p.z).sqrt();
                assert!((p.range - norm).abs() < 1e-9);
                assert!(p.intensity >= 0.0);
            }
        }
        assert!(road > 1000, "road returns: {road}");
        assert!(offroad > 1000, "off-road returns: {offroad}");
        assert!(obstacle > 20, "obstacle returns: {obstacle}");
    }

    #[test]
    fn sweep_motion_distorts_and_compensation_restores() {
        let mut world = flat_world();
        // A wall behind the sensor, seen at azimuth 180° halfway through the
        // sweep, by which point the sensor has advanced half a metre.
        world.obstacles.push(Obstacle::Box {
            center: (-21.0, 0.0),
            half_extents: (1.0, 4.0),
            height: 3.0,
        });
        let spec = quiet_spec();
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let speed = 10.0;
        let rigid = simulate_scan(&world, &pose, 0.0, &spec, 1);
        let moving = simulate_scan_with_motion(&world, &pose, 0.0, &spec, 1, speed);
        let idx = ray_index(11, 900);
        let (pr, pm) = (&rigid.points[idx], &moving.points[idx]);
        assert!(pr.valid && pm.valid);
        assert!((pr.x + 20.0).abs() < 1e-9);
        // Distorted: the sensor moved 10 m/s × 0.05 s = 0.5 m toward +x, so
        // the wall reads half a metre farther behind.
        assert!((pm.x + 20.5).abs() < 1e-9, "distorted x {}", pm.x);
        // Compensation maps the moving-sensor measurement back onto the
        // sweep-start frame exactly (fixed world feature, pure translation).
        let fixed = motion_compensate(&moving.points, speed, &SweepConfig::from_rate_hz(10.0).unwrap());
        assert!((fixed[idx].x - pr.x).abs() < 1e-9);
        assert!((fixed[idx].y - pr.y).abs() < 1e-9);
        assert!((fixed[idx].z - pr.z).abs() < 1e-9);
    }

    #[test]
    fn world_generation_rejects_bad_config() {
        let cfg = WorldConfig { sensor_height: 0.0, ..WorldConfig::default() };
        assert!(generate_world(1, &cfg).is_err());
        let cfg = WorldConfig { ego_speed: -1.0, ..WorldConfig::default() };
        assert!(generate_world(1, &cfg).is_err());
    }
}
