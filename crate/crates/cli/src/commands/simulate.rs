//! `roadgrid simulate` — synthesize a drive and write it out as a dataset.

use std::path::PathBuf;

use roadgrid_core::scan::write_points_csv;
use roadgrid_core::sim::{
    generate_world, simulate_sequence, write_truth_csv, write_world, OdoNoise, RoadFamily,
    SensorSpec, WorldConfig,
};
use roadgrid_core::odometry::write_measurements_csv;

use crate::config::{self};
use crate::dataset::Dataset;
use crate::{invalid_is_usage, CliError};

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    /// Config file (TOML); its values override flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Dataset directory to create.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Road family: straight, curve, junction or roundabout.
    #[arg(long, value_name = "FAMILY")]
    pub world: Option<String>,
    /// Master seed for world generation and all measurement noise.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drive duration, seconds (scans arrive at the sensor rate).
    #[arg(long, value_name = "SECONDS")]
    pub duration: Option<f64>,
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let file = config::load(args.config.as_deref())?;
    let out =
        config::require(config::pick_opt(file.out.clone(), args.out.clone()), "--out")?;
    let seed = config::pick(file.seed, args.seed, 7);
    let family: RoadFamily =
        config::pick(file.world.clone(), args.world.clone(), "straight".to_string())
            .parse()
            .map_err(invalid_is_usage)?;

    let defaults = WorldConfig::default();
    let world_cfg = WorldConfig {
        family,
        duration: config::pick(file.duration, args.duration, defaults.duration),
        road_width: file.road_width.unwrap_or(defaults.road_width),
        road_length: file.road_length.unwrap_or(defaults.road_length),
        sensor_height: file.sensor_height.unwrap_or(defaults.sensor_height),
        ego_speed: file.ego_speed.unwrap_or(defaults.ego_speed),
        static_obstacles: file.static_obstacles.unwrap_or(defaults.static_obstacles),
        moving_vehicles: file.moving_vehicles.unwrap_or(defaults.moving_vehicles),
    };
    let sensor_defaults = SensorSpec::default();
    let spec = SensorSpec {
        max_range: file.max_range.unwrap_or(sensor_defaults.max_range),
        range_sigma: file.range_sigma.unwrap_or(sensor_defaults.range_sigma),
        dropout: file.dropout.unwrap_or(sensor_defaults.dropout),
        ..sensor_defaults
    };
    spec.validate().map_err(invalid_is_usage)?;
    let odo_defaults = OdoNoise::default();
    let noise = OdoNoise {
        speed_sd: file.odo_speed_sd.unwrap_or(odo_defaults.speed_sd),
        heading_sd: file.odo_heading_sd.unwrap_or(odo_defaults.heading_sd),
        yaw_rate_sd: file.odo_yaw_rate_sd.unwrap_or(odo_defaults.yaw_rate_sd),
    };

    let world = generate_world(seed, &world_cfg).map_err(invalid_is_usage)?;
    let seq = simulate_sequence(&world, &spec, &noise, seed).map_err(invalid_is_usage)?;

    let ds = Dataset::new(out);
    std::fs::create_dir_all(ds.scans_dir())?;
    write_world(&ds.world_dir(), &world)?;
    for k in 0..seq.len() {
        let scan = seq.scan(&world, &spec, k);
        write_points_csv(&ds.scan_path(k), &scan.points)?;
        write_truth_csv(&ds.truth_path(k), &scan.truth)?;
    }
    write_measurements_csv(&ds.odometry_path(), &seq.odometry)?;
    ds.write_poses(&seq.frame_times, &seq.poses)?;

    println!(
        "simulated {} frames of {} rays ({} world, seed {}) into {}",
        seq.len(),
        spec.rays_per_scan(),
        world_cfg.family,
        seed,
        ds.root().display()
    );
    Ok(())
}
