//! `roadgrid label` — soft road labels for every gated-in scan.

use std::path::PathBuf;

use roadgrid_core::label::{label_scan, write_labels_csv, LabelParams, LocalizationFix};
use roadgrid_core::scan::read_points_csv;
use roadgrid_core::sim::{read_truth_csv, read_world};

use crate::config::{self};
use crate::dataset::Dataset;
use crate::CliError;

#[derive(clap::Args, Debug)]
pub struct LabelArgs {
    /// Config file (TOML); its values override flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Dataset directory produced by `simulate`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Margin added to the localization deviation bound, meters.
    #[arg(long, value_name = "M")]
    pub gamma: Option<f64>,
}

pub fn run(args: &LabelArgs) -> Result<(), CliError> {
    let file = config::load(args.config.as_deref())?;
    let out =
        config::require(config::pick_opt(file.out.clone(), args.out.clone()), "--out")?;
    let ds = Dataset::new(out);

    let defaults = LabelParams::default();
    let mut params = LabelParams {
        gamma: config::pick(file.gamma, args.gamma, defaults.gamma),
        sigma_gate: file.sigma_gate.unwrap_or(defaults.sigma_gate),
        spacing: file.spacing.unwrap_or(defaults.spacing),
        ..defaults
    };
    if params.gamma < 0.0 || params.sigma_gate < 0.0 || params.spacing < 0.0 {
        return Err(CliError::Usage(
            "gamma, sigma_gate and spacing must be nonnegative".into(),
        ));
    }
    // The synthetic drive has no real localization estimate; the configured
    // deviations stand in for one and are checked against the same gate real
    // fixes would face.
    let sigma_n = file.sigma_n.unwrap_or(0.2);
    let sigma_e = file.sigma_e.unwrap_or(0.2);

    let world = read_world(&ds.world_dir()).map_err(|e| {
        CliError::Runtime(format!("{}: {e} (run `roadgrid simulate` first)", ds.root().display()))
    })?;
    let (_times, poses) = ds.read_poses()?;
    let frames = ds.scan_frames()?;
    if frames.is_empty() {
        return Err(CliError::Runtime(format!(
            "no scans under {} (run `roadgrid simulate` first)",
            ds.scans_dir().display()
        )));
    }
    std::fs::create_dir_all(ds.labels_dir())?;

    let mut written = 0usize;
    let mut skipped_variance = 0usize;
    let mut skipped_spacing = 0usize;
    let mut travelled = f64::INFINITY;
    let mut prev_pose: Option<usize> = None;
    for &k in &frames {
        if k >= poses.len() {
            return Err(CliError::Runtime(format!("scan {k} has no pose in poses.csv")));
        }
        if let Some(p) = prev_pose {
            travelled += ((poses[k].x - poses[p].x).powi(2)
                + (poses[k].y - poses[p].y).powi(2))
            .sqrt();
        }
        prev_pose = Some(k);
        params.distance_since_last_label = travelled;

        let points = read_points_csv(&ds.scan_path(k))?;
        let truth = read_truth_csv(&ds.truth_path(k))?;
        if truth.len() != points.len() {
            return Err(CliError::Runtime(format!(
                "frame {k}: {} truth labels for {} points",
                truth.len(),
                points.len()
            )));
        }
        let ground_mask: Vec<bool> = truth.iter().map(|t| t.is_ground()).collect();
        let fix = LocalizationFix { pose: poses[k], sigma_n, sigma_e };
        let (labels, gates) = label_scan(&points, &ground_mask, &fix, &world.map, &params)?;
        if !gates.variance_ok {
            skipped_variance += 1;
            println!("frame {k:06} skipped: localization deviation above the {} m gate", params.sigma_gate);
            continue;
        }
        if !gates.spacing_ok {
            skipped_spacing += 1;
            println!(
                "frame {k:06} skipped: {travelled:.1} m since the last label, need {} m",
                params.spacing
            );
            continue;
        }
        write_labels_csv(&ds.label_path(k), &labels, &gates)?;
        written += 1;
        travelled = 0.0;
    }

    println!(
        "labelled {written} of {} frames into {} (skipped: {skipped_variance} variance, {skipped_spacing} spacing)",
        frames.len(),
        ds.labels_dir().display()
    );
    Ok(())
}
