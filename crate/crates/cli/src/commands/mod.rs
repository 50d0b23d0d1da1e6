//! Subcommand implementations and the plumbing they share.

pub mod eval;
pub mod label;
pub mod map;
pub mod postprocess;
pub mod simulate;
pub mod train;

use std::path::PathBuf;

use roadgrid_core::belief::MassFunction;
use roadgrid_core::geom::{Pose2D, Se2};
use roadgrid_core::glr::GlrClassifier;
use roadgrid_core::grid::{step_pipeline, GridConfig, PipelineState, StepOutput};
use roadgrid_core::label::read_labels_csv;
use roadgrid_core::scan::{read_points_csv, PointRecord};
use roadgrid_core::sim::{
    classifier_masses, perfect_masses, point_features, read_truth_csv, read_world, Truth, World,
};

use crate::config::{self, FileConfig, FrameSelection};
use crate::dataset::Dataset;
use crate::CliError;

/// Where per-point masses come from when mapping or evaluating.
pub enum MassSource {
    /// Certainty straight from the simulator's ground truth.
    Perfect,
    /// The trained classifier stored in the dataset.
    Classifier(Box<GlrClassifier>),
}

impl MassSource {
    pub fn resolve(name: &str, ds: &Dataset) -> Result<Self, CliError> {
        match name {
            "perfect" => Ok(Self::Perfect),
            "classifier" => {
                let path = ds.classifier_path();
                let clf = GlrClassifier::read_params(&path).map_err(|e| {
                    CliError::Runtime(format!(
                        "cannot load {}: {e} (run `roadgrid train` first)",
                        path.display()
                    ))
                })?;
                Ok(Self::Classifier(Box::new(clf)))
            }
            other => Err(CliError::Usage(format!(
                "mass source must be `perfect` or `classifier`, got {other:?}"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Perfect => "perfect",
            Self::Classifier(_) => "classifier",
        }
    }

    fn masses(
        &self,
        points: &[PointRecord],
        truth: &[Truth],
    ) -> Result<Vec<MassFunction>, CliError> {
        match self {
            Self::Perfect => Ok(perfect_masses(points, truth)?),
            Self::Classifier(clf) => Ok(classifier_masses(points, clf)?),
        }
    }
}

/// Flags shared by `map` and `eval`: both walk the same dataset with the
/// same grid geometry; they differ only in what they write.
#[derive(clap::Args, Debug)]
pub struct PipelineArgs {
    /// Config file (TOML); its values override flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Dataset directory produced by `simulate`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Frames to process: `all`, one index, or `start..end`.
    #[arg(long, value_name = "SEL")]
    pub frames: Option<String>,
    /// Grid cell edge, meters.
    #[arg(long, value_name = "M")]
    pub grid_cell: Option<f64>,
    /// Height-discount steepness for conflict handling.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Height-discount offset, meters.
    #[arg(long)]
    pub xi: Option<f64>,
}

/// Everything `map`/`eval` need, resolved and validated up front.
pub struct PipelineSetup {
    pub ds: Dataset,
    pub world: World,
    pub poses: Vec<Pose2D>,
    pub times: Vec<f64>,
    pub frames: Vec<usize>,
    pub grid_cfg: GridConfig,
    pub source: MassSource,
}

pub fn pipeline_setup(args: &PipelineArgs) -> Result<PipelineSetup, CliError> {
    let file = config::load(args.config.as_deref())?;
    let out = config::require(config::pick_opt(file.out.clone(), args.out.clone()), "--out")?;
    let ds = Dataset::new(out);

    let selection = FrameSelection::parse(
        &config::pick(file.frames.clone(), args.frames.clone(), "all".to_string()),
    )?;
    let grid_cfg = grid_config(&file, args)?;
    let source_name =
        config::pick(file.mass_source.clone(), None, "perfect".to_string());
    let source = MassSource::resolve(&source_name, &ds)?;

    let world = read_world(&ds.world_dir()).map_err(|e| {
        CliError::Runtime(format!("{}: {e} (run `roadgrid simulate` first)", ds.root().display()))
    })?;
    let (times, poses) = ds.read_poses()?;
    let frames = selection.indices(poses.len())?;
    Ok(PipelineSetup { ds, world, poses, times, frames, grid_cfg, source })
}

fn grid_config(file: &FileConfig, args: &PipelineArgs) -> Result<GridConfig, CliError> {
    let defaults = GridConfig::default();
    let cfg = GridConfig {
        cell: config::pick(file.grid_cell, args.grid_cell, defaults.cell),
        nu: config::pick(file.nu, args.nu, defaults.nu),
        xi: config::pick(file.xi, args.xi, defaults.xi),
        length: file.grid_length.unwrap_or(defaults.length),
        width: file.grid_width.unwrap_or(defaults.width),
        ..defaults
    };
    if !(cfg.cell > 0.0 && cfg.length > 0.0 && cfg.width > 0.0) {
        return Err(CliError::Usage(format!(
            "grid dimensions must be positive (cell {}, length {}, width {})",
            cfg.cell, cfg.length, cfg.width
        )));
    }
    if cfg.cell > cfg.length.min(cfg.width) {
        return Err(CliError::Usage(format!(
            "grid cell {} m exceeds the grid extent {}×{} m",
            cfg.cell, cfg.length, cfg.width
        )));
    }
    if !(cfg.nu.is_finite() && cfg.xi.is_finite() && cfg.nu >= 0.0) {
        return Err(CliError::Usage(format!(
            "height discount must use finite parameters with nu >= 0 (nu {}, xi {})",
            cfg.nu, cfg.xi
        )));
    }
    Ok(cfg)
}

/// Runs the grid pipeline over the selected frames, handing each step to
/// `visit`, and returns the final fused state. Scans load one frame at a
/// time; the ego-motion delta spans from the previously processed frame, so
/// sparse selections stay consistent.
pub fn drive_pipeline(
    setup: &PipelineSetup,
    mut visit: impl FnMut(usize, &PipelineState, &StepOutput) -> Result<(), CliError>,
) -> Result<PipelineState, CliError> {
    let mut state = PipelineState::new(setup.grid_cfg, setup.poses[setup.frames[0]]);
    let mut prev: Option<usize> = None;
    for &k in &setup.frames {
        let points = read_points_csv(&setup.ds.scan_path(k))?;
        let truth = read_truth_csv(&setup.ds.truth_path(k))?;
        let masses = setup.source.masses(&points, &truth)?;
        let pairs: Vec<(PointRecord, MassFunction)> =
            points.iter().copied().zip(masses).collect();
        let delta = match prev {
            None => Se2::identity(),
            Some(p) => Se2::between(&setup.poses[p], &setup.poses[k]),
        };
        let out = step_pipeline(&mut state, &pairs, &delta, setup.poses[k])?;
        visit(k, &state, &out)?;
        prev = Some(k);
    }
    Ok(state)
}

/// Training examples from the labelled frames: classifier inputs paired
/// with soft road-probability targets, striding over valid points.
pub fn labelled_points(
    ds: &Dataset,
    frames: &[usize],
    stride: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>), CliError> {
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for &k in frames {
        let points = read_points_csv(&ds.scan_path(k))?;
        let (labels, _gates) = read_labels_csv(&ds.label_path(k))?;
        if labels.len() != points.len() {
            return Err(CliError::Runtime(format!(
                "frame {k}: {} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        for (p, l) in points.iter().zip(&labels).step_by(stride) {
            if !p.valid {
                continue;
            }
            inputs.push(point_features(p).to_vec());
            targets.push(l.p_road);
        }
    }
    Ok((inputs, targets))
}

/// Classifier inputs from raw scans (no labels), striding over valid points.
pub fn scan_inputs(
    ds: &Dataset,
    frames: &[usize],
    stride: usize,
) -> Result<Vec<Vec<f64>>, CliError> {
    let mut inputs = Vec::new();
    for &k in frames {
        let points = read_points_csv(&ds.scan_path(k))?;
        for p in points.iter().step_by(stride) {
            if p.valid {
                inputs.push(point_features(p).to_vec());
            }
        }
    }
    Ok(inputs)
}
