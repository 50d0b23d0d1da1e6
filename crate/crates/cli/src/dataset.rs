//! On-disk layout of a dataset directory.
//!
//! ```text
//! <root>/
//!   world/              road map (GeoJSON) + obstacle/trajectory file
//!   scans/scan_000000.csv    per-frame point clouds
//!   scans/truth_000000.csv   per-point ground truth
//!   labels/label_000000.csv  soft labels for accepted frames
//!   map/                per-frame grid snapshots + runtime log
//!   odometry.csv  poses.csv  classifier.params
//!   metrics.csv  train_report.txt  eval_summary.txt
//! ```
//!
//! Frame files are zero-padded to six digits so lexical and numeric order
//! agree. File formats are owned by the library; this module only knows
//! where things live.

use std::path::{Path, PathBuf};

use roadgrid_core::geom::Pose2D;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub struct Dataset {
    root: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct PoseRow {
    frame_index: usize,
    t: f64,
    x: f64,
    y: f64,
    heading: f64,
}

impl Dataset {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn world_dir(&self) -> PathBuf {
        self.root.join("world")
    }

    pub fn scans_dir(&self) -> PathBuf {
        self.root.join("scans")
    }

    pub fn labels_dir(&self) -> PathBuf {
        self.root.join("labels")
    }

    pub fn map_dir(&self) -> PathBuf {
        self.root.join("map")
    }

    pub fn scan_path(&self, k: usize) -> PathBuf {
        self.scans_dir().join(format!("scan_{k:06}.csv"))
    }

    pub fn truth_path(&self, k: usize) -> PathBuf {
        self.scans_dir().join(format!("truth_{k:06}.csv"))
    }

    pub fn label_path(&self, k: usize) -> PathBuf {
        self.labels_dir().join(format!("label_{k:06}.csv"))
    }

    pub fn cluster_path(&self, k: usize) -> PathBuf {
        self.map_dir().join(format!("clusters_{k:06}.csv"))
    }

    pub fn pgm_path(&self, k: usize) -> PathBuf {
        self.map_dir().join(format!("road_{k:06}.pgm"))
    }

    pub fn odometry_path(&self) -> PathBuf {
        self.root.join("odometry.csv")
    }

    pub fn poses_path(&self) -> PathBuf {
        self.root.join("poses.csv")
    }

    pub fn classifier_path(&self) -> PathBuf {
        self.root.join("classifier.params")
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.root.join("metrics.csv")
    }

    pub fn train_report_path(&self) -> PathBuf {
        self.root.join("train_report.txt")
    }

    pub fn eval_summary_path(&self) -> PathBuf {
        self.root.join("eval_summary.txt")
    }

    pub fn runtime_path(&self) -> PathBuf {
        self.map_dir().join("runtime.csv")
    }

    /// Writes the true pose track: `frame_index,t,x,y,heading`.
    pub fn write_poses(&self, times: &[f64], poses: &[Pose2D]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(self.poses_path())?;
        for (k, (&t, p)) in times.iter().zip(poses).enumerate() {
            w.serialize(PoseRow { frame_index: k, t, x: p.x, y: p.y, heading: p.heading })?;
        }
        w.flush().map_err(|e| CliError::Runtime(e.to_string()))?;
        Ok(())
    }

    /// Reads the pose track back, validating the frame numbering.
    pub fn read_poses(&self) -> Result<(Vec<f64>, Vec<Pose2D>), CliError> {
        let path = self.poses_path();
        let mut r = csv::Reader::from_path(&path).map_err(|e| {
            CliError::Runtime(format!("cannot read {}: {e}", path.display()))
        })?;
        let mut times = Vec::new();
        let mut poses = Vec::new();
        for row in r.deserialize() {
            let row: PoseRow = row?;
            if row.frame_index != times.len() {
                return Err(CliError::Runtime(format!(
                    "{}: frame {} out of order (expected {})",
                    path.display(),
                    row.frame_index,
                    times.len()
                )));
            }
            times.push(row.t);
            poses.push(Pose2D::new(row.x, row.y, row.heading));
        }
        if times.is_empty() {
            return Err(CliError::Runtime(format!("{} holds no poses", path.display())));
        }
        Ok((times, poses))
    }

    /// Sorted indices of frames with a scan file on disk.
    pub fn scan_frames(&self) -> Result<Vec<usize>, CliError> {
        list_indices(&self.scans_dir(), "scan_", ".csv")
    }

    /// Sorted indices of frames with a label file on disk.
    pub fn labelled_frames(&self) -> Result<Vec<usize>, CliError> {
        list_indices(&self.labels_dir(), "label_", ".csv")
    }
}

/// Indices of `<prefix>NNNNNN<suffix>` files in `dir`, sorted ascending. A
/// missing directory is an empty dataset, not an error.
fn list_indices(dir: &Path, prefix: &str, suffix: &str) -> Result<Vec<usize>, CliError> {
    let entries = match std::fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(CliError::Runtime(format!("{}: {e}", dir.display()))),
    };
    let mut indices = Vec::new();
    for entry in entries {
        let name = entry?.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(middle) = name.strip_prefix(prefix).and_then(|s| s.strip_suffix(suffix))
        else {
            continue;
        };
        if let Ok(k) = middle.parse::<usize>() {
            indices.push(k);
        }
    }
    indices.sort_unstable();
    Ok(indices)
}
