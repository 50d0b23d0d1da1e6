//! Evidential road-grid mapping pipeline.
//!
//! A 2D grid anchored to the sensor frame accumulates per-point road
//! evidence over time. Each incoming scan is histogrammed into a scan grid
//! (fusing every point's mass into its cell), compared against the
//! accumulated road grid to expose conflicts, cleaned of moving obstacles
//! and of cells whose obstacle has left, and finally fused into the road
//! grid. Ego-motion between scans is handled by resampling the road grid
//! through the inverse of the pose delta.
//!
//! Conflict analysis is the moving-obstacle detector: a cell that was
//! believed road but is now observed not-road (with high mean elevation) is
//! an obstacle; a cell that was believed not-road but is now observed road
//! (low elevation) is a spot an obstacle has vacated. The elevation enters
//! through an exponential discount so that tall returns drive obstacle
//! evidence and ground-level returns drive the vacated case.
//!
//! Per-cell stages are data-parallel; the pipeline itself is a single-writer
//! sequence per scan.

mod cluster;
mod io;

pub use cluster::{label_clusters, max_filter_5x5, ClusterMap, ObsMap};
pub use io::{
    read_cluster_csv, read_grid_csv, write_cluster_csv, write_counts_csv, write_grid_csv,
    write_grid_metadata, write_grid_pgm,
};

use rayon::prelude::*;

use crate::belief::{LogCommonalitySum, MassFunction};
use crate::geom::{Pose2D, Se2};
use crate::scan::PointRecord;
use crate::{Error, Result};

/// Grid geometry and discounting parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    /// Extent along the sensor x axis (forward), meters.
    pub length: f64,
    /// Extent along the sensor y axis (lateral), meters.
    pub width: f64,
    /// Cell pitch, meters.
    pub cell: f64,
    /// Points below this elevation (sensor frame) are ignored, meters.
    pub z_min: f64,
    /// Points above this elevation are ignored, meters.
    pub z_max: f64,
    /// Slope of the elevation discount.
    pub nu: f64,
    /// Elevation offset of the discount, meters.
    pub xi: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { length: 80.0, width: 50.0, cell: 0.2, z_min: -2.5, z_max: 0.0, nu: 4.0, xi: 1.5 }
    }
}

impl GridConfig {
    /// Cells along x. 400 at the defaults.
    pub fn rows(&self) -> usize {
        (self.length / self.cell).round() as usize
    }

    /// Cells along y. 250 at the defaults.
    pub fn cols(&self) -> usize {
        (self.width / self.cell).round() as usize
    }

    /// Grid origin: the low corner of cell (0,0). The grid is centered on
    /// the sensor.
    pub fn origin(&self) -> (f64, f64) {
        (-self.length / 2.0, -self.width / 2.0)
    }

    /// Cell containing a sensor-frame point, if inside the extent.
    pub fn cell_index(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (x0, y0) = self.origin();
        let r = ((x - x0) / self.cell).floor();
        let c = ((y - y0) / self.cell).floor();
        if r >= 0.0 && c >= 0.0 && (r as usize) < self.rows() && (c as usize) < self.cols() {
            Some((r as usize, c as usize))
        } else {
            None
        }
    }

    /// Center of a cell in sensor-frame coordinates.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let (x0, y0) = self.origin();
        (x0 + (row as f64 + 0.5) * self.cell, y0 + (col as f64 + 0.5) * self.cell)
    }
}

/// Road-evidence grid: per-cell mass function, mean elevation of the points
/// that hit the cell, and their count. Anchored to the sensor frame of the
/// scan it was last updated with; `pose` records that frame's world pose.
#[derive(Clone, Debug)]
pub struct EvidentialGrid {
    cfg: GridConfig,
    masses: Vec<MassFunction>,
    z_sum: Vec<f64>,
    count: Vec<u32>,
    pub pose: Pose2D,
}

impl EvidentialGrid {
    pub fn vacuous(cfg: GridConfig, pose: Pose2D) -> Self {
        let n = cfg.rows() * cfg.cols();
        Self {
            cfg,
            masses: vec![MassFunction::vacuous(); n],
            z_sum: vec![0.0; n],
            count: vec![0; n],
            pose,
        }
    }

    pub fn cfg(&self) -> &GridConfig {
        &self.cfg
    }

    fn idx(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.cfg.rows() && col < self.cfg.cols());
        row * self.cfg.cols() + col
    }

    pub fn mass(&self, row: usize, col: usize) -> MassFunction {
        self.masses[self.idx(row, col)]
    }

    pub fn count(&self, row: usize, col: usize) -> u32 {
        self.count[self.idx(row, col)]
    }

    /// Mean elevation of the cell's points; `None` for point-free cells.
    pub fn z_mean(&self, row: usize, col: usize) -> Option<f64> {
        let i = self.idx(row, col);
        (self.count[i] > 0).then(|| self.z_sum[i] / self.count[i] as f64)
    }

    /// Overwrites one cell (testing and fixture construction).
    pub fn set_cell(&mut self, row: usize, col: usize, mass: MassFunction) {
        let i = self.idx(row, col);
        self.masses[i] = mass;
    }

    /// Overwrites one cell including its elevation statistics.
    pub fn set_cell_observed(
        &mut self,
        row: usize,
        col: usize,
        mass: MassFunction,
        z_mean: f64,
        count: u32,
    ) {
        let i = self.idx(row, col);
        self.masses[i] = mass;
        self.count[i] = count;
        self.z_sum[i] = z_mean * count as f64;
    }

    fn reset_cell(&mut self, i: usize) {
        self.masses[i] = MassFunction::vacuous();
        self.z_sum[i] = 0.0;
        self.count[i] = 0;
    }

    pub fn masses(&self) -> &[MassFunction] {
        &self.masses
    }

    pub fn counts(&self) -> &[u32] {
        &self.count
    }

    fn same_shape(&self, other: &EvidentialGrid) -> Result<()> {
        if self.cfg.rows() != other.cfg.rows() || self.cfg.cols() != other.cfg.cols() {
            return Err(Error::DimensionMismatch(format!(
                "grid {}x{} vs {}x{}",
                self.cfg.rows(),
                self.cfg.cols(),
                other.cfg.rows(),
                other.cfg.cols()
            )));
        }
        Ok(())
    }
}

/// Builds the scan grid for one classified scan: every valid point inside
/// the elevation band lands in its cell, all masses of a cell fused through
/// the log-commonality accumulator (order-free, flooring zeros so
/// sensor-noise contradictions dilute instead of annihilating). Cells whose
/// only points fall outside the elevation band stay vacuous and point-free.
pub fn build_scan_grid(
    points: &[(PointRecord, MassFunction)],
    cfg: GridConfig,
    pose: Pose2D,
) -> EvidentialGrid {
    let mut grid = EvidentialGrid::vacuous(cfg, pose);
    let cols = cfg.cols();
    let n = cfg.rows() * cols;
    let mut acc: Vec<LogCommonalitySum> = vec![LogCommonalitySum::new(); n];
    let mut touched: Vec<u32> = Vec::new();
    for (p, m) in points {
        if !p.valid || p.z < cfg.z_min || p.z > cfg.z_max {
            continue;
        }
        let Some((r, c)) = cfg.cell_index(p.x, p.y) else { continue };
        let i = r * cols + c;
        if acc[i].count == 0 {
            touched.push(i as u32);
        }
        acc[i].add(m);
        grid.z_sum[i] += p.z;
        grid.count[i] += 1;
    }
    // Finalizing runs one exp/normalize per touched cell; cells are disjoint.
    let new_masses: Vec<(u32, MassFunction)> = touched
        .par_iter()
        .map(|&i| {
            let m = acc[i as usize]
                .mass()
                .unwrap_or_else(|_| MassFunction::vacuous());
            (i, m)
        })
        .collect();
    for (i, m) in new_masses {
        grid.masses[i as usize] = m;
    }
    grid
}

/// Elevation discount in (0,1]: `min(e^{ν(z̄+ξ)}, 1)`. Returns 1 at and
/// above z̄ = −ξ; decays exponentially below.
pub fn alpha_discount(z_bar: f64, nu: f64, xi: f64) -> f64 {
    (nu * (z_bar + xi)).exp().min(1.0)
}

/// Per-cell conflict masses: `obs[i]` is the belief that a moving obstacle
/// is currently observed at cell i, `displaced[i]` the belief that a
/// previously seen obstacle has left it. Both live on their own binary
/// frames with everything not assigned here on the unknown; the negated
/// hypotheses always carry zero mass.
#[derive(Clone, Debug)]
pub struct ConflictField {
    pub obs: Vec<f64>,
    pub displaced: Vec<f64>,
}

/// Conflict analysis between the current scan grid and the (already
/// reprojected) road grid:
///
/// ```text
/// obs       = α(Z̄)·m_road(R)·m_scan(¬R)        (tall return where road was)
/// displaced = (1−α(Z̄))·m_scan(R)·m_road(¬R)    (ground return where an obstacle was)
/// ```
///
/// Z̄ is the scan cell's mean elevation; scan cells without points
/// contribute zero to both fields.
pub fn conflict_masses(scan: &EvidentialGrid, road: &EvidentialGrid) -> Result<ConflictField> {
    scan.same_shape(road)?;
    let cfg = scan.cfg;
    let n = scan.masses.len();
    let mut obs = vec![0.0; n];
    let mut displaced = vec![0.0; n];
    obs.par_iter_mut()
        .zip(displaced.par_iter_mut())
        .enumerate()
        .for_each(|(i, (o, d))| {
            if scan.count[i] == 0 {
                return;
            }
            let z_bar = scan.z_sum[i] / scan.count[i] as f64;
            let a = alpha_discount(z_bar, cfg.nu, cfg.xi);
            *o = a * road.masses[i].road * scan.masses[i].not_road;
            *d = (1.0 - a) * scan.masses[i].road * road.masses[i].not_road;
        });
    Ok(ConflictField { obs, displaced })
}

/// Resets every road cell whose displaced belief exceeds 0.5 (strictly) to
/// fully unknown — the obstacle that justified its not-road belief has
/// left. Other cells are untouched.
pub fn remove_displaced(road: &mut EvidentialGrid, displaced: &[f64]) -> Result<()> {
    if displaced.len() != road.masses.len() {
        return Err(Error::DimensionMismatch(format!(
            "displaced field {} vs grid {}",
            displaced.len(),
            road.masses.len()
        )));
    }
    for (i, &d) in displaced.iter().enumerate() {
        if d > 0.5 {
            road.reset_cell(i);
        }
    }
    Ok(())
}

/// Moving-obstacle extraction. Thresholds the obstacle field at 0.5
/// (strictly) into a binary map, inflates it with a 5×5 maximum filter,
/// labels 8-connected components in raster discovery order, and resets every
/// clustered cell of the scan grid to fully unknown so obstacle returns
/// never enter the road grid.
pub fn detect_objects(
    scan: &mut EvidentialGrid,
    obs: &[f64],
) -> Result<(ObsMap, ClusterMap)> {
    let rows = scan.cfg.rows();
    let cols = scan.cfg.cols();
    if obs.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "obstacle field {} vs grid {}",
            obs.len(),
            rows * cols
        )));
    }
    let obs_map = ObsMap::from_field(obs, rows, cols, 0.5);
    let inflated = max_filter_5x5(&obs_map);
    let clusters = label_clusters(&inflated);
    for (i, &id) in clusters.ids.iter().enumerate() {
        if id != 0 {
            scan.reset_cell(i);
        }
    }
    Ok((obs_map, clusters))
}

/// Fuses the scan grid into the road grid cell by cell with Dempster's
/// rule; totally conflicting cells reset to fully unknown. Elevation
/// statistics are taken from the scan wherever it has points and kept from
/// the road grid elsewhere.
pub fn fuse_grids(road: &mut EvidentialGrid, scan: &EvidentialGrid) -> Result<()> {
    road.same_shape(scan)?;
    let road_masses = &mut road.masses;
    let road_z = &mut road.z_sum;
    let road_count = &mut road.count;
    road_masses
        .par_iter_mut()
        .zip(road_z.par_iter_mut())
        .zip(road_count.par_iter_mut())
        .enumerate()
        .for_each(|(i, ((m, z), cnt))| {
            *m = m
                .combine(&scan.masses[i])
                .unwrap_or_else(|_| MassFunction::vacuous());
            if scan.count[i] > 0 {
                *z = scan.z_sum[i];
                *cnt = scan.count[i];
            }
        });
    Ok(())
}

/// Resamples the road grid into the current sensor frame. `delta` maps
/// previous-frame coordinates to current-frame coordinates; each new cell
/// center is pulled back through the inverse motion and takes the mass (and
/// elevation statistics) of the old cell containing it. Centers landing
/// outside the old extent give fully unknown cells.
pub fn reproject_grid(road: &EvidentialGrid, delta: &Se2) -> EvidentialGrid {
    let cfg = road.cfg;
    let cols = cfg.cols();
    let back = delta.inverse();
    let mut out = EvidentialGrid::vacuous(cfg, road.pose);
    let masses = &mut out.masses;
    let z_sum = &mut out.z_sum;
    let count = &mut out.count;
    masses
        .par_chunks_mut(cols)
        .zip(z_sum.par_chunks_mut(cols))
        .zip(count.par_chunks_mut(cols))
        .enumerate()
        .for_each(|(r, ((mrow, zrow), crow))| {
            for c in 0..cols {
                let p_new = cfg.cell_center(r, c);
                let p_old = back.apply(p_new);
                if let Some((orow, ocol)) = cfg.cell_index(p_old.0, p_old.1) {
                    let i = orow * cols + ocol;
                    mrow[c] = road.masses[i];
                    zrow[c] = road.z_sum[i];
                    crow[c] = road.count[i];
                }
            }
        });
    out
}

/// Wall-clock seconds spent in each pipeline stage of one step.
#[derive(Clone, Copy, Debug, Default)]
pub struct StageTimings {
    pub reproject_s: f64,
    pub build_s: f64,
    pub conflict_s: f64,
    pub displaced_s: f64,
    pub detect_s: f64,
    pub fuse_s: f64,
}

impl StageTimings {
    pub fn total_s(&self) -> f64 {
        self.reproject_s
            + self.build_s
            + self.conflict_s
            + self.displaced_s
            + self.detect_s
            + self.fuse_s
    }
}

/// Rolling pipeline state: the accumulated road grid.
#[derive(Clone, Debug)]
pub struct PipelineState {
    pub road: EvidentialGrid,
}

impl PipelineState {
    pub fn new(cfg: GridConfig, pose: Pose2D) -> Self {
        Self { road: EvidentialGrid::vacuous(cfg, pose) }
    }
}

/// Output of one pipeline step.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub obs_map: ObsMap,
    pub clusters: ClusterMap,
    pub timings: StageTimings,
}

/// Runs one full mapping step: reproject the road grid by the ego-motion
/// delta, histogram the classified scan, expose conflicts, drop vacated
/// cells, extract moving obstacles (scrubbing them from the scan), and fuse.
/// `pose` is the current sensor world pose, recorded on the road grid.
pub fn step_pipeline(
    state: &mut PipelineState,
    points: &[(PointRecord, MassFunction)],
    delta: &Se2,
    pose: Pose2D,
) -> Result<StepOutput> {
    let cfg = *state.road.cfg();
    let t0 = std::time::Instant::now();
    state.road = reproject_grid(&state.road, delta);
    let t1 = std::time::Instant::now();
    let mut scan = build_scan_grid(points, cfg, pose);
    let t2 = std::time::Instant::now();
    let conflicts = conflict_masses(&scan, &state.road)?;
    let t3 = std::time::Instant::now();
    remove_displaced(&mut state.road, &conflicts.displaced)?;
    let t4 = std::time::Instant::now();
    let (obs_map, clusters) = detect_objects(&mut scan, &conflicts.obs)?;
    let t5 = std::time::Instant::now();
    fuse_grids(&mut state.road, &scan)?;
    let t6 = std::time::Instant::now();
    state.road.pose = pose;
    Ok(StepOutput {
        obs_map,
        clusters,
        timings: StageTimings {
            reproject_s: (t1 - t0).as_secs_f64(),
            build_s: (t2 - t1).as_secs_f64(),
            conflict_s: (t3 - t2).as_secs_f64(),
            displaced_s: (t4 - t3).as_secs_f64(),
            detect_s: (t5 - t4).as_secs_f64(),
            fuse_s: (t6 - t5).as_secs_f64(),
        },
    })
}
