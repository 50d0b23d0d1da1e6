//! Grid-quality metrics against the vector road map: a binary ground-truth
//! rasterization, a score rewarding confident correct cells, a mean absolute
//! error on the road mass, and the Pearson correlation between the grid's
//! road probability and the truth.
//!
//! All three metrics are restricted to cells that actually received LIDAR
//! returns ([`ObservationMask`]); cells the sensor never saw carry no signal
//! about mapping quality and are excluded rather than averaged in.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::Pose2D;
use crate::grid::{EvidentialGrid, GridConfig};
use crate::vecmap::VectorMap;
use crate::{Error, Result};

/// Road probabilities below this are clamped before the log2 in
/// [`map_score`], keeping a fully wrong cell's penalty finite.
pub const SCORE_PROB_FLOOR: f64 = 1e-9;

/// Binary road raster with the same geometry as the evaluated grid: a cell is
/// true exactly when its center falls inside a mapped road polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthGrid {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl GroundTruthGrid {
    pub fn new(rows: usize, cols: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}×{cols} grid needs {} cells, got {}",
                rows * cols,
                cells.len()
            )));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    /// Number of road cells.
    pub fn road_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// Binary mask of cells that received at least one LIDAR return.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl ObservationMask {
    pub fn new(rows: usize, cols: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}×{cols} mask needs {} cells, got {}",
                rows * cols,
                cells.len()
            )));
        }
        Ok(Self { rows, cols, cells })
    }

    /// Mask of cells with a nonzero accumulated point count.
    pub fn from_grid(grid: &EvidentialGrid) -> Self {
        Self {
            rows: grid.cfg().rows(),
            cols: grid.cfg().cols(),
            cells: grid.counts().iter().map(|&c| c > 0).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    /// Number of observed cells.
    pub fn observed_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// Rasterizes the vector map into the grid frame anchored at `pose`: each
/// cell center is mapped into world coordinates and tested against the road
/// polygons. The pose is trusted as-is (evaluation assumes exact
/// localization).
pub fn ground_truth_grid(map: &VectorMap, pose: &Pose2D, cfg: &GridConfig) -> Result<GroundTruthGrid> {
    if map.polygons.is_empty() {
        return Err(Error::EmptyInput("ground truth needs a map with at least one polygon".into()));
    }
    let (rows, cols) = (cfg.rows(), cfg.cols());
    let mut cells = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let center = cfg.cell_center(row, col);
            cells.push(map.contains(pose.to_world(center)));
        }
    }
    GroundTruthGrid::new(rows, cols, cells)
}

fn check_shapes(grid: &EvidentialGrid, gt: &GroundTruthGrid, mask: &ObservationMask) -> Result<()> {
    let (rows, cols) = (grid.cfg().rows(), grid.cfg().cols());
    if gt.rows != rows || gt.cols != cols || mask.rows != rows || mask.cols != cols {
        return Err(Error::DimensionMismatch(format!(
            "grid {rows}×{cols}, truth {}×{}, mask {}×{} must agree",
            gt.rows, gt.cols, mask.rows, mask.cols
        )));
    }
    Ok(())
}

/// Iterates (road probability, is_road) over masked cells.
fn masked_cells<'a>(
    grid: &'a EvidentialGrid,
    gt: &'a GroundTruthGrid,
    mask: &'a ObservationMask,
) -> impl Iterator<Item = (f64, bool)> + 'a {
    let cols = gt.cols;
    (0..gt.rows * gt.cols).filter(|&i| mask.cells[i]).map(move |i| {
        let (row, col) = (i / cols, i % cols);
        (grid.mass(row, col).plausibility_road(), gt.cells[i])
    })
}

/// Mean per-cell score over observed cells: a road cell with probability p
/// contributes `1 + log2(p)` (1 when certain-road, 0 at p = ½, negative when
/// the grid leans the wrong way), a non-road cell contributes `1 − p`. A
/// perfect confident grid scores 1. Probabilities are clamped to
/// [`SCORE_PROB_FLOOR`] before the log.
pub fn map_score(grid: &EvidentialGrid, gt: &GroundTruthGrid, mask: &ObservationMask) -> Result<f64> {
    check_shapes(grid, gt, mask)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (p, is_road) in masked_cells(grid, gt, mask) {
        sum += if is_road { 1.0 + p.max(SCORE_PROB_FLOOR).log2() } else { 1.0 - p };
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyInput("map score needs at least one observed cell".into()));
    }
    Ok(sum / n as f64)
}

/// Mean absolute deviation of the road mass from the binary truth over
/// observed cells: `Σ |m(R) − 1_road| / n`, in [0, 1], 0 for a perfect
/// certain grid.
pub fn overall_error(grid: &EvidentialGrid, gt: &GroundTruthGrid, mask: &ObservationMask) -> Result<f64> {
    check_shapes(grid, gt, mask)?;
    let cols = gt.cols;
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in (0..gt.rows * gt.cols).filter(|&i| mask.cells[i]) {
        let truth = if gt.cells[i] { 1.0 } else { 0.0 };
        sum += (grid.mass(i / cols, i % cols).road - truth).abs();
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyInput("overall error needs at least one observed cell".into()));
    }
    Ok(sum / n as f64)
}

/// Pearson correlation between the grid's road probability and the binary
/// truth over observed cells. Fails when either side has zero variance
/// (all-road truth, or a constant grid), where the coefficient is undefined.
pub fn cross_correlation(
    grid: &EvidentialGrid,
    gt: &GroundTruthGrid,
    mask: &ObservationMask,
) -> Result<f64> {
    check_shapes(grid, gt, mask)?;
    let pairs: Vec<(f64, f64)> =
        masked_cells(grid, gt, mask).map(|(p, r)| (p, if r { 1.0 } else { 0.0 })).collect();
    if pairs.is_empty() {
        return Err(Error::EmptyInput("correlation needs at least one observed cell".into()));
    }
    let n = pairs.len() as f64;
    let mean_p = pairs.iter().map(|&(p, _)| p).sum::<f64>() / n;
    let mean_g = pairs.iter().map(|&(_, g)| g).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_p = 0.0;
    let mut var_g = 0.0;
    for &(p, g) in &pairs {
        cov += (p - mean_p) * (g - mean_g);
        var_p += (p - mean_p).powi(2);
        var_g += (g - mean_g).powi(2);
    }
    if var_p <= 0.0 || var_g <= 0.0 {
        return Err(Error::Degenerate(
            "correlation is undefined when grid probabilities or truth are constant".into(),
        ));
    }
    Ok(cov / (var_p.sqrt() * var_g.sqrt()))
}

/// F1 score of binary point predictions against binary truth (positive =
/// road). Undefined — and an error — when neither side contains a positive.
pub fn f1_score(predicted: &[bool], actual: &[bool]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch(format!(
            "predictions ({}) vs truth ({})",
            predicted.len(),
            actual.len()
        )));
    }
    let (mut tp, mut fp, mut fal_n) = (0u64, 0u64, 0u64);
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fal_n += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fal_n;
    if denom == 0 {
        return Err(Error::Degenerate("F1 is undefined without any positives".into()));
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

/// One frame's worth of metrics, as written to the evaluation time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub frame_index: usize,
    pub map_score: f64,
    pub overall_error: f64,
    pub cross_correlation: f64,
}

/// Writes the per-frame metric time series as CSV.
pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a metric time series written by [`write_metrics_csv`].
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{Hypothesis, MassFunction};
    use crate::geom::Polygon;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// 4 m × 2 m grid at 0.5 m pitch: 8 × 4 = 32 cells, small enough to
    /// enumerate by hand.
    fn small_cfg() -> GridConfig {
        GridConfig { length: 4.0, width: 2.0, cell: 0.5, ..GridConfig::default() }
    }

    fn full_mask(cfg: &GridConfig) -> ObservationMask {
        ObservationMask::new(cfg.rows(), cfg.cols(), vec![true; cfg.rows() * cfg.cols()]).unwrap()
    }

    /// Truth: road on the left half of the grid (row < rows/2).
    fn half_truth(cfg: &GridConfig) -> GroundTruthGrid {
        let (rows, cols) = (cfg.rows(), cfg.cols());
        let cells = (0..rows * cols).map(|i| i / cols < rows / 2).collect();
        GroundTruthGrid::new(rows, cols, cells).unwrap()
    }

    /// Grid whose cells are fully certain and agree with `gt` everywhere.
    fn perfect_grid(cfg: &GridConfig, gt: &GroundTruthGrid) -> EvidentialGrid {
        let mut grid = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        for row in 0..cfg.rows() {
            for col in 0..cfg.cols() {
                let focal = if gt.get(row, col) { Hypothesis::Road } else { Hypothesis::NotRoad };
                grid.set_cell(row, col, MassFunction::certain(focal));
            }
        }
        grid
    }

    #[test]
    fn perfect_grid_hits_all_three_ideals() {
        let cfg = small_cfg();
        let gt = half_truth(&cfg);
        let grid = perfect_grid(&cfg, &gt);
        let mask = full_mask(&cfg);
        assert!((map_score(&grid, &gt, &mask).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(overall_error(&grid, &gt, &mask).unwrap(), 0.0);
        assert!((cross_correlation(&grid, &gt, &mask).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverted_grid_has_full_anticorrelation() {
        let cfg = small_cfg();
        let gt = half_truth(&cfg);
        let mut grid = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        for row in 0..cfg.rows() {
            for col in 0..cfg.cols() {
                let focal = if gt.get(row, col) { Hypothesis::NotRoad } else { Hypothesis::Road };
                grid.set_cell(row, col, MassFunction::certain(focal));
            }
        }
        let mask = full_mask(&cfg);
        assert!((cross_correlation(&grid, &gt, &mask).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn undecided_road_cell_contributes_zero_score() {
        let cfg = small_cfg();
        let gt = half_truth(&cfg);
        // Mask a single road cell; the grid is vacuous there, so p = ½ and
        // the contribution is 1 + log2(½) = 0.
        let grid = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        let mut cells = vec![false; cfg.rows() * cfg.cols()];
        cells[0] = true;
        assert!(gt.get(0, 0));
        let mask = ObservationMask::new(cfg.rows(), cfg.cols(), cells).unwrap();
        assert!(map_score(&grid, &gt, &mask).unwrap().abs() < 1e-12);
    }

    #[test]
    fn certain_empty_non_road_cell_contributes_one() {
        let cfg = small_cfg();
        let gt = half_truth(&cfg);
        let mut grid = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        let last = cfg.rows() - 1;
        assert!(!gt.get(last, 0));
        grid.set_cell(last, 0, MassFunction::certain(Hypothesis::NotRoad));
        let mut cells = vec![false; cfg.rows() * cfg.cols()];
        cells[last * cfg.cols()] = true;
        let mask = ObservationMask::new(cfg.rows(), cfg.cols(), cells).unwrap();
        assert!((map_score(&grid, &gt, &mask).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_certain_road_cell_pays_the_clamped_penalty() {
        let cfg = small_cfg();
        let gt = half_truth(&cfg);
        // Certain not-road on a road cell: p = 0 clamps to 1e-9.
        let mut grid = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        grid.set_cell(0, 0, MassFunction::certain(Hypothesis::NotRoad));
        let mut cells = vec![false; cfg.rows() * cfg.cols()];
        cells[0] = true;
        let mask = ObservationMask::new(cfg.rows(), cfg.cols(), cells).unwrap();
        let want = 1.0 + SCORE_PROB_FLOOR.log2();
        assert!((map_score(&grid, &gt, &mask).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn vacuous_grid_error_is_road_fraction_of_mask() {
        let cfg = small_cfg();
        let gt = half_truth(&cfg);
        let grid = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        let mask = full_mask(&cfg);
        // |0 − 1_road| sums to the number of road cells.
        let want = gt.road_count() as f64 / mask.observed_count() as f64;
        assert!((overall_error(&grid, &gt, &mask).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn single_cell_error_is_distance_to_truth() {
        let cfg = small_cfg();
        let gt = half_truth(&cfg);
        let mut grid = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        grid.set_cell(0, 0, MassFunction::new(0.3, 0.5, 0.2).unwrap());
        let mut cells = vec![false; cfg.rows() * cfg.cols()];
        cells[0] = true;
        let mask = ObservationMask::new(cfg.rows(), cfg.cols(), cells).unwrap();
        assert!((overall_error(&grid, &gt, &mask).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn metrics_ignore_unmasked_cells_exactly() {
        let cfg = small_cfg();
        let gt = half_truth(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        // Mask a scattered subset.
        let n = cfg.rows() * cfg.cols();
        let mask_cells: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        let mask = ObservationMask::new(cfg.rows(), cfg.cols(), mask_cells.clone()).unwrap();

        let mut base = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        for row in 0..cfg.rows() {
            for col in 0..cfg.cols() {
                let p: f64 = rng.gen();
                base.set_cell(row, col, MassFunction::new(p, 1.0 - p, 0.0).unwrap());
            }
        }
        let mut scrambled = base.clone();
        for row in 0..cfg.rows() {
            for col in 0..cfg.cols() {
                if !mask_cells[row * cfg.cols() + col] {
                    let p: f64 = rng.gen();
                    scrambled.set_cell(row, col, MassFunction::new(0.5 * p, 0.0, 1.0 - 0.5 * p).unwrap());
                }
            }
        }
        assert_eq!(
            map_score(&base, &gt, &mask).unwrap(),
            map_score(&scrambled, &gt, &mask).unwrap()
        );
        assert_eq!(
            overall_error(&base, &gt, &mask).unwrap(),
            overall_error(&scrambled, &gt, &mask).unwrap()
        );
        assert_eq!(
            cross_correlation(&base, &gt, &mask).unwrap(),
            cross_correlation(&scrambled, &gt, &mask).unwrap()
        );
    }

    #[test]
    fn map_score_monotone_in_road_probability() {
        let cfg = small_cfg();
        let gt = half_truth(&cfg);
        let mask = full_mask(&cfg);
        let mut grid = perfect_grid(&cfg, &gt);
        let base = map_score(&grid, &gt, &mask).unwrap();
        // Lowering p on a road cell can only lower the score.
        grid.set_cell(0, 0, MassFunction::new(0.6, 0.4, 0.0).unwrap());
        let lowered = map_score(&grid, &gt, &mask).unwrap();
        assert!(lowered < base);
        // Raising p on a non-road cell can only lower it further.
        let last = cfg.rows() - 1;
        grid.set_cell(last, 0, MassFunction::new(0.4, 0.6, 0.0).unwrap());
        assert!(map_score(&grid, &gt, &mask).unwrap() < lowered);
    }

    #[test]
    fn uncorrelated_grid_has_small_coefficient() {
        let cfg = GridConfig { length: 20.0, width: 10.0, cell: 0.2, ..GridConfig::default() };
        let n = cfg.rows() * cfg.cols();
        assert_eq!(n, 5000);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let truth: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let gt = GroundTruthGrid::new(cfg.rows(), cfg.cols(), truth).unwrap();
        let mut grid = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        for row in 0..cfg.rows() {
            for col in 0..cfg.cols() {
                let p: f64 = rng.gen();
                grid.set_cell(row, col, MassFunction::new(p, 1.0 - p, 0.0).unwrap());
            }
        }
        let mask = full_mask(&cfg);
        let rho = cross_correlation(&grid, &gt, &mask).unwrap();
        assert!(rho.abs() < 0.1, "rho = {rho}");
    }

    #[test]
    fn constant_inputs_are_rejected() {
        let cfg = small_cfg();
        let mask = full_mask(&cfg);
        // Constant truth (all road).
        let all_road =
            GroundTruthGrid::new(cfg.rows(), cfg.cols(), vec![true; cfg.rows() * cfg.cols()]).unwrap();
        let grid = perfect_grid(&cfg, &half_truth(&cfg));
        assert!(matches!(
            cross_correlation(&grid, &all_road, &mask),
            Err(Error::Degenerate(_))
        ));
        // Constant grid (vacuous everywhere → p ≡ ½).
        let vac = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        assert!(matches!(
            cross_correlation(&vac, &half_truth(&cfg), &mask),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn empty_mask_is_rejected() {
        let cfg = small_cfg();
        let gt = half_truth(&cfg);
        let grid = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        let mask =
            ObservationMask::new(cfg.rows(), cfg.cols(), vec![false; cfg.rows() * cfg.cols()]).unwrap();
        assert!(matches!(map_score(&grid, &gt, &mask), Err(Error::EmptyInput(_))));
        assert!(matches!(overall_error(&grid, &gt, &mask), Err(Error::EmptyInput(_))));
        assert!(matches!(cross_correlation(&grid, &gt, &mask), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let cfg = small_cfg();
        let gt = half_truth(&cfg);
        let grid = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        let mask = ObservationMask::new(2, 2, vec![true; 4]).unwrap();
        assert!(matches!(map_score(&grid, &gt, &mask), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn truth_raster_covers_and_clears() {
        let cfg = small_cfg();
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        // Polygon covering the whole grid footprint.
        let big = VectorMap::new(
            vec![Polygon::new(vec![(-50.0, -50.0), (50.0, -50.0), (50.0, 50.0), (-50.0, 50.0)]).unwrap()],
            (0.0, 0.0),
        );
        let gt = ground_truth_grid(&big, &pose, &cfg).unwrap();
        assert_eq!(gt.road_count(), cfg.rows() * cfg.cols());
        // Polygon far away from the grid.
        let far = VectorMap::new(
            vec![Polygon::new(vec![(100.0, 100.0), (101.0, 100.0), (101.0, 101.0), (100.0, 101.0)]).unwrap()],
            (0.0, 0.0),
        );
        let gt = ground_truth_grid(&far, &pose, &cfg).unwrap();
        assert_eq!(gt.road_count(), 0);
    }

    #[test]
    fn ten_meter_road_rasterizes_to_fifty_columns() {
        let cfg = GridConfig::default();
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        // Road running the full grid length, 10 m wide, centered on y = 0:
        // at 0.2 m pitch that is exactly 50 columns of cells.
        let road = VectorMap::new(
            vec![Polygon::new(vec![(-60.0, -5.0), (60.0, -5.0), (60.0, 5.0), (-60.0, 5.0)]).unwrap()],
            (0.0, 0.0),
        );
        let gt = ground_truth_grid(&road, &pose, &cfg).unwrap();
        assert_eq!(gt.road_count(), cfg.rows() * 50);
        // Every row individually holds one 50-cell band.
        for row in [0, cfg.rows() / 2, cfg.rows() - 1] {
            let band: usize = (0..cfg.cols()).filter(|&c| gt.get(row, c)).count();
            assert_eq!(band, 50);
        }
    }

    #[test]
    fn truth_raster_respects_the_pose() {
        let cfg = small_cfg();
        // Sensor sitting at (10, 0) rotated 90°: the cell at local center
        // (cx, cy) looks at world (10 − cy, cx).
        let pose = Pose2D::new(10.0, 0.0, std::f64::consts::FRAC_PI_2);
        let map = VectorMap::new(
            vec![Polygon::new(vec![(9.0, -10.0), (11.0, -10.0), (11.0, 10.0), (9.0, 10.0)]).unwrap()],
            (0.0, 0.0),
        );
        let gt = ground_truth_grid(&map, &pose, &cfg).unwrap();
        for row in 0..cfg.rows() {
            for col in 0..cfg.cols() {
                let (cx, cy) = cfg.cell_center(row, col);
                let world = (10.0 - cy, cx);
                let want = world.0 > 9.0 && world.0 < 11.0;
                assert_eq!(gt.get(row, col), want, "cell ({row},{col}) world {world:?}");
            }
        }
    }

    #[test]
    fn empty_map_is_rejected() {
        let cfg = small_cfg();
        let empty = VectorMap::new(vec![], (0.0, 0.0));
        assert!(matches!(
            ground_truth_grid(&empty, &Pose2D::new(0.0, 0.0, 0.0), &cfg),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn mask_from_grid_tracks_counts() {
        let cfg = small_cfg();
        let mut grid = EvidentialGrid::vacuous(cfg.clone(), Pose2D::new(0.0, 0.0, 0.0));
        grid.set_cell_observed(1, 2, MassFunction::vacuous(), -1.0, 3);
        let mask = ObservationMask::from_grid(&grid);
        assert!(mask.get(1, 2));
        assert_eq!(mask.observed_count(), 1);
    }

    #[test]
    fn metrics_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        let rows = vec![
            MetricsRow { frame_index: 0, map_score: 0.12, overall_error: 0.4, cross_correlation: 0.3 },
            MetricsRow { frame_index: 1, map_score: 0.5, overall_error: 0.2, cross_correlation: 0.71 },
        ];
        write_metrics_csv(&path, &rows).unwrap();
        assert_eq!(read_metrics_csv(&path).unwrap(), rows);
    }

    #[test]
    fn f1_counts_disagreements() {
        // tp=2, fp=1, fn=1 → 2·2 / (4+1+1) = 2/3.
        let pred = [true, true, true, false, false];
        let truth = [true, true, false, true, false];
        assert!((f1_score(&pred, &truth).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f1_score(&[true, false], &[true, false]).unwrap(), 1.0);
    }

    #[test]
    fn f1_rejects_shape_mismatch_and_no_positives() {
        assert!(matches!(f1_score(&[true], &[true, false]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(f1_score(&[false; 4], &[false; 4]), Err(Error::Degenerate(_))));
    }
}
