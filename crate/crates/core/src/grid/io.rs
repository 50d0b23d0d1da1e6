//! Grid snapshot exports: mass CSV, elevation/count CSV, grayscale PGM,
//! cluster-id CSV, and a plain-text metadata sidecar.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClusterMap, EvidentialGrid, GridConfig};
use crate::belief::MassFunction;
use crate::geom::Pose2D;
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct GridRow {
    row: usize,
    col: usize,
    #[serde(rename = "m_R")]
    m_r: f64,
    #[serde(rename = "m_notR")]
    m_not_r: f64,
    #[serde(rename = "m_omega")]
    m_omega: f64,
}

/// Writes every cell's mass as CSV (`row,col,m_R,m_notR,m_omega`), row-major.
pub fn write_grid_csv(path: &Path, grid: &EvidentialGrid) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let cols = grid.cfg().cols();
    for (i, m) in grid.masses().iter().enumerate() {
        w.serialize(GridRow {
            row: i / cols,
            col: i % cols,
            m_r: m.road,
            m_not_r: m.not_road,
            m_omega: m.omega,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a mass CSV written by [`write_grid_csv`] into a grid with the given
/// geometry (counts and elevations are not part of the mass CSV).
pub fn read_grid_csv(path: &Path, cfg: GridConfig, pose: Pose2D) -> Result<EvidentialGrid> {
    let mut grid = EvidentialGrid::vacuous(cfg, pose);
    let mut r = csv::Reader::from_path(path)?;
    for row in r.deserialize() {
        let row: GridRow = row?;
        if row.row >= cfg.rows() || row.col >= cfg.cols() {
            return Err(Error::Parse(format!(
                "cell ({},{}) outside {}x{} grid",
                row.row,
                row.col,
                cfg.rows(),
                cfg.cols()
            )));
        }
        grid.set_cell(row.row, row.col, MassFunction::new(row.m_r, row.m_not_r, row.m_omega)?);
    }
    Ok(grid)
}

#[derive(Serialize)]
struct CountRow {
    row: usize,
    col: usize,
    count: u32,
    z_mean: f64,
}

/// Writes per-cell observation statistics as CSV (`row,col,count,z_mean`);
/// point-free cells write a NaN elevation.
pub fn write_counts_csv(path: &Path, grid: &EvidentialGrid) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let cols = grid.cfg().cols();
    for i in 0..grid.masses().len() {
        let (row, col) = (i / cols, i % cols);
        w.serialize(CountRow {
            row,
            col,
            count: grid.count(row, col),
            z_mean: grid.z_mean(row, col).unwrap_or(f64::NAN),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the road-belief channel m(R) as a binary 8-bit PGM (`P5`), one
/// pixel per cell, 255 = certain road. Image width is the grid's column
/// count, height its row count.
pub fn write_grid_pgm(path: &Path, grid: &EvidentialGrid) -> Result<()> {
    let rows = grid.cfg().rows();
    let cols = grid.cfg().cols();
    let mut buf = Vec::with_capacity(rows * cols + 32);
    write!(buf, "P5\n{cols} {rows}\n255\n")?;
    for m in grid.masses() {
        buf.push((m.road * 255.0).round().clamp(0.0, 255.0) as u8);
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// Writes a cluster map as CSV: one line per grid row, comma-separated ids.
pub fn write_cluster_csv(path: &Path, clusters: &ClusterMap) -> Result<()> {
    let mut out = String::new();
    for r in 0..clusters.rows {
        let row = &clusters.ids[r * clusters.cols..(r + 1) * clusters.cols];
        let line: Vec<String> = row.iter().map(|id| id.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a cluster CSV written by [`write_cluster_csv`].
pub fn read_cluster_csv(path: &Path) -> Result<ClusterMap> {
    let text = std::fs::read_to_string(path)?;
    let mut ids = Vec::new();
    let mut rows = 0usize;
    let mut cols = None;
    for line in text.lines() {
        let row: std::result::Result<Vec<u32>, _> =
            line.split(',').map(|t| t.trim().parse::<u32>()).collect();
        let row = row.map_err(|e| Error::Parse(format!("bad cluster id: {e}")))?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Parse(format!(
                    "ragged cluster CSV: {} vs {}",
                    row.len(),
                    c
                )))
            }
            _ => {}
        }
        ids.extend(row);
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    let count = ids.iter().copied().max().unwrap_or(0);
    Ok(ClusterMap { rows, cols, ids, count })
}

/// Writes the plain-text sidecar describing a snapshot: grid geometry,
/// anchor pose, and the frame timestamp.
pub fn write_grid_metadata(path: &Path, grid: &EvidentialGrid, frame_time_s: f64) -> Result<()> {
    let cfg = grid.cfg();
    let mut s = String::new();
    s.push_str("road-grid-snapshot v1\n");
    s.push_str(&format!("rows {}\ncols {}\ncell_m {}\n", cfg.rows(), cfg.cols(), cfg.cell));
    s.push_str(&format!("length_m {}\nwidth_m {}\n", cfg.length, cfg.width));
    s.push_str(&format!("z_band_m {} {}\n", cfg.z_min, cfg.z_max));
    s.push_str(&format!("discount_nu {}\ndiscount_xi {}\n", cfg.nu, cfg.xi));
    s.push_str(&format!(
        "pose_xytheta {} {} {}\n",
        grid.pose.x, grid.pose.y, grid.pose.heading
    ));
    s.push_str(&format!("frame_time_s {frame_time_s}\n"));
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{label_clusters, ObsMap};

    fn sample_grid() -> EvidentialGrid {
        let cfg = GridConfig { length: 4.0, width: 2.0, ..GridConfig::default() };
        let mut g = EvidentialGrid::vacuous(cfg, Pose2D::new(1.0, 2.0, 0.3));
        g.set_cell_observed(3, 4, MassFunction { road: 0.7, not_road: 0.1, omega: 0.2 }, -1.5, 9);
        g.set_cell(0, 0, MassFunction { road: 0.0, not_road: 0.9, omega: 0.1 });
        g
    }

    #[test]
    fn grid_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        let g = sample_grid();
        write_grid_csv(&path, &g).unwrap();
        let back = read_grid_csv(&path, *g.cfg(), g.pose).unwrap();
        assert_eq!(back.masses(), g.masses());
        let head = std::fs::read_to_string(&path).unwrap();
        assert!(head.starts_with("row,col,m_R,m_notR,m_omega"));
    }

    #[test]
    fn pgm_has_correct_header_and_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.pgm");
        let g = sample_grid();
        write_grid_pgm(&path, &g).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P5\n10 20\n255\n"; // cols=2/0.2=10, rows=4/0.2=20
        assert!(bytes.starts_with(header));
        let payload = &bytes[header.len()..];
        assert_eq!(payload.len(), 200);
        assert_eq!(payload[3 * 10 + 4], (0.7f64 * 255.0).round() as u8);
        assert_eq!(payload[0], 0);
    }

    #[test]
    fn cluster_csv_round_trip() {
        let mut map = ObsMap { rows: 6, cols: 5, cells: vec![false; 30] };
        map.cells[7] = true;
        map.cells[8] = true;
        map.cells[22] = true;
        let clusters = label_clusters(&map);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clusters.csv");
        write_cluster_csv(&path, &clusters).unwrap();
        let back = read_cluster_csv(&path).unwrap();
        assert_eq!(back, clusters);
    }

    #[test]
    fn metadata_sidecar_lists_geometry_and_pose() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.txt");
        let g = sample_grid();
        write_grid_metadata(&path, &g, 12.5).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("rows 20"));
        assert!(text.contains("cols 10"));
        assert!(text.contains("cell_m 0.2"));
        assert!(text.contains("pose_xytheta 1 2 0.3"));
        assert!(text.contains("frame_time_s 12.5"));
    }

    #[test]
    fn counts_csv_marks_empty_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("counts.csv");
        let g = sample_grid();
        write_counts_csv(&path, &g).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("row,col,count,z_mean"));
        assert!(text.contains("3,4,9,-1.5"));
        assert!(text.contains("0,0,0,NaN"));
    }
}
