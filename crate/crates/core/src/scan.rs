//! LIDAR scan representation: point records, dense range images built by
//! spherical projection, and intra-scan forward-motion compensation.
//!
//! A rotating 32-laser sensor observes exactly 32 × (360°/0.2°) = 57,600
//! angular positions per revolution, so a scan maps losslessly onto a dense
//! 32×1800 image: row = ring (0 is the topmost laser), column = azimuth
//! quantized at 0.2°. Cells nothing mapped to carry a zeroed record with
//! `valid = false`.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of laser rings.
pub const RINGS: usize = 32;
/// Azimuth quantization step, degrees.
pub const AZIMUTH_STEP_DEG: f64 = 0.2;
/// Range-image columns: 360° / 0.2°.
pub const COLS: usize = 1800;
/// Channels serialized per range-image cell.
pub const CHANNELS: usize = 8;

/// One LIDAR return in the sensor frame (x forward, y left, z up, origin at
/// the sensor). Invalid records keep their structural fields (ring, azimuth)
/// but have zeroed geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub range: f64,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub ring: u8,
    pub intensity: f64,
    pub valid: bool,
}

impl PointRecord {
    /// Zeroed, invalid record at a given angular position.
    pub fn invalid(ring: u8, azimuth_deg: f64, elevation_deg: f64) -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            range: 0.0,
            azimuth_deg,
            elevation_deg,
            ring,
            intensity: 0.0,
            valid: false,
        }
    }
}

/// Sweep timing of the rotating sensor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Seconds per full revolution (the inverse of the scan rate).
    pub sweep_period_s: f64,
}

impl SweepConfig {
    pub fn from_rate_hz(rate_hz: f64) -> Result<Self> {
        if !(rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!("scan rate must be > 0, got {rate_hz}")));
        }
        Ok(Self { sweep_period_s: 1.0 / rate_hz })
    }

    pub fn rate_hz(&self) -> f64 {
        1.0 / self.sweep_period_s
    }
}

/// Dense 32×1800 image of point records with a validity channel.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeImage {
    cells: Vec<PointRecord>,
}

impl RangeImage {
    pub const ROWS: usize = RINGS;
    pub const COLS: usize = COLS;

    /// All-invalid image.
    pub fn empty() -> Self {
        let cells = (0..RINGS * COLS)
            .map(|i| {
                let ring = (i / COLS) as u8;
                let col = i % COLS;
                PointRecord::invalid(ring, col as f64 * AZIMUTH_STEP_DEG, 0.0)
            })
            .collect();
        Self { cells }
    }

    /// Column index for an azimuth in degrees: floor(azimuth / 0.2°) mod 1800.
    pub fn column(azimuth_deg: f64) -> usize {
        ((azimuth_deg / AZIMUTH_STEP_DEG).floor() as i64).rem_euclid(COLS as i64) as usize
    }

    pub fn get(&self, row: usize, col: usize) -> &PointRecord {
        &self.cells[row * COLS + col]
    }

    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut PointRecord {
        &mut self.cells[row * COLS + col]
    }

    /// Iterator over the valid cells.
    pub fn valid_points(&self) -> impl Iterator<Item = &PointRecord> {
        self.cells.iter().filter(|p| p.valid)
    }

    /// Writes the image as a flat little-endian f64 binary file.
    ///
    /// The first line is a plain-text header of exactly eight
    /// whitespace-separated values:
    /// `rimg <version> <rows> <cols> <channels> <dtype> <endianness> <count>`
    /// e.g. `rimg 1 32 1800 8 f64 LE 460800`. The payload holds `count`
    /// values, row-major over cells, channel order per cell:
    /// x, y, z, azimuth_deg, elevation_deg, range, intensity, validity
    /// (validity is 1.0 or 0.0).
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        let count = RINGS * COLS * CHANNELS;
        writeln!(w, "rimg 1 {RINGS} {COLS} {CHANNELS} f64 LE {count}")?;
        for cell in &self.cells {
            for v in [
                cell.x,
                cell.y,
                cell.z,
                cell.azimuth_deg,
                cell.elevation_deg,
                cell.range,
                cell.intensity,
                if cell.valid { 1.0 } else { 0.0 },
            ] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut file = fs::File::open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Parse("range image missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..newline])
            .map_err(|_| Error::Parse("range image header is not UTF-8".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(Error::Parse(format!(
                "range image header must have 8 values, got {}",
                fields.len()
            )));
        }
        if fields[0] != "rimg" || fields[1] != "1" {
            return Err(Error::Parse(format!("unsupported range image header: {header}")));
        }
        let expect = [RINGS.to_string(), COLS.to_string(), CHANNELS.to_string()];
        if fields[2] != expect[0] || fields[3] != expect[1] || fields[4] != expect[2] {
            return Err(Error::Parse(format!("unexpected range image shape: {header}")));
        }
        if fields[5] != "f64" || fields[6] != "LE" {
            return Err(Error::Parse(format!("unsupported range image encoding: {header}")));
        }
        let count: usize = fields[7]
            .parse()
            .map_err(|_| Error::Parse(format!("bad payload count: {}", fields[7])))?;
        if count != RINGS * COLS * CHANNELS {
            return Err(Error::Parse(format!("unexpected payload count {count}")));
        }
        let payload = &bytes[newline + 1..];
        if payload.len() != count * 8 {
            return Err(Error::Parse(format!(
                "payload is {} bytes, expected {}",
                payload.len(),
                count * 8
            )));
        }
        let mut image = Self::empty();
        for (i, chunk) in payload.chunks_exact(CHANNELS * 8).enumerate() {
            let mut v = [0.0f64; CHANNELS];
            for (k, val) in v.iter_mut().enumerate() {
                *val = f64::from_le_bytes(chunk[k * 8..(k + 1) * 8].try_into().unwrap());
            }
            image.cells[i] = PointRecord {
                x: v[0],
                y: v[1],
                z: v[2],
                azimuth_deg: v[3],
                elevation_deg: v[4],
                range: v[5],
                intensity: v[6],
                ring: (i / COLS) as u8,
                valid: v[7] != 0.0,
            };
        }
        Ok(image)
    }
}

/// Projects points into the dense range image: row = ring,
/// col = floor(azimuth/0.2°) mod 1800. When two points land in the same cell
/// the nearer range wins (nearer returns dominate occlusion). Invalid input
/// points are skipped; untouched cells stay invalid.
pub fn project_to_range_image(points: &[PointRecord]) -> Result<RangeImage> {
    let mut image = RangeImage::empty();
    for p in points {
        if !p.valid {
            continue;
        }
        if p.ring as usize >= RINGS {
            return Err(Error::InvalidArgument(format!("ring {} out of range 0..32", p.ring)));
        }
        if !(0.0..360.0).contains(&p.azimuth_deg) {
            return Err(Error::InvalidArgument(format!(
                "azimuth {} out of range [0, 360)",
                p.azimuth_deg
            )));
        }
        let col = RangeImage::column(p.azimuth_deg);
        let cell = image.get_mut(p.ring as usize, col);
        if !cell.valid || p.range < cell.range {
            *cell = *p;
        }
    }
    Ok(image)
}

/// Compensates forward ego motion during the sweep: a point at azimuth θ was
/// measured Δt = S·θ/360 after scan start from a sensor that had advanced
/// `v_s·Δt`, so its x is shifted by that amount to express it in the
/// scan-start frame. y and z are untouched; platform rotation during the
/// sweep is neglected.
pub fn motion_compensate(
    points: &[PointRecord],
    v_s: f64,
    cfg: &SweepConfig,
) -> Vec<PointRecord> {
    points
        .iter()
        .map(|p| {
            let mut out = *p;
            if p.valid {
                let dt = cfg.sweep_period_s * p.azimuth_deg / 360.0;
                out.x += dt * v_s;
            }
            out
        })
        .collect()
}

/// Writes points to CSV with columns
/// `x,y,z,range,azimuth_deg,elevation_deg,ring,intensity,valid`
/// (valid as 0/1).
pub fn write_points_csv(path: &Path, points: &[PointRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(PointRow::from(p))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads points from the CSV format of [`write_points_csv`].
pub fn read_points_csv(path: &Path) -> Result<Vec<PointRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: PointRow = row?;
        out.push(row.into());
    }
    Ok(out)
}

/// CSV row mirror of [`PointRecord`] with `valid` as 0/1.
#[derive(Serialize, Deserialize)]
struct PointRow {
    x: f64,
    y: f64,
    z: f64,
    range: f64,
    azimuth_deg: f64,
    elevation_deg: f64,
    ring: u8,
    intensity: f64,
    valid: u8,
}

impl From<&PointRecord> for PointRow {
    fn from(p: &PointRecord) -> Self {
        Self {
            x: p.x,
            y: p.y,
            z: p.z,
            range: p.range,
            azimuth_deg: p.azimuth_deg,
            elevation_deg: p.elevation_deg,
            ring: p.ring,
            intensity: p.intensity,
            valid: u8::from(p.valid),
        }
    }
}

impl From<PointRow> for PointRecord {
    fn from(r: PointRow) -> Self {
        Self {
            x: r.x,
            y: r.y,
            z: r.z,
            range: r.range,
            azimuth_deg: r.azimuth_deg,
            elevation_deg: r.elevation_deg,
            ring: r.ring,
            intensity: r.intensity,
            valid: r.valid != 0,
        }
    }
}
