//! Persistence for simulated worlds and per-point ground truth.
//!
//! A world is stored as a directory: `map.geojson` holds the road polygons
//! in the same GeoJSON dialect the mapping pipeline consumes, and
//! `world.txt` holds everything the GeoJSON cannot express — sensor height,
//! clutter, and the trajectories — in a line-oriented text format whose
//! floats round-trip exactly through `Display`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::Pose2D;
use crate::vecmap::VectorMap;
use crate::{Error, Result};

use super::{MovingVehicle, Obstacle, Trajectory, Truth, World};

const WORLD_HEADER: &str = "world-description v1";

/// Writes `map.geojson` and `world.txt` into `dir`, creating it if needed.
pub fn write_world(dir: &Path, world: &World) -> Result<()> {
    fs::create_dir_all(dir)?;
    world.map.write_geojson(&dir.join("map.geojson"))?;

    let mut out = String::new();
    writeln!(out, "{WORLD_HEADER}").unwrap();
    writeln!(out, "sensor_height {}", world.sensor_height).unwrap();
    for ob in &world.obstacles {
        match *ob {
            Obstacle::Box { center, half_extents, height } => {
                writeln!(
                    out,
                    "obstacle box {} {} {} {} {}",
                    center.0, center.1, half_extents.0, half_extents.1, height
                )
                .unwrap();
            }
            Obstacle::Cylinder { center, radius, height } => {
                writeln!(out, "obstacle cylinder {} {} {} {}", center.0, center.1, radius, height)
                    .unwrap();
            }
        }
    }
    for v in &world.vehicles {
        writeln!(
            out,
            "vehicle {} {} {} {}",
            v.half_length,
            v.half_width,
            v.height,
            v.trajectory.keys().len()
        )
        .unwrap();
        write_keys(&mut out, &v.trajectory);
    }
    writeln!(out, "ego {}", world.ego.keys().len()).unwrap();
    write_keys(&mut out, &world.ego);
    fs::write(dir.join("world.txt"), out)?;
    Ok(())
}

fn write_keys(out: &mut String, trajectory: &Trajectory) {
    for (t, pose) in trajectory.keys() {
        writeln!(out, "key {} {} {} {}", t, pose.x, pose.y, pose.heading).unwrap();
    }
}

/// Reads a world directory written by [`write_world`].
pub fn read_world(dir: &Path) -> Result<World> {
    let map = VectorMap::read_geojson(&dir.join("map.geojson"))?;
    let text = fs::read_to_string(dir.join("world.txt"))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());

    let (_, header) = lines.next().ok_or_else(|| Error::Parse("world.txt is empty".into()))?;
    if header.trim() != WORLD_HEADER {
        return Err(Error::Parse(format!("unrecognized world.txt header {:?}", header.trim())));
    }

    let (n, line) = lines.next().ok_or_else(|| Error::Parse("world.txt ends before sensor_height".into()))?;
    let sensor_height = match line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["sensor_height", h] => parse_float(h, n)?,
        _ => return Err(parse_err(n, "expected `sensor_height <m>`")),
    };

    let mut obstacles = Vec::new();
    let mut vehicles = Vec::new();
    let mut ego = None;
    while let Some((n, line)) = lines.next() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["obstacle", "box", cx, cy, hx, hy, height] => obstacles.push(Obstacle::Box {
                center: (parse_float(cx, n)?, parse_float(cy, n)?),
                half_extents: (parse_float(hx, n)?, parse_float(hy, n)?),
                height: parse_float(height, n)?,
            }),
            ["obstacle", "cylinder", cx, cy, radius, height] => {
                obstacles.push(Obstacle::Cylinder {
                    center: (parse_float(cx, n)?, parse_float(cy, n)?),
                    radius: parse_float(radius, n)?,
                    height: parse_float(height, n)?,
                })
            }
            ["vehicle", hl, hw, height, count] => {
                let trajectory = read_keys(&mut lines, parse_count(count, n)?, n)?;
                vehicles.push(MovingVehicle {
                    trajectory,
                    half_length: parse_float(hl, n)?,
                    half_width: parse_float(hw, n)?,
                    height: parse_float(height, n)?,
                });
            }
            ["ego", count] => {
                if ego.is_some() {
                    return Err(parse_err(n, "duplicate ego trajectory"));
                }
                ego = Some(read_keys(&mut lines, parse_count(count, n)?, n)?);
            }
            _ => return Err(parse_err(n, "unrecognized record")),
        }
    }

    let ego = ego.ok_or_else(|| Error::Parse("world.txt has no ego trajectory".into()))?;
    Ok(World { map, obstacles, vehicles, ego, sensor_height })
}

fn read_keys<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    count: usize,
    header_line: usize,
) -> Result<Trajectory> {
    let mut keys = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, line) = lines
            .next()
            .ok_or_else(|| parse_err(header_line, "trajectory truncated before all keys were read"))?;
        match line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["key", t, x, y, heading] => keys.push((
                parse_float(t, n)?,
                Pose2D::new(parse_float(x, n)?, parse_float(y, n)?, parse_float(heading, n)?),
            )),
            _ => return Err(parse_err(n, "expected `key <t> <x> <y> <heading>`")),
        }
    }
    Trajectory::new(keys)
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| parse_err(line, &format!("bad float {s:?}")))
}

fn parse_count(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| parse_err(line, &format!("bad count {s:?}")))
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse(format!("world.txt line {}: {}", line + 1, msg))
}

#[derive(Serialize, Deserialize)]
struct TruthRow {
    point_index: usize,
    label: String,
}

fn truth_label(t: Truth) -> &'static str {
    match t {
        Truth::NoReturn => "no_return",
        Truth::Ground { road: true } => "ground_road",
        Truth::Ground { road: false } => "ground_offroad",
        Truth::Obstacle => "obstacle",
    }
}

/// Writes per-point truth labels as CSV (`point_index,label`).
pub fn write_truth_csv(path: &Path, truth: &[Truth]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (i, &t) in truth.iter().enumerate() {
        w.serialize(TruthRow { point_index: i, label: truth_label(t).to_owned() })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads truth labels written by [`write_truth_csv`]. Rows must be in point
/// order starting at zero.
pub fn read_truth_csv(path: &Path) -> Result<Vec<Truth>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: TruthRow = row?;
        if row.point_index != out.len() {
            return Err(Error::Parse(format!(
                "truth CSV out of order: expected point {} got {}",
                out.len(),
                row.point_index
            )));
        }
        out.push(match row.label.as_str() {
            "no_return" => Truth::NoReturn,
            "ground_road" => Truth::Ground { road: true },
            "ground_offroad" => Truth::Ground { road: false },
            "obstacle" => Truth::Obstacle,
            other => return Err(Error::Parse(format!("unknown truth label {other:?}"))),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_world, RoadFamily, WorldConfig};

    #[test]
    fn world_round_trips_through_directory() {
        for (i, family) in [
            RoadFamily::Straight,
            RoadFamily::Curve,
            RoadFamily::Junction,
            RoadFamily::Roundabout,
        ]
        .into_iter()
        .enumerate()
        {
            let cfg = WorldConfig { family, ..WorldConfig::default() };
            let world = generate_world(40 + i as u64, &cfg).unwrap();
            let dir = tempfile::tempdir().unwrap();
            write_world(dir.path(), &world).unwrap();
            let back = read_world(dir.path()).unwrap();
            assert_eq!(world, back, "{family} world changed across a save/load cycle");
        }
    }

    #[test]
    fn truth_labels_round_trip() {
        let truth = vec![
            Truth::NoReturn,
            Truth::Ground { road: true },
            Truth::Ground { road: false },
            Truth::Obstacle,
            Truth::Ground { road: true },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.csv");
        write_truth_csv(&path, &truth).unwrap();
        assert_eq!(read_truth_csv(&path).unwrap(), truth);
    }

    #[test]
    fn corrupt_world_files_are_rejected() {
        let world = generate_world(7, &WorldConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_world(dir.path(), &world).unwrap();

        let path = dir.path().join("world.txt");
        let good = std::fs::read_to_string(&path).unwrap();

        // Wrong header.
        std::fs::write(&path, good.replacen("v1", "v2", 1)).unwrap();
        assert!(read_world(dir.path()).is_err());

        // Truncated trajectory: drop the last key line.
        let truncated: Vec<&str> = good.trim_end().lines().collect();
        std::fs::write(&path, truncated[..truncated.len() - 1].join("\n")).unwrap();
        assert!(read_world(dir.path()).is_err());

        // Garbage record.
        std::fs::write(&path, format!("{good}gravel pit\n")).unwrap();
        assert!(read_world(dir.path()).is_err());
        std::fs::write(&path, good).unwrap();
        assert!(read_world(dir.path()).is_ok());
    }

    #[test]
    fn unknown_truth_label_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.csv");
        std::fs::write(&path, "point_index,label\n0,mystery\n").unwrap();
        assert!(read_truth_csv(&path).is_err());
    }
}
