//! Automatic soft labelling of LIDAR points from a vector road map.
//!
//! A georeferenced road map plus a GNSS fix with per-axis standard
//! deviations turns every ground point into a training label without human
//! annotation: project the point into the map frame, measure its distance to
//! the nearest road edge, and ask how likely it is that localization error
//! put it on the wrong side. The probability is a Gaussian CDF of the edge
//! distance scaled by a conservative bound on the positional standard
//! deviation. Non-ground points are labelled 0 outright.
//!
//! Scans are only worth labelling when the fix is tight and the platform has
//! moved since the last labelled scan; [`label_scan`] reports both gates so
//! a dataset builder can skip scans without labelling twice.

use serde::{Deserialize, Serialize};

use crate::scan::PointRecord;
use crate::vecmap::VectorMap;
use crate::{Error, Result};

/// GNSS/localization fix: map-frame pose and per-axis standard deviations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalizationFix {
    pub pose: crate::geom::Pose2D,
    /// Northing standard deviation, meters.
    pub sigma_n: f64,
    /// Easting standard deviation, meters.
    pub sigma_e: f64,
}

/// Per-point label: road probability and the ground flag that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftLabel {
    pub p_road: f64,
    pub is_ground: bool,
}

/// Labelling parameters and the state a dataset builder carries between
/// scans.
#[derive(Clone, Copy, Debug)]
pub struct LabelParams {
    /// Margin added to the localization standard-deviation bound, meters.
    pub gamma: f64,
    /// A scan is usable only when both axis standard deviations are below
    /// this, meters.
    pub sigma_gate: f64,
    /// Minimum trajectory arc length between labelled scans, meters.
    pub spacing: f64,
    /// Arc length travelled since the last labelled scan, meters.
    pub distance_since_last_label: f64,
}

impl Default for LabelParams {
    fn default() -> Self {
        Self { gamma: 0.1, sigma_gate: 0.5, spacing: 10.0, distance_since_last_label: f64::INFINITY }
    }
}

/// Scan-level gate outcomes reported by [`label_scan`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelGates {
    /// Both axis standard deviations below the gate.
    pub variance_ok: bool,
    /// Far enough from the last labelled scan.
    pub spacing_ok: bool,
}

impl LabelGates {
    /// The scan should enter the training set.
    pub fn accept(&self) -> bool {
        self.variance_ok && self.spacing_ok
    }
}

/// Conservative bound on the localization standard deviation:
/// `σ_b = max(σ_n, σ_e) + γ`. Using the max of the axes sidesteps the
/// heading ambiguity of a directional model; γ absorbs map and projection
/// error.
pub fn sigma_bound(fix: &LocalizationFix, gamma: f64) -> f64 {
    fix.sigma_n.max(fix.sigma_e) + gamma
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Road probability for one point.
///
/// The point (assumed motion-compensated) is projected into the map frame
/// with the fix's pose; `d` is its distance to the nearest road edge. Ground
/// points get `Φ(d/σ_b)` inside a road polygon and `1 − Φ(d/σ_b)` outside —
/// both 0.5 on the edge, so the label is continuous across it. Non-ground
/// points are 0. A zero σ_b degenerates to a hard inside/outside step (0.5
/// exactly on the edge).
pub fn soft_label(
    point: &PointRecord,
    is_ground: bool,
    fix: &LocalizationFix,
    map: &VectorMap,
    gamma: f64,
) -> Result<SoftLabel> {
    if !is_ground {
        return Ok(SoftLabel { p_road: 0.0, is_ground: false });
    }
    let map_xy = fix.pose.to_world((point.x, point.y));
    let (d, inside) = map.edge_distance(map_xy)?;
    let sigma_b = sigma_bound(fix, gamma);
    let p_road = if sigma_b == 0.0 {
        if d == 0.0 {
            0.5
        } else if inside {
            1.0
        } else {
            0.0
        }
    } else if inside {
        normal_cdf(d / sigma_b)
    } else {
        1.0 - normal_cdf(d / sigma_b)
    };
    Ok(SoftLabel { p_road, is_ground: true })
}

/// Labels every point of one scan and reports the scan-level gates.
///
/// `ground_mask` must have one entry per point (ground detection is an
/// external concern). The returned labels are valid regardless of the gates;
/// the gates say whether the scan belongs in a training set.
pub fn label_scan(
    scan: &[PointRecord],
    ground_mask: &[bool],
    fix: &LocalizationFix,
    map: &VectorMap,
    params: &LabelParams,
) -> Result<(Vec<SoftLabel>, LabelGates)> {
    if ground_mask.len() != scan.len() {
        return Err(Error::DimensionMismatch(format!(
            "ground mask ({}) vs scan ({})",
            ground_mask.len(),
            scan.len()
        )));
    }
    let gates = LabelGates {
        variance_ok: fix.sigma_n < params.sigma_gate && fix.sigma_e < params.sigma_gate,
        spacing_ok: params.distance_since_last_label >= params.spacing,
    };
    let labels = scan
        .iter()
        .zip(ground_mask)
        .map(|(p, &g)| soft_label(p, g, fix, map, params.gamma))
        .collect::<Result<Vec<_>>>()?;
    Ok((labels, gates))
}

#[derive(Serialize, Deserialize)]
struct LabelRow {
    point_index: usize,
    p_road: f64,
    is_ground: u8,
    variance_gate: u8,
    spacing_gate: u8,
}

/// Writes labels as CSV: `point_index,p_road,is_ground,variance_gate,
/// spacing_gate` (the scan-level gate flags are repeated on every row).
pub fn write_labels_csv(
    path: &std::path::Path,
    labels: &[SoftLabel],
    gates: &LabelGates,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (i, l) in labels.iter().enumerate() {
        w.serialize(LabelRow {
            point_index: i,
            p_road: l.p_road,
            is_ground: l.is_ground as u8,
            variance_gate: gates.variance_ok as u8,
            spacing_gate: gates.spacing_ok as u8,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a label CSV written by [`write_labels_csv`].
pub fn read_labels_csv(path: &std::path::Path) -> Result<(Vec<SoftLabel>, LabelGates)> {
    let mut r = csv::Reader::from_path(path)?;
    let mut labels = Vec::new();
    let mut gates = LabelGates { variance_ok: false, spacing_ok: false };
    for row in r.deserialize() {
        let row: LabelRow = row?;
        labels.push(SoftLabel { p_road: row.p_road, is_ground: row.is_ground != 0 });
        gates = LabelGates {
            variance_ok: row.variance_gate != 0,
            spacing_ok: row.spacing_gate != 0,
        };
    }
    Ok((labels, gates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Polygon, Pose2D};
    use proptest::prelude::*;

    fn fix(x: f64, y: f64, heading: f64, sn: f64, se: f64) -> LocalizationFix {
        LocalizationFix { pose: Pose2D::new(x, y, heading), sigma_n: sn, sigma_e: se }
    }

    fn straight_road() -> VectorMap {
        // 10 m wide road along the x axis.
        let rect = Polygon::new(vec![
            (-50.0, -5.0),
            (50.0, -5.0),
            (50.0, 5.0),
            (-50.0, 5.0),
        ])
        .unwrap();
        VectorMap::new(vec![rect], (0.0, 0.0))
    }

    fn ground_point(x: f64, y: f64) -> PointRecord {
        PointRecord {
            x,
            y,
            z: -1.8,
            range: (x * x + y * y).sqrt().max(0.1),
            azimuth_deg: 0.0,
            elevation_deg: -10.0,
            ring: 20,
            intensity: 0.3,
            valid: true,
        }
    }

    #[test]
    fn sigma_bound_examples() {
        assert_eq!(sigma_bound(&fix(0.0, 0.0, 0.0, 0.2, 0.3), 0.1), 0.4);
        assert_eq!(sigma_bound(&fix(0.0, 0.0, 0.0, 0.0, 0.0), 0.0), 0.0);
        assert_eq!(sigma_bound(&fix(0.0, 0.0, 0.0, 0.5, 0.5), 0.1), 0.6);
    }

    /// Numeric-integration oracle for the normal CDF: Simpson's rule on the
    /// density, independent of the erfc route used by the implementation.
    fn normal_cdf_by_quadrature(x: f64) -> f64 {
        let n = 4000;
        let (a, b) = (0.0, x.abs());
        let h = (b - a) / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = pdf(a) + pdf(b);
        for k in 1..n {
            let t = a + k as f64 * h;
            s += pdf(t) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let half = s * h / 3.0;
        if x >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }

    #[test]
    fn normal_cdf_matches_quadrature_oracle() {
        assert!((normal_cdf(2.0) - 0.977_249_868_051_820_8).abs() < 1e-12);
        for &x in &[-3.0, -1.5, -0.5, 0.0, 0.3, 1.0, 2.0, 4.0] {
            let oracle = normal_cdf_by_quadrature(x);
            assert!(
                (normal_cdf(x) - oracle).abs() < 1e-12,
                "x={x}: {} vs {}",
                normal_cdf(x),
                oracle
            );
        }
    }

    #[test]
    fn point_on_edge_gets_half() {
        let map = straight_road();
        let f = fix(0.0, 0.0, 0.0, 0.2, 0.2, );
        let l = soft_label(&ground_point(0.0, 5.0), true, &f, &map, 0.1).unwrap();
        assert!((l.p_road - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inside_two_sigma_matches_cdf() {
        let map = straight_road();
        // σ_b = 0.3 + 0.1 = 0.4; a point 0.8 m from the edge is at 2σ_b.
        let f = fix(0.0, 0.0, 0.0, 0.3, 0.2);
        let l = soft_label(&ground_point(0.0, 4.2), true, &f, &map, 0.1).unwrap();
        assert!((l.p_road - 0.977_249_868_051_820_8).abs() < 1e-9, "{}", l.p_road);
    }

    #[test]
    fn non_ground_is_zero() {
        let map = straight_road();
        let f = fix(0.0, 0.0, 0.0, 0.1, 0.1);
        let l = soft_label(&ground_point(0.0, 0.0), false, &f, &map, 0.1).unwrap();
        assert_eq!(l.p_road, 0.0);
        assert!(!l.is_ground);
    }

    #[test]
    fn zero_sigma_degenerates_to_step() {
        let map = straight_road();
        let f = fix(0.0, 0.0, 0.0, 0.0, 0.0);
        let on_edge = soft_label(&ground_point(0.0, 5.0), true, &f, &map, 0.0).unwrap();
        assert_eq!(on_edge.p_road, 0.5);
        let inside = soft_label(&ground_point(0.0, 0.0), true, &f, &map, 0.0).unwrap();
        assert_eq!(inside.p_road, 1.0);
        let outside = soft_label(&ground_point(0.0, 8.0), true, &f, &map, 0.0).unwrap();
        assert_eq!(outside.p_road, 0.0);
    }

    #[test]
    fn pose_projection_is_applied() {
        let map = straight_road();
        // Sensor sits 30 m down the road, rotated 90°: the sensor-frame
        // point (3, 0) lands at map (30, 3), still inside.
        let f = fix(30.0, 0.0, std::f64::consts::FRAC_PI_2, 0.2, 0.2);
        let l = soft_label(&ground_point(3.0, 0.0), true, &f, &map, 0.1).unwrap();
        // d = 2 m inside, σ_b = 0.3.
        let expected = normal_cdf(2.0 / 0.3);
        assert!((l.p_road - expected).abs() < 1e-9);
    }

    #[test]
    fn variance_gate_rejects_loose_fix() {
        let map = straight_road();
        // Northing variance 0.6 m² → standard deviation 0.775 m: too loose.
        let f = fix(0.0, 0.0, 0.0, 0.6_f64.sqrt(), 0.1);
        let pts = vec![ground_point(0.0, 0.0)];
        let (_, gates) =
            label_scan(&pts, &[true], &f, &map, &LabelParams::default()).unwrap();
        assert!(!gates.variance_ok);
        assert!(!gates.accept());

        let tight = fix(0.0, 0.0, 0.0, 0.2, 0.2);
        let (_, gates) =
            label_scan(&pts, &[true], &tight, &map, &LabelParams::default()).unwrap();
        assert!(gates.variance_ok);
    }

    #[test]
    fn spacing_gate_needs_ten_meters() {
        let map = straight_road();
        let f = fix(0.0, 0.0, 0.0, 0.2, 0.2);
        let pts = vec![ground_point(0.0, 0.0)];
        let params =
            LabelParams { distance_since_last_label: 9.0, ..LabelParams::default() };
        let (_, gates) = label_scan(&pts, &[true], &f, &map, &params).unwrap();
        assert!(!gates.spacing_ok);
        let params =
            LabelParams { distance_since_last_label: 10.0, ..LabelParams::default() };
        let (_, gates) = label_scan(&pts, &[true], &f, &map, &params).unwrap();
        assert!(gates.spacing_ok);
    }

    #[test]
    fn all_non_ground_labels_zero() {
        let map = straight_road();
        let f = fix(0.0, 0.0, 0.0, 0.2, 0.2);
        let pts: Vec<_> = (0..10).map(|i| ground_point(i as f64, 1.0)).collect();
        let (labels, _) =
            label_scan(&pts, &vec![false; 10], &f, &map, &LabelParams::default()).unwrap();
        assert!(labels.iter().all(|l| l.p_road == 0.0 && !l.is_ground));
    }

    #[test]
    fn centerline_points_label_confident_road() {
        let map = straight_road();
        // σ_b = 0.4.
        let f = fix(0.0, 0.0, 0.0, 0.3, 0.25);
        let pts: Vec<_> = (-20..=20).map(|i| ground_point(i as f64, 0.0)).collect();
        let (labels, gates) =
            label_scan(&pts, &vec![true; pts.len()], &f, &map, &LabelParams::default())
                .unwrap();
        assert!(gates.accept());
        // Every centerline point is 5 m from the nearest edge — far beyond
        // the 2 m the 0.999 bound needs at σ_b = 0.4.
        assert!(labels.iter().all(|l| l.p_road >= 0.999), "{:?}", labels[0]);
    }

    #[test]
    fn missing_ground_mask_is_rejected() {
        let map = straight_road();
        let f = fix(0.0, 0.0, 0.0, 0.2, 0.2);
        let pts = vec![ground_point(0.0, 0.0)];
        assert!(label_scan(&pts, &[], &f, &map, &LabelParams::default()).is_err());
    }

    #[test]
    fn labels_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        let labels = vec![
            SoftLabel { p_road: 0.25, is_ground: true },
            SoftLabel { p_road: 0.0, is_ground: false },
        ];
        let gates = LabelGates { variance_ok: true, spacing_ok: false };
        write_labels_csv(&path, &labels, &gates).unwrap();
        let (back, back_gates) = read_labels_csv(&path).unwrap();
        assert_eq!(back, labels);
        assert_eq!(back_gates, gates);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("point_index,p_road,is_ground,variance_gate,spacing_gate"));
    }

    proptest! {
        #[test]
        fn label_monotone_in_distance(
            d1 in 0.0..10.0f64,
            d2 in 0.0..10.0f64,
            sigma in 0.05..2.0f64,
        ) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            // Inside: probability grows with depth into the road.
            prop_assert!(normal_cdf(hi / sigma) >= normal_cdf(lo / sigma));
            // Outside: probability shrinks with distance from the road.
            prop_assert!(1.0 - normal_cdf(hi / sigma) <= 1.0 - normal_cdf(lo / sigma));
        }

        #[test]
        fn map_projection_is_rigid(
            px in -30.0..30.0f64,
            py in -30.0..30.0f64,
            heading in -3.2..3.2f64,
            ax in -20.0..20.0f64,
            ay in -20.0..20.0f64,
            bx in -20.0..20.0f64,
            by in -20.0..20.0f64,
        ) {
            let pose = Pose2D::new(px, py, heading);
            let (awx, awy) = pose.to_world((ax, ay));
            let (bwx, bwy) = pose.to_world((bx, by));
            let before = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
            let after = ((awx - bwx).powi(2) + (awy - bwy).powi(2)).sqrt();
            prop_assert!((before - after).abs() < 1e-9);
        }
    }
}
