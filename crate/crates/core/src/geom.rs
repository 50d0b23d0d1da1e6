//! Planar geometry shared across the crate: poses, rigid transforms, and
//! polygon containment/distance tests.
//!
//! Conventions: world coordinates are meters (x = easting, y = northing),
//! headings are radians counter-clockwise from +x. A pose's local frame has
//! +x along the heading.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Planar pose: position in meters, heading in radians CCW from +x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    /// Maps a point expressed in this pose's local frame to the world frame.
    pub fn to_world(&self, p: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.heading.sin_cos();
        (self.x + c * p.0 - s * p.1, self.y + s * p.0 + c * p.1)
    }

    /// Maps a world-frame point into this pose's local frame.
    pub fn to_local(&self, p: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.heading.sin_cos();
        let dx = p.0 - self.x;
        let dy = p.1 - self.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }
}

/// Rigid planar motion: rotation by `rot` followed by translation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Se2 {
    pub rot: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Se2 {
    pub fn identity() -> Self {
        Self { rot: 0.0, tx: 0.0, ty: 0.0 }
    }

    pub fn new(rot: f64, tx: f64, ty: f64) -> Self {
        Self { rot, tx, ty }
    }

    /// Coordinate transform taking points expressed in `prev`'s frame to the
    /// same physical points expressed in `cur`'s frame (both poses given in a
    /// common world frame). E.g. moving 1 m forward makes a point that was at
    /// the old origin appear at (−1, 0) in the new frame.
    pub fn between(prev: &Pose2D, cur: &Pose2D) -> Self {
        let rot = prev.heading - cur.heading;
        let (s, c) = cur.heading.sin_cos();
        let dx = prev.x - cur.x;
        let dy = prev.y - cur.y;
        Self { rot, tx: c * dx + s * dy, ty: -s * dx + c * dy }
    }

    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.rot.sin_cos();
        (c * p.0 - s * p.1 + self.tx, s * p.0 + c * p.1 + self.ty)
    }

    pub fn inverse(&self) -> Self {
        let (s, c) = self.rot.sin_cos();
        Self {
            rot: -self.rot,
            tx: -(c * self.tx + s * self.ty),
            ty: -(-s * self.tx + c * self.ty),
        }
    }
}

/// Simple (non-self-intersecting) polygon with at least three vertices.
/// Vertices are in meters; closure is implicit (do not repeat the first
/// vertex).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "polygon needs ≥ 3 vertices, got {}",
                vertices.len()
            )));
        }
        Ok(Self { vertices })
    }

    /// Even-odd (crossing-number) containment test. Points exactly on the
    /// boundary may land on either side; callers that care pair this with
    /// [`Self::boundary_distance`] (d = 0 on the boundary).
    pub fn contains(&self, p: (f64, f64)) -> bool {
        let v = &self.vertices;
        let mut inside = false;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            let (xi, yi) = v[i];
            let (xj, yj) = v[j];
            if (yi > p.1) != (yj > p.1) {
                let x_cross = xi + (p.1 - yi) * (xj - xi) / (yj - yi);
                if p.0 < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Minimum distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: (f64, f64)) -> f64 {
        let v = &self.vertices;
        let mut best = f64::INFINITY;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            best = best.min(segment_distance(p, v[j], v[i]));
            j = i;
        }
        best
    }
}

/// Distance from point `p` to the segment `a`–`b`.
pub fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let (apx, apy) = (p.0 - a.0, p.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 { ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (cx, cy) = (a.0 + t * abx - p.0, a.1 + t * aby - p.1);
    (cx * cx + cy * cy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit_square() -> Polygon {
        Polygon::new(vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).unwrap()
    }

    #[test]
    fn polygon_requires_three_vertices() {
        assert!(Polygon::new(vec![(0.0, 0.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn square_containment() {
        let sq = unit_square();
        assert!(sq.contains((0.5, 0.5)));
        assert!(!sq.contains((1.5, 0.5)));
        assert!(!sq.contains((-0.1, 0.5)));
    }

    #[test]
    fn square_boundary_distance() {
        let sq = unit_square();
        assert!((sq.boundary_distance((0.5, 0.5)) - 0.5).abs() < 1e-12);
        assert!((sq.boundary_distance((2.0, 0.5)) - 1.0).abs() < 1e-12);
        assert!(sq.boundary_distance((1.0, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn segment_distance_cases() {
        // Perpendicular foot inside the segment.
        assert!((segment_distance((0.5, 1.0), (0.0, 0.0), (1.0, 0.0)) - 1.0).abs() < 1e-12);
        // Clamped to an endpoint.
        assert!((segment_distance((2.0, 0.0), (0.0, 0.0), (1.0, 0.0)) - 1.0).abs() < 1e-12);
        // Degenerate zero-length segment.
        assert!((segment_distance((3.0, 4.0), (0.0, 0.0), (0.0, 0.0)) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn between_pure_forward_translation() {
        let prev = Pose2D::new(0.0, 0.0, 0.0);
        let cur = Pose2D::new(1.0, 0.0, 0.0);
        let d = Se2::between(&prev, &cur);
        assert!((d.rot).abs() < 1e-15);
        assert!((d.tx + 1.0).abs() < 1e-15);
        assert!((d.ty).abs() < 1e-15);
    }

    #[test]
    fn between_pure_rotation() {
        let prev = Pose2D::new(2.0, 3.0, 0.0);
        let cur = Pose2D::new(2.0, 3.0, FRAC_PI_2);
        let d = Se2::between(&prev, &cur);
        assert!((d.rot + FRAC_PI_2).abs() < 1e-15);
        assert!(d.tx.abs() < 1e-15 && d.ty.abs() < 1e-15);
        // A point 1 m ahead of the old heading is 1 m to the right of the new.
        let p = d.apply((1.0, 0.0));
        assert!((p.0 - 0.0).abs() < 1e-12 && (p.1 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pose_world_local_round_trip() {
        let pose = Pose2D::new(5.0, -2.0, 0.7);
        let p = (3.3, 1.1);
        let w = pose.to_world(p);
        let back = pose.to_local(w);
        assert!((back.0 - p.0).abs() < 1e-12 && (back.1 - p.1).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn se2_preserves_pairwise_distances(
            rot in -3.0..3.0f64, tx in -50.0..50.0f64, ty in -50.0..50.0f64,
            ax in -50.0..50.0f64, ay in -50.0..50.0f64,
            bx in -50.0..50.0f64, by in -50.0..50.0f64,
        ) {
            let t = Se2::new(rot, tx, ty);
            let (a2, b2) = (t.apply((ax, ay)), t.apply((bx, by)));
            let before = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
            let after = ((a2.0 - b2.0).powi(2) + (a2.1 - b2.1).powi(2)).sqrt();
            prop_assert!((before - after).abs() < 1e-9);
        }

        #[test]
        fn se2_inverse_round_trips(
            rot in -3.0..3.0f64, tx in -50.0..50.0f64, ty in -50.0..50.0f64,
            px in -50.0..50.0f64, py in -50.0..50.0f64,
        ) {
            let t = Se2::new(rot, tx, ty);
            let back = t.inverse().apply(t.apply((px, py)));
            prop_assert!((back.0 - px).abs() < 1e-9 && (back.1 - py).abs() < 1e-9);
        }

        #[test]
        fn between_maps_prev_frame_points_to_cur_frame(
            px in -10.0..10.0f64, py in -10.0..10.0f64,
            x1 in -20.0..20.0f64, y1 in -20.0..20.0f64, h1 in -3.0..3.0f64,
            x2 in -20.0..20.0f64, y2 in -20.0..20.0f64, h2 in -3.0..3.0f64,
        ) {
            let prev = Pose2D::new(x1, y1, h1);
            let cur = Pose2D::new(x2, y2, h2);
            let world = prev.to_world((px, py));
            let want = cur.to_local(world);
            let got = Se2::between(&prev, &cur).apply((px, py));
            prop_assert!((got.0 - want.0).abs() < 1e-9 && (got.1 - want.1).abs() < 1e-9);
        }
    }
}
