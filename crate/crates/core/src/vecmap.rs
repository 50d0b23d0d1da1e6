//! Vector road maps: road-surface polygons in local meters, with the
//! geographic origin of the local frame carried as metadata.
//!
//! Maps serialize to GeoJSON FeatureCollections. Coordinates stay in local
//! meters (x = easting, y = northing relative to the origin); the origin
//! itself is recorded in the collection's `properties` so consumers can
//! georeference the map if they need to.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::Polygon;
use crate::{Error, Result};

/// A set of road-surface polygons in local meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorMap {
    pub polygons: Vec<Polygon>,
    /// Geographic anchor (easting, northing) of the local (0, 0), meters.
    pub origin: (f64, f64),
}

impl VectorMap {
    pub fn new(polygons: Vec<Polygon>, origin: (f64, f64)) -> Self {
        Self { polygons, origin }
    }

    /// True when `p` lies inside any road polygon (even-odd rule per
    /// polygon). Points exactly on an edge are treated as inside — see
    /// [`Self::edge_distance`].
    pub fn contains(&self, p: (f64, f64)) -> bool {
        self.polygons.iter().any(|poly| poly.contains(p))
    }

    /// Minimum distance from `p` to any mapped road edge, plus containment.
    ///
    /// Boundary points report `inside = true`: with d = 0 any downstream
    /// probability is 0.5 either way, so the convention is inert but kept
    /// deterministic.
    pub fn edge_distance(&self, p: (f64, f64)) -> Result<(f64, bool)> {
        if self.polygons.is_empty() {
            return Err(Error::EmptyInput("vector map has no polygons".into()));
        }
        let d = self
            .polygons
            .iter()
            .map(|poly| poly.boundary_distance(p))
            .fold(f64::INFINITY, f64::min);
        let inside = d == 0.0 || self.contains(p);
        Ok((d, inside))
    }

    pub fn write_geojson(&self, path: &Path) -> Result<()> {
        let fc = FeatureCollection::from(self);
        fs::write(path, serde_json::to_string_pretty(&fc)?)?;
        Ok(())
    }

    pub fn read_geojson(path: &Path) -> Result<Self> {
        let fc: FeatureCollection = serde_json::from_str(&fs::read_to_string(path)?)?;
        fc.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureCollection {
    #[serde(rename = "type")]
    kind: String,
    properties: CollectionProperties,
    features: Vec<Feature>,
}

#[derive(Serialize, Deserialize)]
struct CollectionProperties {
    /// Geographic anchor (easting, northing) of local (0, 0), meters.
    origin: (f64, f64),
    units: String,
}

#[derive(Serialize, Deserialize)]
struct Feature {
    #[serde(rename = "type")]
    kind: String,
    properties: serde_json::Map<String, serde_json::Value>,
    geometry: Geometry,
}

#[derive(Serialize, Deserialize)]
struct Geometry {
    #[serde(rename = "type")]
    kind: String,
    /// GeoJSON polygon rings; only the exterior ring is used.
    coordinates: Vec<Vec<(f64, f64)>>,
}

impl From<&VectorMap> for FeatureCollection {
    fn from(map: &VectorMap) -> Self {
        let features = map
            .polygons
            .iter()
            .map(|poly| {
                // GeoJSON rings are explicitly closed.
                let mut ring = poly.vertices.clone();
                if let Some(&first) = ring.first() {
                    ring.push(first);
                }
                Feature {
                    kind: "Feature".into(),
                    properties: serde_json::Map::new(),
                    geometry: Geometry { kind: "Polygon".into(), coordinates: vec![ring] },
                }
            })
            .collect();
        FeatureCollection {
            kind: "FeatureCollection".into(),
            properties: CollectionProperties {
                origin: map.origin,
                units: "meters".into(),
            },
            features,
        }
    }
}

impl TryFrom<FeatureCollection> for VectorMap {
    type Error = Error;

    fn try_from(fc: FeatureCollection) -> Result<Self> {
        if fc.kind != "FeatureCollection" {
            return Err(Error::Parse(format!("expected FeatureCollection, got {}", fc.kind)));
        }
        let mut polygons = Vec::with_capacity(fc.features.len());
        for feature in fc.features {
            if feature.geometry.kind != "Polygon" {
                return Err(Error::Parse(format!(
                    "unsupported geometry type {}",
                    feature.geometry.kind
                )));
            }
            let mut ring = feature
                .geometry
                .coordinates
                .into_iter()
                .next()
                .ok_or_else(|| Error::Parse("polygon with no rings".into()))?;
            // Drop the closing vertex GeoJSON requires.
            if ring.len() >= 2 && ring.first() == ring.last() {
                ring.pop();
            }
            polygons.push(Polygon::new(ring)?);
        }
        Ok(VectorMap::new(polygons, fc.properties.origin))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_rect_map() -> VectorMap {
        let a = Polygon::new(vec![(0.0, -5.0), (100.0, -5.0), (100.0, 5.0), (0.0, 5.0)]).unwrap();
        let b = Polygon::new(vec![(40.0, 5.0), (60.0, 5.0), (60.0, 40.0), (40.0, 40.0)]).unwrap();
        VectorMap::new(vec![a, b], (448_251.0, 5_412_630.0))
    }

    #[test]
    fn containment_across_multiple_polygons() {
        let map = two_rect_map();
        assert!(map.contains((50.0, 0.0)));
        assert!(map.contains((50.0, 20.0)));
        assert!(!map.contains((10.0, 20.0)));
    }

    #[test]
    fn edge_distance_center_of_ten_meter_road() {
        let map = two_rect_map();
        // Center line of the 10 m-wide rectangle: 5 m from either edge.
        let (d, inside) = map.edge_distance((20.0, 0.0)).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
        assert!(inside);
    }

    #[test]
    fn edge_distance_outside_point() {
        let map = two_rect_map();
        let (d, inside) = map.edge_distance((20.0, 8.0)).unwrap();
        assert!((d - 3.0).abs() < 1e-12);
        assert!(!inside);
    }

    #[test]
    fn edge_distance_on_edge_is_zero_and_inside() {
        let map = two_rect_map();
        let (d, inside) = map.edge_distance((20.0, 5.0)).unwrap();
        assert_eq!(d, 0.0);
        assert!(inside);
    }

    #[test]
    fn empty_map_errors() {
        let map = VectorMap::new(vec![], (0.0, 0.0));
        assert!(map.edge_distance((0.0, 0.0)).is_err());
    }

    #[test]
    fn geojson_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.geojson");
        let map = two_rect_map();
        map.write_geojson(&path).unwrap();
        let back = VectorMap::read_geojson(&path).unwrap();
        assert_eq!(back, map);
    }
}
