//! Planar and geographic coordinates.
//!
//! The simulation runs on a flat plane measured in miles. Latitude and
//! longitude only appear at the reporting boundary (GPS logs, server
//! records, search areas), via a local equirectangular projection.

use serde::{Deserialize, Serialize};

pub const METERS_PER_MILE: f64 = 1609.344;
pub const MILES_PER_DEGREE_LAT: f64 = 69.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_m(&self, other: &Point) -> f64 {
        self.distance(other) * METERS_PER_MILE
    }

    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }
}

/// Equirectangular projection around a fixed origin. Adequate for the few
/// tens of miles a scenario spans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub origin: GeoPoint,
}

impl Default for Projection {
    fn default() -> Self {
        Self { origin: GeoPoint::new(34.0, -118.0) }
    }
}

impl Projection {
    pub fn new(origin: GeoPoint) -> Self {
        Self { origin }
    }

    fn miles_per_degree_lon(&self) -> f64 {
        MILES_PER_DEGREE_LAT * self.origin.lat.to_radians().cos()
    }

    pub fn to_geo(&self, p: Point) -> GeoPoint {
        GeoPoint::new(self.origin.lat + p.y / MILES_PER_DEGREE_LAT, self.origin.lon + p.x / self.miles_per_degree_lon())
    }

    pub fn to_plane(&self, g: GeoPoint) -> Point {
        Point::new((g.lon - self.origin.lon) * self.miles_per_degree_lon(), (g.lat - self.origin.lat) * MILES_PER_DEGREE_LAT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_round_trips() {
        let proj = Projection::default();
        let p = Point::new(3.25, -7.5);
        let back = proj.to_plane(proj.to_geo(p));
        assert!((back.x - p.x).abs() < 1e-9);
        assert!((back.y - p.y).abs() < 1e-9);
    }

    #[test]
    fn one_degree_of_latitude() {
        let proj = Projection::default();
        let g = proj.to_geo(Point::new(0.0, MILES_PER_DEGREE_LAT));
        assert!((g.lat - 35.0).abs() < 1e-12);
    }
}
