//! Planar coordinates, GPS conversion and the geometry shared by the planners.
//!
//! All planning happens in a local east/north frame in meters, anchored at a
//! declared origin. The projection is equirectangular about the origin, which
//! is accurate to well below GPS error at lake scale.

use std::ops::{Add, Mul, Sub};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius (IUGG), meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Maximum origin offset accepted by [`to_local`], meters.
pub const MAX_LOCAL_EXTENT_M: f64 = 100_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lat.is_finite() && (-90.0..=90.0).contains(&self.lat)) {
            return Err(Error::domain(format!("latitude {} outside [-90, 90]", self.lat)));
        }
        if !(self.lon.is_finite() && (-180.0..=180.0).contains(&self.lon)) {
            return Err(Error::domain(format!("longitude {} outside [-180, 180]", self.lon)));
        }
        Ok(())
    }
}

/// A point in the local planar frame, meters east and north of the origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalPoint {
    pub east: f64,
    pub north: f64,
}

impl LocalPoint {
    pub const ORIGIN: LocalPoint = LocalPoint { east: 0.0, north: 0.0 };

    pub const fn new(east: f64, north: f64) -> Self {
        LocalPoint { east, north }
    }

    pub fn norm(self) -> f64 {
        self.east.hypot(self.north)
    }

    pub fn dot(self, other: LocalPoint) -> f64 {
        self.east * other.east + self.north * other.north
    }

    pub fn cross(self, other: LocalPoint) -> f64 {
        self.east * other.north - self.north * other.east
    }

    /// Rotates by +90 degrees (counter-clockwise).
    pub fn perp(self) -> LocalPoint {
        LocalPoint::new(-self.north, self.east)
    }

    pub fn is_finite(self) -> bool {
        self.east.is_finite() && self.north.is_finite()
    }

    pub fn midpoint(self, other: LocalPoint) -> LocalPoint {
        LocalPoint::new((self.east + other.east) / 2.0, (self.north + other.north) / 2.0)
    }
}

impl Add for LocalPoint {
    type Output = LocalPoint;
    fn add(self, rhs: LocalPoint) -> LocalPoint {
        LocalPoint::new(self.east + rhs.east, self.north + rhs.north)
    }
}

impl Sub for LocalPoint {
    type Output = LocalPoint;
    fn sub(self, rhs: LocalPoint) -> LocalPoint {
        LocalPoint::new(self.east - rhs.east, self.north - rhs.north)
    }
}

impl Mul<f64> for LocalPoint {
    type Output = LocalPoint;
    fn mul(self, k: f64) -> LocalPoint {
        LocalPoint::new(self.east * k, self.north * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: LocalPoint,
    pub radius: f64,
}

impl Circle {
    pub fn contains(&self, p: LocalPoint, tol: f64) -> bool {
        dist(self.center, p) <= self.radius + tol
    }
}

/// Euclidean distance in the local frame.
pub fn dist(a: LocalPoint, b: LocalPoint) -> f64 {
    (a - b).norm()
}

/// Distance from `p` to the segment `a`–`b`.
pub fn point_segment_distance(p: LocalPoint, a: LocalPoint, b: LocalPoint) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    dist(p, a + ab * t)
}

/// Distance from `p` to the polyline through `points`.
pub fn point_polyline_distance(p: LocalPoint, points: &[LocalPoint]) -> f64 {
    match points {
        [] => f64::INFINITY,
        [only] => dist(p, *only),
        _ => points
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Projects `p` into the local frame anchored at `origin`.
pub fn to_local(p: GeoPoint, origin: GeoPoint) -> Result<LocalPoint> {
    p.validate()?;
    origin.validate()?;
    let dlat = (p.lat - origin.lat).to_radians();
    let mut dlon = p.lon - origin.lon;
    if dlon > 180.0 {
        dlon -= 360.0;
    } else if dlon < -180.0 {
        dlon += 360.0;
    }
    let local = LocalPoint::new(
        EARTH_RADIUS_M * dlon.to_radians() * origin.lat.to_radians().cos(),
        EARTH_RADIUS_M * dlat,
    );
    if local.norm() >= MAX_LOCAL_EXTENT_M {
        return Err(Error::domain(format!(
            "point ({}, {}) is {:.0} m from the origin, beyond the {} m planar limit",
            p.lat,
            p.lon,
            local.norm(),
            MAX_LOCAL_EXTENT_M
        )));
    }
    Ok(local)
}

/// Inverse of [`to_local`].
pub fn to_geo(p: LocalPoint, origin: GeoPoint) -> Result<GeoPoint> {
    if !p.is_finite() {
        return Err(Error::domain("local point is not finite"));
    }
    origin.validate()?;
    let lat = origin.lat + (p.north / EARTH_RADIUS_M).to_degrees();
    let cos_lat = origin.lat.to_radians().cos();
    let mut lon = origin.lon + (p.east / (EARTH_RADIUS_M * cos_lat)).to_degrees();
    if lon > 180.0 {
        lon -= 360.0;
    } else if lon < -180.0 {
        lon += 360.0;
    }
    GeoPoint::new(lat, lon)
}

fn containment_tol(c: &Circle) -> f64 {
    1e-12 * (1.0 + c.radius + c.center.norm())
}

fn circle_from_two(a: LocalPoint, b: LocalPoint) -> Circle {
    let center = a.midpoint(b);
    Circle { center, radius: dist(a, b) / 2.0 }
}

fn circle_from_three(a: LocalPoint, b: LocalPoint, c: LocalPoint) -> Circle {
    let ab = b - a;
    let ac = c - a;
    let d = 2.0 * ab.cross(ac);
    let scale = ab.dot(ab).max(ac.dot(ac));
    if d.abs() <= 1e-14 * scale {
        // Collinear: the widest pair spans the other point.
        let candidates = [circle_from_two(a, b), circle_from_two(a, c), circle_from_two(b, c)];
        return candidates
            .into_iter()
            .max_by(|x, y| x.radius.total_cmp(&y.radius))
            .unwrap();
    }
    let ab2 = ab.dot(ab);
    let ac2 = ac.dot(ac);
    let offset = LocalPoint::new(
        (ac.north * ab2 - ab.north * ac2) / d,
        (ab.east * ac2 - ac.east * ab2) / d,
    );
    let center = a + offset;
    let radius = dist(center, a).max(dist(center, b)).max(dist(center, c));
    Circle { center, radius }
}

/// Smallest circle containing every point (randomized incremental, expected O(n)).
///
/// Exact duplicates are removed first. The shuffle uses a fixed seed so the
/// result is reproducible. Every input point satisfies
/// `dist(p, center) <= radius` exactly.
pub fn smallest_enclosing_circle(points: &[LocalPoint]) -> Result<Circle> {
    if points.is_empty() {
        return Err(Error::domain("smallest enclosing circle of an empty point set"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::domain("enclosing circle input contains a non-finite point"));
    }
    let mut pts: Vec<LocalPoint> = points.to_vec();
    pts.sort_by(|a, b| a.east.total_cmp(&b.east).then(a.north.total_cmp(&b.north)));
    pts.dedup();
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5ec));

    let mut circle = Circle { center: pts[0], radius: 0.0 };
    for i in 1..pts.len() {
        if circle.contains(pts[i], containment_tol(&circle)) {
            continue;
        }
        circle = Circle { center: pts[i], radius: 0.0 };
        for j in 0..i {
            if circle.contains(pts[j], containment_tol(&circle)) {
                continue;
            }
            circle = circle_from_two(pts[i], pts[j]);
            for k in 0..j {
                if !circle.contains(pts[k], containment_tol(&circle)) {
                    circle = circle_from_three(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    // Grow by the residual rounding so every input satisfies `dist <= radius`.
    circle.radius = pts.iter().fold(circle.radius, |r, p| r.max(dist(circle.center, *p)));
    Ok(circle)
}
