use serde::{Deserialize, Serialize};

/// 2-D position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x_m: f64,
    pub y_m: f64,
}

impl Point2 {
    pub fn new(x_m: f64, y_m: f64) -> Self {
        Self { x_m, y_m }
    }

    /// Planar distance in meters.
    pub fn distance_to(&self, other: &Point2) -> f64 {
        let dx = other.x_m - self.x_m;
        let dy = other.y_m - self.y_m;
        (dx * dx + dy * dy).sqrt()
    }

    /// Azimuth from `self` toward `other`, degrees in [0, 360).
    /// 0 deg points along +x, angles grow counter-clockwise.
    pub fn azimuth_deg_to(&self, other: &Point2) -> f64 {
        let dy = other.y_m - self.y_m;
        let dx = other.x_m - self.x_m;
        let deg = dy.atan2(dx).to_degrees();
        if deg < 0.0 {
            deg + 360.0
        } else {
            deg
        }
    }
}

/// Slant (3-D) distance between two endpoints with given antenna heights.
pub fn slant_distance_m(a: &Point2, h_a_m: f64, b: &Point2, h_b_m: f64) -> f64 {
    let d = a.distance_to(b);
    let dh = h_b_m - h_a_m;
    (d * d + dh * dh).sqrt()
}

/// Smallest absolute angular difference between two azimuths, in [0, 180].
pub fn angle_diff_deg(a_deg: f64, b_deg: f64) -> f64 {
    let mut d = (a_deg - b_deg).rem_euclid(360.0);
    if d > 180.0 {
        d = 360.0 - d;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn azimuth_quadrants() {
        let o = Point2::new(0.0, 0.0);
        assert!((o.azimuth_deg_to(&Point2::new(1.0, 0.0)) - 0.0).abs() < 1e-12);
        assert!((o.azimuth_deg_to(&Point2::new(0.0, 1.0)) - 90.0).abs() < 1e-12);
        assert!((o.azimuth_deg_to(&Point2::new(-1.0, 0.0)) - 180.0).abs() < 1e-12);
        assert!((o.azimuth_deg_to(&Point2::new(0.0, -1.0)) - 270.0).abs() < 1e-12);
    }

    #[test]
    fn angle_diff_wraps() {
        assert!((angle_diff_deg(350.0, 10.0) - 20.0).abs() < 1e-12);
        assert!((angle_diff_deg(10.0, 350.0) - 20.0).abs() < 1e-12);
        assert!((angle_diff_deg(180.0, 0.0) - 180.0).abs() < 1e-12);
    }

    #[test]
    fn slant_uses_height_delta() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(3.0, 0.0);
        assert!((slant_distance_m(&a, 0.0, &b, 4.0) - 5.0).abs() < 1e-12);
    }
}
