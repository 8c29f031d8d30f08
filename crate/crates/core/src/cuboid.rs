use serde::{Deserialize, Serialize};

/// Axis-aligned box in an object's local frame, stored as center plus full
/// extents. Abstraction emits these in the normalized `[0,1]^3` frame; an
/// object's pose turns them into oriented boxes in world space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub center: [f64; 3],
    pub size: [f64; 3],
}

impl Cuboid {
    pub fn new(center: [f64; 3], size: [f64; 3]) -> Self {
        Cuboid { center, size }
    }

    pub fn volume(&self) -> f64 {
        self.size[0] * self.size[1] * self.size[2]
    }

    pub fn min_corner(&self) -> [f64; 3] {
        [
            self.center[0] - 0.5 * self.size[0],
            self.center[1] - 0.5 * self.size[1],
            self.center[2] - 0.5 * self.size[2],
        ]
    }

    pub fn max_corner(&self) -> [f64; 3] {
        [
            self.center[0] + 0.5 * self.size[0],
            self.center[1] + 0.5 * self.size[1],
            self.center[2] + 0.5 * self.size[2],
        ]
    }

    /// Closed-boundary containment test.
    pub fn contains_point(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| (p[i] - self.center[i]).abs() <= 0.5 * self.size[i])
    }

    /// True if the box lies inside the unit cube up to `tol` on every face.
    pub fn within_unit_cube(&self, tol: f64) -> bool {
        let lo = self.min_corner();
        let hi = self.max_corner();
        (0..3).all(|i| lo[i] >= -tol && hi[i] <= 1.0 + tol)
    }

    /// Axis-aligned bounding box of a set of cuboids as `(min, max)`.
    pub fn bounding_box(cuboids: &[Cuboid]) -> Option<([f64; 3], [f64; 3])> {
        let first = cuboids.first()?;
        let mut lo = first.min_corner();
        let mut hi = first.max_corner();
        for c in &cuboids[1..] {
            let cl = c.min_corner();
            let ch = c.max_corner();
            for i in 0..3 {
                lo[i] = lo[i].min(cl[i]);
                hi[i] = hi[i].max(ch[i]);
            }
        }
        Some((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_and_volume() {
        let c = Cuboid::new([0.5, 0.5, 0.5], [1.0, 0.5, 0.25]);
        assert_eq!(c.min_corner(), [0.0, 0.25, 0.375]);
        assert_eq!(c.max_corner(), [1.0, 0.75, 0.625]);
        assert!((c.volume() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn unit_cube_bounds_check() {
        let inside = Cuboid::new([0.5, 0.5, 0.5], [1.0, 1.0, 1.0]);
        assert!(inside.within_unit_cube(1e-9));
        let outside = Cuboid::new([0.6, 0.5, 0.5], [1.0, 1.0, 1.0]);
        assert!(!outside.within_unit_cube(1e-6));
    }

    #[test]
    fn bounding_box_of_two() {
        let a = Cuboid::new([0.25, 0.25, 0.25], [0.5, 0.5, 0.5]);
        let b = Cuboid::new([0.75, 0.75, 0.75], [0.5, 0.5, 0.5]);
        let (lo, hi) = Cuboid::bounding_box(&[a, b]).unwrap();
        assert_eq!(lo, [0.0, 0.0, 0.0]);
        assert_eq!(hi, [1.0, 1.0, 1.0]);
    }
}
