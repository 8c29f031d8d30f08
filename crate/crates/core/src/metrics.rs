//! Oriented-cuboid intersection volumes, scene IoU matrices, and the
//! CIoU / NIRate / CKL evaluation metrics.
//!
//! All cuboids here rotate about the vertical axis only, so a 3D
//! intersection factors into the 2D intersection of two rotated
//! rectangles (convex polygon clipping) times the overlap of two
//! y-intervals.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom;
use crate::scene::Scene;

/// World-space box: center, full extents (pre-rotation), and rotation
/// about y in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedCuboid {
    pub center: [f64; 3],
    pub extents: [f64; 3],
    pub theta: f64,
}

impl OrientedCuboid {
    pub fn new(center: [f64; 3], extents: [f64; 3], theta: f64) -> Self {
        OrientedCuboid {
            center,
            extents,
            theta,
        }
    }

    pub fn volume(&self) -> f64 {
        self.extents[0] * self.extents[1] * self.extents[2]
    }

    /// Footprint corners on the (x, z) plane in counter-clockwise order.
    pub fn footprint(&self) -> [[f64; 2]; 4] {
        let (s, c) = (self.theta.sin(), self.theta.cos());
        let hx = 0.5 * self.extents[0];
        let hz = 0.5 * self.extents[2];
        let offsets = [[hx, hz], [-hx, hz], [-hx, -hz], [hx, -hz]];
        offsets.map(|o| {
            let r = geom::rotate_xz(o, s, c);
            [self.center[0] + r[0], self.center[2] + r[1]]
        })
    }

    fn y_interval(&self) -> (f64, f64) {
        let h = 0.5 * self.extents[1];
        (self.center[1] - h, self.center[1] + h)
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn aabb(&self) -> ([f64; 3], [f64; 3]) {
        let fp = self.footprint();
        let (y0, y1) = self.y_interval();
        let mut lo = [f64::INFINITY, y0, f64::INFINITY];
        let mut hi = [f64::NEG_INFINITY, y1, f64::NEG_INFINITY];
        for p in fp {
            lo[0] = lo[0].min(p[0]);
            hi[0] = hi[0].max(p[0]);
            lo[2] = lo[2].min(p[1]);
            hi[2] = hi[2].max(p[1]);
        }
        (lo, hi)
    }

    pub fn contains_point(&self, p: [f64; 3]) -> bool {
        let d = [
            p[0] - self.center[0],
            p[1] - self.center[1],
            p[2] - self.center[2],
        ];
        // rotate the point into the box frame
        let local = geom::rotate_y(d, (-self.theta).sin(), (-self.theta).cos());
        (0..3).all(|i| local[i].abs() <= 0.5 * self.extents[i])
    }
}

/// Exact intersection volume of two y-rotated boxes: rotated-rectangle
/// overlap area times y-interval overlap.
pub fn intersection_volume(a: &OrientedCuboid, b: &OrientedCuboid) -> f64 {
    let (a0, a1) = a.y_interval();
    let (b0, b1) = b.y_interval();
    let dy = a1.min(b1) - a0.max(b0);
    if dy <= 0.0 {
        return 0.0;
    }
    let clipped = geom::clip_polygon_convex(&a.footprint(), &b.footprint());
    if clipped.len() < 3 {
        return 0.0;
    }
    let area = geom::polygon_signed_area(&clipped).abs();
    area * dy
}

/// Intersection over union, in [0, 1].
pub fn iou(a: &OrientedCuboid, b: &OrientedCuboid) -> f64 {
    let inter = intersection_volume(a, b).min(a.volume()).min(b.volume());
    if inter <= 0.0 {
        return 0.0;
    }
    (inter / (a.volume() + b.volume() - inter)).clamp(0.0, 1.0)
}

/// Pairwise IoU over every world cuboid in a scene. The diagonal and all
/// same-owner pairs are zero by convention.
#[derive(Debug, Clone, PartialEq)]
pub struct IoUMatrix {
    dim: usize,
    values: Vec<f64>,
    owner: Vec<usize>,
}

impl IoUMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    /// Entity index owning cuboid `i`.
    pub fn owner(&self, i: usize) -> usize {
        self.owner[i]
    }

    /// Upper-triangle entries as `(i, j, value)` with `i < j`, in fixed
    /// row-major order.
    pub fn upper_triangle(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| (i + 1..self.dim).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn upper_triangle_sum(&self) -> f64 {
        self.upper_triangle().map(|(_, _, v)| v).sum()
    }
}

/// IoU matrix of all world cuboids in the scene, same-entity pairs
/// masked. Entries are independent, so rows compute in parallel; no
/// floating-point reduction happens here, so the result does not depend
/// on the schedule.
pub fn scene_iou_matrix(scene: &Scene) -> IoUMatrix {
    let cubs = scene.world_cuboids_with_owner();
    let dim = cubs.len();
    let rows: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            (i + 1..dim)
                .map(|j| {
                    if cubs[i].0 == cubs[j].0 {
                        0.0
                    } else {
                        iou(&cubs[i].1, &cubs[j].1)
                    }
                })
                .collect()
        })
        .collect();
    let mut values = vec![0.0; dim * dim];
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let j = i + 1 + offset;
            values[i * dim + j] = v;
            values[j * dim + i] = v;
        }
    }
    IoUMatrix {
        dim,
        values,
        owner: cubs.into_iter().map(|(o, _)| o).collect(),
    }
}

/// Scene intersection metric: total cross-entity intersection volume over
/// total cuboid volume, scaled by 1000. Each unordered pair counts once.
pub fn ciou(scene: &Scene) -> Result<f64> {
    let cubs = scene.world_cuboids_with_owner();
    let total_volume: f64 = cubs.iter().map(|(_, c)| c.volume()).sum();
    if !(total_volume > 0.0) {
        return Err(Error::UndefinedMetric(
            "CIoU needs a scene with positive cuboid volume".into(),
        ));
    }
    let mut inter = 0.0;
    for i in 0..cubs.len() {
        for j in i + 1..cubs.len() {
            if cubs[i].0 != cubs[j].0 {
                inter += intersection_volume(&cubs[i].1, &cubs[j].1);
            }
        }
    }
    Ok(1000.0 * inter / total_volume)
}

/// Default NIRate threshold, interpreted on the scaled (x1000) CIoU.
pub const DEFAULT_NIRATE_THRESHOLD: f64 = 0.01;

/// Percentage of scenes whose CIoU is at or below `threshold`.
pub fn nirate(scenes: &[Scene], threshold: f64) -> Result<f64> {
    if scenes.is_empty() {
        return Err(Error::UndefinedMetric(
            "NIRate over an empty scene list".into(),
        ));
    }
    let mut pass = 0usize;
    for scene in scenes {
        if ciou(scene)? <= threshold {
            pass += 1;
        }
    }
    Ok(100.0 * pass as f64 / scenes.len() as f64)
}

const CKL_EPSILON: f64 = 1e-6;

/// Category KL divergence between class-count histograms, scaled by 0.01.
/// Both histograms get additive smoothing over the union of categories
/// before normalization, so unseen classes stay finite.
pub fn ckl(generated: &BTreeMap<String, u64>, reference: &BTreeMap<String, u64>) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::UndefinedMetric(
            "CKL needs a non-empty reference histogram".into(),
        ));
    }
    let mut keys: Vec<&String> = generated.keys().chain(reference.keys()).collect();
    keys.sort();
    keys.dedup();

    let smooth = |hist: &BTreeMap<String, u64>| -> Vec<f64> {
        let counts: Vec<f64> = keys
            .iter()
            .map(|k| hist.get(*k).copied().unwrap_or(0) as f64 + CKL_EPSILON)
            .collect();
        let total: f64 = counts.iter().sum();
        counts.into_iter().map(|c| c / total).collect()
    };
    let p = smooth(generated);
    let q = smooth(reference);
    let kl: f64 = p
        .iter()
        .zip(&q)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum();
    Ok(0.01 * kl)
}

/// Class-count histogram over a whole scene set.
pub fn class_histogram(scenes: &[Scene]) -> BTreeMap<String, u64> {
    let mut hist = BTreeMap::new();
    for scene in scenes {
        for obj in &scene.objects {
            *hist.entry(obj.class.clone()).or_insert(0) += 1;
        }
    }
    hist
}

/// Aggregate report for a scene set, serialized by the `metrics` CLI
/// subcommand. `ciou` is the mean per-scene CIoU.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ciou: f64,
    pub nirate: f64,
    pub ckl: f64,
    pub n_scenes: usize,
    pub threshold: f64,
}

/// Compute the full report. Without a reference set the CKL term is 0.
pub fn metrics_report(
    scenes: &[Scene],
    reference: Option<&[Scene]>,
    threshold: f64,
) -> Result<MetricsReport> {
    if scenes.is_empty() {
        return Err(Error::UndefinedMetric("metrics over an empty scene list".into()));
    }
    let mut mean_ciou = 0.0;
    for scene in scenes {
        mean_ciou += ciou(scene)?;
    }
    mean_ciou /= scenes.len() as f64;
    let ckl_value = match reference {
        Some(reference) => ckl(&class_histogram(scenes), &class_histogram(reference))?,
        None => 0.0,
    };
    Ok(MetricsReport {
        ciou: mean_ciou,
        nirate: nirate(scenes, threshold)?,
        ckl: ckl_value,
        n_scenes: scenes.len(),
        threshold,
    })
}
