//! Intersection-avoidance optimizer: iteratively translate objects along
//! x and z to drive cross-entity cuboid IoU to zero. The y coordinate is
//! never touched, so nothing starts floating.
//!
//! The loss is the upper-triangle sum of the scene IoU matrix. Gradients
//! come from central finite differences (the rotated-polygon IoU has
//! non-differentiable vertex-crossing events, so analytic derivatives are
//! not worth the trouble), and all objects step simultaneously each
//! iteration so the result is independent of object order.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, scene_iou_matrix, OrientedCuboid};
use crate::scene::{load_scene, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurationConfig {
    /// Step size in meters per unit gradient.
    pub eta: f64,
    /// Max gradient norm per object; larger gradients are rescaled.
    pub clip_norm: f64,
    pub max_iters: usize,
    /// Stop once the total overlap falls to or below this value.
    pub epsilon_stop: f64,
    /// Central finite-difference step in meters.
    pub fd_step: f64,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            eta: 0.05,
            clip_norm: 1.0,
            max_iters: 500,
            epsilon_stop: 1e-6,
            fd_step: 0.01,
        }
    }
}

impl CurationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::Config(format!(
                "clip_norm must be positive, got {}",
                self.clip_norm
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.epsilon_stop >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon_stop must be non-negative, got {}",
                self.epsilon_stop
            )));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Config(format!(
                "fd_step must be positive, got {}",
                self.fd_step
            )));
        }
        Ok(())
    }
}

/// The optimizer's loss: upper-triangle sum of the scene IoU matrix.
pub fn total_overlap(scene: &Scene) -> f64 {
    scene_iou_matrix(scene).upper_triangle_sum()
}

/// Only pairs involving object `i` change when `i` translates, so the
/// finite difference runs over that partial sum.
fn partial_overlap(
    own: &[OrientedCuboid],
    others: &[(usize, OrientedCuboid)],
    shift: [f64; 2],
) -> f64 {
    let mut acc = 0.0;
    for c in own {
        let moved = OrientedCuboid::new(
            [c.center[0] + shift[0], c.center[1], c.center[2] + shift[1]],
            c.extents,
            c.theta,
        );
        for (_, other) in others {
            acc += metrics::iou(&moved, other);
        }
    }
    acc
}

/// Central finite difference of [`total_overlap`] with respect to object
/// `i`'s translation, on x and z only.
pub fn overlap_gradient(scene: &Scene, object_index: usize, fd_step: f64) -> [f64; 2] {
    let all = scene.world_cuboids_with_owner();
    let own: Vec<OrientedCuboid> = all
        .iter()
        .filter(|(o, _)| *o == object_index)
        .map(|(_, c)| *c)
        .collect();
    let others: Vec<(usize, OrientedCuboid)> = all
        .into_iter()
        .filter(|(o, _)| *o != object_index)
        .collect();
    let h = fd_step;
    let gx = (partial_overlap(&own, &others, [h, 0.0]) - partial_overlap(&own, &others, [-h, 0.0]))
        / (2.0 * h);
    let gz = (partial_overlap(&own, &others, [0.0, h]) - partial_overlap(&own, &others, [0.0, -h]))
        / (2.0 * h);
    [gx, gz]
}

fn clip(g: [f64; 2], max_norm: f64) -> [f64; 2] {
    let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        [g[0] * s, g[1] * s]
    } else {
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    pub iterations: usize,
    pub initial_overlap: f64,
    pub final_overlap: f64,
    pub converged: bool,
}

/// Run the avoidance loop on one scene. Classes, sizes, rotations, cuboid
/// assemblies, and every y-translation are untouched; an overlap-free
/// scene returns with zero iterations and bit-identical translations.
pub fn avoid_intersections(scene: &Scene, config: &CurationConfig) -> (Scene, CurationReport) {
    let mut scene = scene.clone();
    let initial = total_overlap(&scene);
    let mut overlap = initial;
    let mut iterations = 0;

    while overlap > config.epsilon_stop && iterations < config.max_iters {
        // Jacobi update: all gradients on the frozen scene, then one step
        let grads: Vec<[f64; 2]> = (0..scene.objects.len())
            .map(|i| clip(overlap_gradient(&scene, i, config.fd_step), config.clip_norm))
            .collect();
        for (obj, g) in scene.objects.iter_mut().zip(&grads) {
            obj.pose.translation[0] -= config.eta * g[0];
            obj.pose.translation[2] -= config.eta * g[1];
        }
        iterations += 1;
        overlap = total_overlap(&scene);
    }

    let report = CurationReport {
        iterations,
        initial_overlap: initial,
        final_overlap: overlap,
        converged: overlap <= config.epsilon_stop,
    };
    (scene, report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneRecord {
    pub name: String,
    pub iterations: usize,
    pub initial_overlap: f64,
    pub final_overlap: f64,
    pub converged: bool,
    pub mean_displacement: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurationSummary {
    pub n_scenes: usize,
    pub nirate_before: Option<f64>,
    pub nirate_after: Option<f64>,
    pub nirate_threshold: f64,
    pub mean_displacement: f64,
    pub records: Vec<SceneRecord>,
    pub errors: Vec<ErrorRecord>,
}

fn mean_object_displacement(before: &Scene, after: &Scene) -> f64 {
    if before.objects.is_empty() {
        return 0.0;
    }
    let total: f64 = before
        .objects
        .iter()
        .zip(&after.objects)
        .map(|(a, b)| {
            let dx = b.pose.translation[0] - a.pose.translation[0];
            let dz = b.pose.translation[2] - a.pose.translation[2];
            (dx * dx + dz * dz).sqrt()
        })
        .sum();
    total / before.objects.len() as f64
}

/// Curate every scene independently (in parallel) and aggregate NIRate
/// before/after plus displacement statistics.
pub fn curate_dataset(
    scenes: &[(String, Scene)],
    config: &CurationConfig,
) -> (Vec<(String, Scene)>, CurationSummary) {
    let curated: Vec<(String, Scene, CurationReport)> = scenes
        .par_iter()
        .map(|(name, scene)| {
            let (out, report) = avoid_intersections(scene, config);
            (name.clone(), out, report)
        })
        .collect();

    let before: Vec<Scene> = scenes.iter().map(|(_, s)| s.clone()).collect();
    let after: Vec<Scene> = curated.iter().map(|(_, s, _)| s.clone()).collect();
    let threshold = metrics::DEFAULT_NIRATE_THRESHOLD;
    let nirate_before = metrics::nirate(&before, threshold).ok();
    let nirate_after = metrics::nirate(&after, threshold).ok();

    let mut records = Vec::with_capacity(curated.len());
    let mut total_disp = 0.0;
    let mut total_objects = 0usize;
    for ((name, out, report), (_, original)) in curated.iter().zip(scenes) {
        let disp = mean_object_displacement(original, out);
        records.push(SceneRecord {
            name: name.clone(),
            iterations: report.iterations,
            initial_overlap: report.initial_overlap,
            final_overlap: report.final_overlap,
            converged: report.converged,
            mean_displacement: disp,
        });
        total_disp += disp * original.objects.len() as f64;
        total_objects += original.objects.len();
    }

    let summary = CurationSummary {
        n_scenes: scenes.len(),
        nirate_before,
        nirate_after,
        nirate_threshold: threshold,
        mean_displacement: if total_objects > 0 {
            total_disp / total_objects as f64
        } else {
            0.0
        },
        records,
        errors: Vec::new(),
    };
    (
        curated.into_iter().map(|(n, s, _)| (n, s)).collect(),
        summary,
    )
}

/// File-level wrapper: unreadable scenes become error records and
/// processing continues with the rest.
pub fn curate_files(
    paths: &[PathBuf],
    config: &CurationConfig,
) -> (Vec<(String, Scene)>, CurationSummary) {
    let mut scenes = Vec::new();
    let mut errors = Vec::new();
    for path in paths {
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        match load_scene(path) {
            Ok(scene) => scenes.push((name, scene)),
            Err(e) => errors.push(ErrorRecord {
                path: path.display().to_string(),
                message: e.to_string(),
            }),
        }
    }
    let (curated, mut summary) = curate_dataset(&scenes, config);
    summary.errors = errors;
    (curated, summary)
}
