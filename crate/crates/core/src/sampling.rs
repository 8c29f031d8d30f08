//! Scene sampling and the rejection-sampling refinement loop.
//!
//! [`SceneSampler`] is the pluggable policy interface; the bundled
//! [`BaselineSamplerModel`] is a purely statistical stand-in fitted by
//! maximum likelihood from a scene dataset. The loop samples K candidate
//! scenes per round, keeps those whose average cuboid IoU stays under the
//! threshold T, unions them into the distilled set, and refits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::cuboid::Cuboid;
use crate::error::{Error, Result};
use crate::metrics::{ciou, scene_iou_matrix};
use crate::scene::{FloorPlan, Pose, Scene, SceneObject};

/// A scene-generation policy: sampling must be deterministic per seed,
/// and refitting returns an updated sampler of the same kind.
pub trait SceneSampler {
    fn sample(&self, floor: &FloorPlan, room_type: &str, seed: u64) -> Result<Scene>;
    fn refit(&self, scenes: &[Scene]) -> Result<Self>
    where
        Self: Sized;
}

/// Per-class statistics fitted from a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    /// Share of object instances carrying this class.
    pub frequency: f64,
    pub xz_mean: [f64; 2],
    /// 2x2 covariance of (x, z) translations, regularized by epsilon * I.
    pub xz_cov: [[f64; 2]; 2],
    pub y_mean: f64,
    /// Probabilities of the four cardinal rotations {0, pi/2, pi, 3pi/2}.
    pub rotation_hist: [f64; 4],
    /// Std of the rotation residual around the nearest cardinal bin.
    pub sigma_theta: f64,
    /// Mean and std of ln(extent) per axis.
    pub ln_size_mean: [f64; 3],
    pub ln_size_std: [f64; 3],
    /// Pool of cuboid assemblies observed for this class.
    pub assemblies: Vec<Vec<Cuboid>>,
}

const COV_EPSILON: f64 = 1e-6;

/// Statistical baseline sampler: object-count distribution per room type
/// plus per-class pose and shape statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSamplerModel {
    /// room type -> (object count, probability), counts ascending.
    pub count_dist: BTreeMap<String, Vec<(usize, f64)>>,
    pub classes: BTreeMap<String, ClassStats>,
}

impl BaselineSamplerModel {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

fn population_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

/// Maximum-likelihood fit of the baseline model from a scene dataset.
pub fn fit_baseline(dataset: &[Scene]) -> Result<BaselineSamplerModel> {
    if dataset.is_empty() {
        return Err(Error::Fit("cannot fit a sampler from zero scenes".into()));
    }

    let mut counts: BTreeMap<String, BTreeMap<usize, u64>> = BTreeMap::new();
    struct Raw {
        xz: Vec<[f64; 2]>,
        y: Vec<f64>,
        thetas: Vec<f64>,
        ln_sizes: [Vec<f64>; 3],
        assemblies: Vec<Vec<Cuboid>>,
    }
    let mut per_class: BTreeMap<String, Raw> = BTreeMap::new();
    let mut total_objects = 0u64;

    for scene in dataset {
        *counts
            .entry(scene.room_type.clone())
            .or_default()
            .entry(scene.objects.len())
            .or_insert(0) += 1;
        for obj in &scene.objects {
            total_objects += 1;
            let raw = per_class.entry(obj.class.clone()).or_insert_with(|| Raw {
                xz: Vec::new(),
                y: Vec::new(),
                thetas: Vec::new(),
                ln_sizes: [Vec::new(), Vec::new(), Vec::new()],
                assemblies: Vec::new(),
            });
            raw.xz
                .push([obj.pose.translation[0], obj.pose.translation[2]]);
            raw.y.push(obj.pose.translation[1]);
            raw.thetas.push(obj.pose.theta());
            for i in 0..3 {
                raw.ln_sizes[i].push(obj.pose.size[i].ln());
            }
            raw.assemblies.push(obj.cuboids.clone());
        }
    }
    if total_objects == 0 {
        return Err(Error::Fit("dataset contains no objects".into()));
    }

    let count_dist = counts
        .into_iter()
        .map(|(room, hist)| {
            let total: u64 = hist.values().sum();
            let dist = hist
                .into_iter()
                .map(|(count, c)| (count, c as f64 / total as f64))
                .collect();
            (room, dist)
        })
        .collect();

    let classes = per_class
        .into_iter()
        .map(|(class, raw)| {
            let n = raw.xz.len() as f64;
            let mean = [
                raw.xz.iter().map(|p| p[0]).sum::<f64>() / n,
                raw.xz.iter().map(|p| p[1]).sum::<f64>() / n,
            ];
            let mut cov = [[0.0f64; 2]; 2];
            for p in &raw.xz {
                let d = [p[0] - mean[0], p[1] - mean[1]];
                for i in 0..2 {
                    for j in 0..2 {
                        cov[i][j] += d[i] * d[j] / n;
                    }
                }
            }
            cov[0][0] += COV_EPSILON;
            cov[1][1] += COV_EPSILON;

            let mut rotation_hist = [0.0f64; 4];
            let mut residuals = Vec::with_capacity(raw.thetas.len());
            for &theta in &raw.thetas {
                let r = theta.rem_euclid(TAU);
                let kf = (r / FRAC_PI_2).round();
                residuals.push(r - kf * FRAC_PI_2);
                rotation_hist[(kf as usize) % 4] += 1.0;
            }
            for p in &mut rotation_hist {
                *p /= n;
            }
            let (_, sigma_theta) = population_stats(&residuals);

            let mut ln_size_mean = [0.0; 3];
            let mut ln_size_std = [0.0; 3];
            for i in 0..3 {
                let (m, s) = population_stats(&raw.ln_sizes[i]);
                ln_size_mean[i] = m;
                ln_size_std[i] = s;
            }

            let stats = ClassStats {
                frequency: n / total_objects as f64,
                xz_mean: mean,
                xz_cov: cov,
                y_mean: raw.y.iter().sum::<f64>() / n,
                rotation_hist,
                sigma_theta,
                ln_size_mean,
                ln_size_std,
                assemblies: raw.assemblies,
            };
            (class, stats)
        })
        .collect();

    Ok(BaselineSamplerModel {
        count_dist,
        classes,
    })
}

fn draw_discrete<'a, T>(pairs: impl Iterator<Item = (&'a T, f64)>, u: f64) -> Option<&'a T> {
    let mut acc = 0.0;
    let mut last = None;
    for (item, p) in pairs {
        acc += p;
        last = Some(item);
        if u < acc {
            return Some(item);
        }
    }
    last // guard against probabilities summing to slightly below 1
}

const PLACEMENT_ATTEMPTS: usize = 100;

/// Draw one scene from the fitted model. Translations are redrawn until
/// the object center lands inside the floor polygon, up to 100 attempts
/// per object.
pub fn sample_scene(
    model: &BaselineSamplerModel,
    floor: &FloorPlan,
    room_type: &str,
    seed: u64,
) -> Result<Scene> {
    let count_dist = model.count_dist.get(room_type).ok_or_else(|| {
        Error::Sampling(format!("model has no count distribution for `{room_type}`"))
    })?;
    if model.classes.is_empty() {
        return Err(Error::Sampling("model has no classes".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let count = *draw_discrete(
        count_dist.iter().map(|(c, p)| (c, *p)),
        rng.random::<f64>(),
    )
    .expect("count distribution is non-empty");

    let mut objects = Vec::with_capacity(count);
    for i in 0..count {
        let class = draw_discrete(
            model.classes.iter().map(|(c, s)| (c, s.frequency)),
            rng.random::<f64>(),
        )
        .expect("classes checked non-empty")
        .clone();
        let stats = &model.classes[&class];

        let assembly = stats.assemblies[rng.random_range(0..stats.assemblies.len())].clone();

        let mut size = [0.0f64; 3];
        for a in 0..3 {
            let z: f64 = rng.sample(StandardNormal);
            size[a] = (stats.ln_size_mean[a] + stats.ln_size_std[a] * z).exp();
        }

        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut k = 3usize;
        for (idx, p) in stats.rotation_hist.iter().enumerate() {
            acc += p;
            if u < acc {
                k = idx;
                break;
            }
        }
        let jitter: f64 = if stats.sigma_theta > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            stats.sigma_theta * z
        } else {
            0.0
        };
        let theta = k as f64 * FRAC_PI_2 + jitter;

        // Cholesky factor of the 2x2 covariance
        let l11 = stats.xz_cov[0][0].max(COV_EPSILON).sqrt();
        let l21 = stats.xz_cov[1][0] / l11;
        let l22 = (stats.xz_cov[1][1] - l21 * l21).max(0.0).sqrt();

        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let x = stats.xz_mean[0] + l11 * z1;
            let z = stats.xz_mean[1] + l21 * z1 + l22 * z2;
            if floor.contains(x, z) {
                placed = Some([x, stats.y_mean, z]);
                break;
            }
        }
        let translation = placed.ok_or_else(|| {
            Error::Sampling(format!(
                "could not place `{class}` inside the floor after {PLACEMENT_ATTEMPTS} attempts"
            ))
        })?;

        objects.push(SceneObject {
            id: format!("obj_{i}"),
            class,
            model_id: None,
            pose: Pose::new(translation, size, theta)?,
            cuboids: assembly,
        });
    }

    Scene::new(room_type, floor.clone(), objects)
}

impl SceneSampler for BaselineSamplerModel {
    fn sample(&self, floor: &FloorPlan, room_type: &str, seed: u64) -> Result<Scene> {
        sample_scene(self, floor, room_type, seed)
    }

    fn refit(&self, scenes: &[Scene]) -> Result<Self> {
        fit_baseline(scenes)
    }
}

/// Denominator convention for the per-scene average cuboid IoU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IouAverage {
    /// Mean over cross-entity pairs with a nonzero IoU (0 when none).
    NonzeroPairs,
    /// Mean over all cross-entity pairs (0 when there are no pairs).
    AllPairs,
}

/// Average cuboid IoU of a scene under the chosen denominator.
pub fn average_cuboid_iou(scene: &Scene, average: IouAverage) -> f64 {
    let matrix = scene_iou_matrix(scene);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, j, v) in matrix.upper_triangle() {
        match average {
            IouAverage::NonzeroPairs => {
                if v > 0.0 {
                    sum += v;
                    count += 1;
                }
            }
            IouAverage::AllPairs => {
                if matrix.owner(i) != matrix.owner(j) {
                    sum += v;
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionConfig {
    /// Candidate samples per round (production-scale default: 15000).
    pub k_candidates: usize,
    /// Max average cuboid IoU for a scene to be accepted.
    pub t_threshold: f64,
    pub rounds: usize,
    /// Abort if a round accepts fewer scenes than this.
    pub min_accepted: usize,
    pub average: IouAverage,
}

impl RejectionConfig {
    /// `min_accepted` defaults to a tenth of the candidate budget.
    pub fn new(k_candidates: usize, t_threshold: f64, rounds: usize) -> Self {
        RejectionConfig {
            k_candidates,
            t_threshold,
            rounds,
            min_accepted: (k_candidates / 10).max(1),
            average: IouAverage::NonzeroPairs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_candidates < 1 {
            return Err(Error::Config("k_candidates must be at least 1".into()));
        }
        if !(self.t_threshold >= 0.0) {
            return Err(Error::Config(format!(
                "t_threshold must be non-negative, got {}",
                self.t_threshold
            )));
        }
        if self.rounds < 1 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for RejectionConfig {
    fn default() -> Self {
        RejectionConfig::new(15_000, 0.001, 3)
    }
}

/// Split candidates into accepted/rejected by average cuboid IoU,
/// preserving order within each partition. Scoring runs in parallel;
/// the partition itself is sequential, so order is stable.
pub fn filter_candidates(
    scenes: Vec<Scene>,
    config: &RejectionConfig,
) -> (Vec<Scene>, Vec<Scene>) {
    let scores: Vec<f64> = scenes
        .par_iter()
        .map(|scene| average_cuboid_iou(scene, config.average))
        .collect();
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for (scene, score) in scenes.into_iter().zip(scores) {
        if score <= config.t_threshold {
            accepted.push(scene);
        } else {
            rejected.push(scene);
        }
    }
    (accepted, rejected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub candidates: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub mean_candidate_ciou: f64,
    /// Size of the distilled set after this round's union.
    pub distilled_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortfallReport {
    pub round: usize,
    pub accepted: usize,
    pub min_accepted: usize,
}

#[derive(Debug, Clone)]
pub struct RejectionOutcome<S> {
    /// Final model, or the last good one if a round fell short.
    pub model: S,
    pub reports: Vec<RoundReport>,
    pub shortfall: Option<ShortfallReport>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-scene seed derivation, so parallel and serial candidate sampling
/// produce identical results.
pub fn derive_seed(master: u64, round: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ round) ^ index)
}

/// Iterative distillation: per round sample `k` candidates over the
/// floors (round-robin), filter by average cuboid IoU, union the accepted
/// scenes into the distilled set, and refit. `initial_scenes` seeds the
/// distilled set (the base case of the union recurrence). A round
/// accepting fewer than `min_accepted` scenes aborts the loop, returning
/// the last refitted model together with a shortfall report.
pub fn rejection_loop<S>(
    model: &S,
    initial_scenes: &[Scene],
    floors: &[FloorPlan],
    room_type: &str,
    config: &RejectionConfig,
    seed: u64,
) -> Result<RejectionOutcome<S>>
where
    S: SceneSampler + Clone + Sync,
{
    config.validate()?;
    if floors.is_empty() {
        return Err(Error::Sampling("rejection loop needs at least one floor".into()));
    }

    let mut current = model.clone();
    let mut distilled: Vec<Scene> = initial_scenes.to_vec();
    let mut reports = Vec::with_capacity(config.rounds);

    for round in 1..=config.rounds {
        let candidates: Vec<Scene> = (0..config.k_candidates)
            .into_par_iter()
            .map(|idx| {
                let floor = &floors[idx % floors.len()];
                current.sample(floor, room_type, derive_seed(seed, round as u64, idx as u64))
            })
            .collect::<Result<_>>()?;

        let mut mean_ciou = 0.0;
        for scene in &candidates {
            mean_ciou += ciou(scene)?;
        }
        mean_ciou /= candidates.len() as f64;

        let (accepted, _) = filter_candidates(candidates, config);
        let n_accepted = accepted.len();
        let shortfall = n_accepted < config.min_accepted;
        if !shortfall {
            distilled.extend(accepted);
        }
        reports.push(RoundReport {
            round,
            candidates: config.k_candidates,
            accepted: n_accepted,
            acceptance_rate: n_accepted as f64 / config.k_candidates as f64,
            mean_candidate_ciou: mean_ciou,
            distilled_size: distilled.len(),
        });
        if shortfall {
            return Ok(RejectionOutcome {
                model: current,
                reports,
                shortfall: Some(ShortfallReport {
                    round,
                    accepted: n_accepted,
                    min_accepted: config.min_accepted,
                }),
            });
        }
        current = current.refit(&distilled)?;
    }

    Ok(RejectionOutcome {
        model: current,
        reports,
        shortfall: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_assembly() -> Vec<Cuboid> {
        vec![Cuboid::new([0.5; 3], [1.0; 3])]
    }

    fn object(class: &str, t: [f64; 3], s: [f64; 3], theta: f64) -> SceneObject {
        SceneObject {
            id: "o".into(),
            class: class.into(),
            model_id: None,
            pose: Pose::new(t, s, theta).unwrap(),
            cuboids: cube_assembly(),
        }
    }

    fn single_object_scene() -> Scene {
        Scene::new(
            "room",
            FloorPlan::rectangle(8.0, 8.0),
            vec![object("table", [1.0, 0.0, 2.0], [1.0, 1.0, 1.0], 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn point_mass_count_distribution() {
        let dataset: Vec<Scene> = (0..4).map(|_| single_object_scene()).collect();
        let model = fit_baseline(&dataset).unwrap();
        assert_eq!(model.count_dist["room"], vec![(1, 1.0)]);
    }

    #[test]
    fn class_frequencies_are_counted() {
        let mut dataset: Vec<Scene> = (0..3).map(|_| single_object_scene()).collect();
        dataset.push(
            Scene::new(
                "room",
                FloorPlan::rectangle(8.0, 8.0),
                vec![object("bed", [0.0, 0.0, 0.0], [2.0, 1.0, 2.0], 0.0)],
            )
            .unwrap(),
        );
        let model = fit_baseline(&dataset).unwrap();
        assert!((model.classes["table"].frequency - 0.75).abs() < 1e-12);
        assert!((model.classes["bed"].frequency - 0.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_translations_are_regularized() {
        let dataset: Vec<Scene> = (0..5).map(|_| single_object_scene()).collect();
        let model = fit_baseline(&dataset).unwrap();
        let stats = &model.classes["table"];
        assert_eq!(stats.xz_mean, [1.0, 2.0]);
        assert!((stats.xz_cov[0][0] - COV_EPSILON).abs() < 1e-18);
        assert!((stats.xz_cov[1][1] - COV_EPSILON).abs() < 1e-18);
        assert_eq!(stats.xz_cov[0][1], 0.0);
        assert_eq!(stats.y_mean, 0.0);
    }

    #[test]
    fn empty_dataset_is_a_fit_error() {
        assert!(matches!(fit_baseline(&[]), Err(Error::Fit(_))));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let dataset: Vec<Scene> = (0..4).map(|_| single_object_scene()).collect();
        let model = fit_baseline(&dataset).unwrap();
        let floor = FloorPlan::rectangle(8.0, 8.0);
        let a = sample_scene(&model, &floor, "room", 42).unwrap();
        let b = sample_scene(&model, &floor, "room", 42).unwrap();
        assert_eq!(a, b);
        let c = sample_scene(&model, &floor, "room", 43).unwrap();
        assert!(a != c);
    }

    #[test]
    fn point_mass_model_reproduces_layout() {
        let dataset: Vec<Scene> = (0..4).map(|_| single_object_scene()).collect();
        let model = fit_baseline(&dataset).unwrap();
        let floor = FloorPlan::rectangle(8.0, 8.0);
        let sampled = sample_scene(&model, &floor, "room", 9).unwrap();
        assert_eq!(sampled.objects.len(), 1);
        let obj = &sampled.objects[0];
        assert_eq!(obj.class, "table");
        // translation within the epsilon jitter of the training layout
        assert!((obj.pose.translation[0] - 1.0).abs() < 0.1);
        assert!((obj.pose.translation[2] - 2.0).abs() < 0.1);
        assert_eq!(obj.pose.translation[1], 0.0);
        for i in 0..3 {
            assert!((obj.pose.size[i] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unknown_room_type_errors() {
        let model = fit_baseline(&[single_object_scene()]).unwrap();
        let floor = FloorPlan::rectangle(8.0, 8.0);
        assert!(matches!(
            sample_scene(&model, &floor, "attic", 1),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn tiny_floor_exhausts_attempts() {
        let model = fit_baseline(&[single_object_scene()]).unwrap();
        // far away from the fitted translation mean
        let far_floor = FloorPlan::new(vec![
            [100.0, 100.0],
            [100.4, 100.0],
            [100.4, 100.4],
            [100.0, 100.4],
        ])
        .unwrap();
        assert!(matches!(
            sample_scene(&model, &far_floor, "room", 5),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn sampled_class_frequencies_match_model() {
        // two classes at 0.75 / 0.25, single-object scenes
        let mut dataset: Vec<Scene> = (0..3).map(|_| single_object_scene()).collect();
        dataset.push(
            Scene::new(
                "room",
                FloorPlan::rectangle(8.0, 8.0),
                vec![object("bed", [0.0, 0.0, 0.0], [2.0, 1.0, 2.0], 0.0)],
            )
            .unwrap(),
        );
        let model = fit_baseline(&dataset).unwrap();
        let floor = FloorPlan::rectangle(8.0, 8.0);
        let n = 1000;
        let mut tables = 0usize;
        for i in 0..n {
            let scene = sample_scene(&model, &floor, "room", derive_seed(3, 0, i as u64)).unwrap();
            if scene.objects[0].class == "table" {
                tables += 1;
            }
        }
        // 3 sigma multinomial band around p = 0.75
        let p = 0.75;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        let observed = tables as f64 / n as f64;
        assert!(
            (observed - p).abs() <= 3.0 * sigma,
            "observed {observed}, expected {p} +- {}",
            3.0 * sigma
        );
    }

    #[test]
    fn filter_partitions_by_threshold() {
        let clean = Scene::new(
            "room",
            FloorPlan::rectangle(8.0, 8.0),
            vec![
                object("table", [0.0, 0.5, 0.0], [1.0; 3], 0.0),
                object("bed", [3.0, 0.5, 0.0], [1.0; 3], 0.0),
            ],
        )
        .unwrap();
        let dirty = Scene::new(
            "room",
            FloorPlan::rectangle(8.0, 8.0),
            vec![
                object("table", [0.0, 0.5, 0.0], [1.0; 3], 0.0),
                object("bed", [0.98, 0.5, 0.0], [1.0; 3], 0.0),
            ],
        )
        .unwrap();
        // the dirty pair overlaps ~1%: IoU just above the 0.001 threshold
        assert!(average_cuboid_iou(&dirty, IouAverage::NonzeroPairs) > 0.001);
        let config = RejectionConfig::new(4, 0.001, 1);
        let (acc, rej) = filter_candidates(vec![clean.clone(), dirty.clone()], &config);
        assert_eq!(acc.len(), 1);
        assert_eq!(rej.len(), 1);

        let everything = RejectionConfig::new(4, f64::INFINITY, 1);
        let (acc, rej) = filter_candidates(vec![clean, dirty], &everything);
        assert_eq!(acc.len(), 2);
        assert!(rej.is_empty());
    }

    #[test]
    fn average_modes_differ_on_sparse_overlap() {
        // three objects, one overlapping pair out of three cross pairs
        let scene = Scene::new(
            "room",
            FloorPlan::rectangle(16.0, 16.0),
            vec![
                object("table", [0.0, 0.5, 0.0], [1.0; 3], 0.0),
                object("bed", [0.5, 0.5, 0.0], [1.0; 3], 0.0),
                object("sofa", [5.0, 0.5, 0.0], [1.0; 3], 0.0),
            ],
        )
        .unwrap();
        let nonzero = average_cuboid_iou(&scene, IouAverage::NonzeroPairs);
        let all = average_cuboid_iou(&scene, IouAverage::AllPairs);
        assert!((nonzero - 1.0 / 3.0).abs() < 1e-12);
        assert!((all - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn rejection_loop_is_deterministic() {
        let dataset: Vec<Scene> = (0..6).map(|_| single_object_scene()).collect();
        let model = fit_baseline(&dataset).unwrap();
        let floors = vec![FloorPlan::rectangle(8.0, 8.0)];
        let config = RejectionConfig::new(20, 0.001, 2);
        let a = rejection_loop(&model, &dataset, &floors, "room", &config, 7).unwrap();
        let b = rejection_loop(&model, &dataset, &floors, "room", &config, 7).unwrap();
        assert_eq!(a.reports, b.reports);
        assert!(a.shortfall.is_none());
        // distilled sizes grow by exactly the accepted counts
        let mut expected = dataset.len();
        for r in &a.reports {
            expected += r.accepted;
            assert_eq!(r.distilled_size, expected);
        }
    }

    #[test]
    fn paper_scale_defaults() {
        let d = RejectionConfig::default();
        assert_eq!(d.k_candidates, 15_000);
        assert_eq!(d.t_threshold, 0.001);
        assert_eq!(d.rounds, 3);
        assert_eq!(d.min_accepted, 1_500);
    }

    #[test]
    fn unreachable_min_accepted_reports_shortfall() {
        let dataset: Vec<Scene> = (0..4).map(|_| single_object_scene()).collect();
        let model = fit_baseline(&dataset).unwrap();
        let floors = vec![FloorPlan::rectangle(8.0, 8.0)];
        let mut config = RejectionConfig::new(10, 0.001, 3);
        config.min_accepted = config.k_candidates + 1; // can never be met
        let out = rejection_loop(&model, &dataset, &floors, "room", &config, 7).unwrap();
        let shortfall = out.shortfall.expect("must report shortfall");
        assert_eq!(shortfall.round, 1);
        assert!(shortfall.accepted <= config.k_candidates);
        assert_eq!(out.reports.len(), 1);
    }
}
