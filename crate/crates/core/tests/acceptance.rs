//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured numbers once its assertions hold.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use common::*;
use roombox::abstraction::{abstract_shape_voxels, coarse_grain, MergeConfig, VoxelCuboid};
use roombox::curation::{curate_dataset, CurationConfig, CurationSummary};
use roombox::cuboid::Cuboid;
use roombox::metrics::{ciou, ckl, intersection_volume, nirate, OrientedCuboid};
use roombox::retrieval::{rasterize_cuboids, retrieve, CatalogEntry, RetrievalMode, ShapeCatalog};
use roombox::sampling::{fit_baseline, rejection_loop, RejectionConfig};
use roombox::scene::{FloorPlan, Scene};
use roombox::voxel::VoxelGrid;

fn occupied_mask(grid: &VoxelGrid) -> Vec<bool> {
    let n = grid.n();
    let mut mask = vec![false; n * n * n];
    for [x, y, z] in grid.occupied() {
        mask[x + n * (z + n * y)] = true;
    }
    mask
}

fn cuboid_mask(cuboids: &[VoxelCuboid], n: usize) -> (Vec<bool>, bool) {
    let mut mask = vec![false; n * n * n];
    let mut overlapped = false;
    for c in cuboids {
        let e = c.end();
        for y in c.min[1]..e[1] {
            for z in c.min[2]..e[2] {
                for x in c.min[0]..e[0] {
                    let i = x + n * (z + n * y);
                    if mask[i] {
                        overlapped = true;
                    }
                    mask[i] = true;
                }
            }
        }
    }
    (mask, overlapped)
}

#[test]
fn a1_coarse_graining_is_exact() {
    let mut worst_ms = 0.0f64;
    for (name, grid) in synthetic_suite() {
        let start = Instant::now();
        let coarse = coarse_grain(&grid);
        let elapsed = start.elapsed().as_secs_f64();
        worst_ms = worst_ms.max(elapsed * 1e3);
        assert!(elapsed < 1.0, "{name}: coarse-graining took {elapsed:.3}s");

        let (mask, overlapped) = cuboid_mask(&coarse, grid.n());
        assert!(!overlapped, "{name}: coarse cuboids overlap");
        assert_eq!(
            mask,
            occupied_mask(&grid),
            "{name}: union differs from the occupied set"
        );
        for c in &coarse {
            assert_eq!(c.extent[1], 1, "{name}: coarse cuboid with y-extent != 1");
        }
    }
    println!("[A1] PASS - 20/20 shapes exact and disjoint, worst shape {worst_ms:.1} ms");
}

#[test]
fn a2_merging_compacts_without_bloat() {
    let config = MergeConfig::for_resolution(64);
    assert_eq!(config.scale_s, 4096.0); // (n/4)^3
    let mut total_coarse = 0usize;
    let mut total_merged = 0usize;
    let mut worst_drop = 1.0f64;
    let mut worst_excess = 0.0f64;
    for (name, grid) in synthetic_suite() {
        let coarse_count = coarse_grain(&grid).len();
        let merged = abstract_shape_voxels(&grid, &config).unwrap();
        let drop = 1.0 - merged.len() as f64 / coarse_count as f64;
        assert!(
            drop >= 0.80,
            "{name}: drop {:.1}% ({} -> {})",
            drop * 100.0,
            coarse_count,
            merged.len()
        );
        let occupied = grid.occupancy_count();
        let (mask, _) = cuboid_mask(&merged, grid.n());
        let union = mask.iter().filter(|&&b| b).count();
        assert!(
            mask.iter()
                .zip(occupied_mask(&grid))
                .all(|(&m, o)| m || !o),
            "{name}: merged union lost occupied voxels"
        );
        let excess = (union - occupied) as f64 / occupied as f64;
        assert!(
            excess < 0.25,
            "{name}: volume excess {:.1}%",
            excess * 100.0
        );
        total_coarse += coarse_count;
        total_merged += merged.len();
        worst_drop = worst_drop.min(drop);
        worst_excess = worst_excess.max(excess);
    }
    let total_drop = 1.0 - total_merged as f64 / total_coarse as f64;
    assert!(total_drop >= 0.80);
    println!(
        "[A2] PASS - counts {} -> {} ({:.1}% drop, worst shape {:.1}%), worst excess {:.2}%",
        total_coarse,
        total_merged,
        total_drop * 100.0,
        worst_drop * 100.0,
        worst_excess * 100.0
    );
}

#[test]
fn a3_analytic_intersection_matches_monte_carlo() {
    // closed-form 45-degree case first
    let a = OrientedCuboid::new([0.0; 3], [1.0; 3], 0.0);
    let b = OrientedCuboid::new([0.0; 3], [1.0; 3], std::f64::consts::FRAC_PI_4);
    let octagon = 2.0 * (2.0_f64.sqrt() - 1.0);
    assert!(
        (intersection_volume(&a, &b) - octagon).abs() < 1e-9,
        "45-degree case off: {}",
        intersection_volume(&a, &b)
    );

    let mut rng = SmallRng::seed_from_u64(0xA3);
    let samples = 1_000_000;
    let mut max_sigmas = 0.0f64;
    for pair in 0..200 {
        let random_box = |rng: &mut SmallRng| {
            OrientedCuboid::new(
                [
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.5..0.5),
                ],
                [
                    rng.random_range(0.2..1.5),
                    rng.random_range(0.2..1.5),
                    rng.random_range(0.2..1.5),
                ],
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        };
        let a = random_box(&mut rng);
        let b = random_box(&mut rng);
        let analytic = intersection_volume(&a, &b);
        let (mc, sigma) = mc_intersection_volume(&a, &b, samples, 0xA3_000 + pair);
        let tol = 3.0 * sigma + 1e-9;
        assert!(
            (analytic - mc).abs() <= tol,
            "pair {pair}: analytic {analytic} vs mc {mc} (sigma {sigma})"
        );
        if sigma > 0.0 {
            max_sigmas = max_sigmas.max((analytic - mc).abs() / sigma);
        }
    }
    println!("[A3] PASS - 200 pairs within 3 sigma (max {max_sigmas:.2}), octagon within 1e-9");
}

struct CurationFixture {
    input: Vec<(String, Scene)>,
    output: Vec<(String, Scene)>,
    summary: CurationSummary,
    elapsed: f64,
}

fn curation_fixture() -> &'static CurationFixture {
    static FIXTURE: OnceLock<CurationFixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let input = collision_dataset(80, 120, 0xA4);
        let start = Instant::now();
        let (output, summary) = curate_dataset(&input, &CurationConfig::default());
        CurationFixture {
            elapsed: start.elapsed().as_secs_f64(),
            input,
            output,
            summary,
        }
    })
}

#[test]
fn a4_curation_recovers_nirate() {
    let fx = curation_fixture();
    assert_eq!(fx.input.len(), 200);
    let before = fx.summary.nirate_before.expect("defined on this set");
    let after = fx.summary.nirate_after.expect("defined on this set");
    assert!(
        (before - 40.0).abs() < 1e-9,
        "initial NIRate should be 40%, got {before}"
    );
    assert!(after >= 95.0, "NIRate after curation {after}");
    assert!(fx.elapsed < 60.0, "curation took {:.1}s", fx.elapsed);

    for ((_, original), (_, curated)) in fx.input.iter().zip(&fx.output) {
        for (a, b) in original.objects.iter().zip(&curated.objects) {
            // y frozen for every object
            assert_eq!(
                a.pose.translation[1].to_bits(),
                b.pose.translation[1].to_bits()
            );
            assert_eq!(a.pose.size, b.pose.size);
            assert_eq!(a.class, b.class);
            assert_eq!(a.cuboids, b.cuboids);
        }
    }

    // objects that had no overlap move by exactly zero: in this dataset
    // only object 0 and the injected collider ever intersect
    for ((_, original), (_, curated)) in fx.input.iter().zip(&fx.output) {
        let colliding = original.objects.len()
            != original
                .objects
                .iter()
                .filter(|o| o.id != "obj_collider")
                .count();
        for (i, (a, b)) in original.objects.iter().zip(&curated.objects).enumerate() {
            let moving = colliding && (i == 0 || a.id == "obj_collider");
            if !moving {
                assert_eq!(
                    a.pose.translation[0].to_bits(),
                    b.pose.translation[0].to_bits(),
                    "clean object moved on x"
                );
                assert_eq!(
                    a.pose.translation[2].to_bits(),
                    b.pose.translation[2].to_bits(),
                    "clean object moved on z"
                );
            }
        }
    }
    println!(
        "[A4] PASS - NIRate {before:.1}% -> {after:.1}% in {:.1}s, y frozen, clean objects pinned",
        fx.elapsed
    );
}

fn suite_catalog() -> ShapeCatalog {
    let config = MergeConfig::for_resolution(64);
    let classes = [
        "block", "block", "block", "prism", "prism", "prism", "prism", "prism", "prism",
        "table", "seat", "bed", "storage", "table", "storage", "seat", "seat", "lamp",
        "storage", "seat",
    ];
    let entries: Vec<CatalogEntry> = synthetic_suite()
        .into_iter()
        .zip(classes)
        .map(|((name, grid), class)| {
            let cuboids: Vec<Cuboid> = abstract_shape_voxels(&grid, &config)
                .unwrap()
                .iter()
                .map(|c| c.to_local_cuboid(grid.n()))
                .collect();
            let voxels = rasterize_cuboids(&cuboids, 64).unwrap();
            CatalogEntry {
                model_id: name.to_string(),
                class: class.to_string(),
                voxels,
                cuboids,
            }
        })
        .collect();
    ShapeCatalog::from_entries(entries).unwrap()
}

#[test]
fn a5_retrieval_self_match_and_bbox_distractor() {
    let catalog = suite_catalog();
    assert_eq!(catalog.entries().len(), 20);
    for entry in catalog.entries() {
        let (id, iou) = retrieve(
            &entry.cuboids,
            &entry.class,
            &catalog,
            RetrievalMode::Cuboid,
        )
        .unwrap();
        assert_eq!(id, entry.model_id, "self-retrieval picked another model");
        assert_eq!(iou, 1.0, "self-retrieval IoU for {} was {iou}", entry.model_id);
    }

    // constructed distractor: a block that fills the stool's bounding box
    // beats the true stool under bbox matching but loses under cuboid
    // matching
    let stool = vec![
        Cuboid::new([0.5, 0.45, 0.5], [0.6, 0.1, 0.6]),
        Cuboid::new([0.25, 0.2, 0.25], [0.1, 0.4, 0.1]),
        Cuboid::new([0.75, 0.2, 0.25], [0.1, 0.4, 0.1]),
        Cuboid::new([0.25, 0.2, 0.75], [0.1, 0.4, 0.1]),
        Cuboid::new([0.75, 0.2, 0.75], [0.1, 0.4, 0.1]),
    ];
    let (lo, hi) = Cuboid::bounding_box(&stool).unwrap();
    let block = vec![Cuboid::new(
        [
            0.5 * (lo[0] + hi[0]),
            0.5 * (lo[1] + hi[1]),
            0.5 * (lo[2] + hi[2]),
        ],
        [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]],
    )];
    let mut raised_stool = stool.clone();
    raised_stool[0].center[1] += 0.04;
    let n = 64;
    let distractor_catalog = ShapeCatalog::from_entries(vec![
        CatalogEntry {
            model_id: "bulky_block".into(),
            class: "stool".into(),
            voxels: rasterize_cuboids(&block, n).unwrap(),
            cuboids: block,
        },
        CatalogEntry {
            model_id: "true_stool".into(),
            class: "stool".into(),
            voxels: rasterize_cuboids(&raised_stool, n).unwrap(),
            cuboids: raised_stool,
        },
    ])
    .unwrap();
    let (bbox_pick, _) = retrieve(&stool, "stool", &distractor_catalog, RetrievalMode::Bbox).unwrap();
    let (cuboid_pick, _) =
        retrieve(&stool, "stool", &distractor_catalog, RetrievalMode::Cuboid).unwrap();
    assert_eq!(bbox_pick, "bulky_block");
    assert_eq!(cuboid_pick, "true_stool");
    println!("[A5] PASS - 20/20 self-retrievals at IoU 1.0; bbox mode picks the bulky distractor");
}

#[test]
fn a6_rejection_loop_improves_monotonically() {
    let start = Instant::now();
    let dataset = benchmark_dataset(300, 0xA6);
    let model = fit_baseline(&dataset).unwrap();
    let floors = vec![FloorPlan::rectangle(8.0, 8.0)];
    let config = RejectionConfig::new(500, 0.001, 3);

    let run = |seed: u64| rejection_loop(&model, &dataset, &floors, "bench", &config, seed).unwrap();
    let outcome = run(0x5EED);
    assert!(outcome.shortfall.is_none(), "loop fell short: {:?}", outcome.shortfall);
    assert_eq!(outcome.reports.len(), 3);

    for w in outcome.reports.windows(2) {
        assert!(
            w[1].mean_candidate_ciou <= w[0].mean_candidate_ciou + 1e-9,
            "mean candidate CIoU rose: {} -> {}",
            w[0].mean_candidate_ciou,
            w[1].mean_candidate_ciou
        );
    }
    assert!(
        outcome.reports[2].acceptance_rate > outcome.reports[0].acceptance_rate,
        "acceptance did not improve: {} vs {}",
        outcome.reports[0].acceptance_rate,
        outcome.reports[2].acceptance_rate
    );

    // determinism: byte-identical round reports across runs
    let again = run(0x5EED);
    let json_a = serde_json::to_string(&outcome.reports).unwrap();
    let json_b = serde_json::to_string(&again.reports).unwrap();
    assert_eq!(json_a, json_b);

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "loop took {elapsed:.1}s");
    let rates: Vec<f64> = outcome.reports.iter().map(|r| r.acceptance_rate).collect();
    let cious: Vec<f64> = outcome
        .reports
        .iter()
        .map(|r| r.mean_candidate_ciou)
        .collect();
    println!(
        "[A6] PASS - mean CIoU {cious:.3?} non-increasing, acceptance {rates:.3?}, {elapsed:.1}s, deterministic"
    );
}

#[test]
fn a7_metric_sanity_and_cross_checks() {
    // CKL of identical histograms is exactly zero
    let mut hist = std::collections::BTreeMap::new();
    hist.insert("chair".to_string(), 7u64);
    hist.insert("table".to_string(), 3u64);
    assert_eq!(ckl(&hist, &hist).unwrap(), 0.0);

    // CIoU of an overlap-free scene is exactly zero
    let clean = Scene::new(
        "bench",
        FloorPlan::rectangle(12.0, 12.0),
        vec![
            simple_object("a", "table", [-2.0, 0.5, 0.0], [1.0; 3], 0.0),
            simple_object("b", "chair", [2.0, 0.5, 0.0], [1.0; 3], 0.3),
        ],
    )
    .unwrap();
    assert_eq!(ciou(&clean).unwrap(), 0.0);

    // NIRate recomputed from the curated output matches the summary
    let fx = curation_fixture();
    let curated: Vec<Scene> = fx.output.iter().map(|(_, s)| s.clone()).collect();
    let recomputed = nirate(&curated, fx.summary.nirate_threshold).unwrap();
    assert_eq!(
        recomputed,
        fx.summary.nirate_after.expect("defined"),
        "summary and independent recomputation disagree"
    );
    println!("[A7] PASS - CKL(identical) = 0, CIoU(clean) = 0, NIRate recomputation exact");
}

#[test]
fn a8_formats_round_trip_byte_identically() {
    // scene JSON: canonicalize once, then byte-stable
    let scene = Scene::new(
        "bench",
        FloorPlan::rectangle(5.3, 4.1),
        vec![
            simple_object(
                "obj_0",
                "table",
                [0.1234567890123, 0.45, -1.2],
                [1.1, 0.7, 0.9],
                0.7,
            ),
            simple_object(
                "obj_1",
                "chair",
                [std::f64::consts::PI, 0.25, 0.5],
                [0.5, 0.5, 0.5],
                -2.34567,
            ),
        ],
    )
    .unwrap();
    let canonical = Scene::from_json_bytes(&scene.to_json_bytes().unwrap())
        .unwrap()
        .to_json_bytes()
        .unwrap();
    let once_more = Scene::from_json_bytes(&canonical)
        .unwrap()
        .to_json_bytes()
        .unwrap();
    assert_eq!(canonical, once_more, "scene JSON not byte-stable");

    // CVOX: already canonical on write
    let (_, grid) = &synthetic_suite()[10];
    let mut bytes = Vec::new();
    grid.write_cvox(&mut bytes).unwrap();
    let back = VoxelGrid::read_cvox(bytes.as_slice()).unwrap();
    let mut bytes2 = Vec::new();
    back.write_cvox(&mut bytes2).unwrap();
    assert_eq!(bytes, bytes2, "CVOX not byte-stable");
    println!("[A8] PASS - scene JSON and CVOX survive save/load/save byte-identically");
}
