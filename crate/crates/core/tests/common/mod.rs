//! Shared fixtures for the integration and acceptance suites: a synthetic
//! shape suite, scene dataset generators, and independent geometric
//! oracles.

#![allow(dead_code)]

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use roombox::cuboid::Cuboid;
use roombox::metrics::OrientedCuboid;
use roombox::scene::{FloorPlan, Pose, Scene, SceneObject};
use roombox::voxel::VoxelGrid;

pub fn fill_block(grid: &mut VoxelGrid, min: [usize; 3], extent: [usize; 3]) {
    for y in min[1]..min[1] + extent[1] {
        for z in min[2]..min[2] + extent[2] {
            for x in min[0]..min[0] + extent[0] {
                grid.set(x, y, z, true);
            }
        }
    }
}

/// Twenty synthetic shapes at n = 64: blocks, L/T/U-style prisms, and
/// furniture archetypes.
pub fn synthetic_suite() -> Vec<(&'static str, VoxelGrid)> {
    const N: usize = 64;
    let mut suite = Vec::new();
    let mut shape = |name: &'static str, build: &dyn Fn(&mut VoxelGrid)| {
        let mut g = VoxelGrid::empty(N).unwrap();
        build(&mut g);
        suite.push((name, g));
    };

    shape("block_cube", &|g| fill_block(g, [16, 0, 16], [32, 32, 32]));
    shape("block_flat", &|g| fill_block(g, [8, 0, 20], [48, 16, 24]));
    shape("block_tall", &|g| fill_block(g, [28, 0, 28], [8, 56, 8]));

    shape("l_prism", &|g| {
        fill_block(g, [8, 0, 8], [40, 20, 16]);
        fill_block(g, [8, 0, 24], [24, 20, 24]);
    });
    shape("t_prism", &|g| {
        fill_block(g, [8, 0, 8], [48, 16, 12]);
        fill_block(g, [26, 0, 20], [12, 16, 32]);
    });
    shape("u_prism", &|g| {
        fill_block(g, [8, 0, 8], [12, 16, 44]);
        fill_block(g, [44, 0, 8], [12, 16, 44]);
        fill_block(g, [20, 0, 8], [24, 16, 12]);
    });
    shape("plus_prism", &|g| {
        fill_block(g, [24, 0, 8], [16, 12, 48]);
        fill_block(g, [8, 0, 24], [16, 12, 16]);
        fill_block(g, [40, 0, 24], [16, 12, 16]);
    });
    shape("ring_prism", &|g| {
        // square annulus: outer 40, inner hole 24
        fill_block(g, [12, 0, 12], [40, 12, 8]);
        fill_block(g, [12, 0, 44], [40, 12, 8]);
        fill_block(g, [12, 0, 20], [8, 12, 24]);
        fill_block(g, [44, 0, 20], [8, 12, 24]);
    });
    shape("stairs", &|g| {
        fill_block(g, [8, 0, 8], [16, 8, 48]);
        fill_block(g, [8, 8, 8], [16, 8, 32]);
        fill_block(g, [8, 16, 8], [16, 8, 16]);
    });

    shape("table", &|g| {
        fill_block(g, [8, 40, 8], [48, 4, 48]);
        for &(lx, lz) in &[(8, 8), (52, 8), (8, 52), (52, 52)] {
            fill_block(g, [lx, 0, lz], [4, 40, 4]);
        }
    });
    shape("chair", &|g| {
        fill_block(g, [20, 16, 20], [24, 4, 24]); // seat
        fill_block(g, [20, 20, 20], [24, 24, 4]); // back
        for &(lx, lz) in &[(20, 20), (40, 20), (20, 40), (40, 40)] {
            fill_block(g, [lx, 0, lz], [4, 16, 4]);
        }
    });
    shape("bed", &|g| {
        fill_block(g, [8, 0, 4], [48, 12, 56]); // base
        fill_block(g, [8, 12, 4], [48, 16, 4]); // headboard
    });
    shape("wardrobe", &|g| fill_block(g, [12, 0, 22], [40, 56, 20]));
    shape("desk", &|g| {
        fill_block(g, [4, 28, 18], [56, 4, 28]); // top
        fill_block(g, [4, 0, 18], [4, 28, 28]); // side panels
        fill_block(g, [56, 0, 18], [4, 28, 28]);
    });
    shape("bookshelf", &|g| {
        fill_block(g, [12, 0, 40], [40, 48, 4]); // back panel
        for level in 0..4 {
            fill_block(g, [12, level * 12, 24], [40, 4, 16]);
        }
    });
    shape("sofa", &|g| {
        fill_block(g, [8, 0, 20], [48, 12, 24]); // base
        fill_block(g, [8, 12, 36], [48, 16, 8]); // back
        fill_block(g, [8, 12, 20], [8, 8, 16]); // arms
        fill_block(g, [48, 12, 20], [8, 8, 16]);
    });
    shape("stool", &|g| {
        fill_block(g, [22, 16, 22], [20, 4, 20]);
        for &(lx, lz) in &[(22, 22), (38, 22), (22, 38), (38, 38)] {
            fill_block(g, [lx, 0, lz], [4, 16, 4]);
        }
    });
    shape("lamp", &|g| {
        fill_block(g, [24, 0, 24], [16, 4, 16]); // base
        fill_block(g, [30, 4, 30], [4, 40, 4]); // pole
        fill_block(g, [26, 44, 26], [12, 8, 12]); // head
    });
    shape("nightstand", &|g| {
        fill_block(g, [22, 4, 22], [20, 16, 20]); // box
        for &(lx, lz) in &[(22, 22), (38, 22), (22, 38), (38, 38)] {
            fill_block(g, [lx, 0, lz], [4, 4, 4]);
        }
    });
    shape("l_sofa", &|g| {
        fill_block(g, [8, 0, 8], [40, 12, 16]); // wing a
        fill_block(g, [8, 0, 24], [24, 12, 24]); // wing b
        fill_block(g, [8, 12, 8], [40, 16, 8]); // back a
        fill_block(g, [8, 12, 32], [8, 16, 16]); // back b
    });

    assert_eq!(suite.len(), 20);
    suite
}

pub fn unit_cube_assembly() -> Vec<Cuboid> {
    vec![Cuboid::new([0.5; 3], [1.0; 3])]
}

pub fn simple_object(
    id: &str,
    class: &str,
    translation: [f64; 3],
    size: [f64; 3],
    theta: f64,
) -> SceneObject {
    SceneObject {
        id: id.into(),
        class: class.into(),
        model_id: None,
        pose: Pose::new(translation, size, theta).unwrap(),
        cuboids: unit_cube_assembly(),
    }
}

/// Dataset for the curation criterion: `n_clean` overlap-free scenes plus
/// `n_dirty` scenes with one injected deep collision. Clean objects sit
/// on a 3 m grid, far beyond any finite-difference stencil.
pub fn collision_dataset(n_clean: usize, n_dirty: usize, seed: u64) -> Vec<(String, Scene)> {
    let mut rng = SmallRng::seed_from_u64(seed);
    let slots: Vec<[f64; 2]> = vec![
        [-3.0, -3.0],
        [0.0, -3.0],
        [3.0, -3.0],
        [-3.0, 0.0],
        [3.0, 0.0],
        [-3.0, 3.0],
        [0.0, 3.0],
        [3.0, 3.0],
    ];
    let mut scenes = Vec::new();
    for i in 0..n_clean + n_dirty {
        let dirty = i >= n_clean;
        let n_objects = rng.random_range(2..=4usize);
        let mut objects = Vec::new();
        for (j, slot) in slots.iter().take(n_objects).enumerate() {
            let s = rng.random_range(0.9..1.3);
            objects.push(simple_object(
                &format!("obj_{j}"),
                ["table", "chair", "sofa", "bed"][j % 4],
                [slot[0], 0.5 * s, slot[1]],
                [s, s, s],
                0.0,
            ));
        }
        if dirty {
            // deep overlap with object 0, offset asymmetrically
            let base = objects[0].pose.translation;
            let s = objects[0].pose.size[0];
            objects.push(simple_object(
                "obj_collider",
                "lamp",
                [
                    base[0] + 0.45 * s,
                    base[1],
                    base[2] + rng.random_range(0.08..0.2),
                ],
                [s, s, s],
                0.0,
            ));
        }
        let scene = Scene::new("bench", FloorPlan::rectangle(12.0, 12.0), objects).unwrap();
        scenes.push((format!("scene_{i:03}.json"), scene));
    }
    scenes
}

/// Dataset for the rejection-loop criterion: object count correlates with
/// crowding, so filtering and refitting have something to improve.
pub fn benchmark_dataset(n_scenes: usize, seed: u64) -> Vec<Scene> {
    let mut rng = SmallRng::seed_from_u64(seed);
    let classes: [(&str, [f64; 3]); 4] = [
        ("sofa", [1.8, 0.9, 0.9]),
        ("table", [1.2, 0.5, 1.2]),
        ("chair", [0.5, 0.9, 0.5]),
        ("lamp", [0.3, 1.5, 0.3]),
    ];
    let mut scenes = Vec::new();
    for _ in 0..n_scenes {
        let count = rng.random_range(2..=7usize);
        let mut objects = Vec::new();
        for j in 0..count {
            let (class, base) = classes[rng.random_range(0..classes.len())];
            let jitter = (rng.random::<f64>() - 0.5) * 0.1;
            let size = [
                base[0] * (1.0 + jitter),
                base[1] * (1.0 + jitter),
                base[2] * (1.0 + jitter),
            ];
            let x = rng.random_range(-3.0..3.0);
            let z = rng.random_range(-3.0..3.0);
            let theta = if rng.random::<bool>() {
                0.0
            } else {
                std::f64::consts::FRAC_PI_2
            } + (rng.random::<f64>() - 0.5) * 0.1;
            objects.push(simple_object(
                &format!("obj_{j}"),
                class,
                [x, 0.5 * size[1], z],
                size,
                theta,
            ));
        }
        scenes.push(Scene::new("bench", FloorPlan::rectangle(8.0, 8.0), objects).unwrap());
    }
    scenes
}

/// Monte Carlo oracle for oriented-box intersection volume: sample
/// uniformly inside `a`, count hits in `b`. Returns the estimate and one
/// standard deviation of its sampling error.
pub fn mc_intersection_volume(
    a: &OrientedCuboid,
    b: &OrientedCuboid,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = SmallRng::seed_from_u64(seed);
    let (sin_t, cos_t) = (a.theta.sin(), a.theta.cos());
    let mut hits = 0usize;
    for _ in 0..samples {
        let local = [
            (rng.random::<f64>() - 0.5) * a.extents[0],
            (rng.random::<f64>() - 0.5) * a.extents[1],
            (rng.random::<f64>() - 0.5) * a.extents[2],
        ];
        let world = [
            local[0] * cos_t + local[2] * sin_t + a.center[0],
            local[1] + a.center[1],
            -local[0] * sin_t + local[2] * cos_t + a.center[2],
        ];
        if b.contains_point(world) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let vol = a.volume();
    let sigma = vol * (p * (1.0 - p) / samples as f64).sqrt();
    (vol * p, sigma)
}

/// Rasterize every world cuboid of a scene into a bitset over the scene's
/// bounding box at the given resolution. Returns `(owner, mask)` pairs.
fn scene_cuboid_masks(scene: &Scene, resolution: usize) -> Vec<(usize, Vec<u64>)> {
    let cubs = scene.world_cuboids_with_owner();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (_, c) in &cubs {
        let (clo, chi) = c.aabb();
        for i in 0..3 {
            lo[i] = lo[i].min(clo[i]);
            hi[i] = hi[i].max(chi[i]);
        }
    }
    let r = resolution;
    let cell = [
        (hi[0] - lo[0]) / r as f64,
        (hi[1] - lo[1]) / r as f64,
        (hi[2] - lo[2]) / r as f64,
    ];

    cubs.into_iter()
        .map(|(owner, c)| {
            let mut mask = vec![0u64; (r * r * r).div_ceil(64)];
            let (clo, chi) = c.aabb();
            let clamp = |v: f64, max: usize| (v.max(0.0) as usize).min(max);
            let i0 = clamp(((clo[0] - lo[0]) / cell[0]).floor(), r - 1);
            let i1 = clamp(((chi[0] - lo[0]) / cell[0]).ceil(), r - 1);
            let j0 = clamp(((clo[1] - lo[1]) / cell[1]).floor(), r - 1);
            let j1 = clamp(((chi[1] - lo[1]) / cell[1]).ceil(), r - 1);
            let k0 = clamp(((clo[2] - lo[2]) / cell[2]).floor(), r - 1);
            let k1 = clamp(((chi[2] - lo[2]) / cell[2]).ceil(), r - 1);
            for j in j0..=j1 {
                for k in k0..=k1 {
                    for i in i0..=i1 {
                        let p = [
                            lo[0] + (i as f64 + 0.5) * cell[0],
                            lo[1] + (j as f64 + 0.5) * cell[1],
                            lo[2] + (k as f64 + 0.5) * cell[2],
                        ];
                        if c.contains_point(p) {
                            let idx = i + r * (k + r * j);
                            mask[idx >> 6] |= 1u64 << (idx & 63);
                        }
                    }
                }
            }
            (owner, mask)
        })
        .collect()
}

/// Brute-force voxel-rasterization oracle for pairwise cuboid IoU of a
/// scene, at the given grid resolution over the scene's bounding box.
pub fn voxel_iou_oracle(scene: &Scene, resolution: usize) -> Vec<Vec<f64>> {
    let masks = scene_cuboid_masks(scene, resolution);
    let mut out = vec![vec![0.0; masks.len()]; masks.len()];
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            if masks[i].0 == masks[j].0 {
                continue;
            }
            let mut inter = 0u64;
            let mut union = 0u64;
            for (a, b) in masks[i].1.iter().zip(&masks[j].1) {
                inter += (a & b).count_ones() as u64;
                union += (a | b).count_ones() as u64;
            }
            let v = if union == 0 {
                0.0
            } else {
                inter as f64 / union as f64
            };
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// Voxel-rasterization oracle for CIoU: cross-entity intersection cells
/// over total own cells, scaled by 1000. Cell volumes cancel.
pub fn voxel_ciou_oracle(scene: &Scene, resolution: usize) -> f64 {
    let masks = scene_cuboid_masks(scene, resolution);
    let mut inter_cells = 0u64;
    let mut own_cells = 0u64;
    for (i, (owner_i, mask_i)) in masks.iter().enumerate() {
        own_cells += mask_i.iter().map(|w| w.count_ones() as u64).sum::<u64>();
        for (owner_j, mask_j) in masks.iter().skip(i + 1) {
            if owner_i == owner_j {
                continue;
            }
            inter_cells += mask_i
                .iter()
                .zip(mask_j)
                .map(|(a, b)| (a & b).count_ones() as u64)
                .sum::<u64>();
        }
    }
    1000.0 * inter_cells as f64 / own_cells as f64
}

/// OBJ text for a set of axis-aligned boxes, for mesh-pipeline tests.
pub fn boxes_to_obj(boxes: &[([f64; 3], [f64; 3])]) -> String {
    let mut obj = String::new();
    let mut base = 1usize;
    for (min, max) in boxes {
        let [x0, y0, z0] = *min;
        let [x1, y1, z1] = *max;
        let verts = [
            [x0, y0, z0],
            [x1, y0, z0],
            [x1, y1, z0],
            [x0, y1, z0],
            [x0, y0, z1],
            [x1, y0, z1],
            [x1, y1, z1],
            [x0, y1, z1],
        ];
        for v in verts {
            obj.push_str(&format!("v {} {} {}\n", v[0], v[1], v[2]));
        }
        let quads = [
            [0, 3, 2, 1],
            [4, 5, 6, 7],
            [0, 1, 5, 4],
            [3, 7, 6, 2],
            [0, 4, 7, 3],
            [1, 2, 6, 5],
        ];
        for q in quads {
            obj.push_str(&format!(
                "f {} {} {} {}\n",
                base + q[0],
                base + q[1],
                base + q[2],
                base + q[3]
            ));
        }
        base += 8;
    }
    obj
}
