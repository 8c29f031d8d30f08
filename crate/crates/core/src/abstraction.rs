//! Shape abstraction: turn a filled voxel grid into a compact set of
//! cuboids.
//!
//! The pipeline has three stages. Coarse-graining greedily converts
//! occupied voxels into disjoint single-layer slabs (y-extent 1, maximal
//! x/z expansion). Segmentation covers the floor projection with at most
//! `k` rectangles by repeatedly carving the largest empty rectangle out of
//! the current cover. Merging then glues adjacent cuboids whenever the
//! bounding box of the pair does not waste too much volume, with an
//! acceptance threshold that decays exponentially in the merged volume so
//! small fragments merge eagerly and large slabs stay put.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::cuboid::Cuboid;
use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

/// Integer box in voxel coordinates: inclusive min corner plus extents
/// (each at least 1 voxel).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoxelCuboid {
    pub min: [usize; 3],
    pub extent: [usize; 3],
}

impl VoxelCuboid {
    pub fn new(min: [usize; 3], extent: [usize; 3]) -> Self {
        debug_assert!(extent.iter().all(|&e| e >= 1));
        VoxelCuboid { min, extent }
    }

    /// Exclusive end corner.
    pub fn end(&self) -> [usize; 3] {
        [
            self.min[0] + self.extent[0],
            self.min[1] + self.extent[1],
            self.min[2] + self.extent[2],
        ]
    }

    pub fn volume(&self) -> u64 {
        self.extent.iter().map(|&e| e as u64).product()
    }

    pub fn overlaps(&self, other: &VoxelCuboid) -> bool {
        let (ae, be) = (self.end(), other.end());
        (0..3).all(|i| self.min[i] < be[i] && other.min[i] < ae[i])
    }

    /// Adjacency for merging: true when the 1-voxel dilations intersect,
    /// i.e. the boxes overlap or touch on a face, edge, or corner.
    pub fn touches_or_overlaps(&self, other: &VoxelCuboid) -> bool {
        let (ae, be) = (self.end(), other.end());
        (0..3).all(|i| self.min[i] <= be[i] && other.min[i] <= ae[i])
    }

    pub fn contains(&self, other: &VoxelCuboid) -> bool {
        let (ae, be) = (self.end(), other.end());
        (0..3).all(|i| self.min[i] <= other.min[i] && be[i] <= ae[i])
    }

    /// Smallest box containing both inputs.
    pub fn bounding_union(&self, other: &VoxelCuboid) -> VoxelCuboid {
        let (ae, be) = (self.end(), other.end());
        let mut min = [0usize; 3];
        let mut extent = [0usize; 3];
        for i in 0..3 {
            min[i] = self.min[i].min(other.min[i]);
            extent[i] = ae[i].max(be[i]) - min[i];
        }
        VoxelCuboid { min, extent }
    }

    /// Convert to the normalized `[0,1]^3` local frame of a grid with
    /// resolution `n`.
    pub fn to_local_cuboid(&self, n: usize) -> Cuboid {
        let nf = n as f64;
        Cuboid::new(
            [
                (self.min[0] as f64 + 0.5 * self.extent[0] as f64) / nf,
                (self.min[1] as f64 + 0.5 * self.extent[1] as f64) / nf,
                (self.min[2] as f64 + 0.5 * self.extent[2] as f64) / nf,
            ],
            [
                self.extent[0] as f64 / nf,
                self.extent[1] as f64 / nf,
                self.extent[2] as f64 / nf,
            ],
        )
    }
}

/// Knobs for the merging stage. `scale_s` is the volume (in voxels) at
/// which the dynamic threshold has decayed by a factor of e.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeConfig {
    pub tau_min: f64,
    pub tau_max: f64,
    pub scale_s: f64,
    pub use_dynamic: bool,
    pub tau_static: f64,
    pub max_segments_k: usize,
}

impl MergeConfig {
    /// Defaults for a grid of resolution `n`: tau in [1.0, 1.5],
    /// S = (n/4)^3 voxels, dynamic thresholding on, at most 8 segments.
    pub fn for_resolution(n: usize) -> Self {
        let quarter = (n as f64 / 4.0).max(1.0);
        MergeConfig {
            tau_min: 1.0,
            tau_max: 1.5,
            scale_s: quarter * quarter * quarter,
            use_dynamic: true,
            tau_static: 1.5,
            max_segments_k: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_min >= 1.0) {
            return Err(Error::Config(format!(
                "tau_min must be >= 1, got {}",
                self.tau_min
            )));
        }
        if !(self.tau_max >= self.tau_min) {
            return Err(Error::Config(format!(
                "tau_max must be >= tau_min, got {} < {}",
                self.tau_max, self.tau_min
            )));
        }
        if !(self.scale_s > 0.0) {
            return Err(Error::Config(format!(
                "scale_s must be positive, got {}",
                self.scale_s
            )));
        }
        if !(self.tau_static >= 1.0) {
            return Err(Error::Config(format!(
                "tau_static must be >= 1, got {}",
                self.tau_static
            )));
        }
        if self.max_segments_k < 1 {
            return Err(Error::Config("max_segments_k must be >= 1".into()));
        }
        Ok(())
    }

    /// Merge acceptance threshold for a merged volume of `v_c` voxels:
    /// `tau_min + (tau_max - tau_min) * exp(-v_c / S)` in dynamic mode,
    /// `tau_static` otherwise.
    pub fn tau(&self, v_c: f64) -> f64 {
        if self.use_dynamic {
            self.tau_min + (self.tau_max - self.tau_min) * (-v_c / self.scale_s).exp()
        } else {
            self.tau_static
        }
    }

    /// Acceptance test `V_C / (V_A + V_B) < tau(V_C)`, evaluated as
    /// `ratio - tau_min < (tau_max - tau_min) * exp(-V_C/S)` in dynamic
    /// mode so that exact merges (ratio exactly 1) are not rejected when
    /// the exponential term rounds away against tau_min.
    pub fn accepts(&self, v_c: f64, combined: f64) -> bool {
        let ratio = v_c / combined;
        if self.use_dynamic {
            ratio - self.tau_min < (self.tau_max - self.tau_min) * (-v_c / self.scale_s).exp()
        } else {
            ratio < self.tau_static
        }
    }
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig::for_resolution(crate::voxel::DEFAULT_RESOLUTION)
    }
}

/// Greedy coarse-graining over the whole grid: from each unassigned
/// occupied voxel (scanning y, then z, then x ascending) extend the x-run
/// maximally, then grow in z while every next row is fully occupied and
/// unassigned. Output cuboids are disjoint, have y-extent exactly 1, and
/// their union equals the occupied set exactly.
pub fn coarse_grain(grid: &VoxelGrid) -> Vec<VoxelCuboid> {
    let n = grid.n();
    coarse_grain_region(
        grid,
        &VoxelCuboid {
            min: [0, 0, 0],
            extent: [n, n, n],
        },
    )
}

/// Coarse-graining restricted to a box region; runs never cross the
/// region boundary.
pub fn coarse_grain_region(grid: &VoxelGrid, region: &VoxelCuboid) -> Vec<VoxelCuboid> {
    let n = grid.n();
    let lo = region.min;
    let hi = [
        region.end()[0].min(n),
        region.end()[1].min(n),
        region.end()[2].min(n),
    ];
    let mut assigned = vec![false; n * n * n];
    let idx = |x: usize, y: usize, z: usize| x + n * (z + n * y);
    let mut out = Vec::new();

    for y in lo[1]..hi[1] {
        for z in lo[2]..hi[2] {
            for x in lo[0]..hi[0] {
                if !grid.get(x, y, z) || assigned[idx(x, y, z)] {
                    continue;
                }
                let mut x_end = x + 1;
                while x_end < hi[0] && grid.get(x_end, y, z) && !assigned[idx(x_end, y, z)] {
                    x_end += 1;
                }
                let mut z_end = z + 1;
                'grow: while z_end < hi[2] {
                    for xi in x..x_end {
                        if !grid.get(xi, y, z_end) || assigned[idx(xi, y, z_end)] {
                            break 'grow;
                        }
                    }
                    z_end += 1;
                }
                for zi in z..z_end {
                    for xi in x..x_end {
                        assigned[idx(xi, y, zi)] = true;
                    }
                }
                out.push(VoxelCuboid {
                    min: [x, y, z],
                    extent: [x_end - x, 1, z_end - z],
                });
            }
        }
    }
    out
}

/// 2D rectangle on the floor projection, in voxel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect2 {
    x0: usize,
    z0: usize,
    w: usize,
    h: usize,
}

impl Rect2 {
    fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }
}

struct Projection {
    n: usize,
    occ: Vec<bool>,
}

impl Projection {
    fn from_grid(grid: &VoxelGrid) -> Self {
        let n = grid.n();
        let mut occ = vec![false; n * n];
        for [x, _, z] in grid.occupied() {
            occ[x + n * z] = true;
        }
        Projection { n, occ }
    }

    #[inline]
    fn get(&self, x: usize, z: usize) -> bool {
        self.occ[x + self.n * z]
    }

    /// Tightest rectangle around the target cells inside `r`, if any.
    fn content_bbox(&self, r: Rect2) -> Option<Rect2> {
        let (mut x_min, mut x_max, mut z_min, mut z_max) = (usize::MAX, 0, usize::MAX, 0);
        for z in r.z0..r.z0 + r.h {
            for x in r.x0..r.x0 + r.w {
                if self.get(x, z) {
                    x_min = x_min.min(x);
                    x_max = x_max.max(x);
                    z_min = z_min.min(z);
                    z_max = z_max.max(z);
                }
            }
        }
        (x_min != usize::MAX).then(|| Rect2 {
            x0: x_min,
            z0: z_min,
            w: x_max - x_min + 1,
            h: z_max - z_min + 1,
        })
    }

    /// Largest all-background axis-aligned rectangle inside `r`
    /// (histogram-stack method). Ties resolve to the first candidate in
    /// scan order, keeping the refinement deterministic.
    fn largest_empty_rect(&self, r: Rect2) -> Option<Rect2> {
        let mut best: Option<(u64, Rect2)> = None;
        let mut heights = vec![0usize; r.w];
        for (row, z) in (r.z0..r.z0 + r.h).enumerate() {
            for (col, x) in (r.x0..r.x0 + r.w).enumerate() {
                heights[col] = if self.get(x, z) { 0 } else { heights[col] + 1 };
            }
            // max rectangle in this histogram
            let mut stack: Vec<(usize, usize)> = Vec::new(); // (start col, height)
            for col in 0..=r.w {
                let h = if col < r.w { heights[col] } else { 0 };
                let mut start = col;
                while let Some(&(s, sh)) = stack.last() {
                    if sh <= h {
                        break;
                    }
                    stack.pop();
                    let area = sh as u64 * (col - s) as u64;
                    if best.as_ref().is_none_or(|(b, _)| area > *b) {
                        best = Some((
                            area,
                            Rect2 {
                                x0: r.x0 + s,
                                z0: r.z0 + row + 1 - sh,
                                w: col - s,
                                h: sh,
                            },
                        ));
                    }
                    start = s;
                }
                if h > 0 && stack.last().is_none_or(|&(_, sh)| sh < h) {
                    stack.push((start, h));
                }
            }
        }
        best.map(|(_, r)| r)
    }
}

/// Remove `hole` from `host` with band-style cuts. `horizontal_first`
/// takes full-width bands above and below the hole; the other strategy
/// takes full-height bands left and right. Shrinking each piece to its
/// content happens in the caller.
fn subdivide(host: Rect2, hole: Rect2, horizontal_first: bool) -> Vec<Rect2> {
    let hx1 = host.x0 + host.w;
    let hz1 = host.z0 + host.h;
    let gx1 = hole.x0 + hole.w;
    let gz1 = hole.z0 + hole.h;
    let mut out = Vec::with_capacity(4);
    if horizontal_first {
        if hole.z0 > host.z0 {
            out.push(Rect2 {
                x0: host.x0,
                z0: host.z0,
                w: host.w,
                h: hole.z0 - host.z0,
            });
        }
        if gz1 < hz1 {
            out.push(Rect2 {
                x0: host.x0,
                z0: gz1,
                w: host.w,
                h: hz1 - gz1,
            });
        }
        if hole.x0 > host.x0 {
            out.push(Rect2 {
                x0: host.x0,
                z0: hole.z0,
                w: hole.x0 - host.x0,
                h: hole.h,
            });
        }
        if gx1 < hx1 {
            out.push(Rect2 {
                x0: gx1,
                z0: hole.z0,
                w: hx1 - gx1,
                h: hole.h,
            });
        }
    } else {
        if hole.x0 > host.x0 {
            out.push(Rect2 {
                x0: host.x0,
                z0: host.z0,
                w: hole.x0 - host.x0,
                h: host.h,
            });
        }
        if gx1 < hx1 {
            out.push(Rect2 {
                x0: gx1,
                z0: host.z0,
                w: hx1 - gx1,
                h: host.h,
            });
        }
        if hole.z0 > host.z0 {
            out.push(Rect2 {
                x0: hole.x0,
                z0: host.z0,
                w: hole.w,
                h: hole.z0 - host.z0,
            });
        }
        if gz1 < hz1 {
            out.push(Rect2 {
                x0: hole.x0,
                z0: gz1,
                w: hole.w,
                h: hz1 - gz1,
            });
        }
    }
    out
}

/// Cover the occupied floor projection with at most `k` rectangles,
/// extruded over the full y-range into 3D regions.
///
/// Refinement starts from the minimum bounding box. Each step removes the
/// largest empty rectangle found in any cover rectangle, subdividing the
/// host into 2 (corner removal), 3 (edge removal), or 4 (interior
/// removal) pieces; both horizontal-first and vertical-first cuts are
/// tried and the cover with the smaller total area wins. Pieces shrink to
/// their content and empty pieces are dropped. Refinement stops when the
/// rectangle budget would be exceeded or no background remains.
pub fn segment_projection(grid: &VoxelGrid, k: usize) -> Vec<VoxelCuboid> {
    let k = k.max(1);
    let proj = Projection::from_grid(grid);
    let full = Rect2 {
        x0: 0,
        z0: 0,
        w: proj.n,
        h: proj.n,
    };
    let Some(bbox) = proj.content_bbox(full) else {
        return Vec::new();
    };
    let mut rects = vec![bbox];

    loop {
        // host rectangle whose largest empty rectangle is biggest
        let mut candidate: Option<(u64, usize, Rect2)> = None;
        for (i, &r) in rects.iter().enumerate() {
            if let Some(empty) = proj.largest_empty_rect(r) {
                let area = empty.area();
                if candidate.as_ref().is_none_or(|(b, _, _)| area > *b) {
                    candidate = Some((area, i, empty));
                }
            }
        }
        let Some((_, host_idx, hole)) = candidate else {
            break;
        };

        let host = rects[host_idx];
        let shrink = |pieces: Vec<Rect2>| -> Vec<Rect2> {
            pieces
                .into_iter()
                .filter_map(|p| proj.content_bbox(p))
                .collect()
        };
        let horiz = shrink(subdivide(host, hole, true));
        let vert = shrink(subdivide(host, hole, false));
        let area = |v: &[Rect2]| v.iter().map(Rect2::area).sum::<u64>();
        let (a_h, a_v) = (area(&horiz), area(&vert));

        let budget = |pieces: &[Rect2]| rects.len() - 1 + pieces.len() <= k;
        let pick_h = a_h < a_v || (a_h == a_v && horiz.len() <= vert.len());
        let chosen = match (pick_h, budget(&horiz), budget(&vert)) {
            (true, true, _) => horiz,
            (false, _, true) => vert,
            (true, false, true) => vert,
            (false, true, false) => horiz,
            _ => break, // neither fits the budget
        };

        rects.swap_remove(host_idx);
        rects.extend(chosen);
    }

    let n = grid.n();
    rects
        .into_iter()
        .map(|r| VoxelCuboid {
            min: [r.x0, 0, r.z0],
            extent: [r.w, n, r.h],
        })
        .collect()
}

/// One merge phase over a working set: repeatedly take the live adjacent
/// pair with the smallest combined volume and merge it into its bounding
/// box when `V_C / (V_A + V_B) < tau(V_C)`. A rejected pair can never
/// become acceptable later (its volumes and threshold are fixed), so each
/// pair is examined once; merged cuboids enter as fresh candidates.
fn merge_pass(input: Vec<VoxelCuboid>, config: &MergeConfig) -> Vec<VoxelCuboid> {
    let mut items: Vec<(VoxelCuboid, bool)> = input.into_iter().map(|c| (c, true)).collect();
    let mut heap: BinaryHeap<Reverse<(u64, usize, usize)>> = BinaryHeap::new();

    for i in 0..items.len() {
        for j in i + 1..items.len() {
            if items[i].0.touches_or_overlaps(&items[j].0) {
                heap.push(Reverse((items[i].0.volume() + items[j].0.volume(), i, j)));
            }
        }
    }

    while let Some(Reverse((combined, i, j))) = heap.pop() {
        if !items[i].1 || !items[j].1 {
            continue;
        }
        let merged = items[i].0.bounding_union(&items[j].0);
        let v_c = merged.volume();
        if config.accepts(v_c as f64, combined as f64) {
            items[i].1 = false;
            items[j].1 = false;
            let new_idx = items.len();
            for (idx, (cub, alive)) in items.iter().enumerate() {
                if *alive && cub.touches_or_overlaps(&merged) {
                    heap.push(Reverse((cub.volume() + v_c, idx, new_idx)));
                }
            }
            items.push((merged, true));
        }
    }

    items
        .into_iter()
        .filter_map(|(c, alive)| alive.then_some(c))
        .collect()
}

/// Merge adjacent cuboids under the (dynamic) threshold. Input cuboids
/// must be pairwise disjoint. When `regions` are supplied, merging first
/// runs within each region (a cuboid belongs to the first region that
/// fully contains it), then once globally over everything.
pub fn merge_cuboids(
    cuboids: &[VoxelCuboid],
    config: &MergeConfig,
    regions: Option<&[VoxelCuboid]>,
) -> Result<Vec<VoxelCuboid>> {
    config.validate()?;
    for i in 0..cuboids.len() {
        for j in i + 1..cuboids.len() {
            if cuboids[i].overlaps(&cuboids[j]) {
                return Err(Error::OverlappingCuboids { a: i, b: j });
            }
        }
    }

    let merged = match regions {
        None => merge_pass(cuboids.to_vec(), config),
        Some(regions) => {
            let mut buckets: Vec<Vec<VoxelCuboid>> = vec![Vec::new(); regions.len()];
            let mut unregioned = Vec::new();
            for c in cuboids {
                match regions.iter().position(|r| r.contains(c)) {
                    Some(r) => buckets[r].push(*c),
                    None => unregioned.push(*c),
                }
            }
            let mut acc = Vec::with_capacity(cuboids.len());
            for bucket in buckets {
                acc.extend(merge_pass(bucket, config));
            }
            acc.extend(unregioned);
            merge_pass(acc, config)
        }
    };
    Ok(merged)
}

/// Full abstraction pipeline: segment the floor projection, coarse-grain
/// each region, merge per region and then globally, and convert the
/// result to the normalized `[0,1]^3` local frame.
pub fn abstract_shape(grid: &VoxelGrid, config: &MergeConfig) -> Result<Vec<Cuboid>> {
    config.validate()?;
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    let regions = segment_projection(grid, config.max_segments_k);
    let mut coarse = Vec::new();
    for region in &regions {
        coarse.extend(coarse_grain_region(grid, region));
    }
    let merged = merge_cuboids(&coarse, config, Some(&regions))?;
    Ok(merged
        .iter()
        .map(|c| c.to_local_cuboid(grid.n()))
        .collect())
}

/// Voxel-level abstraction result, for callers that need integer boxes.
pub fn abstract_shape_voxels(grid: &VoxelGrid, config: &MergeConfig) -> Result<Vec<VoxelCuboid>> {
    config.validate()?;
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    let regions = segment_projection(grid, config.max_segments_k);
    let mut coarse = Vec::new();
    for region in &regions {
        coarse.extend(coarse_grain_region(grid, region));
    }
    merge_cuboids(&coarse, config, Some(&regions))
}
