//! Class-filtered voxel 3D-IoU shape retrieval: map a generated cuboid
//! assembly to the best-matching catalog model.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cuboid::Cuboid;
use crate::error::{Error, Result};
use crate::scene::Scene;
use crate::voxel::VoxelGrid;

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub model_id: String,
    pub class: String,
    pub voxels: VoxelGrid,
    pub cuboids: Vec<Cuboid>,
}

/// Immutable shape catalog. All grids share one resolution and model ids
/// are unique.
#[derive(Debug, Clone)]
pub struct ShapeCatalog {
    entries: Vec<CatalogEntry>,
    resolution: usize,
}

#[derive(Serialize, Deserialize)]
struct IndexRow {
    model_id: String,
    class: String,
    voxels: String,
    cuboids: Vec<Cuboid>,
}

impl ShapeCatalog {
    pub fn from_entries(entries: Vec<CatalogEntry>) -> Result<Self> {
        let resolution = entries
            .first()
            .map(|e| e.voxels.n())
            .ok_or_else(|| Error::validation("catalog", "catalog must be non-empty"))?;
        let mut seen = BTreeSet::new();
        for e in &entries {
            if e.voxels.n() != resolution {
                return Err(Error::ResolutionMismatch {
                    a: resolution,
                    b: e.voxels.n(),
                });
            }
            if !seen.insert(e.model_id.clone()) {
                return Err(Error::validation(
                    "catalog",
                    format!("duplicate model_id `{}`", e.model_id),
                ));
            }
        }
        Ok(ShapeCatalog {
            entries,
            resolution,
        })
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Load from a directory holding `index.json` plus the referenced
    /// CVOX files.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let rows: Vec<IndexRow> = serde_json::from_slice(&fs::read(dir.join("index.json"))?)?;
        let entries = rows
            .into_iter()
            .map(|row| {
                Ok(CatalogEntry {
                    voxels: VoxelGrid::load_cvox(dir.join(&row.voxels))?,
                    model_id: row.model_id,
                    class: row.class,
                    cuboids: row.cuboids,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(entries)
    }

    /// Write `index.json` and one CVOX file per entry into `dir`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut rows = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let file = format!("{}.cvox", e.model_id);
            e.voxels.save_cvox(dir.join(&file))?;
            rows.push(IndexRow {
                model_id: e.model_id.clone(),
                class: e.class.clone(),
                voxels: file,
                cuboids: e.cuboids.clone(),
            });
        }
        fs::write(dir.join("index.json"), serde_json::to_vec_pretty(&rows)?)?;
        Ok(())
    }
}

/// Rasterize local-frame cuboids into an occupancy grid: a voxel is set
/// iff its center lies inside any cuboid (closed boundaries).
pub fn rasterize_cuboids(cuboids: &[Cuboid], n: usize) -> Result<VoxelGrid> {
    let mut grid = VoxelGrid::empty(n)?;
    let nf = n as f64;
    for c in cuboids {
        let lo = c.min_corner();
        let hi = c.max_corner();
        // candidate index range for this cuboid
        let clamp = |v: f64| (v.max(0.0) as usize).min(n - 1);
        let lo_i = [
            clamp((lo[0] * nf - 0.5).ceil()),
            clamp((lo[1] * nf - 0.5).ceil()),
            clamp((lo[2] * nf - 0.5).ceil()),
        ];
        let hi_i = [
            clamp((hi[0] * nf - 0.5).floor()),
            clamp((hi[1] * nf - 0.5).floor()),
            clamp((hi[2] * nf - 0.5).floor()),
        ];
        for y in lo_i[1]..=hi_i[1] {
            for z in lo_i[2]..=hi_i[2] {
                for x in lo_i[0]..=hi_i[0] {
                    let center = [
                        (x as f64 + 0.5) / nf,
                        (y as f64 + 0.5) / nf,
                        (z as f64 + 0.5) / nf,
                    ];
                    if c.contains_point(center) {
                        grid.set(x, y, z, true);
                    }
                }
            }
        }
    }
    Ok(grid)
}

/// `|a AND b| / |a OR b|`, defined as 1 when both grids are empty.
pub fn voxel_iou(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::ResolutionMismatch { a: a.n(), b: b.n() });
    }
    let mut inter = 0u64;
    let mut union = 0u64;
    for (&ba, &bb) in a.raw_bits().iter().zip(b.raw_bits()) {
        inter += (ba & bb).count_ones() as u64;
        union += (ba | bb).count_ones() as u64;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Matching criterion: full voxel overlap of the assemblies, or the
/// volumetric IoU of their axis-aligned bounding boxes (the baseline that
/// ignores internal structure).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrievalMode {
    Cuboid,
    Bbox,
}

fn aabb_iou(a: &[Cuboid], b: &[Cuboid]) -> f64 {
    let (Some((alo, ahi)), Some((blo, bhi))) = (Cuboid::bounding_box(a), Cuboid::bounding_box(b))
    else {
        return 0.0;
    };
    let mut inter = 1.0;
    for i in 0..3 {
        let d = ahi[i].min(bhi[i]) - alo[i].max(blo[i]);
        if d <= 0.0 {
            return 0.0;
        }
        inter *= d;
    }
    let vol = |lo: [f64; 3], hi: [f64; 3]| (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
    let union = vol(alo, ahi) + vol(blo, bhi) - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Find the best-matching catalog model for a query assembly among
/// entries of the given class. Ties resolve to the lexicographically
/// smallest model id, so the result is independent of catalog order.
pub fn retrieve(
    query_cuboids: &[Cuboid],
    class_label: &str,
    catalog: &ShapeCatalog,
    mode: RetrievalMode,
) -> Result<(String, f64)> {
    let candidates: Vec<&CatalogEntry> = catalog
        .entries
        .iter()
        .filter(|e| e.class == class_label)
        .collect();
    if candidates.is_empty() {
        return Err(Error::EmptyClass(class_label.to_string()));
    }
    let query_grid = match mode {
        RetrievalMode::Cuboid => Some(rasterize_cuboids(query_cuboids, catalog.resolution)?),
        RetrievalMode::Bbox => None,
    };

    let mut best: Option<(&CatalogEntry, f64)> = None;
    for entry in candidates {
        let score = match mode {
            RetrievalMode::Cuboid => {
                voxel_iou(query_grid.as_ref().expect("grid built above"), &entry.voxels)?
            }
            RetrievalMode::Bbox => aabb_iou(query_cuboids, &entry.cuboids),
        };
        let better = match &best {
            None => true,
            Some((b, s)) => score > *s || (score == *s && entry.model_id < b.model_id),
        };
        if better {
            best = Some((entry, score));
        }
    }
    let (entry, score) = best.expect("candidates checked non-empty");
    Ok((entry.model_id.clone(), score))
}

/// Rewrite every object's `model_id` with its best catalog match.
/// Returns `(object_id, model_id, iou)` per object.
pub fn retrieve_scene(
    scene: &mut Scene,
    catalog: &ShapeCatalog,
    mode: RetrievalMode,
) -> Result<Vec<(String, String, f64)>> {
    let mut results = Vec::with_capacity(scene.objects.len());
    for obj in &mut scene.objects {
        let (model_id, score) = retrieve(&obj.cuboids, &obj.class, catalog, mode)?;
        obj.model_id = Some(model_id.clone());
        results.push((obj.id.clone(), model_id, score));
    }
    Ok(results)
}
