//! Wavefront OBJ parsing and unit-cube normalization.
//!
//! Only `v` and `f` records are consumed; polygonal faces are triangulated
//! as a fan from their first vertex. Everything else (normals, textures,
//! materials, groups) is skipped.

use std::fs;
use std::path::Path;

use crate::cuboid::Cuboid;
use crate::error::{Error, Result};

/// An indexed triangle mesh. Invariants: at least one triangle, and every
/// triangle index below the vertex count.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::validation("triangles", "mesh has no triangles"));
        }
        for (f, tri) in triangles.iter().enumerate() {
            for &idx in tri {
                if idx >= vertices.len() {
                    return Err(Error::FaceIndex {
                        face: f + 1,
                        index: idx as isize,
                        vertex_count: vertices.len(),
                    });
                }
            }
        }
        Ok(TriangleMesh {
            vertices,
            triangles,
        })
    }

    /// Axis-aligned bounds as `(min, max)`.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for i in 0..3 {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    pub fn triangle_vertices(&self, t: usize) -> [[f64; 3]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }
}

/// The uniform transform applied by [`normalize`]: `p' = scale * p + offset`.
/// Keeping it around lets cuboids fitted in the normalized frame be mapped
/// back to metric space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationRecord {
    pub scale: f64,
    pub offset: [f64; 3],
}

impl NormalizationRecord {
    pub fn to_normalized(&self, p: [f64; 3]) -> [f64; 3] {
        [
            p[0] * self.scale + self.offset[0],
            p[1] * self.scale + self.offset[1],
            p[2] * self.scale + self.offset[2],
        ]
    }

    /// Inverse of [`Self::to_normalized`].
    pub fn to_world(&self, p: [f64; 3]) -> [f64; 3] {
        [
            (p[0] - self.offset[0]) / self.scale,
            (p[1] - self.offset[1]) / self.scale,
            (p[2] - self.offset[2]) / self.scale,
        ]
    }

    /// Map a cuboid fitted in the normalized frame back to metric space.
    pub fn cuboid_to_world(&self, c: &Cuboid) -> Cuboid {
        Cuboid::new(
            self.to_world(c.center),
            [
                c.size[0] / self.scale,
                c.size[1] / self.scale,
                c.size[2] / self.scale,
            ],
        )
    }
}

/// Parse Wavefront OBJ text. Faces with more than three vertices are
/// fan-triangulated; negative (relative) indices are resolved against the
/// vertices seen so far.
pub fn parse_obj(bytes: &[u8]) -> Result<TriangleMesh> {
    let text = String::from_utf8_lossy(bytes);
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut face_count = 0usize;

    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for coord in &mut coords {
                    let tok = tokens.next().ok_or_else(|| Error::ObjParse {
                        line: line_no,
                        message: "vertex record has fewer than 3 coordinates".into(),
                    })?;
                    *coord = tok.parse().map_err(|_| Error::ObjParse {
                        line: line_no,
                        message: format!("invalid vertex coordinate `{tok}`"),
                    })?;
                }
                // a trailing w component, if present, is ignored
                vertices.push(coords);
            }
            Some("f") => {
                face_count += 1;
                let mut indices: Vec<usize> = Vec::new();
                for tok in tokens {
                    // face elements look like `v`, `v/t`, `v//n` or `v/t/n`
                    let vert_tok = tok.split('/').next().unwrap_or("");
                    let raw_idx: isize = vert_tok.parse().map_err(|_| Error::ObjParse {
                        line: line_no,
                        message: format!("invalid face index `{tok}`"),
                    })?;
                    let resolved = if raw_idx > 0 {
                        (raw_idx - 1) as usize
                    } else if raw_idx < 0 {
                        let back = (-raw_idx) as usize;
                        if back > vertices.len() {
                            return Err(Error::FaceIndex {
                                face: face_count,
                                index: raw_idx,
                                vertex_count: vertices.len(),
                            });
                        }
                        vertices.len() - back
                    } else {
                        return Err(Error::ObjParse {
                            line: line_no,
                            message: "face index 0 is not allowed".into(),
                        });
                    };
                    if resolved >= vertices.len() {
                        return Err(Error::FaceIndex {
                            face: face_count,
                            index: raw_idx,
                            vertex_count: vertices.len(),
                        });
                    }
                    indices.push(resolved);
                }
                if indices.len() < 3 {
                    return Err(Error::ObjParse {
                        line: line_no,
                        message: format!("face has {} vertices, need at least 3", indices.len()),
                    });
                }
                for i in 1..indices.len() - 1 {
                    triangles.push([indices[0], indices[i], indices[i + 1]]);
                }
            }
            // all other record types are skipped
            _ => {}
        }
    }

    TriangleMesh::new(vertices, triangles)
}

pub fn parse_obj_file(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let bytes = fs::read(path)?;
    parse_obj(&bytes)
}

/// Fit a mesh into the unit cube with a single uniform scale (largest
/// extent maps to 1) and a translation that centers the bounding box.
pub fn normalize(mesh: &TriangleMesh) -> Result<(TriangleMesh, NormalizationRecord)> {
    let (lo, hi) = mesh.bounds();
    let extents = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let max_extent = extents[0].max(extents[1]).max(extents[2]);
    if !(max_extent > 0.0) {
        return Err(Error::DegenerateGeometry(
            "mesh has zero extent on every axis".into(),
        ));
    }
    let scale = 1.0 / max_extent;
    let offset = [
        0.5 - 0.5 * (lo[0] + hi[0]) * scale,
        0.5 - 0.5 * (lo[1] + hi[1]) * scale,
        0.5 - 0.5 * (lo[2] + hi[2]) * scale,
    ];
    let record = NormalizationRecord { scale, offset };
    let vertices = mesh
        .vertices
        .iter()
        .map(|&v| record.to_normalized(v))
        .collect();
    let normalized = TriangleMesh {
        vertices,
        triangles: mesh.triangles.clone(),
    };
    Ok((normalized, record))
}

/// 12-triangle axis-aligned box mesh, handy for tests and synthetic data.
pub fn box_mesh(min: [f64; 3], max: [f64; 3]) -> TriangleMesh {
    let [x0, y0, z0] = min;
    let [x1, y1, z1] = max;
    let vertices = vec![
        [x0, y0, z0],
        [x1, y0, z0],
        [x1, y1, z0],
        [x0, y1, z0],
        [x0, y0, z1],
        [x1, y0, z1],
        [x1, y1, z1],
        [x0, y1, z1],
    ];
    let quads = [
        [0, 3, 2, 1], // z = z0
        [4, 5, 6, 7], // z = z1
        [0, 1, 5, 4], // y = y0
        [3, 7, 6, 2], // y = y1
        [0, 4, 7, 3], // x = x0
        [1, 2, 6, 5], // x = x1
    ];
    let mut triangles = Vec::with_capacity(12);
    for q in quads {
        triangles.push([q[0], q[1], q[2]]);
        triangles.push([q[0], q[2], q[3]]);
    }
    TriangleMesh {
        vertices,
        triangles,
    }
}
