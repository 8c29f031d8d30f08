//! Binary occupancy grids: surface voxelization of normalized meshes,
//! interior filling by exterior flood fill, and the CVOX binary format.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// Default grid resolution for shape abstraction and retrieval.
pub const DEFAULT_RESOLUTION: usize = 64;

const CVOX_MAGIC: &[u8; 4] = b"CVOX";
const CVOX_VERSION: u8 = 0x01;

/// Bit-packed `n^3` occupancy grid. Linear index order is x-fastest, then
/// z, then y (`idx = x + n*(z + n*y)`); within a byte, bit `i` holds index
/// `8*j + i` (LSB first). Immutable once built, so it can be shared freely
/// across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelGrid {
    n: usize,
    bits: Vec<u8>,
}

impl VoxelGrid {
    pub fn empty(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Resolution(n));
        }
        let len = n * n * n;
        Ok(VoxelGrid {
            n,
            bits: vec![0u8; len.div_ceil(8)],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.n && y < self.n && z < self.n);
        x + self.n * (z + self.n * y)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        let idx = self.index(x, y, z);
        self.bits[idx >> 3] & (1 << (idx & 7)) != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let idx = self.index(x, y, z);
        if value {
            self.bits[idx >> 3] |= 1 << (idx & 7);
        } else {
            self.bits[idx >> 3] &= !(1 << (idx & 7));
        }
    }

    /// Number of set voxels.
    pub fn occupancy_count(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Iterator over set voxel coordinates in index order.
    pub fn occupied(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let n = self.n;
        (0..n).flat_map(move |y| {
            (0..n).flat_map(move |z| {
                (0..n).filter_map(move |x| self.get(x, y, z).then_some([x, y, z]))
            })
        })
    }

    pub(crate) fn raw_bits(&self) -> &[u8] {
        &self.bits
    }

    /// Write the CVOX binary form: magic `CVOX`, version byte 0x01, `n` as
    /// unsigned 32-bit little-endian, then the packed bits.
    pub fn write_cvox<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CVOX_MAGIC)?;
        w.write_all(&[CVOX_VERSION])?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&self.bits)?;
        Ok(())
    }

    pub fn read_cvox<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 9];
        r.read_exact(&mut header)
            .map_err(|_| Error::VoxelFormat("truncated header".into()))?;
        if &header[0..4] != CVOX_MAGIC {
            return Err(Error::VoxelFormat("bad magic bytes".into()));
        }
        if header[4] != CVOX_VERSION {
            return Err(Error::VoxelFormat(format!(
                "unsupported version {}",
                header[4]
            )));
        }
        let n = u32::from_le_bytes([header[5], header[6], header[7], header[8]]) as usize;
        if n < 2 {
            return Err(Error::Resolution(n));
        }
        let len = n * n * n;
        let mut bits = vec![0u8; len.div_ceil(8)];
        r.read_exact(&mut bits)
            .map_err(|_| Error::VoxelFormat("truncated bit payload".into()))?;
        let mut trailer = [0u8; 1];
        if r.read(&mut trailer)? != 0 {
            return Err(Error::VoxelFormat("trailing bytes after payload".into()));
        }
        // zero any padding bits so equality and popcounts stay exact
        let tail = len & 7;
        if tail != 0 {
            let last = bits.len() - 1;
            bits[last] &= (1u8 << tail) - 1;
        }
        Ok(VoxelGrid { n, bits })
    }

    pub fn save_cvox(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::with_capacity(9 + self.bits.len());
        self.write_cvox(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load_cvox(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::read_cvox(bytes.as_slice())
    }
}

/// Number of set voxels (free-function form of [`VoxelGrid::occupancy_count`]).
pub fn occupancy_count(grid: &VoxelGrid) -> usize {
    grid.occupancy_count()
}

/// Separating-axis triangle vs axis-aligned-box overlap test. Touching
/// counts as overlap: separation requires a strictly positive gap.
/// `verts` are the triangle vertices translated so the box center is the
/// origin; `h` is the box half extent.
fn tri_box_overlap(verts: &[[f64; 3]; 3], h: [f64; 3]) -> bool {
    let [v0, v1, v2] = *verts;

    // box axes
    for i in 0..3 {
        let lo = v0[i].min(v1[i]).min(v2[i]);
        let hi = v0[i].max(v1[i]).max(v2[i]);
        if lo > h[i] || hi < -h[i] {
            return false;
        }
    }

    let edges = [
        [v1[0] - v0[0], v1[1] - v0[1], v1[2] - v0[2]],
        [v2[0] - v1[0], v2[1] - v1[1], v2[2] - v1[2]],
        [v0[0] - v2[0], v0[1] - v2[1], v0[2] - v2[2]],
    ];

    // nine edge cross-product axes
    for e in &edges {
        let axes = [
            [0.0, -e[2], e[1]], // e x unit_x
            [e[2], 0.0, -e[0]], // e x unit_y
            [-e[1], e[0], 0.0], // e x unit_z
        ];
        for a in &axes {
            let r = h[0] * a[0].abs() + h[1] * a[1].abs() + h[2] * a[2].abs();
            let p0 = a[0] * v0[0] + a[1] * v0[1] + a[2] * v0[2];
            let p1 = a[0] * v1[0] + a[1] * v1[1] + a[2] * v1[2];
            let p2 = a[0] * v2[0] + a[1] * v2[1] + a[2] * v2[2];
            let lo = p0.min(p1).min(p2);
            let hi = p0.max(p1).max(p2);
            if lo > r || hi < -r {
                return false;
            }
        }
    }

    // triangle plane
    let e0 = edges[0];
    let e1 = [v2[0] - v0[0], v2[1] - v0[1], v2[2] - v0[2]];
    let normal = [
        e0[1] * e1[2] - e0[2] * e1[1],
        e0[2] * e1[0] - e0[0] * e1[2],
        e0[0] * e1[1] - e0[1] * e1[0],
    ];
    let r = h[0] * normal[0].abs() + h[1] * normal[1].abs() + h[2] * normal[2].abs();
    let d = normal[0] * v0[0] + normal[1] * v0[1] + normal[2] * v0[2];
    d.abs() <= r
}

/// Mark every grid cell whose box overlaps at least one triangle.
///
/// The mesh must already be normalized: any vertex outside `[0,1]^3` by
/// more than 1e-6 is rejected.
pub fn voxelize_surface(mesh: &TriangleMesh, n: usize) -> Result<VoxelGrid> {
    let mut grid = VoxelGrid::empty(n)?;
    const TOL: f64 = 1e-6;
    for (i, v) in mesh.vertices.iter().enumerate() {
        if v.iter().any(|&c| c < -TOL || c > 1.0 + TOL) {
            return Err(Error::NotNormalized(format!(
                "vertex {i} at ({}, {}, {}) lies outside the unit cube",
                v[0], v[1], v[2]
            )));
        }
    }

    let nf = n as f64;
    // pad the cell box by an epsilon so geometry sitting exactly on the
    // grid boundary (normalization leaves fp dust around 0 and 1) still
    // registers as touching
    let half = 0.5 / nf + 1e-9;
    for t in 0..mesh.triangles.len() {
        let tri = mesh.triangle_vertices(t);
        // candidate cell range: triangle bounds padded by one cell so that
        // exact-touch cases are never missed
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for i in 0..3 {
            let min_c = tri[0][i].min(tri[1][i]).min(tri[2][i]);
            let max_c = tri[0][i].max(tri[1][i]).max(tri[2][i]);
            lo[i] = ((min_c * nf).floor() as isize - 1).max(0) as usize;
            hi[i] = (((max_c * nf).floor() as isize + 1).max(0) as usize).min(n - 1);
        }
        for y in lo[1]..=hi[1] {
            for z in lo[2]..=hi[2] {
                for x in lo[0]..=hi[0] {
                    if grid.get(x, y, z) {
                        continue;
                    }
                    let center = [
                        (x as f64 + 0.5) / nf,
                        (y as f64 + 0.5) / nf,
                        (z as f64 + 0.5) / nf,
                    ];
                    let shifted = [
                        [
                            tri[0][0] - center[0],
                            tri[0][1] - center[1],
                            tri[0][2] - center[2],
                        ],
                        [
                            tri[1][0] - center[0],
                            tri[1][1] - center[1],
                            tri[1][2] - center[2],
                        ],
                        [
                            tri[2][0] - center[0],
                            tri[2][1] - center[1],
                            tri[2][2] - center[2],
                        ],
                    ];
                    if tri_box_overlap(&shifted, [half, half, half]) {
                        grid.set(x, y, z, true);
                    }
                }
            }
        }
    }
    Ok(grid)
}

/// Fill enclosed cavities: the result is the complement of the exterior
/// region, where the exterior is the 6-connected flood fill of empty
/// voxels seeded from every empty voxel on the grid boundary. Voxels set
/// in the input always stay set.
pub fn fill_interior(grid: &VoxelGrid) -> VoxelGrid {
    let n = grid.n;
    let total = n * n * n;
    let mut exterior = vec![false; total];
    let mut queue: Vec<usize> = Vec::new();

    let idx = |x: usize, y: usize, z: usize| x + n * (z + n * y);
    for y in 0..n {
        for z in 0..n {
            for x in 0..n {
                let boundary = x == 0 || y == 0 || z == 0 || x == n - 1 || y == n - 1 || z == n - 1;
                if boundary && !grid.get(x, y, z) {
                    let i = idx(x, y, z);
                    if !exterior[i] {
                        exterior[i] = true;
                        queue.push(i);
                    }
                }
            }
        }
    }

    while let Some(i) = queue.pop() {
        let x = i % n;
        let z = (i / n) % n;
        let y = i / (n * n);
        let mut visit = |x: usize, y: usize, z: usize| {
            if !grid.get(x, y, z) {
                let j = idx(x, y, z);
                if !exterior[j] {
                    exterior[j] = true;
                    queue.push(j);
                }
            }
        };
        if x > 0 {
            visit(x - 1, y, z);
        }
        if x + 1 < n {
            visit(x + 1, y, z);
        }
        if y > 0 {
            visit(x, y - 1, z);
        }
        if y + 1 < n {
            visit(x, y + 1, z);
        }
        if z > 0 {
            visit(x, y, z - 1);
        }
        if z + 1 < n {
            visit(x, y, z + 1);
        }
    }

    let mut out = VoxelGrid::empty(n).expect("resolution already validated");
    for y in 0..n {
        for z in 0..n {
            for x in 0..n {
                if !exterior[idx(x, y, z)] {
                    out.set(x, y, z, true);
                }
            }
        }
    }
    out
}
