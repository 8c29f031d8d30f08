//! Python bindings: the main types and operations of the roombox
//! pipeline, exposed as the `roombox_py` module.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use roombox::abstraction::{abstract_shape, MergeConfig};
use roombox::curation::{avoid_intersections, CurationConfig};
use roombox::mesh::{normalize, parse_obj_file};
use roombox::metrics;
use roombox::render::{render_topdown, RenderSpec};
use roombox::retrieval::{self, RetrievalMode};
use roombox::sampling::{self, SceneSampler};
use roombox::scene;
use roombox::voxel;

fn err(e: roombox::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Axis-aligned box in the normalized local frame (center + full extents).
#[pyclass(name = "Cuboid", from_py_object)]
#[derive(Clone)]
struct PyCuboid {
    inner: roombox::Cuboid,
}

#[pymethods]
impl PyCuboid {
    #[new]
    fn new(center: (f64, f64, f64), size: (f64, f64, f64)) -> Self {
        PyCuboid {
            inner: roombox::Cuboid::new(
                [center.0, center.1, center.2],
                [size.0, size.1, size.2],
            ),
        }
    }

    #[getter]
    fn center(&self) -> (f64, f64, f64) {
        let c = self.inner.center;
        (c[0], c[1], c[2])
    }

    #[getter]
    fn size(&self) -> (f64, f64, f64) {
        let s = self.inner.size;
        (s[0], s[1], s[2])
    }

    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    fn __repr__(&self) -> String {
        format!(
            "Cuboid(center=({:.4}, {:.4}, {:.4}), size=({:.4}, {:.4}, {:.4}))",
            self.inner.center[0],
            self.inner.center[1],
            self.inner.center[2],
            self.inner.size[0],
            self.inner.size[1],
            self.inner.size[2]
        )
    }
}

/// World-space oriented box: center, extents, rotation about y.
#[pyclass(name = "OrientedCuboid", from_py_object)]
#[derive(Clone)]
struct PyOrientedCuboid {
    inner: metrics::OrientedCuboid,
}

#[pymethods]
impl PyOrientedCuboid {
    #[new]
    fn new(center: (f64, f64, f64), extents: (f64, f64, f64), theta: f64) -> Self {
        PyOrientedCuboid {
            inner: metrics::OrientedCuboid::new(
                [center.0, center.1, center.2],
                [extents.0, extents.1, extents.2],
                theta,
            ),
        }
    }

    fn volume(&self) -> f64 {
        self.inner.volume()
    }
}

/// Bit-packed occupancy grid.
#[pyclass(name = "VoxelGrid", from_py_object)]
#[derive(Clone)]
struct PyVoxelGrid {
    inner: voxel::VoxelGrid,
}

#[pymethods]
impl PyVoxelGrid {
    #[getter]
    fn resolution(&self) -> usize {
        self.inner.n()
    }

    fn occupancy_count(&self) -> usize {
        self.inner.occupancy_count()
    }

    fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.inner.get(x, y, z)
    }

    fn fill_interior(&self) -> PyVoxelGrid {
        PyVoxelGrid {
            inner: voxel::fill_interior(&self.inner),
        }
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_cvox(path).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<PyVoxelGrid> {
        Ok(PyVoxelGrid {
            inner: voxel::VoxelGrid::load_cvox(path).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "VoxelGrid(n={}, occupied={})",
            self.inner.n(),
            self.inner.occupancy_count()
        )
    }
}

/// A floor polygon with an ordered object list.
#[pyclass(name = "Scene", from_py_object)]
#[derive(Clone)]
struct PyScene {
    inner: scene::Scene,
}

#[pymethods]
impl PyScene {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<PyScene> {
        Ok(PyScene {
            inner: scene::Scene::from_json_bytes(text.as_bytes()).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<PyScene> {
        Ok(PyScene {
            inner: scene::load_scene(path).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        let bytes = self.inner.to_json_bytes().map_err(err)?;
        Ok(String::from_utf8(bytes).expect("scene JSON is UTF-8"))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        scene::save_scene(&self.inner, path).map_err(err)
    }

    #[getter]
    fn room_type(&self) -> String {
        self.inner.room_type.clone()
    }

    #[getter]
    fn n_objects(&self) -> usize {
        self.inner.objects.len()
    }

    fn object_classes(&self) -> Vec<String> {
        self.inner.objects.iter().map(|o| o.class.clone()).collect()
    }

    fn object_translations(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .objects
            .iter()
            .map(|o| {
                let t = o.pose.translation;
                (t[0], t[1], t[2])
            })
            .collect()
    }

    fn class_counts(&self) -> BTreeMap<String, u64> {
        self.inner.class_counts()
    }

    fn ciou(&self) -> PyResult<f64> {
        metrics::ciou(&self.inner).map_err(err)
    }

    fn total_overlap(&self) -> f64 {
        roombox::curation::total_overlap(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scene(room_type={:?}, objects={})",
            self.inner.room_type,
            self.inner.objects.len()
        )
    }
}

/// Fitted statistical scene sampler.
#[pyclass(name = "SamplerModel", from_py_object)]
#[derive(Clone)]
struct PySamplerModel {
    inner: sampling::BaselineSamplerModel,
}

#[pymethods]
impl PySamplerModel {
    #[staticmethod]
    fn fit(scenes: Vec<PyScene>) -> PyResult<PySamplerModel> {
        let dataset: Vec<scene::Scene> = scenes.into_iter().map(|s| s.inner).collect();
        Ok(PySamplerModel {
            inner: sampling::fit_baseline(&dataset).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<PySamplerModel> {
        Ok(PySamplerModel {
            inner: sampling::BaselineSamplerModel::load(path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    /// Sample a scene onto the floor of `floor_scene` (objects ignored).
    #[pyo3(signature = (floor_scene, seed, room_type=None))]
    fn sample(&self, floor_scene: &PyScene, seed: u64, room_type: Option<String>) -> PyResult<PyScene> {
        let room = room_type.unwrap_or_else(|| floor_scene.inner.room_type.clone());
        Ok(PyScene {
            inner: self
                .inner
                .sample(&floor_scene.inner.floor, &room, seed)
                .map_err(err)?,
        })
    }
}

/// Shape catalog for class-filtered voxel-IoU retrieval.
#[pyclass(name = "Catalog")]
struct PyCatalog {
    inner: retrieval::ShapeCatalog,
}

fn parse_mode(mode: &str) -> PyResult<RetrievalMode> {
    match mode {
        "cuboid" => Ok(RetrievalMode::Cuboid),
        "bbox" => Ok(RetrievalMode::Bbox),
        other => Err(PyValueError::new_err(format!(
            "mode must be `cuboid` or `bbox`, got `{other}`"
        ))),
    }
}

#[pymethods]
impl PyCatalog {
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<PyCatalog> {
        Ok(PyCatalog {
            inner: retrieval::ShapeCatalog::load_dir(dir).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.entries().len()
    }

    #[pyo3(signature = (query, class_label, mode="cuboid"))]
    fn retrieve(
        &self,
        query: Vec<PyCuboid>,
        class_label: &str,
        mode: &str,
    ) -> PyResult<(String, f64)> {
        let cuboids: Vec<roombox::Cuboid> = query.into_iter().map(|c| c.inner).collect();
        retrieval::retrieve(&cuboids, class_label, &self.inner, parse_mode(mode)?).map_err(err)
    }
}

/// Parse an OBJ file, normalize it into the unit cube, and voxelize.
#[pyfunction]
#[pyo3(signature = (path, n=64, fill=true))]
fn voxelize_mesh(path: PathBuf, n: usize, fill: bool) -> PyResult<PyVoxelGrid> {
    let (mesh, _) = normalize(&parse_obj_file(path).map_err(err)?).map_err(err)?;
    let mut grid = voxel::voxelize_surface(&mesh, n).map_err(err)?;
    if fill {
        grid = voxel::fill_interior(&grid);
    }
    Ok(PyVoxelGrid { inner: grid })
}

/// Full abstraction pipeline for one mesh file.
#[pyfunction]
#[pyo3(signature = (path, n=64, tau_min=1.0, tau_max=1.5, scale_s=None, max_segments=8))]
fn abstract_mesh(
    path: PathBuf,
    n: usize,
    tau_min: f64,
    tau_max: f64,
    scale_s: Option<f64>,
    max_segments: usize,
) -> PyResult<Vec<PyCuboid>> {
    let grid = voxelize_mesh(path, n, true)?;
    let mut config = MergeConfig::for_resolution(n);
    config.tau_min = tau_min;
    config.tau_max = tau_max;
    if let Some(s) = scale_s {
        config.scale_s = s;
    }
    config.max_segments_k = max_segments;
    Ok(abstract_shape(&grid.inner, &config)
        .map_err(err)?
        .into_iter()
        .map(|inner| PyCuboid { inner })
        .collect())
}

/// Rasterize local-frame cuboids into an occupancy grid.
#[pyfunction]
fn rasterize(cuboids: Vec<PyCuboid>, n: usize) -> PyResult<PyVoxelGrid> {
    let cubs: Vec<roombox::Cuboid> = cuboids.into_iter().map(|c| c.inner).collect();
    Ok(PyVoxelGrid {
        inner: retrieval::rasterize_cuboids(&cubs, n).map_err(err)?,
    })
}

#[pyfunction]
fn voxel_iou(a: &PyVoxelGrid, b: &PyVoxelGrid) -> PyResult<f64> {
    retrieval::voxel_iou(&a.inner, &b.inner).map_err(err)
}

#[pyfunction]
fn intersection_volume(a: &PyOrientedCuboid, b: &PyOrientedCuboid) -> f64 {
    metrics::intersection_volume(&a.inner, &b.inner)
}

#[pyfunction]
fn iou(a: &PyOrientedCuboid, b: &PyOrientedCuboid) -> f64 {
    metrics::iou(&a.inner, &b.inner)
}

/// Dense pairwise IoU matrix over all world cuboids of a scene.
#[pyfunction]
fn scene_iou_matrix(scene: &PyScene) -> Vec<Vec<f64>> {
    let m = metrics::scene_iou_matrix(&scene.inner);
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect())
        .collect()
}

#[pyfunction]
#[pyo3(signature = (scenes, threshold=0.01))]
fn nirate(scenes: Vec<PyScene>, threshold: f64) -> PyResult<f64> {
    let list: Vec<scene::Scene> = scenes.into_iter().map(|s| s.inner).collect();
    metrics::nirate(&list, threshold).map_err(err)
}

#[pyfunction]
fn ckl(generated: BTreeMap<String, u64>, reference: BTreeMap<String, u64>) -> PyResult<f64> {
    metrics::ckl(&generated, &reference).map_err(err)
}

/// Iteratively translate objects (x and z only) until cross-entity
/// overlap vanishes. Returns the curated scene and a report dict.
#[pyfunction]
#[pyo3(signature = (scene, eta=0.05, clip_norm=1.0, max_iters=500, epsilon_stop=1e-6, fd_step=0.01))]
fn avoid_scene_intersections(
    py: Python<'_>,
    scene: &PyScene,
    eta: f64,
    clip_norm: f64,
    max_iters: usize,
    epsilon_stop: f64,
    fd_step: f64,
) -> PyResult<(PyScene, Py<PyDict>)> {
    let config = CurationConfig {
        eta,
        clip_norm,
        max_iters,
        epsilon_stop,
        fd_step,
    };
    config.validate().map_err(err)?;
    let (out, report) = avoid_intersections(&scene.inner, &config);
    let dict = PyDict::new(py);
    dict.set_item("iterations", report.iterations)?;
    dict.set_item("initial_overlap", report.initial_overlap)?;
    dict.set_item("final_overlap", report.final_overlap)?;
    dict.set_item("converged", report.converged)?;
    Ok((PyScene { inner: out }, dict.unbind()))
}

/// Top-down orthographic SVG of a scene.
#[pyfunction]
#[pyo3(signature = (scene, width=256, height=256))]
fn render_svg(scene: &PyScene, width: u32, height: u32) -> PyResult<String> {
    let spec = RenderSpec {
        width,
        height,
        ..RenderSpec::default()
    };
    render_topdown(&scene.inner, &spec).map_err(err)
}

/// Flatten a scene into its entity/cuboid token sequence. Each token is
/// a dict with kind, class label, translation, size, and sin/cos.
#[pyfunction]
#[pyo3(signature = (scene, permute_seed=None))]
fn token_sequence(
    py: Python<'_>,
    scene: &PyScene,
    permute_seed: Option<u64>,
) -> PyResult<Vec<Py<PyDict>>> {
    let vocab = scene::Vocabulary::default_classes();
    let tokens = scene::to_token_sequence(&scene.inner, &vocab, permute_seed).map_err(err)?;
    tokens
        .iter()
        .map(|t| {
            let d = PyDict::new(py);
            d.set_item(
                "kind",
                match t.kind {
                    scene::TokenKind::Floor => "floor",
                    scene::TokenKind::Entity => "entity",
                    scene::TokenKind::Cuboid => "cuboid",
                },
            )?;
            d.set_item("class_label", t.class_label)?;
            d.set_item("translation", t.translation)?;
            d.set_item("size", t.size)?;
            d.set_item("sin_theta", t.sin_theta)?;
            d.set_item("cos_theta", t.cos_theta)?;
            Ok(d.unbind())
        })
        .collect()
}

#[pymodule]
fn roombox_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCuboid>()?;
    m.add_class::<PyOrientedCuboid>()?;
    m.add_class::<PyVoxelGrid>()?;
    m.add_class::<PyScene>()?;
    m.add_class::<PySamplerModel>()?;
    m.add_class::<PyCatalog>()?;
    m.add_function(wrap_pyfunction!(voxelize_mesh, m)?)?;
    m.add_function(wrap_pyfunction!(abstract_mesh, m)?)?;
    m.add_function(wrap_pyfunction!(rasterize, m)?)?;
    m.add_function(wrap_pyfunction!(voxel_iou, m)?)?;
    m.add_function(wrap_pyfunction!(intersection_volume, m)?)?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(scene_iou_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(nirate, m)?)?;
    m.add_function(wrap_pyfunction!(ckl, m)?)?;
    m.add_function(wrap_pyfunction!(avoid_scene_intersections, m)?)?;
    m.add_function(wrap_pyfunction!(render_svg, m)?)?;
    m.add_function(wrap_pyfunction!(token_sequence, m)?)?;
    Ok(())
}
