//! Scene, object, and pose types plus the entity/cuboid token sequence.
//!
//! A scene is a floor polygon and an ordered object list. Each object
//! carries a class label, a pose (translation, full extents, rotation
//! about y stored as sin/cos), and the cuboid assembly abstracting its
//! shape in the normalized `[0,1]^3` local frame.
//!
//! The JSON schema serializes the rotation as a scalar `theta`; sin/cos
//! are derived on load. Floats are written with 17 significant digits so
//! a save/load/save cycle is byte-identical after one canonicalization
//! pass.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::cuboid::Cuboid;
use crate::error::{Error, Result};
use crate::geom;
use crate::metrics::OrientedCuboid;

/// Default cap on objects per scene.
pub const DEFAULT_MAX_OBJECTS: usize = 32;

const UNIT_TOL: f64 = 1e-6;

/// Object pose: translation in meters, full extents in meters, and the
/// rotation about the vertical axis encoded as (sin, cos). The scalar
/// angle is kept alongside so serialization round-trips bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub translation: [f64; 3],
    pub size: [f64; 3],
    sin_theta: f64,
    cos_theta: f64,
    theta: f64,
}

impl Pose {
    pub fn new(translation: [f64; 3], size: [f64; 3], theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::validation("theta", "rotation angle must be finite"));
        }
        let pose = Pose {
            translation,
            size,
            sin_theta: theta.sin(),
            cos_theta: theta.cos(),
            theta,
        };
        pose.check()?;
        Ok(pose)
    }

    /// Build from an explicit (sin, cos) pair, e.g. when reading a token
    /// sequence. The pair must lie on the unit circle within 1e-6.
    pub fn from_sin_cos(
        translation: [f64; 3],
        size: [f64; 3],
        sin_theta: f64,
        cos_theta: f64,
    ) -> Result<Self> {
        let norm = sin_theta * sin_theta + cos_theta * cos_theta;
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::validation(
                "pose",
                format!("sin^2 + cos^2 = {norm}, expected 1"),
            ));
        }
        let pose = Pose {
            translation,
            size,
            sin_theta,
            cos_theta,
            theta: sin_theta.atan2(cos_theta),
        };
        pose.check()?;
        Ok(pose)
    }

    fn check(&self) -> Result<()> {
        if self.translation.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("translation", "must be finite"));
        }
        for (i, &s) in self.size.iter().enumerate() {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::validation(
                    "size",
                    format!("component {i} must be positive, got {s}"),
                ));
            }
        }
        Ok(())
    }

    pub fn sin_theta(&self) -> f64 {
        self.sin_theta
    }

    pub fn cos_theta(&self) -> f64 {
        self.cos_theta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// One furnishing: class label, pose, optional retrieved model id, and
/// the cuboid assembly in the normalized local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: String,
    pub class: String,
    pub model_id: Option<String>,
    pub pose: Pose,
    pub cuboids: Vec<Cuboid>,
}

impl SceneObject {
    /// World-space oriented boxes of the whole assembly.
    pub fn world_cuboids(&self) -> Vec<OrientedCuboid> {
        self.cuboids.iter().map(|c| world_cuboid(self, c)).collect()
    }

    fn validate(&self, path: &str) -> Result<()> {
        self.pose.check().map_err(|e| match e {
            Error::Validation { field, message } => Error::Validation {
                field: format!("{path}.{field}"),
                message,
            },
            other => other,
        })?;
        if self.cuboids.is_empty() {
            return Err(Error::validation(
                &format!("{path}.cuboids"),
                "cuboid assembly must be non-empty",
            ));
        }
        for (j, c) in self.cuboids.iter().enumerate() {
            if c.size.iter().any(|&s| !(s > 0.0)) {
                return Err(Error::validation(
                    &format!("{path}.cuboids[{j}].size"),
                    "cuboid extents must be positive",
                ));
            }
            if !c.within_unit_cube(UNIT_TOL) {
                return Err(Error::validation(
                    &format!("{path}.cuboids[{j}]"),
                    "local cuboid must lie within [0,1]^3",
                ));
            }
        }
        Ok(())
    }
}

/// Map a local-frame cuboid into world space: recenter the local frame to
/// [-0.5, 0.5]^3, scale per axis by the object size, rotate about y, then
/// translate. Extents are stored pre-rotation; the rotation rides along
/// as theta.
pub fn world_cuboid(object: &SceneObject, local: &Cuboid) -> OrientedCuboid {
    let pose = &object.pose;
    let centered = [
        (local.center[0] - 0.5) * pose.size[0],
        (local.center[1] - 0.5) * pose.size[1],
        (local.center[2] - 0.5) * pose.size[2],
    ];
    let rotated = geom::rotate_y(centered, pose.sin_theta, pose.cos_theta);
    OrientedCuboid {
        center: [
            rotated[0] + pose.translation[0],
            rotated[1] + pose.translation[1],
            rotated[2] + pose.translation[2],
        ],
        extents: [
            local.size[0] * pose.size[0],
            local.size[1] * pose.size[1],
            local.size[2] * pose.size[2],
        ],
        theta: pose.theta,
    }
}

/// Counter-clockwise simple polygon on the (x, z) plane, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorPlan {
    vertices: Vec<[f64; 2]>,
}

impl FloorPlan {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let plan = FloorPlan { vertices };
        plan.validate("floor")?;
        Ok(plan)
    }

    /// Axis-aligned `width x depth` rectangle centered at the origin.
    pub fn rectangle(width: f64, depth: f64) -> Self {
        let (hw, hd) = (0.5 * width, 0.5 * depth);
        FloorPlan {
            vertices: vec![[-hw, -hd], [hw, -hd], [hw, hd], [-hw, hd]],
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        if self.vertices.len() < 3 {
            return Err(Error::validation(
                field,
                format!("polygon needs at least 3 vertices, got {}", self.vertices.len()),
            ));
        }
        if self
            .vertices
            .iter()
            .any(|v| !v[0].is_finite() || !v[1].is_finite())
        {
            return Err(Error::validation(field, "vertices must be finite"));
        }
        if geom::polygon_signed_area(&self.vertices) <= 0.0 {
            return Err(Error::validation(
                field,
                "polygon must be counter-clockwise with positive area",
            ));
        }
        if !geom::polygon_is_simple(&self.vertices) {
            return Err(Error::validation(field, "polygon must be simple"));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        geom::polygon_signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.vertices.len();
        let mut cx = 0.0;
        let mut cz = 0.0;
        for i in 0..n {
            let [x0, z0] = self.vertices[i];
            let [x1, z1] = self.vertices[(i + 1) % n];
            let cross = x0 * z1 - x1 * z0;
            cx += (x0 + x1) * cross;
            cz += (z0 + z1) * cross;
        }
        let a = self.area();
        [cx / (6.0 * a), cz / (6.0 * a)]
    }

    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for i in 0..2 {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        geom::point_in_polygon([x, z], &self.vertices)
    }
}

/// Floor polygon plus ordered object list.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub room_type: String,
    pub floor: FloorPlan,
    pub objects: Vec<SceneObject>,
}

impl Scene {
    pub fn new(room_type: impl Into<String>, floor: FloorPlan, objects: Vec<SceneObject>) -> Result<Self> {
        let scene = Scene {
            room_type: room_type.into(),
            floor,
            objects,
        };
        scene.validate(DEFAULT_MAX_OBJECTS)?;
        Ok(scene)
    }

    pub fn validate(&self, max_objects: usize) -> Result<()> {
        self.floor.validate("floor")?;
        if self.objects.len() > max_objects {
            return Err(Error::validation(
                "objects",
                format!("{} objects exceed the cap of {max_objects}", self.objects.len()),
            ));
        }
        for (i, obj) in self.objects.iter().enumerate() {
            obj.validate(&format!("objects[{i}]"))?;
        }
        Ok(())
    }

    /// All world cuboids with the owning object index.
    pub fn world_cuboids_with_owner(&self) -> Vec<(usize, OrientedCuboid)> {
        let mut out = Vec::new();
        for (i, obj) in self.objects.iter().enumerate() {
            for c in &obj.cuboids {
                out.push((i, world_cuboid(obj, c)));
            }
        }
        out
    }

    /// Per-class object counts, for category-distribution metrics.
    pub fn class_counts(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for obj in &self.objects {
            *counts.entry(obj.class.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Structural equality with a numeric tolerance, for round-trip tests
    /// where floats pass through a lossy path (e.g. token sequences).
    pub fn approx_eq(&self, other: &Scene, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol;
        if self.room_type != other.room_type
            || self.floor.vertices.len() != other.floor.vertices.len()
            || self.objects.len() != other.objects.len()
        {
            return false;
        }
        for (a, b) in self.floor.vertices.iter().zip(&other.floor.vertices) {
            if !close(a[0], b[0]) || !close(a[1], b[1]) {
                return false;
            }
        }
        for (a, b) in self.objects.iter().zip(&other.objects) {
            if a.class != b.class || a.model_id != b.model_id || a.cuboids.len() != b.cuboids.len()
            {
                return false;
            }
            for i in 0..3 {
                if !close(a.pose.translation[i], b.pose.translation[i])
                    || !close(a.pose.size[i], b.pose.size[i])
                {
                    return false;
                }
            }
            if !close(a.pose.sin_theta, b.pose.sin_theta)
                || !close(a.pose.cos_theta, b.pose.cos_theta)
            {
                return false;
            }
            for (ca, cb) in a.cuboids.iter().zip(&b.cuboids) {
                for i in 0..3 {
                    if !close(ca.center[i], cb.center[i]) || !close(ca.size[i], cb.size[i]) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// class vocabulary

/// Ordered class-name-to-index map. The entity delimiter [SEP] is the
/// reserved index just past the real classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    names: Vec<String>,
}

impl Vocabulary {
    pub fn from_names(names: Vec<String>) -> Result<Self> {
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::validation("vocabulary", format!("duplicate class `{n}`")));
            }
        }
        Ok(Vocabulary { names })
    }

    /// JSON array of class names.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let names: Vec<String> = serde_json::from_slice(&fs::read(path)?)?;
        Self::from_names(names)
    }

    /// The bundled default class list.
    pub fn default_classes() -> Self {
        let names: Vec<String> =
            serde_json::from_str(include_str!("../assets/classes.json")).expect("bundled list");
        Vocabulary { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<u32> {
        self.names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn name(&self, index: u32) -> Option<&str> {
        self.names.get(index as usize).map(String::as_str)
    }

    /// Reserved delimiter class carried by entity and floor tokens.
    pub fn sep_index(&self) -> u32 {
        self.names.len() as u32
    }
}

// ---------------------------------------------------------------------------
// token sequences

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Floor,
    Entity,
    Cuboid,
}

/// One row of the scene sequence. Entity and floor tokens carry the
/// reserved delimiter class; cuboid tokens carry the owning object's
/// class and their own world-space box (extents pre-rotation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenRecord {
    pub kind: TokenKind,
    pub class_label: u32,
    pub translation: [f64; 3],
    pub size: [f64; 3],
    pub sin_theta: f64,
    pub cos_theta: f64,
}

/// Flatten a scene into its token sequence: the floor token, then per
/// object an entity token followed by its cuboid tokens sorted ascending
/// by world-frame bottom height (ties broken by center z, then x).
/// `permute` shuffles the object order with the seeded generator; `None`
/// keeps input order.
pub fn to_token_sequence(
    scene: &Scene,
    vocab: &Vocabulary,
    permute: Option<u64>,
) -> Result<Vec<TokenRecord>> {
    let (lo, hi) = scene.floor.bbox();
    let centroid = scene.floor.centroid();
    let mut tokens = vec![TokenRecord {
        kind: TokenKind::Floor,
        class_label: vocab.sep_index(),
        translation: [centroid[0], 0.0, centroid[1]],
        size: [hi[0] - lo[0], 0.0, hi[1] - lo[1]],
        sin_theta: 0.0,
        cos_theta: 1.0,
    }];

    let mut order: Vec<usize> = (0..scene.objects.len()).collect();
    if let Some(seed) = permute {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }

    for &i in &order {
        let obj = &scene.objects[i];
        let class = vocab.index_of(&obj.class).ok_or_else(|| {
            Error::validation("class", format!("`{}` not in vocabulary", obj.class))
        })?;
        tokens.push(TokenRecord {
            kind: TokenKind::Entity,
            class_label: vocab.sep_index(),
            translation: obj.pose.translation,
            size: obj.pose.size,
            sin_theta: obj.pose.sin_theta,
            cos_theta: obj.pose.cos_theta,
        });
        let mut world = obj.world_cuboids();
        world.sort_by(|a, b| {
            let bottom = |c: &OrientedCuboid| c.center[1] - 0.5 * c.extents[1];
            bottom(a)
                .total_cmp(&bottom(b))
                .then(a.center[2].total_cmp(&b.center[2]))
                .then(a.center[0].total_cmp(&b.center[0]))
        });
        for w in world {
            tokens.push(TokenRecord {
                kind: TokenKind::Cuboid,
                class_label: class,
                translation: w.center,
                size: w.extents,
                sin_theta: obj.pose.sin_theta,
                cos_theta: obj.pose.cos_theta,
            });
        }
    }
    Ok(tokens)
}

/// Inverse of [`to_token_sequence`] up to object order: rebuild a scene
/// from a token stream plus the floor and room type the stream was
/// emitted under. Cuboids come back in token (height-sorted) order and
/// object ids are regenerated.
pub fn scene_from_tokens(
    tokens: &[TokenRecord],
    room_type: &str,
    floor: FloorPlan,
    vocab: &Vocabulary,
) -> Result<Scene> {
    struct Pending {
        pose: Pose,
        class: Option<String>,
        cuboids: Vec<Cuboid>,
    }
    let mut done: Vec<Pending> = Vec::new();
    let mut current: Option<Pending> = None;

    let finish = |p: Pending, done: &mut Vec<Pending>| -> Result<()> {
        if p.cuboids.is_empty() {
            return Err(Error::validation("tokens", "entity token with no cuboids"));
        }
        done.push(p);
        Ok(())
    };

    for tok in tokens {
        match tok.kind {
            TokenKind::Floor => {}
            TokenKind::Entity => {
                if let Some(p) = current.take() {
                    finish(p, &mut done)?;
                }
                current = Some(Pending {
                    pose: Pose::from_sin_cos(
                        tok.translation,
                        tok.size,
                        tok.sin_theta,
                        tok.cos_theta,
                    )?,
                    class: None,
                    cuboids: Vec::new(),
                });
            }
            TokenKind::Cuboid => {
                let p = current.as_mut().ok_or_else(|| {
                    Error::validation("tokens", "cuboid token before any entity token")
                })?;
                let name = vocab.name(tok.class_label).ok_or_else(|| {
                    Error::validation(
                        "tokens",
                        format!("class index {} out of vocabulary", tok.class_label),
                    )
                })?;
                match &p.class {
                    None => p.class = Some(name.to_string()),
                    Some(c) if c == name => {}
                    Some(c) => {
                        return Err(Error::validation(
                            "tokens",
                            format!("cuboid class `{name}` conflicts with `{c}`"),
                        ))
                    }
                }
                // invert the world transform back into the local frame
                let pose = &p.pose;
                let d = [
                    tok.translation[0] - pose.translation[0],
                    tok.translation[1] - pose.translation[1],
                    tok.translation[2] - pose.translation[2],
                ];
                let unrot = geom::rotate_y(d, -pose.sin_theta(), pose.cos_theta());
                p.cuboids.push(Cuboid::new(
                    [
                        unrot[0] / pose.size[0] + 0.5,
                        unrot[1] / pose.size[1] + 0.5,
                        unrot[2] / pose.size[2] + 0.5,
                    ],
                    [
                        tok.size[0] / pose.size[0],
                        tok.size[1] / pose.size[1],
                        tok.size[2] / pose.size[2],
                    ],
                ));
            }
        }
    }
    if let Some(p) = current.take() {
        finish(p, &mut done)?;
    }

    let objects = done
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let class = p
                .class
                .ok_or_else(|| Error::validation("tokens", "entity token with no cuboids"))?;
            Ok(SceneObject {
                id: format!("obj_{i}"),
                class,
                model_id: None,
                pose: p.pose,
                cuboids: p.cuboids,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Scene::new(room_type, floor, objects)
}

// ---------------------------------------------------------------------------
// JSON schema

#[derive(Serialize, Deserialize)]
struct SceneJson {
    room_type: String,
    floor: FloorJson,
    #[serde(default)]
    objects: Vec<ObjectJson>,
}

#[derive(Serialize, Deserialize)]
struct FloorJson {
    vertices: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct ObjectJson {
    id: String,
    class: String,
    model_id: Option<String>,
    translation: [f64; 3],
    size: [f64; 3],
    theta: f64,
    cuboids: Vec<CuboidJson>,
}

#[derive(Serialize, Deserialize)]
struct CuboidJson {
    center: [f64; 3],
    size: [f64; 3],
}

/// JSON formatter writing every float with 17 significant digits, enough
/// to reproduce any f64 exactly on re-parse.
struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

impl Scene {
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let json = SceneJson {
            room_type: self.room_type.clone(),
            floor: FloorJson {
                vertices: self.floor.vertices.clone(),
            },
            objects: self
                .objects
                .iter()
                .map(|o| ObjectJson {
                    id: o.id.clone(),
                    class: o.class.clone(),
                    model_id: o.model_id.clone(),
                    translation: o.pose.translation,
                    size: o.pose.size,
                    theta: o.pose.theta,
                    cuboids: o
                        .cuboids
                        .iter()
                        .map(|c| CuboidJson {
                            center: c.center,
                            size: c.size,
                        })
                        .collect(),
                })
                .collect(),
        };
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitFormatter);
        json.serialize(&mut ser)?;
        buf.push(b'\n');
        Ok(buf)
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Scene> {
        let json: SceneJson = serde_json::from_slice(bytes).map_err(|e| Error::Validation {
            field: "scene".into(),
            message: e.to_string(),
        })?;
        let floor = FloorPlan {
            vertices: json.floor.vertices,
        };
        let objects = json
            .objects
            .into_iter()
            .map(|o| {
                Ok(SceneObject {
                    id: o.id,
                    class: o.class,
                    model_id: o.model_id,
                    pose: Pose::new(o.translation, o.size, o.theta)?,
                    cuboids: o
                        .cuboids
                        .into_iter()
                        .map(|c| Cuboid::new(c.center, c.size))
                        .collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let scene = Scene {
            room_type: json.room_type,
            floor,
            objects,
        };
        scene.validate(DEFAULT_MAX_OBJECTS)?;
        Ok(scene)
    }
}

pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, scene.to_json_bytes()?)?;
    Ok(())
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    Scene::from_json_bytes(&fs::read(path)?)
}
