//! Top-down orthographic SVG rendering of scenes, for visual inspection.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::scene::Scene;

/// Render parameters. An empty palette assigns colors from a fixed wheel
/// by the sorted order of class names in the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    pub width: u32,
    pub height: u32,
    pub palette: BTreeMap<String, String>,
    pub background: String,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec {
            width: 256,
            height: 256,
            palette: BTreeMap::new(),
            background: "#ffffff".to_string(),
        }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 16 || self.height < 16 {
            return Err(Error::Config(format!(
                "render size must be at least 16x16, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

const FLOOR_FILL: &str = "#e8e2d4";
const COLOR_WHEEL: [&str; 12] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c",
    "#ccb974", "#64b5cd", "#a1c9f4", "#ffb482",
];

fn fmt_f(v: f64) -> String {
    format!("{v:.3}")
}

fn parse_hex(color: &str) -> [u8; 3] {
    let hex = color.trim_start_matches('#');
    if hex.len() == 6 {
        if let Ok(v) = u32::from_str_radix(hex, 16) {
            return [(v >> 16) as u8, (v >> 8) as u8, v as u8];
        }
    }
    [0, 0, 0]
}

/// Scene projection shared by the SVG and raster paths: screen-space
/// polygons with fill colors, floor first, cuboids in painter order.
fn projected_polygons(scene: &Scene, spec: &RenderSpec) -> Vec<(Vec<[f64; 2]>, String)> {
    let (flo, fhi) = scene.floor.bbox();
    let mut lo = [flo[0], flo[1]];
    let mut hi = [fhi[0], fhi[1]];
    let cuboids = scene.world_cuboids_with_owner();
    for (_, c) in &cuboids {
        for p in c.footprint() {
            lo[0] = lo[0].min(p[0]);
            lo[1] = lo[1].min(p[1]);
            hi[0] = hi[0].max(p[0]);
            hi[1] = hi[1].max(p[1]);
        }
    }
    let span = [(hi[0] - lo[0]).max(1e-9), (hi[1] - lo[1]).max(1e-9)];
    let margin = 0.05;
    let scale = ((spec.width as f64) * (1.0 - 2.0 * margin) / span[0])
        .min((spec.height as f64) * (1.0 - 2.0 * margin) / span[1]);
    let pad = [
        0.5 * (spec.width as f64 - span[0] * scale),
        0.5 * (spec.height as f64 - span[1] * scale),
    ];
    let map = |p: [f64; 2]| {
        [
            (p[0] - lo[0]) * scale + pad[0],
            (p[1] - lo[1]) * scale + pad[1],
        ]
    };

    let mut classes: Vec<&str> = scene.objects.iter().map(|o| o.class.as_str()).collect();
    classes.sort();
    classes.dedup();
    let color_of = |class: &str| -> String {
        if let Some(c) = spec.palette.get(class) {
            return c.clone();
        }
        let idx = classes.iter().position(|c| *c == class).unwrap_or(0);
        COLOR_WHEEL[idx % COLOR_WHEEL.len()].to_string()
    };

    let mut out = Vec::with_capacity(1 + cuboids.len());
    out.push((
        scene.floor.vertices().iter().map(|&v| map(v)).collect(),
        FLOOR_FILL.to_string(),
    ));

    let mut order: Vec<usize> = (0..cuboids.len()).collect();
    order.sort_by(|&a, &b| {
        let top = |i: usize| cuboids[i].1.center[1] + 0.5 * cuboids[i].1.extents[1];
        top(a).total_cmp(&top(b)).then(a.cmp(&b))
    });
    for i in order {
        let (owner, c) = &cuboids[i];
        out.push((
            c.footprint().iter().map(|&p| map(p)).collect(),
            color_of(&scene.objects[*owner].class),
        ));
    }
    out
}

/// Project the scene onto the (x, z) plane: floor polygon first, then
/// every world cuboid footprint painted in its class color, ordered by
/// cuboid top height ascending so taller geometry paints last. The output
/// is a deterministic byte stream for a given `(scene, spec)`.
pub fn render_topdown(scene: &Scene, spec: &RenderSpec) -> Result<String> {
    spec.validate()?;
    let polygons = projected_polygons(scene, spec);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = spec.width,
        h = spec.height
    )
    .expect("string write");
    writeln!(
        svg,
        r#"<rect width="{w}" height="{h}" fill="{bg}"/>"#,
        w = spec.width,
        h = spec.height,
        bg = spec.background
    )
    .expect("string write");

    for (i, (points, color)) in polygons.iter().enumerate() {
        let points: Vec<String> = points
            .iter()
            .map(|p| format!("{},{}", fmt_f(p[0]), fmt_f(p[1])))
            .collect();
        if i == 0 {
            writeln!(
                svg,
                r##"<polygon points="{}" fill="{color}" stroke="#b0a890" stroke-width="1"/>"##,
                points.join(" ")
            )
            .expect("string write");
        } else {
            writeln!(
                svg,
                r##"<polygon points="{}" fill="{color}" fill-opacity="0.85" stroke="#303030" stroke-width="0.5"/>"##,
                points.join(" ")
            )
            .expect("string write");
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Raster form of [`render_topdown`], sharing its geometry: returns a
/// row-major `width * height * 3` RGB buffer.
pub fn render_raster(scene: &Scene, spec: &RenderSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    let polygons = projected_polygons(scene, spec);
    let (w, h) = (spec.width as usize, spec.height as usize);
    let bg = parse_hex(&spec.background);
    let mut pixels = vec![0u8; w * h * 3];
    for px in pixels.chunks_exact_mut(3) {
        px.copy_from_slice(&bg);
    }

    for (points, color) in &polygons {
        let rgb = parse_hex(color);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            lo[0] = lo[0].min(p[0]);
            lo[1] = lo[1].min(p[1]);
            hi[0] = hi[0].max(p[0]);
            hi[1] = hi[1].max(p[1]);
        }
        let x0 = lo[0].floor().max(0.0) as usize;
        let x1 = (hi[0].ceil() as usize).min(w.saturating_sub(1));
        let y0 = lo[1].floor().max(0.0) as usize;
        let y1 = (hi[1].ceil() as usize).min(h.saturating_sub(1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let p = [x as f64 + 0.5, y as f64 + 0.5];
                if crate::geom::point_in_polygon(p, points) {
                    let idx = (y * w + x) * 3;
                    pixels[idx..idx + 3].copy_from_slice(&rgb);
                }
            }
        }
    }
    Ok(pixels)
}
