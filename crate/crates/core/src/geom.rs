//! Small 2D/3D geometry helpers shared across the crate.
//!
//! Rotations about the vertical axis use the right-handed convention
//! `x' = x cos θ + z sin θ`, `z' = -x sin θ + z cos θ`; every module that
//! rotates in the (x, z) plane goes through [`rotate_y`] or [`rotate_xz`]
//! so the convention cannot drift.

/// Rotate a 3D point about the y axis.
#[inline]
pub fn rotate_y(p: [f64; 3], sin_t: f64, cos_t: f64) -> [f64; 3] {
    let [x, y, z] = p;
    [x * cos_t + z * sin_t, y, -x * sin_t + z * cos_t]
}

/// Rotate a 2D point in the (x, z) plane, same convention as [`rotate_y`].
#[inline]
pub fn rotate_xz(p: [f64; 2], sin_t: f64, cos_t: f64) -> [f64; 2] {
    let [x, z] = p;
    [x * cos_t + z * sin_t, -x * sin_t + z * cos_t]
}

/// Signed polygon area via the shoelace formula. Positive for
/// counter-clockwise vertex order in the standard (x, z) plane.
pub fn polygon_signed_area(pts: &[[f64; 2]]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..pts.len() {
        let [x0, z0] = pts[i];
        let [x1, z1] = pts[(i + 1) % pts.len()];
        acc += x0 * z1 - x1 * z0;
    }
    0.5 * acc
}

#[inline]
fn edge_side(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Clip `subject` against a convex counter-clockwise `clip` polygon
/// (Sutherland-Hodgman). Points exactly on a clip edge are kept.
pub fn clip_polygon_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    if subject.len() < 3 || clip.len() < 3 {
        return Vec::new();
    }
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut out);
        if input.is_empty() {
            return Vec::new();
        }
        for j in 0..input.len() {
            let s = input[j];
            let e = input[(j + 1) % input.len()];
            let sc = edge_side(a, b, s);
            let ec = edge_side(a, b, e);
            let s_in = sc >= 0.0;
            let e_in = ec >= 0.0;
            match (s_in, e_in) {
                (true, true) => out.push(e),
                (true, false) | (false, true) => {
                    let denom = sc - ec;
                    if denom.abs() > 0.0 {
                        let t = sc / denom;
                        out.push([s[0] + (e[0] - s[0]) * t, s[1] + (e[1] - s[1]) * t]);
                    }
                    if e_in {
                        out.push(e);
                    }
                }
                (false, false) => {}
            }
        }
        if out.len() < 3 {
            return Vec::new();
        }
    }
    out
}

/// Even-odd ray-casting point-in-polygon test. Points on an edge may land
/// on either side; callers that care use a tolerance of their own.
pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let [xi, zi] = poly[i];
        let [xj, zj] = poly[(i + 1) % n];
        if (zi > p[1]) != (zj > p[1]) {
            let x_cross = xi + (p[1] - zi) / (zj - zi) * (xj - xi);
            if p[0] < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

fn segments_properly_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = edge_side(c, d, a);
    let d2 = edge_side(c, d, b);
    let d3 = edge_side(a, b, c);
    let d4 = edge_side(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// True if no two non-adjacent edges of the polygon cross.
pub fn polygon_is_simple(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            // skip adjacent edges (they share an endpoint)
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            if segments_properly_intersect(
                poly[i],
                poly[(i + 1) % n],
                poly[j],
                poly[(j + 1) % n],
            ) {
                return false;
            }
        }
    }
    true
}
