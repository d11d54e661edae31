//! Planar polygon helpers.

use crate::Point;

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Shoelace signed area; positive for counter-clockwise vertex order.
pub fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| cross(pts[i], pts[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Area centroid of a simple polygon.
pub fn centroid(pts: &[Point]) -> Point {
    let n = pts.len();
    let a = signed_area(pts);
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        let w = cross(p, q);
        cx += (p[0] + q[0]) * w;
        cy += (p[1] + q[1]) * w;
    }
    [cx / (6.0 * a), cy / (6.0 * a)]
}

pub fn diameter(pts: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(dist(pts[i], pts[j]));
        }
    }
    d
}

/// True when every interior angle of a counter-clockwise polygon is at most pi.
pub fn is_convex(pts: &[Point], tol: f64) -> bool {
    let n = pts.len();
    (0..n).all(|i| {
        let (a, b, c) = (pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
        cross(sub(b, a), sub(c, b)) >= -tol
    })
}

/// Inward half-planes of a counter-clockwise polygon as `(unit normal, offset)`
/// with the polygon kernel being `{x : n·x <= offset}` for every pair.
pub fn edge_halfplanes(pts: &[Point]) -> Vec<(Point, f64)> {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let d = sub(b, a);
            let len = d[0].hypot(d[1]);
            let nrm = [d[1] / len, -d[0] / len];
            (nrm, dot(nrm, a))
        })
        .collect()
}

/// Clips a convex counter-clockwise polygon to `{x : n·x <= c}`.
pub fn clip_halfplane(poly: &[Point], n: Point, c: f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let m = poly.len();
    for i in 0..m {
        let (p, q) = (poly[i], poly[(i + 1) % m]);
        let (fp, fq) = (dot(n, p) - c, dot(n, q) - c);
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Largest inscribed disc of the polygon kernel, as `(center, radius)`.
///
/// Solves `max r s.t. n_i·x + r <= c_i` by enumerating every vertex of the
/// constraint arrangement in `(x, y, r)` space. Radius is `<= 0` when the
/// kernel has empty interior.
pub fn chebyshev_center(pts: &[Point]) -> (Point, f64) {
    let hp = edge_halfplanes(pts);
    let m = hp.len();
    let scale = diameter(pts).max(f64::MIN_POSITIVE);
    let feas_tol = 1e-12 * scale;
    let mut best: Option<(Point, f64)> = None;
    for i in 0..m {
        for j in i + 1..m {
            for l in j + 1..m {
                let rows = [hp[i], hp[j], hp[l]];
                let Some((x, r)) = solve_vertex(&rows) else { continue };
                if hp.iter().all(|(n, c)| dot(*n, x) + r <= c + feas_tol) {
                    let better = match best {
                        None => true,
                        Some((_, rb)) => r > rb + feas_tol,
                    };
                    if better {
                        best = Some((x, r));
                    }
                }
            }
        }
    }
    best.unwrap_or(([f64::NAN, f64::NAN], -1.0))
}

// Solves [n_x n_y 1][x y r]^T = c for three half-planes (Cramer's rule).
fn solve_vertex(rows: &[(Point, f64); 3]) -> Option<(Point, f64)> {
    let a = |k: usize| [rows[k].0[0], rows[k].0[1], 1.0];
    let (r0, r1, r2) = (a(0), a(1), a(2));
    let det3 = |c0: [f64; 3], c1: [f64; 3], c2: [f64; 3]| {
        c0[0] * (c1[1] * c2[2] - c1[2] * c2[1]) - c0[1] * (c1[0] * c2[2] - c1[2] * c2[0])
            + c0[2] * (c1[0] * c2[1] - c1[1] * c2[0])
    };
    let det = det3(r0, r1, r2);
    if det.abs() < 1e-12 {
        return None;
    }
    let b = [rows[0].1, rows[1].1, rows[2].1];
    let repl = |k: usize| {
        let mut m = [r0, r1, r2];
        for (row, bv) in m.iter_mut().zip(b) {
            row[k] = bv;
        }
        det3(m[0], m[1], m[2])
    };
    Some(([repl(0) / det, repl(1) / det], repl(2) / det))
}

/// Kernel of a counter-clockwise polygon as a convex polygon (possibly empty).
pub fn kernel(pts: &[Point]) -> Vec<Point> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let mut k = vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
    for (n, c) in edge_halfplanes(pts) {
        k = clip_halfplane(&k, n, c);
        if k.is_empty() {
            break;
        }
    }
    k
}

/// Strictly-inside test for a point against a counter-clockwise polygon (even-odd rule),
/// rejecting points within `tol` of the boundary.
pub fn point_strictly_inside(pts: &[Point], x: Point, tol: f64) -> bool {
    let n = pts.len();
    for i in 0..n {
        if point_segment_distance(x, pts[i], pts[(i + 1) % n]) <= tol {
            return false;
        }
    }
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        if (a[1] > x[1]) != (b[1] > x[1]) {
            let t = (x[1] - a[1]) / (b[1] - a[1]);
            if x[0] < a[0] + t * (b[0] - a[0]) {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn point_segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let d = sub(b, a);
    let len2 = dot(d, d);
    let t = if len2 > 0.0 { (dot(sub(x, a), d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    dist(x, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Proper crossing of two segments (interiors intersect at a single point).
pub fn segments_cross(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    let o1 = cross(sub(b, a), sub(c, a));
    let o2 = cross(sub(b, a), sub(d, a));
    let o3 = cross(sub(d, c), sub(a, c));
    let o4 = cross(sub(d, c), sub(b, c));
    let s = |v: f64| if v > tol { 1 } else if v < -tol { -1 } else { 0 };
    s(o1) * s(o2) < 0 && s(o3) * s(o4) < 0
}
