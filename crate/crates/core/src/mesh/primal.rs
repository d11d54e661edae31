use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::geometry::{self, dist, point_segment_distance, segments_cross, signed_area};
use crate::{Error, Point, Result};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub const UNIT: Rect = Rect { min: [0.0, 0.0], max: [1.0, 1.0] };

    pub fn new(min: Point, max: Point) -> Result<Self> {
        let r = Rect { min, max };
        if !(r.width() > 0.0 && r.height() > 0.0) || !(min.iter().chain(&max).all(|v| v.is_finite())) {
            return Err(Error::InvalidArgument(format!("degenerate rectangle {min:?}..{max:?}")));
        }
        Ok(r)
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn corners(&self) -> Vec<Point> {
        vec![self.min, [self.max[0], self.min[1]], self.max, [self.min[0], self.max[1]]]
    }
}

/// A validated star-shaped polygonal partition of a planar domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalMesh {
    vertices: Vec<Point>,
    polygons: Vec<Vec<usize>>,
    bbox: Rect,
}

impl PrimalMesh {
    /// Validates and wraps raw vertices and counter-clockwise polygons.
    pub fn new(vertices: Vec<Point>, polygons: Vec<Vec<usize>>) -> Result<Self> {
        if vertices.is_empty() || polygons.is_empty() {
            return Err(Error::Degenerate("mesh has no vertices or no polygons".into()));
        }
        if let Some(i) = vertices.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::Degenerate(format!("vertex {i} is not finite")));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let bbox = Rect::new(lo, hi).map_err(|_| Error::Degenerate("vertices are collinear".into()))?;
        let mesh = PrimalMesh { vertices, polygons, bbox };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn polygons(&self) -> &[Vec<usize>] {
        &self.polygons
    }

    pub fn bbox(&self) -> Rect {
        self.bbox
    }

    pub fn polygon_points(&self, p: usize) -> Vec<Point> {
        self.polygons[p].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Vertex dedup / geometric tolerance: 1e-12 of the bounding-box diagonal.
    pub fn tolerance(&self) -> f64 {
        1e-12 * self.bbox.diagonal()
    }

    pub fn area(&self) -> f64 {
        (0..self.polygons.len()).map(|p| signed_area(&self.polygon_points(p))).sum()
    }

    /// Distinct polygon sides as `(lo, hi)` vertex pairs with the polygons using them.
    pub fn segments(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (p, poly) in self.polygons.iter().enumerate() {
            for i in 0..poly.len() {
                let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
                map.entry((a.min(b), a.max(b))).or_default().push(p);
            }
        }
        map
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        let tol = self.tolerance();
        let mut used = vec![false; nv];
        for (p, poly) in self.polygons.iter().enumerate() {
            if poly.len() < 3 {
                return Err(Error::NotSimple { polygon: p, msg: "fewer than 3 vertices".into() });
            }
            for &v in poly {
                if v >= nv {
                    return Err(Error::Degenerate(format!("polygon {p} references missing vertex {v}")));
                }
                used[v] = true;
            }
            let mut sorted = poly.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::NotSimple { polygon: p, msg: "repeated vertex".into() });
            }
            let pts = self.polygon_points(p);
            let area = signed_area(&pts);
            if area <= 0.0 {
                return Err(Error::Orientation { polygon: p, area });
            }
            check_simple(p, &pts, tol)?;
            if geometry::chebyshev_center(&pts).1 <= tol {
                return Err(Error::NotStarShaped { polygon: p });
            }
        }
        self.check_duplicates(tol)?;
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::Tiling(format!("vertex {v} is not used by any polygon")));
        }
        self.check_tiling(tol)
    }

    fn check_duplicates(&self, tol: f64) -> Result<()> {
        let mut order: Vec<usize> = (0..self.vertices.len()).collect();
        order.sort_by(|&a, &b| self.vertices[a][0].total_cmp(&self.vertices[b][0]));
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                if self.vertices[b][0] - self.vertices[a][0] > tol {
                    break;
                }
                if dist(self.vertices[a], self.vertices[b]) <= tol {
                    return Err(Error::DuplicateVertices { a: a.min(b), b: a.max(b) });
                }
            }
        }
        Ok(())
    }

    fn check_tiling(&self, tol: f64) -> Result<()> {
        // Topology: a side is used by at most two polygons, in opposite directions.
        let mut dirs: BTreeMap<(usize, usize), Vec<(usize, bool)>> = BTreeMap::new();
        for (p, poly) in self.polygons.iter().enumerate() {
            for i in 0..poly.len() {
                let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
                dirs.entry((a.min(b), a.max(b))).or_default().push((p, a < b));
            }
        }
        let mut boundary_area = 0.0;
        for (&(a, b), users) in &dirs {
            match users.as_slice() {
                [(_, fwd)] => {
                    let (s, e) = if *fwd { (a, b) } else { (b, a) };
                    boundary_area += 0.5 * geometry::cross(self.vertices[s], self.vertices[e]);
                }
                [(p, f1), (q, f2)] if f1 == f2 => {
                    return Err(Error::Tiling(format!("polygons {p} and {q} overlap along side ({a},{b})")));
                }
                [_, _] => {}
                _ => {
                    return Err(Error::Tiling(format!("side ({a},{b}) is shared by {} polygons", users.len())));
                }
            }
        }
        let total = self.area();
        if (total - boundary_area).abs() > 1e-10 * total.max(boundary_area) {
            return Err(Error::Tiling(format!(
                "polygon area sum {total} differs from enclosed domain area {boundary_area}"
            )));
        }

        // Geometry: no hanging vertices, no crossing sides, no vertex inside another polygon.
        let segs: Vec<(usize, usize)> = dirs.keys().copied().collect();
        let grid = BucketGrid::new(&self.vertices, &segs);
        for (si, &(a, b)) in segs.iter().enumerate() {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            for sj in grid.segment_candidates(pa, pb) {
                if sj <= si {
                    continue;
                }
                let (c, d) = segs[sj];
                if a == c || a == d || b == c || b == d {
                    continue;
                }
                if segments_cross(pa, pb, self.vertices[c], self.vertices[d], tol * tol.max(1.0)) {
                    return Err(Error::Tiling(format!("sides ({a},{b}) and ({c},{d}) cross")));
                }
            }
            for v in grid.point_candidates(pa, pb) {
                if v != a && v != b && point_segment_distance(self.vertices[v], pa, pb) <= tol {
                    return Err(Error::Tiling(format!("vertex {v} hangs on side ({a},{b})")));
                }
            }
        }
        for (p, poly) in self.polygons.iter().enumerate() {
            let pts = self.polygon_points(p);
            let (lo, hi) = bounds(&pts);
            for v in grid.points_in_box(lo, hi) {
                if !poly.contains(&v) && geometry::point_strictly_inside(&pts, self.vertices[v], tol) {
                    return Err(Error::Tiling(format!("vertex {v} lies inside polygon {p}")));
                }
            }
        }
        Ok(())
    }
}

fn bounds(pts: &[Point]) -> (Point, Point) {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (lo, hi)
}

fn check_simple(p: usize, pts: &[Point], tol: f64) -> Result<()> {
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (a, b, c, d) = (pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]);
            if segments_cross(a, b, c, d, 0.0)
                || point_segment_distance(c, a, b) <= tol
                || point_segment_distance(a, c, d) <= tol
            {
                return Err(Error::NotSimple { polygon: p, msg: format!("sides {i} and {j} intersect") });
            }
        }
    }
    Ok(())
}

/// Uniform bucket grid over vertices and segments for local geometric queries.
struct BucketGrid {
    lo: Point,
    cell: f64,
    points: HashMap<(i64, i64), Vec<usize>>,
    segments: HashMap<(i64, i64), Vec<usize>>,
}

impl BucketGrid {
    fn new(vertices: &[Point], segs: &[(usize, usize)]) -> Self {
        let (lo, hi) = bounds(vertices);
        let mean_len = segs.iter().map(|&(a, b)| dist(vertices[a], vertices[b])).sum::<f64>()
            / segs.len().max(1) as f64;
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let cell = mean_len.max(extent * 1e-6).max(f64::MIN_POSITIVE);
        let mut g = BucketGrid { lo, cell, points: HashMap::new(), segments: HashMap::new() };
        for (i, p) in vertices.iter().enumerate() {
            g.points.entry(g.key(*p)).or_default().push(i);
        }
        for (s, &(a, b)) in segs.iter().enumerate() {
            for key in g.keys_in_box(vertices[a], vertices[b]) {
                g.segments.entry(key).or_default().push(s);
            }
        }
        g
    }

    fn key(&self, p: Point) -> (i64, i64) {
        (((p[0] - self.lo[0]) / self.cell).floor() as i64, ((p[1] - self.lo[1]) / self.cell).floor() as i64)
    }

    fn keys_in_box(&self, a: Point, b: Point) -> Vec<(i64, i64)> {
        let (ka, kb) = (self.key([a[0].min(b[0]), a[1].min(b[1])]), self.key([a[0].max(b[0]), a[1].max(b[1])]));
        let mut keys = Vec::new();
        for i in ka.0 - 1..=kb.0 + 1 {
            for j in ka.1 - 1..=kb.1 + 1 {
                keys.push((i, j));
            }
        }
        keys
    }

    fn segment_candidates(&self, a: Point, b: Point) -> Vec<usize> {
        let mut out: Vec<usize> =
            self.keys_in_box(a, b).iter().filter_map(|k| self.segments.get(k)).flatten().copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn point_candidates(&self, a: Point, b: Point) -> Vec<usize> {
        self.points_in_box(a, b)
    }

    fn points_in_box(&self, a: Point, b: Point) -> Vec<usize> {
        let mut out: Vec<usize> =
            self.keys_in_box(a, b).iter().filter_map(|k| self.points.get(k)).flatten().copied().collect();
        out.sort_unstable();
        out
    }
}

/// `nx × ny` axis-aligned rectangular cells tiling `domain`.
pub fn build_rectangular_mesh(nx: usize, ny: usize, domain: Rect) -> Result<PrimalMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!("cell counts must be positive, got {nx}x{ny}")));
    }
    let domain = Rect::new(domain.min, domain.max)?;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx { domain.max[0] } else { domain.min[0] + domain.width() * i as f64 / nx as f64 };
            let y = if j == ny { domain.max[1] } else { domain.min[1] + domain.height() * j as f64 / ny as f64 };
            vertices.push([x, y]);
        }
    }
    let v = |i: usize, j: usize| j * (nx + 1) + i;
    let mut polygons = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            polygons.push(vec![v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    PrimalMesh::new(vertices, polygons)
}

/// Parses the polygon mesh text format:
///
/// ```text
/// # comment
/// nv np
/// x y            (nv lines)
/// m i1 ... im    (np lines, 0-based counter-clockwise indices)
/// ```
pub fn parse_polygon_mesh(text: &str, path: &Path) -> Result<PrimalMesh> {
    let perr = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 2 {
        return Err(perr(hl, format!("expected `nv np`, found `{header}`")));
    }
    let nv: usize = head[0].parse().map_err(|_| perr(hl, format!("bad vertex count `{}`", head[0])))?;
    let np: usize = head[1].parse().map_err(|_| perr(hl, format!("bad polygon count `{}`", head[1])))?;

    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(hl, format!("missing vertex line {k}")))?;
        let xy: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| perr(ln, format!("bad coordinate `{t}`"))))
            .collect::<Result<_>>()?;
        if xy.len() != 2 {
            return Err(perr(ln, format!("expected `x y`, found `{l}`")));
        }
        vertices.push([xy[0], xy[1]]);
    }
    let mut polygons = Vec::with_capacity(np);
    for k in 0..np {
        let (ln, l) = lines.next().ok_or_else(|| perr(hl, format!("missing polygon line {k}")))?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| perr(ln, format!("bad index `{t}`"))))
            .collect::<Result<_>>()?;
        let (&m, rest) = ids.split_first().ok_or_else(|| perr(ln, "empty polygon line".into()))?;
        if rest.len() != m {
            return Err(perr(ln, format!("polygon declares {m} vertices but lists {}", rest.len())));
        }
        if let Some(bad) = rest.iter().find(|&&i| i >= nv) {
            return Err(perr(ln, format!("vertex index {bad} out of range (nv = {nv})")));
        }
        polygons.push(rest.to_vec());
    }
    if let Some((ln, l)) = lines.next() {
        return Err(perr(ln, format!("unexpected trailing content `{l}`")));
    }
    PrimalMesh::new(vertices, polygons)
}

pub fn read_polygon_mesh(path: &Path) -> Result<PrimalMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_polygon_mesh(&text, path)
}

/// Serializes in the format accepted by [`read_polygon_mesh`].
pub fn format_polygon_mesh(mesh: &PrimalMesh) -> String {
    let mut s = format!("{} {}\n", mesh.vertices.len(), mesh.polygons.len());
    for p in &mesh.vertices {
        s.push_str(&format!("{:.17e} {:.17e}\n", p[0], p[1]));
    }
    for poly in &mesh.polygons {
        s.push_str(&poly.len().to_string());
        for v in poly {
            s.push_str(&format!(" {v}"));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PrimalMesh> {
        parse_polygon_mesh(text, Path::new("test.mesh"))
    }

    #[test]
    fn rectangular_counts() {
        let m = build_rectangular_mesh(1, 1, Rect::UNIT).unwrap();
        assert_eq!(m.polygons().len(), 1);
        assert_eq!(m.polygons()[0].len(), 4);

        let m = build_rectangular_mesh(4, 4, Rect::UNIT).unwrap();
        assert_eq!(m.polygons().len(), 16);
        assert_eq!(m.vertices().len(), 25);
        assert_eq!(m.segments().len(), 4 * 5 + 4 * 5);

        let m = build_rectangular_mesh(2, 1, Rect::new([0.0, 0.0], [2.0, 1.0]).unwrap()).unwrap();
        let shared: Vec<_> = m.segments().into_iter().filter(|(_, u)| u.len() == 2).collect();
        assert_eq!(shared.len(), 1);
        assert!((m.area() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rectangular_rejects_bad_input() {
        assert!(matches!(build_rectangular_mesh(0, 3, Rect::UNIT), Err(Error::InvalidArgument(_))));
        let flat = Rect { min: [0.0, 0.0], max: [1.0, 0.0] };
        assert!(build_rectangular_mesh(2, 2, flat).is_err());
    }

    #[test]
    fn reads_unit_square() {
        let m = parse("# unit square\n4 1\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 3 # ccw\n").unwrap();
        assert_eq!(m.polygons().len(), 1);
    }

    #[test]
    fn clockwise_polygon_is_named() {
        let err = parse("4 1\n0 0\n1 0\n1 1\n0 1\n4 0 3 2 1\n").unwrap_err();
        assert!(matches!(err, Error::Orientation { polygon: 0, .. }), "{err}");
    }

    #[test]
    fn overlapping_squares_are_rejected() {
        let text = "8 2\n0 0\n1 0\n1 1\n0 1\n0.5 0.5\n1.5 0.5\n1.5 1.5\n0.5 1.5\n4 0 1 2 3\n4 4 5 6 7\n";
        assert!(matches!(parse(text), Err(Error::Tiling(_))));
        // same vertices listed twice in the same direction
        let text = "4 2\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 3\n4 0 1 2 3\n";
        assert!(matches!(parse(text), Err(Error::Tiling(_))));
    }

    #[test]
    fn hanging_node_is_rejected() {
        // left cell is a triangle-free square, right column split in two: vertex 6 hangs on side (1,2)
        let text = "8 3\n0 0\n1 0\n1 1\n0 1\n2 0\n2 1\n1 0.5\n2 0.5\n\
                    4 0 1 2 3\n4 1 4 7 6\n4 6 7 5 2\n";
        assert!(matches!(parse(text), Err(Error::Tiling(_))));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse("4 1\n0 0\n1 zero\n1 1\n0 1\n4 0 1 2 3\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
        match parse("4 1\n0 0\n1 0\n1 1\n0 1\n3 0 1 2 3\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 6),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn non_star_shaped_is_rejected() {
        let text = "8 1\n0 0\n3 0\n3 3\n2 3\n2 1\n1 1\n1 3\n0 3\n8 0 1 2 3 4 5 6 7\n";
        assert!(matches!(parse(text), Err(Error::NotStarShaped { polygon: 0 })));
    }

    #[test]
    fn duplicate_vertices_are_rejected() {
        let text = "5 1\n0 0\n1 0\n1 1\n0 1\n1 1\n4 0 1 2 3\n";
        assert!(matches!(parse(text), Err(Error::DuplicateVertices { a: 2, b: 4 })));
    }

    #[test]
    fn format_roundtrip() {
        let m = build_rectangular_mesh(3, 2, Rect::UNIT).unwrap();
        let back = parse(&format_polygon_mesh(&m)).unwrap();
        assert_eq!(back, m);
    }
}
