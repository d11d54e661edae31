//! Staggered polygonal meshes.
//!
//! A [`PrimalMesh`] is a star-shaped polygonal partition. [`triangulate`] picks
//! one interior point per polygon and fans it to the polygon's vertices. The
//! polygon sides become *primal* edges and the fan segments become *dual*
//! edges of the resulting [`StaggeredMesh`].

pub mod geometry;
mod primal;
mod voronoi;

use std::collections::HashMap;

pub use primal::{build_rectangular_mesh, format_polygon_mesh, parse_polygon_mesh, read_polygon_mesh, PrimalMesh, Rect};
pub use voronoi::{generate_voronoi_mesh, LLOYD_ITERATIONS};

use crate::{Error, Point, Result};
use geometry::{chebyshev_center, cross, diameter, dist, dot, is_convex, signed_area, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    PrimalInterior,
    PrimalBoundary,
    Dual,
}

impl EdgeKind {
    pub fn is_primal(self) -> bool {
        !matches!(self, EdgeKind::Dual)
    }
}

/// An oriented edge of the sub-triangulation.
///
/// `normal = (tangent.y, -tangent.x)` points out of `plus`. Interior edges run
/// from the lower to the higher vertex index, so both neighbours agree on the
/// orientation; boundary edges run counter-clockwise around their triangle so
/// the normal is the outward domain normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub start: usize,
    pub end: usize,
    pub kind: EdgeKind,
    pub length: f64,
    pub tangent: Point,
    pub normal: Point,
    pub plus: usize,
    pub minus: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }

    /// Sign of the edge normal relative to the outward normal of triangle `t`.
    pub fn sign_for(&self, t: usize) -> f64 {
        if self.plus == t {
            1.0
        } else {
            -1.0
        }
    }
}

/// A fan triangle `(x, a, b)`: interior point `x` and consecutive polygon vertices `a`, `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub polygon: usize,
    /// `[primal (a,b), dual (x,a), dual (x,b)]`
    pub edges: [usize; 3],
    pub area: f64,
    pub centroid: Point,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredMesh {
    primal: PrimalMesh,
    /// Primal vertices followed by one interior point per polygon.
    points: Vec<Point>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    h: f64,
}

impl StaggeredMesh {
    pub fn primal(&self) -> &PrimalMesh {
        &self.primal
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn interior_point(&self, polygon: usize) -> Point {
        self.points[self.primal.vertices().len() + polygon]
    }

    /// Mesh size: largest triangle diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].vertices.map(|v| self.points[v])
    }

    pub fn edge_points(&self, e: usize) -> [Point; 2] {
        [self.points[self.edges[e].start], self.points[self.edges[e].end]]
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edge_points(e);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    pub fn num_primal_edges(&self) -> usize {
        self.count(EdgeKind::PrimalInterior) + self.count(EdgeKind::PrimalBoundary)
    }

    pub fn num_dual_edges(&self) -> usize {
        self.count(EdgeKind::Dual)
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| t.area).sum()
    }
}

/// Interior point of a polygon: its centroid when convex, otherwise the
/// Chebyshev centre of its kernel.
pub fn interior_point(pts: &[Point], tol: f64) -> Result<Point> {
    if is_convex(pts, tol * tol) {
        return Ok(geometry::centroid(pts));
    }
    let (c, r) = chebyshev_center(pts);
    if r <= tol {
        return Err(Error::Degenerate("polygon kernel is empty".into()));
    }
    Ok(c)
}

/// Builds the staggered sub-triangulation of a primal mesh.
pub fn triangulate(primal: &PrimalMesh) -> Result<StaggeredMesh> {
    let nv = primal.vertices().len();
    let tol = primal.tolerance();
    let mut points = primal.vertices().to_vec();
    for (p, _) in primal.polygons().iter().enumerate() {
        let pts = primal.polygon_points(p);
        let x = interior_point(&pts, tol).map_err(|_| Error::NotStarShaped { polygon: p })?;
        points.push(x);
    }

    let segments = primal.segments();
    let mut triangles = Vec::new();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    // (lo, hi, kind, adjacent triangles in encounter order)
    let mut raw_edges: Vec<(usize, usize, EdgeKind, Vec<usize>)> = Vec::new();

    for (p, poly) in primal.polygons().iter().enumerate() {
        let x = nv + p;
        let m = poly.len();
        for i in 0..m {
            let (a, b) = (poly[i], poly[(i + 1) % m]);
            let t = triangles.len();
            let mut edges = [0usize; 3];
            for (slot, (u, v)) in [(a, b), (x, a), (x, b)].into_iter().enumerate() {
                let key = (u.min(v), u.max(v));
                let idx = *edge_index.entry(key).or_insert_with(|| {
                    let kind = if slot > 0 {
                        EdgeKind::Dual
                    } else if segments[&key].len() == 2 {
                        EdgeKind::PrimalInterior
                    } else {
                        EdgeKind::PrimalBoundary
                    };
                    raw_edges.push((key.0, key.1, kind, Vec::new()));
                    raw_edges.len() - 1
                });
                raw_edges[idx].3.push(t);
                edges[slot] = idx;
            }
            let tp = [points[x], points[a], points[b]];
            let area = signed_area(&tp);
            if area <= 0.0 {
                return Err(Error::Degenerate(format!(
                    "fan triangle {t} of polygon {p} has non-positive area {area:e}"
                )));
            }
            triangles.push(Triangle {
                vertices: [x, a, b],
                polygon: p,
                edges,
                area,
                centroid: [(tp[0][0] + tp[1][0] + tp[2][0]) / 3.0, (tp[0][1] + tp[1][1] + tp[2][1]) / 3.0],
                diameter: diameter(&tp),
            });
        }
    }

    let mut edges = Vec::with_capacity(raw_edges.len());
    for (lo, hi, kind, adj) in raw_edges {
        let expected = if kind == EdgeKind::PrimalBoundary { 1 } else { 2 };
        if adj.len() != expected {
            return Err(Error::Tiling(format!("edge ({lo},{hi}) has {} adjacent triangles", adj.len())));
        }
        let outward = |t: usize, s: usize, e: usize| {
            let d = sub(points[e], points[s]);
            let c: Point = triangles[t].centroid;
            // the triangle lies to the left of s->e iff s->e is counter-clockwise for it
            cross(d, sub(c, points[s])) > 0.0
        };
        let (start, end, plus, minus) = if kind == EdgeKind::PrimalBoundary {
            let t = adj[0];
            if outward(t, lo, hi) {
                (lo, hi, t, None)
            } else {
                (hi, lo, t, None)
            }
        } else if outward(adj[0], lo, hi) {
            (lo, hi, adj[0], Some(adj[1]))
        } else {
            (lo, hi, adj[1], Some(adj[0]))
        };
        let d = sub(points[end], points[start]);
        let length = d[0].hypot(d[1]);
        let tangent = [d[0] / length, d[1] / length];
        edges.push(Edge { start, end, kind, length, tangent, normal: [tangent[1], -tangent[0]], plus, minus });
    }
    if let Some(e) = edges.iter().position(|e| e.kind == EdgeKind::Dual && e.minus.is_some_and(|m| triangles[m].polygon != triangles[e.plus].polygon)) {
        return Err(Error::Tiling(format!("dual edge {e} crosses polygons")));
    }

    let h = triangles.iter().map(|t| t.diameter).fold(0.0, f64::max);
    Ok(StaggeredMesh { primal: primal.clone(), points, triangles, edges, h })
}

/// Shape-regularity measures of a staggered mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    /// min over polygons of (shortest side / polygon diameter)
    pub rho_e: f64,
    /// min over polygons of (kernel inscribed radius / polygon diameter)
    pub rho_b: f64,
    pub h: f64,
    /// smallest interior angle of any sub-triangle, radians
    pub min_angle: f64,
}

pub fn regularity_report(mesh: &StaggeredMesh) -> RegularityReport {
    let primal = mesh.primal();
    let mut rho_e = f64::INFINITY;
    let mut rho_b = f64::INFINITY;
    for p in 0..primal.polygons().len() {
        let pts = primal.polygon_points(p);
        let diam = diameter(&pts);
        let min_side = (0..pts.len()).map(|i| dist(pts[i], pts[(i + 1) % pts.len()])).fold(f64::INFINITY, f64::min);
        rho_e = rho_e.min(min_side / diam);
        rho_b = rho_b.min(chebyshev_center(&pts).1 / diam);
    }
    let mut min_angle = f64::INFINITY;
    for t in 0..mesh.triangles().len() {
        let p = mesh.triangle_points(t);
        for i in 0..3 {
            let (a, b, c) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
            let (u, v) = (sub(b, a), sub(c, a));
            let ang = (dot(u, v) / (dot(u, u).sqrt() * dot(v, v).sqrt())).clamp(-1.0, 1.0).acos();
            min_angle = min_angle.min(ang);
        }
    }
    RegularityReport { rho_e, rho_b, h: mesh.h(), min_angle }
}
