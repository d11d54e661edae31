//! Clipped, Lloyd-relaxed Voronoi meshes of a rectangle.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::geometry::{centroid, clip_halfplane, dist, dot, sub};
use super::primal::{PrimalMesh, Rect};
use crate::{Error, Point, Result};

/// Number of Lloyd sweeps applied to the random seeds.
pub const LLOYD_ITERATIONS: usize = 60;

/// Voronoi cell of `sites[i]` clipped to `domain`, counter-clockwise.
fn voronoi_cell(sites: &[Point], i: usize, domain: &Rect, order: &mut Vec<usize>) -> Vec<Point> {
    let s = sites[i];
    order.clear();
    order.extend((0..sites.len()).filter(|&j| j != i));
    order.sort_by(|&a, &b| dist(sites[a], s).total_cmp(&dist(sites[b], s)).then(a.cmp(&b)));
    let mut cell = domain.corners();
    for &j in order.iter() {
        let reach = cell.iter().map(|&p| dist(p, s)).fold(0.0, f64::max);
        let d = dist(sites[j], s);
        if d > 2.0 * reach {
            break;
        }
        // bisector half-plane {x : (t - s)·x <= (|t|^2 - |s|^2)/2}
        let t = sites[j];
        let n = sub(t, s);
        let c = 0.5 * (dot(t, t) - dot(s, s));
        cell = clip_halfplane(&cell, n, c);
    }
    cell
}

/// Clipped Voronoi diagram of `n_seeds` random points after Lloyd relaxation.
///
/// Cells are convex. Cell vertices computed from neighbouring cells are merged
/// within a small tolerance so the result is a conforming partition.
pub fn generate_voronoi_mesh(n_seeds: usize, rng_seed: u64, domain: Rect) -> Result<PrimalMesh> {
    if n_seeds == 0 {
        return Err(Error::InvalidArgument("n_seeds must be at least 1".into()));
    }
    let domain = Rect::new(domain.min, domain.max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut sites: Vec<Point> = (0..n_seeds)
        .map(|_| {
            [
                domain.min[0] + rng.gen::<f64>() * domain.width(),
                domain.min[1] + rng.gen::<f64>() * domain.height(),
            ]
        })
        .collect();

    let mut order = Vec::new();
    for _ in 0..LLOYD_ITERATIONS {
        let mut moved: f64 = 0.0;
        let next: Vec<Point> = (0..n_seeds)
            .map(|i| {
                let cell = voronoi_cell(&sites, i, &domain, &mut order);
                let c = if cell.len() >= 3 { centroid(&cell) } else { sites[i] };
                moved = moved.max(dist(c, sites[i]));
                c
            })
            .collect();
        sites = next;
        if moved < 1e-12 * domain.diagonal() {
            break;
        }
    }

    let cells: Vec<Vec<Point>> = (0..n_seeds).map(|i| voronoi_cell(&sites, i, &domain, &mut order)).collect();
    conform(cells, &domain)
}

fn conform(cells: Vec<Vec<Point>>, domain: &Rect) -> Result<PrimalMesh> {
    let tol = 1e-9 * domain.diagonal();
    let key = |p: Point| ((p[0] / tol).round() as i64, (p[1] / tol).round() as i64);
    let mut lookup: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut polygons = Vec::with_capacity(cells.len());
    for (ci, cell) in cells.iter().enumerate() {
        let mut poly: Vec<usize> = Vec::with_capacity(cell.len());
        for &p in cell {
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(&v) = lookup.get(&(kx + dx, ky + dy)) {
                        if dist(vertices[v], p) <= tol {
                            found = Some(v);
                            break 'search;
                        }
                    }
                }
            }
            let v = found.unwrap_or_else(|| {
                vertices.push(p);
                lookup.insert((kx, ky), vertices.len() - 1);
                vertices.len() - 1
            });
            if poly.last() != Some(&v) {
                poly.push(v);
            }
        }
        while poly.len() > 1 && poly.first() == poly.last() {
            poly.pop();
        }
        if poly.len() < 3 {
            return Err(Error::Degenerate(format!("Voronoi cell {ci} collapsed after vertex merging")));
        }
        polygons.push(poly);
    }
    PrimalMesh::new(vertices, polygons)
        .map_err(|e| Error::Degenerate(format!("degenerate seed configuration after relaxation: {e}")))
}
