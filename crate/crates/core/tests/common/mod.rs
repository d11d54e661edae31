//! Independent oracles shared by the integration tests.
//!
//! Everything here is written directly from the form definitions with its own
//! Gauss rules (Newton on Legendre polynomials, collapsed triangle rule). Only
//! field evaluation is borrowed from the library.
#![allow(dead_code)]

use std::sync::Arc;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdg_ns::cases::MeshSpec;
use sdg_ns::mesh::{EdgeKind, StaggeredMesh};
use sdg_ns::spaces::{build_dof_maps, Comps, DofMaps, FEField, Space};
use sdg_ns::Point;

pub type Grad = [Point; 4];

pub fn maps_for(spec: &str, k: usize) -> Arc<DofMaps> {
    let mesh: MeshSpec = spec.parse().unwrap();
    build_dof_maps(Arc::new(mesh.build().unwrap()), k).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(maps: &Arc<DofMaps>, s: Space, rng: &mut ChaCha8Rng) -> FEField {
    let n = maps.total(s);
    maps.field(s, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

pub fn segment_quad(a: Point, b: Point, n: usize) -> Vec<(Point, f64)> {
    let (x, w) = gauss_legendre(n);
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| {
            let s = 0.5 * (xi + 1.0);
            ([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])], 0.5 * len * wi)
        })
        .collect()
}

/// Collapsed (Duffy) product rule, exact to degree `2n - 2` on triangles.
pub fn triangle_quad(tri: [Point; 3], n: usize) -> Vec<(Point, f64)> {
    let (x, w) = gauss_legendre(n);
    let e1 = [tri[1][0] - tri[0][0], tri[1][1] - tri[0][1]];
    let e2 = [tri[2][0] - tri[0][0], tri[2][1] - tri[0][1]];
    let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
    let mut out = Vec::with_capacity(n * n);
    for (xi, wi) in x.iter().zip(&w) {
        for (xj, wj) in x.iter().zip(&w) {
            let u = 0.5 * (xi + 1.0);
            let v = 0.5 * (xj + 1.0) * (1.0 - u);
            let weight = 0.25 * wi * wj * (1.0 - u) * jac;
            out.push(([tri[0][0] + u * e1[0] + v * e2[0], tri[0][1] + u * e1[1] + v * e2[1]], weight));
        }
    }
    out
}

pub const NQ: usize = 12;

/// A piecewise-defined field: values and gradients on triangle `t`.
pub trait Piecewise: Sync {
    fn eval(&self, t: usize, pts: &[Point]) -> Vec<(Comps, Grad)>;
}

pub struct Discrete<'a>(pub &'a FEField);

impl Piecewise for Discrete<'_> {
    fn eval(&self, t: usize, pts: &[Point]) -> Vec<(Comps, Grad)> {
        self.0.eval_with_gradients(t, pts)
    }
}

/// A global smooth function; gradients by fourth-order central differences.
pub struct Smooth<F: Fn(Point) -> Comps + Sync>(pub F);

impl<F: Fn(Point) -> Comps + Sync> Piecewise for Smooth<F> {
    fn eval(&self, _t: usize, pts: &[Point]) -> Vec<(Comps, Grad)> {
        let h = 1e-3;
        pts.iter()
            .map(|&p| {
                let mut g = [[0.0; 2]; 4];
                for d in 0..2 {
                    let at = |s: f64| {
                        let mut q = p;
                        q[d] += s * h;
                        (self.0)(q)
                    };
                    let (m2, m1, p1, p2) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
                    for c in 0..4 {
                        g[c][d] = (m2[c] - 8.0 * m1[c] + 8.0 * p1[c] - p2[c]) / (12.0 * h);
                    }
                }
                ((self.0)(p), g)
            })
            .collect()
    }
}

pub fn tensor(m: [[f64; 2]; 2]) -> Comps {
    [m[0][0], m[0][1], m[1][0], m[1][1]]
}

pub fn vector(v: [f64; 2]) -> Comps {
    [v[0], v[1], 0.0, 0.0]
}

pub fn scalar(q: f64) -> Comps {
    [q, 0.0, 0.0, 0.0]
}

fn hn(h: &Comps, n: Point) -> Point {
    [h[0] * n[0] + h[1] * n[1], h[2] * n[0] + h[3] * n[1]]
}

fn d2(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Values on both sides of edge `e`: `(plus, minus or None)`.
fn sides(f: &dyn Piecewise, mesh: &StaggeredMesh, e: usize, pts: &[Point]) -> (Vec<Comps>, Option<Vec<Comps>>) {
    let edge = &mesh.edges()[e];
    let vals = |t| f.eval(t, pts).into_iter().map(|(v, _)| v).collect::<Vec<_>>();
    (vals(edge.plus), edge.minus.map(vals))
}

fn jump(p: &Comps, m: &Option<&Comps>) -> Comps {
    match m {
        Some(m) => [p[0] - m[0], p[1] - m[1], p[2] - m[2], p[3] - m[3]],
        None => *p,
    }
}

fn avg(p: &Comps, m: &Option<&Comps>) -> Comps {
    match m {
        Some(m) => [0.5 * (p[0] + m[0]), 0.5 * (p[1] + m[1]), 0.5 * (p[2] + m[2]), 0.5 * (p[3] + m[3])],
        None => *p,
    }
}

/// Sum of a volume term and an edge term over the mesh, plus the sum of absolute contributions.
struct Acc {
    value: f64,
    scale: f64,
}

impl Acc {
    fn add(&mut self, x: f64) {
        self.value += x;
        self.scale += x.abs();
    }
}

fn for_edges(mesh: &StaggeredMesh, acc: &mut Acc, mut f: impl FnMut(usize, &[(Point, f64)]) -> f64) {
    for e in 0..mesh.edges().len() {
        let [a, b] = mesh.edge_points(e);
        let q = segment_quad(a, b, NQ);
        acc.add(f(e, &q));
    }
}

fn for_triangles(mesh: &StaggeredMesh, acc: &mut Acc, mut f: impl FnMut(usize, &[(Point, f64)]) -> f64) {
    for t in 0..mesh.triangles().len() {
        let q = triangle_quad(mesh.triangle_points(t), NQ);
        acc.add(f(t, &q));
    }
}

fn points(q: &[(Point, f64)]) -> Vec<Point> {
    q.iter().map(|(p, _)| *p).collect()
}

/// `B_h(H, v) = Σ (H, ∇v)_τ − Σ_pr ⟨Hn, [v]⟩ − Σ_dl ⟨t·Hn, [v·t]⟩`. Returns `(value, scale)`.
pub fn form_b_grad(mesh: &StaggeredMesh, h: &dyn Piecewise, v: &dyn Piecewise) -> (f64, f64) {
    let mut acc = Acc { value: 0.0, scale: 0.0 };
    for_triangles(mesh, &mut acc, |t, q| {
        let pts = points(q);
        let (hv, vv) = (h.eval(t, &pts), v.eval(t, &pts));
        q.iter()
            .enumerate()
            .map(|(i, (_, w))| {
                let (hh, g) = (&hv[i].0, &vv[i].1);
                w * (hh[0] * g[0][0] + hh[1] * g[0][1] + hh[2] * g[1][0] + hh[3] * g[1][1])
            })
            .sum()
    });
    for_edges(mesh, &mut acc, |e, q| {
        let edge = &mesh.edges()[e];
        let pts = points(q);
        let (hp, hm) = sides(h, mesh, e, &pts);
        let (vp, vm) = sides(v, mesh, e, &pts);
        let (n, tan) = (edge.normal, edge.tangent);
        q.iter()
            .enumerate()
            .map(|(i, (_, w))| {
                let hh = avg(&hp[i], &hm.as_ref().map(|x| &x[i]));
                let jv = jump(&vp[i], &vm.as_ref().map(|x| &x[i]));
                let hnv = hn(&hh, n);
                if edge.kind.is_primal() {
                    -w * (hnv[0] * jv[0] + hnv[1] * jv[1])
                } else {
                    -w * d2(tan, hnv) * (jv[0] * tan[0] + jv[1] * tan[1])
                }
            })
            .sum()
    });
    (acc.value, acc.scale)
}

/// `B_h*(v, H) = Σ (v, div H)_τ − Σ_dl ⟨v·n, [n·Hn]⟩`.
pub fn form_b_grad_star(mesh: &StaggeredMesh, v: &dyn Piecewise, h: &dyn Piecewise) -> (f64, f64) {
    let mut acc = Acc { value: 0.0, scale: 0.0 };
    for_triangles(mesh, &mut acc, |t, q| {
        let pts = points(q);
        let (hv, vv) = (h.eval(t, &pts), v.eval(t, &pts));
        q.iter()
            .enumerate()
            .map(|(i, (_, w))| {
                let g = &hv[i].1;
                let div = [g[0][0] + g[1][1], g[2][0] + g[3][1]];
                w * (vv[i].0[0] * div[0] + vv[i].0[1] * div[1])
            })
            .sum()
    });
    for_edges(mesh, &mut acc, |e, q| {
        let edge = &mesh.edges()[e];
        if edge.kind != EdgeKind::Dual {
            return 0.0;
        }
        let pts = points(q);
        let (hp, hm) = sides(h, mesh, e, &pts);
        let (vp, vm) = sides(v, mesh, e, &pts);
        let n = edge.normal;
        q.iter()
            .enumerate()
            .map(|(i, (_, w))| {
                let nhn = |c: &Comps| d2(n, hn(c, n));
                let jh = match &hm {
                    Some(hm) => nhn(&hp[i]) - nhn(&hm[i]),
                    None => nhn(&hp[i]),
                };
                let vv = avg(&vp[i], &vm.as_ref().map(|x| &x[i]));
                -w * (vv[0] * n[0] + vv[1] * n[1]) * jh
            })
            .sum()
    });
    (acc.value, acc.scale)
}

/// `b_h(v, q) = −Σ (v, ∇q)_τ + Σ_dl ⟨v·n, [q]⟩`.
pub fn form_div(mesh: &StaggeredMesh, v: &dyn Piecewise, q: &dyn Piecewise) -> (f64, f64) {
    let mut acc = Acc { value: 0.0, scale: 0.0 };
    for_triangles(mesh, &mut acc, |t, qr| {
        let pts = points(qr);
        let (vv, qv) = (v.eval(t, &pts), q.eval(t, &pts));
        qr.iter()
            .enumerate()
            .map(|(i, (_, w))| -w * (vv[i].0[0] * qv[i].1[0][0] + vv[i].0[1] * qv[i].1[0][1]))
            .sum()
    });
    for_edges(mesh, &mut acc, |e, qr| {
        let edge = &mesh.edges()[e];
        if edge.kind != EdgeKind::Dual {
            return 0.0;
        }
        let pts = points(qr);
        let (vp, vm) = sides(v, mesh, e, &pts);
        let (qp, qm) = sides(q, mesh, e, &pts);
        let n = edge.normal;
        qr.iter()
            .enumerate()
            .map(|(i, (_, w))| {
                let vv = avg(&vp[i], &vm.as_ref().map(|x| &x[i]));
                let jq = jump(&qp[i], &qm.as_ref().map(|x| &x[i]));
                w * (vv[0] * n[0] + vv[1] * n[1]) * jq[0]
            })
            .sum()
    });
    (acc.value, acc.scale)
}

/// `b_h*(q, v) = −Σ (q, ∇·v)_τ + Σ_pr ⟨q, [v·n]⟩` (boundary jumps are traces).
pub fn form_div_star(mesh: &StaggeredMesh, q: &dyn Piecewise, v: &dyn Piecewise) -> (f64, f64) {
    let mut acc = Acc { value: 0.0, scale: 0.0 };
    for_triangles(mesh, &mut acc, |t, qr| {
        let pts = points(qr);
        let (vv, qv) = (v.eval(t, &pts), q.eval(t, &pts));
        qr.iter()
            .enumerate()
            .map(|(i, (_, w))| -w * qv[i].0[0] * (vv[i].1[0][0] + vv[i].1[1][1]))
            .sum()
    });
    for_edges(mesh, &mut acc, |e, qr| {
        let edge = &mesh.edges()[e];
        if !edge.kind.is_primal() {
            return 0.0;
        }
        let pts = points(qr);
        let (vp, vm) = sides(v, mesh, e, &pts);
        let (qp, qm) = sides(q, mesh, e, &pts);
        let n = edge.normal;
        qr.iter()
            .enumerate()
            .map(|(i, (_, w))| {
                let qq = avg(&qp[i], &qm.as_ref().map(|x| &x[i]));
                let jv = jump(&vp[i], &vm.as_ref().map(|x| &x[i]));
                w * qq[0] * (jv[0] * n[0] + jv[1] * n[1])
            })
            .sum()
    });
    (acc.value, acc.scale)
}

/// `N_h(w; ψ, v) = −Σ (ψ⊗w, ∇v)_τ + Σ_int ⟨{w·n}, {ψ}·[v]⟩ + Σ_all ⟨|{w·n}|, [ψ]·[v]⟩`.
pub fn form_convection(mesh: &StaggeredMesh, w: &dyn Piecewise, psi: &dyn Piecewise, v: &dyn Piecewise) -> (f64, f64) {
    let mut acc = Acc { value: 0.0, scale: 0.0 };
    for_triangles(mesh, &mut acc, |t, qr| {
        let pts = points(qr);
        let (wv, pv, vv) = (w.eval(t, &pts), psi.eval(t, &pts), v.eval(t, &pts));
        qr.iter()
            .enumerate()
            .map(|(i, (_, wq))| {
                let (ww, pp, g) = (&wv[i].0, &pv[i].0, &vv[i].1);
                // (ψ⊗w) : ∇v = Σ_rs ψ_r w_s ∂_s v_r
                let mut s = 0.0;
                for r in 0..2 {
                    for c in 0..2 {
                        s += pp[r] * ww[c] * g[r][c];
                    }
                }
                -wq * s
            })
            .sum()
    });
    for e in 0..mesh.edges().len() {
        let edge = &mesh.edges()[e];
        let [a, b] = mesh.edge_points(e);
        let wn_at = |p: Point| {
            let (wp, wm) = sides(w, mesh, e, &[p]);
            let ww = avg(&wp[0], &wm.as_ref().map(|x| &x[0]));
            ww[0] * edge.normal[0] + ww[1] * edge.normal[1]
        };
        let qr: Vec<(Point, f64)> = kinks(a, b, &wn_at).windows(2).flat_map(|c| segment_quad(c[0], c[1], NQ)).collect();
        let pts = points(&qr);
        let (wp, wm) = sides(w, mesh, e, &pts);
        let (pp, pm) = sides(psi, mesh, e, &pts);
        let (vp, vm) = sides(v, mesh, e, &pts);
        let n = edge.normal;
        let val: f64 = qr
            .iter()
            .enumerate()
            .map(|(i, (_, wq))| {
                let ww = avg(&wp[i], &wm.as_ref().map(|x| &x[i]));
                let wn = ww[0] * n[0] + ww[1] * n[1];
                let jv = jump(&vp[i], &vm.as_ref().map(|x| &x[i]));
                let jp = jump(&pp[i], &pm.as_ref().map(|x| &x[i]));
                let ap = avg(&pp[i], &pm.as_ref().map(|x| &x[i]));
                let mut s = wn.abs() * (jp[0] * jv[0] + jp[1] * jv[1]);
                if edge.minus.is_some() {
                    s += wn * (ap[0] * jv[0] + ap[1] * jv[1]);
                }
                wq * s
            })
            .sum();
        acc.add(val);
    }
    (acc.value, acc.scale)
}

/// Breakpoints of `a -> b` at the sign changes of `f` (64 brackets, bisection).
pub fn kinks(a: Point, b: Point, f: &dyn Fn(Point) -> f64) -> Vec<Point> {
    let at = |s: f64| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
    let mut out = vec![a];
    let n = 64;
    for i in 0..n {
        let (mut lo, mut hi) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
        let (flo, fhi) = (f(at(lo)), f(at(hi)));
        if flo * fhi < 0.0 {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if f(at(mid)) * flo > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(at(0.5 * (lo + hi)));
        }
    }
    out.push(b);
    out
}

/// `(F, v)` for a vector load `F`.
pub fn load(mesh: &StaggeredMesh, f: &dyn Fn(Point) -> [f64; 2], v: &dyn Piecewise) -> f64 {
    let mut acc = Acc { value: 0.0, scale: 0.0 };
    for_triangles(mesh, &mut acc, |t, qr| {
        let pts = points(qr);
        let vv = v.eval(t, &pts);
        qr.iter()
            .enumerate()
            .map(|(i, (p, w))| {
                let fv = f(*p);
                w * (fv[0] * vv[i].0[0] + fv[1] * vv[i].0[1])
            })
            .sum()
    });
    acc.value
}

/// `Σ_{boundary primal edges} ⟨weight(g·n), g·v⟩`.
pub fn boundary_term(mesh: &StaggeredMesh, g: &dyn Fn(Point) -> [f64; 2], weight: &dyn Fn(f64) -> f64, v: &dyn Piecewise) -> f64 {
    let mut acc = Acc { value: 0.0, scale: 0.0 };
    for_edges(mesh, &mut acc, |e, qr| {
        let edge = &mesh.edges()[e];
        if !edge.is_boundary() {
            return 0.0;
        }
        let pts = points(qr);
        let vv = v.eval(edge.plus, &pts);
        qr.iter()
            .enumerate()
            .map(|(i, (p, w))| {
                let gv = g(*p);
                let gn = gv[0] * edge.normal[0] + gv[1] * edge.normal[1];
                w * weight(gn) * (gv[0] * vv[i].0[0] + gv[1] * vv[i].0[1])
            })
            .sum()
    });
    acc.value
}

/// `(∫ |f − g|²)^{1/2}` over the mesh for piecewise fields with `nc` components.
pub fn l2_distance(mesh: &StaggeredMesh, f: &dyn Piecewise, g: &dyn Piecewise, nc: usize) -> f64 {
    let mut acc = Acc { value: 0.0, scale: 0.0 };
    for_triangles(mesh, &mut acc, |t, qr| {
        let pts = points(qr);
        let (fv, gv) = (f.eval(t, &pts), g.eval(t, &pts));
        qr.iter()
            .enumerate()
            .map(|(i, (_, w))| w * (0..nc).map(|c| (fv[i].0[c] - gv[i].0[c]).powi(2)).sum::<f64>())
            .sum()
    });
    acc.value.sqrt()
}

/// Numerical rank from singular values.
pub fn rank(rows: &[Vec<f64>], ncols: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = Mat::<f64>::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    let sv = m.singular_values().expect("svd");
    let tol = sv[0] * 1e-10 * (rows.len().max(ncols) as f64);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Scaled monomials on triangle `t`, exponents `a + b <= k`.
pub fn monomials(mesh: &StaggeredMesh, t: usize, k: usize, p: Point) -> Vec<f64> {
    let tri = &mesh.triangles()[t];
    let (c, d) = (tri.centroid, tri.diameter);
    let (x, y) = ((p[0] - c[0]) / d, (p[1] - c[1]) / d);
    let mut out = Vec::new();
    for deg in 0..=k {
        for a in (0..=deg).rev() {
            out.push(x.powi(a as i32) * y.powi((deg - a) as i32));
        }
    }
    out
}

/// Directions whose jump must vanish for `s` on edge kind `kind`.
fn continuity(s: Space, kind: EdgeKind, n: Point, t: Point) -> Vec<Comps> {
    match (s, kind.is_primal()) {
        (Space::H, true) => vec![[n[0], n[1], 0.0, 0.0], [0.0, 0.0, n[0], n[1]]],
        (Space::H, false) => vec![[t[0] * n[0], t[0] * n[1], t[1] * n[0], t[1] * n[1]]],
        (Space::V, false) => vec![[n[0], n[1], 0.0, 0.0]],
        (Space::Q, true) => vec![[1.0, 0.0, 0.0, 0.0]],
        _ => vec![],
    }
}

/// Dimension of the broken `P_k` space of `s` under the staggered continuity
/// constraints, by rank of the jump-constraint matrix.
pub fn constrained_dimension(mesh: &StaggeredMesh, s: Space, k: usize) -> usize {
    let nc = s.components();
    let m = (k + 1) * (k + 2) / 2;
    let per = nc * m;
    let ncols = mesh.triangles().len() * per;
    let (xs, _) = gauss_legendre(k + 1);
    let mut rows = Vec::new();
    for edge in mesh.edges() {
        let Some(tm) = edge.minus else { continue };
        let dirs = continuity(s, edge.kind, edge.normal, edge.tangent);
        let (a, b) = (mesh.points()[edge.start], mesh.points()[edge.end]);
        for dir in &dirs {
            for xi in &xs {
                let s01 = 0.5 * (xi + 1.0);
                let p = [a[0] + s01 * (b[0] - a[0]), a[1] + s01 * (b[1] - a[1])];
                let mut row = vec![0.0; ncols];
                for (t, sign) in [(edge.plus, 1.0), (tm, -1.0)] {
                    let mono = monomials(mesh, t, k, p);
                    for c in 0..nc {
                        for (i, mv) in mono.iter().enumerate() {
                            row[t * per + c * m + i] += sign * dir[c] * mv;
                        }
                    }
                }
                rows.push(row);
            }
        }
    }
    ncols - rank(&rows, ncols)
}

/// The local DOF matrix of `s` on triangle `t` applied to scaled monomials.
pub fn local_dof_matrix(maps: &DofMaps, s: Space, t: usize) -> Vec<Vec<f64>> {
    let k = maps.degree();
    let mesh = maps.mesh();
    let nc = s.components();
    let m = (k + 1) * (k + 2) / 2;
    let (erule, trule) = (sdg_ns::quadrature::segment_rule(2 * k + 2), sdg_ns::quadrature::triangle_rule(2 * k + 2));
    let cols: Vec<Vec<f64>> = (0..nc * m)
        .map(|a| {
            let (c, i) = (a / m, a % m);
            maps.local_functionals(s, t, &erule, &trule, |p| {
                let mut v = [0.0; 4];
                v[c] = monomials(mesh, t, k, p)[i];
                v
            })
        })
        .collect();
    let nl = cols[0].len();
    (0..nl).map(|l| cols.iter().map(|col| col[l]).collect()).collect()
}
