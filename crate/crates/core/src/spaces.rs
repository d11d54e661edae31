//! Staggered finite element spaces and their degrees of freedom.
//!
//! Three piecewise-`P_k` spaces live on the sub-triangulation:
//!
//! | space | values | continuity | edge DOFs | interior DOFs |
//! |-------|--------|-----------|-----------|---------------|
//! | `H`   | 2×2 tensor | `Hn` across primal edges, `t·Hn` across dual edges | `⟨Hn, p⟩` (primal), `⟨t·Hn, p⟩` (dual) | `(H, p)` against `[P_{k-1}]^{2×2}` |
//! | `V`   | vector | `v·n` across dual edges | `⟨v·n, p⟩` (dual) | `(v, p)` against `[P_{k-1}]^2` |
//! | `Q`   | scalar | `q` across primal edges | `⟨q, p⟩` (primal) | `(q, p)` against `P_{k-1}` |
//!
//! Continuity is realized by sharing one global index per edge moment. Edge
//! moments are taken against Legendre polynomials in the edge's own
//! orientation and scaled by `1/h_e`; interior moments against the first
//! `dim P_{k-1}` orthonormal basis members scaled by `1/sqrt|τ|`. With that
//! scaling every DOF of a constant field equals the constant (or zero).
//!
//! On each triangle the DOF functionals applied to the orthonormal polynomial
//! basis give a square matrix `L_τ`; the columns of `C_τ = L_τ^{-1}` are the
//! local dual basis, i.e. the restriction of the global basis functions.

use std::sync::Arc;

use faer::prelude::*;
use faer::Mat;

use crate::mesh::{EdgeKind, StaggeredMesh};
use crate::par::{self, Execution};
use crate::quadrature::{dim_p, legendre, segment_rule, triangle_rule, QuadRule, TriangleBasis};
use crate::{Error, Point, Result};

/// Local DOF matrices with a 2-norm condition number above this are rejected.
pub const MAX_LOCAL_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    /// Tensor-valued velocity gradient space `H_h`.
    H,
    /// Vector-valued velocity space `V_h`.
    V,
    /// Scalar pressure space `Q_h`.
    Q,
}

impl Space {
    /// Number of scalar components (tensors stored row-major).
    pub const fn components(self) -> usize {
        match self {
            Space::H => 4,
            Space::V => 2,
            Space::Q => 1,
        }
    }

    fn carries_edge(self, kind: EdgeKind) -> bool {
        match self {
            Space::H => true,
            Space::V => kind == EdgeKind::Dual,
            Space::Q => kind.is_primal(),
        }
    }

    /// Number of moment "directions" on an edge of the given kind.
    fn edge_directions(self, kind: EdgeKind) -> usize {
        match (self, kind.is_primal()) {
            (Space::H, true) => 2,
            _ => 1,
        }
    }
}

/// Component values of a (scalar, vector or row-major tensor) field at a point.
pub type Comps = [f64; 4];

/// Per-triangle data for one space.
#[derive(Debug, Clone)]
pub struct LocalSpace {
    /// global index of each local DOF
    pub l2g: Vec<usize>,
    /// `c[a * n + l]`: coefficient of polynomial basis function `a` in local dual basis function `l`
    pub c: Vec<f64>,
    /// 2-norm condition number of the local DOF matrix
    pub cond: f64,
}

impl LocalSpace {
    pub fn len(&self) -> usize {
        self.l2g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l2g.is_empty()
    }

    /// Polynomial coefficients of the field with local DOF values `dofs`.
    pub fn to_poly(&self, dofs: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|a| (0..n).map(|l| self.c[a * n + l] * dofs[l]).sum()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SpaceMaps {
    pub space: Space,
    pub total: usize,
    /// first global index of each edge's DOF block, if the edge carries one
    pub edge_offset: Vec<Option<usize>>,
    /// first global index of each triangle's interior block
    pub interior_offset: Vec<usize>,
    pub local: Vec<LocalSpace>,
}

/// Degree-of-freedom layout of `H_h`, `V_h` and `Q_h` on a staggered mesh.
#[derive(Debug, Clone)]
pub struct DofMaps {
    mesh: Arc<StaggeredMesh>,
    k: usize,
    bases: Vec<TriangleBasis>,
    h: SpaceMaps,
    v: SpaceMaps,
    q: SpaceMaps,
}

/// Closed-form dimension of the global spaces.
pub fn expected_dims(mesh: &StaggeredMesh, k: usize) -> (usize, usize, usize) {
    let (fp, fd, nt) = (mesh.num_primal_edges(), mesh.num_dual_edges(), mesh.triangles().len());
    (
        2 * (k + 1) * fp + (k + 1) * fd + 2 * k * (k + 1) * nt,
        (k + 1) * fd + k * (k + 1) * nt,
        (k + 1) * fp + k * (k + 1) / 2 * nt,
    )
}

impl DofMaps {
    pub fn mesh(&self) -> &StaggeredMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<StaggeredMesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn basis(&self, t: usize) -> &TriangleBasis {
        &self.bases[t]
    }

    pub fn space(&self, s: Space) -> &SpaceMaps {
        match s {
            Space::H => &self.h,
            Space::V => &self.v,
            Space::Q => &self.q,
        }
    }

    pub fn local(&self, s: Space, t: usize) -> &LocalSpace {
        &self.space(s).local[t]
    }

    pub fn total(&self, s: Space) -> usize {
        self.space(s).total
    }

    /// Number of polynomial basis functions per component (`dim P_k`).
    pub fn poly_len(&self) -> usize {
        dim_p(self.k)
    }

    /// Number of interior moments per component (`dim P_{k-1}`).
    pub fn interior_len(&self) -> usize {
        dim_p(self.k - 1)
    }

    /// Largest local DOF-matrix condition number of a space.
    pub fn max_condition(&self, s: Space) -> f64 {
        self.space(s).local.iter().map(|l| l.cond).fold(0.0, f64::max)
    }

    /// Applies the edge DOF functionals of `s` on edge `e` to a field.
    pub fn edge_functionals(&self, s: Space, e: usize, rule: &QuadRule, f: impl Fn(Point) -> Comps) -> Vec<f64> {
        edge_functionals(&self.mesh, self.k, s, e, rule, f)
    }

    /// Applies the interior DOF functionals of `s` on triangle `t` to a field.
    pub fn interior_functionals(&self, s: Space, t: usize, rule: &QuadRule, f: impl Fn(Point) -> Comps) -> Vec<f64> {
        interior_functionals(&self.mesh, &self.bases[t], self.k, s, t, rule, f)
    }

    /// All local DOF functionals of `s` on triangle `t`, in local order.
    pub fn local_functionals(
        &self,
        s: Space,
        t: usize,
        edge_rule: &QuadRule,
        tri_rule: &QuadRule,
        f: impl Fn(Point) -> Comps + Copy,
    ) -> Vec<f64> {
        local_functionals(&self.mesh, &self.bases[t], self.k, s, t, edge_rule, tri_rule, f)
    }

    /// Interpolates a function into `s` (`Π_h`, `J_h` or `I_h`).
    ///
    /// `f` returns the components (row-major for tensors). Integrals use the
    /// degree `2k + 10` error rules; each shared edge block is computed once.
    pub fn interpolate(self: &Arc<Self>, s: Space, f: impl Fn(Point) -> Comps + Sync + Send) -> FEField {
        self.interpolate_with(s, f, Execution::default())
    }

    pub fn interpolate_with(self: &Arc<Self>, s: Space, f: impl Fn(Point) -> Comps + Sync + Send, exec: Execution) -> FEField {
        let deg = error_degree(self.k);
        let (erule, trule) = (segment_rule(deg), triangle_rule(deg));
        let maps = self.space(s);
        let mut coeffs = vec![0.0; maps.total];
        let edge_vals = par::map_indexed(exec, self.mesh.edges().len(), |e| {
            maps.edge_offset[e].map(|_| self.edge_functionals(s, e, &erule, &f))
        });
        for (e, vals) in edge_vals.into_iter().enumerate() {
            if let (Some(off), Some(vals)) = (maps.edge_offset[e], vals) {
                coeffs[off..off + vals.len()].copy_from_slice(&vals);
            }
        }
        let int_vals = par::map_indexed(exec, self.mesh.triangles().len(), |t| self.interior_functionals(s, t, &trule, &f));
        for (t, vals) in int_vals.into_iter().enumerate() {
            let off = maps.interior_offset[t];
            coeffs[off..off + vals.len()].copy_from_slice(&vals);
        }
        FEField { space: s, coeffs, maps: self.clone() }
    }

    pub fn interpolate_h(self: &Arc<Self>, f: impl Fn(Point) -> [[f64; 2]; 2] + Sync + Send) -> FEField {
        self.interpolate(Space::H, move |p| {
            let m = f(p);
            [m[0][0], m[0][1], m[1][0], m[1][1]]
        })
    }

    pub fn interpolate_v(self: &Arc<Self>, f: impl Fn(Point) -> [f64; 2] + Sync + Send) -> FEField {
        self.interpolate(Space::V, move |p| {
            let v = f(p);
            [v[0], v[1], 0.0, 0.0]
        })
    }

    pub fn interpolate_q(self: &Arc<Self>, f: impl Fn(Point) -> f64 + Sync + Send) -> FEField {
        self.interpolate(Space::Q, move |p| [f(p), 0.0, 0.0, 0.0])
    }

    pub fn zero_field(self: &Arc<Self>, s: Space) -> FEField {
        FEField { space: s, coeffs: vec![0.0; self.total(s)], maps: self.clone() }
    }

    pub fn field(self: &Arc<Self>, s: Space, coeffs: Vec<f64>) -> FEField {
        assert_eq!(coeffs.len(), self.total(s), "coefficient vector length");
        FEField { space: s, coeffs, maps: self.clone() }
    }
}

/// Quadrature degree used for integrals of non-polynomial data.
pub fn error_degree(k: usize) -> usize {
    2 * k + 10
}

fn edge_directions(mesh: &StaggeredMesh, s: Space, e: usize) -> Vec<Comps> {
    let edge = &mesh.edges()[e];
    let (n, t) = (edge.normal, edge.tangent);
    match (s, edge.kind.is_primal()) {
        // (Hn)_c = Σ_d H_cd n_d
        (Space::H, true) => vec![[n[0], n[1], 0.0, 0.0], [0.0, 0.0, n[0], n[1]]],
        // t·Hn = Σ_cd t_c H_cd n_d
        (Space::H, false) => vec![[t[0] * n[0], t[0] * n[1], t[1] * n[0], t[1] * n[1]]],
        (Space::V, _) => vec![[n[0], n[1], 0.0, 0.0]],
        (Space::Q, _) => vec![[1.0, 0.0, 0.0, 0.0]],
    }
}

fn edge_functionals(
    mesh: &StaggeredMesh,
    k: usize,
    s: Space,
    e: usize,
    rule: &QuadRule,
    f: impl Fn(Point) -> Comps,
) -> Vec<f64> {
    let edge = &mesh.edges()[e];
    let [a, b] = mesh.edge_points(e);
    let (pts, wts) = rule.on_segment(a, b);
    let dirs = edge_directions(mesh, s, e);
    let mut out = vec![0.0; dirs.len() * (k + 1)];
    for ((p, w), r) in pts.iter().zip(&wts).zip(&rule.points) {
        let val = f(*p);
        let leg = legendre(k, r[0]);
        for (d, dir) in dirs.iter().enumerate() {
            let proj: f64 = (0..s.components()).map(|c| dir[c] * val[c]).sum();
            for (j, l) in leg.iter().enumerate() {
                out[d * (k + 1) + j] += w * proj * l / edge.length;
            }
        }
    }
    out
}

fn interior_functionals(
    mesh: &StaggeredMesh,
    basis: &TriangleBasis,
    k: usize,
    s: Space,
    t: usize,
    rule: &QuadRule,
    f: impl Fn(Point) -> Comps,
) -> Vec<f64> {
    let tri = &mesh.triangles()[t];
    let (pts, wts) = rule.on_triangle(&mesh.triangle_points(t));
    let mi = dim_p(k - 1);
    let nc = s.components();
    let scale = 1.0 / tri.area.sqrt();
    let mut out = vec![0.0; nc * mi];
    for (p, w) in pts.iter().zip(&wts) {
        let val = f(*p);
        let phi = basis.values(*p);
        for c in 0..nc {
            for j in 0..mi {
                out[c * mi + j] += w * val[c] * phi[j] * scale;
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn local_functionals(
    mesh: &StaggeredMesh,
    basis: &TriangleBasis,
    k: usize,
    s: Space,
    t: usize,
    edge_rule: &QuadRule,
    tri_rule: &QuadRule,
    f: impl Fn(Point) -> Comps + Copy,
) -> Vec<f64> {
    let mut out = Vec::new();
    for &e in &local_edges(mesh, s, t) {
        out.extend(edge_functionals(mesh, k, s, e, edge_rule, f));
    }
    out.extend(interior_functionals(mesh, basis, k, s, t, tri_rule, f));
    out
}

/// Edges of triangle `t` carrying DOFs of `s`, in local order.
pub fn local_edges(mesh: &StaggeredMesh, s: Space, t: usize) -> Vec<usize> {
    mesh.triangles()[t].edges.iter().copied().filter(|&e| s.carries_edge(mesh.edges()[e].kind)).collect()
}

fn build_space(mesh: &StaggeredMesh, bases: &[TriangleBasis], k: usize, s: Space, exec: Execution) -> Result<SpaceMaps> {
    let mut next = 0;
    let edge_offset: Vec<Option<usize>> = mesh
        .edges()
        .iter()
        .map(|e| {
            s.carries_edge(e.kind).then(|| {
                let off = next;
                next += s.edge_directions(e.kind) * (k + 1);
                off
            })
        })
        .collect();
    let per_interior = s.components() * dim_p(k - 1);
    let interior_offset: Vec<usize> = (0..mesh.triangles().len())
        .map(|_| {
            let off = next;
            next += per_interior;
            off
        })
        .collect();
    let total = next;

    let m = dim_p(k);
    let nloc = s.components() * m;
    let erule = segment_rule(2 * k);
    let trule = triangle_rule(2 * k);
    let locals = par::map_indexed(exec, mesh.triangles().len(), |t| -> Result<LocalSpace> {
        let mut l2g = Vec::with_capacity(nloc);
        for e in local_edges(mesh, s, t) {
            let off = edge_offset[e].expect("edge carries DOFs");
            l2g.extend(off..off + s.edge_directions(mesh.edges()[e].kind) * (k + 1));
        }
        l2g.extend(interior_offset[t]..interior_offset[t] + per_interior);
        debug_assert_eq!(l2g.len(), nloc);

        // columns: polynomial basis e_c φ_i, index a = c * m + i
        let basis = &bases[t];
        let mut lmat = Mat::<f64>::zeros(nloc, nloc);
        for a in 0..nloc {
            let (c, i) = (a / m, a % m);
            let col = local_functionals(mesh, basis, k, s, t, &erule, &trule, |p| {
                let mut v = [0.0; 4];
                v[c] = basis.values(p)[i];
                v
            });
            for (l, val) in col.into_iter().enumerate() {
                lmat[(l, a)] = val;
            }
        }
        let sv = lmat.singular_values().map_err(|_| Error::SingularLocal { triangle: t, cond: f64::INFINITY })?;
        let cond = sv[0] / sv[nloc - 1];
        if !cond.is_finite() || cond > MAX_LOCAL_CONDITION {
            return Err(Error::SingularLocal { triangle: t, cond });
        }
        let inv = lmat.partial_piv_lu().solve(Mat::<f64>::identity(nloc, nloc));
        let mut c = vec![0.0; nloc * nloc];
        for a in 0..nloc {
            for l in 0..nloc {
                c[a * nloc + l] = inv[(a, l)];
            }
        }
        Ok(LocalSpace { l2g, c, cond })
    });
    let local = locals.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SpaceMaps { space: s, total, edge_offset, interior_offset, local })
}

/// Builds the DOF layout and local dual bases for polynomial degree `k >= 1`.
pub fn build_dof_maps(mesh: Arc<StaggeredMesh>, k: usize) -> Result<Arc<DofMaps>> {
    build_dof_maps_with(mesh, k, Execution::default())
}

pub fn build_dof_maps_with(mesh: Arc<StaggeredMesh>, k: usize, exec: Execution) -> Result<Arc<DofMaps>> {
    if k == 0 {
        return Err(Error::InvalidArgument("polynomial degree k must be at least 1".into()));
    }
    let bases = par::map_indexed(exec, mesh.triangles().len(), |t| TriangleBasis::new(&mesh.triangle_points(t), k));
    let h = build_space(&mesh, &bases, k, Space::H, exec)?;
    let v = build_space(&mesh, &bases, k, Space::V, exec)?;
    let q = build_space(&mesh, &bases, k, Space::Q, exec)?;
    Ok(Arc::new(DofMaps { mesh, k, bases, h, v, q }))
}

/// A finite element function: space tag plus global coefficients.
#[derive(Debug, Clone)]
pub struct FEField {
    pub space: Space,
    pub coeffs: Vec<f64>,
    maps: Arc<DofMaps>,
}

impl FEField {
    pub fn maps(&self) -> &Arc<DofMaps> {
        &self.maps
    }

    pub fn mesh(&self) -> &StaggeredMesh {
        self.maps.mesh()
    }

    /// Local DOF values on triangle `t`.
    pub fn local_dofs(&self, t: usize) -> Vec<f64> {
        self.maps.local(self.space, t).l2g.iter().map(|&g| self.coeffs[g]).collect()
    }

    /// Orthonormal-basis coefficients on triangle `t`, component-major.
    pub fn local_poly(&self, t: usize) -> Vec<f64> {
        self.maps.local(self.space, t).to_poly(&self.local_dofs(t))
    }

    /// Component values at points of triangle `t`.
    pub fn eval(&self, t: usize, points: &[Point]) -> Vec<Comps> {
        let poly = self.local_poly(t);
        let basis = self.maps.basis(t);
        points.iter().map(|&p| eval_poly(&poly, self.space.components(), &basis.values(p))).collect()
    }

    /// Component values and gradients at points of triangle `t`.
    pub fn eval_with_gradients(&self, t: usize, points: &[Point]) -> Vec<(Comps, [Point; 4])> {
        let poly = self.local_poly(t);
        let basis = self.maps.basis(t);
        let m = basis.len();
        points
            .iter()
            .map(|&p| {
                let (phi, grad) = basis.values_and_gradients(p);
                let mut v = [0.0; 4];
                let mut g = [[0.0; 2]; 4];
                for c in 0..self.space.components() {
                    for i in 0..m {
                        let a = poly[c * m + i];
                        v[c] += a * phi[i];
                        g[c][0] += a * grad[i][0];
                        g[c][1] += a * grad[i][1];
                    }
                }
                (v, g)
            })
            .collect()
    }

    /// `∫_Ω q` for a scalar field.
    pub fn mean_value(&self) -> f64 {
        assert_eq!(self.space, Space::Q, "mean value of a non-scalar field");
        // ∫_τ φ_i = sqrt|τ| δ_i0 for the orthonormal basis
        (0..self.mesh().triangles().len())
            .map(|t| self.local_poly(t)[0] * self.mesh().triangles()[t].area.sqrt())
            .sum()
    }

    /// `self - other`, same space and layout.
    pub fn sub(&self, other: &FEField) -> FEField {
        assert_eq!(self.space, other.space);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        FEField { space: self.space, coeffs, maps: self.maps.clone() }
    }

    pub fn scaled(&self, alpha: f64) -> FEField {
        FEField { space: self.space, coeffs: self.coeffs.iter().map(|a| alpha * a).collect(), maps: self.maps.clone() }
    }
}

/// Evaluates component-major polynomial coefficients given basis values.
pub fn eval_poly(poly: &[f64], ncomp: usize, phi: &[f64]) -> Comps {
    let m = phi.len();
    let mut v = [0.0; 4];
    for (c, vc) in v.iter_mut().enumerate().take(ncomp) {
        *vc = (0..m).map(|i| poly[c * m + i] * phi[i]).sum();
    }
    v
}

/// Dense solve helper for small systems (used by tests and diagnostics).
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i][j]);
    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    let x = m.partial_piv_lu().solve(&rhs);
    (0..n).map(|i| x[(i, 0)]).collect()
}
