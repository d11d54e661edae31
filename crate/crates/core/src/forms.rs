//! Sparse assembly of the discrete forms and right-hand sides.
//!
//! Every local matrix is first computed in the triangle's orthonormal
//! polynomial basis (`K`) and then mapped to the local dual basis,
//! `A_τ = C_rowᵀ K C_col`. Local blocks are produced independently (in
//! parallel when enabled) and scattered in a fixed triangle/edge order, so the
//! assembled matrices do not depend on the execution mode.
//!
//! Block conventions (rows = test space, columns = trial space):
//! - `M`   (H×H): `ν⁻¹(G, H)`
//! - `A_B` (V×H): `B_h(H, v)`; the `B_h^*` block is `-A_Bᵀ`
//! - `A_b` (Q×V): `b_h(v, q)`; the `b_h^*` block is `-A_bᵀ`
//! - `A_N` (V×V): `N_h(w; ψ, v)` for a frozen transport field `w`

use std::sync::Arc;

use crate::mesh::StaggeredMesh;
use crate::par::{self, Execution};
use crate::quadrature::{segment_rule, triangle_rule, QuadRule};
use crate::spaces::{error_degree, DofMaps, FEField, LocalSpace, Space};
use crate::sparse::CsrMatrix;
use crate::{Error, Point, Result};

type Triplets = Vec<(usize, usize, f64)>;

/// A vector-valued function of position.
pub type VectorFn<'a> = dyn Fn(Point) -> [f64; 2] + Sync + 'a;

/// Right-hand sides of the three equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs {
    /// `Σ_{F_pr^b} ⟨g, Hn⟩`
    pub r_g: Vec<f64>,
    /// `(f, v) + Σ_{F_pr^b} ⟨|g·n| − g·n, g·v⟩`
    pub r_u: Vec<f64>,
    /// `−Σ_{F_pr^b} ⟨g·n, q⟩`
    pub r_p: Vec<f64>,
}

/// All blocks of one linearized system.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub nu: f64,
    pub mass: CsrMatrix,
    pub a_b: CsrMatrix,
    pub a_div: CsrMatrix,
    /// convective block; `None` for Stokes
    pub a_n: Option<CsrMatrix>,
    /// `c_i = ∫_Ω q_i`
    pub mean: Vec<f64>,
    /// coefficients of the constant pressure `1`
    pub constant: Vec<f64>,
    pub rhs: Rhs,
}

/// Assembles forms on a fixed DOF layout.
#[derive(Debug, Clone)]
pub struct Assembler {
    maps: Arc<DofMaps>,
    exec: Execution,
    extra_degree: usize,
}

/// Maps a basis-space kernel `k` (`nr × nc`, row-major) to local DOFs.
fn congruence(row: &LocalSpace, k: &[f64], col: &LocalSpace) -> Vec<f64> {
    let (nr, nc) = (row.len(), col.len());
    // tmp = K C_col
    let mut tmp = vec![0.0; nr * nc];
    for a in 0..nr {
        for b in 0..nc {
            let kab = k[a * nc + b];
            if kab == 0.0 {
                continue;
            }
            for m in 0..nc {
                tmp[a * nc + m] += kab * col.c[b * nc + m];
            }
        }
    }
    let mut out = vec![0.0; nr * nc];
    for a in 0..nr {
        for l in 0..nr {
            let cal = row.c[a * nr + l];
            if cal == 0.0 {
                continue;
            }
            for m in 0..nc {
                out[l * nc + m] += cal * tmp[a * nc + m];
            }
        }
    }
    out
}

fn scatter(row: &LocalSpace, block: &[f64], col: &LocalSpace, out: &mut Triplets) {
    let nc = col.len();
    for (l, &gr) in row.l2g.iter().enumerate() {
        for (m, &gc) in col.l2g.iter().enumerate() {
            out.push((gr, gc, block[l * nc + m]));
        }
    }
}

fn scatter_vec(row: &LocalSpace, kvec: &[f64], out: &mut [f64]) {
    let n = row.len();
    for (l, &g) in row.l2g.iter().enumerate() {
        out[g] += (0..n).map(|a| row.c[a * n + l] * kvec[a]).sum::<f64>();
    }
}

/// Outward unit normal of triangle `t` on edge `e`, and the edge tangent.
fn outward(mesh: &StaggeredMesh, t: usize, e: usize) -> (Point, Point) {
    let edge = &mesh.edges()[e];
    let s = edge.sign_for(t);
    ([s * edge.normal[0], s * edge.normal[1]], edge.tangent)
}

/// Splits segment `a -> b` at the sign changes of `f`, a polynomial of degree `k` along it.
///
/// Roots are bracketed on a uniform sample and refined by bisection. A double
/// root inside one sample cell is missed, which is harmless: `|f|` is smooth there.
fn sign_pieces(a: Point, b: Point, k: usize, f: &dyn Fn(Point) -> f64) -> Vec<(Point, Point)> {
    let at = |s: f64| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
    let samples = 8 * (k + 1);
    let mut cuts = vec![0.0];
    let mut prev = f(a);
    for i in 1..=samples {
        let s1 = i as f64 / samples as f64;
        let cur = f(at(s1));
        if prev * cur < 0.0 {
            let (mut lo, mut hi, flo) = ((i - 1) as f64 / samples as f64, s1, prev);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if f(at(mid)) * flo > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        if cur != 0.0 {
            prev = cur;
        }
    }
    cuts.push(1.0);
    cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| (at(w[0]), at(w[1]))).collect()
}

impl Assembler {
    pub fn new(maps: Arc<DofMaps>) -> Self {
        Assembler { maps, exec: Execution::default(), extra_degree: 0 }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Raises every assembly quadrature degree (exactness audits).
    pub fn with_extra_degree(mut self, extra: usize) -> Self {
        self.extra_degree = extra;
        self
    }

    pub fn maps(&self) -> &Arc<DofMaps> {
        &self.maps
    }

    fn mesh(&self) -> &StaggeredMesh {
        self.maps.mesh()
    }

    fn k(&self) -> usize {
        self.maps.degree()
    }

    /// Exact for the `P_k × P_k × P_{k-1}` volume integrands.
    fn triangle_rule(&self) -> QuadRule {
        let k = self.k();
        triangle_rule((2 * k).max(3 * k - 1) + 1 + self.extra_degree)
    }

    /// Exact for the `P_k × P_k × P_k` edge integrands.
    fn edge_rule(&self) -> QuadRule {
        segment_rule(3 * self.k() + 2 + self.extra_degree)
    }

    fn collect(&self, jobs: Vec<Triplets>, nr: usize, nc: usize) -> CsrMatrix {
        let all: Triplets = jobs.into_iter().flatten().collect();
        CsrMatrix::from_triplets(nr, nc, &all)
    }

    /// `M[i][j] = ν⁻¹ ∫ Ψ_i : Ψ_j`.
    pub fn mass(&self, nu: f64) -> Result<CsrMatrix> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidArgument(format!("viscosity must be positive, got {nu}")));
        }
        let n = self.maps.total(Space::H);
        let jobs = par::map_indexed(self.exec, self.mesh().triangles().len(), |t| {
            let loc = self.maps.local(Space::H, t);
            let nl = loc.len();
            // orthonormal basis: K = ν⁻¹ I
            let mut k = vec![0.0; nl * nl];
            for a in 0..nl {
                k[a * nl + a] = 1.0 / nu;
            }
            let mut out = Vec::with_capacity(nl * nl);
            scatter(loc, &congruence(loc, &k, loc), loc, &mut out);
            out
        });
        Ok(self.collect(jobs, n, n))
    }

    /// `A_B[v][H] = B_h(H, v)`.
    pub fn gradient(&self) -> CsrMatrix {
        let mesh = self.mesh();
        let m = self.maps.poly_len();
        let (trule, erule) = (self.triangle_rule(), self.edge_rule());
        let jobs = par::map_indexed(self.exec, mesh.triangles().len(), |t| {
            let basis = self.maps.basis(t);
            let (nr, nc) = (2 * m, 4 * m);
            let mut k = vec![0.0; nr * nc];
            let (pts, wts) = trule.on_triangle(&mesh.triangle_points(t));
            for (p, w) in pts.iter().zip(&wts) {
                let (phi, grad) = basis.values_and_gradients(*p);
                // (H, ∇v): H_rs ∂_s v_r
                for r in 0..2 {
                    for s in 0..2 {
                        for i in 0..m {
                            let gi = w * grad[i][s];
                            for j in 0..m {
                                k[(r * m + i) * nc + (2 * r + s) * m + j] += gi * phi[j];
                            }
                        }
                    }
                }
            }
            let tri = &mesh.triangles()[t];
            for (slot, &e) in tri.edges.iter().enumerate() {
                let (n, tan) = outward(mesh, t, e);
                let [a, b] = mesh.edge_points(e);
                let (pts, wts) = erule.on_segment(a, b);
                for (p, w) in pts.iter().zip(&wts) {
                    let phi = basis.values(*p);
                    for i in 0..m {
                        for j in 0..m {
                            let pp = w * phi[i] * phi[j];
                            for r in 0..2 {
                                for s in 0..2 {
                                    let col = (2 * r + s) * m + j;
                                    if slot == 0 {
                                        // −⟨H n, v⟩ on the primal edge
                                        k[(r * m + i) * nc + col] -= pp * n[s];
                                    } else {
                                        // −⟨t·H n, v·t⟩ on dual edges
                                        for q in 0..2 {
                                            k[(q * m + i) * nc + col] -= pp * tan[q] * tan[r] * n[s];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            let (lv, lh) = (self.maps.local(Space::V, t), self.maps.local(Space::H, t));
            let mut out = Vec::with_capacity(nr * nc);
            scatter(lv, &congruence(lv, &k, lh), lh, &mut out);
            out
        });
        self.collect(jobs, self.maps.total(Space::V), self.maps.total(Space::H))
    }

    /// `A_b[q][v] = b_h(v, q)`.
    pub fn divergence(&self) -> CsrMatrix {
        let mesh = self.mesh();
        let m = self.maps.poly_len();
        let (trule, erule) = (self.triangle_rule(), self.edge_rule());
        let jobs = par::map_indexed(self.exec, mesh.triangles().len(), |t| {
            let basis = self.maps.basis(t);
            let (nr, nc) = (m, 2 * m);
            let mut k = vec![0.0; nr * nc];
            let (pts, wts) = trule.on_triangle(&mesh.triangle_points(t));
            for (p, w) in pts.iter().zip(&wts) {
                let (phi, grad) = basis.values_and_gradients(*p);
                // −(v, ∇q)
                for i in 0..m {
                    for r in 0..2 {
                        let gi = w * grad[i][r];
                        for j in 0..m {
                            k[i * nc + r * m + j] -= gi * phi[j];
                        }
                    }
                }
            }
            let tri = &mesh.triangles()[t];
            for &e in &tri.edges[1..] {
                // ⟨v·n, q⟩ on dual edges
                let (n, _) = outward(mesh, t, e);
                let [a, b] = mesh.edge_points(e);
                let (pts, wts) = erule.on_segment(a, b);
                for (p, w) in pts.iter().zip(&wts) {
                    let phi = basis.values(*p);
                    for i in 0..m {
                        for r in 0..2 {
                            for j in 0..m {
                                k[i * nc + r * m + j] += w * n[r] * phi[i] * phi[j];
                            }
                        }
                    }
                }
            }
            let (lq, lv) = (self.maps.local(Space::Q, t), self.maps.local(Space::V, t));
            let mut out = Vec::with_capacity(nr * nc);
            scatter(lq, &congruence(lq, &k, lv), lv, &mut out);
            out
        });
        self.collect(jobs, self.maps.total(Space::Q), self.maps.total(Space::V))
    }

    /// `A_N[v][ψ] = N_h(w; ψ, v)`.
    pub fn convection(&self, w: &FEField) -> CsrMatrix {
        assert_eq!(w.space, Space::V, "transport field must be a V_h field");
        let mesh = self.mesh();
        let m = self.maps.poly_len();
        let nv = 2 * m;
        let (trule, erule) = (self.triangle_rule(), self.edge_rule());
        let wpoly: Vec<Vec<f64>> = par::map_indexed(self.exec, mesh.triangles().len(), |t| w.local_poly(t));
        let eval_w = |t: usize, phi: &[f64]| -> Point {
            let c = &wpoly[t];
            [(0..m).map(|i| c[i] * phi[i]).sum(), (0..m).map(|i| c[m + i] * phi[i]).sum()]
        };

        let vol = par::map_indexed(self.exec, mesh.triangles().len(), |t| {
            let basis = self.maps.basis(t);
            let mut k = vec![0.0; nv * nv];
            let (pts, wts) = trule.on_triangle(&mesh.triangle_points(t));
            for (p, wq) in pts.iter().zip(&wts) {
                let (phi, grad) = basis.values_and_gradients(*p);
                let wv = eval_w(t, &phi);
                // −(ψ ⊗ w, ∇v) = −Σ_r ψ_r (w·∇v_r)
                for i in 0..m {
                    let adv = wq * (wv[0] * grad[i][0] + wv[1] * grad[i][1]);
                    for j in 0..m {
                        let val = adv * phi[j];
                        k[i * nv + j] -= val;
                        k[(m + i) * nv + m + j] -= val;
                    }
                }
            }
            let lv = self.maps.local(Space::V, t);
            let mut out = Vec::with_capacity(nv * nv);
            scatter(lv, &congruence(lv, &k, lv), lv, &mut out);
            out
        });

        let edges = par::map_indexed(self.exec, mesh.edges().len(), |e| {
            let edge = &mesh.edges()[e];
            let [a, b] = mesh.edge_points(e);
            let n = edge.normal;
            let sides: Vec<(usize, f64)> = match edge.minus {
                Some(tm) => vec![(edge.plus, 1.0), (tm, -1.0)],
                None => vec![(edge.plus, 1.0)],
            };
            let ns = sides.len();
            let avg_wn = |p: Point| -> f64 {
                sides
                    .iter()
                    .map(|&(t, _)| {
                        let wv = eval_w(t, &self.maps.basis(t).values(p));
                        wv[0] * n[0] + wv[1] * n[1]
                    })
                    .sum::<f64>()
                    / ns as f64
            };
            // |{w·n}| is only piecewise polynomial: integrate between its sign changes
            let mut pts = Vec::new();
            let mut wts = Vec::new();
            for (pa, pb) in sign_pieces(a, b, self.k(), &avg_wn) {
                let (p, w) = erule.on_segment(pa, pb);
                pts.extend(p);
                wts.extend(w);
            }
            let mut kb = vec![vec![0.0; nv * nv]; ns * ns];
            for (p, wq) in pts.iter().zip(&wts) {
                let phis: Vec<Vec<f64>> = sides.iter().map(|&(t, _)| self.maps.basis(t).values(*p)).collect();
                let wn = sides
                    .iter()
                    .zip(&phis)
                    .map(|(&(t, _), phi)| {
                        let wv = eval_w(t, phi);
                        wv[0] * n[0] + wv[1] * n[1]
                    })
                    .sum::<f64>()
                    / ns as f64;
                for (ti, &(_, st)) in sides.iter().enumerate() {
                    for (si, &(_, ss)) in sides.iter().enumerate() {
                        // test side t, trial side s: [v] = σ_t v, {ψ} = ψ/2, [ψ] = σ_s ψ
                        let weight = if ns == 2 { st * (0.5 * wn + wn.abs() * ss) } else { wn.abs() };
                        let blk = &mut kb[ti * ns + si];
                        for i in 0..m {
                            let vi = wq * weight * phis[ti][i];
                            for j in 0..m {
                                let val = vi * phis[si][j];
                                blk[i * nv + j] += val;
                                blk[(m + i) * nv + m + j] += val;
                            }
                        }
                    }
                }
            }
            let mut out = Vec::with_capacity(ns * ns * nv * nv);
            for (ti, &(tt, _)) in sides.iter().enumerate() {
                for (si, &(ts, _)) in sides.iter().enumerate() {
                    let (lr, lc) = (self.maps.local(Space::V, tt), self.maps.local(Space::V, ts));
                    scatter(lr, &congruence(lr, &kb[ti * ns + si], lc), lc, &mut out);
                }
            }
            out
        });
        let n = self.maps.total(Space::V);
        let all: Triplets = vol.into_iter().chain(edges).flatten().collect();
        CsrMatrix::from_triplets(n, n, &all)
    }

    /// `c_i = ∫_Ω q_i` for the pressure basis.
    pub fn mean_constraint(&self) -> Vec<f64> {
        let mesh = self.mesh();
        let mut c = vec![0.0; self.maps.total(Space::Q)];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            // ∫_τ φ_a = sqrt|τ| δ_a0
            let lq = self.maps.local(Space::Q, t);
            let mut kv = vec![0.0; lq.len()];
            kv[0] = tri.area.sqrt();
            scatter_vec(lq, &kv, &mut c);
        }
        c
    }

    /// Right-hand sides for load `f` and boundary velocity `g`.
    ///
    /// `g` is sampled only at quadrature points interior to boundary edges.
    /// The boundary convective term belongs to `N_h` and is left out when
    /// `convective` is false.
    pub fn rhs(&self, f: &VectorFn, g: &VectorFn, convective: bool) -> Rhs {
        let mesh = self.mesh();
        let m = self.maps.poly_len();
        let deg = error_degree(self.k()) + self.extra_degree;
        let (trule, erule) = (triangle_rule(deg), segment_rule(deg));
        let parts = par::map_indexed(self.exec, mesh.triangles().len(), |t| {
            let basis = self.maps.basis(t);
            let mut kg = vec![0.0; 4 * m];
            let mut ku = vec![0.0; 2 * m];
            let mut kp = vec![0.0; m];
            let (pts, wts) = trule.on_triangle(&mesh.triangle_points(t));
            for (p, w) in pts.iter().zip(&wts) {
                let phi = basis.values(*p);
                let fv = f(*p);
                for i in 0..m {
                    ku[i] += w * fv[0] * phi[i];
                    ku[m + i] += w * fv[1] * phi[i];
                }
            }
            let e = mesh.triangles()[t].edges[0];
            if mesh.edges()[e].is_boundary() {
                let (n, _) = outward(mesh, t, e);
                let [a, b] = mesh.edge_points(e);
                let (pts, wts) = erule.on_segment(a, b);
                for (p, w) in pts.iter().zip(&wts) {
                    let phi = basis.values(*p);
                    let gv = g(*p);
                    let gn = gv[0] * n[0] + gv[1] * n[1];
                    let conv = if convective { gn.abs() - gn } else { 0.0 };
                    for i in 0..m {
                        let wp = w * phi[i];
                        for r in 0..2 {
                            for s in 0..2 {
                                kg[(2 * r + s) * m + i] += wp * gv[r] * n[s];
                            }
                            ku[r * m + i] += wp * conv * gv[r];
                        }
                        kp[i] -= wp * gn;
                    }
                }
            }
            (kg, ku, kp)
        });
        let mut rhs = Rhs {
            r_g: vec![0.0; self.maps.total(Space::H)],
            r_u: vec![0.0; self.maps.total(Space::V)],
            r_p: vec![0.0; self.maps.total(Space::Q)],
        };
        for (t, (kg, ku, kp)) in parts.into_iter().enumerate() {
            scatter_vec(self.maps.local(Space::H, t), &kg, &mut rhs.r_g);
            scatter_vec(self.maps.local(Space::V, t), &ku, &mut rhs.r_u);
            scatter_vec(self.maps.local(Space::Q, t), &kp, &mut rhs.r_p);
        }
        rhs
    }

    /// Assembles every block for the Navier-Stokes (`convective`) or Stokes model.
    ///
    /// `w` is the transport field of the convective block; `None` leaves the
    /// block out (Stokes, or the zero initial Picard iterate).
    pub fn system(&self, nu: f64, f: &VectorFn, g: &VectorFn, convective: bool, w: Option<&FEField>) -> Result<AssembledSystem> {
        Ok(AssembledSystem {
            nu,
            mass: self.mass(nu)?,
            a_b: self.gradient(),
            a_div: self.divergence(),
            a_n: w.map(|w| self.convection(w)),
            mean: self.mean_constraint(),
            constant: self.maps.interpolate_q(|_| 1.0).coeffs,
            rhs: self.rhs(f, g, convective),
        })
    }
}

pub fn assemble_mass(maps: &Arc<DofMaps>, nu: f64) -> Result<CsrMatrix> {
    Assembler::new(maps.clone()).mass(nu)
}

#[allow(non_snake_case)]
pub fn assemble_B(maps: &Arc<DofMaps>) -> CsrMatrix {
    Assembler::new(maps.clone()).gradient()
}

pub fn assemble_b(maps: &Arc<DofMaps>) -> CsrMatrix {
    Assembler::new(maps.clone()).divergence()
}

#[allow(non_snake_case)]
pub fn assemble_N(maps: &Arc<DofMaps>, w: &FEField) -> CsrMatrix {
    Assembler::new(maps.clone()).convection(w)
}

pub fn assemble_rhs(maps: &Arc<DofMaps>, f: &VectorFn, g: &VectorFn, convective: bool) -> Rhs {
    Assembler::new(maps.clone()).rhs(f, g, convective)
}

pub fn mean_constraint_vector(maps: &Arc<DofMaps>) -> Vec<f64> {
    Assembler::new(maps.clone()).mean_constraint()
}
