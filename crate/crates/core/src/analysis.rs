//! Error norms, discrete norms, divergence diagnostics, convergence rates and
//! streamfunctions.

use std::collections::VecDeque;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::cases::{CaseConfig, Problem};
use crate::mesh::{EdgeKind, StaggeredMesh};
use crate::par::{self, Execution};
use crate::quadrature::{segment_rule, triangle_rule};
use crate::solver::{picard_solve, SolveResult};
use crate::spaces::{build_dof_maps_with, error_degree, Comps, DofMaps, FEField, Space};
use crate::{Error, Point, Result};

fn sum_ordered(v: Vec<f64>) -> f64 {
    v.into_iter().sum()
}

/// Broken `L²` error `‖f − f_h‖` with degree `2k + 10` quadrature.
pub fn error_l2(field: &FEField, exact: &(dyn Fn(Point) -> Comps + Sync)) -> f64 {
    let mesh = field.mesh();
    let rule = triangle_rule(error_degree(field.maps().degree()));
    let nc = field.space.components();
    let parts = par::map_indexed(Execution::default(), mesh.triangles().len(), |t| {
        let (pts, wts) = rule.on_triangle(&mesh.triangle_points(t));
        let vals = field.eval(t, &pts);
        pts.iter()
            .zip(&wts)
            .zip(&vals)
            .map(|((p, w), v)| {
                let e = exact(*p);
                w * (0..nc).map(|c| (e[c] - v[c]).powi(2)).sum::<f64>()
            })
            .sum::<f64>()
    });
    sum_ordered(parts).sqrt()
}

pub fn error_l2_tensor(field: &FEField, exact: &(dyn Fn(Point) -> [[f64; 2]; 2] + Sync)) -> f64 {
    error_l2(field, &|p| {
        let m = exact(p);
        [m[0][0], m[0][1], m[1][0], m[1][1]]
    })
}

pub fn error_l2_vector(field: &FEField, exact: &(dyn Fn(Point) -> [f64; 2] + Sync)) -> f64 {
    error_l2(field, &|p| {
        let v = exact(p);
        [v[0], v[1], 0.0, 0.0]
    })
}

pub fn error_l2_scalar(field: &FEField, exact: &(dyn Fn(Point) -> f64 + Sync)) -> f64 {
    error_l2(field, &|p| [exact(p), 0.0, 0.0, 0.0])
}

/// `∫_Ω f` by degree `2k + 10` quadrature on the sub-triangulation.
pub fn integrate(mesh: &StaggeredMesh, k: usize, f: &(dyn Fn(Point) -> f64 + Sync)) -> f64 {
    let rule = triangle_rule(error_degree(k));
    let parts = par::map_indexed(Execution::default(), mesh.triangles().len(), |t| {
        let (pts, wts) = rule.on_triangle(&mesh.triangle_points(t));
        pts.iter().zip(&wts).map(|(p, w)| w * f(*p)).sum::<f64>()
    });
    sum_ordered(parts)
}

/// Pressure error against the exact pressure shifted to zero mean.
pub fn pressure_error(p_h: &FEField, exact: &(dyn Fn(Point) -> f64 + Sync)) -> f64 {
    let mesh = p_h.mesh();
    let shift = integrate(mesh, p_h.maps().degree(), exact) / mesh.area();
    error_l2_scalar(p_h, &|p| exact(p) - shift)
}

/// Values of a `V_h` field on both sides of edge `e` at points.
fn sides(v: &FEField, e: usize, pts: &[Point]) -> (Vec<Comps>, Option<Vec<Comps>>) {
    let edge = &v.mesh().edges()[e];
    (v.eval(edge.plus, pts), edge.minus.map(|t| v.eval(t, pts)))
}

/// Discrete energy norm `‖v‖_h` of a `V_h` field.
///
/// `‖∇v‖² + Σ_{F_pr} h_e⁻¹‖[v]‖² + Σ_{F_dl} h_e⁻¹‖[v·t]‖²`, traces on boundary edges.
pub fn norm_h(v: &FEField) -> f64 {
    assert_eq!(v.space, Space::V);
    let mesh = v.mesh();
    let k = v.maps().degree();
    let trule = triangle_rule(2 * k);
    let erule = segment_rule(2 * k + 1);
    let vol = par::map_indexed(Execution::default(), mesh.triangles().len(), |t| {
        let (pts, wts) = trule.on_triangle(&mesh.triangle_points(t));
        v.eval_with_gradients(t, &pts)
            .iter()
            .zip(&wts)
            .map(|((_, g), w)| w * (0..2).map(|c| g[c][0].powi(2) + g[c][1].powi(2)).sum::<f64>())
            .sum::<f64>()
    });
    let edges = par::map_indexed(Execution::default(), mesh.edges().len(), |e| {
        let edge = &mesh.edges()[e];
        let [a, b] = mesh.edge_points(e);
        let (pts, wts) = erule.on_segment(a, b);
        let (vp, vm) = sides(v, e, &pts);
        let t = edge.tangent;
        let mut s = 0.0;
        for (q, w) in wts.iter().enumerate() {
            let jump = match &vm {
                Some(vm) => [vp[q][0] - vm[q][0], vp[q][1] - vm[q][1]],
                None => [vp[q][0], vp[q][1]],
            };
            s += w * if edge.kind.is_primal() { jump[0].powi(2) + jump[1].powi(2) } else { (jump[0] * t[0] + jump[1] * t[1]).powi(2) };
        }
        s / edge.length
    });
    (sum_ordered(vol) + sum_ordered(edges)).sqrt()
}

fn norm_04h_impl(mesh: &StaggeredMesh, deg: usize, eval: &(dyn Fn(usize, &[Point]) -> Vec<[f64; 2]> + Sync)) -> f64 {
    let trule = triangle_rule(deg);
    let erule = segment_rule(deg);
    let vol = par::map_indexed(Execution::default(), mesh.triangles().len(), |t| {
        let (pts, wts) = trule.on_triangle(&mesh.triangle_points(t));
        eval(t, &pts).iter().zip(&wts).map(|(v, w)| w * (v[0] * v[0] + v[1] * v[1]).powi(2)).sum::<f64>()
    });
    let edges = par::map_indexed(Execution::default(), mesh.edges().len(), |e| {
        let edge = &mesh.edges()[e];
        let [a, b] = mesh.edge_points(e);
        let (pts, wts) = erule.on_segment(a, b);
        let vp = eval(edge.plus, &pts);
        let vm = edge.minus.map(|t| eval(t, &pts));
        let mut s = 0.0;
        for (q, w) in wts.iter().enumerate() {
            let avg = match &vm {
                Some(vm) => [0.5 * (vp[q][0] + vm[q][0]), 0.5 * (vp[q][1] + vm[q][1])],
                None => vp[q],
            };
            s += w * (avg[0] * avg[0] + avg[1] * avg[1]).powi(2);
        }
        s / edge.length
    });
    (sum_ordered(vol) + sum_ordered(edges)).powf(0.25)
}

fn l4_degree(k: usize) -> usize {
    (4 * k + 2).max(error_degree(k))
}

/// Discrete `L⁴` norm `(‖v‖⁴_{L⁴} + Σ_{F_h} h_e⁻¹‖{v}‖⁴_{L⁴(e)})^{1/4}`.
pub fn norm_04h(v: &FEField) -> f64 {
    assert_eq!(v.space, Space::V);
    norm_04h_impl(v.mesh(), l4_degree(v.maps().degree()), &|t, pts| {
        v.eval(t, pts).into_iter().map(|c| [c[0], c[1]]).collect()
    })
}

/// `‖u − v‖_{0,4,h}` for a smooth `u` and a `V_h` field `v`.
pub fn norm_04h_error(v: &FEField, exact: &(dyn Fn(Point) -> [f64; 2] + Sync)) -> f64 {
    norm_04h_impl(v.mesh(), l4_degree(v.maps().degree()), &|t, pts| {
        v.eval(t, pts)
            .into_iter()
            .zip(pts)
            .map(|(c, p)| {
                let e = exact(*p);
                [e[0] - c[0], e[1] - c[1]]
            })
            .collect()
    })
}

/// Discrete `H¹` seminorm `‖∇q‖² + Σ_{F_dl} h_e⁻¹‖[q]‖²` of a `Q_h` field.
pub fn norm_1h(q: &FEField) -> f64 {
    assert_eq!(q.space, Space::Q);
    let mesh = q.mesh();
    let k = q.maps().degree();
    let trule = triangle_rule(2 * k);
    let erule = segment_rule(2 * k + 1);
    let vol = par::map_indexed(Execution::default(), mesh.triangles().len(), |t| {
        let (pts, wts) = trule.on_triangle(&mesh.triangle_points(t));
        q.eval_with_gradients(t, &pts).iter().zip(&wts).map(|((_, g), w)| w * (g[0][0].powi(2) + g[0][1].powi(2))).sum::<f64>()
    });
    let edges = par::map_indexed(Execution::default(), mesh.edges().len(), |e| {
        let edge = &mesh.edges()[e];
        if edge.kind != EdgeKind::Dual {
            return 0.0;
        }
        let [a, b] = mesh.edge_points(e);
        let (pts, wts) = erule.on_segment(a, b);
        let (qp, qm) = (q.eval(edge.plus, &pts), q.eval(edge.minus.expect("dual edges are interior"), &pts));
        wts.iter().enumerate().map(|(i, w)| w * (qp[i][0] - qm[i][0]).powi(2)).sum::<f64>() / edge.length
    });
    (sum_ordered(vol) + sum_ordered(edges)).sqrt()
}

/// Divergence diagnostics of a velocity field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceReport {
    /// max over triangles of `|∇·u|` at quadrature points
    pub max_div: f64,
    /// max over interior primal edges of `|[u·n]|` at quadrature points
    pub max_normal_jump: f64,
}

/// Samples `∇·u` and `[u·n]` at degree-`2k` quadrature points.
///
/// Boundary primal edges are excluded from the jump maximum: there the trace
/// `u·n` equals the prescribed boundary flux, which need not vanish.
pub fn divergence_report(u: &FEField) -> DivergenceReport {
    assert_eq!(u.space, Space::V);
    let mesh = u.mesh();
    let k = u.maps().degree();
    let trule = triangle_rule(2 * k);
    let erule = segment_rule(2 * k);
    let divs = par::map_indexed(Execution::default(), mesh.triangles().len(), |t| {
        let (pts, _) = trule.on_triangle(&mesh.triangle_points(t));
        u.eval_with_gradients(t, &pts).iter().map(|(_, g)| (g[0][0] + g[1][1]).abs()).fold(0.0, f64::max)
    });
    let jumps = par::map_indexed(Execution::default(), mesh.edges().len(), |e| {
        let edge = &mesh.edges()[e];
        if edge.kind != EdgeKind::PrimalInterior {
            return 0.0;
        }
        let [a, b] = mesh.edge_points(e);
        let (pts, _) = erule.on_segment(a, b);
        let (vp, vm) = sides(u, e, &pts);
        let vm = vm.expect("interior edge");
        let n = edge.normal;
        (0..pts.len()).map(|q| ((vp[q][0] - vm[q][0]) * n[0] + (vp[q][1] - vm[q][1]) * n[1]).abs()).fold(0.0, f64::max)
    });
    DivergenceReport {
        max_div: divs.into_iter().fold(0.0, f64::max),
        max_normal_jump: jumps.into_iter().fold(0.0, f64::max),
    }
}

/// Spanning tree used to integrate the streamfunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TreeKind {
    #[default]
    BreadthFirst,
    DepthFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Streamfunction {
    /// one value per point of the sub-triangulation (primal vertices, then interior points)
    pub values: Vec<f64>,
    pub anchor: usize,
    /// max over non-tree edges of `|ψ(b) − ψ(a) − ∫ u·n|`
    pub closure_residual: f64,
}

impl Streamfunction {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Point index and value of the most negative (or, if none, most positive) extremum.
    pub fn extremum(&self) -> (usize, f64) {
        let (imin, vmin) = self.values.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &v)| if v < a.1 { (i, v) } else { a });
        let (imax, vmax) = self.values.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
        if -vmin >= vmax {
            (imin, vmin)
        } else {
            (imax, vmax)
        }
    }
}

/// Edge fluxes `∫_e u·n ds` along each edge's own normal (averaged over both sides).
pub fn edge_fluxes(u: &FEField) -> Vec<f64> {
    let mesh = u.mesh();
    let rule = segment_rule(u.maps().degree() + 1);
    par::map_indexed(Execution::default(), mesh.edges().len(), |e| {
        let edge = &mesh.edges()[e];
        let [a, b] = mesh.edge_points(e);
        let (pts, wts) = rule.on_segment(a, b);
        let (vp, vm) = sides(u, e, &pts);
        let n = edge.normal;
        wts.iter()
            .enumerate()
            .map(|(q, w)| {
                let v = match &vm {
                    Some(vm) => [0.5 * (vp[q][0] + vm[q][0]), 0.5 * (vp[q][1] + vm[q][1])],
                    None => [vp[q][0], vp[q][1]],
                };
                w * (v[0] * n[0] + v[1] * n[1])
            })
            .sum()
    })
}

/// Relative tolerance on the divergence diagnostics required by [`streamfunction`].
pub const STREAMFUNCTION_DIV_TOL: f64 = 1e-8;

/// Streamfunction with `ψ(end) − ψ(start) = ∫_e u·n` (`n` the edge normal,
/// right of the edge direction), so uniform flow `(1, 0)` gives `ψ = y + c`.
///
/// Anchored at `ψ = 0` on the lowest-index boundary vertex.
pub fn streamfunction(u: &FEField, tree: TreeKind) -> Result<Streamfunction> {
    let mesh = u.mesh();
    let div = divergence_report(u);
    let scale = norm_h(u);
    let h = mesh.h();
    if div.max_div * h > STREAMFUNCTION_DIV_TOL * scale || div.max_normal_jump > STREAMFUNCTION_DIV_TOL * scale {
        return Err(Error::Precondition(format!(
            "velocity is not divergence-free (max |div u|·h = {:.3e}, max |[u·n]| = {:.3e}, ‖u‖_h = {:.3e})",
            div.max_div * h,
            div.max_normal_jump,
            scale
        )));
    }
    let flux = edge_fluxes(u);
    let np = mesh.points().len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); np];
    for (e, edge) in mesh.edges().iter().enumerate() {
        adj[edge.start].push((edge.end, e));
        adj[edge.end].push((edge.start, e));
    }
    let anchor = mesh
        .edges()
        .iter()
        .filter(|e| e.is_boundary())
        .flat_map(|e| [e.start, e.end])
        .min()
        .ok_or_else(|| Error::Degenerate("mesh has no boundary".into()))?;
    let mut psi = vec![f64::NAN; np];
    let mut in_tree = vec![false; mesh.edges().len()];
    psi[anchor] = 0.0;
    let mut frontier = VecDeque::from([anchor]);
    while let Some(a) = match tree {
        TreeKind::BreadthFirst => frontier.pop_front(),
        TreeKind::DepthFirst => frontier.pop_back(),
    } {
        for &(b, e) in &adj[a] {
            if psi[b].is_nan() {
                let edge = &mesh.edges()[e];
                let sign = if edge.start == a { 1.0 } else { -1.0 };
                psi[b] = psi[a] + sign * flux[e];
                in_tree[e] = true;
                frontier.push_back(b);
            }
        }
    }
    if psi.iter().any(|v| v.is_nan()) {
        return Err(Error::Degenerate("edge graph is disconnected".into()));
    }
    let closure_residual = mesh
        .edges()
        .iter()
        .enumerate()
        .filter(|(e, _)| !in_tree[*e])
        .map(|(e, edge)| (psi[edge.end] - psi[edge.start] - flux[e]).abs())
        .fold(0.0, f64::max);
    Ok(Streamfunction { values: psi, anchor, closure_residual })
}

/// Triangle containing `p` (first match), if any.
pub fn locate(mesh: &StaggeredMesh, p: Point) -> Option<usize> {
    mesh.triangles().iter().position(|tri| {
        let [a, b, c] = tri.vertices.map(|v| mesh.points()[v]);
        let d = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (p[1] - a[1]) * (c[0] - a[0])) / d;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])) / d;
        let tol = -1e-12;
        l1 >= tol && l2 >= tol && 1.0 - l1 - l2 >= tol
    })
}

/// Streamfunction value at an arbitrary point of triangle `t`, integrating
/// `u·n` from the triangle's first vertex.
pub fn streamfunction_at(u: &FEField, psi: &Streamfunction, t: usize, p: Point) -> f64 {
    let mesh = u.mesh();
    let ia = mesh.triangles()[t].vertices[0];
    let a = mesh.points()[ia];
    let d = [p[0] - a[0], p[1] - a[1]];
    let len = d[0].hypot(d[1]);
    if len == 0.0 {
        return psi.values[ia];
    }
    let n = [d[1] / len, -d[0] / len];
    let (pts, wts) = segment_rule(u.maps().degree() + 1).on_segment(a, p);
    let vals = u.eval(t, &pts);
    psi.values[ia] + vals.iter().zip(&wts).map(|(v, w)| w * (v[0] * n[0] + v[1] * n[1])).sum::<f64>()
}

/// Location and value of the streamfunction extremum.
///
/// Starts at the extremal mesh point and runs Newton on `u_h(x) = 0`, since
/// `∇ψ = (−u_y, u_x)`. Falls back to the mesh point if Newton leaves the
/// domain or wanders more than `2h` away.
pub fn vortex_center(u: &FEField, psi: &Streamfunction) -> (Point, f64) {
    let mesh = u.mesh();
    let (i0, v0) = psi.extremum();
    let start = mesh.points()[i0];
    let mut x = start;
    for _ in 0..30 {
        let Some(t) = locate(mesh, x) else {
            return (start, v0);
        };
        let (val, g) = u.eval_with_gradients(t, &[x])[0];
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = [-(g[1][1] * val[0] - g[0][1] * val[1]) / det, -(-g[1][0] * val[0] + g[0][0] * val[1]) / det];
        x = [x[0] + dx[0], x[1] + dx[1]];
        if (x[0] - start[0]).hypot(x[1] - start[1]) > 2.0 * mesh.h() {
            return (start, v0);
        }
        if dx[0].hypot(dx[1]) < 1e-13 {
            break;
        }
    }
    match locate(mesh, x) {
        Some(t) => (x, streamfunction_at(u, psi, t, x)),
        None => (start, v0),
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub case: String,
    pub mesh: String,
    pub k: usize,
    pub nu: f64,
    /// max triangle diameter
    pub h: f64,
    /// `sqrt(|Ω| / #polygons)`
    pub h_eff: f64,
    pub dofs_h: usize,
    pub dofs_v: usize,
    pub dofs_q: usize,
    pub iterations: usize,
    pub converged: bool,
    pub err_g: f64,
    pub err_u: f64,
    pub err_p: f64,
    /// `‖J_h u − u_h‖_h`
    pub err_u_h: f64,
    /// `‖u − J_h u‖_{0,4,h}`
    pub err_u_04h: f64,
    pub norm_u_l2: f64,
    pub norm_u_h: f64,
    pub max_div: f64,
    pub max_normal_jump: f64,
}

impl ErrorReport {
    pub const COLUMNS: [&'static str; 21] = [
        "case", "mesh", "k", "nu", "h", "h_eff", "dofs_h", "dofs_v", "dofs_q", "iterations", "converged", "err_g", "err_u",
        "err_p", "err_u_h", "err_u_04h", "norm_u_l2", "norm_u_h", "max_div", "max_normal_jump", "dofs_total",
    ];

    pub fn dofs(&self) -> usize {
        self.dofs_h + self.dofs_v + self.dofs_q
    }
}

/// Error and diagnostic report of a solve against `problem`.
///
/// For problems without an exact solution the error columns are zero and
/// `norm_u_l2` is still meaningful.
pub fn error_report(maps: &Arc<DofMaps>, problem: &Problem, result: &SolveResult, label: (&str, &str)) -> ErrorReport {
    let mesh = maps.mesh();
    let div = divergence_report(&result.u);
    let zero_u = |_: Point| [0.0, 0.0];
    let (err_g, err_u, err_p, err_u_h, err_u_04h) = if problem.has_exact() {
        let u = |p: Point| problem.u(p);
        let ju = maps.interpolate_v(u);
        (
            error_l2_tensor(&result.g, &|p| problem.g_tensor(p)),
            error_l2_vector(&result.u, &u),
            pressure_error(&result.p, &|p| problem.p(p)),
            norm_h(&ju.sub(&result.u)),
            norm_04h_error(&ju, &u),
        )
    } else {
        (0.0, 0.0, 0.0, 0.0, 0.0)
    };
    ErrorReport {
        case: label.0.to_string(),
        mesh: label.1.to_string(),
        k: maps.degree(),
        nu: problem.nu(),
        h: mesh.h(),
        h_eff: (mesh.area() / mesh.primal().polygons().len() as f64).sqrt(),
        dofs_h: maps.total(Space::H),
        dofs_v: maps.total(Space::V),
        dofs_q: maps.total(Space::Q),
        iterations: result.iterations,
        converged: result.converged,
        err_g,
        err_u,
        err_p,
        err_u_h,
        err_u_04h,
        norm_u_l2: error_l2_vector(&result.u, &zero_u),
        norm_u_h: norm_h(&result.u),
        max_div: div.max_div,
        max_normal_jump: div.max_normal_jump,
    }
}

/// Everything produced by one configured run.
#[derive(Debug, Clone)]
pub struct CaseRun {
    pub maps: Arc<DofMaps>,
    pub result: SolveResult,
    pub report: ErrorReport,
    pub mesh_time: Duration,
    pub analysis_time: Duration,
}

/// Builds the mesh and spaces, solves, and evaluates errors for one configuration.
pub fn run_case(config: &CaseConfig) -> Result<CaseRun> {
    config.validate()?;
    let t = Instant::now();
    let mesh = config.mesh.build()?;
    let maps = build_dof_maps_with(Arc::new(mesh), config.k, config.solver.execution)?;
    let mesh_time = t.elapsed();
    let problem = config.problem();
    let result = picard_solve(&maps, &problem, &config.solver)?;
    let t = Instant::now();
    let mesh_label = config.mesh.to_string();
    let report = error_report(&maps, &problem, &result, (config.case.name(), &mesh_label));
    Ok(CaseRun { maps, result, report, mesh_time, analysis_time: t.elapsed() })
}

/// Convergence slopes of one quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub name: String,
    pub rows: Vec<(f64, f64)>,
    /// slope between consecutive rows
    pub pairwise: Vec<f64>,
    /// least-squares slope of `log e` against `log h` over the finest three rows
    pub least_squares: Option<f64>,
}

impl Rates {
    pub fn new(name: &str, rows: Vec<(f64, f64)>) -> Self {
        let pairwise = rows.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).collect();
        let tail = &rows[rows.len().saturating_sub(3)..];
        let least_squares = (tail.len() >= 2).then(|| least_squares_slope(tail));
        Rates { name: name.to_string(), rows, pairwise, least_squares }
    }
}

/// Slope of the least-squares line through `(log h, log e)`.
pub fn least_squares_slope(rows: &[(f64, f64)]) -> f64 {
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub reports: Vec<ErrorReport>,
    pub quantities: Vec<Rates>,
}

impl RateTable {
    /// Rates of `err_u`, `err_g`, `err_p`, `err_u_h` and `err_u_04h`, against `h_eff`
    /// when `effective_h` is set and the mesh diameter otherwise.
    pub fn from_reports(reports: Vec<ErrorReport>, effective_h: bool) -> Self {
        let h = |r: &ErrorReport| if effective_h { r.h_eff } else { r.h };
        let pick: [(&str, fn(&ErrorReport) -> f64); 5] = [
            ("err_u", |r| r.err_u),
            ("err_g", |r| r.err_g),
            ("err_p", |r| r.err_p),
            ("err_u_h", |r| r.err_u_h),
            ("err_u_04h", |r| r.err_u_04h),
        ];
        let quantities = pick.iter().map(|(name, f)| Rates::new(name, reports.iter().map(|r| (h(r), f(r))).collect())).collect();
        RateTable { reports, quantities }
    }

    pub fn get(&self, name: &str) -> Option<&Rates> {
        self.quantities.iter().find(|q| q.name == name)
    }
}

/// Solves every configuration in order and tabulates rates.
///
/// On a failed solve the error is returned together with the rows computed so far.
pub fn convergence_study(configs: &[CaseConfig], effective_h: bool) -> std::result::Result<RateTable, (Error, RateTable)> {
    let mut reports = Vec::with_capacity(configs.len());
    for c in configs {
        match run_case(c) {
            Ok(run) => reports.push(run.report),
            Err(e) => return Err((e, RateTable::from_reports(reports, effective_h))),
        }
    }
    Ok(RateTable::from_reports(reports, effective_h))
}
