//! Saddle-point solves and the Picard iteration.
//!
//! The unknowns are ordered `[G | u | p | μ]` and the bordered system is
//!
//! ```text
//! [ M     -A_Bᵀ   0     0 ] [G]   [r_G]
//! [ A_B    A_N  -A_bᵀ   0 ] [u] = [r_u]
//! [ 0      A_b    0     c ] [p]   [r_p]
//! [ 0      0      cᵀ    0 ] [μ]   [ 0 ]
//! ```
//!
//! where the last row enforces `∫ p_h = 0`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::cases::Problem;
use crate::forms::{AssembledSystem, Assembler};
use crate::par::Execution;
use crate::spaces::{DofMaps, FEField, Space};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// stop when the max-abs change of the velocity DOFs is at most this
    pub tolerance: f64,
    pub max_iterations: usize,
    /// damping `θ` in `u ← θ u_new + (1 − θ) u_old`
    pub theta: f64,
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-7, max_iterations: 100, theta: 1.0, execution: Execution::default() }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidArgument(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Raw solution vectors of one linear solve.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub g: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub mu: f64,
    /// `‖Ax − b‖_∞ / max(‖b‖_∞, tiny)`
    pub relative_residual: f64,
    /// estimate of the 1-norm condition number, if requested
    pub condition: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub g: FEField,
    pub u: FEField,
    pub p: FEField,
    pub mu: f64,
    pub iterations: usize,
    /// max-abs velocity DOF change per iteration
    pub history: Vec<f64>,
    pub converged: bool,
    /// condition estimate of the first linear system
    pub condition_estimates: Vec<f64>,
    pub relative_residuals: Vec<f64>,
    pub assembly_time: Duration,
    pub solve_time: Duration,
}

struct Bordered {
    n: usize,
    offsets: [usize; 4],
    /// pressure DOF used for the sparse border of the factorized matrix
    pin: usize,
    matrix: SparseColMat<usize, f64>,
    rhs: Vec<f64>,
    /// entries of the true bordered matrix, for residuals and norms
    triplets: Vec<(usize, usize, f64)>,
}

/// Assembles the bordered system.
///
/// The factorized matrix `K₀` couples the multiplier to the single pressure DOF
/// `pin` instead of to every pressure DOF: a dense border row makes the
/// symbolic LU of the whole pressure block dense. The true system
/// `K = K₀ + U Vᵀ` (`U = [d, e_μ]`, `V = [e_μ, d]`, `d = c − e_pin` on the
/// pressure rows) is then solved exactly by the Woodbury identity.
fn bordered(system: &AssembledSystem) -> Result<Bordered> {
    let nh = system.mass.nrows();
    let nv = system.a_b.nrows();
    let nq = system.a_div.nrows();
    let (oh, ov, oq, om) = (0, nh, nh + nv, nh + nv + nq);
    let n = om + 1;
    let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(
        system.mass.nnz() + 2 * system.a_b.nnz() + 2 * system.a_div.nnz() + system.a_n.as_ref().map_or(0, |a| a.nnz()) + 2 * nq,
    );
    t.extend(system.mass.triplets().map(|(r, c, v)| (oh + r, oh + c, v)));
    for (r, c, v) in system.a_b.triplets() {
        t.push((ov + r, oh + c, v));
        t.push((oh + c, ov + r, -v));
    }
    if let Some(a_n) = &system.a_n {
        t.extend(a_n.triplets().map(|(r, c, v)| (ov + r, ov + c, v)));
    }
    for (r, c, v) in system.a_div.triplets() {
        t.push((oq + r, ov + c, v));
        t.push((ov + c, oq + r, -v));
    }
    // the constant pressure has coefficient 1 on "mean" DOFs and 0 elsewhere;
    // pinning such a DOF removes the constant from the kernel
    let pin = system
        .constant
        .iter()
        .zip(&system.mean)
        .enumerate()
        .max_by(|a, b| (a.1 .0 * a.1 .1).abs().total_cmp(&(b.1 .0 * b.1 .1).abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::LinearSolve("empty pressure space".into()))?;
    let mut entries: Vec<Triplet<usize, usize, f64>> = t.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    entries.push(Triplet::new(oq + pin, om, 1.0));
    entries.push(Triplet::new(om, oq + pin, 1.0));
    for (i, &c) in system.mean.iter().enumerate() {
        t.push((oq + i, om, c));
        t.push((om, oq + i, c));
    }
    let matrix = SparseColMat::try_new_from_triplets(n, n, &entries)
        .map_err(|e| Error::LinearSolve(format!("could not build sparse system: {e:?}")))?;
    let mut rhs = Vec::with_capacity(n);
    rhs.extend_from_slice(&system.rhs.r_g);
    rhs.extend_from_slice(&system.rhs.r_u);
    rhs.extend_from_slice(&system.rhs.r_p);
    rhs.push(0.0);
    Ok(Bordered { n, offsets: [oh, ov, oq, om], pin, matrix, rhs, triplets: t })
}

fn col(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LU of `K₀` plus the rank-2 Woodbury correction to `K`.
struct BorderedLu {
    lu: Lu<usize, f64>,
    n: usize,
    mu: usize,
    d: Vec<f64>,
    /// `K₀⁻¹ [d, e_μ]` and the inverse of the 2×2 capacitance `I + Vᵀ K₀⁻¹ U`
    z: [Vec<f64>; 2],
    cap: [[f64; 2]; 2],
    /// `K₀⁻ᵀ [e_μ, d]` and the inverse of `I + Uᵀ K₀⁻ᵀ V`
    zt: [Vec<f64>; 2],
    capt: [[f64; 2]; 2],
}

fn inv2(m: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(det.abs() > 1e-14 * scale * scale) {
        return Err(Error::LinearSolve(
            "singular bordered system; suspected disconnected mesh or rank deficiency".into(),
        ));
    }
    Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

impl BorderedLu {
    fn new(b: &Bordered, mean: &[f64]) -> Result<Self> {
        let lu = b.matrix.sp_lu().map_err(|e| {
            Error::LinearSolve(format!("sparse LU failed ({e:?}); suspected disconnected mesh or rank-deficient system"))
        })?;
        let [_, _, oq, om] = b.offsets;
        let mut d = vec![0.0; b.n];
        d[oq..om].copy_from_slice(mean);
        d[oq + b.pin] -= 1.0;
        let mut e = vec![0.0; b.n];
        e[om] = 1.0;
        let raw = |x: Mat<f64>| -> Vec<f64> { (0..b.n).map(|i| x[(i, 0)]).collect() };
        let z = [raw(lu.solve(col(&d))), raw(lu.solve(col(&e)))];
        let zt = [raw(lu.solve_transpose(col(&e))), raw(lu.solve_transpose(col(&d)))];
        if z.iter().chain(&zt).flatten().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve(
                "singular factorization (non-finite solution); suspected disconnected mesh or rank deficiency".into(),
            ));
        }
        // Vᵀ Z with V = [e_μ, d]; Uᵀ Zᵗ with U = [d, e_μ]
        let cap = inv2([[1.0 + z[0][om], z[1][om]], [dot(&d, &z[0]), 1.0 + dot(&d, &z[1])]])?;
        let capt = inv2([[1.0 + dot(&d, &zt[0]), dot(&d, &zt[1])], [zt[0][om], 1.0 + zt[1][om]]])?;
        Ok(BorderedLu { lu, n: b.n, mu: om, d, z, cap, zt, capt })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let y = self.lu.solve(col(rhs));
        let mut y: Vec<f64> = (0..self.n).map(|i| y[(i, 0)]).collect();
        let vy = [y[self.mu], dot(&self.d, &y)];
        let w = [self.cap[0][0] * vy[0] + self.cap[0][1] * vy[1], self.cap[1][0] * vy[0] + self.cap[1][1] * vy[1]];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi -= self.z[0][i] * w[0] + self.z[1][i] * w[1];
        }
        y
    }

    fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        let y = self.lu.solve_transpose(col(rhs));
        let mut y: Vec<f64> = (0..self.n).map(|i| y[(i, 0)]).collect();
        let uy = [dot(&self.d, &y), y[self.mu]];
        let w = [self.capt[0][0] * uy[0] + self.capt[0][1] * uy[1], self.capt[1][0] * uy[0] + self.capt[1][1] * uy[1]];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi -= self.zt[0][i] * w[0] + self.zt[1][i] * w[1];
        }
        y
    }
}

/// Hager's estimate of `‖K⁻¹‖₁` from solves with `K` and `Kᵀ`.
fn inverse_norm1_estimate(lu: &BorderedLu) -> f64 {
    let n = lu.n;
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    let mut last = usize::MAX;
    for _ in 0..5 {
        let y = lu.solve(&x);
        est = y.iter().map(|v| v.abs()).sum::<f64>();
        let xi: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = lu.solve_transpose(&xi);
        let (j, zmax) = z.iter().enumerate().fold((0, -1.0), |a, (i, v)| if v.abs() > a.1 { (i, v.abs()) } else { a });
        if zmax <= dot(&z, &x) || j == last {
            break;
        }
        last = j;
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    est
}

fn norm1(triplets: &[(usize, usize, f64)], n: usize) -> f64 {
    let mut colsum = vec![0.0; n];
    for &(_, c, v) in triplets {
        colsum[c] += v.abs();
    }
    colsum.into_iter().fold(0.0, f64::max)
}

/// Solves one linearized system by sparse LU with partial pivoting.
pub fn linear_step(system: &AssembledSystem) -> Result<LinearSolution> {
    linear_step_with(system, true)
}

/// As [`linear_step`]; the condition estimate costs about ten extra solves.
pub fn linear_step_with(system: &AssembledSystem, estimate_condition: bool) -> Result<LinearSolution> {
    let b = bordered(system)?;
    let lu = BorderedLu::new(&b, &system.mean)?;
    let x = lu.solve(&b.rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve(
            "singular factorization (non-finite solution); suspected disconnected mesh or rank deficiency".into(),
        ));
    }
    let mut r = b.rhs.clone();
    for &(i, j, v) in &b.triplets {
        r[i] -= v * x[j];
    }
    let rmax = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let bmax = b.rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let relative_residual = if bmax > 0.0 { rmax / bmax } else { rmax };
    let condition = estimate_condition.then(|| norm1(&b.triplets, b.n) * inverse_norm1_estimate(&lu));
    let [oh, ov, oq, om] = b.offsets;
    Ok(LinearSolution {
        g: x[oh..ov].to_vec(),
        u: x[ov..oq].to_vec(),
        p: x[oq..om].to_vec(),
        mu: x[om],
        relative_residual,
        condition,
    })
}

/// Picard iteration from `u⁰ = 0`; the Stokes variant of `problem` finishes after one step.
pub fn picard_solve(maps: &Arc<DofMaps>, problem: &Problem, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let t0 = Instant::now();
    let asm = Assembler::new(maps.clone()).with_execution(config.execution);
    let f = |p| problem.f(p);
    let g = |p| problem.g(p);
    let mut system = asm.system(problem.nu(), &f, &g, problem.convective(), None)?;
    let mut assembly_time = t0.elapsed();
    let mut solve_time = Duration::ZERO;

    let mut u = maps.zero_field(Space::V);
    let mut history = Vec::new();
    let mut conds = Vec::new();
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut last = None;
    for it in 0..config.max_iterations {
        if problem.convective() && it > 0 {
            let t = Instant::now();
            system.a_n = Some(asm.convection(&u));
            assembly_time += t.elapsed();
        }
        let t = Instant::now();
        let sol = linear_step_with(&system, it == 0)?;
        solve_time += t.elapsed();
        conds.extend(sol.condition);
        residuals.push(sol.relative_residual);
        let theta = config.theta;
        let next: Vec<f64> = sol.u.iter().zip(&u.coeffs).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
        let diff = next.iter().zip(&u.coeffs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        history.push(diff);
        u = maps.field(Space::V, next);
        last = Some(sol);
        if !problem.convective() || diff <= config.tolerance {
            converged = true;
            break;
        }
        if !diff.is_finite() {
            break;
        }
    }
    let sol = last.expect("at least one iteration");
    Ok(SolveResult {
        g: maps.field(Space::H, sol.g),
        u,
        p: maps.field(Space::Q, sol.p),
        mu: sol.mu,
        iterations: history.len(),
        history,
        converged,
        condition_estimates: conds,
        relative_residuals: residuals,
        assembly_time,
        solve_time,
    })
}

/// One linear solve with the convective term removed.
pub fn stokes_solve(maps: &Arc<DofMaps>, problem: &Problem, config: &SolverConfig) -> Result<SolveResult> {
    picard_solve(maps, &problem.with_convective(false), config)
}
