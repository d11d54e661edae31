//! Manufactured solutions, benchmark problems and run configurations.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::mesh::{build_rectangular_mesh, generate_voronoi_mesh, read_polygon_mesh, triangulate, PrimalMesh, Rect, StaggeredMesh};
use crate::solver::SolverConfig;
use crate::{Error, Point, Result};

/// Default pressure scale of the no-flow problem.
pub const DEFAULT_LAMBDA: f64 = 1e7;

/// Data of one boundary value problem.
///
/// `G = ν∇u` is stored row-major with `G[r][s] = ν ∂u_r/∂x_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem {
    /// Taylor vortex on the unit square; `convective = false` gives the Stokes variant.
    Taylor { nu: f64, convective: bool },
    /// Zero velocity driven by a gradient force of size `lambda`.
    NoFlow { nu: f64, lambda: f64 },
    /// Lid-driven cavity on the unit square.
    Cavity { nu: f64 },
}

impl Problem {
    pub fn nu(&self) -> f64 {
        match *self {
            Problem::Taylor { nu, .. } | Problem::NoFlow { nu, .. } | Problem::Cavity { nu } => nu,
        }
    }

    /// Whether the convective term is part of the model.
    pub fn convective(&self) -> bool {
        match *self {
            Problem::Taylor { convective, .. } => convective,
            _ => true,
        }
    }

    pub fn with_convective(self, convective: bool) -> Self {
        match self {
            Problem::Taylor { nu, .. } => Problem::Taylor { nu, convective },
            other => other,
        }
    }

    pub fn has_exact(&self) -> bool {
        !matches!(self, Problem::Cavity { .. })
    }

    /// Exact velocity (zero for the cavity, which has none).
    pub fn u(&self, p: Point) -> [f64; 2] {
        match self {
            Problem::Taylor { .. } => taylor_u(p),
            _ => [0.0, 0.0],
        }
    }

    /// Exact velocity gradient `∇u` (row `r` = gradient of `u_r`).
    pub fn grad_u(&self, p: Point) -> [[f64; 2]; 2] {
        match self {
            Problem::Taylor { .. } => {
                let (sx, cx, sy, cy) = ((PI * p[0]).sin(), (PI * p[0]).cos(), (PI * p[1]).sin(), (PI * p[1]).cos());
                [[PI * sx * sy, -PI * cx * cy], [PI * cx * cy, -PI * sx * sy]]
            }
            _ => [[0.0; 2]; 2],
        }
    }

    /// Exact `G = ν∇u`.
    pub fn g_tensor(&self, p: Point) -> [[f64; 2]; 2] {
        let g = self.grad_u(p);
        let nu = self.nu();
        [[nu * g[0][0], nu * g[0][1]], [nu * g[1][0], nu * g[1][1]]]
    }

    /// Exact pressure (zero mean on the unit square).
    pub fn p(&self, p: Point) -> f64 {
        match *self {
            Problem::Taylor { .. } => -((2.0 * PI * p[0]).cos() + (2.0 * PI * p[1]).cos()) / 4.0,
            Problem::NoFlow { lambda, .. } => {
                let y = p[1];
                lambda * (y * y * y - y * y / 2.0 + y - 7.0 / 12.0)
            }
            Problem::Cavity { .. } => 0.0,
        }
    }

    /// Body force `f = −νΔu + div(u⊗u) + ∇p` (without `div(u⊗u)` for Stokes).
    pub fn f(&self, p: Point) -> [f64; 2] {
        match *self {
            Problem::Taylor { nu, convective } => {
                let u = taylor_u(p);
                let s = 2.0 * PI * PI * nu;
                if convective {
                    // div(u⊗u) + ∇p vanishes for the Taylor vortex
                    [s * u[0], s * u[1]]
                } else {
                    [s * u[0] + 0.5 * PI * (2.0 * PI * p[0]).sin(), s * u[1] + 0.5 * PI * (2.0 * PI * p[1]).sin()]
                }
            }
            Problem::NoFlow { lambda, .. } => [0.0, lambda * (3.0 * p[1] * p[1] - p[1] + 1.0)],
            Problem::Cavity { .. } => [0.0, 0.0],
        }
    }

    /// Boundary velocity `g`; only evaluated on boundary edges.
    pub fn g(&self, p: Point) -> [f64; 2] {
        match self {
            Problem::Taylor { .. } => taylor_u(p),
            Problem::NoFlow { .. } => [0.0, 0.0],
            Problem::Cavity { .. } => {
                if p[1] >= 1.0 - 1e-12 {
                    [1.0, 0.0]
                } else {
                    [0.0, 0.0]
                }
            }
        }
    }
}

fn taylor_u(p: Point) -> [f64; 2] {
    let (x, y) = (PI * p[0], PI * p[1]);
    [-x.cos() * y.sin(), x.sin() * y.cos()]
}

pub fn taylor_case(nu: f64) -> Problem {
    Problem::Taylor { nu, convective: true }
}

pub fn taylor_stokes_case(nu: f64) -> Problem {
    Problem::Taylor { nu, convective: false }
}

pub fn noflow_case(lambda: f64) -> Problem {
    Problem::NoFlow { nu: 1.0, lambda }
}

pub fn cavity_case(nu: f64) -> Problem {
    Problem::Cavity { nu }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseId {
    Taylor,
    TaylorStokes,
    NoFlow,
    Cavity,
    /// Taylor-vortex data on a mesh read from a file.
    File,
}

impl CaseId {
    pub const ALL: [CaseId; 5] = [CaseId::Taylor, CaseId::TaylorStokes, CaseId::NoFlow, CaseId::Cavity, CaseId::File];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Taylor => "taylor",
            CaseId::TaylorStokes => "taylor-stokes",
            CaseId::NoFlow => "noflow",
            CaseId::Cavity => "cavity",
            CaseId::File => "file",
        }
    }

    /// Viscosity used when none is given.
    pub fn default_nu(self) -> f64 {
        match self {
            CaseId::Taylor | CaseId::TaylorStokes | CaseId::File => 0.1,
            CaseId::NoFlow => 1.0,
            CaseId::Cavity => 1.0 / 400.0,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown case `{s}` (expected taylor, taylor-stokes, noflow, cavity or file)")))
    }
}

/// How the primal mesh is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Rect { nx: usize, ny: usize },
    Voronoi { cells: usize, seed: u64 },
    File(PathBuf),
}

impl MeshSpec {
    pub fn build_primal(&self) -> Result<PrimalMesh> {
        match self {
            MeshSpec::Rect { nx, ny } => build_rectangular_mesh(*nx, *ny, Rect::UNIT),
            MeshSpec::Voronoi { cells, seed } => generate_voronoi_mesh(*cells, *seed, Rect::UNIT),
            MeshSpec::File(path) => read_polygon_mesh(path),
        }
    }

    pub fn build(&self) -> Result<StaggeredMesh> {
        triangulate(&self.build_primal()?)
    }
}

impl fmt::Display for MeshSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshSpec::Rect { nx, ny } => write!(f, "rect:{nx}x{ny}"),
            MeshSpec::Voronoi { cells, seed } => write!(f, "voronoi:{cells}:{seed}"),
            MeshSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for MeshSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("invalid mesh spec `{s}` (expected rect:NxM, voronoi:N:SEED or file:PATH)"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "rect" => {
                let (a, b) = rest.split_once('x').ok_or_else(bad)?;
                let (nx, ny) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if nx == 0 || ny == 0 {
                    return Err(bad());
                }
                Ok(MeshSpec::Rect { nx, ny })
            }
            "voronoi" => {
                let (a, b) = rest.split_once(':').ok_or_else(bad)?;
                let cells = a.parse().map_err(|_| bad())?;
                if cells == 0 {
                    return Err(bad());
                }
                Ok(MeshSpec::Voronoi { cells, seed: b.parse().map_err(|_| bad())? })
            }
            "file" if !rest.is_empty() => Ok(MeshSpec::File(PathBuf::from(rest))),
            _ => Err(bad()),
        }
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub case: CaseId,
    pub nu: f64,
    pub lambda: f64,
    pub mesh: MeshSpec,
    pub k: usize,
    /// disables the convective term
    pub stokes: bool,
    pub solver: SolverConfig,
    pub out: PathBuf,
}

impl CaseConfig {
    pub fn new(case: CaseId, mesh: MeshSpec, k: usize) -> Self {
        CaseConfig {
            case,
            nu: case.default_nu(),
            lambda: DEFAULT_LAMBDA,
            mesh,
            k,
            stokes: case == CaseId::TaylorStokes,
            solver: SolverConfig::default(),
            out: PathBuf::from("out"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidArgument(format!("nu must be positive, got {}", self.nu)));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be finite, got {}", self.lambda)));
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.case == CaseId::File && !matches!(self.mesh, MeshSpec::File(_)) {
            return Err(Error::InvalidArgument("case `file` requires --mesh file:PATH".into()));
        }
        self.solver.validate()
    }

    pub fn problem(&self) -> Problem {
        let p = match self.case {
            CaseId::Taylor | CaseId::File => taylor_case(self.nu),
            CaseId::TaylorStokes => taylor_stokes_case(self.nu),
            CaseId::NoFlow => Problem::NoFlow { nu: self.nu, lambda: self.lambda },
            CaseId::Cavity => cavity_case(self.nu),
        };
        if self.stokes {
            p.with_convective(false)
        } else {
            p
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_spec_roundtrip() {
        for s in ["rect:8x4", "voronoi:64:7", "file:meshes/a.poly"] {
            assert_eq!(s.parse::<MeshSpec>().unwrap().to_string(), s);
        }
        for s in ["rect:8", "rect:0x3", "voronoi:4", "hex:3", "file:"] {
            assert!(s.parse::<MeshSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn case_names_roundtrip() {
        for c in CaseId::ALL {
            assert_eq!(c.name().parse::<CaseId>().unwrap(), c);
        }
        assert!("poiseuille".parse::<CaseId>().is_err());
    }

    #[test]
    fn taylor_center_values() {
        let t = taylor_case(0.3);
        let u = t.u([0.5, 0.5]);
        let f = t.f([0.5, 0.5]);
        assert!(u[0].abs() < 1e-15 && u[1].abs() < 1e-15);
        assert!(f[0].abs() < 1e-15 && f[1].abs() < 1e-15);
    }

    #[test]
    fn zero_lambda_gives_zero_data() {
        let c = noflow_case(0.0);
        assert_eq!(c.f([0.3, 0.7]), [0.0, 0.0]);
        assert_eq!(c.p([0.3, 0.7]), 0.0);
    }

    #[test]
    fn cavity_lid_is_tangential() {
        let c = cavity_case(1e-3);
        assert_eq!(c.g([0.4, 1.0]), [1.0, 0.0]);
        assert_eq!(c.g([0.0, 0.4]), [0.0, 0.0]);
        assert_eq!(c.g([0.4, 0.0]), [0.0, 0.0]);
    }
}
