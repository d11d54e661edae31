//! CSV, VTK, config-file and manifest helpers for the `sdg` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::analysis::{ErrorReport, RateTable, Streamfunction};
use crate::cases::{CaseConfig, CaseId, MeshSpec};
use crate::solver::SolveResult;
use crate::spaces::Comps;
use crate::{Error, Result};

/// Full double precision (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn error_report_row(r: &ErrorReport) -> Vec<String> {
    vec![
        r.case.clone(),
        r.mesh.clone(),
        r.k.to_string(),
        fmt_f64(r.nu),
        fmt_f64(r.h),
        fmt_f64(r.h_eff),
        r.dofs_h.to_string(),
        r.dofs_v.to_string(),
        r.dofs_q.to_string(),
        r.iterations.to_string(),
        r.converged.to_string(),
        fmt_f64(r.err_g),
        fmt_f64(r.err_u),
        fmt_f64(r.err_p),
        fmt_f64(r.err_u_h),
        fmt_f64(r.err_u_04h),
        fmt_f64(r.norm_u_l2),
        fmt_f64(r.norm_u_h),
        fmt_f64(r.max_div),
        fmt_f64(r.max_normal_jump),
        r.dofs().to_string(),
    ]
}

/// `errors.csv`: header plus one row per report.
pub fn errors_csv(reports: &[ErrorReport]) -> String {
    csv(&ErrorReport::COLUMNS, &reports.iter().map(error_report_row).collect::<Vec<_>>())
}

pub const RATE_COLUMNS: [&str; 9] = ["row", "h", "h_eff", "dofs", "err_u", "err_g", "err_p", "err_u_h", "err_u_04h"];

/// `rates.csv`: one `mesh` row per refinement, then `pairwise_i` slope rows
/// and the `least_squares` slope row (finest three meshes). Slope cells are
/// empty when undefined.
pub fn rates_csv(table: &RateTable) -> String {
    let mut rows = Vec::new();
    for r in &table.reports {
        let mut row = vec!["mesh".to_string(), fmt_f64(r.h), fmt_f64(r.h_eff), r.dofs().to_string()];
        row.extend([r.err_u, r.err_g, r.err_p, r.err_u_h, r.err_u_04h].map(fmt_f64));
        rows.push(row);
    }
    let npairs = table.reports.len().saturating_sub(1);
    for i in 0..npairs {
        let mut row = vec![format!("pairwise_{i}"), String::new(), String::new(), String::new()];
        row.extend(table.quantities.iter().map(|q| fmt_f64(q.pairwise[i])));
        rows.push(row);
    }
    let mut row = vec!["least_squares".to_string(), String::new(), String::new(), String::new()];
    row.extend(table.quantities.iter().map(|q| q.least_squares.map(fmt_f64).unwrap_or_default()));
    rows.push(row);
    csv(&RATE_COLUMNS, &rows)
}

/// `history.csv`: successive velocity differences of the Picard iteration.
pub fn history_csv(result: &SolveResult) -> String {
    let rows: Vec<Vec<String>> = result.history.iter().enumerate().map(|(i, d)| vec![(i + 1).to_string(), fmt_f64(*d)]).collect();
    csv(&["iteration", "max_velocity_change"], &rows)
}

/// `streamfunction.csv`: `x, y, psi` per sub-triangulation vertex.
pub fn streamfunction_csv(points: &[[f64; 2]], psi: &Streamfunction) -> String {
    let rows: Vec<Vec<String>> =
        points.iter().zip(&psi.values).map(|(p, v)| vec![fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(*v)]).collect();
    csv(&["x", "y", "psi"], &rows)
}

/// Legacy ASCII VTK unstructured grid of the solution.
///
/// Each triangle gets its own three points so discontinuous fields are kept;
/// `u`, `p` and `G` are sampled at the triangle corners.
pub fn solution_vtk(result: &SolveResult, title: &str) -> String {
    let mesh = result.u.mesh();
    let nt = mesh.triangles().len();
    let corners: Vec<[[f64; 2]; 3]> = (0..nt).map(|t| mesh.triangle_points(t)).collect();
    let sample = |f: &crate::spaces::FEField| -> Vec<Comps> { (0..nt).flat_map(|t| f.eval(t, &corners[t])).collect() };
    let (u, p, g) = (sample(&result.u), sample(&result.p), sample(&result.g));

    let mut s = String::new();
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", 3 * nt);
    for c in &corners {
        for p in c {
            let _ = writeln!(s, "{} {} 0", fmt_f64(p[0]), fmt_f64(p[1]));
        }
    }
    let _ = writeln!(s, "CELLS {} {}", nt, 4 * nt);
    for t in 0..nt {
        let _ = writeln!(s, "3 {} {} {}", 3 * t, 3 * t + 1, 3 * t + 2);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {nt}\nSCALARS polygon int 1\nLOOKUP_TABLE default");
    for tri in mesh.triangles() {
        let _ = writeln!(s, "{}", tri.polygon);
    }
    let _ = writeln!(s, "POINT_DATA {}\nVECTORS velocity double", 3 * nt);
    for v in &u {
        let _ = writeln!(s, "{} {} 0", fmt_f64(v[0]), fmt_f64(v[1]));
    }
    let _ = writeln!(s, "SCALARS pressure double 1\nLOOKUP_TABLE default");
    for v in &p {
        let _ = writeln!(s, "{}", fmt_f64(v[0]));
    }
    let _ = writeln!(s, "TENSORS velocity_gradient double");
    for v in &g {
        let _ = writeln!(s, "{} {} 0\n{} {} 0\n0 0 0", fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(v[2]), fmt_f64(v[3]));
    }
    s
}

/// Settings read from a `key = value` config file; unset keys are `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub case: Option<CaseId>,
    pub nu: Option<f64>,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub mesh: Option<MeshSpec>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub theta: Option<f64>,
    pub out: Option<PathBuf>,
    pub stokes: Option<bool>,
    pub levels: Option<Vec<usize>>,
}

pub const CONFIG_KEYS: [&str; 11] = ["case", "nu", "lambda", "k", "mesh", "tol", "max_iters", "theta", "out", "stokes", "levels"];

/// Parses `key = value` lines; `#` starts a comment, `-` in keys is accepted for `_`.
pub fn parse_config(text: &str, path: &Path) -> Result<ConfigFile> {
    let mut c = ConfigFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { path: path.to_path_buf(), line: i + 1, msg };
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("`{key}` expects a number, got `{v}`")));
        let int = |v: &str| v.parse::<usize>().map_err(|_| err(format!("`{key}` expects a non-negative integer, got `{v}`")));
        match key.as_str() {
            "case" => c.case = Some(value.parse().map_err(|e: Error| err(e.to_string()))?),
            "nu" => c.nu = Some(num(value)?),
            "lambda" => c.lambda = Some(num(value)?),
            "k" => c.k = Some(int(value)?),
            "mesh" => c.mesh = Some(value.parse().map_err(|e: Error| err(e.to_string()))?),
            "tol" => c.tol = Some(num(value)?),
            "max_iters" => c.max_iters = Some(int(value)?),
            "theta" => c.theta = Some(num(value)?),
            "out" => c.out = Some(PathBuf::from(value)),
            "stokes" => {
                c.stokes = Some(match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(err(format!("`stokes` expects true or false, got `{value}`"))),
                })
            }
            "levels" => c.levels = Some(value.split(',').map(|v| int(v.trim())).collect::<Result<Vec<_>>>()?),
            _ => return Err(err(format!("unknown key `{key}` (known: {})", CONFIG_KEYS.join(", ")))),
        }
    }
    Ok(c)
}

pub fn read_config(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Record of one CLI invocation.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub config: CaseConfig,
    pub version: String,
    pub timings: Vec<(String, Duration)>,
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &CaseConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            config: config.clone(),
            version: format!("sdg-ns v{}", env!("CARGO_PKG_VERSION")),
            timings: Vec::new(),
            files: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn add_file(&mut self, path: PathBuf) {
        if !self.files.contains(&path) {
            self.files.push(path);
        }
    }

    pub fn render(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "case = {}", c.case);
        let _ = writeln!(s, "nu = {}", fmt_f64(c.nu));
        let _ = writeln!(s, "lambda = {}", fmt_f64(c.lambda));
        let _ = writeln!(s, "k = {}", c.k);
        let _ = writeln!(s, "mesh = {}", c.mesh);
        let _ = writeln!(s, "stokes = {}", c.stokes);
        let _ = writeln!(s, "tol = {}", fmt_f64(c.solver.tolerance));
        let _ = writeln!(s, "max_iters = {}", c.solver.max_iterations);
        let _ = writeln!(s, "theta = {}", fmt_f64(c.solver.theta));
        let _ = writeln!(s, "out = {}", c.out.display());
        for (phase, d) in &self.timings {
            let _ = writeln!(s, "time.{phase} = {:.6}", d.as_secs_f64());
        }
        for n in &self.notes {
            let _ = writeln!(s, "note = {n}");
        }
        for f in &self.files {
            let _ = writeln!(s, "file = {}", f.display());
        }
        s
    }
}
