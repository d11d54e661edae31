//! `sdg`: command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 Picard iteration
//! did not converge (outputs are still written), 4 internal failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use sdg_ns::analysis::{convergence_study, run_case, streamfunction, vortex_center, CaseRun, TreeKind};
use sdg_ns::cases::{CaseConfig, CaseId, MeshSpec};
use sdg_ns::io::{self, RunManifest};
use sdg_ns::par::Execution;
use sdg_ns::Error;

#[derive(Parser)]
#[command(name = "sdg", version, about = "Staggered DG solver for stationary incompressible Navier-Stokes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case; writes errors.csv, history.csv, solution.vtk, manifest.txt
    Run(CaseArgs),
    /// Solve a mesh sequence; writes rates.csv, errors.csv, manifest.txt
    Convergence {
        #[command(flatten)]
        case: CaseArgs,
        /// Refinement levels: N for rect:NxN, or cell counts for voronoi meshes
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
    },
    /// Lid-driven cavity; writes solution.vtk, streamfunction.csv, history.csv, manifest.txt
    Cavity(CaseArgs),
}

#[derive(Args, Clone, Default)]
struct CaseArgs {
    /// `key = value` config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// taylor | taylor-stokes | noflow | cavity | file
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    nu: Option<f64>,
    /// Pressure scale of the noflow case
    #[arg(long)]
    lambda: Option<f64>,
    /// Polynomial degree (>= 1)
    #[arg(long)]
    k: Option<usize>,
    /// rect:NxM | voronoi:N:SEED | file:PATH
    #[arg(long)]
    mesh: Option<String>,
    /// Picard tolerance on the max velocity DOF change
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Picard damping in (0, 1]
    #[arg(long)]
    theta: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Drop the convective term
    #[arg(long)]
    stokes: bool,
    /// Disable data-parallel assembly
    #[arg(long)]
    sequential: bool,
}

struct Defaults {
    case: CaseId,
    mesh: &'static str,
    k: usize,
}

enum Failure {
    Config(String),
    NotConverged,
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::Io { .. }
            | Error::Orientation { .. }
            | Error::NotSimple { .. }
            | Error::NotStarShaped { .. }
            | Error::Tiling(_)
            | Error::DuplicateVertices { .. }
            | Error::Degenerate(_) => Failure::Config(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

fn resolve(args: &CaseArgs, d: Defaults, forced: Option<CaseId>) -> Result<(CaseConfig, Option<Vec<usize>>), Error> {
    let file = match &args.config {
        Some(p) => io::read_config(p)?,
        None => io::ConfigFile::default(),
    };
    let case = match (&args.case, forced) {
        (Some(c), _) => c.parse()?,
        (None, Some(c)) => file.case.filter(|fc| *fc == c).unwrap_or(c),
        (None, None) => file.case.unwrap_or(d.case),
    };
    if let Some(f) = forced {
        if case != f {
            return Err(Error::InvalidArgument(format!("this command only runs case `{f}`")));
        }
    }
    let mesh: MeshSpec = match &args.mesh {
        Some(m) => m.parse()?,
        None => file.mesh.clone().unwrap_or_else(|| d.mesh.parse().expect("valid default mesh")),
    };
    let mut c = CaseConfig::new(case, mesh, args.k.or(file.k).unwrap_or(d.k));
    c.nu = args.nu.or(file.nu).unwrap_or(c.nu);
    c.lambda = args.lambda.or(file.lambda).unwrap_or(c.lambda);
    c.stokes = c.stokes || args.stokes || file.stokes.unwrap_or(false);
    c.solver.tolerance = args.tol.or(file.tol).unwrap_or(c.solver.tolerance);
    c.solver.max_iterations = args.max_iters.or(file.max_iters).unwrap_or(c.solver.max_iterations);
    c.solver.theta = args.theta.or(file.theta).unwrap_or(c.solver.theta);
    if args.sequential {
        c.solver.execution = Execution::Sequential;
    }
    c.out = args.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    c.validate()?;
    Ok((c, file.levels))
}

fn emit(manifest: &mut RunManifest, dir: &Path, name: &str, contents: &str) -> Result<(), Error> {
    let path = dir.join(name);
    io::write_file(&path, contents)?;
    manifest.add_file(path);
    Ok(())
}

fn record_run(manifest: &mut RunManifest, run: &CaseRun) {
    manifest.timings.push(("mesh".into(), run.mesh_time));
    manifest.timings.push(("assembly".into(), run.result.assembly_time));
    manifest.timings.push(("solve".into(), run.result.solve_time));
    manifest.timings.push(("analysis".into(), run.analysis_time));
}

fn finish(mut manifest: RunManifest, converged: bool) -> Result<(), Failure> {
    let path = manifest.config.out.join("manifest.txt");
    manifest.add_file(path.clone());
    io::write_file(&path, &manifest.render())?;
    if converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

fn cmd_run(args: &CaseArgs) -> Result<(), Failure> {
    let (config, _) = resolve(args, Defaults { case: CaseId::Taylor, mesh: "rect:8x8", k: 1 }, None)?;
    let run = run_case(&config)?;
    let mut manifest = RunManifest::new("run", &config);
    record_run(&mut manifest, &run);
    let out = config.out.clone();
    emit(&mut manifest, &out, "errors.csv", &io::errors_csv(std::slice::from_ref(&run.report)))?;
    emit(&mut manifest, &out, "history.csv", &io::history_csv(&run.result))?;
    emit(&mut manifest, &out, "solution.vtk", &io::solution_vtk(&run.result, &format!("sdg {} {}", config.case, config.mesh)))?;
    if !run.result.converged {
        manifest.notes.push(format!("Picard iteration did not converge in {} iterations", run.result.iterations));
    }
    finish(manifest, run.result.converged)
}

fn level_mesh(base: &MeshSpec, n: usize) -> Result<MeshSpec, Error> {
    match base {
        MeshSpec::Rect { .. } => Ok(MeshSpec::Rect { nx: n, ny: n }),
        MeshSpec::Voronoi { seed, .. } => Ok(MeshSpec::Voronoi { cells: n, seed: *seed }),
        MeshSpec::File(_) => Err(Error::InvalidArgument("--levels cannot refine a file mesh".into())),
    }
}

fn cmd_convergence(args: &CaseArgs, levels: &Option<Vec<usize>>) -> Result<(), Failure> {
    let (config, file_levels) = resolve(args, Defaults { case: CaseId::Taylor, mesh: "rect:4x4", k: 1 }, None)?;
    let levels = levels.clone().or(file_levels);
    let configs: Vec<CaseConfig> = match &levels {
        Some(ls) if !ls.is_empty() => ls
            .iter()
            .map(|&n| {
                let mut c = config.clone();
                c.mesh = level_mesh(&config.mesh, n)?;
                c.validate()?;
                Ok(c)
            })
            .collect::<Result<_, Error>>()?,
        _ => vec![config.clone()],
    };
    if configs.len() < 2 {
        eprintln!("warning: a single mesh gives no convergence slopes");
    }
    let effective_h = matches!(config.mesh, MeshSpec::Voronoi { .. });
    let t = Instant::now();
    let (table, failure) = match convergence_study(&configs, effective_h) {
        Ok(t) => (t, None),
        Err((e, partial)) => (partial, Some(e)),
    };
    let mut manifest = RunManifest::new("convergence", &config);
    manifest.timings.push(("study".into(), t.elapsed()));
    let out = config.out.clone();
    emit(&mut manifest, &out, "rates.csv", &io::rates_csv(&table))?;
    emit(&mut manifest, &out, "errors.csv", &io::errors_csv(&table.reports))?;
    if let Some(e) = failure {
        manifest.notes.push(format!("study aborted: {e}"));
        let _ = finish(manifest, true);
        return Err(e.into());
    }
    let converged = table.reports.iter().all(|r| r.converged);
    finish(manifest, converged)
}

fn cmd_cavity(args: &CaseArgs) -> Result<(), Failure> {
    let (config, _) = resolve(args, Defaults { case: CaseId::Cavity, mesh: "rect:16x16", k: 2 }, Some(CaseId::Cavity))?;
    let run = run_case(&config)?;
    let mut manifest = RunManifest::new("cavity", &config);
    record_run(&mut manifest, &run);
    let out = config.out.clone();
    emit(&mut manifest, &out, "history.csv", &io::history_csv(&run.result))?;
    emit(&mut manifest, &out, "solution.vtk", &io::solution_vtk(&run.result, &format!("sdg cavity nu={}", config.nu)))?;
    match streamfunction(&run.result.u, TreeKind::BreadthFirst) {
        Ok(psi) => {
            let (p, v) = vortex_center(&run.result.u, &psi);
            manifest.notes.push(format!("psi extremum {v:.6e} at ({:.6}, {:.6})", p[0], p[1]));
            manifest.notes.push(format!("psi closure residual {:.3e}", psi.closure_residual));
            emit(&mut manifest, &out, "streamfunction.csv", &io::streamfunction_csv(run.maps.mesh().points(), &psi))?;
        }
        Err(e) => manifest.notes.push(format!("streamfunction skipped: {e}")),
    }
    if !run.result.converged {
        manifest.notes.push(format!("Picard iteration did not converge in {} iterations", run.result.iterations));
    }
    finish(manifest, run.result.converged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Convergence { case, levels } => cmd_convergence(case, levels),
        Command::Cavity(a) => cmd_cavity(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::NotConverged) => {
            eprintln!("error: Picard iteration did not converge (see history.csv)");
            ExitCode::from(3)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
    }
}
