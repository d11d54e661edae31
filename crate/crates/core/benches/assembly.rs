use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sdg_ns::analysis::run_case;
use sdg_ns::cases::{taylor_case, CaseConfig, CaseId, MeshSpec};
use sdg_ns::forms::Assembler;
use sdg_ns::par::Execution;
use sdg_ns::spaces::{build_dof_maps_with, DofMaps, Space};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn maps(n: usize, k: usize) -> Arc<DofMaps> {
    let mesh = MeshSpec::Rect { nx: n, ny: n }.build().unwrap();
    build_dof_maps_with(Arc::new(mesh), k, Execution::Parallel).unwrap()
}

fn per_triangle_assembly(c: &mut Criterion) {
    let m = maps(16, 2);
    let pr = taylor_case(0.1);
    let w = m.interpolate_v(|x| pr.u(x));
    let mut g = c.benchmark_group("assembly");
    g.sample_size(10);
    for (name, exec) in MODES {
        let a = Assembler::new(m.clone()).with_execution(exec);
        g.bench_function(BenchmarkId::new("gradient", name), |b| b.iter(|| a.gradient()));
        g.bench_function(BenchmarkId::new("divergence", name), |b| b.iter(|| a.divergence()));
        g.bench_function(BenchmarkId::new("convection", name), |b| b.iter(|| a.convection(&w)));
        g.bench_function(BenchmarkId::new("mass", name), |b| b.iter(|| a.mass(0.1).unwrap()));
    }
    g.finish();
}

fn dof_maps(c: &mut Criterion) {
    let mesh = Arc::new(MeshSpec::Rect { nx: 16, ny: 16 }.build().unwrap());
    let mut g = c.benchmark_group("dof_maps");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("build", name), |b| b.iter(|| build_dof_maps_with(mesh.clone(), 2, exec).unwrap()));
        let m = maps(16, 2);
        let pr = taylor_case(0.1);
        g.bench_function(BenchmarkId::new("interpolate_h", name), |b| {
            b.iter(|| m.interpolate_with(Space::H, |x| { let g = pr.g_tensor(x); [g[0][0], g[0][1], g[1][0], g[1][1]] }, exec))
        });
    }
    g.finish();
}

fn viscosity_sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("stokes_sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("nu", name), |b| {
            b.iter(|| {
                for nu in [1e-1, 1e-3, 1e-5] {
                    let mut cfg = CaseConfig::new(CaseId::TaylorStokes, MeshSpec::Rect { nx: 8, ny: 8 }, 1);
                    cfg.nu = nu;
                    cfg.solver.execution = exec;
                    run_case(&cfg).unwrap();
                }
            })
        });
    }
    g.finish();
}

criterion_group!(benches, per_triangle_assembly, dof_maps, viscosity_sweep);
criterion_main!(benches);
