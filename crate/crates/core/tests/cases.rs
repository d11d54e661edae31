use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdg_ns::cases::{cavity_case, noflow_case, taylor_case, taylor_stokes_case, CaseConfig, CaseId, MeshSpec, Problem};
use sdg_ns::Point;

const H: f64 = 1e-3;

fn shift(p: Point, d: usize, s: f64) -> Point {
    let mut q = p;
    q[d] += s * H;
    q
}

/// Fourth-order central first derivative.
fn d1(f: &dyn Fn(Point) -> f64, p: Point, d: usize) -> f64 {
    (f(shift(p, d, -2.0)) - 8.0 * f(shift(p, d, -1.0)) + 8.0 * f(shift(p, d, 1.0)) - f(shift(p, d, 2.0))) / (12.0 * H)
}

/// Fourth-order central second derivative.
fn d2(f: &dyn Fn(Point) -> f64, p: Point, d: usize) -> f64 {
    (-f(shift(p, d, -2.0)) + 16.0 * f(shift(p, d, -1.0)) - 30.0 * f(p) + 16.0 * f(shift(p, d, 1.0)) - f(shift(p, d, 2.0))) / (12.0 * H * H)
}

/// `−νΔu + [div(u⊗u)] + ∇p − f` and `div u` by finite differences of the closed forms.
fn residual(pr: &Problem, p: Point) -> ([f64; 2], f64) {
    let nu = pr.nu();
    let mut r = [0.0; 2];
    for c in 0..2 {
        let uc = |x: Point| pr.u(x)[c];
        let lap = d2(&uc, p, 0) + d2(&uc, p, 1);
        let conv = if pr.convective() {
            (0..2).map(|d| d1(&|x: Point| pr.u(x)[c] * pr.u(x)[d], p, d)).sum::<f64>()
        } else {
            0.0
        };
        r[c] = -nu * lap + conv + d1(&|x| pr.p(x), p, c) - pr.f(p)[c];
    }
    let div = d1(&|x| pr.u(x)[0], p, 0) + d1(&|x| pr.u(x)[1], p, 1);
    (r, div)
}

fn scale(pr: &Problem) -> f64 {
    match pr {
        Problem::NoFlow { lambda, .. } => lambda.abs().max(1.0),
        _ => 1.0,
    }
}

#[test]
fn manufactured_cases_satisfy_their_equations() {
    let cases = [taylor_case(0.1), taylor_case(1e-3), taylor_stokes_case(1.0), taylor_stokes_case(1e-4), noflow_case(1.0), noflow_case(1e7)];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for pr in cases {
        for _ in 0..50 {
            let p = [rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99)];
            let (r, div) = residual(&pr, p);
            let s = scale(&pr);
            assert!(r[0].abs() <= 1e-8 * s && r[1].abs() <= 1e-8 * s, "{pr:?} at {p:?}: {r:?}");
            assert!(div.abs() <= 1e-9);
            // G = ν∇u
            let g = pr.g_tensor(p);
            for c in 0..2 {
                for d in 0..2 {
                    let fd = pr.nu() * d1(&|x| pr.u(x)[c], p, d);
                    assert!((g[c][d] - fd).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn taylor_values() {
    let pr = taylor_case(0.1);
    let f = pr.f([0.5, 0.5]);
    assert!(f[0].abs() < 1e-15 && f[1].abs() < 1e-15);
    let u = pr.u([0.25, 0.5]);
    assert!((u[0] + (std::f64::consts::PI / 4.0).cos()).abs() < 1e-15);
    assert_eq!(pr.g([0.0, 0.3]), pr.u([0.0, 0.3]));
}

#[test]
fn pressures_have_zero_mean() {
    // tensor Gauss-Legendre, 20 points per direction
    let (x, w) = {
        let n = 20;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                z -= p1 / dp;
            }
            x[i] = 0.5 * (z + 1.0);
            w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    };
    for pr in [taylor_case(0.3), noflow_case(1e7)] {
        let mut mean = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            for (yj, wj) in x.iter().zip(&w) {
                mean += wi * wj * pr.p([*xi, *yj]);
            }
        }
        assert!(mean.abs() < 1e-12 * scale(&pr), "{pr:?}: {mean}");
    }
    // λ(1/4 − 1/6 + 1/2 − 7/12) in exact rational arithmetic: 3 − 2 + 6 − 7 over 12
    assert_eq!(3 - 2 + 6 - 7, 0);
    let zero = noflow_case(0.0);
    assert_eq!(zero.p([0.3, 0.8]), 0.0);
    assert_eq!(zero.f([0.3, 0.8]), [0.0, 0.0]);
}

#[test]
fn cavity_boundary_data_is_tangential() {
    let pr = cavity_case(1.0 / 400.0);
    assert!(!pr.has_exact());
    // corners are edge endpoints and never sampled
    for i in 1..100 {
        let s = i as f64 / 100.0;
        for (p, n) in [([s, 0.0], [0.0, -1.0]), ([s, 1.0], [0.0, 1.0]), ([0.0, s], [-1.0, 0.0]), ([1.0, s], [1.0, 0.0])] {
            let g = pr.g(p);
            assert_eq!(g[0] * n[0] + g[1] * n[1], 0.0);
        }
        assert_eq!(pr.g([s, 1.0]), [1.0, 0.0]);
        assert_eq!(pr.g([s, 0.0]), [0.0, 0.0]);
    }
    assert_eq!(pr.f([0.4, 0.4]), [0.0, 0.0]);
}

#[test]
fn config_validation() {
    let mesh: MeshSpec = "rect:4x4".parse().unwrap();
    let mut c = CaseConfig::new(CaseId::Cavity, mesh.clone(), 2);
    assert_eq!(c.nu, 1.0 / 400.0);
    assert!(c.validate().is_ok());
    c.nu = -1.0;
    assert!(c.validate().is_err());
    assert!(CaseConfig::new(CaseId::File, mesh.clone(), 1).validate().is_err());
    assert!(CaseConfig::new(CaseId::Taylor, mesh.clone(), 0).validate().is_err());
    assert!(!CaseConfig::new(CaseId::TaylorStokes, mesh, 1).problem().convective());
    assert!("vortex".parse::<CaseId>().is_err());
}

proptest! {
    #[test]
    fn mesh_spec_display_round_trips(nx in 1usize..500, ny in 1usize..500, seed in any::<u64>()) {
        let r = MeshSpec::Rect { nx, ny };
        prop_assert_eq!(r.to_string().parse::<MeshSpec>().unwrap(), r);
        let v = MeshSpec::Voronoi { cells: nx, seed };
        prop_assert_eq!(v.to_string().parse::<MeshSpec>().unwrap(), v);
    }

    #[test]
    fn noflow_scales_linearly(lambda in -1e8f64..1e8, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let (a, b) = (noflow_case(lambda), noflow_case(1.0));
        prop_assert!((a.p([x, y]) - lambda * b.p([x, y])).abs() <= 1e-9 * lambda.abs().max(1.0));
        prop_assert_eq!(a.u([x, y]), [0.0, 0.0]);
    }
}
