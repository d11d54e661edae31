use std::path::Path;

use proptest::prelude::*;
use sdg_ns::mesh::{build_rectangular_mesh, format_polygon_mesh, generate_voronoi_mesh, parse_polygon_mesh, triangulate, EdgeKind, Rect, StaggeredMesh};
use sdg_ns::Error;

fn check_topology(m: &StaggeredMesh) {
    let area: f64 = m.triangles().iter().map(|t| t.area).sum();
    assert!((area - 1.0).abs() < 1e-12, "area {area}");
    assert!(m.triangles().iter().all(|t| t.area > 0.0));
    // Euler characteristic of a disc
    let (v, e, f) = (m.points().len() as i64, m.edges().len() as i64, m.triangles().len() as i64);
    assert_eq!(v - e + f, 1);
    for (i, edge) in m.edges().iter().enumerate() {
        let [a, b] = m.edge_points(i);
        assert!((edge.length - (b[0] - a[0]).hypot(b[1] - a[1])).abs() < 1e-14);
        assert!((edge.normal[0] * edge.tangent[0] + edge.normal[1] * edge.tangent[1]).abs() < 1e-14);
        assert!((edge.normal[0].hypot(edge.normal[1]) - 1.0).abs() < 1e-14);
        // the normal points away from the plus triangle
        let c = m.triangles()[edge.plus].centroid;
        let mid = m.edge_midpoint(i);
        assert!((mid[0] - c[0]) * edge.normal[0] + (mid[1] - c[1]) * edge.normal[1] > 0.0);
        match edge.kind {
            EdgeKind::Dual => assert!(edge.minus.is_some()),
            EdgeKind::PrimalBoundary => {
                assert!(edge.minus.is_none());
                let out = [mid[0] + 1e-6 * edge.normal[0], mid[1] + 1e-6 * edge.normal[1]];
                assert!(out[0] < 0.0 || out[0] > 1.0 || out[1] < 0.0 || out[1] > 1.0);
            }
            EdgeKind::PrimalInterior => assert!(edge.minus.is_some()),
        }
    }
    for (t, tri) in m.triangles().iter().enumerate() {
        for &e in &tri.edges {
            let edge = &m.edges()[e];
            assert!(edge.plus == t || edge.minus == Some(t));
        }
        assert!(m.edges()[tri.edges[0]].kind.is_primal());
        assert_eq!(m.edges()[tri.edges[1]].kind, EdgeKind::Dual);
    }
}

#[test]
fn rectangular_counts() {
    let m = triangulate(&build_rectangular_mesh(4, 3, Rect::UNIT).unwrap()).unwrap();
    check_topology(&m);
    assert_eq!(m.triangles().len(), 48);
    assert_eq!(m.count(EdgeKind::PrimalBoundary), 14);
    assert_eq!(m.num_primal_edges(), 31);
    assert_eq!(m.num_dual_edges(), 48);
}

#[test]
fn file_format_round_trip() {
    let primal = generate_voronoi_mesh(12, 3, Rect::UNIT).unwrap();
    let text = format_polygon_mesh(&primal);
    let back = parse_polygon_mesh(&text, Path::new("mem")).unwrap();
    assert_eq!(back.polygons(), primal.polygons());
    for (a, b) in back.vertices().iter().zip(primal.vertices()) {
        assert_eq!(a, b);
    }
}

#[test]
fn rejects_bad_files() {
    let clockwise = "4 1\n0 0\n0 1\n1 1\n1 0\n4 0 1 2 3\n";
    let err = parse_polygon_mesh(clockwise, Path::new("cw")).map(|_| ()).unwrap_err();
    assert!(matches!(err, Error::Orientation { .. }), "{err}");
    let garbage = "2 0\n0 0\nfoo bar\n";
    assert!(matches!(parse_polygon_mesh(garbage, Path::new("g")).unwrap_err(), Error::Parse { line: 3, .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn voronoi_meshes_are_valid(n in 2usize..40, seed in 0u64..10_000) {
        let primal = generate_voronoi_mesh(n, seed, Rect::UNIT).unwrap();
        prop_assert_eq!(primal.polygons().len(), n);
        let m = triangulate(&primal).unwrap();
        check_topology(&m);
        let again = generate_voronoi_mesh(n, seed, Rect::UNIT).unwrap();
        prop_assert_eq!(again.vertices(), primal.vertices());
    }

    #[test]
    fn rectangular_meshes_are_valid(nx in 1usize..9, ny in 1usize..9) {
        let m = triangulate(&build_rectangular_mesh(nx, ny, Rect::UNIT).unwrap()).unwrap();
        check_topology(&m);
        prop_assert_eq!(m.triangles().len(), 4 * nx * ny);
    }
}
