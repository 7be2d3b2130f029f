mod common;

use polyfv_core::diagnostics::{
    boundary_compensation, circumcenter_identity, evaluate_patching, pair_patching, tile_patching, trivial_patching, Patching,
    WeightedProjector,
};
use polyfv_core::geometry::Point;
use polyfv_core::mesh::{MeshInput, PolytopalMesh};
use polyfv_core::meshgen::{cartesian, PointPlacement};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `Σ_σ |σ| (|v₁|² + |v₂|²)/4`, the natural size of both sides.
fn identity_scale(t: [Point; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            a.dist(b) * (a.norm_sq() + b.norm_sq()) / 4.0
        })
        .sum()
}

fn rigid(mesh: &PolytopalMesh, theta: f64, shift: Point) -> PolytopalMesh {
    let (s, c) = theta.sin_cos();
    let map = |p: Point| Point::new(c * p.x - s * p.y, s * p.x + c * p.y) + shift;
    let input = mesh.to_input();
    PolytopalMesh::from_input(MeshInput {
        vertices: input.vertices.iter().map(|&p| map(p)).collect(),
        cells: input.cells,
        cell_points: input.cell_points.iter().map(|&p| map(p)).collect(),
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circumcenter_identity_holds(seed in any::<u64>(), size in 0.01..100.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = common::random_triangle(&mut rng, size);
        let (l, r) = circumcenter_identity(t[0], t[1], t[2]).unwrap();
        prop_assert!((l - r).norm() < 1e-12 * identity_scale(t));
        let (l2, r2) = circumcenter_identity(t[0], t[2], t[1]).unwrap();
        prop_assert!((l2 - l).norm() < 1e-12 * identity_scale(t));
        prop_assert!((r2 - r).norm() < 1e-12 * identity_scale(t));
    }

    #[test]
    fn boundary_compensation_holds(seed in any::<u64>(), ops in 0usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_triangulation(&mut rng, ops);
        let (l, r) = boundary_compensation(&m).unwrap();
        let scale = common::compensation_scale(&m);
        prop_assert!((l - r).norm() < 1e-12 * scale, "{l:?} vs {r:?}");
    }

    #[test]
    fn patch_quality_is_rigid_motion_invariant(
        theta in -3.2..3.2f64, sx in -5.0..5.0f64, sy in -5.0..5.0f64, d in -0.45..0.45f64,
    ) {
        let m = cartesian(6, 4, PointPlacement::CheckerboardShift(d)).unwrap();
        let moved = rigid(&m, theta, Point::new(sx, sy));
        let p = pair_patching(&m).unwrap();
        let q = Patching::new(&moved, p.patches.clone()).unwrap();
        let a = evaluate_patching(&m, &p).unwrap();
        let b = evaluate_patching(&moved, &q).unwrap();
        prop_assert!((a.e_g - b.e_g).abs() < 1e-12 * (1.0 + a.e_g));
        prop_assert!((a.uncovered_area - b.uncovered_area).abs() < 1e-12);
    }

    #[test]
    fn uniform_shift_defeats_every_patching(sx in -0.45..0.45f64, sy in -0.45..0.45f64, n in 2usize..7) {
        let m = cartesian(n, n, PointPlacement::UniformShift(Point::new(sx, sy))).unwrap();
        let shift = Point::new(sx, sy).norm() / n as f64;
        let blocks: Vec<Vec<usize>> = (0..n / 2)
            .flat_map(|bj| (0..n / 2).map(move |bi| (bi, bj)))
            .map(|(bi, bj)| {
                let mut b = Vec::new();
                for j in 2 * bj..2 * bj + 2 {
                    for i in 2 * bi..2 * bi + 2 {
                        b.push(m.origin().unwrap().tile_of_cell.iter().position(|&t| t == (i, j)).unwrap());
                    }
                }
                b
            })
            .collect();
        for p in [trivial_patching(&m), pair_patching(&m).unwrap(), Patching::new(&m, blocks).unwrap()] {
            let q = evaluate_patching(&m, &p).unwrap();
            prop_assert!((q.e_g - shift).abs() < 1e-13);
        }
    }

    #[test]
    fn projector_reproduces_affines(seed in any::<u64>(), c0 in -2.0..2.0f64, cx in -2.0..2.0f64, cy in -2.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_cell_points(&mut rng, 5, 4);
        let proj = WeightedProjector::new(&m).unwrap();
        let l = |p: Point| c0 + cx * p.x + cy * p.y;
        for (k, (v, (m0, m1))) in proj.apply(&m, l).iter().zip(proj.moments(&m)).enumerate() {
            let c = m.cell(k);
            prop_assert!((v - l(c.cell_point)).abs() < 1e-12 * (1.0 + l(c.cell_point).abs()));
            prop_assert!(common::rel(m0, c.measure) < 1e-12);
            prop_assert!((m1 - c.cell_point * c.measure).norm() < 1e-12 * c.measure);
        }
    }
}

#[test]
fn translation_tiles_compensate() {
    let fam = polyfv_core::harness::MeshFamily::triangulation("translation").unwrap();
    for n in [2, 4, 8] {
        let m = fam.build(n).unwrap();
        let q = evaluate_patching(&m, &tile_patching(&m).unwrap()).unwrap();
        assert!(q.e_g < 1e-13 * q.h_mesh, "n={n}: {}", q.e_g);
        assert_eq!(q.uncovered_area, 0.0);
    }
}

#[test]
fn checkerboard_pairs_compensate() {
    for d in [0.1, 0.25, 0.4] {
        let m = cartesian(8, 8, PointPlacement::CheckerboardShift(d)).unwrap();
        let q = evaluate_patching(&m, &pair_patching(&m).unwrap()).unwrap();
        assert!(q.e_g < 1e-15, "{}", q.e_g);
        assert_eq!(q.uncovered_area, 0.0);
    }
}
