mod common;

use polyfv_core::geometry::{Mat2, Point};
use polyfv_core::mesh::{MeshInput, PolytopalMesh};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check_cell_identities(m: &PolytopalMesh) -> Result<(), TestCaseError> {
    for k in 0..m.n_cells() {
        let c = m.cell(k);
        let mut closure = Point::ZERO;
        let mut moment = Mat2::ZERO;
        let mut scale = 0.0;
        for f in m.faces(k) {
            closure += f.normal * f.length;
            moment += Mat2::outer(f.normal * f.length, f.midpoint - c.cell_point);
            scale += f.length * (f.midpoint - c.cell_point).norm();
        }
        let perimeter: f64 = m.faces(k).map(|f| f.length).sum();
        prop_assert!(closure.norm() <= 1e-12 * perimeter);
        prop_assert!((moment - Mat2::scaled_identity(c.measure)).max_abs() <= 1e-12 * scale);
    }
    let area: f64 = m.cells().iter().map(|c| c.measure).sum();
    prop_assert!(common::rel(area, m.area()) < 1e-10);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cell_identities_on_random_triangulations(seed in any::<u64>(), ops in 0usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check_cell_identities(&common::random_triangulation(&mut rng, ops))?;
    }

    #[test]
    fn cell_identities_on_random_points(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check_cell_identities(&common::random_cell_points(&mut rng, 5, 3))?;
    }

    #[test]
    fn edge_geometry_ignores_vertex_rotation(seed in any::<u64>(), ops in 0usize..15, rot in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_triangulation(&mut rng, ops);
        let mut input: MeshInput = m.to_input();
        for c in &mut input.cells {
            c.rotate_left(rot);
        }
        let r = PolytopalMesh::from_input(input).unwrap();
        for k in 0..m.n_cells() {
            let mut a: Vec<(f64, f64, f64, f64)> = m.faces(k).map(|f| (f.length, f.normal.x, f.normal.y, f.distance)).collect();
            let mut b: Vec<(f64, f64, f64, f64)> = r.faces(k).map(|f| (f.length, f.normal.x, f.normal.y, f.distance)).collect();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.0 - y.0).abs() < 1e-14 && (x.1 - y.1).abs() < 1e-14);
                prop_assert!((x.2 - y.2).abs() < 1e-14 && (x.3 - y.3).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn family_meshes_satisfy_identities() {
    for (name, m) in common::family_meshes() {
        check_cell_identities(&m).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(m.regularity().unwrap().theta >= 3.0);
    }
}
