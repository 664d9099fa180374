mod common;

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use signorini::geometry::{build_box_mesh, build_unit_cube_mesh, extract_obstacle, format_mesh, parse_mesh};
use signorini::kinematics::{format_field, parse_field};
use signorini::loads::{
    eval_load, eval_load_affine, find_load_center, phi, resultant_and_torque, shear_functional, Load, LoadSpec,
    Rotation,
};

use common::*;

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c)| Vector3::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn box_meshes_survive_a_text_round_trip(
        corner in (-2.0..2.0f64, -2.0..2.0f64),
        size in (0.2..3.0f64, 0.2..3.0f64, 0.2..3.0f64),
        n in (1usize..4, 1usize..4, 1usize..4),
    ) {
        // The obstacle is the part of the boundary on the plane x3 = 0.
        let lo = Vector3::new(corner.0, corner.1, 0.0);
        let hi = lo + Vector3::new(size.0, size.1, size.2);
        let mesh = build_box_mesh(lo, hi, [n.0, n.1, n.2]).unwrap();
        prop_assert!((mesh.volume() - size.0 * size.1 * size.2).abs() < 1e-10 * (1.0 + mesh.volume()));
        let back = parse_mesh(&format_mesh(&mesh)).unwrap();
        prop_assert_eq!(back.tets(), mesh.tets());
        for (a, b) in back.nodes().iter().zip(mesh.nodes()) {
            prop_assert_eq!(a, b);
        }
        let e = extract_obstacle(&mesh).unwrap();
        prop_assert_eq!(e.node_indices.len(), (n.0 + 1) * (n.1 + 1));
        prop_assert_eq!(e.hull_vertices_2d.len(), 4);
    }

    #[test]
    fn load_is_linear_and_exact_on_affine_fields(
        a in prop::array::uniform9(-1.0..1.0f64),
        b in vec3(),
        s in -3.0..3.0f64,
    ) {
        let mesh = build_unit_cube_mesh(2).unwrap();
        let load = Load::new(&tensioned(0.5), &mesh).unwrap();
        let a = Matrix3::from_row_slice(&a);
        let v: Vec<Vector3<f64>> = mesh.nodes().iter().map(|x| a * x + b).collect();
        let w: Vec<Vector3<f64>> = mesh.nodes().iter().map(|x| Vector3::new(x.y * x.z, x.x, -x.x * x.x)).collect();
        let lv = eval_load(&load, &v).unwrap();
        prop_assert!((lv - eval_load_affine(&load, &a, &b)).abs() < 1e-12 * (1.0 + lv.abs()));
        let combo: Vec<Vector3<f64>> = v.iter().zip(&w).map(|(p, q)| p * s + q).collect();
        let expected = s * lv + eval_load(&load, &w).unwrap();
        prop_assert!((eval_load(&load, &combo).unwrap() - expected).abs() < 1e-11 * (1.0 + expected.abs()));
    }

    #[test]
    fn nodal_fields_survive_a_text_round_trip(values in prop::collection::vec(vec3(), 1..20)) {
        prop_assert_eq!(parse_field(&format_field(&values)).unwrap(), values);
    }

    #[test]
    fn rotations_about_e3_leave_the_ballast_shear_free(theta in -3.2..3.2f64) {
        let mesh = build_unit_cube_mesh(2).unwrap();
        let e = extract_obstacle(&mesh).unwrap();
        let load = Load::new(&ballast(), &mesh).unwrap();
        let r = Rotation::about_e3(theta);
        prop_assert!(phi(&load, &e, &r).abs() < 1e-12);
        prop_assert!(shear_functional(&load, &r).abs() < 1e-12);
    }
}

#[test]
fn resultant_of_the_ballast() {
    let mesh = build_unit_cube_mesh(2).unwrap();
    let load = Load::new(&ballast(), &mesh).unwrap();
    let (force, torque) = resultant_and_torque(&load, &Vector3::new(0.5, 0.5, 0.5));
    assert!((force - Vector3::new(0.0, 0.0, -0.4)).norm() < 1e-12);
    assert!(torque.norm() < 1e-12);
    let e = extract_obstacle(&mesh).unwrap();
    let center = find_load_center(&load, &e).unwrap();
    assert!((center.point.xy() - nalgebra::Vector2::new(0.5, 0.5)).norm() < 1e-12);
    assert!(center.interior);
}

#[test]
fn load_text_matches_the_builder() {
    let text = "# ballast\nf constant 0 0 -1\ng region=top constant 0 0 0.6\n";
    assert_eq!(signorini::loads::parse_load(text).unwrap(), ballast());
    assert!(signorini::loads::parse_load("q constant 0 0 1\n").is_err());
    assert_eq!(LoadSpec::zero(), signorini::loads::parse_load("# nothing\n").unwrap());
}
