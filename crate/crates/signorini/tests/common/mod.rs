//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signorini::geometry::{BoxFace, Mesh, Region};
use signorini::kinematics::DisplacementField;
use signorini::loads::LoadSpec;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn down(s: f64) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, -s)
}

pub fn up(s: f64) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, s)
}

/// Gravity with a top-face traction pulling upwards.
pub fn ballast() -> LoadSpec {
    LoadSpec::constant(down(1.0)).with_traction(Region::Face(BoxFace::Top), up(0.6))
}

/// Horizontal tension `τ (x1 − ½, x2 − ½, 0)` on top of the ballast.
pub fn tensioned(tau: f64) -> LoadSpec {
    LoadSpec::affine(
        Matrix3::new(tau, 0.0, 0.0, 0.0, tau, 0.0, 0.0, 0.0, 0.0),
        Vector3::new(-tau / 2.0, -tau / 2.0, -1.0),
    )
    .with_traction(Region::Face(BoxFace::Top), up(0.6))
}

/// Opposite tractions pulling the side faces apart.
pub fn side_pull() -> LoadSpec {
    ballast()
        .with_traction(Region::Face(BoxFace::XMax), Vector3::new(0.3, 0.0, 0.0))
        .with_traction(Region::Face(BoxFace::XMin), Vector3::new(-0.3, 0.0, 0.0))
}

/// Weight growing with `x1`, balanced by a top traction.
pub fn graded() -> LoadSpec {
    LoadSpec::affine(Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0), down(1.0))
        .with_traction(Region::Face(BoxFace::Top), up(0.9))
}

pub fn gravity_with_lift() -> LoadSpec {
    LoadSpec::constant(down(1.0)).with_traction(Region::Face(BoxFace::Top), up(0.8))
}

/// Five distinct admissible loads on the unit cube.
pub fn admissible_loads() -> Vec<(&'static str, LoadSpec)> {
    vec![
        ("ballast", ballast()),
        ("tensioned", tensioned(0.5)),
        ("side pull", side_pull()),
        ("graded", graded()),
        ("gravity with lift", gravity_with_lift()),
    ]
}

/// `(element, node, component) ↦ ∂_component λ_node` rows of `div` on P1 fields.
pub fn divergence_matrix(mesh: &Mesh) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(mesh.num_elements(), 3 * mesh.num_nodes());
    for (e, t) in mesh.tets().iter().enumerate() {
        let g = &mesh.gradient_maps()[e];
        for (a, &node) in t.iter().enumerate() {
            for c in 0..3 {
                b[(e, 3 * node + c)] += g[(c, a)];
            }
        }
    }
    b
}

fn to_field(mesh: &Mesh, x: &DVector<f64>) -> DisplacementField {
    let nodal = (0..mesh.num_nodes()).map(|i| Vector3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2])).collect();
    DisplacementField::new(mesh, nodal).unwrap()
}

/// Random nodal field of the given amplitude.
pub fn random_field(mesh: &Mesh, amplitude: f64, rng: &mut impl Rng) -> DisplacementField {
    let x = DVector::from_fn(3 * mesh.num_nodes(), |_, _| amplitude * rng.random_range(-1.0..1.0));
    to_field(mesh, &x)
}

/// Orthogonal projection of a random field onto the exactly divergence-free
/// P1 fields, rescaled so that the largest nodal value has norm `amplitude`.
pub fn random_divergence_free(mesh: &Mesh, amplitude: f64, rng: &mut impl Rng) -> DisplacementField {
    let b = divergence_matrix(mesh);
    let x = DVector::from_fn(3 * mesh.num_nodes(), |_, _| rng.random_range(-1.0..1.0));
    let svd = b.clone().svd(true, true);
    let correction = svd.solve(&(&b * &x), 1e-12).unwrap();
    let mut p = x - correction;
    let peak = (0..mesh.num_nodes()).map(|i| p.fixed_rows::<3>(3 * i).norm()).fold(0.0, f64::max);
    p *= amplitude / peak;
    to_field(mesh, &p)
}
