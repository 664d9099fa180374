//! The load potential `L(v) = ∫_Ω f·v + ∫_∂Ω g·v` bound to a mesh.
//!
//! For P1 fields `L` is a dot product with consistent nodal forces, computed
//! once with degree-two rules (exact for affine densities against P1 fields).
//! Its values on affine fields follow from the resultant `F_i = L(e_i)` and the
//! first moments `M_ij = L(x_j e_i)`.

use nalgebra::{Matrix3, Vector3};

use super::spec::{LoadSpec, VolumeForce};
use crate::error::{LabError, Result};
use crate::geometry::{h1_norm, Mesh, TET_DEGREE2, TRI_DEGREE2};

/// A quadrature point carrying `weight × density`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadPoint {
    pub x: Vector3<f64>,
    pub force: Vector3<f64>,
}

/// `L` on a fixed mesh.
#[derive(Debug, Clone)]
pub struct Load {
    spec: LoadSpec,
    nodal: Vec<Vector3<f64>>,
    points: Vec<LoadPoint>,
    resultant: Vector3<f64>,
    moments: Matrix3<f64>,
    norm_estimate: f64,
}

impl Load {
    pub fn new(spec: &LoadSpec, mesh: &Mesh) -> Result<Load> {
        let mut nodal = vec![Vector3::zeros(); mesh.num_nodes()];
        let mut points = Vec::new();
        match &spec.volume {
            VolumeForce::Zero => {}
            VolumeForce::Tabulated(values) => {
                mesh.check_nodal(values.len())?;
                for (t, vol) in mesh.tets().iter().zip(mesh.element_volumes()) {
                    let f = t.iter().map(|&i| values[i]).sum::<Vector3<f64>>() / 4.0;
                    check_finite(&f)?;
                    for &i in t {
                        nodal[i] += f * (vol / 4.0);
                    }
                    let x = t.iter().map(|&i| mesh.nodes()[i]).sum::<Vector3<f64>>() / 4.0;
                    points.push(LoadPoint { x, force: f * *vol });
                }
            }
            closed => {
                for (t, vol) in mesh.tets().iter().zip(mesh.element_volumes()) {
                    for (bary, w) in TET_DEGREE2 {
                        let x: Vector3<f64> = (0..4).map(|a| mesh.nodes()[t[a]] * bary[a]).sum();
                        let f = closed.eval(&x).expect("closed form");
                        check_finite(&f)?;
                        let weighted = f * (w * vol);
                        for a in 0..4 {
                            nodal[t[a]] += weighted * bary[a];
                        }
                        points.push(LoadPoint { x, force: weighted });
                    }
                }
            }
        }
        for traction in &spec.surface {
            check_finite(&traction.value)?;
            if traction.value == Vector3::zeros() {
                continue;
            }
            for tri_index in traction.region.triangles(mesh)? {
                let tri = &mesh.boundary_tris()[tri_index];
                let area = tri.area();
                for (bary, w) in TRI_DEGREE2 {
                    let x: Vector3<f64> = (0..3).map(|a| mesh.nodes()[tri.nodes[a]] * bary[a]).sum();
                    let weighted = traction.value * (w * area);
                    for a in 0..3 {
                        nodal[tri.nodes[a]] += weighted * bary[a];
                    }
                    points.push(LoadPoint { x, force: weighted });
                }
            }
        }
        let resultant: Vector3<f64> = nodal.iter().sum();
        let mut moments = Matrix3::zeros();
        for (l, x) in nodal.iter().zip(mesh.nodes()) {
            moments += l * x.transpose();
        }
        let mut load = Load { spec: spec.clone(), nodal, points, resultant, moments, norm_estimate: 0.0 };
        load.norm_estimate = load.estimate_norm(mesh)?;
        Ok(load)
    }

    pub fn spec(&self) -> &LoadSpec {
        &self.spec
    }

    /// Consistent nodal forces: `L(v) = Σ_a nodal[a] · v[a]` for P1 `v`.
    pub fn nodal_forces(&self) -> &[Vector3<f64>] {
        &self.nodal
    }

    pub fn points(&self) -> &[LoadPoint] {
        &self.points
    }

    /// `F = (L(e_1), L(e_2), L(e_3))`.
    pub fn resultant(&self) -> Vector3<f64> {
        self.resultant
    }

    /// `M_ij = L(x_j e_i)`.
    pub fn moments(&self) -> &Matrix3<f64> {
        &self.moments
    }

    /// Surrogate for `‖L‖_*`: the largest `|L(v)| / ‖v‖_{H¹}` over probe fields.
    pub fn norm_estimate(&self) -> f64 {
        self.norm_estimate
    }

    pub fn apply(&self, v: &[Vector3<f64>]) -> Result<f64> {
        if v.len() != self.nodal.len() {
            return Err(LabError::SizeMismatch { expected: self.nodal.len(), got: v.len() });
        }
        Ok(self.nodal.iter().zip(v).map(|(l, x)| l.dot(x)).sum())
    }

    /// `L(A x + b)`, exact.
    pub fn apply_affine(&self, a: &Matrix3<f64>, b: &Vector3<f64>) -> f64 {
        a.component_mul(&self.moments).sum() + self.resultant.dot(b)
    }

    /// `L(v)` for a field given pointwise, by the load quadrature.
    pub fn apply_pointwise(&self, v: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> f64 {
        self.points.iter().map(|p| p.force.dot(&v(&p.x))).sum()
    }

    fn estimate_norm(&self, mesh: &Mesh) -> Result<f64> {
        let mut best: f64 = 0.0;
        let mut probe = |f: &dyn Fn(&Vector3<f64>) -> Vector3<f64>| -> Result<()> {
            let v: Vec<Vector3<f64>> = mesh.nodes().iter().map(f).collect();
            let norm = h1_norm(mesh, &v)?;
            if norm > 0.0 {
                best = best.max(self.apply(&v)?.abs() / norm);
            }
            Ok(())
        };
        for i in 0..3 {
            let e = Vector3::ith(i, 1.0);
            probe(&|_| e)?;
            for j in 0..3 {
                probe(&|x| e * x[j])?;
                for k in j..3 {
                    probe(&|x| e * (x[j] * x[k]))?;
                }
            }
        }
        Ok(best)
    }
}

fn check_finite(v: &Vector3<f64>) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(LabError::InvalidInput("load density evaluates to a non-finite value".into()))
    }
}

/// `L(v)` for a nodal field.
pub fn eval_load(load: &Load, v: &[Vector3<f64>]) -> Result<f64> {
    load.apply(v)
}

/// `L(A x + b)`.
pub fn eval_load_affine(load: &Load, a: &Matrix3<f64>, b: &Vector3<f64>) -> f64 {
    load.apply_affine(a, b)
}

/// Resultant `F` and torque `T(p)` with `T(p)·a = L(a ∧ (x − p))` for all `a`.
pub fn resultant_and_torque(load: &Load, pivot: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let f = load.resultant();
    let m = load.moments();
    let mut t = Vector3::zeros();
    // (a ∧ y)_i = ε_ijk a_j y_k, so T_j = Σ ε_ijk L((x_k − p_k) e_i).
    for (i, j, k, s) in super::LEVI_TRIPLES {
        t[j] += s * (m[(i, k)] - pivot[k] * f[i]);
    }
    (f, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_unit_cube_mesh, BoxFace, Region};
    use crate::loads::LoadSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gravity(mesh: &Mesh) -> Load {
        Load::new(&LoadSpec::constant(-Vector3::z()), mesh).unwrap()
    }

    fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
        a.cross_matrix()
    }

    #[test]
    fn gravity_examples() {
        let m = build_unit_cube_mesh(2).unwrap();
        let l = gravity(&m);
        let e3 = vec![Vector3::z(); m.num_nodes()];
        assert!((eval_load(&l, &e3).unwrap() + 1.0).abs() < 1e-14);
        let x3e3: Vec<_> = m.nodes().iter().map(|x| Vector3::new(0.0, 0.0, x.z)).collect();
        assert!((eval_load(&l, &x3e3).unwrap() + 0.5).abs() < 1e-14);
        assert_eq!(eval_load(&l, &vec![Vector3::zeros(); m.num_nodes()]).unwrap(), 0.0);
        assert!(eval_load(&l, &e3[1..]).is_err());

        assert!((eval_load_affine(&l, &Matrix3::zeros(), &Vector3::z()) + 1.0).abs() < 1e-14);
        assert!((eval_load_affine(&l, &Matrix3::identity(), &Vector3::zeros()) + 0.5).abs() < 1e-14);
        assert!(eval_load_affine(&l, &skew(&Vector3::z()), &Vector3::zeros()).abs() < 1e-14);
    }

    #[test]
    fn affine_evaluation_matches_nodal_interpolant() {
        let m = build_unit_cube_mesh(2).unwrap();
        let spec =
            LoadSpec::affine(Matrix3::new(0.3, -0.1, 0.2, 0.0, 0.4, 0.1, 0.5, 0.2, -0.3), Vector3::new(0.1, 0.0, -1.0))
                .with_traction(Region::Face(BoxFace::Top), Vector3::new(0.2, 0.1, 0.6));
        let l = Load::new(&spec, &m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let b = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let v: Vec<_> = m.nodes().iter().map(|x| a * x + b).collect();
            let direct = eval_load(&l, &v).unwrap();
            assert!((direct - eval_load_affine(&l, &a, &b)).abs() < 1e-13);
            assert!((direct - l.apply_pointwise(|x| a * x + b)).abs() < 1e-13);
        }
    }

    #[test]
    fn affine_density_moments_are_exact() {
        // f = (x1 - 1/2) e1: L(x1 e1) = ∫ x1 (x1 - 1/2) = 1/12 on any Kuhn mesh.
        let m = build_unit_cube_mesh(1).unwrap();
        let a = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let l = Load::new(&LoadSpec::affine(a, Vector3::new(-0.5, 0.0, 0.0)), &m).unwrap();
        assert!((l.moments()[(0, 0)] - 1.0 / 12.0).abs() < 1e-15);
        assert!(l.resultant().norm() < 1e-15);
    }

    #[test]
    fn linearity() {
        let m = build_unit_cube_mesh(2).unwrap();
        let l = Load::new(
            &LoadSpec::constant(Vector3::new(0.1, 0.2, -1.0)).with_traction(Region::All, Vector3::new(0.0, 0.3, 0.1)),
            &m,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<Vector3<f64>> = (0..m.num_nodes()).map(|_| Vector3::from_fn(|_, _| rng.random())).collect();
        let v: Vec<Vector3<f64>> = (0..m.num_nodes()).map(|_| Vector3::from_fn(|_, _| rng.random())).collect();
        let (alpha, beta) = (0.7, -1.3);
        let w: Vec<_> = u.iter().zip(&v).map(|(a, b)| a * alpha + b * beta).collect();
        let lhs = eval_load(&l, &w).unwrap();
        let rhs = alpha * eval_load(&l, &u).unwrap() + beta * eval_load(&l, &v).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn resultant_and_torque_examples() {
        let m = build_unit_cube_mesh(2).unwrap();
        let l = gravity(&m);
        let (f, t) = resultant_and_torque(&l, &Vector3::new(0.5, 0.5, 0.0));
        assert!((f - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-14);
        assert!(t.norm() < 1e-14);

        let zero = Load::new(&LoadSpec::zero(), &m).unwrap();
        let (f, t) = resultant_and_torque(&zero, &Vector3::new(0.3, 0.1, 0.0));
        assert_eq!((f.norm(), t.norm()), (0.0, 0.0));

        let d = Vector3::new(0.2, -0.4, 0.7);
        let (f, t0) = resultant_and_torque(&l, &Vector3::zeros());
        let (_, td) = resultant_and_torque(&l, &d);
        assert!((td - (t0 - d.cross(&f))).norm() < 1e-14);

        // Antisymmetric consistency: L(a ∧ x) = a · T(0).
        for a in [Vector3::x(), Vector3::new(0.3, -0.2, 0.9).normalize()] {
            assert!((eval_load_affine(&l, &skew(&a), &Vector3::zeros()) - a.dot(&t0)).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_estimate_bounds_probes() {
        let m = build_unit_cube_mesh(2).unwrap();
        let l = gravity(&m);
        assert!(l.norm_estimate() > 0.0);
        let e3 = vec![Vector3::z(); m.num_nodes()];
        let ratio = eval_load(&l, &e3).unwrap().abs() / h1_norm(&m, &e3).unwrap();
        assert!(l.norm_estimate() >= ratio);
    }
}
