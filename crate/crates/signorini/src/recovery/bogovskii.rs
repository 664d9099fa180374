//! Discrete right inverse of the divergence with zero boundary values.
//!
//! Given `v` on a mesh, find `w` vanishing on `∂Ω` with
//! `div w = −div v + |Ω|⁻¹ ∫ div v` elementwise, of least Dirichlet energy
//! `∫ |∇w|²`. On P1 elements the per-element divergence has more constraints
//! than interior unknowns, so `w` lives on a red refinement of the mesh and
//! the constraint is imposed on the average over each original element,
//! `∫_T div w = |T| rhs_T`. The refinement depth grows until the system is
//! solvable.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{LabError, Result};
use crate::geometry::{h1_norm, Mesh};
use crate::kinematics::DisplacementField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogovskiiOptions {
    pub max_levels: usize,
    /// Accepted `max_T |avg_T div w − rhs_T|`.
    pub tolerance: f64,
}

impl Default for BogovskiiOptions {
    fn default() -> Self {
        BogovskiiOptions { max_levels: 3, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct BogovskiiCorrection {
    /// Mesh carrying `w`: the input mesh refined `levels` times.
    pub mesh: Mesh,
    /// Original element containing each element of `mesh`.
    pub parent: Vec<usize>,
    pub levels: usize,
    pub w: Vec<Vector3<f64>>,
    /// Target average divergence per original element.
    pub rhs: Vec<f64>,
    pub residual: f64,
    /// Realized `‖w‖_{H¹} / ‖rhs‖_{L²}` (`0` when `rhs = 0`).
    pub constant: f64,
}

impl BogovskiiCorrection {
    /// `avg_T div w` for every original element `T`.
    pub fn average_divergence(&self, coarse: &Mesh) -> Vec<f64> {
        let mut flux = vec![0.0; coarse.num_elements()];
        for (e, (&p, vol)) in self.parent.iter().zip(self.mesh.element_volumes()).enumerate() {
            flux[p] += vol * self.mesh.element_gradient(e, &self.w).trace();
        }
        flux.iter().zip(coarse.element_volumes()).map(|(f, v)| f / v).collect()
    }

    /// `avg_T div (v + w)` for every original element.
    pub fn corrected_divergence(&self, v: &DisplacementField, coarse: &Mesh) -> Vec<f64> {
        self.average_divergence(coarse).iter().zip(v.divergence()).map(|(a, b)| a + b).collect()
    }

    /// `max |w|` over boundary nodes of the refined mesh.
    pub fn boundary_max(&self) -> f64 {
        self.mesh
            .boundary_node_mask()
            .iter()
            .zip(&self.w)
            .filter(|(b, _)| **b)
            .map(|(_, w)| w.norm())
            .fold(0.0, f64::max)
    }
}

pub fn bogovskii_correct(v: &DisplacementField, mesh: &Mesh, opts: &BogovskiiOptions) -> Result<BogovskiiCorrection> {
    mesh.check_nodal(v.nodal().len())?;
    let volumes = mesh.element_volumes();
    let mean = v.divergence().iter().zip(volumes).map(|(d, vol)| d * vol).sum::<f64>() / mesh.volume();
    let rhs: Vec<f64> = v.divergence().iter().map(|d| mean - d).collect();
    let rhs_l2 = rhs.iter().zip(volumes).map(|(r, vol)| vol * r * r).sum::<f64>().sqrt();

    let mut fine = mesh.clone();
    let mut parent: Vec<usize> = (0..mesh.num_elements()).collect();
    let mut last_residual = f64::INFINITY;
    for level in 0..=opts.max_levels {
        if level > 0 {
            let (refined, up) = fine.refine_red()?;
            parent = up.iter().map(|&p| parent[p]).collect();
            fine = refined;
        }
        let boundary = fine.boundary_node_mask();
        let mut index = vec![usize::MAX; fine.num_nodes()];
        let mut interior = 0;
        for (i, b) in boundary.iter().enumerate() {
            if !b {
                index[i] = interior;
                interior += 1;
            }
        }
        let ndof = 3 * interior;
        if rhs_l2 == 0.0 {
            return Ok(BogovskiiCorrection {
                w: vec![Vector3::zeros(); fine.num_nodes()],
                mesh: fine,
                parent,
                levels: level,
                rhs,
                residual: 0.0,
                constant: 0.0,
            });
        }
        // The constraints sum to zero, so at most n − 1 of them are independent.
        if ndof + 1 < mesh.num_elements() {
            continue;
        }
        let w = solve(&fine, &parent, &index, ndof, &rhs, mesh)?;
        let correction = BogovskiiCorrection {
            w,
            mesh: fine.clone(),
            parent: parent.clone(),
            levels: level,
            rhs: rhs.clone(),
            residual: 0.0,
            constant: 0.0,
        };
        let residual =
            correction.average_divergence(mesh).iter().zip(&rhs).map(|(a, r)| (a - r).abs()).fold(0.0, f64::max);
        last_residual = residual;
        if residual <= opts.tolerance {
            let constant = h1_norm(&correction.mesh, &correction.w)? / rhs_l2;
            return Ok(BogovskiiCorrection { residual, constant, ..correction });
        }
    }
    Err(LabError::BogovskiiInfeasible { levels: opts.max_levels, residual: last_residual })
}

fn solve(
    fine: &Mesh,
    parent: &[usize],
    index: &[usize],
    ndof: usize,
    rhs: &[f64],
    coarse: &Mesh,
) -> Result<Vec<Vector3<f64>>> {
    let nc = coarse.num_elements();
    let interior = ndof / 3;
    let mut k = DMatrix::<f64>::zeros(interior, interior);
    let mut b = [DMatrix::<f64>::zeros(nc, interior), DMatrix::zeros(nc, interior), DMatrix::zeros(nc, interior)];
    for (e, t) in fine.tets().iter().enumerate() {
        let g = &fine.gradient_maps()[e];
        let vol = fine.element_volumes()[e];
        for p in 0..4 {
            let ip = index[t[p]];
            if ip == usize::MAX {
                continue;
            }
            for (c, bc) in b.iter_mut().enumerate() {
                bc[(parent[e], ip)] += vol * g[(c, p)];
            }
            for q in 0..4 {
                let iq = index[t[q]];
                if iq != usize::MAX {
                    k[(ip, iq)] += vol * g.column(p).dot(&g.column(q));
                }
            }
        }
    }
    // The vector Dirichlet energy is the scalar one on each component.
    let target = DVector::from_iterator(nc, rhs.iter().zip(coarse.element_volumes()).map(|(r, v)| r * v));
    let chol = k.cholesky().ok_or_else(|| LabError::Solver("Dirichlet stiffness is not positive definite".into()))?;
    let y: Vec<DMatrix<f64>> = b.iter().map(|bc| chol.solve(&bc.transpose())).collect();
    let schur = b.iter().zip(&y).fold(DMatrix::<f64>::zeros(nc, nc), |acc, (bc, yc)| acc + bc * yc);
    let svd = schur.svd(true, true);
    let cutoff = 1e-12 * svd.singular_values.max();
    let lambda = svd.solve(&target, cutoff).map_err(|e| LabError::Solver(e.to_string()))?;
    let x: Vec<DVector<f64>> = y.iter().map(|yc| yc * &lambda).collect();
    let mut w = vec![Vector3::zeros(); fine.num_nodes()];
    for (node, &i) in index.iter().enumerate() {
        if i != usize::MAX {
            w[node] = Vector3::new(x[0][i], x[1][i], x[2][i]);
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_unit_cube_mesh;

    #[test]
    fn divergence_free_input_needs_no_correction() {
        let mesh = build_unit_cube_mesh(2).unwrap();
        let v = DisplacementField::from_fn(&mesh, |x| Vector3::new(x.y, x.z, x.x));
        let c = bogovskii_correct(&v, &mesh, &BogovskiiOptions::default()).unwrap();
        assert!(c.w.iter().all(|w| *w == Vector3::zeros()));
        let v = DisplacementField::from_fn(&mesh, |x| Vector3::new(x.x, 0.0, 0.0));
        let c = bogovskii_correct(&v, &mesh, &BogovskiiOptions::default()).unwrap();
        assert!(c.w.iter().all(|w| *w == Vector3::zeros()));
    }

    #[test]
    fn corrected_divergence_is_constant() {
        let mesh = build_unit_cube_mesh(2).unwrap();
        let v = DisplacementField::from_fn(&mesh, |x| Vector3::new(x.x * x.x, x.y * x.z, -x.z * x.x));
        let c = bogovskii_correct(&v, &mesh, &BogovskiiOptions::default()).unwrap();
        assert!(c.levels >= 1);
        let div = c.corrected_divergence(&v, &mesh);
        let mean = v.divergence().iter().zip(mesh.element_volumes()).map(|(d, w)| d * w).sum::<f64>();
        for d in div {
            assert!((d - mean).abs() < 1e-9);
        }
        assert_eq!(c.boundary_max(), 0.0);
        assert!(c.constant > 0.0 && c.constant.is_finite());
    }

    #[test]
    fn zero_levels_is_infeasible() {
        let mesh = build_unit_cube_mesh(2).unwrap();
        let v = DisplacementField::from_fn(&mesh, |x| Vector3::new(x.x * x.x, 0.0, 0.0));
        let opts = BogovskiiOptions { max_levels: 0, ..Default::default() };
        assert!(matches!(bogovskii_correct(&v, &mesh, &opts), Err(LabError::BogovskiiInfeasible { .. })));
    }
}
