use nalgebra::{Matrix3, Vector2};

use super::mesh::Mesh;
use crate::error::{LabError, Result};

/// Nodes of the mesh resting on the support plane `x3 = 0`, plus the convex
/// hull of their horizontal positions.
///
/// The continuum contact set is replaced by this nodal set: on a P1 mesh the
/// unilateral constraint becomes one inequality per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSet {
    pub node_indices: Vec<usize>,
    /// Counter-clockwise hull vertices, collinear points removed.
    pub hull_vertices_2d: Vec<Vector2<f64>>,
}

pub const PLANE_TOLERANCE: f64 = 1e-12;

pub fn extract_obstacle(mesh: &Mesh) -> Result<ObstacleSet> {
    let on_boundary = mesh.boundary_node_mask();
    let node_indices: Vec<usize> = mesh
        .nodes()
        .iter()
        .enumerate()
        .filter(|(i, p)| on_boundary[*i] && p.z.abs() <= PLANE_TOLERANCE)
        .map(|(i, _)| i)
        .collect();
    if node_indices.is_empty() {
        return Err(LabError::ObstacleHypothesis);
    }
    let points: Vec<Vector2<f64>> = node_indices.iter().map(|&i| mesh.nodes()[i].xy()).collect();
    Ok(ObstacleSet { hull_vertices_2d: convex_hull(&points), node_indices })
}

fn cross(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a - o).perp(&(b - o))
}

/// Monotone-chain convex hull. Degenerate inputs return one or two points.
pub fn convex_hull(points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let scale = pts.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let eps = 1e-14 * scale * scale;
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vector2<f64>>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= eps {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    if hull.len() < 2 {
        // All points collinear and the chains collapsed; keep the extremes.
        return vec![pts[0], pts[pts.len() - 1]];
    }
    hull
}

impl ObstacleSet {
    /// `min over E of (R x)_3`, attained at a hull vertex since it is affine in x.
    pub fn min_rotated_height(&self, r: &Matrix3<f64>) -> f64 {
        self.hull_vertices_2d.iter().map(|v| r[(2, 0)] * v.x + r[(2, 1)] * v.y).fold(f64::INFINITY, f64::min)
    }

    /// Closed-hull membership with tolerance `tol`.
    pub fn hull_contains(&self, p: &Vector2<f64>, tol: f64) -> bool {
        self.signed_margin(p) >= -tol
    }

    /// Membership in the relative interior of the hull (strict by `tol`).
    pub fn hull_relative_interior(&self, p: &Vector2<f64>, tol: f64) -> bool {
        self.signed_margin(p) > tol
    }

    /// Distance-like margin: positive inside the relative interior, zero on the
    /// relative boundary, negative outside.
    fn signed_margin(&self, p: &Vector2<f64>) -> f64 {
        let h = &self.hull_vertices_2d;
        match h.len() {
            0 => f64::NEG_INFINITY,
            1 => -(p - h[0]).norm(),
            2 => {
                let d = h[1] - h[0];
                let len = d.norm();
                let off = (p - h[0]).perp(&d).abs() / len;
                if off > 0.0 {
                    return -off;
                }
                let t = (p - h[0]).dot(&d) / len;
                t.min(len - t)
            }
            n => (0..n)
                .map(|i| {
                    let a = h[i];
                    let b = h[(i + 1) % n];
                    (b - a).perp(&(p - a)) / (b - a).norm()
                })
                .fold(f64::INFINITY, f64::min),
        }
    }
}
