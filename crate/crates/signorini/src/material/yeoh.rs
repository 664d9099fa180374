//! Yeoh energy `W(F) = Σ c_k (|F|² − 3)^k` and the determinant, with first and
//! second derivatives. Matrices are flattened row-major: entry `(i, j)` sits
//! at position `3 i + j`.

use nalgebra::{Matrix3, SMatrix, SVector};

pub type Vec9 = SVector<f64, 9>;
pub type Mat9 = SMatrix<f64, 9, 9>;

pub fn flatten(m: &Matrix3<f64>) -> Vec9 {
    Vec9::from_fn(|k, _| m[(k / 3, k % 3)])
}

pub fn unflatten(v: &Vec9) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| v[3 * i + j])
}

/// `|F|² − 3`, evaluated as `2 tr A + |A|²` with `A = F − I` so that nearly
/// undeformed states do not lose digits to cancellation.
pub fn first_invariant_excess(f: &Matrix3<f64>) -> f64 {
    let a = f - Matrix3::identity();
    2.0 * a.trace() + a.norm_squared()
}

/// Energy as a polynomial in `g = |F|² − 3`, with its first two derivatives.
pub(crate) fn phi(c: &[f64; 3], g: f64) -> (f64, f64, f64) {
    let value = g * (c[0] + g * (c[1] + g * c[2]));
    let d1 = c[0] + g * (2.0 * c[1] + 3.0 * g * c[2]);
    let d2 = 2.0 * c[1] + 6.0 * g * c[2];
    (value, d1, d2)
}

pub fn energy(c: &[f64; 3], f: &Matrix3<f64>) -> f64 {
    phi(c, first_invariant_excess(f)).0
}

/// `DW(F) = 2 φ'(g) F`.
pub fn gradient(c: &[f64; 3], f: &Matrix3<f64>) -> Matrix3<f64> {
    let (_, d1, _) = phi(c, first_invariant_excess(f));
    f * (2.0 * d1)
}

/// `D²W(F)[H, K] = 4 φ''(g) (F:H)(F:K) + 2 φ'(g) H:K`.
pub fn hessian(c: &[f64; 3], f: &Matrix3<f64>) -> Mat9 {
    let (_, d1, d2) = phi(c, first_invariant_excess(f));
    let v = flatten(f);
    v * v.transpose() * (4.0 * d2) + Mat9::identity() * (2.0 * d1)
}

/// Cofactor matrix, the derivative of `det` at `F`.
pub fn det_gradient(f: &Matrix3<f64>) -> Matrix3<f64> {
    let c0 = f.column(0);
    let c1 = f.column(1);
    let c2 = f.column(2);
    Matrix3::from_columns(&[c1.cross(&c2), c2.cross(&c0), c0.cross(&c1)])
}

const LEVI: [[[f64; 3]; 3]; 3] = {
    let mut e = [[[0.0; 3]; 3]; 3];
    e[0][1][2] = 1.0;
    e[1][2][0] = 1.0;
    e[2][0][1] = 1.0;
    e[0][2][1] = -1.0;
    e[2][1][0] = -1.0;
    e[1][0][2] = -1.0;
    e
};

/// `∂² det / ∂F_ij ∂F_kl = ε_ikm ε_jln F_mn`.
pub fn det_hessian(f: &Matrix3<f64>) -> Mat9 {
    let mut h = Mat9::zeros();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let mut s = 0.0;
                    for m in 0..3 {
                        for n in 0..3 {
                            s += LEVI[i][k][m] * LEVI[j][l][n] * f[(m, n)];
                        }
                    }
                    h[(3 * i + j, 3 * k + l)] = s;
                }
            }
        }
    }
    h
}
