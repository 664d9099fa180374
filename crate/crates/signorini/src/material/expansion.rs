use nalgebra::Matrix3;

use super::{deviator, quadratic_form_qi, yeoh_energy, MaterialModel, StrainTensor};

pub const TAYLOR_STEPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorRow {
    pub h: f64,
    /// `sup_H |h^{-2} W(I + hH + h²K) − Q^I(sym H)| / |H|²`.
    pub remainder: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorTable {
    pub rows: Vec<TaylorRow>,
}

impl TaylorTable {
    /// Remainders do not grow as `h` decreases, up to `noise`.
    pub fn is_nonincreasing(&self, noise: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].remainder <= w[0].remainder + noise)
    }

    pub fn at(&self, h: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.h == h).map(|r| r.remainder)
    }
}

/// Scalar `k` with `det(I + hH + h² k I) = 1`, by Newton's method from `k = 0`.
fn incompressible_correction(h: f64, dir: &Matrix3<f64>) -> f64 {
    let base = Matrix3::identity() + dir * h;
    let h2 = h * h;
    let mut k = 0.0;
    for _ in 0..50 {
        let f = base + Matrix3::identity() * (h2 * k);
        let r = f.determinant() - 1.0;
        if r.abs() <= 1e-15 {
            break;
        }
        let slope = h2 * super::yeoh::det_gradient(&f).trace();
        k -= r / slope;
    }
    k
}

/// The point `I + hH + h²K` on the unit-determinant manifold used by the table.
pub fn taylor_probe_gradient(h: f64, dir: &Matrix3<f64>) -> Matrix3<f64> {
    let k = incompressible_correction(h, dir);
    Matrix3::identity() + dir * h + Matrix3::identity() * (h * h * k)
}

/// Tabulates the empirical modulus of the second-order expansion along
/// incompressible paths. Probes are made trace-free before use.
pub fn verify_taylor_remainder(m: &MaterialModel, probes: &[Matrix3<f64>]) -> TaylorTable {
    let rows = TAYLOR_STEPS
        .iter()
        .map(|&h| {
            let remainder = probes
                .iter()
                .map(deviator)
                .filter(|p| p.norm_squared() > 0.0)
                .map(|dir| {
                    let f = taylor_probe_gradient(h, &dir);
                    let q = quadratic_form_qi(&StrainTensor::sym(&dir), m).value().unwrap_or(f64::INFINITY);
                    (yeoh_energy(&f, m) / (h * h) - q).abs() / dir.norm_squared()
                })
                .fold(0.0, f64::max);
            TaylorRow { h, remainder }
        })
        .collect();
    TaylorTable { rows }
}

/// Frobenius distance from `F` (with `det F > 0`) to the rotation group.
pub fn distance_to_so3(f: &Matrix3<f64>) -> f64 {
    let svd = f.svd(false, false);
    let mut s = svd.singular_values;
    if f.determinant() < 0.0 {
        // The nearest rotation flips the weakest direction.
        let i = s.imin();
        s[i] = -s[i];
    }
    s.iter().map(|&x| (x - 1.0).powi(2)).sum::<f64>().sqrt()
}

/// Largest `C` with `W(F) ≥ C d(F, SO(3))²` over the samples (unit-determinant
/// samples are assumed; others are skipped).
pub fn coercivity_constant(m: &MaterialModel, samples: &[Matrix3<f64>]) -> f64 {
    samples
        .iter()
        .filter(|f| (f.determinant() - 1.0).abs() <= 1e-9)
        .filter_map(|f| {
            let d = distance_to_so3(f);
            (d > 1e-8).then(|| yeoh_energy(f, m) / (d * d))
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn probes(seed: u64, n: usize) -> Vec<Matrix3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn correction_restores_unit_determinant() {
        for p in probes(3, 20) {
            let dir = deviator(&p);
            for h in TAYLOR_STEPS {
                let f = taylor_probe_gradient(h, &dir);
                assert!((f.determinant() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn table_decreases_and_is_small() {
        let m = MaterialModel::yeoh(1.0, 1.0, 1.0).unwrap();
        let t = verify_taylor_remainder(&m, &probes(7, 50));
        assert!(t.is_nonincreasing(1e-7), "{t:?}");
        assert!(t.at(1e-4).unwrap() <= 1e-3);
    }

    #[test]
    fn zero_probe_contributes_nothing() {
        let m = MaterialModel::yeoh(1.0, 1.0, 1.0).unwrap();
        let t = verify_taylor_remainder(&m, &[Matrix3::zeros()]);
        assert!(t.rows.iter().all(|r| r.remainder == 0.0));
    }

    #[test]
    fn neo_hookean_remainder_is_first_order() {
        let m = MaterialModel::yeoh(1.0, 0.0, 0.0).unwrap();
        let t = verify_taylor_remainder(&m, &probes(9, 30));
        for w in t.rows.windows(2) {
            let ratio = w[0].remainder / w[1].remainder;
            assert!(ratio > 5.0 && ratio < 20.0, "{t:?}");
        }
    }

    #[test]
    fn coercivity_constant_is_positive() {
        let m = MaterialModel::yeoh(1.0, 0.2, 0.1).unwrap();
        let samples: Vec<_> = probes(13, 200)
            .into_iter()
            .map(|p| Matrix3::identity() + p * 0.5)
            .filter(|f| f.determinant() > 0.05)
            .map(|f| f / f.determinant().cbrt())
            .collect();
        let c = coercivity_constant(&m, &samples);
        assert!(c > 0.0 && c.is_finite());
    }

    #[test]
    fn distance_of_rotation_is_zero() {
        let r = *nalgebra::Rotation3::from_euler_angles(0.3, -0.2, 1.1).matrix();
        assert!(distance_to_so3(&r) < 1e-12);
        assert!((distance_to_so3(&(r * 2.0)) - 3f64.sqrt()).abs() < 1e-12);
    }
}
