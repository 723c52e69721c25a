//! Small dense symmetric eigensolver (cyclic Jacobi).

use crate::error::{Error, Result};

pub const JACOBI_TOL: f64 = 1e-10;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi on a row-major `n × n` symmetric matrix.
///
/// Sweeps until the off-diagonal Frobenius norm drops below [`JACOBI_TOL`].
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> Result<SymEigen> {
    if matrix.len() != n * n {
        return Err(Error::Dimension(format!("expected {n}x{n} matrix, got {} entries", matrix.len())));
    }
    let mut a = matrix.to_vec();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = avg;
            a[j * n + i] = avg;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a, n);
        if off < JACOBI_TOL {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&col| (0..n).map(|k| v[k * n + col]).collect())
        .collect();
    Ok(SymEigen {
        values,
        vectors,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Real roots of the characteristic polynomial of a symmetric 3x3 matrix,
    /// by the trigonometric closed form for cubics with three real roots.
    fn char_poly_roots(m: &[f64; 9]) -> [f64; 3] {
        let (a, b, c) = (m[0], m[4], m[8]);
        let (d, e, f) = (m[1], m[5], m[2]);
        // det(λI - M) = λ³ + p2 λ² + p1 λ + p0
        let p2 = -(a + b + c);
        let p1 = a * b + a * c + b * c - d * d - e * e - f * f;
        let p0 = -(a * b * c + 2.0 * d * e * f - a * e * e - b * f * f - c * d * d);
        let shift = -p2 / 3.0;
        let p = p1 - p2 * p2 / 3.0;
        let q = 2.0 * p2.powi(3) / 27.0 - p2 * p1 / 3.0 + p0;
        let mut roots = if p.abs() < 1e-300 {
            [shift; 3]
        } else {
            let r = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
            let phi = arg.acos() / 3.0;
            let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
            [0, 1, 2].map(|k| r * (phi - two_pi_3 * k as f64).cos() + shift)
        };
        roots.sort_by(f64::total_cmp);
        roots
    }

    proptest! {
        #[test]
        fn jacobi_matches_characteristic_roots(vals in prop::array::uniform6(-3.0f64..3.0)) {
            let [a, b, c, d, e, f] = vals;
            let m = [a, d, f, d, b, e, f, e, c];
            let eig = jacobi_eigen(&m, 3).unwrap();
            let roots = char_poly_roots(&m);
            for k in 0..3 {
                prop_assert!((eig.values[k] - roots[k]).abs() < 1e-8,
                    "{:?} vs {:?}", eig.values, roots);
            }
        }
    }

    #[test]
    fn eigenvectors_satisfy_definition() {
        let n = 5;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = 1.0 / (1.0 + i as f64 + j as f64);
            }
        }
        let eig = jacobi_eigen(&m, n).unwrap();
        for (lam, v) in eig.values.iter().zip(&eig.vectors) {
            for i in 0..n {
                let mv: f64 = (0..n).map(|j| m[i * n + j] * v[j]).sum();
                assert!((mv - lam * v[i]).abs() < 1e-9);
            }
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_wrong_size() {
        assert!(jacobi_eigen(&[1.0, 2.0], 2).is_err());
    }
}
