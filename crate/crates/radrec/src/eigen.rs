//! Jacobi eigensolver for the small symmetric correlation matrices of
//! the synthesis stage (order at most 49).
//!
//! Cyclic sweeps of plane rotations annihilate off-diagonal entries until
//! their accumulated magnitude drops below tolerance. Chosen over power
//! iteration because the degenerate tie-break below needs the full
//! eigensystem, and determinism matters more than speed at this size.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SWEEP_CAP: usize = 64;
const OFF_DIAG_TOL: f64 = 1e-12;
/// Eigenvalues within this relative distance of the maximum count as
/// tied; kept below the residual contract of [`leading_eigenvector`].
const TIE_TOL: f64 = 1e-11;

/// Full eigensystem of a symmetric matrix: eigenvalues with their
/// eigenvectors as matching columns, sorted by descending eigenvalue.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "eigensolver requires a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    for a in 0..n {
        for b in 0..a {
            if (m[(a, b)] - m[(b, a)]).abs() > 1e-12 * m[(a, b)].abs().max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "eigensolver requires a symmetric matrix, entries ({a},{b}) differ"
                )));
            }
        }
        if !m[(a, a)].is_finite() {
            return Err(Error::Numeric("non-finite matrix entry".into()));
        }
    }

    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);

    for _sweep in 0..SWEEP_CAP {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)] * a[(p, q)])
            .sum::<f64>()
            .sqrt();
        if off <= OFF_DIAG_TOL * scale {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&x, &y| a[(y, y)].partial_cmp(&a[(x, x)]).unwrap());
            let values = DVector::from_iterator(n, order.iter().map(|&k| a[(k, k)]));
            let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
            return Ok((values, vectors));
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = 0.5 * (a[(q, q)] - a[(p, p)]) / apq;
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let s = theta.signum() * (theta.abs() + (1.0 + theta * theta).sqrt());
                    1.0 / s
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let app = a[(p, p)];
                let aqq = a[(q, q)];
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp - s * (akq + tau * akp);
                        a[(p, k)] = a[(k, p)];
                        a[(k, q)] = akq + s * (akp - tau * akq);
                        a[(q, k)] = a[(k, q)];
                    }
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp - s * (vkq + tau * vkp);
                    v[(k, q)] = vkq + s * (vkp - tau * vkq);
                }
            }
        }
    }
    Err(Error::Numeric(format!(
        "Jacobi sweeps did not converge for a {n}x{n} matrix (scale {scale:.3e})"
    )))
}

/// Largest eigenvalue and an associated unit eigenvector.
///
/// Ties (eigenvalues within [`TIE_TOL`] of the maximum, as for an
/// identity correlation matrix) resolve to the normalized projection of
/// the constant vector `1/sqrt(n)` onto the tied eigenspace, which is
/// deterministic and symmetric under permutations. If that projection
/// vanishes the first tied eigenvector is returned instead. The sign is
/// fixed so the entries sum positive whenever the sum is meaningfully
/// nonzero. Residual contract: `|M v - lambda v| <= 1e-10 |M|`.
pub fn leading_eigenvector(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let (values, vectors) = symmetric_eigen(m)?;
    let lambda = values[0];
    let tie = TIE_TOL * lambda.abs().max(1.0);
    let tied = (0..n).take_while(|&k| lambda - values[k] <= tie).count();

    let uniform = 1.0 / (n as f64).sqrt();
    let mut projected = DVector::zeros(n);
    for k in 0..tied {
        let coeff = vectors.column(k).iter().sum::<f64>() * uniform;
        projected.axpy(coeff, &vectors.column(k).into_owned(), 1.0);
    }
    let mut vector = if projected.norm() > 1e-9 {
        projected.normalize()
    } else {
        vectors.column(0).into_owned()
    };
    let total: f64 = vector.iter().sum();
    if total.abs() > 1e-9 && total < 0.0 {
        vector.neg_mut();
    }
    Ok((lambda, vector))
}
