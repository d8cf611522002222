//! Regression decomposition: per-observation local weighted least squares.
//!
//! Solving the full observation system jointly ties every pixel to every
//! observation; almost all of those couplings carry no information and
//! make the joint solve fragile. Instead, one small regression is set up
//! per observation `i` over its own footprint:
//!
//! - `c(i)` — the pixels under footprint `i` (the columns of row `i`);
//! - `r(i)` — every observation whose footprint touches one of those
//!   pixels (the rows intersecting `c(i)`);
//! - `phi`  — per-row scale factors restoring unit row sums after the
//!   out-of-scope pixels are dropped, `1 / (in-scope mass)`.
//!
//! The scaled system is solved by weighted least squares with diagonal
//! weights inversely proportional to each scaled row's noise variance.
//! The projection matrix taking scoped observations to the estimate is
//! materialized because the synthesis stage needs its entries.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::design::SparseDesign;
use crate::error::{Error, Result};

/// The index sets and scale factors of one local regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalScope {
    /// Observation this scope belongs to.
    pub obs: usize,
    /// Pixels in scope, sorted ascending.
    pub c: Vec<usize>,
    /// Observations used by the regression, sorted ascending; contains
    /// `obs`.
    pub r: Vec<usize>,
    /// Scale factor per entry of `r`; 1 exactly for rows fully inside
    /// the scope (in particular for `obs` itself), > 1 otherwise.
    pub phi: Vec<f64>,
}

impl LocalScope {
    /// Position of pixel `j` within `c`, if covered.
    pub fn position_of(&self, j: usize) -> Option<usize> {
        self.c.binary_search(&j).ok()
    }
}

/// Result of one local solve.
#[derive(Debug, Clone)]
pub struct LocalEstimate {
    pub scope: LocalScope,
    /// Estimated radiances, aligned with `scope.c`.
    pub beta_hat: DVector<f64>,
    /// `|c| x |r|` projection: `beta_hat = projection * y_scope`.
    pub projection: DMatrix<f64>,
    /// True when the ridge fallback had to regularize a rank-deficient
    /// system; never expected for footprint designs.
    pub regularized: bool,
}

/// In-scope mass and full-containment flag of design row `row` against
/// the sorted pixel list `c`.
fn in_scope_mass(row: &[(usize, f64)], c: &[usize]) -> (f64, bool) {
    let mut mass = 0.0;
    let mut contained = true;
    let mut ci = 0;
    for &(j, x) in row {
        while ci < c.len() && c[ci] < j {
            ci += 1;
        }
        if ci < c.len() && c[ci] == j {
            mass += x;
        } else {
            contained = false;
        }
    }
    (mass, contained)
}

/// Extract the scope of observation `i`: its pixel set, the observation
/// set intersecting it, and the unit-sum scale factors.
pub fn local_scope(d: &SparseDesign, i: usize) -> Result<LocalScope> {
    let c = d.row_support(i)?;
    let mut r: Vec<usize> = Vec::new();
    for &j in &c {
        r.extend_from_slice(d.col_support(j)?);
    }
    r.sort_unstable();
    r.dedup();

    let mut phi = Vec::with_capacity(r.len());
    for &k in &r {
        let (mass, contained) = in_scope_mass(d.row(k)?, &c);
        if !(mass > 0.0) {
            return Err(Error::Numeric(format!(
                "row {k} has zero in-scope mass for the scope of observation {i}"
            )));
        }
        // Rows fully inside the scope need no correction; forcing the
        // factor to 1 keeps the estimator's own row exact.
        phi.push(if contained { 1.0 } else { 1.0 / mass });
    }
    Ok(LocalScope { obs: i, c, r, phi })
}

/// Dense `|r| x |c|` scaled design of a scope: entry `(k, l)` is
/// `phi_k * x[r_k, c_l]`, giving every row unit sum.
pub fn scaled_design(d: &SparseDesign, s: &LocalScope) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(s.r.len(), s.c.len());
    for (k, &row_id) in s.r.iter().enumerate() {
        let row = d.row(row_id).expect("scope rows are valid design rows");
        let mut ci = 0;
        for &(j, w) in row {
            while ci < s.c.len() && s.c[ci] < j {
                ci += 1;
            }
            if ci < s.c.len() && s.c[ci] == j {
                x[(k, ci)] = s.phi[k] * w;
            }
        }
    }
    x
}

/// Diagonal WLS weights of a scope, one per row of the scaled design:
/// `1 / (phi_k^2 * sum of squared in-scope weights)`, in unit-noise
/// terms. The noise scale cancels everywhere downstream.
pub fn weight_matrix(d: &SparseDesign, s: &LocalScope) -> DVector<f64> {
    DVector::from_iterator(
        s.r.len(),
        s.r.iter().zip(&s.phi).map(|(&k, &phi)| {
            let row = d.row(k).expect("scope rows are valid design rows");
            let mut ssq = 0.0;
            let mut ci = 0;
            for &(j, x) in row {
                while ci < s.c.len() && s.c[ci] < j {
                    ci += 1;
                }
                if ci < s.c.len() && s.c[ci] == j {
                    ssq += x * x;
                }
            }
            assert!(ssq > 0.0, "scope rows always intersect the scope");
            1.0 / (phi * phi * ssq)
        }),
    )
}

/// Relative threshold under which an R diagonal counts as rank collapse.
const RANK_TOL: f64 = 1e-12;

/// Estimate evaluation. For unit-row-sum designs the exact projection
/// satisfies `P 1 = 1`, so the estimate is evaluated about the scoped
/// mean: `beta = mean + P (y - mean)`. This is algebraically identical
/// to `P y` but reproduces constant scenes exactly in floating point,
/// where corner scopes condition `P` badly enough (entries up to ~1e7
/// for the 7x7 kernel) that the plain product loses ~1e-8.
fn evaluate(projection: &DMatrix<f64>, x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let nr = x.nrows();
    let unit_rows = (0..nr).all(|k| (x.row(k).sum() - 1.0).abs() <= 1e-9);
    if !unit_rows {
        return projection * y;
    }
    let mean = y.sum() / nr as f64;
    let centered = y.map(|v| v - mean);
    let mut beta = projection * centered;
    beta.apply(|b| *b += mean);
    beta
}

/// Solve one scoped WLS problem: minimize `|W^(1/2) (y - X beta)|^2`.
///
/// The solve factorizes `W^(1/2) X` by QR rather than forming the normal
/// equations. If the system is rank-deficient, a ridge fallback adds
/// `1e-10 * trace/|c|` to the normal-equation diagonal and the result is
/// flagged `regularized`. `beta_hat` equals `projection * y_scope` up to
/// the conditioning floor of the scope (see [`evaluate`]).
pub fn solve_local(
    scope: LocalScope,
    x: &DMatrix<f64>,
    w: &DVector<f64>,
    y_scope: &DVector<f64>,
) -> Result<LocalEstimate> {
    let (nr, nc) = x.shape();
    assert_eq!(nr, w.len());
    assert_eq!(nr, y_scope.len());
    let sqrt_w = w.map(f64::sqrt);

    if nr >= nc {
        let mut a = x.clone();
        for (k, mut row) in a.row_iter_mut().enumerate() {
            row *= sqrt_w[k];
        }
        let qr = a.qr();
        let r = qr.r();
        let diag_max = (0..nc).map(|l| r[(l, l)].abs()).fold(0.0, f64::max);
        let diag_min = (0..nc).map(|l| r[(l, l)].abs()).fold(f64::INFINITY, f64::min);
        if diag_min > RANK_TOL * diag_max {
            // projection = R^-1 Q^T W^(1/2)
            let mut qtw = qr.q().transpose();
            for (col, mut column) in qtw.column_iter_mut().enumerate() {
                column *= sqrt_w[col];
            }
            let rough = r
                .solve_upper_triangular(&qtw)
                .ok_or_else(|| Error::Numeric("upper-triangular solve failed".into()))?;
            // Newton-Schulz passes square the residual of P X = I away,
            // down to the evaluation floor.
            let mut projection = rough;
            for _ in 0..2 {
                let residual = DMatrix::identity(nc, nc) - &projection * x;
                projection += residual * &projection;
            }
            let beta_hat = evaluate(&projection, x, y_scope);
            return Ok(LocalEstimate {
                scope,
                beta_hat,
                projection,
                regularized: false,
            });
        }
    }

    // Ridge fallback for rank-deficient scopes.
    let mut xtw = x.transpose();
    for (col, mut column) in xtw.column_iter_mut().enumerate() {
        column *= w[col];
    }
    let mut gram = &xtw * x;
    let jitter = 1e-10 * gram.trace() / nc as f64;
    for l in 0..nc {
        gram[(l, l)] += jitter;
    }
    let chol = nalgebra::Cholesky::new(gram).ok_or_else(|| {
        Error::Numeric(format!(
            "normal equations singular for observation {} even after ridge jitter",
            scope.obs
        ))
    })?;
    let projection = chol.solve(&xtw);
    let beta_hat = evaluate(&projection, x, y_scope);
    Ok(LocalEstimate {
        scope,
        beta_hat,
        projection,
        regularized: true,
    })
}

/// Scope, scale, weight and solve observation `i` against the full
/// observation vector `y`.
pub fn local_estimate(d: &SparseDesign, i: usize, y: &[f64]) -> Result<LocalEstimate> {
    if y.len() != d.n() {
        return Err(Error::ShapeMismatch(format!(
            "observation vector has length {}, design has {} rows",
            y.len(),
            d.n()
        )));
    }
    let scope = local_scope(d, i)?;
    let x = scaled_design(d, &scope);
    let w = weight_matrix(d, &scope);
    let y_scope = DVector::from_iterator(scope.r.len(), scope.r.iter().map(|&k| y[k]));
    solve_local(scope, &x, &w, &y_scope)
}

/// All local estimates of a design, solved in parallel over observations.
pub fn estimate_all(d: &SparseDesign, y: &[f64]) -> Result<Vec<LocalEstimate>> {
    if y.len() != d.n() {
        return Err(Error::ShapeMismatch(format!(
            "observation vector has length {}, design has {} rows",
            y.len(),
            d.n()
        )));
    }
    (0..d.n())
        .into_par_iter()
        .map(|i| local_estimate(d, i, y))
        .collect()
}
