//! Regression synthesis: pooling the many local estimates of each pixel.
//!
//! Every observation whose footprint covers pixel `j` produces its own
//! estimate of `j`. Those estimates share noise (overlapping footprints
//! see the same perturbed cells), so they are pooled with weights taken
//! from the leading eigenvector of their correlation matrix, normalized
//! to unit sum to keep the pooled estimate unbiased.
//!
//! Covariances between local estimates follow from the noise model: for
//! estimates `i` and `i'`, only scoped rows referring to the same
//! underlying observation correlate, and each such row pair contributes
//! the product of scale factors, projection entries, and the summed
//! squared design weights over the shared pixels:
//!
//! ```text
//! cov = sum over {(k, k') | r(i)_k = r(i')_k'} of
//!       phi_k phi'_k' P[j, k] P'[j', k'] * sum_{l in c(i) & c(i')} x[t, l]^2
//! ```
//!
//! in units of the squared noise scale, which cancels in every consumer
//! here. [`CovarianceTable`] precomputes the row-pair structure once per
//! design because reconstruction evaluates it for every covered pixel of
//! every observation pair.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::collections::HashMap;

use crate::design::SparseDesign;
use crate::eigen::leading_eigenvector;
use crate::error::{Error, Result};
use crate::grid::{GridKind, ImageGrid};
use crate::kernel::ResamplingKernel;
use crate::local::{estimate_all, LocalEstimate};

/// Provenance of one entry of a pixel's estimate collection: local
/// estimate `obs`, position `pos` within its scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct GammaEntry {
    pub obs: usize,
    pub pos: usize,
}

/// All local estimates of one pixel, with provenance.
#[derive(Debug, Clone)]
pub struct GammaVector {
    pub pixel: usize,
    pub entries: Vec<GammaEntry>,
    pub values: Vec<f64>,
}

/// Collect the estimates of `pixel` from every observation covering it.
/// `estimates` must be indexed by observation, as produced by
/// [`estimate_all`].
pub fn gamma_vector(
    d: &SparseDesign,
    estimates: &[LocalEstimate],
    pixel: usize,
) -> Result<GammaVector> {
    if estimates.len() != d.n() {
        return Err(Error::ShapeMismatch(format!(
            "{} estimates for a design with {} observations",
            estimates.len(),
            d.n()
        )));
    }
    let cover = d.col_support(pixel)?;
    let mut entries = Vec::with_capacity(cover.len());
    let mut values = Vec::with_capacity(cover.len());
    for &i in cover {
        let pos = estimates[i].scope.position_of(pixel).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "estimate {i} does not cover pixel {pixel}; estimates out of order?"
            ))
        })?;
        entries.push(GammaEntry { obs: i, pos });
        values.push(estimates[i].beta_hat[pos]);
    }
    Ok(GammaVector {
        pixel,
        entries,
        values,
    })
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[x]);
                x += 1;
                y += 1;
            }
        }
    }
    out
}

/// Sum of squared design weights of row `t` over the sorted pixel list.
fn shared_squared_mass(d: &SparseDesign, t: usize, pixels: &[usize]) -> f64 {
    let mut ssq = 0.0;
    let mut pi = 0;
    for &(j, x) in d.row(t).expect("valid design row") {
        while pi < pixels.len() && pixels[pi] < j {
            pi += 1;
        }
        if pi < pixels.len() && pixels[pi] == j {
            ssq += x * x;
        }
    }
    ssq
}

/// Covariance of two local pixel estimates in units of `sigma_sq`, the
/// squared noise scale. The scale cancels in correlations and synthesis
/// weights; the parameter exists so that invariance is testable.
pub fn cross_covariance_scaled(
    a: &LocalEstimate,
    b: &LocalEstimate,
    j_pos: usize,
    jp_pos: usize,
    d: &SparseDesign,
    sigma_sq: f64,
) -> Result<f64> {
    if j_pos >= a.scope.c.len() {
        return Err(Error::IndexOutOfRange {
            what: "scope position",
            index: j_pos,
            len: a.scope.c.len(),
        });
    }
    if jp_pos >= b.scope.c.len() {
        return Err(Error::IndexOutOfRange {
            what: "scope position",
            index: jp_pos,
            len: b.scope.c.len(),
        });
    }
    let shared_pixels = intersect_sorted(&a.scope.c, &b.scope.c);
    if shared_pixels.is_empty() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    let (mut k, mut kp) = (0, 0);
    while k < a.scope.r.len() && kp < b.scope.r.len() {
        match a.scope.r[k].cmp(&b.scope.r[kp]) {
            std::cmp::Ordering::Less => k += 1,
            std::cmp::Ordering::Greater => kp += 1,
            std::cmp::Ordering::Equal => {
                let t = a.scope.r[k];
                let ssq = shared_squared_mass(d, t, &shared_pixels);
                acc += a.scope.phi[k]
                    * b.scope.phi[kp]
                    * a.projection[(j_pos, k)]
                    * b.projection[(jp_pos, kp)]
                    * ssq;
                k += 1;
                kp += 1;
            }
        }
    }
    Ok(acc * sigma_sq)
}

/// Covariance of two local pixel estimates in unit-noise terms.
pub fn cross_covariance(
    a: &LocalEstimate,
    b: &LocalEstimate,
    j_pos: usize,
    jp_pos: usize,
    d: &SparseDesign,
) -> Result<f64> {
    cross_covariance_scaled(a, b, j_pos, jp_pos, d, 1.0)
}

/// Covariance matrix of a pixel's estimate collection, in units of
/// `sigma_sq`.
pub fn covariance_matrix_scaled(
    g: &GammaVector,
    estimates: &[LocalEstimate],
    d: &SparseDesign,
    sigma_sq: f64,
) -> Result<DMatrix<f64>> {
    let n = g.entries.len();
    let mut cov = DMatrix::zeros(n, n);
    for l in 0..n {
        for lp in l..n {
            let (ea, eb) = (g.entries[l], g.entries[lp]);
            let v = cross_covariance_scaled(
                &estimates[ea.obs],
                &estimates[eb.obs],
                ea.pos,
                eb.pos,
                d,
                sigma_sq,
            )?;
            cov[(l, lp)] = v;
            cov[(lp, l)] = v;
        }
    }
    Ok(cov)
}

/// Normalize a covariance matrix to a correlation matrix: unit diagonal,
/// entries clamped to [-1, 1]. Fails on non-positive variances, which a
/// valid design cannot produce.
pub fn correlation_from_covariance(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    let mut sd = Vec::with_capacity(n);
    for l in 0..n {
        let v = cov[(l, l)];
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Numeric(format!(
                "non-positive variance {v} at position {l} of a pixel covariance"
            )));
        }
        sd.push(v.sqrt());
    }
    Ok(DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            1.0
        } else {
            (cov[(a, b)] / (sd[a] * sd[b])).clamp(-1.0, 1.0)
        }
    }))
}

/// Correlation matrix of a pixel's estimate collection. Independent of
/// the noise scale, which cancels in the normalization.
pub fn correlation_matrix(
    g: &GammaVector,
    estimates: &[LocalEstimate],
    d: &SparseDesign,
) -> Result<DMatrix<f64>> {
    correlation_from_covariance(&covariance_matrix_scaled(g, estimates, d, 1.0)?)
}

/// Pooling weights of one pixel.
#[derive(Debug, Clone)]
pub struct SynthesisWeights {
    /// Leading eigenvector of the correlation matrix (or the fallback
    /// direction when degenerate).
    pub eta: DVector<f64>,
    /// `eta` normalized to unit sum.
    pub weights: DVector<f64>,
    /// Set when the eigenvector summed to ~0 and inverse-variance
    /// weights were used instead.
    pub degenerate_fallback: bool,
}

/// Threshold under which the eigenvector sum counts as degenerate.
const DEGENERATE_SUM_TOL: f64 = 1e-9;

/// Pool a pixel's estimates: weights from the leading eigenvector of
/// their correlation matrix, scaled to unit sum. If the eigenvector sum
/// is degenerate, inverse-variance weights (from the covariance
/// diagonal) are substituted and flagged; this keeps the weights summing
/// to one, which the estimate's unbiasedness rides on.
pub fn synthesize(
    g: &GammaVector,
    corr: &DMatrix<f64>,
    variances: &DVector<f64>,
) -> Result<(f64, SynthesisWeights)> {
    let n = g.entries.len();
    if n == 0 {
        return Err(Error::InvalidArgument(format!(
            "pixel {} has no covering estimates",
            g.pixel
        )));
    }
    if corr.nrows() != n || corr.ncols() != n || variances.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "correlation {}x{} / variances {} for {n} estimates",
            corr.nrows(),
            corr.ncols(),
            variances.len()
        )));
    }
    if n == 1 {
        let weights = DVector::from_element(1, 1.0);
        return Ok((
            g.values[0],
            SynthesisWeights {
                eta: weights.clone(),
                weights,
                degenerate_fallback: false,
            },
        ));
    }
    let (_, eta) = leading_eigenvector(corr)?;
    let total: f64 = eta.iter().sum();
    let (weights, eta, degenerate) = if total.abs() > DEGENERATE_SUM_TOL {
        (eta.map(|e| e / total), eta, false)
    } else {
        let inv: Vec<f64> = variances.iter().map(|&v| 1.0 / v).collect();
        let s: f64 = inv.iter().sum();
        let w = DVector::from_iterator(n, inv.iter().map(|&v| v / s));
        (w.clone(), w, true)
    };
    let value = weights
        .iter()
        .zip(&g.values)
        .map(|(w, v)| w * v)
        .sum::<f64>();
    Ok((
        value,
        SynthesisWeights {
            eta,
            weights,
            degenerate_fallback: degenerate,
        },
    ))
}

/// Precomputed covariance structure of all overlapping estimate pairs.
///
/// For a pair `(i, i')` the inner sums of the covariance formula depend
/// only on the pair, not on which pixels are being correlated, so they
/// are computed once: entry `(k, k', m)` holds the scoped row positions
/// and `phi_k phi'_k' * shared squared mass` of one shared observation.
pub struct CovarianceTable {
    pairs: HashMap<(u32, u32), Vec<(u32, u32, f64)>>,
}

impl CovarianceTable {
    /// Build the table for every pair of estimates with overlapping
    /// scopes, in parallel over the first index.
    pub fn build(d: &SparseDesign, estimates: &[LocalEstimate]) -> Self {
        let per_obs: Vec<Vec<((u32, u32), Vec<(u32, u32, f64)>)>> = (0..estimates.len())
            .into_par_iter()
            .map(|i| {
                let a = &estimates[i];
                let mut out = Vec::new();
                // Observations sharing a pixel with i are exactly r(i).
                for &ip in a.scope.r.iter().filter(|&&ip| ip >= i) {
                    let b = &estimates[ip];
                    let shared_pixels = intersect_sorted(&a.scope.c, &b.scope.c);
                    if shared_pixels.is_empty() {
                        continue;
                    }
                    let mut rows = Vec::new();
                    let (mut k, mut kp) = (0, 0);
                    while k < a.scope.r.len() && kp < b.scope.r.len() {
                        match a.scope.r[k].cmp(&b.scope.r[kp]) {
                            std::cmp::Ordering::Less => k += 1,
                            std::cmp::Ordering::Greater => kp += 1,
                            std::cmp::Ordering::Equal => {
                                let t = a.scope.r[k];
                                let ssq = shared_squared_mass(d, t, &shared_pixels);
                                rows.push((
                                    k as u32,
                                    kp as u32,
                                    a.scope.phi[k] * b.scope.phi[kp] * ssq,
                                ));
                                k += 1;
                                kp += 1;
                            }
                        }
                    }
                    out.push(((i as u32, ip as u32), rows));
                }
                out
            })
            .collect();
        let mut pairs = HashMap::new();
        for chunk in per_obs {
            pairs.extend(chunk);
        }
        CovarianceTable { pairs }
    }

    /// Covariance of estimate `(i, j_pos)` with `(ip, jp_pos)` in
    /// unit-noise terms; zero when the scopes do not overlap.
    pub fn covariance(
        &self,
        estimates: &[LocalEstimate],
        i: usize,
        j_pos: usize,
        ip: usize,
        jp_pos: usize,
    ) -> f64 {
        let (a, b, ja, jb, swap) = if i <= ip {
            (i, ip, j_pos, jp_pos, false)
        } else {
            (ip, i, jp_pos, j_pos, true)
        };
        let Some(rows) = self.pairs.get(&(a as u32, b as u32)) else {
            return 0.0;
        };
        let (pa, pb) = (&estimates[a].projection, &estimates[b].projection);
        let mut acc = 0.0;
        for &(k, kp, m) in rows {
            acc += pa[(ja, k as usize)] * pb[(jb, kp as usize)] * m;
        }
        // Symmetric either way; swap only affected which projection rows
        // were read.
        let _ = swap;
        acc
    }
}

/// Per-pixel synthesis record for the optional weight dump.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GammaWeights {
    pub pixel: usize,
    pub entries: Vec<GammaEntry>,
    pub weights: Vec<f64>,
    pub degenerate_fallback: bool,
}

/// Counters and failures accumulated over one reconstruction.
#[derive(Debug, Clone, Default)]
pub struct ReconstructionReport {
    /// Local solves that needed the ridge fallback.
    pub regularized_solves: usize,
    /// Pixels whose eigenvector weights were degenerate.
    pub degenerate_fallbacks: usize,
    /// Pixels that failed outright, with the error text; their value is
    /// the plain average of their estimates.
    pub pixel_failures: Vec<(usize, String)>,
}

/// A reconstructed field with its report and, on request, the synthesis
/// weights of every pixel.
pub struct Reconstruction {
    pub grid: ImageGrid,
    pub report: ReconstructionReport,
    pub weights: Option<Vec<GammaWeights>>,
}

/// Synthesize every pixel of a design from its observation vector.
/// Returns the field values in pixel order plus the report; used by
/// [`reconstruct`] and directly for generic (file-loaded) designs.
pub fn synthesize_all(
    d: &SparseDesign,
    y: &[f64],
    collect_weights: bool,
) -> Result<(Vec<f64>, ReconstructionReport, Option<Vec<GammaWeights>>)> {
    let estimates = estimate_all(d, y)?;
    let table = CovarianceTable::build(d, &estimates);

    struct PixelOut {
        value: f64,
        fallback: bool,
        failure: Option<String>,
        weights: Option<GammaWeights>,
    }

    let pixels: Vec<PixelOut> = (0..d.m())
        .into_par_iter()
        .map(|j| {
            let g = gamma_vector(d, &estimates, j)?;
            let n = g.entries.len();
            let mut cov = DMatrix::zeros(n, n);
            for l in 0..n {
                for lp in l..n {
                    let (ea, eb) = (g.entries[l], g.entries[lp]);
                    let v = table.covariance(&estimates, ea.obs, ea.pos, eb.obs, eb.pos);
                    cov[(l, lp)] = v;
                    cov[(lp, l)] = v;
                }
            }
            let variances = DVector::from_fn(n, |l, _| cov[(l, l)]);
            let synth = correlation_from_covariance(&cov)
                .and_then(|corr| synthesize(&g, &corr, &variances));
            Ok(match synth {
                Ok((value, w)) => PixelOut {
                    value,
                    fallback: w.degenerate_fallback,
                    failure: None,
                    weights: collect_weights.then(|| GammaWeights {
                        pixel: j,
                        entries: g.entries.clone(),
                        weights: w.weights.iter().copied().collect(),
                        degenerate_fallback: w.degenerate_fallback,
                    }),
                },
                Err(e) => {
                    // Keep the image intact: fall back to the plain
                    // average and record the failure.
                    let value = g.values.iter().sum::<f64>() / n as f64;
                    PixelOut {
                        value,
                        fallback: false,
                        failure: Some(e.to_string()),
                        weights: collect_weights.then(|| GammaWeights {
                            pixel: j,
                            entries: g.entries.clone(),
                            weights: vec![1.0 / n as f64; n],
                            degenerate_fallback: false,
                        }),
                    }
                }
            })
        })
        .collect::<Result<_>>()?;

    let mut report = ReconstructionReport {
        regularized_solves: estimates.iter().filter(|e| e.regularized).count(),
        ..Default::default()
    };
    let mut values = Vec::with_capacity(pixels.len());
    let mut weights = collect_weights.then(Vec::new);
    for (j, p) in pixels.into_iter().enumerate() {
        values.push(p.value);
        if p.fallback {
            report.degenerate_fallbacks += 1;
        }
        if let Some(f) = p.failure {
            report.pixel_failures.push((j, f));
        }
        if let (Some(ws), Some(w)) = (weights.as_mut(), p.weights) {
            ws.push(w);
        }
    }
    Ok((values, report, weights))
}

/// Reconstruct the field behind an observations grid.
///
/// The grid's kernel metadata must agree with `kernel`. The output grid
/// has the original field shape `(rows + 2h, cols + 2h)` and carries the
/// kernel half-width. Reconstruction is deterministic; there is no
/// randomness anywhere in the estimator.
pub fn reconstruct(obs: &ImageGrid, kernel: &ResamplingKernel) -> Result<Reconstruction> {
    reconstruct_detailed(obs, kernel, false)
}

/// [`reconstruct`] with optional collection of per-pixel weights.
pub fn reconstruct_detailed(
    obs: &ImageGrid,
    kernel: &ResamplingKernel,
    collect_weights: bool,
) -> Result<Reconstruction> {
    if obs.kind() != GridKind::Observations {
        return Err(Error::InvalidArgument(format!(
            "reconstruct expects an observations grid, got {:?}",
            obs.kind()
        )));
    }
    let h = kernel.half_width();
    if obs.kernel_half_width() != Some(h) {
        return Err(Error::KernelMismatch(format!(
            "grid was produced with kernel half-width {:?}, reconstruction requested {h}",
            obs.kernel_half_width()
        )));
    }
    let (rows, cols) = (obs.rows() + 2 * h, obs.cols() + 2 * h);
    let d = crate::design::build_design(rows, cols, kernel)?;
    let (values, report, weights) = synthesize_all(&d, obs.values(), collect_weights)?;
    let grid = ImageGrid::new(rows, cols, GridKind::Reconstruction, Some(h), values)?;
    Ok(Reconstruction {
        grid,
        report,
        weights,
    })
}
