//! Ground-truth field simulation.
//!
//! Fields are produced in two stages. A zero-mean unit-variance Gaussian
//! field is simulated sequentially in raster order: each pixel is drawn
//! from the Gaussian conditional on every already-simulated pixel closer
//! than the variogram range, with covariances given by the spherical
//! model. The Gaussian values are then pushed through the standard
//! normal CDF and the inverse Gamma CDF, which fixes the image histogram
//! to a Gamma(shape, scale) law while preserving the spatial ranking.
//!
//! A single simulation is inherently sequential; parallelism belongs at
//! the replicate level, where the stream contract of [`crate::rng`]
//! makes results independent of scheduling.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::rng::RngSpec;
use crate::special::{inv_gamma_p, inv_gamma_q, normal_cdf};

/// Spherical variogram specification: the range `R` in pixel units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariogramSpec {
    range: f64,
}

impl VariogramSpec {
    pub fn new(range: f64) -> Result<Self> {
        if !(range > 0.0) || !range.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "variogram range must be positive and finite, got {range}"
            )));
        }
        Ok(Self { range })
    }

    pub fn range(&self) -> f64 {
        self.range
    }
}

/// Gamma marginal parameters (shape alpha, scale lambda).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    shape: f64,
    scale: f64,
}

impl GammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() || !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma parameters must be positive and finite, got shape {shape}, scale {scale}"
            )));
        }
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Distribution mean `alpha * lambda`.
    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    /// Distribution variance `alpha * lambda^2`.
    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }
}

/// Spherical variogram: `3d/2R - d^3/2R^3` inside the range, 1 at and
/// beyond it, 0 at distance zero.
pub fn spherical_variogram(d: f64, v: VariogramSpec) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distance must be non-negative, got {d}"
        )));
    }
    let r = v.range;
    Ok(if d >= r {
        1.0
    } else {
        let t = d / r;
        1.5 * t - 0.5 * t * t * t
    })
}

/// Correlation between pixels at distance `d` under standard-Gaussian
/// marginals: `1 - V(d)`; exactly zero at or beyond the range.
pub fn pixel_correlation(d: f64, v: VariogramSpec) -> Result<f64> {
    Ok(1.0 - spherical_variogram(d, v)?)
}

/// Kriging weights and conditional standard deviation for one neighbor
/// geometry. Interior pixels share the same relative geometry, so these
/// are cached per offset pattern.
struct PatternSolve {
    weights: Vec<f64>,
    cond_sd: f64,
}

/// Jitter ladder for near-singular neighbor covariances.
const JITTERS: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

fn solve_pattern(offsets: &[(i16, i16)], v: VariogramSpec) -> Result<PatternSolve> {
    let n = offsets.len();
    if n == 0 {
        return Ok(PatternSolve {
            weights: Vec::new(),
            cond_sd: 1.0,
        });
    }
    let dist = |a: (i16, i16), b: (i16, i16)| -> f64 {
        let (dr, dc) = ((a.0 - b.0) as f64, (a.1 - b.1) as f64);
        (dr * dr + dc * dc).sqrt()
    };
    let sigma_nz = DVector::from_fn(n, |k, _| {
        let (dr, dc) = (offsets[k].0 as f64, offsets[k].1 as f64);
        pixel_correlation((dr * dr + dc * dc).sqrt(), v).unwrap()
    });
    let base = DMatrix::from_fn(n, n, |a, b| {
        pixel_correlation(dist(offsets[a], offsets[b]), v).unwrap()
    });
    for jitter in JITTERS {
        let mut m = base.clone();
        if jitter > 0.0 {
            for k in 0..n {
                m[(k, k)] += jitter;
            }
        }
        if let Some(chol) = Cholesky::new(m) {
            let w = chol.solve(&sigma_nz);
            let cond_var = 1.0 - sigma_nz.dot(&w);
            // The conditional variance of a unit-variance pixel must stay
            // in (0, 1]; tiny overshoots are rounding, anything else means
            // the factorization was unusable at this jitter level.
            if cond_var > 0.0 && cond_var <= 1.0 + 1e-12 {
                return Ok(PatternSolve {
                    weights: w.as_slice().to_vec(),
                    cond_sd: cond_var.min(1.0).sqrt(),
                });
            }
        }
    }
    Err(Error::Numeric(format!(
        "neighbor covariance not positive definite for a {n}-pixel pattern after jitter escalation"
    )))
}

/// Previously-simulated neighbors of `(r, c)` within the variogram range,
/// as relative offsets in a fixed deterministic order.
fn neighbor_offsets(r: usize, c: usize, cols: usize, v: VariogramSpec) -> Vec<(i16, i16)> {
    let range_sq = v.range * v.range;
    let reach = v.range.ceil() as i16;
    let mut out = Vec::new();
    for dr in -reach..=0 {
        for dc in -reach..=reach {
            // Raster order: rows above, or same row strictly left.
            if dr == 0 && dc >= 0 {
                continue;
            }
            let d2 = (dr as f64) * (dr as f64) + (dc as f64) * (dc as f64);
            if d2 >= range_sq {
                continue;
            }
            let (nr, nc) = (r as isize + dr as isize, c as isize + dc as isize);
            if nr >= 0 && nc >= 0 && (nc as usize) < cols {
                out.push((dr, dc));
            }
        }
    }
    out
}

/// Sequential Gaussian simulation: raster scan from the top-left corner,
/// each pixel drawn from the conditional given all previously simulated
/// pixels strictly within the range. Deterministic given `spec`; pixel
/// `k` consumes exactly one draw from substream `k`.
pub fn simulate_gaussian_field(
    rows: usize,
    cols: usize,
    v: VariogramSpec,
    spec: RngSpec,
) -> Result<ImageGrid> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "field dimensions must be positive, got {rows}x{cols}"
        )));
    }
    let mut cache: HashMap<Vec<(i16, i16)>, PatternSolve> = HashMap::new();
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let offsets = neighbor_offsets(r, c, cols, v);
            let solve = match cache.get(&offsets) {
                Some(s) => s,
                None => {
                    let s = solve_pattern(&offsets, v)?;
                    cache.entry(offsets.clone()).or_insert(s)
                }
            };
            let mut mean = 0.0;
            for (k, &(dr, dc)) in offsets.iter().enumerate() {
                let nr = (r as isize + dr as isize) as usize;
                let nc = (c as isize + dc as isize) as usize;
                mean += solve.weights[k] * values[nr * cols + nc];
            }
            let z = spec.substream((r * cols + c) as u64).next_standard_normal();
            values.push(mean + solve.cond_sd * z);
        }
    }
    ImageGrid::field(rows, cols, values)
}

/// Map a standard Gaussian value to the Gamma(shape, scale) quantile of
/// its percentile. CDF values that saturate in floating point are clamped
/// to [1e-300, 1 - 1e-300] through the complementary tail, so the result
/// is always finite and strictly positive.
pub fn gaussian_to_gamma(z: f64, g: GammaParams) -> f64 {
    assert!(z.is_finite(), "gaussian_to_gamma requires finite input, got {z}");
    let p = normal_cdf(z).max(1e-300);
    if p <= 0.5 {
        g.scale * inv_gamma_p(g.shape, p).expect("clamped percentile is a valid probability")
    } else {
        let q = normal_cdf(-z).max(1e-300);
        g.scale * inv_gamma_q(g.shape, q).expect("clamped percentile is a valid probability")
    }
}

/// Full field pipeline: sequential Gaussian simulation followed by the
/// pixelwise Gamma histogram transform.
pub fn simulate_field(
    rows: usize,
    cols: usize,
    v: VariogramSpec,
    g: GammaParams,
    spec: RngSpec,
) -> Result<ImageGrid> {
    let gaussian = simulate_gaussian_field(rows, cols, v, spec)?;
    let values = gaussian
        .values()
        .iter()
        .map(|&z| gaussian_to_gamma(z, g))
        .collect();
    ImageGrid::field(rows, cols, values)
}
