//! Observation synthesis: kernel-weighted averages with per-weight noise.
//!
//! Each observation is the footprint-weighted average of the truth field
//! plus a sum of independent Gaussian perturbations, one per footprint
//! cell, with standard deviation proportional to that cell's weight.
//! Noise is realized per (observation, cell) pair — not aggregated into
//! one draw per observation — so that the covariance structure of the
//! generative process is exactly the one the synthesis stage assumes and
//! Monte-Carlo tests can exercise it directly. Draws are independent
//! across observations even where footprints overlap.

use crate::error::{Error, Result};
use crate::field::GammaParams;
use crate::grid::{GridKind, ImageGrid};
use crate::kernel::ResamplingKernel;
use crate::rng::RngSpec;

/// Observation noise scale: the constant multiplying footprint weights
/// to give per-cell noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise scale must be non-negative and finite, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    /// Noiseless model.
    pub fn none() -> Self {
        Self { sigma: 0.0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Signal-to-noise ratio of an oversampled image: the Gamma field
/// variance over the squared noise scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSpec {
    pub value: f64,
}

/// SNR of a (field distribution, noise model) pairing. A zero noise
/// scale has no finite SNR and is reported as a distinct error.
pub fn snr(g: GammaParams, noise: NoiseModel) -> Result<SnrSpec> {
    if noise.sigma == 0.0 {
        return Err(Error::InvalidArgument(
            "SNR is infinite for a zero noise scale".into(),
        ));
    }
    Ok(SnrSpec {
        value: g.variance() / (noise.sigma * noise.sigma),
    })
}

/// Scan `field` with `kernel`, producing the observations grid.
///
/// Observation centers range over the pixels whose footprint lies fully
/// inside the field, so the output shape is `(rows - 2h) x (cols - 2h)`.
/// Observation `i` draws its footprint noise from substream `i` of the
/// given stream, in kernel row-major order, making the output
/// independent of evaluation order.
pub fn oversample(
    field: &ImageGrid,
    kernel: &ResamplingKernel,
    noise: NoiseModel,
    spec: RngSpec,
) -> Result<ImageGrid> {
    if field.kind() != GridKind::Field {
        return Err(Error::InvalidArgument(format!(
            "oversample expects a field grid, got {:?}",
            field.kind()
        )));
    }
    let h = kernel.half_width();
    if field.rows() <= 2 * h || field.cols() <= 2 * h {
        return Err(Error::FieldTooSmall {
            rows: field.rows(),
            cols: field.cols(),
            half_width: h,
        });
    }
    let (obs_rows, obs_cols) = (field.rows() - 2 * h, field.cols() - 2 * h);
    let cols = field.cols();
    let hi = h as isize;
    let mut values = Vec::with_capacity(obs_rows * obs_cols);
    for or in 0..obs_rows {
        for oc in 0..obs_cols {
            let i = or * obs_cols + oc;
            let (cr, cc) = (or + h, oc + h);
            let mut rng = spec.substream(i as u64);
            let mut y = 0.0;
            for dr in -hi..=hi {
                for dc in -hi..=hi {
                    let j = (cr as isize + dr) as usize * cols + (cc as isize + dc) as usize;
                    let w = kernel.weight(dr, dc);
                    y += w * field.values()[j];
                    if noise.sigma > 0.0 {
                        y += w * noise.sigma * rng.next_standard_normal();
                    }
                }
            }
            values.push(y);
        }
    }
    ImageGrid::new(obs_rows, obs_cols, GridKind::Observations, Some(h), values)
}
