//! Pixel-wise difference metrics with border exclusion.

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Moments of the pixel-wise differences (reconstruction minus truth)
/// over a border-excluded window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiffMetrics {
    pub mean: f64,
    /// Sample standard deviation (n-1 divisor).
    pub sd: f64,
    /// Population-moment skewness g1; defined as 0 for a constant
    /// difference field.
    pub skewness: f64,
    pub n_pixels: usize,
}

/// Compare `recon` against `truth` over the window excluding
/// `exclude_border` pixels from every side. Differences are oriented
/// reconstruction minus truth.
pub fn diff_metrics(
    truth: &ImageGrid,
    recon: &ImageGrid,
    exclude_border: usize,
) -> Result<DiffMetrics> {
    if truth.rows() != recon.rows() || truth.cols() != recon.cols() {
        return Err(Error::ShapeMismatch(format!(
            "truth is {}x{}, reconstruction is {}x{}",
            truth.rows(),
            truth.cols(),
            recon.rows(),
            recon.cols()
        )));
    }
    if 2 * exclude_border >= truth.rows().min(truth.cols()) {
        return Err(Error::InvalidArgument(format!(
            "excluding {exclude_border} pixels per side empties a {}x{} grid",
            truth.rows(),
            truth.cols()
        )));
    }
    let cols = truth.cols();
    let mut diffs = Vec::new();
    for r in exclude_border..truth.rows() - exclude_border {
        for c in exclude_border..cols - exclude_border {
            diffs.push(recon.values()[r * cols + c] - truth.values()[r * cols + c]);
        }
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let m2 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    let m3 = diffs.iter().map(|d| (d - mean).powi(3)).sum::<f64>() / n;
    let sd = if diffs.len() > 1 {
        (diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    Ok(DiffMetrics {
        mean,
        sd,
        skewness,
        n_pixels: diffs.len(),
    })
}
