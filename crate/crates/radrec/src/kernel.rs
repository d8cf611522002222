//! Resampling kernels standing in for the sensor footprint response.
//!
//! The cosine family assigns offset `(dr, dc)` a weight proportional to
//! `cos(pi/(3h) * sqrt(dr^2 + dc^2))`, normalized to unit sum. Because
//! the angular factor shrinks with the half-width, the corner offset
//! `(h, h)` always sits at angle `pi*sqrt(2)/3 < pi/2`, so every weight
//! is strictly positive, and the mid-edge offset `(0, h)` always sits at
//! angle `pi/3`, so its ratio to the center is exactly `cos(pi/3) = 1/2`
//! for every half-width.
//!
//! The uniform family (`1/(2h+1)^2` everywhere) is the comparative
//! baseline used by the benchmark harness.

use crate::error::{Error, Result};

/// Kernel family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelShape {
    Cosine,
    Uniform,
}

impl KernelShape {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelShape::Cosine => "cosine",
            KernelShape::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for KernelShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(KernelShape::Cosine),
            "uniform" => Ok(KernelShape::Uniform),
            other => Err(Error::InvalidArgument(format!(
                "unknown kernel shape {other:?} (expected cosine or uniform)"
            ))),
        }
    }
}

/// A `(2h+1) x (2h+1)` footprint of strictly positive weights summing to
/// one, with 8-fold dihedral symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct ResamplingKernel {
    half_width: usize,
    weights: Vec<f64>,
}

impl ResamplingKernel {
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Side length `2h + 1`.
    pub fn size(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Row-major weights indexed by offsets `(dr, dc)` in `[-h, h]^2`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(dr, dc)`.
    #[inline]
    pub fn weight(&self, dr: isize, dc: isize) -> f64 {
        let h = self.half_width as isize;
        debug_assert!(dr.abs() <= h && dc.abs() <= h);
        self.weights[((dr + h) * (2 * h + 1) + (dc + h)) as usize]
    }
}

fn check_half_width(half_width: usize) -> Result<()> {
    if (1..=3).contains(&half_width) {
        Ok(())
    } else {
        Err(Error::UnsupportedHalfWidth(half_width))
    }
}

/// Cosine kernel of the given half-width (1, 2 or 3).
pub fn cosine_kernel(half_width: usize) -> Result<ResamplingKernel> {
    check_half_width(half_width)?;
    let h = half_width as isize;
    let angle = std::f64::consts::PI / (3.0 * half_width as f64);
    let mut weights = Vec::with_capacity((2 * half_width + 1).pow(2));
    for dr in -h..=h {
        for dc in -h..=h {
            let d = ((dr * dr + dc * dc) as f64).sqrt();
            weights.push((angle * d).cos());
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(ResamplingKernel { half_width, weights })
}

/// Uniform baseline kernel: every entry `1/(2h+1)^2`.
pub fn uniform_kernel(half_width: usize) -> Result<ResamplingKernel> {
    check_half_width(half_width)?;
    let n = (2 * half_width + 1).pow(2);
    Ok(ResamplingKernel {
        half_width,
        weights: vec![1.0 / n as f64; n],
    })
}

/// Kernel of the requested family.
pub fn make_kernel(shape: KernelShape, half_width: usize) -> Result<ResamplingKernel> {
    match shape {
        KernelShape::Cosine => cosine_kernel(half_width),
        KernelShape::Uniform => uniform_kernel(half_width),
    }
}
