//! Scenario benchmark harness: simulate, oversample, reconstruct and
//! measure over replicate batches, with CSV/JSON table output.
//!
//! Seeds derive from (base_seed, purpose, replicate), so two scenarios
//! sharing a base seed see identical truth fields and identical noise
//! draws wherever their parameters agree — cosine/uniform baseline pairs
//! are compared on exactly the same inputs, which strips most of the
//! Monte-Carlo variance out of the comparison.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{simulate_field, GammaParams, VariogramSpec};
use crate::grid::ImageGrid;
use crate::kernel::{make_kernel, KernelShape};
use crate::metrics::{diff_metrics, DiffMetrics};
use crate::oversample::{oversample, NoiseModel};
use crate::rng::{RngSpec, StreamPurpose};
use crate::synthesis::reconstruct;

/// One cell of the benchmark grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioConfig {
    pub rows: usize,
    pub cols: usize,
    #[serde(rename = "R")]
    pub range: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub kernel_half_width: usize,
    pub kernel_shape: KernelShape,
    pub noise_sd: f64,
    pub replicates: usize,
    pub base_seed: u64,
}

impl ScenarioConfig {
    fn validate(&self) -> Result<()> {
        VariogramSpec::new(self.range)?;
        GammaParams::new(self.alpha, self.lambda)?;
        NoiseModel::new(self.noise_sd)?;
        make_kernel(self.kernel_shape, self.kernel_half_width)?;
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be >= 1".into()));
        }
        if self.rows <= 2 * self.kernel_half_width || self.cols <= 2 * self.kernel_half_width {
            return Err(Error::FieldTooSmall {
                rows: self.rows,
                cols: self.cols,
                half_width: self.kernel_half_width,
            });
        }
        let exclude = self.kernel_half_width + 1;
        if 2 * exclude >= self.rows.min(self.cols) {
            return Err(Error::InvalidArgument(format!(
                "{}x{} grid leaves no interior after excluding {exclude} border pixels",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Signal-to-noise ratio of the cell; infinite when noiseless.
    pub fn snr(&self) -> f64 {
        let var = self.alpha * self.lambda * self.lambda;
        if self.noise_sd > 0.0 {
            var / (self.noise_sd * self.noise_sd)
        } else {
            f64::INFINITY
        }
    }
}

/// Averaged metrics of one scenario, with the per-replicate values.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MetricsSummary {
    pub config: ScenarioConfig,
    pub snr: f64,
    pub avg_mean: f64,
    pub avg_sd: f64,
    pub avg_skewness: f64,
    pub replicate_metrics: Vec<DiffMetrics>,
}

/// Run every replicate of a scenario and average the difference metrics.
///
/// Replicate `k` simulates its field from stream (base_seed, field, k)
/// and its observation noise from (base_seed, noise, k); the border
/// exclusion is `kernel_half_width + 1`. Replicates run in parallel;
/// results are aggregated in replicate order, so the output is
/// independent of scheduling.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsSummary> {
    run_scenario_on_fields(cfg, None)
}

/// [`run_scenario`] with an optional fixed truth field standing in for
/// the simulator (a test hook: exactness checks want constant scenes).
pub fn run_scenario_on_fields(
    cfg: &ScenarioConfig,
    fixed_field: Option<&ImageGrid>,
) -> Result<MetricsSummary> {
    cfg.validate()?;
    let kernel = make_kernel(cfg.kernel_shape, cfg.kernel_half_width)?;
    let v = VariogramSpec::new(cfg.range)?;
    let g = GammaParams::new(cfg.alpha, cfg.lambda)?;
    let noise = NoiseModel::new(cfg.noise_sd)?;
    let exclude = cfg.kernel_half_width + 1;

    let metrics: Vec<DiffMetrics> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|k| {
            let field = match fixed_field {
                Some(f) => f.clone(),
                None => simulate_field(
                    cfg.rows,
                    cfg.cols,
                    v,
                    g,
                    RngSpec::new(cfg.base_seed, StreamPurpose::Field, k),
                )?,
            };
            let obs = oversample(
                &field,
                &kernel,
                noise,
                RngSpec::new(cfg.base_seed, StreamPurpose::Noise, k),
            )?;
            let rec = reconstruct(&obs, &kernel).map_err(|e| {
                Error::Numeric(format!("replicate {k}: reconstruction failed: {e}"))
            })?;
            diff_metrics(&field, &rec.grid, exclude)
        })
        .collect::<Result<_>>()?;

    let n = metrics.len() as f64;
    Ok(MetricsSummary {
        config: cfg.clone(),
        snr: cfg.snr(),
        avg_mean: metrics.iter().map(|m| m.mean).sum::<f64>() / n,
        avg_sd: metrics.iter().map(|m| m.sd).sum::<f64>() / n,
        avg_skewness: metrics.iter().map(|m| m.skewness).sum::<f64>() / n,
        replicate_metrics: metrics,
    })
}

/// Run a list of scenarios in order. With `uniform_baseline`, every
/// cosine scenario is followed by its uniform-kernel twin sharing the
/// same base seed (hence the same fields and noise draws).
pub fn benchmark_table(
    configs: &[ScenarioConfig],
    uniform_baseline: bool,
) -> Result<Vec<MetricsSummary>> {
    if configs.is_empty() {
        return Err(Error::InvalidArgument("no scenarios given".into()));
    }
    let mut out = Vec::new();
    for cfg in configs {
        out.push(run_scenario(cfg)?);
        if uniform_baseline && cfg.kernel_shape == KernelShape::Cosine {
            let mut twin = cfg.clone();
            twin.kernel_shape = KernelShape::Uniform;
            out.push(run_scenario(&twin)?);
        }
    }
    Ok(out)
}

/// CSV rendering of a summary table; one row per scenario, kernel
/// reported as its side length.
pub fn render_csv(summaries: &[MetricsSummary]) -> String {
    let mut out = String::from(
        "rows,cols,R,alpha,lambda,kernel,shape,noise_sd,snr,replicates,avg_mean,avg_sd,avg_skewness\n",
    );
    for s in summaries {
        let c = &s.config;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.rows,
            c.cols,
            c.range,
            c.alpha,
            c.lambda,
            2 * c.kernel_half_width + 1,
            c.kernel_shape.as_str(),
            c.noise_sd,
            s.snr,
            c.replicates,
            s.avg_mean,
            s.avg_sd,
            s.avg_skewness
        );
    }
    out
}

/// Write the CSV table.
pub fn write_csv(summaries: &[MetricsSummary], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_csv(summaries)).map_err(|e| Error::io(path, e))
}

/// Write the JSON mirror, including per-replicate metrics.
pub fn write_json(summaries: &[MetricsSummary], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(summaries)
        .map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Load a scenario list from a JSON array, validating every entry.
pub fn read_scenarios(path: impl AsRef<Path>) -> Result<Vec<ScenarioConfig>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let configs: Vec<ScenarioConfig> = serde_json::from_str(&text)
        .map_err(|e| Error::format(path, e.line(), e.to_string()))?;
    for cfg in &configs {
        cfg.validate()?;
    }
    Ok(configs)
}
