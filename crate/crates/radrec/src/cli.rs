//! Command-line front end: simulate -> oversample -> reconstruct ->
//! metrics -> benchmark.
//!
//! All randomness enters through `--seed`; there is no wall-clock or OS
//! entropy anywhere, so identical invocations produce byte-identical
//! output files. The seeded commands correspond to replicate 0 of the
//! same seed in the benchmark runner, which makes the four-command chain
//! reproduce `run_scenario` exactly.
//!
//! Exit codes: 0 success, 2 usage or validation errors, 3 I/O and file
//! format errors, 4 numeric failures.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench;
use crate::error::{Error, Result};
use crate::field::{simulate_field, GammaParams, VariogramSpec};
use crate::grid::{read_grid, write_grid};
use crate::kernel::{make_kernel, KernelShape, ResamplingKernel};
use crate::metrics::diff_metrics;
use crate::oversample::{oversample, NoiseModel};
use crate::rng::{RngSpec, StreamPurpose};
use crate::synthesis::reconstruct_detailed;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (rng philox4x64-10)");

#[derive(Parser)]
#[command(name = "radrec", version = VERSION, about = "Radiance-field reconstruction toolkit")]
struct Cli {
    /// Cap worker parallelism (default: all cores). Output never depends
    /// on the thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Kernel selection flags shared by the scanning commands.
#[derive(Args)]
struct KernelFlags {
    /// Kernel side length: 3, 5 or 7.
    #[arg(long)]
    kernel: usize,
    /// Kernel family.
    #[arg(long, value_enum, default_value = "cosine")]
    kernel_shape: Shape,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Shape {
    Cosine,
    Uniform,
}

impl KernelFlags {
    fn build(&self) -> Result<ResamplingKernel> {
        if self.kernel % 2 == 0 || !(3..=7).contains(&self.kernel) {
            return Err(Error::InvalidArgument(format!(
                "--kernel must be 3, 5 or 7, got {}",
                self.kernel
            )));
        }
        let shape = match self.kernel_shape {
            Shape::Cosine => KernelShape::Cosine,
            Shape::Uniform => KernelShape::Uniform,
        };
        make_kernel(shape, self.kernel / 2)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a ground-truth field and write it as RRGRID.
    Simulate {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        /// Variogram range in pixels.
        #[arg(long)]
        radius: f64,
        /// Gamma shape parameter.
        #[arg(long)]
        shape: f64,
        /// Gamma scale parameter.
        #[arg(long)]
        scale: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scan a field grid into a (noisy) observations grid.
    Oversample {
        #[command(flatten)]
        kernel: KernelFlags,
        /// Noise scale multiplying the footprint weights.
        #[arg(long)]
        noise_sd: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct the field behind an observations grid.
    Reconstruct {
        #[command(flatten)]
        kernel: KernelFlags,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write per-pixel synthesis weights as JSON lines.
        #[arg(long)]
        dump_weights: Option<PathBuf>,
    },
    /// Pixel-wise difference metrics between two grids.
    Metrics {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        recon: PathBuf,
        /// Border pixels excluded per side; defaults to the
        /// reconstruction's kernel half-width + 1.
        #[arg(long)]
        exclude: Option<usize>,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario table and write CSV + JSON summaries.
    Benchmark {
        /// JSON array of scenario configurations.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_json: PathBuf,
        /// Override the base seed of every scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Add a uniform-kernel twin after every cosine scenario.
        #[arg(long)]
        uniform_baseline: bool,
    },
}

/// Parse and execute `argv`, returning the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version displays arrive here too; clap encodes
            // the distinction in the exit code.
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.threads {
        Some(n) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("radrec: cannot build a {n}-thread pool: {e}");
                    return 2;
                }
            };
            pool.install(|| dispatch(cli.command))
        }
        None => dispatch(cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("radrec: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            rows,
            cols,
            radius,
            shape,
            scale,
            seed,
            out,
        } => {
            let v = VariogramSpec::new(radius)?;
            let g = GammaParams::new(shape, scale)?;
            let field = simulate_field(rows, cols, v, g, RngSpec::new(seed, StreamPurpose::Field, 0))?;
            write_grid(&field, &out)
        }
        Command::Oversample {
            kernel,
            noise_sd,
            seed,
            input,
            out,
        } => {
            let k = kernel.build()?;
            let noise = NoiseModel::new(noise_sd)?;
            let field = read_grid(&input)?;
            let obs = oversample(&field, &k, noise, RngSpec::new(seed, StreamPurpose::Noise, 0))?;
            write_grid(&obs, &out)
        }
        Command::Reconstruct {
            kernel,
            input,
            out,
            dump_weights,
        } => {
            let k = kernel.build()?;
            let obs = read_grid(&input)?;
            let rec = reconstruct_detailed(&obs, &k, dump_weights.is_some())?;
            if rec.report.regularized_solves > 0 {
                eprintln!(
                    "radrec: {} local solves needed ridge regularization",
                    rec.report.regularized_solves
                );
            }
            if rec.report.degenerate_fallbacks > 0 {
                eprintln!(
                    "radrec: {} pixels used the degenerate-weight fallback",
                    rec.report.degenerate_fallbacks
                );
            }
            for (pixel, why) in &rec.report.pixel_failures {
                eprintln!("radrec: pixel {pixel} fell back to a plain average: {why}");
            }
            if let Some(path) = dump_weights {
                let cols = rec.grid.cols();
                let mut text = String::new();
                for w in rec.weights.as_deref().unwrap_or(&[]) {
                    #[derive(serde::Serialize)]
                    struct Line<'a> {
                        pixel: usize,
                        row: usize,
                        col: usize,
                        gamma: &'a [crate::synthesis::GammaEntry],
                        weights: &'a [f64],
                        degenerate_fallback: bool,
                    }
                    let line = Line {
                        pixel: w.pixel,
                        row: w.pixel / cols,
                        col: w.pixel % cols,
                        gamma: &w.entries,
                        weights: &w.weights,
                        degenerate_fallback: w.degenerate_fallback,
                    };
                    text.push_str(&serde_json::to_string(&line).expect("serializable"));
                    text.push('\n');
                }
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
            write_grid(&rec.grid, &out)
        }
        Command::Metrics {
            truth,
            recon,
            exclude,
            out,
        } => {
            let t = read_grid(&truth)?;
            let r = read_grid(&recon)?;
            let exclude = exclude
                .or_else(|| r.kernel_half_width().map(|h| h + 1))
                .unwrap_or(0);
            let m = diff_metrics(&t, &r, exclude)?;
            let mut text = serde_json::to_string(&m).expect("serializable");
            text.push('\n');
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?,
                None => {
                    std::io::stdout()
                        .write_all(text.as_bytes())
                        .map_err(|e| Error::io("<stdout>", e))?;
                }
            }
            Ok(())
        }
        Command::Benchmark {
            config,
            out_csv,
            out_json,
            seed,
            uniform_baseline,
        } => {
            let mut configs = bench::read_scenarios(&config)?;
            if let Some(seed) = seed {
                for cfg in &mut configs {
                    cfg.base_seed = seed;
                }
            }
            let table = bench::benchmark_table(&configs, uniform_baseline)?;
            for (i, s) in table.iter().enumerate() {
                eprintln!(
                    "scenario {}/{}: {}x{} R={} alpha={:.4} {}{} snr={} -> mean={:.4e} sd={:.4e} skew={:.4e}",
                    i + 1,
                    table.len(),
                    s.config.rows,
                    s.config.cols,
                    s.config.range,
                    s.config.alpha,
                    s.config.kernel_shape.as_str(),
                    2 * s.config.kernel_half_width + 1,
                    s.snr,
                    s.avg_mean,
                    s.avg_sd,
                    s.avg_skewness
                );
            }
            bench::write_csv(&table, &out_csv)?;
            bench::write_json(&table, &out_json)
        }
    }
}

/// Algorithm identifier the `--version` banner advertises; kept in sync
/// with the generator by construction.
pub fn version_banner() -> String {
    format!("radrec {VERSION}")
}
