//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured numbers (visible with `--nocapture`).
//!
//! Every criterion body runs inside an explicit thread pool and returns
//! its output artifacts as named byte blobs. The determinism criterion
//! replays each body on 1-thread and 8-thread pools and compares the
//! artifacts byte for byte; bodies are memoized per thread count so the
//! heavy Monte-Carlo criteria run exactly twice overall.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use radrec::bench::{run_scenario, write_csv, write_json, ScenarioConfig};
use radrec::design::build_design;
use radrec::field::{simulate_field, GammaParams, VariogramSpec};
use radrec::grid::ImageGrid;
use radrec::kernel::{cosine_kernel, make_kernel, uniform_kernel, KernelShape};
use radrec::local::{estimate_all, local_estimate, solve_local, LocalScope};
use radrec::oversample::{oversample, NoiseModel};
use radrec::rng::{RngSpec, StreamPurpose};
use radrec::synthesis::{
    correlation_from_covariance, covariance_matrix_scaled, cross_covariance, gamma_vector,
    reconstruct, synthesize,
};

type Artifacts = Vec<(String, Vec<u8>)>;

fn in_pool<F: FnOnce() -> Artifacts + Send>(threads: usize, f: F) -> Artifacts {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("pool")
        .install(f)
}

/// Run (or fetch) a criterion body at a given thread count.
fn artifacts(name: &'static str, threads: usize, body: fn() -> Artifacts) -> Arc<Artifacts> {
    static CACHE: OnceLock<Mutex<HashMap<(&'static str, usize), Arc<Artifacts>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&(name, threads)) {
        return hit.clone();
    }
    let result = Arc::new(in_pool(threads, body));
    cache
        .lock()
        .unwrap()
        .entry((name, threads))
        .or_insert(result)
        .clone()
}

fn render_floats(values: &[f64]) -> Vec<u8> {
    let mut out = String::new();
    for v in values {
        out.push_str(&format!("{v}\n"));
    }
    out.into_bytes()
}

fn grid_bytes(g: &ImageGrid) -> Vec<u8> {
    render_floats(g.values())
}

// --- criterion 1: kernel fixtures ---------------------------------------

/// 4-decimal reference matrices. Three cells were nudged off the nearest
/// rounding of the cosine rule so each printed matrix sums to exactly
/// 1.0000; they are excluded from the fine tolerance below and pinned to
/// their measured deviations instead (3x3 center 1.21e-4, 5x5 corners
/// 5.96e-5, 7x7 center 2.35e-4).
const REFERENCE_3X3: [[f64; 3]; 3] = [
    [0.0267, 0.1489, 0.0267],
    [0.1489, 0.2976, 0.1489],
    [0.0267, 0.1489, 0.0267],
];
const REFERENCE_5X5: [[f64; 5]; 5] = [
    [0.0069, 0.0302, 0.0388, 0.0302, 0.0069],
    [0.0302, 0.0573, 0.0672, 0.0573, 0.0302],
    [0.0388, 0.0672, 0.0776, 0.0672, 0.0388],
    [0.0302, 0.0573, 0.0672, 0.0573, 0.0302],
    [0.0069, 0.0302, 0.0388, 0.0302, 0.0069],
];
const REFERENCE_7X7: [[f64; 7]; 7] = [
    [0.0032, 0.0111, 0.0163, 0.0181, 0.0163, 0.0111, 0.0032],
    [0.0111, 0.0199, 0.0257, 0.0277, 0.0257, 0.0199, 0.0111],
    [0.0163, 0.0257, 0.0318, 0.0340, 0.0318, 0.0257, 0.0163],
    [0.0181, 0.0277, 0.0340, 0.0364, 0.0340, 0.0277, 0.0181],
    [0.0163, 0.0257, 0.0318, 0.0340, 0.0318, 0.0257, 0.0163],
    [0.0111, 0.0199, 0.0257, 0.0277, 0.0257, 0.0199, 0.0111],
    [0.0032, 0.0111, 0.0163, 0.0181, 0.0163, 0.0111, 0.0032],
];

fn criterion1_body() -> Artifacts {
    let mut out = Artifacts::new();
    let mut max_fine: f64 = 0.0;
    let mut max_adjusted: f64 = 0.0;
    for h in 1..=3usize {
        let k = cosine_kernel(h).unwrap();
        let sum: f64 = k.weights().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12, "h={h}: kernel sum {sum}");
        let reference: Vec<Vec<f64>> = match h {
            1 => REFERENCE_3X3.iter().map(|r| r.to_vec()).collect(),
            2 => REFERENCE_5X5.iter().map(|r| r.to_vec()).collect(),
            _ => REFERENCE_7X7.iter().map(|r| r.to_vec()).collect(),
        };
        let hi = h as isize;
        for dr in -hi..=hi {
            for dc in -hi..=hi {
                let got = k.weight(dr, dc);
                let want = reference[(dr + hi) as usize][(dc + hi) as usize];
                let dev = (got - want).abs();
                // The unit-sum-adjusted cells: 3x3 center, 5x5 corners,
                // 7x7 center.
                let adjusted = (h == 1 && dr == 0 && dc == 0)
                    || (h == 2 && dr.abs() == 2 && dc.abs() == 2)
                    || (h == 3 && dr == 0 && dc == 0);
                if adjusted {
                    assert!(dev <= 2.4e-4, "h={h} ({dr},{dc}): adjusted cell off by {dev:e}");
                    max_adjusted = max_adjusted.max(dev);
                } else {
                    assert!(dev <= 5e-5, "h={h} ({dr},{dc}): {got} vs {want} ({dev:e})");
                    max_fine = max_fine.max(dev);
                }
            }
        }
        out.push((format!("kernel_cosine_{h}"), render_floats(k.weights())));
        let u = uniform_kernel(h).unwrap();
        let usum: f64 = u.weights().iter().sum();
        assert!((usum - 1.0).abs() <= 1e-12);
        out.push((format!("kernel_uniform_{h}"), render_floats(u.weights())));
    }
    println!(
        "criterion 1 (kernel fixtures): PASS — max deviation {max_fine:.2e} on plain cells, \
         {max_adjusted:.2e} on the three unit-sum-adjusted cells, sums within 1e-12"
    );
    out
}

#[test]
fn criterion_1_kernel_fixtures() {
    artifacts("c1", 8, criterion1_body);
}

// --- criterion 2: constant-scene exactness -------------------------------

fn criterion2_body() -> Artifacts {
    let mut out = Artifacts::new();
    let mut worst: f64 = 0.0;
    for h in 1..=3usize {
        for shape in [KernelShape::Cosine, KernelShape::Uniform] {
            let k = make_kernel(shape, h).unwrap();
            let field = ImageGrid::constant_field(20, 20, 3.7).unwrap();
            let obs = oversample(
                &field,
                &k,
                NoiseModel::none(),
                RngSpec::new(0, StreamPurpose::Noise, 0),
            )
            .unwrap();
            let rec = reconstruct(&obs, &k).unwrap();
            for (j, &v) in rec.grid.values().iter().enumerate() {
                let err = (v - 3.7).abs();
                assert!(err <= 1e-8, "h={h} {shape:?} pixel {j}: error {err:e}");
                worst = worst.max(err);
            }
            out.push((
                format!("recon_constant_{}_{h}", k_shape_tag(shape)),
                grid_bytes(&rec.grid),
            ));
        }
    }
    println!("criterion 2 (constant-scene exactness): PASS — worst pixel error {worst:.2e} <= 1e-8");
    out
}

fn k_shape_tag(s: KernelShape) -> &'static str {
    match s {
        KernelShape::Cosine => "cosine",
        KernelShape::Uniform => "uniform",
    }
}

#[test]
fn criterion_2_constant_scene_exactness() {
    artifacts("c2", 8, criterion2_body);
}

// --- criterion 3: WLS oracle equivalence ---------------------------------

/// Dense normal-equations oracle (Gauss-Jordan with partial pivoting);
/// an independent route to the same estimate as the QR solver.
fn normal_equations_oracle(x: &DMatrix<f64>, w: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let (nr, nc) = x.shape();
    let mut gram = vec![vec![0.0; nc + 1]; nc];
    for a in 0..nc {
        for b in 0..nc {
            gram[a][b] = (0..nr).map(|k| x[(k, a)] * w[k] * x[(k, b)]).sum();
        }
        gram[a][nc] = (0..nr).map(|k| x[(k, a)] * w[k] * y[k]).sum();
    }
    for col in 0..nc {
        let pivot = (col..nc)
            .max_by(|&a, &b| gram[a][col].abs().partial_cmp(&gram[b][col].abs()).unwrap())
            .unwrap();
        gram.swap(col, pivot);
        let p = gram[col][col];
        for a in 0..nc {
            if a != col {
                let f = gram[a][col] / p;
                for b in 0..=nc {
                    gram[a][b] -= f * gram[col][b];
                }
            }
        }
    }
    DVector::from_iterator(nc, (0..nc).map(|a| gram[a][nc] / gram[a][a]))
}

fn criterion3_body() -> Artifacts {
    let mut rng = RngSpec::new(33, StreamPurpose::Noise, 0).rng();
    let mut rendered = Vec::new();
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let nr = 10 + (rng.next_u64() % 10) as usize;
        let nc = 3 + (rng.next_u64() % 5) as usize;
        let x = DMatrix::from_fn(nr, nc, |_, _| 0.05 + rng.next_uniform());
        let w = DVector::from_fn(nr, |_, _| 0.1 + rng.next_uniform());
        let y = DVector::from_fn(nr, |_, _| rng.next_standard_normal());
        let scope = LocalScope {
            obs: 0,
            c: (0..nc).collect(),
            r: (0..nr).collect(),
            phi: vec![1.0; nr],
        };
        let e = solve_local(scope, &x, &w, &y).unwrap();
        assert!(!e.regularized);
        let oracle = normal_equations_oracle(&x, &w, &y);
        for l in 0..nc {
            let rel = (e.beta_hat[l] - oracle[l]).abs() / oracle[l].abs().max(1e-9);
            assert!(
                rel <= 1e-8,
                "trial {trial} coef {l}: {} vs oracle {} (rel {rel:e})",
                e.beta_hat[l],
                oracle[l]
            );
            worst = worst.max(rel);
            rendered.push(e.beta_hat[l]);
        }
    }
    println!("criterion 3 (WLS oracle equivalence): PASS — 100 systems, worst relative gap {worst:.2e} <= 1e-8");
    vec![("wls_betas".to_string(), render_floats(&rendered))]
}

#[test]
fn criterion_3_wls_oracle_equivalence() {
    artifacts("c3", 8, criterion3_body);
}

// --- shared 12x12 / h=1 scene for criteria 4 and 5 -----------------------

const C45_SEED: u64 = 1204;
const C45_REPS: u64 = 20_000;

fn c45_truth() -> ImageGrid {
    simulate_field(
        12,
        12,
        VariogramSpec::new(6.0).unwrap(),
        GammaParams::new(16.0 / 9.0, 0.75).unwrap(),
        RngSpec::new(C45_SEED, StreamPurpose::Field, 0),
    )
    .unwrap()
}

fn c45_noise() -> NoiseModel {
    NoiseModel::new(0.5f64.sqrt()).unwrap()
}

// --- criterion 4: covariance validation ----------------------------------

fn criterion4_body() -> Artifacts {
    use rayon::prelude::*;

    let truth = c45_truth();
    let kernel = cosine_kernel(1).unwrap();
    let d = build_design(12, 12, &kernel).unwrap();
    let noise = c45_noise();
    let sigma_sq = noise.sigma() * noise.sigma();

    // Probe observations on the 10x10 observation grid and the pixels
    // (field coordinates) through which they are compared.
    let obs_ids = [0usize, 55, 56, 57, 58, 65, 66, 77, 99];
    let baseline: Vec<_> = obs_ids
        .iter()
        .map(|&i| local_estimate(&d, i, &vec![0.0; d.n()]).unwrap())
        .collect();
    let scope_pos = |i: usize, r: usize, c: usize| -> usize {
        let idx = obs_ids.iter().position(|&o| o == i).unwrap();
        baseline[idx].scope.position_of(r * 12 + c).unwrap()
    };

    // (i, i', pos, pos') tuples: self-variances, same-observation pairs,
    // overlapping neighbours, and fully disjoint pairs.
    let tuples = vec![
        (55, 55, scope_pos(55, 6, 6), scope_pos(55, 6, 6)),
        (0, 0, scope_pos(0, 1, 1), scope_pos(0, 1, 1)),
        (99, 99, scope_pos(99, 10, 10), scope_pos(99, 10, 10)),
        (55, 55, scope_pos(55, 6, 6), scope_pos(55, 5, 5)),
        (55, 56, scope_pos(55, 6, 6), scope_pos(56, 6, 6)),
        (55, 56, scope_pos(55, 5, 6), scope_pos(56, 6, 7)),
        (55, 65, scope_pos(55, 7, 6), scope_pos(65, 7, 6)),
        (55, 66, scope_pos(55, 6, 6), scope_pos(66, 6, 6)),
        (55, 57, scope_pos(55, 6, 7), scope_pos(57, 6, 7)),
        (56, 65, scope_pos(56, 7, 7), scope_pos(65, 7, 7)),
        (55, 77, scope_pos(55, 7, 7), scope_pos(77, 7, 7)),
        (55, 58, scope_pos(55, 6, 6), scope_pos(58, 6, 9)),
        (0, 99, scope_pos(0, 1, 1), scope_pos(99, 10, 10)),
    ];

    // Monte-Carlo over the generative noise process, using the public
    // estimator per replicate.
    let samples: Vec<Vec<(f64, f64)>> = (0..C45_REPS)
        .into_par_iter()
        .map(|rep| {
            let obs = oversample(&truth, &kernel, noise, RngSpec::new(C45_SEED, StreamPurpose::Noise, rep)).unwrap();
            let est: HashMap<usize, _> = obs_ids
                .iter()
                .map(|&i| (i, local_estimate(&d, i, obs.values()).unwrap()))
                .collect();
            tuples
                .iter()
                .map(|&(i, ip, p, q)| (est[&i].beta_hat[p], est[&ip].beta_hat[q]))
                .collect()
        })
        .collect();

    let n = C45_REPS as f64;
    let mut lines = String::from("i,ip,pos,pos2,predicted,empirical,se\n");
    let mut worst_z: f64 = 0.0;
    for (t, &(i, ip, p, q)) in tuples.iter().enumerate() {
        let ei = &baseline[obs_ids.iter().position(|&o| o == i).unwrap()];
        let eip = &baseline[obs_ids.iter().position(|&o| o == ip).unwrap()];
        let predicted = cross_covariance(ei, eip, p, q, &d).unwrap() * sigma_sq;

        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for rep in &samples {
            let (a, b) = rep[t];
            sa += a;
            sb += b;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
        let (ma, mb) = (sa / n, sb / n);
        let empirical = sab / n - ma * mb;
        let (va, vb) = (saa / n - ma * ma, sbb / n - mb * mb);
        let se = ((va * vb + empirical * empirical) / n).sqrt();
        let z = (empirical - predicted).abs() / se;
        assert!(
            z <= 4.0,
            "tuple {t} ({i},{ip},{p},{q}): empirical {empirical:e} vs predicted {predicted:e} is {z:.2} SE"
        );
        worst_z = worst_z.max(z);
        lines.push_str(&format!("{i},{ip},{p},{q},{predicted},{empirical},{se}\n"));
    }
    println!(
        "criterion 4 (covariance validation): PASS — {} tuples within 4 SE over {C45_REPS} replicates (worst {worst_z:.2} SE)",
        tuples.len()
    );
    vec![("covariance_tuples.csv".to_string(), lines.into_bytes())]
}

#[test]
fn criterion_4_covariance_validation() {
    artifacts("c4", 8, criterion4_body);
}

// --- criterion 5: unbiasedness -------------------------------------------

fn criterion5_body() -> Artifacts {
    use rayon::prelude::*;

    let truth = c45_truth();
    let kernel = cosine_kernel(1).unwrap();
    let noise = c45_noise();

    let noise_free = oversample(
        &truth,
        &kernel,
        NoiseModel::none(),
        RngSpec::new(C45_SEED, StreamPurpose::Noise, 0),
    )
    .unwrap();
    let reference = reconstruct(&noise_free, &kernel).unwrap().grid;

    let recons: Vec<Vec<f64>> = (0..C45_REPS)
        .into_par_iter()
        .map(|rep| {
            let obs = oversample(&truth, &kernel, noise, RngSpec::new(C45_SEED, StreamPurpose::Noise, rep)).unwrap();
            reconstruct(&obs, &kernel).unwrap().grid.values().to_vec()
        })
        .collect();

    let m = reference.values().len();
    let n = C45_REPS as f64;
    let mut mean = vec![0.0; m];
    let mut sumsq = vec![0.0; m];
    for rep in &recons {
        for (j, &v) in rep.iter().enumerate() {
            mean[j] += v;
            sumsq[j] += v * v;
        }
    }
    let mut within = 0usize;
    for j in 0..m {
        mean[j] /= n;
        let var = (sumsq[j] / n - mean[j] * mean[j]).max(0.0);
        let se = (var / n).sqrt();
        if (mean[j] - reference.values()[j]).abs() <= 4.0 * se {
            within += 1;
        }
    }
    let frac = within as f64 / m as f64;
    assert!(
        frac >= 0.99,
        "only {within}/{m} pixels within 4 SE of the noise-free reconstruction"
    );
    println!(
        "criterion 5 (unbiasedness): PASS — {within}/{m} pixels ({:.1}%) within 4 SE over {C45_REPS} replicates",
        100.0 * frac
    );
    vec![
        ("noise_free_recon".to_string(), grid_bytes(&reference)),
        ("mean_recon".to_string(), render_floats(&mean)),
    ]
}

#[test]
fn criterion_5_unbiasedness() {
    artifacts("c5", 8, criterion5_body);
}

// --- criterion 6: sigma invariance ---------------------------------------

fn criterion6_body() -> Artifacts {
    let truth = c45_truth();
    let kernel = cosine_kernel(1).unwrap();
    let d = build_design(12, 12, &kernel).unwrap();
    let obs = oversample(
        &truth,
        &kernel,
        c45_noise(),
        RngSpec::new(C45_SEED, StreamPurpose::Noise, 1),
    )
    .unwrap();
    let estimates = estimate_all(&d, obs.values()).unwrap();

    let mut rendered = Vec::new();
    let mut worst_corr: f64 = 0.0;
    let mut worst_weight: f64 = 0.0;
    for j in 0..d.m() {
        let g = gamma_vector(&d, &estimates, j).unwrap();
        let cov1 = covariance_matrix_scaled(&g, &estimates, &d, 1.0).unwrap();
        let cov100 = covariance_matrix_scaled(&g, &estimates, &d, 100.0).unwrap();
        let c1 = correlation_from_covariance(&cov1).unwrap();
        let c100 = correlation_from_covariance(&cov100).unwrap();
        for a in 0..c1.nrows() {
            for b in 0..c1.ncols() {
                let dev = (c1[(a, b)] - c100[(a, b)]).abs();
                assert!(dev <= 1e-12, "pixel {j} ({a},{b}): correlation drift {dev:e}");
                worst_corr = worst_corr.max(dev);
            }
        }
        let v1 = DVector::from_fn(g.entries.len(), |l, _| cov1[(l, l)]);
        let v100 = DVector::from_fn(g.entries.len(), |l, _| cov100[(l, l)]);
        let (_, w1) = synthesize(&g, &c1, &v1).unwrap();
        let (_, w100) = synthesize(&g, &c100, &v100).unwrap();
        for l in 0..w1.weights.len() {
            let dev = (w1.weights[l] - w100.weights[l]).abs();
            assert!(dev <= 1e-10, "pixel {j} weight {l}: drift {dev:e}");
            worst_weight = worst_weight.max(dev);
            rendered.push(w1.weights[l]);
        }
    }
    println!(
        "criterion 6 (sigma invariance): PASS — correlations drift {worst_corr:.2e} <= 1e-12, weights drift {worst_weight:.2e} <= 1e-10"
    );
    vec![("synthesis_weights".to_string(), render_floats(&rendered))]
}

#[test]
fn criterion_6_sigma_invariance() {
    artifacts("c6", 8, criterion6_body);
}

// --- criterion 7: trend reproduction -------------------------------------

const C7_SEED: u64 = 2407;

fn c7_cell(alpha: f64, range: f64, h: usize, snr: f64) -> ScenarioConfig {
    let lambda = 0.75;
    let noise_sd = (alpha * lambda * lambda / snr).sqrt();
    ScenarioConfig {
        rows: 24,
        cols: 24,
        range,
        alpha,
        lambda,
        kernel_half_width: h,
        kernel_shape: KernelShape::Cosine,
        noise_sd,
        replicates: 20,
        base_seed: C7_SEED,
    }
}

fn criterion7_body() -> Artifacts {
    // One-factor-at-a-time cells around the baseline setting
    // (alpha 16/9, R 6, h 2, SNR 2); shared seeds pair the comparisons.
    let base = run_scenario(&c7_cell(16.0 / 9.0, 6.0, 2, 2.0)).unwrap();
    let alpha_var = run_scenario(&c7_cell(4.0 / 9.0, 6.0, 2, 2.0)).unwrap();
    let range_var = run_scenario(&c7_cell(16.0 / 9.0, 3.0, 2, 2.0)).unwrap();
    let h_var = run_scenario(&c7_cell(16.0 / 9.0, 6.0, 1, 2.0)).unwrap();
    let snr_var = run_scenario(&c7_cell(16.0 / 9.0, 6.0, 2, 8.0)).unwrap();

    let rows = [&base, &alpha_var, &range_var, &h_var, &snr_var];
    let csv = radrec::bench::render_csv(
        &rows.iter().map(|s| (*s).clone()).collect::<Vec<_>>(),
    );

    // Skewness of the differences decreases when the field skewness
    // 2/sqrt(alpha) increases, when the range decreases, and when the
    // kernel shrinks.
    assert!(
        alpha_var.avg_skewness < base.avg_skewness,
        "alpha trend: {} !< {}",
        alpha_var.avg_skewness,
        base.avg_skewness
    );
    assert!(
        range_var.avg_skewness < base.avg_skewness,
        "range trend: {} !< {}",
        range_var.avg_skewness,
        base.avg_skewness
    );
    assert!(
        h_var.avg_skewness < base.avg_skewness,
        "kernel-size skewness trend: {} !< {}",
        h_var.avg_skewness,
        base.avg_skewness
    );
    // Noise in the reconstruction grows when the SNR drops and when the
    // kernel grows.
    assert!(
        base.avg_sd > snr_var.avg_sd,
        "snr trend: {} !> {}",
        base.avg_sd,
        snr_var.avg_sd
    );
    assert!(
        base.avg_sd > h_var.avg_sd,
        "kernel-size sd trend: {} !> {}",
        base.avg_sd,
        h_var.avg_sd
    );
    println!(
        "criterion 7 (trend reproduction): PASS — skewness {:.3} > {{alpha {:.3}, R {:.3}, h {:.3}}}; sd {:.4} > {{snr {:.4}, h {:.4}}}",
        base.avg_skewness,
        alpha_var.avg_skewness,
        range_var.avg_skewness,
        h_var.avg_skewness,
        base.avg_sd,
        snr_var.avg_sd,
        h_var.avg_sd
    );
    vec![("trend_table.csv".to_string(), csv.into_bytes())]
}

#[test]
fn criterion_7_trend_reproduction() {
    artifacts("c7", 8, criterion7_body);
}

// --- criterion 8: full-protocol pipeline sanity ---------------------------

fn criterion8_body() -> Artifacts {
    let cfg = ScenarioConfig {
        rows: 40,
        cols: 40,
        range: 6.0,
        alpha: 16.0 / 9.0,
        lambda: 0.75,
        kernel_half_width: 2,
        kernel_shape: KernelShape::Cosine,
        noise_sd: 0.5f64.sqrt(),
        replicates: 100,
        base_seed: 4008,
    };
    let summary = run_scenario(&cfg).unwrap();
    assert!(
        summary.avg_mean.abs() <= 0.05,
        "avg mean {} outside +-0.05",
        summary.avg_mean
    );
    assert!(
        summary.avg_skewness.abs() <= 0.5,
        "avg skewness {} outside +-0.5",
        summary.avg_skewness
    );
    // Per-replicate differences are centered: |mean| <= 4 sd / sqrt(N)
    // for at least 90% of replicates.
    let centered = summary
        .replicate_metrics
        .iter()
        .filter(|m| m.mean.abs() <= 4.0 * m.sd / (m.n_pixels as f64).sqrt())
        .count();
    assert!(
        centered as f64 >= 0.9 * summary.replicate_metrics.len() as f64,
        "only {centered}/{} replicates centered",
        summary.replicate_metrics.len()
    );

    let dir = std::env::temp_dir().join(format!("radrec_c8_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let table = vec![summary.clone()];
    write_csv(&table, dir.join("figure1.csv")).unwrap();
    write_json(&table, dir.join("figure1.json")).unwrap();
    let csv = std::fs::read(dir.join("figure1.csv")).unwrap();
    let json = std::fs::read(dir.join("figure1.json")).unwrap();
    let _ = std::fs::remove_dir_all(&dir);

    println!(
        "criterion 8 (full-protocol sanity): PASS — avg mean {:.4} (|.| <= 0.05), avg skewness {:.4} (|.| <= 0.5), {centered}/100 replicates centered",
        summary.avg_mean, summary.avg_skewness
    );
    vec![
        ("figure1.csv".to_string(), csv),
        ("figure1.json".to_string(), json),
    ]
}

#[test]
fn criterion_8_full_protocol_sanity() {
    artifacts("c8", 8, criterion8_body);
}

// --- criterion 9: determinism across thread counts ------------------------

#[test]
fn criterion_9_determinism_across_thread_counts() {
    let bodies: [(&'static str, fn() -> Artifacts); 8] = [
        ("c1", criterion1_body),
        ("c2", criterion2_body),
        ("c3", criterion3_body),
        ("c4", criterion4_body),
        ("c5", criterion5_body),
        ("c6", criterion6_body),
        ("c7", criterion7_body),
        ("c8", criterion8_body),
    ];
    for (name, body) in bodies {
        let serial = artifacts(name, 1, body);
        let parallel = artifacts(name, 8, body);
        assert_eq!(serial.len(), parallel.len(), "{name}: artifact counts differ");
        for ((na, ba), (nb, bb)) in serial.iter().zip(parallel.iter()) {
            assert_eq!(na, nb, "{name}: artifact names differ");
            assert_eq!(ba, bb, "{name}: artifact {na} differs between 1 and 8 threads");
        }
    }
    println!("criterion 9 (determinism): PASS — criteria 1-8 byte-identical on 1 and 8 worker threads");
}
