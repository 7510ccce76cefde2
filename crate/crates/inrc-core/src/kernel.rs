//! Kernel-approximation experiment: how well do the two feature mappings
//! approximate a Gaussian RBF kernel matrix on a noisy 1-D sine dataset, as
//! a function of the mapping size?
//!
//! The estimators here sample frequencies from `Normal(0, 1/σ²)` and omit
//! the `2π` factor used by the coordinate-network encodings, so the Bochner
//! estimate targets exactly `exp(-d²/(2σ²))`; the two conventions differ only
//! by a reparameterization of the frequency scale.

use crate::encoding::EncodingKind;
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::rng::{GaussianSource, SeedHasher, Xoshiro256StarStar};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Samples `y_i = 3·sin(t_i) + u_i` with `t_i` equally spaced on `[0, 8π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDataset {
    pub times: Vec<f64>,
    pub samples: Vec<f64>,
    pub seed: u64,
}

impl KernelDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn time_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 8.0 * PI * i as f64 / (n - 1) as f64).collect()
}

/// Noisy sine dataset, deterministic in `seed`; noise is `Uniform[0, 1)`.
pub fn generate_sine_dataset(n: usize, seed: u64) -> Result<KernelDataset> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("dataset needs n >= 2, got {n}")));
    }
    let times = time_grid(n);
    let mut rng = Xoshiro256StarStar::new(seed);
    let samples = times.iter().map(|&t| 3.0 * t.sin() + rng.next_f64()).collect();
    Ok(KernelDataset { times, samples, seed })
}

/// Zero-noise variant, used to pin the deterministic part of the signal.
pub fn generate_noiseless_sine_dataset(n: usize) -> Result<KernelDataset> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("dataset needs n >= 2, got {n}")));
    }
    let times = time_grid(n);
    let samples = times.iter().map(|&t| 3.0 * t.sin()).collect();
    Ok(KernelDataset { times, samples, seed: 0 })
}

/// Which vectors feed the kernel: the sample values alone (1-D points, the
/// default) or `(t, y)` pairs (2-D points).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelInput {
    Values,
    TimeValuePairs,
}

impl KernelInput {
    fn dim(self) -> usize {
        match self {
            KernelInput::Values => 1,
            KernelInput::TimeValuePairs => 2,
        }
    }

    fn point(self, data: &KernelDataset, i: usize) -> [f64; 2] {
        match self {
            KernelInput::Values => [data.samples[i], 0.0],
            KernelInput::TimeValuePairs => [data.times[i], data.samples[i]],
        }
    }

    fn distance(self, data: &KernelDataset, i: usize, j: usize) -> f64 {
        let a = self.point(data, i);
        let b = self.point(data, j);
        match self {
            KernelInput::Values => (a[0] - b[0]).abs(),
            KernelInput::TimeValuePairs => ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt(),
        }
    }
}

/// Gram normalization of the cosine mapping's kernel estimate.
///
/// `Unbiased` keeps the √2 energy factor so `E[K̂] = K` exactly; `Halved`
/// drops it, so `E[K̂] = K/2`. The shrunk estimate has a quarter of the
/// variance and wins where variance dominates (small mapping sizes), at the
/// price of a bias floor of one half at large sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CosineGram {
    Unbiased,
    Halved,
}

/// `p`-th percentile (linear interpolation) of all pairwise distances.
pub fn percentile_bandwidth(data: &KernelDataset, p: f64) -> Result<f64> {
    percentile_bandwidth_with(data, p, KernelInput::Values)
}

pub fn percentile_bandwidth_with(data: &KernelDataset, p: f64, input: KernelInput) -> Result<f64> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InvalidConfig("bandwidth needs at least 2 samples".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidConfig(format!("percentile must be in [0, 100], got {p}")));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(input.distance(data, i, j));
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let pos = p / 100.0 * (dists.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let sigma = if lo + 1 < dists.len() {
        dists[lo] + frac * (dists[lo + 1] - dists[lo])
    } else {
        dists[lo]
    };
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(
            "pairwise-distance percentile is zero (identical samples); bandwidth undefined".into(),
        ));
    }
    Ok(sigma)
}

/// Exact Gaussian RBF kernel matrix `K_ij = exp(-d_ij²/(2σ²))`.
pub fn rbf_kernel_matrix(data: &KernelDataset, sigma: f64) -> Result<Matrix<f64>> {
    rbf_kernel_matrix_with(data, sigma, KernelInput::Values)
}

pub fn rbf_kernel_matrix_with(data: &KernelDataset, sigma: f64, input: KernelInput) -> Result<Matrix<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be > 0, got {sigma}")));
    }
    let n = data.len();
    let mut k = Matrix::zeros(n, n);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for i in 0..n {
        k.data[i * n + i] = 1.0;
        for j in i + 1..n {
            let d = input.distance(data, i, j);
            let v = (-d * d * inv).exp();
            k.data[i * n + j] = v;
            k.data[j * n + i] = v;
        }
    }
    Ok(k)
}

/// Per-sample feature rows for one trial of the Monte-Carlo estimate,
/// together with the Gram scale `1/num_basis`.
struct TrialFeatures {
    rows: Matrix<f64>,
    scale: f64,
}

fn trial_features(
    data: &KernelDataset,
    kind: EncodingKind,
    m: usize,
    sigma: f64,
    seed: u64,
    gram: CosineGram,
    input: KernelInput,
) -> Result<TrialFeatures> {
    if m == 0 || m % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "mapping size must be a positive even integer, got {m}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be > 0, got {sigma}")));
    }
    let n = data.len();
    let dim = input.dim();
    let freq_scale = 1.0 / sigma;
    let seed_w = SeedHasher::new(seed).write_str("frequencies").finish();
    let seed_b = SeedHasher::new(seed).write_str("phases").finish();
    let mut gauss = GaussianSource::new(seed_w);

    let num_basis = match kind {
        EncodingKind::BaselineSinCos => m / 2,
        EncodingKind::RffCosine => m,
    };
    let mut freqs = Vec::with_capacity(num_basis * dim);
    for _ in 0..num_basis * dim {
        freqs.push(freq_scale * gauss.next_standard_normal());
    }

    let mut rows = Matrix::zeros(n, m);
    match kind {
        EncodingKind::BaselineSinCos => {
            for i in 0..n {
                let p = input.point(data, i);
                let row = rows.row_mut(i);
                for d in 0..num_basis {
                    let w = &freqs[d * dim..(d + 1) * dim];
                    let t: f64 = w.iter().zip(&p[..dim]).map(|(a, b)| a * b).sum();
                    row[2 * d] = t.cos();
                    row[2 * d + 1] = t.sin();
                }
            }
            Ok(TrialFeatures {
                rows,
                scale: 1.0 / num_basis as f64,
            })
        }
        EncodingKind::RffCosine => {
            let mut rng = Xoshiro256StarStar::new(seed_b);
            let phases: Vec<f64> = (0..num_basis).map(|_| rng.uniform(0.0, 2.0 * PI)).collect();
            let amp = match gram {
                CosineGram::Unbiased => std::f64::consts::SQRT_2,
                CosineGram::Halved => 1.0,
            };
            for i in 0..n {
                let p = input.point(data, i);
                let row = rows.row_mut(i);
                for (d, phase) in phases.iter().enumerate() {
                    let w = &freqs[d * dim..(d + 1) * dim];
                    let t: f64 = w.iter().zip(&p[..dim]).map(|(a, b)| a * b).sum();
                    row[d] = amp * (t + phase).cos();
                }
            }
            Ok(TrialFeatures {
                rows,
                scale: 1.0 / num_basis as f64,
            })
        }
    }
}

/// Monte-Carlo estimate of the RBF kernel matrix from `m`-dimensional
/// features (unbiased for both mappings; see [`approx_kernel_matrix_opts`]
/// for the shrunk cosine variant).
pub fn approx_kernel_matrix(
    data: &KernelDataset,
    kind: EncodingKind,
    m: usize,
    sigma: f64,
    seed: u64,
) -> Result<Matrix<f64>> {
    approx_kernel_matrix_opts(data, kind, m, sigma, seed, CosineGram::Unbiased, KernelInput::Values)
}

pub fn approx_kernel_matrix_opts(
    data: &KernelDataset,
    kind: EncodingKind,
    m: usize,
    sigma: f64,
    seed: u64,
    gram: CosineGram,
    input: KernelInput,
) -> Result<Matrix<f64>> {
    let tf = trial_features(data, kind, m, sigma, seed, gram, input)?;
    let n = data.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = tf.scale * dot(tf.rows.row(i), tf.rows.row(j));
            k.data[i * n + j] = v;
            k.data[j * n + i] = v;
        }
    }
    Ok(k)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `‖K - K̂‖_F / ‖K‖_F`.
pub fn relative_frobenius_error(k: &Matrix<f64>, k_hat: &Matrix<f64>) -> Result<f64> {
    if k.rows != k_hat.rows || k.cols != k_hat.cols {
        return Err(Error::ShapeMismatch {
            context: "relative_frobenius_error",
            expected: format!("{}x{}", k.rows, k.cols),
            actual: format!("{}x{}", k_hat.rows, k_hat.cols),
        });
    }
    let num: f64 = k.data.iter().zip(&k_hat.data).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = k.data.iter().map(|a| a * a).sum();
    if den == 0.0 {
        return Err(Error::InvalidConfig("reference kernel matrix is zero".into()));
    }
    Ok((num / den).sqrt())
}

/// Relative Frobenius error computed against precomputed `k` and `‖K‖²`
/// without materializing `K̂` (the experiment hot path).
fn trial_error(k: &Matrix<f64>, k_norm_sq: f64, tf: &TrialFeatures) -> f64 {
    let n = k.rows;
    let row_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let fi = tf.rows.row(i);
            let mut acc = 0.0;
            // diagonal entry once, off-diagonal pairs doubled
            let dii = k.data[i * n + i] - tf.scale * dot(fi, fi);
            acc += dii * dii;
            for j in i + 1..n {
                let d = k.data[i * n + j] - tf.scale * dot(fi, tf.rows.row(j));
                acc += 2.0 * d * d;
            }
            acc
        })
        .collect();
    (row_sums.iter().sum::<f64>() / k_norm_sq).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelExperimentConfig {
    pub mapping_sizes: Vec<usize>,
    pub trials: usize,
    pub n: usize,
    pub root_seed: u64,
    /// Bandwidth; `None` applies the 5th-percentile pairwise-distance rule.
    pub sigma: Option<f64>,
    pub gram: CosineGram,
    pub input: KernelInput,
}

impl Default for KernelExperimentConfig {
    fn default() -> Self {
        Self {
            mapping_sizes: vec![4, 8, 16, 32, 64, 128, 256, 512],
            trials: 20,
            n: 1000,
            root_seed: 0,
            sigma: None,
            gram: CosineGram::Halved,
            input: KernelInput::Values,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelExperimentResult {
    pub mapping_sizes: Vec<usize>,
    pub error_baseline: Vec<f64>,
    pub error_proposed: Vec<f64>,
    pub stddev_baseline: Vec<f64>,
    pub stddev_proposed: Vec<f64>,
    pub trials: usize,
    pub sigma: f64,
    pub n: usize,
    pub gram: CosineGram,
}

impl KernelExperimentResult {
    /// First mapping size at which the baseline error drops to or below the
    /// proposed error.
    pub fn crossover(&self) -> Option<usize> {
        self.mapping_sizes
            .iter()
            .zip(self.error_baseline.iter().zip(&self.error_proposed))
            .find(|(_, (b, p))| b <= p)
            .map(|(&m, _)| m)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mapping_size,kind,mean_error,stddev_error,trials\n");
        for (i, &m) in self.mapping_sizes.iter().enumerate() {
            out.push_str(&format!(
                "{m},baseline,{:.6},{:.6},{}\n",
                self.error_baseline[i], self.stddev_baseline[i], self.trials
            ));
            out.push_str(&format!(
                "{m},proposed,{:.6},{:.6},{}\n",
                self.error_proposed[i], self.stddev_proposed[i], self.trials
            ));
        }
        out
    }
}

/// Run the full sweep: for every mapping size, average the relative error of
/// both mappings over `trials` independent bases. Trials run in parallel;
/// per-trial seeds are derived from the root seed, so results do not depend
/// on scheduling.
pub fn run_kernel_experiment(config: &KernelExperimentConfig) -> Result<KernelExperimentResult> {
    if config.trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    if config.mapping_sizes.is_empty() {
        return Err(Error::InvalidConfig("at least one mapping size is required".into()));
    }
    let data = generate_sine_dataset(config.n, config.root_seed)?;
    let sigma = match config.sigma {
        Some(s) if s > 0.0 => s,
        Some(s) => return Err(Error::InvalidConfig(format!("sigma must be > 0, got {s}"))),
        None => percentile_bandwidth_with(&data, 5.0, config.input)?,
    };
    let k = rbf_kernel_matrix_with(&data, sigma, config.input)?;
    let k_norm_sq: f64 = k.data.iter().map(|a| a * a).sum();

    let mut result = KernelExperimentResult {
        mapping_sizes: config.mapping_sizes.clone(),
        error_baseline: Vec::new(),
        error_proposed: Vec::new(),
        stddev_baseline: Vec::new(),
        stddev_proposed: Vec::new(),
        trials: config.trials,
        sigma,
        n: config.n,
        gram: config.gram,
    };

    for &m in &config.mapping_sizes {
        let errors: Vec<(f64, f64)> = (0..config.trials)
            .into_par_iter()
            .map(|trial| -> Result<(f64, f64)> {
                let seed = |kind: &str| {
                    SeedHasher::new(config.root_seed)
                        .write_u64(m as u64)
                        .write_u64(trial as u64)
                        .write_str(kind)
                        .finish()
                };
                let fb = trial_features(
                    &data,
                    EncodingKind::BaselineSinCos,
                    m,
                    sigma,
                    seed("baseline"),
                    config.gram,
                    config.input,
                )?;
                let fp = trial_features(
                    &data,
                    EncodingKind::RffCosine,
                    m,
                    sigma,
                    seed("proposed"),
                    config.gram,
                    config.input,
                )?;
                Ok((trial_error(&k, k_norm_sq, &fb), trial_error(&k, k_norm_sq, &fp)))
            })
            .collect::<Result<_>>()?;

        let (mb, sb) = mean_std(errors.iter().map(|e| e.0));
        let (mp, sp) = mean_std(errors.iter().map(|e| e.1));
        result.error_baseline.push(mb);
        result.stddev_baseline.push(sb);
        result.error_proposed.push(mp);
        result.stddev_proposed.push(sp);
    }
    Ok(result)
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
