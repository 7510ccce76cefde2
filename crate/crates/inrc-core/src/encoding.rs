//! Positional encodings for coordinate networks.
//!
//! Two mappings share one mapping size `m` (the feature dimension):
//!
//! * `BaselineSinCos` — m/2 Gaussian frequency vectors, each contributing an
//!   interleaved `(cos, sin)` pair of `2π·wᵀv`;
//! * `RffCosine` — m frequency vectors plus m uniform phases, each
//!   contributing a single `√2·cos(2π·wᵀv + b)` feature.
//!
//! Bases are resampled from seeds at decode time, so sampling order is fixed:
//! frequencies come row-major from a Box–Muller stream seeded by `seed_w`,
//! phases from a uniform stream seeded by `seed_b`.

use crate::error::{Error, Result};
use crate::nn::{Matrix, Scalar};
use crate::rng::{GaussianSource, Xoshiro256StarStar};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    BaselineSinCos,
    RffCosine,
}

impl EncodingKind {
    pub fn label(self) -> &'static str {
        match self {
            EncodingKind::BaselineSinCos => "baseline",
            EncodingKind::RffCosine => "proposed",
        }
    }
}

impl std::fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for EncodingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" | "sincos" => Ok(EncodingKind::BaselineSinCos),
            "proposed" | "rff-cosine" | "cosine" => Ok(EncodingKind::RffCosine),
            other => Err(Error::InvalidConfig(format!(
                "unknown encoding kind {other:?} (expected \"baseline\" or \"proposed\")"
            ))),
        }
    }
}

/// Everything needed to resample a basis: the kind, feature dimension,
/// Gaussian bandwidth and the two stream seeds. `sigma` is kept in `f32`
/// because that is its width in the bitstream header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingConfig {
    pub kind: EncodingKind,
    pub mapping_size: usize,
    pub sigma: f32,
    pub seed_w: u64,
    pub seed_b: u64,
}

impl EncodingConfig {
    pub fn new(kind: EncodingKind, mapping_size: usize, sigma: f32, seed_w: u64, seed_b: u64) -> Result<Self> {
        let cfg = Self {
            kind,
            mapping_size,
            sigma,
            seed_w,
            seed_b,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mapping_size == 0 || self.mapping_size % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "mapping size must be a positive even integer, got {}",
                self.mapping_size
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidConfig(format!("sigma must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }

    /// Number of frequency vectors this configuration samples.
    pub fn num_basis(&self) -> usize {
        match self.kind {
            EncodingKind::BaselineSinCos => self.mapping_size / 2,
            EncodingKind::RffCosine => self.mapping_size,
        }
    }
}

/// Sampled frequency matrix (and phases for the cosine mapping).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierBasis {
    pub kind: EncodingKind,
    pub coord_dim: usize,
    /// `num_basis x coord_dim`, row-major.
    pub frequencies: Vec<f64>,
    /// One phase in `[0, 2π)` per basis vector; empty for the baseline.
    pub phases: Vec<f64>,
}

impl FourierBasis {
    pub fn num_basis(&self) -> usize {
        self.frequencies.len() / self.coord_dim
    }

    pub fn mapping_size(&self) -> usize {
        match self.kind {
            EncodingKind::BaselineSinCos => 2 * self.num_basis(),
            EncodingKind::RffCosine => self.num_basis(),
        }
    }

    #[inline]
    fn frequency_row(&self, i: usize) -> &[f64] {
        &self.frequencies[i * self.coord_dim..(i + 1) * self.coord_dim]
    }
}

/// Draw the Fourier basis for `config` over `coord_dim`-dimensional inputs.
///
/// Frequencies are i.i.d. `Normal(0, sigma^2)`; phases i.i.d. uniform on
/// `[0, 2π)`. Deterministic given `(config, coord_dim)`.
pub fn sample_basis(config: &EncodingConfig, coord_dim: usize) -> Result<FourierBasis> {
    config.validate()?;
    if coord_dim == 0 {
        return Err(Error::InvalidConfig("coord_dim must be >= 1".into()));
    }
    let num_basis = config.num_basis();
    let sigma = config.sigma as f64;
    let mut gauss = GaussianSource::new(config.seed_w);
    let mut frequencies = Vec::with_capacity(num_basis * coord_dim);
    for _ in 0..num_basis * coord_dim {
        frequencies.push(sigma * gauss.next_standard_normal());
    }
    let phases = match config.kind {
        EncodingKind::BaselineSinCos => Vec::new(),
        EncodingKind::RffCosine => {
            let mut rng = Xoshiro256StarStar::new(config.seed_b);
            (0..num_basis).map(|_| rng.uniform(0.0, 2.0 * PI)).collect()
        }
    };
    Ok(FourierBasis {
        kind: config.kind,
        coord_dim,
        frequencies,
        phases,
    })
}

/// Map a batch of coordinates to feature vectors.
///
/// Baseline features interleave `(cos, sin)` per basis vector; cosine
/// features are `√2·cos(2π·wᵢᵀv + bᵢ)`. Trigonometry runs in `f64` and the
/// result is narrowed to `F` at the end, so `f32` features are the rounded
/// image of one fixed computation.
pub fn embed<F: Scalar>(coords: &Matrix<f64>, basis: &FourierBasis) -> Result<Matrix<F>> {
    if coords.cols != basis.coord_dim {
        return Err(Error::ShapeMismatch {
            context: "embed",
            expected: format!("{}-dimensional points", basis.coord_dim),
            actual: format!("{}-dimensional points", coords.cols),
        });
    }
    let m = basis.mapping_size();
    let num_basis = basis.num_basis();
    let mut out = Matrix::zeros(coords.rows, m);
    let sqrt2 = std::f64::consts::SQRT_2;
    for r in 0..coords.rows {
        let v = coords.row(r);
        let features = out.row_mut(r);
        match basis.kind {
            EncodingKind::BaselineSinCos => {
                for i in 0..num_basis {
                    let t = 2.0 * PI * dot_f64(basis.frequency_row(i), v);
                    features[2 * i] = F::from_f64(t.cos());
                    features[2 * i + 1] = F::from_f64(t.sin());
                }
            }
            EncodingKind::RffCosine => {
                for i in 0..num_basis {
                    let t = 2.0 * PI * dot_f64(basis.frequency_row(i), v) + basis.phases[i];
                    features[i] = F::from_f64(sqrt2 * t.cos());
                }
            }
        }
    }
    Ok(out)
}

#[inline]
fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normalized pixel-center coordinate grid: `x = -1 + 2i/(W-1)` over columns
/// (single column maps to 0), likewise `y` over rows; row-major with `y`
/// outer, each point `(x, y)`.
pub fn coord_grid(width: usize, height: usize) -> Matrix<f64> {
    let mut out = Matrix::zeros(width * height, 2);
    let step = |i: usize, n: usize| -> f64 {
        if n <= 1 {
            0.0
        } else {
            -1.0 + 2.0 * i as f64 / (n - 1) as f64
        }
    };
    let mut k = 0;
    for row in 0..height {
        let y = step(row, height);
        for col in 0..width {
            let p = out.row_mut(k);
            p[0] = step(col, width);
            p[1] = y;
            k += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: EncodingKind, m: usize) -> EncodingConfig {
        EncodingConfig::new(kind, m, 1.0, 11, 22).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = cfg(EncodingKind::RffCosine, 16);
        let a = sample_basis(&c, 2).unwrap();
        let b = sample_basis(&c, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn baseline_has_half_the_basis_vectors_and_no_phases() {
        let b = sample_basis(&cfg(EncodingKind::BaselineSinCos, 16), 2).unwrap();
        assert_eq!(b.num_basis(), 8);
        assert!(b.phases.is_empty());
        let p = sample_basis(&cfg(EncodingKind::RffCosine, 16), 2).unwrap();
        assert_eq!(p.num_basis(), 16);
        assert_eq!(p.phases.len(), 16);
        assert!(p.phases.iter().all(|&ph| (0.0..2.0 * PI).contains(&ph)));
    }

    #[test]
    fn odd_mapping_size_is_rejected() {
        assert!(EncodingConfig::new(EncodingKind::RffCosine, 7, 1.0, 0, 0).is_err());
        assert!(EncodingConfig::new(EncodingKind::RffCosine, 0, 1.0, 0, 0).is_err());
        assert!(EncodingConfig::new(EncodingKind::RffCosine, 8, 0.0, 0, 0).is_err());
    }

    #[test]
    fn frequency_moments_match_sigma() {
        // m = 1024 cosine basis over 2-d coords: 2048 Gaussian draws.
        let c = cfg(EncodingKind::RffCosine, 1024);
        let b = sample_basis(&c, 2).unwrap();
        let n = b.frequencies.len() as f64;
        let mean = b.frequencies.iter().sum::<f64>() / n;
        let var = b.frequencies.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 3.0 / n.sqrt(), "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.05, "std {}", var.sqrt());
    }

    #[test]
    fn baseline_features_at_origin_alternate_one_zero() {
        let b = sample_basis(&cfg(EncodingKind::BaselineSinCos, 8), 2).unwrap();
        let coords = Matrix::from_vec(1, 2, vec![0.0, 0.0]).unwrap();
        let f: Matrix<f64> = embed(&coords, &b).unwrap();
        for i in 0..4 {
            assert_eq!(f.data[2 * i], 1.0);
            assert_eq!(f.data[2 * i + 1], 0.0);
        }
    }

    #[test]
    fn cosine_features_at_origin_depend_only_on_phase() {
        let mut b = sample_basis(&cfg(EncodingKind::RffCosine, 8), 2).unwrap();
        let coords = Matrix::from_vec(1, 2, vec![0.0, 0.0]).unwrap();
        b.phases = vec![0.0; 8];
        let f: Matrix<f64> = embed(&coords, &b).unwrap();
        for &v in &f.data {
            assert!((v - std::f64::consts::SQRT_2).abs() < 1e-12);
        }
        b.phases = vec![PI / 2.0; 8];
        let f: Matrix<f64> = embed(&coords, &b).unwrap();
        for &v in &f.data {
            assert!(v.abs() < 1e-6);
        }
    }

    #[test]
    fn baseline_pairs_satisfy_pythagorean_identity() {
        let b = sample_basis(&cfg(EncodingKind::BaselineSinCos, 32), 2).unwrap();
        let coords = coord_grid(5, 5);
        let f: Matrix<f64> = embed(&coords, &b).unwrap();
        for r in 0..f.rows {
            let row = f.row(r);
            for i in 0..16 {
                let s = row[2 * i] * row[2 * i] + row[2 * i + 1] * row[2 * i + 1];
                assert!((s - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn feature_magnitudes_respect_bounds() {
        let coords = coord_grid(9, 7);
        let b = sample_basis(&cfg(EncodingKind::BaselineSinCos, 16), 2).unwrap();
        let f: Matrix<f64> = embed(&coords, &b).unwrap();
        assert!(f.data.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        let p = sample_basis(&cfg(EncodingKind::RffCosine, 16), 2).unwrap();
        let f: Matrix<f64> = embed(&coords, &p).unwrap();
        let bound = std::f64::consts::SQRT_2 + 1e-12;
        assert!(f.data.iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn embedding_dimension_is_mapping_size_for_both_kinds() {
        let coords = coord_grid(3, 2);
        for kind in [EncodingKind::BaselineSinCos, EncodingKind::RffCosine] {
            let b = sample_basis(&cfg(kind, 24), 2).unwrap();
            let f: Matrix<f32> = embed(&coords, &b).unwrap();
            assert_eq!(f.cols, 24);
            assert_eq!(f.rows, 6);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let b = sample_basis(&cfg(EncodingKind::RffCosine, 8), 3).unwrap();
        let coords = coord_grid(2, 2); // 2-d points
        assert!(embed::<f64>(&coords, &b).is_err());
    }

    #[test]
    fn grid_endpoints_and_order() {
        let g = coord_grid(2, 1);
        assert_eq!(g.row(0), &[-1.0, 0.0]);
        assert_eq!(g.row(1), &[1.0, 0.0]);

        let g = coord_grid(3, 1);
        assert_eq!(
            (g.row(0)[0], g.row(1)[0], g.row(2)[0]),
            (-1.0, 0.0, 1.0)
        );

        let g = coord_grid(768, 512);
        assert_eq!(g.rows, 393216);
        assert_eq!(g.row(0), &[-1.0, -1.0]);
        assert_eq!(g.row(g.rows - 1), &[1.0, 1.0]);
    }
}
