//! Overfit a coordinate MLP to a single image and reconstruct images from
//! trained or decoded models.

use crate::encoding::{coord_grid, embed, sample_basis, EncodingConfig};
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::nn::{
    accumulate_loss_grads, adam_step, mlp_init, AdamParams, AdamState, Matrix, MlpArch, MlpParams, Scratch,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Rows per gradient chunk. Fixed (never derived from the thread count) so
/// the chunk partition, and with it the floating-point reduction order, is
/// identical no matter how many workers run.
const CHUNK_ROWS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub arch: MlpArch,
    pub encoding: EncodingConfig,
    pub lr: f64,
    pub iterations: u64,
    pub init_seed: u64,
    /// Record the loss every `log_every` iterations (0 = final only).
    pub log_every: u64,
}

impl TrainConfig {
    /// Protocol defaults: Adam at 2e-4 for 50k full-batch iterations.
    pub fn new(arch: MlpArch, encoding: EncodingConfig) -> Self {
        Self {
            arch,
            encoding,
            lr: 2e-4,
            iterations: 50_000,
            init_seed: 0,
            log_every: 1000,
        }
    }

    fn validate(&self) -> Result<()> {
        self.encoding.validate()?;
        if self.arch.input_dim != self.encoding.mapping_size {
            return Err(Error::InvalidConfig(format!(
                "arch input_dim {} must equal encoding mapping_size {}",
                self.arch.input_dim, self.encoding.mapping_size
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be >= 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidConfig(format!("lr must be > 0, got {}", self.lr)));
        }
        Ok(())
    }
}

/// A trained coordinate network together with everything needed to
/// re-evaluate it: the encoding configuration (the basis is resampled from
/// its seeds, never stored) and the architecture.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub params: MlpParams<f32>,
    pub encoding: EncodingConfig,
    pub arch: MlpArch,
    /// `(iteration, mse)` samples, recorded at `log_every` and at the end.
    pub loss_history: Vec<(u64, f64)>,
}

struct ChunkWorkspace {
    /// Features and targets for this chunk's rows, unit-major (one
    /// contiguous lane of batch values per dimension), transposed once up
    /// front.
    features_t: Matrix<f32>,
    targets_t: Matrix<f32>,
    grads: MlpParams<f32>,
    scratch: Scratch<f32>,
}

/// Full-batch Adam training of `config.arch` on `image`, deterministic for a
/// fixed configuration regardless of thread count.
pub fn train(image: &ImageBuffer, config: &TrainConfig) -> Result<TrainedModel> {
    config.validate()?;
    let basis = sample_basis(&config.encoding, 2)?;
    let grid = coord_grid(image.width(), image.height());
    let features: Matrix<f32> = embed(&grid, &basis)?;
    let targets = image.to_targets();

    let mut params: MlpParams<f32> = mlp_init(&config.arch, config.init_seed);
    let mut adam = AdamState::new(&config.arch, AdamParams::with_lr(config.lr));

    let n_rows = features.rows;
    let mut workspaces: Vec<ChunkWorkspace> = (0..n_rows)
        .step_by(CHUNK_ROWS)
        .map(|row_start| {
            let rows = CHUNK_ROWS.min(n_rows - row_start);
            let mut features_t = Matrix::zeros(0, 0);
            let mut targets_t = Matrix::zeros(0, 0);
            crate::nn::transpose_into(features.rows_view(row_start, rows), &mut features_t);
            crate::nn::transpose_into(targets.rows_view(row_start, rows), &mut targets_t);
            ChunkWorkspace {
                features_t,
                targets_t,
                grads: MlpParams::zeros(&config.arch),
                scratch: Scratch::new(&config.arch),
            }
        })
        .collect();
    let n_chunks = workspaces.len();

    let denom = (n_rows * config.arch.output_dim) as f64;
    let mut loss_history = Vec::new();

    for t in 1..=config.iterations {
        let params_ref = &params;
        let sq_sums: Vec<f64> = workspaces
            .par_iter_mut()
            .map(|ws| {
                ws.grads.zero_fill();
                accumulate_loss_grads(params_ref, &ws.features_t, &ws.targets_t, &mut ws.grads, &mut ws.scratch)
            })
            .collect();

        // Combine chunk results in a fixed-shape binary tree over chunk
        // indices; f32 sums therefore never depend on scheduling.
        let mut gap = 1;
        while gap < n_chunks {
            let mut i = 0;
            while i + gap < n_chunks {
                let (head, tail) = workspaces.split_at_mut(i + gap);
                head[i].grads.add_assign(&tail[0].grads);
                i += 2 * gap;
            }
            gap *= 2;
        }

        let mse = sq_sums.iter().sum::<f64>() / denom;
        if !mse.is_finite() {
            return Err(Error::Diverged {
                iteration: t,
                detail: format!("loss became {mse}"),
            });
        }
        if (config.log_every != 0 && t % config.log_every == 0) || t == config.iterations {
            loss_history.push((t, mse));
        }

        let scale = (2.0 / denom) as f32;
        let total = &mut workspaces[0].grads;
        total.for_each_value_mut(|g| *g *= scale);
        adam_step(&mut adam, &mut params, total).map_err(|e| match e {
            Error::Diverged { detail, .. } => Error::Diverged { iteration: t, detail },
            other => other,
        })?;
    }

    Ok(TrainedModel {
        params,
        encoding: config.encoding,
        arch: config.arch,
        loss_history,
    })
}

/// Evaluate the model over a coordinate grid of any resolution, clamping the
/// linear outputs into `[0, 1]`.
pub fn reconstruct(model: &TrainedModel, width: usize, height: usize) -> Result<ImageBuffer> {
    let basis = sample_basis(&model.encoding, 2)?;
    let grid = coord_grid(width, height);
    let features: Matrix<f32> = embed(&grid, &basis)?;

    let n_rows = features.rows;
    let blocks: Vec<Result<Matrix<f32>>> = (0..n_rows)
        .step_by(CHUNK_ROWS)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|row_start| {
            let rows = CHUNK_ROWS.min(n_rows - row_start);
            let view = features.rows_view(row_start, rows);
            let chunk = Matrix {
                rows,
                cols: features.cols,
                data: view.data.to_vec(),
            };
            crate::nn::mlp_forward(&model.params, &chunk)
        })
        .collect();

    let mut outputs = Matrix::zeros(n_rows, model.arch.output_dim);
    let mut row = 0;
    for block in blocks {
        let block = block?;
        let len = block.data.len();
        outputs.data[row * outputs.cols..row * outputs.cols + len].copy_from_slice(&block.data);
        row += block.rows;
    }
    ImageBuffer::from_predictions(width, height, &outputs)
}
