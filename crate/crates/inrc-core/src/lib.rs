//! Image codec built on coordinate networks with random Fourier feature
//! encodings, together with the evaluation tooling around it: rate-distortion
//! curves, Bjontegaard delta rates, and a kernel-approximation experiment
//! comparing the two feature mappings.
//!
//! The compressed artifact is just the network: a `.inrb` stream stores the
//! encoding seeds plus every weight in binary16, and the decoder resamples
//! the Fourier basis and re-evaluates the network over the pixel grid.

pub mod codec;
pub mod encoding;
pub mod error;
pub mod image;
pub mod inr;
pub mod kernel;
pub mod metrics;
pub mod nn;
pub mod rng;

pub use codec::{bits_per_pixel, decode, encode, named_arch, Bitstream, BitstreamHeader};
pub use encoding::{coord_grid, embed, sample_basis, EncodingConfig, EncodingKind, FourierBasis};
pub use error::{DecodeError, Error, Result};
pub use image::{synthetic_test_image, ImageBuffer};
pub use inr::{reconstruct, train, TrainConfig, TrainedModel};
pub use kernel::{
    approx_kernel_matrix, generate_sine_dataset, percentile_bandwidth, rbf_kernel_matrix,
    relative_frobenius_error, run_kernel_experiment, CosineGram, KernelDataset,
    KernelExperimentConfig, KernelExperimentResult, KernelInput,
};
pub use metrics::{bd_rate, bd_rate_report, psnr, rd_table, BdRateReport, RdCurve, RdPoint, RdTable, RdTableEntry};
pub use nn::{
    adam_step, dequantize_binary16, mlp_forward, mlp_init, mlp_loss_and_grads, quantize_binary16,
    AdamParams, AdamState, Matrix, MlpArch, MlpParams, QuantizedParams,
};
