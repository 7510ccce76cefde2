//! `inrc` — compress images into coordinate-network bitstreams, decode them
//! back, and run the rate-distortion and kernel-approximation experiments.
//!
//! Exit codes are stable for scripting: 0 success, 2 input error,
//! 3 training divergence, 4 decode error.

mod sweep;

use clap::{Args, Parser, Subcommand};
use inrc_core::{
    bits_per_pixel, decode, encode, named_arch, psnr, reconstruct, train, CosineGram,
    EncodingConfig, EncodingKind, Error, ImageBuffer, KernelExperimentConfig, KernelInput,
    MlpArch, TrainConfig,
};
use inrc_core::rng::SeedHasher;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_INPUT: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_DECODE: u8 = 4;

#[derive(Parser)]
#[command(name = "inrc", version, about = "Coordinate-network image codec and evaluation harness")]
struct Cli {
    /// Worker threads for training and sweeps (0 = all cores). Results do
    /// not depend on this setting.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Overfit a network to an image and write a .inrb bitstream.
    Compress(CompressArgs),
    /// Decode a .inrb bitstream into a PNG.
    Decompress(DecompressArgs),
    /// Print a bitstream header as JSON.
    Inspect {
        /// .inrb file
        input: PathBuf,
    },
    /// Run a grid of (image, arch, mapping size, encoding) cells and emit a
    /// rate-distortion table plus per-mapping-size BD-rate report.
    RdSweep(sweep::RdSweepArgs),
    /// Compare kernel-approximation error of both feature mappings.
    KernelExp(KernelExpArgs),
}

#[derive(Args)]
struct CompressArgs {
    /// Input image (PNG or binary PPM).
    image: PathBuf,

    /// Output bitstream path.
    #[arg(short, long, default_value = "out.inrb")]
    out: PathBuf,

    /// Architecture preset (Q1..Q4) or explicit LAYERSxWIDTH, e.g. 5x20.
    #[arg(long, default_value = "Q1")]
    arch: String,

    /// Positional encoding: "baseline" (sin/cos pairs) or "proposed"
    /// (phase-shifted cosines).
    #[arg(long, default_value = "proposed")]
    encoding: String,

    /// Feature dimension fed to the network (even).
    #[arg(long, default_value_t = 8)]
    mapping_size: usize,

    /// Gaussian bandwidth of the frequency distribution.
    #[arg(long, default_value_t = 1.0)]
    sigma: f32,

    #[arg(long, default_value_t = 50_000)]
    iterations: u64,

    #[arg(long, default_value_t = 2e-4)]
    lr: f64,

    /// Root seed; the frequency, phase and init seeds derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Frequency-stream seed override (default: derived from --seed).
    #[arg(long)]
    seed_w: Option<u64>,

    /// Phase-stream seed override (default: derived from --seed).
    #[arg(long)]
    seed_b: Option<u64>,

    /// Train on a centered square crop of this size (0 = full image).
    #[arg(long, default_value_t = 0)]
    crop: usize,

    /// Record the training loss every N iterations (0 = final only).
    #[arg(long, default_value_t = 1000)]
    log_every: u64,
}

#[derive(Args)]
struct DecompressArgs {
    /// Input .inrb bitstream.
    input: PathBuf,

    /// Output PNG path.
    #[arg(short, long, default_value = "out.png")]
    out: PathBuf,

    /// Decode at this width instead of the stored one.
    #[arg(long)]
    width: Option<usize>,

    /// Decode at this height instead of the stored one.
    #[arg(long)]
    height: Option<usize>,

    /// Print the result line as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct KernelExpArgs {
    /// Comma-separated mapping sizes.
    #[arg(long, value_delimiter = ',', default_values_t = vec![4, 8, 16, 32, 64, 128, 256, 512])]
    sizes: Vec<usize>,

    #[arg(long, default_value_t = 20)]
    trials: usize,

    /// Dataset size.
    #[arg(long, default_value_t = 1000)]
    n: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Kernel bandwidth (default: 5th percentile of pairwise distances).
    #[arg(long)]
    sigma: Option<f64>,

    /// Gram normalization of the cosine mapping: "halved" (no sqrt2 energy
    /// factor; estimates K/2, lower error at small sizes) or "unbiased".
    #[arg(long, default_value = "halved")]
    gram: String,

    /// Feed (t, y) pairs to the kernel instead of the 1-D values.
    #[arg(long)]
    pairs: bool,

    /// CSV output path.
    #[arg(short, long)]
    out: Option<PathBuf>,

    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // ignore failure: the global pool may already exist under test harnesses
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let result = match cli.command {
        Command::Compress(args) => cmd_compress(args),
        Command::Decompress(args) => cmd_decompress(args),
        Command::Inspect { input } => cmd_inspect(&input),
        Command::RdSweep(args) => sweep::cmd_rd_sweep(args),
        Command::KernelExp(args) => cmd_kernel_exp(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Maps error causes onto the documented exit codes.
fn classify(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<Error>() {
        match core {
            Error::Diverged { .. } => EXIT_DIVERGED,
            Error::Decode(_) => EXIT_DECODE,
            _ => EXIT_INPUT,
        }
    } else {
        EXIT_INPUT
    }
}

/// "Q1".."Q4" presets or explicit "LAYERSxWIDTH".
pub(crate) fn parse_arch(spec: &str, mapping_size: usize) -> anyhow::Result<MlpArch> {
    if let Some(arch) = named_arch(spec, mapping_size) {
        return Ok(arch);
    }
    let (layers, width) = spec
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow::anyhow!("arch {spec:?} is neither Q1..Q4 nor LAYERSxWIDTH"))?;
    let hidden_layers: usize = layers.trim().parse()?;
    let hidden_width: usize = width.trim().parse()?;
    Ok(MlpArch::new(mapping_size, hidden_layers, hidden_width, 3).map_err(Error::from)?)
}

pub(crate) fn derive_seeds(root: u64, image_tag: &str, arch: &str, m: usize, kind: EncodingKind) -> (u64, u64, u64) {
    let cell = SeedHasher::new(root)
        .write_str(image_tag)
        .write_str(arch)
        .write_u64(m as u64)
        .write_str(kind.label())
        .finish();
    let part = |label: &str| SeedHasher::new(cell).write_str(label).finish();
    (part("frequencies"), part("phases"), part("init"))
}

fn load_input_image(path: &Path, crop: usize) -> anyhow::Result<ImageBuffer> {
    if !path.exists() {
        anyhow::bail!(Error::InvalidConfig(format!("no such file: {}", path.display())));
    }
    let img = ImageBuffer::load(path)?;
    Ok(img.center_crop(crop))
}

fn cmd_compress(args: CompressArgs) -> anyhow::Result<()> {
    let image = load_input_image(&args.image, args.crop)?;
    let kind: EncodingKind = args.encoding.parse()?;
    let arch = parse_arch(&args.arch, args.mapping_size)?;
    let tag = args.image.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let (dw, db, di) = derive_seeds(args.seed, &tag, &args.arch, args.mapping_size, kind);
    let encoding = EncodingConfig::new(
        kind,
        args.mapping_size,
        args.sigma,
        args.seed_w.unwrap_or(dw),
        args.seed_b.unwrap_or(db),
    )?;
    let config = TrainConfig {
        arch,
        encoding,
        lr: args.lr,
        iterations: args.iterations,
        init_seed: di,
        log_every: args.log_every,
    };

    let started = std::time::Instant::now();
    let model = train(&image, &config)?;
    let train_seconds = started.elapsed().as_secs_f64();

    let dims = (image.width(), image.height());
    let bitstream = encode(&model, dims)?;
    std::fs::write(&args.out, &bitstream.data).map_err(Error::from)?;

    // quality as the decoder will see it: binary16 weights, resampled basis
    let (decoded, _) = decode(&bitstream.data)?;
    let recon = reconstruct(&decoded, dims.0, dims.1)?;
    let psnr_q = psnr(&recon, &image)?;

    let stats = serde_json::json!({
        "out": args.out,
        "width": dims.0,
        "height": dims.1,
        "bpp": bits_per_pixel(&arch, dims.0, dims.1, false),
        "bpp_with_header": bits_per_pixel(&arch, dims.0, dims.1, true),
        "psnr_after_quantization": psnr_q,
        "train_seconds": train_seconds,
        "iterations": args.iterations,
        "saturated_weights": bitstream.saturated_count,
        "final_mse": model.loss_history.last().map(|&(_, mse)| mse),
    });
    println!("{stats}");
    Ok(())
}

fn cmd_decompress(args: DecompressArgs) -> anyhow::Result<()> {
    let bytes = std::fs::read(&args.input).map_err(Error::from)?;
    let (model, (w, h)) = decode(&bytes)?;
    let width = args.width.unwrap_or(w);
    let height = args.height.unwrap_or(h);
    if width == 0 || height == 0 {
        anyhow::bail!(Error::InvalidConfig("output dimensions must be >= 1".into()));
    }
    let image = reconstruct(&model, width, height)?;
    image.save_png(&args.out)?;
    if args.json {
        println!(
            "{}",
            serde_json::json!({ "out": args.out, "width": width, "height": height })
        );
    } else {
        println!("wrote {} ({width}x{height})", args.out.display());
    }
    Ok(())
}

fn cmd_inspect(input: &Path) -> anyhow::Result<()> {
    let bytes = std::fs::read(input).map_err(Error::from)?;
    let header = inrc_core::BitstreamHeader::parse(&bytes)?;
    let arch = header.arch();
    let expected_payload = 2 * arch.parameter_count();
    let info = serde_json::json!({
        "magic": "INRB",
        "version": inrc_core::codec::VERSION,
        "encoding": header.kind.label(),
        "mapping_size": header.mapping_size,
        "sigma": header.sigma,
        "seed_w": header.seed_w,
        "seed_b": header.seed_b,
        "hidden_layers": header.hidden_layers,
        "hidden_width": header.hidden_width,
        "output_dim": header.output_dim,
        "image_width": header.image_width,
        "image_height": header.image_height,
        "parameter_count": arch.parameter_count(),
        "payload_bytes_expected": expected_payload,
        "payload_bytes_present": bytes.len().saturating_sub(inrc_core::codec::HEADER_LEN),
        "bpp": bits_per_pixel(&arch, header.image_width as usize, header.image_height as usize, false),
    });
    println!("{}", serde_json::to_string_pretty(&info)?);
    Ok(())
}

fn cmd_kernel_exp(args: KernelExpArgs) -> anyhow::Result<()> {
    let gram = match args.gram.as_str() {
        "halved" => CosineGram::Halved,
        "unbiased" => CosineGram::Unbiased,
        other => anyhow::bail!(Error::InvalidConfig(format!(
            "unknown gram normalization {other:?} (expected \"halved\" or \"unbiased\")"
        ))),
    };
    let config = KernelExperimentConfig {
        mapping_sizes: args.sizes,
        trials: args.trials,
        n: args.n,
        root_seed: args.seed,
        sigma: args.sigma,
        gram,
        input: if args.pairs { KernelInput::TimeValuePairs } else { KernelInput::Values },
    };
    let result = inrc_core::run_kernel_experiment(&config)?;
    let csv = result.to_csv();
    if let Some(path) = &args.out {
        std::fs::write(path, &csv).map_err(Error::from)?;
    } else {
        print!("{csv}");
    }

    let crossover = result.crossover();
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "sigma": result.sigma,
                "n": result.n,
                "trials": result.trials,
                "crossover_mapping_size": crossover,
                "csv": args.out,
            })
        );
    } else {
        eprintln!("sigma = {:.6} (5th-percentile rule unless overridden)", result.sigma);
        match crossover {
            Some(m) => eprintln!("baseline error crosses below the proposed mapping at m = {m}"),
            None => eprintln!("no crossover within the tested mapping sizes"),
        }
    }
    Ok(())
}
