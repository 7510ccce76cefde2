//! Calibration scratchpad: learning-rate behavior on a constant image and
//! desk-scale margin sweeps. Not part of the test suite.

use inrc_core::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(String::as_str).unwrap_or("lr");
    match mode {
        "lr" => lr_sweep(),
        "margin" => margin_sweep(&args[2..]),
        "micro" => micro(),
        other => eprintln!("unknown mode {other}"),
    }
}

fn micro() {
    // raw throughput of one training iteration on a Q1/m=8 16384-pixel job
    let image = synthetic_test_image(11, 128);
    let encoding = EncodingConfig::new(EncodingKind::RffCosine, 8, 1.0, 1, 2).unwrap();
    let arch = named_arch("Q1", 8).unwrap();
    for iters in [200u64, 400] {
        let config = TrainConfig {
            iterations: iters,
            init_seed: 3,
            log_every: 0,
            ..TrainConfig::new(arch, encoding)
        };
        let t0 = std::time::Instant::now();
        let _ = train(&image, &config).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        let flops = 4.0 * 1820.0 * 16384.0 * iters as f64;
        println!(
            "iters {iters}: {dt:.2}s, {:.1} ms/iter, ~{:.1} GFLOP/s",
            1e3 * dt / iters as f64,
            flops / dt / 1e9
        );
    }
}

fn lr_sweep() {
    let image = ImageBuffer::new(16, 16, vec![0.4; 16 * 16 * 3]).unwrap();
    for lr in [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2] {
        for iters in [200u64, 500] {
            let encoding = EncodingConfig::new(EncodingKind::RffCosine, 8, 1.0, 3, 4).unwrap();
            let arch = MlpArch::new(8, 2, 8, 3).unwrap();
            let config = TrainConfig {
                lr,
                iterations: iters,
                init_seed: 5,
                log_every: 0,
                ..TrainConfig::new(arch, encoding)
            };
            let model = train(&image, &config).unwrap();
            let recon = reconstruct(&model, 16, 16).unwrap();
            println!("lr {lr:.0e} iters {iters}: psnr {:.2}", psnr(&recon, &image).unwrap());
        }
    }
}

fn margin_sweep(args: &[String]) {
    let iters: u64 = args.first().map(|s| s.parse().unwrap()).unwrap_or(5000);
    let img_seeds: Vec<u64> = vec![11, 23, 37];
    let enc_seeds: Vec<u64> = vec![100, 200, 300];
    let mut all = Vec::new();
    for &img_seed in &img_seeds {
        let image = synthetic_test_image(img_seed, 128);
        for &enc_seed in &enc_seeds {
            let t0 = std::time::Instant::now();
            let mut psnrs = Vec::new();
            for kind in [EncodingKind::BaselineSinCos, EncodingKind::RffCosine] {
                let encoding = EncodingConfig::new(kind, 8, 1.0, enc_seed, enc_seed + 1).unwrap();
                let arch = named_arch("Q1", 8).unwrap();
                let config = TrainConfig {
                    iterations: iters,
                    init_seed: enc_seed + 2,
                    log_every: 0,
                    ..TrainConfig::new(arch, encoding)
                };
                let model = train(&image, &config).unwrap();
                // decoded-model PSNR, as the codec reports it
                let bs = encode(&model, (128, 128)).unwrap();
                let (decoded, dims) = decode(&bs.data).unwrap();
                let recon = reconstruct(&decoded, dims.0, dims.1).unwrap();
                psnrs.push(psnr(&recon, &image).unwrap());
            }
            let margin = psnrs[1] - psnrs[0];
            all.push(margin);
            println!(
                "img {img_seed} enc {enc_seed}: base {:.2} prop {:.2} margin {margin:+.2} ({:.0}s)",
                psnrs[0],
                psnrs[1],
                t0.elapsed().as_secs_f64()
            );
        }
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let min = all.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("mean {mean:+.2} min {min:+.2}");
}
