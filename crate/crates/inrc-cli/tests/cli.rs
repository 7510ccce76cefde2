//! End-to-end tests of the `inrc` binary: exit codes, artifacts, and the
//! stability contracts scripting relies on.

use inrc_core::synthetic_test_image;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn inrc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_inrc"))
}

fn write_test_png(dir: &Path, seed: u64, size: usize) -> PathBuf {
    let path = dir.join(format!("img_{seed}_{size}.png"));
    synthetic_test_image(seed, size).save_png(&path).unwrap();
    path
}

fn stdout_json(output: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&output.stdout);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("bad JSON {e}: {text}"))
}

fn compress_small(image: &Path, out: &Path, extra: &[&str]) -> Output {
    inrc()
        .args([
            "compress",
            image.to_str().unwrap(),
            "-o",
            out.to_str().unwrap(),
            "--iterations",
            "150",
            "--lr",
            "5e-2",
            "--mapping-size",
            "8",
            "--arch",
            "2x8",
        ])
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn compress_reports_stats_and_decompress_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let image = write_test_png(dir.path(), 1, 16);
    let inrb = dir.path().join("a.inrb");

    let out = compress_small(&image, &inrb, &[]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stats = stdout_json(&out);
    for key in ["bpp", "psnr_after_quantization", "train_seconds", "iterations"] {
        assert!(stats.get(key).is_some(), "missing {key} in {stats}");
    }
    assert!(inrb.exists());

    // decompress at stored dims
    let png = dir.path().join("a.png");
    let out = inrc()
        .args(["decompress", inrb.to_str().unwrap(), "-o", png.to_str().unwrap(), "--json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let decoded = inrc_core::ImageBuffer::load(&png).unwrap();
    assert_eq!((decoded.width(), decoded.height()), (16, 16));

    // the decoded model reproduces the PSNR reported at compress time
    let bytes = std::fs::read(&inrb).unwrap();
    let (model, (w, h)) = inrc_core::decode(&bytes).unwrap();
    let recon = inrc_core::reconstruct(&model, w, h).unwrap();
    let original = inrc_core::ImageBuffer::load(&image).unwrap();
    let p = inrc_core::psnr(&recon, &original).unwrap();
    let reported = stats["psnr_after_quantization"].as_f64().unwrap();
    assert!((p - reported).abs() < 1e-6, "{p} vs {reported}");
}

#[test]
fn super_resolution_decode_is_allowed() {
    let dir = tempfile::tempdir().unwrap();
    let image = write_test_png(dir.path(), 2, 12);
    let inrb = dir.path().join("b.inrb");
    assert!(compress_small(&image, &inrb, &[]).status.success());

    let png = dir.path().join("b2x.png");
    let out = inrc()
        .args([
            "decompress",
            inrb.to_str().unwrap(),
            "-o",
            png.to_str().unwrap(),
            "--width",
            "24",
            "--height",
            "24",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let img = inrc_core::ImageBuffer::load(&png).unwrap();
    assert_eq!((img.width(), img.height()), (24, 24));
}

#[test]
fn missing_input_exits_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = compress_small(&dir.path().join("nope.png"), &dir.path().join("x.inrb"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.png"));
}

#[test]
fn corrupt_bitstream_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.inrb");
    std::fs::write(&bad, b"XXXX not a bitstream").unwrap();
    let out = inrc()
        .args(["decompress", bad.to_str().unwrap(), "-o", dir.path().join("o.png").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));

    // truncated payload is also a decode error
    let image = write_test_png(dir.path(), 3, 12);
    let inrb = dir.path().join("c.inrb");
    assert!(compress_small(&image, &inrb, &[]).status.success());
    let bytes = std::fs::read(&inrb).unwrap();
    std::fs::write(&bad, &bytes[..bytes.len() - 10]).unwrap();
    let out = inrc()
        .args(["decompress", bad.to_str().unwrap(), "-o", dir.path().join("o.png").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn inspect_dumps_header_fields() {
    let dir = tempfile::tempdir().unwrap();
    let image = write_test_png(dir.path(), 4, 12);
    let inrb = dir.path().join("d.inrb");
    assert!(compress_small(&image, &inrb, &["--encoding", "proposed", "--seed", "9"]).status.success());

    let out = inrc().args(["inspect", inrb.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success());
    let info: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(info["encoding"], "proposed");
    assert_eq!(info["mapping_size"], 8);
    assert_eq!(info["image_width"], 12);
    assert_eq!(info["payload_bytes_expected"], info["payload_bytes_present"]);
}

#[test]
fn thread_count_does_not_change_the_bitstream() {
    let dir = tempfile::tempdir().unwrap();
    let image = write_test_png(dir.path(), 5, 16);
    let one = dir.path().join("t1.inrb");
    let two = dir.path().join("t2.inrb");
    assert!(compress_small(&image, &one, &["--threads", "1"]).status.success());
    assert!(compress_small(&image, &two, &["--threads", "2"]).status.success());
    assert_eq!(std::fs::read(&one).unwrap(), std::fs::read(&two).unwrap());
}

#[test]
fn kernel_experiment_is_reproducible_and_reports_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("k.csv");
    let run = || {
        let out = inrc()
            .args([
                "kernel-exp",
                "--sizes",
                "8",
                "--trials",
                "1",
                "--n",
                "80",
                "--seed",
                "7",
                "-o",
                csv.to_str().unwrap(),
                "--json",
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(&csv).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 3, "{a}");
    assert_eq!(lines[0], "mapping_size,kind,mean_error,stddev_error,trials");
    assert!(lines[1].starts_with("8,baseline,"));
    assert!(lines[2].starts_with("8,proposed,"));
}

#[test]
fn rd_sweep_runs_grid_and_reports_bd_rate() {
    let dir = tempfile::tempdir().unwrap();
    for seed in [11, 12] {
        write_test_png(dir.path(), seed, 16);
    }
    let config = dir.path().join("sweep.conf");
    std::fs::write(
        &config,
        "images = img_11_16.png, img_12_16.png\n\
         archs = 1x6, 2x8, 2x12\n\
         mapping_sizes = 8\n\
         iterations = 120\n\
         lr = 2e-2\n\
         seed = 3\n\
         out_dir = results\n\
         label = demo\n",
    )
    .unwrap();

    let out = inrc().args(["rd-sweep", config.to_str().unwrap(), "--json"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["cells"], 12);
    assert_eq!(summary["failed_cells"].as_array().unwrap().len(), 0);

    let csv = std::fs::read_to_string(dir.path().join("results/rd_table.csv")).unwrap();
    // header + 3 archs x 2 encodings
    assert_eq!(csv.lines().count(), 7, "{csv}");
    let bd = &summary["bd_rate_vs_baseline"][0];
    assert_eq!(bd["mapping_size"], 8);
    assert!(bd.get("bd_rate_percent").is_some(), "{bd}");
}

#[test]
fn rd_sweep_with_empty_grid_writes_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    write_test_png(dir.path(), 13, 8);
    let config = dir.path().join("sweep.conf");
    std::fs::write(
        &config,
        "images = img_13_8.png\narchs = Q1\nmapping_sizes = 8\nencodings =\nout_dir = .\n",
    )
    .unwrap();
    let out = inrc().args(["rd-sweep", config.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("rd_table.csv")).unwrap();
    assert_eq!(csv, "label,arch,mapping_size,encoding,bpp,psnr_db\n");
}
