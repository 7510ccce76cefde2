//! Rate-distortion sweep: run a grid of (image, arch, mapping size,
//! encoding) training cells, aggregate mean PSNR per configuration, and
//! report per-mapping-size BD rates of the proposed encoding against the
//! baseline.

use crate::{derive_seeds, parse_arch};
use clap::Args;
use inrc_core::{
    bd_rate_report, bits_per_pixel, decode, encode, psnr, rd_table, reconstruct, train,
    EncodingConfig, EncodingKind, Error, ImageBuffer, RdCurve, RdPoint, RdTableEntry, TrainConfig,
};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Args)]
pub struct RdSweepArgs {
    /// Sweep manifest (flat `key = value` lines; see README).
    config: PathBuf,

    /// Output directory override (default: the manifest's `out_dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,

    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub images: Vec<PathBuf>,
    pub archs: Vec<String>,
    pub mapping_sizes: Vec<usize>,
    pub encodings: Vec<EncodingKind>,
    pub sigma: f32,
    pub iterations: u64,
    pub lr: f64,
    pub crop: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub label: String,
}

impl SweepConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, Error> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("sweep config line {}: expected key = value", lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let list = |key: &str| -> Vec<String> {
            map.get(key)
                .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
                .unwrap_or_default()
        };

        let images: Vec<PathBuf> = list("images")
            .into_iter()
            .map(|s| {
                let p = PathBuf::from(&s);
                if p.is_absolute() {
                    p
                } else {
                    base_dir.join(p)
                }
            })
            .collect();
        let archs = list("archs");
        let mapping_sizes = list("mapping_sizes")
            .iter()
            .map(|s| s.parse::<usize>().map_err(|e| Error::InvalidConfig(format!("mapping size {s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if images.is_empty() || archs.is_empty() || mapping_sizes.is_empty() {
            return Err(Error::InvalidConfig(
                "sweep config needs at least one image, one arch and one mapping size".into(),
            ));
        }
        let encodings = if map.contains_key("encodings") {
            list("encodings")
                .iter()
                .map(|s| s.parse::<EncodingKind>())
                .collect::<Result<Vec<_>, _>>()?
        } else {
            vec![EncodingKind::BaselineSinCos, EncodingKind::RffCosine]
        };
        let scalar = |key: &str, default: f64| -> Result<f64, Error> {
            map.get(key)
                .map(|v| v.parse::<f64>().map_err(|e| Error::InvalidConfig(format!("{key} {v:?}: {e}"))))
                .unwrap_or(Ok(default))
        };
        Ok(Self {
            images,
            archs,
            mapping_sizes,
            encodings,
            sigma: scalar("sigma", 1.0)? as f32,
            iterations: scalar("iterations", 50_000.0)? as u64,
            lr: scalar("lr", 2e-4)?,
            crop: scalar("crop", 0.0)? as usize,
            seed: scalar("seed", 0.0)? as u64,
            out_dir: map
                .get("out_dir")
                .map(PathBuf::from)
                .map(|p| if p.is_absolute() { p } else { base_dir.join(p) })
                .unwrap_or_else(|| base_dir.to_path_buf()),
            label: map.get("label").cloned().unwrap_or_else(|| "sweep".into()),
        })
    }
}

struct Cell {
    image_index: usize,
    arch_name: String,
    mapping_size: usize,
    kind: EncodingKind,
}

struct CellOutcome {
    arch_name: String,
    mapping_size: usize,
    kind: EncodingKind,
    bpp: f64,
    psnr_db: f64,
}

pub fn cmd_rd_sweep(args: RdSweepArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.config).map_err(Error::from)?;
    let base_dir = args.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut config = SweepConfig::parse(&text, &base_dir)?;
    if let Some(out) = args.out {
        config.out_dir = out;
    }
    std::fs::create_dir_all(&config.out_dir).map_err(Error::from)?;

    // Load every image once up front; a missing image fails its cells, not
    // the sweep.
    let images: Vec<Result<ImageBuffer, String>> = config
        .images
        .iter()
        .map(|p| {
            ImageBuffer::load(p)
                .map(|img| img.center_crop(config.crop))
                .map_err(|e| format!("{}: {e}", p.display()))
        })
        .collect();

    let mut cells = Vec::new();
    for (image_index, _) in config.images.iter().enumerate() {
        for arch_name in &config.archs {
            for &mapping_size in &config.mapping_sizes {
                for &kind in &config.encodings {
                    cells.push(Cell {
                        image_index,
                        arch_name: arch_name.clone(),
                        mapping_size,
                        kind,
                    });
                }
            }
        }
    }

    let outcomes: Vec<Result<CellOutcome, String>> = cells
        .par_iter()
        .map(|cell| run_cell(&config, &images, cell))
        .collect();

    let mut failures = Vec::new();
    let mut grouped: BTreeMap<(String, usize, &'static str), (f64, f64, usize)> = BTreeMap::new();
    for (cell, outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(o) => {
                let key = (o.arch_name.clone(), o.mapping_size, o.kind.label());
                let slot = grouped.entry(key).or_insert((0.0, 0.0, 0));
                slot.0 += o.bpp;
                slot.1 += o.psnr_db;
                slot.2 += 1;
            }
            Err(e) => {
                let context = format!(
                    "image {} arch {} m {} {}: {e}",
                    config.images[cell.image_index].display(),
                    cell.arch_name,
                    cell.mapping_size,
                    cell.kind
                );
                eprintln!("cell failed: {context}");
                failures.push(context);
            }
        }
    }

    let entries: Vec<RdTableEntry> = grouped
        .iter()
        .map(|((arch, m, kind), &(bpp_sum, psnr_sum, count))| RdTableEntry {
            label: config.label.clone(),
            arch: arch.clone(),
            mapping_size: *m,
            encoding: kind.parse().expect("label round-trips"),
            bpp: bpp_sum / count as f64,
            psnr_db: psnr_sum / count as f64,
        })
        .collect();
    let table = rd_table(entries)?;

    let csv_path = config.out_dir.join("rd_table.csv");
    std::fs::write(&csv_path, table.to_csv()).map_err(Error::from)?;
    let json_path = config.out_dir.join("rd_table.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&table.to_json())?).map_err(Error::from)?;

    // BD-rate of proposed vs baseline per mapping size, over the rate points
    // traced by the architectures.
    let mut bd_rows = Vec::new();
    for &m in &config.mapping_sizes {
        let curve_for = |kind: EncodingKind| -> Option<RdCurve> {
            let mut pts: Vec<RdPoint> = table
                .entries
                .iter()
                .filter(|e| e.mapping_size == m && e.encoding == kind)
                .map(|e| RdPoint { bpp: e.bpp, psnr_db: e.psnr_db })
                .collect();
            pts.sort_by(|a, b| a.bpp.partial_cmp(&b.bpp).expect("finite bpp"));
            RdCurve::new(format!("{kind} m={m}"), pts).ok()
        };
        let row = match (curve_for(EncodingKind::BaselineSinCos), curve_for(EncodingKind::RffCosine)) {
            (Some(anchor), Some(test)) => match bd_rate_report(&anchor, &test) {
                Ok(report) => serde_json::json!({
                    "mapping_size": m,
                    "bd_rate_percent": report.percent,
                    "psnr_overlap": report.overlap,
                    "quadratic_fallback": report.quadratic_fallback,
                }),
                Err(e) => serde_json::json!({ "mapping_size": m, "unavailable": e.to_string() }),
            },
            _ => serde_json::json!({
                "mapping_size": m,
                "unavailable": "needs both encodings and at least 2 rate points",
            }),
        };
        bd_rows.push(row);
    }

    let summary = serde_json::json!({
        "label": config.label,
        "cells": cells.len(),
        "failed_cells": failures,
        "rd_table_csv": csv_path,
        "rd_table_json": json_path,
        "bd_rate_vs_baseline": bd_rows,
    });
    let summary_path = config.out_dir.join("summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?).map_err(Error::from)?;

    if args.json {
        println!("{summary}");
    } else {
        println!("wrote {}", csv_path.display());
        println!("wrote {}", summary_path.display());
        for row in &bd_rows {
            if let (Some(m), Some(r)) = (row.get("mapping_size"), row.get("bd_rate_percent")) {
                println!("m = {m}: BD-rate of proposed vs baseline = {:.2}%", r.as_f64().unwrap_or(f64::NAN));
            }
        }
    }
    Ok(())
}

fn run_cell(
    config: &SweepConfig,
    images: &[Result<ImageBuffer, String>],
    cell: &Cell,
) -> Result<CellOutcome, String> {
    let image = images[cell.image_index].as_ref().map_err(|e| e.clone())?;
    let arch = parse_arch(&cell.arch_name, cell.mapping_size).map_err(|e| e.to_string())?;
    let tag = config.images[cell.image_index]
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (seed_w, seed_b, init_seed) =
        derive_seeds(config.seed, &tag, &cell.arch_name, cell.mapping_size, cell.kind);
    let encoding = EncodingConfig::new(cell.kind, cell.mapping_size, config.sigma, seed_w, seed_b)
        .map_err(|e| e.to_string())?;
    let train_config = TrainConfig {
        arch,
        encoding,
        lr: config.lr,
        iterations: config.iterations,
        init_seed,
        log_every: 0,
    };
    let model = train(image, &train_config).map_err(|e| e.to_string())?;
    let dims = (image.width(), image.height());
    let bitstream = encode(&model, dims).map_err(|e| e.to_string())?;
    let (decoded, _) = decode(&bitstream.data).map_err(|e| e.to_string())?;
    let recon = reconstruct(&decoded, dims.0, dims.1).map_err(|e| e.to_string())?;
    let quality = psnr(&recon, image).map_err(|e| e.to_string())?;
    Ok(CellOutcome {
        arch_name: cell.arch_name.clone(),
        mapping_size: cell.mapping_size,
        kind: cell.kind,
        bpp: bits_per_pixel(&arch, dims.0, dims.1, false),
        psnr_db: quality,
    })
}
