//! Distortion and rate metrics: MSE, PSNR, rate-distortion curves and the
//! Bjontegaard delta-rate between two curves.

use crate::encoding::EncodingKind;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use serde::Serialize;

/// Mean squared error over all pixels and channels on the `[0, 1]` scale.
pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::ShapeMismatch {
            context: "mse",
            expected: format!("{}x{}", a.width(), a.height()),
            actual: format!("{}x{}", b.width(), b.height()),
        });
    }
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| {
            let d = (*x - *y) as f64;
            d * d
        })
        .sum();
    Ok(sum / a.pixels().len() as f64)
}

/// `10·log10(1/mse)` in dB; identical images report `f64::INFINITY`.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    let e = mse(a, b)?;
    Ok(psnr_from_mse(e))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RdPoint {
    pub bpp: f64,
    pub psnr_db: f64,
}

/// A labeled rate-distortion curve, at least two points, strictly increasing
/// in rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdCurve {
    pub label: String,
    pub points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(label: impl Into<String>, points: Vec<RdPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidConfig("an RD curve needs at least 2 points".into()));
        }
        for pair in points.windows(2) {
            if !(pair[1].bpp > pair[0].bpp) {
                return Err(Error::InvalidConfig(format!(
                    "RD curve bpp must be strictly increasing, got {} then {}",
                    pair[0].bpp, pair[1].bpp
                )));
            }
        }
        if points.iter().any(|p| !(p.bpp > 0.0) || p.bpp.is_infinite()) {
            return Err(Error::InvalidConfig("RD curve bpp values must be finite and > 0".into()));
        }
        Ok(Self {
            label: label.into(),
            points,
        })
    }
}

/// Diagnostics alongside the Bjontegaard delta rate.
#[derive(Debug, Clone, Serialize)]
pub struct BdRateReport {
    /// Average rate difference of `test` against `anchor` at equal quality,
    /// in percent (negative = test needs fewer bits).
    pub percent: f64,
    /// PSNR interval the curves were integrated over.
    pub overlap: (f64, f64),
    /// True when a curve had only 3 usable points and a quadratic was fitted.
    pub quadratic_fallback: bool,
    /// Points dropped because their PSNR was not finite.
    pub excluded_points: usize,
}

/// Bjontegaard delta rate: fit `log10(bpp)` as a cubic polynomial of PSNR on
/// both curves, integrate over the common PSNR interval and convert the mean
/// log-rate difference back to percent.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve) -> Result<f64> {
    Ok(bd_rate_report(anchor, test)?.percent)
}

pub fn bd_rate_report(anchor: &RdCurve, test: &RdCurve) -> Result<BdRateReport> {
    let (ax, ay, a_dropped) = usable_points(anchor);
    let (tx, ty, t_dropped) = usable_points(test);
    let excluded = a_dropped + t_dropped;
    for (name, n) in [(&anchor.label, ax.len()), (&test.label, tx.len())] {
        if n < 3 {
            return Err(Error::InvalidConfig(format!(
                "curve {name:?} has {n} usable points; BD-rate needs at least 3"
            )));
        }
    }
    let quadratic_fallback = ax.len() == 3 || tx.len() == 3;

    let lo = min_of(&ax).max(min_of(&tx));
    let hi = max_of(&ax).min(max_of(&tx));
    if !(hi > lo) {
        return Err(Error::NoPsnrOverlap {
            anchor_lo: min_of(&ax),
            anchor_hi: max_of(&ax),
            test_lo: min_of(&tx),
            test_hi: max_of(&tx),
        });
    }

    let fa = PolyFit::fit(&ax, &ay, if ax.len() == 3 { 2 } else { 3 })?;
    let ft = PolyFit::fit(&tx, &ty, if tx.len() == 3 { 2 } else { 3 })?;
    let avg_diff = (ft.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
    Ok(BdRateReport {
        percent: (10f64.powf(avg_diff) - 1.0) * 100.0,
        overlap: (lo, hi),
        quadratic_fallback,
        excluded_points: excluded,
    })
}

/// `(psnr, log10(bpp))` pairs with non-finite PSNR points dropped.
fn usable_points(curve: &RdCurve) -> (Vec<f64>, Vec<f64>, usize) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0;
    for p in &curve.points {
        if p.psnr_db.is_finite() {
            xs.push(p.psnr_db);
            ys.push(p.bpp.log10());
        } else {
            dropped += 1;
        }
    }
    (xs, ys, dropped)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Least-squares polynomial in `x - x̄` (centering keeps the normal
/// equations well conditioned at PSNR-sized abscissae).
struct PolyFit {
    center: f64,
    coeffs: Vec<f64>,
}

impl PolyFit {
    fn fit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Self> {
        let n = xs.len();
        debug_assert!(n > degree);
        let center = xs.iter().sum::<f64>() / n as f64;
        let k = degree + 1;
        // normal equations: M c = r with M_ij = sum x^(i+j), r_i = sum y x^i
        let mut pow_sums = vec![0.0; 2 * degree + 1];
        let mut rhs = vec![0.0; k];
        for (&x, &y) in xs.iter().zip(ys) {
            let u = x - center;
            let mut p = 1.0;
            for (i, s) in pow_sums.iter_mut().enumerate() {
                *s += p;
                if i < k {
                    rhs[i] += y * p;
                }
                p *= u;
            }
        }
        let mut m = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                m[i * k + j] = pow_sums[i + j];
            }
        }
        let coeffs = solve_dense(&mut m, &mut rhs, k)?;
        Ok(Self { center, coeffs })
    }

    /// Exact integral of the fitted polynomial over `[lo, hi]` via its
    /// antiderivative.
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        let eval_anti = |x: f64| -> f64 {
            let u = x - self.center;
            let mut acc = 0.0;
            let mut p = u;
            for (i, &c) in self.coeffs.iter().enumerate() {
                acc += c * p / (i + 1) as f64;
                p *= u;
            }
            acc
        };
        eval_anti(hi) - eval_anti(lo)
    }
}

/// Gaussian elimination with partial pivoting on a dense k x k system.
fn solve_dense(m: &mut [f64], rhs: &mut [f64], k: usize) -> Result<Vec<f64>> {
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&a, &b| m[a * k + col].abs().partial_cmp(&m[b * k + col].abs()).expect("finite"))
            .expect("non-empty");
        if m[pivot_row * k + col].abs() < 1e-12 {
            return Err(Error::InvalidConfig(
                "degenerate polynomial fit (collinear or duplicated curve points)".into(),
            ));
        }
        if pivot_row != col {
            for j in 0..k {
                m.swap(col * k + j, pivot_row * k + j);
            }
            rhs.swap(col, pivot_row);
        }
        for row in col + 1..k {
            let f = m[row * k + col] / m[col * k + col];
            for j in col..k {
                m[row * k + j] -= f * m[col * k + j];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let mut acc = rhs[row];
        for j in row + 1..k {
            acc -= m[row * k + j] * x[j];
        }
        x[row] = acc / m[row * k + row];
    }
    Ok(x)
}

/// One aggregated sweep result: a single architecture/mapping-size/encoding
/// cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdTableEntry {
    pub label: String,
    pub arch: String,
    pub mapping_size: usize,
    pub encoding: EncodingKind,
    pub bpp: f64,
    pub psnr_db: f64,
}

/// Deterministically ordered rate-distortion table with CSV and JSON views.
#[derive(Debug, Clone, Serialize)]
pub struct RdTable {
    pub entries: Vec<RdTableEntry>,
}

pub fn rd_table(mut entries: Vec<RdTableEntry>) -> Result<RdTable> {
    entries.sort_by(|a, b| {
        (&a.arch, a.mapping_size, a.encoding.label())
            .cmp(&(&b.arch, b.mapping_size, b.encoding.label()))
    });
    for pair in entries.windows(2) {
        let key = |e: &RdTableEntry| (e.arch.clone(), e.mapping_size, e.encoding);
        if key(&pair[0]) == key(&pair[1]) {
            return Err(Error::InvalidConfig(format!(
                "ambiguous rd_table input: duplicate key (arch {}, m {}, {})",
                pair[0].arch, pair[0].mapping_size, pair[0].encoding
            )));
        }
    }
    Ok(RdTable { entries })
}

impl RdTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,arch,mapping_size,encoding,bpp,psnr_db\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{:.2}\n",
                csv_field(&e.label),
                csv_field(&e.arch),
                e.mapping_size,
                e.encoding,
                format_sig4(e.bpp),
                e.psnr_db
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "rows": self.entries })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Format with four significant digits (Table-style rates).
pub fn format_sig4(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}
