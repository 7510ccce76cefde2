//! IEEE 754 binary16 conversion for the weight payload.
//!
//! Narrowing rounds to nearest-even; widening is exact. Values outside the
//! binary16 range saturate to ±65504 and are counted rather than failing,
//! since a rare blown-up weight should degrade the image, not the encode.

use super::{MlpArch, MlpParams};
use serde::{Deserialize, Serialize};

/// Largest finite binary16 value.
pub const HALF_MAX: f32 = 65504.0;

/// Narrow an `f32` to binary16 bits, round-to-nearest-even. Finite values
/// beyond the binary16 range produce the infinity pattern; saturation policy
/// lives in [`quantize_binary16`].
pub fn half_bits_from_f32(x: f32) -> u16 {
    let bits = x.to_bits();
    let sign = ((bits >> 16) & 0x8000) as u16;
    let exp = ((bits >> 23) & 0xff) as i32;
    let mant = bits & 0x007f_ffff;

    if exp == 0xff {
        // Infinities and NaNs (NaN keeps its top payload bits).
        return if mant == 0 {
            sign | 0x7c00
        } else {
            sign | 0x7c00 | ((mant >> 13) as u16).max(1)
        };
    }
    let e = exp - 127;
    if e >= -14 {
        // Candidate normal half; rounding may carry into the exponent and
        // overflow to infinity, which is the IEEE round-to-nearest result.
        if e > 15 {
            return sign | 0x7c00;
        }
        let half_exp = (e + 15) as u32;
        let mut h = (half_exp << 10) | (mant >> 13);
        let round = mant & 0x1fff;
        if round > 0x1000 || (round == 0x1000 && (h & 1) == 1) {
            h += 1;
        }
        if h >= 0x7c00 {
            return sign | 0x7c00;
        }
        return sign | h as u16;
    }
    if e >= -25 {
        // Subnormal half: shift the (explicit) significand into place.
        let m = mant | 0x0080_0000;
        let shift = (13 - 14 - e) as u32;
        let mut h = m >> shift;
        let round = m & ((1u32 << shift) - 1);
        let halfway = 1u32 << (shift - 1);
        if round > halfway || (round == halfway && (h & 1) == 1) {
            h += 1;
        }
        return sign | h as u16;
    }
    // Magnitude below half the smallest subnormal: rounds to (signed) zero.
    sign
}

/// Widen binary16 bits to the exactly representable `f32`.
pub fn f32_from_half_bits(h: u16) -> f32 {
    let sign = ((h & 0x8000) as u32) << 16;
    let exp = ((h >> 10) & 0x1f) as u32;
    let mant = (h & 0x03ff) as u32;
    let bits = if exp == 0 {
        if mant == 0 {
            sign
        } else {
            // Normalize the subnormal significand.
            let mut e: i32 = 1;
            let mut m = mant;
            while m & 0x0400 == 0 {
                m <<= 1;
                e -= 1;
            }
            m &= 0x03ff;
            sign | (((e + 127 - 15) as u32) << 23) | (m << 13)
        }
    } else if exp == 0x1f {
        sign | 0x7f80_0000 | (mant << 13)
    } else {
        sign | ((exp + 127 - 15) << 23) | (mant << 13)
    };
    f32::from_bits(bits)
}

/// Network parameters in binary16, in bitstream payload order
/// (per layer: weights row-major, then biases).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizedParams {
    pub arch: MlpArch,
    pub values: Vec<u16>,
    /// Finite inputs clamped to ±65504 during quantization.
    pub saturated_count: usize,
}

pub fn quantize_binary16(params: &MlpParams<f32>) -> QuantizedParams {
    let arch = params.arch_of();
    let mut values = Vec::with_capacity(arch.parameter_count());
    let mut saturated = 0usize;
    for layer in &params.layers {
        for &v in layer.weights.iter().chain(layer.biases.iter()) {
            let bits = half_bits_from_f32(v);
            if v.is_finite() && (bits & 0x7fff) == 0x7c00 {
                saturated += 1;
                values.push((bits & 0x8000) | 0x7bff);
            } else {
                values.push(bits);
            }
        }
    }
    QuantizedParams {
        arch,
        values,
        saturated_count: saturated,
    }
}

pub fn dequantize_binary16(q: &QuantizedParams) -> MlpParams<f32> {
    let mut params = MlpParams::zeros(&q.arch);
    let mut it = q.values.iter();
    params.for_each_value_mut(|v| {
        *v = f32_from_half_bits(*it.next().expect("value count matches arch"));
    });
    params
}
