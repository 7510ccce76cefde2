//! Portable, seed-stable random number generation.
//!
//! The decoder regenerates Fourier bases from seeds stored in the bitstream,
//! so the exact generator and the order in which draws are consumed are part
//! of the file format. Everything here is fixed for that reason:
//!
//! * state generator: xoshiro256** with its state expanded from a 64-bit
//!   seed by four successive splitmix64 outputs;
//! * uniform doubles: top 53 bits of each output, giving values in `[0, 1)`;
//! * Gaussians: Box–Muller on consecutive uniform pairs `(u1, u2)`, returning
//!   the cosine branch first and caching the sine branch for the next call.

/// splitmix64 step: advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// xoshiro256** seeded via splitmix64 expansion of a 64-bit seed.
#[derive(Debug, Clone)]
pub struct Xoshiro256StarStar {
    s: [u64; 4],
}

impl Xoshiro256StarStar {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform double in `[0, 1)` from the top 53 bits of one output.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Standard-normal source: Box–Muller over a [`Xoshiro256StarStar`] stream.
///
/// Each pair of uniforms `(u1, u2)` yields `r·cos θ` then `r·sin θ` with
/// `r = sqrt(-2 ln(1 - u1))` and `θ = 2π·u2`; the sine branch is buffered.
#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: Xoshiro256StarStar,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256StarStar::new(seed),
            spare: None,
        }
    }

    pub fn next_standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.rng.next_f64();
        let u2 = self.rng.next_f64();
        // 1 - u1 lies in (0, 1], keeping the log finite.
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Stable 64-bit hash for deriving per-cell seeds from a root seed and a
/// sequence of labeled parts. FNV-1a over the bytes, finished with one
/// splitmix64 mix so short inputs still diffuse; never depends on platform
/// or standard-library hashing internals.
#[derive(Debug, Clone)]
pub struct SeedHasher {
    acc: u64,
}

impl SeedHasher {
    pub fn new(root_seed: u64) -> Self {
        let mut h = Self {
            acc: 0xcbf2_9ce4_8422_2325,
        };
        h.write_u64(root_seed);
        h
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) -> &mut Self {
        for &b in bytes {
            self.acc ^= b as u64;
            self.acc = self.acc.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self
    }

    pub fn write_str(&mut self, s: &str) -> &mut Self {
        // Length prefix keeps ("ab","c") distinct from ("a","bc").
        self.write_u64(s.len() as u64);
        self.write_bytes(s.as_bytes())
    }

    pub fn write_u64(&mut self, v: u64) -> &mut Self {
        self.write_bytes(&v.to_le_bytes())
    }

    pub fn finish(&self) -> u64 {
        let mut state = self.acc;
        splitmix64(&mut state)
    }
}
