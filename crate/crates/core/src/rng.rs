//! Counter-based deterministic random numbers for problem construction.
//!
//! Randomized test instances must be bit-reproducible from `(name, dimension,
//! parameters, seed)` alone, independent of call order and platform, so all
//! instance data is derived through SplitMix64: the i-th draw is a pure
//! function of `seed` and `i`. The update is the standard one
//! (Steele, Lea, Flood 2014):
//!
//! ```text
//! z = seed + (i + 1) * 0x9E3779B97F4A7C15
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out = z ^ (z >> 31)
//! ```

/// The i-th SplitMix64 output for a given seed.
pub fn splitmix64(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sequential view over the counter-based stream.
#[derive(Debug, Clone)]
pub struct Stream {
    seed: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream { seed, counter: 0 }
    }

    /// Independent substream; `tag` separates the uses of one seed (matrix
    /// entries vs right-hand side vs starting point).
    pub fn substream(seed: u64, tag: u64) -> Self {
        Stream {
            seed: splitmix64(seed, tag),
            counter: 0,
        }
    }

    fn next_u64(&mut self) -> u64 {
        let v = splitmix64(self.seed, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller. Consumes two uniforms per value.
    pub fn normal(&mut self) -> f64 {
        // u in (0, 1]: avoids ln(0)
        let u = 1.0 - self.uniform();
        let v = self.uniform();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }
}
