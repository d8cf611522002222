//! Counter-based splittable random number generation.
//!
//! The generator is Philox-4x64 with 10 rounds. Randomness is addressed,
//! not evolved: every 256-bit counter value maps independently to a
//! 256-bit output block under a 128-bit key, so streams can be split
//! without coordination and replicate `k` draws the same values whether
//! replicates run serially or in parallel.
//!
//! Layout of the counter and key:
//!
//! ```text
//! counter = [ block, substream, replicate, purpose ]
//! key     = [ seed,  DOMAIN ]
//! ```
//!
//! `purpose` tags what the stream feeds (field simulation, observation
//! noise, ...), `replicate` is the benchmark replicate index, and
//! `substream` isolates per-pixel or per-observation draw sequences so
//! consumers never depend on how many values a neighbour consumed.
//!
//! Draws are exactly reproducible across platforms: the uniform layer is
//! pure integer arithmetic plus exact power-of-two scaling, and the
//! Gaussian layer (Box-Muller) evaluates its logarithm and cosine with
//! the in-module polynomial kernels below rather than platform libm.

/// Identifier reported by `--version` and recorded in benchmark output.
pub const RNG_ALGORITHM: &str = "philox4x64-10";

const MULT0: u64 = 0xD2E7_470E_E14C_6C93;
const MULT1: u64 = 0xCA5A_8263_9512_1157;
const WEYL0: u64 = 0x9E37_79B9_7F4A_7C15;
const WEYL1: u64 = 0xBB67_AE85_84CA_A73B;
/// Domain-separation constant occupying the second key lane.
const DOMAIN: u64 = 0x5261_6452_6563_3031;

#[inline]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = (a as u128) * (b as u128);
    ((p >> 64) as u64, p as u64)
}

/// One Philox-4x64 block: 10 rounds over `ctr` under `key`.
fn philox4x64_10(ctr: [u64; 4], key: [u64; 2]) -> [u64; 4] {
    let mut c = ctr;
    let (mut k0, mut k1) = (key[0], key[1]);
    for round in 0..10 {
        if round > 0 {
            k0 = k0.wrapping_add(WEYL0);
            k1 = k1.wrapping_add(WEYL1);
        }
        let (hi0, lo0) = mulhilo(MULT0, c[0]);
        let (hi1, lo1) = mulhilo(MULT1, c[2]);
        c = [hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0];
    }
    c
}

/// What a stream feeds; occupies the `purpose` counter lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamPurpose {
    /// Sequential field simulation draws.
    Field,
    /// Observation noise draws.
    Noise,
}

impl StreamPurpose {
    fn lane(self) -> u64 {
        match self {
            StreamPurpose::Field => 1,
            StreamPurpose::Noise => 2,
        }
    }
}

/// Full specification of a draw sequence: algorithm (fixed), seed, and
/// the (purpose, replicate) derivation path. Identical specs produce
/// identical sequences on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub purpose: StreamPurpose,
    pub replicate: u64,
}

impl RngSpec {
    pub fn new(seed: u64, purpose: StreamPurpose, replicate: u64) -> Self {
        Self {
            seed,
            purpose,
            replicate,
        }
    }

    /// Stream at substream lane 0.
    pub fn rng(&self) -> PhiloxRng {
        self.substream(0)
    }

    /// Stream with an explicit substream lane.
    pub fn substream(&self, substream: u64) -> PhiloxRng {
        PhiloxRng {
            key: [self.seed, DOMAIN],
            lanes: [substream, self.replicate, self.purpose.lane()],
            block: 0,
            buf: [0; 4],
            pos: 4,
        }
    }
}

/// A positioned draw sequence within one (seed, purpose, replicate,
/// substream) stream.
#[derive(Debug, Clone)]
pub struct PhiloxRng {
    key: [u64; 2],
    lanes: [u64; 3],
    block: u64,
    buf: [u64; 4],
    pos: usize,
}

impl PhiloxRng {
    /// Fresh stream sharing key and (replicate, purpose) lanes but with a
    /// different substream lane, starting at block 0.
    pub fn substream(&self, substream: u64) -> PhiloxRng {
        PhiloxRng {
            key: self.key,
            lanes: [substream, self.lanes[1], self.lanes[2]],
            block: 0,
            buf: [0; 4],
            pos: 4,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        if self.pos == 4 {
            self.buf = philox4x64_10(
                [self.block, self.lanes[0], self.lanes[1], self.lanes[2]],
                self.key,
            );
            self.block = self.block.wrapping_add(1);
            self.pos = 0;
        }
        let v = self.buf[self.pos];
        self.pos += 1;
        v
    }

    /// Uniform draw in the open interval (0, 1), derived from the top 53
    /// bits: `((x >> 11) + 0.5) * 2^-53`. Every step is exact in f64.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * 2f64.powi(-53)
    }

    /// Standard normal draw via Box-Muller on two uniforms:
    /// `sqrt(-2 ln u1) * cos(2 pi u2)`. Consumes exactly two `u64`s.
    pub fn next_standard_normal(&mut self) -> f64 {
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        (-2.0 * ln_unit(u1)).sqrt() * cos_two_pi(u2)
    }
}

// --- deterministic elementary kernels -----------------------------------
//
// Platform libm does not promise identical last-bit results for ln and
// cos, which would leak into the frozen draw sequences. The two kernels
// below use only +, -, *, / and sqrt, all exactly specified by IEEE 754.

const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

/// Natural logarithm for x in (0, 1]; accurate to a few ulp.
fn ln_unit(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x <= 1.0);
    let bits = x.to_bits();
    let mut exp = ((bits >> 52) & 0x7ff) as i32 - 1023;
    let mut m = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | 0x3ff0_0000_0000_0000);
    // Renormalize the mantissa into [sqrt(1/2), sqrt(2)).
    if m > std::f64::consts::SQRT_2 {
        m *= 0.5;
        exp += 1;
    }
    let s = (m - 1.0) / (m + 1.0);
    let z = s * s;
    // 2 atanh(s) = 2s (1 + z/3 + z^2/5 + ...); |s| <= 0.1716 so twelve
    // terms reach ~1e-18.
    let mut poly = 1.0 / 23.0;
    for k in (0..11).rev() {
        poly = 1.0 / (2 * k + 1) as f64 + z * poly;
    }
    let lnm = 2.0 * s * poly;
    let e = exp as f64;
    e * LN2_HI + (lnm + e * LN2_LO)
}

const COS_COEF: [f64; 6] = [
    4.166_666_666_666_660_190_37e-2,
    -1.388_888_888_887_410_957_49e-3,
    2.480_158_728_947_672_941_78e-5,
    -2.755_731_435_139_066_330_35e-7,
    2.087_572_321_298_174_827_90e-9,
    -1.135_964_755_778_819_482_65e-11,
];
const SIN_COEF: [f64; 6] = [
    -1.666_666_666_666_663_243_48e-1,
    8.333_333_333_322_489_461_24e-3,
    -1.984_126_982_985_794_931_34e-4,
    2.755_731_370_707_006_767_89e-6,
    -2.505_076_025_340_686_341_95e-8,
    1.589_690_995_211_550_102_21e-10,
];

/// Polynomial cosine on [0, pi/4].
fn cos_kernel(x: f64) -> f64 {
    let z = x * x;
    let mut r = COS_COEF[5];
    for c in COS_COEF[..5].iter().rev() {
        r = c + z * r;
    }
    1.0 - 0.5 * z + z * z * r
}

/// Polynomial sine on [0, pi/4].
fn sin_kernel(x: f64) -> f64 {
    let z = x * x;
    let mut r = SIN_COEF[5];
    for c in SIN_COEF[..5].iter().rev() {
        r = c + z * r;
    }
    x + x * z * r
}

/// cos(2 pi u) for u in [0, 1), reduced into octants of the turn so the
/// polynomial kernels only see [0, pi/4].
fn cos_two_pi(u: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&u));
    let x = 8.0 * u;
    let oct = (x as i32).min(7);
    let f = x - oct as f64;
    let phi = std::f64::consts::FRAC_PI_4 * f;
    let psi = std::f64::consts::FRAC_PI_4 * (1.0 - f);
    match oct {
        0 => cos_kernel(phi),
        1 => sin_kernel(psi),
        2 => -sin_kernel(phi),
        3 => -cos_kernel(psi),
        4 => -cos_kernel(phi),
        5 => -sin_kernel(psi),
        6 => sin_kernel(phi),
        _ => cos_kernel(psi),
    }
}
