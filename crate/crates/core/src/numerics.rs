//! Scalar special functions and reproducible uniform streams.
//!
//! Everything here is a pure function. Drawing from an [`RngStream`] never
//! mutates state, so replicates can be evaluated in any order, on any number
//! of workers, with bit-identical results.

use core::f64::consts::FRAC_1_SQRT_2;

use crate::Error;

/// Probabilities entering `Φ⁻¹` (or a logarithm) are pulled into
/// `[PROB_CLAMP, 1 - PROB_CLAMP]` so the transform stays finite.
pub const PROB_CLAMP: f64 = 1e-15;

const INV_SQRT_TWO_PI: f64 = 0.398_942_280_401_432_7;

/// A probability or p-value, guaranteed to lie in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct ProbValue(f64);

impl ProbValue {
    /// Validates `value` as a probability; NaN and out-of-range values are
    /// rejected at construction.
    pub fn new(value: f64) -> Result<Self, Error> {
        if value.is_nan() || !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidProbability(value));
        }
        Ok(Self(value))
    }

    /// Constructor for values already known to be valid probabilities.
    pub(crate) fn new_unchecked(value: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&value), "bad probability {value}");
        Self(value)
    }

    pub const fn get(self) -> f64 {
        self.0
    }

    /// The value pulled into the open interval `(0, 1)`; see [`PROB_CLAMP`].
    pub fn clamped_interior(self) -> f64 {
        clamp_interior(self.0)
    }
}

pub(crate) fn clamp_interior(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Standard normal CDF `Φ(z)`.
///
/// Evaluated through `erfc`, which keeps full precision in both tails and
/// saturates to exactly 0 or 1 far out (|z| beyond roughly 38).
pub fn norm_cdf(z: f64) -> ProbValue {
    ProbValue::new_unchecked(0.5 * libm::erfc(-z * FRAC_1_SQRT_2))
}

/// Standard normal survival function `1 - Φ(z)`, computed without
/// cancellation in the upper tail.
pub fn norm_sf(z: f64) -> ProbValue {
    ProbValue::new_unchecked(0.5 * libm::erfc(z * FRAC_1_SQRT_2))
}

/// Standard normal density.
pub(crate) fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_TWO_PI * libm::exp(-0.5 * z * z)
}

/// Standard normal quantile `Φ⁻¹(p)`.
///
/// Errors when `p` is exactly 0 or 1. Callers that want the finite clamped
/// transform instead use [`inv_norm_cdf_clamped`].
pub fn inv_norm_cdf(p: ProbValue) -> Result<f64, Error> {
    let v = p.get();
    if v <= 0.0 || v >= 1.0 {
        return Err(Error::ProbabilityAtBoundary(v));
    }
    Ok(probit(v))
}

/// `Φ⁻¹` after clamping the argument into `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub fn inv_norm_cdf_clamped(p: ProbValue) -> f64 {
    probit(clamp_interior(p.get()))
}

/// `Φ⁻¹(1 - p)` with clamping: the upper-tail quantile the combination
/// statistic applies to each surviving p-value.
pub(crate) fn probit_upper(p: f64) -> f64 {
    probit(clamp_interior(1.0 - p))
}

/// Normal quantile for `p` strictly inside `(0, 1)`.
///
/// AS241-class rational approximation refined by one Newton step against
/// [`norm_cdf`]; absolute error is far below the 1e-9 contract on
/// `[1e-15, 1 - 1e-15]`.
pub(crate) fn probit(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "probit argument {p} not in (0, 1)");
    if p > 0.5 {
        // 1 - p is exact in IEEE arithmetic for p >= 0.5.
        -probit_half(1.0 - p)
    } else {
        probit_half(p)
    }
}

/// Quantile for `p` in `(0, 0.5]`; always non-positive.
#[allow(clippy::excessive_precision)] // published coefficients, kept verbatim
fn probit_half(p: f64) -> f64 {
    // Coefficient blocks of the AS241 double-precision fit, constant term
    // first; each denominator carries an explicit unit constant.
    const CENTRAL_NUM: [f64; 8] = [
        3.3871328727963666080,
        1.3314166789178437745e2,
        1.9715909503065514427e3,
        1.3731693765509461125e4,
        4.5921953931549871457e4,
        6.7265770927008700853e4,
        3.3430575583588128105e4,
        2.5090809287301226727e3,
    ];
    const CENTRAL_DEN: [f64; 8] = [
        1.0,
        4.2313330701600911252e1,
        6.8718700749205790830e2,
        5.3941960214247511077e3,
        2.1213794301586595867e4,
        3.9307895800092710610e4,
        2.8729085735721942674e4,
        5.2264952788528545610e3,
    ];
    const MID_NUM: [f64; 8] = [
        1.42343711074968357734,
        4.63033784615654529590,
        5.76949722146069140550,
        3.64784832476320460504,
        1.27045825245236838258,
        2.41780725177450611770e-1,
        2.27238449892691845833e-2,
        7.74545014278341407640e-4,
    ];
    const MID_DEN: [f64; 8] = [
        1.0,
        2.05319162663775882187,
        1.67638483018380384940,
        6.89767334985100004550e-1,
        1.48103976427480074590e-1,
        1.51986665636164571966e-2,
        5.47593808499534494600e-4,
        1.05075007164441684324e-9,
    ];
    const FAR_NUM: [f64; 8] = [
        6.65790464350110377720,
        5.46378491116411436990,
        1.78482653991729133580,
        2.96560571828504891230e-1,
        2.65321895265761230930e-2,
        1.24266094738807843860e-3,
        2.71155556874348757815e-5,
        2.01033439929228813265e-7,
    ];
    const FAR_DEN: [f64; 8] = [
        1.0,
        5.99832206555887937690e-1,
        1.36929880922735805310e-1,
        1.48753612908506148525e-2,
        7.86869131145613259100e-4,
        1.84631831751005468180e-5,
        1.42151175831644588870e-7,
        2.04426310338993978564e-15,
    ];

    let q = p - 0.5;
    let mut z = if q >= -0.425 {
        let r = 0.180_625 - q * q;
        q * poly(&CENTRAL_NUM, r) / poly(&CENTRAL_DEN, r)
    } else {
        let r = libm::sqrt(-libm::log(p));
        if r <= 5.0 {
            let r = r - 1.6;
            -poly(&MID_NUM, r) / poly(&MID_DEN, r)
        } else {
            let r = r - 5.0;
            -poly(&FAR_NUM, r) / poly(&FAR_DEN, r)
        }
    };

    // One Newton polish against the erfc-based CDF. The density underflows
    // only far beyond the clamp range, where the rational fit stands alone.
    let pdf = norm_pdf(z);
    if pdf > 0.0 {
        let err = 0.5 * libm::erfc(-z * FRAC_1_SQRT_2) - p;
        z -= err / pdf;
    }
    z
}

/// Horner evaluation, coefficients in ascending order.
fn poly(c: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &coef in c.iter().rev() {
        acc = acc * x + coef;
    }
    acc
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const STREAM_SALT: u64 = 0xd1b5_4a32_d192_ed03;

/// splitmix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A counter-based uniform stream.
///
/// The whole sequence is a pure function of `(master_seed, stream_index)`:
/// one stream per Monte Carlo replicate gives parallelism-invariant
/// determinism without any shared RNG state. Draws are evaluated as
/// splitmix64 outputs at explicit counter positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    fn state_key(&self) -> u64 {
        mix64(self.master_seed ^ mix64(self.stream_index.wrapping_mul(GOLDEN_GAMMA) ^ STREAM_SALT))
    }

    /// Uniform draw at `counter`, strictly inside `(0, 1)`.
    pub fn uniform_draw(&self, counter: u64) -> ProbValue {
        let word = mix64(
            self.state_key()
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        );
        // 53-bit mantissa, offset by half a step: never exactly 0 or 1.
        ProbValue::new_unchecked(((word >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0))
    }
}
