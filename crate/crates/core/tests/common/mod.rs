//! Independent numerical oracles for the test suites.
//!
//! Nothing here calls into the crate under test: the normal CDF comes from
//! composite Simpson integration of the density, tails from the Mills-ratio
//! continued fraction, and quantiles from bisection on that CDF.

#![allow(dead_code)]

const INV_SQRT_TWO_PI: f64 = 0.3989422804014327;

fn density(t: f64) -> f64 {
    INV_SQRT_TWO_PI * (-0.5 * t * t).exp()
}

/// Composite Simpson over `[a, b]` with `2n` panels, Kahan-compensated so
/// tens of thousands of terms do not erode the estimate.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / (2 * n) as f64;
    let mut acc = f(a) + f(b);
    let mut carry = 0.0;
    for i in 1..(2 * n) {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        let term = weight * f(a + i as f64 * h) - carry;
        let next = acc + term;
        carry = (next - acc) - term;
        acc = next;
    }
    acc * h / 3.0
}

/// Upper tail `P(Z > z)` for `z > 0` via the Mills-ratio continued fraction.
fn mills_upper(z: f64) -> f64 {
    let mut frac = z;
    for n in (1..=200).rev() {
        frac = z + n as f64 / frac;
    }
    density(z) / frac
}

/// Oracle standard normal CDF.
///
/// The central region integrates the density; past 4.5 sigma the continued
/// fraction takes over so tail values keep relative precision instead of
/// drowning in the 0.5 - 0.5 cancellation.
pub fn phi(z: f64) -> f64 {
    if z < -4.5 {
        mills_upper(-z)
    } else if z > 4.5 {
        1.0 - mills_upper(z)
    } else {
        0.5 + simpson(density, 0.0, z, 20_000)
    }
}

/// Oracle upper tail `P(Z > z)`, accurate in the far right tail.
pub fn phi_upper(z: f64) -> f64 {
    if z > 4.5 {
        mills_upper(z)
    } else {
        1.0 - phi(z)
    }
}

/// Oracle standard normal quantile by bisection on [`phi`].
///
/// The upper half reduces through `1 - p` (exact for p >= 0.5) so the search
/// always runs where the CDF value keeps full relative precision.
pub fn quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    if p > 0.5 {
        return -quantile(1.0 - p);
    }
    let (mut lo, mut hi) = (-40.0_f64, 0.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Tabulated oracle CDF over `[-9, 9]`: one cumulative trapezoid pass at
/// step 1e-4, then linear interpolation. Roughly 1e-9 accurate and cheap
/// enough to sit inside an integrand.
pub struct PhiTable {
    cumulative: Vec<f64>,
}

impl PhiTable {
    const LO: f64 = -9.0;
    const HI: f64 = 9.0;
    const STEP: f64 = 1e-4;

    pub fn new() -> Self {
        let count = ((Self::HI - Self::LO) / Self::STEP).round() as usize + 1;
        let mut cumulative = Vec::with_capacity(count);
        let mut acc = phi(Self::LO);
        let mut prev = density(Self::LO);
        cumulative.push(acc);
        for i in 1..count {
            let z = Self::LO + i as f64 * Self::STEP;
            let cur = density(z);
            acc += 0.5 * (prev + cur) * Self::STEP;
            cumulative.push(acc);
            prev = cur;
        }
        Self { cumulative }
    }

    pub fn phi(&self, z: f64) -> f64 {
        if z <= Self::LO {
            return 0.0;
        }
        if z >= Self::HI {
            return 1.0;
        }
        let pos = (z - Self::LO) / Self::STEP;
        let idx = pos.floor() as usize;
        let frac = pos - idx as f64;
        self.cumulative[idx] * (1.0 - frac) + self.cumulative[idx + 1] * frac
    }
}

/// Kolmogorov–Smirnov distance of a sample against Uniform(0, 1).
pub fn ks_uniform(sample: &mut [f64]) -> f64 {
    sample.sort_unstable_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let hi = (i + 1) as f64 / n - x;
        let lo = x - i as f64 / n;
        d = d.max(hi.abs()).max(lo.abs());
    }
    d
}

#[test]
fn oracle_self_checks() {
    // Published table values pin the oracle itself before it checks anything.
    assert!((phi(0.0) - 0.5).abs() < 1e-14);
    assert!((phi(1.0) - 0.8413447460685429).abs() < 1e-12);
    assert!((quantile(0.975) - 1.959963984540054).abs() < 1e-9);
    assert!((quantile(0.95) - 1.6448536269514722).abs() < 1e-9);
    let tail = phi(-8.0);
    assert!((tail - 6.220960574271785e-16).abs() / tail < 1e-10);

    // Continued fraction and quadrature agree across the switchover band.
    let mut z = 3.5;
    while z <= 6.0 {
        let cf = mills_upper(z);
        let quad = 0.5 - simpson(density, 0.0, z, 40_000);
        // The quadrature route bottoms out at the ulp of 0.5; allow that
        // floor on top of the relative agreement.
        assert!(
            (cf - quad).abs() < 1e-15 + 1e-10 * cf,
            "oracle mismatch at z = {z}: cf {cf}, quad {quad}"
        );
        z += 0.25;
    }
}
