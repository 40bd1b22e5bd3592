//! Small numeric helpers shared by the generator and the searches.

use num_bigint::BigInt;
use num_rational::BigRational;

/// Fractions in `[0, 1]` are snapped to this many units before any
/// rounding, so that e.g. `0.1 * 30` ceils to 3 rather than 4.
const SCALE: i128 = 1_000_000_000;

fn units(frac: f64) -> i128 {
    (frac * SCALE as f64).round() as i128
}

fn div_ceil(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    let q = a.div_euclid(b);
    if a.rem_euclid(b) == 0 {
        q
    } else {
        q + 1
    }
}

/// `ceil(frac * n)` on the snapped fraction.
pub fn ceil_fraction(frac: f64, n: i64) -> i64 {
    div_ceil(units(frac) * n as i128, SCALE) as i64
}

/// `ceil(frac * num / den)` on the snapped fraction.
pub fn ceil_fraction_div(frac: f64, num: i64, den: i64) -> i64 {
    div_ceil(units(frac) * num as i128, SCALE * den as i128) as i64
}

/// The snapped fraction as an exact rational.
pub fn fraction_rational(frac: f64) -> BigRational {
    BigRational::new(BigInt::from(units(frac)), BigInt::from(SCALE))
}
