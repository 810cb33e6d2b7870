// Float helpers that work without std.

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Natural log of an exact count.
pub(crate) fn ln_count(c: u128) -> f64 {
    if c <= (1u128 << 53) {
        return ln(c as f64);
    }
    // split off a power of two so the mantissa stays exact
    let shift = 128 - c.leading_zeros() - 53;
    ln((c >> shift) as f64) + f64::from(shift) * core::f64::consts::LN_2
}

/// Tolerance for comparing quadrature and probability quantities.
pub(crate) const TOL: f64 = 1e-9;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_count_matches_float_log() {
        assert!((ln_count(65536) - 16.0 * core::f64::consts::LN_2).abs() < 1e-12);
        let big = 1u128 << 100;
        assert!((ln_count(big) - 100.0 * core::f64::consts::LN_2).abs() < 1e-9);
        let odd = (1u128 << 90) + 12345;
        assert!((ln_count(odd) - (odd as f64).ln()).abs() < 1e-9);
    }
}
