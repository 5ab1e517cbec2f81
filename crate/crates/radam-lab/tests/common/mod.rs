//! Assertion helpers shared by the integration suites.

#![allow(dead_code)]

/// Relative-error check against a reference value.
pub fn assert_rel(actual: f64, expected: f64, tol: f64, what: &str) {
    let rel = (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
    assert!(
        rel <= tol,
        "{what}: got {actual:.17e}, want {expected:.17e} (rel err {rel:.3e} > {tol:.1e})"
    );
}

/// Absolute-error check, for references at or near zero.
pub fn assert_abs(actual: f64, expected: f64, tol: f64, what: &str) {
    let abs = (actual - expected).abs();
    assert!(
        abs <= tol,
        "{what}: got {actual:.17e}, want {expected:.17e} (abs err {abs:.3e} > {tol:.1e})"
    );
}

/// Bit-exact check, for values the arithmetic pins completely.
pub fn assert_bits(actual: f64, expected: f64, what: &str) {
    assert!(
        actual.to_bits() == expected.to_bits(),
        "{what}: got {actual:.17e} ({:#018x}), want {expected:.17e} ({:#018x})",
        actual.to_bits(),
        expected.to_bits()
    );
}
