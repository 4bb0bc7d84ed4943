//! Floating-point comparison helpers shared by the library checks and tests.

/// `|a - b| <= max(rel * max(|a|, |b|), abs_floor)`.
#[inline]
pub fn close(a: f64, b: f64, rel: f64, abs_floor: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= (rel * scale).max(abs_floor)
}

/// Worst elementwise violation ratio between two equally sized slices.
///
/// A value `<= 1.0` means every pair satisfies [`close`] with the same
/// parameters. Returns the ratio together with the offending position.
pub fn worst_ratio(a: &[f64], b: &[f64], rel: f64, abs_floor: f64) -> (f64, usize) {
    assert_eq!(a.len(), b.len(), "slices must have equal length");
    let mut worst = (0.0, 0);
    for (k, (&x, &y)) in a.iter().zip(b).enumerate() {
        let allowed = (rel * x.abs().max(y.abs())).max(abs_floor);
        let r = (x - y).abs() / allowed;
        if r > worst.0 || r.is_nan() {
            worst = (r, k);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_applies_near_zero() {
        assert!(close(0.0, 5e-13, 1e-9, 1e-12));
        assert!(!close(0.0, 5e-12, 1e-9, 1e-12));
        assert!(close(1.0, 1.0 + 5e-10, 1e-9, 1e-12));
        assert!(!close(1.0, 1.0 + 5e-9, 1e-9, 1e-12));
    }

    #[test]
    fn worst_ratio_reports_position() {
        let (r, k) = worst_ratio(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.3], 1e-3, 0.0);
        assert_eq!(k, 2);
        assert!(r > 1.0);
    }
}
