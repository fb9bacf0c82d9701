//! Deterministic fixed-precision number formatting for emitted files.
//!
//! All text outputs (trace CSV, LP dumps, simulation CSV) go through
//! [`sig`] so that identical inputs produce byte-identical files.

/// Format `x` in fixed-point decimal with 12 significant digits.
pub fn sig(x: f64) -> String {
    sig_n(x, 12)
}

/// Format `x` in fixed-point decimal with `digits` significant digits.
pub fn sig_n(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - mag).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    // trim trailing zeros, keep at least one digit after a bare point
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".to_string()
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_are_stable() {
        assert_eq!(sig(0.0), "0");
        assert_eq!(sig(1.0), "1");
        assert_eq!(sig(-1.5), "-1.5");
        assert_eq!(sig(1234.5678), "1234.5678");
        assert_eq!(sig_n(1.0 / 3.0, 5), "0.33333");
        // integer part is never truncated; rounding happens at the point
        assert_eq!(sig_n(12345.678, 3), "12346");
    }

    #[test]
    fn negative_zero_normalized() {
        assert_eq!(sig(-0.0), "0");
        assert_eq!(sig_n(-1e-3, 2), "-0.001");
    }
}
