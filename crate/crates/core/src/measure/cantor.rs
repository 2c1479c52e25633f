//! Cantor function evaluation by exact ternary-digit extraction.
//!
//! A finite `f64` in (0, 1) is a dyadic rational p / 2^s, so its ternary
//! digits can be produced exactly with integer arithmetic: multiply the
//! numerator by 3 and reduce mod 2^s at every step.  The standard middle
//! thirds self-similarity maps digit 0 to bit 0, digit 2 to bit 1, and stops
//! at the first digit 1 (the function is constant on removed gaps).

/// Number of ternary digits extracted; the truncation error is 2^-DEPTH.
const DEPTH: u32 = 48;

/// Cantor function C(y) of the standard middle-thirds set on [0, 1].
///
/// Exact up to the 2^-48 digit truncation for every representable input;
/// inputs outside [0, 1] clamp to {0, 1}.
pub fn cantor_function(y: f64) -> f64 {
    if !(y > 0.0) {
        return 0.0;
    }
    if y >= 1.0 {
        return 1.0;
    }
    // y = p / 2^s with p odd-or-even integer < 2^s.
    let bits = y.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, e2) = if exp == 0 {
        (frac, -1074i64) // subnormal
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    // y = mantissa * 2^e2 with e2 < 0; so s = -e2.
    let s = -e2;
    if s >= 127 {
        // y < 2^-74, hence C(y) < 2^-46; below the digit truncation error.
        return 0.0;
    }
    let modulus: u128 = 1u128 << s;
    let mut p = mantissa as u128;
    let mut acc = 0.0f64;
    let mut bit = 0.5f64;
    for _ in 0..DEPTH {
        p *= 3;
        if p >= 2 * modulus {
            // ternary digit 2
            p -= 2 * modulus;
            acc += bit;
        } else if p >= modulus {
            // ternary digit 1: inside a removed gap, C is constant there
            return acc + bit;
        }
        bit *= 0.5;
        if p == 0 {
            break;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::cantor_function;

    const TOL: f64 = 1e-14;

    #[test]
    fn known_exact_values() {
        // 1/4 = 0.020202...(3) lies in the Cantor set, C(1/4) = 1/3;
        // 3/4 = 0.202020...(3) gives 2/3.  Both inputs are exact dyadics.
        assert!((cantor_function(0.25) - 1.0 / 3.0).abs() <= TOL);
        assert!((cantor_function(0.75) - 2.0 / 3.0).abs() <= TOL);
        // points of the central gap are hit exactly once digit 1 appears
        assert_eq!(cantor_function(0.5), 0.5);
        assert_eq!(cantor_function(0.4), 0.5);
    }

    #[test]
    fn hand_derived_rationals() {
        // Solving the self-similar system for C at 0.1, 0.3, 0.7, 0.9 gives
        // 1/5, 2/5, 3/5, 4/5.  The f64 inputs are not the exact rationals, so
        // allow for the Hoelder modulus of the rounding gap (~1e-10).
        for (y, c) in [(0.1, 0.2), (0.3, 0.4), (0.7, 0.6), (0.9, 0.8)] {
            assert!(
                (cantor_function(y) - c).abs() <= 1e-9,
                "C({y}) = {} != {c}",
                cantor_function(y)
            );
        }
    }

    #[test]
    fn boundary_and_clamping() {
        assert_eq!(cantor_function(0.0), 0.0);
        assert_eq!(cantor_function(1.0), 1.0);
        assert_eq!(cantor_function(-3.0), 0.0);
        assert_eq!(cantor_function(7.0), 1.0);
        assert_eq!(cantor_function(f64::NAN), 0.0);
    }

    #[test]
    fn monotone_on_a_grid() {
        let mut prev = 0.0;
        for i in 0..=10_000 {
            let y = i as f64 / 10_000.0;
            let c = cantor_function(y);
            assert!(c >= prev, "not monotone at y={y}");
            prev = c;
        }
        assert_eq!(prev, 1.0);
    }

    #[test]
    fn constant_on_gap_intervals() {
        // central gap (1/3, 2/3)
        for y in [0.34, 0.4, 0.5, 0.61, 0.66] {
            assert_eq!(cantor_function(y), 0.5);
        }
        // second-level gap (1/9, 2/9)
        for y in [0.12, 0.15, 0.22] {
            assert_eq!(cantor_function(y), 0.25);
        }
    }

    #[test]
    fn self_similarity_on_dyadics() {
        // C(x) = C(3x)/2 for x in [0, 1/3]; exact for dyadic x with 3x exact.
        for j in 0..=(1u64 << 12) {
            let x = (j as f64) / ((1u64 << 12) as f64) / 4.0; // x in [0, 1/4], 3x exact
            let lhs = cantor_function(x);
            let rhs = 0.5 * cantor_function(3.0 * x);
            assert!((lhs - rhs).abs() <= 1e-14, "x={x}: {lhs} vs {rhs}");
        }
    }
}
