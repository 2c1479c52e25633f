//! Harmonic numbers H_k = 1 + 1/2 + ... + 1/k and their inverse counting
//! function, used by the comb component with atoms at +-(scale * H_k).

use std::sync::OnceLock;

const TABLE_LEN: usize = 4096;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn table() -> &'static [f64; TABLE_LEN + 1] {
    static TABLE: OnceLock<[f64; TABLE_LEN + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; TABLE_LEN + 1];
        let mut sum = 0.0;
        for (k, slot) in t.iter_mut().enumerate().skip(1) {
            sum += 1.0 / k as f64;
            *slot = sum;
        }
        t
    })
}

/// H_k; exact partial sums for small k, asymptotic expansion beyond the
/// table (absolute error < 1e-18 there, far below the 1/k gap size).
pub fn harmonic_number(k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k <= TABLE_LEN as u64 {
        return table()[k as usize];
    }
    let kf = k as f64;
    let k2 = kf * kf;
    kf.ln() + EULER_GAMMA + 1.0 / (2.0 * kf) - 1.0 / (12.0 * k2) + 1.0 / (120.0 * k2 * k2)
}

/// Largest k >= 1 with H_k <= y, or 0 when y < 1.
///
/// Counts saturate at 2^62; positions that far out carry y > 42, i.e. more
/// than e^41 atoms, which no finite-mass query ever enumerates.
pub fn count_harmonic_le(y: f64) -> u64 {
    if y < 1.0 {
        return 0;
    }
    let cap: u64 = 1 << 62;
    if y >= harmonic_number(cap) {
        return cap;
    }
    let (mut lo, mut hi) = (1u64, cap); // H_lo <= y < H_hi
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if harmonic_number(mid) <= y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
