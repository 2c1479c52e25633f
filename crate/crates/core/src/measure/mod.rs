//! Measure potentials assembled from exactly integrable components.
//!
//! A signed measure is a pair of component lists (positive and negative
//! part).  Every component answers interval-mass queries in closed form, so
//! the Otelbaev width search and the finite-element oracle both sit on the
//! same exact primitive.

mod cantor;
pub(crate) mod harmonic;
mod validate;

pub use cantor::cantor_function;
pub use validate::{brinck_bound, validate_spec, Admissibility, Part, ValidationReport, Violation};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One-dimensional interval with explicit endpoint membership.
#[derive(Clone, Copy, Debug)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
    pub left_closed: bool,
    pub right_closed: bool,
}

impl Interval {
    pub fn closed(a: f64, b: f64) -> Self {
        Interval {
            a,
            b,
            left_closed: true,
            right_closed: true,
        }
    }

    pub fn open(a: f64, b: f64) -> Self {
        Interval {
            a,
            b,
            left_closed: false,
            right_closed: false,
        }
    }

    /// (a, b]
    pub fn left_open(a: f64, b: f64) -> Self {
        Interval {
            a,
            b,
            left_closed: false,
            right_closed: true,
        }
    }

    /// [a, b)
    pub fn right_open(a: f64, b: f64) -> Self {
        Interval {
            a,
            b,
            left_closed: true,
            right_closed: false,
        }
    }

    pub fn whole_line() -> Self {
        Self::closed(f64::NEG_INFINITY, f64::INFINITY)
    }

    fn translate(self, dy: f64) -> Self {
        Interval {
            a: self.a + dy,
            b: self.b + dy,
            ..self
        }
    }

    fn is_empty(&self) -> bool {
        self.a > self.b || (self.a == self.b && !(self.left_closed && self.right_closed))
    }

    pub fn contains(&self, t: f64) -> bool {
        let left_ok = t > self.a || (self.left_closed && t == self.a);
        let right_ok = t < self.b || (self.right_closed && t == self.b);
        left_ok && right_ok
    }

    fn check(&self) -> Result<()> {
        if self.a.is_nan() || self.b.is_nan() || self.a > self.b {
            return Err(Error::invalid_argument(format!(
                "invalid interval endpoints a={}, b={}",
                self.a, self.b
            )));
        }
        Ok(())
    }
}

/// Weight rule of a lattice of atoms: constant weight, or weight growing
/// linearly in the site index magnitude.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WeightRule {
    Const { c: f64 },
    AbsK { c: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SiteRange {
    Finite { kmin: i64, kmax: i64 },
    Unbounded,
}

/// Finite list of point masses; positions strictly increasing.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Atoms {
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Atoms on the grid {k * spacing}, weights given by the rule.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Lattice {
    pub spacing: f64,
    pub weight_rule: WeightRule,
    pub site_range: SiteRange,
}

/// Piecewise-polynomial density: on [breakpoints[i], breakpoints[i+1]] the
/// density is the polynomial with coefficients[i] in the local coordinate
/// (x - breakpoints[i]).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PiecewisePoly {
    pub breakpoints: Vec<f64>,
    pub coefficients: Vec<Vec<f64>>,
}

/// Named density families with closed-form masses and analyzable tails.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Family {
    /// density |x|^kappa, kappa >= 1
    AbsPow { kappa: f64 },
    /// density x^2
    EvenSquare,
    /// density ln(|x|)^n for |x| > cutoff, zero inside; cutoff > e
    LogPow { n: u32, cutoff: f64 },
    /// staircase density c*|k|^gamma on the cell (k, k+1]; gamma = 0 gives
    /// the constant density c on the whole line
    Staircase { c: f64, gamma: f64 },
}

/// Cantor-type singular piece: the middle-thirds measure transported onto
/// `support` and scaled to total mass `mass`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Cantor {
    pub support: [f64; 2],
    pub mass: f64,
}

/// Atoms of equal weight at 0 and +-(scale * H_k), H_k the k-th harmonic
/// number; gaps shrink like 1/k so local masses grow exponentially in |x|.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct HarmonicComb {
    pub scale: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ComponentKind {
    Atoms(Atoms),
    Lattice(Lattice),
    PiecewisePoly(PiecewisePoly),
    Family(Family),
    Cantor(Cantor),
    HarmonicComb(HarmonicComb),
}

/// One summand of a measure: a component kind plus a rigid translation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasureComponent {
    #[serde(flatten)]
    pub kind: ComponentKind,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub offset: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl From<ComponentKind> for MeasureComponent {
    fn from(kind: ComponentKind) -> Self {
        MeasureComponent { kind, offset: 0.0 }
    }
}

/// Positive measure given as a finite sum of components.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct Measure {
    pub components: Vec<MeasureComponent>,
}

/// User-supplied Brinck bound: a fixed value or "auto" (derived by window
/// sweep during validation).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum BetaSpec {
    #[default]
    Auto,
    Given(f64),
}

impl Serialize for BetaSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BetaSpec::Auto => s.serialize_str("auto"),
            BetaSpec::Given(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for BetaSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = BetaSpec;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or \"auto\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<BetaSpec, E> {
                Ok(BetaSpec::Given(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<BetaSpec, E> {
                Ok(BetaSpec::Given(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<BetaSpec, E> {
                Ok(BetaSpec::Given(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<BetaSpec, E> {
                if v == "auto" {
                    Ok(BetaSpec::Auto)
                } else {
                    Err(E::custom("expected \"auto\" or a number"))
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Class constants: windowed bound beta on the negative part, and the
/// thickness pair (alpha, l) meaning every half-open window (x, x+l] holds
/// negative mass at least alpha.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct ClassConstants {
    #[serde(default)]
    pub beta: BetaSpec,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_l")]
    pub l: f64,
}

fn default_l() -> f64 {
    1.0
}

impl Default for ClassConstants {
    fn default() -> Self {
        ClassConstants {
            beta: BetaSpec::Auto,
            alpha: 0.0,
            l: 1.0,
        }
    }
}

/// A potential mu = mu_plus - mu_minus together with its class constants.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SignedMeasureSpec {
    pub positive: Measure,
    #[serde(default)]
    pub negative: Measure,
    #[serde(default)]
    pub constants: ClassConstants,
}

// ---------------------------------------------------------------------------
// interval masses
// ---------------------------------------------------------------------------

impl Atoms {
    fn mass(&self, iv: Interval) -> f64 {
        // admitted index range by binary search on the sorted positions
        let lo = self
            .positions
            .partition_point(|&p| p < iv.a || (!iv.left_closed && p == iv.a));
        let hi = self
            .positions
            .partition_point(|&p| p < iv.b || (iv.right_closed && p == iv.b));
        self.weights[lo..hi].iter().sum()
    }
}

impl Lattice {
    /// Inclusive site-index range whose positions fall in `iv`, clipped to
    /// the configured site range; `None` when empty.
    fn k_range(&self, iv: Interval) -> Option<(i64, i64)> {
        let d = self.spacing;
        const HUGE: f64 = 4.0e15; // beyond exact f64 integers, skip the walk
        let left_admits = |t: f64| t > iv.a || (iv.left_closed && t == iv.a);
        let right_admits = |t: f64| t < iv.b || (iv.right_closed && t == iv.b);
        let lo = if iv.a == f64::NEG_INFINITY {
            i64::MIN / 4
        } else {
            let q = iv.a / d;
            if q.abs() > HUGE {
                q.ceil().clamp(i64::MIN as f64 / 4.0, i64::MAX as f64 / 4.0) as i64
            } else {
                let mut k = q.floor() as i64 - 2;
                let mut steps = 0;
                while !left_admits(k as f64 * d) && steps < 16 {
                    k += 1;
                    steps += 1;
                }
                k
            }
        };
        let hi = if iv.b == f64::INFINITY {
            i64::MAX / 4
        } else {
            let q = iv.b / d;
            if q.abs() > HUGE {
                q.floor()
                    .clamp(i64::MIN as f64 / 4.0, i64::MAX as f64 / 4.0) as i64
            } else {
                let mut k = q.ceil() as i64 + 2;
                let mut steps = 0;
                while !right_admits(k as f64 * d) && steps < 16 {
                    k -= 1;
                    steps += 1;
                }
                k
            }
        };
        let (mut lo, mut hi) = (lo, hi);
        if let SiteRange::Finite { kmin, kmax } = self.site_range {
            lo = lo.max(kmin);
            hi = hi.min(kmax);
        }
        if lo > hi {
            None
        } else {
            Some((lo, hi))
        }
    }

    fn mass(&self, iv: Interval) -> f64 {
        // unbounded range with an endpoint at infinity short-circuits
        if matches!(self.site_range, SiteRange::Unbounded)
            && (iv.a == f64::NEG_INFINITY || iv.b == f64::INFINITY)
        {
            let c = match self.weight_rule {
                WeightRule::Const { c } | WeightRule::AbsK { c } => c,
            };
            return if c > 0.0 { f64::INFINITY } else { 0.0 };
        }
        match self.k_range(iv) {
            None => 0.0,
            Some((lo, hi)) => match self.weight_rule {
                WeightRule::Const { c } => c * (hi as i128 - lo as i128 + 1) as f64,
                WeightRule::AbsK { c } => c * sum_abs_indices(lo, hi),
            },
        }
    }
}

/// Sum of |k| for k = lo..=hi, exact in integer arithmetic.
fn sum_abs_indices(lo: i64, hi: i64) -> f64 {
    fn tri(n: i128) -> i128 {
        if n <= 0 {
            0
        } else {
            n * (n + 1) / 2
        }
    }
    let (lo, hi) = (lo as i128, hi as i128);
    let pos = tri(hi) - tri((lo - 1).max(0));
    let neg = tri(-lo) - tri((-hi - 1).max(0));
    (pos.max(0) + neg.max(0)) as f64
}

impl PiecewisePoly {
    fn mass(&self, iv: Interval) -> f64 {
        let n = self.coefficients.len();
        let mut total = 0.0;
        for i in 0..n {
            let (x0, x1) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let lo = iv.a.max(x0);
            let hi = iv.b.min(x1);
            if hi > lo {
                total += poly_antiderivative(&self.coefficients[i], hi - x0)
                    - poly_antiderivative(&self.coefficients[i], lo - x0);
            }
        }
        total
    }

    pub fn density_at(&self, x: f64) -> f64 {
        let n = self.coefficients.len();
        if n == 0 || x < self.breakpoints[0] || x > self.breakpoints[n] {
            return 0.0;
        }
        let i = self
            .breakpoints
            .partition_point(|&b| b <= x)
            .saturating_sub(1)
            .min(n - 1);
        poly_eval(&self.coefficients[i], x - self.breakpoints[i])
    }
}

fn poly_eval(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

/// Antiderivative of the polynomial at local coordinate u, zero at u = 0.
fn poly_antiderivative(coeffs: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    for (j, &c) in coeffs.iter().enumerate().rev() {
        acc = acc * u + c / (j + 1) as f64;
    }
    acc * u
}

impl Family {
    fn mass(&self, iv: Interval) -> f64 {
        if iv.is_empty() {
            return 0.0;
        }
        match *self {
            Family::AbsPow { kappa } => {
                if iv.a == f64::NEG_INFINITY || iv.b == f64::INFINITY {
                    return f64::INFINITY;
                }
                abs_pow_anti(kappa, iv.b) - abs_pow_anti(kappa, iv.a)
            }
            Family::EvenSquare => {
                if iv.a == f64::NEG_INFINITY || iv.b == f64::INFINITY {
                    return f64::INFINITY;
                }
                (iv.b.powi(3) - iv.a.powi(3)) / 3.0
            }
            Family::LogPow { n, cutoff } => {
                if iv.a == f64::NEG_INFINITY || iv.b == f64::INFINITY {
                    return f64::INFINITY;
                }
                log_pow_side(n, cutoff, iv.a.max(cutoff), iv.b.max(cutoff))
                    + log_pow_side(n, cutoff, (-iv.b).max(cutoff), (-iv.a).max(cutoff))
            }
            Family::Staircase { c, gamma } => staircase_mass(c, gamma, iv.a, iv.b),
        }
    }

    pub fn density_at(&self, x: f64) -> f64 {
        match *self {
            Family::AbsPow { kappa } => x.abs().powf(kappa),
            Family::EvenSquare => x * x,
            Family::LogPow { n, cutoff } => {
                if x.abs() > cutoff {
                    x.abs().ln().powi(n as i32)
                } else {
                    0.0
                }
            }
            Family::Staircase { c, gamma } => {
                let k = x.ceil() - 1.0;
                if gamma == 0.0 {
                    c
                } else {
                    c * k.abs().powf(gamma)
                }
            }
        }
    }
}

/// Antiderivative of |t|^kappa: sign(t) |t|^(kappa+1) / (kappa+1).
fn abs_pow_anti(kappa: f64, t: f64) -> f64 {
    t.signum() * t.abs().powf(kappa + 1.0) / (kappa + 1.0)
}

/// Integral of ln(t)^n over [lo, hi] for cutoff <= lo <= hi.
fn log_pow_side(n: u32, cutoff: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(cutoff > 1.0);
    if hi <= lo {
        return 0.0;
    }
    log_pow_anti(n, hi) - log_pow_anti(n, lo)
}

/// A_n(t) = integral of ln^n, via A_n = t ln^n t - n A_{n-1}, A_0 = t.
fn log_pow_anti(n: u32, t: f64) -> f64 {
    let lt = t.ln();
    let mut a = t;
    for j in 1..=n {
        a = t * lt.powi(j as i32) - j as f64 * a;
    }
    a
}

/// Mass of the staircase density c |k|^gamma on cells (k, k+1].
fn staircase_mass(c: f64, gamma: f64, a: f64, b: f64) -> f64 {
    if b <= a || c == 0.0 {
        return 0.0;
    }
    if gamma == 0.0 {
        return c * (b - a);
    }
    if a == f64::NEG_INFINITY || b == f64::INFINITY {
        return f64::INFINITY;
    }
    let k_lo = a.floor() as i64;
    let k_hi = (b.ceil() - 1.0) as i64;
    if k_hi - k_lo <= 200_000 {
        let mut total = 0.0;
        for k in k_lo..=k_hi {
            let overlap = (b.min((k + 1) as f64) - a.max(k as f64)).max(0.0);
            if overlap > 0.0 {
                total += c * (k as f64).abs().powf(gamma) * overlap;
            }
        }
        return total;
    }
    // partial end cells exactly, interior full cells via power sums
    let mut total = c * (k_lo as f64).abs().powf(gamma) * ((k_lo + 1) as f64 - a)
        + c * (k_hi as f64).abs().powf(gamma) * (b - k_hi as f64);
    let (m1, m2) = (k_lo + 1, k_hi - 1);
    let pos = if m2 >= 1 {
        pow_sum_range(gamma, m1.max(1) as u64, m2 as u64)
    } else {
        0.0
    };
    let neg = if m1 <= -1 {
        pow_sum_range(gamma, (-m2).max(1) as u64, (-m1) as u64)
    } else {
        0.0
    };
    total += c * (pos + neg);
    total
}

/// Sum of k^gamma over lo..=hi (1 <= lo <= hi).  Exact loops for short
/// ranges and for the head below 10^4; an Euler-Maclaurin difference covers
/// the rest with both expansion points large, so the constant term cancels
/// and the relative error stays below 1e-12.
fn pow_sum_range(gamma: f64, lo: u64, hi: u64) -> f64 {
    if hi < lo {
        return 0.0;
    }
    if hi - lo <= 200_000 {
        let mut s = 0.0;
        for k in lo..=hi {
            s += (k as f64).powf(gamma);
        }
        return s;
    }
    const N0: u64 = 10_000;
    if lo < N0 {
        let mut s = 0.0;
        for k in lo..N0 {
            s += (k as f64).powf(gamma);
        }
        return s + pow_sum_range(gamma, N0, hi);
    }
    em_pow_sum(gamma, hi as f64) - em_pow_sum(gamma, (lo - 1) as f64)
}

/// Euler-Maclaurin expansion of sum_{k<=n} k^gamma up to the constant term,
/// which cancels in differences of large arguments.
fn em_pow_sum(gamma: f64, n: f64) -> f64 {
    n.powf(gamma + 1.0) / (gamma + 1.0) + 0.5 * n.powf(gamma) + gamma * n.powf(gamma - 1.0) / 12.0
        - gamma * (gamma - 1.0) * (gamma - 2.0) * n.powf(gamma - 3.0) / 720.0
}

impl Cantor {
    fn mass(&self, iv: Interval) -> f64 {
        let [lo, hi] = self.support;
        let width = hi - lo;
        let norm = |t: f64| -> f64 {
            if t <= lo {
                0.0
            } else if t >= hi {
                1.0
            } else {
                (t - lo) / width
            }
        };
        self.mass * (cantor_function(norm(iv.b)) - cantor_function(norm(iv.a)))
    }
}

impl HarmonicComb {
    fn side_count(&self, lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> f64 {
        // number of k >= 1 with H_k in the given range
        if hi < 1.0 || hi < lo {
            return 0.0;
        }
        let n_hi = {
            let n = harmonic::count_harmonic_le(hi);
            if !hi_closed && n > 0 && harmonic::harmonic_number(n) == hi {
                n - 1
            } else {
                n
            }
        };
        if n_hi >= (1 << 62) {
            // beyond the counting cap the gaps are smaller than one ulp, so
            // any range reaching that far holds more atoms than f64 resolves
            return f64::INFINITY;
        }
        let n_lo_excluded = if lo < 1.0 {
            0
        } else {
            let n = harmonic::count_harmonic_le(lo);
            if lo_closed && n > 0 && harmonic::harmonic_number(n) == lo {
                n - 1
            } else {
                n
            }
        };
        n_hi.saturating_sub(n_lo_excluded) as f64
    }

    fn count(&self, iv: Interval) -> f64 {
        let s = self.scale;
        let mut count = if iv.contains(0.0) { 1.0 } else { 0.0 };
        // positive side: s*H_k in [a, b]
        count += self.side_count(iv.a / s, iv.left_closed, iv.b / s, iv.right_closed);
        // negative side: -s*H_k in [a, b]  <=>  H_k in [-b, -a]/s
        count += self.side_count(-iv.b / s, iv.right_closed, -iv.a / s, iv.left_closed);
        count
    }

    fn mass(&self, iv: Interval) -> f64 {
        // the comb is unbounded on both sides
        if (iv.a == f64::NEG_INFINITY || iv.b == f64::INFINITY) && self.weight > 0.0 {
            return f64::INFINITY;
        }
        self.weight * self.count(iv)
    }
}

impl ComponentKind {
    fn mass(&self, iv: Interval) -> f64 {
        if iv.is_empty() {
            return 0.0;
        }
        match self {
            ComponentKind::Atoms(a) => a.mass(iv),
            ComponentKind::Lattice(l) => l.mass(iv),
            ComponentKind::PiecewisePoly(p) => p.mass(iv),
            ComponentKind::Family(f) => f.mass(iv),
            ComponentKind::Cantor(c) => c.mass(iv),
            ComponentKind::HarmonicComb(h) => h.mass(iv),
        }
    }
}

impl MeasureComponent {
    pub fn mass(&self, iv: Interval) -> f64 {
        self.kind.mass(iv.translate(-self.offset))
    }

    /// Radius r such that the component carries no mass outside [-r, r];
    /// `None` for unbounded supports.
    pub fn support_radius(&self) -> Option<f64> {
        let base = match &self.kind {
            ComponentKind::Atoms(a) => a
                .positions
                .iter()
                .fold(0.0f64, |m, &p| m.max(p.abs()))
                .into(),
            ComponentKind::Lattice(l) => match l.site_range {
                SiteRange::Finite { kmin, kmax } => {
                    Some((kmin.abs().max(kmax.abs()) as f64) * l.spacing)
                }
                SiteRange::Unbounded => None,
            },
            ComponentKind::PiecewisePoly(p) => {
                let lo = p.breakpoints.first().copied().unwrap_or(0.0);
                let hi = p.breakpoints.last().copied().unwrap_or(0.0);
                Some(lo.abs().max(hi.abs()))
            }
            ComponentKind::Family(_) => None,
            ComponentKind::Cantor(c) => Some(c.support[0].abs().max(c.support[1].abs())),
            ComponentKind::HarmonicComb(_) => None,
        };
        base.map(|r| r + self.offset.abs())
    }

    /// Density value for the absolutely continuous kinds; zero for atomic
    /// and singular-continuous ones.
    pub fn density_at(&self, x: f64) -> f64 {
        let u = x - self.offset;
        match &self.kind {
            ComponentKind::PiecewisePoly(p) => p.density_at(u),
            ComponentKind::Family(f) => f.density_at(u),
            _ => 0.0,
        }
    }

    pub fn has_density(&self) -> bool {
        matches!(
            self.kind,
            ComponentKind::PiecewisePoly(_) | ComponentKind::Family(_)
        )
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.kind, ComponentKind::Cantor(_))
    }

    /// Push (position, weight) of every atom inside [a, b] (closed).
    pub fn atoms_in(&self, a: f64, b: f64, limit: usize, out: &mut Vec<(f64, f64)>) -> Result<()> {
        let guard = |out: &Vec<(f64, f64)>| -> Result<()> {
            if out.len() > limit {
                Err(Error::numeric(format!(
                    "atom enumeration exceeds {limit} points on [{a}, {b}]"
                )))
            } else {
                Ok(())
            }
        };
        let (ua, ub) = (a - self.offset, b - self.offset);
        match &self.kind {
            ComponentKind::Atoms(at) => {
                for (&p, &w) in at.positions.iter().zip(&at.weights) {
                    if p >= ua && p <= ub && w > 0.0 {
                        out.push((p + self.offset, w));
                    }
                }
                guard(out)
            }
            ComponentKind::Lattice(l) => {
                if let Some((lo, hi)) = l.k_range(Interval::closed(ua, ub)) {
                    if (hi as i128 - lo as i128) as u128 > limit as u128 {
                        return Err(Error::numeric(format!(
                            "lattice enumeration exceeds {limit} sites on [{a}, {b}]"
                        )));
                    }
                    for k in lo..=hi {
                        let w = match l.weight_rule {
                            WeightRule::Const { c } => c,
                            WeightRule::AbsK { c } => c * (k.abs() as f64),
                        };
                        if w > 0.0 {
                            out.push((k as f64 * l.spacing + self.offset, w));
                        }
                    }
                }
                guard(out)
            }
            ComponentKind::HarmonicComb(h) => {
                if ua <= 0.0 && ub >= 0.0 {
                    out.push((self.offset, h.weight));
                }
                let pos_n = harmonic::count_harmonic_le(ub / h.scale);
                let pos_start = harmonic::count_harmonic_le((ua / h.scale).max(0.0)) + 1;
                let neg_n = harmonic::count_harmonic_le(-ua / h.scale);
                let neg_start = harmonic::count_harmonic_le((-ub / h.scale).max(0.0)) + 1;
                let total =
                    pos_n.saturating_sub(pos_start - 1) + neg_n.saturating_sub(neg_start - 1);
                if total as u128 > limit as u128 {
                    return Err(Error::numeric(format!(
                        "comb enumeration exceeds {limit} atoms on [{a}, {b}]"
                    )));
                }
                for k in pos_start..=pos_n {
                    let t = h.scale * harmonic::harmonic_number(k) + self.offset;
                    if t >= a && t <= b {
                        out.push((t, h.weight));
                    }
                }
                for k in neg_start..=neg_n {
                    let t = -h.scale * harmonic::harmonic_number(k) + self.offset;
                    if t >= a && t <= b {
                        out.push((t, h.weight));
                    }
                }
                guard(out)
            }
            _ => Ok(()),
        }
    }

    /// Structural positions where masses or densities change character;
    /// used to seed scan grids.  Capped per component.
    pub fn feature_points(&self, a: f64, b: f64, out: &mut Vec<f64>) {
        const CAP: usize = 512;
        let mut atoms = Vec::new();
        match &self.kind {
            ComponentKind::Atoms(_)
            | ComponentKind::Lattice(_)
            | ComponentKind::HarmonicComb(_) => {
                if self.atoms_in(a, b, CAP, &mut atoms).is_ok() {
                    out.extend(atoms.iter().map(|&(p, _)| p));
                } else {
                    // too many: coarse placeholder seeds
                    for i in 0..=CAP {
                        out.push(a + (b - a) * i as f64 / CAP as f64);
                    }
                }
            }
            ComponentKind::PiecewisePoly(p) => {
                out.extend(
                    p.breakpoints
                        .iter()
                        .map(|&t| t + self.offset)
                        .filter(|&t| t >= a && t <= b),
                );
            }
            ComponentKind::Family(f) => {
                if let Family::LogPow { cutoff, .. } = f {
                    for t in [-cutoff + self.offset, cutoff + self.offset] {
                        if t >= a && t <= b {
                            out.push(t);
                        }
                    }
                }
                if let Family::Staircase { .. } = f {
                    let mut k = (a - self.offset).floor() + self.offset;
                    let mut pushed = 0;
                    while k <= b && pushed < CAP {
                        if k >= a {
                            out.push(k);
                            pushed += 1;
                        }
                        k += 1.0;
                    }
                }
            }
            ComponentKind::Cantor(c) => {
                // support endpoints and first generations of gap endpoints
                let [lo, hi] = c.support;
                let w = hi - lo;
                let mut stack = vec![(0.0f64, 1.0f64, 0u32)];
                while let Some((u0, u1, depth)) = stack.pop() {
                    let x0 = lo + u0 * w + self.offset;
                    let x1 = lo + u1 * w + self.offset;
                    if x1 < a || x0 > b {
                        continue;
                    }
                    out.push(x0.clamp(a, b));
                    out.push(x1.clamp(a, b));
                    if depth < 6 {
                        let third = (u1 - u0) / 3.0;
                        stack.push((u0, u0 + third, depth + 1));
                        stack.push((u1 - third, u1, depth + 1));
                    }
                }
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass(Interval::whole_line())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid_spec(msg));
        if !self.offset.is_finite() {
            return bad("component offset must be finite".into());
        }
        match &self.kind {
            ComponentKind::Atoms(a) => {
                if a.positions.len() != a.weights.len() {
                    return bad("atoms: positions and weights differ in length".into());
                }
                if a.positions.windows(2).any(|w| !(w[0] < w[1])) {
                    return bad("atoms: positions must be strictly increasing".into());
                }
                if a.positions.iter().any(|p| !p.is_finite()) {
                    return bad("atoms: positions must be finite".into());
                }
                if a.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return bad("atoms: weights must be finite and nonnegative".into());
                }
            }
            ComponentKind::Lattice(l) => {
                if !(l.spacing > 0.0 && l.spacing.is_finite()) {
                    return bad("lattice: spacing must be positive and finite".into());
                }
                let c = match l.weight_rule {
                    WeightRule::Const { c } | WeightRule::AbsK { c } => c,
                };
                if !(c >= 0.0 && c.is_finite()) {
                    return bad("lattice: weight scale must be finite and nonnegative".into());
                }
                if let SiteRange::Finite { kmin, kmax } = l.site_range {
                    if kmin > kmax {
                        return bad("lattice: kmin must not exceed kmax".into());
                    }
                }
            }
            ComponentKind::PiecewisePoly(p) => {
                if p.breakpoints.len() != p.coefficients.len() + 1 || p.coefficients.is_empty() {
                    return bad(
                        "piecewise_poly: need n+1 breakpoints for n coefficient lists".into(),
                    );
                }
                if p.breakpoints.iter().any(|b| !b.is_finite()) {
                    return bad("piecewise_poly: breakpoints must be finite".into());
                }
                if p.breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
                    return bad("piecewise_poly: breakpoints must be strictly increasing".into());
                }
                // nonnegativity is a sampled check on a fixed per-segment grid
                for (i, cs) in p.coefficients.iter().enumerate() {
                    if cs.is_empty() || cs.iter().any(|c| !c.is_finite()) {
                        return bad(format!("piecewise_poly: bad coefficient list {i}"));
                    }
                    let (x0, x1) = (p.breakpoints[i], p.breakpoints[i + 1]);
                    for j in 0..=64 {
                        let u = (x1 - x0) * j as f64 / 64.0;
                        if poly_eval(cs, u) < -1e-9 {
                            return bad(format!(
                                "piecewise_poly: density negative near x={}",
                                x0 + u
                            ));
                        }
                    }
                }
            }
            ComponentKind::Family(f) => match *f {
                Family::AbsPow { kappa } => {
                    if !(kappa >= 1.0 && kappa.is_finite()) {
                        return bad("family abs_pow: kappa must be >= 1".into());
                    }
                }
                Family::EvenSquare => {}
                Family::LogPow { n, cutoff } => {
                    if !(1..=12).contains(&n) {
                        return bad("family log_pow: n must be in 1..=12".into());
                    }
                    if !(cutoff > std::f64::consts::E && cutoff.is_finite()) {
                        return bad("family log_pow: cutoff must exceed e".into());
                    }
                }
                Family::Staircase { c, gamma } => {
                    if !(c > 0.0 && c.is_finite()) {
                        return bad("family staircase: c must be positive".into());
                    }
                    if !(gamma >= 0.0 && gamma.is_finite()) {
                        return bad("family staircase: gamma must be >= 0".into());
                    }
                }
            },
            ComponentKind::Cantor(c) => {
                if !(c.support[0].is_finite() && c.support[1].is_finite())
                    || !(c.support[0] < c.support[1])
                {
                    return bad("cantor: support must be a nondegenerate finite interval".into());
                }
                if !(c.mass > 0.0 && c.mass.is_finite()) {
                    return bad("cantor: mass must be positive and finite".into());
                }
            }
            ComponentKind::HarmonicComb(h) => {
                if !(h.scale > 0.0 && h.scale.is_finite()) {
                    return bad("harmonic_comb: scale must be positive".into());
                }
                if !(h.weight > 0.0 && h.weight.is_finite()) {
                    return bad("harmonic_comb: weight must be positive".into());
                }
            }
        }
        Ok(())
    }
}

impl Measure {
    pub fn new(components: Vec<MeasureComponent>) -> Self {
        Measure { components }
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Exact mass of the interval; errors only on malformed endpoints.
    pub fn interval_mass(&self, iv: Interval) -> Result<f64> {
        iv.check()?;
        Ok(self.mass_unchecked(iv))
    }

    pub(crate) fn mass_unchecked(&self, iv: Interval) -> f64 {
        self.components.iter().map(|c| c.mass(iv)).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(|c| c.total_mass()).sum()
    }

    /// Distribution function anchored at the origin: mass of [0, x] for
    /// x >= 0 and -mass of (x, 0) for x < 0; right-continuous, and the atom
    /// at the origin (if any) is charged to F(0).
    pub fn cdf(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.mass_unchecked(Interval::closed(0.0, x))
        } else {
            -self.mass_unchecked(Interval::open(x, 0.0))
        }
    }

    pub fn shift(&self, y: f64) -> Self {
        Measure {
            components: self
                .components
                .iter()
                .map(|c| {
                    let mut c = c.clone();
                    c.offset += y;
                    c
                })
                .collect(),
        }
    }

    pub fn atoms_in(&self, a: f64, b: f64, limit: usize) -> Result<Vec<(f64, f64)>> {
        let mut out = Vec::new();
        for c in &self.components {
            c.atoms_in(a, b, limit, &mut out)?;
        }
        out.sort_by(|p, q| p.0.total_cmp(&q.0));
        Ok(out)
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.density_at(x)).sum()
    }

    pub fn feature_points(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for c in &self.components {
            c.feature_points(a, b, &mut out);
        }
        out.retain(|t| t.is_finite());
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.components.iter().enumerate() {
            c.validate()
                .map_err(|e| Error::invalid_spec(format!("component {i}: {e}")))?;
        }
        Ok(())
    }
}

impl SignedMeasureSpec {
    pub fn positive_only(components: Vec<MeasureComponent>) -> Self {
        SignedMeasureSpec {
            positive: Measure::new(components),
            negative: Measure::default(),
            constants: ClassConstants::default(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: SignedMeasureSpec = serde_json::from_str(s)
            .map_err(|e| Error::invalid_spec(format!("spec parse error: {e}")))?;
        spec.positive.validate()?;
        spec.negative.validate()?;
        Ok(spec)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization cannot fail")
    }

    pub fn shift(&self, y: f64) -> Self {
        SignedMeasureSpec {
            positive: self.positive.shift(y),
            negative: self.negative.shift(y),
            constants: self.constants,
        }
    }
}

#[cfg(test)]
mod tests;
