//! Lebesgue measure of the sublevel sets {q* <= lambda} and the counting
//! transform M(lambda) = sqrt(lambda) * |{q* <= lambda}|.
//!
//! The pointwise condition q*(x) <= lambda is equivalent (up to a countable
//! set of atom-boundary coincidences, hence a.e.) to
//!
//! ```text
//! phi(x) = mu([x - h, x + h]) / sqrt(lambda) <= 1,   h = 1/(2 sqrt(lambda)),
//! ```
//!
//! which needs one interval mass per test point instead of a width
//! bisection.  The scan covers the certified truncation window from the
//! tail analysis with structural event points, a uniform core grid and
//! geometric far probes; boundary crossings are localized by bisection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tail::{LevelOutcome, TailAnalysis};
use crate::error::{Error, Result};
use crate::measure::{Interval, Measure};
use crate::num::ExtReal;

/// Lebesgue measure of a sublevel set with its provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SublevelResult {
    pub level: f64,
    /// measure of {q* <= level}; +inf when the set is certified unbounded
    pub value: ExtReal,
    /// measure of the strict set {q* < level}, reported when it differs
    /// from `value` by more than `error` (plateaus exactly at the level)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict_value: Option<f64>,
    /// localization error of the boundary crossings plus scan slop
    pub error: f64,
    /// truncation window certified by the tail analysis ([0, 0] when the
    /// set is empty, unbounded when divergent)
    pub window: [ExtReal; 2],
    /// set exactly when `value` is infinite: why the tails never escape
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<String>,
}

impl SublevelResult {
    fn empty(level: f64) -> Self {
        SublevelResult {
            level,
            value: ExtReal(0.0),
            strict_value: None,
            error: 0.0,
            window: [ExtReal(0.0), ExtReal(0.0)],
            divergence: None,
        }
    }
}

/// M(lambda) and the uncertainty inherited from the sublevel scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MEval {
    pub lambda: f64,
    pub value: ExtReal,
    pub error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<String>,
}

fn masses_cross(fa: f64, fb: f64) -> bool {
    (fa <= 1.0) != (fb <= 1.0)
}

fn on_level(f: f64) -> bool {
    (f - 1.0).abs() <= 8.0 * f64::EPSILON
}

pub(crate) fn sublevel_with(
    tails: &TailAnalysis,
    measure: &Measure,
    lambda: f64,
    tol: f64,
) -> Result<SublevelResult> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid_argument(
            "level must be a finite nonnegative real",
        ));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid_argument(
            "tolerance must be positive and finite",
        ));
    }
    if !(measure.total_mass() > 0.0) {
        return Err(Error::invalid_spec("the positive part carries no mass"));
    }
    let radius = match tails.level_outcome(lambda) {
        LevelOutcome::Empty => return Ok(SublevelResult::empty(lambda)),
        LevelOutcome::Diverges { detail } => {
            return Ok(SublevelResult {
                level: lambda,
                value: ExtReal(f64::INFINITY),
                strict_value: None,
                error: 0.0,
                window: [ExtReal(f64::NEG_INFINITY), ExtReal(f64::INFINITY)],
                divergence: Some(detail),
            });
        }
        LevelOutcome::Escapes { radius } => radius,
    };
    if !radius.is_finite() {
        return Err(Error::numeric(
            "the sublevel set is finite but its truncation radius overflows f64",
        ));
    }

    let h = 0.5 / lambda.sqrt();
    let sqrt_lambda = lambda.sqrt();
    let x_max = radius;

    // structural event points: window edges aligned with atoms, breakpoints
    // and support endpoints
    let mut xs: Vec<f64> = Vec::new();
    let feats = measure.feature_points(-x_max - h, x_max + h);
    for t in feats {
        for e in [t - h, t + h, t] {
            if e.abs() <= x_max {
                xs.push(e);
            }
        }
    }
    // uniform core grid
    let core = x_max.min(256.0);
    let n_core = ((2.0 * core * 64.0) as usize).clamp(2048, 65536);
    for i in 0..=n_core {
        xs.push(-core + 2.0 * core * i as f64 / n_core as f64);
    }
    // geometric probes beyond the core
    if x_max > core {
        let mut t = core;
        while t < x_max {
            t *= 1.02;
            let t = t.min(x_max);
            xs.push(t);
            xs.push(-t);
        }
    }
    xs.push(-x_max);
    xs.push(x_max);
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * a.abs().max(1.0));

    let phi = |x: f64| measure.mass_unchecked(Interval::closed(x - h, x + h)) / sqrt_lambda;
    let fs: Vec<f64> = xs.par_iter().map(|&x| phi(x)).collect();

    let delta = tol * h.max(1.0);
    let mut closed = 0.0f64;
    let mut strict = 0.0f64;
    let mut error = 0.0f64;
    for i in 0..xs.len() - 1 {
        let (xa, xb) = (xs[i], xs[i + 1]);
        let (fa, fb) = (fs[i], fs[i + 1]);
        let w = xb - xa;
        if w <= 0.0 {
            continue;
        }
        if !masses_cross(fa, fb) {
            if fa <= 1.0 {
                closed += w;
                if !(on_level(fa) && on_level(fb)) {
                    strict += w;
                }
            }
            continue;
        }
        // localize the crossing: invariant phi(inside) <= 1 < phi(outside)
        let (mut u, mut v) = if fa <= 1.0 { (xa, xb) } else { (xb, xa) };
        while (u - v).abs() > delta {
            let mid = 0.5 * (u + v);
            if mid == u || mid == v {
                break;
            }
            if phi(mid) <= 1.0 {
                u = mid;
            } else {
                v = mid;
            }
        }
        let cross = 0.5 * (u + v);
        let inside_part = if fa <= 1.0 { cross - xa } else { xb - cross };
        closed += inside_part;
        strict += inside_part;
        error += 0.5 * (u - v).abs();
    }
    // floating-point slop of accumulating the span
    error += 4.0 * f64::EPSILON * (2.0 * x_max);

    let strict_value = if closed - strict > error + 1e-15 * closed.max(1.0) {
        Some(strict)
    } else {
        None
    };
    Ok(SublevelResult {
        level: lambda,
        value: ExtReal(closed),
        strict_value,
        error,
        window: [ExtReal(-x_max), ExtReal(x_max)],
        divergence: None,
    })
}

/// Lebesgue measure of {q* <= lambda} with certified truncation.
pub fn sublevel_measure(measure: &Measure, lambda: f64, tol: f64) -> Result<SublevelResult> {
    let tails = super::tail::analyze(measure);
    sublevel_with(&tails, measure, lambda, tol)
}

pub(crate) fn m_with(
    tails: &TailAnalysis,
    measure: &Measure,
    lambda: f64,
    tol: f64,
) -> Result<MEval> {
    if lambda == 0.0 {
        return Ok(MEval {
            lambda,
            value: ExtReal(0.0),
            error: 0.0,
            divergence: None,
        });
    }
    let s = sublevel_with(tails, measure, lambda, tol)?;
    let root = lambda.sqrt();
    Ok(MEval {
        lambda,
        value: ExtReal(root * s.value.0),
        error: root * s.error,
        divergence: s.divergence,
    })
}

/// M(lambda) = sqrt(lambda) * |{q* <= lambda}|.
pub fn m_of(measure: &Measure, lambda: f64, tol: f64) -> Result<MEval> {
    let tails = super::tail::analyze(measure);
    m_with(&tails, measure, lambda, tol)
}
