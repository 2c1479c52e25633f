//! The completed counting transform and its inverse, plus the global
//! minimum q0* and far-field liminf Q of the Otelbaev function.
//!
//! M(lambda) vanishes below the global minimum of q* and is nondecreasing,
//! so the threshold xi = sup{lambda > 0 : M(lambda) < 1} is well defined for
//! discrete-type measures.  The completion replaces the dead zone below xi
//! by the exact linear piece lambda/xi, making the transform strictly
//! increasing and hence invertible by monotone bisection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::q_star;
use super::sublevel::{m_with, MEval};
use super::tail::{analyze, LevelOutcome, TailAnalysis};
use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::num::ExtReal;

const REL_TOL: f64 = 1e-10;

/// The counting transform of one measure with its threshold cached.
pub struct MTransform<'a> {
    measure: &'a Measure,
    tails: TailAnalysis,
    xi: f64,
    tol: f64,
}

impl<'a> MTransform<'a> {
    /// Computes the threshold xi by doubling/halving brackets and monotone
    /// bisection to relative width 1e-10.
    pub fn new(measure: &'a Measure, tol: f64) -> Result<Self> {
        let tails = analyze(measure);
        let value =
            |lambda: f64| -> Result<f64> { Ok(m_with(&tails, measure, lambda, tol)?.value.0) };
        let (mut lo, mut hi);
        if value(1.0)? < 1.0 {
            lo = 1.0;
            hi = 2.0;
            while value(hi)? < 1.0 {
                lo = hi;
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(Error::numeric("M stays below one at every level"));
                }
            }
        } else {
            hi = 1.0;
            lo = 0.5;
            while value(lo)? >= 1.0 {
                hi = lo;
                lo *= 0.5;
                if lo < 1e-300 {
                    return Err(Error::divergent(
                        "the counting transform is not invertible here: M(lambda) >= 1 for all lambda > 0",
                    ));
                }
            }
        }
        while hi - lo > REL_TOL * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if value(mid)? < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(MTransform {
            measure,
            tails,
            xi: 0.5 * (lo + hi),
            tol,
        })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Plain M(lambda).
    pub fn m(&self, lambda: f64) -> Result<MEval> {
        m_with(&self.tails, self.measure, lambda, self.tol)
    }

    /// The completion: lambda/xi below the threshold, M above it.
    pub fn m_tilde(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::invalid_argument("lambda must be nonnegative"));
        }
        if lambda <= self.xi {
            return Ok(lambda / self.xi);
        }
        Ok(self.m(lambda)?.value.0)
    }

    /// F(y): the inverse of the completion, exact on the linear piece and
    /// located by monotone bisection above it (relative width 1e-10).
    pub fn f_inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(Error::invalid_argument(
                "F takes finite nonnegative arguments",
            ));
        }
        if y <= 1.0 {
            return Ok(y * self.xi);
        }
        let mut lo = self.xi;
        let mut hi = self.xi * 2.0;
        while self.m_tilde(hi)? < y {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::numeric(
                    "cannot bracket the inverse: M stays below the target",
                ));
            }
        }
        while hi - lo > REL_TOL * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.m_tilde(mid)? < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Global minimum and far-field liminf of q*, with certification flags.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtremalQ {
    /// inf over the line of q*
    pub q0: f64,
    /// whether the tail analysis certifies the scan window was wide enough
    pub q0_certified: bool,
    /// liminf of q* at infinity (+inf exactly for discrete-type tails)
    pub q_liminf: ExtReal,
    /// false when the liminf came from far sampling instead of structure
    pub liminf_certified: bool,
    /// the window actually scanned for the minimum
    pub window: [f64; 2],
}

/// Minimum of q* over [-r, r] by dense sampling plus local descent.
fn scan_min(measure: &Measure, r: f64, tol: f64) -> Result<(f64, f64)> {
    let n = ((256.0 * r) as usize).clamp(1024, 40_000);
    let qs: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let x = -r + 2.0 * r * i as f64 / n as f64;
            q_star(measure, x, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut best_i, mut best_q) = (0usize, f64::INFINITY);
    for (i, &q) in qs.iter().enumerate() {
        if q < best_q {
            best_q = q;
            best_i = i;
        }
    }
    let mut x = -r + 2.0 * r * best_i as f64 / n as f64;
    let mut step = r / n as f64;
    for _ in 0..80 {
        let up = q_star(measure, x + step, tol)?;
        let down = q_star(measure, x - step, tol)?;
        if up < best_q && up <= down {
            best_q = up;
            x += step;
        } else if down < best_q {
            best_q = down;
            x -= step;
        } else {
            step *= 0.5;
            if step < 1e-13 * r.max(1.0) {
                break;
            }
        }
    }
    Ok((x, best_q))
}

/// q0* = inf q* (tail-aware global minimization) and Q = liminf q*.
pub fn q0_and_q(measure: &Measure, tol: f64) -> Result<ExtremalQ> {
    if !(measure.total_mass() > 0.0) {
        return Err(Error::invalid_spec("the positive part carries no mass"));
    }
    let tails = analyze(measure);
    let (q_liminf, liminf_certified) = tails.q_liminf(measure);
    if q_liminf == 0.0 && liminf_certified {
        // finite total mass: q* tends to zero, the infimum is 0 exactly
        return Ok(ExtremalQ {
            q0: 0.0,
            q0_certified: true,
            q_liminf: ExtReal(0.0),
            liminf_certified: true,
            window: [0.0, 0.0],
        });
    }
    let mut r = (tails.bounded_radius + 2.0).max(8.0);
    for _ in 0..12 {
        let (_, qm) = scan_min(measure, r, tol)?;
        let probe = qm * (1.0 - 1e-9);
        match tails.level_outcome(probe) {
            LevelOutcome::Empty => {
                return Ok(ExtremalQ {
                    q0: qm,
                    q0_certified: true,
                    q_liminf: ExtReal(q_liminf),
                    liminf_certified,
                    window: [-r, r],
                });
            }
            LevelOutcome::Escapes { radius } if radius <= r => {
                return Ok(ExtremalQ {
                    q0: qm,
                    q0_certified: true,
                    q_liminf: ExtReal(q_liminf),
                    liminf_certified,
                    window: [-r, r],
                });
            }
            LevelOutcome::Escapes { radius } => {
                if !radius.is_finite() {
                    return Err(Error::numeric("minimization window overflows f64"));
                }
                r = radius * 1.05 + 1.0;
            }
            LevelOutcome::Diverges { .. } => {
                // the far field itself reaches down to the liminf
                return Ok(ExtremalQ {
                    q0: qm.min(q_liminf),
                    q0_certified: liminf_certified,
                    q_liminf: ExtReal(q_liminf),
                    liminf_certified,
                    window: [-r, r],
                });
            }
        }
    }
    Err(Error::numeric("global minimization did not stabilize"))
}
