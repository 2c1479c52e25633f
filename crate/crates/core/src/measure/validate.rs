//! Class-constant validation: the sliding-window bound on the negative part,
//! the (alpha, l) thickness check, and the admissibility report that tells
//! downstream consumers which operations the spec supports.

use super::{
    BetaSpec, ComponentKind, Family, Interval, Measure, MeasureComponent, SignedMeasureSpec,
    SiteRange, WeightRule,
};
use crate::num::ExtReal;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Positive,
    Negative,
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(match self {
            Part::Positive => "positive",
            Part::Negative => "negative",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum Violation {
    InvalidComponent {
        part: Part,
        index: usize,
        message: String,
    },
    PositiveMassZero,
    BetaInfinite,
    BetaTooSmall {
        given: f64,
        required: f64,
    },
    AlphaWindowFails {
        x: f64,
        length: f64,
        mass: f64,
        alpha: f64,
    },
    BadConstants {
        message: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            Violation::InvalidComponent {
                part,
                index,
                message,
            } => {
                write!(
                    f,
                    "component {index} of the {part} part is invalid: {message}"
                )
            }
            Violation::PositiveMassZero => {
                write!(
                    f,
                    "total positive mass is zero; the class requires mu_plus(R) > 0"
                )
            }
            Violation::BetaInfinite => {
                write!(
                    f,
                    "negative-part window masses are unbounded (beta = infinity)"
                )
            }
            Violation::BetaTooSmall { given, required } => write!(
                f,
                "given beta = {given} is below the computed window bound {required}"
            ),
            Violation::AlphaWindowFails {
                x,
                length,
                mass,
                alpha,
            } => write!(
                f,
                "window ({x}, {x} + {length}] carries negative mass {mass} < alpha = {alpha}"
            ),
            Violation::BadConstants { message } => write!(f, "bad class constants: {message}"),
        }
    }
}

/// Which downstream operations the spec admits.  The certified bounds need
/// full class membership; the finite-element oracle only needs structurally
/// valid components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    pub bounds: bool,
    pub oracle: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    /// The beta value downstream bounds will use: the user-given one when
    /// present and consistent, otherwise the computed window supremum.
    pub beta_effective: ExtReal,
    pub admissibility: Admissibility,
}

/// How a component contributes to sliding-window masses.
enum WindowRole {
    /// same mass in every window of a given length
    Invariant { rate: f64 },
    /// periodic atom train: the closed-window supremum has a closed form
    Periodic {
        spacing: f64,
        offset: f64,
        weight: f64,
    },
    /// carries no mass outside a bounded set
    Bounded,
    /// window masses grow without bound as |x| -> infinity
    Growing,
}

fn window_role(comp: &MeasureComponent) -> WindowRole {
    match &comp.kind {
        ComponentKind::Atoms(_) | ComponentKind::PiecewisePoly(_) | ComponentKind::Cantor(_) => {
            WindowRole::Bounded
        }
        ComponentKind::Lattice(l) => match (l.weight_rule, l.site_range) {
            (_, SiteRange::Finite { .. }) => WindowRole::Bounded,
            (WeightRule::Const { c }, SiteRange::Unbounded) => {
                if c == 0.0 {
                    WindowRole::Bounded
                } else {
                    WindowRole::Periodic {
                        spacing: l.spacing,
                        offset: comp.offset,
                        weight: c,
                    }
                }
            }
            (WeightRule::AbsK { c }, SiteRange::Unbounded) => {
                if c == 0.0 {
                    WindowRole::Bounded
                } else {
                    WindowRole::Growing
                }
            }
        },
        ComponentKind::Family(f) => match *f {
            Family::AbsPow { .. } | Family::EvenSquare | Family::LogPow { .. } => {
                WindowRole::Growing
            }
            Family::Staircase { c, gamma } => {
                if c == 0.0 {
                    WindowRole::Bounded
                } else if gamma == 0.0 {
                    WindowRole::Invariant { rate: c }
                } else {
                    WindowRole::Growing
                }
            }
        },
        ComponentKind::HarmonicComb(h) => {
            // gaps shrink like 1/k, so any fixed window far out holds
            // arbitrarily many atoms
            if h.weight == 0.0 {
                WindowRole::Bounded
            } else {
                WindowRole::Growing
            }
        }
    }
}

/// Largest number of lattice sites {k d} a closed window of length `w` can
/// contain, computed robustly against floating-point division slop.
fn max_sites_in_window(w: f64, d: f64) -> f64 {
    let mut m = (w / d).floor();
    if (m + 1.0) * d <= w {
        m += 1.0;
    } else if m * d > w {
        m -= 1.0;
    }
    m.max(0.0) + 1.0
}

/// Supremum over x of the negative-part mass of the closed window
/// [x, x + window].
///
/// Exact for purely atomic parts (the supremum is attained with a window
/// endpoint on a site, so an event sweep over sites suffices) and for
/// periodic lattices (closed form).  With densities or singular parts
/// present, a seeded grid search plus local refinement is used; the value is
/// always attained by some window, hence never an overestimate.  Returns
/// +infinity as soon as any component has unbounded window masses.
pub fn brinck_bound(negative: &Measure, window: f64) -> f64 {
    let w = window;
    if !w.is_finite() || w < 0.0 {
        return f64::NAN;
    }
    let mut invariant = 0.0;
    let mut periodic_sup = 0.0;
    let mut periodics: Vec<(f64, f64)> = Vec::new(); // (spacing, offset)
    let mut bounded: Vec<&MeasureComponent> = Vec::new();
    let mut needs_refinement = false;
    for comp in &negative.components {
        match window_role(comp) {
            WindowRole::Growing => return f64::INFINITY,
            WindowRole::Invariant { rate } => invariant += rate * w,
            WindowRole::Periodic {
                spacing,
                offset,
                weight,
            } => {
                periodic_sup += weight * max_sites_in_window(w, spacing);
                periodics.push((spacing, offset));
            }
            WindowRole::Bounded => {
                if comp.has_density() || comp.is_singular() {
                    needs_refinement = true;
                }
                bounded.push(comp);
            }
        }
    }
    if bounded.is_empty() {
        return invariant + periodic_sup;
    }

    // candidate window starts: every site (and density feature point) as a
    // left endpoint, and shifted by -w as a right endpoint
    let mut sites: Vec<f64> = Vec::new();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for comp in &bounded {
        let r = comp.support_radius().unwrap_or(0.0);
        lo = lo.min(-r);
        hi = hi.max(r);
        match &comp.kind {
            ComponentKind::Atoms(_) | ComponentKind::Lattice(_) => {
                let mut v = Vec::new();
                if comp.atoms_in(-r, r, 1_000_000, &mut v).is_ok() {
                    sites.extend(v.iter().map(|&(p, _)| p));
                } else {
                    needs_refinement = true;
                    comp.feature_points(-r, r, &mut sites);
                }
            }
            _ => comp.feature_points(-r, r, &mut sites),
        }
    }
    for &(d, o) in &periodics {
        let k0 = ((lo - w - 2.0 * d - o) / d).floor();
        let k1 = ((hi + 2.0 * d - o) / d).ceil();
        let count = (k1 - k0).max(0.0);
        let stride = (count / 8192.0).ceil().max(1.0);
        if stride > 1.0 {
            needs_refinement = true;
        }
        let mut k = k0;
        while k <= k1 {
            sites.push(k * d + o);
            k += stride;
        }
    }

    let eval = |x: f64| negative.mass_unchecked(Interval::closed(x, x + w));
    let mut best = (invariant + periodic_sup, lo - w);
    let consider = |x: f64, best: &mut (f64, f64)| {
        if x.is_finite() {
            let m = eval(x);
            if m > best.0 {
                *best = (m, x);
            }
        }
    };
    for &s in &sites {
        consider(s, &mut best);
        consider(s - w, &mut best);
    }
    if needs_refinement {
        let n = 4096;
        let span_lo = lo - w;
        let span = hi - span_lo;
        for i in 0..=n {
            consider(span_lo + span * i as f64 / n as f64, &mut best);
        }
        // local pattern search until the window sum stops moving
        let mut step = (span / n as f64).max(w / 1024.0).max(1e-9);
        for _ in 0..60 {
            let before = best.0;
            for _ in 0..64 {
                let (b, x) = best;
                let up = eval(x + step);
                let down = eval(x - step);
                if up > b && up >= down {
                    best = (up, x + step);
                } else if down > b {
                    best = (down, x - step);
                } else {
                    break;
                }
            }
            let improved = best.0 - before;
            step *= 0.5;
            if improved < 1e-10 * best.0.max(1.0) && step < w / 1024.0 {
                break;
            }
        }
    }
    best.0
}

/// Worst half-open window (x, x + l] of the negative part, checked against
/// alpha over an event-seeded sweep.  The minimum over atomic parts is
/// attained with the window opening exactly at a site (the site is then
/// excluded), so sites themselves are the critical candidates.
fn alpha_window_check(neg: &Measure, alpha: f64, l: f64) -> Option<Violation> {
    let mut radius: f64 = 0.0;
    let mut max_spacing = l;
    for comp in &neg.components {
        if let Some(r) = comp.support_radius() {
            radius = radius.max(r);
        }
        if let ComponentKind::Lattice(lat) = &comp.kind {
            max_spacing = max_spacing.max(lat.spacing);
        }
    }
    let span = radius + 2.0 * l + 2.0 * max_spacing + 1.0;
    let mut xs: Vec<f64> = Vec::new();
    let mut feats = Vec::new();
    for comp in &neg.components {
        comp.feature_points(-span, span, &mut feats);
    }
    for &t in &feats {
        xs.push(t);
        xs.push(t - l);
    }
    let n = 4096;
    for i in 0..=n {
        xs.push(-span + 2.0 * span * i as f64 / n as f64);
    }
    let mut worst = (f64::INFINITY, 0.0);
    for &x in &xs {
        if !x.is_finite() {
            continue;
        }
        let m = neg.mass_unchecked(Interval::left_open(x, x + l));
        if m < worst.0 {
            worst = (m, x);
        }
    }
    if worst.0 + 1e-9 * (1.0 + alpha) < alpha {
        Some(Violation::AlphaWindowFails {
            x: worst.1,
            length: l,
            mass: worst.0,
            alpha,
        })
    } else {
        None
    }
}

/// Validate a signed-measure spec: structural component checks, positive
/// total mass, beta finiteness/consistency, and the sampled (alpha, l)
/// thickness condition.  Violations are data, not errors.
pub fn validate_spec(spec: &SignedMeasureSpec) -> ValidationReport {
    let mut violations = Vec::new();
    let mut structural_ok = true;
    for (part, measure) in [
        (Part::Positive, &spec.positive),
        (Part::Negative, &spec.negative),
    ] {
        for (index, comp) in measure.components.iter().enumerate() {
            if let Err(e) = comp.validate() {
                structural_ok = false;
                violations.push(Violation::InvalidComponent {
                    part,
                    index,
                    message: e.to_string(),
                });
            }
        }
    }
    let c = spec.constants;
    if !c.alpha.is_finite() || c.alpha < 0.0 {
        violations.push(Violation::BadConstants {
            message: format!("alpha must be a finite nonnegative number, got {}", c.alpha),
        });
    }
    if !c.l.is_finite() || c.l <= 0.0 {
        violations.push(Violation::BadConstants {
            message: format!("l must be a finite positive number, got {}", c.l),
        });
    }
    if let BetaSpec::Given(b) = c.beta {
        if b.is_nan() || b < 0.0 {
            violations.push(Violation::BadConstants {
                message: format!("beta must be nonnegative or \"auto\", got {b}"),
            });
        }
    }

    let mut beta_effective = f64::NAN;
    if structural_ok {
        if !(spec.positive.total_mass() > 0.0) {
            violations.push(Violation::PositiveMassZero);
        }
        let computed = brinck_bound(&spec.negative, 1.0);
        beta_effective = match c.beta {
            BetaSpec::Auto => {
                if computed.is_infinite() {
                    violations.push(Violation::BetaInfinite);
                }
                computed
            }
            BetaSpec::Given(b) => {
                if computed.is_infinite() {
                    violations.push(Violation::BetaInfinite);
                } else if b + 1e-9 * (1.0 + b.abs()) < computed {
                    violations.push(Violation::BetaTooSmall {
                        given: b,
                        required: computed,
                    });
                }
                b
            }
        };
        if c.alpha > 0.0 && c.l.is_finite() && c.l > 0.0 {
            if let Some(v) = alpha_window_check(&spec.negative, c.alpha, c.l) {
                violations.push(v);
            }
        }
    }

    let ok = violations.is_empty();
    ValidationReport {
        ok,
        violations,
        beta_effective: ExtReal(beta_effective),
        admissibility: Admissibility {
            bounds: ok,
            oracle: structural_ok,
        },
    }
}
