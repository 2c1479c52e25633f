//! Certified tail analysis of the Otelbaev function.
//!
//! Every lower bound here exploits one monotone fact: adding mass can only
//! grow q*, so a floor established for a single component holds for the full
//! measure.  Escape radii answer "beyond which |x| is q* certainly above the
//! level", divergence verdicts certify the opposite, and the liminf rules
//! feed the essential-spectrum and discreteness statements.

use super::q_star;
use crate::measure::{ComponentKind, Family, Measure, MeasureComponent, SiteRange, WeightRule};

/// Relative padding applied to analytically derived radii so strict
/// inequalities survive floating-point evaluation.
const PAD: f64 = 1e-6;

fn pad(x: f64) -> f64 {
    x + PAD * (1.0 + x.abs())
}

/// Tail behaviour of one component, reduced to what the estimates need.
#[derive(Clone, Debug)]
pub enum CompTail {
    /// density at least c0 * (|x| - shift)^gamma beyond |x| >= shift
    PowerFloor { c0: f64, gamma: f64, shift: f64 },
    /// density ln(|x| - shift)^n beyond |x| >= shift + cutoff
    LogFloor { n: u32, cutoff: f64, shift: f64 },
    /// unbounded constant-weight lattice; q over one period precomputed
    Periodic {
        spacing: f64,
        weight: f64,
        q_min: f64,
        q_max: f64,
    },
    /// unbounded lattice with weights growing like c|k|: far midpoint gaps
    /// pin liminf q* at 1/spacing^2
    Gapped { spacing: f64, c: f64 },
    /// harmonic comb: gaps shrink like 1/k, q* grows without bound
    Comb { scale: f64, weight: f64, shift: f64 },
}

/// What a level-set query learns from the tails alone.
#[derive(Clone, Debug, PartialEq)]
pub enum LevelOutcome {
    /// q* > lambda everywhere: the sublevel set is empty
    Empty,
    /// q* > lambda for all |x| >= radius
    Escapes { radius: f64 },
    /// the sublevel set is certified unbounded
    Diverges { detail: String },
}

#[derive(Clone, Debug)]
pub struct TailAnalysis {
    tails: Vec<CompTail>,
    /// merged constant density floor (staircase gamma = 0 components)
    pub const_floor: f64,
    /// all remaining components carry no mass outside [-bounded_radius, ..]
    pub bounded_radius: f64,
    pub has_bounded: bool,
}

/// Numeric minimum and maximum of q* of a single unbounded constant-weight
/// lattice over one period (translation invariant, so any period works).
fn periodic_q_range(comp: &MeasureComponent, spacing: f64) -> (f64, f64) {
    let m = Measure::new(vec![comp.clone()]);
    let tol = 1e-10;
    let n = 256;
    let (mut qmin, mut xmin) = (f64::INFINITY, 0.0);
    let mut qmax = 0.0f64;
    for i in 0..=n {
        let x = comp.offset + spacing * i as f64 / n as f64;
        let q = q_star(&m, x, tol).unwrap_or(f64::INFINITY);
        if q < qmin {
            qmin = q;
            xmin = x;
        }
        qmax = qmax.max(q);
    }
    // local descent around the minimum
    let mut step = spacing / n as f64;
    let mut x = xmin;
    for _ in 0..60 {
        let up = q_star(&m, x + step, tol).unwrap_or(f64::INFINITY);
        let down = q_star(&m, x - step, tol).unwrap_or(f64::INFINITY);
        if up < qmin && up <= down {
            qmin = up;
            x += step;
        } else if down < qmin {
            qmin = down;
            x -= step;
        } else {
            step *= 0.5;
            if step < 1e-14 * spacing {
                break;
            }
        }
    }
    (qmin, qmax)
}

pub fn analyze(measure: &Measure) -> TailAnalysis {
    let mut tails = Vec::new();
    let mut const_floor = 0.0;
    let mut bounded_radius = 0.0f64;
    let mut has_bounded = false;
    for comp in &measure.components {
        let o = comp.offset.abs();
        match &comp.kind {
            ComponentKind::Atoms(_)
            | ComponentKind::PiecewisePoly(_)
            | ComponentKind::Cantor(_) => {
                has_bounded = true;
                bounded_radius = bounded_radius.max(comp.support_radius().unwrap_or(0.0));
            }
            ComponentKind::Lattice(l) => match (l.weight_rule, l.site_range) {
                (_, SiteRange::Finite { .. }) => {
                    has_bounded = true;
                    bounded_radius = bounded_radius.max(comp.support_radius().unwrap_or(0.0));
                }
                (WeightRule::Const { c }, SiteRange::Unbounded) => {
                    if c > 0.0 {
                        let (q_min, q_max) = periodic_q_range(comp, l.spacing);
                        tails.push(CompTail::Periodic {
                            spacing: l.spacing,
                            weight: c,
                            q_min,
                            q_max,
                        });
                    }
                }
                (WeightRule::AbsK { c }, SiteRange::Unbounded) => {
                    if c > 0.0 {
                        tails.push(CompTail::Gapped {
                            spacing: l.spacing,
                            c,
                        });
                    }
                }
            },
            ComponentKind::Family(f) => match *f {
                Family::AbsPow { kappa } => {
                    tails.push(CompTail::PowerFloor {
                        c0: 1.0,
                        gamma: kappa,
                        shift: o,
                    });
                }
                Family::EvenSquare => {
                    tails.push(CompTail::PowerFloor {
                        c0: 1.0,
                        gamma: 2.0,
                        shift: o,
                    });
                }
                Family::LogPow { n, cutoff } => {
                    tails.push(CompTail::LogFloor {
                        n,
                        cutoff,
                        shift: o,
                    });
                }
                Family::Staircase { c, gamma } => {
                    if gamma == 0.0 {
                        const_floor += c;
                    } else if c > 0.0 {
                        tails.push(CompTail::PowerFloor {
                            c0: c,
                            gamma,
                            shift: 1.0 + o,
                        });
                    }
                }
            },
            ComponentKind::HarmonicComb(h) => {
                tails.push(CompTail::Comb {
                    scale: h.scale,
                    weight: h.weight,
                    shift: o,
                });
            }
        }
    }
    TailAnalysis {
        tails,
        const_floor,
        bounded_radius,
        has_bounded,
    }
}

impl TailAnalysis {
    /// True when some component alone forces q* -> infinity.
    pub fn grows_to_infinity(&self) -> bool {
        self.tails.iter().any(|t| {
            matches!(
                t,
                CompTail::PowerFloor { .. } | CompTail::LogFloor { .. } | CompTail::Comb { .. }
            )
        })
    }

    /// Exponent of the slowest certified power growth of q* at infinity,
    /// for integrability tests: Some(gamma) when every growing component is
    /// a power floor (the largest gamma governs), None when a comb makes the
    /// growth super-polynomial, and Some(0) when a log-type component keeps
    /// the growth below every power.
    pub fn growth_exponent(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for t in &self.tails {
            match t {
                CompTail::PowerFloor { gamma, .. } => {
                    best = Some(best.map_or(*gamma, |b: f64| b.max(*gamma)));
                }
                CompTail::LogFloor { .. } => {
                    best = Some(best.map_or(0.0, |b: f64| b.max(0.0)));
                }
                CompTail::Comb { .. } => return None,
                _ => {}
            }
        }
        best
    }

    /// Escape radius of a single tail at the given level, when the tail
    /// escapes it.
    fn comp_radius(t: &CompTail, lambda: f64) -> Option<f64> {
        let half = 0.5 / lambda.sqrt();
        match *t {
            CompTail::PowerFloor { c0, gamma, shift } => {
                // window of width 1/sqrt(lambda) at x has mass at least
                // d * c0 (|x| - d/2 - shift)^gamma; demanding d*mass > 1
                Some(pad(shift + (lambda / c0).powf(1.0 / gamma) + half))
            }
            CompTail::LogFloor { n, cutoff, shift } => {
                let arg = lambda.powf(1.0 / n as f64);
                if arg > 700.0 {
                    // e^arg overflows f64; the radius is finite but beyond
                    // representable range
                    return Some(f64::INFINITY);
                }
                Some(pad(shift + cutoff.max(arg.exp()) + half))
            }
            CompTail::Periodic { .. } => None,
            CompTail::Gapped { spacing, c } => {
                let s = spacing;
                if lambda < (1.0 - 1e-12) / (s * s) {
                    // a window of width d = 1/sqrt(lambda) > s holds at least
                    // floor(d/s) sites of weight >= c((|x| - d/2)/s - 1)
                    let d = 1.0 / lambda.sqrt();
                    let n_sites = (d / s).floor().max(1.0);
                    Some(pad(0.5 * d + s + s / (d * n_sites * c)))
                } else {
                    None
                }
            }
            CompTail::Comb {
                scale,
                weight,
                shift,
            } => {
                // indices >= K have gaps <= scale/K; a window of width d at
                // |x| >= scale*H_K + d/2 has mass >= weight (dK/scale - 1)
                let d = 1.0 / lambda.sqrt();
                let k = (scale / d) * (1.0 / (d * weight) + 1.0);
                let k = (k.max(1.0) + 2.0).min(9.0e18) as u64;
                Some(pad(shift
                    + scale * crate::measure::harmonic::harmonic_number(k)
                    + half))
            }
        }
    }

    /// What the tails certify about the sublevel set {q* <= lambda}.
    pub fn level_outcome(&self, lambda: f64) -> LevelOutcome {
        if lambda <= 0.0 {
            // q* is strictly positive everywhere
            return LevelOutcome::Empty;
        }
        if self.const_floor > 0.0 && lambda < self.const_floor * (1.0 - 1e-12) {
            return LevelOutcome::Empty;
        }
        for t in &self.tails {
            if let CompTail::Periodic { q_min, .. } = t {
                if lambda < q_min * (1.0 - 1e-9) {
                    return LevelOutcome::Empty;
                }
            }
        }
        let mut best: Option<f64> = None;
        for t in &self.tails {
            if let Some(r) = Self::comp_radius(t, lambda) {
                best = Some(best.map_or(r, |b: f64| b.min(r)));
            }
        }
        if let Some(radius) = best {
            return LevelOutcome::Escapes { radius };
        }
        // nothing escapes: name the blocking structure
        let mut parts: Vec<String> = Vec::new();
        if self.tails.is_empty() && self.const_floor == 0.0 {
            parts.push("finite total mass: q* tends to zero at infinity".into());
        }
        if self.const_floor > 0.0 {
            parts.push(format!(
                "constant density floor {} keeps q* at or below the level far out",
                self.const_floor
            ));
        }
        for t in &self.tails {
            match t {
                CompTail::Periodic { q_min, spacing, .. } => parts.push(format!(
                    "periodic atom train (spacing {spacing}) has min q* = {q_min} <= level"
                )),
                CompTail::Gapped { spacing, .. } => parts.push(format!(
                    "lattice midpoint gaps pin q* near {} <= level",
                    1.0 / (spacing * spacing)
                )),
                _ => {}
            }
        }
        LevelOutcome::Diverges {
            detail: parts.join("; "),
        }
    }

    /// Certified overestimate of the integral of q*^e over |x| > R for a
    /// negative exponent e, together with the truncation radius R itself.
    ///
    /// Shells between the escape radii of the doubling levels l0*2^m carry
    /// integrand at most (l0*2^m)^e; the shell widths are dominated by an
    /// explicit envelope of the fastest-growing component's radius (affine
    /// in log-level for a comb, in level^(1/gamma) for a power floor), and
    /// the resulting geometric sums close in closed form.  Needs e < 0 and,
    /// for a pure power tail, e + 1/gamma < 0; returns None when the
    /// structure cannot close the sum.
    pub fn integral_tail_bound(&self, l0: f64, e: f64) -> Option<(f64, f64)> {
        if !(e < 0.0) || !(l0 >= 1.0) || !l0.is_finite() {
            return None;
        }
        let radius = match self.level_outcome(l0) {
            LevelOutcome::Escapes { radius } if radius.is_finite() => radius,
            _ => return None,
        };
        let rho = 2.0f64.powf(e);
        let half = 0.5 / l0.sqrt();
        let comb = self.tails.iter().find_map(|t| match *t {
            CompTail::Comb {
                scale,
                weight,
                shift,
            } => {
                // index count at level lambda >= 1 is at most c * lambda
                let c = scale / weight + scale + 3.0;
                let a = (1.0 + PAD) * (shift + scale * (c.ln() + 1.0) + half) + PAD;
                let b = (1.0 + PAD) * scale;
                Some((a, b))
            }
            _ => None,
        });
        let bound = if let Some((a, b)) = comb {
            // radius(lambda) <= a + b ln(lambda)
            let alpha = a + b * l0.ln();
            let beta = b * std::f64::consts::LN_2;
            2.0 * l0.powf(e) * (alpha / (1.0 - rho) + beta / ((1.0 - rho) * (1.0 - rho)))
        } else {
            let mut best: Option<(f64, f64, f64)> = None;
            for t in &self.tails {
                if let CompTail::PowerFloor { c0, gamma, shift } = *t {
                    let take = match best {
                        None => true,
                        Some((bc, bg, _)) => gamma > bg || (gamma == bg && c0 > bc),
                    };
                    if take {
                        best = Some((c0, gamma, shift));
                    }
                }
            }
            let (c0, gamma, shift) = best?;
            let sigma = 2.0f64.powf(e + 1.0 / gamma);
            if sigma >= 1.0 {
                return None;
            }
            // radius(lambda) <= a + b lambda^(1/gamma)
            let a = (1.0 + PAD) * (shift + half) + PAD;
            let b = (1.0 + PAD) * c0.powf(-1.0 / gamma);
            2.0 * l0.powf(e)
                * (a / (1.0 - rho)
                    + b * l0.powf(1.0 / gamma) * 2.0f64.powf(1.0 / gamma) / (1.0 - sigma))
        };
        bound.is_finite().then_some((radius, bound))
    }

    /// liminf of q* at infinity and whether the value is certified by the
    /// component structure (single far-field mechanism) or sampled.
    pub fn q_liminf(&self, measure: &Measure) -> (f64, bool) {
        if self.grows_to_infinity() {
            return (f64::INFINITY, true);
        }
        let n_periodic = self
            .tails
            .iter()
            .filter(|t| matches!(t, CompTail::Periodic { .. }))
            .count();
        let n_gapped = self
            .tails
            .iter()
            .filter(|t| matches!(t, CompTail::Gapped { .. }))
            .count();
        if self.tails.is_empty() {
            // only bounded components and/or a constant floor
            return (self.const_floor, true);
        }
        if self.const_floor == 0.0 && n_periodic == 1 && n_gapped == 0 {
            if let Some(CompTail::Periodic { q_min, .. }) = self
                .tails
                .iter()
                .find(|t| matches!(t, CompTail::Periodic { .. }))
            {
                return (*q_min, true);
            }
        }
        if self.const_floor == 0.0 && n_gapped == 1 && n_periodic == 0 {
            if let Some(CompTail::Gapped { spacing, .. }) = self
                .tails
                .iter()
                .find(|t| matches!(t, CompTail::Gapped { .. }))
            {
                return (1.0 / (spacing * spacing), true);
            }
        }
        // mixed far-field mechanisms: sample far replicas, flag heuristic
        let x0 = (4.0 * self.bounded_radius + 16.0).max(16384.0);
        let max_spacing = self
            .tails
            .iter()
            .map(|t| match t {
                CompTail::Periodic { spacing, .. } | CompTail::Gapped { spacing, .. } => *spacing,
                _ => 0.0,
            })
            .fold(1.0f64, f64::max);
        let span = 8.0 * max_spacing;
        let mut q = f64::INFINITY;
        for i in 0..=512 {
            let dx = span * i as f64 / 512.0;
            for x in [x0 + dx, -x0 - dx] {
                q = q.min(q_star(measure, x, 1e-8).unwrap_or(f64::INFINITY));
            }
        }
        (q, false)
    }
}

/// Numeric growth probe: worst-case windowed masses along expanding |x| for
/// a decreasing sequence of widths.  "Looks discrete" when every width shows
/// masses that grow across the sweep and end far above the escape threshold
/// mass > 1/d.  At each magnitude the window slides over a span of offsets
/// so gap structure is seen, and both directions are probed.  The probe is
/// independent of the certified tail rules and must agree with them.
pub fn molchanov_probe(measure: &Measure) -> bool {
    let base = analyze(measure).bounded_radius.max(1.0);
    let worst_window = |x0: f64, d: f64| -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..=128 {
            let off = 4.0 * i as f64 / 128.0;
            let right =
                measure.mass_unchecked(crate::measure::Interval::closed(x0 + off, x0 + off + d));
            let left =
                measure.mass_unchecked(crate::measure::Interval::closed(-x0 - off - d, -x0 - off));
            m = m.min(right.min(left));
        }
        m
    };
    for k in 0..4 {
        let d = 1.0 / (1 << k) as f64;
        let first = worst_window(base * 16.0, d);
        let mid = worst_window(base * (1u64 << 22) as f64, d);
        let last = worst_window(base * (1u64 << 40) as f64, d);
        // masses must keep growing across the sweep; a bounded far field
        // (empty gaps, constant floor, periodic train) plateaus or vanishes
        let grew = last.is_infinite()
            || (last > 4.0 * first.max(1e-12) && last > 1.2 * mid && mid >= first * 0.999);
        if !grew {
            return false;
        }
    }
    true
}
