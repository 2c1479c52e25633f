//! Schatten-class membership of the resolvent and the eigenvalue-sum
//! bracket.
//!
//! Membership is equivalent to 1/q* lying in L^(p-1/2), i.e. to the
//! finiteness of I = integral of q*(x)^(1/2-p) dx.  The verdict comes from
//! the certified growth class of q* at infinity; for members the integral
//! is enclosed by adaptive quadrature on a certified truncation interval
//! plus a closed-form bound for the far tail.

use serde::{Deserialize, Serialize};

use super::quadrature::adaptive_simpson_noisy;
use super::{pi2p1, require_positive_discrete};
use crate::error::{Error, Result};
use crate::measure::SignedMeasureSpec;
use crate::otelbaev::{self, q_star};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchattenReport {
    pub p: f64,
    pub member: bool,
    /// growth class behind the verdict
    pub rule: String,
    /// enclosure of I = integral of q*^(1/2-p) over the line (member only)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integral_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integral_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
    /// certified bound for the part of I beyond the truncation radius,
    /// already folded into integral_hi
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
    /// bracket for the eigenvalue sum of lambda_k^(-p) (member only)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_upper: Option<f64>,
}

impl SchattenReport {
    fn verdict_only(p: f64, member: bool, rule: String) -> Self {
        SchattenReport {
            p,
            member,
            rule,
            integral_lo: None,
            integral_hi: None,
            truncation_radius: None,
            tail_bound: None,
            sum_lower: None,
            sum_upper: None,
        }
    }
}

pub fn schatten(spec: &SignedMeasureSpec, p: f64, tol: f64) -> Result<SchattenReport> {
    if !(p > 0.5) || !p.is_finite() {
        return Err(Error::invalid_argument(
            "the Schatten exponent must exceed 1/2",
        ));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::invalid_argument("tolerance must be positive"));
    }
    require_positive_discrete(spec, "the Schatten classification")?;
    let measure = &spec.positive;
    let tails = otelbaev::analyze(measure);
    let e = 0.5 - p;
    let (member, rule) = match tails.growth_exponent() {
        None => (
            true,
            "comb tail: q* outgrows every power of |x|, so q*^(1/2-p) is integrable for every p > 1/2".to_string(),
        ),
        Some(g) if g <= 0.0 => (
            false,
            "logarithmic growth: q* stays below every power of |x|, the integral of q*^(1/2-p) diverges".to_string(),
        ),
        Some(g) => {
            let ok = g * (p - 0.5) > 1.0;
            (
                ok,
                format!(
                    "power growth q* ~ |x|^{g} far out: gamma*(p - 1/2) = {} {} 1, the integral {}",
                    g * (p - 0.5),
                    if ok { ">" } else { "<=" },
                    if ok { "converges" } else { "diverges" },
                ),
            )
        }
    };
    if !member {
        return Ok(SchattenReport::verdict_only(p, false, rule));
    }

    // first level whose sublevel set is certified inside a finite radius
    let mut l0 = (2.0 * tails.const_floor).max(1.0);
    let mut found = None;
    for _ in 0..60 {
        if let Some(rb) = tails.integral_tail_bound(l0, e) {
            found = Some(rb);
            break;
        }
        l0 *= 2.0;
    }
    let (mut radius, mut tail) = found.ok_or_else(|| {
        Error::numeric(
            "no certified truncation radius: the tail structure cannot close the integral",
        )
    })?;
    let r_first = radius;

    // a relative error of q_tol in the bisected d shifts q*^e by about
    // 2|e| q_tol; far out the window [x - d/2, x + d/2] is itself only
    // representable to the float spacing of x, worth about 4 eps |x| / d =
    // 4 eps |x| sqrt(q) of extra relative width error; both feed the
    // per-point noise bound the quadrature needs to terminate honestly
    let q_tol = (tol / (16.0 * e.abs())).min(1e-10);
    let integrand = |x: f64| match q_star(measure, x, q_tol) {
        Ok(q) => {
            let v = q.powf(e);
            let width_jitter = 4.0 * f64::EPSILON * x.abs() * q.sqrt();
            (v, 2.0 * e.abs() * (q_tol + width_jitter) * v)
        }
        Err(_) => (0.0, 0.0),
    };

    // coarse core estimate so the tolerance budget is relative to I
    let scale = {
        let n = 256usize;
        let h = 2.0 * radius / n as f64;
        let mut s = 0.5 * (integrand(-radius).0 + integrand(radius).0);
        for i in 1..n {
            s += integrand(-radius + h * i as f64).0;
        }
        (s * h).max(1e-6)
    };
    let target = 0.5 * tol * scale;
    // windows narrower than ~256 float spacings of x cannot be resolved, so
    // the radius stops at the representability horizon even when the tail
    // has not reached the budget; the analytic tail bound stays certified
    // at whatever radius the loop settles on, the enclosure just widens
    let horizon = 1.0 / (256.0 * f64::EPSILON);
    for _ in 0..400 {
        if tail <= target || l0 > 1e250 {
            break;
        }
        let next = 2.0 * l0;
        match tails.integral_tail_bound(next, e) {
            Some((r, t)) if r * next.sqrt() <= horizon => {
                l0 = next;
                radius = r;
                tail = t;
            }
            _ => break,
        }
    }

    // the truncation radius grows like a power of 1/tol, so integrating the
    // wings in log coordinates keeps the subdivision tree from being forced
    // through every decade between the core and the cutoff
    let r_core = radius.min(r_first.max(8.0));
    let (mut core, mut quad_err) =
        adaptive_simpson_noisy(&integrand, -r_core, r_core, 0.5 * target);
    if radius > r_core {
        let (t0, t1) = (r_core.ln(), radius.ln());
        let right = |t: f64| {
            let x = t.exp();
            let (v, n) = integrand(x);
            (v * x, n * x)
        };
        let left = |t: f64| {
            let x = t.exp();
            let (v, n) = integrand(-x);
            (v * x, n * x)
        };
        let (vr, er) = adaptive_simpson_noisy(&right, t0, t1, 0.25 * target);
        let (vl, el) = adaptive_simpson_noisy(&left, t0, t1, 0.25 * target);
        core += vr + vl;
        quad_err += er + el;
    }
    // quad_err already carries the accumulated noise allowance
    let integral_lo = (core - 4.0 * quad_err).max(0.0);
    let integral_hi = core + 4.0 * quad_err + tail;
    let c_lo = (2.0 * p / (p - 0.5)) * (3.0 / (32.0 * pi2p1())).powf(p);
    let c_hi = (p / (p - 0.5)) * 5.0f64.powf(p);
    Ok(SchattenReport {
        p,
        member: true,
        rule,
        integral_lo: Some(integral_lo),
        integral_hi: Some(integral_hi),
        truncation_radius: Some(radius),
        tail_bound: Some(tail),
        sum_lower: Some(c_lo * integral_lo),
        sum_upper: Some(c_hi * integral_hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::quadrature::adaptive_simpson;
    use crate::measure::{
        Atoms, ClassConstants, ComponentKind, Family, HarmonicComb, Measure, MeasureComponent,
    };

    fn positive_spec(kind: ComponentKind) -> SignedMeasureSpec {
        SignedMeasureSpec {
            positive: Measure::new(vec![MeasureComponent::from(kind)]),
            negative: Measure::new(vec![]),
            constants: ClassConstants::default(),
        }
    }

    #[test]
    fn even_square_p2_brackets_the_odd_square_sum() {
        let spec = positive_spec(ComponentKind::Family(Family::EvenSquare));
        let r = schatten(&spec, 2.0, 1e-6).unwrap();
        assert!(r.member, "{}", r.rule);
        let (lo, hi) = (r.sum_lower.unwrap(), r.sum_upper.unwrap());
        let truth = std::f64::consts::PI.powi(2) / 8.0;
        assert!(
            lo <= truth && truth <= hi,
            "sum(2k-1)^-2 = {truth} outside [{lo}, {hi}]"
        );
        // the integral enclosure must contain the closed-form value of
        // int ((sqrt(x^4+1/3)+x^2)/2)^(-3/2) dx, computed independently
        let f = |x: f64| {
            let q = 0.5 * ((x.powi(4) + 1.0 / 3.0).sqrt() + x * x);
            q.powf(-1.5)
        };
        let big = 2.0e4;
        let (body, _) = adaptive_simpson(&f, -big, big, 1e-10);
        // q* >= x^2 beyond big, so the remainder is under big^-2
        let lo_i = r.integral_lo.unwrap();
        let hi_i = r.integral_hi.unwrap();
        assert!(
            lo_i <= body + 1.0 / (big * big) && body <= hi_i,
            "[{lo_i}, {hi_i}] vs {body}"
        );
        assert!(
            hi_i - lo_i < 1e-3 * body,
            "enclosure too wide: [{lo_i}, {hi_i}]"
        );
    }

    #[test]
    fn slow_decay_terminates_at_the_representability_horizon() {
        // p = 3/2 makes the integrand fall off like x^-2, so the certified
        // truncation radius wants to outrun the float spacing of x; the
        // horizon cap plus the noise-aware quadrature must keep this fast
        // and the enclosure honest even at a tolerance the tail cannot meet
        let spec = positive_spec(ComponentKind::Family(Family::EvenSquare));
        let r = schatten(&spec, 1.5, 1e-10).unwrap();
        assert!(r.member, "{}", r.rule);
        let f = |x: f64| {
            let q = 0.5 * ((x.powi(4) + 1.0 / 3.0).sqrt() + x * x);
            1.0 / q
        };
        let big = 2.0e4;
        let (body, _) = adaptive_simpson(&f, -big, big, 1e-10);
        let (lo_i, hi_i) = (r.integral_lo.unwrap(), r.integral_hi.unwrap());
        // q* >= x^2 beyond big, so the remainder is under 2/big
        assert!(
            lo_i <= body + 2.0 / big && body <= hi_i,
            "[{lo_i}, {hi_i}] vs {body}"
        );
        assert!(
            hi_i - lo_i < 1e-5 * body,
            "enclosure too wide: [{lo_i}, {hi_i}]"
        );
        assert!(
            r.truncation_radius.unwrap() < 1.0e8,
            "radius ran past the horizon"
        );
    }

    #[test]
    fn even_square_p1_is_not_a_member() {
        let spec = positive_spec(ComponentKind::Family(Family::EvenSquare));
        let r = schatten(&spec, 1.0, 1e-8).unwrap();
        assert!(!r.member);
        assert!(r.integral_lo.is_none() && r.sum_lower.is_none());
        assert!(r.rule.contains("diverges"));
    }

    #[test]
    fn staircase_follows_the_sequence_space_rule() {
        // weights c k^gamma: member iff gamma (p - 1/2) > 1
        let spec = positive_spec(ComponentKind::Family(Family::Staircase {
            c: 1.0,
            gamma: 1.0,
        }));
        assert!(schatten(&spec, 2.0, 1e-4).unwrap().member);
        assert!(!schatten(&spec, 1.4, 1e-4).unwrap().member);
        assert!(
            !schatten(&spec, 1.5, 1e-4).unwrap().member,
            "border case is not summable"
        );
    }

    #[test]
    fn comb_is_member_for_every_exponent() {
        let spec = positive_spec(ComponentKind::HarmonicComb(HarmonicComb {
            scale: 1.0,
            weight: 1.0,
        }));
        let r = schatten(&spec, 0.6, 1e-3).unwrap();
        assert!(r.member, "{}", r.rule);
        let (lo, hi) = (r.sum_lower.unwrap(), r.sum_upper.unwrap());
        assert!(lo > 0.0 && lo <= hi && hi.is_finite());
    }

    #[test]
    fn log_growth_is_never_a_member() {
        let spec = positive_spec(ComponentKind::Family(Family::LogPow { n: 1, cutoff: 3.0 }));
        let r = schatten(&spec, 5.0, 1e-4).unwrap();
        assert!(!r.member);
    }

    #[test]
    fn rejects_bad_arguments() {
        let spec = positive_spec(ComponentKind::Family(Family::EvenSquare));
        assert!(schatten(&spec, 0.5, 1e-8).is_err());
        assert!(schatten(&spec, 2.0, 0.0).is_err());
        let not_discrete = positive_spec(ComponentKind::Atoms(Atoms {
            positions: vec![0.0],
            weights: vec![1.0],
        }));
        assert!(schatten(&not_discrete, 2.0, 1e-8).is_err());
    }
}
