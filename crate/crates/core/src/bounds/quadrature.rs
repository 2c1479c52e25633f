//! Adaptive Simpson quadrature with a global error estimate and optional
//! pointwise noise awareness.

/// Integrates `f` over [a, b] to absolute tolerance `tol`, returning the
/// value and an error estimate.  The classic recursion: a panel is accepted
/// when the two-half refinement moves the Simpson value by less than 15x the
/// panel's tolerance share, and the Richardson correction is applied.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    adaptive_simpson_noisy(&|x| (f(x), 0.0), a, b, tol)
}

/// Like [`adaptive_simpson`], but the integrand reports a per-point absolute
/// noise bound alongside each value (bisected or otherwise inexact
/// evaluations).  The refinement delta of a panel whose values carry noise n
/// stays of order n * width however far the panel is split, so the plain
/// acceptance test would recurse forever once the tolerance share drops
/// below the noise share; here a panel is also accepted when its delta is
/// within the noise allowance, and that allowance is added to the returned
/// error estimate.
pub fn adaptive_simpson_noisy(
    f: &dyn Fn(f64) -> (f64, f64),
    a: f64,
    b: f64,
    tol: f64,
) -> (f64, f64) {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    struct Panel {
        fa: f64,
        fm: f64,
        fb: f64,
        noise: f64,
        whole: f64,
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> (f64, f64),
        a: f64,
        b: f64,
        p: &Panel,
        tol: f64,
        depth: u32,
        err: &mut f64,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let ((flm, nlm), (frm, nrm)) = (f(lm), f(rm));
        let noise = p.noise.max(nlm).max(nrm);
        let left = simpson(p.fa, flm, p.fm, m - a);
        let right = simpson(p.fm, frm, p.fb, b - m);
        let delta = left + right - p.whole;
        // three Simpson values of width-(b-a) weight enter delta, so its
        // noise stays under 3 * noise * (b - a); the margin makes the
        // stopping test robust to the bound being merely first-order
        let allowance = 3.0 * noise * (b - a);
        if depth == 0 || delta.abs() <= 15.0 * tol + allowance {
            *err += delta.abs() / 15.0 + noise * (b - a);
            return left + right + delta / 15.0;
        }
        let lp = Panel {
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            noise,
            whole: left,
        };
        let rp = Panel {
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            noise,
            whole: right,
        };
        rec(f, a, m, &lp, 0.5 * tol, depth - 1, err) + rec(f, m, b, &rp, 0.5 * tol, depth - 1, err)
    }
    if !(b > a) {
        return (0.0, 0.0);
    }
    let m = 0.5 * (a + b);
    let ((fa, na), (fm, nm), (fb, nb)) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    let root = Panel {
        fa,
        fm,
        fb,
        noise: na.max(nm).max(nb),
        whole,
    };
    let mut err = 0.0;
    let v = rec(f, a, b, &root, tol, 48, &mut err);
    (v, err)
}
