//! Independent finite-element ground truth for H = -d^2/dx^2 + mu.
//!
//! Piecewise-linear Galerkin discretization of the quadratic form
//! a(f, g) = int f'g' dx + int fg d(mu+) - int fg d(mu-) on a truncated
//! interval [-R, R].  The resulting pencil (A, B) is tridiagonal; counts of
//! generalized eigenvalues below a level come from the inertia of the
//! shifted factorization, individual eigenvalues from bisection on those
//! counts.  Nothing here evaluates q*; agreement with the bounds module is
//! the point of the cross-check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{ComponentKind, Interval, MeasureComponent, SignedMeasureSpec};
use crate::num::ExtReal;

/// Cantor components enter the form through this many construction levels
/// (2^L equal atoms at level-L interval midpoints).
pub const CANTOR_ATOMIZATION_LEVEL: u32 = 16;

/// Hard cap on enumerated atoms per assembly.
const ATOM_CAP: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// natural condition of the form domain; the default
    Neumann,
    /// hard zero at both truncation ends
    Dirichlet,
}

/// Galerkin image of the form on [-R, R]: A v = lambda B v.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TridiagonalPencil {
    /// number of elements (grid cells) on [-R, R]
    pub n: usize,
    pub a_diag: Vec<f64>,
    pub a_off: Vec<f64>,
    pub b_diag: Vec<f64>,
    pub b_off: Vec<f64>,
    pub radius: f64,
    pub bc: BoundaryCondition,
    pub h: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Assembly {
    pub pencil: TridiagonalPencil,
    pub warnings: Vec<String>,
    /// total measure weight (absolute) outside the truncated interval
    pub dropped_mass: ExtReal,
}

impl TridiagonalPencil {
    pub fn dim(&self) -> usize {
        self.a_diag.len()
    }

    /// Gershgorin positivity of the mass matrix (rows h/6 * [1, 4, 1]).
    pub fn mass_matrix_is_spd(&self) -> bool {
        gershgorin(&self.b_diag, &self.b_off).0 > 0.0
    }
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += off[i - 1].abs();
        }
        if i + 1 < n {
            r += off[i].abs();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// Midpoints of the level-L construction intervals of the standard
/// middle-thirds set on [0, 1], in no particular order.
fn cantor_midpoints(level: u32) -> Vec<f64> {
    let count = 1usize << level;
    let half = 0.5 / 3f64.powi(level as i32);
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let mut left = 0.0f64;
        let mut scale = 1.0 / 3.0;
        for b in 0..level {
            if (j >> b) & 1 == 1 {
                left += 2.0 * scale;
            }
            scale /= 3.0;
        }
        out.push(left + half);
    }
    out
}

/// Finest structural length scale of a component inside [-r, r], used only
/// for the advisory under-resolution warning.
fn feature_scale(comp: &MeasureComponent, r: f64) -> Option<f64> {
    match &comp.kind {
        ComponentKind::Lattice(l) => Some(l.spacing),
        ComponentKind::Atoms(a) => {
            let mut ps: Vec<f64> = a.positions.clone();
            ps.sort_by(f64::total_cmp);
            ps.windows(2)
                .map(|w| w[1] - w[0])
                .filter(|g| *g > 0.0)
                .reduce(f64::min)
        }
        ComponentKind::PiecewisePoly(p) => p
            .breakpoints
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|g| *g > 0.0)
            .reduce(f64::min),
        ComponentKind::Cantor(c) => Some((c.support[1] - c.support[0]).abs() / 9.0),
        ComponentKind::HarmonicComb(h) => {
            // smallest gap inside the window is roughly scale / K(r)
            let k = crate::measure::harmonic::count_harmonic_le(r / h.scale).max(1);
            Some(h.scale / k as f64)
        }
        ComponentKind::Family(_) => None,
    }
}

/// Discretize the form on [-R, R] with n piecewise-linear elements.
///
/// Atoms couple through exact hat-function values in their containing
/// element (never snapped to nodes); densities through a 4-point
/// Gauss-Legendre rule per element; Cantor parts through the level-L
/// atomization; the negative part enters with a minus sign.  Class
/// membership of the spec is not required here, only structural validity.
pub fn assemble(
    spec: &SignedMeasureSpec,
    radius: f64,
    n: usize,
    bc: BoundaryCondition,
) -> Result<Assembly> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid_argument(
            "truncation radius must be a finite positive real",
        ));
    }
    if n < 16 {
        return Err(Error::invalid_argument("grid needs at least 16 elements"));
    }
    for (part, m) in [("positive", &spec.positive), ("negative", &spec.negative)] {
        for (i, comp) in m.components.iter().enumerate() {
            comp.validate().map_err(|e| {
                Error::invalid_spec(format!("component {i} of the {part} part: {e}"))
            })?;
        }
    }

    let h = 2.0 * radius / n as f64;
    let nodes = n + 1;
    let mut a_diag = vec![0.0f64; nodes];
    let mut a_off = vec![0.0f64; nodes - 1];
    let mut b_diag = vec![0.0f64; nodes];
    let mut b_off = vec![0.0f64; nodes - 1];
    for k in 0..n {
        a_diag[k] += 1.0 / h;
        a_diag[k + 1] += 1.0 / h;
        a_off[k] -= 1.0 / h;
        b_diag[k] += h / 3.0;
        b_diag[k + 1] += h / 3.0;
        b_off[k] += h / 6.0;
    }

    let mut warnings: Vec<String> = Vec::new();
    let mut dropped = 0.0f64;
    let parts: [(f64, &str, &crate::measure::Measure); 2] = [
        (1.0, "positive", &spec.positive),
        (-1.0, "negative", &spec.negative),
    ];

    // mass kept outside the window, per component, measured exactly
    for (_, part, m) in parts {
        for (i, comp) in m.components.iter().enumerate() {
            let inside = comp.mass(Interval::closed(-radius, radius));
            let out = (comp.total_mass() - inside).max(0.0);
            if out > 1e-12 * (1.0 + inside) {
                warnings.push(format!(
                    "component {i} of the {part} part keeps mass {out:.6e} outside [-{radius}, {radius}]"
                ));
                dropped += out;
            }
        }
    }

    // advisory resolution check
    let mut finest = f64::INFINITY;
    for (_, _, m) in parts {
        for comp in &m.components {
            if let Some(s) = feature_scale(comp, radius) {
                finest = finest.min(s);
            }
        }
    }
    if h > finest {
        warnings.push(format!(
            "grid step {h:.3e} exceeds the finest component feature scale {finest:.3e}; refine n"
        ));
    }

    // absolutely continuous couplings
    let density_comps: Vec<(f64, &MeasureComponent)> = parts
        .iter()
        .flat_map(|&(s, _, m)| {
            m.components
                .iter()
                .filter(|c| c.has_density())
                .map(move |c| (s, c))
        })
        .collect();
    if !density_comps.is_empty() {
        const GX: [f64; 4] = [
            -0.8611363115940526,
            -0.33998104358485626,
            0.33998104358485626,
            0.8611363115940526,
        ];
        const GW: [f64; 4] = [
            0.34785484513745385,
            0.6521451548625461,
            0.6521451548625461,
            0.34785484513745385,
        ];
        for k in 0..n {
            let xa = -radius + k as f64 * h;
            let mid = xa + 0.5 * h;
            let half = 0.5 * h;
            for g in 0..4 {
                let t = mid + half * GX[g];
                let mut rho = 0.0;
                for (s, comp) in &density_comps {
                    rho += s * comp.density_at(t);
                }
                if rho == 0.0 {
                    continue;
                }
                let c = half * GW[g] * rho;
                let phi_a = (xa + h - t) / h;
                let phi_b = (t - xa) / h;
                a_diag[k] += c * phi_a * phi_a;
                a_diag[k + 1] += c * phi_b * phi_b;
                a_off[k] += c * phi_a * phi_b;
            }
        }
    }

    // atomic couplings: exact hat values in the containing element
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for (sign, _, m) in parts {
        for comp in &m.components {
            let start = atoms.len();
            comp.atoms_in(-radius, radius, ATOM_CAP, &mut atoms)?;
            if let ComponentKind::Cantor(c) = &comp.kind {
                let width = c.support[1] - c.support[0];
                let w = c.mass / (1u64 << CANTOR_ATOMIZATION_LEVEL) as f64;
                for u in cantor_midpoints(CANTOR_ATOMIZATION_LEVEL) {
                    let t = c.support[0] + width * u + comp.offset;
                    if t.abs() <= radius {
                        atoms.push((t, w));
                    }
                }
            }
            if sign < 0.0 {
                for a in &mut atoms[start..] {
                    a.1 = -a.1;
                }
            }
        }
    }
    for (t, w) in atoms {
        let k = (((t + radius) / h).floor() as usize).min(n - 1);
        let xa = -radius + k as f64 * h;
        let phi_a = (xa + h - t) / h;
        let phi_b = (t - xa) / h;
        a_diag[k] += w * phi_a * phi_a;
        a_diag[k + 1] += w * phi_b * phi_b;
        a_off[k] += w * phi_a * phi_b;
    }

    if matches!(bc, BoundaryCondition::Dirichlet) {
        a_diag = a_diag[1..nodes - 1].to_vec();
        b_diag = b_diag[1..nodes - 1].to_vec();
        a_off = a_off[1..nodes - 2].to_vec();
        b_off = b_off[1..nodes - 2].to_vec();
    }

    let pencil = TridiagonalPencil {
        n,
        a_diag,
        a_off,
        b_diag,
        b_off,
        radius,
        bc,
        h,
    };
    if !pencil.mass_matrix_is_spd() {
        return Err(Error::numeric(
            "mass matrix fails the Gershgorin positivity check",
        ));
    }
    Ok(Assembly {
        pencil,
        warnings,
        dropped_mass: ExtReal(dropped),
    })
}

/// Inertia count of the shifted pencil.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountReport {
    pub lambda: f64,
    /// number of generalized eigenvalues strictly below lambda
    pub count: usize,
    /// rows whose vanishing pivot was nudged, with the signed value applied
    pub perturbed: Vec<(usize, f64)>,
}

/// Number of generalized eigenvalues of (A, B) below lambda, read off the
/// signs of the pivots of A - lambda B.  B positive definite makes the
/// inertia of the shift equal to the eigenvalue count.
pub fn count_below(p: &TridiagonalPencil, lambda: f64) -> Result<CountReport> {
    let dim = p.dim();
    let mut scale = 0.0f64;
    for i in 0..dim {
        scale = scale.max((p.a_diag[i] - lambda * p.b_diag[i]).abs());
    }
    for i in 0..dim.saturating_sub(1) {
        scale = scale.max((p.a_off[i] - lambda * p.b_off[i]).abs());
    }
    let eps = 1e-12 * (lambda.abs() + 1.0) * scale.max(f64::MIN_POSITIVE);
    let mut count = 0usize;
    let mut perturbed = Vec::new();
    let mut prev = 0.0f64;
    for i in 0..dim {
        let t = p.a_diag[i] - lambda * p.b_diag[i];
        let mut d = if i == 0 {
            t
        } else {
            let e = p.a_off[i - 1] - lambda * p.b_off[i - 1];
            t - e * e / prev
        };
        if !d.is_finite() {
            return Err(Error::numeric(format!(
                "factorization breakdown at row {i} of the shifted pencil"
            )));
        }
        if d.abs() < eps {
            // an eigenvalue sits at lambda to working precision; push the
            // pivot off zero without counting it as below
            let nudge = if d < 0.0 { -eps } else { eps };
            perturbed.push((i, nudge));
            d = nudge;
        }
        if d < 0.0 {
            count += 1;
        }
        prev = d;
    }
    Ok(CountReport {
        lambda,
        count,
        perturbed,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Eigenvalue {
    /// 1-based spectral index
    pub index: usize,
    pub value: f64,
    /// width of the final bisection bracket
    pub width: f64,
}

/// The k lowest generalized eigenvalues, each bracketed by bisection on
/// count_below to width 1e-10 * (1 + |value|).  Output is nondecreasing.
pub fn lowest_eigenvalues(p: &TridiagonalPencil, k: usize) -> Result<Vec<Eigenvalue>> {
    let dim = p.dim();
    if k == 0 {
        return Err(Error::invalid_argument(
            "need at least one eigenvalue index",
        ));
    }
    if k > dim {
        return Err(Error::invalid_argument(format!(
            "k = {k} exceeds the pencil dimension {dim}"
        )));
    }
    let (ga_lo, ga_hi) = gershgorin(&p.a_diag, &p.a_off);
    let (gb_lo, _) = gershgorin(&p.b_diag, &p.b_off);
    if !(gb_lo > 0.0) {
        return Err(Error::numeric(
            "mass matrix fails the Gershgorin positivity check",
        ));
    }
    // Rayleigh quotients lie in [min(ga_lo, 0), max(ga_hi, 0)] / gb_lo
    let mut lo = ga_lo.min(0.0) / gb_lo - 1.0;
    let mut hi = ga_hi.max(0.0) / gb_lo + 1.0;
    for _ in 0..64 {
        if count_below(p, lo)?.count == 0 {
            break;
        }
        lo = 2.0 * lo - 1.0;
    }
    for _ in 0..64 {
        if count_below(p, hi)?.count >= k {
            break;
        }
        hi = 2.0 * hi + 1.0;
    }
    (1..=k)
        .into_par_iter()
        .map(|j| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if b - a <= 1e-10 * (1.0 + mid.abs()) {
                    break;
                }
                if count_below(p, mid)?.count >= j {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            Ok(Eigenvalue {
                index: j,
                value: 0.5 * (a + b),
                width: b - a,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyCell {
    pub radius: f64,
    pub n: usize,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyReport {
    pub lambda: f64,
    /// counts over the (radius, n) grid, radii outer, n inner, ascending
    pub cells: Vec<StudyCell>,
    /// count agrees across the two finest settings in each direction
    pub converged: bool,
    pub diagnostic: String,
}

/// Re-assemble and re-count across truncation radii and grid sizes; an
/// oracle count is trusted only when the finest settings agree.
pub fn convergence_study(
    spec: &SignedMeasureSpec,
    lambda: f64,
    r_list: &[f64],
    n_list: &[usize],
    bc: BoundaryCondition,
) -> Result<StudyReport> {
    if r_list.is_empty() || n_list.is_empty() {
        return Err(Error::invalid_argument(
            "need at least one radius and one grid size",
        ));
    }
    let mut rs = r_list.to_vec();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let pairs: Vec<(f64, usize)> = rs
        .iter()
        .flat_map(|&r| ns.iter().map(move |&n| (r, n)))
        .collect();
    let cells: Result<Vec<StudyCell>> = pairs
        .par_iter()
        .map(|&(r, n)| {
            let asm = assemble(spec, r, n, bc)?;
            let c = count_below(&asm.pencil, lambda)?;
            Ok(StudyCell {
                radius: r,
                n,
                count: c.count,
            })
        })
        .collect();
    let cells = cells?;
    let find = |r: f64, n: usize| {
        cells
            .iter()
            .find(|c| c.radius == r && c.n == n)
            .unwrap()
            .count
    };
    let (r_top, n_top) = (*rs.last().unwrap(), *ns.last().unwrap());
    let reference = find(r_top, n_top);
    let mut notes = Vec::new();
    if ns.len() >= 2 {
        let c = find(r_top, ns[ns.len() - 2]);
        if c != reference {
            notes.push(format!(
                "count moves {c} -> {reference} between the two finest grids at R = {r_top}"
            ));
        }
    }
    if rs.len() >= 2 {
        let c = find(rs[rs.len() - 2], n_top);
        if c != reference {
            notes.push(format!(
                "count moves {c} -> {reference} between the two largest radii at n = {n_top}"
            ));
        }
    }
    let converged = notes.is_empty();
    let diagnostic = if converged {
        format!("count stable at {reference} across the finest settings")
    } else {
        notes.join("; ")
    };
    Ok(StudyReport {
        lambda,
        cells,
        converged,
        diagnostic,
    })
}
