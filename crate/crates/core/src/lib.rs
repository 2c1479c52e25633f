//! Certified spectral estimates for the half-line-free Schrodinger operator
//! `H = -d^2/dx^2 + mu` with a (signed) Radon measure potential.
//!
//! The crate is organised around one scalar field: the reciprocal-square
//! width `q*(x)` of the largest interval centred at `x` whose `mu`-mass times
//! its length stays below one.  Everything downstream - eigenvalue counting
//! bounds, discreteness and Schatten-class classification, brackets for
//! individual eigenvalues - is a certified function of `q*` plus the class
//! constants of the measure.  An independent finite-element oracle provides
//! numerical cross-checks but never feeds back into the certified numbers.
//!
//! Layout:
//! - [`measure`]: structured measure specifications (atoms, lattices,
//!   densities, Cantor-type singular parts) with exact interval masses.
//! - [`otelbaev`]: the width field `d(x)`, `q*(x)`, sublevel-set geometry and
//!   the spectral counting transform built from it.
//! - [`bounds`]: the certified spectral statements.
//! - [`oracle`]: the finite-element cross-validation backend.

// negated comparisons like `!(tol > 0.0)` are argument guards that must
// reject NaN, which the un-negated form would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod measure;
pub mod num;
pub mod oracle;
pub mod otelbaev;

pub use bounds::{
    classify_discreteness, counting_bounds, eigenvalue_bracket, essential_inf_bounds,
    lambda1_bounds, multiplicity_bound, negative_count_bound, schatten, BoundReport, Discreteness,
    DiscretenessReport, EigenvalueBracket, EssentialReport, Lambda1Report, MultiplicityReport,
    NegativeCountReport, SchattenReport,
};
pub use error::{Error, Result};
pub use measure::{
    brinck_bound, validate_spec, ClassConstants, Interval, Measure, MeasureComponent,
    SignedMeasureSpec, ValidationReport,
};
pub use num::{fmt_g17, ExtReal};
pub use oracle::{
    assemble, convergence_study, count_below, lowest_eigenvalues, Assembly, BoundaryCondition,
    TridiagonalPencil,
};
pub use otelbaev::{
    d_mu, m_of, profile, q0_and_q, q_star, sublevel_measure, MTransform, OtelbaevProfile,
};
