//! Finite-n distribution functions, path densities, expected areas and
//! scaling limits for n nonintersecting Brownian excursions on [0, 1].
//!
//! Each quantity is available through several independent routes that are
//! checked against one another: finite Gram determinants, Nyström
//! Fredholm determinants of the (extended) kernels, integration of the
//! Painlevé V system for the resolvent, and Monte Carlo sampling of the
//! path ensemble.
//!
//! Module map:
//!
//! * [`specfun`]: oscillator wavefunctions, killed-Brownian transition
//!   density, Gauss–Legendre rules.
//! * [`kernels`]: scalar, square-variable, extended excursion, extended GUE
//!   and (extended) Bessel kernels, and the one-time path density.
//! * [`fredholm`]: Nyström determinants, finite Gram determinants,
//!   resolvent diagonal.
//! * [`painleve`]: the five-variable ODE system, its first integrals, the
//!   σ-form residual and the small-s series.
//! * [`montecarlo`]: path samplers and seeded, thread-count independent
//!   estimators.
//! * [`observables`]: user-facing CDFs, expected areas, limit constants and
//!   scaling diagnostics.

// `!(a < b)` is used on purpose to reject NaN along with the ordered case
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fredholm;
pub mod kernels;
pub(crate) mod linalg;
pub mod montecarlo;
pub mod observables;
pub mod painleve;
pub mod specfun;

pub use error::{Error, Result};
