//! Exact evaluation of endoscopic relative orbital integrals on the
//! symmetric space U3/SO3 over Q_p.
//!
//! The crate has three layers. `scalar` is a truncated certified-precision
//! arithmetic kernel for F = Q_p, its unramified quadratic extension
//! E = F(xi), and the ramified quadratic tower E(sqrt(nu)). `orbit` builds
//! torus points gamma, classifies them (types I-III), computes the
//! stable-orbit invariants M_ij, N_ij and the coordinates z_x, z_y, and
//! parametrizes the rational orbits gamma_mu together with the group
//! D_gamma and its order-2 characters kappa. On top of that, `closed_form`
//! evaluates the case-by-case formulas for the orbital integrals
//! O_{gamma_mu}(1_{S(O_F)}) and the kappa-weighted sums, while `oracle`
//! recomputes the same quantities by direct lattice-point enumeration; the
//! two must agree as exact rationals, and `harness` drives that comparison
//! over seeded sample grids.

pub mod closed_form;
pub mod error;
pub mod field;
pub mod halfint;
pub mod harness;
pub mod oracle;
pub mod orbit;
pub mod rational;
pub mod sampler;
pub mod scalar;
pub mod selftest;

pub use error::{Error, Result};
pub use field::{FieldContext, MuLabel, Nu, SquareClass};
pub use halfint::HalfInt;
pub use rational::ExactRational;
pub use scalar::{ArithOp, Coord, Ext, Level, PadicScalar, Tower};
