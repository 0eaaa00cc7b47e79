//! Symbolic-numeric toolkit for Riemann-Liouville fractional operators,
//! jet-space prolongation of vector fields, and numeric verification and
//! reduction of Lie point symmetries of fractional PDEs.
//!
//! The crate is organized around a small expression language ([`expr`]),
//! special functions ([`special`]), two independent evaluators for RL
//! operators ([`fracop`]), truncated infinite-jet machinery ([`jet`]), the
//! general prolongation formula with its corollaries ([`prolong`]), a
//! symmetry verification/reduction harness ([`symmetry`]), and the anomalous
//! diffusion case study ([`diffusion`]). See the `examples/` directory for a
//! runnable tour of each capability; the `fracsym` binary exposes the same
//! operations as subcommands.

pub mod cli;
pub mod diffusion;
pub mod expr;
pub mod fracop;
pub mod jet;
pub mod prolong;
pub mod quad;
pub mod report;
pub mod special;
pub mod symmetry;

pub use expr::{parse, Bindings, Expr};
pub use fracop::{rl_mixed, rl_quadrature, rl_series, AxisSpec, FracSpec, SeriesControl};
