//! A finite-precision laboratory for cyclotomic (φ, Γ)-modules.
//!
//! The crate realizes truncated Robba rings over small coefficient rings,
//! the Amice/Colmez dictionary between series and distributions/functions,
//! the character twists `m_δ`, the involutions `w_*` and `ι`, finite-dimensional
//! models of the P̄⁺-modules that carry the cohomology of `R⁺(δ)` and `R⁻(δ)`,
//! the Koszul and Lie-algebra complexes computing that cohomology, and the
//! rank-one sheaf `Δ ⊠ P¹` with its GL₂(ℚₚ)-action.
//!
//! Everything is generic over a scalar field implementing
//! [`coefficients::Scalar`]; the two concrete choices are exported as
//! [`Rat`] (exact) and [`PAdic`] (capped relative precision).

pub mod characters;
pub mod cli;
pub mod coefficients;
pub mod complexes;
pub mod dictionary;
pub mod error;
pub mod finite_models;
pub mod linalg;
pub mod poly;
pub mod robba;
pub mod sheaf;
pub mod twists;

pub use coefficients::{CoeffElement, CoeffRing, PAdic, Rat, Ring, Scalar, Val};
pub use error::{Error, Result};

/// Coefficient ring elements over the exact rationals.
pub type RatCoeff = CoeffElement<Rat>;
/// Coefficient ring elements over capped-precision p-adic scalars.
pub type PAdicCoeff = CoeffElement<PAdic>;
