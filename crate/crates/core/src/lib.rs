//! Geometry and integrable dynamics of the three-parameter bivariate beta
//! (Dirichlet) statistical manifold.
//!
//! Two models share one interface ([`Manifold`]):
//!
//! * [`ExactModel`] uses the log-normalizer `ln B(a, b, c)` as potential,
//!   so its metric is the Fisher information.
//! * [`StirlingModel`] replaces the gamma functions by their Stirling
//!   asymptotics, giving elementary closed forms and a pseudo-Riemannian
//!   (indefinite, possibly degenerate) metric on `a, b, c > 1`.
//!
//! On top of either model, [`flow`] integrates the gradient system
//! `θ̇ = -G(θ)⁻¹ η(θ)`, whose dual coordinates decay as `η₀ e^{-t}`;
//! [`integrability`] provides the conserved Hamiltonian, canonical
//! variables and Lax pair; [`scan`] sweeps grids for metric degeneracy
//! and runs the verification suites.

pub mod error;
pub mod exact;
pub mod flow;
pub mod integrability;
pub mod manifold;
pub mod scan;
pub mod specfun;
pub mod stirling;

pub use error::{Error, Result};
pub use exact::{ExactModel, SamplePoint};
pub use flow::{FlowStatus, Trajectory, TrajectorySample};
pub use integrability::{CanonicalState, LaxPair, PoissonTensor4};
pub use manifold::{det3, invert3, DomainClass, DomainKind, Eta, Manifold, Metric3, ModelKind, Theta};
pub use scan::{run_suite, scan_degeneracy, CheckRecord, FlaggedCell, Region, SuiteReport};
pub use specfun::PositiveReal;
pub use stirling::StirlingModel;
