//! Scenario-based portfolio risk toolkit.
//!
//! Evaluates the negative expectile, omega ratio, CVaR and VaR of linear
//! portfolios over a finite set of return scenarios, and optimizes portfolios
//! on the long-only simplex against the expectile and omega functionals with
//! three independent backends: an exact LP (own revised simplex), a projected
//! subgradient method, and a brute-force lattice oracle.

pub mod error;
pub mod frontier;
pub mod lp;
pub mod risk;
pub mod scenarios;
pub mod subgrad;

pub use error::{Error, Result};
pub use risk::{OmegaValue, RiskSpec};
pub use scenarios::{Distribution, Portfolio, ScenarioMatrix};
