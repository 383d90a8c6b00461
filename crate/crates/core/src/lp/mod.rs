//! Linear programming: problem data, a revised simplex solver, MPS I/O, and
//! the LP reformulations of the portfolio problems.

pub mod builders;
mod factor;
pub mod mps;
pub mod problem;
pub mod simplex;

pub use builders::{
    build_cvar_lp, build_omega_lp, build_p1_expectile_lp, build_p2_expectile_lp, solve_cvar, solve_omega,
    solve_p1_expectile, solve_p2_expectile, OmegaLpSolution, PortfolioLpSolution,
};
pub use mps::{export_mps, parse_mps, write_mps};
pub use problem::{Constraint, LpProblem, LpSolution, LpStatus, RowSense, Sense, Variable};
pub use simplex::{default_iteration_limit, simplex_solve};
