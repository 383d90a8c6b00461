//! Brute-force lattice search over the simplex.
//!
//! Every point with weights in `{0, step, 2·step, …}` summing to one is
//! scored with the public risk evaluators and nothing else, so the result is
//! an independent reference for the LP and subgradient backends.

use std::cmp::Ordering;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::SolveReport;
use crate::error::{Error, Result};
use crate::risk::{check_confidence, check_convex_level, cvar, neg_expectile, omega, var, ExtendedReal};
use crate::scenarios::{dot, portfolio_return_distribution, Distribution, Portfolio, ScenarioMatrix};

/// Largest lattice the oracle will enumerate.
pub const MAX_LATTICE_POINTS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum OracleProblem {
    /// `max E[ξᵀx]` s.t. `ρ_q(x) ≤ bound`.
    P1Expectile { q: f64, bound: f64 },
    /// `min ρ_q(x)` s.t. `E[ξᵀx] ≥ floor`.
    P2Expectile { q: f64, floor: Option<f64> },
    /// `max E[ξᵀx]` s.t. `Ω_B(x) ≥ threshold`.
    P1Omega { benchmark: f64, threshold: f64 },
    /// `max Ω_B(x)` s.t. `E[ξᵀx] ≥ floor`.
    P2Omega { benchmark: f64, floor: Option<f64> },
    /// `min CVaR_α(−ξᵀx)` s.t. `E[ξᵀx] ≥ floor`.
    P2Cvar { alpha: f64, floor: Option<f64> },
    /// `min VaR_α(−ξᵀx)` s.t. `E[ξᵀx] ≥ floor`.
    P2Var { alpha: f64, floor: Option<f64> },
}

impl OracleProblem {
    fn validate(&self) -> Result<()> {
        match *self {
            OracleProblem::P1Expectile { q, bound } => {
                check_convex_level(q)?;
                finite("bound", bound)
            }
            OracleProblem::P2Expectile { q, .. } => check_convex_level(q),
            OracleProblem::P1Omega { benchmark, threshold } => {
                finite("benchmark", benchmark)?;
                finite("threshold", threshold)
            }
            OracleProblem::P2Omega { benchmark, .. } => finite("benchmark", benchmark),
            OracleProblem::P2Cvar { alpha, .. } | OracleProblem::P2Var { alpha, .. } => check_confidence(alpha),
        }
    }

    fn floor(&self) -> f64 {
        match *self {
            OracleProblem::P2Expectile { floor, .. }
            | OracleProblem::P2Omega { floor, .. }
            | OracleProblem::P2Cvar { floor, .. }
            | OracleProblem::P2Var { floor, .. } => floor.unwrap_or(f64::NEG_INFINITY),
            _ => f64::NEG_INFINITY,
        }
    }

    /// The measure reported as `risk_value`.
    fn measure(&self, d: &Distribution) -> Result<ExtendedReal> {
        Ok(match *self {
            OracleProblem::P1Expectile { q, .. } | OracleProblem::P2Expectile { q, .. } => {
                ExtendedReal::Finite(neg_expectile(d, q)?)
            }
            OracleProblem::P1Omega { benchmark, .. } | OracleProblem::P2Omega { benchmark, .. } => omega(d, benchmark)?,
            OracleProblem::P2Cvar { alpha, .. } => ExtendedReal::Finite(cvar(&d.negated(), alpha)?),
            OracleProblem::P2Var { alpha, .. } => ExtendedReal::Finite(var(&d.negated(), alpha)?),
        })
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, v, "finite reals"))
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// All compositions of `total` into `n` nonnegative parts, in lexicographic
/// order of the count vector.
fn lattice(n: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(n, left - c, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, total, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Exhaustive search over the lattice with spacing `step` (1e-2 or 1e-3).
///
/// Ties keep the first point in lexicographic order of the weight counts.
/// `iterations` in the report is the number of lattice points scored.
pub fn grid_oracle(s: &ScenarioMatrix, problem: &OracleProblem, step: f64) -> Result<SolveReport> {
    let start = Instant::now();
    problem.validate()?;
    let n = s.n_assets();
    if n > 4 {
        return Err(Error::Unsupported(format!(
            "grid oracle supports at most 4 instruments, got {n}"
        )));
    }
    let total = if step == 1e-2 {
        100
    } else if step == 1e-3 {
        1000
    } else {
        return Err(Error::param("step", step, "{0.01, 0.001}"));
    };
    let size = binomial(total as u64 + n as u64 - 1, n as u64 - 1);
    if size > MAX_LATTICE_POINTS {
        return Err(Error::Unsupported(format!("lattice of {size} points is too large")));
    }

    let mu = s.mean_returns();
    let mut points: Vec<(Vec<f64>, f64)> = lattice(n, total)
        .into_iter()
        .map(|c| {
            let w: Vec<f64> = c.iter().map(|&k| k as f64 / total as f64).collect();
            let m = dot(&mu, &w);
            (w, m)
        })
        .collect();

    let mut scored = 0;
    let best: Option<(Vec<f64>, ExtendedReal)> = match *problem {
        OracleProblem::P1Expectile { bound, .. } => {
            // The objective is the mean, so the first feasible point in
            // decreasing mean order is optimal.
            points.sort_by(|a, b| b.1.total_cmp(&a.1));
            let mut found = None;
            for (w, _) in points {
                scored += 1;
                let r = problem.measure(&portfolio_return_distribution(s, &w)?)?;
                if r.finite().is_some_and(|v| v <= bound) {
                    found = Some((w, r));
                    break;
                }
            }
            found
        }
        OracleProblem::P1Omega { threshold, .. } => {
            points.sort_by(|a, b| b.1.total_cmp(&a.1));
            let mut found = None;
            for (w, _) in points {
                scored += 1;
                let r = problem.measure(&portfolio_return_distribution(s, &w)?)?;
                if r.at_least(threshold) {
                    found = Some((w, r));
                    break;
                }
            }
            found
        }
        _ => {
            let floor = problem.floor();
            let maximize = matches!(problem, OracleProblem::P2Omega { .. });
            let mut found: Option<(Vec<f64>, ExtendedReal)> = None;
            for (w, m) in points {
                if m < floor {
                    continue;
                }
                scored += 1;
                let r = problem.measure(&portfolio_return_distribution(s, &w)?)?;
                if r == ExtendedReal::Undefined {
                    continue;
                }
                let better = match &found {
                    None => true,
                    Some((_, b)) => {
                        let ord = compare(r, *b);
                        if maximize {
                            ord == Ordering::Greater
                        } else {
                            ord == Ordering::Less
                        }
                    }
                };
                if better {
                    found = Some((w, r));
                }
            }
            found
        }
    };

    let (w, r) = best.ok_or_else(|| Error::Infeasible("no lattice point is feasible".into()))?;
    let weights = Portfolio::from_solver(w)?;
    let mean_value = dot(&mu, &weights);
    let risk_value = r.to_f64().unwrap_or(f64::NAN);
    let objective = match problem {
        OracleProblem::P1Expectile { .. } | OracleProblem::P1Omega { .. } => mean_value,
        _ => risk_value,
    };
    Ok(SolveReport {
        weights,
        objective,
        risk_value,
        mean_value,
        iterations: scored,
        constraint_violation: 0.0,
        converged: true,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn compare(a: ExtendedReal, b: ExtendedReal) -> Ordering {
    let key = |v: ExtendedReal| v.to_f64().unwrap_or(f64::NAN);
    key(a).total_cmp(&key(b))
}
