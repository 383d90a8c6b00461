//! Projected subgradient solvers for the expectile problems on the simplex.
//!
//! Both solvers alternate between two kinds of step. When the iterate
//! violates the constraint by more than the feasibility band, it steps along
//! the constraint's (sub)gradient by the Polyak length `violation/‖g‖`, which
//! is exact for the linear mean constraint. Otherwise it steps along the
//! objective's descent direction with the diminishing length
//! `a/(k+1)^{0.75}`. Directions are centred (so the budget is preserved
//! before projection) and normalized. The best feasible iterate is reported.

pub mod oracle;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::{check_convex_level, neg_expectile, subgradient};
use crate::scenarios::{dot, portfolio_return_distribution, Portfolio, ScenarioMatrix};

pub use oracle::{grid_oracle, OracleProblem};

/// Euclidean projection onto `{x ≥ 0, Σx = 1}` by the sort-and-threshold rule.
///
/// # Panics
///
/// If `y` is empty or contains NaN.
pub fn project_simplex(y: &[f64]) -> Portfolio {
    assert!(!y.is_empty(), "cannot project an empty vector");
    assert!(y.iter().all(|v| !v.is_nan()), "cannot project NaN");
    let mut u = y.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    let x: Vec<f64> = y.iter().map(|&v| (v - theta).max(0.0)).collect();
    Portfolio::from_solver(x).expect("thresholded vector lies on the simplex")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Step constant `a` in `a/(k+1)^{0.75}`, in weight units.
    pub step: f64,
    /// Stop once the best objective improved by less than `stall_tol`
    /// (relative to `1 + |best|`) over `stall_window` iterations.
    pub stall_window: usize,
    pub stall_tol: f64,
    /// Relative feasibility band `ε·(1 + |bound|)`.
    pub feas_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            step: 0.5,
            stall_window: 200,
            stall_tol: 1e-9,
            feas_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub weights: Portfolio,
    /// Risk for P2-type problems, mean for P1-type problems.
    pub objective: f64,
    pub risk_value: f64,
    pub mean_value: f64,
    pub iterations: usize,
    pub constraint_violation: f64,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
}

fn centred_unit(d: &mut [f64]) -> f64 {
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    for v in d.iter_mut() {
        *v -= mean;
    }
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in d.iter_mut() {
            *v /= norm;
        }
    }
    norm
}

fn step_along(x: &[f64], d: &[f64], len: f64) -> Portfolio {
    let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + len * b).collect();
    project_simplex(&y)
}

/// Best-so-far bookkeeping with the stall rule.
struct Tracker {
    history: Vec<f64>,
    best: Option<(f64, Portfolio)>,
    window: usize,
    tol: f64,
}

impl Tracker {
    fn new(opts: &SolveOptions) -> Self {
        Self {
            history: Vec::new(),
            best: None,
            window: opts.stall_window.max(1),
            tol: opts.stall_tol,
        }
    }

    /// Records a feasible candidate (smaller is better).
    fn offer(&mut self, value: f64, x: &Portfolio) {
        if self.best.as_ref().is_none_or(|(b, _)| value < *b) {
            self.best = Some((value, x.clone()));
        }
    }

    /// Best point so far; the stall window starts over.
    fn restart_point(&mut self) -> Option<Portfolio> {
        self.history.clear();
        self.best.as_ref().map(|(_, x)| x.clone())
    }

    /// Appends the current best; true once it has stalled.
    fn stalled(&mut self) -> bool {
        let Some((best, _)) = self.best else {
            self.history.push(f64::INFINITY);
            return false;
        };
        self.history.push(best);
        let k = self.history.len();
        k > self.window && {
            let old = self.history[k - 1 - self.window];
            old.is_finite() && old - best < self.tol * (1.0 + best.abs())
        }
    }
}

/// Descent steps `a/(k+1)^{0.75}`. Each stall restarts the count from the
/// best point with `a` cut by 4, until `a` falls below `MIN_STEP_RATIO`
/// of its initial value.
struct Schedule {
    a: f64,
    floor: f64,
    k: usize,
}

const STEP_CUT: f64 = 4.0;
const MIN_STEP_RATIO: f64 = 1e-4;

impl Schedule {
    fn new(opts: &SolveOptions) -> Self {
        Self {
            a: opts.step,
            floor: opts.step * MIN_STEP_RATIO,
            k: 0,
        }
    }

    fn next(&mut self) -> f64 {
        let len = self.a / ((self.k + 1) as f64).powf(0.75);
        self.k += 1;
        len
    }

    /// False once the steps are already at their smallest.
    fn restart(&mut self) -> bool {
        self.a /= STEP_CUT;
        self.k = 0;
        self.a >= self.floor
    }
}

fn max_mean(s: &ScenarioMatrix) -> f64 {
    s.mean_returns().into_iter().fold(f64::NEG_INFINITY, f64::max)
}

#[allow(clippy::too_many_arguments)]
fn report(
    s: &ScenarioMatrix,
    q: f64,
    x: Portfolio,
    objective_is_mean: bool,
    violation: f64,
    iterations: usize,
    converged: bool,
    start: Instant,
) -> Result<SolveReport> {
    let risk_value = neg_expectile(&portfolio_return_distribution(s, &x)?, q)?;
    let mean_value = dot(&s.mean_returns(), &x);
    Ok(SolveReport {
        objective: if objective_is_mean { mean_value } else { risk_value },
        weights: x,
        risk_value,
        mean_value,
        iterations,
        constraint_violation: violation,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// `min ρ_q(x)` over the simplex subject to `E[ξᵀx] ≥ r` (no floor when
/// `r` is `None`).
pub fn solve_p2_subgradient(s: &ScenarioMatrix, q: f64, r: Option<f64>, opts: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    check_convex_level(q)?;
    let n = s.n_assets();
    let best_mean = max_mean(s);
    if let Some(r) = r {
        if best_mean < r {
            return Err(Error::Infeasible(format!(
                "return floor {r} exceeds the best mean {best_mean}"
            )));
        }
    }
    if n == 1 {
        return report(s, q, Portfolio::uniform(1), false, 0.0, 0, true, start);
    }
    let floor = r.unwrap_or(f64::NEG_INFINITY);
    let eps = opts.feas_tol * (1.0 + r.map_or(0.0, f64::abs));
    let mu = s.mean_returns();
    let mut mu_dir = mu.clone();
    let mu_norm = centred_unit(&mut mu_dir);

    let mut x = Portfolio::uniform(n);
    let mut tracker = Tracker::new(opts);
    let mut sched = Schedule::new(opts);
    let mut converged = false;
    let mut k = 0;
    while k < opts.max_iters {
        let mean = dot(&mu, &x);
        let sg = subgradient(s, &x, q, q)?;
        if mean >= floor - eps {
            tracker.offer(sg.value, &x);
            let mut d: Vec<f64> = sg.vector.iter().map(|g| -g).collect();
            if centred_unit(&mut d) == 0.0 {
                converged = true;
                break;
            }
            x = step_along(&x, &d, sched.next());
        } else if mu_norm > 0.0 {
            x = step_along(&x, &mu_dir, (floor - mean) / mu_norm);
        }
        k += 1;
        if tracker.stalled() {
            match sched.restart() {
                true => x = tracker.restart_point().unwrap_or(x),
                false => {
                    converged = true;
                    break;
                }
            }
        }
    }
    let (_, best) = tracker
        .best
        .ok_or_else(|| Error::Infeasible("no iterate met the return floor".into()))?;
    let violation = (floor - dot(&mu, &best)).max(0.0);
    report(s, q, best, false, violation, k, converged, start)
}

/// `max E[ξᵀx]` over the simplex subject to `ρ_q(x) ≤ b`.
///
/// Infeasibility is decided up front by a short unconstrained P2 solve: with
/// its final point `x̂` and subgradient `g`, `ρ_q(x̂) + min_i g_i − g·x̂` is a
/// lower bound on `ρ_q` over the simplex.
pub fn solve_p1_subgradient(s: &ScenarioMatrix, q: f64, b: f64, opts: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    check_convex_level(q)?;
    if !b.is_finite() {
        return Err(Error::param("b", b, "finite reals"));
    }
    let n = s.n_assets();
    let eps = opts.feas_tol * (1.0 + b.abs());
    if n == 1 {
        let x = Portfolio::uniform(1);
        let rho = neg_expectile(&portfolio_return_distribution(s, &x)?, q)?;
        if rho > b + eps {
            return Err(Error::Infeasible(format!(
                "risk cap {b} is below the minimal risk {rho}"
            )));
        }
        return report(s, q, x, true, 0.0, 0, true, start);
    }

    let probe_opts = SolveOptions {
        max_iters: opts.max_iters.min(500),
        ..*opts
    };
    let probe = solve_p2_subgradient(s, q, None, &probe_opts)?;
    if probe.risk_value > b + eps {
        let sg = subgradient(s, &probe.weights, q, q)?;
        let gmin = sg.vector.iter().copied().fold(f64::INFINITY, f64::min);
        let lower = sg.value + gmin - dot(&sg.vector, &probe.weights);
        if lower > b + eps {
            return Err(Error::Infeasible(format!(
                "risk cap {b} is below the minimal risk (at least {lower})"
            )));
        }
    }

    let mu = s.mean_returns();
    let mut mu_dir = mu.clone();
    centred_unit(&mut mu_dir);
    let mut x = Portfolio::uniform(n);
    let mut tracker = Tracker::new(opts);
    let mut sched = Schedule::new(opts);
    let mut converged = false;
    let mut k = 0;
    while k < opts.max_iters {
        let sg = subgradient(s, &x, q, q)?;
        if sg.value <= b + eps {
            tracker.offer(-dot(&mu, &x), &x);
            x = step_along(&x, &mu_dir, sched.next());
        } else {
            let mut d: Vec<f64> = sg.vector.iter().map(|g| -g).collect();
            let norm = centred_unit(&mut d);
            if norm == 0.0 {
                break;
            }
            x = step_along(&x, &d, (sg.value - b) / norm);
        }
        k += 1;
        if tracker.stalled() {
            match sched.restart() {
                true => x = tracker.restart_point().unwrap_or(x),
                false => {
                    converged = true;
                    break;
                }
            }
        }
    }
    let best = match tracker.best {
        Some((_, x)) => x,
        None if probe.risk_value <= b + eps => probe.weights,
        None => return Err(Error::Infeasible("no iterate met the risk cap".into())),
    };
    let rho = neg_expectile(&portfolio_return_distribution(s, &best)?, q)?;
    report(s, q, best, true, (rho - b).max(0.0), k, converged, start)
}
