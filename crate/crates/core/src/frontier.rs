//! Efficient-frontier sweeps, expectile/omega equivalence checks, and the
//! cross-evaluation of expectile, CVaR and VaR optimizers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpStatus};
use crate::risk::{check_confidence, check_convex_level, cvar, neg_expectile, omega, var, ExtendedReal, OmegaValue};
use crate::scenarios::{dot, portfolio_return_distribution, Portfolio, ScenarioMatrix};
use crate::subgrad::{self, grid_oracle, OracleProblem, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Maximize the mean subject to `ρ_q ≤ b`; the sweep parameter is `b`.
    P1Expectile,
    /// Minimize `ρ_q` subject to mean `≥ r`; the parameter is `r`.
    P2Expectile,
    /// Minimize CVaR subject to mean `≥ r`; the parameter is `r`.
    P2Cvar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Lp,
    Subgrad,
    Oracle,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Lp => "lp",
            Backend::Subgrad => "subgrad",
            Backend::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub q: f64,
    pub alpha: f64,
    /// Benchmark for the omega column; omitted when `None`.
    pub benchmark: Option<f64>,
    pub subgrad: SolveOptions,
    /// Lattice spacing for the oracle backend.
    pub grid_step: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            q: 0.1,
            alpha: 0.95,
            benchmark: None,
            subgrad: SolveOptions::default(),
            grid_step: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Optimal,
    Infeasible,
    Failed,
}

impl std::fmt::Display for PointStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PointStatus::Optimal => "optimal",
            PointStatus::Infeasible => "infeasible",
            PointStatus::Failed => "failed",
        })
    }
}

fn status_of(e: &Error) -> PointStatus {
    match e {
        Error::Infeasible(_) | Error::BenchmarkUnreachable { .. } => PointStatus::Infeasible,
        _ => PointStatus::Failed,
    }
}

/// Risk profile of one portfolio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub mean: f64,
    pub neg_expectile: f64,
    pub cvar: f64,
    pub var: f64,
    pub omega: Option<OmegaValue>,
}

pub fn measures(s: &ScenarioMatrix, x: &[f64], q: f64, alpha: f64, benchmark: Option<f64>) -> Result<Measures> {
    let d = portfolio_return_distribution(s, x)?;
    let loss = d.negated();
    Ok(Measures {
        mean: d.mean(),
        neg_expectile: neg_expectile(&d, q)?,
        cvar: cvar(&loss, alpha)?,
        var: var(&loss, alpha)?,
        omega: benchmark.map(|b| omega(&d, b)).transpose()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    /// `b` for P1, `r` for P2.
    pub parameter: f64,
    pub status: PointStatus,
    pub message: Option<String>,
    pub weights: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub measures: Option<Measures>,
    pub backend: Backend,
    pub converged: bool,
    pub iterations: usize,
}

struct PointSolution {
    weights: Portfolio,
    objective: f64,
    iterations: usize,
    converged: bool,
}

fn from_lp(sol: lp::PortfolioLpSolution) -> Result<PointSolution> {
    match (sol.status, sol.weights) {
        (LpStatus::Optimal, Some(w)) => Ok(PointSolution {
            weights: w,
            objective: sol.objective,
            iterations: sol.lp.iterations,
            converged: true,
        }),
        (LpStatus::Infeasible, _) => Err(Error::Infeasible("LP is infeasible".into())),
        (status, _) => Err(Error::Solver(format!("LP ended with status {status:?}"))),
    }
}

fn from_report(rep: subgrad::SolveReport) -> PointSolution {
    PointSolution {
        weights: rep.weights,
        objective: rep.objective,
        iterations: rep.iterations,
        converged: rep.converged,
    }
}

fn solve_point(
    s: &ScenarioMatrix,
    kind: ProblemKind,
    param: f64,
    backend: Backend,
    st: &Settings,
) -> Result<PointSolution> {
    match (kind, backend) {
        (ProblemKind::P1Expectile, Backend::Lp) => from_lp(lp::solve_p1_expectile(s, st.q, param)?),
        (ProblemKind::P2Expectile, Backend::Lp) => from_lp(lp::solve_p2_expectile(s, st.q, Some(param))?),
        (ProblemKind::P2Cvar, Backend::Lp) => from_lp(lp::solve_cvar(s, st.alpha, Some(param))?),
        (ProblemKind::P1Expectile, Backend::Subgrad) => {
            Ok(from_report(subgrad::solve_p1_subgradient(s, st.q, param, &st.subgrad)?))
        }
        (ProblemKind::P2Expectile, Backend::Subgrad) => Ok(from_report(subgrad::solve_p2_subgradient(
            s,
            st.q,
            Some(param),
            &st.subgrad,
        )?)),
        (ProblemKind::P2Cvar, Backend::Subgrad) => Err(Error::Unsupported(
            "the subgradient backend handles expectile problems only".into(),
        )),
        (kind, Backend::Oracle) => {
            let problem = match kind {
                ProblemKind::P1Expectile => OracleProblem::P1Expectile { q: st.q, bound: param },
                ProblemKind::P2Expectile => OracleProblem::P2Expectile {
                    q: st.q,
                    floor: Some(param),
                },
                ProblemKind::P2Cvar => OracleProblem::P2Cvar {
                    alpha: st.alpha,
                    floor: Some(param),
                },
            };
            Ok(from_report(grid_oracle(s, &problem, st.grid_step)?))
        }
    }
}

/// Runs `f` on a pool of `jobs` workers, or on the global pool when `None`.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::Unsupported(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Validation("parameter grid is empty".into()));
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Validation("parameter grid must be finite and sorted".into()));
    }
    Ok(())
}

/// Solves one problem per grid value. Points that fail are kept with their
/// status and message; output order follows the grid.
pub fn sweep(
    s: &ScenarioMatrix,
    kind: ProblemKind,
    grid: &[f64],
    backend: Backend,
    settings: &Settings,
    jobs: Option<usize>,
) -> Result<Vec<FrontierPoint>> {
    check_grid(grid)?;
    check_convex_level(settings.q)?;
    check_confidence(settings.alpha)?;
    if kind == ProblemKind::P2Cvar && backend == Backend::Subgrad {
        return Err(Error::Unsupported(
            "the subgradient backend handles expectile problems only".into(),
        ));
    }
    let run = |&param: &f64| -> FrontierPoint {
        let solved = solve_point(s, kind, param, backend, settings).and_then(|sol| {
            let m = measures(s, &sol.weights, settings.q, settings.alpha, settings.benchmark)?;
            Ok((sol, m))
        });
        match solved {
            Ok((sol, m)) => FrontierPoint {
                parameter: param,
                status: PointStatus::Optimal,
                message: None,
                weights: Some(sol.weights.into_inner()),
                objective: Some(sol.objective),
                measures: Some(m),
                backend,
                converged: sol.converged,
                iterations: sol.iterations,
            },
            Err(e) => FrontierPoint {
                parameter: param,
                status: status_of(&e),
                message: Some(e.to_string()),
                weights: None,
                objective: None,
                measures: None,
                backend,
                converged: false,
                iterations: 0,
            },
        }
    };
    with_jobs(jobs, || grid.par_iter().map(run).collect())
}

fn is_constant(xs: &[f64]) -> bool {
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    hi - lo <= 1e-14 * (1.0 + hi.abs().max(lo.abs()))
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

/// Outcome of solving the expectile P2 problem and the omega P2 problem at
/// the matched benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P2EquivalenceReport {
    pub z: f64,
    pub q: f64,
    pub floor: Option<f64>,
    /// Expectile-optimal portfolio.
    pub x0: Vec<f64>,
    pub rho0: f64,
    /// `B = −ρ_q(x0)`.
    pub benchmark: f64,
    /// Omega-optimal portfolio at `B`; absent in the degenerate case.
    pub x1: Option<Vec<f64>>,
    pub omega_x0: OmegaValue,
    pub omega_x1: Option<OmegaValue>,
    pub max_weight_gap: Option<f64>,
    /// `|Ω_B(x1) − Ω_B(x0)| / |Ω_B(x1)|`.
    pub objective_gap: Option<f64>,
    /// `ξᵀx0` is constant, so the matched omega problem is not defined.
    pub degenerate: bool,
}

fn threshold_level(z: f64) -> Result<f64> {
    if !(z > 1.0 && z.is_finite()) {
        return Err(Error::param("z", z, "(1, inf)"));
    }
    Ok(1.0 / (1.0 + z))
}

/// Solves `min ρ_q` with `q = 1/(1+z)` for `x0`, then `max Ω_B` at
/// `B = −ρ_q(x0)` for `x1`, under the same optional return floor.
pub fn check_p2_equivalence(s: &ScenarioMatrix, z: f64, r: Option<f64>) -> Result<P2EquivalenceReport> {
    let q = threshold_level(z)?;
    let sol = lp::solve_p2_expectile(s, q, r)?;
    let x0 = from_lp(sol)?.weights;
    let d0 = portfolio_return_distribution(s, &x0)?;
    let rho0 = neg_expectile(&d0, q)?;
    let benchmark = -rho0;
    let omega_x0 = omega(&d0, benchmark)?;
    let mut report = P2EquivalenceReport {
        z,
        q,
        floor: r,
        x0: x0.weights().to_vec(),
        rho0,
        benchmark,
        x1: None,
        omega_x0,
        omega_x1: None,
        max_weight_gap: None,
        objective_gap: None,
        degenerate: false,
    };
    if is_constant(d0.outcomes()) {
        report.degenerate = true;
        return Ok(report);
    }
    if s.n_assets() == 1 {
        report.x1 = Some(report.x0.clone());
        report.omega_x1 = Some(omega_x0);
        report.max_weight_gap = Some(0.0);
        report.objective_gap = Some(0.0);
        return Ok(report);
    }
    let om = lp::solve_omega(s, benchmark, r).map_err(|e| match e {
        Error::BenchmarkUnreachable { benchmark, best_mean } => Error::Solver(format!(
            "omega benchmark {benchmark} matched to the expectile optimum is unreachable (best mean {best_mean})"
        )),
        e => e,
    })?;
    let x1 = om
        .weights
        .ok_or_else(|| Error::Solver(format!("omega LP ended with status {:?}", om.lp.status)))?;
    let omega_x1 = phi_of(s, &x1, benchmark)?;
    report.max_weight_gap = Some(max_gap(&report.x0, &x1));
    report.objective_gap = Some(match (omega_x0, omega_x1) {
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => (b - a).abs() / b.abs(),
        (ExtendedReal::Infinite, ExtendedReal::Infinite) => 0.0,
        _ => f64::INFINITY,
    });
    report.x1 = Some(x1.into_inner());
    report.omega_x1 = Some(omega_x1);
    Ok(report)
}

fn phi_of(s: &ScenarioMatrix, x: &[f64], b: f64) -> Result<OmegaValue> {
    omega(&portfolio_return_distribution(s, x)?, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P1EquivalenceReport {
    pub z: f64,
    pub q: f64,
    pub benchmark: f64,
    /// Some portfolio reaches `Ω_B ≥ z`; without it no claim is made.
    pub precondition_met: bool,
    pub best_omega: Option<OmegaValue>,
    /// Solution of `max mean s.t. ρ_q ≤ −B`.
    pub x_expectile: Option<Vec<f64>>,
    pub mean_expectile: Option<f64>,
    pub omega_expectile: Option<OmegaValue>,
    /// `Ω_B(x_expectile) ≥ z − 1e-6`.
    pub omega_constraint_ok: Option<bool>,
    /// Lattice optimum of `max mean s.t. Ω_B ≥ z`, for `n ≤ 4`.
    pub x_oracle: Option<Vec<f64>>,
    pub mean_oracle: Option<f64>,
    /// `mean_expectile − mean_oracle`.
    pub objective_gap: Option<f64>,
}

/// Compares `max mean s.t. ρ_q ≤ −B` (LP, `q = 1/(1+z)`) with
/// `max mean s.t. Ω_B ≥ z` (lattice oracle at `grid_step` when `n ≤ 4`).
pub fn check_p1_equivalence(s: &ScenarioMatrix, z: f64, benchmark: f64, grid_step: f64) -> Result<P1EquivalenceReport> {
    let q = threshold_level(z)?;
    let mut report = P1EquivalenceReport {
        z,
        q,
        benchmark,
        precondition_met: false,
        best_omega: None,
        x_expectile: None,
        mean_expectile: None,
        omega_expectile: None,
        omega_constraint_ok: None,
        x_oracle: None,
        mean_oracle: None,
        objective_gap: None,
    };
    match lp::solve_omega(s, benchmark, None) {
        Ok(om) => {
            let best = match &om.weights {
                Some(w) => phi_of(s, w, benchmark)?,
                None => om.omega,
            };
            report.best_omega = Some(best);
            report.precondition_met = best.at_least(z - 1e-9 * z);
        }
        Err(Error::BenchmarkUnreachable { .. }) => {}
        Err(e) => return Err(e),
    }
    if !report.precondition_met {
        return Ok(report);
    }
    let sol = from_lp(lp::solve_p1_expectile(s, q, -benchmark)?)?;
    let w = sol.weights;
    let om = phi_of(s, &w, benchmark)?;
    report.mean_expectile = Some(dot(&s.mean_returns(), &w));
    report.omega_expectile = Some(om);
    report.omega_constraint_ok = Some(om.at_least(z - 1e-6));
    report.x_expectile = Some(w.into_inner());
    if s.n_assets() <= 4 {
        let rep = grid_oracle(
            s,
            &OracleProblem::P1Omega {
                benchmark,
                threshold: z,
            },
            grid_step,
        )?;
        report.mean_oracle = Some(rep.mean_value);
        report.objective_gap = report.mean_expectile.map(|m| m - rep.mean_value);
        report.x_oracle = Some(rep.weights.into_inner());
    }
    Ok(report)
}

/// Names of the compared measures, in matrix order.
pub const MEASURES: [&str; 3] = ["neg_expectile", "cvar", "var"];

/// Cross-evaluation at one return floor.
///
/// `values[o][m]` is measure `m` of optimizer `o`'s portfolio, with
/// optimizers in [`MEASURES`] order (the VaR optimizer is present only for
/// `n ≤ 4`, where it comes from the lattice oracle). `rel_diff[m][o]` is
/// `(values[o][m] − values[m][m]) / |values[m][m]|`; for VaR without its own
/// optimizer the reference is the smallest VaR among the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub floor: f64,
    pub status: PointStatus,
    pub message: Option<String>,
    pub weights: Vec<Option<Vec<f64>>>,
    pub values: Vec<Option<[f64; 3]>>,
    pub rel_diff: Vec<Vec<Option<f64>>>,
}

impl ComparisonRow {
    /// Symmetric cross gap `max(|rel_diff[a][b]|, |rel_diff[b][a]|)`.
    pub fn cross_gap(&self, a: usize, b: usize) -> Option<f64> {
        let ab = self.rel_diff.get(a)?.get(b).copied().flatten()?;
        let ba = self.rel_diff.get(b)?.get(a).copied().flatten()?;
        Some(ab.abs().max(ba.abs()))
    }
}

fn relative(other: f64, own: f64) -> f64 {
    if other == own {
        0.0
    } else {
        (other - own) / own.abs()
    }
}

/// For each return floor, optimizes the negative expectile and CVaR (and
/// VaR on small instances) and evaluates each optimizer under all three
/// measures. `backend` selects how the expectile and CVaR optimizers are
/// found; the subgradient backend covers the expectile problem only, with
/// CVaR always by LP in that case.
pub fn compare_risk_measures(
    s: &ScenarioMatrix,
    q: f64,
    alpha: f64,
    r_grid: &[f64],
    backend: Backend,
    settings: &Settings,
    jobs: Option<usize>,
) -> Result<Vec<ComparisonRow>> {
    check_grid(r_grid)?;
    check_convex_level(q)?;
    check_confidence(alpha)?;
    let st = Settings { q, alpha, ..*settings };
    let with_var = s.n_assets() <= 4;
    let run = |&r: &f64| -> ComparisonRow {
        let mut failure: Option<Error> = None;
        let mut weights: Vec<Option<Vec<f64>>> = Vec::new();
        let mut values: Vec<Option<[f64; 3]>> = Vec::new();
        let cvar_backend = if backend == Backend::Subgrad {
            Backend::Lp
        } else {
            backend
        };
        let mut optimizers = vec![
            solve_point(s, ProblemKind::P2Expectile, r, backend, &st),
            solve_point(s, ProblemKind::P2Cvar, r, cvar_backend, &st),
        ];
        if with_var {
            optimizers
                .push(grid_oracle(s, &OracleProblem::P2Var { alpha, floor: Some(r) }, st.grid_step).map(from_report));
        }
        for sol in optimizers {
            let evaluated = sol.and_then(|sol| {
                let m = measures(s, &sol.weights, q, alpha, None)?;
                Ok((sol.weights.into_inner(), [m.neg_expectile, m.cvar, m.var]))
            });
            match evaluated {
                Ok((w, v)) => {
                    weights.push(Some(w));
                    values.push(Some(v));
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    weights.push(None);
                    values.push(None);
                }
            }
        }
        let mut rel_diff = vec![vec![None; values.len()]; MEASURES.len()];
        for (m, row) in rel_diff.iter_mut().enumerate() {
            let own = match values.get(m) {
                Some(Some(v)) => Some(v[m]),
                Some(None) => None,
                None => values.iter().flatten().map(|v| v[m]).min_by(f64::total_cmp),
            };
            let Some(own) = own else { continue };
            for (o, cell) in row.iter_mut().enumerate() {
                *cell = values[o].map(|v| relative(v[m], own));
            }
        }
        ComparisonRow {
            floor: r,
            status: failure.as_ref().map_or(PointStatus::Optimal, status_of),
            message: failure.map(|e| e.to_string()),
            weights,
            values,
            rel_diff,
        }
    };
    with_jobs(jobs, || r_grid.par_iter().map(run).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<f64>>) -> ScenarioMatrix {
        let n = rows[0].len();
        ScenarioMatrix::new(rows, None, (0..n).map(|i| format!("a{i}")).collect()).unwrap()
    }

    #[test]
    fn p1_toy_frontier() {
        let s = matrix(vec![vec![0.01, 0.06], vec![0.01, -0.03]]);
        let st = Settings {
            q: 0.25,
            ..Settings::default()
        };
        let pts = sweep(
            &s,
            ProblemKind::P1Expectile,
            &[-0.00125, 0.0075],
            Backend::Lp,
            &st,
            Some(1),
        )
        .unwrap();
        let means: Vec<f64> = pts.iter().map(|p| p.measures.unwrap().mean).collect();
        assert!((means[0] - 0.0125).abs() < 1e-12 && (means[1] - 0.015).abs() < 1e-12);
    }

    #[test]
    fn single_instrument_sweep_and_equivalence() {
        let s = matrix(vec![vec![0.02], vec![-0.01], vec![0.005]]);
        let pts = sweep(
            &s,
            ProblemKind::P2Expectile,
            &[-0.1, 0.0, 0.001],
            Backend::Lp,
            &Settings::default(),
            None,
        )
        .unwrap();
        assert!(pts.iter().all(|p| p.weights.as_deref() == Some(&[1.0][..])));
        let rep = check_p2_equivalence(&s, 3.0, None).unwrap();
        assert_eq!(rep.max_weight_gap, Some(0.0));
    }

    #[test]
    fn infeasible_points_are_kept() {
        let s = matrix(vec![vec![0.01, 0.05], vec![0.01, -0.03]]);
        let pts = sweep(
            &s,
            ProblemKind::P2Expectile,
            &[0.0, 0.5],
            Backend::Lp,
            &Settings::default(),
            None,
        )
        .unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].status, PointStatus::Infeasible);
        assert!(sweep(
            &s,
            ProblemKind::P2Expectile,
            &[0.5, 0.0],
            Backend::Lp,
            &Settings::default(),
            None
        )
        .is_err());
    }

    #[test]
    fn constant_return_is_degenerate() {
        let s = matrix(vec![vec![0.01], vec![0.01]]);
        assert!(check_p2_equivalence(&s, 9.0, None).unwrap().degenerate);
    }

    #[test]
    fn p1_precondition_flag() {
        let s = matrix(vec![vec![0.02, 0.01], vec![-0.01, 0.0]]);
        let rep = check_p1_equivalence(&s, 2.0, 0.5, 0.01).unwrap();
        assert!(!rep.precondition_met && rep.x_expectile.is_none());
    }

    #[test]
    fn comparison_self_columns_vanish() {
        let s = matrix(vec![
            vec![0.02, -0.01],
            vec![-0.03, 0.02],
            vec![0.01, 0.0],
            vec![0.0, -0.02],
            vec![0.04, 0.03],
        ]);
        let rows = compare_risk_measures(&s, 0.2, 0.6, &[0.0, 0.005], Backend::Lp, &Settings::default(), None).unwrap();
        for row in rows {
            for m in 0..3 {
                assert_eq!(row.rel_diff[m][m], Some(0.0));
            }
            let (ve, vc) = (row.values[0].unwrap(), row.values[1].unwrap());
            assert!(ve[1] >= vc[1] - 1e-9);
        }
    }
}
