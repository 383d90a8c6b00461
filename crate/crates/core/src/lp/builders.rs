//! Exact LP reformulations of the portfolio problems.
//!
//! Column layout is fixed so callers can read weights back by position: the
//! first `n` columns are always the instrument weights (or their homogenized
//! counterparts in the omega LP). Names stay within eight characters so the
//! MPS export is valid fixed format.

use super::problem::{LpProblem, LpSolution, LpStatus, RowSense, Sense};
use super::simplex::{default_iteration_limit, simplex_solve};
use crate::error::{Error, Result};
use crate::risk::{check_confidence, check_convex_level, cvar, neg_expectile, omega, var, ExtendedReal, OmegaValue};
use crate::scenarios::{Distribution, Portfolio, ScenarioMatrix};

/// Homogenizing scales at or below this are treated as a failed transform.
pub const MIN_HOMOGENIZING_SCALE: f64 = 1e-12;

fn add_weights(p: &mut LpProblem, n: usize, cost: &[f64]) {
    for (i, &c) in cost.iter().enumerate().take(n) {
        p.add_variable(format!("X{i}"), 0.0, f64::INFINITY, c);
    }
}

fn add_budget(p: &mut LpProblem, n: usize) {
    p.add_constraint("BUDGET", (0..n).map(|i| (i, 1.0)).collect(), RowSense::Eq, 1.0);
}

fn add_mean_floor(p: &mut LpProblem, mu: &[f64], r: f64) {
    let i = p.add_constraint(
        "MEAN",
        mu.iter().enumerate().map(|(i, &m)| (i, m)).collect(),
        RowSense::Ge,
        r,
    );
    let logical = p.n_vars() + i;
    if let Some(hint) = p.basis_hint.as_mut() {
        hint.push(logical);
    }
}

/// Shared body of the two expectile LPs: split rows `u_j − v_j − ξ^jᵀx − c·m = rhs`
/// and the acceptance row `q·Σp_j u_j − (1−q)·Σp_j v_j ≥ 0`.
fn add_expectile_rows(p: &mut LpProblem, s: &ScenarioMatrix, q: f64, m_col: Option<usize>, rhs: f64) -> SplitLayout {
    let n = s.n_assets();
    let j_count = s.n_scenarios();
    let first_row = p.n_rows();
    let u0 = p.n_vars();
    for j in 0..j_count {
        p.add_variable(format!("U{j}"), 0.0, f64::INFINITY, 0.0);
    }
    let v0 = p.n_vars();
    for j in 0..j_count {
        p.add_variable(format!("V{j}"), 0.0, f64::INFINITY, 0.0);
    }
    for (j, row) in s.rows().enumerate() {
        let mut coeffs = Vec::with_capacity(n + 3);
        coeffs.extend(row.iter().enumerate().filter(|(_, &a)| a != 0.0).map(|(i, &a)| (i, -a)));
        if let Some(m) = m_col {
            coeffs.push((m, -1.0));
        }
        coeffs.push((u0 + j, 1.0));
        coeffs.push((v0 + j, -1.0));
        p.add_constraint(format!("S{j}"), coeffs, RowSense::Eq, rhs);
    }
    let probs = s.probs();
    let mut risk = Vec::with_capacity(2 * j_count);
    risk.extend((0..j_count).map(|j| (u0 + j, q * probs[j])));
    risk.extend((0..j_count).map(|j| (v0 + j, -(1.0 - q) * probs[j])));
    p.add_constraint("RISK", risk, RowSense::Ge, 0.0);
    SplitLayout { first_row, u0, v0 }
}

struct SplitLayout {
    first_row: usize,
    u0: usize,
    v0: usize,
}

/// Index minimizing `score` among admissible vertices, or among all
/// vertices when none is admissible.
fn best_vertex(n: usize, admissible: impl Fn(usize) -> bool, score: impl Fn(usize) -> f64) -> usize {
    let pick = |ok: &dyn Fn(usize) -> bool| {
        (0..n)
            .filter(|&i| ok(i))
            .min_by(|&a, &b| score(a).total_cmp(&score(b)).then(a.cmp(&b)))
    };
    pick(&admissible).or_else(|| pick(&|_| true)).unwrap_or(0)
}

fn vertex_distribution(s: &ScenarioMatrix, i: usize) -> Distribution {
    Distribution::new(s.column(i), s.probs().to_vec()).expect("scenario matrix columns are valid distributions")
}

/// Starting basis for the split rows at vertex `k`: `x_k` basic on the
/// budget row and, per scenario, the split side carrying `ξ^j_k + shift`.
/// `extra` fills the remaining row with `M` (P2) or the risk logical (P1).
fn split_crash(
    p: &mut LpProblem,
    s: &ScenarioMatrix,
    layout: &SplitLayout,
    k: usize,
    shift: f64,
    extra: Option<usize>,
) {
    let n_vars = p.n_vars();
    let mut hint: Vec<usize> = (0..p.n_rows()).map(|i| n_vars + i).collect();
    hint[0] = k;
    for (j, row) in s.rows().enumerate() {
        hint[layout.first_row + j] = if row[k] + shift >= 0.0 {
            layout.u0 + j
        } else {
            layout.v0 + j
        };
    }
    if let Some(col) = extra {
        hint[layout.first_row + s.n_scenarios()] = col;
    }
    p.basis_hint = Some(hint);
}

/// `min ρ_q(x)` over the simplex, optionally subject to `E[ξᵀx] ≥ r`.
///
/// Columns: `X0..X{n-1}`, free `M`, then `U{j}`, `V{j}`. With `X = ξᵀx` and
/// `u − v = X + m`, the acceptance row says `X + m` is acceptable, i.e.
/// `m ≥ R_q(X)`, so minimizing `m` gives the risk. Inflating both `u_j` and
/// `v_j` by `δ` changes the acceptance row by `(2q−1)·p_j·δ < 0`, which is
/// why the split is tight at the optimum and why `q < 1/2` is required.
pub fn build_p2_expectile_lp(s: &ScenarioMatrix, q: f64, r: Option<f64>) -> Result<LpProblem> {
    check_convex_level(q)?;
    let n = s.n_assets();
    let mut p = LpProblem::new("P2EXPECT", Sense::Minimize);
    add_weights(&mut p, n, &vec![0.0; n]);
    let m = p.add_variable("M", f64::NEG_INFINITY, f64::INFINITY, 1.0);
    add_budget(&mut p, n);
    let layout = add_expectile_rows(&mut p, s, q, Some(m), 0.0);
    let mu = s.mean_returns();
    let risk: Vec<f64> = (0..n)
        .map(|i| neg_expectile(&vertex_distribution(s, i), q))
        .collect::<Result<_>>()?;
    let k = best_vertex(n, |i| r.is_none_or(|r| mu[i] >= r), |i| risk[i]);
    split_crash(&mut p, s, &layout, k, risk[k], Some(m));
    if let Some(r) = r {
        add_mean_floor(&mut p, &s.mean_returns(), r);
    }
    Ok(p)
}

/// `max E[ξᵀx]` over the simplex subject to `ρ_q(x) ≤ b`.
///
/// Columns: `X0..X{n-1}`, `U{j}`, `V{j}`. The residual
/// `f(c) = q·E[(X−c)_+] − (1−q)·E[(X−c)_−]` is strictly decreasing in `c`
/// with root `e_q(X)`. Hence `ρ_q(x) ≤ b ⇔ e_q(X) ≥ −b ⇔ f(−b) ≥ 0`, which
/// is the acceptance row evaluated on `X + b` (the `≥` direction follows from
/// the monotonicity, not from any choice). Split tightness holds as in the
/// P2 form.
pub fn build_p1_expectile_lp(s: &ScenarioMatrix, q: f64, b: f64) -> Result<LpProblem> {
    check_convex_level(q)?;
    if !b.is_finite() {
        return Err(Error::param("b", b, "finite reals"));
    }
    let n = s.n_assets();
    let mut p = LpProblem::new("P1EXPECT", Sense::Maximize);
    add_weights(&mut p, n, &s.mean_returns());
    add_budget(&mut p, n);
    let layout = add_expectile_rows(&mut p, s, q, None, b);
    let mu = s.mean_returns();
    let risk: Vec<f64> = (0..n)
        .map(|i| neg_expectile(&vertex_distribution(s, i), q))
        .collect::<Result<_>>()?;
    let k = best_vertex(n, |i| risk[i] <= b, |i| if risk[i] <= b { -mu[i] } else { risk[i] });
    split_crash(&mut p, s, &layout, k, b, None);
    Ok(p)
}

/// `max Ω_B(ξᵀx)` over the simplex (optionally with `E[ξᵀx] ≥ r`) as an LP
/// through the homogenizing scale `t = 1/E[(X−B)_−]`.
///
/// Columns: `X0..X{n-1}` (scaled weights `x̃ = t·x`), `T`, `D{j}`. With
/// `d̃_j = t·(B − ξ^jᵀx)_+` the objective `μᵀx̃ − B·t + 1` equals
/// `1 + (E[X] − B)/E[(X−B)_−] = Ω_B`. The reduction is only valid when some
/// portfolio has mean above `B`; on the simplex that is decided by the best
/// instrument mean.
pub fn build_omega_lp(s: &ScenarioMatrix, benchmark: f64, r: Option<f64>) -> Result<LpProblem> {
    if !benchmark.is_finite() {
        return Err(Error::param("benchmark", benchmark, "finite reals"));
    }
    let n = s.n_assets();
    let mu = s.mean_returns();
    let best_mean = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best_mean <= benchmark {
        return Err(Error::BenchmarkUnreachable { benchmark, best_mean });
    }
    let mut p = LpProblem::new("OMEGA", Sense::Maximize);
    p.objective_offset = 1.0;
    add_weights(&mut p, n, &mu);
    let t = p.add_variable("T", 0.0, f64::INFINITY, -benchmark);
    let d0 = p.n_vars();
    for j in 0..s.n_scenarios() {
        p.add_variable(format!("D{j}"), 0.0, f64::INFINITY, 0.0);
    }
    let probs = s.probs();
    p.add_constraint(
        "NORM",
        (0..s.n_scenarios()).map(|j| (d0 + j, probs[j])).collect(),
        RowSense::Eq,
        1.0,
    );
    for (j, row) in s.rows().enumerate() {
        let mut coeffs = Vec::with_capacity(n + 2);
        coeffs.extend(row.iter().enumerate().filter(|(_, &a)| a != 0.0).map(|(i, &a)| (i, a)));
        if benchmark != 0.0 {
            coeffs.push((t, -benchmark));
        }
        coeffs.push((d0 + j, 1.0));
        p.add_constraint(format!("S{j}"), coeffs, RowSense::Ge, 0.0);
    }
    let mut budget: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0)).collect();
    budget.push((t, -1.0));
    let budget_row = p.add_constraint("BUDGET", budget, RowSense::Eq, 0.0);

    // Start at the best admissible vertex: t and x̃_k basic, d̃_j basic on
    // its shortfall scenarios.
    let omega_at = |i: usize| match omega(&vertex_distribution(s, i), benchmark) {
        Ok(ExtendedReal::Finite(w)) => w,
        Ok(ExtendedReal::Infinite) => f64::INFINITY,
        _ => f64::NEG_INFINITY,
    };
    let k = best_vertex(
        n,
        |i| mu[i] > benchmark && r.is_none_or(|r| mu[i] >= r),
        |i| -omega_at(i),
    );
    let n_vars = p.n_vars();
    let mut hint: Vec<usize> = (0..p.n_rows()).map(|i| n_vars + i).collect();
    hint[0] = t;
    hint[budget_row] = k;
    for (j, row) in s.rows().enumerate() {
        if row[k] < benchmark {
            hint[1 + j] = d0 + j;
        }
    }
    p.basis_hint = Some(hint);
    if let Some(r) = r {
        let mut coeffs: Vec<(usize, f64)> = mu.iter().enumerate().map(|(i, &m)| (i, m)).collect();
        if r != 0.0 {
            coeffs.push((t, -r));
        }
        let i = p.add_constraint("MEAN", coeffs, RowSense::Ge, 0.0);
        let logical = p.n_vars() + i;
        if let Some(hint) = p.basis_hint.as_mut() {
            hint.push(logical);
        }
    }
    Ok(p)
}

/// `min CVaR_α(−ξᵀx)` over the simplex, optionally with `E[ξᵀx] ≥ r`.
///
/// Columns: `X0..X{n-1}`, free `Z` (the VaR candidate `ζ`), `Y{j}` (tail
/// excess `y_j ≥ −ξ^jᵀx − ζ`). Objective `ζ + Σp_j y_j / (1−α)`.
pub fn build_cvar_lp(s: &ScenarioMatrix, alpha: f64, r: Option<f64>) -> Result<LpProblem> {
    check_confidence(alpha)?;
    let n = s.n_assets();
    let mut p = LpProblem::new("CVAR", Sense::Minimize);
    add_weights(&mut p, n, &vec![0.0; n]);
    let z = p.add_variable("Z", f64::NEG_INFINITY, f64::INFINITY, 1.0);
    let y0 = p.n_vars();
    for (j, &pj) in s.probs().iter().enumerate() {
        p.add_variable(format!("Y{j}"), 0.0, f64::INFINITY, pj / (1.0 - alpha));
    }
    add_budget(&mut p, n);
    for (j, row) in s.rows().enumerate() {
        let mut coeffs = Vec::with_capacity(n + 2);
        coeffs.extend(row.iter().enumerate().filter(|(_, &a)| a != 0.0).map(|(i, &a)| (i, a)));
        coeffs.push((z, 1.0));
        coeffs.push((y0 + j, 1.0));
        p.add_constraint(format!("S{j}"), coeffs, RowSense::Ge, 0.0);
    }

    // Start at the best admissible vertex with ζ at its VaR: y_j basic on
    // the scenarios beyond it, ζ basic on one scenario at it.
    let mu = s.mean_returns();
    let mut tail = Vec::with_capacity(n);
    for i in 0..n {
        let loss = vertex_distribution(s, i).negated();
        tail.push((cvar(&loss, alpha)?, var(&loss, alpha)?));
    }
    let k = best_vertex(n, |i| r.is_none_or(|r| mu[i] >= r), |i| tail[i].0);
    let level = tail[k].1;
    let n_vars = p.n_vars();
    let mut hint: Vec<usize> = (0..p.n_rows()).map(|i| n_vars + i).collect();
    hint[0] = k;
    let mut pinned = false;
    for (j, row) in s.rows().enumerate() {
        let loss = -row[k];
        if loss > level {
            hint[1 + j] = y0 + j;
        } else if loss == level && !pinned {
            hint[1 + j] = z;
            pinned = true;
        }
    }
    if pinned {
        p.basis_hint = Some(hint);
    }
    if let Some(r) = r {
        add_mean_floor(&mut p, &mu, r);
    }
    Ok(p)
}

/// A portfolio LP solve: the raw solution plus the weights read from the
/// first `n` columns.
#[derive(Debug, Clone)]
pub struct PortfolioLpSolution {
    pub status: LpStatus,
    /// Present when `status` is `Optimal`.
    pub weights: Option<Portfolio>,
    pub objective: f64,
    pub lp: LpSolution,
}

fn solve_weights(p: &LpProblem, n: usize) -> Result<PortfolioLpSolution> {
    let lp = simplex_solve(p, default_iteration_limit(p))?;
    let weights = if lp.status == LpStatus::Optimal {
        Some(Portfolio::from_solver(lp.x[..n].to_vec())?)
    } else {
        None
    };
    Ok(PortfolioLpSolution {
        status: lp.status,
        weights,
        objective: lp.objective,
        lp,
    })
}

/// Solves the P2 expectile LP; `objective` is the minimal `ρ_q`.
pub fn solve_p2_expectile(s: &ScenarioMatrix, q: f64, r: Option<f64>) -> Result<PortfolioLpSolution> {
    solve_weights(&build_p2_expectile_lp(s, q, r)?, s.n_assets())
}

/// Solves the P1 expectile LP; `objective` is the maximal mean.
pub fn solve_p1_expectile(s: &ScenarioMatrix, q: f64, b: f64) -> Result<PortfolioLpSolution> {
    solve_weights(&build_p1_expectile_lp(s, q, b)?, s.n_assets())
}

/// Solves the CVaR LP; `objective` is the minimal CVaR.
pub fn solve_cvar(s: &ScenarioMatrix, alpha: f64, r: Option<f64>) -> Result<PortfolioLpSolution> {
    solve_weights(&build_cvar_lp(s, alpha, r)?, s.n_assets())
}

#[derive(Debug, Clone)]
pub struct OmegaLpSolution {
    pub status: LpStatus,
    /// Recovered `x = x̃/t`, or for an unbounded LP a portfolio with no
    /// shortfall below the benchmark.
    pub weights: Option<Portfolio>,
    /// `Infinite` when the LP is unbounded.
    pub omega: OmegaValue,
    /// Homogenizing scale at the optimum (`NaN` unless optimal).
    pub scale: f64,
    pub lp: LpSolution,
}

/// Solves the omega LP and maps the result back to portfolio space.
///
/// An unbounded LP means some portfolio never falls below `B`; that
/// portfolio is found by a second LP maximizing the mean subject to
/// `ξ^jᵀx ≥ B` for every scenario.
pub fn solve_omega(s: &ScenarioMatrix, benchmark: f64, r: Option<f64>) -> Result<OmegaLpSolution> {
    let n = s.n_assets();
    let p = build_omega_lp(s, benchmark, r)?;
    let lp = simplex_solve(&p, default_iteration_limit(&p))?;
    match lp.status {
        LpStatus::Optimal => {
            let t = lp.x[n];
            if t <= MIN_HOMOGENIZING_SCALE {
                return Err(Error::Solver(format!("degenerate omega transform (t = {t:e})")));
            }
            let weights = Portfolio::from_solver(lp.x[..n].iter().map(|v| v / t).collect())?;
            Ok(OmegaLpSolution {
                status: lp.status,
                weights: Some(weights),
                omega: ExtendedReal::Finite(lp.objective),
                scale: t,
                lp,
            })
        }
        LpStatus::Unbounded => {
            let mut q = LpProblem::new("NOSHORT", Sense::Maximize);
            let mu = s.mean_returns();
            add_weights(&mut q, n, &mu);
            add_budget(&mut q, n);
            for (j, row) in s.rows().enumerate() {
                let coeffs = row
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a != 0.0)
                    .map(|(i, &a)| (i, a))
                    .collect();
                q.add_constraint(format!("S{j}"), coeffs, RowSense::Ge, benchmark);
            }
            if let Some(r) = r {
                add_mean_floor(&mut q, &mu, r);
            }
            let sol = solve_weights(&q, n)?;
            Ok(OmegaLpSolution {
                status: LpStatus::Unbounded,
                weights: sol.weights,
                omega: ExtendedReal::Infinite,
                scale: f64::NAN,
                lp,
            })
        }
        _ => Ok(OmegaLpSolution {
            status: lp.status,
            weights: None,
            omega: ExtendedReal::Undefined,
            scale: f64::NAN,
            lp,
        }),
    }
}
