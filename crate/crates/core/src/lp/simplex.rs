//! Bounded-variable revised primal simplex.
//!
//! Every row gets a logical column `s_i` so that `Ax + s = b`; the logical's
//! bounds encode the row sense (`≤`: `s ≥ 0`, `≥`: `s ≤ 0`, `=`: `s = 0`).
//! The solve starts from the all-logical basis with structurals at a bound.
//! While the basic solution violates bounds, the objective is the sum of
//! infeasibilities (a composite phase I that needs no artificial columns);
//! afterwards the true objective is minimized.
//!
//! Pricing is Dantzig's largest reduced cost, switching to Bland's smallest
//! index rule after 20 consecutive degenerate pivots until a pivot makes
//! progress. The basis is refactorized every 50 pivots, and optimality or
//! infeasibility is only declared on a freshly factorized basis.

use super::factor::LuFactor;
use super::problem::{LpProblem, LpSolution, LpStatus, RowSense, Sense};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;
const REFACTOR_EVERY: usize = 50;
const DEGENERATE_STREAK: usize = 20;
const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const FORWARD_TOL: f64 = 1e-8;
const DEGENERATE_STEP: f64 = 1e-12;
const MAX_REPAIRS: usize = 20;

/// Equilibrated internal form: structurals `0..n`, logicals `n..n+m`.
struct Standard {
    n: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    sign: f64,
}

fn pow2_round(s: f64) -> f64 {
    if !s.is_finite() || s <= 0.0 {
        return 1.0;
    }
    2f64.powi(s.log2().round() as i32)
}

impl Standard {
    fn new(p: &LpProblem) -> Self {
        let n = p.n_vars();
        let m = p.n_rows();
        let mut raw_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, c) in p.constraints.iter().enumerate() {
            for &(j, a) in &c.coeffs {
                if a != 0.0 {
                    raw_cols[j].push((i, a));
                }
            }
        }

        // Geometric-mean equilibration, rounded to powers of two so that
        // scaling is exact.
        let mut rs = vec![1.0; m];
        let mut cs = vec![1.0; n];
        for _ in 0..4 {
            let mut rmin = vec![f64::INFINITY; m];
            let mut rmax = vec![0.0_f64; m];
            for (j, col) in raw_cols.iter().enumerate() {
                for &(i, a) in col {
                    let v = (a * cs[j]).abs();
                    rmin[i] = rmin[i].min(v);
                    rmax[i] = rmax[i].max(v);
                }
            }
            for i in 0..m {
                if rmax[i] > 0.0 {
                    rs[i] = 1.0 / (rmin[i] * rmax[i]).sqrt();
                }
            }
            for (j, col) in raw_cols.iter().enumerate() {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
                for &(i, a) in col {
                    let v = (a * rs[i]).abs();
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if hi > 0.0 {
                    cs[j] = 1.0 / (lo * hi).sqrt();
                }
            }
        }
        let rs: Vec<f64> = rs.into_iter().map(pow2_round).collect();
        let cs: Vec<f64> = cs.into_iter().map(pow2_round).collect();

        let sign = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cols: Vec<Vec<(usize, f64)>> = raw_cols
            .into_iter()
            .enumerate()
            .map(|(j, col)| col.into_iter().map(|(i, a)| (i, a * rs[i] * cs[j])).collect())
            .collect();
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        let mut cost = Vec::with_capacity(n + m);
        for (v, &c) in p.variables.iter().zip(&cs) {
            lower.push(v.lower / c);
            upper.push(v.upper / c);
            cost.push(sign * v.cost * c);
        }
        let mut rhs = Vec::with_capacity(m);
        for (i, c) in p.constraints.iter().enumerate() {
            cols.push(vec![(i, 1.0)]);
            let (lo, hi) = match c.sense {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            lower.push(lo);
            upper.push(hi);
            cost.push(0.0);
            rhs.push(c.rhs * rs[i]);
        }
        Standard {
            n,
            m,
            cols,
            rhs,
            lower,
            upper,
            cost,
            row_scale: rs,
            col_scale: cs,
            sign,
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.lower[j].is_finite() {
            self.lower[j]
        } else if self.upper[j].is_finite() {
            self.upper[j]
        } else {
            0.0
        }
    }
}

struct Solver<'a> {
    lp: &'a Standard,
    x: Vec<f64>,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    lu: LuFactor,
    threshold: f64,
    fresh: bool,
}

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl<'a> Solver<'a> {
    fn new(lp: &'a Standard) -> Result<Self> {
        let (n, m) = (lp.n, lp.m);
        let x: Vec<f64> = (0..n + m).map(|j| lp.nonbasic_value(j)).collect();
        let basis: Vec<usize> = (n..n + m).collect();
        let mut pos_of = vec![NONE; n + m];
        for (p, &j) in basis.iter().enumerate() {
            pos_of[j] = p;
        }
        let cols: Vec<&[(usize, f64)]> = basis.iter().map(|&j| lp.cols[j].as_slice()).collect();
        let lu = LuFactor::factor(m, &cols, 0.1).map_err(|_| Error::Solver("identity basis is singular".into()))?;
        let mut s = Solver {
            lp,
            x,
            basis,
            pos_of,
            lu,
            threshold: 0.1,
            fresh: false,
        };
        s.recompute_primal();
        s.fresh = true;
        Ok(s)
    }

    /// Replaces the starting basis; dependent columns are repaired away.
    fn crash(&mut self, hint: &[usize]) -> Result<()> {
        let lp = self.lp;
        let total = lp.n + lp.m;
        let mut seen = vec![false; total];
        if hint.len() != lp.m
            || hint
                .iter()
                .any(|&j| j >= total || std::mem::replace(&mut seen[j], true))
        {
            return Err(Error::Validation(
                "basis hint must list one distinct column per row".into(),
            ));
        }
        for j in 0..total {
            self.pos_of[j] = NONE;
            self.x[j] = lp.nonbasic_value(j);
        }
        self.basis.copy_from_slice(hint);
        for (p, &j) in hint.iter().enumerate() {
            self.pos_of[j] = p;
        }
        self.refactor()
    }

    fn refactor(&mut self) -> Result<()> {
        let lp = self.lp;
        let mut repairs = 0;
        loop {
            let cols: Vec<&[(usize, f64)]> = self.basis.iter().map(|&j| lp.cols[j].as_slice()).collect();
            match LuFactor::factor(lp.m, &cols, self.threshold) {
                Ok(lu) => {
                    self.lu = lu;
                    break;
                }
                Err(sing) => {
                    repairs += 1;
                    if repairs > MAX_REPAIRS {
                        return Err(Error::Solver("basis stays singular after repair".into()));
                    }
                    // Swap dependent columns for the logicals of uncovered rows.
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let old = self.basis[pos];
                        let new = lp.n + row;
                        self.pos_of[old] = NONE;
                        self.x[old] = nearest_bound(self.x[old], lp.lower[old], lp.upper[old]);
                        self.basis[pos] = new;
                        self.pos_of[new] = pos;
                    }
                }
            }
        }
        self.recompute_primal();
        if self.forward_error() > FORWARD_TOL * (1.0 + inf_norm(&lp.rhs)) && self.threshold < 0.9 {
            self.threshold = 0.9;
            return self.refactor();
        }
        self.fresh = true;
        Ok(())
    }

    fn recompute_primal(&mut self) {
        let lp = self.lp;
        let mut r = lp.rhs.clone();
        for j in 0..lp.n + lp.m {
            if self.pos_of[j] == NONE && self.x[j] != 0.0 {
                for &(i, a) in &lp.cols[j] {
                    r[i] -= a * self.x[j];
                }
            }
        }
        let mut xb = Vec::new();
        self.lu.ftran_dense(r, &mut xb);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    fn forward_error(&self) -> f64 {
        let lp = self.lp;
        let mut r = lp.rhs.clone();
        for j in 0..lp.n + lp.m {
            if self.x[j] != 0.0 {
                for &(i, a) in &lp.cols[j] {
                    r[i] -= a * self.x[j];
                }
            }
        }
        inf_norm(&r)
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        (self.lp.lower[j] - v).max(v - self.lp.upper[j]).max(0.0)
    }

    fn run(&mut self, max_iters: usize, iterations: &mut usize) -> Result<Outcome> {
        let lp = self.lp;
        let (n, m) = (lp.n, lp.m);
        let mut y = Vec::with_capacity(m);
        let mut alpha = Vec::with_capacity(m);
        let mut cb = vec![0.0; m];
        let mut streak = 0usize;
        let mut phase_one_stuck = 0usize;

        loop {
            let phase_one = self.basis.iter().any(|&j| self.infeasibility(j) > PRIMAL_TOL);
            for (p, &j) in self.basis.iter().enumerate() {
                cb[p] = if phase_one {
                    let v = self.x[j];
                    if v < lp.lower[j] - PRIMAL_TOL {
                        -1.0
                    } else if v > lp.upper[j] + PRIMAL_TOL {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    lp.cost[j]
                };
            }
            self.lu.btran(&cb, &mut y);

            let bland = streak >= DEGENERATE_STREAK;
            let mut entering = NONE;
            let mut best = 0.0;
            let mut entering_dir = 0.0;
            for j in 0..n + m {
                if self.pos_of[j] != NONE || lp.lower[j] == lp.upper[j] {
                    continue;
                }
                let c = if phase_one { 0.0 } else { lp.cost[j] };
                let d = c - lp.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>();
                let can_inc = self.x[j] < lp.upper[j];
                let can_dec = self.x[j] > lp.lower[j];
                let dir = if d < -DUAL_TOL && can_inc {
                    1.0
                } else if d > DUAL_TOL && can_dec {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = j;
                    entering_dir = dir;
                    break;
                }
                if d.abs() > best {
                    best = d.abs();
                    entering = j;
                    entering_dir = dir;
                }
            }

            if entering == NONE {
                if !self.fresh {
                    self.refactor()?;
                    continue;
                }
                return Ok(if phase_one {
                    Outcome::Infeasible
                } else {
                    Outcome::Optimal
                });
            }
            if *iterations >= max_iters {
                return Ok(Outcome::IterationLimit);
            }

            let q = entering;
            if std::env::var("SXDBG").is_ok() {
                eprintln!(
                    "it {} p1 {} q {} dir {} x {:?} basis {:?}",
                    iterations, phase_one, entering, entering_dir, self.x, self.basis
                );
            }
            let dir = entering_dir;
            self.lu.ftran(&lp.cols[q], &mut alpha);

            // Ratio test: basic x_B[p] moves at rate delta_p = -dir * alpha_p.
            let mut theta_min = f64::INFINITY;
            for (p, &a) in alpha.iter().enumerate() {
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                if let Some(t) = self.block_ratio(p, -dir * a, phase_one) {
                    theta_min = theta_min.min(t);
                }
            }
            let mut leave = NONE;
            if theta_min.is_finite() {
                let tie = theta_min + 1e-9 * theta_min.abs() + 1e-15;
                let mut best_piv = 0.0;
                for (p, &a) in alpha.iter().enumerate() {
                    if a.abs() <= PIVOT_TOL {
                        continue;
                    }
                    if let Some(t) = self.block_ratio(p, -dir * a, phase_one) {
                        if t > tie {
                            continue;
                        }
                        let better = if bland {
                            leave == NONE || self.basis[p] < self.basis[leave]
                        } else {
                            a.abs() > best_piv
                        };
                        if better {
                            leave = p;
                            best_piv = a.abs();
                        }
                    }
                }
                if let Some(t) = self.block_ratio(leave, -dir * alpha[leave], phase_one) {
                    theta_min = t;
                }
            }

            let range = lp.upper[q] - lp.lower[q];
            let flip = range.is_finite() && range <= theta_min;
            if !flip && leave == NONE {
                if phase_one {
                    // A phase I ray means the factorization has drifted.
                    phase_one_stuck += 1;
                    if phase_one_stuck > 3 {
                        return Err(Error::Solver("unbounded phase I direction".into()));
                    }
                    self.refactor()?;
                    continue;
                }
                if !self.fresh {
                    self.refactor()?;
                    continue;
                }
                return Ok(Outcome::Unbounded);
            }

            let theta = if flip { range } else { theta_min };
            let leave_value = if flip {
                0.0
            } else {
                self.hit_bound(self.basis[leave], -dir * alpha[leave], phase_one)
            };
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let j = self.basis[p];
                    self.x[j] -= theta * dir * a;
                }
            }
            if flip {
                self.x[q] = if dir > 0.0 { lp.upper[q] } else { lp.lower[q] };
            } else {
                self.x[q] += dir * theta;
                let out = self.basis[leave];
                self.x[out] = leave_value;
                self.basis[leave] = q;
                self.pos_of[q] = leave;
                self.pos_of[out] = NONE;
                self.lu.push_eta(leave, &alpha);
            }
            self.fresh = false;
            *iterations += 1;
            if theta <= DEGENERATE_STEP {
                streak += 1;
            } else {
                streak = 0;
            }
            if self.lu.n_etas() >= REFACTOR_EVERY {
                self.refactor()?;
            }
        }
    }

    /// Step length at which basic position `p`, moving at rate `delta`,
    /// reaches the bound that blocks it, if any.
    fn block_ratio(&self, p: usize, delta: f64, phase_one: bool) -> Option<f64> {
        let j = self.basis[p];
        let v = self.x[j];
        let (l, u) = (self.lp.lower[j], self.lp.upper[j]);
        let bound = if delta < 0.0 {
            if phase_one && v > u + PRIMAL_TOL {
                u
            } else if phase_one && v < l - PRIMAL_TOL {
                return None;
            } else if l.is_finite() {
                l
            } else {
                return None;
            }
        } else if delta > 0.0 {
            if phase_one && v < l - PRIMAL_TOL {
                l
            } else if phase_one && v > u + PRIMAL_TOL {
                return None;
            } else if u.is_finite() {
                u
            } else {
                return None;
            }
        } else {
            return None;
        };
        Some(((bound - v) / delta).max(0.0))
    }

    fn hit_bound(&self, j: usize, delta: f64, phase_one: bool) -> f64 {
        let v = self.x[j];
        let (l, u) = (self.lp.lower[j], self.lp.upper[j]);
        if delta < 0.0 {
            if phase_one && v > u + PRIMAL_TOL {
                u
            } else {
                l
            }
        } else if phase_one && v < l - PRIMAL_TOL {
            l
        } else {
            u
        }
    }
}

fn nearest_bound(v: f64, l: f64, u: f64) -> f64 {
    match (l.is_finite(), u.is_finite()) {
        (true, true) => {
            if (v - l).abs() <= (u - v).abs() {
                l
            } else {
                u
            }
        }
        (true, false) => l,
        (false, true) => u,
        (false, false) => 0.0,
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Solves `p` with at most `max_iters` pivots, starting from
/// `p.basis_hint` when present and from the all-logical basis otherwise.
///
/// Returns an error only for malformed problems or an unrecoverable
/// factorization; infeasibility, unboundedness, and the iteration limit are
/// reported through [`LpSolution::status`]. Identical input gives identical
/// output.
pub fn simplex_solve(p: &LpProblem, max_iters: usize) -> Result<LpSolution> {
    p.validate()?;
    let lp = Standard::new(p);
    let mut solver = Solver::new(&lp)?;
    if let Some(hint) = &p.basis_hint {
        solver.crash(hint)?;
    }
    let mut iterations = 0;
    let outcome = solver.run(max_iters, &mut iterations)?;
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Infeasible => LpStatus::Infeasible,
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::IterationLimit => LpStatus::IterationLimit,
    };

    let (n, m) = (lp.n, lp.m);
    let x: Vec<f64> = (0..n).map(|j| solver.x[j] * lp.col_scale[j]).collect();

    let cb: Vec<f64> = solver.basis.iter().map(|&j| lp.cost[j]).collect();
    let mut y_int = Vec::new();
    solver.lu.btran(&cb, &mut y_int);
    let duals: Vec<f64> = (0..m).map(|i| lp.sign * lp.row_scale[i] * y_int[i]).collect();
    let reduced_costs: Vec<f64> = (0..n)
        .map(|j| {
            let d = lp.cost[j] - lp.cols[j].iter().map(|&(i, a)| y_int[i] * a).sum::<f64>();
            lp.sign * d / lp.col_scale[j]
        })
        .collect();
    let mut dual_objective = p.objective_offset + p.rhs().iter().zip(&duals).map(|(b, y)| b * y).sum::<f64>();
    for j in 0..n {
        if solver.pos_of[j] == NONE {
            dual_objective += reduced_costs[j] * x[j];
        }
    }
    for i in 0..m {
        let j = n + i;
        if solver.pos_of[j] == NONE && solver.x[j] != 0.0 {
            dual_objective -= duals[i] * solver.x[j] / lp.row_scale[i];
        }
    }

    Ok(LpSolution {
        status,
        objective: p.objective_value(&x),
        x,
        iterations,
        duals,
        reduced_costs,
        dual_objective,
        basis: solver.basis.clone(),
    })
}

/// A generous default pivot budget for problems of this shape.
pub fn default_iteration_limit(p: &LpProblem) -> usize {
    50 * (p.n_rows() + p.n_vars()) + 1000
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> LpProblem {
        let mut p = LpProblem::new("example", Sense::Maximize);
        let x1 = p.add_variable("x1", 0.0, f64::INFINITY, 1.0);
        let x2 = p.add_variable("x2", 0.0, f64::INFINITY, 1.0);
        p.add_constraint("c1", vec![(x1, 1.0), (x2, 2.0)], RowSense::Le, 4.0);
        p.add_constraint("c2", vec![(x1, 1.0)], RowSense::Le, 3.0);
        p
    }

    #[test]
    fn small_max_problem() {
        let sol = simplex_solve(&example(), 100).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 3.0).abs() < 1e-12);
        assert!((sol.x[1] - 0.5).abs() < 1e-12);
        assert!((sol.objective - 3.5).abs() < 1e-12);
        assert!((sol.dual_objective - 3.5).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_infeasible() {
        let mut p = LpProblem::new("inf", Sense::Minimize);
        let x = p.add_variable("x1", 0.0, f64::INFINITY, 0.0);
        p.add_constraint("a", vec![(x, 1.0)], RowSense::Eq, 1.0);
        p.add_constraint("b", vec![(x, 1.0)], RowSense::Le, 0.0);
        assert_eq!(simplex_solve(&p, 100).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut p = LpProblem::new("unb", Sense::Maximize);
        let x = p.add_variable("x1", 0.0, f64::INFINITY, 1.0);
        p.add_constraint("a", vec![(x, 1.0)], RowSense::Ge, 0.0);
        assert_eq!(simplex_solve(&p, 100).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_boxed_variables() {
        // min z s.t. z ≥ x - 2, z ≥ -x, x ∈ [-5, 5], z free → x = 1, z = -1.
        let mut p = LpProblem::new("box", Sense::Minimize);
        let x = p.add_variable("x", -5.0, 5.0, 0.0);
        let z = p.add_variable("z", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        p.add_constraint("r1", vec![(z, 1.0), (x, -1.0)], RowSense::Ge, -2.0);
        p.add_constraint("r2", vec![(z, 1.0), (x, 1.0)], RowSense::Ge, 0.0);
        let sol = simplex_solve(&p, 100).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_limit_reported() {
        let sol = simplex_solve(&example(), 0).unwrap();
        assert_eq!(sol.status, LpStatus::IterationLimit);
    }
}
