use std::time::Instant;

use exomega_core::frontier::{
    self, Backend, ComparisonRow, FrontierPoint, Measures, PointStatus, ProblemKind, Settings,
};
use exomega_core::lp::{self, LpProblem, LpStatus, PortfolioLpSolution};
use exomega_core::risk::{cvar, expectile, index_sets, neg_expectile, omega, subgradient, ExtendedReal};
use exomega_core::scenarios::{load_scenarios, load_scenarios_auto, portfolio_return_distribution};
use exomega_core::subgrad::{self, grid_oracle, OracleProblem, SolveOptions, SolveReport};
use exomega_core::{Error, Portfolio, ScenarioMatrix};
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::error::CliError;
use crate::generate;
use crate::output::*;

type CliResult<T = ()> = std::result::Result<T, CliError>;

const OPTIMIZERS: [&str; 3] = ["expectile", "cvar", "var"];

fn load(path: &std::path::Path, prob: ProbColumn) -> CliResult<ScenarioMatrix> {
    Ok(match prob {
        ProbColumn::Auto => load_scenarios_auto(path)?,
        ProbColumn::Yes => load_scenarios(path, true)?,
        ProbColumn::No => load_scenarios(path, false)?,
    })
}

fn required(v: Option<f64>, flag: &str, problem: ProblemArg) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Usage(format!("{} requires --{flag}", problem.name())))
}

/// Expectile level matched to an omega threshold.
fn matched_level(z: f64) -> CliResult<f64> {
    if !(z > 1.0 && z.is_finite()) {
        return Err(CliError::Usage(format!("--z must be a finite value above 1, got {z}")));
    }
    Ok(1.0 / (1.0 + z))
}

fn subgrad_options(a: &SolverArgs) -> SolveOptions {
    SolveOptions {
        max_iters: a.max_iters,
        step: a.step,
        ..SolveOptions::default()
    }
}

fn weight_header(prefix: &str, names: &[String]) -> Vec<String> {
    names.iter().map(|n| format!("{prefix}{n}")).collect()
}

fn weight_cells(w: Option<&[f64]>, n: usize) -> Vec<String> {
    match w {
        Some(w) => w.iter().map(|&v| num(v)).collect(),
        None => vec![String::new(); n],
    }
}

fn omega_cell(v: Option<ExtendedReal>) -> String {
    v.map(ext_text).unwrap_or_default()
}

fn omega_json(v: Option<ExtendedReal>) -> Value {
    v.map(ext_json).unwrap_or(Value::Null)
}

fn measures_json(m: &Measures) -> Value {
    let mut o = Map::new();
    o.insert("mean".into(), jnum(m.mean));
    o.insert("neg_expectile".into(), jnum(m.neg_expectile));
    o.insert("cvar".into(), jnum(m.cvar));
    o.insert("var".into(), jnum(m.var));
    if let Some(om) = m.omega {
        o.insert("omega".into(), ext_json(om));
    }
    Value::Object(o)
}

fn finish(
    common: &Common,
    default: Format,
    command: &str,
    body: Map<String, Value>,
    table: impl FnOnce() -> CliResult<String>,
) -> CliResult {
    let text = match common.format.unwrap_or(default) {
        Format::Json => json_text(&envelope(command, common.seed, body)),
        Format::Csv => table()?,
    };
    emit(common.out.as_deref(), &text)
}

/// Fails when no row succeeded; the table has already been written.
fn all_failed(statuses: &[PointStatus]) -> CliResult {
    if statuses.contains(&PointStatus::Optimal) {
        Ok(())
    } else if statuses.iter().all(|s| *s == PointStatus::Infeasible) {
        Err(CliError::AllInfeasible("every grid point is infeasible".into()))
    } else {
        Err(CliError::Failed("every grid point failed".into()))
    }
}

pub fn eval(a: &EvalArgs) -> CliResult {
    let s = load(&a.common.scenarios, a.common.prob_column)?;
    let n = s.n_assets();
    let mut x = match &a.weights {
        Some(w) => w.clone(),
        None => Portfolio::uniform(n).into_inner(),
    };
    if x.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.len(),
        }
        .into());
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage("weights must be finite".into()));
    }
    if !a.no_normalize {
        let total: f64 = x.iter().sum();
        if !(total.is_finite() && total != 0.0) {
            return Err(CliError::Usage(
                "weights sum to zero; pass --no-normalize to use them as given".into(),
            ));
        }
        x.iter_mut().for_each(|v| *v /= total);
    }
    let d = portfolio_return_distribution(&s, &x)?;
    let loss = d.negated();
    let e = expectile(&d, a.q)?;
    let rho = neg_expectile(&d, a.q)?;
    let om = omega(&d, a.benchmark)?;
    let cv = cvar(&loss, a.alpha)?;
    let va = exomega_core::risk::var(&loss, a.alpha)?;
    let sets = index_sets(&s, &x, a.q)?;
    // Subgradients need the convex range.
    let (g_lo, g_hi) = if a.q < 0.5 {
        (
            Some(subgradient(&s, &x, a.q, a.q)?),
            Some(subgradient(&s, &x, a.q, 1.0 - a.q)?),
        )
    } else {
        (None, None)
    };

    let mut body = Map::new();
    body.insert("instruments".into(), json!(s.names()));
    body.insert("scenarios".into(), json!(s.n_scenarios()));
    body.insert("weights".into(), jvec(&x));
    body.insert("normalized".into(), json!(!a.no_normalize));
    body.insert(
        "parameters".into(),
        json!({"q": jnum(a.q), "alpha": jnum(a.alpha), "benchmark": jnum(a.benchmark)}),
    );
    body.insert("mean".into(), jnum(d.mean()));
    body.insert("expectile".into(), jnum(e));
    body.insert("neg_expectile".into(), jnum(rho));
    body.insert("omega".into(), ext_json(om));
    body.insert("cvar".into(), jnum(cv));
    body.insert("var".into(), jnum(va));
    body.insert(
        "index_sets".into(),
        json!({"positive": sets.positive.len(), "negative": sets.negative.len(), "zero": sets.zero.len()}),
    );
    body.insert("differentiable".into(), json!(sets.is_differentiable()));
    body.insert(
        "subgradient_t_q".into(),
        g_lo.as_ref().map_or(Value::Null, |g| jvec(&g.vector)),
    );
    body.insert(
        "subgradient_t_1mq".into(),
        g_hi.as_ref().map_or(Value::Null, |g| jvec(&g.vector)),
    );

    finish(&a.common, Format::Json, "eval", body, || {
        let mut header: Vec<String> = [
            "mean",
            "expectile",
            "neg_expectile",
            "omega",
            "cvar",
            "var",
            "n_positive",
            "n_negative",
            "n_zero",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(weight_header("g_q_", s.names()));
        header.extend(weight_header("g_1mq_", s.names()));
        let mut row = vec![
            num(d.mean()),
            num(e),
            num(rho),
            ext_text(om),
            num(cv),
            num(va),
            sets.positive.len().to_string(),
            sets.negative.len().to_string(),
            sets.zero.len().to_string(),
        ];
        row.extend(weight_cells(g_lo.as_ref().map(|g| g.vector.as_slice()), n));
        row.extend(weight_cells(g_hi.as_ref().map(|g| g.vector.as_slice()), n));
        csv_text(&header, &[row])
    })
}

/// A solved portfolio problem, independent of the backend.
struct Solved {
    weights: Portfolio,
    objective: f64,
    omega: Option<ExtendedReal>,
    iterations: usize,
    converged: bool,
}

fn from_lp(sol: PortfolioLpSolution) -> CliResult<Solved> {
    match (sol.status, sol.weights) {
        (LpStatus::Optimal, Some(w)) => Ok(Solved {
            weights: w,
            objective: sol.objective,
            omega: None,
            iterations: sol.lp.iterations,
            converged: true,
        }),
        (LpStatus::Infeasible, _) => Err(Error::Infeasible("LP is infeasible".into()).into()),
        (status, _) => Err(Error::Solver(format!("LP ended with status {status:?}")).into()),
    }
}

fn from_report(rep: SolveReport) -> Solved {
    Solved {
        weights: rep.weights,
        objective: rep.objective,
        omega: None,
        iterations: rep.iterations,
        converged: rep.converged,
    }
}

fn no_subgrad(problem: ProblemArg) -> CliError {
    Error::Unsupported(format!("the subgradient backend does not solve {}", problem.name())).into()
}

fn solve(s: &ScenarioMatrix, a: &OptimizeArgs) -> CliResult<Solved> {
    let backend = a.solver.backend;
    let opts = subgrad_options(&a.solver);
    let step = a.solver.grid_step;
    let oracle = |p: OracleProblem| -> CliResult<Solved> { Ok(from_report(grid_oracle(s, &p, step)?)) };
    match a.problem {
        ProblemArg::P1Expectile => {
            let b = required(a.bound, "bound", a.problem)?;
            match backend {
                BackendArg::Lp => from_lp(lp::solve_p1_expectile(s, a.q, b)?),
                BackendArg::Subgrad => Ok(from_report(subgrad::solve_p1_subgradient(s, a.q, b, &opts)?)),
                BackendArg::Oracle => oracle(OracleProblem::P1Expectile { q: a.q, bound: b }),
            }
        }
        ProblemArg::P2Expectile => match backend {
            BackendArg::Lp => from_lp(lp::solve_p2_expectile(s, a.q, a.floor)?),
            BackendArg::Subgrad => Ok(from_report(subgrad::solve_p2_subgradient(s, a.q, a.floor, &opts)?)),
            BackendArg::Oracle => oracle(OracleProblem::P2Expectile { q: a.q, floor: a.floor }),
        },
        ProblemArg::P1Omega => {
            let bench = required(a.benchmark, "benchmark", a.problem)?;
            let z = required(a.z, "z", a.problem)?;
            let q = matched_level(z)?;
            match backend {
                BackendArg::Lp => from_lp(lp::solve_p1_expectile(s, q, -bench)?),
                BackendArg::Subgrad => Ok(from_report(subgrad::solve_p1_subgradient(s, q, -bench, &opts)?)),
                BackendArg::Oracle => oracle(OracleProblem::P1Omega {
                    benchmark: bench,
                    threshold: z,
                }),
            }
        }
        ProblemArg::P2Omega => {
            let bench = required(a.benchmark, "benchmark", a.problem)?;
            match backend {
                BackendArg::Lp => {
                    let sol = lp::solve_omega(s, bench, a.floor)?;
                    match (sol.status, sol.weights) {
                        (LpStatus::Optimal | LpStatus::Unbounded, Some(w)) => Ok(Solved {
                            weights: w,
                            objective: sol.omega.to_f64().unwrap_or(f64::NAN),
                            omega: Some(sol.omega),
                            iterations: sol.lp.iterations,
                            converged: true,
                        }),
                        (LpStatus::Infeasible, _) => Err(Error::Infeasible("omega LP is infeasible".into()).into()),
                        (status, _) => Err(Error::Solver(format!("omega LP ended with status {status:?}")).into()),
                    }
                }
                BackendArg::Subgrad => Err(no_subgrad(a.problem)),
                BackendArg::Oracle => oracle(OracleProblem::P2Omega {
                    benchmark: bench,
                    floor: a.floor,
                }),
            }
        }
        ProblemArg::P2Cvar => match backend {
            BackendArg::Lp => from_lp(lp::solve_cvar(s, a.alpha, a.floor)?),
            BackendArg::Subgrad => Err(no_subgrad(a.problem)),
            BackendArg::Oracle => oracle(OracleProblem::P2Cvar {
                alpha: a.alpha,
                floor: a.floor,
            }),
        },
        ProblemArg::P2Var => match backend {
            BackendArg::Oracle => oracle(OracleProblem::P2Var {
                alpha: a.alpha,
                floor: a.floor,
            }),
            _ => Err(Error::Unsupported("p2-var is solved by the oracle backend only".into()).into()),
        },
    }
}

pub fn optimize(a: &OptimizeArgs) -> CliResult {
    let s = load(&a.common.scenarios, a.common.prob_column)?;
    let n = s.n_assets();
    let start = Instant::now();
    let sol = solve(&s, a)?;
    let wall = start.elapsed().as_secs_f64();

    let q = match (a.problem, a.z) {
        (ProblemArg::P1Omega, Some(z)) => matched_level(z)?,
        _ => a.q,
    };
    let m = frontier::measures(&s, &sol.weights, q, a.alpha, a.benchmark)?;
    let w = sol.weights.weights();
    let budget = (w.iter().sum::<f64>() - 1.0).abs();
    let min_weight = w.iter().copied().fold(f64::INFINITY, f64::min);
    // Signed slack of the problem's own constraint; negative means violated.
    let slack = match a.problem {
        ProblemArg::P1Expectile => a.bound.map(|b| b - m.neg_expectile),
        ProblemArg::P1Omega => match (m.omega, a.z) {
            (Some(ExtendedReal::Finite(v)), Some(z)) => Some(v - z),
            (Some(ExtendedReal::Infinite), Some(_)) => Some(f64::INFINITY),
            _ => None,
        },
        _ => a.floor.map(|r| m.mean - r),
    };

    let mut body = Map::new();
    body.insert("problem".into(), json!(a.problem.name()));
    body.insert("backend".into(), json!(Backend::from(a.solver.backend).to_string()));
    body.insert(
        "parameters".into(),
        json!({
            "q": jnum(q),
            "alpha": jnum(a.alpha),
            "bound": jopt(a.bound),
            "floor": jopt(a.floor),
            "benchmark": jopt(a.benchmark),
            "z": jopt(a.z),
        }),
    );
    body.insert("instruments".into(), json!(s.names()));
    body.insert("status".into(), json!("optimal"));
    body.insert("weights".into(), jvec(w));
    let objective = match sol.omega {
        Some(om) => ext_json(om),
        None => jnum(sol.objective),
    };
    body.insert("objective".into(), objective);
    body.insert("measures".into(), measures_json(&m));
    body.insert(
        "residuals".into(),
        json!({"budget": jnum(budget), "min_weight": jnum(min_weight), "constraint_slack": jopt(slack)}),
    );
    body.insert("iterations".into(), json!(sol.iterations));
    body.insert("converged".into(), json!(sol.converged));
    if a.common.timing {
        body.insert("wall_time".into(), jnum(wall));
    }

    finish(&a.common, Format::Json, "optimize", body, || {
        let mut header: Vec<String> = [
            "problem",
            "backend",
            "status",
            "objective",
            "mean",
            "neg_expectile",
            "cvar",
            "var",
            "omega",
            "constraint_slack",
            "iterations",
            "converged",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(weight_header("w_", s.names()));
        let mut row = vec![
            a.problem.name().to_string(),
            Backend::from(a.solver.backend).to_string(),
            "optimal".into(),
            sol.omega.map(ext_text).unwrap_or_else(|| num(sol.objective)),
            num(m.mean),
            num(m.neg_expectile),
            num(m.cvar),
            num(m.var),
            omega_cell(m.omega),
            opt_num(slack),
            sol.iterations.to_string(),
            sol.converged.to_string(),
        ];
        if a.common.timing {
            header.push("wall_time".into());
            row.push(num(wall));
        }
        row.extend(weight_cells(Some(w), n));
        csv_text(&header, &[row])
    })
}

fn settings(solver: &SolverArgs, q: f64, alpha: f64, benchmark: Option<f64>) -> Settings {
    Settings {
        q,
        alpha,
        benchmark,
        subgrad: subgrad_options(solver),
        grid_step: solver.grid_step,
    }
}

pub fn frontier(a: &FrontierArgs) -> CliResult {
    let s = load(&a.common.scenarios, a.common.prob_column)?;
    let n = s.n_assets();
    let (kind, name) = match a.problem {
        FrontierProblem::P1Expectile => (ProblemKind::P1Expectile, "p1-expectile"),
        FrontierProblem::P2Expectile => (ProblemKind::P2Expectile, "p2-expectile"),
        FrontierProblem::P2Cvar => (ProblemKind::P2Cvar, "p2-cvar"),
    };
    let backend = Backend::from(a.solver.backend);
    let st = settings(&a.solver, a.q, a.alpha, a.benchmark);
    let points = frontier::sweep(&s, kind, &a.grid.values(), backend, &st, a.jobs)?;

    let point_json = |p: &FrontierPoint| {
        json!({
            "parameter": jnum(p.parameter),
            "status": p.status.to_string(),
            "objective": jopt(p.objective),
            "measures": p.measures.as_ref().map_or(Value::Null, measures_json),
            "weights": p.weights.as_deref().map_or(Value::Null, jvec),
            "iterations": p.iterations,
            "converged": p.converged,
            "message": p.message,
        })
    };
    let mut body = Map::new();
    body.insert("problem".into(), json!(name));
    body.insert("backend".into(), json!(backend.to_string()));
    body.insert(
        "parameters".into(),
        json!({"q": jnum(a.q), "alpha": jnum(a.alpha), "benchmark": jopt(a.benchmark)}),
    );
    body.insert("instruments".into(), json!(s.names()));
    body.insert("points".into(), Value::Array(points.iter().map(point_json).collect()));

    finish(&a.common, Format::Csv, "frontier", body, || {
        let mut header: Vec<String> = [
            "parameter",
            "status",
            "objective",
            "mean",
            "neg_expectile",
            "cvar",
            "var",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        if a.benchmark.is_some() {
            header.push("omega".into());
        }
        header.extend(["iterations".to_string(), "converged".to_string()]);
        header.extend(weight_header("w_", s.names()));
        header.push("message".into());
        let rows: Vec<Vec<String>> = points
            .iter()
            .map(|p| {
                let m = p.measures.as_ref();
                let mut row = vec![
                    num(p.parameter),
                    p.status.to_string(),
                    opt_num(p.objective),
                    opt_num(m.map(|m| m.mean)),
                    opt_num(m.map(|m| m.neg_expectile)),
                    opt_num(m.map(|m| m.cvar)),
                    opt_num(m.map(|m| m.var)),
                ];
                if a.benchmark.is_some() {
                    row.push(omega_cell(m.and_then(|m| m.omega)));
                }
                row.push(p.iterations.to_string());
                row.push(p.converged.to_string());
                row.extend(weight_cells(p.weights.as_deref(), n));
                row.push(p.message.clone().unwrap_or_default());
                row
            })
            .collect();
        csv_text(&header, &rows)
    })?;
    all_failed(&points.iter().map(|p| p.status).collect::<Vec<_>>())
}

pub fn compare(a: &CompareArgs) -> CliResult {
    let s = load(&a.common.scenarios, a.common.prob_column)?;
    let n = s.n_assets();
    let backend = Backend::from(a.solver.backend);
    let st = settings(&a.solver, a.q, a.alpha, None);
    let rows = frontier::compare_risk_measures(&s, a.q, a.alpha, &a.grid.values(), backend, &st, a.jobs)?;
    let n_opt = if n <= 4 { 3 } else { 2 };
    let opts = &OPTIMIZERS[..n_opt];

    let row_json = |r: &ComparisonRow| {
        let mut values = Map::new();
        let mut weights = Map::new();
        for (o, name) in opts.iter().enumerate() {
            let v = r.values.get(o).copied().flatten();
            let mut mv = Map::new();
            for (k, m) in frontier::MEASURES.iter().enumerate() {
                mv.insert(m.to_string(), jopt(v.map(|v| v[k])));
            }
            values.insert(name.to_string(), Value::Object(mv));
            let w = r.weights.get(o).cloned().flatten();
            weights.insert(name.to_string(), w.as_deref().map_or(Value::Null, jvec));
        }
        let mut rel = Map::new();
        for (k, m) in frontier::MEASURES.iter().enumerate() {
            let mut rv = Map::new();
            for (o, name) in opts.iter().enumerate() {
                rv.insert(name.to_string(), jopt(r.rel_diff[k].get(o).copied().flatten()));
            }
            rel.insert(m.to_string(), Value::Object(rv));
        }
        json!({
            "floor": jnum(r.floor),
            "status": r.status.to_string(),
            "values": values,
            "rel_diff": rel,
            "cross_gap_expectile_cvar": jopt(r.cross_gap(0, 1)),
            "weights": weights,
            "message": r.message,
        })
    };
    let mut body = Map::new();
    body.insert("backend".into(), json!(backend.to_string()));
    body.insert("parameters".into(), json!({"q": jnum(a.q), "alpha": jnum(a.alpha)}));
    body.insert("instruments".into(), json!(s.names()));
    body.insert("optimizers".into(), json!(opts));
    body.insert("measures".into(), json!(frontier::MEASURES));
    body.insert("rows".into(), Value::Array(rows.iter().map(row_json).collect()));

    finish(&a.common, Format::Csv, "compare", body, || {
        let mut header = vec!["floor".to_string(), "status".to_string()];
        for o in opts {
            for m in frontier::MEASURES {
                header.push(format!("value_{o}_{m}"));
            }
        }
        for m in frontier::MEASURES {
            for o in opts {
                header.push(format!("rel_{m}_{o}"));
            }
        }
        header.push("cross_gap_expectile_cvar".into());
        for o in opts {
            header.extend(weight_header(&format!("w_{o}_"), s.names()));
        }
        header.push("message".into());
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                let mut row = vec![num(r.floor), r.status.to_string()];
                for o in 0..n_opt {
                    let v = r.values.get(o).copied().flatten();
                    for k in 0..frontier::MEASURES.len() {
                        row.push(opt_num(v.map(|v| v[k])));
                    }
                }
                for k in 0..frontier::MEASURES.len() {
                    for o in 0..n_opt {
                        row.push(opt_num(r.rel_diff[k].get(o).copied().flatten()));
                    }
                }
                row.push(opt_num(r.cross_gap(0, 1)));
                for o in 0..n_opt {
                    row.extend(weight_cells(r.weights.get(o).and_then(|w| w.as_deref()), n));
                }
                row.push(r.message.clone().unwrap_or_default());
                row
            })
            .collect();
        csv_text(&header, &table)
    })?;
    all_failed(&rows.iter().map(|r| r.status).collect::<Vec<_>>())
}

fn equiv_status(e: &Error) -> PointStatus {
    match e {
        Error::Infeasible(_) | Error::BenchmarkUnreachable { .. } => PointStatus::Infeasible,
        _ => PointStatus::Failed,
    }
}

pub fn equiv(a: &EquivArgs) -> CliResult {
    let s = load(&a.common.scenarios, a.common.prob_column)?;
    let n = s.n_assets();
    let q = matched_level(a.z)?;
    let mut body = Map::new();
    body.insert(
        "problem".into(),
        json!(match a.problem {
            EquivProblem::P2 => "p2",
            EquivProblem::P1 => "p1",
        }),
    );
    body.insert("parameters".into(), json!({"z": jnum(a.z), "q": jnum(q)}));
    body.insert("instruments".into(), json!(s.names()));
    let mut statuses = Vec::new();

    match a.problem {
        EquivProblem::P2 => {
            let floors: Vec<Option<f64>> = match a.grid {
                Some(g) => g.values().into_iter().map(Some).collect(),
                None => vec![a.floor],
            };
            let results: Vec<_> = floors
                .iter()
                .map(|&r| (r, frontier::check_p2_equivalence(&s, a.z, r)))
                .collect();
            let mut rows_json = Vec::new();
            let mut table = Vec::new();
            for (r, res) in &results {
                let (status, message) = match res {
                    Ok(_) => (PointStatus::Optimal, None),
                    Err(e) => (equiv_status(e), Some(e.to_string())),
                };
                statuses.push(status);
                let rep = res.as_ref().ok();
                rows_json.push(json!({
                    "floor": jopt(*r),
                    "status": status.to_string(),
                    "benchmark": jopt(rep.map(|p| p.benchmark)),
                    "rho0": jopt(rep.map(|p| p.rho0)),
                    "omega_x0": omega_json(rep.map(|p| p.omega_x0)),
                    "omega_x1": omega_json(rep.and_then(|p| p.omega_x1)),
                    "objective_gap": jopt(rep.and_then(|p| p.objective_gap)),
                    "max_weight_gap": jopt(rep.and_then(|p| p.max_weight_gap)),
                    "degenerate": rep.map(|p| p.degenerate),
                    "x0": rep.map_or(Value::Null, |p| jvec(&p.x0)),
                    "x1": rep.and_then(|p| p.x1.as_deref()).map_or(Value::Null, jvec),
                    "message": message,
                }));
                let mut row = vec![
                    opt_num(*r),
                    status.to_string(),
                    opt_num(rep.map(|p| p.benchmark)),
                    opt_num(rep.map(|p| p.rho0)),
                    omega_cell(rep.map(|p| p.omega_x0)),
                    omega_cell(rep.and_then(|p| p.omega_x1)),
                    opt_num(rep.and_then(|p| p.objective_gap)),
                    opt_num(rep.and_then(|p| p.max_weight_gap)),
                    rep.map(|p| p.degenerate.to_string()).unwrap_or_default(),
                ];
                row.extend(weight_cells(rep.map(|p| p.x0.as_slice()), n));
                row.extend(weight_cells(rep.and_then(|p| p.x1.as_deref()), n));
                row.push(message.unwrap_or_default());
                table.push(row);
            }
            body.insert("rows".into(), Value::Array(rows_json));
            finish(&a.common, Format::Csv, "equiv", body, || {
                let mut header: Vec<String> = [
                    "floor",
                    "status",
                    "benchmark",
                    "rho0",
                    "omega_x0",
                    "omega_x1",
                    "objective_gap",
                    "max_weight_gap",
                    "degenerate",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect();
                header.extend(weight_header("x0_", s.names()));
                header.extend(weight_header("x1_", s.names()));
                header.push("message".into());
                csv_text(&header, &table)
            })?;
        }
        EquivProblem::P1 => {
            let benchmarks: Vec<f64> = match a.grid {
                Some(g) => g.values(),
                None => vec![a
                    .benchmark
                    .ok_or_else(|| CliError::Usage("equiv --problem p1 requires --benchmark or --grid".into()))?],
            };
            let mut rows_json = Vec::new();
            let mut table = Vec::new();
            for &b in &benchmarks {
                let res = frontier::check_p1_equivalence(&s, a.z, b, a.grid_step);
                let (status, message) = match &res {
                    Ok(_) => (PointStatus::Optimal, None),
                    Err(e) => (equiv_status(e), Some(e.to_string())),
                };
                statuses.push(status);
                let rep = res.as_ref().ok();
                rows_json.push(json!({
                    "benchmark": jnum(b),
                    "status": status.to_string(),
                    "precondition_met": rep.map(|p| p.precondition_met),
                    "best_omega": omega_json(rep.and_then(|p| p.best_omega)),
                    "mean_expectile": jopt(rep.and_then(|p| p.mean_expectile)),
                    "omega_expectile": omega_json(rep.and_then(|p| p.omega_expectile)),
                    "omega_constraint_ok": rep.and_then(|p| p.omega_constraint_ok),
                    "mean_oracle": jopt(rep.and_then(|p| p.mean_oracle)),
                    "objective_gap": jopt(rep.and_then(|p| p.objective_gap)),
                    "x_expectile": rep.and_then(|p| p.x_expectile.as_deref()).map_or(Value::Null, jvec),
                    "x_oracle": rep.and_then(|p| p.x_oracle.as_deref()).map_or(Value::Null, jvec),
                    "message": message,
                }));
                let mut row = vec![
                    num(b),
                    status.to_string(),
                    rep.map(|p| p.precondition_met.to_string()).unwrap_or_default(),
                    omega_cell(rep.and_then(|p| p.best_omega)),
                    opt_num(rep.and_then(|p| p.mean_expectile)),
                    omega_cell(rep.and_then(|p| p.omega_expectile)),
                    rep.and_then(|p| p.omega_constraint_ok)
                        .map(|v| v.to_string())
                        .unwrap_or_default(),
                    opt_num(rep.and_then(|p| p.mean_oracle)),
                    opt_num(rep.and_then(|p| p.objective_gap)),
                ];
                row.extend(weight_cells(rep.and_then(|p| p.x_expectile.as_deref()), n));
                row.extend(weight_cells(rep.and_then(|p| p.x_oracle.as_deref()), n));
                row.push(message.unwrap_or_default());
                table.push(row);
            }
            body.insert("rows".into(), Value::Array(rows_json));
            finish(&a.common, Format::Csv, "equiv", body, || {
                let mut header: Vec<String> = [
                    "benchmark",
                    "status",
                    "precondition_met",
                    "best_omega",
                    "mean_expectile",
                    "omega_expectile",
                    "omega_constraint_ok",
                    "mean_oracle",
                    "objective_gap",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect();
                header.extend(weight_header("xe_", s.names()));
                header.extend(weight_header("xo_", s.names()));
                header.push("message".into());
                csv_text(&header, &table)
            })?;
        }
    }
    all_failed(&statuses)
}

fn build_lp(s: &ScenarioMatrix, a: &ExportArgs) -> CliResult<LpProblem> {
    let p = a.problem;
    Ok(match p {
        ProblemArg::P1Expectile => lp::build_p1_expectile_lp(s, a.q, required(a.bound, "bound", p)?)?,
        ProblemArg::P2Expectile => lp::build_p2_expectile_lp(s, a.q, a.floor)?,
        ProblemArg::P1Omega => {
            let bench = required(a.benchmark, "benchmark", p)?;
            let q = matched_level(required(a.z, "z", p)?)?;
            lp::build_p1_expectile_lp(s, q, -bench)?
        }
        ProblemArg::P2Omega => lp::build_omega_lp(s, required(a.benchmark, "benchmark", p)?, a.floor)?,
        ProblemArg::P2Cvar => lp::build_cvar_lp(s, a.alpha, a.floor)?,
        ProblemArg::P2Var => return Err(Error::Unsupported("p2-var has no LP formulation".into()).into()),
    })
}

pub fn export_lp(a: &ExportArgs) -> CliResult {
    let s = load(&a.scenarios, a.prob_column)?;
    let p = build_lp(&s, a)?;
    lp::export_mps(&p, &a.out)?;
    let nonzeros: usize = p.constraints.iter().map(|c| c.coeffs.len()).sum();
    emit(
        None,
        &format!("rows={} columns={} nonzeros={}\n", p.n_rows(), p.n_vars(), nonzeros),
    )
}

pub fn generate(a: &GenerateArgs) -> CliResult {
    if a.assets == 0 || a.count == 0 {
        return Err(CliError::Usage("--assets and --count must be positive".into()));
    }
    let s = generate::heavy_tailed(a.seed, a.assets, a.count, a.dof, a.weighted)?;
    s.save_csv(&a.out)?;
    Ok(())
}
