use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

/// One row `Σ a_j x_j (≤ | = | ≥) b`, stored sparsely as `(column, a_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A linear program `opt cᵀx + c₀ s.t. rows, l ≤ x ≤ u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub name: String,
    pub sense: Sense,
    pub objective_offset: f64,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Optional starting basis, one column per row; index `n_vars + i` is
    /// the logical of row `i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_hint: Option<Vec<usize>>,
}

impl LpProblem {
    pub fn new(name: impl Into<String>, sense: Sense) -> Self {
        Self {
            name: name.into(),
            sense,
            objective_offset: 0.0,
            variables: Vec::new(),
            constraints: Vec::new(),
            basis_hint: None,
        }
    }

    /// Adds a variable with bounds `[lower, upper]` (infinite allowed) and
    /// returns its column index.
    pub fn add_variable(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            cost,
        });
        self.variables.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn n_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn cost(&self) -> Vec<f64> {
        self.variables.iter().map(|v| v.cost).collect()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.rhs).collect()
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n_vars()];
        for &(j, a) in &self.constraints[i].coeffs {
            row[j] += a;
        }
        row
    }

    pub fn dense_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.dense_row(i)).collect()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// `cᵀx + c₀` in the problem's own sense.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.variables.iter().zip(x).map(|(v, xi)| v.cost * xi).sum::<f64>()
    }

    /// Row activities `Σ_j a_ij x_j`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| c.coeffs.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    /// Largest violation of a row, scaled by `1 + |b_i|`, and of a bound.
    pub fn max_violation(&self, x: &[f64]) -> (f64, f64) {
        let mut row_viol: f64 = 0.0;
        for (c, act) in self.constraints.iter().zip(self.activities(x)) {
            let v = match c.sense {
                RowSense::Le => (act - c.rhs).max(0.0),
                RowSense::Ge => (c.rhs - act).max(0.0),
                RowSense::Eq => (act - c.rhs).abs(),
            };
            row_viol = row_viol.max(v / (1.0 + c.rhs.abs()));
        }
        let mut bound_viol: f64 = 0.0;
        for (v, &xi) in self.variables.iter().zip(x) {
            bound_viol = bound_viol.max(v.lower - xi).max(xi - v.upper);
        }
        (row_viol, bound_viol)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let mut names = HashSet::with_capacity(n);
        for v in &self.variables {
            if !names.insert(v.name.as_str()) {
                return Err(Error::Validation(format!("duplicate variable name {:?}", v.name)));
            }
            if !v.cost.is_finite() || v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::Validation(format!(
                    "bad bounds or cost on variable {:?}",
                    v.name
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(Error::Validation(format!("empty bound range on variable {:?}", v.name)));
            }
        }
        let mut row_names = HashSet::with_capacity(self.n_rows());
        for c in &self.constraints {
            if !row_names.insert(c.name.as_str()) {
                return Err(Error::Validation(format!("duplicate row name {:?}", c.name)));
            }
            if !c.rhs.is_finite() {
                return Err(Error::Validation(format!("non-finite rhs in row {:?}", c.name)));
            }
            let mut seen = HashSet::with_capacity(c.coeffs.len());
            for &(j, a) in &c.coeffs {
                if j >= n {
                    return Err(Error::Dimension {
                        expected: n,
                        got: j + 1,
                    });
                }
                if !a.is_finite() {
                    return Err(Error::Validation(format!("non-finite coefficient in row {:?}", c.name)));
                }
                if !seen.insert(j) {
                    return Err(Error::Validation(format!("column {j} repeated in row {:?}", c.name)));
                }
            }
        }
        if !self.objective_offset.is_finite() {
            return Err(Error::Validation("non-finite objective offset".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Primal solution in original (unscaled) units, with the final basis and
/// its multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// `cᵀx + c₀` in the problem's own sense.
    pub objective: f64,
    pub iterations: usize,
    /// Row multipliers `y` with `d = c − Aᵀy`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// `bᵀy + Σ_N d_j x_j + c₀` from the final basis.
    pub dual_objective: f64,
    /// Basic column per basis position; indices `≥ n_vars` are row logicals.
    pub basis: Vec<usize>,
}
