//! Discrete scenario data: the joint law of instrument returns, portfolios on
//! the long-only simplex, and the return distribution of a portfolio.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities whose sum is within this band of one are kept bit-for-bit.
const PROB_SUM_TOL: f64 = 1e-12;

/// Weight sums of a [`Portfolio`] must be within this band of one.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// `J × n` table of per-scenario instrument returns with scenario probabilities.
///
/// Returns are stored row-major; row `j` is the outcome `ξ^j` of the return
/// vector. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMatrix {
    returns: Vec<f64>,
    probs: Vec<f64>,
    names: Vec<String>,
}

impl ScenarioMatrix {
    /// Builds a matrix from scenario rows. Probabilities default to uniform
    /// and are normalized when their sum is off by more than `1e-12`.
    pub fn new(rows: Vec<Vec<f64>>, probs: Option<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        let n = names.len();
        if rows.is_empty() {
            return Err(Error::Validation("no scenarios".into()));
        }
        if n == 0 {
            return Err(Error::Validation("no instruments".into()));
        }
        let mut returns = Vec::with_capacity(rows.len() * n);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Validation(format!(
                    "scenario {} has {} returns, expected {n}",
                    j + 1,
                    row.len()
                )));
            }
            returns.extend_from_slice(row);
        }
        Self::from_flat(returns, probs, names)
    }

    /// Builds a matrix from row-major returns.
    pub fn from_flat(returns: Vec<f64>, probs: Option<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::Validation("no instruments".into()));
        }
        if returns.is_empty() || !returns.len().is_multiple_of(n) {
            return Err(Error::Validation(format!(
                "{} return entries do not form rows of {n}",
                returns.len()
            )));
        }
        let rows = returns.len() / n;
        if let Some(idx) = returns.iter().position(|r| !r.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite return in scenario {}, instrument {}",
                idx / n + 1,
                idx % n + 1
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::Validation(format!("duplicate instrument name {name:?}")));
            }
        }
        let probs = match probs {
            Some(p) => {
                if p.len() != rows {
                    return Err(Error::Dimension {
                        expected: rows,
                        got: p.len(),
                    });
                }
                normalize_probs(p)?
            }
            None => vec![1.0 / rows as f64; rows],
        };
        Ok(Self { returns, probs, names })
    }

    /// Number of scenarios `J`.
    pub fn n_scenarios(&self) -> usize {
        self.probs.len()
    }

    /// Number of instruments `n`.
    pub fn n_assets(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.n_assets();
        &self.returns[j * n..(j + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.returns.chunks_exact(self.n_assets())
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Expected return of each instrument, `E[ξ_i]`.
    pub fn mean_returns(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.n_assets()];
        for (row, &p) in self.rows().zip(&self.probs) {
            for (m, &r) in mu.iter_mut().zip(row) {
                *m += p * r;
            }
        }
        mu
    }

    /// Per-scenario portfolio returns `ξ^jᵀx`. `x` need not lie in the simplex.
    pub fn portfolio_returns(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_assets() {
            return Err(Error::Dimension {
                expected: self.n_assets(),
                got: x.len(),
            });
        }
        Ok(self.rows().map(|row| dot(row, x)).collect())
    }

    /// Writes the matrix as CSV with a leading `prob` column.
    ///
    /// Values use the shortest representation that parses back to the same
    /// `f64`, so a reload reproduces returns exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = Vec::with_capacity(self.n_assets() + 1);
        header.push("prob".to_string());
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (row, p) in self.rows().zip(&self.probs) {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(format!("{p:?}"));
            rec.extend(row.iter().map(|r| format!("{r:?}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv writer>".into(),
            source: e,
        })?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn normalize_probs(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    for (j, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::Validation(format!(
                "scenario {} has nonpositive probability {p}",
                j + 1
            )));
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        for p in &mut probs {
            *p /= sum;
        }
    }
    Ok(probs)
}

/// Reads a scenario CSV: a header row of instrument names, optionally led by
/// a `prob` column, then one row of decimal returns per scenario.
pub fn load_scenarios(path: impl AsRef<Path>, has_prob_column: bool) -> Result<ScenarioMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_scenarios(file, has_prob_column)
}

/// Like [`load_scenarios`], decides `has_prob_column` from the header: a
/// first column named `prob` is taken as the probability column.
pub fn load_scenarios_auto(path: impl AsRef<Path>) -> Result<ScenarioMatrix> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    let first = text
        .lines()
        .next()
        .and_then(|l| l.split(',').next())
        .map(|s| s.trim().trim_start_matches('\u{feff}').trim_matches('"'));
    read_scenarios(text.as_bytes(), first == Some("prob"))
}

pub fn read_scenarios<R: Read>(reader: R, has_prob_column: bool) -> Result<ScenarioMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let mut columns: Vec<String> = header
        .iter()
        .map(|s| s.trim_start_matches('\u{feff}').to_string())
        .collect();
    if has_prob_column {
        match columns.first().map(String::as_str) {
            Some("prob") => {
                columns.remove(0);
            }
            other => {
                return Err(Error::Validation(format!(
                    "expected first column named \"prob\", found {other:?}"
                )))
            }
        }
    }
    let width = header.len();
    let mut returns = Vec::new();
    let mut probs = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // Header is line 1.
        let line = idx + 2;
        if rec.len() != width {
            return Err(Error::Validation(format!(
                "row {line} has {} fields, header has {width}",
                rec.len()
            )));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row: line,
                column: c + 1,
                value: field.to_string(),
            })?;
            if has_prob_column && c == 0 {
                probs.push(v);
            } else {
                returns.push(v);
            }
        }
    }
    ScenarioMatrix::from_flat(returns, has_prob_column.then_some(probs), columns)
}

/// Instrument weights in the long-only simplex `{x ≥ 0, 1ᵀx = 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Portfolio(Vec<f64>);

impl Portfolio {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Validation("empty portfolio".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::Validation(format!("weight {w} is not a nonnegative number")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Validation(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(weights))
    }

    /// Clips negatives no larger than `1e-9` in magnitude to zero and
    /// rescales to unit sum. Meant for solver output carrying round-off.
    pub fn from_solver(mut weights: Vec<f64>) -> Result<Self> {
        for w in &mut weights {
            if *w < 0.0 && *w >= -SIMPLEX_TOL {
                *w = 0.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum > 0.0 && (sum - 1.0).abs() <= 1e-6 {
            for w in &mut weights {
                *w /= sum;
            }
        }
        Self::new(weights)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// The unit vector `e_i` in dimension `n`.
    pub fn vertex(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Self(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for Portfolio {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Finite discrete distribution. Tied outcomes are kept as separate atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    outcomes: Vec<f64>,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(outcomes: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if outcomes.len() != probs.len() {
            return Err(Error::Dimension {
                expected: outcomes.len(),
                got: probs.len(),
            });
        }
        if outcomes.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("non-finite outcome".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::Validation("probabilities must be positive".into()));
        }
        Ok(Self { outcomes, probs })
    }

    pub fn uniform(outcomes: Vec<f64>) -> Result<Self> {
        let p = 1.0 / outcomes.len().max(1) as f64;
        let probs = vec![p; outcomes.len()];
        Self::new(outcomes, probs)
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn mean(&self) -> f64 {
        dot(&self.outcomes, &self.probs)
    }

    pub fn min(&self) -> f64 {
        self.outcomes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.outcomes.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Distribution of `-X`, the loss of a return `X`.
    pub fn negated(&self) -> Self {
        Self {
            outcomes: self.outcomes.iter().map(|x| -x).collect(),
            probs: self.probs.clone(),
        }
    }

    /// Distribution of `aX + c`.
    pub fn affine(&self, a: f64, c: f64) -> Self {
        Self {
            outcomes: self.outcomes.iter().map(|x| a * x + c).collect(),
            probs: self.probs.clone(),
        }
    }
}

/// Law of the portfolio return `ξᵀx`: outcome `j` is `ξ^jᵀx` with
/// probability `p_j`.
pub fn portfolio_return_distribution(s: &ScenarioMatrix, x: &[f64]) -> Result<Distribution> {
    let outcomes = s.portfolio_returns(x)?;
    Ok(Distribution {
        outcomes,
        probs: s.probs.clone(),
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("a{i}")).collect()
    }

    #[test]
    fn uniform_default_probabilities() {
        let csv = "a,b\n0.1,0.2\n0.0,0.1\n-0.1,0.3\n";
        let s = read_scenarios(csv.as_bytes(), false).unwrap();
        assert_eq!(s.n_scenarios(), 3);
        assert_eq!(s.probs(), &[1.0 / 3.0; 3]);
        assert_eq!(s.names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn prob_column_kept_when_summing_to_one() {
        let csv = "prob,a\n0.2,1\n0.2,2\n0.6,3\n";
        let s = read_scenarios(csv.as_bytes(), true).unwrap();
        assert_eq!(s.probs(), &[0.2, 0.2, 0.6]);
        assert_eq!(s.column(0), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn prob_column_normalized_by_sum() {
        let csv = "prob,a\n1,1\n1,2\n2,3\n";
        let s = read_scenarios(csv.as_bytes(), true).unwrap();
        assert_eq!(s.probs(), &[0.25, 0.25, 0.5]);
    }

    #[test]
    fn malformed_number_reports_location() {
        let csv = "a,b\n0.1,0.2\n0.3,x1\n";
        match read_scenarios(csv.as_bytes(), false) {
            Err(Error::Parse { row, column, value }) => {
                assert_eq!((row, column), (3, 2));
                assert_eq!(value, "x1");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonpositive_probability_rejected() {
        let csv = "prob,a\n0.5,1\n0,2\n";
        assert!(matches!(
            read_scenarios(csv.as_bytes(), true),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn ragged_rows_rejected() {
        let csv = "a,b\n0.1,0.2\n0.3\n";
        assert!(matches!(
            read_scenarios(csv.as_bytes(), false),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn missing_prob_header_rejected() {
        let csv = "a,b\n0.1,0.2\n";
        assert!(matches!(
            read_scenarios(csv.as_bytes(), true),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn portfolio_distribution_of_worked_example() {
        let s = ScenarioMatrix::new(
            vec![vec![0.0, 0.0], vec![1.0 / 6.0, 1.0 / 3.0], vec![1.0, 1.0]],
            None,
            names(2),
        )
        .unwrap();
        let d = portfolio_return_distribution(&s, &[1.0, 1.0]).unwrap();
        assert_eq!(d.outcomes(), &[0.0, 0.5, 2.0]);
        assert_eq!(d.probs(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn unit_vector_projects_column() {
        let s = ScenarioMatrix::new(vec![vec![0.1, -0.05], vec![0.0, 0.10], vec![0.3, 0.2]], None, names(2)).unwrap();
        let d = portfolio_return_distribution(&s, Portfolio::vertex(2, 1).weights()).unwrap();
        assert_eq!(d.outcomes(), s.column(1).as_slice());
    }

    #[test]
    fn hand_dot_products() {
        let s = ScenarioMatrix::new(vec![vec![0.1, -0.05], vec![0.0, 0.10]], None, names(2)).unwrap();
        let d = portfolio_return_distribution(&s, &[0.5, 0.5]).unwrap();
        assert!((d.outcomes()[0] - 0.025).abs() < 1e-15);
        assert!((d.outcomes()[1] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let s = ScenarioMatrix::new(vec![vec![0.1, -0.05]], None, names(2)).unwrap();
        assert!(matches!(
            portfolio_return_distribution(&s, &[1.0]),
            Err(Error::Dimension { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn portfolio_invariants() {
        assert!(Portfolio::new(vec![0.5, 0.5]).is_ok());
        assert!(Portfolio::new(vec![0.6, 0.6]).is_err());
        assert!(Portfolio::new(vec![1.5, -0.5]).is_err());
        let p = Portfolio::from_solver(vec![1.0 + 1e-12, -1e-12]).unwrap();
        assert_eq!(p.weights()[1], 0.0);
    }
}
