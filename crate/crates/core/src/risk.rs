//! Risk functionals of finite discrete distributions and their portfolio forms.
//!
//! Sign conventions: expectile, negative expectile and omega act on the
//! *return* `X`; CVaR and VaR act on the *loss* `L = -X`.
//!
//! The expectile `e_q(X)` is the root of the first-order residual
//!
//! ```text
//! f(m) = q·E[(X−m)_+] − (1−q)·E[(X−m)_−]
//! ```
//!
//! which is strictly decreasing and piecewise linear in `m` with breakpoints
//! at the atoms. The solver bisects over the sorted atoms to find the bracket
//! holding the root, then solves the linear piece in closed form, so the
//! result is exact up to round-off.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenarios::{dot, portfolio_return_distribution, Distribution, ScenarioMatrix};

/// A risk functional together with its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskSpec {
    /// `R_q(X) = −e_q(X)`; coherent for `q ≤ 1/2`.
    NegExpectile { q: f64 },
    /// `Ω_B(X) = E[(X−B)_+] / E[(X−B)_−]`.
    Omega { benchmark: f64 },
    /// CVaR of the loss `−X` at confidence `alpha`.
    Cvar { alpha: f64 },
    /// VaR (left `alpha`-quantile) of the loss `−X`.
    Var { alpha: f64 },
}

impl RiskSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RiskSpec::NegExpectile { q } => check_level(q),
            RiskSpec::Omega { benchmark } => {
                if benchmark.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("benchmark", benchmark, "the real line"))
                }
            }
            RiskSpec::Cvar { alpha } | RiskSpec::Var { alpha } => check_confidence(alpha),
        }
    }

    /// Stricter check used by optimization entry points: negative expectile
    /// needs `q < 1/2`.
    pub fn validate_for_optimization(&self) -> Result<()> {
        self.validate()?;
        if let RiskSpec::NegExpectile { q } = *self {
            check_convex_level(q)?;
        }
        Ok(())
    }

    /// Evaluates the functional on the return distribution `dist`.
    pub fn evaluate(&self, dist: &Distribution) -> Result<ExtendedReal> {
        self.validate()?;
        Ok(match *self {
            RiskSpec::NegExpectile { q } => ExtendedReal::Finite(neg_expectile(dist, q)?),
            RiskSpec::Omega { benchmark } => omega(dist, benchmark)?,
            RiskSpec::Cvar { alpha } => ExtendedReal::Finite(cvar(&dist.negated(), alpha)?),
            RiskSpec::Var { alpha } => ExtendedReal::Finite(var(&dist.negated(), alpha)?),
        })
    }
}

/// A real number, `+∞`, or the undefined ratio `0/0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
    Undefined,
}

/// Omega ratios are finite, infinite (no shortfall), or undefined (`X = B`).
pub type OmegaValue = ExtendedReal;

impl ExtendedReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// `+∞` maps to `f64::INFINITY`; undefined maps to `None`.
    pub fn to_f64(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::Infinite => Some(f64::INFINITY),
            ExtendedReal::Undefined => None,
        }
    }

    /// `self ≥ z`; an undefined value satisfies nothing.
    pub fn at_least(self, z: f64) -> bool {
        match self {
            ExtendedReal::Finite(v) => v >= z,
            ExtendedReal::Infinite => true,
            ExtendedReal::Undefined => false,
        }
    }
}

impl std::fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinite => f.write_str("inf"),
            ExtendedReal::Undefined => f.write_str("undefined"),
        }
    }
}

pub(crate) fn check_level(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::param("q", q, "(0, 1)"))
    }
}

pub(crate) fn check_convex_level(q: f64) -> Result<()> {
    if q > 0.0 && q < 0.5 {
        Ok(())
    } else {
        Err(Error::param("q", q, "(0, 1/2)"))
    }
}

pub(crate) fn check_confidence(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", alpha, "(0, 1)"))
    }
}

fn check_mixing(q: f64, t: f64) -> Result<()> {
    check_convex_level(q)?;
    if t >= q && t <= 1.0 - q {
        Ok(())
    } else {
        Err(Error::param("t", t, "[q, 1-q]"))
    }
}

/// First-order residual `q·E[(X−m)_+] − (1−q)·E[(X−m)_−]`.
pub fn foc_residual(dist: &Distribution, q: f64, m: f64) -> f64 {
    let mut up = 0.0;
    let mut down = 0.0;
    for (&x, &p) in dist.outcomes().iter().zip(dist.probs()) {
        if x > m {
            up += p * (x - m);
        } else {
            down += p * (m - x);
        }
    }
    q * up - (1.0 - q) * down
}

/// Level-`q` expectile of `dist`.
pub fn expectile(dist: &Distribution, q: f64) -> Result<f64> {
    check_level(q)?;
    if dist.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    Ok(expectile_raw(dist.outcomes(), dist.probs(), q))
}

/// `R_q(X) = −e_q(X)`.
pub fn neg_expectile(dist: &Distribution, q: f64) -> Result<f64> {
    expectile(dist, q).map(|e| -e)
}

/// Expectile of outcomes/probabilities assumed valid and non-empty.
pub(crate) fn expectile_raw(outcomes: &[f64], probs: &[f64], q: f64) -> f64 {
    let mut atoms: Vec<(f64, f64)> = outcomes.iter().copied().zip(probs.iter().copied()).collect();
    atoms.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    // Merge ties so breakpoints are distinct.
    let mut values: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
    for (x, p) in atoms {
        match values.last() {
            Some(&last) if last == x => *weights.last_mut().unwrap() += p,
            _ => {
                values.push(x);
                weights.push(p);
            }
        }
    }
    let k = values.len();
    if k == 1 {
        return values[0];
    }

    // Prefix sums bracket the root cheaply; the final piece is re-summed
    // directly to avoid cancellation.
    let mut lo_p = Vec::with_capacity(k + 1);
    let mut lo_x = Vec::with_capacity(k + 1);
    lo_p.push(0.0);
    lo_x.push(0.0);
    for i in 0..k {
        lo_p.push(lo_p[i] + weights[i]);
        lo_x.push(lo_x[i] + weights[i] * values[i]);
    }
    let total_p = lo_p[k];
    let total_x = lo_x[k];
    let residual_at = |i: usize| {
        let v = values[i];
        let up = (total_x - lo_x[i + 1]) - v * (total_p - lo_p[i + 1]);
        let down = v * lo_p[i] - lo_x[i];
        q * up - (1.0 - q) * down
    };

    // f(v_0) > 0 > f(v_{k-1}) for non-degenerate data; find the largest
    // breakpoint with nonnegative residual.
    let (mut lo, mut hi) = (0usize, k - 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if residual_at(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if residual_at(lo) == 0.0 {
        return values[lo];
    }
    if residual_at(hi) == 0.0 {
        return values[hi];
    }

    // On (v_lo, v_hi) atoms ≤ v_lo are below m and atoms ≥ v_hi above it.
    let (mut pb, mut xb, mut pa, mut xa) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..=lo {
        pb += weights[i];
        xb += weights[i] * values[i];
    }
    for i in hi..k {
        pa += weights[i];
        xa += weights[i] * values[i];
    }
    let m = (q * xa + (1.0 - q) * xb) / (q * pa + (1.0 - q) * pb);
    m.clamp(values[lo], values[hi])
}

/// `Ω_B(X)`: `+∞` when there is upside but no shortfall, undefined when
/// `X = B` almost surely.
pub fn omega(dist: &Distribution, benchmark: f64) -> Result<OmegaValue> {
    if dist.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let mut up = 0.0;
    let mut down = 0.0;
    for (&x, &p) in dist.outcomes().iter().zip(dist.probs()) {
        if x > benchmark {
            up += p * (x - benchmark);
        } else {
            down += p * (benchmark - x);
        }
    }
    Ok(if down > 0.0 {
        ExtendedReal::Finite(up / down)
    } else if up > 0.0 {
        ExtendedReal::Infinite
    } else {
        ExtendedReal::Undefined
    })
}

/// CVaR of a loss distribution: the mean of the worst `1 − α` probability
/// mass, splitting the boundary atom.
pub fn cvar(loss: &Distribution, alpha: f64) -> Result<f64> {
    check_confidence(alpha)?;
    if loss.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let mut atoms: Vec<(f64, f64)> = loss
        .outcomes()
        .iter()
        .copied()
        .zip(loss.probs().iter().copied())
        .collect();
    atoms.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let tail = 1.0 - alpha;
    let mut remaining = tail;
    let mut acc = 0.0;
    for (l, p) in atoms {
        if remaining <= 0.0 {
            break;
        }
        let take = p.min(remaining);
        acc += take * l;
        remaining -= take;
    }
    Ok(acc / tail)
}

/// VaR of a loss distribution: `inf{ℓ : P(L ≤ ℓ) ≥ α}`.
///
/// The cumulative mass is compared with a `1e-12` allowance so that levels
/// hit exactly by the probabilities (e.g. `3 × 0.25 = 0.75`) are not missed
/// through round-off.
pub fn var(loss: &Distribution, alpha: f64) -> Result<f64> {
    check_confidence(alpha)?;
    if loss.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let mut atoms: Vec<(f64, f64)> = loss
        .outcomes()
        .iter()
        .copied()
        .zip(loss.probs().iter().copied())
        .collect();
    atoms.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut cum = 0.0;
    for &(l, p) in &atoms {
        cum += p;
        if cum >= alpha - 1e-12 {
            return Ok(l);
        }
    }
    Ok(atoms.last().unwrap().0)
}

/// `ρ_q(x) = R_q(ξᵀx)`.
pub fn rho(s: &ScenarioMatrix, x: &[f64], q: f64) -> Result<f64> {
    let d = portfolio_return_distribution(s, x)?;
    neg_expectile(&d, q)
}

/// `φ_B(x) = Ω_B(ξᵀx)`.
pub fn phi(s: &ScenarioMatrix, x: &[f64], benchmark: f64) -> Result<OmegaValue> {
    let d = portfolio_return_distribution(s, x)?;
    omega(&d, benchmark)
}

/// Scenario partition by the sign of `ξ^jᵀx + ρ_q(x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSets {
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
    pub zero: Vec<usize>,
}

impl IndexSets {
    pub fn is_differentiable(&self) -> bool {
        self.zero.is_empty()
    }
}

/// Relative band `τ = 1e-9·(1 + max_j |ξ^jᵀx|)` inside which `ξ^jᵀx + ρ` counts as zero.
pub fn tie_tolerance(outcomes: &[f64]) -> f64 {
    let scale = outcomes.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    1e-9 * (1.0 + scale)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Positive,
    Negative,
    Zero,
}

fn classify(outcomes: &[f64], rho: f64) -> Vec<Side> {
    let tol = tie_tolerance(outcomes);
    outcomes
        .iter()
        .map(|&x| {
            let v = x + rho;
            if v.abs() <= tol {
                Side::Zero
            } else if v > 0.0 {
                Side::Positive
            } else {
                Side::Negative
            }
        })
        .collect()
}

pub fn index_sets(s: &ScenarioMatrix, x: &[f64], q: f64) -> Result<IndexSets> {
    check_level(q)?;
    let outcomes = s.portfolio_returns(x)?;
    let rho = -expectile_raw(&outcomes, s.probs(), q);
    let mut sets = IndexSets {
        positive: Vec::new(),
        negative: Vec::new(),
        zero: Vec::new(),
    };
    for (j, side) in classify(&outcomes, rho).into_iter().enumerate() {
        match side {
            Side::Positive => sets.positive.push(j),
            Side::Negative => sets.negative.push(j),
            Side::Zero => sets.zero.push(j),
        }
    }
    Ok(sets)
}

/// A subgradient `g_t` of `ρ_q` at a portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgradientResult {
    pub vector: Vec<f64>,
    /// Mixing weight given to the zero set, in `[q, 1−q]`.
    pub t: f64,
    /// True when the zero set is empty and `ρ_q` is differentiable at `x`.
    pub is_gradient: bool,
    /// `ρ_q(x)` at the evaluation point.
    pub value: f64,
}

/// Subgradient of `ρ_q` at `x` with zero-set weight `t ∈ [q, 1−q]`:
///
/// ```text
/// g_t = −(q·Σ_P p_j ξ^j + (1−q)·Σ_N p_j ξ^j + t·Σ_Z p_j ξ^j)
///        / (q·Σ_P p_j + (1−q)·Σ_N p_j + t·Σ_Z p_j)
/// ```
pub fn subgradient(s: &ScenarioMatrix, x: &[f64], q: f64, t: f64) -> Result<SubgradientResult> {
    check_mixing(q, t)?;
    let outcomes = s.portfolio_returns(x)?;
    let value = -expectile_raw(&outcomes, s.probs(), q);
    let sides = classify(&outcomes, value);
    if !sides.contains(&Side::Zero) {
        let vector = gradient_from_sides(s, &sides, q);
        return Ok(SubgradientResult {
            vector,
            t,
            is_gradient: true,
            value,
        });
    }
    let n = s.n_assets();
    let mut num = vec![0.0; n];
    let mut den = 0.0;
    for ((row, &p), side) in s.rows().zip(s.probs()).zip(&sides) {
        let w = p * match side {
            Side::Positive => q,
            Side::Negative => 1.0 - q,
            Side::Zero => t,
        };
        den += w;
        for (acc, &r) in num.iter_mut().zip(row) {
            *acc += w * r;
        }
    }
    Ok(SubgradientResult {
        vector: num.into_iter().map(|v| -v / den).collect(),
        t,
        is_gradient: false,
        value,
    })
}

/// Closed-form partial derivatives valid when no scenario is tied:
/// `∂ρ_q/∂x_i = −(q·Σ_P p_j ξ^j_i + (1−q)·Σ_N p_j ξ^j_i) / (q·Σ_P p_j + (1−q)·Σ_N p_j)`.
fn gradient_from_sides(s: &ScenarioMatrix, sides: &[Side], q: f64) -> Vec<f64> {
    let n = s.n_assets();
    let mut pos = vec![0.0; n];
    let mut neg = vec![0.0; n];
    let (mut pos_p, mut neg_p) = (0.0, 0.0);
    for ((row, &p), side) in s.rows().zip(s.probs()).zip(sides) {
        let (acc, mass) = match side {
            Side::Positive => (&mut pos, &mut pos_p),
            Side::Negative => (&mut neg, &mut neg_p),
            Side::Zero => continue,
        };
        *mass += p;
        for (a, &r) in acc.iter_mut().zip(row) {
            *a += p * r;
        }
    }
    let den = q * pos_p + (1.0 - q) * neg_p;
    pos.iter()
        .zip(&neg)
        .map(|(a, b)| -(q * a + (1.0 - q) * b) / den)
        .collect()
}

/// The gradient of `ρ_q` at `x`, or `None` when some scenario is tied
/// (`Z_x ≠ ∅`) and `ρ_q` may not be differentiable there.
pub fn gradient(s: &ScenarioMatrix, x: &[f64], q: f64) -> Result<Option<Vec<f64>>> {
    check_level(q)?;
    let outcomes = s.portfolio_returns(x)?;
    let value = -expectile_raw(&outcomes, s.probs(), q);
    let sides = classify(&outcomes, value);
    Ok((!sides.contains(&Side::Zero)).then(|| gradient_from_sides(s, &sides, q)))
}

/// Linear model of `ρ_q` around `x` built from the index sets at `x`,
/// evaluated at `y`. When `Z_x = ∅` it coincides with `ρ_q(y)` for `y`
/// close enough to `x`.
pub fn local_linear_value(s: &ScenarioMatrix, x: &[f64], q: f64, y: &[f64]) -> Result<Option<f64>> {
    Ok(gradient(s, x, q)?.map(|g| dot(&g, y)))
}

/// Dual density `Q_t = ν_t(X) / E[ν_t(X)]` with
/// `ν_t = q·1{X>e_q} + (1−q)·1{X<e_q} + t·1{X=e_q}`.
pub fn dual_density(dist: &Distribution, q: f64, t: f64) -> Result<Vec<f64>> {
    check_mixing(q, t)?;
    if dist.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let e = expectile_raw(dist.outcomes(), dist.probs(), q);
    let nu: Vec<f64> = classify(dist.outcomes(), -e)
        .into_iter()
        .map(|side| match side {
            Side::Positive => q,
            Side::Negative => 1.0 - q,
            Side::Zero => t,
        })
        .collect();
    let mean_nu = dot(&nu, dist.probs());
    Ok(nu.into_iter().map(|v| v / mean_nu).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(xs: &[f64]) -> Distribution {
        Distribution::uniform(xs.to_vec()).unwrap()
    }

    fn example() -> ScenarioMatrix {
        ScenarioMatrix::new(
            vec![vec![0.0, 0.0], vec![1.0 / 6.0, 1.0 / 3.0], vec![1.0, 1.0]],
            None,
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn expectile_examples() {
        assert!((expectile(&uniform(&[0.0, 0.5, 2.0]), 0.25).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(expectile(&uniform(&[0.7, 0.7, 0.7]), 0.1).unwrap(), 0.7);
        assert!((expectile(&uniform(&[0.0, 1.0]), 0.25).unwrap() - 0.25).abs() < 1e-15);
        let d = uniform(&[0.3, -1.2, 4.0, 0.0, 2.5]);
        assert!((expectile(&d, 0.5).unwrap() - d.mean()).abs() < 1e-15);
    }

    #[test]
    fn expectile_domain() {
        let d = uniform(&[1.0, 2.0]);
        assert!(expectile(&d, 0.0).is_err());
        assert!(expectile(&d, 1.0).is_err());
        assert!(expectile(&d, f64::NAN).is_err());
    }

    #[test]
    fn neg_expectile_examples() {
        assert!((neg_expectile(&uniform(&[0.0, 0.5, 2.0]), 0.25).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(neg_expectile(&uniform(&[-3.0]), 0.2).unwrap(), 3.0);
        assert!((neg_expectile(&uniform(&[0.0, 1.0]), 0.25).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega(&uniform(&[0.0, 1.0]), 0.25).unwrap(), ExtendedReal::Finite(3.0));
        assert_eq!(omega(&uniform(&[1.0, 2.0]), 0.5).unwrap(), ExtendedReal::Infinite);
        assert_eq!(omega(&uniform(&[0.5, 0.5]), 0.5).unwrap(), ExtendedReal::Undefined);
    }

    #[test]
    fn cvar_examples() {
        let l = uniform(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(cvar(&l, 0.75).unwrap(), 4.0);
        assert_eq!(cvar(&l, 0.5).unwrap(), 3.5);
        assert!((cvar(&uniform(&[2.5; 3]), 0.9).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn var_examples() {
        let l = uniform(&[4.0, 2.0, 1.0, 3.0]);
        assert_eq!(var(&l, 0.75).unwrap(), 3.0);
        assert_eq!(var(&l, 0.9).unwrap(), 4.0);
        assert_eq!(var(&uniform(&[-0.2; 5]), 0.3).unwrap(), -0.2);
    }

    #[test]
    fn index_sets_worked_example() {
        let sets = index_sets(&example(), &[1.0, 1.0], 0.25).unwrap();
        assert_eq!(sets.positive, vec![2]);
        assert_eq!(sets.negative, vec![0]);
        assert_eq!(sets.zero, vec![1]);
    }

    #[test]
    fn index_sets_constant_return() {
        let s = ScenarioMatrix::new(vec![vec![0.1, 0.3], vec![0.3, 0.1]], None, vec!["a".into(), "b".into()]).unwrap();
        let sets = index_sets(&s, &[0.5, 0.5], 0.2).unwrap();
        assert_eq!(sets.zero, vec![0, 1]);
    }

    #[test]
    fn index_sets_two_atoms() {
        let s = ScenarioMatrix::new(vec![vec![0.0], vec![1.0]], None, vec!["a".into()]).unwrap();
        let sets = index_sets(&s, &[1.0], 0.25).unwrap();
        assert_eq!(sets.positive, vec![1]);
        assert_eq!(sets.negative, vec![0]);
        assert!(sets.zero.is_empty());
    }

    #[test]
    fn subgradient_worked_example() {
        let s = example();
        let lo = subgradient(&s, &[1.0, 1.0], 0.25, 0.25).unwrap();
        let hi = subgradient(&s, &[1.0, 1.0], 0.25, 0.75).unwrap();
        assert!((lo.vector[0] + 7.0 / 30.0).abs() < 1e-12);
        assert!((hi.vector[0] + 3.0 / 14.0).abs() < 1e-12);
        assert!(!lo.is_gradient);
        assert!((lo.value + 0.5).abs() < 1e-12);
    }

    #[test]
    fn subgradient_constant_return_is_negative_mean() {
        let s = ScenarioMatrix::new(
            vec![vec![0.1, 0.3], vec![0.3, 0.1], vec![0.2, 0.2]],
            Some(vec![0.2, 0.3, 0.5]),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let mu = s.mean_returns();
        for t in [0.1, 0.5, 0.9] {
            let g = subgradient(&s, &[0.5, 0.5], 0.1, t).unwrap();
            for (gi, mi) in g.vector.iter().zip(&mu) {
                assert!((gi + mi).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn subgradient_parameter_checks() {
        let s = example();
        assert!(subgradient(&s, &[1.0, 1.0], 0.25, 0.2).is_err());
        assert!(subgradient(&s, &[1.0, 1.0], 0.25, 0.8).is_err());
        assert!(subgradient(&s, &[1.0, 1.0], 0.5, 0.5).is_err());
        assert!(subgradient(&s, &[1.0], 0.25, 0.25).is_err());
    }

    #[test]
    fn dual_density_examples() {
        let q = dual_density(&uniform(&[0.0, 0.5, 2.0]), 0.25, 0.25).unwrap();
        for (a, b) in q.iter().zip([9.0 / 5.0, 3.0 / 5.0, 3.0 / 5.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(dual_density(&uniform(&[0.4; 4]), 0.3, 0.5).unwrap(), vec![1.0; 4]);
        for t in [0.25, 0.5, 0.75] {
            let q = dual_density(&uniform(&[0.0, 1.0]), 0.25, t).unwrap();
            assert!((q[0] - 1.5).abs() < 1e-12 && (q[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_none_at_kink() {
        assert!(gradient(&example(), &[1.0, 1.0], 0.25).unwrap().is_none());
        assert!(gradient(&example(), &[1.0, 0.3], 0.25).unwrap().is_some());
    }

    #[test]
    fn risk_spec_dispatch() {
        let d = uniform(&[-1.0, -2.0, -3.0, -4.0]);
        assert_eq!(
            RiskSpec::Cvar { alpha: 0.75 }.evaluate(&d).unwrap(),
            ExtendedReal::Finite(4.0)
        );
        assert_eq!(
            RiskSpec::Var { alpha: 0.75 }.evaluate(&d).unwrap(),
            ExtendedReal::Finite(3.0)
        );
        assert!(RiskSpec::NegExpectile { q: 0.5 }.validate().is_ok());
        assert!(RiskSpec::NegExpectile { q: 0.5 }.validate_for_optimization().is_err());
    }
}
