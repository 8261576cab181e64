//! Mean-field machinery for the activation process.
//!
//! Under the mean-field approximation the density ρ_t of active vertices is
//! a Markov chain whose transition maps are
//!
//!   f⁺(x) = E_W[ P(Bin(W+4, x) ≥ k−1) ]   (an active vertex stays active;
//!                                          its own activity counts)
//!   f⁻(x) = E_W[ P(Bin(W+4, x) ≥ k) ]     (an inactive vertex activates)
//!
//! where W is the long-edge degree. The one-step mean is
//! f(x) = x·f⁺(x) + (1−x)·f⁻(x) = E_W[ P(Bin(W+5, x) ≥ k) ], and with the
//! Poisson degree law Po(λ) this becomes f̄_k(x), which has closed forms for
//! k ≤ 3. The critical probability p_c(λ) is the unique interior fixed
//! point of f̄_k for k = 2, 3, and 0 for k = 0, 1.

use crate::analysis::exact_long_degree_distribution_auto;
use crate::error::{Error, Result};
use crate::torus::TorusParams;
use serde::{Deserialize, Serialize};

/// Truncation tail for the Poisson-weighted series.
pub const SERIES_TOL: f64 = 1e-12;

/// Refinement target for interior fixed points: |f̄(x) − x| below this.
pub const ROOT_TOL: f64 = 1e-12;

/// Dead band around |f̄′| = 1 inside which a fixed point is reported as
/// marginal rather than silently classified.
pub const STABILITY_BAND: f64 = 1e-8;

const GRID_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeBackendKind {
    Poisson,
    Exact,
}

/// Degree backend plus threshold: everything the transition maps need.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldModel {
    k: u32,
    lambda: f64,
    backend: DegreeBackendKind,
    degree_pmf: Vec<f64>,
}

impl MeanFieldModel {
    /// Poissonized model with long-degree law Po(λ).
    pub fn poisson(k: u32, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 || lambda > 700.0 {
            return Err(Error::InvalidParameter(format!(
                "Poisson rate must lie in (0, 700] (got {lambda})"
            )));
        }
        Ok(Self {
            k,
            lambda,
            backend: DegreeBackendKind::Poisson,
            degree_pmf: poisson_weights(lambda, SERIES_TOL),
        })
    }

    /// Exact finite-N model: long-degree law computed by class-binomial
    /// convolution for the given torus parameters.
    pub fn exact(k: u32, params: &TorusParams) -> Result<Self> {
        let dist = exact_long_degree_distribution_auto(params);
        let mass = dist.total_mass();
        let degree_pmf = dist.pmf().iter().map(|p| p / mass).collect();
        Ok(Self {
            k,
            lambda: params.lambda(),
            backend: DegreeBackendKind::Exact,
            degree_pmf,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// λ = 4c·ln 2 (the Poisson rate, or the rate the exact law approaches).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn backend(&self) -> DegreeBackendKind {
        self.backend
    }

    pub fn degree_pmf(&self) -> &[f64] {
        &self.degree_pmf
    }
}

/// Poisson weights truncated once the tail drops below `tol`, then
/// renormalized so mixture identities like f⁺(1) = 1 hold exactly.
fn poisson_weights(lambda: f64, tol: f64) -> Vec<f64> {
    let mut w = Vec::new();
    let mut term = (-lambda).exp();
    let mut cum = 0.0;
    let mut n = 0usize;
    loop {
        w.push(term);
        cum += term;
        if 1.0 - cum < tol && n as f64 > lambda {
            break;
        }
        if n > 100_000 {
            break;
        }
        term *= lambda / (n as f64 + 1.0);
        n += 1;
    }
    for wi in &mut w {
        *wi /= cum;
    }
    w
}

/// P(Bin(n, x) ≥ j). Stable for the whole range of x: for x > 1/2 the
/// complementary lower tail of Bin(n, 1−x) is summed instead.
fn binom_sf(n: u32, x: f64, j: i64) -> f64 {
    if j <= 0 {
        return 1.0;
    }
    if j > n as i64 {
        return 0.0;
    }
    if x <= 0.0 {
        return 0.0; // j >= 1 needs at least one success
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x <= 0.5 {
        // sum C(n,i) x^i (1-x)^{n-i} for i = j..=n
        let ratio = x / (1.0 - x);
        let mut term = (1.0 - x).powi(n as i32);
        let mut acc = 0.0;
        for i in 0..=n as i64 {
            if i >= j {
                acc += term;
            }
            term *= (n as i64 - i) as f64 / (i as f64 + 1.0) * ratio;
        }
        acc.min(1.0)
    } else {
        // P(Bin(n,x) >= j) = P(Bin(n,1-x) <= n-j)
        let q = 1.0 - x;
        let ratio = q / x;
        let mut term = x.powi(n as i32);
        let mut acc = 0.0;
        for i in 0..=(n as i64 - j) {
            acc += term;
            term *= (n as i64 - i) as f64 / (i as f64 + 1.0) * ratio;
        }
        acc.min(1.0)
    }
}

fn assert_unit(x: f64) {
    assert!(
        (0.0..=1.0).contains(&x),
        "density must lie in [0,1] (got {x})"
    );
}

fn mixture_sf(pmf: &[f64], x: f64, j: i64) -> f64 {
    // every term is 1 when the threshold is vacuous (j ≤ 0) or when x = 1
    // and even the smallest neighborhood (4 short edges) clears it
    if j <= 0 || (x >= 1.0 && j <= 4) {
        return 1.0;
    }
    pmf.iter()
        .enumerate()
        .map(|(w, &pw)| pw * binom_sf(w as u32 + 4, x, j))
        .sum::<f64>()
        .min(1.0)
}

/// Probability that an active vertex is active at the next step; the vertex
/// itself counts toward the threshold.
pub fn f_plus(x: f64, model: &MeanFieldModel) -> f64 {
    assert_unit(x);
    mixture_sf(&model.degree_pmf, x, model.k as i64 - 1)
}

/// Probability that an inactive vertex activates at the next step.
pub fn f_minus(x: f64, model: &MeanFieldModel) -> f64 {
    assert_unit(x);
    mixture_sf(&model.degree_pmf, x, model.k as i64)
}

/// One-step conditional mean of the density: f(x) = x·f⁺(x) + (1−x)·f⁻(x).
pub fn f_mean(x: f64, model: &MeanFieldModel) -> f64 {
    x * f_plus(x, model) + (1.0 - x) * f_minus(x, model)
}

/// Which algebraic form of the one-step variance g(x) to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceForm {
    /// x·f⁺(1−f⁺) + (1−x)·f⁻(1−f⁻): the sum of the two binomial variances.
    BinomialDerived,
    /// x·f⁺(1−f⁺) + (1−x)·f⁻(1−f⁺): second factor uses f⁺ in both terms.
    /// Kept for comparison; the derived form is the default.
    AsPrinted,
}

/// One-step conditional variance of the density is g(x)/N².
pub fn g_var(x: f64, model: &MeanFieldModel) -> f64 {
    g_var_with(x, model, VarianceForm::BinomialDerived)
}

pub fn g_var_with(x: f64, model: &MeanFieldModel, form: VarianceForm) -> f64 {
    let fp = f_plus(x, model);
    let fm = f_minus(x, model);
    match form {
        VarianceForm::BinomialDerived => x * fp * (1.0 - fp) + (1.0 - x) * fm * (1.0 - fm),
        VarianceForm::AsPrinted => x * fp * (1.0 - fp) + (1.0 - x) * fm * (1.0 - fp),
    }
}

fn validate_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || !(0.0..=700.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in [0, 700] (got {lambda})"
        )));
    }
    Ok(())
}

fn validate_x(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!(
            "x must lie in [0,1] (got {x})"
        )));
    }
    Ok(())
}

/// The Poissonized one-step mean map f̄_k in closed form, k ∈ {0,1,2,3}.
/// λ = 0 is the degenerate (bare torus) limit, where every closed
/// neighborhood has exactly 5 vertices.
pub fn fbar_closed(x: f64, lambda: f64, k: u32) -> Result<f64> {
    validate_x(x)?;
    validate_lambda(lambda)?;
    let q = 1.0 - x;
    let e = (-lambda * x).exp();
    let v = match k {
        0 => 1.0,
        1 => 1.0 - e * q.powi(5),
        2 => 1.0 - e * (q.powi(5) + 5.0 * x * q.powi(4) + lambda * x * q.powi(5)),
        3 => {
            1.0 - e
                * (q.powi(5)
                    + 5.0 * x * q.powi(4)
                    + lambda * x * q.powi(5)
                    + 0.5 * lambda * lambda * x * x * q.powi(5)
                    + 5.0 * lambda * x * x * q.powi(4)
                    + 10.0 * x * x * q.powi(3))
        }
        _ => {
            return Err(Error::InvalidParameter(format!(
                "closed forms exist for k ≤ 3 (got k={k}); use fbar_generic"
            )))
        }
    };
    Ok(v)
}

/// f̄_k for arbitrary k ≥ 0 as the truncated Poisson-weighted series
/// Σ_n Po(λ)_n · P(Bin(n+5, x) ≥ k). Truncation tail < `tol`
/// (floored at 1e-14).
pub fn fbar_generic(x: f64, lambda: f64, k: u32, tol: f64) -> Result<f64> {
    validate_x(x)?;
    validate_lambda(lambda)?;
    let tol = tol.max(1e-14);
    if k == 0 || (x >= 1.0 && k <= 5) {
        return Ok(1.0); // smallest closed neighborhood has 5 vertices
    }
    if lambda == 0.0 {
        return Ok(binom_sf(5, x, k as i64));
    }
    let weights = poisson_weights(lambda, tol);
    Ok(weights
        .iter()
        .enumerate()
        .map(|(n, &pn)| pn * binom_sf(n as u32 + 5, x, k as i64))
        .sum::<f64>()
        .min(1.0))
}

/// Derivative of f̄_k. Differentiating the binomial tail gives, per
/// neighborhood size m = n+5, the closed form k·C(m,k)·x^{k−1}(1−x)^{m−k};
/// the Poisson mixture of those is summed directly.
pub fn fbar_derivative(x: f64, lambda: f64, k: u32) -> Result<f64> {
    validate_x(x)?;
    validate_lambda(lambda)?;
    if k == 0 {
        return Ok(0.0);
    }
    let tail_term = |m: u32| -> f64 {
        if k > m {
            return 0.0;
        }
        let mut choose = 1.0;
        for i in 0..k {
            choose *= (m - i) as f64 / (i as f64 + 1.0);
        }
        k as f64 * choose * x.powi(k as i32 - 1) * (1.0 - x).powi((m - k) as i32)
    };
    if lambda == 0.0 {
        return Ok(tail_term(5));
    }
    let weights = poisson_weights(lambda, 1e-14);
    Ok(weights
        .iter()
        .enumerate()
        .map(|(n, &pn)| pn * tail_term(n as u32 + 5))
        .sum())
}

/// Per-count activation probabilities for the probabilistic rule: an active
/// vertex with i active vertices in its closed neighborhood (itself
/// included) stays active with probability `p_plus[i]`; an inactive vertex
/// with i active neighbors activates with probability `p_minus[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedRule {
    p_plus: Vec<f64>,
    p_minus: Vec<f64>,
}

impl GeneralizedRule {
    pub fn new(p_plus: Vec<f64>, p_minus: Vec<f64>) -> Result<Self> {
        for (name, v) in [("p_plus", &p_plus), ("p_minus", &p_minus)] {
            if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidParameter(format!(
                    "{name} entries must lie in [0,1]"
                )));
            }
        }
        Ok(Self { p_plus, p_minus })
    }

    /// The deterministic k-rule as a generalized rule: indicator of
    /// i ≥ k active in the closed neighborhood, on both maps.
    pub fn threshold(k: u32, len: usize) -> Self {
        let ind: Vec<f64> = (0..len)
            .map(|i| if i as u32 >= k { 1.0 } else { 0.0 })
            .collect();
        Self {
            p_plus: ind.clone(),
            p_minus: ind,
        }
    }

    pub fn p_plus(&self) -> &[f64] {
        &self.p_plus
    }

    pub fn p_minus(&self) -> &[f64] {
        &self.p_minus
    }
}

/// Binomial(n, x) PMF over 0..=n.
fn binom_pmf_vec(n: u32, x: f64) -> Vec<f64> {
    let n_us = n as usize;
    if x <= 0.0 {
        let mut v = vec![0.0; n_us + 1];
        v[0] = 1.0;
        return v;
    }
    if x >= 1.0 {
        let mut v = vec![0.0; n_us + 1];
        v[n_us] = 1.0;
        return v;
    }
    let ratio = x / (1.0 - x);
    let mut out = Vec::with_capacity(n_us + 1);
    let mut term = (1.0 - x).powi(n as i32);
    for i in 0..=n_us {
        out.push(term);
        term *= (n - i as u32) as f64 / (i as f64 + 1.0) * ratio;
    }
    out
}

/// The probabilistic-rule transition pair (f⁺, f⁻) with the Poisson degree
/// backend. Rule vectors must cover the series truncation support.
pub fn fbar_generalized(
    x: f64,
    lambda: f64,
    rule: &GeneralizedRule,
    tol: f64,
) -> Result<(f64, f64)> {
    validate_x(x)?;
    validate_lambda(lambda)?;
    let tol = tol.max(1e-14);
    let weights = if lambda == 0.0 {
        vec![1.0]
    } else {
        poisson_weights(lambda, tol)
    };
    let w_max = weights.len() - 1;
    // f+ indexes closed-neighborhood counts up to (w_max+4)+1, f- up to w_max+4
    let needed_plus = w_max + 6;
    let needed_minus = w_max + 5;
    if rule.p_plus.len() < needed_plus {
        return Err(Error::RuleTooShort {
            needed: needed_plus,
            got: rule.p_plus.len(),
        });
    }
    if rule.p_minus.len() < needed_minus {
        return Err(Error::RuleTooShort {
            needed: needed_minus,
            got: rule.p_minus.len(),
        });
    }
    let mut fp = 0.0;
    let mut fm = 0.0;
    for (w, &pw) in weights.iter().enumerate() {
        let n = w as u32 + 4; // open neighborhood size
        let pmf = binom_pmf_vec(n, x);
        let mut sp = 0.0;
        let mut sm = 0.0;
        for (j, &bj) in pmf.iter().enumerate() {
            sp += rule.p_plus[j + 1] * bj; // self is active: closed count j+1
            sm += rule.p_minus[j] * bj;
        }
        fp += pw * sp;
        fm += pw * sm;
    }
    Ok((fp.min(1.0), fm.min(1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    /// |f̄′| within [`STABILITY_BAND`] of 1; never expected here, reported
    /// instead of being silently resolved.
    Marginal,
}

/// A fixed point of f̄_k with its derivative and stability label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub x: f64,
    pub stability: Stability,
    pub derivative: f64,
}

fn classify(derivative: f64) -> Stability {
    let mag = derivative.abs();
    if mag < 1.0 - STABILITY_BAND {
        Stability::Stable
    } else if mag > 1.0 + STABILITY_BAND {
        Stability::Unstable
    } else {
        Stability::Marginal
    }
}

fn fixed_point_at(x: f64, lambda: f64, k: u32) -> Result<FixedPoint> {
    let derivative = fbar_derivative(x, lambda, k)?;
    Ok(FixedPoint {
        x,
        stability: classify(derivative),
        derivative,
    })
}

/// Locate the unique interior root of f̄_k(x) − x for k = 2, 3 by grid
/// bracketing and bisection. Fails loudly if the scan does not see exactly
/// one sign change: uniqueness is guaranteed, so anything else is a bug or
/// numeric pathology, not something to resolve silently.
fn interior_root(lambda: f64, k: u32) -> Result<f64> {
    let g = |x: f64| fbar_closed(x, lambda, k).map(|v| v - x);
    let step = 1.0 / GRID_POINTS as f64;
    // the uniform grid, padded with near-boundary points so a root pushed
    // toward 0 (large λ) or 1 still gets bracketed
    let grid = std::iter::once(1e-9)
        .chain((1..GRID_POINTS).map(|i| i as f64 * step))
        .chain(std::iter::once(1.0 - 1e-9));
    let mut brackets = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for xi in grid {
        let gi = g(xi)?;
        if let Some((px, pg)) = prev {
            if pg == 0.0 {
                brackets.push((px, px));
            } else if pg * gi < 0.0 {
                brackets.push((px, xi));
            }
        }
        prev = Some((xi, gi));
    }
    if let Some((px, pg)) = prev {
        if pg == 0.0 {
            brackets.push((px, px));
        }
    }
    if brackets.len() != 1 {
        return Err(Error::Bracketing {
            lambda,
            k,
            sign_changes: brackets.len(),
        });
    }
    let (mut a, mut b) = brackets[0];
    if a == b {
        return Ok(a);
    }
    let mut ga = g(a)?;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let gm = g(m)?;
        if gm.abs() < ROOT_TOL {
            return Ok(m);
        }
        if ga * gm < 0.0 {
            b = m;
        } else {
            a = m;
            ga = gm;
        }
        if (b - a) < f64::EPSILON * a.max(1e-3) {
            break;
        }
    }
    let m = 0.5 * (a + b);
    if g(m)?.abs() < ROOT_TOL {
        Ok(m)
    } else {
        Err(Error::Bracketing {
            lambda,
            k,
            sign_changes: 1,
        })
    }
}

/// All fixed points of f̄_k on the unit interval, with stability labels.
/// k=0: {1}. k=1: {0, 1}. k=2,3: {0, x_k(λ), 1}.
pub fn find_fixed_points(lambda: f64, k: u32) -> Result<Vec<FixedPoint>> {
    validate_lambda(lambda)?;
    match k {
        0 => Ok(vec![fixed_point_at(1.0, lambda, k)?]),
        1 => Ok(vec![
            fixed_point_at(0.0, lambda, k)?,
            fixed_point_at(1.0, lambda, k)?,
        ]),
        2 | 3 => {
            let x = interior_root(lambda, k)?;
            Ok(vec![
                fixed_point_at(0.0, lambda, k)?,
                fixed_point_at(x, lambda, k)?,
                fixed_point_at(1.0, lambda, k)?,
            ])
        }
        _ => Err(Error::InvalidParameter(format!(
            "fixed-point structure is established for k ≤ 3 (got k={k})"
        ))),
    }
}

/// Critical probability: 0 for k ∈ {0,1}; the interior fixed point x_k(λ)
/// for k ∈ {2,3}. λ = 0 evaluates the limiting polynomial form.
pub fn p_c(lambda: f64, k: u32) -> Result<f64> {
    validate_lambda(lambda)?;
    match k {
        0 | 1 => Ok(0.0),
        2 | 3 => interior_root(lambda, k),
        _ => Err(Error::InvalidParameter(format!(
            "p_c is defined for k ≤ 3 (got k={k})"
        ))),
    }
}

// F_k(λ, x) = e^{λx} − h_k(x): the fixed-point equations for k = 2, 3
// after dividing out the (1−x) factor. x_k(λ) is the root of F_k = 0.

fn h2(x: f64, lambda: f64) -> f64 {
    (1.0 - x).powi(3) * (1.0 + 4.0 * x + lambda * x - lambda * x * x)
}

fn dh2_dx(x: f64, lambda: f64) -> f64 {
    -3.0 * (1.0 - x).powi(2) * (1.0 + 4.0 * x + lambda * x - lambda * x * x)
        + (1.0 - x).powi(3) * (4.0 + lambda - 2.0 * lambda * x)
}

fn q3(x: f64, lambda: f64) -> f64 {
    2.0 + (6.0 + 2.0 * lambda) * x + (12.0 + 6.0 * lambda + lambda * lambda) * x * x
        - (8.0 * lambda + 2.0 * lambda * lambda) * x.powi(3)
        + lambda * lambda * x.powi(4)
}

fn dq3_dx(x: f64, lambda: f64) -> f64 {
    (6.0 + 2.0 * lambda) + 2.0 * (12.0 + 6.0 * lambda + lambda * lambda) * x
        - 3.0 * (8.0 * lambda + 2.0 * lambda * lambda) * x * x
        + 4.0 * lambda * lambda * x.powi(3)
}

/// dp_c/dλ by the implicit function theorem on F_k(λ, x_k(λ)) = 0:
/// dx_k/dλ = −(∂F_k/∂λ)/(∂F_k/∂x). Always ≤ 0.
pub fn dpc_dlambda(lambda: f64, k: u32) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "dpc_dlambda needs lambda > 0 (got {lambda})"
        )));
    }
    if k != 2 && k != 3 {
        return Err(Error::InvalidParameter(format!(
            "dpc_dlambda is defined for k ∈ {{2,3}} (got k={k})"
        )));
    }
    let x = interior_root(lambda, k)?;
    let elx = (lambda * x).exp();
    let (df_dlambda, df_dx) = match k {
        2 => (
            x * (elx - (1.0 - x).powi(4)),
            lambda * elx - dh2_dx(x, lambda),
        ),
        _ => {
            // ∂F₃/∂λ collapses to x·F₂(λ, x)
            let f2 = elx - h2(x, lambda);
            let dh3 = -(1.0 - x) * q3(x, lambda) + 0.5 * (1.0 - x).powi(2) * dq3_dx(x, lambda);
            (x * f2, lambda * elx - dh3)
        }
    };
    Ok(-df_dlambda / df_dx)
}

/// p_c over a grid of λ values (all must be finite and ≥ 0).
pub fn pc_curve(lambda_grid: &[f64], k: u32) -> Result<Vec<(f64, f64)>> {
    lambda_grid
        .iter()
        .map(|&lam| {
            if !lam.is_finite() || lam < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "lambda grid entries must be ≥ 0 (got {lam})"
                )));
            }
            Ok((lam, p_c(lam, k)?))
        })
        .collect()
}
