//! Variance, the Laplace-transform functional `σ_f²`, and certified
//! lower/upper estimates of the spread constant `s²(μ)` and the subgaussian
//! constant `σ²(μ)` of a finite metric probability space.
//!
//! Lower bounds come from explicit witnesses (every reported lower value is
//! attained by the returned field); upper bounds are the conservative
//! diameter bound `diam²/4`, which holds for both constants by Popoviciu's
//! and Hoeffding's inequalities.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, golden_section_max};
use crate::orlicz::{psi_norm, weighted_mean, ScalarField};
use crate::report::CheckReport;
use crate::space::{FiniteMetricProbabilitySpace, SubsetMask};

/// `3 · 2¹² · e²`, the explicit constant in the restriction bound for `σ²`.
pub const RESTRICTION_SUBGAUSSIAN_CONSTANT: f64 = 3.0 * 4096.0 * std::f64::consts::E * std::f64::consts::E;

/// Largest space handled by the ascent-based estimators (dense distances).
pub const ESTIMATE_SIZE_LIMIT: usize = 4096;

/// What a lower bound's witness is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum Witness {
    Field(Vec<f64>),
    Measure(Vec<f64>),
    None,
}

/// Certified interval `[lower, upper]` for a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub lower: f64,
    pub upper: f64,
    pub witness: Witness,
    pub method: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimateOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { restarts: 64, seed: 0, max_sweeps: 50 }
    }
}

/// `∫ (f − m)² dμ` by two compensated passes.
pub fn variance(values: &[f64], weights: &[f64]) -> f64 {
    let m = weighted_mean(values, weights);
    compensated_sum(values.iter().zip(weights).map(|(v, w)| w * (v - m) * (v - m)))
}

/// Result of [`sigma_f_detailed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaF {
    /// `sup_{t≠0} (2/t²) log ∫ e^{t(f−m)} dμ`.
    pub value: f64,
    /// The removed mean `m`.
    pub mean: f64,
    /// `Var(f)`, the `t → 0` limit of the ratio.
    pub variance: f64,
    /// Maximizing `t`, or `None` when the limit at 0 dominates.
    pub t_star: Option<f64>,
}

pub fn sigma_f(values: &[f64], weights: &[f64]) -> f64 {
    sigma_f_detailed(values, weights).value
}

/// `σ_f²` of the centered field. The ratio has a removable singularity at
/// `t = 0` with limit `Var(f)`, substituted analytically; away from 0 each
/// sign of `t` is scanned in half-octaves from `10⁻⁴/‖f − m‖₂` until the ratio
/// has fallen for three octaves past the point where it must decay, and the
/// best cell is refined by golden section.
pub fn sigma_f_detailed(values: &[f64], weights: &[f64]) -> SigmaF {
    let mean = weighted_mean(values, weights);
    let (g, w): (Vec<f64>, Vec<f64>) =
        values.iter().zip(weights).filter(|(_, &w)| w > 0.0).map(|(&v, &w)| (v - mean, w)).unzip();
    let var = compensated_sum(g.iter().zip(&w).map(|(x, w)| w * x * x));
    if var <= 0.0 {
        return SigmaF { value: 0.0, mean, variance: 0.0, t_star: None };
    }
    let range = g.iter().copied().fold(f64::NEG_INFINITY, f64::max) - g.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs = g.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let w_min = w.iter().copied().fold(1.0, f64::min);
    let t_min = 1e-4 / var.sqrt();
    let t_decay = (50.0f64).max(4.0 * (1.0 / w_min).ln()) / range;

    let log_mgf = |t: f64| -> f64 {
        if t.abs() * max_abs <= 1.0 {
            compensated_sum(g.iter().zip(&w).map(|(x, w)| w * (t * x).exp_m1())).ln_1p()
        } else {
            let top = g.iter().map(|x| t * x).fold(f64::NEG_INFINITY, f64::max);
            top + compensated_sum(g.iter().zip(&w).map(|(x, w)| w * (t * x - top).exp())).ln()
        }
    };
    let ratio = |t: f64| 2.0 * log_mgf(t) / (t * t);

    let mut best = (var, None);
    for sign in [1.0, -1.0] {
        let mut ts = Vec::new();
        let mut rs = Vec::new();
        let mut t = t_min;
        let step = std::f64::consts::SQRT_2;
        for _ in 0..400 {
            ts.push(t);
            rs.push(ratio(sign * t));
            let n = rs.len();
            if t >= t_decay && n > 6 && (n - 6..n).all(|i| rs[i] < rs[i - 1]) {
                break;
            }
            t *= step;
        }
        let (bi, &bv) = rs
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
        let (mut t_best, mut v_best) = (ts[bi], bv);
        if bi > 0 {
            let lo = ts[bi - 1];
            let hi = ts[(bi + 1).min(ts.len() - 1)];
            let (t, v) = golden_section_max(|t| ratio(sign * t), lo, hi, 1e-10);
            if v > v_best {
                t_best = t;
                v_best = v;
            }
        }
        if v_best > best.0 {
            best = (v_best, Some(sign * t_best));
        }
    }
    SigmaF { value: best.0, mean, variance: var, t_star: best.1 }
}

// ----------------------------------------------------------------------------
// Ascent over 1-Lipschitz fields
// ----------------------------------------------------------------------------

struct Ascent<'a> {
    k: usize,
    d: &'a [f64],
    diam: f64,
    max_sweeps: usize,
}

impl Ascent<'_> {
    fn regularize(&self, f: &mut [f64]) {
        let g: Vec<f64> = (0..self.k)
            .map(|x| (0..self.k).map(|j| f[j] + self.d[x * self.k + j]).fold(f64::INFINITY, f64::min))
            .collect();
        f.copy_from_slice(&g);
    }

    fn interval(&self, f: &[f64], i: usize) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for j in 0..self.k {
            if j != i {
                let d = self.d[i * self.k + j];
                lo = lo.max(f[j] - d);
                hi = hi.min(f[j] + d);
            }
        }
        (lo.min(f[i]), hi.max(f[i]))
    }

    /// Coordinate ascent: each coordinate moves within its feasible interval
    /// (endpoints or a decaying step), keeping the field 1-Lipschitz.
    fn run<F: FnMut(&[f64]) -> f64>(&self, mut f: Vec<f64>, objective: &mut F) -> (Vec<f64>, f64) {
        self.regularize(&mut f);
        let mut value = objective(&f);
        let mut step = 0.1 * self.diam;
        for _ in 0..self.max_sweeps {
            let mut improved = false;
            for i in 0..self.k {
                let (lo, hi) = self.interval(&f, i);
                let current = f[i];
                let mut best = (value, current);
                for cand in [lo, hi, (current + step).min(hi), (current - step).max(lo)] {
                    if cand == current {
                        continue;
                    }
                    f[i] = cand;
                    let v = objective(&f);
                    if v > best.0 + 1e-14 * best.0.abs() {
                        best = (v, cand);
                    }
                }
                f[i] = best.1;
                if best.1 != current {
                    improved = true;
                    value = best.0;
                }
            }
            step *= 0.7;
            if !improved {
                break;
            }
        }
        (f, value)
    }
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64 + 1);
    rng
}

/// Best value of `objective` over canonical distance fields `±d(x₀, ·)` and
/// multi-start ascents from random McShane-regularized fields.
fn maximize_over_lipschitz<F: FnMut(&[f64]) -> f64>(
    space: &FiniteMetricProbabilitySpace,
    options: &EstimateOptions,
    include_negated: bool,
    mut objective: F,
) -> Result<(Vec<f64>, f64)> {
    let k = space.len();
    if k > ESTIMATE_SIZE_LIMIT {
        return Err(Error::OutOfRange { what: "points for estimation", value: k as f64, range: "[1, 4096]" });
    }
    let d = space.dense_distances();
    let diam = d.iter().copied().fold(0.0, f64::max);
    let ascent = Ascent { k, d: &d, diam, max_sweeps: options.max_sweeps };
    let mut best = (vec![0.0; k], objective(&vec![0.0; k]));
    let consider = |f: Vec<f64>, v: f64, best: &mut (Vec<f64>, f64)| {
        if v > best.1 {
            *best = (f, v);
        }
    };
    for x0 in 0..k {
        let f: Vec<f64> = d[x0 * k..(x0 + 1) * k].to_vec();
        let v = objective(&f);
        consider(f.clone(), v, &mut best);
        if include_negated {
            let neg: Vec<f64> = f.iter().map(|v| -v).collect();
            let v = objective(&neg);
            consider(neg, v, &mut best);
        }
    }
    if k > 1 {
        // polish the best canonical candidate before the random restarts
        let (f, v) = ascent.run(best.0.clone(), &mut objective);
        consider(f, v, &mut best);
        for r in 0..options.restarts {
            let mut rng = restart_rng(options.seed, r);
            let start: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() * diam).collect();
            let (f, v) = ascent.run(start, &mut objective);
            consider(f, v, &mut best);
        }
    }
    Ok(best)
}

/// Lower and upper bounds for `s²(μ) = sup{Var(f) : ‖f‖_Lip ≤ 1}`.
///
/// `spectral_upper`, when given, must itself be a valid upper bound for the
/// metric spread constant (see [`crate::spectral::metric_spread_upper`]).
pub fn spread_estimate(
    space: &FiniteMetricProbabilitySpace,
    options: &EstimateOptions,
    spectral_upper: Option<f64>,
) -> Result<BoundEstimate> {
    let w = space.weights().to_vec();
    let (field, lower) = maximize_over_lipschitz(space, options, false, |f| variance(f, &w))?;
    let diam = space.diameter();
    let mut upper = diam * diam / 4.0;
    let mut method = String::from("ascent; upper popoviciu-diam");
    if let Some(s) = spectral_upper {
        if s < upper {
            upper = s;
            method = String::from("ascent; upper poincare");
        }
    }
    Ok(BoundEstimate { lower, upper: upper.max(lower), witness: Witness::Field(field), method, diagnostics: BTreeMap::new() })
}

/// Lower and upper bounds for `σ²(μ)` via `sup σ_f²` over 1-Lipschitz `f`.
/// Also reports, for the witness, the ψ₂ sandwich `‖f‖²_ψ₂/6 ≤ σ_f² ≤ 4‖f‖²_ψ₂`.
pub fn sigma_estimate_lipschitz(space: &FiniteMetricProbabilitySpace, options: &EstimateOptions) -> Result<BoundEstimate> {
    let w = space.weights().to_vec();
    let (field, lower) = maximize_over_lipschitz(space, options, true, |f| sigma_f(f, &w))?;
    let diam = space.diameter();
    let (centered, _) = ScalarField::new(field.clone()).centered(&w);
    let psi2 = psi_norm(&centered, &w, 2.0);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("variance".into(), variance(&field, &w));
    diagnostics.insert("psi2_sq".into(), psi2 * psi2);
    diagnostics.insert("sandwich_lower".into(), psi2 * psi2 / 6.0);
    diagnostics.insert("sandwich_upper".into(), 4.0 * psi2 * psi2);
    Ok(BoundEstimate {
        lower,
        upper: (diam * diam / 4.0).max(lower),
        witness: Witness::Field(field),
        method: "ascent; upper hoeffding-diam".into(),
        diagnostics,
    })
}

/// A family of test functions for class-restricted subgaussian constants.
pub trait FunctionClass {
    fn name(&self) -> &str;
    /// Candidate fields evaluated at the points of `space`.
    fn candidates(&self, space: &FiniteMetricProbabilitySpace, seed: u64) -> Result<Vec<Vec<f64>>>;
}

/// All 1-Lipschitz functions; candidates are ascent maximizers of `σ_f²`.
pub struct LipschitzClass {
    pub options: EstimateOptions,
}

impl FunctionClass for LipschitzClass {
    fn name(&self) -> &str {
        "lipschitz"
    }

    fn candidates(&self, space: &FiniteMetricProbabilitySpace, seed: u64) -> Result<Vec<Vec<f64>>> {
        let options = EstimateOptions { seed, ..self.options };
        match sigma_estimate_lipschitz(space, &options)?.witness {
            Witness::Field(f) => Ok(vec![f]),
            _ => Ok(Vec::new()),
        }
    }
}

/// Lower bound on `σ²_F(μ)`: best `σ_f²` over the class's candidates.
pub fn sigma_estimate_class(space: &FiniteMetricProbabilitySpace, class: &dyn FunctionClass, seed: u64) -> Result<BoundEstimate> {
    let w = space.weights();
    let mut best = (Vec::new(), 0.0);
    for f in class.candidates(space, seed)? {
        let v = sigma_f(&f, w);
        if v > best.1 || best.0.is_empty() {
            best = (f, v);
        }
    }
    Ok(BoundEstimate {
        lower: best.1,
        upper: f64::INFINITY,
        witness: if best.0.is_empty() { Witness::None } else { Witness::Field(best.0) },
        method: format!("class {}", class.name()),
        diagnostics: BTreeMap::new(),
    })
}

/// A value of `σ²(μ)` the caller vouches for: exact or an upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustedSigma {
    pub value: f64,
    pub source: String,
}

impl TrustedSigma {
    /// `n/4` on the Hamming cube (exact transport-entropy constant).
    pub fn hypercube(n: u32) -> Self {
        Self { value: f64::from(n) / 4.0, source: format!("exact n/4 (hamming cube, n = {n})") }
    }

    /// `diam²/4`, always a valid upper bound.
    pub fn diameter_bound(space: &FiniteMetricProbabilitySpace) -> Self {
        let d = space.diameter();
        Self { value: d * d / 4.0, source: "upper bound diam^2/4".into() }
    }

    pub fn for_space(space: &FiniteMetricProbabilitySpace) -> Self {
        space.hypercube_dimension().map(Self::hypercube).unwrap_or_else(|| Self::diameter_bound(space))
    }
}

/// Non-violation test of `σ²(μ_A) ≤ c log(e/μ(A)) σ²(μ)`: a certified lower
/// bound of the left side against a trusted value (or upper bound) of `σ²(μ)`.
pub fn check_restriction_subgaussian(
    space: &FiniteMetricProbabilitySpace,
    mask: &SubsetMask,
    constant: f64,
    trusted: Option<TrustedSigma>,
    options: &EstimateOptions,
) -> Result<CheckReport> {
    let restricted = space.restrict(mask)?;
    let trusted = trusted.unwrap_or_else(|| TrustedSigma::for_space(space));
    let estimate = sigma_estimate_lipschitz(&restricted.space, options)?;
    let log_factor = (std::f64::consts::E / restricted.mass).ln();
    let rhs = constant * log_factor * trusted.value;
    Ok(CheckReport::evaluate(
        "restriction-subgaussian",
        estimate.lower,
        rhs,
        constant,
        0.0,
        format!(
            "|A| = {}, mu(A) = {:.17e}, sigma^2(mu) = {} [{}]",
            restricted.indices.len(),
            restricted.mass,
            trusted.value,
            trusted.source
        ),
    ))
}
