//! Dirichlet forms on finite spaces, the spectral gap `λ₁`, and
//! Poincaré-route bounds on the spread of restricted measures.
//!
//! Convention: for conductances `w(x, y)` and reference weights `μ`,
//!
//! ```text
//! |∇f|²(x) = ½ Σ_y w(x, y) (f(y) − f(x))²,     E(f, f) = ∫ |∇f|² dμ,
//! ```
//!
//! so the Poincaré inequality `λ₁ Var_μ(f) ≤ E(f, f)` holds with `λ₁` the
//! smallest nonzero eigenvalue of `L v = λ M v`, where `M = diag(μ)` and
//! `L` is the Laplacian with edge conductances `½ (μ(x) + μ(y)) w(x, y)`.
//! The coordinate-flip form on `{0,1}ⁿ` has `λ₁ = 2` for every `n`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constants::{spread_estimate, variance, EstimateOptions, Witness};
use crate::error::{Error, Result};
use crate::lipschitz::{kirszbraun_extend, symmetrized_psi_norm};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::orlicz::{psi_norm, weighted_mean};
use crate::report::CheckReport;
use crate::space::{FiniteMetricProbabilitySpace, Metric, SubsetMask};

/// Largest form handled by the dense eigensolver.
pub const SPECTRAL_SIZE_LIMIT: usize = 512;
/// `2 (36 e)²`, the constant in the Poincaré bound for restricted measures.
pub const POINCARE_RESTRICTION_CONSTANT: f64 = 2.0 * (36.0 * std::f64::consts::E) * (36.0 * std::f64::consts::E);
/// Aida–Stroock bound on `∫ e^{√λ₁ f} dμ` for mean-zero 1-Lipschitz `f`.
pub const AIDA_STROOCK_K0: f64 = 1.720102;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletForm {
    k: usize,
    /// Row-major symmetric `k × k` conductances, zero diagonal.
    conductances: Vec<f64>,
    weights: Vec<f64>,
    components: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdjacencyRule {
    /// Unit conductance between points at distance exactly 1.
    UnitDistance,
    /// Caller-supplied symmetric nonnegative matrix.
    Explicit(Vec<Vec<f64>>),
}

pub fn build_graph_form(space: &FiniteMetricProbabilitySpace, rule: &AdjacencyRule) -> Result<DirichletForm> {
    let k = space.len();
    let mut c = vec![0.0; k * k];
    match rule {
        AdjacencyRule::UnitDistance => {
            if let Metric::Hamming { n } = space.metric() {
                for x in 0..k {
                    for bit in 0..*n {
                        c[x * k + (x ^ (1 << bit))] = 1.0;
                    }
                }
            } else {
                for x in 0..k {
                    for y in (x + 1)..k {
                        if (space.distance(x, y) - 1.0).abs() <= 1e-12 {
                            c[x * k + y] = 1.0;
                            c[y * k + x] = 1.0;
                        }
                    }
                }
            }
        }
        AdjacencyRule::Explicit(rows) => {
            if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                return Err(Error::Dimension(format!("conductance matrix must be {k} x {k}")));
            }
            for i in 0..k {
                for j in 0..k {
                    let (a, b) = (rows[i][j], rows[j][i]);
                    if !a.is_finite() {
                        return Err(Error::NonFinite("conductances"));
                    }
                    if a < 0.0 {
                        return Err(Error::NegativeWeight { index: i * k + j, value: a });
                    }
                    if i == j && a != 0.0 {
                        return Err(Error::NonZeroDiagonal(i));
                    }
                    if a != b {
                        return Err(Error::NotSymmetric { i, j, dij: a, dji: b });
                    }
                    c[i * k + j] = a;
                }
            }
        }
    }
    DirichletForm::new(k, c, space.weights().to_vec())
}

impl DirichletForm {
    fn new(k: usize, conductances: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let components = component_labels(k, &conductances).1;
        Ok(Self { k, conductances, weights, components })
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn conductance(&self, x: usize, y: usize) -> f64 {
        self.conductances[x * self.k + y]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_connected(&self) -> bool {
        self.components == 1
    }

    /// The same graph with every conductance multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::OutOfRange { what: "conductance scale", value: s, range: "(0, inf)" });
        }
        Self::new(self.k, self.conductances.iter().map(|c| c * s).collect(), self.weights.clone())
    }

    /// `|∇f|²(x) = ½ Σ_y w(x, y)(f(y) − f(x))²` at every point.
    pub fn gradient_squared(&self, f: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|x| {
                0.5 * compensated_sum((0..self.k).map(|y| {
                    let diff = f[y] - f[x];
                    self.conductances[x * self.k + y] * diff * diff
                }))
            })
            .collect()
    }

    /// `E(f, f) = ∫ |∇f|² dμ`.
    pub fn energy(&self, f: &[f64]) -> f64 {
        compensated_sum(self.gradient_squared(f).iter().zip(&self.weights).map(|(g, w)| g * w))
    }

    /// `max_x ½ Σ_y w(x, y) d(x, y)²`: the largest squared gradient of a
    /// metric 1-Lipschitz field.
    pub fn metric_gradient_bound(&self, space: &FiniteMetricProbabilitySpace) -> f64 {
        (0..self.k)
            .map(|x| {
                0.5 * compensated_sum((0..self.k).map(|y| {
                    let d = space.distance(x, y);
                    self.conductances[x * self.k + y] * d * d
                }))
            })
            .fold(0.0, f64::max)
    }
}

fn component_labels(k: usize, c: &[f64]) -> (Vec<usize>, usize) {
    let mut label = vec![usize::MAX; k];
    let mut count = 0;
    for start in 0..k {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for y in 0..k {
                if c[x * k + y] > 0.0 && label[y] == usize::MAX {
                    label[y] = count;
                    stack.push(y);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// Smallest nonzero eigenvalue and an eigenvector attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub lambda1: f64,
    pub eigenvector: Vec<f64>,
    pub connected: bool,
}

/// Eigenvalues and eigenvectors (columns of the returned row-major matrix)
/// of a symmetric matrix by cyclic Jacobi rotations, iterated until the
/// off-diagonal Frobenius mass falls below `10⁻¹²` of the total.
pub fn jacobi_eigen(n: usize, mut a: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * a[p * n + q] * a[p * n + q])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-12 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[r * n + q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[p * n + r];
                    let aqr = a[q * n + r];
                    a[p * n + r] = c * apr - s * aqr;
                    a[q * n + r] = s * apr + c * aqr;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// `λ₁` of the form: `min E(f, f)/Var_μ(f)` over nonconstant `f`.
///
/// The generalized problem is symmetrized with `M^{-1/2}`; the null vector
/// `√μ` is removed exactly with a Householder reflection before the Jacobi
/// solve on the remaining `(k − 1)`-dimensional block. A disconnected form
/// returns 0 with a centered component indicator as witness.
pub fn lambda1(form: &DirichletForm) -> Result<SpectralGap> {
    let k = form.k;
    if k > SPECTRAL_SIZE_LIMIT {
        return Err(Error::OutOfRange { what: "points for the eigensolver", value: k as f64, range: "[1, 512]" });
    }
    if let Some(index) = form.weights.iter().position(|&w| w <= 0.0) {
        return Err(Error::Parameter(format!("spectral gap needs positive weights (point {index} has none)")));
    }
    if k == 1 {
        return Ok(SpectralGap { lambda1: 0.0, eigenvector: vec![0.0], connected: true });
    }
    let mu = &form.weights;
    if !form.is_connected() {
        let (labels, _) = component_labels(k, &form.conductances);
        let ind: Vec<f64> = labels.iter().map(|&l| if l == 0 { 1.0 } else { 0.0 }).collect();
        let m = weighted_mean(&ind, mu);
        return Ok(SpectralGap { lambda1: 0.0, eigenvector: ind.iter().map(|v| v - m).collect(), connected: false });
    }

    // S = M^{-1/2} L M^{-1/2}
    let sq: Vec<f64> = mu.iter().map(|w| w.sqrt()).collect();
    let mut s = vec![0.0; k * k];
    for x in 0..k {
        let mut diag = CompensatedSum::new();
        for y in 0..k {
            let w = form.conductances[x * k + y];
            if w > 0.0 && x != y {
                let cxy = 0.5 * (mu[x] + mu[y]) * w;
                s[x * k + y] = -cxy / (sq[x] * sq[y]);
                diag.add(cxy);
            }
        }
        s[x * k + x] = diag.value() / mu[x];
    }
    // Householder H = I − 2uuᵀ/(uᵀu) mapping e₀ to ±√μ
    let mut u = sq.clone();
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    u[0] += sign;
    let uu: f64 = u.iter().map(|x| x * x).sum();
    let h = |i: usize, j: usize| -> f64 { f64::from(u8::from(i == j)) - 2.0 * u[i] * u[j] / uu };
    let hmat: Vec<f64> = (0..k * k).map(|idx| h(idx / k, idx % k)).collect();
    // B = H S H, keep rows/cols 1..k
    let mut sh = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            sh[i * k + j] = (0..k).map(|l| s[i * k + l] * hmat[l * k + j]).sum();
        }
    }
    let n = k - 1;
    let mut b = vec![0.0; n * n];
    for i in 1..k {
        for j in 1..k {
            b[(i - 1) * n + (j - 1)] = (0..k).map(|l| hmat[l * k + i] * sh[l * k + j]).sum();
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (b[i * n + j] + b[j * n + i]);
            b[i * n + j] = m;
            b[j * n + i] = m;
        }
    }
    let (values, vectors) = jacobi_eigen(n, b);
    let (imin, &lmin) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    // back to point coordinates: z = H [0; y], f = M^{-1/2} z
    let y: Vec<f64> = (0..n).map(|r| vectors[r * n + imin]).collect();
    let f: Vec<f64> = (0..k)
        .map(|x| (1..k).map(|j| hmat[x * k + j] * y[j - 1]).sum::<f64>() / sq[x])
        .collect();
    let m = weighted_mean(&f, mu);
    let f: Vec<f64> = f.iter().map(|v| v - m).collect();
    Ok(SpectralGap { lambda1: lmin.max(0.0), eigenvector: f, connected: true })
}

/// `G²/λ₁`, an upper bound for the metric spread constant: a metric
/// 1-Lipschitz `f` has `|∇f|² ≤ G²` pointwise, so `Var f ≤ E(f,f)/λ₁ ≤ G²/λ₁`.
pub fn metric_spread_upper(form: &DirichletForm, space: &FiniteMetricProbabilitySpace) -> Result<f64> {
    let gap = lambda1(form)?;
    if gap.lambda1 <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(form.metric_gradient_bound(space) / gap.lambda1)
}

/// Outcome of [`check_poincare_spread`], with the unasserted
/// exponential-integrability diagnostics for the best witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareCheck {
    pub check: CheckReport,
    pub lambda1: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Non-violation test of `s²(μ_A) ≤ c log²(e/μ(A)) / λ₁` in the form's
/// gradient: a field is admissible when `sup_x |∇f|(x) ≤ 1` on the whole
/// space. Candidates on `A` (spread-ascent witness, restricted eigenvector)
/// are extended to the whole space and rescaled by their largest gradient.
pub fn check_poincare_spread(
    form: &DirichletForm,
    space: &FiniteMetricProbabilitySpace,
    mask: &SubsetMask,
    constant: f64,
    options: &EstimateOptions,
) -> Result<PoincareCheck> {
    if form.len() != space.len() {
        return Err(Error::Dimension(format!("form over {} points, space has {}", form.len(), space.len())));
    }
    let gap = lambda1(form)?;
    let restricted = space.restrict(mask)?;
    let log_factor = (std::f64::consts::E / restricted.mass).ln();
    if gap.lambda1 <= 0.0 {
        return Ok(PoincareCheck {
            check: CheckReport::undefined(
                "poincare-restricted-spread",
                f64::NAN,
                constant,
                format!("disconnected form ({} components): lambda1 = 0", form.components()),
            ),
            lambda1: 0.0,
            diagnostics: BTreeMap::new(),
        });
    }
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    if let Witness::Field(f) = spread_estimate(&restricted.space, options, None)?.witness {
        candidates.push(f);
    }
    candidates.push(restricted.indices.iter().map(|&i| gap.eigenvector[i]).collect());

    let w_a = restricted.space.weights();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for f in candidates {
        let ext = kirszbraun_extend(&f, space, mask)?;
        let g = form.gradient_squared(&ext).into_iter().fold(0.0, f64::max);
        if g <= 0.0 {
            continue;
        }
        let scaled: Vec<f64> = ext.iter().map(|v| v / g.sqrt()).collect();
        let on_a: Vec<f64> = restricted.indices.iter().map(|&i| scaled[i]).collect();
        let score = variance(&on_a, w_a);
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, scaled));
        }
    }
    let (lhs, witness) = best.unwrap_or((0.0, vec![0.0; space.len()]));

    let mu = space.weights();
    let m = weighted_mean(&witness, mu);
    let centered: Vec<f64> = witness.iter().map(|v| v - m).collect();
    let root = gap.lambda1.sqrt();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("psi1_centered".into(), psi_norm(&centered, mu, 1.0));
    diagnostics.insert("psi1_bound_2_over_sqrt_lambda1".into(), 2.0 / root);
    if space.len() * space.len() <= crate::lipschitz::SYMMETRIZED_DENSE_LIMIT {
        diagnostics.insert("psi1_symmetrized".into(), symmetrized_psi_norm(&witness, mu, 1.0)?);
        diagnostics.insert("psi1_symmetrized_bound_3_over_sqrt_lambda1".into(), 3.0 / root);
    }
    let laplace = compensated_sum(centered.iter().zip(mu).map(|(v, w)| w * (root * v).exp()));
    diagnostics.insert("laplace_at_sqrt_lambda1".into(), laplace);
    diagnostics.insert("aida_stroock_k0".into(), AIDA_STROOCK_K0);

    let rhs = constant * log_factor * log_factor / gap.lambda1;
    let check = CheckReport::evaluate(
        "poincare-restricted-spread",
        lhs,
        rhs,
        constant,
        1e-9,
        format!(
            "|A| = {}, mu(A) = {:.17e}, lambda1 = {:.17e}; gradient |grad f|^2(x) = 1/2 sum_y w(x,y)(f(y)-f(x))^2, admissible iff max |grad f| <= 1",
            restricted.indices.len(),
            restricted.mass,
            gap.lambda1
        ),
    );
    Ok(PoincareCheck { check, lambda1: gap.lambda1, diagnostics })
}
