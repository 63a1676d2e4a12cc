//! Kantorovich distance `W₁` by exact linear programming with a dual
//! certificate, relative entropy, and the transport-entropy route to `σ²`:
//! `σ²(μ) = sup_ν W₁(μ, ν)² / (2 D(ν‖μ))`.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::constants::{sigma_estimate_lipschitz, BoundEstimate, EstimateOptions, TrustedSigma, Witness};
use crate::error::{Error, Result};
use crate::lipschitz::lipschitz_vertices;
use crate::numeric::compensated_sum;
use crate::orlicz::ScalarField;
use crate::report::{format_float, CheckReport};
use crate::space::{FiniteMetricProbabilitySpace, ProbabilityVector, SubsetMask};

/// Spaces up to this size use the dense tableau simplex.
pub const DENSE_SIMPLEX_LIMIT: usize = 64;
/// Largest space accepted by [`w1`] (the plan is stored densely).
pub const TRANSPORT_SIZE_LIMIT: usize = 4096;

const MARGINAL_TOLERANCE: f64 = 1e-9;

/// An optimal coupling with its Kantorovich potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub k: usize,
    /// Row-major `k × k` masses; row sums give the first marginal.
    pub plan: Vec<f64>,
    pub value: f64,
    /// 1-Lipschitz `φ` with `Σ φ (ν₁ − ν₂) = value` up to `gap`.
    pub potential: ScalarField,
    /// `|primal − dual|`.
    pub gap: f64,
}

impl TransportPlan {
    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.k + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.k).map(|i| compensated_sum(self.plan[i * self.k..(i + 1) * self.k].iter().copied())).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.k).map(|j| compensated_sum((0..self.k).map(|i| self.plan[i * self.k + j]))).collect()
    }

    /// Positive entries as `i,j,mass` rows under a header.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["i", "j", "mass"])?;
        for i in 0..self.k {
            for j in 0..self.k {
                let m = self.mass(i, j);
                if m > 0.0 {
                    w.write_record([i.to_string(), j.to_string(), format_float(m)])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Optimal flows on the support rectangle plus the column prices `v` of a
/// dual solution `u_i + v_j ≤ c_ij`.
struct LpSolution {
    flows: Vec<f64>,
    v: Vec<f64>,
}

// ----------------------------------------------------------------------------
// Dense tableau simplex
// ----------------------------------------------------------------------------

struct Tableau {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, pr: usize, pc: usize, objective: &mut [f64]) {
        let w = self.cols + 1;
        let p = self.data[pr * w + pc];
        for c in 0..w {
            self.data[pr * w + c] /= p;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let factor = self.data[r * w + pc];
            if factor != 0.0 {
                for c in 0..w {
                    self.data[r * w + c] -= factor * pivot_row[c];
                }
                self.data[r * w + pc] = 0.0;
            }
        }
        let factor = objective[pc];
        if factor != 0.0 {
            for c in 0..w {
                objective[c] -= factor * pivot_row[c];
            }
            objective[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Bland's rule over the columns `< enter_limit`. The last objective
    /// entry holds minus the objective value.
    fn optimize(&mut self, objective: &mut [f64], enter_limit: usize, eps: f64) -> Result<()> {
        for _ in 0..1_000_000 {
            let Some(pc) = (0..enter_limit).find(|&c| objective[c] < -eps) else {
                return Ok(());
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > 1e-12 {
                    let ratio = self.rhs(r) / a;
                    let better = match best {
                        None => true,
                        Some((br, _, bb)) => ratio < br - 1e-15 || (ratio <= br + 1e-15 && self.basis[r] < bb),
                    };
                    if better {
                        best = Some((ratio, r, self.basis[r]));
                    }
                }
            }
            let Some((_, pr, _)) = best else {
                return Err(Error::Infeasible);
            };
            self.pivot(pr, pc, objective);
        }
        Err(Error::Infeasible)
    }
}

fn dense_simplex(cost: &[f64], a: &[f64], b: &[f64]) -> Result<LpSolution> {
    let (m1, m2) = (a.len(), b.len());
    if m2 == 1 {
        return Ok(LpSolution { flows: a.to_vec(), v: vec![0.0] });
    }
    if m1 == 1 {
        return Ok(LpSolution { flows: b.to_vec(), v: cost.to_vec() });
    }
    let n = m1 * m2;
    let rows = m1 + m2 - 1;
    let cols = n + rows;
    let w = cols + 1;
    let mut t = Tableau { rows, cols, data: vec![0.0; rows * w], basis: (n..n + rows).collect() };
    for i in 0..m1 {
        for j in 0..m2 {
            let var = i * m2 + j;
            t.data[i * w + var] = 1.0;
            if j + 1 < m2 {
                t.data[(m1 + j) * w + var] = 1.0;
            }
        }
        t.data[i * w + cols] = a[i];
    }
    for j in 0..m2 - 1 {
        t.data[(m1 + j) * w + cols] = b[j];
    }
    for r in 0..rows {
        t.data[r * w + n + r] = 1.0;
    }

    // phase 1: minimize the sum of artificials
    let mut obj = vec![0.0; w];
    for r in 0..rows {
        for c in 0..n {
            obj[c] -= t.data[r * w + c];
        }
        obj[cols] -= t.data[r * w + cols];
    }
    t.optimize(&mut obj, n, 1e-12)?;
    if -obj[cols] > 1e-9 {
        return Err(Error::Infeasible);
    }
    for r in 0..rows {
        if t.basis[r] >= n {
            if let Some(c) = (0..n).find(|&c| t.at(r, c).abs() > 1e-12) {
                t.pivot(r, c, &mut obj);
            }
        }
    }

    // phase 2 with the true costs; artificials never re-enter
    let cmax = cost.iter().copied().fold(0.0, f64::max).max(1.0);
    let mut obj = vec![0.0; w];
    obj[..n].copy_from_slice(cost);
    for r in 0..rows {
        let cb = if t.basis[r] < n { cost[t.basis[r]] } else { 0.0 };
        if cb != 0.0 {
            for c in 0..w {
                obj[c] -= cb * t.data[r * w + c];
            }
        }
    }
    t.optimize(&mut obj, n, 1e-12 * cmax)?;

    let mut flows = vec![0.0; n];
    for r in 0..rows {
        if t.basis[r] < n {
            flows[t.basis[r]] = t.rhs(r).max(0.0);
        }
    }
    // duals from the artificial columns' reduced costs; the dropped column
    // constraint has price 0
    let mut v: Vec<f64> = (m1..rows).map(|r| -obj[n + r]).collect();
    v.push(0.0);
    Ok(LpSolution { flows, v })
}

// ----------------------------------------------------------------------------
// Transportation (network) simplex
// ----------------------------------------------------------------------------

fn network_simplex(cost: &[f64], a: &[f64], b: &[f64]) -> Result<LpSolution> {
    let (m1, m2) = (a.len(), b.len());
    let nodes = m1 + m2;
    // northwest corner start: m1 + m2 − 1 basic cells forming a tree
    let mut basic: Vec<(usize, usize)> = Vec::with_capacity(nodes - 1);
    let mut flow = vec![0.0; m1 * m2];
    let mut is_basic = vec![false; m1 * m2];
    let (mut ra, mut cb) = (a[0], b[0]);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = ra.min(cb);
        flow[i * m2 + j] = x.max(0.0);
        is_basic[i * m2 + j] = true;
        basic.push((i, j));
        ra -= x;
        cb -= x;
        if i + 1 == m1 && j + 1 == m2 {
            break;
        }
        if (ra <= cb && i + 1 < m1) || j + 1 == m2 {
            i += 1;
            ra = a[i];
        } else {
            j += 1;
            cb = b[j];
        }
    }
    let cmax = cost.iter().copied().fold(0.0, f64::max).max(1.0);
    let eps = 1e-12 * cmax;
    let mut u = vec![0.0; m1];
    let mut v = vec![0.0; m2];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for _ in 0..10_000_000usize {
        for list in adjacency.iter_mut() {
            list.clear();
        }
        for (e, &(r, c)) in basic.iter().enumerate() {
            adjacency[r].push(e);
            adjacency[m1 + c].push(e);
        }
        // potentials from the tree: u_r + v_c = cost on basic cells
        let mut done = vec![false; nodes];
        let mut stack = vec![0usize];
        done[0] = true;
        u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &e in &adjacency[node] {
                let (r, c) = basic[e];
                let other = if node == r { m1 + c } else { r };
                if !done[other] {
                    done[other] = true;
                    if other >= m1 {
                        v[c] = cost[r * m2 + c] - u[r];
                    } else {
                        u[r] = cost[r * m2 + c] - v[c];
                    }
                    stack.push(other);
                }
            }
        }
        let entering = (0..m1 * m2).find(|&idx| {
            !is_basic[idx] && cost[idx] - u[idx / m2] - v[idx % m2] < -eps
        });
        let Some(enter) = entering else {
            return Ok(LpSolution { flows: flow, v });
        };
        let (er, ec) = (enter / m2, enter % m2);
        // tree path from column node ec to row node er
        let mut parent_edge = vec![usize::MAX; nodes];
        let mut seen = vec![false; nodes];
        let mut queue = std::collections::VecDeque::from([er]);
        seen[er] = true;
        while let Some(node) = queue.pop_front() {
            if node == m1 + ec {
                break;
            }
            for &e in &adjacency[node] {
                let (r, c) = basic[e];
                let other = if node == r { m1 + c } else { r };
                if !seen[other] {
                    seen[other] = true;
                    parent_edge[other] = e;
                    queue.push_back(other);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = m1 + ec;
        while node != er {
            let e = parent_edge[node];
            path.push(e);
            let (r, c) = basic[e];
            node = if node == r { m1 + c } else { r };
        }
        // cells along the path alternate −, +, −, ... starting next to ec
        let mut theta = f64::INFINITY;
        let mut leave: Option<usize> = None;
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let (r, c) = basic[e];
                let f = flow[r * m2 + c];
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let (lr, lc) = basic[l];
                        f < theta || (f == theta && r * m2 + c < lr * m2 + lc)
                    }
                };
                if better {
                    theta = f;
                    leave = Some(e);
                }
            }
        }
        let leave = leave.ok_or(Error::Infeasible)?;
        for (pos, &e) in path.iter().enumerate() {
            let (r, c) = basic[e];
            let cell = r * m2 + c;
            if pos % 2 == 0 {
                flow[cell] = (flow[cell] - theta).max(0.0);
            } else {
                flow[cell] += theta;
            }
        }
        flow[enter] = theta;
        let (lr, lc) = basic[leave];
        flow[lr * m2 + lc] = 0.0;
        is_basic[lr * m2 + lc] = false;
        is_basic[enter] = true;
        basic[leave] = (er, ec);
    }
    Err(Error::Infeasible)
}

// ----------------------------------------------------------------------------
// W₁
// ----------------------------------------------------------------------------

/// `W₁` between two measures given as raw weight vectors on the points of
/// `space`, whose dense distance matrix is `d`.
fn w1_raw(d: &[f64], k: usize, nu1: &[f64], nu2: &[f64]) -> Result<TransportPlan> {
    let s1 = compensated_sum(nu1.iter().copied());
    let s2 = compensated_sum(nu2.iter().copied());
    if (s1 - s2).abs() > MARGINAL_TOLERANCE {
        return Err(Error::MarginalMismatch((s1 - s2).abs()));
    }
    if nu1 == nu2 {
        let mut plan = vec![0.0; k * k];
        for i in 0..k {
            plan[i * k + i] = nu1[i];
        }
        return Ok(TransportPlan { k, plan, value: 0.0, potential: ScalarField::zeros(k), gap: 0.0 });
    }
    let rows: Vec<usize> = (0..k).filter(|&i| nu1[i] > 0.0).collect();
    let cols: Vec<usize> = (0..k).filter(|&j| nu2[j] > 0.0).collect();
    let a: Vec<f64> = rows.iter().map(|&i| nu1[i]).collect();
    let mut b: Vec<f64> = cols.iter().map(|&j| nu2[j]).collect();
    // absorb rounding so the two supports carry identical totals
    let last = b.len() - 1;
    b[last] += compensated_sum(a.iter().copied()) - compensated_sum(b.iter().copied());
    b[last] = b[last].max(0.0);
    let cost: Vec<f64> = rows.iter().flat_map(|&i| cols.iter().map(move |&j| d[i * k + j])).collect();
    let sol = if k <= DENSE_SIMPLEX_LIMIT { dense_simplex(&cost, &a, &b)? } else { network_simplex(&cost, &a, &b)? };

    let mut plan = vec![0.0; k * k];
    for (ri, &i) in rows.iter().enumerate() {
        for (ci, &j) in cols.iter().enumerate() {
            plan[i * k + j] = sol.flows[ri * cols.len() + ci];
        }
    }
    let value = compensated_sum(cost.iter().zip(&sol.flows).map(|(c, f)| c * f));
    let potential: Vec<f64> = (0..k)
        .map(|x| cols.iter().zip(&sol.v).map(|(&j, &vj)| d[x * k + j] - vj).fold(f64::INFINITY, f64::min))
        .collect();
    let dual = compensated_sum(potential.iter().zip(nu1.iter().zip(nu2)).map(|(p, (a, b))| p * (a - b)));
    Ok(TransportPlan { k, plan, value, potential: ScalarField::new(potential), gap: (value - dual).abs() })
}

/// Optimal transport between `nu1` and `nu2` under the space's metric.
pub fn w1(space: &FiniteMetricProbabilitySpace, nu1: &ProbabilityVector, nu2: &ProbabilityVector) -> Result<TransportPlan> {
    let k = space.len();
    if nu1.len() != k || nu2.len() != k {
        return Err(Error::Dimension(format!("measures of length {} and {} on {k} points", nu1.len(), nu2.len())));
    }
    if k > TRANSPORT_SIZE_LIMIT {
        return Err(Error::OutOfRange { what: "points for transport", value: k as f64, range: "[1, 4096]" });
    }
    w1_raw(&space.dense_distances(), k, nu1.entries(), nu2.entries())
}

/// Solves with the dense simplex regardless of size (for cross-checks).
#[doc(hidden)]
pub fn w1_dense_value(space: &FiniteMetricProbabilitySpace, nu1: &[f64], nu2: &[f64]) -> Result<f64> {
    lp_value(space, nu1, nu2, dense_simplex)
}

/// Solves with the network simplex regardless of size (for cross-checks).
#[doc(hidden)]
pub fn w1_network_value(space: &FiniteMetricProbabilitySpace, nu1: &[f64], nu2: &[f64]) -> Result<f64> {
    lp_value(space, nu1, nu2, network_simplex)
}

fn lp_value(
    space: &FiniteMetricProbabilitySpace,
    nu1: &[f64],
    nu2: &[f64],
    solver: fn(&[f64], &[f64], &[f64]) -> Result<LpSolution>,
) -> Result<f64> {
    let k = space.len();
    let rows: Vec<usize> = (0..k).filter(|&i| nu1[i] > 0.0).collect();
    let cols: Vec<usize> = (0..k).filter(|&j| nu2[j] > 0.0).collect();
    let a: Vec<f64> = rows.iter().map(|&i| nu1[i]).collect();
    let mut b: Vec<f64> = cols.iter().map(|&j| nu2[j]).collect();
    let last = b.len() - 1;
    b[last] += compensated_sum(a.iter().copied()) - compensated_sum(b.iter().copied());
    let cost: Vec<f64> = rows.iter().flat_map(|&i| cols.iter().map(move |&j| space.distance(i, j))).collect();
    let sol = solver(&cost, &a, &b)?;
    Ok(compensated_sum(cost.iter().zip(&sol.flows).map(|(c, f)| c * f)))
}

// ----------------------------------------------------------------------------
// Relative entropy
// ----------------------------------------------------------------------------

/// `D(ν‖μ) = Σ ν log(ν/μ)` with `0 log 0 = 0`. Fails with
/// [`Error::NotAbsolutelyContinuous`] when `ν` charges a `μ`-null point.
pub fn kl_divergence(nu: &[f64], mu: &[f64]) -> Result<f64> {
    if nu.len() != mu.len() {
        return Err(Error::Dimension(format!("measures of length {} and {}", nu.len(), mu.len())));
    }
    let mut terms = Vec::with_capacity(nu.len());
    for (index, (&n, &m)) in nu.iter().zip(mu).enumerate() {
        if n > 0.0 && m <= 0.0 {
            return Err(Error::NotAbsolutelyContinuous { index });
        }
        if m > 0.0 {
            // μ[(1+r) log(1+r) − r] with r = ν/μ − 1: accurate as ν → μ
            let r = n / m - 1.0;
            let term = if n == 0.0 { m } else { m * ((1.0 + r) * r.ln_1p() - r) };
            terms.push(term);
        }
    }
    Ok(compensated_sum(terms).max(0.0))
}

// ----------------------------------------------------------------------------
// σ² via transport-entropy
// ----------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransportOptions {
    pub restarts: usize,
    pub seed: u64,
    pub iterations: usize,
    /// Run the simplex-grid oracle on spaces with at most 4 points.
    pub grid_oracle: bool,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self { restarts: 8, seed: 0, iterations: 200, grid_oracle: true }
    }
}

/// Grid step of the small-space oracle.
pub const GRID_ORACLE_STEP: f64 = 0.005;
const MIN_DIVERGENCE: f64 = 1e-12;

struct RatioEvaluator<'a> {
    d: Vec<f64>,
    k: usize,
    mu: &'a [f64],
}

impl RatioEvaluator<'_> {
    /// `(W₁²/(2D), W₁, D, potential)`, or `None` when `D < 10⁻¹²`.
    fn eval(&self, nu: &[f64]) -> Result<Option<(f64, f64, f64, Vec<f64>)>> {
        let dv = kl_divergence(nu, self.mu)?;
        if dv < MIN_DIVERGENCE {
            return Ok(None);
        }
        let plan = w1_raw(&self.d, self.k, self.mu, nu)?;
        Ok(Some((plan.value * plan.value / (2.0 * dv), plan.value, dv, plan.potential.into_vec())))
    }

    /// Exponentiated-gradient ascent of the ratio from `start` (full support
    /// on `supp μ`), halving the step on every non-improving move.
    fn mirror_ascent(&self, start: Vec<f64>, iterations: usize) -> Result<(Vec<f64>, f64)> {
        let Some(mut current) = self.eval(&start)? else {
            return Ok((start, 0.0));
        };
        let mut nu = start;
        let mut eta = 1.0;
        for _ in 0..iterations {
            let (r, w, dv, ref phi) = current;
            let grad: Vec<f64> = (0..self.k)
                .map(|x| {
                    if self.mu[x] <= 0.0 {
                        return 0.0;
                    }
                    let log_ratio = (nu[x] / self.mu[x]).ln();
                    (w / dv) * (-phi[x]) - (w * w / (2.0 * dv * dv)) * (log_ratio + 1.0)
                })
                .collect();
            let gmax = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
            if gmax == 0.0 || !gmax.is_finite() {
                break;
            }
            let mut accepted = false;
            for _ in 0..40 {
                let step = eta / gmax;
                let mut cand: Vec<f64> = (0..self.k).map(|x| nu[x] * (step * grad[x]).exp()).collect();
                let total = compensated_sum(cand.iter().copied());
                for c in &mut cand {
                    *c /= total;
                }
                if let Some(next) = self.eval(&cand)? {
                    if next.0 > r {
                        nu = cand;
                        current = next;
                        accepted = true;
                        eta = (eta * 1.5).min(4.0);
                        break;
                    }
                }
                eta *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Ok((nu, current.0))
    }
}

/// Lower and upper bounds for `σ²` through the transport-entropy ratio.
pub fn sigma_transport(space: &FiniteMetricProbabilitySpace, options: &TransportOptions) -> Result<BoundEstimate> {
    let k = space.len();
    let diam = space.diameter();
    let upper = diam * diam / 4.0;
    let mu = space.weights();
    let support: Vec<usize> = (0..k).filter(|&i| mu[i] > 0.0).collect();
    if support.len() < 2 {
        return Ok(BoundEstimate {
            lower: 0.0,
            upper,
            witness: Witness::Measure(mu.to_vec()),
            method: "degenerate".into(),
            diagnostics: BTreeMap::new(),
        });
    }
    if k > DENSE_SIMPLEX_LIMIT {
        return Err(Error::OutOfRange { what: "points for transport sigma", value: k as f64, range: "[1, 64]" });
    }
    let ev = RatioEvaluator { d: space.dense_distances(), k, mu };
    let mut best: (f64, Vec<f64>) = (0.0, mu.to_vec());
    let consider = |nu: Vec<f64>, r: f64, best: &mut (f64, Vec<f64>)| {
        if r > best.0 {
            *best = (r, nu);
        }
    };

    // point masses and two-point mixtures
    for (a, &x) in support.iter().enumerate() {
        let nu = ProbabilityVector::point_mass(k, x).into_entries();
        if let Some((r, ..)) = ev.eval(&nu)? {
            consider(nu, r, &mut best);
        }
        for &y in &support[a + 1..] {
            for step in 1..10 {
                let lam = step as f64 / 10.0;
                let mut nu = vec![0.0; k];
                nu[x] = lam;
                nu[y] = 1.0 - lam;
                if let Some((r, ..)) = ev.eval(&nu)? {
                    consider(nu, r, &mut best);
                }
            }
        }
    }

    // seeds along the Lipschitz witness: μ(1 ± 10⁻³ g/‖g‖∞) and Gibbs tilts
    let lip = sigma_estimate_lipschitz(
        space,
        &EstimateOptions { restarts: options.restarts, seed: options.seed, ..EstimateOptions::default() },
    )?;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Witness::Field(g) = &lip.witness {
        let m = compensated_sum(g.iter().zip(mu).map(|(a, b)| a * b));
        let centered: Vec<f64> = g.iter().map(|v| v - m).collect();
        let gmax = centered.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if gmax > 0.0 {
            for sign in [1.0, -1.0] {
                let nu: Vec<f64> = (0..k).map(|x| mu[x] * (1.0 + sign * 1e-3 * centered[x] / gmax)).collect();
                if let Some((r, ..)) = ev.eval(&nu)? {
                    consider(nu.clone(), r, &mut best);
                }
                starts.push(nu);
            }
            let range = centered.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - centered.iter().copied().fold(f64::INFINITY, f64::min);
            for i in 0..=48 {
                let t = (-4.0 + i as f64 * 0.125) * std::f64::consts::LN_10;
                for sign in [1.0, -1.0] {
                    let tt = sign * t.exp() / range;
                    let top = centered.iter().map(|v| tt * v).fold(f64::NEG_INFINITY, f64::max);
                    let mut nu: Vec<f64> = (0..k).map(|x| mu[x] * (tt * centered[x] - top).exp()).collect();
                    let total = compensated_sum(nu.iter().copied());
                    nu.iter_mut().for_each(|v| *v /= total);
                    if let Some((r, ..)) = ev.eval(&nu)? {
                        if r > best.0 * 0.9 {
                            starts.push(nu.clone());
                        }
                        consider(nu, r, &mut best);
                    }
                }
            }
        }
    }
    // random full-support starts
    for r in 0..options.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        rng.set_stream(1_000_000 + r as u64);
        let mut nu: Vec<f64> = (0..k)
            .map(|x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                mu[x] * z.exp()
            })
            .collect();
        let total = compensated_sum(nu.iter().copied());
        nu.iter_mut().for_each(|v| *v /= total);
        starts.push(nu);
    }
    starts.sort_by(|a, b| {
        let ra = ev.eval(a).ok().flatten().map_or(0.0, |e| e.0);
        let rb = ev.eval(b).ok().flatten().map_or(0.0, |e| e.0);
        rb.total_cmp(&ra)
    });
    starts.truncate(options.restarts.max(4) + 2);
    for start in starts {
        let (nu, r) = ev.mirror_ascent(start, options.iterations)?;
        consider(nu, r, &mut best);
    }

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("ascent".to_string(), best.0);
    diagnostics.insert("lipschitz_route".to_string(), lip.lower);
    let mut method = String::from("mirror-ascent; upper hoeffding-diam");
    if options.grid_oracle && k <= 4 {
        let (grid_best, grid_nu) = grid_oracle(space)?;
        diagnostics.insert("grid_oracle".to_string(), grid_best);
        if grid_best > best.0 {
            best = (grid_best, grid_nu);
            method = String::from("grid-oracle; upper hoeffding-diam");
        }
    }
    Ok(BoundEstimate { lower: best.0, upper: upper.max(best.0), witness: Witness::Measure(best.1), method, diagnostics })
}

/// Best ratio over the simplex grid of step [`GRID_ORACLE_STEP`], with `W₁`
/// evaluated as the maximum of `Σ φ (μ − ν)` over the Lipschitz polytope's
/// vertices. Spaces with at most 4 points.
pub fn grid_oracle(space: &FiniteMetricProbabilitySpace) -> Result<(f64, Vec<f64>)> {
    let k = space.len();
    if k > 4 {
        return Err(Error::OutOfRange { what: "points for the grid oracle", value: k as f64, range: "[1, 4]" });
    }
    let mu = space.weights();
    let vertices = lipschitz_vertices(space)?;
    let offsets: Vec<f64> = vertices.iter().map(|phi| compensated_sum(phi.iter().zip(mu).map(|(p, m)| p * m))).collect();
    let steps = (1.0 / GRID_ORACLE_STEP).round() as usize;
    let mut best = (0.0, mu.to_vec());
    let mut counts = vec![0usize; k];
    let mut nu = vec![0.0; k];
    grid_recurse(0, steps, &mut counts, &mut |counts| {
        for (x, &c) in counts.iter().enumerate() {
            nu[x] = c as f64 / steps as f64;
        }
        let Ok(dv) = kl_divergence(&nu, mu) else { return };
        if dv < MIN_DIVERGENCE {
            return;
        }
        let w = vertices
            .iter()
            .zip(&offsets)
            .map(|(phi, off)| off - phi.iter().zip(&nu).map(|(p, n)| p * n).sum::<f64>())
            .fold(0.0, f64::max);
        let r = w * w / (2.0 * dv);
        if r > best.0 {
            best = (r, nu.clone());
        }
    });
    Ok(best)
}

fn grid_recurse<F: FnMut(&[usize])>(pos: usize, remaining: usize, counts: &mut Vec<usize>, visit: &mut F) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[pos] = c;
        grid_recurse(pos + 1, remaining - c, counts, visit);
    }
}

// ----------------------------------------------------------------------------
// Transport-entropy inequality on a restriction
// ----------------------------------------------------------------------------

/// The transport inequality on `A` and the entropy identity behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedTransportCheck {
    /// `W₁²(μ_A, ν) ≤ c σ²(μ) log(e/μ(A)) D(ν‖μ_A)`.
    pub transport: CheckReport,
    /// `|D(ν‖μ_A) − log μ(A) − D(ν‖μ)| ≤ 10⁻¹²`.
    pub entropy_identity: CheckReport,
}

pub fn check_cor44(
    space: &FiniteMetricProbabilitySpace,
    mask: &SubsetMask,
    nu: &ProbabilityVector,
    constant: f64,
    trusted: Option<TrustedSigma>,
) -> Result<RestrictedTransportCheck> {
    let k = space.len();
    if mask.len() != k || nu.len() != k {
        return Err(Error::Dimension(format!("mask {} / measure {} on {k} points", mask.len(), nu.len())));
    }
    if let Some(&index) = nu.support().iter().find(|&&i| !mask.contains(i)) {
        return Err(Error::SupportViolation { index });
    }
    let mu = space.weights();
    let mass = mask.mass(mu);
    if mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let mu_a: Vec<f64> = (0..k).map(|i| if mask.contains(i) { mu[i] / mass } else { 0.0 }).collect();
    let trusted = trusted.unwrap_or_else(|| TrustedSigma::for_space(space));
    let plan = w1_raw(&space.dense_distances(), k, &mu_a, nu.entries())?;
    let d_a = kl_divergence(nu.entries(), &mu_a)?;
    let d_full = kl_divergence(nu.entries(), mu)?;
    let log_factor = (std::f64::consts::E / mass).ln();
    let transport = CheckReport::evaluate(
        "transport-entropy-restricted",
        plan.value * plan.value,
        constant * trusted.value * log_factor * d_a,
        constant,
        0.0,
        format!("mu(A) = {mass:.17e}, D(nu|mu_A) = {d_a:.17e}, sigma^2(mu) = {} [{}]", trusted.value, trusted.source),
    );
    let residual = (d_a - (mass.ln() + d_full)).abs();
    let entropy_identity = CheckReport::evaluate(
        "entropy-restriction-identity",
        residual,
        1e-12,
        1.0,
        0.0,
        format!("D(nu|mu) = {d_full:.17e}, log mu(A) = {:.17e}", mass.ln()),
    );
    Ok(RestrictedTransportCheck { transport, entropy_identity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_chain_subset, build_hypercube};

    fn two_point() -> FiniteMetricProbabilitySpace {
        build_hypercube(1).unwrap()
    }

    #[test]
    fn w1_examples() {
        let s = build_hypercube(2).unwrap();
        let u = ProbabilityVector::uniform(4);
        let p = w1(&s, &u, &u).unwrap();
        assert_eq!(p.value, 0.0);
        for i in 0..4 {
            assert_eq!(p.mass(i, i), 0.25);
        }
        let p = w1(&s, &ProbabilityVector::point_mass(4, 0), &ProbabilityVector::point_mass(4, 3)).unwrap();
        assert_eq!(p.value, 2.0);
        for q in [0.0, 0.1, 0.5, 0.93, 1.0] {
            let nu1 = ProbabilityVector::new(vec![q, 1.0 - q]).unwrap();
            let p = w1(&two_point(), &nu1, &ProbabilityVector::uniform(2)).unwrap();
            assert!((p.value - (q - 0.5f64).abs()).abs() < 1e-15);
            assert!(p.gap <= 1e-12);
        }
    }

    #[test]
    fn plan_marginals_and_potential() {
        let s = build_hypercube(3).unwrap();
        let a = ProbabilityVector::new(vec![0.3, 0.0, 0.1, 0.2, 0.0, 0.15, 0.05, 0.2]).unwrap();
        let b = ProbabilityVector::new(vec![0.0, 0.25, 0.25, 0.0, 0.1, 0.1, 0.3, 0.0]).unwrap();
        let p = w1(&s, &a, &b).unwrap();
        for (x, y) in p.row_sums().iter().zip(a.entries()) {
            assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in p.column_sums().iter().zip(b.entries()) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(crate::lipschitz::lip_seminorm(&p.potential, &s) <= 1.0 + 1e-10);
        assert!(p.gap <= 1e-9 * (1.0 + p.value));
        let net = w1_network_value(&s, a.entries(), b.entries()).unwrap();
        assert!((net - p.value).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        let mu = [0.25; 4];
        assert_eq!(kl_divergence(&mu, &mu).unwrap(), 0.0);
        let d = kl_divergence(&[1.0, 0.0, 0.0, 0.0], &mu).unwrap();
        assert!((d - 4f64.ln()).abs() < 1e-15);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]), Err(Error::NotAbsolutelyContinuous { index: 1 }));
    }

    #[test]
    fn sigma_transport_two_point_and_singleton() {
        let est = sigma_transport(&two_point(), &TransportOptions::default()).unwrap();
        assert!((est.lower - 0.25).abs() < 1e-3, "{}", est.lower);
        assert!(est.lower <= 0.25 + 1e-9);
        assert_eq!(est.upper, 0.25);
        // oracle: ratio (q − 1/2)² / (2 kl(q‖1/2)) on a fine grid stays below 1/4
        for i in 1..1000 {
            let q = i as f64 / 1000.0;
            if i == 500 {
                continue;
            }
            let dv = kl_divergence(&[q, 1.0 - q], &[0.5, 0.5]).unwrap();
            assert!((q - 0.5).powi(2) / (2.0 * dv) <= 0.25 + 1e-12);
        }
        let single = FiniteMetricProbabilitySpace::new(vec!["p".into()], vec![vec![0.0]], vec![1.0]).unwrap();
        assert_eq!(sigma_transport(&single, &TransportOptions::default()).unwrap().lower, 0.0);
    }

    #[test]
    fn sigma_transport_square() {
        let est = sigma_transport(&build_hypercube(2).unwrap(), &TransportOptions::default()).unwrap();
        assert!((est.lower - 0.5).abs() <= 0.01, "{}", est.lower);
    }

    #[test]
    fn cor44_cases() {
        let cube = build_hypercube(3).unwrap();
        let chain = build_chain_subset(3).unwrap();
        let mass = chain.mass(cube.weights());
        let mu_a: Vec<f64> = (0..8).map(|i| if chain.contains(i) { cube.weights()[i] / mass } else { 0.0 }).collect();
        let r = check_cor44(&cube, &chain, &ProbabilityVector::new(mu_a).unwrap(), 90796.72, None).unwrap();
        assert_eq!(r.transport.lhs, 0.0);
        assert_eq!(r.transport.rhs, 0.0);
        assert!(r.transport.passed);
        let top = ProbabilityVector::point_mass(8, 7);
        let r = check_cor44(&cube, &chain, &top, 90796.72, None).unwrap();
        assert!(r.entropy_identity.passed, "{}", r.entropy_identity.lhs);
        assert!(r.transport.passed);
        let off = ProbabilityVector::point_mass(8, 2);
        assert_eq!(check_cor44(&cube, &chain, &off, 1.0, None), Err(Error::SupportViolation { index: 2 }));
    }

    #[test]
    fn plan_csv() {
        let s = two_point();
        let p = w1(&s, &ProbabilityVector::point_mass(2, 0), &ProbabilityVector::point_mass(2, 1)).unwrap();
        let text = p.to_csv().unwrap();
        assert_eq!(text.lines().collect::<Vec<_>>(), vec!["i,j,mass", "0,1,1.0000000000000000e0"]);
    }
}
