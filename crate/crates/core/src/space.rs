//! Finite metric probability spaces `(M, d, μ)`: construction, validation,
//! restriction to subsets, and ℓ¹ products.
//!
//! Large structured spaces (hypercubes, products, Monte Carlo samples) keep
//! their metric implicit so that `2¹⁶`-point cubes or `10⁵`-point samples
//! never materialize a dense distance matrix.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Weight-sum deviation tolerated on input; weights are renormalized after.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;
/// Spaces above this size get sampled rather than exhaustive triangle checks.
pub const FULL_TRIANGLE_CHECK_LIMIT: usize = 512;
/// Restrictions up to this size are materialized as dense matrices.
const DENSE_RESTRICTION_LIMIT: usize = 4096;
const TRIANGLE_SAMPLE_SEED: u64 = 0x7e1a_6e5e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Euclidean,
    L1,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    /// Row-major `k × k` matrix.
    Dense { k: usize, d: Vec<f64> },
    /// Hamming distance on `{0,1}ⁿ`; point `x` has coordinate `i` at bit `i`.
    Hamming { n: u32 },
    /// ℓ¹ product of a dense base metric; point index digits (base `k`) are coordinates.
    Product { base_k: usize, base: Vec<f64>, n: u32 },
    /// Points in ℝ^dim, row-major.
    Coordinates { dim: usize, coords: Vec<f64>, norm: Norm },
    /// Sub-selection of a parent metric.
    Indexed { parent: Arc<Metric>, indices: Vec<usize> },
}

impl Metric {
    pub fn len(&self) -> usize {
        match self {
            Metric::Dense { k, .. } => *k,
            Metric::Hamming { n } => 1usize << n,
            Metric::Product { base_k, n, .. } => base_k.pow(*n),
            Metric::Coordinates { dim, coords, .. } => coords.len() / dim,
            Metric::Indexed { indices, .. } => indices.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match self {
            Metric::Dense { k, d } => d[i * k + j],
            Metric::Hamming { .. } => f64::from((i ^ j).count_ones()),
            Metric::Product { base_k, base, n } => {
                let (mut a, mut b) = (i, j);
                let mut total = 0.0;
                for _ in 0..*n {
                    total += base[(a % base_k) * base_k + b % base_k];
                    a /= base_k;
                    b /= base_k;
                }
                total
            }
            Metric::Coordinates { dim, coords, norm } => {
                let x = &coords[i * dim..(i + 1) * dim];
                let y = &coords[j * dim..(j + 1) * dim];
                match norm {
                    Norm::Euclidean => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
                    Norm::L1 => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
                }
            }
            Metric::Indexed { parent, indices } => parent.distance(indices[i], indices[j]),
        }
    }
}

/// How thoroughly the triangle inequality was verified at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Validation {
    Full,
    Sampled { triples: usize },
    ByConstruction,
}

/// A finite set of points with a validated metric and probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricProbabilitySpace {
    labels: Vec<String>,
    metric: Metric,
    weights: Vec<f64>,
    validation: Validation,
}

impl FiniteMetricProbabilitySpace {
    /// Builds a space from an explicit distance matrix, enforcing symmetry,
    /// zero diagonal, positive off-diagonal entries, the triangle inequality,
    /// and normalized nonnegative weights.
    pub fn new(labels: Vec<String>, distance: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let k = labels.len();
        if k == 0 {
            return Err(Error::EmptySpace);
        }
        if distance.len() != k || weights.len() != k {
            return Err(Error::Dimension(format!(
                "{k} labels, {} distance rows, {} weights",
                distance.len(),
                weights.len()
            )));
        }
        let mut d = Vec::with_capacity(k * k);
        for (i, row) in distance.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Dimension(format!("distance row {i} has {} entries, expected {k}", row.len())));
            }
            d.extend_from_slice(row);
        }
        Self::from_dense(labels, d, weights)
    }

    pub(crate) fn from_dense(labels: Vec<String>, mut d: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let k = labels.len();
        if k == 0 {
            return Err(Error::EmptySpace);
        }
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("distance"));
        }
        for i in 0..k {
            if d[i * k + i] != 0.0 {
                return Err(Error::NonZeroDiagonal(i));
            }
            for j in (i + 1)..k {
                let (dij, dji) = (d[i * k + j], d[j * k + i]);
                if (dij - dji).abs() > 1e-12 * dij.abs().max(dji.abs()).max(1.0) {
                    return Err(Error::NotSymmetric { i, j, dij, dji });
                }
                if dij <= 0.0 {
                    return Err(Error::NonPositiveDistance { i, j, value: dij });
                }
                let avg = 0.5 * (dij + dji);
                d[i * k + j] = avg;
                d[j * k + i] = avg;
            }
        }
        let validation = check_triangle(k, &d)?;
        let weights = normalize_weights(weights)?;
        Ok(Self { labels, metric: Metric::Dense { k, d }, weights, validation })
    }

    /// Points given as coordinates in ℝ^dim with the Euclidean or ℓ¹ metric.
    /// Uniform weights; duplicated points are rejected.
    pub fn from_points(dim: usize, coords: Vec<f64>, norm: Norm) -> Result<Self> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::Dimension(format!("{} coordinates for dimension {dim}", coords.len())));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("coordinates"));
        }
        let k = coords.len() / dim;
        let mut order: Vec<usize> = (0..k).collect();
        let row = |i: usize| &coords[i * dim..(i + 1) * dim];
        order.sort_by(|&a, &b| row(a).partial_cmp(row(b)).expect("finite coordinates"));
        for w in order.windows(2) {
            if row(w[0]) == row(w[1]) {
                let (i, j) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::NonPositiveDistance { i, j, value: 0.0 });
            }
        }
        Ok(Self {
            labels: (0..k).map(|i| i.to_string()).collect(),
            metric: Metric::Coordinates { dim, coords, norm },
            weights: vec![1.0 / k as f64; k],
            validation: Validation::ByConstruction,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn validation(&self) -> Validation {
        self.validation
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric.distance(i, j)
    }

    /// Dense row-major copy of the distance matrix.
    pub fn dense_distances(&self) -> Vec<f64> {
        match &self.metric {
            Metric::Dense { d, .. } => d.clone(),
            m => {
                let k = self.len();
                let mut d = vec![0.0; k * k];
                for i in 0..k {
                    for j in (i + 1)..k {
                        let v = m.distance(i, j);
                        d[i * k + j] = v;
                        d[j * k + i] = v;
                    }
                }
                d
            }
        }
    }

    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        let k = self.len();
        let d = self.dense_distances();
        d.chunks(k).map(<[f64]>::to_vec).collect()
    }

    pub fn diameter(&self) -> f64 {
        match &self.metric {
            Metric::Hamming { n } => f64::from(*n),
            Metric::Product { base_k, base, n } => {
                let _ = base_k;
                f64::from(*n) * base.iter().copied().fold(0.0, f64::max)
            }
            m => {
                let k = self.len();
                let mut best: f64 = 0.0;
                for i in 0..k {
                    for j in (i + 1)..k {
                        best = best.max(m.distance(i, j));
                    }
                }
                best
            }
        }
    }

    /// Same points and weights, all distances multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::OutOfRange { what: "scale", value: s, range: "(0, inf)" });
        }
        let d: Vec<f64> = self.dense_distances().into_iter().map(|x| x * s).collect();
        Ok(Self { labels: self.labels.clone(), metric: Metric::Dense { k: self.len(), d }, weights: self.weights.clone(), validation: self.validation })
    }

    /// Same metric, new probability weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::Dimension(format!("{} weights for {} points", weights.len(), self.len())));
        }
        Ok(Self { weights: normalize_weights(weights)?, ..self.clone() })
    }

    /// Returns `Some(n)` when this is the uniform Hamming cube `{0,1}ⁿ`
    /// (either built directly or as a product of the unit two-point space).
    pub fn hypercube_dimension(&self) -> Option<u32> {
        let n = match &self.metric {
            Metric::Hamming { n } => *n,
            Metric::Product { base_k: 2, base, n } if base[1] == 1.0 => *n,
            _ => return None,
        };
        let w = 0.5f64.powi(n as i32);
        self.weights.iter().all(|&x| x == w).then_some(n)
    }

    /// Normalized restriction `μ_A = μ(A ∩ ·)/μ(A)` with the induced metric.
    pub fn restrict(&self, mask: &SubsetMask) -> Result<Restriction> {
        if mask.len() != self.len() {
            return Err(Error::Dimension(format!("mask over {} points, space has {}", mask.len(), self.len())));
        }
        let indices = mask.indices();
        if indices.is_empty() {
            return Err(Error::EmptyMask);
        }
        let mass = mask.mass(&self.weights);
        if mass <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        let weights: Vec<f64> = indices.iter().map(|&i| self.weights[i] / mass).collect();
        let weights = normalize_weights(weights)?;
        let m = indices.len();
        let metric = match &self.metric {
            Metric::Coordinates { dim, coords, norm } => {
                let mut sub = Vec::with_capacity(m * dim);
                for &i in &indices {
                    sub.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                }
                Metric::Coordinates { dim: *dim, coords: sub, norm: *norm }
            }
            parent if m <= DENSE_RESTRICTION_LIMIT => {
                let mut d = vec![0.0; m * m];
                for (a, &i) in indices.iter().enumerate() {
                    for (b, &j) in indices.iter().enumerate().skip(a + 1) {
                        let v = parent.distance(i, j);
                        d[a * m + b] = v;
                        d[b * m + a] = v;
                    }
                }
                Metric::Dense { k: m, d }
            }
            parent => Metric::Indexed { parent: Arc::new(parent.clone()), indices: indices.clone() },
        };
        Ok(Restriction { space: Self { labels, metric, weights, validation: self.validation }, mass, indices })
    }
}

fn check_triangle(k: usize, d: &[f64]) -> Result<Validation> {
    let check = |i: usize, j: usize, l: usize| -> Result<()> {
        let dik = d[i * k + l];
        let via = d[i * k + j] + d[j * k + l];
        if dik > via + 1e-12 * via.max(1.0) {
            return Err(Error::TriangleViolated { i, j, k: l, dik, via });
        }
        Ok(())
    };
    if k <= FULL_TRIANGLE_CHECK_LIMIT {
        for i in 0..k {
            for l in (i + 1)..k {
                for j in 0..k {
                    if j != i && j != l {
                        check(i, j, l)?;
                    }
                }
            }
        }
        Ok(Validation::Full)
    } else {
        let triples = 10 * k * k;
        let mut rng = ChaCha8Rng::seed_from_u64(TRIANGLE_SAMPLE_SEED);
        for _ in 0..triples {
            let (i, j, l) = (rng.gen_range(0..k), rng.gen_range(0..k), rng.gen_range(0..k));
            check(i, j, l)?;
        }
        Ok(Validation::Sampled { triples })
    }
}

fn normalize_weights(weights: Vec<f64>) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::EmptySpace);
    }
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite("weights"));
        }
        if value < 0.0 {
            return Err(Error::NegativeWeight { index, value });
        }
    }
    let total = compensated_sum(weights.iter().copied());
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::WeightSum(total));
    }
    if total == 1.0 {
        return Ok(weights);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Result of [`FiniteMetricProbabilitySpace::restrict`].
#[derive(Debug, Clone, PartialEq)]
pub struct Restriction {
    pub space: FiniteMetricProbabilitySpace,
    /// `μ(A)`, compensated sum of the selected original weights.
    pub mass: f64,
    /// Original indices of the selected points, ascending.
    pub indices: Vec<usize>,
}

/// Boolean membership vector over the points of a space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetMask {
    members: Vec<bool>,
}

impl SubsetMask {
    pub fn new(members: Vec<bool>) -> Self {
        Self { members }
    }

    pub fn full(k: usize) -> Self {
        Self { members: vec![true; k] }
    }

    pub fn from_indices(k: usize, indices: &[usize]) -> Result<Self> {
        let mut members = vec![false; k];
        for &i in indices {
            if i >= k {
                return Err(Error::OutOfRange { what: "mask index", value: i as f64, range: "[0, k)" });
            }
            members[i] = true;
        }
        Ok(Self { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.members.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }

    /// `μ(A)` by compensated summation.
    pub fn mass(&self, weights: &[f64]) -> f64 {
        compensated_sum(self.members.iter().zip(weights).filter(|(&b, _)| b).map(|(_, &w)| w))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MaskFile { members: self.indices() }).expect("mask serializes")
    }

    pub fn from_json(k: usize, text: &str) -> Result<Self> {
        let file: MaskFile = serde_json::from_str(text)?;
        Self::from_indices(k, &file.members)
    }
}

#[derive(Serialize, Deserialize)]
struct MaskFile {
    members: Vec<usize>,
}

/// Probability vector with its support recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    entries: Vec<f64>,
    support: Vec<usize>,
}

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        let entries = normalize_weights(entries)?;
        let support = entries.iter().enumerate().filter_map(|(i, &w)| (w > 0.0).then_some(i)).collect();
        Ok(Self { entries, support })
    }

    pub fn point_mass(k: usize, i: usize) -> Self {
        let mut entries = vec![0.0; k];
        entries[i] = 1.0;
        Self { entries, support: vec![i] }
    }

    pub fn uniform(k: usize) -> Self {
        Self { entries: vec![1.0 / k as f64; k], support: (0..k).collect() }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }
}

// ----------------------------------------------------------------------------
// Builders
// ----------------------------------------------------------------------------

/// Bit string `x₁x₂…xₙ` for point index `x` (coordinate `i` is bit `i`).
pub fn cube_label(x: usize, n: u32) -> String {
    (0..n).map(|i| if (x >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

/// `({0,1}ⁿ, Hamming, uniform)`, `1 ≤ n ≤ 16`.
pub fn build_hypercube(n: u32) -> Result<FiniteMetricProbabilitySpace> {
    if !(1..=16).contains(&n) {
        return Err(Error::OutOfRange { what: "hypercube dimension", value: f64::from(n), range: "[1, 16]" });
    }
    let k = 1usize << n;
    Ok(FiniteMetricProbabilitySpace {
        labels: (0..k).map(|x| cube_label(x, n)).collect(),
        metric: Metric::Hamming { n },
        weights: vec![1.0 / k as f64; k],
        validation: Validation::ByConstruction,
    })
}

/// The `n + 1` chain points `(0,…,0), (1,0,…,0), …, (1,…,1)` of the cube.
pub fn build_chain_subset(n: u32) -> Result<SubsetMask> {
    if !(1..=16).contains(&n) {
        return Err(Error::OutOfRange { what: "hypercube dimension", value: f64::from(n), range: "[1, 16]" });
    }
    let indices: Vec<usize> = (0..=n).map(|m| (1usize << m) - 1).collect();
    SubsetMask::from_indices(1 << n, &indices)
}

/// `(Mⁿ, Σᵢ d(xᵢ, yᵢ), μⁿ)` for `|M|ⁿ ≤ 65536`.
pub fn build_product(base: &FiniteMetricProbabilitySpace, n: u32) -> Result<FiniteMetricProbabilitySpace> {
    if n == 0 {
        return Err(Error::OutOfRange { what: "product power", value: 0.0, range: "[1, inf)" });
    }
    let base_k = base.len();
    let size = (base_k as f64).powi(n as i32);
    if size > 65536.0 {
        return Err(Error::OutOfRange { what: "product size", value: size, range: "[1, 65536]" });
    }
    if n == 1 {
        return Ok(base.clone());
    }
    let k = base_k.pow(n);
    let mut labels = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for x in 0..k {
        let mut rest = x;
        let mut parts = Vec::with_capacity(n as usize);
        let mut w = 1.0;
        for _ in 0..n {
            let digit = rest % base_k;
            parts.push(base.labels[digit].as_str());
            w *= base.weights[digit];
            rest /= base_k;
        }
        labels.push(format!("({})", parts.join(",")));
        weights.push(w);
    }
    Ok(FiniteMetricProbabilitySpace {
        labels,
        metric: Metric::Product { base_k, base: base.dense_distances(), n },
        weights: normalize_weights(weights)?,
        validation: match base.validation {
            Validation::Full | Validation::ByConstruction => Validation::ByConstruction,
            v => v,
        },
    })
}

/// Upper-set test on `{0,1}ⁿ` under the coordinatewise order.
pub fn is_monotone(mask: &SubsetMask, n: u32) -> bool {
    assert_eq!(mask.len(), 1usize << n, "mask must cover 2^n points");
    (0..mask.len())
        .filter(|&x| mask.contains(x))
        .all(|x| (0..n).all(|i| mask.contains(x | (1 << i))))
}

/// Shortest-path metric of the subgraph induced on `A` by unit-distance edges.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMetric {
    /// Original indices of the members of `A`.
    pub members: Vec<usize>,
    /// `m × m` row-major path lengths; `f64::INFINITY` when unreachable.
    pub distances: Vec<f64>,
    /// Connected-component label per member.
    pub component: Vec<usize>,
    pub components: usize,
}

impl GraphMetric {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.distances[a * self.members.len() + b]
    }

    pub fn is_connected(&self) -> bool {
        self.components <= 1
    }

    pub fn require_connected(&self) -> Result<&Self> {
        if self.is_connected() {
            Ok(self)
        } else {
            Err(Error::Disconnected { components: self.components, labels: self.component.clone() })
        }
    }
}

/// BFS distances inside `A`, where `x ~ y` iff `d(x, y) = 1`.
pub fn induced_graph_metric(space: &FiniteMetricProbabilitySpace, mask: &SubsetMask) -> Result<GraphMetric> {
    if mask.len() != space.len() {
        return Err(Error::Dimension(format!("mask over {} points, space has {}", mask.len(), space.len())));
    }
    let members = mask.indices();
    if members.is_empty() {
        return Err(Error::EmptyMask);
    }
    let m = members.len();
    let mut position = vec![usize::MAX; space.len()];
    for (a, &x) in members.iter().enumerate() {
        position[x] = a;
    }
    let neighbours: Vec<Vec<usize>> = match space.metric() {
        Metric::Hamming { n } => members
            .iter()
            .map(|&x| (0..*n).map(|i| x ^ (1 << i)).filter(|&y| mask.contains(y)).map(|y| position[y]).collect())
            .collect(),
        metric => (0..m)
            .map(|a| {
                (0..m)
                    .filter(|&b| b != a && (metric.distance(members[a], members[b]) - 1.0).abs() <= 1e-12)
                    .collect()
            })
            .collect(),
    };
    let mut distances = vec![f64::INFINITY; m * m];
    let mut component = vec![usize::MAX; m];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for s in 0..m {
        let row = &mut distances[s * m..(s + 1) * m];
        row[s] = 0.0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in &neighbours[u] {
                if row[v].is_infinite() {
                    row[v] = row[u] + 1.0;
                    queue.push_back(v);
                }
            }
        }
        if component[s] == usize::MAX {
            for (t, &dist) in row.iter().enumerate() {
                if dist.is_finite() {
                    component[t] = components;
                }
            }
            components += 1;
        }
    }
    Ok(GraphMetric { members, distances, component, components })
}

// ----------------------------------------------------------------------------
// JSON interchange
// ----------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    labels: Vec<serde_json::Value>,
    distance: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// Largest space exported as a dense JSON matrix.
pub const JSON_EXPORT_LIMIT: usize = 8192;

impl FiniteMetricProbabilitySpace {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpaceFile = serde_json::from_str(text)?;
        let labels = file
            .labels
            .into_iter()
            .map(|v| match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            })
            .collect();
        Self::new(labels, file.distance, file.weights)
    }

    pub fn to_json(&self) -> Result<String> {
        if self.len() > JSON_EXPORT_LIMIT {
            return Err(Error::OutOfRange { what: "points for JSON export", value: self.len() as f64, range: "[1, 8192]" });
        }
        let file = SpaceFile {
            labels: self.labels.iter().cloned().map(serde_json::Value::String).collect(),
            distance: self.distance_matrix(),
            weights: self.weights.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(d: f64) -> FiniteMetricProbabilitySpace {
        FiniteMetricProbabilitySpace::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, d], vec![d, 0.0]],
            vec![0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn singleton_and_two_point() {
        let s = FiniteMetricProbabilitySpace::new(vec!["p".into()], vec![vec![0.0]], vec![1.0]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.diameter(), 0.0);
        let t = two_point(1.0);
        assert_eq!(t.distance(0, 1), 1.0);
        assert_eq!(t.distance(1, 0), 1.0);
        assert_eq!(t.validation(), Validation::Full);
    }

    #[test]
    fn triangle_violation_reports_triple() {
        let err = FiniteMetricProbabilitySpace::new(
            vec!["1".into(), "2".into(), "3".into()],
            vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]],
            vec![1.0 / 3.0; 3],
        )
        .unwrap_err();
        assert!(matches!(err, Error::TriangleViolated { i: 0, j: 1, k: 2, .. }), "{err:?}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let labels = || vec!["a".to_string(), "b".to_string()];
        let asym = FiniteMetricProbabilitySpace::new(labels(), vec![vec![0.0, 1.0], vec![2.0, 0.0]], vec![0.5, 0.5]);
        assert!(matches!(asym, Err(Error::NotSymmetric { .. })));
        let neg = FiniteMetricProbabilitySpace::new(labels(), vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![-0.5, 1.5]);
        assert!(matches!(neg, Err(Error::NegativeWeight { index: 0, .. })));
        let sum = FiniteMetricProbabilitySpace::new(labels(), vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.5, 0.6]);
        assert!(matches!(sum, Err(Error::WeightSum(_))));
        let zero = FiniteMetricProbabilitySpace::new(labels(), vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![0.5, 0.5]);
        assert!(matches!(zero, Err(Error::NonPositiveDistance { .. })));
        let short = FiniteMetricProbabilitySpace::new(labels(), vec![vec![0.0, 1.0]], vec![0.5, 0.5]);
        assert!(matches!(short, Err(Error::Dimension(_))));
    }

    #[test]
    fn small_weight_drift_is_renormalized() {
        let s = FiniteMetricProbabilitySpace::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0.5 + 4e-10, 0.5],
        )
        .unwrap();
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hypercube_basics() {
        let c1 = build_hypercube(1).unwrap();
        assert_eq!(c1.distance_matrix(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(c1.weights(), &[0.5, 0.5]);
        let c2 = build_hypercube(2).unwrap();
        assert_eq!(c2.distance(0b00, 0b11), 2.0);
        let c4 = build_hypercube(4).unwrap();
        assert_eq!(c4.len(), 16);
        assert!(c4.weights().iter().all(|&w| w == 1.0 / 16.0));
        assert!(build_hypercube(0).is_err());
        assert!(build_hypercube(17).is_err());
        assert_eq!(c4.labels()[1], "1000");
        assert_eq!(c4.hypercube_dimension(), Some(4));
    }

    #[test]
    fn chain_subset_mass() {
        for (n, expected) in [(1u32, 1.0), (2, 0.75), (4, 5.0 / 16.0)] {
            let cube = build_hypercube(n).unwrap();
            let mask = build_chain_subset(n).unwrap();
            assert_eq!(mask.count(), n as usize + 1);
            assert_eq!(mask.mass(cube.weights()), expected);
        }
    }

    #[test]
    fn chain_mass_exact_up_to_16() {
        for n in 1..=16u32 {
            let cube = build_hypercube(n).unwrap();
            let mask = build_chain_subset(n).unwrap();
            assert_eq!(mask.mass(cube.weights()), (n as f64 + 1.0) / (1u64 << n) as f64);
        }
    }

    #[test]
    fn product_of_two_point_is_hypercube() {
        let base = build_hypercube(1).unwrap();
        for n in 1..=4 {
            let p = build_product(&base, n).unwrap();
            let c = build_hypercube(n).unwrap();
            assert_eq!(p.distance_matrix(), c.distance_matrix());
            assert_eq!(p.weights(), c.weights());
            assert_eq!(p.hypercube_dimension(), Some(n));
        }
    }

    #[test]
    fn product_identity_and_l1() {
        let base = FiniteMetricProbabilitySpace::new(
            vec!["x".into(), "y".into(), "z".into()],
            vec![vec![0.0, 1.0, 1.5], vec![1.0, 0.0, 2.0], vec![1.5, 2.0, 0.0]],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        assert_eq!(build_product(&base, 1).unwrap(), base);
        let p = build_product(&base, 2).unwrap();
        assert_eq!(p.len(), 9);
        // index = a + 3 b
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    assert_eq!(p.distance(a + 3 * b, a + 3 * c), base.distance(b, c));
                }
            }
        }
        assert!((p.weights()[1 + 3 * 2] - 0.3 * 0.5).abs() < 1e-15);
        assert!(build_product(&base, 11).is_err());
    }

    #[test]
    fn restriction_cases() {
        let cube = build_hypercube(4).unwrap();
        let full = cube.restrict(&SubsetMask::full(16)).unwrap();
        assert_eq!(full.mass, 1.0);
        assert_eq!(full.space.distance_matrix(), cube.distance_matrix());
        assert_eq!(full.space.weights(), cube.weights());

        let chain = cube.restrict(&build_chain_subset(4).unwrap()).unwrap();
        assert_eq!(chain.mass, 5.0 / 16.0);
        assert_eq!(chain.space.len(), 5);
        assert!(chain.space.weights().iter().all(|&w| (w - 0.2).abs() < 1e-15));

        let single = cube.restrict(&SubsetMask::from_indices(16, &[7]).unwrap()).unwrap();
        assert_eq!(single.space.weights(), &[1.0]);

        let zero_mass = cube.with_weights({
            let mut w = vec![1.0 / 15.0; 16];
            w[3] = 0.0;
            w
        });
        let zero_mass = zero_mass.unwrap();
        assert_eq!(zero_mass.restrict(&SubsetMask::from_indices(16, &[3]).unwrap()).unwrap_err(), Error::ZeroMass);
        assert_eq!(cube.restrict(&SubsetMask::new(vec![false; 16])).unwrap_err(), Error::EmptyMask);
    }

    #[test]
    fn graph_metric_examples() {
        let cube = build_hypercube(3).unwrap();
        let full = induced_graph_metric(&cube, &SubsetMask::full(8)).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                assert_eq!(full.distance(a, b), cube.distance(a, b));
            }
        }
        let c2 = build_hypercube(2).unwrap();
        let split = induced_graph_metric(&c2, &SubsetMask::from_indices(4, &[0b00, 0b11]).unwrap()).unwrap();
        assert!(split.distance(0, 1).is_infinite());
        assert_eq!(split.components, 2);
        assert!(matches!(split.require_connected(), Err(Error::Disconnected { components: 2, .. })));

        // upper set of (1,0,0): every point with x₁ = 1
        let upper: Vec<usize> = (0..8).filter(|x| x & 1 == 1).collect();
        let mask = SubsetMask::from_indices(8, &upper).unwrap();
        assert!(is_monotone(&mask, 3));
        let g = induced_graph_metric(&cube, &mask).unwrap();
        for (a, &x) in g.members.iter().enumerate() {
            for (b, &y) in g.members.iter().enumerate() {
                assert_eq!(g.distance(a, b), cube.distance(x, y));
            }
        }
    }

    #[test]
    fn monotone_examples() {
        let n = 3;
        let top = SubsetMask::from_indices(8, &[7]).unwrap();
        assert!(is_monotone(&top, n));
        let bottom = SubsetMask::from_indices(8, &[0]).unwrap();
        assert!(!is_monotone(&bottom, n));
        assert!(!is_monotone(&build_chain_subset(3).unwrap(), n));
    }

    #[test]
    fn json_round_trip() {
        let s = two_point(1.5);
        let text = s.to_json().unwrap();
        assert_eq!(FiniteMetricProbabilitySpace::from_json(&text).unwrap(), s);
        let mask = SubsetMask::from_indices(4, &[1, 3]).unwrap();
        assert_eq!(SubsetMask::from_json(4, &mask.to_json()).unwrap(), mask);
        let bad = r#"{"labels":[1,2,3],"distance":[[0,1,5],[1,0,1],[5,1,0]],"weights":[0.2,0.3,0.5]}"#;
        assert!(matches!(FiniteMetricProbabilitySpace::from_json(bad), Err(Error::TriangleViolated { .. })));
    }

    #[test]
    fn sampled_validation_for_large_spaces() {
        let k = 600;
        let coords: Vec<f64> = (0..k).map(|i| i as f64 * 0.37).collect();
        let line = FiniteMetricProbabilitySpace::from_points(1, coords, Norm::Euclidean).unwrap();
        let dense = FiniteMetricProbabilitySpace::new(line.labels().to_vec(), line.distance_matrix(), line.weights().to_vec()).unwrap();
        assert_eq!(dense.validation(), Validation::Sampled { triples: 10 * k * k });
    }

    #[test]
    fn duplicate_points_rejected() {
        let err = FiniteMetricProbabilitySpace::from_points(2, vec![0.0, 1.0, 0.5, 0.5, 0.0, 1.0], Norm::L1).unwrap_err();
        assert!(matches!(err, Error::NonPositiveDistance { i: 0, j: 2, .. }));
    }
}
