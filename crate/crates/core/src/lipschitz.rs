//! Lipschitz seminorms, McShane-type extension from a subset, and ψ-norms
//! of the symmetrized field `(x, y) ↦ f(x) − f(y)` under `μ ⊗ μ`.

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::orlicz::{psi_norm, solve_psi, ScalarField};
use crate::space::{FiniteMetricProbabilitySpace, SubsetMask};

/// Product-space fields up to this many entries are materialized.
pub const SYMMETRIZED_DENSE_LIMIT: usize = 4_000_000;
/// Beyond the dense limit the integrand is streamed, up to this many pairs.
pub const SYMMETRIZED_STREAM_LIMIT: usize = 100_000_000;

/// `max_{x ≠ y} |f(x) − f(y)| / d(x, y)`; zero on a singleton.
pub fn lip_seminorm(values: &[f64], space: &FiniteMetricProbabilitySpace) -> f64 {
    assert_eq!(values.len(), space.len());
    let k = values.len();
    let mut best = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            best = best.max((values[i] - values[j]).abs() / space.distance(i, j));
        }
    }
    best
}

/// `g(x) = min_j [f(j) + d(x, j)]`: the largest 1-Lipschitz minorant of `f`.
/// Leaves a 1-Lipschitz field unchanged.
pub fn mcshane_regularize(values: &[f64], space: &FiniteMetricProbabilitySpace) -> Vec<f64> {
    let k = values.len();
    (0..k)
        .map(|x| (0..k).map(|j| values[j] + space.distance(x, j)).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Extends `field_on_a` (values at the mask's points, in index order) to the
/// whole space with `f̃(x) = L · min_{a ∈ A} [f(a)/L + d(a, x)]`, where `L` is
/// the seminorm of `f` on `A` (taken as 1 when `f` is constant on `A`).
/// Values on `A` are copied verbatim.
pub fn kirszbraun_extend(
    field_on_a: &[f64],
    space: &FiniteMetricProbabilitySpace,
    mask: &SubsetMask,
) -> Result<ScalarField> {
    if mask.len() != space.len() {
        return Err(Error::Dimension(format!("mask over {} points, space has {}", mask.len(), space.len())));
    }
    let members = mask.indices();
    if members.is_empty() {
        return Err(Error::EmptyMask);
    }
    if members.len() != field_on_a.len() {
        return Err(Error::Dimension(format!("{} values for {} mask points", field_on_a.len(), members.len())));
    }
    let mut lip = 0.0f64;
    for a in 0..members.len() {
        for b in (a + 1)..members.len() {
            lip = lip.max((field_on_a[a] - field_on_a[b]).abs() / space.distance(members[a], members[b]));
        }
    }
    // a field constant on A has no scale to preserve; use the unit formula
    let scale = if lip > 0.0 { lip } else { 1.0 };
    let mut out = vec![0.0; space.len()];
    for (x, slot) in out.iter_mut().enumerate() {
        *slot = scale
            * members
                .iter()
                .zip(field_on_a)
                .map(|(&a, &fa)| fa / scale + space.distance(a, x))
                .fold(f64::INFINITY, f64::min);
    }
    for (&a, &fa) in members.iter().zip(field_on_a) {
        out[a] = fa;
    }
    Ok(ScalarField::new(out))
}

/// ψα-norm of `(x, y) ↦ f(x) − f(y)` under the product weights.
pub fn symmetrized_psi_norm(values: &[f64], weights: &[f64], alpha: f64) -> Result<f64> {
    assert!(alpha >= 1.0);
    let k = values.len();
    let pairs = k.saturating_mul(k);
    if pairs > SYMMETRIZED_STREAM_LIMIT {
        return Err(Error::OutOfRange {
            what: "product-space size",
            value: pairs as f64,
            range: "[1, 1e8]",
        });
    }
    if pairs <= SYMMETRIZED_DENSE_LIMIT {
        let mut diff = Vec::with_capacity(pairs);
        let mut w = Vec::with_capacity(pairs);
        for x in 0..k {
            for y in 0..k {
                diff.push(values[x] - values[y]);
                w.push(weights[x] * weights[y]);
            }
        }
        return Ok(psi_norm(&diff, &w, alpha));
    }
    Ok(streamed_symmetrized_psi(values, weights, alpha))
}

fn streamed_symmetrized_psi(values: &[f64], weights: &[f64], alpha: f64) -> f64 {
    let support: Vec<usize> = (0..values.len()).filter(|&i| weights[i] > 0.0).collect();
    let hi = support.iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max);
    let lo = support.iter().map(|&i| values[i]).fold(f64::INFINITY, f64::min);
    let max = hi - lo;
    if max <= 0.0 {
        return 0.0;
    }
    let w_hi = support.iter().filter(|&&i| values[i] == hi).map(|&i| weights[i]).fold(f64::INFINITY, f64::min);
    let w_lo = support.iter().filter(|&&i| values[i] == lo).map(|&i| weights[i]).fold(f64::INFINITY, f64::min);
    let log_integral = |r: f64| {
        let top = (max / r).powf(alpha);
        let s = compensated_sum(support.iter().map(|&x| {
            weights[x]
                * compensated_sum(
                    support.iter().map(|&y| weights[y] * (((values[x] - values[y]).abs() / r).powf(alpha) - top).exp()),
                )
        }));
        top + s.ln()
    };
    solve_psi(max, w_hi * w_lo, alpha, log_integral)
}

/// Vertices of the polytope `{f : f(0) = 0, |f(i) − f(j)| ≤ d(i, j)}` of
/// 1-Lipschitz fields pinned at the first point.
///
/// Every vertex has `k − 1` linearly independent tight constraints forming a
/// spanning tree, so trees (via Prüfer sequences) times edge orientations
/// enumerate a superset that is then filtered for feasibility. Intended for
/// `k ≤ 7`.
pub fn lipschitz_vertices(space: &FiniteMetricProbabilitySpace) -> Result<Vec<Vec<f64>>> {
    let k = space.len();
    if k > 7 {
        return Err(Error::OutOfRange { what: "points for vertex enumeration", value: k as f64, range: "[1, 7]" });
    }
    if k == 1 {
        return Ok(vec![vec![0.0]]);
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    let scale = space.diameter().max(1.0);
    let mut seen = std::collections::HashSet::new();
    for_each_tree(k, |edges| {
        for signs in 0u32..(1 << (k - 1)) {
            let mut f = vec![f64::NAN; k];
            f[0] = 0.0;
            // edges are few; propagate until fixed point
            let mut assigned = 1;
            while assigned < k {
                let before = assigned;
                for (e, &(a, b)) in edges.iter().enumerate() {
                    let s = if signs >> e & 1 == 1 { 1.0 } else { -1.0 };
                    let d = space.distance(a, b);
                    if f[a].is_finite() && f[b].is_nan() {
                        f[b] = f[a] + s * d;
                        assigned += 1;
                    } else if f[b].is_finite() && f[a].is_nan() {
                        f[a] = f[b] - s * d;
                        assigned += 1;
                    }
                }
                if assigned == before {
                    break;
                }
            }
            let feasible = (0..k).all(|i| {
                ((i + 1)..k).all(|j| (f[i] - f[j]).abs() <= space.distance(i, j) * (1.0 + 1e-12) + 1e-15)
            });
            if feasible {
                let key: Vec<i64> = f.iter().map(|v| (v / scale * 1e9).round() as i64).collect();
                if seen.insert(key) {
                    out.push(f);
                }
            }
        }
    });
    Ok(out)
}

/// Calls `visit` with the edge list of every labeled tree on `k ≥ 2` nodes.
fn for_each_tree<F: FnMut(&[(usize, usize)])>(k: usize, mut visit: F) {
    if k == 2 {
        visit(&[(0, 1)]);
        return;
    }
    let len = k - 2;
    let mut seq = vec![0usize; len];
    loop {
        visit(&prufer_edges(&seq, k));
        let mut pos = 0;
        loop {
            if pos == len {
                return;
            }
            seq[pos] += 1;
            if seq[pos] < k {
                break;
            }
            seq[pos] = 0;
            pos += 1;
        }
    }
}

fn prufer_edges(seq: &[usize], k: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; k];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(k - 1);
    for &s in seq {
        let leaf = (0..k).find(|&v| degree[v] == 1).expect("a leaf exists");
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..k).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_chain_subset, build_hypercube};

    fn triangle() -> FiniteMetricProbabilitySpace {
        FiniteMetricProbabilitySpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![0.0, 1.0, 1.5], vec![1.0, 0.0, 2.0], vec![1.5, 2.0, 0.0]],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn seminorm_examples() {
        let s = triangle();
        assert_eq!(lip_seminorm(&[4.0, 4.0, 4.0], &s), 0.0);
        for x0 in 0..3 {
            let f: Vec<f64> = (0..3).map(|y| s.distance(x0, y)).collect();
            assert!((lip_seminorm(&f, &s) - 1.0).abs() < 1e-15);
        }
        let single = FiniteMetricProbabilitySpace::new(vec!["p".into()], vec![vec![0.0]], vec![1.0]).unwrap();
        assert_eq!(lip_seminorm(&[3.0], &single), 0.0);
    }

    #[test]
    fn chain_field_is_one_lipschitz() {
        let n = 5u32;
        let cube = build_hypercube(n).unwrap();
        let r = cube.restrict(&build_chain_subset(n).unwrap()).unwrap();
        let f: Vec<f64> = r.indices.iter().map(|&x| x.count_ones() as f64 - n as f64 / 2.0).collect();
        assert_eq!(lip_seminorm(&f, &r.space), 1.0);
    }

    #[test]
    fn extension_examples() {
        let s = triangle();
        let f = [0.3, -0.2, 0.9];
        let full = kirszbraun_extend(&f, &s, &SubsetMask::full(3)).unwrap();
        assert_eq!(full.values, f.to_vec());

        let single = kirszbraun_extend(&[0.0], &s, &SubsetMask::from_indices(3, &[1]).unwrap()).unwrap();
        for x in 0..3 {
            assert_eq!(single[x], s.distance(1, x));
        }
        assert!(kirszbraun_extend(&[], &s, &SubsetMask::new(vec![false; 3])).is_err());
    }

    #[test]
    fn chain_extension_on_cube_exhaustive() {
        let n = 3u32;
        let cube = build_hypercube(n).unwrap();
        let mask = build_chain_subset(n).unwrap();
        let idx = mask.indices();
        let f: Vec<f64> = idx.iter().map(|&x| x.count_ones() as f64 - 1.5).collect();
        let ext = kirszbraun_extend(&f, &cube, &mask).unwrap();
        for (a, &x) in idx.iter().enumerate() {
            assert_eq!(ext[x].to_bits(), f[a].to_bits());
        }
        for x in 0..8 {
            for y in 0..8 {
                assert!((ext[x] - ext[y]).abs() <= cube.distance(x, y) + 1e-15);
            }
        }
    }

    #[test]
    fn extension_preserves_non_unit_seminorm() {
        let s = triangle();
        let mask = SubsetMask::from_indices(3, &[0, 2]).unwrap();
        let f = [0.0, 3.0]; // seminorm 2 on A
        let ext = kirszbraun_extend(&f, &s, &mask).unwrap();
        assert!((lip_seminorm(&ext, &s) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetrized_examples() {
        assert_eq!(symmetrized_psi_norm(&[2.0, 2.0], &[0.5, 0.5], 2.0).unwrap(), 0.0);
        let a = 0.7;
        let got = symmetrized_psi_norm(&[-a, a], &[0.5, 0.5], 2.0).unwrap();
        assert!((got - 2.0 * a / 3f64.ln().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn streamed_matches_dense() {
        let values: Vec<f64> = (0..40).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3).collect();
        let weights = vec![1.0 / 40.0; 40];
        for alpha in [1.0, 2.0] {
            let dense = symmetrized_psi_norm(&values, &weights, alpha).unwrap();
            let streamed = streamed_symmetrized_psi(&values, &weights, alpha);
            assert!((dense - streamed).abs() <= 1e-12 * dense);
        }
    }

    #[test]
    fn vertices_of_two_point_and_triangle() {
        let c1 = build_hypercube(1).unwrap();
        let mut v = lipschitz_vertices(&c1).unwrap();
        v.sort_by(|a, b| a[1].partial_cmp(&b[1]).unwrap());
        assert_eq!(v, vec![vec![0.0, -1.0], vec![0.0, 1.0]]);
        let s = triangle();
        for f in lipschitz_vertices(&s).unwrap() {
            assert!(lip_seminorm(&f, &s) <= 1.0 + 1e-12);
            assert_eq!(f[0], 0.0);
        }
    }
}
