#![allow(dead_code)]

use conc_core::space::FiniteMetricProbabilitySpace;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flat Dirichlet draw.
pub fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..k).map(|_| { let e: f64 = Exp1.sample(rng); e + 1e-12 }).collect();
    let s: f64 = g.iter().sum();
    g.iter().map(|x| x / s).collect()
}

fn labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("p{i}")).collect()
}

/// Uniform points in the unit square with Euclidean distances.
pub fn plane_space(rng: &mut ChaCha8Rng, k: usize) -> FiniteMetricProbabilitySpace {
    let pts: Vec<(f64, f64)> = (0..k).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let d = pts
        .iter()
        .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
        .collect();
    let w = dirichlet(rng, k);
    FiniteMetricProbabilitySpace::new(labels(k), d, w).unwrap()
}

/// Random integer edge lengths in `1..=max_edge`, closed under shortest paths.
pub fn integer_space(rng: &mut ChaCha8Rng, k: usize, max_edge: u32) -> FiniteMetricProbabilitySpace {
    let mut d = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let v = f64::from(rng.gen_range(1..=max_edge));
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                if d[i][m] + d[m][j] < d[i][j] {
                    d[i][j] = d[i][m] + d[m][j];
                }
            }
        }
    }
    let w = dirichlet(rng, k);
    FiniteMetricProbabilitySpace::new(labels(k), d, w).unwrap()
}

pub fn random_field(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    (0..k)
        .map(|_| {
            let x: f64 = rng.gen_range(-1.0..1.0);
            if rng.gen_bool(0.15) {
                scale * x * 8.0
            } else {
                scale * x
            }
        })
        .collect()
}

pub fn centered(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let m: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    values.iter().map(|v| v - m).collect()
}

pub fn variance(values: &[f64], weights: &[f64]) -> f64 {
    let c = centered(values, weights);
    c.iter().zip(weights).map(|(v, w)| w * v * v).sum()
}

/// `sup_t 2 log E e^{t(f − m)} / t²` on a dense geometric grid of `|t|`,
/// together with the `t → 0` limit `Var`.
pub fn sigma_f_grid(values: &[f64], weights: &[f64]) -> f64 {
    let c = centered(values, weights);
    let mut best = variance(values, weights);
    let spread = c.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    for i in 0..4000 {
        let t = 1e-3 * 10f64.powf(6.0 * i as f64 / 3999.0) / spread;
        for s in [t, -t] {
            let top = c.iter().fold(f64::NEG_INFINITY, |a, v| a.max(s * v));
            let sum: f64 = c.iter().zip(weights).map(|(v, w)| w * (s * v - top).exp()).sum();
            best = best.max(2.0 * (top + sum.ln()) / (s * s));
        }
    }
    best
}

/// Integer-valued fields with `f(0) = 0` and `|f(x)| ≤ diam` that are
/// 1-Lipschitz. With integer distances these include every vertex of the
/// Lipschitz polytope (its constraint matrix is totally unimodular).
pub fn integer_lipschitz_fields(space: &FiniteMetricProbabilitySpace) -> Vec<Vec<f64>> {
    let k = space.len();
    let diam = space.diameter() as i64;
    let mut out = Vec::new();
    let mut f = vec![0i64; k];
    fn rec(pos: usize, f: &mut Vec<i64>, diam: i64, space: &FiniteMetricProbabilitySpace, out: &mut Vec<Vec<f64>>) {
        if pos == f.len() {
            out.push(f.iter().map(|&v| v as f64).collect());
            return;
        }
        for v in -diam..=diam {
            f[pos] = v;
            if (0..pos).all(|j| ((f[j] - v).abs() as f64) <= space.distance(j, pos)) {
                rec(pos + 1, f, diam, space, out);
            }
        }
    }
    if k == 1 {
        return vec![vec![0.0]];
    }
    rec(1, &mut f, diam, space, &mut out);
    out
}
