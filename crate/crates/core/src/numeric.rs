//! Small numerical kernels shared across modules: compensated summation,
//! log-sum-exp, and a bracketed one-dimensional maximizer.

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// `log Σ wᵢ exp(aᵢ)` over entries with positive weight.
pub fn log_weighted_sum_exp(exponents: &[f64], weights: &[f64]) -> f64 {
    let max = exponents
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&a, _)| a)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s = compensated_sum(
        exponents
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&a, &w)| w * (a - max).exp()),
    );
    max + s.ln()
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[lo, hi]`, assuming
/// unimodality inside the bracket. Returns `(argmax, max)`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo) <= rel_tol * (lo.abs() + hi.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximizes `f` over a sorted grid, then refines the best cell by golden
/// section. Handles multimodal functions as long as the grid resolves the
/// basin of the global maximum.
pub fn scan_then_refine<F: FnMut(f64) -> f64>(mut f: F, grid: &[f64], rel_tol: f64) -> (f64, f64) {
    assert!(!grid.is_empty());
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    if hi <= lo {
        return (grid[best], values[best]);
    }
    let (x, v) = golden_section_max(&mut f, lo, hi, rel_tol);
    if v >= values[best] {
        (x, v)
    } else {
        (grid[best], values[best])
    }
}

/// `n` points geometrically spaced on `[lo, hi]`, both ends included.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 2);
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo * (ratio * i as f64).exp() })
        .collect()
}
