//! Acceptance criteria. Runs without the libtest harness so that one
//! PASS/FAIL line per criterion is always printed.

mod common;

use std::f64::consts::{E, LN_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use conc_core::constants::{sigma_estimate_lipschitz, sigma_f, spread_estimate, EstimateOptions};
use conc_core::continuum::{quad_restricted_moments, DensitySpec, Family};
use conc_core::lipschitz::{kirszbraun_extend, lip_seminorm};
use conc_core::orlicz::{moment_sup, psi_norm};
use conc_core::report::{Outcome, ScenarioReport};
use conc_core::scenario::{run_scenario, ScenarioParams};
use conc_core::space::{build_hypercube, ProbabilityVector, SubsetMask};
use conc_core::spectral::{build_graph_form, lambda1, AdjacencyRule};
use conc_core::transport::{check_cor44, grid_oracle, kl_divergence, sigma_transport, w1, TransportOptions};
use rand::Rng;

use common::*;

type CriterionResult = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> std::result::Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("runtime {t:?} exceeds {limit:?}"))?;
    Ok(t)
}

fn scenario(name: &str, params: ScenarioParams, seed: u64) -> std::result::Result<ScenarioReport, String> {
    run_scenario(name, &params, seed).map_err(|e| format!("{name}: {e}"))
}

fn all_checks_pass(r: &ScenarioReport) -> std::result::Result<(), String> {
    ensure(r.outcome == Outcome::Pass, || {
        let bad: Vec<_> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
        format!("{} outcome {:?}, failing: {bad:?}", r.scenario, r.outcome)
    })
}

fn q(r: &ScenarioReport, name: &str) -> std::result::Result<f64, String> {
    r.quantity_value(name).ok_or_else(|| format!("{} lacks quantity {name}", r.scenario))
}

fn c1_hypercube_chain() -> CriterionResult {
    let start = Instant::now();
    for n in 1..=16u32 {
        let r = scenario("hypercube-chain", ScenarioParams { n: Some(n), ..Default::default() }, 0)?;
        all_checks_pass(&r)?;
        let nf = f64::from(n);
        let mass = (nf + 1.0) / 2f64.powi(n as i32);
        let var = nf * (nf + 2.0) / 12.0;
        ensure(q(&r, "mu(A)")? == mass, || format!("n={n}: mu(A) {} != {mass}", q(&r, "mu(A)").unwrap()))?;
        ensure(q(&r, "var_A(f)")? == var, || format!("n={n}: var {} != {var}", q(&r, "var_A(f)").unwrap()))?;
        let lhs = (1.0 / (3.0 * LN_2)) * (nf / 4.0) * (2f64.powi(n as i32) / (nf + 1.0)).ln();
        ensure(nf * nf / 12.0 >= lhs, || format!("n={n}: log bound {lhs}"))?;
    }
    let t = within(start, Duration::from_secs(1))?;
    Ok(format!("n = 1..16 exact, {t:?}"))
}

fn c2_gaussian_shell() -> CriterionResult {
    let start = Instant::now();
    let spec = DensitySpec::new(Family::ExponentialRadial2d, 2).unwrap();
    let mut worst: (f64, f64) = (0.0, 0.0);
    for r in [0.0, 1.0, 2.0, 3.0] {
        let m = quad_restricted_moments(&spec, r).map_err(|e| e.to_string())?;
        let dm = (m.mass - (-r * r / 2.0f64).exp()).abs();
        let dv = (m.variance - (r * r / 2.0 + 1.0)).abs();
        ensure(dm <= 1e-10 && dv <= 1e-8, || format!("R={r}: mass err {dm}, var err {dv}"))?;
        worst = (worst.0.max(dm), worst.1.max(dv));
    }
    let r = scenario("gaussian-shell", ScenarioParams { r: Some(2.0), samples: Some(1_000_000), ..Default::default() }, 7)?;
    all_checks_pass(&r)?;
    let rel = (q(&r, "gamma(A_R) monte carlo")? / (-2.0f64).exp() - 1.0).abs();
    ensure(rel <= 0.01, || format!("monte carlo mass off by {rel}"))?;
    let t = within(start, Duration::from_secs(10))?;
    Ok(format!("max errors mass {:.1e}, var {:.1e}; monte carlo rel {rel:.1e}; {t:?}", worst.0, worst.1))
}

fn c3_exp_tail() -> CriterionResult {
    let start = Instant::now();
    let spec = DensitySpec::new(Family::TwoSidedExponential, 1).unwrap();
    for r in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let m = quad_restricted_moments(&spec, r).map_err(|e| e.to_string())?;
        let want = r * r + 2.0 * r + 2.0;
        ensure((m.variance - want).abs() <= 1e-9, || format!("R={r}: var {} vs {want}", m.variance))?;
        let log_sq = (E / m.mass).ln().powi(2);
        ensure(m.variance >= log_sq && ((r + 1.0) * (r + 1.0) - log_sq).abs() < 1e-9, || format!("R={r}: log^2 {log_sq}"))?;
        let rep = scenario("exp-tail", ScenarioParams { r: Some(r), ..Default::default() }, 0)?;
        all_checks_pass(&rep)?;
    }
    let t = within(start, Duration::from_secs(1))?;
    Ok(format!("R in {{0, 0.5, 1, 2, 5}}; {t:?}"))
}

fn c4_marton() -> CriterionResult {
    let start = Instant::now();
    let mut got = Vec::new();
    for n in 1..=3u32 {
        let cube = build_hypercube(n).unwrap();
        let est = sigma_transport(&cube, &TransportOptions::default()).map_err(|e| e.to_string())?;
        let target = f64::from(n) / 4.0;
        ensure((est.lower - target).abs() <= 0.02 * target, || format!("n={n}: lower {} vs {target}", est.lower))?;
        ensure(est.lower <= target + 1e-6, || format!("n={n}: lower {} above n/4", est.lower))?;
        got.push(est.lower);
    }
    let two = build_hypercube(1).unwrap();
    let (oracle, _) = grid_oracle(&two).map_err(|e| e.to_string())?;
    ensure(oracle <= 0.25 + 1e-6, || format!("grid oracle {oracle}"))?;
    let t = within(start, Duration::from_secs(60))?;
    Ok(format!("lower = {got:?}, two-point grid {oracle:.6}; {t:?}"))
}

fn c5_lemma21() -> CriterionResult {
    let mut rng = rng(501);
    for i in 0..1000 {
        let k = rng.gen_range(1..=20);
        let w = dirichlet(&mut rng, k);
        let f = random_field(&mut rng, k);
        for (alpha, c) in [(2.0, 4.0), (1.0, 6.0)] {
            let m = moment_sup(&f, &w, alpha);
            let p = psi_norm(&f, &w, alpha);
            ensure(m <= p * (1.0 + 1e-12) && p <= c * m * (1.0 + 1e-12), || {
                format!("case {i} alpha={alpha}: moment_sup {m}, psi {p}")
            })?;
        }
    }
    Ok("1000 fields, 0 failures".into())
}

fn c6_lemma41() -> CriterionResult {
    let mut rng = rng(601);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let k = rng.gen_range(1..=20);
        let w = dirichlet(&mut rng, k);
        let f = centered(&random_field(&mut rng, k), &w);
        let s = sigma_f(&f, &w);
        let p = psi_norm(&f, &w, 2.0);
        ensure(s <= 4.0 * p * p * (1.0 + 1e-12), || format!("case {i}: sigma_f {s} above 4 psi2^2 = {}", 4.0 * p * p))?;
        if p * p / 6f64.sqrt() > s * (1.0 + 1e-12) {
            failures.push(format!("case {i}: sigma_f {s} < psi2^2/sqrt(6) = {}", p * p / 6f64.sqrt()));
        }
        if s > 0.0 {
            worst = worst.max(p * p / s);
        }
    }
    ensure(failures.is_empty(), || {
        format!(
            "{} of 1000 below the lower sandwich ({}); max psi2^2/sigma_f = {worst:.6} > sqrt(6) = {:.6}; within the factor 6: {}",
            failures.len(),
            failures.join("; "),
            6f64.sqrt(),
            worst <= 6.0
        )
    })?;
    Ok(format!("1000 centered fields, 0 failures, max psi2^2/sigma_f = {worst:.4}"))
}

fn c7_restriction_norms() -> CriterionResult {
    let mut rng = rng(701);
    let mut done = 0;
    while done < 500 {
        let k = rng.gen_range(1..=20);
        let w = dirichlet(&mut rng, k);
        let f = random_field(&mut rng, k);
        let mask: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();
        let mass: f64 = mask.iter().zip(&w).filter(|(m, _)| **m).map(|(_, w)| w).sum();
        if mass < 1e-3 {
            continue;
        }
        let fa: Vec<f64> = (0..k).filter(|&i| mask[i]).map(|i| f[i]).collect();
        let wa: Vec<f64> = (0..k).filter(|&i| mask[i]).map(|i| w[i] / mass).collect();
        let log = (E / mass).ln();
        let (p2, p2a) = (psi_norm(&f, &w, 2.0), psi_norm(&fa, &wa, 2.0));
        let (p1, p1a) = (psi_norm(&f, &w, 1.0), psi_norm(&fa, &wa, 1.0));
        ensure(p2a <= 4.0 * E * log.sqrt() * p2, || format!("case {done}: psi2 {p2a} vs {p2}, mass {mass}"))?;
        ensure(p1a <= 6.0 * E * log * p1, || format!("case {done}: psi1 {p1a} vs {p1}, mass {mass}"))?;
        done += 1;
    }
    Ok("500 (field, mask) pairs, 0 failures".into())
}

fn c8_thm11_sweep() -> CriterionResult {
    let start = Instant::now();
    let params = ScenarioParams { n: Some(4), samples: Some(1000), constant: Some(90796.72), ..Default::default() };
    let r = scenario("thm11-sweep", params, 0)?;
    all_checks_pass(&r)?;
    ensure(r.checks.len() == 1000, || format!("{} checks", r.checks.len()))?;
    ensure(q(&r, "sigma^2(mu)")? == 1.0, || "sigma^2(mu) != 1".into())?;
    let t = within(start, Duration::from_secs(300))?;
    Ok(format!("1000 masks pass, max lhs/rhs {:.3e}; {t:?}", q(&r, "max lhs/rhs")?))
}

fn c9_transport() -> CriterionResult {
    let mut rng = rng(901);
    let mut worst_gap = 0.0f64;
    for i in 0..200 {
        let k = rng.gen_range(1..=12);
        let space = plane_space(&mut rng, k);
        let a = ProbabilityVector::new(dirichlet(&mut rng, k)).unwrap();
        let b = ProbabilityVector::new(dirichlet(&mut rng, k)).unwrap();
        let plan = w1(&space, &a, &b).map_err(|e| e.to_string())?;
        ensure(plan.gap <= 1e-9 * (1.0 + plan.value), || format!("case {i}: gap {}", plan.gap))?;
        worst_gap = worst_gap.max(plan.gap);
    }
    for i in 0..200 {
        let k = rng.gen_range(1..=12);
        let space = plane_space(&mut rng, k);
        let m: Vec<ProbabilityVector> = (0..3).map(|_| ProbabilityVector::new(dirichlet(&mut rng, k)).unwrap()).collect();
        let d = |x: &ProbabilityVector, y: &ProbabilityVector| w1(&space, x, y).unwrap().value;
        let (ab, bc, ac) = (d(&m[0], &m[1]), d(&m[1], &m[2]), d(&m[0], &m[2]));
        ensure(ac <= ab + bc + 1e-9, || format!("triple {i}: {ac} > {ab} + {bc}"))?;
    }
    let mut worst_id = 0.0f64;
    for i in 0..200 {
        let k = rng.gen_range(2..=12);
        let space = plane_space(&mut rng, k);
        let mut members: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.6)).collect();
        members[rng.gen_range(0..k)] = true;
        let mask = SubsetMask::new(members.clone());
        let raw = dirichlet(&mut rng, k);
        let nu: Vec<f64> = (0..k).map(|x| if members[x] { raw[x] } else { 0.0 }).collect();
        let nu = ProbabilityVector::new({
            let s: f64 = nu.iter().sum();
            nu.iter().map(|v| v / s).collect()
        })
        .unwrap();
        let check = check_cor44(&space, &mask, &nu, 1.0, None).map_err(|e| e.to_string())?;
        ensure(check.entropy_identity.passed, || format!("pair {i}: residual {}", check.entropy_identity.lhs))?;
        let mass = mask.mass(space.weights());
        let mu_a: Vec<f64> = (0..k).map(|x| if members[x] { space.weights()[x] / mass } else { 0.0 }).collect();
        let lhs = kl_divergence(nu.entries(), &mu_a).unwrap();
        let rhs = mass.ln() + kl_divergence(nu.entries(), space.weights()).unwrap();
        ensure((lhs - rhs).abs() <= 1e-12, || format!("pair {i}: {lhs} vs {rhs}"))?;
        worst_id = worst_id.max((lhs - rhs).abs());
    }
    Ok(format!("max gap {worst_gap:.1e}, max identity residual {worst_id:.1e}"))
}

fn c10_kirszbraun() -> CriterionResult {
    let mut rng = rng(1001);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let k = rng.gen_range(1..=30);
        let space = plane_space(&mut rng, k);
        let anchors: Vec<(usize, f64)> = (0..rng.gen_range(1..=k)).map(|_| (rng.gen_range(0..k), rng.gen_range(-1.0..1.0))).collect();
        let field: Vec<f64> =
            (0..k).map(|x| anchors.iter().map(|&(a, r)| r + space.distance(a, x)).fold(f64::INFINITY, f64::min)).collect();
        let mut members: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();
        members[rng.gen_range(0..k)] = true;
        let mask = SubsetMask::new(members);
        let on_a: Vec<f64> = mask.indices().iter().map(|&x| field[x]).collect();
        let ext = kirszbraun_extend(&on_a, &space, &mask).map_err(|e| e.to_string())?;
        for (j, &x) in mask.indices().iter().enumerate() {
            ensure(ext[x].to_bits() == on_a[j].to_bits(), || format!("case {i}: point {x} changed"))?;
        }
        let lip = lip_seminorm(&ext, &space);
        ensure(lip <= 1.0 + 1e-12, || format!("case {i}: seminorm {lip}"))?;
        worst = worst.max(lip);
    }
    Ok(format!("200 triples, max seminorm {worst:.15}"))
}

fn c11_spectral() -> CriterionResult {
    let mut worst = 0.0f64;
    for n in 1..=8u32 {
        let cube = build_hypercube(n).unwrap();
        let form = build_graph_form(&cube, &AdjacencyRule::UnitDistance).map_err(|e| e.to_string())?;
        let gap = lambda1(&form).map_err(|e| e.to_string())?;
        let w = cube.weights();
        // Walsh characters of weight one: E(chi)/Var(chi)
        let chi: Vec<f64> = (0..cube.len()).map(|x| if x & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let walsh = form.energy(&chi) / variance(&chi, w);
        ensure((walsh - 2.0).abs() <= 1e-12, || format!("n={n}: walsh ratio {walsh}"))?;
        ensure((gap.lambda1 - walsh).abs() <= 1e-9, || format!("n={n}: lambda1 {}", gap.lambda1))?;
        let ratio = form.energy(&gap.eigenvector) / variance(&gap.eigenvector, w);
        ensure((ratio - gap.lambda1).abs() <= 1e-9, || format!("n={n}: eigenvector ratio {ratio}"))?;
        worst = worst.max((gap.lambda1 - 2.0).abs()).max((ratio - gap.lambda1).abs());
    }
    Ok(format!("n = 1..8, max deviation {worst:.1e}"))
}

fn c12_monotone() -> CriterionResult {
    let start = Instant::now();
    let r = scenario("monotone-metric", ScenarioParams { n: Some(4), ..Default::default() }, 0)?;
    all_checks_pass(&r)?;
    ensure(q(&r, "monotone sets")? == 168.0, || "count != 168".into())?;
    let t = within(start, Duration::from_secs(5))?;
    Ok(format!("168 monotone sets, identity exact; {t:?}"))
}

fn c13_small_oracles() -> CriterionResult {
    let mut rng = rng(1301);
    let opts = EstimateOptions::default();
    let (mut worst_spread, mut worst_sigma, mut worst_route) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..50 {
        let k = rng.gen_range(1..=4);
        let space = integer_space(&mut rng, k, 3);
        let w = space.weights();
        let fields = integer_lipschitz_fields(&space);
        let spread_oracle = fields.iter().map(|f| variance(f, w)).fold(0.0, f64::max);
        let sigma_oracle = fields.iter().map(|f| sigma_f_grid(f, w)).fold(0.0, f64::max);
        let spread = spread_estimate(&space, &opts, None).map_err(|e| e.to_string())?.lower;
        let sigma = sigma_estimate_lipschitz(&space, &opts).map_err(|e| e.to_string())?.lower;
        let route = sigma_transport(&space, &TransportOptions::default()).map_err(|e| e.to_string())?.lower;
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { (a - b).abs() / b };
        ensure(rel(spread, spread_oracle) <= 1e-3, || format!("space {i}: spread {spread} vs oracle {spread_oracle}"))?;
        ensure(rel(sigma, sigma_oracle) <= 1e-3, || format!("space {i}: sigma {sigma} vs oracle {sigma_oracle}"))?;
        ensure(rel(route, sigma) <= 0.05, || format!("space {i}: transport {route} vs lipschitz {sigma}"))?;
        worst_spread = worst_spread.max(rel(spread, spread_oracle));
        worst_sigma = worst_sigma.max(rel(sigma, sigma_oracle));
        worst_route = worst_route.max(rel(route, sigma));
    }
    Ok(format!("50 spaces; rel err spread {worst_spread:.1e}, sigma {worst_sigma:.1e}, routes {worst_route:.1e}"))
}

fn c14_nonlip() -> CriterionResult {
    let params = ScenarioParams { samples: Some(100_000), constant: Some(90796.72), ..Default::default() };
    let r = scenario("nonlip-deviation", params, 2024)?;
    all_checks_pass(&r)?;
    for t in [1, 2, 4, 8] {
        let name = format!("two-sided-deviation t={t}");
        ensure(r.checks.iter().any(|c| c.name == name && c.passed), || format!("{name} missing or failing"))?;
    }
    for kind in ["clip-minorant", "clip-anchor-equality", "clip-lipschitz", "clip-midpoint-convexity"] {
        let c: Vec<_> = r.checks.iter().filter(|c| c.name.starts_with(kind)).collect();
        ensure(!c.is_empty() && c.iter().all(|c| c.passed && c.tolerance == 0.0), || format!("{kind} failing"))?;
    }
    Ok(format!("{} checks pass", r.checks.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> CriterionResult); 14] = [
        ("hypercube chain exact values", c1_hypercube_chain),
        ("gaussian shell quadrature and monte carlo", c2_gaussian_shell),
        ("exponential tail quadrature", c3_exp_tail),
        ("hypercube subgaussian constant n/4", c4_marton),
        ("orlicz moment sandwiches", c5_lemma21),
        ("sigma_f versus psi2 sandwich", c6_lemma41),
        ("orlicz norms under restriction", c7_restriction_norms),
        ("restricted subgaussian sweep on the 4-cube", c8_thm11_sweep),
        ("transport duality, triangle, entropy identity", c9_transport),
        ("lipschitz extension", c10_kirszbraun),
        ("hypercube spectral gap", c11_spectral),
        ("monotone subgraph metric identity", c12_monotone),
        ("small-space oracle agreement", c13_small_oracles),
        ("non-lipschitz deviations and convex clipping", c14_nonlip),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
