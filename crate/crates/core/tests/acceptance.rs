//! Acceptance suite. Each test checks one exit criterion at its fixed
//! tolerance and prints a single PASS/FAIL line.
//!
//! Run with `cargo test -p pricedisc-core --test acceptance -- --nocapture`.

use pricedisc_core::adversarial::{
    gilbert_varshamov, hamming, hellinger_sq, kl_divergence, price_interval_check, perturbed_uniform_hellinger_bound,
};
use pricedisc_core::experiment::{fit_rate, Engine, Strategy};
use pricedisc_core::oracle::{expected_revenue, optimal_3pd_policy, optimal_uniform_price, pointwise_revenue, welfare};
use pricedisc_core::{DistributionSpec, KSchedule, PricingFunction, QuadratureConfig};

fn report(id: u32, name: &str, ok: bool, detail: String) {
    println!("{} [{id:>2}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn powers_of_two(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|e| 1usize << e).collect()
}

fn quad() -> QuadratureConfig {
    QuadratureConfig::default()
}

const SEED: u64 = 20_240_501;

#[test]
fn c01_uniform_baseline() {
    let (p, r) = optimal_uniform_price(&DistributionSpec::UniformJoint, &quad()).unwrap();
    let ok = (p - 0.5).abs() <= 1e-9 && (r - 0.25).abs() <= 1e-9;
    report(1, "uniform baseline (0.5, 0.25) within 1e-9", ok, format!("p*={p:.12} R={r:.12}"));
}

#[test]
fn c02_closed_form_policy() {
    let spec = DistributionSpec::PowerSimulated;
    let policy = optimal_3pd_policy(&spec, 101, &quad()).unwrap();
    let mut worst_closed: f64 = 0.0;
    let mut worst_brute: f64 = 0.0;
    for (&x, &p) in policy.x_grid().iter().zip(policy.prices()) {
        let closed = (x + 2.0).powf(-1.0 / (x + 1.0));
        worst_closed = worst_closed.max((p - closed).abs());
        // independent 10^6-point scan of the pointwise revenue
        let brute = (0..1_000_000)
            .map(|i| i as f64 / 999_999.0)
            .map(|y| (y, pointwise_revenue(&spec, y, x)))
            .fold((0.0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
            .0;
        worst_brute = worst_brute.max((brute - closed).abs());
    }
    let ok = worst_closed <= 1e-6 && worst_brute <= 2e-6;
    report(
        2,
        "3PD policy matches (x+2)^(-1/(x+1)) within 1e-6 on 101 points",
        ok,
        format!("max |p - closed| = {worst_closed:.2e}, brute-force vs closed = {worst_brute:.2e}"),
    );
}

#[test]
fn c03_benchmark_lines() {
    let spec = DistributionSpec::PowerSimulated;
    let policy = optimal_3pd_policy(&spec, 101, &quad()).unwrap();
    let r3 = expected_revenue(&spec, &policy, &quad()).unwrap();
    let (_, ru) = optimal_uniform_price(&spec, &quad()).unwrap();
    let ok = (r3 - 0.322992).abs() <= 1e-3 && (ru - 0.322343).abs() <= 1e-3;
    report(
        3,
        "benchmarks 0.322992 / 0.322343 within 1e-3",
        ok,
        format!("R(p*_D)={r3:.6} R(p*_U)={ru:.6}"),
    );
}

#[test]
fn c04_uniform_rate() {
    let engine = Engine::new(DistributionSpec::PowerSimulated, quad()).unwrap();
    let curve = engine
        .deficiency_curve(Strategy::Uniform, &powers_of_two(7, 14), 2000, SEED)
        .unwrap();
    for p in &curve {
        println!("      n={:>6} deficiency={:.4e} se={:.1e}", p.n, p.mean_deficiency, p.std_error);
    }
    let fit = fit_rate(&curve).unwrap();
    let ok = (-0.80..=-0.55).contains(&fit.slope);
    report(
        4,
        "uniform ERM slope in [-0.80, -0.55]",
        ok,
        format!("slope={:.4} R2={:.4}", fit.slope, fit.r_squared),
    );
}

#[test]
fn c05_kmarkets_rate() {
    let engine = Engine::new(DistributionSpec::PowerSimulated, quad()).unwrap();
    let curve = engine
        .deficiency_curve(Strategy::KMarkets(KSchedule::Theory), &powers_of_two(7, 14), 2000, SEED)
        .unwrap();
    for p in &curve {
        println!("      n={:>6} deficiency={:.4e} se={:.1e}", p.n, p.mean_deficiency, p.std_error);
    }
    let fit = fit_rate(&curve).unwrap();
    let ok = (-0.65..=-0.38).contains(&fit.slope);
    report(
        5,
        "K-markets (K = n^1/4) slope in [-0.65, -0.38]",
        ok,
        format!("slope={:.4} R2={:.4}", fit.slope, fit.r_squared),
    );
}

#[test]
fn c06_crossing() {
    let engine = Engine::new(DistributionSpec::PowerSimulated, quad()).unwrap();
    let report6 = engine.crossing_analysis(&powers_of_two(6, 15), 4, 2000, SEED).unwrap();
    for r in &report6.rows {
        println!(
            "      n={:>6} uniform={:.6} k=4={:.6} gap={:+.2e} se={:.1e}",
            r.n, r.uniform_revenue, r.kmarkets_revenue, r.mean_gap, r.gap_std_error
        );
    }
    let first = &report6.rows[0];
    let lead = -first.mean_gap / first.gap_std_error;
    let ok = report6.crossing.is_some() && lead >= 3.0;
    report(
        6,
        "K=4 overtakes uniform; uniform ahead by >= 3 SE at n=64",
        ok,
        format!("crossing={:?}, lead at n=64 = {lead:.1} SE", report6.crossing),
    );
}

#[test]
fn c07_hellinger_bound() {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for &a in &[0.5, 1.0, 1.5] {
        for &delta in &[0.01, 0.05, 0.1] {
            let spec = DistributionSpec::perturbed_uniform(a, delta).unwrap();
            let h = hellinger_sq(&DistributionSpec::UniformJoint, &spec, &quad()).unwrap();
            let bound = perturbed_uniform_hellinger_bound(a, delta);
            worst = worst.max(h / bound);
            ok &= h <= bound * (1.0 + 1e-3);
        }
    }
    report(7, "H^2 <= (2 sqrt2/3) a^2 delta^3", ok, format!("max H^2/bound = {worst:.4}"));
}

#[test]
fn c08_conditional_scaling() {
    // delta = 0.2 would push the perturbation past y = 1; the grid stops at
    // the largest admissible delta below 1/6
    let deltas: Vec<f64> = (1..=8).map(|i| 0.02 * i as f64).collect();
    let pts: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&d| {
            let spec = DistributionSpec::perturbed_conditional(1.0, d, 0.5).unwrap();
            (d, hellinger_sq(&DistributionSpec::UniformJoint, &spec, &quad()).unwrap())
        })
        .collect();
    let slope = log_log_slope(&pts);
    let ok = (slope - 4.0).abs() <= 0.1;
    report(8, "H^2 ~ delta^4 (slope 4 +/- 0.1)", ok, format!("slope={slope:.4}"));
}

#[test]
fn c09_packing_kl_scaling() {
    let pts: Vec<(f64, f64)> = [8usize, 16, 32, 64]
        .iter()
        .map(|&m| {
            let alpha: Vec<bool> = (0..m).map(|j| j % 2 == 0).collect();
            let flipped: Vec<bool> = alpha.iter().map(|b| !b).collect();
            let s1 = DistributionSpec::packing(m, 1.0, alpha).unwrap();
            let s2 = DistributionSpec::packing(m, 1.0, flipped).unwrap();
            (m as f64, kl_divergence(&s1, &s2, &quad()).unwrap())
        })
        .collect();
    let slope = log_log_slope(&pts);
    let ok = (slope + 3.0).abs() <= 0.15;
    report(9, "packing KL ~ m^-3 (slope -3 +/- 0.15)", ok, format!("slope={slope:.4} values={pts:?}"));
}

#[test]
fn c10_gv_codebooks() {
    let mut detail = Vec::new();
    let mut ok = true;
    for m in [8usize, 16, 24] {
        let book = gilbert_varshamov(m).unwrap();
        let d = book.required_distance();
        ok &= book.len() >= 1 << d;
        ok &= min_distance_at_least(&book.words, m, d);
        detail.push(format!("m={m}: {} words, d>={d}", book.len()));
    }
    report(10, "GV codebook cardinality and distance", ok, detail.join("; "));
}

#[test]
fn c11_price_interval() {
    let mut ok = true;
    let mut failures = Vec::new();
    for &b in &[-1.5, -1.0, -0.5, 0.5, 1.0, 1.5] {
        for &delta in &[0.005, 0.01, 0.02] {
            let check = price_interval_check(b, delta).unwrap();
            if !check.inside {
                ok = false;
                failures.push(format!("b={b} delta={delta} p*={}", check.p_star));
            }
        }
    }
    report(11, "optimal price inside the predicted interval (18 cases)", ok, format!("failures: {failures:?}"));
}

#[test]
fn c12_welfare_consistency() {
    let engine = Engine::new(DistributionSpec::PowerSimulated, quad()).unwrap();
    let ns = [1usize << 8, 1 << 10, 1 << 12];
    let mut ok = true;
    let mut detail = Vec::new();
    for strategy in [Strategy::Uniform, Strategy::KMarkets(KSchedule::Theory)] {
        let curve = engine.welfare_curve(strategy, &ns, 2000, SEED).unwrap();
        for w in curve.windows(2) {
            let spread = 3.0 * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
            ok &= w[0].mean_deficiency - w[1].mean_deficiency > spread;
        }
        detail.push(format!(
            "{strategy}: {:?}",
            curve.iter().map(|p| format!("{:.3e}", p.mean_deficiency)).collect::<Vec<_>>()
        ));
    }

    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SEED);
    let spec = DistributionSpec::PowerSimulated;
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let k = rng.random_range(1..=8usize);
        let prices: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let pf = if k == 1 {
            PricingFunction::Constant { p: prices[0] }
        } else {
            PricingFunction::KMarkets { k, prices }
        };
        let gap = welfare(&spec, &pf, &quad()).unwrap() - expected_revenue(&spec, &pf, &quad()).unwrap();
        worst = worst.min(gap);
    }
    ok &= worst >= -1e-9;
    detail.push(format!("min W - R over 50 policies = {worst:.3e}"));
    report(12, "welfare deficiency decreasing at 3 SE; W >= R", ok, detail.join("; "));
}

#[test]
fn c13_determinism() {
    let ns = powers_of_two(7, 10);
    let parallel = Engine::new(DistributionSpec::PowerSimulated, quad()).unwrap();
    let serial = Engine::new(DistributionSpec::PowerSimulated, quad()).unwrap().serial();
    let mut ok = true;
    for strategy in [Strategy::Uniform, Strategy::KMarkets(KSchedule::Theory)] {
        let a = parallel.deficiency_curve(strategy, &ns, 2000, SEED).unwrap();
        let b = parallel.deficiency_curve(strategy, &ns, 2000, SEED).unwrap();
        let c = serial.deficiency_curve(strategy, &ns, 2000, SEED).unwrap();
        ok &= a == b && a == c;
    }
    let x = parallel.crossing_analysis(&ns, 4, 500, SEED).unwrap();
    let y = serial.crossing_analysis(&ns, 4, 500, SEED).unwrap();
    ok &= x == y;
    let w1 = parallel.welfare_curve(Strategy::Uniform, &ns[..3], 500, SEED).unwrap();
    let w2 = serial.welfare_curve(Strategy::Uniform, &ns[..3], 500, SEED).unwrap();
    ok &= w1 == w2;
    report(13, "bit-identical reruns, serial vs parallel", ok, "curves, crossing and welfare compared".into());
}

fn log_log_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Exact check that no two codewords are closer than `d`: every word's ball of
/// radius `d - 1` must contain no other codeword.
fn min_distance_at_least(words: &[u32], m: usize, d: usize) -> bool {
    if words.len() <= 4096 {
        return words
            .iter()
            .enumerate()
            .all(|(i, &a)| words[i + 1..].iter().all(|&b| hamming(a, b) >= d));
    }
    let mut member = vec![false; 1 << m];
    for &w in words {
        member[w as usize] = true;
    }
    let mut flips = vec![0u32];
    for _ in 1..d {
        let mut next = Vec::new();
        for &f in &flips {
            for b in 0..m {
                next.push(f | (1 << b));
            }
        }
        flips.extend(next);
        flips.sort_unstable();
        flips.dedup();
    }
    words
        .iter()
        .all(|&w| flips.iter().all(|&f| f == 0 || !member[(w ^ f) as usize]))
}
