//! Monte Carlo estimation of revenue and welfare deficiencies of the ERM
//! strategies, log-log rate fits and the uniform versus K-markets crossing.
//!
//! Replication `j` of curve point `i` draws its sample from seed
//! `base_seed + i * 2^32 + j`, and per-replication results are accumulated in
//! replication order, so every estimate is bit-identical whether the
//! replications run serially or on the rayon pool.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::dist::{sample, Dataset, DistributionSpec};
use crate::error::{Error, Result};
use crate::oracle::{
    expected_revenue, optimal_3pd_revenue, optimal_price_at, optimal_uniform_price, pointwise_revenue, welfare,
    OptimalPolicy, QuadratureConfig,
};
use crate::pricing::{k_markets_erm, k_schedule, uniform_erm, KSchedule, PricingFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Uniform,
    KMarkets(KSchedule),
}

impl Strategy {
    /// Fits the strategy's pricing function to a sample.
    pub fn fit(&self, data: &Dataset) -> Result<PricingFunction> {
        match self {
            Self::Uniform => Ok(PricingFunction::Constant {
                p: uniform_erm(&data.valuations())?,
            }),
            Self::KMarkets(schedule) => Ok(k_markets_erm(data, k_schedule(data.len(), *schedule))?.0),
        }
    }

    fn benchmark_class(&self) -> Benchmark {
        match self {
            Self::Uniform => Benchmark::Uniform,
            Self::KMarkets(_) => Benchmark::Discriminating,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform => write!(f, "uniform"),
            Self::KMarkets(KSchedule::Fixed(k)) => write!(f, "k={k}"),
            Self::KMarkets(s) => write!(f, "ksched={s}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(Self::Uniform);
        }
        if let Some(k) = s.strip_prefix("k=") {
            return match k.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(Self::KMarkets(KSchedule::Fixed(k))),
                _ => Err(Error::ParameterDomain(format!("bad market count in '{s}'"))),
            };
        }
        if let Some(rule) = s.strip_prefix("ksched=") {
            return match rule {
                "theory" | "ebay" | "sim" => Ok(Self::KMarkets(rule.parse()?)),
                _ => Err(Error::ParameterDomain(format!("unknown schedule in '{s}'"))),
            };
        }
        Err(Error::ParameterDomain(format!("unknown strategy '{s}'")))
    }
}

#[derive(Debug, Clone, Copy)]
enum Benchmark {
    Uniform,
    Discriminating,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeficiencyPoint {
    pub n: usize,
    pub strategy_tag: String,
    pub mean_deficiency: f64,
    pub std_error: f64,
    pub reps: usize,
    pub mean_revenue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Revenue comparison at one sample size, both strategies fitted on the same
/// samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingRow {
    pub n: usize,
    pub uniform_revenue: f64,
    pub kmarkets_revenue: f64,
    /// Mean of `kmarkets - uniform` over replications.
    pub mean_gap: f64,
    pub gap_std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub k: usize,
    pub rows: Vec<CrossingRow>,
    pub crossing: Option<usize>,
}

/// Seed of replication `rep` at curve point `point`.
pub fn replication_seed(base_seed: u64, point: usize, rep: usize) -> u64 {
    base_seed
        .wrapping_add((point as u64) << 32)
        .wrapping_add(rep as u64)
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo engine bound to one distribution. True-distribution benchmarks
/// are computed lazily and cached.
#[derive(Debug)]
pub struct Engine {
    spec: DistributionSpec,
    quad: QuadratureConfig,
    parallel: bool,
    uniform_optimum: OnceLock<(f64, f64)>,
    discriminating_revenue: OnceLock<f64>,
    uniform_welfare: OnceLock<f64>,
    discriminating_welfare: OnceLock<f64>,
}

impl Engine {
    pub fn new(spec: DistributionSpec, quad: QuadratureConfig) -> Result<Self> {
        spec.validate()?;
        quad.validate()?;
        Ok(Self {
            spec,
            quad,
            parallel: true,
            uniform_optimum: OnceLock::new(),
            discriminating_revenue: OnceLock::new(),
            uniform_welfare: OnceLock::new(),
            discriminating_welfare: OnceLock::new(),
        })
    }

    /// Runs replications on the current thread only.
    pub fn serial(mut self) -> Self {
        self.parallel = false;
        self
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    /// `(p*_U, R(p*_U))`.
    pub fn uniform_optimum(&self) -> (f64, f64) {
        *self
            .uniform_optimum
            .get_or_init(|| optimal_uniform_price(&self.spec, &self.quad).expect("validated"))
    }

    /// `R(p*_D)`.
    pub fn discriminating_revenue(&self) -> f64 {
        *self
            .discriminating_revenue
            .get_or_init(|| optimal_3pd_revenue(&self.spec, &self.quad).expect("validated"))
    }

    fn benchmark_revenue(&self, class: Benchmark) -> f64 {
        match class {
            Benchmark::Uniform => self.uniform_optimum().1,
            Benchmark::Discriminating => self.discriminating_revenue(),
        }
    }

    fn benchmark_welfare(&self, class: Benchmark) -> f64 {
        match class {
            Benchmark::Uniform => *self.uniform_welfare.get_or_init(|| {
                let p = self.uniform_optimum().0;
                welfare(&self.spec, &PricingFunction::Constant { p }, &self.quad).expect("validated")
            }),
            Benchmark::Discriminating => *self.discriminating_welfare.get_or_init(|| {
                let policy = OptimalPolicy {
                    spec: &self.spec,
                    refine_tol: self.quad.refine_tol,
                };
                welfare(&self.spec, &policy, &self.quad).expect("validated")
            }),
        }
    }

    /// Samples with `seed` and fits `strategy`.
    pub fn fit_replication(&self, strategy: Strategy, n: usize, seed: u64) -> Result<PricingFunction> {
        strategy.fit(&sample(&self.spec, n, seed)?)
    }

    fn replicate<T, F>(&self, reps: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync,
    {
        if reps < 2 {
            return Err(Error::ParameterDomain(format!("need at least 2 replications, got {reps}")));
        }
        if self.parallel {
            (0..reps).into_par_iter().map(&f).collect()
        } else {
            (0..reps).map(f).collect()
        }
    }

    fn aggregate(n: usize, tag: String, per_rep: &[(f64, f64)]) -> DeficiencyPoint {
        let deficits: Vec<f64> = per_rep.iter().map(|r| r.0).collect();
        let (mean_deficiency, std_error) = mean_and_se(&deficits);
        let mean_revenue = per_rep.iter().map(|r| r.1).sum::<f64>() / per_rep.len() as f64;
        DeficiencyPoint {
            n,
            strategy_tag: tag,
            mean_deficiency,
            std_error,
            reps: per_rep.len(),
            mean_revenue,
        }
    }

    /// Per-replication `(deficiency, revenue)` against the strategy's own
    /// benchmark class.
    pub fn revenue_replications(
        &self,
        strategy: Strategy,
        n: usize,
        reps: usize,
        base_seed: u64,
    ) -> Result<Vec<(f64, f64)>> {
        let benchmark = self.benchmark_revenue(strategy.benchmark_class());
        self.replicate(reps, |j| {
            let pf = self.fit_replication(strategy, n, base_seed.wrapping_add(j as u64))?;
            let r = expected_revenue(&self.spec, &pf, &self.quad)?;
            Ok((benchmark - r, r))
        })
    }

    /// `R(p*) - E[R(p_hat)]` with `p*` optimal in the strategy's own class.
    pub fn revenue_deficiency(
        &self,
        strategy: Strategy,
        n: usize,
        reps: usize,
        base_seed: u64,
    ) -> Result<DeficiencyPoint> {
        let per_rep = self.revenue_replications(strategy, n, reps, base_seed)?;
        Ok(Self::aggregate(n, strategy.to_string(), &per_rep))
    }

    /// `r(p*_D(x0), x0) - E[r(p_hat(x0), x0)]` for K-markets ERM with fixed `k`.
    pub fn pointwise_deficiency(
        &self,
        n: usize,
        k: usize,
        x0: f64,
        reps: usize,
        base_seed: u64,
    ) -> Result<DeficiencyPoint> {
        if !(0.0..=1.0).contains(&x0) {
            return Err(Error::ParameterDomain(format!("x0 = {x0} is outside [0, 1]")));
        }
        let strategy = Strategy::KMarkets(KSchedule::Fixed(k));
        let (_, best) = optimal_price_at(&self.spec, x0, self.quad.refine_tol);
        let per_rep = self.replicate(reps, |j| {
            let pf = self.fit_replication(strategy, n, base_seed.wrapping_add(j as u64))?;
            let r = pointwise_revenue(&self.spec, pf.price_at(x0), x0);
            Ok((best - r, r))
        })?;
        Ok(Self::aggregate(n, strategy.to_string(), &per_rep))
    }

    /// `E|W(p_hat) - W(p*)|` with `p*` optimal in the strategy's own class.
    pub fn welfare_deficiency(
        &self,
        strategy: Strategy,
        n: usize,
        reps: usize,
        base_seed: u64,
    ) -> Result<DeficiencyPoint> {
        let benchmark = self.benchmark_welfare(strategy.benchmark_class());
        let per_rep = self.replicate(reps, |j| {
            let pf = self.fit_replication(strategy, n, base_seed.wrapping_add(j as u64))?;
            let w = welfare(&self.spec, &pf, &self.quad)?;
            let r = expected_revenue(&self.spec, &pf, &self.quad)?;
            Ok(((w - benchmark).abs(), r))
        })?;
        Ok(Self::aggregate(n, strategy.to_string(), &per_rep))
    }

    fn curve<F>(&self, n_list: &[usize], base_seed: u64, point: F) -> Result<Vec<DeficiencyPoint>>
    where
        F: Fn(usize, u64) -> Result<DeficiencyPoint>,
    {
        check_n_list(n_list, 3)?;
        n_list
            .iter()
            .enumerate()
            .map(|(i, &n)| point(n, replication_seed(base_seed, i, 0)))
            .collect()
    }

    pub fn deficiency_curve(
        &self,
        strategy: Strategy,
        n_list: &[usize],
        reps: usize,
        base_seed: u64,
    ) -> Result<Vec<DeficiencyPoint>> {
        self.curve(n_list, base_seed, |n, seed| {
            self.revenue_deficiency(strategy, n, reps, seed)
        })
    }

    pub fn welfare_curve(
        &self,
        strategy: Strategy,
        n_list: &[usize],
        reps: usize,
        base_seed: u64,
    ) -> Result<Vec<DeficiencyPoint>> {
        self.curve(n_list, base_seed, |n, seed| {
            self.welfare_deficiency(strategy, n, reps, seed)
        })
    }

    /// Mean revenue of uniform and `k`-markets ERM fitted on the same samples
    /// at every `n`, and the first `n` where K-markets is at least as good.
    pub fn crossing_analysis(
        &self,
        n_list: &[usize],
        k: usize,
        reps: usize,
        base_seed: u64,
    ) -> Result<CrossingReport> {
        check_n_list(n_list, 1)?;
        if k < 2 {
            return Err(Error::ParameterDomain(format!("crossing needs K >= 2, got {k}")));
        }
        let discriminating = Strategy::KMarkets(KSchedule::Fixed(k));
        let mut rows = Vec::with_capacity(n_list.len());
        for (i, &n) in n_list.iter().enumerate() {
            let pairs = self.replicate(reps, |j| {
                let data = sample(&self.spec, n, replication_seed(base_seed, i, j))?;
                let u = expected_revenue(&self.spec, &Strategy::Uniform.fit(&data)?, &self.quad)?;
                let d = expected_revenue(&self.spec, &discriminating.fit(&data)?, &self.quad)?;
                Ok((u, d))
            })?;
            let gaps: Vec<f64> = pairs.iter().map(|(u, d)| d - u).collect();
            let (mean_gap, gap_std_error) = mean_and_se(&gaps);
            let m = pairs.len() as f64;
            rows.push(CrossingRow {
                n,
                uniform_revenue: pairs.iter().map(|p| p.0).sum::<f64>() / m,
                kmarkets_revenue: pairs.iter().map(|p| p.1).sum::<f64>() / m,
                mean_gap,
                gap_std_error,
            });
        }
        let crossing = rows
            .iter()
            .find(|r| r.kmarkets_revenue >= r.uniform_revenue)
            .map(|r| r.n);
        Ok(CrossingReport { k, rows, crossing })
    }

    pub fn crossing_point(&self, n_list: &[usize], k: usize, reps: usize, base_seed: u64) -> Result<Option<usize>> {
        Ok(self.crossing_analysis(n_list, k, reps, base_seed)?.crossing)
    }
}

fn check_n_list(n_list: &[usize], min_len: usize) -> Result<()> {
    if n_list.len() < min_len {
        return Err(Error::ParameterDomain(format!(
            "need at least {min_len} sample sizes, got {}",
            n_list.len()
        )));
    }
    if n_list[0] == 0 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ParameterDomain(
            "sample sizes must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Ordinary least squares of `ln(mean_deficiency)` on `ln(n)`.
pub fn fit_rate(curve: &[DeficiencyPoint]) -> Result<RateFit> {
    let pairs: Vec<(usize, f64)> = curve.iter().map(|p| (p.n, p.mean_deficiency)).collect();
    fit_power_law(&pairs)
}

pub fn fit_power_law(points: &[(usize, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::ParameterDomain(format!(
            "rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some((n, v)) = points.iter().find(|(n, v)| v.is_nan() || *v <= 0.0 || *n == 0) {
        return Err(Error::ParameterDomain(format!(
            "log-log fit needs positive values, got {v} at n = {n}"
        )));
    }
    let mut ns: Vec<usize> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::ParameterDomain("rate fit needs 3 distinct sample sizes".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}
