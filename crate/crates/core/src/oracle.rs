//! True-distribution functionals: pointwise revenue, expected revenue, welfare
//! and the optimal uniform and discriminating prices.

use rayon::prelude::*;

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::numeric::{maximize, simpson_split};
use crate::pricing::PricingFunction;

/// Points in the coarse scan that precedes golden-section refinement.
pub const SCAN_POINTS: usize = 4097;

const MIN_PIECE_PANELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub y_panels: usize,
    pub x_panels: usize,
    pub refine_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            y_panels: 1 << 12,
            x_panels: 1 << 10,
            refine_tol: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("y_panels", self.y_panels), ("x_panels", self.x_panels)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::ParameterDomain(format!(
                    "{name} must be even and at least 8, got {n}"
                )));
            }
        }
        if self.refine_tol.is_nan() || self.refine_tol <= 0.0 {
            return Err(Error::ParameterDomain(format!(
                "refine_tol must be positive, got {}",
                self.refine_tol
            )));
        }
        Ok(())
    }
}

/// Anything that assigns a price to each covariate value.
pub trait Policy: Sync {
    fn price(&self, x: f64) -> f64;

    /// Covariate values where the price may jump or kink.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl Policy for PricingFunction {
    fn price(&self, x: f64) -> f64 {
        self.price_at(x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Constant { .. } => Vec::new(),
            Self::KMarkets { k, .. } => (1..*k).map(|j| j as f64 / *k as f64).collect(),
        }
    }
}

/// Price curve tabulated on a covariate grid, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPolicy {
    x_grid: Vec<f64>,
    prices: Vec<f64>,
}

impl TabulatedPolicy {
    pub fn new(x_grid: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        if x_grid.len() < 2 || x_grid.len() != prices.len() {
            return Err(Error::ParameterDomain(
                "tabulated policy needs matching grids of at least 2 points".into(),
            ));
        }
        if x_grid[0] != 0.0 || *x_grid.last().unwrap() != 1.0 {
            return Err(Error::ParameterDomain("x grid must span [0, 1]".into()));
        }
        if x_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::ParameterDomain("x grid must be strictly increasing".into()));
        }
        if prices.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::ParameterDomain("prices must lie in [0, 1]".into()));
        }
        Ok(Self { x_grid, prices })
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }
}

impl Policy for TabulatedPolicy {
    fn price(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let i = self.x_grid.partition_point(|g| *g <= x).clamp(1, self.x_grid.len() - 1);
        let (x0, x1) = (self.x_grid[i - 1], self.x_grid[i]);
        let (p0, p1) = (self.prices[i - 1], self.prices[i]);
        p0 + (p1 - p0) * (x - x0) / (x1 - x0)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.x_grid[1..self.x_grid.len() - 1].to_vec()
    }
}

/// The pointwise revenue-maximizing price, computed on demand at every `x`.
#[derive(Debug, Clone, Copy)]
pub struct OptimalPolicy<'a> {
    pub spec: &'a DistributionSpec,
    pub refine_tol: f64,
}

impl Policy for OptimalPolicy<'_> {
    fn price(&self, x: f64) -> f64 {
        optimal_price_at(self.spec, x, self.refine_tol).0
    }
}

/// `r(y, x) = y (1 - F(y|x))`.
pub fn pointwise_revenue(spec: &DistributionSpec, y: f64, x: f64) -> f64 {
    y * (1.0 - spec.cdf(y, x))
}

/// Marginal valuation CDF `F_Y(p) = int_0^1 F(p|x) dx`.
pub fn marginal_cdf(spec: &DistributionSpec, p: f64, cfg: &QuadratureConfig) -> f64 {
    simpson_split(
        |x| spec.cdf(p, x),
        &spec.x_breakpoints(),
        cfg.x_panels,
        MIN_PIECE_PANELS,
    )
}

/// Maximizer of the uniform-pricing revenue `p (1 - F_Y(p))`, with its value.
pub fn optimal_uniform_price(spec: &DistributionSpec, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    spec.validate()?;
    cfg.validate()?;
    Ok(maximize(
        |p| p * (1.0 - marginal_cdf(spec, p, cfg)),
        0.0,
        1.0,
        SCAN_POINTS,
        cfg.refine_tol,
    ))
}

/// Maximizer of `y -> r(y, x)` and the maximal revenue at `x`.
pub fn optimal_price_at(spec: &DistributionSpec, x: f64, tol: f64) -> (f64, f64) {
    maximize(|y| pointwise_revenue(spec, y, x), 0.0, 1.0, SCAN_POINTS, tol)
}

/// Optimal discriminating prices on `x_grid_size` equally spaced covariates.
pub fn optimal_3pd_policy(
    spec: &DistributionSpec,
    x_grid_size: usize,
    cfg: &QuadratureConfig,
) -> Result<TabulatedPolicy> {
    spec.validate()?;
    cfg.validate()?;
    if x_grid_size < 2 {
        return Err(Error::ParameterDomain(format!(
            "x grid needs at least 2 points, got {x_grid_size}"
        )));
    }
    let x_grid: Vec<f64> = (0..x_grid_size)
        .map(|i| i as f64 / (x_grid_size - 1) as f64)
        .collect();
    let prices = x_grid
        .par_iter()
        .map(|&x| optimal_price_at(spec, x, cfg.refine_tol).0)
        .collect();
    TabulatedPolicy::new(x_grid, prices)
}

fn covariate_cuts<P: Policy + ?Sized>(spec: &DistributionSpec, pf: &P) -> Vec<f64> {
    let mut cuts = spec.x_breakpoints();
    cuts.extend(pf.breakpoints());
    cuts
}

/// `R(p) = int_0^1 r(p(x), x) f_X(x) dx`, integrated piecewise between the
/// policy's and the family's breakpoints.
pub fn expected_revenue<P: Policy + ?Sized>(
    spec: &DistributionSpec,
    pf: &P,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    spec.validate()?;
    cfg.validate()?;
    Ok(simpson_split(
        |x| pointwise_revenue(spec, pf.price(x), x),
        &covariate_cuts(spec, pf),
        cfg.x_panels,
        MIN_PIECE_PANELS,
    ))
}

/// Expected revenue of the pointwise-optimal discriminating policy.
pub fn optimal_3pd_revenue(spec: &DistributionSpec, cfg: &QuadratureConfig) -> Result<f64> {
    let policy = OptimalPolicy {
        spec,
        refine_tol: cfg.refine_tol,
    };
    expected_revenue(spec, &policy, cfg)
}

/// `W(p) = E[Y 1{Y > p(X)}]`, with the inner integral in closed form.
pub fn welfare<P: Policy + ?Sized>(spec: &DistributionSpec, pf: &P, cfg: &QuadratureConfig) -> Result<f64> {
    spec.validate()?;
    cfg.validate()?;
    Ok(simpson_split(
        |x| spec.partial_moment(pf.price(x), x),
        &covariate_cuts(spec, pf),
        cfg.x_panels,
        MIN_PIECE_PANELS,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::simpson;
    use proptest::prelude::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn power_closed_form(x: f64) -> f64 {
        (x + 2.0).powf(-1.0 / (x + 1.0))
    }

    fn brute_force_argmax<F: Fn(f64) -> f64>(f: F, points: usize) -> f64 {
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..points {
            let p = i as f64 / (points - 1) as f64;
            let v = f(p);
            if v > best.1 {
                best = (p, v);
            }
        }
        best.0
    }

    #[test]
    fn config_guards() {
        assert!(QuadratureConfig { x_panels: 7, ..cfg() }.validate().is_err());
        assert!(QuadratureConfig { y_panels: 4, ..cfg() }.validate().is_err());
        assert!(QuadratureConfig { refine_tol: 0.0, ..cfg() }.validate().is_err());
        assert!(cfg().validate().is_ok());
    }

    #[test]
    fn pointwise_revenue_examples() {
        assert!((pointwise_revenue(&DistributionSpec::UniformJoint, 0.5, 0.3) - 0.25).abs() < 1e-15);
        assert_eq!(pointwise_revenue(&DistributionSpec::PowerSimulated, 0.0, 0.4), 0.0);
        assert!((pointwise_revenue(&DistributionSpec::PowerSimulated, 0.5, 1.0) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn uniform_baseline() {
        let (p, r) = optimal_uniform_price(&DistributionSpec::UniformJoint, &cfg()).unwrap();
        assert!((p - 0.5).abs() < 1e-9);
        assert!((r - 0.25).abs() < 1e-9);
    }

    #[test]
    fn power_uniform_benchmark() {
        let (_, r) = optimal_uniform_price(&DistributionSpec::PowerSimulated, &cfg()).unwrap();
        assert!((r - 0.322343).abs() < 1e-3, "{r}");
    }

    #[test]
    fn perturbed_uniform_price_lies_in_interval() {
        let spec = DistributionSpec::perturbed_uniform(1.0, 0.01).unwrap();
        let (p, _) = optimal_uniform_price(&spec, &cfg()).unwrap();
        assert!(p > 0.5 - 0.01 && p < 0.5 - 0.01 / 8.0, "{p}");
    }

    #[test]
    fn power_policy_matches_first_order_condition() {
        let pol = optimal_3pd_policy(&DistributionSpec::PowerSimulated, 101, &cfg()).unwrap();
        for (x, p) in pol.x_grid().iter().zip(pol.prices()) {
            assert!((p - power_closed_form(*x)).abs() < 1e-6, "x={x}");
        }
        assert!((pol.prices()[0] - 0.5).abs() < 1e-7);
        let flat = optimal_3pd_policy(&DistributionSpec::UniformJoint, 11, &cfg()).unwrap();
        assert!(flat.prices().iter().all(|p| (p - 0.5).abs() < 1e-7));
    }

    #[test]
    fn closed_form_agrees_with_brute_force() {
        for &x in &[0.0, 0.25, 0.8] {
            let brute = brute_force_argmax(|y| pointwise_revenue(&DistributionSpec::PowerSimulated, y, x), 1_000_001);
            assert!((brute - power_closed_form(x)).abs() < 2e-6);
        }
    }

    #[test]
    fn golden_section_agrees_with_dense_scan() {
        let specs = [
            DistributionSpec::PowerSimulated,
            DistributionSpec::perturbed_uniform(1.0, 0.01).unwrap(),
            DistributionSpec::perturbed_uniform(-1.5, 0.02).unwrap(),
            DistributionSpec::perturbed_uniform(0.5, 0.1).unwrap(),
        ];
        for spec in &specs {
            let (p, _) = optimal_price_at(spec, 0.7, 1e-10);
            let brute = brute_force_argmax(|y| pointwise_revenue(spec, y, 0.7), 1_000_001);
            assert!((p - brute).abs() < 1e-5, "{spec:?}: {p} vs {brute}");
        }
    }

    #[test]
    fn expected_revenue_examples() {
        let c = cfg();
        let half = PricingFunction::Constant { p: 0.5 };
        assert!((expected_revenue(&DistributionSpec::UniformJoint, &half, &c).unwrap() - 0.25).abs() < 1e-12);
        let zero = PricingFunction::Constant { p: 0.0 };
        assert_eq!(expected_revenue(&DistributionSpec::PowerSimulated, &zero, &c).unwrap(), 0.0);
        let pol = optimal_3pd_policy(&DistributionSpec::PowerSimulated, 101, &c).unwrap();
        let r = expected_revenue(&DistributionSpec::PowerSimulated, &pol, &c).unwrap();
        assert!((r - 0.322992).abs() < 1e-3, "{r}");
        let direct = optimal_3pd_revenue(&DistributionSpec::PowerSimulated, &c).unwrap();
        assert!(direct >= r - 1e-12);
        assert!((direct - 0.322992).abs() < 1e-3);
    }

    #[test]
    fn constant_price_revenue_matches_marginal_cdf() {
        let spec = DistributionSpec::packing(8, 1.5, (0..8).map(|j| j % 3 == 0).collect()).unwrap();
        let p = 0.47;
        let want = p * (1.0 - marginal_cdf(&spec, p, &cfg()));
        let got = expected_revenue(&spec, &PricingFunction::Constant { p }, &cfg()).unwrap();
        assert!((want - got).abs() < 1e-14);
    }

    #[test]
    fn welfare_examples() {
        let c = cfg();
        let w = welfare(&DistributionSpec::UniformJoint, &PricingFunction::Constant { p: 0.5 }, &c).unwrap();
        assert!((w - 0.375).abs() < 1e-14);
        for spec in [DistributionSpec::UniformJoint, DistributionSpec::PowerSimulated] {
            let w = welfare(&spec, &PricingFunction::Constant { p: 1.0 }, &c).unwrap();
            assert!(w.abs() < 1e-15);
        }
        let w = welfare(&DistributionSpec::PowerSimulated, &PricingFunction::Constant { p: 0.0 }, &c).unwrap();
        // inner integral (x+1)/(x+2), integrated over x with an independent rule
        let oracle = simpson(|x| (x + 1.0) / (x + 2.0), 0.0, 1.0, 1 << 12);
        assert!((w - oracle).abs() < 1e-12);
        assert!((w - (1.0 - 1.5f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn discrimination_dominates_uniform() {
        let c = cfg();
        let specs = [
            DistributionSpec::UniformJoint,
            DistributionSpec::PowerSimulated,
            DistributionSpec::perturbed_uniform(1.0, 0.1).unwrap(),
            DistributionSpec::perturbed_conditional(1.5, 0.1, 0.5).unwrap(),
            DistributionSpec::packing(8, 1.0, (0..8).map(|j| j % 2 == 1).collect()).unwrap(),
        ];
        for spec in &specs {
            let (p, _) = optimal_uniform_price(spec, &c).unwrap();
            let uniform = expected_revenue(spec, &PricingFunction::Constant { p }, &c).unwrap();
            let disc = optimal_3pd_revenue(spec, &c).unwrap();
            assert!(disc >= uniform - 1e-9, "{spec:?}");
        }
    }

    #[test]
    fn quadratic_gap_on_uniform() {
        // R(p) = p(1-p), so R(1/2) - R(p) = (p - 1/2)^2 exactly
        let c = cfg();
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let r = expected_revenue(&DistributionSpec::UniformJoint, &PricingFunction::Constant { p }, &c).unwrap();
            let gap = 0.25 - r;
            assert!(gap >= (p - 0.5).powi(2) - 1e-12);
            assert!((gap - (p - 0.5).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn tabulated_policy_interpolates() {
        let pol = TabulatedPolicy::new(vec![0.0, 0.5, 1.0], vec![0.2, 0.4, 0.8]).unwrap();
        assert!((pol.price(0.25) - 0.3).abs() < 1e-15);
        assert!((pol.price(1.0) - 0.8).abs() < 1e-15);
        assert!((pol.price(0.75) - 0.6).abs() < 1e-15);
        assert!(TabulatedPolicy::new(vec![0.0, 0.5], vec![0.1, 0.2]).is_err());
        assert!(TabulatedPolicy::new(vec![0.0, 0.6, 0.5, 1.0], vec![0.1; 4]).is_err());
    }

    fn step_policy() -> impl Strategy<Value = PricingFunction> {
        prop::collection::vec(0.0..=1.0f64, 1..9).prop_map(|prices| {
            if prices.len() == 1 {
                PricingFunction::Constant { p: prices[0] }
            } else {
                PricingFunction::KMarkets { k: prices.len(), prices }
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn optimal_policy_beats_step_policies(pf in step_policy()) {
            let c = cfg();
            let spec = DistributionSpec::PowerSimulated;
            let best = optimal_3pd_revenue(&spec, &c).unwrap();
            prop_assert!(best >= expected_revenue(&spec, &pf, &c).unwrap() - 1e-6);
        }

        #[test]
        fn welfare_dominates_revenue(pf in step_policy()) {
            let c = cfg();
            for spec in [DistributionSpec::PowerSimulated, DistributionSpec::perturbed_conditional(1.0, 0.1, 0.3).unwrap()] {
                let w = welfare(&spec, &pf, &c).unwrap();
                let r = expected_revenue(&spec, &pf, &c).unwrap();
                prop_assert!(w >= r - 1e-9);
                prop_assert!((0.0..=1.0).contains(&w));
            }
        }
    }
}
