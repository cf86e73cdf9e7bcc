//! Joint distributions of (valuation, covariate) on the unit square.
//!
//! Every family has a uniform covariate marginal. Apart from the power family,
//! the conditional density of the valuation is `1 + c * phi_y((y - 1/2) / s)`
//! for an x-dependent amplitude `c` and a fixed width `s`, so it is piecewise
//! linear in `y` and its CDF is piecewise quadratic. CDFs, partial moments and
//! the inverse CDF are all evaluated in closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adversarial::{phi_x, phi_y, phi_y_integral};
use crate::error::{Error, Result};
use crate::numeric::simpson;

/// Curvature constant bounding the admissible perturbation amplitudes.
pub const C_STAR: f64 = 1.0;

/// Largest admissible perturbation amplitude, `4 - 2 C*`.
pub const MAX_AMPLITUDE: f64 = 4.0 - 2.0 * C_STAR;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    pub y: f64,
    pub x: f64,
}

impl UnitPoint {
    pub fn new(y: f64, x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&y) || !(0.0..=1.0).contains(&x) {
            return Err(Error::ParameterDomain(format!(
                "point ({y}, {x}) is outside the unit square"
            )));
        }
        Ok(Self { y, x })
    }
}

/// A non-empty sample of points in the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<UnitPoint>,
}

impl Dataset {
    pub fn new(points: Vec<UnitPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("dataset has no points".into()));
        }
        for p in &points {
            UnitPoint::new(p.y, p.x)?;
        }
        Ok(Self { points })
    }

    /// Builds a dataset from `(valuation, covariate)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let points = pairs
            .iter()
            .map(|&(y, x)| UnitPoint::new(y, x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn points(&self) -> &[UnitPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn valuations(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.y).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    /// Independent uniform valuation and covariate.
    UniformJoint,
    /// `F(y|x) = y^(x+1)`.
    PowerSimulated,
    /// Covariate-free perturbation `1 + a delta phi_y((y - 1/2)/delta)`. The
    /// amplitude may be negative or zero.
    PerturbedUniform { a: f64, delta: f64 },
    /// Perturbation localized around `x0` through `phi_x((x - x0)/delta + 1/4)`.
    PerturbedConditional { a: f64, delta: f64, x0: f64 },
    /// One bump per covariate bin, switched on by the bits of `alpha`.
    Packing { m: usize, a: f64, alpha: Vec<bool> },
}

/// Local shape of a piecewise-linear conditional density:
/// `1 + amp * phi_y((y - 1/2) / scale)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bump {
    pub amp: f64,
    pub scale: f64,
}

impl Bump {
    fn edges(&self) -> [f64; 4] {
        let s = self.scale;
        [0.5 - s, 0.5, 0.5 + 2.0 * s, 0.5 + 3.0 * s]
    }

    fn density(&self, y: f64) -> f64 {
        1.0 + self.amp * phi_y((y - 0.5) / self.scale)
    }

    fn cdf(&self, y: f64) -> f64 {
        y + self.amp * self.scale * phi_y_integral((y - 0.5) / self.scale)
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        let s = self.scale;
        let c = self.amp;
        if u <= 0.5 - s || u >= 0.5 + 3.0 * s {
            return u;
        }
        // solve t + c * Phi(t) = w on the segment that contains w
        let w = (u - 0.5) / s;
        let t = if w <= 0.5 * c {
            quadratic_root(0.5 * c, 1.0, -(1.0 + w)).clamp(0.0, 1.0) - 1.0
        } else if w <= 2.0 + 0.5 * c {
            quadratic_root(-0.5 * c, 1.0 + c, 0.5 * c - w).clamp(0.0, 2.0)
        } else {
            quadratic_root(0.5 * c, 1.0, 3.0 - w).clamp(-1.0, 0.0) + 3.0
        };
        (0.5 + s * t).clamp(0.0, 1.0)
    }

    /// Exact `int_lo^hi g(y) f(y) dy` for `g` of degree <= 2, using Simpson on
    /// every linear piece of the density.
    fn integrate_poly<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64) -> f64 {
        let mut cuts = vec![lo];
        cuts.extend(self.edges().into_iter().filter(|e| *e > lo && *e < hi));
        cuts.push(hi);
        cuts.windows(2)
            .map(|w| simpson(|y| g(y) * self.density(y), w[0], w[1], 2))
            .sum()
    }
}

/// Root of `a z^2 + b z + c = 0` that stays continuous as `a -> 0` (for `b > 0`).
fn quadratic_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = (b * b - 4.0 * a * c).max(0.0);
    -2.0 * c / (b + disc.sqrt())
}

impl DistributionSpec {
    pub fn perturbed_uniform(a: f64, delta: f64) -> Result<Self> {
        let spec = Self::PerturbedUniform { a, delta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn perturbed_conditional(a: f64, delta: f64, x0: f64) -> Result<Self> {
        let spec = Self::PerturbedConditional { a, delta, x0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn packing(m: usize, a: f64, alpha: Vec<bool>) -> Result<Self> {
        let spec = Self::Packing { m, a, alpha };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the parameter domain of the family.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::UniformJoint | Self::PowerSimulated => Ok(()),
            Self::PerturbedUniform { a, delta } => {
                if !a.is_finite() || a.abs() > MAX_AMPLITUDE {
                    return Err(domain(format!("|a| must be at most {MAX_AMPLITUDE}, got {a}")));
                }
                check_delta(*delta)
            }
            Self::PerturbedConditional { a, delta, x0 } => {
                check_positive_amplitude(*a)?;
                check_delta(*delta)?;
                if !(*x0 > 0.0 && *x0 < 1.0) {
                    return Err(domain(format!("x0 must lie in (0, 1), got {x0}")));
                }
                Ok(())
            }
            Self::Packing { m, a, alpha } => {
                if *m < 8 {
                    return Err(domain(format!("packing needs m >= 8, got {m}")));
                }
                if alpha.len() != *m {
                    return Err(domain(format!(
                        "alpha has {} bits but m = {m}",
                        alpha.len()
                    )));
                }
                check_positive_amplitude(*a)
            }
        }
    }

    pub(crate) fn bump_at(&self, x: f64) -> Option<Bump> {
        match self {
            Self::UniformJoint | Self::PowerSimulated => None,
            Self::PerturbedUniform { a, delta } => Some(Bump {
                amp: a * delta,
                scale: *delta,
            }),
            Self::PerturbedConditional { a, delta, x0 } => {
                let v = (x - x0) / delta + 0.25;
                if v <= 0.0 || v >= 1.0 {
                    return None;
                }
                Some(Bump {
                    amp: a * delta * phi_x(v),
                    scale: *delta,
                })
            }
            Self::Packing { m, a, alpha } => {
                let j = packing_bin(*m, x);
                if !alpha[j] {
                    return None;
                }
                let mf = *m as f64;
                Some(Bump {
                    amp: a / mf * phi_x(mf * x - j as f64),
                    scale: 1.0 / mf,
                })
            }
        }
    }

    /// `F(y|x)`, assuming the spec is valid. `y` is clamped to `[0, 1]`.
    pub fn cdf(&self, y: f64, x: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        match self {
            Self::PowerSimulated => y.powf(x + 1.0),
            _ => match self.bump_at(x) {
                Some(b) => b.cdf(y).clamp(0.0, 1.0),
                None => y,
            },
        }
    }

    /// `f(y|x)`, assuming the spec is valid. Zero outside `[0, 1]`.
    pub fn density(&self, y: f64, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&y) {
            return 0.0;
        }
        match self {
            Self::PowerSimulated => (x + 1.0) * y.powf(x),
            _ => match self.bump_at(x) {
                Some(b) => b.density(y),
                None => 1.0,
            },
        }
    }

    /// `int_p^1 y f(y|x) dy`.
    pub fn partial_moment(&self, p: f64, x: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            Self::PowerSimulated => (x + 1.0) / (x + 2.0) * (1.0 - p.powf(x + 2.0)),
            _ => match self.bump_at(x) {
                Some(b) => b.integrate_poly(|y| y, p, 1.0),
                None => 0.5 * (1.0 - p * p),
            },
        }
    }

    /// Inverse of `y -> F(y|x)` for `u` in `[0, 1]`.
    pub fn inverse_cdf(&self, u: f64, x: f64) -> f64 {
        match self {
            Self::PowerSimulated => u.powf(1.0 / (x + 1.0)),
            _ => match self.bump_at(x) {
                Some(b) => b.inverse_cdf(u),
                None => u,
            },
        }
    }

    /// Valuation levels where the conditional density has a kink.
    pub fn y_breakpoints(&self) -> Vec<f64> {
        let scale = match self {
            Self::UniformJoint | Self::PowerSimulated => return Vec::new(),
            Self::PerturbedUniform { delta, .. } | Self::PerturbedConditional { delta, .. } => *delta,
            Self::Packing { m, .. } => 1.0 / *m as f64,
        };
        Bump { amp: 0.0, scale }.edges().to_vec()
    }

    /// Covariate levels where the perturbation switches on, off or sign.
    pub fn x_breakpoints(&self) -> Vec<f64> {
        match self {
            Self::PerturbedConditional { delta, x0, .. } => [0.0, 0.5, 1.0]
                .iter()
                .map(|v| x0 + delta * (v - 0.25))
                .filter(|x| *x > 0.0 && *x < 1.0)
                .collect(),
            Self::Packing { m, .. } => {
                let mf = *m as f64;
                (1..=*m)
                    .flat_map(|j| [(j as f64 - 0.5) / mf, j as f64 / mf])
                    .filter(|x| *x < 1.0)
                    .collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Zero-based packing bin of `x`; `x = 1` belongs to the last bin.
pub(crate) fn packing_bin(m: usize, x: f64) -> usize {
    ((m as f64 * x).floor().max(0.0) as usize).min(m - 1)
}

fn domain(msg: String) -> Error {
    Error::ParameterDomain(msg)
}

fn check_positive_amplitude(a: f64) -> Result<()> {
    if !(a > 0.0 && a <= MAX_AMPLITUDE) {
        return Err(domain(format!("a must lie in (0, {MAX_AMPLITUDE}], got {a}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.25) {
        return Err(domain(format!("delta must lie in (0, 1/4), got {delta}")));
    }
    if 0.5 + 3.0 * delta > 1.0 {
        return Err(domain(format!(
            "delta = {delta} pushes the perturbation support [1/2 - delta, 1/2 + 3 delta] outside [0, 1]"
        )));
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(domain(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

pub fn conditional_cdf(spec: &DistributionSpec, y: f64, x: f64) -> Result<f64> {
    spec.validate()?;
    check_unit("y", y)?;
    check_unit("x", x)?;
    Ok(spec.cdf(y, x))
}

pub fn conditional_density(spec: &DistributionSpec, y: f64, x: f64) -> Result<f64> {
    spec.validate()?;
    check_unit("y", y)?;
    check_unit("x", x)?;
    Ok(spec.density(y, x))
}

/// Every implemented family has a uniform covariate.
pub fn marginal_x_density(_spec: &DistributionSpec, x: f64) -> f64 {
    if (0.0..=1.0).contains(&x) {
        1.0
    } else {
        0.0
    }
}

/// Draws `n` i.i.d. points: the covariate first, then the valuation by
/// inverse CDF. The stream is fully determined by `seed`.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::EmptyInput("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            let u: f64 = rng.random();
            UnitPoint {
                y: spec.inverse_cdf(u, x),
                x,
            }
        })
        .collect();
    Ok(Dataset { points })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityReport {
    /// Worst `|int_0^1 f(y|x) dy - 1|` over the covariate grid.
    pub max_norm_error: f64,
    pub min_density: f64,
}

pub fn validate_density(spec: &DistributionSpec, x_grid_size: usize) -> Result<DensityReport> {
    spec.validate()?;
    if x_grid_size < 2 {
        return Err(domain(format!("x grid needs at least 2 points, got {x_grid_size}")));
    }
    let mut max_norm_error: f64 = 0.0;
    let mut min_density = f64::INFINITY;
    for i in 0..x_grid_size {
        let x = i as f64 / (x_grid_size - 1) as f64;
        let (mass, lowest) = match (spec, spec.bump_at(x)) {
            (DistributionSpec::PowerSimulated, _) => {
                (spec.cdf(1.0, x) - spec.cdf(0.0, x), spec.density(0.0, x))
            }
            (_, Some(b)) => {
                let mass = b.integrate_poly(|_| 1.0, 0.0, 1.0);
                let lowest = b
                    .edges()
                    .into_iter()
                    .chain([0.0, 1.0])
                    .map(|y| b.density(y))
                    .fold(f64::INFINITY, f64::min);
                (mass, lowest)
            }
            (_, None) => (1.0, 1.0),
        };
        max_norm_error = max_norm_error.max((mass - 1.0).abs());
        min_density = min_density.min(lowest);
    }
    Ok(DensityReport {
        max_norm_error,
        min_density,
    })
}
