//! Lower-bound constructions: the perturbation functions, divergences between
//! perturbed families, a greedy Gilbert-Varshamov codebook and the separation
//! of optimal prices across packing words.

use rayon::prelude::*;

use crate::dist::{DistributionSpec, MAX_AMPLITUDE};
use crate::error::{Error, Result};
use crate::numeric::{even_at_least, unit_partition};
use crate::oracle::{optimal_3pd_policy, optimal_uniform_price, QuadratureConfig};

/// Piecewise-linear hat: rises on `[-1, 0]`, falls on `[0, 2]`, returns to
/// zero on `[2, 3]`. Integrates to zero.
pub fn phi_y(t: f64) -> f64 {
    if (-1.0..=0.0).contains(&t) {
        t + 1.0
    } else if t > 0.0 && t <= 2.0 {
        1.0 - t
    } else if t > 2.0 && t <= 3.0 {
        t - 3.0
    } else {
        0.0
    }
}

/// `int_{-inf}^t phi_y`.
pub fn phi_y_integral(t: f64) -> f64 {
    if t <= -1.0 {
        0.0
    } else if t <= 0.0 {
        0.5 * (t + 1.0) * (t + 1.0)
    } else if t <= 2.0 {
        0.5 + t - 0.5 * t * t
    } else if t <= 3.0 {
        0.5 * (t - 3.0) * (t - 3.0)
    } else {
        0.0
    }
}

/// Smooth bump on `(0, 1/2)` followed by its negative on `(1/2, 1)`.
pub fn phi_x(t: f64) -> f64 {
    if t > 0.0 && t < 0.5 {
        let s = 4.0 * t - 1.0;
        (-s * s / (1.0 - s * s)).exp()
    } else if t > 0.5 && t < 1.0 {
        let s = 4.0 * t - 3.0;
        -(-s * s / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

const MIN_CELL_PANELS: usize = 16;

/// Composite Simpson nodes and weights on `[0, 1]`, split at `breaks`.
fn simpson_nodes(breaks: &[f64], panels: usize) -> Vec<(f64, f64)> {
    let edges = unit_partition(breaks);
    let mut nodes = Vec::new();
    for w in edges.windows(2) {
        let n = even_at_least(
            (panels as f64 * (w[1] - w[0])).ceil() as usize,
            MIN_CELL_PANELS,
        );
        let h = (w[1] - w[0]) / n as f64;
        for i in 0..=n {
            let weight = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            nodes.push((w[0] + h * i as f64, weight * h / 3.0));
        }
    }
    nodes
}

/// Tensor Simpson quadrature of `f(y, x)` over the unit square, with cells
/// aligned to both families' kinks.
fn integrate_square<F>(spec1: &DistributionSpec, spec2: &DistributionSpec, cfg: &QuadratureConfig, f: F) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let mut xb = spec1.x_breakpoints();
    xb.extend(spec2.x_breakpoints());
    let mut yb = spec1.y_breakpoints();
    yb.extend(spec2.y_breakpoints());
    let xs = simpson_nodes(&xb, cfg.x_panels);
    let ys = simpson_nodes(&yb, cfg.y_panels);
    let rows: Vec<f64> = xs
        .par_iter()
        .map(|&(x, wx)| wx * ys.iter().map(|&(y, wy)| wy * f(y, x)).sum::<f64>())
        .collect();
    rows.iter().sum()
}

/// Squared Hellinger distance `int int (sqrt f1 - sqrt f2)^2` of the joint
/// densities.
pub fn hellinger_sq(spec1: &DistributionSpec, spec2: &DistributionSpec, cfg: &QuadratureConfig) -> Result<f64> {
    spec1.validate()?;
    spec2.validate()?;
    cfg.validate()?;
    let h = integrate_square(spec1, spec2, cfg, |y, x| {
        let d = spec1.density(y, x).sqrt() - spec2.density(y, x).sqrt();
        d * d
    });
    Ok(h.max(0.0))
}

/// `KL(F1 || F2) = int int f1 log(f1 / f2)`.
pub fn kl_divergence(spec1: &DistributionSpec, spec2: &DistributionSpec, cfg: &QuadratureConfig) -> Result<f64> {
    spec1.validate()?;
    spec2.validate()?;
    cfg.validate()?;
    let kl = integrate_square(spec1, spec2, cfg, |y, x| {
        let f1 = spec1.density(y, x);
        if f1 <= 0.0 {
            return 0.0;
        }
        let f2 = spec2.density(y, x);
        if f2 <= 0.0 {
            return f64::NAN;
        }
        f1 * (f1 / f2).ln()
    });
    if kl.is_nan() {
        return Err(Error::SupportViolation(
            "second density vanishes where the first is positive".into(),
        ));
    }
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceReport {
    pub hellinger_sq: f64,
    pub kl: f64,
    /// Closed-form Hellinger bound, when one is known for the pair.
    pub analytic_bound: Option<f64>,
}

impl DivergenceReport {
    pub fn bound_satisfied(&self) -> Option<bool> {
        self.analytic_bound.map(|b| self.hellinger_sq <= b)
    }
}

/// `(2 sqrt 2 / 3) a^2 delta^3`, the Hellinger bound between the uniform and
/// the covariate-free perturbation.
pub fn perturbed_uniform_hellinger_bound(a: f64, delta: f64) -> f64 {
    2.0 * 2f64.sqrt() / 3.0 * a * a * delta.powi(3)
}

pub fn divergence_report(
    spec1: &DistributionSpec,
    spec2: &DistributionSpec,
    cfg: &QuadratureConfig,
) -> Result<DivergenceReport> {
    let analytic_bound = match (spec1, spec2) {
        (DistributionSpec::UniformJoint, DistributionSpec::PerturbedUniform { a, delta })
        | (DistributionSpec::PerturbedUniform { a, delta }, DistributionSpec::UniformJoint) => {
            Some(perturbed_uniform_hellinger_bound(*a, *delta))
        }
        _ => None,
    };
    Ok(DivergenceReport {
        hellinger_sq: hellinger_sq(spec1, spec2, cfg)?,
        kl: kl_divergence(spec1, spec2, cfg)?,
        analytic_bound,
    })
}

/// Binary words of length `m`, stored with the first coordinate in the most
/// significant bit so integer order is lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    pub m: usize,
    pub words: Vec<u32>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Word `i` as a bit vector `(alpha_1, ..., alpha_m)`.
    pub fn bits(&self, i: usize) -> Vec<bool> {
        word_to_bits(self.words[i], self.m)
    }

    /// The distance every pair of words is guaranteed to exceed or meet.
    pub fn required_distance(&self) -> usize {
        self.m.div_ceil(8)
    }
}

pub fn word_to_bits(word: u32, m: usize) -> Vec<bool> {
    (0..m).map(|j| (word >> (m - 1 - j)) & 1 == 1).collect()
}

pub fn bits_to_word(bits: &[bool]) -> u32 {
    bits.iter().fold(0, |w, &b| (w << 1) | b as u32)
}

pub fn hamming(a: u32, b: u32) -> usize {
    (a ^ b).count_ones() as usize
}

/// All masks of `m` bits with weight below `radius + 1`.
fn ball_offsets(m: usize, radius: usize) -> Vec<u32> {
    let mut out = vec![0u32];
    let mut frontier = vec![0u32];
    for _ in 0..radius {
        let mut next = Vec::new();
        for &w in &frontier {
            // extend with a bit above the highest set bit to avoid duplicates
            let start = if w == 0 { 0 } else { 32 - w.leading_zeros() as usize };
            for b in start..m {
                next.push(w | (1 << b));
            }
        }
        out.extend(&next);
        frontier = next;
    }
    out
}

/// Greedy lexicographic code with minimum distance `ceil(m/8)`: scan
/// `{0,1}^m` in order and keep every word at distance at least `ceil(m/8)`
/// from all kept words.
pub fn gilbert_varshamov(m: usize) -> Result<Codebook> {
    if !(8..=24).contains(&m) {
        return Err(Error::ParameterDomain(format!(
            "greedy codebook supports 8 <= m <= 24, got {m}"
        )));
    }
    let d = m.div_ceil(8);
    let offsets = ball_offsets(m, d - 1);
    let size = 1usize << m;
    // covered[w] marks words within distance d-1 of an accepted word
    let mut covered = vec![0u64; size.div_ceil(64)];
    let mut words = Vec::new();
    for w in 0..size as u32 {
        let idx = w as usize;
        if covered[idx / 64] >> (idx % 64) & 1 == 1 {
            continue;
        }
        words.push(w);
        for &o in &offsets {
            let v = (w ^ o) as usize;
            covered[v / 64] |= 1 << (v % 64);
        }
    }
    Ok(Codebook { m, words })
}

/// Root-mean-square distance between the optimal price curves of two packing
/// words, integrated by the trapezoid rule on `x_grid_size` covariates.
pub fn packing_price_separation(
    m: usize,
    a: f64,
    alpha: &[bool],
    alpha_prime: &[bool],
    x_grid_size: usize,
) -> Result<f64> {
    let (p1, p2) = packing_price_curves(m, a, alpha, alpha_prime, x_grid_size)?;
    let sq: Vec<f64> = p1.iter().zip(&p2).map(|(u, v)| (u - v) * (u - v)).collect();
    let h = 1.0 / (x_grid_size - 1) as f64;
    let integral = h * (sq.iter().sum::<f64>() - 0.5 * (sq[0] + sq[sq.len() - 1]));
    Ok(integral.max(0.0).sqrt())
}

/// Tabulated optimal prices for both packing words on a common grid.
pub fn packing_price_curves(
    m: usize,
    a: f64,
    alpha: &[bool],
    alpha_prime: &[bool],
    x_grid_size: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let s1 = DistributionSpec::packing(m, a, alpha.to_vec())?;
    let s2 = DistributionSpec::packing(m, a, alpha_prime.to_vec())?;
    let cfg = QuadratureConfig::default();
    let p1 = optimal_3pd_policy(&s1, x_grid_size, &cfg)?;
    let p2 = optimal_3pd_policy(&s2, x_grid_size, &cfg)?;
    Ok((p1.prices().to_vec(), p2.prices().to_vec()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceIntervalCheck {
    pub p_star: f64,
    pub interval: (f64, f64),
    pub inside: bool,
}

/// Tolerance for the degenerate `b = 0` case, where the interval is `{1/2}`.
const CENTER_TOL: f64 = 1e-7;

/// Optimal uniform price of the covariate-free perturbation with signed
/// amplitude `b`, compared with the interval predicted for the sign of `b`.
pub fn price_interval_check(b: f64, delta: f64) -> Result<PriceIntervalCheck> {
    if b.is_nan() || b.abs() >= MAX_AMPLITUDE {
        return Err(Error::ParameterDomain(format!(
            "|b| must be below {MAX_AMPLITUDE}, got {b}"
        )));
    }
    let spec = DistributionSpec::perturbed_uniform(b, delta)?;
    let (p_star, _) = optimal_uniform_price(&spec, &QuadratureConfig::default())?;
    let (interval, inside) = if b > 0.0 {
        let iv = (0.5 - delta, 0.5 - b * delta / 8.0);
        (iv, p_star > iv.0 && p_star < iv.1)
    } else if b < 0.0 {
        let iv = (0.5 - b * delta / 8.0, 0.5 + 2.0 * delta);
        (iv, p_star > iv.0 && p_star < iv.1)
    } else {
        ((0.5, 0.5), (p_star - 0.5).abs() <= CENTER_TOL)
    };
    Ok(PriceIntervalCheck {
        p_star,
        interval,
        inside,
    })
}
