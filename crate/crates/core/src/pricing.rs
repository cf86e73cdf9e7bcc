//! Data-based pricing: empirical demand, uniform ERM and K-markets ERM.
//!
//! A buyer purchases whenever the valuation is at least the posted price, so
//! the empirical revenue `p * #{Y_i >= p} / n` attains its supremum at one of
//! the sample values.

use std::fmt;
use std::str::FromStr;

use crate::dist::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PricingFunction {
    Constant { p: f64 },
    /// Step function over `k` equal-width covariate bins.
    KMarkets { k: usize, prices: Vec<f64> },
}

impl PricingFunction {
    /// Price charged at covariate `x`; `x = 1` falls in the last bin.
    pub fn price_at(&self, x: f64) -> f64 {
        match self {
            Self::Constant { p } => *p,
            Self::KMarkets { k, prices } => prices[market_index(*k, x)],
        }
    }

    /// Number of distinct markets (1 for a constant price).
    pub fn markets(&self) -> usize {
        match self {
            Self::Constant { .. } => 1,
            Self::KMarkets { k, .. } => *k,
        }
    }

    pub fn prices(&self) -> Vec<f64> {
        match self {
            Self::Constant { p } => vec![*p],
            Self::KMarkets { prices, .. } => prices.clone(),
        }
    }
}

pub fn price_at(pf: &PricingFunction, x: f64) -> f64 {
    pf.price_at(x)
}

/// Zero-based bin of `x` among `k` equal-width bins on `[0, 1]`.
pub fn market_index(k: usize, x: f64) -> usize {
    ((x * k as f64).floor().max(0.0) as usize).min(k - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketPartition {
    pub k_requested: usize,
    pub k_effective: usize,
    /// Zero-based indices into the dataset, one list per effective market.
    pub members: Vec<Vec<usize>>,
}

/// Fraction of valuations at or above `p`.
pub fn empirical_demand(valuations: &[f64], p: f64) -> Result<f64> {
    if valuations.is_empty() {
        return Err(Error::EmptyInput("no valuations".into()));
    }
    let sold = valuations.iter().filter(|&&y| y >= p).count();
    Ok(sold as f64 / valuations.len() as f64)
}

/// Revenue-maximizing sample price, lowest price on ties.
pub fn uniform_erm(valuations: &[f64]) -> Result<f64> {
    if valuations.is_empty() {
        return Err(Error::EmptyInput("no valuations".into()));
    }
    let mut sorted = valuations.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(erm_sorted_desc(&sorted).0)
}

/// ERM on valuations sorted in decreasing order. Returns `(price, revenue)`.
fn erm_sorted_desc(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len() as f64;
    let mut best = (sorted[0], f64::NEG_INFINITY);
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        // j buyers value the item at v or more; later candidates are lower prices
        let revenue = v * j as f64 / n;
        if revenue >= best.1 {
            best = (v, revenue);
        }
        i = j;
    }
    best
}

/// Partitions the covariate range into `k` equal bins, lowering `k` until no
/// bin is empty, then runs uniform ERM inside every market.
pub fn k_markets_erm(data: &Dataset, k: usize) -> Result<(PricingFunction, MarketPartition)> {
    if k == 0 {
        return Err(Error::ParameterDomain("K must be at least 1".into()));
    }
    let points = data.points();
    let mut k_eff = k;
    let members = loop {
        let mut bins = vec![Vec::new(); k_eff];
        for (i, pt) in points.iter().enumerate() {
            bins[market_index(k_eff, pt.x)].push(i);
        }
        if k_eff == 1 || bins.iter().all(|b| !b.is_empty()) {
            break bins;
        }
        k_eff -= 1;
    };
    let prices = members
        .iter()
        .map(|idx| {
            let mut ys: Vec<f64> = idx.iter().map(|&i| points[i].y).collect();
            ys.sort_by(|a, b| b.total_cmp(a));
            erm_sorted_desc(&ys).0
        })
        .collect::<Vec<_>>();
    let pf = if k_eff == 1 {
        PricingFunction::Constant { p: prices[0] }
    } else {
        PricingFunction::KMarkets { k: k_eff, prices }
    };
    let partition = MarketPartition {
        k_requested: k,
        k_effective: k_eff,
        members,
    };
    Ok((pf, partition))
}

/// Rule for choosing the number of markets from the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KSchedule {
    /// `max(1, floor(n^(1/4)))`
    Theory,
    /// `max(1, floor(2 n^(1/4) - 7))`
    Ebay,
    /// `max(1, floor(floor(n^(1/4)) / 5))`
    Sim,
    Fixed(usize),
}

pub fn k_schedule(n: usize, variant: KSchedule) -> usize {
    let root = fourth_root_floor(n);
    match variant {
        KSchedule::Theory => root.max(1),
        KSchedule::Ebay => {
            let v = (2.0 * (n as f64).powf(0.25) - 7.0).floor();
            if v < 1.0 {
                1
            } else {
                v as usize
            }
        }
        KSchedule::Sim => (root / 5).max(1),
        KSchedule::Fixed(k) => k.max(1),
    }
}

/// Exact integer `floor(n^(1/4))`.
fn fourth_root_floor(n: usize) -> usize {
    let mut r = (n as f64).powf(0.25).round() as usize;
    while r > 0 && r.pow(4) > n {
        r -= 1;
    }
    while (r + 1).pow(4) <= n {
        r += 1;
    }
    r
}

impl fmt::Display for KSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Theory => write!(f, "theory"),
            Self::Ebay => write!(f, "ebay"),
            Self::Sim => write!(f, "sim"),
            Self::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for KSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(Self::Theory),
            "ebay" => Ok(Self::Ebay),
            "sim" => Ok(Self::Sim),
            other => other
                .parse::<usize>()
                .ok()
                .filter(|k| *k >= 1)
                .map(Self::Fixed)
                .ok_or_else(|| Error::ParameterDomain(format!("unknown K schedule '{other}'"))),
        }
    }
}
