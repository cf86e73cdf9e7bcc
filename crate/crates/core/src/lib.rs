//! Sample-based third-degree price discrimination.
//!
//! * [`dist`] joint valuation/covariate families with exact CDFs and samplers
//! * [`pricing`] uniform and K-markets empirical revenue maximization
//! * [`oracle`] true-distribution revenue, welfare and optimal prices
//! * [`adversarial`] perturbation constructions, divergences and codebooks
//! * [`experiment`] Monte Carlo deficiency curves and rate fits
//! * [`ingest`] and [`cli`] for the command-line tool

pub mod adversarial;
pub mod cli;
pub mod dist;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod numeric;
pub mod oracle;
pub mod pricing;

pub use dist::{Dataset, DistributionSpec, UnitPoint};
pub use error::{Error, Result};
pub use experiment::{DeficiencyPoint, Engine, RateFit, Strategy};
pub use oracle::{Policy, QuadratureConfig, TabulatedPolicy};
pub use pricing::{KSchedule, MarketPartition, PricingFunction};
