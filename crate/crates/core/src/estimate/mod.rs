//! Parameter estimation: maximum pseudo-likelihood, Monte-Carlo maximum
//! likelihood, log-likelihood bridges, profile grids over the homophily
//! exponent, and linear contrasts of coefficients.

mod mcmcmle;
mod mple;
mod profile;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::attrs::Attributes;
use crate::error::EstimateError;
use crate::graph::BipartiteNetwork;
use crate::parallel::Execution;
use crate::sampler::{chain_rng, SamplerControl, RNG_ALGORITHM};
use crate::terms::ModelSpec;

pub use mcmcmle::{bridge_loglik, mcmcmle};
pub use mple::{dyad_table, mple, DyadTable};
pub use profile::{profile, profile_csv, ProfilePoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Mple,
    McmcMle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mple => "MPLE",
            Method::McmcMle => "MCMC-MLE",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mple" => Ok(Method::Mple),
            "mcmcmle" | "mcmc-mle" | "mcmle" => Ok(Method::McmcMle),
            other => Err(format!("unknown method `{other}` (use mple or mcmcmle)")),
        }
    }
}

/// Everything the estimators need besides the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitControl {
    pub sampler: SamplerControl,
    /// Re-anchoring cap for MCMC-MLE.
    pub max_anchors: usize,
    /// Anchor step norm below which MCMC-MLE stops outright.
    pub step_tol: f64,
    /// Log-likelihood bridge steps between 0 and θ̂.
    pub bridges: usize,
    /// Retained draws per bridge step; `None` uses the sampler sample size.
    pub bridge_draws: Option<usize>,
    /// Estimate the log-likelihood (always on for MCMC-MLE and profiles).
    pub loglik: bool,
}

impl FitControl {
    pub fn for_network(net: &BipartiteNetwork) -> Self {
        FitControl {
            sampler: SamplerControl::for_dyads(net.dyad_count()),
            max_anchors: 20,
            step_tol: 1e-4,
            bridges: 16,
            bridge_draws: None,
            loglik: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sampler.seed = seed;
        self
    }
}

/// Log-likelihood relative to the all-zero model, with its Monte-Carlo
/// standard deviation (0 when exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLik {
    pub value: f64,
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McmcDiagnostics {
    pub acceptance_rate: f64,
    /// Effective sample size of each statistic in the final anchor sample.
    pub ess: Vec<f64>,
    pub anchors: usize,
    /// Hummel step length used at each anchor (1 = full step).
    pub gammas: Vec<f64>,
    pub step_norms: Vec<f64>,
    /// Worst incremental-vs-recomputed statistic gap over all chains.
    pub audit_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub method: Method,
    pub formula: String,
    pub names: Vec<String>,
    pub theta: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub loglik: Option<LogLik>,
    /// Maximised log pseudo-likelihood (MPLE only).
    pub pseudo_loglik: Option<f64>,
    /// Monte-Carlo standard error of each coefficient (MCMC-MLE only).
    pub mc_se: Option<Vec<f64>>,
    pub diagnostics: Option<McmcDiagnostics>,
    /// Statistics that were nearly constant in the sample.
    pub degenerate: Vec<String>,
    pub warnings: Vec<String>,
    pub iterations: usize,
    pub control: FitControl,
}

impl FitResult {
    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.covariance[(j, j)].max(0.0).sqrt()).collect()
    }

    /// Two-sided Wald p-values.
    pub fn p_values(&self) -> Vec<f64> {
        self.theta
            .iter()
            .zip(self.std_errors())
            .map(|(t, se)| wald_p(*t, se))
            .collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// `wᵀθ̂` and `sqrt(wᵀ Σ w)`.
    pub fn contrast(&self, weights: &[f64]) -> Result<(f64, f64), EstimateError> {
        contrast(self, weights)
    }

    /// Human-readable coefficient table.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Model:  {}", self.formula);
        let _ = writeln!(s, "Method: {}", self.method.name());
        let sc = &self.control.sampler;
        if self.method == Method::McmcMle || self.loglik.is_some_and(|l| l.sd > 0.0) {
            let _ = writeln!(
                s,
                "Seed:   {} ({RNG_ALGORITHM}); burn-in {}, interval {}, sample size {}",
                sc.seed, sc.burn_in, sc.interval, sc.sample_size
            );
        }
        let width = self.names.iter().map(String::len).max().unwrap_or(0).max(4);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<width$}  {:>10}  {:>10}  {:>10}", "term", "estimate", "std.err", "p-value");
        for ((name, (t, se)), p) in self.names.iter().zip(self.theta.iter().zip(self.std_errors())).zip(self.p_values()) {
            let _ = writeln!(s, "{name:<width$}  {t:>10.4}  {se:>10.4}  {p:>10.4} {}", stars(p));
        }
        let _ = writeln!(s, "---");
        let _ = writeln!(s, "Significance: * p < 0.05, ** p < 0.001, *** p < 0.0001 (Wald)");
        if let Some(l) = self.loglik {
            if l.sd > 0.0 {
                let _ = writeln!(s, "Log-likelihood: {:.4} (sd {:.4})", l.value, l.sd);
            } else {
                let _ = writeln!(s, "Log-likelihood: {:.4}", l.value);
            }
        }
        if let Some(pl) = self.pseudo_loglik {
            let _ = writeln!(s, "Log pseudo-likelihood: {pl:.4}");
        }
        if let Some(d) = &self.diagnostics {
            let ess: Vec<String> = d.ess.iter().map(|e| format!("{e:.0}")).collect();
            let _ = writeln!(
                s,
                "MCMC: {} anchors, acceptance {:.3}, ESS [{}]",
                d.anchors,
                d.acceptance_rate,
                ess.join(", ")
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

/// Stars as in the paper's tables: 0.05, 0.001, 0.0001.
pub fn stars(p: f64) -> &'static str {
    if p < 1e-4 {
        "***"
    } else if p < 1e-3 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

pub fn wald_p(estimate: f64, se: f64) -> f64 {
    if se.is_nan() || se <= 0.0 || !estimate.is_finite() {
        return f64::NAN;
    }
    let n = Normal::standard();
    2.0 * n.sf((estimate / se).abs())
}

pub fn contrast(fit: &FitResult, weights: &[f64]) -> Result<(f64, f64), EstimateError> {
    if weights.len() != fit.dim() {
        return Err(crate::error::ModelError::Dimension { got: weights.len(), expected: fit.dim() }.into());
    }
    let est = weights.iter().zip(&fit.theta).map(|(w, t)| w * t).sum();
    let w = nalgebra::DVector::from_column_slice(weights);
    let var = (w.transpose() * &fit.covariance * &w)[(0, 0)];
    Ok((est, var.max(0.0).sqrt()))
}

/// Fits `spec` by `method`. MCMC-MLE starts from the MPLE when it exists,
/// otherwise from zero.
pub fn fit(
    spec: &ModelSpec,
    net: &BipartiteNetwork,
    attrs: &Attributes,
    method: Method,
    control: &FitControl,
    exec: Execution,
) -> Result<FitResult, EstimateError> {
    match method {
        Method::Mple => {
            let mut fit = mple(spec, net, attrs, exec)?;
            fit.control = control.clone();
            if control.loglik && fit.loglik.is_none() {
                let model = crate::terms::Model::new(spec, net, attrs)?;
                fit.loglik = Some(bridge_loglik(&model, &fit.theta, net, control, exec)?);
            }
            Ok(fit)
        }
        Method::McmcMle => mcmcmle(spec, net, attrs, None, control, exec),
    }
}

/// Deterministic child seed for purpose `tag`, item `index`.
pub fn derive_seed(seed: u64, tag: u32, index: u32) -> u64 {
    chain_rng(seed, ((tag as u64) << 32) | index as u64).next_u64()
}

pub(crate) mod tags {
    pub const ANCHOR: u32 = 1;
    pub const BRIDGE: u32 = 2;
    pub const PROFILE_ALPHA: u32 = 3;
    pub const PROFILE_BETA: u32 = 4;
}
