//! Geyer–Thompson Monte-Carlo maximum likelihood.
//!
//! Networks simulated at an anchor `θ0` give the importance-sampling
//! estimate
//! `ℓ(θ) − ℓ(θ0) ≈ (θ−θ0)·s_obs − log mean_m exp((θ−θ0)·s_m)`,
//! which is concave and maximised by Newton's method. The maximiser only
//! exists when `s_obs` lies inside the convex hull of the draws, so each
//! anchor aims at `ξ = s̄ + γ(s_obs − s̄)` with the largest `γ ∈ {1, ½, ¼, …}`
//! whose slightly inflated version is inside the hull, then re-anchors.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{derive_seed, mple, tags, FitControl, FitResult, LogLik, McmcDiagnostics, Method};
use crate::attrs::Attributes;
use crate::error::{EstimateError, ModelError};
use crate::graph::BipartiteNetwork;
use crate::hull::in_convex_hull;
use crate::linalg::{effective_sample_size, inverse_spd, solve_spd, weighted_moments};
use crate::parallel::{map_range, Execution};
use crate::sampler::{dot, simulate, SamplerControl, StatSample};
use crate::terms::{Model, ModelSpec};

/// Hull inflation for the Hummel step test.
const HULL_MARGIN: f64 = 1.05;
const MIN_GAMMA: f64 = 1.0 / 1024.0;
/// Stop re-anchoring once the observed statistics are this compatible with
/// the anchor's sample mean (Hotelling-type p-value).
const STOP_P: f64 = 0.5;
/// A statistic is flagged when one value holds this share of the draws.
const DEGENERATE_SHARE: f64 = 0.99;

/// Sample collapsed to distinct statistic vectors with multiplicities.
struct Cloud {
    dim: usize,
    points: Vec<f64>,
    counts: Vec<f64>,
}

impl Cloud {
    fn new(sample: &StatSample) -> Self {
        let dim = sample.dim();
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut cloud = Cloud { dim, points: Vec::new(), counts: Vec::new() };
        for r in 0..sample.len() {
            let row = sample.row(r);
            let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
            let slot = *index.entry(key).or_insert_with(|| {
                cloud.points.extend_from_slice(row);
                cloud.counts.push(0.0);
                cloud.counts.len() - 1
            });
            cloud.counts[slot] += 1.0;
        }
        cloud
    }

    fn len(&self) -> usize {
        self.counts.len()
    }

    fn point(&self, r: usize) -> &[f64] {
        crate::linalg::row(&self.points, self.dim, r)
    }

    /// Normalised importance weights for moving from the anchor by `delta`,
    /// and `log mean exp(delta·(s − ξ))`.
    fn tilt(&self, delta: &[f64], xi: &[f64]) -> (Vec<f64>, f64) {
        let logs: Vec<f64> = (0..self.len())
            .map(|r| {
                let z: f64 = self.point(r).iter().zip(xi).zip(delta).map(|((s, x), d)| (s - x) * d).sum();
                self.counts[r].ln() + z
            })
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();
        let n: f64 = self.counts.iter().sum();
        (w.iter().map(|x| x / total).collect(), max + total.ln() - n.ln())
    }
}

/// Maximises the importance-sampling log-likelihood ratio toward target
/// `xi`; returns `θ − θ0`.
fn maximise(cloud: &Cloud, xi: &[f64], names: &[String]) -> Result<Vec<f64>, EstimateError> {
    let p = cloud.dim;
    let mut delta = vec![0.0; p];
    let (mut w, mut lme) = cloud.tilt(&delta, xi);
    for _ in 0..200 {
        let (mean, cov) = weighted_moments(&cloud.points, p, Some(&w));
        let grad = DVector::from_iterator(p, (0..p).map(|j| xi[j] - mean[j]));
        let step = solve_spd(&cov, &grad).ok_or_else(|| EstimateError::Singular(names.to_vec()))?;
        let decrement = grad.dot(&step);
        if decrement.is_nan() || decrement <= 1e-20 {
            return Ok(delta);
        }
        let mut scale = 1.0;
        loop {
            let cand: Vec<f64> = delta.iter().zip(step.iter()).map(|(d, s)| d + scale * s).collect();
            let (cw, clme) = cloud.tilt(&cand, xi);
            // The objective is −log mean exp(δ·(s−ξ)).
            if clme <= lme + 1e-14 || scale < 1e-12 {
                delta = cand;
                (w, lme) = (cw, clme);
                break;
            }
            scale *= 0.5;
        }
    }
    Ok(delta)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Names of statistics where one value dominates the sample.
fn near_constant(sample: &StatSample) -> Vec<usize> {
    (0..sample.dim())
        .filter(|&j| {
            let mut counts: HashMap<u64, usize> = HashMap::new();
            for r in 0..sample.len() {
                *counts.entry(sample.row(r)[j].to_bits()).or_default() += 1;
            }
            let top = counts.values().copied().max().unwrap_or(0);
            top as f64 >= DEGENERATE_SHARE * sample.len() as f64
        })
        .collect()
}

fn anchor_control(control: &FitControl, anchor: usize) -> SamplerControl {
    let mut sc = control.sampler.clone();
    sc.seed = derive_seed(control.sampler.seed, tags::ANCHOR, anchor as u32);
    sc
}

/// Monte-Carlo MLE starting from `theta0` (default: the MPLE, or zero if
/// the MPLE does not exist). The log-likelihood is always estimated.
pub fn mcmcmle(
    spec: &ModelSpec,
    net: &BipartiteNetwork,
    attrs: &Attributes,
    theta0: Option<&[f64]>,
    control: &FitControl,
    exec: Execution,
) -> Result<FitResult, EstimateError> {
    spec.validate(false)?;
    let model = Model::new(spec, net, attrs)?;
    let p = model.dim();
    let names = model.names().to_vec();
    let s_obs = model.eval(net);
    let mut warnings = Vec::new();

    let mut theta = match theta0 {
        Some(t) => {
            if t.len() != p {
                return Err(ModelError::Dimension { got: t.len(), expected: p }.into());
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::BadArgument { term: "theta0".into(), message: "not finite".into() }.into());
            }
            t.to_vec()
        }
        None => match mple(spec, net, attrs, exec) {
            Ok(f) => f.theta,
            Err(e) => {
                warnings.push(format!("MPLE unavailable ({e}); starting from zero"));
                vec![0.0; p]
            }
        },
    };

    let mut gammas = Vec::new();
    let mut step_norms = Vec::new();
    let mut audit_error: f64 = 0.0;
    let mut last: Option<(StatSample, Vec<f64>, Vec<f64>)> = None;
    let mut converged = false;
    // Last anchor whose sample was usable; a degenerate anchor retreats
    // halfway toward it.
    let mut sound = vec![0.0; p];
    let mut stuck: Vec<String> = Vec::new();
    for anchor in 0..control.max_anchors.max(1) {
        let sample = simulate(&model, &theta, net, &anchor_control(control, anchor), exec)?;
        audit_error = audit_error.max(sample.audit_error);
        let (mean, cov) = weighted_moments(&sample.rows, p, None);
        stuck = (0..p)
            .filter(|&j| cov[(j, j)] <= 1e-12 * (1.0 + mean[j] * mean[j]))
            .map(|j| names[j].clone())
            .collect();
        let cloud = Cloud::new(&sample);
        let toward = |g: f64| -> Vec<f64> { (0..p).map(|j| mean[j] + g * (s_obs[j] - mean[j])).collect() };
        let mut gamma = 1.0;
        if stuck.is_empty() {
            while gamma >= MIN_GAMMA && !in_convex_hull(&cloud.points, p, &toward(HULL_MARGIN * gamma)) {
                gamma *= 0.5;
            }
        }
        if !stuck.is_empty() || gamma < MIN_GAMMA {
            let back: Vec<f64> = theta.iter().zip(&sound).map(|(t, s)| 0.5 * (t + s)).collect();
            warnings.push(format!(
                "anchor {} unusable ({}); retreating toward the last usable anchor",
                anchor + 1,
                if stuck.is_empty() { "no Hummel step inside the sample hull".to_string() } else { format!("{stuck:?} constant") }
            ));
            gammas.push(0.0);
            step_norms.push(norm(&back.iter().zip(&theta).map(|(a, b)| a - b).collect::<Vec<_>>()));
            theta = back;
            continue;
        }
        sound = theta.clone();
        let xi = toward(gamma);
        let delta = maximise(&cloud, &xi, &names)?;
        let step = norm(&delta);
        gammas.push(gamma);
        step_norms.push(step);

        let full = gamma == 1.0;
        let stop = full && (step <= control.step_tol || observed_compatible(&sample, &s_obs, &mean, &cov));
        let next: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + d).collect();
        last = Some((sample, theta.clone(), next.clone()));
        theta = next;
        if stop {
            converged = true;
            break;
        }
    }
    let Some((sample, anchor_theta, theta_hat)) = last.filter(|_| gammas.last().is_some_and(|&g| g > 0.0)) else {
        return Err(if stuck.is_empty() {
            EstimateError::HullViolation { anchors: gammas.len() }
        } else {
            EstimateError::Degenerate(stuck)
        });
    };
    if !converged {
        if gammas.last().is_some_and(|&g| g < 1.0) {
            return Err(EstimateError::HullViolation { anchors: gammas.len() });
        }
        warnings.push(format!(
            "stopped after {} anchors without meeting the step tolerance (last step norm {:.3e})",
            gammas.len(),
            step_norms.last().copied().unwrap_or(f64::NAN)
        ));
    }

    // Information at θ̂ from the reweighted final sample.
    let cloud = Cloud::new(&sample);
    let delta: Vec<f64> = theta_hat.iter().zip(&anchor_theta).map(|(a, b)| a - b).collect();
    let (w, _) = cloud.tilt(&delta, &s_obs);
    let (_, info) = weighted_moments(&cloud.points, p, Some(&w));
    let degenerate_idx = near_constant(&sample);
    let degenerate: Vec<String> = degenerate_idx.iter().map(|&j| names[j].clone()).collect();
    if !degenerate.is_empty() {
        warnings.push(format!("possible degeneracy: statistics {degenerate:?} nearly constant across draws"));
    }
    let covariance = inverse_spd(&info).ok_or_else(|| {
        if degenerate.is_empty() {
            EstimateError::Singular(names.clone())
        } else {
            EstimateError::Degenerate(degenerate.clone())
        }
    })?;
    let ess: Vec<f64> = (0..p).map(|j| effective_sample_size(&sample.column(j))).collect();
    let ess_min = ess.iter().cloned().fold(f64::INFINITY, f64::min).max(1.0);
    let mc_se: Vec<f64> = (0..p).map(|j| (covariance[(j, j)] / ess_min).max(0.0).sqrt()).collect();

    let loglik = bridge_loglik(&model, &theta_hat, net, control, exec)?;
    Ok(FitResult {
        method: Method::McmcMle,
        formula: crate::formula::format(spec),
        names,
        theta: theta_hat,
        covariance,
        loglik: Some(loglik),
        pseudo_loglik: None,
        mc_se: Some(mc_se),
        diagnostics: Some(McmcDiagnostics {
            acceptance_rate: sample.acceptance_rate(),
            ess,
            anchors: gammas.len(),
            gammas,
            step_norms,
            audit_error,
        }),
        degenerate,
        warnings,
        iterations: 0,
        control: control.clone(),
    })
}

/// Whether `s_obs` is within Monte-Carlo error of the sample mean, judged
/// by a chi-square test on the ESS-scaled covariance.
fn observed_compatible(sample: &StatSample, s_obs: &[f64], mean: &DVector<f64>, cov: &DMatrix<f64>) -> bool {
    let p = s_obs.len();
    let ess = (0..p)
        .map(|j| effective_sample_size(&sample.column(j)))
        .fold(f64::INFINITY, f64::min)
        .max(1.0);
    let d = DVector::from_iterator(p, (0..p).map(|j| s_obs[j] - mean[j]));
    let Some(x) = solve_spd(&(cov / ess), &d) else { return false };
    let t2 = d.dot(&x);
    let chi = ChiSquared::new(p as f64).expect("positive degrees of freedom");
    1.0 - chi.cdf(t2) > STOP_P
}

/// `log mean exp(c·u)` over `u`, shifted for stability.
fn log_mean_exp(u: &[f64], c: f64) -> f64 {
    let max = u.iter().map(|x| c * x).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = u.iter().map(|x| (c * x - max).exp()).sum();
    max + (s / u.len() as f64).ln()
}

const BATCHES: usize = 25;

/// Log-likelihood at `theta` relative to the closed form at zero
/// (`−D log 2`), via bridge sampling along the segment `t·θ`, `t ∈ [0,1]`.
/// Each step's log-ratio of normalising constants is estimated from draws
/// at its midpoint; its variance comes from batch means.
pub fn bridge_loglik(
    model: &Model,
    theta: &[f64],
    net: &BipartiteNetwork,
    control: &FitControl,
    exec: Execution,
) -> Result<LogLik, EstimateError> {
    let s_obs = model.eval(net);
    let log_kappa0 = net.dyad_count() as f64 * std::f64::consts::LN_2;
    let obs_term = dot(theta, &s_obs);
    if theta.iter().all(|t| *t == 0.0) {
        return Ok(LogLik { value: -log_kappa0, sd: 0.0 });
    }
    let b = control.bridges.max(1);
    let draws = control.bridge_draws.unwrap_or(control.sampler.sample_size);
    let half = 0.5 / b as f64;
    let steps = map_range(exec, b, |j| -> Result<(f64, f64), ModelError> {
        let t = (j as f64 + 0.5) / b as f64;
        let mid: Vec<f64> = theta.iter().map(|x| t * x).collect();
        let mut sc = control.sampler.clone();
        sc.sample_size = draws;
        sc.seed = derive_seed(control.sampler.seed, tags::BRIDGE, j as u32);
        let sample = simulate(model, &mid, net, &sc, Execution::Sequential)?;
        let u: Vec<f64> = (0..sample.len()).map(|r| dot(theta, sample.row(r))).collect();
        let ratio = |u: &[f64]| log_mean_exp(u, half) - log_mean_exp(u, -half);
        let est = ratio(&u);
        let var = if u.len() >= 2 * BATCHES {
            let size = u.len() / BATCHES;
            let rs: Vec<f64> = (0..BATCHES).map(|q| ratio(&u[q * size..(q + 1) * size])).collect();
            let m = rs.iter().sum::<f64>() / BATCHES as f64;
            rs.iter().map(|r| (r - m).powi(2)).sum::<f64>() / ((BATCHES - 1) * BATCHES) as f64
        } else {
            // Too short to batch: delta method assuming independent draws.
            let a: Vec<f64> = u.iter().map(|x| (half * x).exp()).collect();
            let c: Vec<f64> = u.iter().map(|x| (-half * x).exp()).collect();
            let n = u.len() as f64;
            let ma = a.iter().sum::<f64>() / n;
            let mc = c.iter().sum::<f64>() / n;
            let g: Vec<f64> = a.iter().zip(&c).map(|(x, y)| x / ma - y / mc).collect();
            let gm = g.iter().sum::<f64>() / n;
            g.iter().map(|v| (v - gm).powi(2)).sum::<f64>() / (n * (n - 1.0).max(1.0))
        };
        Ok((est, var))
    });
    let mut log_kappa = log_kappa0;
    let mut var = 0.0;
    for s in steps {
        let (e, v) = s?;
        log_kappa += e;
        var += v;
    }
    Ok(LogLik { value: obs_term - log_kappa, sd: var.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::ModelTerm;

    fn fig2() -> BipartiteNetwork {
        BipartiteNetwork::from_edge_list(3, 2, &[(1, 4), (2, 4), (3, 4), (1, 5), (2, 5)]).unwrap()
    }

    fn quick(net: &BipartiteNetwork) -> FitControl {
        let mut c = FitControl::for_network(net).with_seed(11);
        c.sampler.burn_in = 500;
        c.sampler.interval = 10;
        c.sampler.sample_size = 20_000;
        c.bridges = 8;
        c
    }

    #[test]
    fn edges_only_matches_logit() {
        let net = fig2();
        let spec = ModelSpec::new(vec![ModelTerm::edges()]);
        let c = quick(&net);
        let f = mcmcmle(&spec, &net, &Attributes::empty_for(&net), None, &c, Execution::Sequential).unwrap();
        let se = f.mc_se.as_ref().unwrap()[0];
        assert!((f.theta[0] - 5f64.ln()).abs() < 4.0 * se + 0.02, "{} vs {}", f.theta[0], 5f64.ln());
        let exact = 5.0 * (5.0f64 / 6.0).ln() + (1.0f64 / 6.0).ln();
        let ll = f.loglik.unwrap();
        assert!((ll.value - exact).abs() < 4.0 * ll.sd + 1e-3, "{ll:?} vs {exact}");
        assert!(f.covariance[(0, 0)] > 0.0);
    }

    #[test]
    fn bridge_is_exact_at_zero() {
        let net = fig2();
        let spec = ModelSpec::new(vec![ModelTerm::edges()]);
        let model = Model::new(&spec, &net, &Attributes::empty_for(&net)).unwrap();
        let ll = bridge_loglik(&model, &[0.0], &net, &quick(&net), Execution::Sequential).unwrap();
        assert_eq!(ll, LogLik { value: -6.0 * std::f64::consts::LN_2, sd: 0.0 });
    }

    #[test]
    fn deterministic_given_seed() {
        let net = fig2();
        let spec = ModelSpec::new(vec![ModelTerm::edges()]);
        let mut c = quick(&net);
        c.sampler.sample_size = 2000;
        let a = mcmcmle(&spec, &net, &Attributes::empty_for(&net), None, &c, Execution::Sequential).unwrap();
        let b = mcmcmle(&spec, &net, &Attributes::empty_for(&net), None, &c, Execution::Parallel).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.loglik, b.loglik);
    }
}
