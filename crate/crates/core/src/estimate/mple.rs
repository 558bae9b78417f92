//! Maximum pseudo-likelihood: logistic regression of dyad states on their
//! change statistics.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::{FitControl, FitResult, LogLik, Method};
use crate::attrs::Attributes;
use crate::error::EstimateError;
use crate::graph::BipartiteNetwork;
use crate::linalg::{inverse_spd, solve_spd};
use crate::parallel::{map_range, Execution};
use crate::terms::{Model, ModelSpec};

const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 200;
const DIVERGED: f64 = 1e3;

/// Distinct change-statistic rows with the number of absent (`w0`) and
/// present (`w1`) dyads having that row.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadTable {
    pub dim: usize,
    pub rows: Vec<f64>,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
}

impl DyadTable {
    pub fn len(&self) -> usize {
        self.w0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w0.is_empty()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        crate::linalg::row(&self.rows, self.dim, r)
    }
}

/// Change statistics of every dyad, collapsed to distinct rows.
pub fn dyad_table(model: &Model, net: &BipartiteNetwork, exec: Execution) -> DyadTable {
    let dim = model.dim();
    let n1 = net.n1();
    // One block per mode-1 node keeps the parallel grain coarse.
    let blocks = map_range(exec, n1, |r| {
        let i = r + 1;
        let mut out = Vec::with_capacity(net.n2());
        let mut buf = vec![0.0; dim];
        for k in net.nodes(crate::graph::Mode::Two) {
            model.change_into(net, i, k, &mut buf);
            out.push((buf.clone(), net.contains(i, k)));
        }
        out
    });
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut table = DyadTable { dim, rows: Vec::new(), w0: Vec::new(), w1: Vec::new() };
    for (row, present) in blocks.into_iter().flatten() {
        let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        let r = *index.entry(key).or_insert_with(|| {
            table.rows.extend_from_slice(&row);
            table.w0.push(0.0);
            table.w1.push(0.0);
            table.w0.len() - 1
        });
        if present {
            table.w1[r] += 1.0;
        } else {
            table.w0[r] += 1.0;
        }
    }
    table
}

fn log1pexp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log pseudo-likelihood, gradient and information at `theta`.
fn evaluate(t: &DyadTable, theta: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let p = t.dim;
    let mut ll = 0.0;
    let mut grad = DVector::zeros(p);
    let mut info = DMatrix::zeros(p, p);
    for r in 0..t.len() {
        let x = t.row(r);
        let eta: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
        let (w0, w1) = (t.w0[r], t.w1[r]);
        ll += w1 * eta - (w0 + w1) * log1pexp(eta);
        let mu = sigmoid(eta);
        let resid = w1 - (w0 + w1) * mu;
        let v = (w0 + w1) * mu * (1.0 - mu);
        for a in 0..p {
            grad[a] += resid * x[a];
            let va = v * x[a];
            for b in a..p {
                info[(a, b)] += va * x[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            info[(a, b)] = info[(b, a)];
        }
    }
    (ll, grad, info)
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / n).collect()
    }
}

/// Maximises the logistic log-likelihood of `table`. Returns the estimate,
/// its inverse information, the maximum and the iteration count.
pub(crate) fn logistic_fit(
    table: &DyadTable,
    names: &[String],
) -> Result<(Vec<f64>, DMatrix<f64>, f64, usize), EstimateError> {
    let p = table.dim;
    let dead: Vec<String> = (0..p)
        .filter(|&j| (0..table.len()).all(|r| table.row(r)[j] == 0.0))
        .map(|j| names[j].clone())
        .collect();
    if !dead.is_empty() {
        return Err(EstimateError::Singular(dead));
    }
    let ones: f64 = table.w1.iter().sum();
    let zeros: f64 = table.w0.iter().sum();
    if ones == 0.0 || zeros == 0.0 {
        // Every dyad in one state: the likelihood increases without bound
        // along the mean change-statistic direction (or its negative).
        let sign = if ones == 0.0 { -1.0 } else { 1.0 };
        let mut mean = vec![0.0; p];
        for r in 0..table.len() {
            let w = table.w0[r] + table.w1[r];
            for (m, x) in mean.iter_mut().zip(table.row(r)) {
                *m += sign * w * x;
            }
        }
        return Err(EstimateError::Separation { direction: unit(&mean) });
    }

    let mut theta = vec![0.0; p];
    let (mut ll, mut grad, mut info) = evaluate(table, &theta);
    for iter in 0..MAX_ITER {
        if grad.norm() <= GRAD_TOL {
            // One more Newton step is nearly free and reaches machine precision.
            if let Some(step) = solve_spd(&info, &grad) {
                let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
                let (cll, cgrad, cinfo) = evaluate(table, &cand);
                if cll >= ll - 1e-9 * ll.abs().max(1.0) && cgrad.norm() < grad.norm() {
                    theta = cand;
                    (ll, info) = (cll, cinfo);
                }
            }
            let cov = inverse_spd(&info).ok_or_else(|| EstimateError::Singular(names.to_vec()))?;
            return Ok((theta, cov, ll, iter));
        }
        let theta_norm = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
        if theta_norm > DIVERGED {
            return Err(EstimateError::Separation { direction: unit(&theta) });
        }
        let step = match solve_spd(&info, &grad) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            // Information collapses as fitted probabilities reach 0 or 1.
            _ if theta_norm > 20.0 => return Err(EstimateError::Separation { direction: unit(&theta) }),
            _ => grad.clone(),
        };
        let mut scale = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + scale * s).collect();
            let (cll, cgrad, cinfo) = evaluate(table, &cand);
            if cll >= ll - 1e-12 * ll.abs().max(1.0) || scale < 1e-10 {
                theta = cand;
                (ll, grad, info) = (cll, cgrad, cinfo);
                break;
            }
            scale *= 0.5;
        }
    }
    let theta_norm = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
    if theta_norm > 20.0 {
        return Err(EstimateError::Separation { direction: unit(&theta) });
    }
    Err(EstimateError::NonConvergence { iterations: MAX_ITER, step_norm: grad.norm() })
}

/// Maximum pseudo-likelihood estimate. For dyadic-independent models this
/// is the exact MLE and the reported log-likelihood is exact.
pub fn mple(
    spec: &ModelSpec,
    net: &BipartiteNetwork,
    attrs: &Attributes,
    exec: Execution,
) -> Result<FitResult, EstimateError> {
    spec.validate(false)?;
    let model = Model::new(spec, net, attrs)?;
    let table = dyad_table(&model, net, exec);
    let (theta, covariance, ll, iterations) = logistic_fit(&table, model.names())?;
    let independent = spec.is_dyadic_independent();
    Ok(FitResult {
        method: Method::Mple,
        formula: crate::formula::format(spec),
        names: model.names().to_vec(),
        theta,
        covariance,
        loglik: independent.then_some(LogLik { value: ll, sd: 0.0 }),
        pseudo_loglik: Some(ll),
        mc_se: None,
        diagnostics: None,
        degenerate: Vec::new(),
        warnings: Vec::new(),
        iterations,
        control: FitControl::for_network(net),
    })
}
