//! Exact computations by exhaustive enumeration of all `2^(n1*n2)`
//! networks. Only feasible for tiny networks (at most 22 dyads), where it
//! provides ground truth for the sampler and the estimators.
//!
//! States are visited in Gray-code order: each step toggles one dyad and
//! updates the statistics with that dyad's change statistic. The state
//! space is split into blocks by the highest dyads, one block per worker.
//! Distinct statistic vectors are kept with their multiplicities, which is
//! all `κ(θ)`, moments and the MLE need.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::attrs::Attributes;
use crate::error::OracleError;
use crate::graph::BipartiteNetwork;
use crate::parallel::{map_range, Execution};
use crate::terms::{Model, ModelSpec};

/// Hard limit on the number of dyads.
pub const MAX_DYADS: usize = 22;

/// Distinct statistic vectors of all networks of a given shape.
#[derive(Clone, Debug)]
pub struct ExactModel {
    model: Model,
    /// Row-major distinct statistic vectors.
    support: Vec<f64>,
    /// log of each vector's multiplicity.
    log_mult: Vec<f64>,
    /// Largest gap between incremental and full statistics seen at block ends.
    pub enumeration_audit: f64,
}

/// Exact per-state probabilities and dyad marginals.
#[derive(Clone, Debug)]
pub struct DyadDistribution {
    /// Indexed by state; bit `d` of the index is dyad `d` in row-major order
    /// (`BipartiteNetwork::dyad_at`).
    pub probs: Vec<f64>,
    /// Probability that each dyad carries an edge.
    pub marginals: Vec<f64>,
}

fn key(v: &[f64]) -> Vec<i64> {
    v.iter().map(|x| (x * 1e8).round() as i64).collect()
}

/// Number of high dyads used to split the enumeration into blocks.
fn block_bits(dyads: usize) -> usize {
    dyads.min(6)
}

/// Network whose edge set is the bit pattern `state`.
pub fn network_from_state(n1: usize, n2: usize, state: u64) -> BipartiteNetwork {
    let mut net = BipartiteNetwork::new(n1, n2);
    for d in 0..n1 * n2 {
        if state >> d & 1 == 1 {
            let (i, k) = net.dyad_at(d);
            net.toggle_unchecked(i, k);
        }
    }
    net
}

/// Bit pattern of a network's edges.
pub fn state_of(net: &BipartiteNetwork) -> u64 {
    let mut s = 0u64;
    for d in 0..net.dyad_count() {
        let (i, k) = net.dyad_at(d);
        if net.contains(i, k) {
            s |= 1 << d;
        }
    }
    s
}

/// Visits every state of one block in Gray-code order, calling `visit`
/// with the state bits and statistics. Returns the end-of-block audit gap.
fn walk_block(
    model: &Model,
    n1: usize,
    n2: usize,
    block: u64,
    low_bits: usize,
    mut visit: impl FnMut(u64, &[f64]),
) -> f64 {
    let mut state = block << low_bits;
    let mut net = network_from_state(n1, n2, state);
    let mut stats = model.eval(&net);
    let mut delta = vec![0.0; model.dim()];
    visit(state, &stats);
    for t in 1u64..(1u64 << low_bits) {
        let d = t.trailing_zeros() as usize;
        let (i, k) = net.dyad_at(d);
        model.change_into(&net, i, k, &mut delta);
        let sign = if net.contains(i, k) { -1.0 } else { 1.0 };
        net.toggle_unchecked(i, k);
        state ^= 1 << d;
        for (s, x) in stats.iter_mut().zip(&delta) {
            *s += sign * x;
        }
        visit(state, &stats);
    }
    model
        .eval(&net)
        .iter()
        .zip(&stats)
        .map(|(f, s)| (f - s).abs())
        .fold(0.0, f64::max)
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl ExactModel {
    /// Enumerates all networks with `n1 x n2` nodes.
    pub fn new(
        spec: &ModelSpec,
        attrs: &Attributes,
        n1: usize,
        n2: usize,
        exec: Execution,
    ) -> Result<Self, OracleError> {
        Self::with_cap(spec, attrs, n1, n2, MAX_DYADS, exec)
    }

    /// As [`ExactModel::new`] with a lower dyad cap.
    pub fn with_cap(
        spec: &ModelSpec,
        attrs: &Attributes,
        n1: usize,
        n2: usize,
        cap: usize,
        exec: Execution,
    ) -> Result<Self, OracleError> {
        let cap = cap.min(MAX_DYADS);
        let dyads = n1 * n2;
        if dyads > cap {
            return Err(OracleError::TooLarge { dyads, cap });
        }
        let model = Model::with_dims(spec, n1, n2, attrs)?;
        let high = block_bits(dyads);
        let low = dyads - high;
        let blocks = map_range(exec, 1 << high, |b| {
            let mut hist: HashMap<Vec<i64>, (Vec<f64>, u64)> = HashMap::new();
            let audit = walk_block(&model, n1, n2, b as u64, low, |_, s| {
                hist.entry(key(s)).or_insert_with(|| (s.to_vec(), 0)).1 += 1;
            });
            (hist, audit)
        });
        let mut merged: HashMap<Vec<i64>, (Vec<f64>, u64)> = HashMap::new();
        let mut audit = 0.0f64;
        for (hist, a) in blocks {
            audit = audit.max(a);
            for (k, (v, c)) in hist {
                merged.entry(k).or_insert((v, 0)).1 += c;
            }
        }
        let mut entries: Vec<_> = merged.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut support = Vec::new();
        let mut log_mult = Vec::new();
        for (_, (v, c)) in entries {
            support.extend(v);
            log_mult.push((c as f64).ln());
        }
        Ok(ExactModel { model, support, log_mult, enumeration_audit: audit })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// Number of distinct statistic vectors.
    pub fn support_size(&self) -> usize {
        self.log_mult.len()
    }

    fn row(&self, r: usize) -> &[f64] {
        crate::linalg::row(&self.support, self.dim(), r)
    }

    fn log_weights(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.support_size())
            .map(|r| self.log_mult[r] + crate::sampler::dot(theta, self.row(r)))
            .collect()
    }

    fn check(&self, theta: &[f64]) -> Result<(), OracleError> {
        if theta.len() != self.dim() {
            return Err(crate::error::ModelError::Dimension { got: theta.len(), expected: self.dim() }.into());
        }
        Ok(())
    }

    /// `log κ(θ) = log Σ_y exp(θ·s(y))`.
    pub fn log_kappa(&self, theta: &[f64]) -> Result<f64, OracleError> {
        self.check(theta)?;
        let lw = self.log_weights(theta);
        Ok(log_sum_exp(lw.iter().copied()))
    }

    /// `θ·s_obs − log κ(θ)`.
    pub fn loglik(&self, theta: &[f64], s_obs: &[f64]) -> Result<f64, OracleError> {
        Ok(crate::sampler::dot(theta, s_obs) - self.log_kappa(theta)?)
    }

    /// Log-likelihood of an observed network.
    pub fn loglik_of(&self, theta: &[f64], y_obs: &BipartiteNetwork) -> Result<f64, OracleError> {
        let s = self.model.try_eval(y_obs)?;
        self.loglik(theta, &s)
    }

    /// Mean and covariance of `s(Y)` under `θ`.
    pub fn moments(&self, theta: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>), OracleError> {
        self.check(theta)?;
        let lw = self.log_weights(theta);
        let lk = log_sum_exp(lw.iter().copied());
        let w: Vec<f64> = lw.iter().map(|l| (l - lk).exp()).collect();
        Ok(crate::linalg::weighted_moments(&self.support, self.dim(), Some(&w)))
    }

    /// Maximum likelihood estimate for observed statistics `s_obs`, by
    /// damped Newton iterations on the exact (concave) log-likelihood.
    pub fn mle(&self, s_obs: &[f64]) -> Result<Vec<f64>, OracleError> {
        self.check(s_obs)?;
        let p = self.dim();
        if let Err(direction) = crate::hull::interior_or_axis(&self.support, p, s_obs, 1e-4) {
            return Err(OracleError::NonFiniteMle { direction });
        }
        let obs = DVector::from_column_slice(s_obs);
        let mut theta = DVector::zeros(p);
        let mut ll = self.loglik(theta.as_slice(), s_obs)?;
        for _ in 0..500 {
            let (mean, cov) = self.moments(theta.as_slice())?;
            let grad = &obs - &mean;
            if grad.norm() <= 1e-10 {
                return Ok(theta.as_slice().to_vec());
            }
            let step = match crate::linalg::solve_spd(&cov, &grad) {
                Some(s) => s,
                None => {
                    // Rank-deficient information: the statistics are
                    // collinear on this support; fall back to gradient ascent.
                    grad.clone()
                }
            };
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..60 {
                let cand = &theta + &step * t;
                let cll = self.loglik(cand.as_slice(), s_obs)?;
                if cll >= ll - 1e-14 * ll.abs().max(1.0) {
                    theta = cand;
                    ll = cll;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if theta.norm() > 1e3 {
                return Err(OracleError::NonFiniteMle { direction: normalize(theta.as_slice()) });
            }
            if !improved {
                return Err(OracleError::NonConvergence(grad.norm()));
            }
        }
        let (mean, _) = self.moments(theta.as_slice())?;
        let g = (&obs - &mean).norm();
        if g <= 1e-8 {
            Ok(theta.as_slice().to_vec())
        } else if theta.norm() > 50.0 {
            Err(OracleError::NonFiniteMle { direction: normalize(theta.as_slice()) })
        } else {
            Err(OracleError::NonConvergence(g))
        }
    }

    /// Probability of every network state and each dyad's edge probability.
    pub fn dyad_distribution(&self, theta: &[f64], exec: Execution) -> Result<DyadDistribution, OracleError> {
        let lk = self.log_kappa(theta)?;
        let (n1, n2) = (self.model.n1(), self.model.n2());
        let dyads = n1 * n2;
        let high = block_bits(dyads);
        let low = dyads - high;
        let blocks = map_range(exec, 1 << high, |b| {
            let mut probs = vec![0.0; 1 << low];
            walk_block(&self.model, n1, n2, b as u64, low, |state, s| {
                let local = (state & ((1u64 << low) - 1)) as usize;
                probs[local] = (crate::sampler::dot(theta, s) - lk).exp();
            });
            probs
        });
        let probs: Vec<f64> = blocks.into_iter().flatten().collect();
        let mut marginals = vec![0.0; dyads];
        for (state, p) in probs.iter().enumerate() {
            for (d, m) in marginals.iter_mut().enumerate() {
                if state >> d & 1 == 1 {
                    *m += p;
                }
            }
        }
        Ok(DyadDistribution { probs, marginals })
    }
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / n).collect()
    }
}

/// `log κ(θ)` for `spec` on networks shaped like `net`.
pub fn exact_kappa(
    spec: &ModelSpec,
    attrs: &Attributes,
    net: &BipartiteNetwork,
    theta: &[f64],
) -> Result<f64, OracleError> {
    ExactModel::new(spec, attrs, net.n1(), net.n2(), Execution::default())?.log_kappa(theta)
}

/// Exact log-likelihood of `y_obs`.
pub fn exact_loglik(
    spec: &ModelSpec,
    attrs: &Attributes,
    y_obs: &BipartiteNetwork,
    theta: &[f64],
) -> Result<f64, OracleError> {
    ExactModel::new(spec, attrs, y_obs.n1(), y_obs.n2(), Execution::default())?.loglik_of(theta, y_obs)
}

/// Exact MLE for `y_obs`.
pub fn exact_mle(
    spec: &ModelSpec,
    attrs: &Attributes,
    y_obs: &BipartiteNetwork,
) -> Result<Vec<f64>, OracleError> {
    let em = ExactModel::new(spec, attrs, y_obs.n1(), y_obs.n2(), Execution::default())?;
    let s = em.model().try_eval(y_obs)?;
    em.mle(&s)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::graph::Mode;
    use crate::terms::{Exponent, ModelTerm};

    fn edges() -> ModelSpec {
        ModelSpec::new(vec![ModelTerm::edges()])
    }

    fn empty_attrs(n1: usize, n2: usize) -> Attributes {
        Attributes::empty_for(&BipartiteNetwork::new(n1, n2))
    }

    #[test]
    fn kappa_edges_only() {
        let em = ExactModel::new(&edges(), &empty_attrs(2, 2), 2, 2, Execution::Sequential).unwrap();
        assert_abs_diff_eq!(em.log_kappa(&[0.0]).unwrap(), 16f64.ln(), epsilon = 1e-12);
        for t in [-1.3, 0.4, 2.0] {
            assert_abs_diff_eq!(
                em.log_kappa(&[t]).unwrap(),
                4.0 * (1.0 + f64::exp(t)).ln(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn kappa_two_by_one_nodematch() {
        let net = BipartiteNetwork::new(2, 1);
        let mut attrs = Attributes::empty_for(&net);
        attrs.one.add_categorical("c", &["a", "a"]).unwrap();
        let spec = ModelSpec::new(vec![
            ModelTerm::edges(),
            ModelTerm::nodematch(Mode::One, "c", Exponent::Alpha(1.0)),
        ]);
        let em = ExactModel::new(&spec, &attrs, 2, 1, Execution::Sequential).unwrap();
        for t in [-2.0, 0.0, 0.7] {
            assert_abs_diff_eq!(em.log_kappa(&[0.0, t]).unwrap(), (3.0 + f64::exp(t)).ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn size_guard() {
        let r = ExactModel::new(&edges(), &empty_attrs(5, 5), 5, 5, Execution::Sequential);
        assert!(matches!(r, Err(OracleError::TooLarge { dyads: 25, cap: 22 })));
        let r = ExactModel::with_cap(&edges(), &empty_attrs(3, 3), 3, 3, 8, Execution::Sequential);
        assert!(matches!(r, Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn edges_mle_is_logit_density() {
        let net = BipartiteNetwork::from_edge_list(3, 2, &[(1, 4), (2, 4), (3, 4), (1, 5), (2, 5)]).unwrap();
        let attrs = Attributes::empty_for(&net);
        let th = exact_mle(&edges(), &attrs, &net).unwrap();
        assert_abs_diff_eq!(th[0], 5f64.ln(), epsilon = 1e-9);
        let empty = BipartiteNetwork::new(3, 2);
        assert!(matches!(exact_mle(&edges(), &attrs, &empty), Err(OracleError::NonFiniteMle { .. })));
        let full = BipartiteNetwork::from_edge_list(
            3,
            2,
            &[(1, 4), (2, 4), (3, 4), (1, 5), (2, 5), (3, 5)],
        )
        .unwrap();
        assert!(matches!(exact_mle(&edges(), &attrs, &full), Err(OracleError::NonFiniteMle { .. })));
    }

    #[test]
    fn distribution_normalises_and_matches_independence() {
        let net = BipartiteNetwork::new(2, 2);
        let mut attrs = Attributes::empty_for(&net);
        attrs.one.add_categorical("g", &["f", "m"]).unwrap();
        attrs.two.add_categorical("g", &["f", "f"]).unwrap();
        // Dyadic model: edges + b1factor. Marginal of a dyad at a level-m
        // mode-1 node is logistic(θ1 + θ2).
        let spec = ModelSpec::new(vec![
            ModelTerm::edges(),
            ModelTerm::with_attr(crate::terms::TermKind::B1Factor, "g"),
        ]);
        let em = ExactModel::new(&spec, &attrs, 2, 2, Execution::Sequential).unwrap();
        let th = [-0.4, 1.1];
        let dist = em.dyad_distribution(&th, Execution::Sequential).unwrap();
        assert_abs_diff_eq!(dist.probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let logistic = |x: f64| x.exp() / (1.0 + x.exp());
        // Dyads 0,1 belong to node 1 (level f); 2,3 to node 2 (level m).
        assert_abs_diff_eq!(dist.marginals[0], logistic(-0.4), epsilon = 1e-12);
        assert_abs_diff_eq!(dist.marginals[3], logistic(0.7), epsilon = 1e-12);

        let flat = em.dyad_distribution(&[0.0, 0.0], Execution::Parallel).unwrap();
        assert!(flat.probs.iter().all(|p| (p - 1.0 / 16.0).abs() < 1e-12));
    }

    #[test]
    fn gray_walk_visits_every_state_once() {
        let model = Model::with_dims(&edges(), 2, 3, &empty_attrs(2, 3)).unwrap();
        let mut seen = vec![0u32; 64];
        for b in 0..4u64 {
            walk_block(&model, 2, 3, b, 4, |state, s| {
                seen[state as usize] += 1;
                assert_eq!(s[0], state.count_ones() as f64);
            });
        }
        assert!(seen.iter().all(|&c| c == 1));
    }
}
