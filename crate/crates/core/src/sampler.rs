//! Metropolis–Hastings simulation from `P(y) ∝ exp(θ·s(y))`.
//!
//! Each proposal toggles one dyad. The acceptance ratio only needs the
//! change statistic of that dyad, so the normalising constant never
//! appears. Statistics are tracked incrementally and audited against a full
//! recomputation at the end of every chain.
//!
//! Random numbers come from ChaCha8 seeded with `seed`; chain `c` uses
//! stream `c`, so chains are reproducible and independent of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::graph::BipartiteNetwork;
use crate::parallel::{map_range, Execution};
use crate::terms::Model;

/// Name of the generator, echoed in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), stream per chain";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Proposal {
    /// Every dyad equally likely.
    UniformDyad,
    /// Half the time a random edge, otherwise a random empty dyad.
    TieNoTie,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerControl {
    pub burn_in: u64,
    /// Proposals between retained draws.
    pub interval: u64,
    pub sample_size: usize,
    pub seed: u64,
    pub proposal: Proposal,
    /// Independent chains; the sample is split evenly between them.
    pub chains: usize,
}

impl SamplerControl {
    /// Defaults for a network with `dyads` dyads: 2^14 burn-in proposals per
    /// started thousand dyads, interval 1024, 1024 draws, tie/no-tie.
    pub fn for_dyads(dyads: usize) -> Self {
        SamplerControl {
            burn_in: 16_384 * dyads.div_ceil(1000).max(1) as u64,
            interval: 1024,
            sample_size: 1024,
            seed: 0,
            proposal: Proposal::TieNoTie,
            chains: 1,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| ModelError::BadArgument { term: "sampler control".into(), message: m.into() };
        if self.interval == 0 || self.sample_size == 0 || self.chains == 0 {
            return Err(bad("interval, sample size and chain count must be positive"));
        }
        if self.chains > self.sample_size {
            return Err(bad("more chains than retained draws"));
        }
        Ok(())
    }
}

/// Retained statistic draws, row-major `len() x dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct StatSample {
    pub names: Vec<String>,
    pub rows: Vec<f64>,
    pub final_network: Option<BipartiteNetwork>,
    pub proposed: u64,
    pub accepted: u64,
    /// Largest relative gap between tracked and recomputed statistics.
    pub audit_error: f64,
}

impl StatSample {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        if self.dim() == 0 {
            0
        } else {
            self.rows.len() / self.dim()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, r: usize) -> &[f64] {
        crate::linalg::row(&self.rows, self.dim(), r)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.len()).map(|r| self.rows[r * self.dim() + c]).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// CSV with a header of statistic names.
    pub fn to_csv(&self) -> String {
        let mut s = self.names.join(",");
        s.push('\n');
        for r in 0..self.len() {
            let line: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// Generator for chain `stream` under `seed`.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Conditional log-odds of an edge at `(i, k)` given the rest: `θ·δ(i,k)`.
pub fn cond_log_odds(
    model: &Model,
    net: &BipartiteNetwork,
    theta: &[f64],
    i: usize,
    k: usize,
) -> Result<f64, ModelError> {
    check_theta(model, theta)?;
    let delta = model.change(net, i, k)?;
    Ok(dot(theta, &delta))
}

fn check_theta(model: &Model, theta: &[f64]) -> Result<(), ModelError> {
    if theta.len() != model.dim() {
        return Err(ModelError::Dimension { got: theta.len(), expected: model.dim() });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Probability that tie/no-tie proposes a deletion with `edges` present.
#[inline]
fn p_delete(edges: usize, dyads: usize) -> f64 {
    if edges == 0 {
        0.0
    } else if edges == dyads {
        1.0
    } else {
        0.5
    }
}

/// A single Metropolis–Hastings chain over networks.
pub struct Chain<'a> {
    model: &'a Model,
    theta: Vec<f64>,
    net: BipartiteNetwork,
    stats: Vec<f64>,
    delta: Vec<f64>,
    proposal: Proposal,
    rng: ChaCha8Rng,
    pub proposed: u64,
    pub accepted: u64,
}

impl<'a> Chain<'a> {
    pub fn new(
        model: &'a Model,
        theta: &[f64],
        net: BipartiteNetwork,
        proposal: Proposal,
        rng: ChaCha8Rng,
    ) -> Result<Self, ModelError> {
        check_theta(model, theta)?;
        let stats = model.try_eval(&net)?;
        Ok(Chain {
            model,
            theta: theta.to_vec(),
            delta: vec![0.0; model.dim()],
            net,
            stats,
            proposal,
            rng,
            proposed: 0,
            accepted: 0,
        })
    }

    pub fn network(&self) -> &BipartiteNetwork {
        &self.net
    }

    /// Tracked statistics of the current state.
    pub fn stats(&self) -> &[f64] {
        &self.stats
    }

    /// One proposal; returns whether it was accepted.
    pub fn step(&mut self) -> bool {
        let accepted = mh_step(
            &mut self.net,
            self.model,
            &self.theta,
            self.proposal,
            &mut self.rng,
            &mut self.stats,
            &mut self.delta,
        );
        self.proposed += 1;
        self.accepted += accepted as u64;
        accepted
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Relative gap between tracked statistics and a full recomputation.
    pub fn audit(&self) -> f64 {
        let full = self.model.eval(&self.net);
        full.iter()
            .zip(&self.stats)
            .map(|(f, s)| (f - s).abs() / f.abs().max(1.0))
            .fold(0.0, f64::max)
    }

    pub fn into_network(self) -> BipartiteNetwork {
        self.net
    }
}

/// Proposes one toggle and applies it on acceptance, updating `stats`.
/// `delta` is scratch space of the model's dimension.
pub fn mh_step<R: Rng>(
    net: &mut BipartiteNetwork,
    model: &Model,
    theta: &[f64],
    proposal: Proposal,
    rng: &mut R,
    stats: &mut [f64],
    delta: &mut [f64],
) -> bool {
    let dyads = net.dyad_count();
    if dyads == 0 {
        return false;
    }
    let edges = net.edge_count();
    let (i, k, log_q) = match proposal {
        Proposal::UniformDyad => {
            let (i, k) = net.dyad_at(rng.random_range(0..dyads));
            (i, k, 0.0)
        }
        Proposal::TieNoTie => {
            let pd = p_delete(edges, dyads);
            let delete = pd == 1.0 || (pd > 0.0 && rng.random_bool(pd));
            if delete {
                let (i, k) = net.edges()[rng.random_range(0..edges)];
                let fwd = pd / edges as f64;
                let rev = (1.0 - p_delete(edges - 1, dyads)) / (dyads - edges + 1) as f64;
                (i, k, (rev / fwd).ln())
            } else {
                let (i, k) = loop {
                    let (i, k) = net.dyad_at(rng.random_range(0..dyads));
                    if !net.contains(i, k) {
                        break (i, k);
                    }
                };
                let fwd = (1.0 - pd) / (dyads - edges) as f64;
                let rev = p_delete(edges + 1, dyads) / (edges + 1) as f64;
                (i, k, (rev / fwd).ln())
            }
        }
    };
    model.change_into(net, i, k, delta);
    let present = net.contains(i, k);
    let sign = if present { -1.0 } else { 1.0 };
    let log_ratio = sign * dot(theta, delta) + log_q;
    let accept = log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp();
    if accept {
        net.toggle_unchecked(i, k);
        for (s, d) in stats.iter_mut().zip(delta.iter()) {
            *s += sign * d;
        }
    }
    accept
}

/// Runs one chain: burn-in, then `draws` retained states spaced by the
/// control's interval.
fn run_chain(
    model: &Model,
    theta: &[f64],
    net0: &BipartiteNetwork,
    control: &SamplerControl,
    stream: u64,
    draws: usize,
) -> Result<(Vec<f64>, BipartiteNetwork, u64, u64, f64), ModelError> {
    let rng = chain_rng(control.seed, stream);
    let mut chain = Chain::new(model, theta, net0.clone(), control.proposal, rng)?;
    chain.run(control.burn_in);
    let mut rows = Vec::with_capacity(draws * model.dim());
    for _ in 0..draws {
        chain.run(control.interval);
        rows.extend_from_slice(chain.stats());
    }
    let audit = chain.audit();
    chain.network().debug_check();
    let (p, a) = (chain.proposed, chain.accepted);
    Ok((rows, chain.into_network(), p, a, audit))
}

/// Draws `control.sample_size` statistic vectors from the model at `theta`,
/// starting every chain from `net0`. Chains are concatenated in order; the
/// final network is that of the last chain.
pub fn simulate(
    model: &Model,
    theta: &[f64],
    net0: &BipartiteNetwork,
    control: &SamplerControl,
    exec: Execution,
) -> Result<StatSample, ModelError> {
    control.validate()?;
    check_theta(model, theta)?;
    let chains = control.chains;
    let per = control.sample_size / chains;
    let extra = control.sample_size % chains;
    let results = map_range(exec, chains, |c| {
        run_chain(model, theta, net0, control, c as u64, per + (c < extra) as usize)
    });
    let mut sample = StatSample {
        names: model.names().to_vec(),
        rows: Vec::with_capacity(control.sample_size * model.dim()),
        final_network: None,
        proposed: 0,
        accepted: 0,
        audit_error: 0.0,
    };
    for r in results {
        let (rows, net, p, a, audit) = r?;
        sample.rows.extend(rows);
        sample.final_network = Some(net);
        sample.proposed += p;
        sample.accepted += a;
        sample.audit_error = sample.audit_error.max(audit);
    }
    Ok(sample)
}
