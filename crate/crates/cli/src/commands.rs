use std::fs;
use std::path::{Path, PathBuf};

use bergm::estimate::{self, FitControl, FitResult, Method};
use bergm::io;
use bergm::oracle::ExactModel;
use bergm::sampler::{self, Proposal, RNG_ALGORITHM};
use bergm::{Attributes, BipartiteNetwork, Execution, ExponentKind, Mode, Model, ModelSpec};
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::{Inputs, Mcmc, MethodArg, OracleWhat, ProposalArg};

type Result<T> = std::result::Result<T, CliError>;

/// Network, attributes and parsed formula for one run.
struct Loaded {
    net: BipartiteNetwork,
    attrs: Attributes,
    spec: Option<ModelSpec>,
}

fn exec(inputs: &Inputs) -> Execution {
    if inputs.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn parse_formula(text: &str) -> Result<ModelSpec> {
    bergm::formula::parse(text).map_err(|err| CliError::Formula { formula: text.to_string(), err })
}

fn load(inputs: &Inputs, model: Option<&str>) -> Result<Loaded> {
    // The formula is checked first so a bad model fails fast, before any I/O.
    let spec = model.map(parse_formula).transpose()?;
    let net = io::read_edge_list(&inputs.network)?;
    let mut attrs = Attributes::empty_for(&net);
    if let Some(p) = &inputs.attrs1 {
        attrs.one = io::read_attributes(p, &net, Mode::One)?;
    }
    if let Some(p) = &inputs.attrs2 {
        attrs.two = io::read_attributes(p, &net, Mode::Two)?;
    }
    Ok(Loaded { net, attrs, spec })
}

fn path_str(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

/// The resolved run configuration embedded in every output.
#[derive(Serialize)]
struct RunConfig<'a> {
    subcommand: &'a str,
    network: String,
    attrs1: Option<String>,
    attrs2: Option<String>,
    model: Option<String>,
    seed: Option<u64>,
    rng: Option<&'a str>,
    control: Option<serde_json::Value>,
    out: Option<String>,
}

impl<'a> RunConfig<'a> {
    fn new(subcommand: &'a str, inputs: &Inputs, spec: Option<&ModelSpec>) -> Self {
        RunConfig {
            subcommand,
            network: inputs.network.display().to_string(),
            attrs1: path_str(&inputs.attrs1),
            attrs2: path_str(&inputs.attrs2),
            model: spec.map(bergm::formula::format),
            seed: None,
            rng: None,
            control: None,
            out: path_str(&inputs.out),
        }
    }

    fn with_control(mut self, control: &FitControl) -> Self {
        self.seed = Some(control.sampler.seed);
        self.rng = Some(RNG_ALGORITHM);
        self.control = Some(serde_json::to_value(control).expect("control serialises"));
        self
    }

    fn comment(&self) -> String {
        format!("# config {}\n", serde_json::to_string(self).expect("config serialises"))
    }
}

fn control_for(net: &BipartiteNetwork, mcmc: &Mcmc) -> FitControl {
    let mut c = FitControl::for_network(net).with_seed(mcmc.seed);
    if let Some(b) = mcmc.burnin {
        c.sampler.burn_in = b;
    }
    if let Some(i) = mcmc.interval {
        c.sampler.interval = i;
    }
    if let Some(s) = mcmc.samplesize {
        c.sampler.sample_size = s;
    }
    c.sampler.chains = mcmc.chains;
    c.sampler.proposal = match mcmc.proposal {
        ProposalArg::Tnt => Proposal::TieNoTie,
        ProposalArg::Uniform => Proposal::UniformDyad,
    };
    c
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::Mple => Method::Mple,
        MethodArg::Mcmcmle => Method::McmcMle,
    }
}

/// Writes `text` to `file` under the output directory, or to stdout.
fn emit(inputs: &Inputs, file: &str, text: &str) -> Result<()> {
    match &inputs.out {
        Some(dir) => write_file(dir, file, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(dir: &Path, file: &str, text: &str) -> Result<()> {
    let werr = |path: &Path, source| CliError::Write { path: path.display().to_string(), source };
    fs::create_dir_all(dir).map_err(|e| werr(dir, e))?;
    let path = dir.join(file);
    fs::write(&path, text).map_err(|e| werr(&path, e))
}

fn finite(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

pub fn stats(inputs: &Inputs, model: &str) -> Result<()> {
    let l = load(inputs, Some(model))?;
    let spec = l.spec.expect("model given");
    let m = Model::new(&spec, &l.net, &l.attrs)?;
    let values = m.try_eval(&l.net)?;
    let mut s = RunConfig::new("stats", inputs, Some(&spec)).comment();
    s.push_str("name,value\n");
    for (name, v) in m.names().iter().zip(values.iter()) {
        s.push_str(&format!("{name},{v}\n"));
    }
    emit(inputs, "stats.csv", &s)
}

fn fit_record(config: &RunConfig, f: &FitResult) -> serde_json::Value {
    let se = f.std_errors();
    let p = f.p_values();
    let estimates: Vec<serde_json::Value> = (0..f.dim())
        .map(|j| {
            json!({
                "term": f.names[j],
                "estimate": finite(f.theta[j]),
                "se": finite(se[j]),
                "p_value": finite(p[j]),
                "stars": estimate::stars(p[j]),
                "mc_se": f.mc_se.as_ref().map(|m| finite(m[j])),
            })
        })
        .collect();
    let cov: Vec<Vec<serde_json::Value>> = (0..f.dim())
        .map(|a| (0..f.dim()).map(|b| finite(f.covariance[(a, b)])).collect())
        .collect();
    json!({
        "config": config,
        "formula": f.formula,
        "method": f.method.name(),
        "estimates": estimates,
        "covariance": cov,
        "loglik": f.loglik,
        "pseudo_loglik": f.pseudo_loglik,
        "iterations": f.iterations,
        "diagnostics": f.diagnostics,
        "degenerate": f.degenerate,
        "warnings": f.warnings,
    })
}

pub fn fit(
    inputs: &Inputs,
    model: &str,
    m: MethodArg,
    mcmc: &Mcmc,
    loglik: bool,
    fail_on_degeneracy: bool,
) -> Result<()> {
    let l = load(inputs, Some(model))?;
    let spec = l.spec.expect("model given");
    let mut control = control_for(&l.net, mcmc);
    control.loglik = loglik;
    let f = estimate::fit(&spec, &l.net, &l.attrs, method(m), &control, exec(inputs))?;
    let config = RunConfig::new("fit", inputs, Some(&spec)).with_control(&control);
    let report = f.report();
    match &inputs.out {
        Some(dir) => {
            write_file(dir, "fit.txt", &report)?;
            let record = serde_json::to_string_pretty(&fit_record(&config, &f)).expect("record serialises");
            write_file(dir, "fit.json", &(record + "\n"))?;
            print!("{report}");
        }
        None => print!("{report}"),
    }
    if fail_on_degeneracy && !f.degenerate.is_empty() {
        return Err(CliError::Degenerate(f.degenerate.clone()));
    }
    Ok(())
}

/// 0, 0.1, ..., 1.
fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn profile(
    inputs: &Inputs,
    model: &str,
    m: MethodArg,
    alpha_grid: Option<Vec<f64>>,
    beta_grid: Option<Vec<f64>>,
    mcmc: &Mcmc,
) -> Result<()> {
    let l = load(inputs, Some(model))?;
    let spec = l.spec.expect("model given");
    let control = control_for(&l.net, mcmc);
    let grids: Vec<(ExponentKind, Vec<f64>)> = match (alpha_grid, beta_grid) {
        (None, None) => vec![(ExponentKind::Alpha, default_grid()), (ExponentKind::Beta, default_grid())],
        (a, b) => [(ExponentKind::Alpha, a), (ExponentKind::Beta, b)]
            .into_iter()
            .filter_map(|(k, g)| g.map(|g| (k, g)))
            .collect(),
    };
    let mut points = Vec::new();
    for (kind, grid) in &grids {
        points.extend(estimate::profile(&spec, *kind, grid, &l.net, &l.attrs, method(m), &control, exec(inputs))?);
    }
    let mut s = RunConfig::new("profile", inputs, Some(&spec)).with_control(&control).comment();
    s.push_str(&format!("# method {}\n", method(m).name()));
    s.push_str(&estimate::profile_csv(&points));
    emit(inputs, "profile.csv", &s)?;
    if !points.is_empty() && points.iter().all(|p| p.fit.is_err()) {
        let first = points.into_iter().find_map(|p| p.fit.err()).expect("all failed");
        return Err(CliError::Estimate(first));
    }
    Ok(())
}

pub fn project(inputs: &Inputs, mode: u8) -> Result<()> {
    let l = load(inputs, None)?;
    let mode = Mode::from_number(mode).expect("clap restricts mode to 1 or 2");
    let p = l.net.project(mode);
    emit(inputs, &format!("projection{}.txt", mode.number()), &io::format_projection(&p))
}

pub fn simulate(inputs: &Inputs, model: &str, theta: &[f64], mcmc: &Mcmc) -> Result<()> {
    let l = load(inputs, Some(model))?;
    let spec = l.spec.expect("model given");
    let m = Model::new(&spec, &l.net, &l.attrs)?;
    let control = control_for(&l.net, mcmc);
    let sample = sampler::simulate(&m, theta, &l.net, &control.sampler, exec(inputs))?;
    let mut s = RunConfig::new("simulate", inputs, Some(&spec)).with_control(&control).comment();
    s.push_str(&format!("# theta {}\n", json!(theta)));
    s.push_str(&sample.to_csv());
    emit(inputs, "simulate.csv", &s)?;
    if let (Some(dir), Some(net)) = (&inputs.out, &sample.final_network) {
        write_file(dir, "final_network.txt", &io::format_edge_list(net))?;
    }
    Ok(())
}

pub fn oracle(inputs: &Inputs, model: &str, what: OracleWhat, theta: Option<Vec<f64>>) -> Result<()> {
    let l = load(inputs, Some(model))?;
    let spec = l.spec.expect("model given");
    let em = ExactModel::new(&spec, &l.attrs, l.net.n1(), l.net.n2(), exec(inputs))?;
    let need_theta = || {
        theta.clone().ok_or_else(|| CliError::Usage(format!("--theta is required for `oracle --what {what:?}`").to_lowercase()))
    };
    let mut s = RunConfig::new("oracle", inputs, Some(&spec)).comment();
    match what {
        OracleWhat::Kappa => {
            let t = need_theta()?;
            s.push_str(&format!("log_kappa\n{}\n", em.log_kappa(&t)?));
        }
        OracleWhat::Loglik => {
            let t = need_theta()?;
            s.push_str(&format!("loglik\n{}\n", em.loglik_of(&t, &l.net)?));
        }
        OracleWhat::Mle => {
            let obs = em.model().try_eval(&l.net)?;
            let mle = em.mle(&obs).map_err(estimate_from_oracle)?;
            s.push_str("name,value\n");
            for (name, v) in em.model().names().iter().zip(mle) {
                s.push_str(&format!("{name},{v}\n"));
            }
        }
        OracleWhat::Distribution => {
            let t = need_theta()?;
            let d = em.dyad_distribution(&t, exec(inputs))?;
            s.push_str("state,edges,probability\n");
            for (state, p) in d.probs.iter().enumerate() {
                let net = bergm::oracle::network_from_state(l.net.n1(), l.net.n2(), state as u64);
                let edges: Vec<String> = net.sorted_edges().iter().map(|(i, k)| format!("{i}-{k}")).collect();
                s.push_str(&format!("{state},{},{p}\n", edges.join(" ")));
            }
        }
        OracleWhat::Marginals => {
            let t = need_theta()?;
            let d = em.dyad_distribution(&t, exec(inputs))?;
            s.push_str("i,k,probability\n");
            for (idx, p) in d.marginals.iter().enumerate() {
                let (i, k) = l.net.dyad_at(idx);
                s.push_str(&format!("{i},{k},{p}\n"));
            }
        }
    }
    emit(inputs, "oracle.csv", &s)
}

/// A non-existent MLE is an estimation failure, not a parse error.
fn estimate_from_oracle(e: bergm::error::OracleError) -> CliError {
    match e {
        bergm::error::OracleError::Model(m) => CliError::Model(m),
        other => CliError::Estimate(other.into()),
    }
}
