//! Profile likelihood over the homophily exponent: one fit per grid value
//! of α or β for the template's single unbound nodematch term.

use std::fmt::Write as _;

use super::{derive_seed, fit, tags, FitControl, FitResult, Method};
use crate::attrs::Attributes;
use crate::error::{EstimateError, ModelError};
use crate::graph::BipartiteNetwork;
use crate::parallel::{map_slice, Execution};
use crate::terms::{ExponentKind, ModelSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct ProfilePoint {
    pub kind: ExponentKind,
    pub value: f64,
    /// Position of the exponent's statistics in the fitted parameter vector.
    pub term_stats: std::ops::Range<usize>,
    pub fit: Result<FitResult, EstimateError>,
}

/// Index of the single unbound nodematch term of `template`.
fn template_slot(template: &ModelSpec) -> Result<usize, EstimateError> {
    let unbound: Vec<usize> = template
        .nodematch_terms()
        .into_iter()
        .filter(|&i| template.terms[i].exponent.is_none())
        .collect();
    match unbound.as_slice() {
        [one] => Ok(*one),
        other => Err(EstimateError::ProfileTemplate(other.len())),
    }
}

/// Fits the template at each grid value (sorted ascending). Each point gets
/// its own seed derived from the control seed, the exponent kind and the
/// grid position; failures are kept per point and the grid continues.
/// Log-likelihoods are always estimated so points are comparable.
#[allow(clippy::too_many_arguments)]
pub fn profile(
    template: &ModelSpec,
    which: ExponentKind,
    grid: &[f64],
    net: &BipartiteNetwork,
    attrs: &Attributes,
    method: Method,
    control: &FitControl,
    exec: Execution,
) -> Result<Vec<ProfilePoint>, EstimateError> {
    template.validate(true)?;
    let slot = template_slot(template)?;
    if let Some(bad) = grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(ModelError::ExponentRange { term: "profile grid".into(), value: *bad }.into());
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let tag = match which {
        ExponentKind::Alpha => tags::PROFILE_ALPHA,
        ExponentKind::Beta => tags::PROFILE_BETA,
    };
    let indexed: Vec<(usize, f64)> = grid.into_iter().enumerate().collect();
    let points = map_slice(exec, &indexed, |&(idx, value)| {
        let spec = template.with_exponent(slot, which.with(value));
        let mut c = control.clone();
        c.sampler.seed = derive_seed(control.sampler.seed, tag, idx as u32);
        c.loglik = true;
        let stats = crate::terms::Model::new(&spec, net, attrs)
            .map(|m| m.term_range(slot))
            .unwrap_or(0..0);
        ProfilePoint { kind: which, value, term_stats: stats, fit: fit(&spec, net, attrs, method, &c, Execution::Sequential) }
    });
    Ok(points)
}

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => "NA".into(),
    }
}

/// CSV with one row per grid point and nodematch statistic:
/// `kind,exponent,statistic,loglik,loglik_sd,coef,coef_se,p_value,status`.
pub fn profile_csv(points: &[ProfilePoint]) -> String {
    let mut s = String::from("kind,exponent,statistic,loglik,loglik_sd,coef,coef_se,p_value,status\n");
    for p in points {
        match &p.fit {
            Ok(f) => {
                let se = f.std_errors();
                let pv = f.p_values();
                for j in p.term_stats.clone() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},ok",
                        p.kind.name(),
                        p.value,
                        f.names[j],
                        num(f.loglik.map(|l| l.value)),
                        num(f.loglik.map(|l| l.sd)),
                        num(Some(f.theta[j])),
                        num(Some(se[j])),
                        num(Some(pv[j])),
                    );
                }
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                let _ = writeln!(s, "{},{},NA,NA,NA,NA,NA,NA,failed: {msg}", p.kind.name(), p.value);
            }
        }
    }
    s
}
