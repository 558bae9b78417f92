use std::collections::HashSet;

use crate::attrs::Attributes;
use crate::error::ModelError;
use crate::graph::{BipartiteNetwork, Mode};

use super::{pow0, ChangeVector, Exponent, ModelSpec, ModelTerm, StatVector, TermKind};

/// Precomputed `b^e` for small integer bases (with `0^e = 0`).
#[derive(Clone, Debug)]
struct PowTable {
    values: Vec<f64>,
    exponent: f64,
}

impl PowTable {
    fn new(exponent: f64, max_base: usize) -> Self {
        PowTable {
            values: (0..=max_base).map(|b| pow0(b as f64, exponent)).collect(),
            exponent,
        }
    }

    #[inline]
    fn get(&self, base: usize) -> f64 {
        match self.values.get(base) {
            Some(&v) => v,
            None => pow0(base as f64, self.exponent),
        }
    }
}

#[derive(Clone, Debug)]
enum Bound {
    Edges,
    Cov {
        mode: Mode,
        values: Vec<f64>,
    },
    Factor {
        mode: Mode,
        codes: Vec<u32>,
        /// Output position per level; the reference level maps to `None`.
        slot: Vec<Option<usize>>,
    },
    NodeMatch {
        /// Mode of the matched nodes; two-paths run through the other mode.
        mode: Mode,
        codes: Vec<u32>,
        slot: Vec<Option<usize>>,
        alpha: bool,
        pow: PowTable,
    },
    Star {
        order: usize,
    },
    Degree {
        degree: usize,
    },
    Sociality,
}

#[derive(Clone, Debug)]
struct BoundTerm {
    offset: usize,
    dim: usize,
    bound: Bound,
}

/// A [`ModelSpec`] resolved against a network's dimensions and attributes.
/// Cheap to share between threads; holds no mutable state.
#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    n1: usize,
    n2: usize,
    names: Vec<String>,
    terms: Vec<BoundTerm>,
}

impl Model {
    /// Expands the spec into statistics for networks shaped like `net`.
    pub fn new(spec: &ModelSpec, net: &BipartiteNetwork, attrs: &Attributes) -> Result<Self, ModelError> {
        Self::with_dims(spec, net.n1(), net.n2(), attrs)
    }

    pub fn with_dims(
        spec: &ModelSpec,
        n1: usize,
        n2: usize,
        attrs: &Attributes,
    ) -> Result<Self, ModelError> {
        spec.validate(false)?;
        for (mode, n) in [(Mode::One, n1), (Mode::Two, n2)] {
            let t = attrs.get(mode);
            if t.len() != n {
                return Err(ModelError::AttrSize { mode, got: t.len(), expected: n });
            }
        }
        let mut names = Vec::new();
        let mut terms = Vec::new();
        for term in &spec.terms {
            let offset = names.len();
            let bound = bind_term(term, n1, n2, attrs, &mut names)?;
            terms.push(BoundTerm { offset, dim: names.len() - offset, bound });
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(ModelError::DuplicateName(n.clone()));
            }
        }
        Ok(Model { spec: spec.clone(), n1, n2, names, terms })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Number of statistics after expansion.
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Index range of the statistics produced by spec term `index`.
    pub fn term_range(&self, index: usize) -> std::ops::Range<usize> {
        let t = &self.terms[index];
        t.offset..t.offset + t.dim
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    fn check_net(&self, net: &BipartiteNetwork) -> Result<(), ModelError> {
        if net.n1() != self.n1 || net.n2() != self.n2 {
            return Err(ModelError::BadArgument {
                term: "model".into(),
                message: format!(
                    "bound for a {}x{} network, got {}x{}",
                    self.n1,
                    self.n2,
                    net.n1(),
                    net.n2()
                ),
            });
        }
        Ok(())
    }

    /// Full statistic vector `s(y)`.
    pub fn eval(&self, net: &BipartiteNetwork) -> StatVector {
        assert_eq!((net.n1(), net.n2()), (self.n1, self.n2), "network shape mismatch");
        let mut out = vec![0.0; self.dim()];
        for t in &self.terms {
            eval_term(t, net, &mut out[t.offset..t.offset + t.dim]);
        }
        out
    }

    pub fn try_eval(&self, net: &BipartiteNetwork) -> Result<StatVector, ModelError> {
        self.check_net(net)?;
        Ok(self.eval(net))
    }

    /// Writes `s(y with (i,k)) - s(y without (i,k))` into `out`. The dyad
    /// must be legal; its current state does not matter.
    pub fn change_into(&self, net: &BipartiteNetwork, i: usize, k: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.terms {
            change_term(t, net, i, k, &mut out[t.offset..t.offset + t.dim]);
        }
    }

    pub fn change(&self, net: &BipartiteNetwork, i: usize, k: usize) -> Result<ChangeVector, ModelError> {
        self.check_net(net)?;
        net.check_dyad(i, k)?;
        let mut out = vec![0.0; self.dim()];
        self.change_into(net, i, k, &mut out);
        Ok(out)
    }
}

/// Statistic vector of `spec` on `net`.
pub fn eval_stats(
    spec: &ModelSpec,
    net: &BipartiteNetwork,
    attrs: &Attributes,
) -> Result<StatVector, ModelError> {
    Ok(Model::new(spec, net, attrs)?.eval(net))
}

/// Change statistic vector of `spec` for dyad `(i, k)`.
pub fn change_stats(
    spec: &ModelSpec,
    net: &BipartiteNetwork,
    attrs: &Attributes,
    i: usize,
    k: usize,
) -> Result<ChangeVector, ModelError> {
    Model::new(spec, net, attrs)?.change(net, i, k)
}

fn bind_term(
    term: &ModelTerm,
    n1: usize,
    n2: usize,
    attrs: &Attributes,
    names: &mut Vec<String>,
) -> Result<Bound, ModelError> {
    let kname = term.kind.name();
    Ok(match term.kind {
        TermKind::Edges => {
            names.push("edges".into());
            Bound::Edges
        }
        TermKind::B1Cov | TermKind::B2Cov => {
            let mode = term.kind.attribute_mode().unwrap();
            let attr = term.attribute.as_deref().unwrap();
            let values = attrs.get(mode).numeric(attr)?.to_vec();
            names.push(format!("{kname}.{attr}"));
            Bound::Cov { mode, values }
        }
        TermKind::B1Factor | TermKind::B2Factor => {
            let mode = term.kind.attribute_mode().unwrap();
            let attr = term.attribute.as_deref().unwrap();
            let (levels, codes) = attrs.get(mode).categorical(attr)?;
            let mut slot = vec![None; levels.len()];
            for (l, level) in levels.iter().enumerate().skip(1) {
                slot[l] = Some(l - 1);
                names.push(format!("{kname}.{attr}.{level}"));
            }
            Bound::Factor { mode, codes: codes.to_vec(), slot }
        }
        TermKind::B1NodeMatch | TermKind::B2NodeMatch => {
            let mode = term.kind.attribute_mode().unwrap();
            let attr = term.attribute.as_deref().unwrap();
            let table = attrs.get(mode);
            let (levels, codes) = table.categorical(attr)?;
            let mut kept = vec![true; levels.len()];
            if let Some(keep) = &term.keep {
                kept = vec![false; levels.len()];
                for level in keep {
                    let idx = table.level_index(attr, level).map_err(|_| ModelError::KeepLevel {
                        term: kname.into(),
                        attr: attr.into(),
                        level: level.clone(),
                    })?;
                    kept[idx as usize] = true;
                }
            }
            let start = names.len();
            let mut slot = vec![None; levels.len()];
            if term.diff {
                for (l, level) in levels.iter().enumerate() {
                    if kept[l] {
                        slot[l] = Some(names.len() - start);
                        names.push(format!("{kname}.{attr}.{level}"));
                    }
                }
            } else {
                for (l, k) in kept.iter().enumerate() {
                    if *k {
                        slot[l] = Some(0);
                    }
                }
                names.push(format!("{kname}.{attr}"));
            }
            let (alpha, e) = match term.exponent.unwrap() {
                Exponent::Alpha(a) => (true, a),
                Exponent::Beta(b) => (false, b),
            };
            Bound::NodeMatch {
                mode,
                codes: codes.to_vec(),
                slot,
                alpha,
                pow: PowTable::new(e, n1.max(n2) + 1),
            }
        }
        TermKind::B2Star => {
            let order = term.order.unwrap();
            names.push(format!("b2star{order}"));
            Bound::Star { order }
        }
        TermKind::B2Degree => {
            let degree = term.order.unwrap();
            names.push(format!("b2degree{degree}"));
            Bound::Degree { degree }
        }
        TermKind::B2Sociality => {
            for node in n1 + 1..=n1 + n2 {
                names.push(format!("b2sociality{node}"));
            }
            Bound::Sociality
        }
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for j in 0..k {
        r = r * (n - j) as f64 / (j + 1) as f64;
    }
    r.round()
}

/// `(focal, hub)` for a dyad given the mode of the focal node.
#[inline]
fn orient(mode: Mode, i: usize, k: usize) -> (usize, usize) {
    match mode {
        Mode::One => (i, k),
        Mode::Two => (k, i),
    }
}

fn eval_term(t: &BoundTerm, net: &BipartiteNetwork, out: &mut [f64]) {
    match &t.bound {
        Bound::Edges => out[0] = net.edge_count() as f64,
        Bound::Cov { mode, values } => {
            let first = net.first_node(*mode);
            out[0] = net
                .edges()
                .iter()
                .map(|&(i, k)| values[orient(*mode, i, k).0 - first])
                .sum();
        }
        Bound::Factor { mode, codes, slot } => {
            let first = net.first_node(*mode);
            for &(i, k) in net.edges() {
                if let Some(s) = slot[codes[orient(*mode, i, k).0 - first] as usize] {
                    out[s] += 1.0;
                }
            }
        }
        Bound::NodeMatch { mode, codes, slot, alpha: true, pow } => {
            let first = net.first_node(*mode);
            let mut counts = vec![0usize; net.n() + 1];
            let mut touched = Vec::new();
            for a in net.nodes(*mode) {
                let Some(s) = slot[codes[a - first] as usize] else { continue };
                let ca = codes[a - first];
                for &hub in net.neighbors(a) {
                    for &b in net.neighbors(hub) {
                        if b > a && codes[b - first] == ca {
                            if counts[b] == 0 {
                                touched.push(b);
                            }
                            counts[b] += 1;
                        }
                    }
                }
                for &b in &touched {
                    out[s] += pow.get(counts[b]);
                    counts[b] = 0;
                }
                touched.clear();
            }
        }
        Bound::NodeMatch { mode, codes, slot, alpha: false, pow } => {
            let first = net.first_node(*mode);
            let levels = slot.len();
            let mut per_level = vec![0usize; levels];
            for hub in net.nodes(mode.other()) {
                let nb = net.neighbors(hub);
                for &a in nb {
                    per_level[codes[a - first] as usize] += 1;
                }
                for &a in nb {
                    let c = codes[a - first] as usize;
                    if let Some(s) = slot[c] {
                        out[s] += 0.5 * pow.get(per_level[c] - 1);
                    }
                }
                for &a in nb {
                    per_level[codes[a - first] as usize] = 0;
                }
            }
        }
        Bound::Star { order } => {
            out[0] = net.nodes(Mode::Two).map(|k| binomial(net.degree(k), *order)).sum();
        }
        Bound::Degree { degree } => {
            out[0] = net.nodes(Mode::Two).filter(|&k| net.degree(k) == *degree).count() as f64;
        }
        Bound::Sociality => {
            for (s, k) in net.nodes(Mode::Two).enumerate() {
                out[s] = net.degree(k) as f64;
            }
        }
    }
}

fn change_term(t: &BoundTerm, net: &BipartiteNetwork, i: usize, k: usize, out: &mut [f64]) {
    match &t.bound {
        Bound::Edges => out[0] = 1.0,
        Bound::Cov { mode, values } => {
            out[0] = values[orient(*mode, i, k).0 - net.first_node(*mode)];
        }
        Bound::Factor { mode, codes, slot } => {
            if let Some(s) = slot[codes[orient(*mode, i, k).0 - net.first_node(*mode)] as usize] {
                out[s] = 1.0;
            }
        }
        Bound::NodeMatch { mode, codes, slot, alpha, pow } => {
            let first = net.first_node(*mode);
            let (focal, hub) = orient(*mode, i, k);
            let c = codes[focal - first];
            let Some(s) = slot[c as usize] else { return };
            if *alpha {
                // Each matching neighbour j of the hub gains one two-path to
                // the focal node; t counts the ones avoiding the hub.
                let present = net.contains(i, k) as usize;
                let mut delta = 0.0;
                for &j in net.neighbors(hub) {
                    if j != focal && codes[j - first] == c {
                        let t = net.shared_partners(focal, j) - present;
                        delta += pow.get(t + 1) - pow.get(t);
                    }
                }
                out[s] = delta;
            } else {
                let u = net
                    .neighbors(hub)
                    .iter()
                    .filter(|&&j| j != focal && codes[j - first] == c)
                    .count();
                out[s] = if u == 0 {
                    0.0
                } else {
                    0.5 * ((1 + u) as f64 * pow.get(u) - u as f64 * pow.get(u - 1))
                };
            }
        }
        Bound::Star { order } => {
            let d = net.degree(k) - net.contains(i, k) as usize;
            out[0] = binomial(d, order - 1);
        }
        Bound::Degree { degree } => {
            let d = net.degree(k) - net.contains(i, k) as usize;
            out[0] = (d + 1 == *degree) as u8 as f64 - (d == *degree) as u8 as f64;
        }
        Bound::Sociality => out[k - net.n1() - 1] = 1.0,
    }
}
