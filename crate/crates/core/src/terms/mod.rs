//! Model terms: what a model asks for ([`ModelSpec`]) and the bound form
//! that evaluates statistics and change statistics on a network ([`Model`]).
//!
//! The homophily terms come in two flavours. The node-centric form sums,
//! over unordered pairs of matching same-mode nodes, the number of
//! two-paths joining them raised to `alpha`. The edge-centric form sums,
//! over edges, the number of matching co-edges at the shared node raised to
//! `beta`, then halves the total. Both use `0^0 = 0` and agree with the
//! plain matching two-star count at exponent 1.

mod model;
mod spectrum;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::graph::Mode;

pub use model::{change_stats, eval_stats, Model};
pub use spectrum::{
    mdsp_spectrum, mesp_spectrum, recompose_from_spectrum, SharedPartnerSpectrum, SpectrumKind,
};

/// Sufficient statistics `s(y)`, ordered as the model's expanded names.
pub type StatVector = Vec<f64>;
/// Change statistics `s(y+) - s(y-)` for one dyad.
pub type ChangeVector = Vec<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermKind {
    Edges,
    B1Cov,
    B2Cov,
    B1Factor,
    B2Factor,
    B1NodeMatch,
    B2NodeMatch,
    /// `b2star(k)`: k-stars centred on mode-2 nodes.
    B2Star,
    /// `b2degree(d)`: mode-2 nodes of degree exactly `d`.
    B2Degree,
    B2Sociality,
}

impl TermKind {
    pub const ALL: [TermKind; 10] = [
        TermKind::Edges,
        TermKind::B1Cov,
        TermKind::B2Cov,
        TermKind::B1Factor,
        TermKind::B2Factor,
        TermKind::B1NodeMatch,
        TermKind::B2NodeMatch,
        TermKind::B2Star,
        TermKind::B2Degree,
        TermKind::B2Sociality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TermKind::Edges => "edges",
            TermKind::B1Cov => "b1cov",
            TermKind::B2Cov => "b2cov",
            TermKind::B1Factor => "b1factor",
            TermKind::B2Factor => "b2factor",
            TermKind::B1NodeMatch => "b1nodematch",
            TermKind::B2NodeMatch => "b2nodematch",
            TermKind::B2Star => "b2star",
            TermKind::B2Degree => "b2degree",
            TermKind::B2Sociality => "b2sociality",
        }
    }

    pub fn from_name(name: &str) -> Option<TermKind> {
        TermKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Mode whose attribute the term reads, if any.
    pub fn attribute_mode(self) -> Option<Mode> {
        match self {
            TermKind::B1Cov | TermKind::B1Factor | TermKind::B1NodeMatch => Some(Mode::One),
            TermKind::B2Cov | TermKind::B2Factor | TermKind::B2NodeMatch => Some(Mode::Two),
            _ => None,
        }
    }

    pub fn needs_attribute(self) -> bool {
        self.attribute_mode().is_some()
    }

    pub fn is_nodematch(self) -> bool {
        matches!(self, TermKind::B1NodeMatch | TermKind::B2NodeMatch)
    }

    /// Terms taking a single integer argument.
    pub fn needs_order(self) -> bool {
        matches!(self, TermKind::B2Star | TermKind::B2Degree)
    }

    /// True when the term's change statistic never depends on the rest of
    /// the network.
    pub fn is_dyadic_independent(self) -> bool {
        matches!(
            self,
            TermKind::Edges
                | TermKind::B1Cov
                | TermKind::B2Cov
                | TermKind::B1Factor
                | TermKind::B2Factor
                | TermKind::B2Sociality
        )
    }
}

/// Discount exponent of a homophily term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    /// Node-centric: applied to the two-path count of each matching pair.
    Alpha(f64),
    /// Edge-centric: applied to the matching co-edge count of each edge.
    Beta(f64),
}

impl Exponent {
    pub fn value(self) -> f64 {
        match self {
            Exponent::Alpha(v) | Exponent::Beta(v) => v,
        }
    }

    pub fn kind(self) -> ExponentKind {
        match self {
            Exponent::Alpha(_) => ExponentKind::Alpha,
            Exponent::Beta(_) => ExponentKind::Beta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExponentKind {
    Alpha,
    Beta,
}

impl ExponentKind {
    pub fn with(self, v: f64) -> Exponent {
        match self {
            ExponentKind::Alpha => Exponent::Alpha(v),
            ExponentKind::Beta => Exponent::Beta(v),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExponentKind::Alpha => "alpha",
            ExponentKind::Beta => "beta",
        }
    }
}

/// One term of a model formula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelTerm {
    pub kind: TermKind,
    pub attribute: Option<String>,
    /// Only for nodematch terms. `None` marks a profile template whose
    /// exponent is filled in later.
    pub exponent: Option<Exponent>,
    pub diff: bool,
    /// Restricts a nodematch term to these levels.
    pub keep: Option<Vec<String>>,
    /// The integer argument of `b2star` / `b2degree`.
    pub order: Option<usize>,
}

impl ModelTerm {
    pub fn new(kind: TermKind) -> Self {
        ModelTerm { kind, attribute: None, exponent: None, diff: false, keep: None, order: None }
    }

    pub fn edges() -> Self {
        Self::new(TermKind::Edges)
    }

    pub fn with_attr(kind: TermKind, attr: &str) -> Self {
        ModelTerm { attribute: Some(attr.to_string()), ..Self::new(kind) }
    }

    pub fn nodematch(mode: Mode, attr: &str, exponent: Exponent) -> Self {
        let kind = match mode {
            Mode::One => TermKind::B1NodeMatch,
            Mode::Two => TermKind::B2NodeMatch,
        };
        ModelTerm { exponent: Some(exponent), ..Self::with_attr(kind, attr) }
    }

    pub fn diff(mut self, diff: bool) -> Self {
        self.diff = diff;
        self
    }

    pub fn keep<S: AsRef<str>>(mut self, levels: &[S]) -> Self {
        self.keep = Some(levels.iter().map(|s| s.as_ref().to_string()).collect());
        self
    }

    pub fn with_order(kind: TermKind, order: usize) -> Self {
        ModelTerm { order: Some(order), ..Self::new(kind) }
    }

    /// Checks the attribute-free invariants of the term.
    pub fn validate(&self, allow_unbound: bool) -> Result<(), ModelError> {
        let name = self.kind.name().to_string();
        let bad = |message: &str| ModelError::BadArgument { term: name.clone(), message: message.into() };
        if self.kind.needs_attribute() != self.attribute.is_some() {
            return Err(bad(if self.attribute.is_some() {
                "takes no attribute"
            } else {
                "requires an attribute name"
            }));
        }
        if self.kind.needs_order() {
            match (self.kind, self.order) {
                (_, None) => return Err(bad("requires an integer argument")),
                (TermKind::B2Star, Some(k)) if k < 2 => return Err(bad("star order must be >= 2")),
                _ => {}
            }
        } else if self.order.is_some() {
            return Err(bad("takes no integer argument"));
        }
        if self.kind.is_nodematch() {
            match self.exponent {
                None if !allow_unbound => {
                    return Err(ModelError::UnboundExponent { term: name });
                }
                Some(e) if !(0.0..=1.0).contains(&e.value()) => {
                    return Err(ModelError::ExponentRange { term: name, value: e.value() });
                }
                _ => {}
            }
        } else {
            if self.exponent.is_some() {
                return Err(bad("alpha/beta only apply to nodematch terms"));
            }
            if self.diff {
                return Err(bad("diff only applies to nodematch terms"));
            }
            if self.keep.is_some() {
                return Err(bad("keep only applies to nodematch terms"));
            }
        }
        Ok(())
    }
}

/// An ordered list of model terms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub terms: Vec<ModelTerm>,
}

impl ModelSpec {
    pub fn new(terms: Vec<ModelTerm>) -> Self {
        ModelSpec { terms }
    }

    pub fn validate(&self, allow_unbound: bool) -> Result<(), ModelError> {
        self.terms.iter().try_for_each(|t| t.validate(allow_unbound))
    }

    /// Indices of nodematch terms.
    pub fn nodematch_terms(&self) -> Vec<usize> {
        (0..self.terms.len()).filter(|&i| self.terms[i].kind.is_nodematch()).collect()
    }

    /// Copy with the exponent of term `index` replaced.
    pub fn with_exponent(&self, index: usize, exponent: Exponent) -> Self {
        let mut s = self.clone();
        s.terms[index].exponent = Some(exponent);
        s
    }

    /// Whether every term is dyadic independent.
    pub fn is_dyadic_independent(&self) -> bool {
        self.terms.iter().all(|t| t.kind.is_dyadic_independent())
    }
}

/// `base^e` with `0^e = 0` for every `e`, including `e = 0`.
#[inline]
pub fn pow0(base: f64, e: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else if e == 1.0 {
        base
    } else if e == 0.0 {
        1.0
    } else {
        base.powf(e)
    }
}
