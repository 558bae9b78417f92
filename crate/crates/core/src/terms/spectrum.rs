//! Shared-partner spectra of matching pairs (MDSP) and edges (MESP).
//!
//! The node-centric homophily statistic is `sum_i i^alpha * MDSP_i` and the
//! edge-centric one is `1/2 * sum_i i^beta * MESP_i`, which exhibits both as
//! curved exponential-family terms with fixed basis statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::attrs::AttributeTable;
use crate::error::ModelError;
use crate::graph::BipartiteNetwork;

use super::pow0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumKind {
    /// Matching dyadwise shared partners: pairs by shared-partner count.
    Mdsp,
    /// Matching edgewise shared partners: edges by matching two-path count.
    Mesp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedPartnerSpectrum {
    pub kind: SpectrumKind,
    /// Multiplicity `i >= 1` to number of pairs (or edges).
    pub counts: BTreeMap<usize, u64>,
}

impl SharedPartnerSpectrum {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Counts matching pairs of the table's mode by their exact number of
/// shared partners in the opposite mode.
pub fn mdsp_spectrum(
    net: &BipartiteNetwork,
    attrs: &AttributeTable,
    column: &str,
) -> Result<SharedPartnerSpectrum, ModelError> {
    let (_, codes) = attrs.categorical(column)?;
    let mode = attrs.mode();
    let first = net.first_node(mode);
    let mut counts = BTreeMap::new();
    for a in net.nodes(mode) {
        for b in a + 1..first + net.mode_count(mode) {
            if codes[a - first] == codes[b - first] {
                let sp = net.shared_partners(a, b);
                if sp > 0 {
                    *counts.entry(sp).or_insert(0) += 1;
                }
            }
        }
    }
    Ok(SharedPartnerSpectrum { kind: SpectrumKind::Mdsp, counts })
}

/// Counts edges by the number of matching two-paths that contain them.
pub fn mesp_spectrum(
    net: &BipartiteNetwork,
    attrs: &AttributeTable,
    column: &str,
) -> Result<SharedPartnerSpectrum, ModelError> {
    let (_, codes) = attrs.categorical(column)?;
    let mode = attrs.mode();
    let first = net.first_node(mode);
    let mut counts = BTreeMap::new();
    for hub in net.nodes(mode.other()) {
        let nb = net.neighbors(hub);
        for &a in nb {
            let u = nb.iter().filter(|&&b| b != a && codes[b - first] == codes[a - first]).count();
            if u > 0 {
                *counts.entry(u).or_insert(0) += 1;
            }
        }
    }
    Ok(SharedPartnerSpectrum { kind: SpectrumKind::Mesp, counts })
}

/// `sum_i i^exponent * counts[i]`, halved for MESP spectra.
pub fn recompose_from_spectrum(spectrum: &SharedPartnerSpectrum, exponent: f64) -> f64 {
    let total: f64 = spectrum
        .counts
        .iter()
        .map(|(&i, &c)| pow0(i as f64, exponent) * c as f64)
        .sum();
    match spectrum.kind {
        SpectrumKind::Mdsp => total,
        SpectrumKind::Mesp => 0.5 * total,
    }
}
