//! Bipartite network storage.
//!
//! Nodes use a single 1-based numbering: mode-1 nodes are `1..=n1` and
//! mode-2 nodes are `n1+1..=n1+n2`. Only mode-1 × mode-2 dyads may carry an
//! edge. Each edge is stored once; the symmetric mirror is implicit.
//!
//! Three views of the edge set are kept in sync:
//! - a dense dyad slot table for O(1) membership,
//! - an edge vector for O(1) uniform edge selection,
//! - sorted neighbour lists so shared-partner counts are a linear merge.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// One of the two node sets of a bipartite network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn other(self) -> Mode {
        match self {
            Mode::One => Mode::Two,
            Mode::Two => Mode::One,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Mode::One => 1,
            Mode::Two => 2,
        }
    }

    pub fn from_number(m: u8) -> Option<Mode> {
        match m {
            1 => Some(Mode::One),
            2 => Some(Mode::Two),
            _ => None,
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// A binary, undirected two-mode network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteNetwork {
    n1: usize,
    n2: usize,
    /// Indexed by `(i-1)*n2 + (k-n1-1)`; 0 means absent, otherwise position+1 in `edges`.
    slot: Vec<u32>,
    edges: Vec<(usize, usize)>,
    /// Indexed by `node-1`; sorted global ids of the opposite mode.
    nbrs: Vec<Vec<usize>>,
}

impl BipartiteNetwork {
    /// Empty network with `n1` mode-1 and `n2` mode-2 nodes.
    pub fn new(n1: usize, n2: usize) -> Self {
        let dyads = n1 * n2;
        assert!(dyads < u32::MAX as usize, "network too large");
        BipartiteNetwork {
            n1,
            n2,
            slot: vec![0; dyads],
            edges: Vec::new(),
            nbrs: vec![Vec::new(); n1 + n2],
        }
    }

    /// Builds a network from a list of `(mode-1 node, mode-2 node)` dyads.
    /// Duplicate dyads collapse to one edge.
    pub fn from_edge_list(
        n1: usize,
        n2: usize,
        dyads: &[(usize, usize)],
    ) -> Result<Self, GraphError> {
        let mut net = BipartiteNetwork::new(n1, n2);
        for &(i, k) in dyads {
            net.check_dyad(i, k)?;
            if !net.contains(i, k) {
                net.toggle_unchecked(i, k);
            }
        }
        Ok(net)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Total node count `n1 + n2`.
    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    /// Number of legal dyads, `n1 * n2`.
    pub fn dyad_count(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn mode_count(&self, mode: Mode) -> usize {
        match mode {
            Mode::One => self.n1,
            Mode::Two => self.n2,
        }
    }

    /// Global id of the first node of `mode`.
    pub fn first_node(&self, mode: Mode) -> usize {
        match mode {
            Mode::One => 1,
            Mode::Two => self.n1 + 1,
        }
    }

    /// Global ids of all nodes of `mode`.
    pub fn nodes(&self, mode: Mode) -> std::ops::Range<usize> {
        let first = self.first_node(mode);
        first..first + self.mode_count(mode)
    }

    pub fn mode_of(&self, node: usize) -> Result<Mode, GraphError> {
        if node == 0 || node > self.n() {
            Err(GraphError::NodeOutOfRange { node, n: self.n() })
        } else if node <= self.n1 {
            Ok(Mode::One)
        } else {
            Ok(Mode::Two)
        }
    }

    /// Validates that `(i, k)` is a mode-1 × mode-2 dyad.
    pub fn check_dyad(&self, i: usize, k: usize) -> Result<(), GraphError> {
        let n = self.n();
        if i == 0 || i > n || k == 0 || k > n {
            return Err(GraphError::DyadOutOfRange { i, k, n1: self.n1, n2: self.n2 });
        }
        if i > self.n1 || k <= self.n1 {
            return Err(GraphError::ModeViolation { i, k, n1: self.n1 });
        }
        Ok(())
    }

    #[inline]
    fn dyad_index(&self, i: usize, k: usize) -> usize {
        (i - 1) * self.n2 + (k - self.n1 - 1)
    }

    /// Inverse of the row-major dyad numbering `0..n1*n2`.
    #[inline]
    pub fn dyad_at(&self, index: usize) -> (usize, usize) {
        (index / self.n2 + 1, index % self.n2 + self.n1 + 1)
    }

    /// Edge membership for a dyad already known to be legal.
    #[inline]
    pub fn contains(&self, i: usize, k: usize) -> bool {
        self.slot[self.dyad_index(i, k)] != 0
    }

    pub fn has_edge(&self, i: usize, k: usize) -> Result<bool, GraphError> {
        self.check_dyad(i, k)?;
        Ok(self.contains(i, k))
    }

    /// Sorted neighbours of `node`.
    #[inline]
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.nbrs[node - 1]
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.nbrs[node - 1].len()
    }

    /// Edges as `(mode-1, mode-2)` pairs, in insertion order (not sorted).
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edges sorted lexicographically.
    pub fn sorted_edges(&self) -> Vec<(usize, usize)> {
        let mut e = self.edges.clone();
        e.sort_unstable();
        e
    }

    /// Flips dyad `(i, k)`; returns whether the edge is present afterwards.
    pub fn toggle_edge(&mut self, i: usize, k: usize) -> Result<bool, GraphError> {
        self.check_dyad(i, k)?;
        Ok(self.toggle_unchecked(i, k))
    }

    /// `toggle_edge` without bounds checking; the dyad must be legal.
    pub fn toggle_unchecked(&mut self, i: usize, k: usize) -> bool {
        let d = self.dyad_index(i, k);
        let s = self.slot[d];
        if s == 0 {
            self.edges.push((i, k));
            self.slot[d] = self.edges.len() as u32;
            insert_sorted(&mut self.nbrs[i - 1], k);
            insert_sorted(&mut self.nbrs[k - 1], i);
            true
        } else {
            let pos = (s - 1) as usize;
            self.edges.swap_remove(pos);
            if let Some(&(mi, mk)) = self.edges.get(pos) {
                let md = self.dyad_index(mi, mk);
                self.slot[md] = s;
            }
            self.slot[d] = 0;
            remove_sorted(&mut self.nbrs[i - 1], k);
            remove_sorted(&mut self.nbrs[k - 1], i);
            false
        }
    }

    /// Number of common neighbours of two same-mode nodes.
    #[inline]
    pub fn shared_partners(&self, a: usize, b: usize) -> usize {
        sorted_intersection_count(self.neighbors(a), self.neighbors(b))
    }

    /// Two-paths between same-mode nodes `a` and `b`, optionally ignoring
    /// the ones that pass through `excluding`.
    pub fn two_paths_between(
        &self,
        a: usize,
        b: usize,
        excluding: Option<usize>,
    ) -> Result<usize, GraphError> {
        if a == b {
            return Err(GraphError::SameNode { node: a });
        }
        let ma = self.mode_of(a)?;
        let mb = self.mode_of(b)?;
        if ma != mb {
            return Err(GraphError::WrongMode { node: b, expected: ma });
        }
        let mut count = self.shared_partners(a, b);
        if let Some(x) = excluding {
            if self.mode_of(x)? != ma.other() {
                return Err(GraphError::WrongMode { node: x, expected: ma.other() });
            }
            if self.neighbors(a).binary_search(&x).is_ok()
                && self.neighbors(b).binary_search(&x).is_ok()
            {
                count -= 1;
            }
        }
        Ok(count)
    }

    /// One-mode projection onto `mode`, weighted by two-path counts.
    pub fn project(&self, mode: Mode) -> WeightedProjection {
        let mut weights = BTreeMap::new();
        let mut counts = vec![0u32; self.n() + 1];
        let mut touched = Vec::new();
        for a in self.nodes(mode) {
            for &hub in self.neighbors(a) {
                for &b in self.neighbors(hub) {
                    if b > a {
                        if counts[b] == 0 {
                            touched.push(b);
                        }
                        counts[b] += 1;
                    }
                }
            }
            touched.sort_unstable();
            for &b in &touched {
                weights.insert((a, b), counts[b]);
                counts[b] = 0;
            }
            touched.clear();
        }
        WeightedProjection { mode, node_count: self.mode_count(mode), weights }
    }

    /// Verifies that the three internal views of the edge set agree.
    pub fn check_consistency(&self) -> Result<(), String> {
        let present = self.slot.iter().filter(|&&s| s != 0).count();
        if present != self.edges.len() {
            return Err(format!("slot table has {present} edges, edge vector {}", self.edges.len()));
        }
        for (pos, &(i, k)) in self.edges.iter().enumerate() {
            if self.slot[self.dyad_index(i, k)] as usize != pos + 1 {
                return Err(format!("slot of edge ({i},{k}) out of sync"));
            }
            if self.neighbors(i).binary_search(&k).is_err()
                || self.neighbors(k).binary_search(&i).is_err()
            {
                return Err(format!("edge ({i},{k}) missing from neighbour lists"));
            }
        }
        let deg1: usize = self.nodes(Mode::One).map(|v| self.degree(v)).sum();
        let deg2: usize = self.nodes(Mode::Two).map(|v| self.degree(v)).sum();
        if deg1 != self.edges.len() || deg2 != self.edges.len() {
            return Err(format!(
                "degree sums {deg1}/{deg2} disagree with {} edges",
                self.edges.len()
            ));
        }
        for list in &self.nbrs {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err("neighbour list not strictly sorted".into());
            }
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn debug_check(&self) {
        #[cfg(debug_assertions)]
        if let Err(e) = self.check_consistency() {
            panic!("network invariant broken: {e}");
        }
    }
}

fn insert_sorted(list: &mut Vec<usize>, v: usize) {
    if let Err(pos) = list.binary_search(&v) {
        list.insert(pos, v);
    }
}

fn remove_sorted(list: &mut Vec<usize>, v: usize) {
    if let Ok(pos) = list.binary_search(&v) {
        list.remove(pos);
    }
}

/// Size of the intersection of two strictly increasing slices.
#[inline]
pub fn sorted_intersection_count(a: &[usize], b: &[usize]) -> usize {
    let (mut x, mut y, mut n) = (0, 0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                x += 1;
                y += 1;
            }
        }
    }
    n
}

/// A one-mode projection: unordered node pairs weighted by the number of
/// distinct two-paths joining them. Pairs without a two-path are absent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedProjection {
    pub mode: Mode,
    pub node_count: usize,
    /// Keys are `(a, b)` with `a < b`, global node ids.
    pub weights: BTreeMap<(usize, usize), u32>,
}

impl WeightedProjection {
    pub fn weight(&self, a: usize, b: usize) -> u32 {
        let key = if a < b { (a, b) } else { (b, a) };
        self.weights.get(&key).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
