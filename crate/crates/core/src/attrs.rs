//! Nodal attribute tables, one per mode.

use std::collections::BTreeMap;

use crate::error::AttrError;
use crate::graph::{BipartiteNetwork, Mode};

/// A single attribute column. Categorical levels are stored sorted; each
/// node carries the index of its level.
#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Categorical { levels: Vec<String>, codes: Vec<u32> },
    Numeric(Vec<f64>),
}

/// Attribute columns for every node of one mode. No missing values.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeTable {
    mode: Mode,
    first: usize,
    len: usize,
    columns: BTreeMap<String, Column>,
}

impl AttributeTable {
    /// Empty table for `len` nodes starting at global id `first`.
    pub fn new(mode: Mode, first: usize, len: usize) -> Self {
        AttributeTable { mode, first, len, columns: BTreeMap::new() }
    }

    pub fn for_network(net: &BipartiteNetwork, mode: Mode) -> Self {
        Self::new(mode, net.first_node(mode), net.mode_count(mode))
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn first_node(&self) -> usize {
        self.first
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn column(&self, name: &str) -> Result<&Column, AttrError> {
        self.columns
            .get(name)
            .ok_or_else(|| AttrError::MissingColumn { name: name.to_string(), mode: self.mode })
    }

    /// Adds a categorical column from one value per node, in node order.
    pub fn add_categorical<S: AsRef<str>>(
        &mut self,
        name: &str,
        values: &[S],
    ) -> Result<&mut Self, AttrError> {
        self.check_len(values.len())?;
        let mut levels: Vec<String> = values.iter().map(|v| v.as_ref().to_string()).collect();
        levels.sort();
        levels.dedup();
        let codes = values
            .iter()
            .map(|v| levels.binary_search_by(|l| l.as_str().cmp(v.as_ref())).unwrap() as u32)
            .collect();
        self.insert(name, Column::Categorical { levels, codes })
    }

    pub fn add_numeric(&mut self, name: &str, values: &[f64]) -> Result<&mut Self, AttrError> {
        self.check_len(values.len())?;
        self.insert(name, Column::Numeric(values.to_vec()))
    }

    fn check_len(&self, got: usize) -> Result<(), AttrError> {
        if got != self.len {
            return Err(AttrError::SizeMismatch { mode: self.mode, got, expected: self.len });
        }
        Ok(())
    }

    fn insert(&mut self, name: &str, col: Column) -> Result<&mut Self, AttrError> {
        if self.columns.contains_key(name) {
            return Err(AttrError::DuplicateColumn { name: name.to_string() });
        }
        self.columns.insert(name.to_string(), col);
        Ok(self)
    }

    /// Sorted levels and per-node level codes of a categorical column.
    pub fn categorical(&self, name: &str) -> Result<(&[String], &[u32]), AttrError> {
        match self.column(name)? {
            Column::Categorical { levels, codes } => Ok((levels, codes)),
            Column::Numeric(_) => Err(AttrError::NotCategorical { name: name.to_string() }),
        }
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64], AttrError> {
        match self.column(name)? {
            Column::Numeric(v) => Ok(v),
            Column::Categorical { .. } => Err(AttrError::NotNumeric { name: name.to_string() }),
        }
    }

    pub fn level_index(&self, name: &str, level: &str) -> Result<u32, AttrError> {
        let (levels, _) = self.categorical(name)?;
        levels
            .binary_search_by(|l| l.as_str().cmp(level))
            .map(|i| i as u32)
            .map_err(|_| AttrError::UnknownLevel { name: name.to_string(), level: level.to_string() })
    }

    /// Level code of a global node id.
    pub fn code_of(&self, name: &str, node: usize) -> Result<u32, AttrError> {
        let (_, codes) = self.categorical(name)?;
        self.local(node).map(|l| codes[l])
    }

    fn local(&self, node: usize) -> Result<usize, AttrError> {
        if node < self.first || node >= self.first + self.len {
            return Err(AttrError::ForeignNode { node, mode: self.mode });
        }
        Ok(node - self.first)
    }
}

/// Attribute tables for both modes of a network.
#[derive(Clone, Debug, PartialEq)]
pub struct Attributes {
    pub one: AttributeTable,
    pub two: AttributeTable,
}

impl Attributes {
    /// Attribute-free tables sized for `net`.
    pub fn empty_for(net: &BipartiteNetwork) -> Self {
        Attributes {
            one: AttributeTable::for_network(net, Mode::One),
            two: AttributeTable::for_network(net, Mode::Two),
        }
    }

    pub fn new(one: AttributeTable, two: AttributeTable) -> Self {
        Attributes { one, two }
    }

    pub fn get(&self, mode: Mode) -> &AttributeTable {
        match mode {
            Mode::One => &self.one,
            Mode::Two => &self.two,
        }
    }

    pub fn get_mut(&mut self, mode: Mode) -> &mut AttributeTable {
        match mode {
            Mode::One => &mut self.one,
            Mode::Two => &mut self.two,
        }
    }
}

/// Edges into `hub` from nodes other than `focal` that share `focal`'s
/// level of `column`. `focal` must belong to the table's mode and `hub` to
/// the opposite one; with a mode-1 table this is the count `u(i, k)`.
pub fn matching_edges_at(
    net: &BipartiteNetwork,
    attrs: &AttributeTable,
    column: &str,
    focal: usize,
    hub: usize,
) -> Result<usize, crate::error::ModelError> {
    let (_, codes) = attrs.categorical(column)?;
    let mode = attrs.mode();
    if net.mode_of(focal)? != mode {
        return Err(crate::error::GraphError::WrongMode { node: focal, expected: mode }.into());
    }
    if net.mode_of(hub)? != mode.other() {
        return Err(crate::error::GraphError::WrongMode { node: hub, expected: mode.other() }.into());
    }
    let first = attrs.first_node();
    let c = codes[focal - first];
    Ok(net
        .neighbors(hub)
        .iter()
        .filter(|&&j| j != focal && codes[j - first] == c)
        .count())
}
