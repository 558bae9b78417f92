use std::path::PathBuf;

use thiserror::Error;

use crate::graph::Mode;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("dyad ({i},{k}) out of range for n1={n1}, n2={n2}")]
    DyadOutOfRange { i: usize, k: usize, n1: usize, n2: usize },
    #[error("dyad ({i},{k}) is not a mode-1 x mode-2 pair (mode-1 nodes are 1..={n1})")]
    ModeViolation { i: usize, k: usize, n1: usize },
    #[error("node {node} out of range 1..={n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("node {node} paired with itself")]
    SameNode { node: usize },
    #[error("node {node} is not a mode-{expected} node")]
    WrongMode { node: usize, expected: Mode },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttrError {
    #[error("no attribute column `{name}` on mode {mode}")]
    MissingColumn { name: String, mode: Mode },
    #[error("attribute `{name}` is numeric, a categorical column is required")]
    NotCategorical { name: String },
    #[error("attribute `{name}` is categorical, a numeric column is required")]
    NotNumeric { name: String },
    #[error("attribute `{name}` has no level `{level}`")]
    UnknownLevel { name: String, level: String },
    #[error("attribute table for mode {mode} is missing node {node}")]
    MissingNode { mode: Mode, node: usize },
    #[error("node {node} listed twice in attribute table")]
    DuplicateNode { node: usize },
    #[error("node {node} does not belong to mode {mode}")]
    ForeignNode { node: usize, mode: Mode },
    #[error("attribute table has {got} nodes, the network has {expected} mode-{mode} nodes")]
    SizeMismatch { mode: Mode, got: usize, expected: usize },
    #[error("duplicate attribute column `{name}`")]
    DuplicateColumn { name: String },
    #[error("value `{value}` in column `{name}` is not a number")]
    BadNumber { name: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("formula error at column {pos}: {message}")]
pub struct FormulaError {
    /// 1-based character column.
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Attr(#[from] AttrError),
    #[error("{term}: exponent {value} outside [0, 1]")]
    ExponentRange { term: String, value: f64 },
    #[error("{term}: no alpha or beta exponent bound")]
    UnboundExponent { term: String },
    #[error("{term}: keep level `{level}` not a level of `{attr}`")]
    KeepLevel { term: String, attr: String, level: String },
    #[error("duplicate statistic name `{0}`")]
    DuplicateName(String),
    #[error("{term}: invalid argument: {message}")]
    BadArgument { term: String, message: String },
    #[error("parameter vector has length {got}, model dimension is {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("attribute table for mode {mode} was built for {got} nodes but network has {expected}")]
    AttrSize { mode: Mode, got: usize, expected: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("estimates not finite: complete separation along direction {direction:?}")]
    Separation { direction: Vec<f64> },
    #[error("observed statistics outside the sampled convex hull after {anchors} anchors")]
    HullViolation { anchors: usize },
    #[error("no convergence after {iterations} iterations (last step norm {step_norm:.3e})")]
    NonConvergence { iterations: usize, step_norm: f64 },
    #[error("information matrix is singular; statistics {0:?} are (nearly) constant or collinear")]
    Singular(Vec<String>),
    #[error("degenerate sample: statistics {0:?} nearly constant across draws")]
    Degenerate(Vec<String>),
    #[error("profile template needs exactly one nodematch term, found {0}")]
    ProfileTemplate(usize),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{dyads} dyads exceed the exact-enumeration cap of {cap}")]
    TooLarge { dyads: usize, cap: usize },
    #[error("MLE does not exist: observed statistics on the boundary, diverging along {direction:?}")]
    NonFiniteMle { direction: Vec<f64> },
    #[error("exact MLE optimisation failed to converge (gradient norm {0:.3e})")]
    NonConvergence(f64),
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Graph { path: PathBuf, source: GraphError },
    #[error("{path}: {source}")]
    Attr { path: PathBuf, source: AttrError },
}
