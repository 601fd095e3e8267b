//! Lifelong learning under a per-cell feature probing cost, for decision trees,
//! decision lists, monomials and sparse polynomials that share metafeatures.

pub mod costly;
pub mod distribution;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod monomial;
pub mod polynomial;
pub mod protocol;
pub mod rational;
pub mod streams;
pub mod tree;
pub mod tree_learn;

pub use costly::{report, BoolDataset, CostlyDataset, EvaluationReport, GridDataset, GridValue, Label, ProbeLedger};
pub use error::{Error, Result};
pub use rational::Q;
pub use tree::{GainFunction, IncompleteTree, MetafeatureSet, NodeId};
