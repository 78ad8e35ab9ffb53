//! Bubble-tree extraction on atomic curvature-energy fields.
//!
//! A [`Scenario`] plants bubbles along a one-parameter family: bubble `b`
//! has center `c_b(eps) = c_parent(eps) + d0 dir eps^gamma` and scale
//! `lambda0 eps^beta`, and its energy is spread over atoms inside that
//! ball. [`build_tree`] runs the smallest-scale-first extraction loop on
//! the atoms at one `eps` and returns a [`BubbleTree`] whose structure can
//! be compared with the planted one.

mod extract;
mod neck;
mod planted;
mod scenario;
mod tree;

pub use extract::{
    ball_energy, build_tree, classify_pair, concentration_scale, group_exotic, lemma42_check, select_center, Bubble,
    ExtractionConfig, Group, Judge, Mode, Relation, TraceEvent, Trend,
};
pub use neck::{certify_neck, NeckCertificate};
pub use planted::{exotic_triple, nested_chain, planted_suite, random_scenario, run_suite, separable_pair, single, SuiteCase, SuiteReport};
pub use scenario::{dist, AtomField, Background, Ball, EnergyAtom, PlantedBubble, Point, Scenario};
pub use tree::{planted_shape, tree_isomorphic, BubbleNode, BubbleTree, NodeKind, Shape};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BubbleError {
    #[error("no curvature concentration: the remaining energy is below delta/2")]
    NoConcentration,
    #[error("inconsistent family: {0}")]
    InconsistentFamily(String),
    #[error("{count} extractions exceed the bound 2 Lambda / delta = {bound}")]
    IterationBoundExceeded { count: usize, bound: f64 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BubbleError>;
