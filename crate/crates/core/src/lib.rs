//! Decision-tree to prime-implicant compilation for flow classifiers.
//!
//! The pipeline loads a threshold tree, turns each decision path into an
//! interval rule, discretizes features into one-hot interval groups, compiles
//! the rules of one class into a multi-valued DNF and computes its prime
//! implicants together with those of the complement. A flow is explained by
//! the primes of the side its prediction falls on.

pub mod compile;
pub mod cube;
pub mod discretize;
pub mod error;
pub mod eval;
pub mod explain;
pub mod instance;
pub mod model;
pub mod primes;
pub mod scalar;
pub mod synth;

pub use compile::{complement, compile_rules, enumerate_onset, eval_point, parse_trits, render_trits, Dnf, OnSet};
pub use cube::{Cube, Layout};
pub use discretize::{
    combine_spaces, discretize_instance, map_features, merge_intervals, DiscretePoint, DiscreteSpace, FeatureAxis,
};
pub use error::{Error, Result};
pub use eval::{evaluate, load_flows, Dataset, MetricsReport, SchemaConfig};
pub use explain::{explain_instance, match_trits, render_human, Explanation, VerifiedRules};
pub use instance::FeatureSource;
pub use model::{extract_paths, load_tree, path_to_rule, predict, DecisionPath, Interval, Rule, RuleSet, TreeModel, TreeNode};
pub use primes::{brute_force_primes, minimal_cover, prime_implicants, verify_cover, PrimeImplicant, PrimeMode, PrimeSet, Side};
pub use scalar::Scalar;

/// Default ceiling on feasible points for exhaustive work.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

pub type TreeModel64 = TreeModel<f64>;
pub type TreeModel32 = TreeModel<f32>;
pub type RuleSet64 = RuleSet<f64>;
pub type Space64 = DiscreteSpace<f64>;
pub type Space32 = DiscreteSpace<f32>;
pub type Dnf64 = Dnf<f64>;
pub type PrimeSet64 = PrimeSet<f64>;
