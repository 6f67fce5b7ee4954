//! Numerical model of knowledge creation.
//!
//! Answers to questions on the real line follow a Brownian path; known
//! question–answer pairs shape Gaussian conjectures elsewhere. On top of that
//! sit the decision maker's value of knowledge, the researcher's optimal
//! (novelty, output) choice, the sequential evolution of knowledge, the
//! discounted comparison of "moonshot" first discoveries, and budget-constrained
//! funding of research.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod funding;
pub mod knowledge;
pub mod moonshot;
pub mod researcher;
pub mod solve;
pub mod specfun;
pub mod valuation;

pub use error::{Error, Result};
pub use evolution::{EvolutionTrace, Period, RunOptions, SearchInterval, TraceRecord};
pub use knowledge::{make_knowledge, Action, Area, AreaKind, Conjecture, KnowledgePoint, KnowledgeSet, Length};
pub use moonshot::{FirstChoice, MoonshotAssessment, NpvMode, Prop4Benchmark, Rho6Form};
pub use researcher::{EconomyParams, Interaction, Move, ResearchChoice, ResearcherCutoffs, Side};
pub use valuation::BenefitCutoffs;
