//! Longitudinal linguistic diversity of individuals across many conversations.
//!
//! The crate loads conversation corpora, splits each individual's career into
//! life-stages, and measures how varied (within), how distant from peers
//! (between), and how distinctive (relative) their language is at each stage.
//! On top of those measures it offers trend tests against the tenured stage,
//! per-component analysis, population-level usage shifts, effectiveness
//! comparisons, a paired new-vs-tenured classification probe, and a synthetic
//! corpus generator with known ground truth.

pub mod cli;
pub mod corpus;
pub mod diversity;
pub mod effectiveness;
pub mod error;
pub mod langmodel;
pub mod lifestage;
pub mod probe;
pub mod report;
pub mod rng;
pub mod segmentation;
pub mod stats;
pub mod synthgen;
pub mod trends;
pub mod usage_shift;

pub use error::{Error, Result};
