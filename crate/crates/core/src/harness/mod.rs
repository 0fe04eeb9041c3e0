//! Corpus generation, experiments and reports.

pub mod corpus;
pub mod experiments;
pub mod generate;
pub mod report;
