//! Constraint Handling Rules over λ-tree syntax, with nominal constants and
//! generic (`nabla`) quantification.

pub mod analysis;
pub mod engine;
pub mod records;
pub mod rules;
pub mod syntax;
pub mod term;
pub mod typeinfer;
pub mod unify;
