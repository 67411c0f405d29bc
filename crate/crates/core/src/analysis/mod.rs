//! Static and dynamic analyses: variance of states, critical pairs and local
//! confluence, and the ranking condition for termination.

pub mod confluence;
pub mod critical;
pub mod ranking;
pub mod variant;

pub use confluence::{check_local_confluence, joinable, ConfluenceReport, Joinability, Verdict};
pub use critical::{critical_pairs, CriticalPair, GuardStatus, Overlap};
pub use ranking::{check_ranking, LevelMapping, RankingReport};
pub use variant::{is_variant, Variance, VariantWitness};
