//! Generalized-entanglement purity measures, delocalization diagnostics,
//! Hamming-resolved amplitude correlations, random-ensemble expectations,
//! and a disordered spin-chain experiment driver.

pub mod basis;
pub mod chain;
pub mod error;
pub mod hamming;
pub mod observables;
pub mod pauli;
pub mod random_expect;
pub mod report;
pub mod states;
