//! Engine, intent abstraction and Monte Carlo CFR trainer for a two-player card game built
//! around bounded one-sided response phases (rent demands that the opponent alone resolves).

pub mod abstraction;
pub mod cfr;
pub mod engine;
pub mod orchestrator;
pub mod selectors;

#[cfg(test)]
mod testutil;
