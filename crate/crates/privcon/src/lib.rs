//! Privacy-preserving average consensus: gadget augmentation of agent
//! networks, exact observability audits and consensus simulation.

pub mod augment;
pub mod catalog;
pub mod cli;
pub mod exactla;
pub mod fixtures;
pub mod netgraph;
pub mod privacy;
pub mod simulate;
