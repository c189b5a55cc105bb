//! Finite-state-machine prompting for multi-hop question answering: the
//! transition engine, role prompts, output parsing, model gateway, dataset
//! loaders, baseline strategies and the evaluation suite.

pub mod dataset;
pub mod eval;
pub mod fsm;
pub mod gateway;
pub mod parser;
pub mod prompt;
pub mod strategy;
pub mod transcript;
