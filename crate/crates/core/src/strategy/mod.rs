//! Answering strategies, selected by name at runtime.

mod baseline;
mod react;
mod sgfsm;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dataset::QuestionRecord;
use crate::gateway::ModelCall;
use crate::prompt::PromptKit;
use crate::transcript::{RunParams, RunTranscript};

pub use baseline::{Baseline, BaselineKind};
pub use react::{ReAct, ReactAction, ReactTools};
pub use sgfsm::{run_fsm1, run_fsm2, SgFsm};

/// Everything a strategy needs for one record.
pub struct RunContext<'a> {
    pub kit: &'a PromptKit,
    pub model: &'a dyn ModelCall,
    pub params: RunParams,
}

pub trait Strategy: Send + Sync {
    fn name(&self) -> &str;
    /// Never fails: transport errors end up in `RunTranscript::incomplete`.
    fn run(&self, record: &QuestionRecord, ctx: &RunContext<'_>) -> RunTranscript;
}

#[derive(Clone, Default)]
pub struct StrategyRegistry {
    strategies: BTreeMap<String, Arc<dyn Strategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Baseline::new(BaselineKind::Direct)));
        r.register(Arc::new(Baseline::new(BaselineKind::CoT)));
        r.register(Arc::new(Baseline::new(BaselineKind::SPCoT)));
        r.register(Arc::new(ReAct));
        r.register(Arc::new(SgFsm::stage1()));
        r.register(Arc::new(SgFsm::stage2()));
        r
    }

    pub fn register(&mut self, strategy: Arc<dyn Strategy>) {
        self.strategies.insert(strategy.name().to_string(), strategy);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Strategy>> {
        self.strategies.get(&name.to_ascii_lowercase()).cloned()
    }

    pub fn names(&self) -> Vec<&str> {
        self.strategies.keys().map(String::as_str).collect()
    }
}

impl std::fmt::Debug for StrategyRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.strategies.keys()).finish()
    }
}
