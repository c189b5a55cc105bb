//! Role prompts for the state machine and the baseline strategies.
//!
//! Templates are plain text with `{{slot}}` markers. The built-in set is
//! compiled in from `templates/`; a directory with the same file names can
//! override any of them at runtime. File lookup for a (role, setting) pair
//! tries `<role>.s1.txt` / `<role>.s2.txt` first and then `<role>.txt`.

mod render;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use render::{format_paragraphs, render_summarizer, SummarizerInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    /// Answer only.
    #[serde(rename = "1")]
    S1,
    /// Answer plus supporting facts and evidence triples.
    #[serde(rename = "2")]
    S2,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::S1, Setting::S2];

    fn suffix(self) -> &'static str {
        match self {
            Setting::S1 => "s1",
            Setting::S2 => "s2",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::S1 => f.write_str("1"),
            Setting::S2 => f.write_str("2"),
        }
    }
}

impl FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "s1" => Ok(Setting::S1),
            "2" | "s2" => Ok(Setting::S2),
            other => Err(format!("unknown setting `{other}` (expected 1 or 2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Decomposer,
    Searcher,
    Revisor,
    Terminator,
    /// Alternative terminator asking whether question and sub-question are
    /// semantically identical.
    TerminatorIdentical,
    Summarizer,
    Direct,
    CoT,
    SPCoT,
    ReAct,
}

impl Role {
    pub const ALL: [Role; 10] = [
        Role::Decomposer,
        Role::Searcher,
        Role::Revisor,
        Role::Terminator,
        Role::TerminatorIdentical,
        Role::Summarizer,
        Role::Direct,
        Role::CoT,
        Role::SPCoT,
        Role::ReAct,
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            Role::Decomposer => "decomposer",
            Role::Searcher => "searcher",
            Role::Revisor => "revisor",
            Role::Terminator => "terminator",
            Role::TerminatorIdentical => "terminator-identical",
            Role::Summarizer => "summarizer",
            Role::Direct => "direct",
            Role::CoT => "cot",
            Role::SPCoT => "spcot",
            Role::ReAct => "react",
        }
    }

    /// The slots each role's templates are expected to reference.
    pub fn slots(self, setting: Setting) -> &'static [&'static str] {
        match (self, setting) {
            (Role::Decomposer, _) => &["question", "history"],
            (Role::Searcher, _) => &["subquestion", "paragraphs"],
            (Role::Revisor, _) => &["illegal_text"],
            (Role::Terminator, _) => &["question", "subquestion", "history"],
            (Role::TerminatorIdentical, _) => &["question", "subquestion"],
            (Role::Summarizer, Setting::S1) => &["question", "steps"],
            (Role::Summarizer, Setting::S2) => &["paragraphs", "steps", "question"],
            (Role::Direct | Role::CoT | Role::SPCoT, _) => &["paragraphs", "question"],
            (Role::ReAct, _) => &["paragraphs", "question", "history"],
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_stem())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("missing slot `{0}`")]
    MissingSlot(String),
    #[error("no template for role {role} in setting {setting}")]
    UnknownRoleSetting { role: Role, setting: Setting },
    #[error("summarizer needs at least one sub-question step")]
    EmptySteps,
    #[error("template {name}: {reason}")]
    BadTemplate { name: String, reason: String },
    #[error("cannot read template directory: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub role: Role,
    pub setting: Setting,
    pub body: String,
}

impl PromptTemplate {
    /// Slot names referenced in the body, in first-seen order.
    pub fn slots(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for seg in parse_segments(&self.body) {
            if let Segment::Slot(name) = seg {
                if !seen.iter().any(|s: &String| s == name) {
                    seen.push(name.to_string());
                }
            }
        }
        seen
    }

    pub fn render(&self, context: &SlotMap) -> Result<RenderedPrompt, PromptError> {
        let mut text = String::with_capacity(self.body.len() + 256);
        for seg in parse_segments(&self.body) {
            match seg {
                Segment::Text(t) => text.push_str(t),
                Segment::Slot(name) => {
                    let value = context
                        .get(name)
                        .ok_or_else(|| PromptError::MissingSlot(name.to_string()))?;
                    text.push_str(value);
                }
            }
        }
        Ok(RenderedPrompt::new(self.role, text))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub role: Role,
    pub text: String,
    pub token_estimate: usize,
}

impl RenderedPrompt {
    pub fn new(role: Role, text: String) -> Self {
        let token_estimate = text.split_whitespace().count();
        Self {
            role,
            text,
            token_estimate,
        }
    }
}

/// Slot values for rendering. Supplying an empty string is allowed; leaving
/// a referenced slot out is an error.
#[derive(Debug, Clone, Default)]
pub struct SlotMap(HashMap<String, String>);

impl SlotMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: impl Into<String>) -> Self {
        self.0.insert(name.to_string(), value.into());
        self
    }

    pub fn insert(&mut self, name: &str, value: impl Into<String>) {
        self.0.insert(name.to_string(), value.into());
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.get(name).map(String::as_str)
    }
}

enum Segment<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn is_slot_name(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase() || b == b'_')
}

fn parse_segments(body: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find("{{") {
        let after = &rest[open + 2..];
        match after.find("}}") {
            Some(close) if is_slot_name(&after[..close]) => {
                if open > 0 {
                    out.push(Segment::Text(&rest[..open]));
                }
                out.push(Segment::Slot(&after[..close]));
                rest = &after[close + 2..];
            }
            _ => {
                out.push(Segment::Text(&rest[..open + 2]));
                rest = after;
            }
        }
    }
    if !rest.is_empty() {
        out.push(Segment::Text(rest));
    }
    out
}

const BUILTIN: &[(&str, &str)] = &[
    ("decomposer.txt", include_str!("../../templates/decomposer.txt")),
    ("searcher.s1.txt", include_str!("../../templates/searcher.s1.txt")),
    ("searcher.s2.txt", include_str!("../../templates/searcher.s2.txt")),
    ("revisor.txt", include_str!("../../templates/revisor.txt")),
    ("terminator.txt", include_str!("../../templates/terminator.txt")),
    (
        "terminator-identical.txt",
        include_str!("../../templates/terminator-identical.txt"),
    ),
    ("summarizer.s1.txt", include_str!("../../templates/summarizer.s1.txt")),
    ("summarizer.s2.txt", include_str!("../../templates/summarizer.s2.txt")),
    ("direct.s1.txt", include_str!("../../templates/direct.s1.txt")),
    ("direct.s2.txt", include_str!("../../templates/direct.s2.txt")),
    ("cot.s1.txt", include_str!("../../templates/cot.s1.txt")),
    ("cot.s2.txt", include_str!("../../templates/cot.s2.txt")),
    ("spcot.txt", include_str!("../../templates/spcot.txt")),
    ("react.txt", include_str!("../../templates/react.txt")),
];

fn candidate_names(role: Role, setting: Setting) -> [String; 2] {
    [
        format!("{}.{}.txt", role.file_stem(), setting.suffix()),
        format!("{}.txt", role.file_stem()),
    ]
}

/// The full template set, keyed by (role, setting).
#[derive(Debug, Clone)]
pub struct PromptKit {
    templates: HashMap<(Role, Setting), PromptTemplate>,
}

impl Default for PromptKit {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptKit {
    pub fn builtin() -> Self {
        let files: HashMap<&str, &str> = BUILTIN.iter().copied().collect();
        Self::assemble(|name| files.get(name).map(|s| s.to_string()))
            .expect("built-in templates are well formed")
    }

    /// Built-ins overridden by any matching files found in `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, PromptError> {
        if !dir.is_dir() {
            return Err(PromptError::Io(format!("{} is not a directory", dir.display())));
        }
        let files: HashMap<&str, &str> = BUILTIN.iter().copied().collect();
        Self::assemble(|name| {
            let path = dir.join(name);
            match std::fs::read_to_string(&path) {
                Ok(text) => {
                    log::info!("template override {}", path.display());
                    Some(text)
                }
                Err(_) => files.get(name).map(|s| s.to_string()),
            }
        })
    }

    fn assemble(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, PromptError> {
        let mut templates = HashMap::new();
        for role in Role::ALL {
            for setting in Setting::ALL {
                let body = candidate_names(role, setting)
                    .iter()
                    .find_map(|name| lookup(name));
                let Some(body) = body else { continue };
                let template = PromptTemplate {
                    role,
                    setting,
                    body: body.trim_end_matches(['\n', '\r']).to_string(),
                };
                let documented: BTreeSet<&str> = role.slots(setting).iter().copied().collect();
                let found = template.slots();
                let found: BTreeSet<&str> = found.iter().map(String::as_str).collect();
                if documented != found {
                    return Err(PromptError::BadTemplate {
                        name: format!("{}.{}", role.file_stem(), setting.suffix()),
                        reason: format!("slots {found:?} differ from expected {documented:?}"),
                    });
                }
                templates.insert((role, setting), template);
            }
        }
        Ok(Self { templates })
    }

    pub fn template(&self, role: Role, setting: Setting) -> Result<&PromptTemplate, PromptError> {
        self.templates
            .get(&(role, setting))
            .ok_or(PromptError::UnknownRoleSetting { role, setting })
    }

    pub fn render(&self, role: Role, setting: Setting, context: &SlotMap) -> Result<RenderedPrompt, PromptError> {
        self.template(role, setting)?.render(context)
    }

    pub fn revisor(&self, illegal_text: &str) -> RenderedPrompt {
        self.render(
            Role::Revisor,
            Setting::S1,
            &SlotMap::new().with("illegal_text", illegal_text),
        )
        .expect("revisor template has only the illegal_text slot")
    }
}
