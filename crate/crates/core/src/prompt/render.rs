use std::fmt::Write;

use super::{PromptError, PromptKit, RenderedPrompt, Role, Setting, SlotMap};
use crate::dataset::Paragraph;
use crate::transcript::SubQuestionStep;

/// Candidate paragraph block: a `Title:` line, then one line per sentence
/// prefixed with its zero-based index; paragraphs separated by a blank line.
pub fn format_paragraphs<'a>(paragraphs: impl IntoIterator<Item = &'a Paragraph>) -> String {
    let mut out = String::new();
    for (n, p) in paragraphs.into_iter().enumerate() {
        if n > 0 {
            out.push_str("\n\n");
        }
        let _ = write!(out, "Title: {}", p.title);
        for (i, s) in p.sentences.iter().enumerate() {
            let _ = write!(out, "\n{i}: {}", s.trim());
        }
    }
    out
}

pub struct SummarizerInput<'a> {
    pub question: &'a str,
    pub stage1_answer: &'a str,
    pub steps: &'a [SubQuestionStep],
    /// Candidate paragraphs used to expand step titles into text.
    pub paragraphs: &'a [Paragraph],
}

impl SummarizerInput<'_> {
    fn paragraph(&self, title: &str) -> Option<&Paragraph> {
        self.paragraphs.iter().find(|p| p.title == title).or_else(|| {
            let wanted = title.trim().to_lowercase();
            self.paragraphs
                .iter()
                .find(|p| p.title.trim().to_lowercase() == wanted)
        })
    }
}

/// Renders the stage-two prompt from the stage-one steps.
pub fn render_summarizer(
    kit: &PromptKit,
    setting: Setting,
    input: &SummarizerInput<'_>,
) -> Result<RenderedPrompt, PromptError> {
    if input.steps.is_empty() {
        return Err(PromptError::EmptySteps);
    }
    let mut slots = SlotMap::new().with("question", input.question);
    match setting {
        Setting::S1 => {
            let mut block = String::new();
            for (k, step) in input.steps.iter().enumerate() {
                let _ = writeln!(block, "Sub-question {}: {}", k + 1, step.subquestion);
                let paragraph = input
                    .paragraph(&step.paragraph_title)
                    .map(Paragraph::text)
                    .unwrap_or_else(|| step.paragraph_title.clone());
                let _ = writeln!(block, "    Paragraph: {paragraph}");
                if let Some(ev) = &step.evidence {
                    let _ = writeln!(block, "    Evidence: {ev}");
                }
                let _ = writeln!(block, "    Sub-answer: {}", step.subanswer);
            }
            let _ = write!(block, "Answer: {}", input.stage1_answer);
            slots.insert("steps", block);
        }
        Setting::S2 => {
            let mut seen: Vec<&Paragraph> = Vec::new();
            for step in input.steps {
                if let Some(p) = input.paragraph(&step.paragraph_title) {
                    if !seen.iter().any(|q| q.title == p.title) {
                        seen.push(p);
                    }
                }
            }
            slots.insert("paragraphs", format!("\n{}", format_paragraphs(seen)));
            let mut block = String::new();
            for (k, step) in input.steps.iter().enumerate() {
                let _ = write!(block, "\nSub-question {}: {}", k + 1, step.subquestion);
                if let Some(ev) = &step.evidence {
                    let _ = write!(block, "\nEvidence: {ev}");
                }
                let _ = write!(block, "\nSub-answer: {}", step.subanswer);
            }
            let _ = write!(block, "\nAnswer: {}", input.stage1_answer);
            slots.insert("steps", block);
        }
    }
    kit.render(Role::Summarizer, setting, &slots)
}
