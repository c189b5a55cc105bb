//! `inspect`: human-readable view of a transcript.

use std::fmt::Write;

use fsmqa_core::transcript::RunTranscript;

fn clip(s: &str, full: bool) -> String {
    const MAX: usize = 160;
    let flat = s.replace('\n', " ");
    if full || flat.chars().count() <= MAX {
        return if full { s.to_string() } else { flat };
    }
    let cut: String = flat.chars().take(MAX).collect();
    format!("{cut}...")
}

pub fn render(t: &RunTranscript, full: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "record   {}", t.record_id);
    let _ = writeln!(out, "strategy {}  setting {:?}", t.strategy, t.params.setting);
    if let Some(state) = t.terminal_state {
        let _ = writeln!(out, "terminal {state:?}");
    }
    if let Some(reason) = &t.incomplete {
        let _ = writeln!(out, "INCOMPLETE: {reason}");
    }
    let _ = writeln!(out, "answer   {:?}", t.final_answer.as_deref().unwrap_or("<none>"));
    if let Some(o) = &t.output {
        let _ = writeln!(out, "format   strict={} tolerant={}", o.format_ok_strict, o.format_ok_tolerant);
        if let Some(facts) = &o.supporting_facts {
            let _ = writeln!(out, "facts    {}", serde_json::to_string(facts).unwrap_or_default());
        }
    }
    if t.summarizer_failed {
        out.push_str("summarizer failed; stage-one answer kept\n");
    }

    if !t.steps.is_empty() {
        out.push_str("\nsteps:\n");
    }
    for s in t.steps.iter().chain(&t.closing) {
        let _ = writeln!(out, "  {}. {} -> {} [{}]", s.index, s.subquestion, s.subanswer, s.paragraph_title);
    }

    out.push_str("\nentries:\n");
    for (i, e) in t.entries.iter().enumerate() {
        let state = e.state.map(|s| format!("{s:?}")).unwrap_or_else(|| "-".into());
        let role = e.role.map(|r| format!("{r:?}")).unwrap_or_else(|| "-".into());
        let _ = write!(out, "  #{i:<3} {state:<18} {role:<12} {:?}", e.parse_outcome);
        if e.revision_count > 0 {
            let _ = write!(out, " rev={}", e.revision_count);
        }
        if let Some(note) = &e.note {
            let _ = write!(out, " ({note})");
        }
        out.push('\n');
        if let Some(p) = &e.prompt {
            let _ = writeln!(out, "       > {}", clip(p, full));
        }
        if let Some(r) = &e.raw_response {
            let _ = writeln!(out, "       < {}", clip(r, full));
        }
        for x in &e.revisions {
            let _ = writeln!(out, "       revisor < {}", clip(&x.response, full));
        }
    }
    out
}
