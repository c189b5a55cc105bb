use serde_json::Value;

use super::{str_field, DatasetKind, Paragraph, QuestionRecord, SupportingFact, Triple};

/// HotpotQA and 2WikiMultiHopQA share the `context` / `supporting_facts`
/// layout; 2Wiki adds `evidences` triples.
pub(super) fn decode(value: &Value, kind: DatasetKind) -> Result<Option<QuestionRecord>, String> {
    let id = value
        .get("_id")
        .or_else(|| value.get("id"))
        .and_then(Value::as_str)
        .ok_or("missing string field `_id`")?
        .to_string();
    let question = str_field(value, "question")?.to_string();
    let gold_answer = str_field(value, "answer")?.to_string();

    let context = value
        .get("context")
        .and_then(Value::as_array)
        .ok_or("missing array field `context`")?;
    let mut paragraphs = Vec::with_capacity(context.len());
    for (i, item) in context.iter().enumerate() {
        let pair = item
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| format!("context[{i}] is not a [title, sentences] pair"))?;
        let title = pair[0]
            .as_str()
            .ok_or_else(|| format!("context[{i}] title is not a string"))?;
        let sentences = pair[1]
            .as_array()
            .ok_or_else(|| format!("context[{i}] sentences is not an array"))?
            .iter()
            .map(|s| s.as_str().map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| format!("context[{i}] has a non-string sentence"))?;
        paragraphs.push(Paragraph {
            title: title.to_string(),
            sentences,
        });
    }

    let gold_supporting_facts = match value.get("supporting_facts") {
        None | Some(Value::Null) => None,
        Some(v) => Some(decode_facts(v)?),
    };
    let gold_evidences = match value.get("evidences") {
        None | Some(Value::Null) => None,
        Some(v) => Some(decode_triples(v)?),
    };
    if kind == DatasetKind::HotpotQA && gold_evidences.is_some() {
        log::debug!("record {id}: HotpotQA record carries evidences; keeping them");
    }

    let question_type = value
        .get("type")
        .and_then(Value::as_str)
        .map(str::to_string);
    let hop_count = match (kind, question_type.as_deref()) {
        (DatasetKind::TwoWiki, _) => Some(2),
        _ => None,
    };

    Ok(Some(QuestionRecord {
        id,
        dataset: kind,
        question,
        paragraphs,
        gold_answer,
        gold_supporting_facts,
        gold_evidences,
        gold_paragraphs: None,
        gold_decomposition: None,
        hop_count,
        question_type,
    }))
}

fn decode_facts(value: &Value) -> Result<Vec<SupportingFact>, String> {
    let items = value.as_array().ok_or("`supporting_facts` is not an array")?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let pair = item
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| format!("supporting_facts[{i}] is not a pair"))?;
            let title = pair[0]
                .as_str()
                .ok_or_else(|| format!("supporting_facts[{i}] title is not a string"))?;
            let idx = pair[1]
                .as_u64()
                .ok_or_else(|| format!("supporting_facts[{i}] index is not an integer"))?;
            Ok(SupportingFact(title.to_string(), idx as usize))
        })
        .collect()
}

fn decode_triples(value: &Value) -> Result<Vec<Triple>, String> {
    let items = value.as_array().ok_or("`evidences` is not an array")?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let parts = item
                .as_array()
                .filter(|a| a.len() == 3)
                .and_then(|a| {
                    a.iter()
                        .map(|v| v.as_str().map(str::to_string))
                        .collect::<Option<Vec<_>>>()
                })
                .ok_or_else(|| format!("evidences[{i}] is not a string triple"))?;
            let mut it = parts.into_iter();
            Ok(Triple(
                it.next().unwrap_or_default(),
                it.next().unwrap_or_default(),
                it.next().unwrap_or_default(),
            ))
        })
        .collect()
}
