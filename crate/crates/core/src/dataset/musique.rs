use serde_json::Value;

use super::{str_field, DatasetKind, GoldHop, Paragraph, QuestionRecord};

/// Splits running text into sentences.
///
/// A boundary is a `.`, `!` or `?` followed by whitespace and then an
/// uppercase letter. The punctuation stays with the preceding sentence and
/// the whitespace is dropped. Text without a boundary is one sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            if j > i + 1 && j < chars.len() && chars[j].1.is_uppercase() {
                let end = pos + c.len_utf8();
                let sentence = text[start..end].trim();
                if !sentence.is_empty() {
                    sentences.push(sentence.to_string());
                }
                start = chars[j].0;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() || sentences.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

pub(super) fn decode(value: &Value, include_unanswerable: bool) -> Result<Option<QuestionRecord>, String> {
    let id = str_field(value, "id")?.to_string();
    let answerable = value.get("answerable").and_then(Value::as_bool).unwrap_or(true);
    if !answerable && !include_unanswerable {
        log::debug!("skipping unanswerable record {id}");
        return Ok(None);
    }
    let question = str_field(value, "question")?.to_string();
    let gold_answer = str_field(value, "answer")?.to_string();

    let raw_paragraphs = value
        .get("paragraphs")
        .and_then(Value::as_array)
        .ok_or("missing array field `paragraphs`")?;
    let mut paragraphs = Vec::with_capacity(raw_paragraphs.len());
    let mut by_idx = Vec::with_capacity(raw_paragraphs.len());
    let mut gold_paragraphs = Vec::new();
    for (pos, p) in raw_paragraphs.iter().enumerate() {
        let title = str_field(p, "title").map_err(|e| format!("paragraphs[{pos}]: {e}"))?;
        let text = str_field(p, "paragraph_text").map_err(|e| format!("paragraphs[{pos}]: {e}"))?;
        let idx = p.get("idx").and_then(Value::as_u64).unwrap_or(pos as u64);
        if p.get("is_supporting").and_then(Value::as_bool).unwrap_or(false)
            && !gold_paragraphs.iter().any(|t| t == title)
        {
            gold_paragraphs.push(title.to_string());
        }
        by_idx.push((idx, title.to_string()));
        paragraphs.push(Paragraph {
            title: title.to_string(),
            sentences: split_sentences(text),
        });
    }

    let gold_decomposition = match value.get("question_decomposition").and_then(Value::as_array) {
        None => None,
        Some(hops) => {
            let mut decoded = Vec::with_capacity(hops.len());
            for (i, hop) in hops.iter().enumerate() {
                let q = str_field(hop, "question").map_err(|e| format!("question_decomposition[{i}]: {e}"))?;
                let a = str_field(hop, "answer").map_err(|e| format!("question_decomposition[{i}]: {e}"))?;
                let paragraph_title = hop
                    .get("paragraph_support_idx")
                    .and_then(Value::as_u64)
                    .and_then(|want| by_idx.iter().find(|(idx, _)| *idx == want))
                    .map(|(_, title)| title.clone());
                decoded.push(GoldHop {
                    question: q.to_string(),
                    answer: a.to_string(),
                    paragraph_title,
                });
            }
            Some(decoded)
        }
    };

    let hop_count = hop_count_from_id(&id)
        .or_else(|| gold_decomposition.as_ref().map(|d| d.len() as u32));

    Ok(Some(QuestionRecord {
        question_type: id.split("__").next().map(str::to_string),
        id,
        dataset: DatasetKind::Musique,
        question,
        paragraphs,
        gold_answer,
        gold_supporting_facts: None,
        gold_evidences: None,
        gold_paragraphs: if gold_paragraphs.is_empty() {
            None
        } else {
            Some(gold_paragraphs)
        },
        gold_decomposition,
        hop_count,
    }))
}

fn hop_count_from_id(id: &str) -> Option<u32> {
    let prefix = id.split("__").next()?;
    let pos = prefix.find("hop")?;
    prefix[..pos].parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn splits_on_punctuation_space_uppercase() {
        let s = split_sentences("The film was released in 1932. It starred Boris Karloff! Was it good? yes.");
        assert_eq!(
            s,
            vec![
                "The film was released in 1932.",
                "It starred Boris Karloff!",
                "Was it good? yes."
            ]
        );
    }

    #[test]
    fn keeps_abbreviations_before_lowercase_and_digits() {
        assert_eq!(split_sentences("Born c. 1900 in St. louis."), vec!["Born c. 1900 in St. louis."]);
        assert_eq!(split_sentences("Version 2.5 shipped."), vec!["Version 2.5 shipped."]);
    }

    #[test]
    fn empty_text_is_single_empty_sentence() {
        assert_eq!(split_sentences(""), vec![String::new()]);
    }

    #[test]
    fn unicode_boundaries() {
        assert_eq!(split_sentences("Él llegó. Ñandú vive."), vec!["Él llegó.", "Ñandú vive."]);
    }

    #[test]
    fn hop_prefix() {
        assert_eq!(hop_count_from_id("2hop__1_2"), Some(2));
        assert_eq!(hop_count_from_id("3hop1__1_2_3"), Some(3));
        assert_eq!(hop_count_from_id("weird"), None);
    }

    #[test]
    fn unanswerable_filtered_by_default() {
        let v = json!({"id": "2hop__1", "question": "q", "answer": "a", "answerable": false,
            "paragraphs": [{"idx": 0, "title": "T", "paragraph_text": "Text.", "is_supporting": true}]});
        assert!(decode(&v, false).unwrap().is_none());
        assert!(decode(&v, true).unwrap().is_some());
    }

    #[test]
    fn decomposition_titles_follow_support_idx() {
        let v = json!({"id": "2hop__1", "question": "q", "answer": "a",
            "paragraphs": [
                {"idx": 0, "title": "T0", "paragraph_text": "Zero.", "is_supporting": false},
                {"idx": 1, "title": "T1", "paragraph_text": "One. Two.", "is_supporting": true}],
            "question_decomposition": [{"id": 1, "question": "who?", "answer": "x", "paragraph_support_idx": 1}]});
        let r = decode(&v, false).unwrap().unwrap();
        assert_eq!(r.gold_paragraphs.as_deref(), Some(&["T1".to_string()][..]));
        let hop = &r.gold_decomposition.unwrap()[0];
        assert_eq!(hop.paragraph_title.as_deref(), Some("T1"));
        assert_eq!(r.paragraphs[1].sentences, vec!["One.", "Two."]);
        assert_eq!(r.hop_count, Some(2));
    }
}
