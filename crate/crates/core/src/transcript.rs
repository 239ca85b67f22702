//! Transcript and confidence files.
//!
//! Transcripts: UTF-8, one utterance per line, `<utt_id>\t<transcript>`.
//! A line holding only an id is an empty transcript. Confidence files use
//! the same layout with space-separated scores in `[0, 1]`.

use std::collections::BTreeMap;

use thiserror::Error;

/// Utterance id to transcript, ordered by id.
pub type Transcripts = BTreeMap<String, String>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranscriptError {
    #[error("line {line}: empty utterance id")]
    MissingId { line: usize },
    #[error("line {line}: duplicate utterance id `{utt_id}`")]
    Duplicate { line: usize, utt_id: String },
    #[error("line {line}: bad confidence `{value}` (expected a number in [0, 1])")]
    BadConfidence { line: usize, value: String },
}

fn split_line(raw: &str) -> (&str, &str) {
    let line = raw.strip_suffix('\r').unwrap_or(raw);
    match line.split_once('\t') {
        Some((id, rest)) => (id.trim(), rest),
        None => (line.trim(), ""),
    }
}

pub fn parse_transcripts(text: &str) -> Result<Transcripts, TranscriptError> {
    let mut out = Transcripts::new();
    for (n, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line = n + 1;
        let (id, body) = split_line(raw);
        if id.is_empty() {
            return Err(TranscriptError::MissingId { line });
        }
        if out.insert(id.to_owned(), body.to_owned()).is_some() {
            return Err(TranscriptError::Duplicate {
                line,
                utt_id: id.to_owned(),
            });
        }
    }
    Ok(out)
}

pub fn write_transcripts(transcripts: &Transcripts) -> String {
    let mut out = String::new();
    for (id, text) in transcripts {
        out.push_str(id);
        out.push('\t');
        out.push_str(text);
        out.push('\n');
    }
    out
}

pub fn parse_confidences(text: &str) -> Result<BTreeMap<String, Vec<f64>>, TranscriptError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line = n + 1;
        let (id, body) = split_line(raw);
        if id.is_empty() {
            return Err(TranscriptError::MissingId { line });
        }
        let scores = body
            .split_whitespace()
            .map(|v| match v.parse::<f64>() {
                Ok(x) if (0.0..=1.0).contains(&x) => Ok(x),
                _ => Err(TranscriptError::BadConfidence {
                    line,
                    value: v.to_owned(),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if out.insert(id.to_owned(), scores).is_some() {
            return Err(TranscriptError::Duplicate {
                line,
                utt_id: id.to_owned(),
            });
        }
    }
    Ok(out)
}
