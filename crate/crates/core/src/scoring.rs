//! Character error rate.
//!
//! Transcripts are tokenised into grapheme clusters with whitespace removed,
//! then aligned by unit-cost Levenshtein distance. When several minimum
//! alignments exist the reported split prefers substitutions, then
//! insertions, then deletions; the total is unaffected.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

use crate::transcript::Transcripts;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("empty reference with {0} hypothesis tokens: CER undefined")]
    EmptyReference(usize),
    #[error("token {0:?} is empty or whitespace")]
    InvalidToken(String),
}

/// Ordered, non-empty, non-whitespace tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Result<Self, ScoringError> {
        if let Some(bad) = tokens.iter().find(|t| t.trim().is_empty()) {
            return Err(ScoringError::InvalidToken(bad.clone()));
        }
        Ok(Self(tokens))
    }

    pub fn from_strs(tokens: &[&str]) -> Result<Self, ScoringError> {
        Self::new(tokens.iter().map(|t| (*t).to_owned()).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenates the tokens without separators.
    pub fn concat(&self) -> String {
        self.0.concat()
    }
}

impl TryFrom<Vec<String>> for TokenSeq {
    type Error = ScoringError;

    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<TokenSeq> for Vec<String> {
    fn from(t: TokenSeq) -> Self {
        t.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// Strips whitespace and splits the rest into grapheme clusters.
pub fn tokenize(text: &str) -> TokenSeq {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    TokenSeq(compact.graphemes(true).map(str::to_owned).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CerReport {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
    pub hyp_len: usize,
}

impl CerReport {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// `(S + D + I) / ref_len`; zero when both sides are empty.
    pub fn cer(&self) -> Result<f64, ScoringError> {
        match (self.ref_len, self.hyp_len) {
            (0, 0) => Ok(0.0),
            (0, n) => Err(ScoringError::EmptyReference(n)),
            (r, _) => Ok(self.errors() as f64 / r as f64),
        }
    }

    pub fn accumulate(&mut self, other: &CerReport) {
        self.substitutions += other.substitutions;
        self.deletions += other.deletions;
        self.insertions += other.insertions;
        self.ref_len += other.ref_len;
        self.hyp_len += other.hyp_len;
    }
}

pub fn cer(reference: &TokenSeq, hypothesis: &TokenSeq) -> CerReport {
    edit_counts(reference.tokens(), hypothesis.tokens())
}

/// Minimum unit-cost alignment counts between any two sequences.
pub fn edit_counts<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> CerReport {
    let (n, m) = (reference.len(), hypothesis.len());
    let width = m + 1;
    let mut dist = vec![0usize; (n + 1) * width];
    for (j, d) in dist[..width].iter_mut().enumerate() {
        *d = j;
    }
    for i in 1..=n {
        dist[i * width] = i;
        for j in 1..=m {
            let diag = dist[(i - 1) * width + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let ins = dist[i * width + j - 1] + 1;
            let del = dist[(i - 1) * width + j] + 1;
            dist[i * width + j] = diag.min(ins).min(del);
        }
    }

    let mut report = CerReport {
        ref_len: n,
        hyp_len: m,
        ..CerReport::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[i * width + j];
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hypothesis[j - 1];
            if dist[(i - 1) * width + j - 1] + usize::from(!same) == here {
                report.substitutions += usize::from(!same);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && dist[i * width + j - 1] + 1 == here {
            report.insertions += 1;
            j -= 1;
        } else {
            report.deletions += 1;
            i -= 1;
        }
    }
    report
}

/// Per-utterance and pooled counts over a set of transcripts.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScore {
    /// Sorted by utterance id.
    pub rows: Vec<(String, CerReport)>,
    pub total: CerReport,
    /// Utterances only the reference has.
    pub missing_in_hyp: Vec<String>,
    /// Utterances only the hypothesis has.
    pub missing_in_ref: Vec<String>,
}

impl CorpusScore {
    pub fn has_coverage_errors(&self) -> bool {
        !self.missing_in_hyp.is_empty() || !self.missing_in_ref.is_empty()
    }

    /// TSV with a header, one row per utterance and a final `TOTAL` row.
    /// The total CER divides pooled counts.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("utt_id\tref_len\thyp_len\tsub\tdel\tins\terrors\tcer\n");
        let mut line = |id: &str, r: &CerReport| {
            let ratio = r.cer().map_or_else(|_| "NA".to_owned(), |c| format!("{c:.6}"));
            out.push_str(&format!(
                "{id}\t{}\t{}\t{}\t{}\t{}\t{}\t{ratio}\n",
                r.ref_len,
                r.hyp_len,
                r.substitutions,
                r.deletions,
                r.insertions,
                r.errors()
            ));
        };
        for (id, r) in &self.rows {
            line(id, r);
        }
        line("TOTAL", &self.total);
        out
    }
}

/// Scores every utterance present in both maps.
pub fn score_corpus(references: &Transcripts, hypotheses: &Transcripts) -> CorpusScore {
    let mut rows = Vec::new();
    let mut total = CerReport::default();
    let mut missing_in_hyp = Vec::new();
    for (utt, ref_text) in references {
        match hypotheses.get(utt) {
            Some(hyp_text) => {
                let r = cer(&tokenize(ref_text), &tokenize(hyp_text));
                total.accumulate(&r);
                rows.push((utt.clone(), r));
            }
            None => missing_in_hyp.push(utt.clone()),
        }
    }
    let missing_in_ref = hypotheses
        .keys()
        .filter(|k| !references.contains_key(*k))
        .cloned()
        .collect();
    CorpusScore {
        rows,
        total,
        missing_in_hyp,
        missing_in_ref,
    }
}
