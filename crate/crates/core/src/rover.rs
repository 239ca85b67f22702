//! Recognizer output voting error reduction (ROVER).
//!
//! Hypotheses for one utterance are folded one at a time into a word
//! transition network (WTN): an ordered list of slots, each holding the
//! competing tokens (and the NULL token `@` for "no token here") with a
//! count and a confidence sum. Each merge is a minimum-cost dynamic
//! programming alignment of the slot sequence against the new token
//! sequence:
//!
//! | step | cost | effect |
//! |------|------|--------|
//! | token already in slot | 0 | count += 1 |
//! | token not in slot | 1 | token added to slot |
//! | slot skipped | 1 | NULL count += 1 |
//! | token matches no slot | 1 | new slot `{@: n, token: 1}` |
//!
//! where `n` is the number of hypotheses merged before. Equal-cost choices
//! resolve as match/substitution, then skip, then new slot. Voting then
//! picks the best-scoring token per slot and drops slots won by NULL.

use indexmap::IndexMap;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::scoring::TokenSeq;
use crate::transcript::Transcripts;

/// Placeholder for "this system produced nothing here".
pub const NULL_TOKEN: &str = "@";
pub const DEFAULT_NULL_CONFIDENCE: f64 = 0.7;

/// Scores closer than this are ties (absorbs confidence-sum rounding).
const SCORE_TIE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoverError {
    #[error("cannot align hypothesis for `{found}` into network for `{expected}`")]
    UttMismatch { expected: String, found: String },
    #[error("no hypotheses to fuse")]
    NoHypotheses,
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("NULL confidence must lie in [0, 1], got {0}")]
    InvalidNullConfidence(f64),
    #[error("system `{system_id}`: token `@` is reserved for NULL")]
    ReservedToken { system_id: String },
    #[error("system `{system_id}`, utterance `{utt_id}`: {found} confidences for {expected} tokens")]
    ConfidenceLength {
        system_id: String,
        utt_id: String,
        expected: usize,
        found: usize,
    },
    #[error("system `{system_id}`: confidence {value} outside [0, 1]")]
    ConfidenceRange { system_id: String, value: f64 },
    #[error("system `{system_id}` utterance set differs from `{reference}`: missing {missing:?}, extra {extra:?}")]
    UtteranceSetMismatch {
        system_id: String,
        reference: String,
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("system `{system_id}` has no confidences for utterance `{utt_id}`")]
    MissingConfidences { system_id: String, utt_id: String },
}

/// One system's output for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    system_id: String,
    utt_id: String,
    tokens: TokenSeq,
    confidences: Option<Vec<f64>>,
}

impl Hypothesis {
    pub fn new(system_id: impl Into<String>, utt_id: impl Into<String>, tokens: TokenSeq) -> Result<Self, RoverError> {
        let system_id = system_id.into();
        if tokens.tokens().iter().any(|t| t == NULL_TOKEN) {
            return Err(RoverError::ReservedToken { system_id });
        }
        Ok(Self {
            system_id,
            utt_id: utt_id.into(),
            tokens,
            confidences: None,
        })
    }

    pub fn with_confidences(mut self, confidences: Vec<f64>) -> Result<Self, RoverError> {
        if confidences.len() != self.tokens.len() {
            return Err(RoverError::ConfidenceLength {
                system_id: self.system_id,
                utt_id: self.utt_id,
                expected: self.tokens.len(),
                found: confidences.len(),
            });
        }
        if let Some(&value) = confidences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(RoverError::ConfidenceRange {
                system_id: self.system_id,
                value,
            });
        }
        self.confidences = Some(confidences);
        Ok(self)
    }

    pub fn system_id(&self) -> &str {
        &self.system_id
    }

    pub fn utt_id(&self) -> &str {
        &self.utt_id
    }

    pub fn tokens(&self) -> &TokenSeq {
        &self.tokens
    }

    pub fn confidences(&self) -> Option<&[f64]> {
        self.confidences.as_deref()
    }

    fn confidence(&self, j: usize) -> f64 {
        self.confidences.as_ref().map_or(0.0, |c| c[j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotEntry {
    pub count: u32,
    pub conf_sum: f64,
}

/// One correspondence set. Entries keep the order in which tokens first
/// reached the slot, i.e. merge order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Slot {
    entries: IndexMap<String, SlotEntry>,
}

impl Slot {
    fn add(&mut self, token: &str, count: u32, conf: f64) {
        let e = self.entries.entry(token.to_owned()).or_insert(SlotEntry {
            count: 0,
            conf_sum: 0.0,
        });
        e.count += count;
        e.conf_sum += conf;
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn count(&self, token: &str) -> u32 {
        self.entries.get(token).map_or(0, |e| e.count)
    }

    pub fn total(&self) -> u32 {
        self.entries.values().map(|e| e.count).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &SlotEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

impl Serialize for Slot {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for (token, e) in &self.entries {
            map.serialize_entry(token, &(e.count, e.conf_sum))?;
        }
        map.end()
    }
}

/// Counts of each edit kind along the chosen alignment path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MergeStats {
    pub matches: u32,
    pub substitutions: u32,
    pub deletions: u32,
    pub insertions: u32,
}

impl MergeStats {
    pub fn cost(&self) -> u32 {
        self.substitutions + self.deletions + self.insertions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Diagonal,
    Delete,
    Insert,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordTransitionNetwork {
    utt_id: String,
    num_systems: u32,
    slots: Vec<Slot>,
    all_confident: bool,
}

impl Serialize for WordTransitionNetwork {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("WordTransitionNetwork", 1)?;
        s.serialize_field("slots", &self.slots)?;
        s.end()
    }
}

impl WordTransitionNetwork {
    /// One single-token slot per token of `hyp`.
    pub fn from_hypothesis(hyp: &Hypothesis) -> Self {
        let slots = hyp
            .tokens
            .tokens()
            .iter()
            .enumerate()
            .map(|(j, tok)| {
                let mut slot = Slot::default();
                slot.add(tok, 1, hyp.confidence(j));
                slot
            })
            .collect();
        Self {
            utt_id: hyp.utt_id.clone(),
            num_systems: 1,
            slots,
            all_confident: hyp.confidences.is_some(),
        }
    }

    pub fn utt_id(&self) -> &str {
        &self.utt_id
    }

    pub fn num_systems(&self) -> u32 {
        self.num_systems
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// True when every merged hypothesis carried confidences.
    pub fn has_confidences(&self) -> bool {
        self.all_confident
    }

    /// Fills the alignment table: `cost[i][j]` aligns the first `i` slots
    /// with the first `j` tokens.
    fn align_table(&self, tokens: &[String]) -> (Vec<u32>, Vec<Step>, usize) {
        let (n, m) = (self.slots.len(), tokens.len());
        let width = m + 1;
        let mut cost = vec![0u32; (n + 1) * width];
        let mut step = vec![Step::Diagonal; (n + 1) * width];
        for j in 1..=m {
            cost[j] = j as u32;
            step[j] = Step::Insert;
        }
        for i in 1..=n {
            cost[i * width] = i as u32;
            step[i * width] = Step::Delete;
            for j in 1..=m {
                let sub = u32::from(!self.slots[i - 1].contains(&tokens[j - 1]));
                let mut best = (cost[(i - 1) * width + j - 1] + sub, Step::Diagonal);
                let del = cost[(i - 1) * width + j] + 1;
                if del < best.0 {
                    best = (del, Step::Delete);
                }
                let ins = cost[i * width + j - 1] + 1;
                if ins < best.0 {
                    best = (ins, Step::Insert);
                }
                cost[i * width + j] = best.0;
                step[i * width + j] = best.1;
            }
        }
        (cost, step, width)
    }

    /// Minimum alignment cost of `tokens` against the current slots,
    /// without merging.
    pub fn alignment_cost(&self, tokens: &TokenSeq) -> u32 {
        let (cost, _, width) = self.align_table(tokens.tokens());
        cost[self.slots.len() * width + tokens.len()]
    }

    /// Aligns `hyp` against the network and merges it in place.
    pub fn merge(&mut self, hyp: &Hypothesis) -> Result<MergeStats, RoverError> {
        if hyp.utt_id != self.utt_id {
            return Err(RoverError::UttMismatch {
                expected: self.utt_id.clone(),
                found: hyp.utt_id.clone(),
            });
        }
        let tokens = hyp.tokens.tokens();
        let (_, step, width) = self.align_table(tokens);

        let mut path = Vec::with_capacity(self.slots.len() + tokens.len());
        let (mut i, mut j) = (self.slots.len(), tokens.len());
        while i > 0 || j > 0 {
            let s = step[i * width + j];
            path.push(s);
            match s {
                Step::Diagonal => {
                    i -= 1;
                    j -= 1;
                }
                Step::Delete => i -= 1,
                Step::Insert => j -= 1,
            }
        }
        path.reverse();

        let prior = self.num_systems;
        let mut old = std::mem::take(&mut self.slots).into_iter();
        let mut merged = Vec::with_capacity(path.len());
        let mut stats = MergeStats::default();
        let mut j = 0;
        for s in path {
            match s {
                Step::Diagonal => {
                    let mut slot = old.next().expect("path consumes each slot once");
                    if slot.contains(&tokens[j]) {
                        stats.matches += 1;
                    } else {
                        stats.substitutions += 1;
                    }
                    slot.add(&tokens[j], 1, hyp.confidence(j));
                    merged.push(slot);
                    j += 1;
                }
                Step::Delete => {
                    let mut slot = old.next().expect("path consumes each slot once");
                    slot.add(NULL_TOKEN, 1, 0.0);
                    merged.push(slot);
                    stats.deletions += 1;
                }
                Step::Insert => {
                    let mut slot = Slot::default();
                    slot.add(NULL_TOKEN, prior, 0.0);
                    slot.add(&tokens[j], 1, hyp.confidence(j));
                    merged.push(slot);
                    stats.insertions += 1;
                    j += 1;
                }
            }
        }
        self.slots = merged;
        self.num_systems += 1;
        self.all_confident &= hyp.confidences.is_some();
        Ok(stats)
    }

    /// Picks one token per slot; slots won by NULL emit nothing.
    pub fn vote(&self, params: &VoteParams) -> Result<TokenSeq, RoverError> {
        params.validate()?;
        let alpha = if self.all_confident { params.alpha } else { 1.0 };
        let n = f64::from(self.num_systems);
        let mut out = Vec::new();
        for slot in &self.slots {
            let mut best: Option<(&str, f64)> = None;
            for (token, e) in slot.entries() {
                let is_null = token == NULL_TOKEN;
                let avg_conf = if is_null {
                    params.null_confidence
                } else {
                    e.conf_sum / f64::from(e.count)
                };
                let mut score = alpha * (f64::from(e.count) / n);
                if alpha < 1.0 {
                    score += (1.0 - alpha) * avg_conf;
                }
                let better = match best {
                    None => true,
                    Some((held, held_score)) => {
                        score > held_score + SCORE_TIE
                            || (score >= held_score - SCORE_TIE && held == NULL_TOKEN && !is_null)
                    }
                };
                if better {
                    best = Some((token, score));
                }
            }
            if let Some((token, _)) = best {
                if token != NULL_TOKEN {
                    out.push(token.to_owned());
                }
            }
        }
        Ok(TokenSeq::new(out).expect("slot tokens come from validated sequences"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("networks always serialise")
    }
}

/// Voting weights: `score = alpha * count / N + (1 - alpha) * mean_conf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteParams {
    pub alpha: f64,
    /// Confidence assigned to NULL entries.
    pub null_confidence: f64,
}

impl Default for VoteParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            null_confidence: DEFAULT_NULL_CONFIDENCE,
        }
    }
}

impl VoteParams {
    pub fn new(alpha: f64, null_confidence: f64) -> Result<Self, RoverError> {
        let p = Self { alpha, null_confidence };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), RoverError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(RoverError::InvalidAlpha(self.alpha));
        }
        if !(0.0..=1.0).contains(&self.null_confidence) {
            return Err(RoverError::InvalidNullConfidence(self.null_confidence));
        }
        Ok(())
    }
}

pub fn wtn_init(hyp: &Hypothesis) -> WordTransitionNetwork {
    WordTransitionNetwork::from_hypothesis(hyp)
}

pub fn wtn_align(mut wtn: WordTransitionNetwork, hyp: &Hypothesis) -> Result<WordTransitionNetwork, RoverError> {
    wtn.merge(hyp)?;
    Ok(wtn)
}

/// Builds the network in the given order. The first hypothesis anchors the
/// slot layout, so order matters.
pub fn build_network(hypotheses: &[Hypothesis]) -> Result<WordTransitionNetwork, RoverError> {
    let (first, rest) = hypotheses.split_first().ok_or(RoverError::NoHypotheses)?;
    let mut wtn = WordTransitionNetwork::from_hypothesis(first);
    for hyp in rest {
        wtn.merge(hyp)?;
    }
    Ok(wtn)
}

pub fn rover_fuse(hypotheses: &[Hypothesis], params: &VoteParams) -> Result<TokenSeq, RoverError> {
    params.validate()?;
    build_network(hypotheses)?.vote(params)
}

/// One system's transcripts, with optional per-token confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemOutput {
    pub system_id: String,
    pub transcripts: Transcripts,
    pub confidences: Option<std::collections::BTreeMap<String, Vec<f64>>>,
}

impl SystemOutput {
    pub fn hypothesis(&self, utt_id: &str) -> Result<Hypothesis, RoverError> {
        let text = self.transcripts.get(utt_id).map_or("", String::as_str);
        let hyp = Hypothesis::new(&self.system_id, utt_id, crate::scoring::tokenize(text))?;
        match &self.confidences {
            None => Ok(hyp),
            Some(table) => {
                let conf = table.get(utt_id).ok_or_else(|| RoverError::MissingConfidences {
                    system_id: self.system_id.clone(),
                    utt_id: utt_id.to_owned(),
                })?;
                hyp.with_confidences(conf.clone())
            }
        }
    }
}

/// Utterances to fuse. Without `intersect`, every system must cover the
/// same set as the first one.
pub fn utterance_set(systems: &[SystemOutput], intersect: bool) -> Result<Vec<String>, RoverError> {
    let (first, rest) = systems.split_first().ok_or(RoverError::NoHypotheses)?;
    let mut ids: Vec<String> = first.transcripts.keys().cloned().collect();
    for sys in rest {
        if intersect {
            ids.retain(|id| sys.transcripts.contains_key(id));
            continue;
        }
        let missing: Vec<String> = ids
            .iter()
            .filter(|id| !sys.transcripts.contains_key(*id))
            .cloned()
            .collect();
        let extra: Vec<String> = sys
            .transcripts
            .keys()
            .filter(|id| !first.transcripts.contains_key(*id))
            .cloned()
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(RoverError::UtteranceSetMismatch {
                system_id: sys.system_id.clone(),
                reference: first.system_id.clone(),
                missing,
                extra,
            });
        }
    }
    Ok(ids)
}

/// Fuses one utterance across systems, in system order.
pub fn fuse_utterance(
    systems: &[SystemOutput],
    utt_id: &str,
    params: &VoteParams,
) -> Result<(TokenSeq, WordTransitionNetwork), RoverError> {
    let hyps = systems
        .iter()
        .map(|s| s.hypothesis(utt_id))
        .collect::<Result<Vec<_>, _>>()?;
    let wtn = build_network(&hyps)?;
    let fused = wtn.vote(params)?;
    Ok((fused, wtn))
}

/// Orders systems by ascending CER from `table`; systems without an entry
/// keep their relative order after the scored ones.
pub fn order_by_cer(systems: &[String], table: &std::collections::BTreeMap<String, f64>) -> Vec<String> {
    let mut ordered: Vec<String> = systems.to_vec();
    ordered.sort_by(|a, b| match (table.get(a), table.get(b)) {
        (Some(x), Some(y)) => x.total_cmp(y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    ordered
}
