use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use lipscale_core::scoring::score_corpus;
use lipscale_core::transcript::{parse_transcripts, Transcripts};

use crate::app::ScoreArgs;
use crate::fsutil::write_atomic;
use crate::{usage, Status};

pub fn run(args: &ScoreArgs) -> anyhow::Result<Status> {
    args.common.load_config()?;
    let reference = load(&args.reference)?;
    let hypothesis = load(&args.hyp)?;
    let score = score_corpus(&reference, &hypothesis);
    let report = score.to_tsv();
    match &args.out {
        Some(path) => write_atomic(path, report.as_bytes())?,
        None => std::io::stdout().write_all(report.as_bytes())?,
    }
    for id in &score.missing_in_hyp {
        eprintln!("coverage error: `{id}` is in the reference but not the hypothesis");
    }
    for id in &score.missing_in_ref {
        eprintln!("coverage error: `{id}` is in the hypothesis but not the reference");
    }
    Ok(
        if score.rows.is_empty() && (!reference.is_empty() || !hypothesis.is_empty()) {
            Status::TotalFailure
        } else if score.has_coverage_errors() {
            Status::PartialFailure
        } else {
            Status::Success
        },
    )
}

pub(crate) fn load(path: &Path) -> anyhow::Result<Transcripts> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
    parse_transcripts(&text).with_context(|| format!("parsing {}", path.display()))
}
