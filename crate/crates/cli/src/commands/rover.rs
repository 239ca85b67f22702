use std::collections::BTreeMap;
use std::fs;

use anyhow::Context;
use lipscale_core::rover::{fuse_utterance, order_by_cer, utterance_set, RoverError, SystemOutput, VoteParams};
use lipscale_core::transcript::{parse_confidences, write_transcripts, Transcripts};
use log::info;
use rayon::prelude::*;

use crate::app::RoverArgs;
use crate::fsutil::write_atomic;
use crate::{usage, Status};

pub fn run(args: &RoverArgs) -> anyhow::Result<Status> {
    let config = args.common.load_config()?;
    let params = VoteParams::new(
        args.alpha.unwrap_or(config.rover_alpha),
        args.null_conf.unwrap_or(config.rover_null_confidence),
    )
    .map_err(|e| usage(e.to_string()))?;
    let pool = args.common.pool()?;

    let mut systems: BTreeMap<String, SystemOutput> = BTreeMap::new();
    let mut given_order = Vec::new();
    for (id, path) in &args.hyps {
        let transcripts = super::score::load(path)?;
        let sys = SystemOutput {
            system_id: id.clone(),
            transcripts,
            confidences: None,
        };
        if systems.insert(id.clone(), sys).is_some() {
            return Err(usage(format!("system `{id}` given twice")));
        }
        given_order.push(id.clone());
    }
    for (id, path) in &args.confs {
        let sys = systems
            .get_mut(id)
            .ok_or_else(|| usage(format!("--conf for unknown system `{id}`")))?;
        let text = fs::read_to_string(path).map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
        sys.confidences = Some(parse_confidences(&text).with_context(|| format!("parsing {}", path.display()))?);
    }

    let order = merge_order(args, &given_order)?;
    let ordered: Vec<SystemOutput> = order.iter().map(|id| systems[id].clone()).collect();
    info!("merge order: {}", order.join(","));

    let utts = match utterance_set(&ordered, args.intersect) {
        Ok(u) => u,
        Err(e @ RoverError::UtteranceSetMismatch { .. }) => {
            eprintln!("error: {e}");
            return Ok(Status::TotalFailure);
        }
        Err(e) => return Err(e.into()),
    };

    let fused: Vec<(String, anyhow::Result<(String, String)>)> = pool.install(|| {
        utts.par_iter()
            .map(|utt| {
                let r = fuse_utterance(&ordered, utt, &params)
                    .map(|(tokens, wtn)| (tokens.concat(), wtn.to_json()))
                    .map_err(anyhow::Error::from);
                (utt.clone(), r)
            })
            .collect()
    });

    let mut out = Transcripts::new();
    let mut failed = 0;
    for (utt, result) in fused {
        match result {
            Ok((text, wtn)) => {
                if let Some(dir) = &args.dump_wtn {
                    write_atomic(&dir.join(format!("{utt}.json")), wtn.as_bytes())?;
                }
                out.insert(utt, text);
            }
            Err(e) => {
                eprintln!("error: {utt}: {e:#}");
                failed += 1;
            }
        }
    }
    write_atomic(&args.out, write_transcripts(&out).as_bytes())?;
    Ok(Status::from_counts(failed, utts.len()))
}

fn merge_order(args: &RoverArgs, given: &[String]) -> anyhow::Result<Vec<String>> {
    if let Some(path) = &args.cer_table {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
        let table = parse_cer_table(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        return Ok(order_by_cer(given, &table));
    }
    let Some(order) = &args.order else {
        return Ok(given.to_vec());
    };
    let mut sorted_order = order.clone();
    sorted_order.sort();
    let mut sorted_given = given.to_vec();
    sorted_given.sort();
    if sorted_order != sorted_given {
        return Err(usage(format!(
            "--order must name each system exactly once (systems: {})",
            given.join(",")
        )));
    }
    Ok(order.clone())
}

/// `<system_id>\t<cer>` lines; blank lines and `#` comments are skipped.
fn parse_cer_table(text: &str) -> Result<BTreeMap<String, f64>, String> {
    let mut table = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let (Some(id), Some(value), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(format!("line {}: expected `<system_id>\\t<cer>`", n + 1));
        };
        let cer: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| format!("line {}: bad CER `{value}`", n + 1))?;
        table.insert(id.to_owned(), cer);
    }
    Ok(table)
}
