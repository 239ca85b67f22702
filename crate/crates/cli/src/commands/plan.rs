use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use lipscale_core::annotations::{parse_annotations, SpeakerSegment};
use lipscale_core::config::PipelineConfig;
use lipscale_core::format_factor;
use lipscale_core::roi::{plan_crops_with, SegmentDisposition};
use log::{info, warn};
use rayon::prelude::*;

use crate::app::PlanArgs;
use crate::fsutil::write_atomic;
use crate::{usage, Status};

pub const MANIFEST_HEADER: &str = "segment_id\tscale\tstatus\treason\tface_rate\tlip_rate\tjoint_rate\tside\tplan_file";

struct Row {
    segment_id: String,
    scale: Option<f64>,
    line: String,
}

pub fn run(args: &PlanArgs) -> anyhow::Result<Status> {
    let config = args.common.load_config()?;
    let inputs: Vec<PathBuf> = if args.annotations.is_empty() {
        config.paths.input.iter().cloned().collect()
    } else {
        args.annotations.clone()
    };
    if inputs.is_empty() {
        return Err(usage("no annotation input (pass --annotations or set paths.input)"));
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.paths.output.clone())
        .ok_or_else(|| usage("no output directory (pass --out or set paths.output)"))?;
    let pool = args.common.pool()?;

    let mut segments: Vec<SpeakerSegment> = Vec::new();
    let mut failed_inputs = 0;
    for path in &inputs {
        let loaded = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .and_then(|text| parse_annotations(&text).with_context(|| format!("parsing {}", path.display())));
        match loaded {
            Ok(doc) => {
                for id in &doc.resorted {
                    warn!("{}: segment {id} had out-of-order frames; sorted", path.display());
                }
                segments.extend(doc.segments);
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                failed_inputs += 1;
            }
        }
    }
    if failed_inputs == inputs.len() {
        return Ok(Status::TotalFailure);
    }

    let plans_dir = out.join("plans");
    let results: Vec<anyhow::Result<Vec<Row>>> = pool.install(|| {
        segments
            .par_iter()
            .map(|seg| plan_segment(seg, &config, &plans_dir))
            .collect()
    });
    let mut rows = Vec::new();
    let mut planned_segments = 0;
    let mut failed_segments = 0;
    for (seg, result) in segments.iter().zip(results) {
        match result {
            Ok(r) => {
                if r.iter().any(|row| row.scale.is_some()) {
                    planned_segments += 1;
                }
                rows.extend(r);
            }
            Err(e) => {
                eprintln!("error: segment {}: {e:#}", seg.segment_id());
                failed_segments += 1;
            }
        }
    }
    rows.sort_by(|a, b| {
        a.segment_id
            .cmp(&b.segment_id)
            .then_with(|| a.scale.unwrap_or(0.0).total_cmp(&b.scale.unwrap_or(0.0)))
    });
    let manifest = super::tsv(MANIFEST_HEADER, rows.into_iter().map(|r| r.line));
    write_atomic(&out.join("manifest.tsv"), manifest.as_bytes())?;
    info!("planned {planned_segments} of {} segments", segments.len());

    if planned_segments == 0 {
        eprintln!("warning: no segment survived the discard rule");
        return Ok(Status::PartialFailure);
    }
    if failed_inputs > 0 || failed_segments > 0 {
        return Ok(Status::PartialFailure);
    }
    Ok(Status::Success)
}

fn plan_segment(
    seg: &SpeakerSegment,
    config: &PipelineConfig,
    plans_dir: &std::path::Path,
) -> anyhow::Result<Vec<Row>> {
    let rates = seg.detection_rates();
    let rates_cols = format!("{:.6}\t{:.6}\t{:.6}", rates.face, rates.lip, rates.joint);
    let id = seg.segment_id();
    let mut rows = Vec::new();
    for &scale in &config.scales {
        match plan_crops_with(seg, scale, config.output_size, config.size_basis)? {
            SegmentDisposition::Discarded(reason) => {
                return Ok(vec![Row {
                    segment_id: id.to_owned(),
                    scale: None,
                    line: format!("{id}\t-\tdiscarded\t{reason}\t{rates_cols}\t-\t-"),
                }]);
            }
            SegmentDisposition::Planned(plan) => {
                let factor = format_factor(scale.value());
                let file = format!("{id}@{factor}.json");
                write_atomic(&plans_dir.join(&file), plan.to_json().as_bytes())?;
                rows.push(Row {
                    segment_id: id.to_owned(),
                    scale: Some(scale.value()),
                    line: format!(
                        "{id}\t{factor}\tplanned\t-\t{rates_cols}\t{}\tplans/{file}",
                        plan.source_side()
                    ),
                });
            }
        }
    }
    Ok(rows)
}
