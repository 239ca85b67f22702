use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use lipscale_core::format_factor;
use lipscale_core::imaging::{encode_frame, read_frame, FrameFormat};
use lipscale_core::roi::{crop_frame, CropPlan};
use log::info;
use rayon::prelude::*;

use crate::app::CropArgs;
use crate::fsutil::{frame_name, write_atomic, StagedDir};
use crate::{usage, Status};

pub const MANIFEST_HEADER: &str = "clip_id\tsegment_id\tscale\tstatus\tframes\tfilled\terror";

struct Clip {
    id: String,
    plan: CropPlan,
}

pub fn run(args: &CropArgs) -> anyhow::Result<Status> {
    // Loaded for validation only; crop geometry lives in the plans.
    args.common.load_config()?;
    let pool = args.common.pool()?;
    let output_format = args.format.as_deref().map(|f| match f {
        "rgb" => FrameFormat::RawPlanar,
        _ => FrameFormat::Png,
    });

    let plan_files = list_plans(&args.plans)?;
    if plan_files.is_empty() {
        return Err(usage(format!("no crop plans found in {}", args.plans.display())));
    }
    let mut rows: BTreeMap<String, (String, bool)> = BTreeMap::new();
    let mut by_segment: BTreeMap<String, Vec<Clip>> = BTreeMap::new();
    for (id, path) in &plan_files {
        match load_plan(path) {
            Ok(plan) => by_segment
                .entry(plan.segment_id().to_owned())
                .or_default()
                .push(Clip { id: id.clone(), plan }),
            Err(e) => {
                rows.insert(id.clone(), failed_row(id, "-", &e));
            }
        }
    }

    // Each frame is decoded once and cut at every scale planned for it.
    let results: Vec<Vec<(String, (String, bool))>> = pool.install(|| {
        by_segment
            .par_iter()
            .map(
                |(segment, clips)| match crop_segment(segment, clips, args, output_format) {
                    Ok(()) => clips
                        .iter()
                        .map(|c| {
                            let filled = c.plan.filled().iter().filter(|&&f| f).count();
                            let scale = format_factor(c.plan.scale().value());
                            let n = c.plan.total_frames();
                            (
                                c.id.clone(),
                                (format!("{}\t{segment}\t{scale}\tok\t{n}\t{filled}\t-", c.id), true),
                            )
                        })
                        .collect(),
                    Err(e) => clips
                        .iter()
                        .map(|c| (c.id.clone(), failed_row(&c.id, segment, &e)))
                        .collect(),
                },
            )
            .collect()
    });
    rows.extend(results.into_iter().flatten());

    let failed = rows.values().filter(|(_, ok)| !ok).count();
    let manifest = super::tsv(MANIFEST_HEADER, rows.into_values().map(|(r, _)| r));
    write_atomic(&args.out.join("crop_manifest.tsv"), manifest.as_bytes())?;
    info!("cropped {} of {} clips", plan_files.len() - failed, plan_files.len());
    Ok(Status::from_counts(failed, plan_files.len()))
}

fn failed_row(clip_id: &str, segment: &str, e: &anyhow::Error) -> (String, bool) {
    eprintln!("error: {clip_id}: {e:#}");
    let msg = format!("{e:#}").replace(['\t', '\n'], " ");
    (format!("{clip_id}\t{segment}\t-\tfailed\t-\t-\t{msg}"), false)
}

/// Plan files sorted by clip id (file stem). Accepts a `plan` output
/// directory as well as its `plans/` sub-directory.
fn list_plans(dir: &Path) -> anyhow::Result<Vec<(String, PathBuf)>> {
    let nested = dir.join("plans");
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let mut out = Vec::new();
    let entries = fs::read_dir(&dir).map_err(|e| usage(format!("reading {}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            if let Some(stem) = path.file_stem() {
                out.push((stem.to_string_lossy().into_owned(), path));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn load_plan(path: &Path) -> anyhow::Result<CropPlan> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn find_frame(dir: &Path, index: usize) -> Option<PathBuf> {
    [FrameFormat::Png, FrameFormat::RawPlanar]
        .iter()
        .map(|f| dir.join(frame_name(index, f.extension())))
        .find(|p| p.is_file())
}

/// Crops every clip of one segment. Any failure fails the whole segment
/// and leaves none of its clip directories behind.
fn crop_segment(
    segment: &str,
    clips: &[Clip],
    args: &CropArgs,
    output_format: Option<FrameFormat>,
) -> anyhow::Result<()> {
    let frames_dir = args.frames.join(segment);
    let staged = clips
        .iter()
        .map(|c| StagedDir::new(&args.out.join(&c.id)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let total = clips.iter().map(|c| c.plan.total_frames()).max().unwrap_or(0);
    (0..total).into_par_iter().try_for_each(|i| -> anyhow::Result<()> {
        let src = find_frame(&frames_dir, i).ok_or_else(|| {
            anyhow!(
                "missing frame {i} ({})",
                frames_dir.join(frame_name(i, "png")).display()
            )
        })?;
        let format = output_format.unwrap_or_else(|| FrameFormat::from_path(&src).unwrap_or(FrameFormat::Png));
        let image = read_frame(&src, args.raw_size)?;
        for (clip, dir) in clips.iter().zip(&staged) {
            if i >= clip.plan.total_frames() {
                continue;
            }
            let crop = crop_frame(&image, &clip.plan, i)?;
            fs::write(
                dir.path().join(frame_name(i, format.extension())),
                encode_frame(&crop, format),
            )
            .with_context(|| format!("writing {} frame {i}", clip.id))?;
        }
        Ok(())
    })?;
    for dir in staged {
        dir.commit()?;
    }
    Ok(())
}
