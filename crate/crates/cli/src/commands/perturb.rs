use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use lipscale_core::augment::{perturbed_clip_id, resample_indices, PerturbRate};
use lipscale_core::format_factor;
use log::warn;
use rayon::prelude::*;

use crate::app::PerturbArgs;
use crate::fsutil::{frame_name, sorted_frames, sorted_subdirs, write_atomic, StagedDir};
use crate::{usage, Status};

pub const MANIFEST_HEADER: &str = "clip_id\tsource_clip\trate\tsource_frames\tframes\tstatus";

pub fn run(args: &PerturbArgs) -> anyhow::Result<Status> {
    let config = args.common.load_config()?;
    if config.perturb_rates.is_empty() {
        return Err(usage("perturb_rates is empty"));
    }
    let pool = args.common.pool()?;
    let clips = sorted_subdirs(&args.clips).map_err(|e| usage(format!("{e:#}")))?;
    if clips.is_empty() {
        return Err(usage(format!("no clip directories in {}", args.clips.display())));
    }

    let jobs: Vec<(&str, &Path, PerturbRate)> = clips
        .iter()
        .flat_map(|(name, path)| {
            config
                .perturb_rates
                .iter()
                .map(move |&r| (name.as_str(), path.as_path(), r))
        })
        .collect();
    let rows: Vec<(String, bool)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(name, path, rate)| {
                let out_id = perturbed_clip_id(name, rate);
                let factor = format_factor(rate.value());
                match perturb_clip(path, &args.out.join(&out_id), rate) {
                    Ok((src_n, n)) => {
                        let status = if n == 0 { "empty" } else { "ok" };
                        if n == 0 {
                            warn!("{out_id}: rate {factor} leaves no frames");
                        }
                        (format!("{out_id}\t{name}\t{factor}\t{src_n}\t{n}\t{status}"), true)
                    }
                    Err(e) => {
                        eprintln!("error: {out_id}: {e:#}");
                        (format!("{out_id}\t{name}\t{factor}\t-\t-\tfailed"), false)
                    }
                }
            })
            .collect()
    });
    let failed = rows.iter().filter(|(_, ok)| !ok).count();
    let manifest = super::tsv(MANIFEST_HEADER, rows.into_iter().map(|(r, _)| r));
    write_atomic(&args.out.join("perturb_manifest.tsv"), manifest.as_bytes())?;
    Ok(Status::from_counts(failed, jobs.len()))
}

/// Copies the resampled frames byte for byte, renumbered from zero.
fn perturb_clip(src: &Path, dst: &Path, rate: PerturbRate) -> anyhow::Result<(usize, usize)> {
    let frames = sorted_frames(src)?;
    if frames.is_empty() {
        bail!("no frames in {}", src.display());
    }
    let staged = StagedDir::new(dst)?;
    let indices = resample_indices(frames.len(), rate);
    for (j, &i) in indices.iter().enumerate() {
        let from = &frames[i];
        let ext = from
            .extension()
            .map(|e| e.to_string_lossy().into_owned())
            .unwrap_or_default();
        fs::copy(from, staged.path().join(frame_name(j, &ext)))
            .with_context(|| format!("copying {}", from.display()))?;
    }
    staged.commit()?;
    Ok((frames.len(), indices.len()))
}
