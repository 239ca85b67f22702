use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use lipscale_core::augment::{apply_augment, sample_augment, AugmentSpec, AugmentTransform};
use lipscale_core::imaging::{encode_frame, read_frame, FrameFormat};
use rayon::prelude::*;

use crate::app::AugmentArgs;
use crate::fsutil::{sorted_frames, sorted_subdirs, write_atomic, StagedDir};
use crate::{usage, Status};

pub const MANIFEST_HEADER: &str =
    "clip_id\tangle_deg\thflip\tgrayscale\tbrightness\tcontrast\tsaturation\tframes\tstatus";

pub fn run(args: &AugmentArgs) -> anyhow::Result<Status> {
    let config = args.common.load_config()?;
    let spec = config.augment;
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let pool = args.common.pool()?;
    let clips = sorted_subdirs(&args.clips).map_err(|e| usage(format!("{e:#}")))?;
    if clips.is_empty() {
        return Err(usage(format!("no clip directories in {}", args.clips.display())));
    }

    let rows: Vec<(String, bool)> = pool.install(|| {
        clips
            .par_iter()
            .map(
                |(name, path)| match augment_clip(name, path, &args.out.join(name), &spec, args.raw_size) {
                    Ok((t, n)) => (
                        format!(
                            "{name}\t{:.6}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{n}\tok",
                            t.angle_deg, t.hflip, t.grayscale, t.brightness, t.contrast, t.saturation
                        ),
                        true,
                    ),
                    Err(e) => {
                        eprintln!("error: {name}: {e:#}");
                        (format!("{name}\t-\t-\t-\t-\t-\t-\t-\tfailed"), false)
                    }
                },
            )
            .collect()
    });
    let failed = rows.iter().filter(|(_, ok)| !ok).count();
    let manifest = super::tsv(MANIFEST_HEADER, rows.into_iter().map(|(r, _)| r));
    write_atomic(&args.out.join("transforms.tsv"), manifest.as_bytes())?;
    Ok(Status::from_counts(failed, clips.len()))
}

fn augment_clip(
    clip_id: &str,
    src: &Path,
    dst: &Path,
    spec: &AugmentSpec,
    raw_size: Option<(u32, u32)>,
) -> anyhow::Result<(AugmentTransform, usize)> {
    let paths = sorted_frames(src)?;
    if paths.is_empty() {
        bail!("no frames in {}", src.display());
    }
    let frames = paths
        .iter()
        .map(|p| read_frame(p, raw_size))
        .collect::<Result<Vec<_>, _>>()?;
    let transform = sample_augment(spec, clip_id)?;
    let out = apply_augment(&frames, &transform)?;
    let staged = StagedDir::new(dst)?;
    for (path, frame) in paths.iter().zip(&out) {
        let format = FrameFormat::from_path(path).unwrap_or(FrameFormat::Png);
        let name = path.file_name().context("frame without a file name")?;
        fs::write(staged.path().join(name), encode_frame(frame, format))
            .with_context(|| format!("writing {}", name.to_string_lossy()))?;
    }
    staged.commit()?;
    Ok((transform, out.len()))
}
