use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lipscale_core::config::PipelineConfig;

use crate::usage;

#[derive(Debug, Parser)]
#[command(
    name = "lipscale",
    version,
    about = "Lip ROI extraction, clip augmentation, CER scoring and ROVER fusion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resolve multi-scale crop plans from face/lip annotations.
    Plan(PlanArgs),
    /// Cut planned crops out of extracted frame images.
    Crop(CropArgs),
    /// Write speed-perturbed copies of clips by frame resampling.
    Perturb(PerturbArgs),
    /// Apply seeded per-clip augmentations.
    Augment(AugmentArgs),
    /// Character error rate of a hypothesis file against a reference.
    Score(ScoreArgs),
    /// Fuse transcripts from several systems.
    Rover(RoverArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Pipeline config (TOML or JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides the augmentation seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CommonArgs {
    pub fn load_config(&self) -> anyhow::Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path).map_err(|e| usage(e.to_string()))?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.augment.seed = seed;
        }
        Ok(config)
    }

    pub fn pool(&self) -> anyhow::Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.jobs {
            if n == 0 {
                return Err(usage("--jobs must be at least 1"));
            }
            builder = builder.num_threads(n);
        }
        Ok(builder.build()?)
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Annotation documents (JSON). Defaults to `paths.input` from the config.
    #[arg(long = "annotations", num_args = 1..)]
    pub annotations: Vec<PathBuf>,
    /// Output directory; plans go to `<out>/plans/`, manifest to `<out>/manifest.tsv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CropArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory of crop plan JSON files (or a `plan` output directory).
    #[arg(long)]
    pub plans: PathBuf,
    /// Frame root: `<frames>/<segment_id>/<index:06>.png|.rgb`.
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Dimensions of raw `.rgb` input frames, e.g. `1920x1080`.
    #[arg(long, value_parser = parse_dims)]
    pub raw_size: Option<(u32, u32)>,
    /// Output encoding; defaults to the input frame's.
    #[arg(long, value_parser = ["png", "rgb"])]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory of clips, one sub-directory of frames per clip.
    #[arg(long)]
    pub clips: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory of clips, one sub-directory of frames per clip.
    #[arg(long)]
    pub clips: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Dimensions of raw `.rgb` frames, e.g. `112x112`.
    #[arg(long, value_parser = parse_dims)]
    pub raw_size: Option<(u32, u32)>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Reference transcripts (`<utt_id>\t<text>` per line).
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Hypothesis transcripts.
    #[arg(long)]
    pub hyp: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RoverArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// System transcripts as `SYSTEM=PATH`, in merge order unless
    /// `--order` or `--cer-table` is given.
    #[arg(long = "hyp", value_parser = parse_assignment, required = true)]
    pub hyps: Vec<(String, PathBuf)>,
    /// Per-token confidences as `SYSTEM=PATH`.
    #[arg(long = "conf", value_parser = parse_assignment)]
    pub confs: Vec<(String, PathBuf)>,
    /// Comma-separated merge order of system ids.
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<String>>,
    /// `<system_id>\t<cer>` table; systems merge in ascending CER.
    #[arg(long)]
    pub cer_table: Option<PathBuf>,
    /// Weight of frequency against confidence (overrides config).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Confidence of NULL entries (overrides config).
    #[arg(long)]
    pub null_conf: Option<f64>,
    /// Fuse only utterances present in every system.
    #[arg(long)]
    pub intersect: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Write each utterance's network as JSON into this directory.
    #[arg(long)]
    pub dump_wtn: Option<PathBuf>,
}

fn parse_dims(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    let w: u32 = w.parse().map_err(|_| format!("bad width `{w}`"))?;
    let h: u32 = h.parse().map_err(|_| format!("bad height `{h}`"))?;
    if w == 0 || h == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok((w, h))
}

fn parse_assignment(s: &str) -> Result<(String, PathBuf), String> {
    let (k, v) = s.split_once('=').ok_or("expected SYSTEM=PATH")?;
    if k.is_empty() || v.is_empty() {
        return Err("expected SYSTEM=PATH".into());
    }
    Ok((k.to_owned(), PathBuf::from(v)))
}
