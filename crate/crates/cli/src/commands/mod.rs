pub mod augment;
pub mod crop;
pub mod perturb;
pub mod plan;
pub mod rover;
pub mod score;

use crate::app::Command;
use crate::Status;

pub fn run(command: Command) -> anyhow::Result<Status> {
    match command {
        Command::Plan(args) => plan::run(&args),
        Command::Crop(args) => crop::run(&args),
        Command::Perturb(args) => perturb::run(&args),
        Command::Augment(args) => augment::run(&args),
        Command::Score(args) => score::run(&args),
        Command::Rover(args) => rover::run(&args),
    }
}

/// Joins TSV rows (already tab-separated) under `header`.
pub(crate) fn tsv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}
