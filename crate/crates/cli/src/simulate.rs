use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use pedcal::sim::{run_study, write_csv, Study};

use crate::error::{CliError, CliResult};
use crate::io;
use crate::manifest::RunManifest;

#[derive(Debug, Clone, clap::Args)]
pub struct SimulateArgs {
    /// One of noisefree, noise, height, count, distortion.
    #[arg(long)]
    pub study: Study,
    /// Monte Carlo trials per level.
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving `<study>.csv` and `<study>.manifest.json`.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

pub fn manifest_for(args: &SimulateArgs) -> RunManifest {
    let mut m = RunManifest::new("simulate", Vec::new());
    m.height_m = 1.7;
    m.distortion = args.study == Study::Distortion;
    m.seed = args.seed;
    m.study = Some(args.study.name().to_string());
    m.trials = Some(args.trials);
    m
}

/// Runs the study and writes the CSV and its manifest. Returns both paths.
pub fn simulate(args: &SimulateArgs) -> CliResult<(PathBuf, PathBuf)> {
    if args.trials == 0 {
        return Err(CliError::schema("--trials must be positive"));
    }
    let rows = run_study(args.study, args.trials, args.seed)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let csv_path = args.out_dir.join(format!("{}.csv", args.study.name()));
    let file = File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    write_csv(&rows, BufWriter::new(file))
        .map_err(|e| CliError::io(&csv_path, std::io::Error::other(e.to_string())))?;
    let manifest_path = args.out_dir.join(format!("{}.manifest.json", args.study.name()));
    io::write_text(Some(&manifest_path), &io::to_json(&manifest_for(args)))?;
    Ok((csv_path, manifest_path))
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let (csv, manifest) = simulate(args)?;
    eprintln!("wrote {} and {}", csv.display(), manifest.display());
    Ok(())
}
