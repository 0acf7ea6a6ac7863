//! Command-line front end for `pedcal`.
//!
//! Each subcommand lives in its own module with a `clap` argument struct, a
//! function returning the typed report, and a `run` wrapper that writes it.
//! Reports are JSON and embed a [`manifest::RunManifest`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Parser, Subcommand};

pub mod calibrate;
pub mod distances;
pub mod error;
pub mod evaluate;
pub mod grid;
pub mod io;
pub mod manifest;
pub mod simulate;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "pedcal", version, about = "Camera calibration and distance estimation from pedestrian keypoints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate intrinsics and the ground plane from keypoint files.
    Calibrate(calibrate::CalibrateArgs),
    /// Per-frame pairwise ground distances from a calibration.
    Distances(distances::DistancesArgs),
    /// Score a distance report against labeled pairs.
    Evaluate(evaluate::EvaluateArgs),
    /// Export a metric ground-plane grid as image polylines.
    Grid(grid::GridArgs),
    /// Run a Monte Carlo study and write its table.
    Simulate(simulate::SimulateArgs),
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Calibrate(a) => calibrate::run(a),
        Command::Distances(a) => distances::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Grid(a) => grid::run(a),
        Command::Simulate(a) => simulate::run(a),
    }
}
