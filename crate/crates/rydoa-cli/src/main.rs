//! `rydoa`: spectra, QCRB sweeps, baseline comparisons, and DoA runs
//! from scenario presets, emitted as provenance-stamped CSV/JSON.

// Same convention as rydoa-core: `!(x > 0.0)` guards reject NaN, the
// comparison clippy suggests would accept it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod compare;
mod doa;
mod error;
mod output;
mod scenario_io;
mod spectrum;
mod sweep;

use args::{Cli, Cmd};
use clap::Parser;

fn main() {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Spectrum(a) => spectrum::run(a),
        Cmd::QcrbSweep(a) => sweep::run(a),
        Cmd::Compare(a) => compare::run(a),
        Cmd::Doa(a) => doa::run(a),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
