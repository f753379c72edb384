//! File formats, reports and sweep orchestration behind the command-line
//! tool.

mod files;
mod plot;
mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use files::{
    aggregate_path, format_real, load_config, meta_path, parse_aggregate_csv, read_aggregate_csv,
    seed_override, write_aggregate_csv, write_sweep_csv, InstanceFile, AGGREGATE_HEADER, SEED_ENV,
    SWEEP_HEADER,
};
pub use plot::render_svg;
pub use report::{
    run_check, run_oracle, selftest, CheckReport, OracleReport, EXIT_EXACT, EXIT_INPUT_ERROR,
    EXIT_NOT_CERTIFIED, EXIT_ORDERING_VIOLATED, ORDERING_SLACK, SEED_DERIVE_REFERENCE,
};

use crate::ensemble::{self, AggregateRow, EnsembleConfig, TrialRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<TrialRecord>,
    pub rows: Vec<AggregateRow>,
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Runs the sweep and writes `output`, `<output>.agg.csv` and
/// `<output>.meta.json`. File contents do not depend on `workers`.
pub fn run_sweep(cfg: &EnsembleConfig, output: &Path, workers: usize) -> Result<SweepOutput> {
    // fail on an unwritable path before spending time on trials
    File::create(output).map_err(|e| Error::io(output, e))?;
    let records = ensemble::run_trials(cfg, workers)?;
    let rows = ensemble::aggregate(&records);
    write_file(output, |w| write_sweep_csv(&records, w))?;
    write_file(&aggregate_path(output), |w| write_aggregate_csv(&rows, w))?;
    let meta = serde_json::to_string_pretty(cfg).expect("config serializes");
    write_file(&meta_path(output), |w| writeln!(w, "{meta}"))?;
    Ok(SweepOutput { records, rows })
}

/// Renders `agg_csv` to `output_svg`.
pub fn run_plot(agg_csv: &Path, output_svg: &Path) -> Result<()> {
    let rows = read_aggregate_csv(agg_csv)?;
    let svg = render_svg(&rows)?;
    write_file(output_svg, |w| w.write_all(svg.as_bytes()))
}
