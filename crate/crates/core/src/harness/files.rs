//! On-disk formats: JSON instances and sweep configs, sweep CSVs.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{AggregateRow, EnsembleConfig, TrialRecord};
use crate::error::{Error, Result};
use crate::linalg::{ProblemInstance, SupportSet};

/// Environment variable overriding a sweep config's `master_seed`.
pub const SEED_ENV: &str = "SPARSECERT_SEED";

pub const SWEEP_HEADER: &str = "p,k,n,alpha,rho_multiplier,rho,trial,seed,pwg_exact,dcl_exact";
pub const AGGREGATE_HEADER: &str = "p,alpha,rho_multiplier,pwg_rate,dcl_rate,trials";

/// JSON instance: `X` is row-major with `n·p` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub k: usize,
    #[serde(rename = "X")]
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." || path.is_empty() {
            Error::Parse(e.into_inner().to_string())
        } else {
            Error::Parse(format!("key `{path}`: {}", e.into_inner()))
        }
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read(path)?).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_instance(inst: &ProblemInstance, support: Option<&SupportSet>) -> Self {
        let x = inst.x();
        let mut row_major = Vec::with_capacity(x.len());
        for i in 0..inst.n() {
            row_major.extend(x.row(i).iter());
        }
        Self {
            n: inst.n(),
            p: inst.p(),
            rho: inst.rho(),
            k: inst.k(),
            x: row_major,
            y: inst.y().iter().copied().collect(),
            support: support.map(|s| s.indices().to_vec()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn into_instance(self) -> Result<(ProblemInstance, Option<SupportSet>)> {
        if self.x.len() != self.n * self.p {
            return Err(Error::Parse(format!(
                "key `X`: expected n*p = {} entries, got {}",
                self.n * self.p,
                self.x.len()
            )));
        }
        if self.y.len() != self.n {
            return Err(Error::Parse(format!(
                "key `y`: expected n = {} entries, got {}",
                self.n,
                self.y.len()
            )));
        }
        let inst = ProblemInstance::from_row_major(self.n, self.p, &self.x, &self.y, self.rho, self.k)?;
        let support = match self.support {
            Some(ix) => {
                let s = SupportSet::new(ix).map_err(|e| Error::Parse(format!("key `support`: {e}")))?;
                s.check_within(self.p)
                    .map_err(|e| Error::Parse(format!("key `support`: {e}")))?;
                Some(s)
            }
            None => None,
        };
        Ok((inst, support))
    }
}

/// Reads a sweep config and applies [`SEED_ENV`] when set.
pub fn load_config(path: impl AsRef<Path>) -> Result<EnsembleConfig> {
    let path = path.as_ref();
    let mut cfg: EnsembleConfig = parse_json(&read(path)?).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    if let Some(seed) = seed_override(std::env::var(SEED_ENV).ok().as_deref())? {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses the value of [`SEED_ENV`]; empty means unset.
pub fn seed_override(value: Option<&str>) -> Result<Option<u64>> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV} must be an unsigned 64-bit integer, got {v:?}"))),
    }
}

/// Shortest representation that round-trips; never more than 17
/// significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v}")
}

pub fn write_sweep_csv<W: Write>(records: &[TrialRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.p,
            r.k,
            r.n,
            format_real(r.alpha),
            format_real(r.rho_multiplier),
            format_real(r.rho),
            r.trial_index,
            r.trial_seed,
            r.pwg_exact as u8,
            r.dcl_exact as u8
        )?;
    }
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{AGGREGATE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.p,
            format_real(r.alpha),
            format_real(r.rho_multiplier),
            format_real(r.pwg_rate),
            format_real(r.dcl_rate),
            r.trials
        )?;
    }
    Ok(())
}

pub fn read_aggregate_csv(path: impl AsRef<Path>) -> Result<Vec<AggregateRow>> {
    let path = path.as_ref();
    let text = read(path)?;
    parse_aggregate_csv(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_aggregate_csv(text: &str) -> Result<Vec<AggregateRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != AGGREGATE_HEADER {
        return Err(Error::Parse(format!(
            "unexpected header {header:?}, expected {AGGREGATE_HEADER:?}"
        )));
    }
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<AggregateRow>, _>>()
        .map_err(|e| Error::Parse(e.to_string()))?;
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    Ok(rows)
}

/// `<output>.agg.csv`
pub fn aggregate_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".agg.csv");
    PathBuf::from(s)
}

/// `<output>.meta.json`: the resolved config, including the noise level.
pub fn meta_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}
