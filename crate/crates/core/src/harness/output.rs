//! CSV results and TOML metadata sidecars.
//!
//! BER files carry the fixed header
//! `point,bob_errors,eve_errors,ref_errors,bit_count,bob_ber,eve_ber,ref_ber,seed`;
//! `ref_*` fields are empty unless the scenario has a reference link. Floats
//! are written in shortest round-trip form, so reading a file back yields
//! identical values.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::engine::{SearchSpaceRow, TrialRecord, PRNG_NAME};
use crate::error::{Error, Result};
use crate::security::SinrCurve;

pub const BER_HEADER: &str = "point,bob_errors,eve_errors,ref_errors,bit_count,bob_ber,eve_ber,ref_ber,seed";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            _ => unreachable!(),
        }
    } else {
        Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

fn write_rows<T: Serialize>(rows: &[T], header: &str, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header.split(',')).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn emit_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    write_rows(records, BER_HEADER, path)
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().collect::<Vec<_>>().join(",") != BER_HEADER {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "unexpected header row".into(),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}

#[derive(Serialize)]
struct CurveRow {
    c2max: f64,
    sinr_linear: f64,
    sinr_db: f64,
}

pub fn emit_sinr_csv(curve: &SinrCurve, path: &Path) -> Result<()> {
    let rows: Vec<CurveRow> = (0..curve.abscissa.len())
        .map(|i| CurveRow {
            c2max: curve.abscissa[i],
            sinr_linear: curve.sinr_linear[i],
            sinr_db: curve.sinr_db[i],
        })
        .collect();
    write_rows(&rows, "c2max,sinr_linear,sinr_db", path)
}

pub fn emit_search_space_csv(rows: &[SearchSpaceRow], path: &Path) -> Result<()> {
    write_rows(rows, "n,m,bits", path)
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let p = k as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Serialize)]
struct PointMeta {
    point: f64,
    wall_ms: f64,
    bob_ber_wilson95: [f64; 2],
    eve_ber_wilson95: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    ref_ber_wilson95: Option<[f64; 2]>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'static str,
    prng: &'static str,
    seed_scheme: &'static str,
    master_seed: u64,
    keystream_polynomial: String,
    keystream_seed: u64,
    total_wall_ms: f64,
    config: &'a ExperimentConfig,
    points: Vec<PointMeta>,
}

/// `results.csv` → `results.csv.meta.toml`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta.toml");
    PathBuf::from(s)
}

/// Writes the metadata sidecar next to `csv_path` and returns its location.
pub fn write_metadata(
    cfg: &ExperimentConfig,
    records: &[TrialRecord],
    total_wall_ms: f64,
    csv_path: &Path,
) -> Result<PathBuf> {
    let pair = |(a, b): (f64, f64)| [a, b];
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        prng: PRNG_NAME,
        seed_scheme: "trial t uses SplitMix64(master + (t+1)*0x9E3779B97F4A7C15); \
                      stream 0 data+channel, 1 Bob noise, 2 Eve noise, 3 Eve schedule, 4/5 CSI errors",
        master_seed: cfg.seed,
        keystream_polynomial: cfg.polynomial()?.to_string(),
        keystream_seed: cfg.keystream.seed,
        total_wall_ms,
        config: cfg,
        points: records
            .iter()
            .map(|r| PointMeta {
                point: r.point,
                wall_ms: r.wall_ms,
                bob_ber_wilson95: pair(wilson_interval(r.bob_errors, r.bit_count)),
                eve_ber_wilson95: pair(wilson_interval(r.eve_errors, r.bit_count)),
                ref_ber_wilson95: r.ref_errors.map(|k| pair(wilson_interval(k, r.bit_count))),
            })
            .collect(),
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Format {
        path: csv_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let path = sidecar_path(csv_path);
    let mut f = std::fs::File::create(&path).map_err(io_err(&path))?;
    f.write_all(text.as_bytes()).map_err(io_err(&path))?;
    Ok(path)
}
