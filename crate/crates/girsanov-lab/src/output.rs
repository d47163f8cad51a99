//! Artifact formatting: number formatting, spec hashing, CSV writers for
//! paths and diagnostics, binary path dumps, run manifests and directories.
//!
//! Every text artifact uses `\n` line endings, `.` as the decimal separator
//! and 17 significant digits (see [`g17`]), so a parse of any number
//! reproduces its exact bit pattern.  Mode labels contain commas
//! (`"j=1,cos"`); CSV writers quote them per RFC 4180.  JSON summaries
//! carry the spec hash and master seed but never a timestamp -- reruns with
//! the same config and seed must be byte-identical.  Timestamps live only
//! in [`Manifest`] and in run-directory names.

use std::borrow::Cow;
use std::fs;
use std::io::{Read as IoRead, Write as IoWrite};
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};

use crate::ergodics::StationaryStats;
use crate::error::{Error, Result};
use crate::girsanov::PathWeightRow;
use crate::linsim::{PathKind, PathRecord};
use crate::nonlinsim::TwinPathResult;
use crate::spectral::ModelSpec;

/// Formats a float with 17 significant digits, enough to reproduce the
/// exact bit pattern on parse.  All CSV artifacts use this format.
pub fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Quotes a CSV field per RFC 4180 when it contains a comma, quote or
/// newline; passes it through untouched otherwise.
pub fn csv_field(s: &str) -> Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        Cow::Owned(format!("\"{}\"", s.replace('"', "\"\"")))
    } else {
        Cow::Borrowed(s)
    }
}

/// FNV-1a hash of the canonical JSON serialization of a spec.  Stamped into
/// binary dumps and manifests so artifacts cannot be replayed against the
/// wrong model.
pub fn spec_hash(spec: &ModelSpec) -> u64 {
    let json = serde_json::to_string(spec).expect("spec serializes");
    fnv1a(json.as_bytes())
}

/// FNV-1a hash of a config file's bytes; names the run directory.
pub fn config_hash(text: &str) -> u64 {
    fnv1a(text.as_bytes())
}

pub fn hex64(h: u64) -> String {
    format!("{h:016x}")
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1_0000_01b3);
    }
    hash
}

/// Serializes a possibly-infinite `f64` (for example an untruncated
/// level): finite values as numbers, infinities as the strings
/// `"inf"`/`"-inf"`.  Plain JSON has no infinity literal and the default
/// would silently write `null`.
pub fn serialize_extended<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else if *x < 0.0 {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("nan")
    }
}

/// Writes a recorded path as CSV with columns `time,mode_label,re,im`: one
/// row per (grid time, retained complex pair).
pub fn write_path_csv<W: IoWrite>(record: &PathRecord, mut w: W) -> Result<()> {
    let spectrum = record.spectrum();
    writeln!(w, "time,mode_label,re,im")?;
    for (m, time) in record.times.iter().enumerate() {
        let field = record.state_field(m);
        for (pair, c) in field.coeffs().iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{}",
                g17(*time),
                csv_field(&spectrum.pair_label(pair)),
                g17(c.re),
                g17(c.im)
            )?;
        }
    }
    Ok(())
}

/// Writes per-path reweighting results as CSV with columns
/// `path_id,V,density,Q_T,truncated_flag` (flag as `0`/`1`).
pub fn write_girsanov_csv<W: IoWrite>(rows: &[PathWeightRow], mut w: W) -> Result<()> {
    writeln!(w, "path_id,V,density,Q_T,truncated_flag")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.path_id,
            g17(r.exponent),
            g17(r.density),
            g17(r.q_t),
            u8::from(r.truncated)
        )?;
    }
    Ok(())
}

/// Writes stationary diagnostics as CSV with columns
/// `mode_label,var_theory,var_empirical,z_score,ks_statistic,ks_critical`.
pub fn write_ergodics_csv<W: IoWrite>(stats: &StationaryStats, mut w: W) -> Result<()> {
    writeln!(w, "mode_label,var_theory,var_empirical,z_score,ks_statistic,ks_critical")?;
    for r in &stats.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            csv_field(&r.label),
            g17(r.var_theory),
            g17(r.var_empirical),
            g17(r.z_score),
            g17(r.ks_statistic),
            g17(r.ks_critical)
        )?;
    }
    Ok(())
}

/// Writes growth-audit samples as CSV with columns `sample_id,growth_ratio`.
pub fn write_growth_csv<W: IoWrite>(audit: &crate::operators::GrowthAudit, mut w: W) -> Result<()> {
    writeln!(w, "sample_id,growth_ratio")?;
    for (i, r) in audit.ratios.iter().enumerate() {
        writeln!(w, "{i},{}", g17(*r))?;
    }
    Ok(())
}

/// Writes a twin-path divergence trace as CSV with columns
/// `time,divergence,budget`.
pub fn write_twin_csv<W: IoWrite>(twin: &TwinPathResult, mut w: W) -> Result<()> {
    writeln!(w, "time,divergence,budget")?;
    for i in 0..twin.times.len() {
        writeln!(
            w,
            "{},{},{}",
            g17(twin.times[i]),
            g17(twin.divergence[i]),
            g17(twin.budget[i])
        )?;
    }
    Ok(())
}

const DUMP_MAGIC: [u8; 4] = *b"GLPD";
const DUMP_VERSION: u32 = 1;
/// Allocation guard for the reader: refuses dumps claiming more state
/// values than this (8 GiB of f64s).
const DUMP_MAX_VALUES: u64 = 1 << 30;

/// A binary path dump read back from disk.  The layout is:
/// magic `GLPD`, `u32` version, `u8` path kind, three reserved bytes, then
/// `u64` spec hash, `u64` seed, `f64` step, `u64` time count, `u64` dof
/// count, the grid times, and the states row-major -- every integer and
/// float little-endian.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryDump {
    pub kind: PathKind,
    pub spec_hash: u64,
    pub seed: u64,
    pub dt: f64,
    pub times: Vec<f64>,
    /// One dof vector per grid time, bit-identical to the recorded states.
    pub states: Vec<Vec<f64>>,
}

impl BinaryDump {
    /// Errors unless the dump was produced under `spec`.
    pub fn verify_spec(&self, spec: &ModelSpec) -> Result<()> {
        let expected = spec_hash(spec);
        if self.spec_hash != expected {
            return Err(Error::CorruptDump(format!(
                "spec hash {} does not match expected {}",
                hex64(self.spec_hash),
                hex64(expected)
            )));
        }
        Ok(())
    }
}

/// Writes a recorded path as a self-describing binary dump.
pub fn write_path_binary<W: IoWrite>(record: &PathRecord, mut w: W) -> Result<()> {
    let hash = spec_hash(record.spectrum().spec());
    w.write_all(&DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    let kind: u8 = match record.kind {
        PathKind::Linear => 0,
        PathKind::Nonlinear => 1,
    };
    w.write_all(&[kind, 0, 0, 0])?;
    w.write_all(&hash.to_le_bytes())?;
    w.write_all(&record.seed.to_le_bytes())?;
    w.write_all(&record.dt.to_le_bytes())?;
    w.write_all(&(record.times.len() as u64).to_le_bytes())?;
    let num_dofs = record.states.first().map_or(0, |s| s.len());
    w.write_all(&(num_dofs as u64).to_le_bytes())?;
    for t in &record.times {
        w.write_all(&t.to_le_bytes())?;
    }
    for state in &record.states {
        for v in state {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads and validates a binary path dump.
pub fn read_path_binary<R: IoRead>(mut r: R) -> Result<BinaryDump> {
    let mut magic = [0u8; 4];
    read_all(&mut r, &mut magic)?;
    if magic != DUMP_MAGIC {
        return Err(Error::CorruptDump(format!("bad magic {magic:02x?}")));
    }
    let version = read_u32(&mut r)?;
    if version != DUMP_VERSION {
        return Err(Error::CorruptDump(format!(
            "unsupported version {version} (expected {DUMP_VERSION})"
        )));
    }
    let mut kind_bytes = [0u8; 4];
    read_all(&mut r, &mut kind_bytes)?;
    let kind = match kind_bytes[0] {
        0 => PathKind::Linear,
        1 => PathKind::Nonlinear,
        other => return Err(Error::CorruptDump(format!("unknown path kind {other}"))),
    };
    let spec_hash = read_u64(&mut r)?;
    let seed = read_u64(&mut r)?;
    let dt = read_f64(&mut r)?;
    let num_times = read_u64(&mut r)?;
    let num_dofs = read_u64(&mut r)?;
    let total = num_times
        .checked_mul(num_dofs)
        .filter(|&t| t <= DUMP_MAX_VALUES && num_times <= DUMP_MAX_VALUES)
        .ok_or_else(|| {
            Error::CorruptDump(format!("implausible size {num_times} x {num_dofs}"))
        })?;
    let _ = total;
    let mut times = Vec::with_capacity(num_times as usize);
    for _ in 0..num_times {
        times.push(read_f64(&mut r)?);
    }
    let mut states = Vec::with_capacity(num_times as usize);
    for _ in 0..num_times {
        let mut state = Vec::with_capacity(num_dofs as usize);
        for _ in 0..num_dofs {
            state.push(read_f64(&mut r)?);
        }
        states.push(state);
    }
    Ok(BinaryDump { kind, spec_hash, seed, dt, times, states })
}

fn read_all<R: IoRead>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::CorruptDump("truncated dump".into())
        } else {
            Error::Io(e)
        }
    })
}

fn read_u32<R: IoRead>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_all(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: IoRead>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_all(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: IoRead>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_all(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Envelope for `summary.json`: the experiment's report plus everything
/// needed to reproduce it (spec hash, master seed, tool version).  No
/// timestamp: identical runs serialize to identical bytes.
#[derive(Clone, Debug, Serialize)]
pub struct Summary<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub spec_hash: String,
    pub master_seed: u64,
    pub report: T,
}

pub fn summary<T: Serialize>(spec: &ModelSpec, master_seed: u64, report: T) -> Summary<T> {
    Summary {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        spec_hash: hex64(spec_hash(spec)),
        master_seed,
        report,
    }
}

/// Pretty-prints a serializable value as JSON with a trailing newline.
pub fn write_json<W: IoWrite, T: Serialize>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// `manifest.json`: the one artifact that records when and how a run was
/// invoked, alongside the full model spec.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub created_utc: String,
    pub command: String,
    pub master_seed: u64,
    pub threads: usize,
    pub spec_hash: String,
    pub spec: ModelSpec,
}

impl Manifest {
    pub fn new(spec: &ModelSpec, master_seed: u64, threads: usize, command: impl Into<String>) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            created_utc: chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            command: command.into(),
            master_seed,
            threads,
            spec_hash: hex64(spec_hash(spec)),
            spec: spec.clone(),
        }
    }
}

/// Name for a fresh run directory: UTC timestamp plus the config hash,
/// for example `20260825T143122Z-9f3a5c01d2e4b677`.
pub fn run_dir_name(config_hash: u64) -> String {
    format!(
        "{}-{}",
        chrono::Utc::now().format("%Y%m%dT%H%M%SZ"),
        hex64(config_hash)
    )
}

/// Creates a uniquely named run directory under `base` and returns its
/// path.  Appends `-1`, `-2`, ... if two runs collide within one second.
pub fn create_run_dir(base: &Path, config_hash: u64) -> Result<PathBuf> {
    fs::create_dir_all(base)?;
    let stem = run_dir_name(config_hash);
    let mut candidate = base.join(&stem);
    let mut suffix = 0u32;
    loop {
        match fs::create_dir(&candidate) {
            Ok(()) => return Ok(candidate),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                suffix += 1;
                candidate = base.join(format!("{stem}-{suffix}"));
            }
            Err(e) => return Err(Error::Io(e)),
        }
    }
}
