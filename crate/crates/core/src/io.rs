//! Artifact formats: CSV for numeric tables, JSON for regeneration specs.
//!
//! Every table is UTF-8 with a header row, '.' decimals, and '\n' line
//! ends. Floats go through the shortest round-trip formatter, so a file
//! read back reproduces the exact bits and re-running a generation spec
//! reproduces the exact file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::badset::{DimensionFit, ScanReport};
use crate::coeffs::{CoeffsError, SeqSpec, VerblunskySequence};
use crate::measures::{Atom, HolderMeasure, MeasureError};
use crate::prufer::{PruferError, PruferEvolution};
use crate::szego::{self, CirclePoint, SzegoError};
use crate::wkb::{windowed_slopes, WkbResult};

/// Bumped when any artifact schema changes shape.
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}:{line}:{column}: {message}")]
    Json {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Coeffs(#[from] CoeffsError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Szego(#[from] SzegoError),
    #[error(transparent)]
    Prufer(#[from] PruferError),
}

fn json_error(path: &Path, e: serde_json::Error) -> IoError {
    IoError::Json {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let file = File::open(path)?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| json_error(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| json_error(path, e))?;
    w.write_all(b"\n")?;
    Ok(())
}

// ---------------------------------------------------------------- sequences

/// Generation recipe plus the accumulated rotation — everything needed to
/// rebuild a sequence bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceArtifact {
    pub artifact_version: u32,
    #[serde(flatten)]
    pub spec: SeqSpec,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub rotation: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl SequenceArtifact {
    pub fn of(seq: &VerblunskySequence) -> Self {
        SequenceArtifact {
            artifact_version: ARTIFACT_VERSION,
            spec: seq.spec().clone(),
            rotation: seq.rotation(),
        }
    }

    pub fn build(&self) -> Result<VerblunskySequence, CoeffsError> {
        VerblunskySequence::from_spec(&self.spec, self.rotation)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SeqRow {
    n: usize,
    re: f64,
    im: f64,
}

pub fn write_sequence_csv(path: &Path, seq: &VerblunskySequence) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    for (n, v) in seq.values().iter().enumerate() {
        w.serialize(SeqRow {
            n,
            re: v.re,
            im: v.im,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sequence_csv(path: &Path) -> Result<Vec<Complex64>, IoError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize::<SeqRow>() {
        let row = row?;
        out.push(Complex64::new(row.re, row.im));
    }
    Ok(out)
}

pub fn write_sequence_spec(path: &Path, seq: &VerblunskySequence) -> Result<(), IoError> {
    write_json(path, &SequenceArtifact::of(seq))
}

pub fn read_sequence_spec(path: &Path) -> Result<VerblunskySequence, IoError> {
    let artifact: SequenceArtifact = read_json(path)?;
    Ok(artifact.build()?)
}

// ----------------------------------------------------------------- measures

/// Constructive measure recipes accepted by the CLI and stored in artifact
/// headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Cantor {
        ratio: f64,
        level: u32,
        a: f64,
        b: f64,
    },
    Uniform {
        count: usize,
        a: f64,
        b: f64,
    },
    SingleAtom {
        eta: f64,
        w: f64,
    },
}

impl MeasureSpec {
    pub fn build(&self) -> Result<HolderMeasure, MeasureError> {
        match *self {
            MeasureSpec::Cantor { ratio, level, a, b } => HolderMeasure::cantor(ratio, level, a, b),
            MeasureSpec::Uniform { count, a, b } => HolderMeasure::uniform(count, a, b),
            MeasureSpec::SingleAtom { eta, w } => HolderMeasure::single_atom(eta, w),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureArtifact {
    pub artifact_version: u32,
    #[serde(flatten)]
    pub spec: MeasureSpec,
    pub d_target: f64,
    pub support: (f64, f64),
    pub support_gap: f64,
    pub holder_c: f64,
    pub total_mass: f64,
}

impl MeasureArtifact {
    pub fn of(spec: &MeasureSpec, m: &HolderMeasure) -> Self {
        MeasureArtifact {
            artifact_version: ARTIFACT_VERSION,
            spec: spec.clone(),
            d_target: m.d_target(),
            support: m.support(),
            support_gap: m.support_gap(),
            holder_c: m.holder_c(),
            total_mass: m.total_mass(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct AtomRow {
    eta: f64,
    w: f64,
}

pub fn write_measure_csv(path: &Path, m: &HolderMeasure) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    for a in m.atoms() {
        w.serialize(AtomRow { eta: a.eta, w: a.w })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_measure_csv(path: &Path, d_target: f64, level: u32) -> Result<HolderMeasure, IoError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut atoms = Vec::new();
    for row in r.deserialize::<AtomRow>() {
        let row = row?;
        atoms.push(Atom {
            eta: row.eta,
            w: row.w,
        });
    }
    Ok(HolderMeasure::from_atoms(atoms, d_target, level)?)
}

// -------------------------------------------------------------- trajectories

#[derive(Debug, Serialize, Deserialize)]
struct SzegoRow {
    n: usize,
    re_phi: f64,
    im_phi: f64,
    re_psi: f64,
    im_psi: f64,
    log_t_norm: f64,
}

/// Evolve and dump the polynomial trajectory at one circle point.
pub fn write_szego_trajectory(
    path: &Path,
    seq: &VerblunskySequence,
    eta: f64,
    beta: f64,
    n_max: usize,
) -> Result<(), IoError> {
    let point = CirclePoint::new(eta)?;
    let mut w = csv::Writer::from_path(path)?;
    for state in szego::evolve(seq, point, n_max, beta)? {
        let s = state?;
        let scale = 2.0f64.powi(s.scale_exp as i32);
        w.serialize(SzegoRow {
            n: s.n,
            re_phi: s.phi.re * scale,
            im_phi: s.phi.im * scale,
            re_psi: s.psi.re * scale,
            im_psi: s.psi.im * scale,
            log_t_norm: s.log_t_norm(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct PruferRow {
    n: usize,
    log_r: f64,
    theta: f64,
    tau: f64,
    fs_residual: f64,
}

/// Evolve the Prüfer flow and dump one row per step.
pub fn write_prufer_trajectory(
    path: &Path,
    seq: &VerblunskySequence,
    eta: f64,
    beta: f64,
    n_max: usize,
) -> Result<(), IoError> {
    let mut ev = PruferEvolution::start(seq, eta, beta)?;
    let mut w = csv::Writer::from_path(path)?;
    loop {
        let s = ev.state();
        w.serialize(PruferRow {
            n: s.n,
            log_r: s.log_r,
            theta: s.theta,
            tau: s.tau,
            fs_residual: s.fs_residual,
        })?;
        if s.n >= n_max || !ev.step()? {
            break;
        }
    }
    w.flush()?;
    Ok(())
}

// -------------------------------------------------------------------- scans

#[derive(Debug, Serialize, Deserialize)]
pub struct ScanRow {
    pub eta: f64,
    pub sup_log_t: f64,
    pub argmax_n: u32,
    pub failed: u8,
}

pub fn write_scan_csv(path: &Path, report: &ScanReport) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    for i in 0..report.grid.len() {
        w.serialize(ScanRow {
            eta: report.grid[i],
            sup_log_t: report.sup_log_t[i],
            argmax_n: report.argmax_n[i],
            failed: u8::from(report.failed[i]),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scan_csv(path: &Path) -> Result<Vec<ScanRow>, IoError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize::<ScanRow>() {
        out.push(row?);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct DimensionRow {
    scale: f64,
    count: usize,
}

pub fn write_dimension_csv(path: &Path, fit: &DimensionFit) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    for (s, c) in fit.scales.iter().zip(fit.counts.iter()) {
        w.serialize(DimensionRow {
            scale: *s,
            count: *c,
        })?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- wkb tables

#[derive(Debug, Serialize, Deserialize)]
pub struct WkbRow {
    pub l: usize,
    pub lambda_max: f64,
    pub ratio: f64,
    pub slope_window: f64,
}

pub fn write_wkb_csv(path: &Path, results: &[WkbResult]) -> Result<(), IoError> {
    let slopes = windowed_slopes(results, 4);
    let mut w = csv::Writer::from_path(path)?;
    for (r, s) in results.iter().zip(slopes) {
        w.serialize(WkbRow {
            l: r.l,
            lambda_max: r.lambda_max,
            ratio: r.ratio,
            slope_window: s,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_wkb_csv(path: &Path) -> Result<Vec<WkbRow>, IoError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize::<WkbRow>() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn sequence_roundtrip_bits() {
        let dir = tempdir().unwrap();
        let seq = VerblunskySequence::random_weighted(0.6, 0.2, 99, 512)
            .unwrap()
            .rotate(1.25);
        let csv_path = dir.path().join("seq.csv");
        let json_path = dir.path().join("seq.json");
        write_sequence_csv(&csv_path, &seq).unwrap();
        write_sequence_spec(&json_path, &seq).unwrap();

        let values = read_sequence_csv(&csv_path).unwrap();
        assert_eq!(values, seq.values());

        let rebuilt = read_sequence_spec(&json_path).unwrap();
        assert_eq!(rebuilt.values(), seq.values());
        assert_eq!(rebuilt.fingerprint(), seq.fingerprint());
    }

    #[test]
    fn sequence_writes_are_bit_identical_across_runs() {
        let dir = tempdir().unwrap();
        let seq = VerblunskySequence::power_decay(0.7, 0.9, 5, 256).unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_sequence_csv(&a, &seq).unwrap();
        write_sequence_csv(&b, &seq).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn measure_roundtrip() {
        let dir = tempdir().unwrap();
        let spec = MeasureSpec::Cantor {
            ratio: 1.0 / 3.0,
            level: 6,
            a: 0.5,
            b: 5.7,
        };
        let m = spec.build().unwrap();
        let csv_path = dir.path().join("measure.csv");
        write_measure_csv(&csv_path, &m).unwrap();
        let loaded = read_measure_csv(&csv_path, m.d_target(), m.level()).unwrap();
        assert_eq!(loaded.atoms(), m.atoms());
        assert_eq!(loaded.total_mass(), m.total_mass());

        let json_path = dir.path().join("measure.json");
        write_json(&json_path, &MeasureArtifact::of(&spec, &m)).unwrap();
        let header: MeasureArtifact = read_json(&json_path).unwrap();
        assert_eq!(header.spec, spec);
        assert_eq!(header.d_target, m.d_target());
    }

    #[test]
    fn trajectories_have_headers_and_rows() {
        let dir = tempdir().unwrap();
        let seq = VerblunskySequence::power_decay(0.5, 1.0, 3, 32).unwrap();
        let sz = dir.path().join("szego.csv");
        write_szego_trajectory(&sz, &seq, 1.2, 0.0, 32).unwrap();
        let text = std::fs::read_to_string(&sz).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,re_phi,im_phi,re_psi,im_psi,log_t_norm"
        );
        assert_eq!(lines.count(), 33);

        let pr = dir.path().join("prufer.csv");
        write_prufer_trajectory(&pr, &seq, 1.2, 0.0, 32).unwrap();
        let text = std::fs::read_to_string(&pr).unwrap();
        assert!(text.starts_with("n,log_r,theta,tau,fs_residual\n"));
        assert_eq!(text.lines().count(), 34);
    }

    #[test]
    fn scan_and_wkb_tables_roundtrip() {
        let dir = tempdir().unwrap();
        let seq = VerblunskySequence::random_weighted(0.5, 0.2, 1, 200).unwrap();
        let (grid, h) = crate::badset::uniform_grid(16, 0.4, 5.8).unwrap();
        let report = crate::badset::scan(&seq, &grid, h, 200, &[0.0]).unwrap();
        let path = dir.path().join("scan.csv");
        write_scan_csv(&path, &report).unwrap();
        let rows = read_scan_csv(&path).unwrap();
        assert_eq!(rows.len(), 16);
        for (row, (eta, sup)) in rows.iter().zip(grid.iter().zip(&report.sup_log_t)) {
            assert_eq!(row.eta, *eta);
            assert_eq!(row.sup_log_t, *sup);
            assert_eq!(row.failed, 0);
        }

        let m = HolderMeasure::single_atom(1.5, 0.5).unwrap();
        let results: Vec<_> = [3usize, 7, 15, 31]
            .iter()
            .map(|&l| crate::wkb::wkb_gram_norm(&m, &seq, l, 0.0).unwrap())
            .collect();
        let path = dir.path().join("wkb.csv");
        write_wkb_csv(&path, &results).unwrap();
        let rows = read_wkb_csv(&path).unwrap();
        assert_eq!(rows.len(), 4);
        for (row, r) in rows.iter().zip(&results) {
            assert_eq!(row.l, r.l);
            assert_eq!(row.lambda_max, r.lambda_max);
        }
    }

    #[test]
    fn json_errors_carry_position() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("broken.json");
        std::fs::write(&path, "{\n  \"family\": \"power_decay\",\n  oops\n}").unwrap();
        let err = read_sequence_spec(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("broken.json:3:"), "got: {msg}");
    }
}
