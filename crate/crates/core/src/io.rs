//! CSV and manifest emission. Floats are written with 17 significant digits
//! so that files round-trip bit-exactly; every CSV starts with a comment
//! line carrying the config hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::fisher::DfiPoint;
use crate::numkit::Mat2c;
use crate::pipeline::{BiasScaling, ErrorSummary, VarianceStudy};
use crate::qsp::SampleSet;
use crate::reconstruct::PointwiseRow;
use crate::tomography::Ptm;

/// Seventeen significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// SHA-256 hex digest of a value's JSON encoding.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    format!("{:x}", Sha256::digest(&json))
}

/// An in-memory CSV file. Built completely before anything touches disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Written after the data rows, e.g. a fitted slope.
    pub footer: Option<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![], footer: None }
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| fmt_f64(x)).collect());
    }

    pub fn write(&self, dir: &Path, hash: &str) -> Result<PathBuf> {
        let path = dir.join(&self.name);
        let mut buf = format!("# config_hash: {hash}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.columns)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            if let Some(f) = &self.footer {
                w.write_record(f)?;
            }
            w.flush()?;
        }
        fs::write(&path, buf)?;
        Ok(path)
    }
}

fn entries(u: &Mat2c) -> [f64; 8] {
    [u[(0, 0)].re, u[(0, 0)].im, u[(0, 1)].re, u[(0, 1)].im, u[(1, 0)].re, u[(1, 0)].im, u[(1, 1)].re, u[(1, 1)].im]
}

const UNITARY_COLUMNS: [&str; 8] =
    ["u00_re", "u00_im", "u01_re", "u01_im", "u10_re", "u10_im", "u11_re", "u11_im"];

pub fn samples_table(samples: &SampleSet, omegas: Option<&[f64]>) -> Table {
    let mut cols = vec!["theta", "omega"];
    cols.extend(UNITARY_COLUMNS);
    let mut t = Table::new("samples.csv", &cols);
    for (j, (theta, u)) in samples.thetas.iter().zip(&samples.unitaries).enumerate() {
        let omega = omegas.map_or(f64::NAN, |o| o[j]);
        let mut row = vec![*theta, omega];
        row.extend(entries(u));
        t.push_floats(&row);
    }
    t
}

/// Row 0 is the identity-gate reference, rows 1.. the experiments.
pub fn ptm_table(omegas: &[f64], reference: &Ptm, ptms: &[Ptm]) -> Table {
    let mut cols = vec!["omega", "t_x", "t_y", "t_z"];
    let block: Vec<String> = (0..3).flat_map(|i| (0..3).map(move |j| format!("a{i}{j}"))).collect();
    cols.extend(block.iter().map(String::as_str));
    cols.push("clamped");
    let mut t = Table::new("ptms.csv", &cols);
    for (omega, p) in std::iter::once((0.0, reference)).chain(omegas.iter().copied().zip(ptms)) {
        let mut row: Vec<String> = [omega, p.t_vec.x, p.t_vec.y, p.t_vec.z].iter().map(|&x| fmt_f64(x)).collect();
        for i in 0..3 {
            for j in 0..3 {
                row.push(fmt_f64(p.a[(i, j)]));
            }
        }
        row.push(p.clamped.to_string());
        t.rows.push(row);
    }
    t
}

pub fn pointwise_table(rows: &[PointwiseRow]) -> Table {
    let mut t = Table::new("pulse_table.csv", &["t", "phi_true", "phi_est", "abs_err"]);
    for r in rows {
        t.push_floats(&[r.t, r.phi_true, r.phi_est, r.abs_err]);
    }
    t
}

pub fn error_table(errors: &[ErrorSummary]) -> Table {
    let mut t = Table::new("error_table.csv", &["repetition", "sup_interior", "sup_full", "mean_interior"]);
    for (k, e) in errors.iter().enumerate() {
        t.rows.push(vec![k.to_string(), fmt_f64(e.sup_interior), fmt_f64(e.sup_full), fmt_f64(e.mean_interior)]);
    }
    t
}

/// Phases against the segment averages of the true pulse; `std` may be
/// empty when there is a single estimate.
pub fn phases_table(duration: f64, estimate: &[f64], std: &[f64], reference: &[f64]) -> Table {
    let mut t = Table::new("phases.csv", &["j", "t_mid", "psi", "psi_std", "phi_avg"]);
    let h = duration / estimate.len() as f64;
    for (j, psi) in estimate.iter().enumerate() {
        let s = std.get(j).copied().unwrap_or(0.0);
        let r = reference.get(j).copied().unwrap_or(f64::NAN);
        let mut row = vec![j.to_string()];
        row.extend([(j as f64 + 0.5) * h, *psi, s, r].iter().map(|&x| fmt_f64(x)));
        t.rows.push(row);
    }
    t
}

pub fn scaling_table(s: &BiasScaling) -> Table {
    let mut t = Table::new("scaling.csv", &["L", "sup_interior"]);
    for (l, e) in s.degrees.iter().zip(&s.sup_interior) {
        t.rows.push(vec![l.to_string(), fmt_f64(*e)]);
    }
    t.footer = Some(vec!["slope".into(), s.slope.map_or_else(|| "nan".into(), fmt_f64)]);
    t
}

pub fn variance_table(v: &VarianceStudy) -> Table {
    let mut t = Table::new("variance.csv", &["j", "psi_center", "psi_mean", "psi_std", "crlb_std"]);
    for j in 0..v.center.len() {
        let mut row = vec![j.to_string()];
        row.extend([v.center[j], v.mean[j], v.std[j], v.crlb[j].sqrt()].iter().map(|&x| fmt_f64(x)));
        t.rows.push(row);
    }
    t
}

pub fn dfi_table(points: &[DfiPoint]) -> Table {
    let mut t = Table::new(
        "dfi.csv",
        &["nu", "L", "dfi", "max_eig", "circulant_bound", "small_nu_bound", "large_nu_bound"],
    );
    for p in points {
        let mut row = vec![fmt_f64(p.nu), p.degree.to_string()];
        row.extend(
            [p.dfi, p.max_eig, p.circulant_bound, p.small_nu_bound, p.large_nu_bound].iter().map(|&x| fmt_f64(x)),
        );
        t.rows.push(row);
    }
    t
}

/// A square real matrix, one row per line.
pub fn matrix_table(name: &str, m: &nalgebra::DMatrix<f64>) -> Table {
    let names: Vec<String> = (0..m.ncols()).map(|j| format!("c{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut t = Table::new(name, &refs);
    for i in 0..m.nrows() {
        t.push_floats(&m.row(i).iter().copied().collect::<Vec<_>>());
    }
    t
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub versions: BTreeMap<String, String>,
    pub files: Vec<String>,
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn new<T: Serialize>(command: &str, config: &T, seed: Option<u64>) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("qsp-pulse".to_string(), env!("CARGO_PKG_VERSION").to_string());
        Manifest {
            command: command.into(),
            config: serde_json::to_value(config).expect("config serializes"),
            config_hash: config_hash(config),
            seed,
            versions,
            files: vec![],
            summary: serde_json::Value::Null,
        }
    }
}

/// Write every table plus manifest.json into `dir`. Files are first written
/// to a staging directory and then renamed, so a failure leaves no partial
/// set behind.
pub fn emit(dir: &Path, tables: &[Table], mut manifest: Manifest) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let staging = dir.join(".staging");
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir(&staging)?;
    let result = (|| {
        manifest.files = tables.iter().map(|t| t.name.clone()).collect();
        for t in tables {
            t.write(&staging, &manifest.config_hash)?;
        }
        let json = serde_json::to_string_pretty(&manifest)?;
        fs::write(staging.join("manifest.json"), json + "\n")?;
        let mut out = vec![];
        for name in manifest.files.iter().map(String::as_str).chain(["manifest.json"]) {
            fs::rename(staging.join(name), dir.join(name))?;
            out.push(dir.join(name));
        }
        Ok(out)
    })();
    let _ = fs::remove_dir_all(&staging);
    result
}
