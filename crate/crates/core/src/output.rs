//! Result files.
//!
//! `csv` writes `sff.csv` with one row per `(m, t)` and the metadata sidecar
//! `sff.json`; `json` writes a single `sff.json` holding the metadata and the
//! rows. Floats are printed in shortest round-trip form, so reading a file
//! back gives the written values bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::{Result, SffError};
use crate::experiment::ResultBundle;

pub const CSV_FILE: &str = "sff.csv";
pub const JSON_FILE: &str = "sff.json";
pub const CSV_HEADER: [&str; 8] = [
    "t",
    "tau",
    "m",
    "kappa_mean",
    "kappa_stderr",
    "theory_exact",
    "theory_perturbative",
    "n_realizations",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub t: usize,
    pub tau: f64,
    pub m: u32,
    pub kappa_mean: f64,
    pub kappa_stderr: f64,
    pub theory_exact: Option<f64>,
    pub theory_perturbative: Option<f64>,
    pub n_realizations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub gamma: f64,
    pub epsilon: f64,
    pub chi: f64,
    pub tau_sh: f64,
    pub t_th: Option<f64>,
    pub tau_th: Option<f64>,
    pub t_e: Option<f64>,
    pub library_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct JsonResults {
    metadata: Metadata,
    rows: Vec<ResultRow>,
}

impl ResultBundle {
    /// Rows ordered by `m`, then `t`.
    pub fn rows(&self) -> Vec<ResultRow> {
        let r = &self.rescaled;
        let mut rows = Vec::with_capacity(r.tau.len() * r.orders.len());
        for &m in &r.orders {
            let exact = self.theory_exact.kappa(m);
            let pert = self.theory_perturbative.as_ref().map(|c| c.kappa(m));
            for (i, &tau) in r.tau.iter().enumerate() {
                rows.push(ResultRow {
                    t: i + 1,
                    tau,
                    m,
                    kappa_mean: r.kappa(m)[i],
                    kappa_stderr: r.kappa_stderr(m)[i],
                    theory_exact: exact[i],
                    theory_perturbative: pert.and_then(|p| p[i]),
                    n_realizations: r.n_realizations,
                });
            }
        }
        rows
    }

    pub fn metadata(&self) -> Metadata {
        let s = &self.scales;
        Metadata {
            config: self.config.clone(),
            master_seed: self.config.master_seed,
            gamma: s.gamma,
            epsilon: s.epsilon,
            chi: s.chi,
            tau_sh: s.tau_sh,
            t_th: s.t_th,
            tau_th: s.tau_th,
            t_e: s.t_e,
            library_version: self.library_version.clone(),
        }
    }
}

/// Writes the bundle into directory `dir`, creating it if needed. Returns
/// the files written.
pub fn emit_results(bundle: &ResultBundle, format: OutputFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| SffError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let json_path = dir.join(JSON_FILE);
    match format {
        OutputFormat::Csv => {
            let csv_path = dir.join(CSV_FILE);
            write_csv(&bundle.rows(), &csv_path)?;
            write_json(&bundle.metadata(), &json_path)?;
            Ok(vec![csv_path, json_path])
        }
        OutputFormat::Json => {
            let all = JsonResults {
                metadata: bundle.metadata(),
                rows: bundle.rows(),
            };
            write_json(&all, &json_path)?;
            Ok(vec![json_path])
        }
    }
}

fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let csv_err = |source| SffError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.tau.to_string(),
            r.m.to_string(),
            r.kappa_mean.to_string(),
            r.kappa_stderr.to_string(),
            opt(r.theory_exact),
            opt(r.theory_perturbative),
            r.n_realizations.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| SffError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| SffError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| SffError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads rows written by [`emit_results`] in csv format.
pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let csv_err = |source| SffError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(SffError::Shape(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header
        )));
    }
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err)
}

/// Reads the metadata sidecar (or the metadata part of a json result file).
pub fn read_metadata(path: &Path) -> Result<Metadata> {
    #[derive(Deserialize)]
    struct Wrapped {
        metadata: Metadata,
    }
    let text = fs::read_to_string(path).map_err(|source| SffError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let json_err = |source| SffError::Json {
        path: path.to_path_buf(),
        source,
    };
    match serde_json::from_str::<Wrapped>(&text) {
        Ok(w) => Ok(w.metadata),
        Err(_) => serde_json::from_str(&text).map_err(json_err),
    }
}

/// Reads the rows of a json result file.
pub fn read_json_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|source| SffError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let all: JsonResults = serde_json::from_str(&text).map_err(|source| SffError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(all.rows)
}
