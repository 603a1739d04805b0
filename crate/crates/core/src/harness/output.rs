//! Output files.
//!
//! - `curve.csv`: `two_theta1_deg,v_sim,v_oracle,abs_dev`, one row per θ1.
//! - `counts.csv`: `two_theta1_deg,phi_deg,n0,n1,n_discard`, one row per cell.
//! - `gamma.csv` or `gamma.bin`: the per-event dataset (see below).
//! - `manifest.json`: the sweep specification plus the code version.
//!
//! Numbers are written in scientific notation with 16 significant digits.
//!
//! Per-event records carry `l` (1-based within a cell), the outcome code
//! `x_l` (0 = D0, 1 = D1, 2 = discarded) and the cell settings. In the CSV
//! form the QWP column is empty when the plate is removed.
//!
//! The binary form starts with the 16-byte magic [`GAMMA_MAGIC`] and a
//! little-endian `u64` cell count. Each cell is a header of four `f64`
//! (φ, θ_HWP0, θ_HWP1, θ_QWP with NaN for "removed") and a `u64` event count,
//! followed by one `u8` outcome code per event.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CurvePoint, PhiCounts, SweepSpec};
use crate::error::{Error, Result};
use crate::network::{ApparatusSettings, EventDataset, Outcome};

pub const CURVE_HEADER: [&str; 4] = ["two_theta1_deg", "v_sim", "v_oracle", "abs_dev"];
pub const COUNTS_HEADER: [&str; 5] = ["two_theta1_deg", "phi_deg", "n0", "n1", "n_discard"];
pub const GAMMA_HEADER: [&str; 6] = [
    "l",
    "x_l",
    "phi_deg",
    "theta_hwp0_deg",
    "theta_hwp1_deg",
    "theta_qwp_deg",
];
pub const GAMMA_MAGIC: [u8; 16] = *b"QERASER-GAMMA-01";

pub fn fmt_num(x: f64) -> String {
    format!("{x:.15e}")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    Csv,
    #[default]
    Bin,
    None,
}

/// File names inside an output directory.
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub dir: PathBuf,
}

impl OutputPaths {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        OutputPaths { dir: dir.into() }
    }

    pub fn curve(&self) -> PathBuf {
        self.dir.join("curve.csv")
    }

    pub fn counts(&self) -> PathBuf {
        self.dir.join("counts.csv")
    }

    pub fn manifest(&self) -> PathBuf {
        self.dir.join("manifest.json")
    }

    pub fn dataset(&self, format: DatasetFormat) -> Option<PathBuf> {
        match format {
            DatasetFormat::Csv => Some(self.dir.join("gamma.csv")),
            DatasetFormat::Bin => Some(self.dir.join("gamma.bin")),
            DatasetFormat::None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub spec: SweepSpec,
}

impl Manifest {
    pub fn new(spec: &SweepSpec) -> Self {
        Manifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            spec: spec.clone(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::format(path, e)
}

pub fn write_curve(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(CURVE_HEADER).map_err(csv_err(path))?;
    for p in points {
        w.write_record([
            fmt_num(p.two_theta1_deg),
            fmt_num(p.v_sim),
            fmt_num(p.v_oracle),
            fmt_num(p.abs_dev),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_counts(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(COUNTS_HEADER).map_err(csv_err(path))?;
    for p in points {
        for c in &p.counts {
            w.write_record([
                fmt_num(p.two_theta1_deg),
                fmt_num(c.phi_deg),
                c.n0.to_string(),
                c.n1.to_string(),
                c.n_discard.to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dataset_csv(path: &Path, datasets: &[EventDataset]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(GAMMA_HEADER).map_err(csv_err(path))?;
    for d in datasets {
        let s = &d.settings;
        let fixed = [
            fmt_num(s.phi_deg),
            fmt_num(s.theta_hwp0_deg),
            fmt_num(s.theta_hwp1_deg),
            s.theta_qwp_deg.map(fmt_num).unwrap_or_default(),
        ];
        for (l, o) in d.outcomes.iter().enumerate() {
            w.write_field((l + 1).to_string()).map_err(csv_err(path))?;
            w.write_field(o.code().to_string()).map_err(csv_err(path))?;
            w.write_record(&fixed).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dataset_bin(path: &Path, datasets: &[EventDataset]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    w.write_all(&GAMMA_MAGIC).map_err(io)?;
    w.write_all(&(datasets.len() as u64).to_le_bytes()).map_err(io)?;
    for d in datasets {
        let s = &d.settings;
        for v in [
            s.phi_deg,
            s.theta_hwp0_deg,
            s.theta_hwp1_deg,
            s.theta_qwp_deg.unwrap_or(f64::NAN),
        ] {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        w.write_all(&(d.outcomes.len() as u64).to_le_bytes()).map_err(io)?;
        let codes: Vec<u8> = d.outcomes.iter().map(|o| o.code()).collect();
        w.write_all(&codes).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Cell of a binary dataset: the settings and the outcome sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetCell {
    pub settings: ApparatusSettings,
    pub outcomes: Vec<Outcome>,
}

pub fn read_dataset_bin(path: &Path) -> Result<Vec<DatasetCell>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let io = |e| Error::io(path, e);
    let mut magic = [0u8; 16];
    r.read_exact(&mut magic).map_err(io)?;
    if magic != GAMMA_MAGIC {
        return Err(Error::format(path, "not an event dataset (bad magic)"));
    }
    let mut word = [0u8; 8];
    let mut next_u64 = |r: &mut BufReader<File>| -> Result<u64> {
        r.read_exact(&mut word).map_err(io)?;
        Ok(u64::from_le_bytes(word))
    };
    let cells = next_u64(&mut r)?;
    let mut out = Vec::new();
    for _ in 0..cells {
        let mut angles = [0f64; 4];
        for a in &mut angles {
            *a = f64::from_bits(next_u64(&mut r)?);
        }
        let len = next_u64(&mut r)?;
        let mut codes = vec![0u8; len as usize];
        r.read_exact(&mut codes).map_err(io)?;
        let outcomes = codes
            .into_iter()
            .map(|c| Outcome::from_code(c).ok_or_else(|| Error::format(path, format!("bad outcome code {c}"))))
            .collect::<Result<Vec<_>>>()?;
        out.push(DatasetCell {
            settings: ApparatusSettings {
                phi_deg: angles[0],
                theta_hwp0_deg: angles[1],
                theta_hwp1_deg: angles[2],
                theta_qwp_deg: (!angles[3].is_nan()).then_some(angles[3]),
            },
            outcomes,
        });
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, manifest).map_err(|e| Error::format(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct CurveRow {
    pub two_theta1_deg: f64,
    pub v_sim: f64,
    pub v_oracle: f64,
    pub abs_dev: f64,
}

pub fn read_curve(path: &Path) -> Result<Vec<CurveRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
struct CountsRow {
    two_theta1_deg: f64,
    phi_deg: f64,
    n0: u64,
    n1: u64,
    n_discard: u64,
}

/// Counts grouped by θ1 in file order.
pub fn read_counts(path: &Path) -> Result<Vec<(f64, Vec<PhiCounts>)>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out: Vec<(f64, Vec<PhiCounts>)> = Vec::new();
    for row in r.deserialize::<CountsRow>() {
        let row = row.map_err(csv_err(path))?;
        let c = PhiCounts {
            phi_deg: row.phi_deg,
            n0: row.n0,
            n1: row.n1,
            n_discard: row.n_discard,
        };
        match out.last_mut() {
            Some((angle, cells)) if *angle == row.two_theta1_deg => cells.push(c),
            _ => out.push((row.two_theta1_deg, vec![c])),
        }
    }
    Ok(out)
}

/// Paths of the files produced by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct WrittenFiles {
    pub curve: PathBuf,
    pub counts: PathBuf,
    pub manifest: PathBuf,
    pub dataset: Option<PathBuf>,
}

/// Writes the curve, counts, manifest and (when available) the per-event dataset.
pub fn write_outputs(
    spec: &SweepSpec,
    points: &[CurvePoint],
    datasets: Option<&[EventDataset]>,
    dir: &Path,
    format: DatasetFormat,
) -> Result<WrittenFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = OutputPaths::new(dir);
    write_curve(&paths.curve(), points)?;
    write_counts(&paths.counts(), points)?;
    write_manifest(&paths.manifest(), &Manifest::new(spec))?;
    let dataset = match (datasets, paths.dataset(format)) {
        (Some(data), Some(path)) => {
            match format {
                DatasetFormat::Csv => write_dataset_csv(&path, data)?,
                _ => write_dataset_bin(&path, data)?,
            }
            Some(path)
        }
        _ => None,
    };
    Ok(WrittenFiles {
        curve: paths.curve(),
        counts: paths.counts(),
        manifest: paths.manifest(),
        dataset,
    })
}
