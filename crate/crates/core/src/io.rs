//! CSV and JSON formats for trajectories, probe slices and estimator outputs.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back reproduces the values bit for bit. Coordinate columns are numbered
//! from 1.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::VelocityField;
use crate::kramers::CrossoverTable;
use crate::sim::{EnsembleSlices, TrajectoryStore};

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().from_writer(BufWriter::new(File::create(path)?)))
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

/// `traj,t,x1,...,xN`.
pub fn write_trajectories<W: Write>(out: W, store: &TrajectoryStore<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["traj".to_string(), "t".to_string()];
    header.extend((1..=store.dim).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for traj in 0..store.n_traj {
        for (k, t) in store.times.iter().enumerate() {
            let mut row = vec![traj.to_string(), t.to_string()];
            row.extend(store.state(traj, k).iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    finish(w)
}

/// `traj,t,x,p` for the underdamped particle.
pub fn write_phase<W: Write>(out: W, store: &TrajectoryStore<f64>) -> Result<()> {
    if store.dim != 2 {
        return Err(Error::Schema(format!("phase store needs 2 columns, got {}", store.dim)));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["traj", "t", "x", "p"])?;
    for traj in 0..store.n_traj {
        for (k, t) in store.times.iter().enumerate() {
            let s = store.state(traj, k);
            w.write_record([traj.to_string(), t.to_string(), s[0].to_string(), s[1].to_string()])?;
        }
    }
    finish(w)
}

/// Columns of a slice file: `traj`, `x{j}_minus` per probe, `x1..xN`, `x{j}_plus` per probe.
pub fn slice_header(n: usize, probed: &[usize]) -> Vec<String> {
    let mut h = vec!["traj".to_string()];
    h.extend(probed.iter().map(|j| format!("x{}_minus", j + 1)));
    h.extend((1..=n).map(|i| format!("x{i}")));
    h.extend(probed.iter().map(|j| format!("x{}_plus", j + 1)));
    h
}

pub fn write_slices<W: Write>(out: W, slices: &EnsembleSlices<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(slice_header(slices.n, &slices.probed))?;
    let p = slices.probed.len();
    for k in 0..slices.len() {
        let mut row = vec![slices.traj[k].to_string()];
        row.extend(slices.minus[k * p..(k + 1) * p].iter().map(f64::to_string));
        row.extend(slices.x(k).iter().map(f64::to_string));
        row.extend(slices.plus[k * p..(k + 1) * p].iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    finish(w)
}

/// Sidecar describing a slice file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceMeta {
    pub n: usize,
    pub t: f64,
    pub eps: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    /// One-based probed coordinates.
    pub probed: Vec<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Per-particle bath temperatures, if known.
    #[serde(default)]
    pub temps: Option<Vec<f64>>,
    #[serde(default)]
    pub model: Option<serde_json::Value>,
}

impl SliceMeta {
    pub fn of(slices: &EnsembleSlices<f64>) -> Self {
        Self {
            n: slices.n,
            t: slices.t,
            eps: slices.eps,
            dt: slices.dt,
            probed: slices.probed.iter().map(|j| j + 1).collect(),
            seed: None,
            temps: None,
            model: None,
        }
    }

    pub fn schema(&self) -> Result<SliceSchema> {
        if self.probed.iter().any(|&j| j == 0 || j > self.n) {
            return Err(Error::Schema(format!("probed coordinates {:?} outside 1..={}", self.probed, self.n)));
        }
        Ok(SliceSchema {
            n: self.n,
            probed: self.probed.iter().map(|j| j - 1).collect(),
            t: self.t,
            eps: self.eps,
            dt: self.dt,
        })
    }
}

/// Expected layout of an ingested slice file (zero-based probes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSchema {
    pub n: usize,
    pub probed: Vec<usize>,
    pub t: f64,
    pub eps: f64,
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows: usize,
    pub kept: usize,
    pub dropped: usize,
    /// One-based line numbers of dropped rows (the header is line 1).
    pub dropped_lines: Vec<u64>,
}

/// Reads slice records, dropping rows that are malformed or contain non-finite values.
pub fn read_slices<Rd: Read>(input: Rd, schema: &SliceSchema) -> Result<(EnsembleSlices<f64>, IngestReport)> {
    let mut r = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let expected = slice_header(schema.n, &schema.probed);
    let header = r.headers()?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyInput("slice file has no header".into()));
    }
    if header.len() != expected.len() {
        return Err(Error::Schema(format!("expected {} columns, found {}", expected.len(), header.len())));
    }
    if let Some((got, want)) = header.iter().zip(&expected).find(|(g, w)| g != w) {
        return Err(Error::Schema(format!("expected column `{want}`, found `{got}`")));
    }
    let p = schema.probed.len();
    let mut slices = EnsembleSlices::empty(schema.n, schema.t, schema.eps, schema.dt, schema.probed.clone());
    let mut report = IngestReport { rows: 0, kept: 0, dropped: 0, dropped_lines: Vec::new() };
    let mut values = Vec::with_capacity(expected.len() - 1);
    for rec in r.records() {
        report.rows += 1;
        let parsed = rec.ok().and_then(|rec| {
            if rec.len() != expected.len() {
                return None;
            }
            let traj = rec[0].parse::<u64>().ok()?;
            values.clear();
            for field in rec.iter().skip(1) {
                let v = field.parse::<f64>().ok().filter(|v| v.is_finite())?;
                values.push(v);
            }
            Some(traj)
        });
        match parsed {
            Some(traj) => {
                slices.push(traj, &values[..p], &values[p..p + schema.n], &values[p + schema.n..]);
                report.kept += 1;
            }
            None => {
                report.dropped += 1;
                report.dropped_lines.push(report.rows as u64 + 1);
            }
        }
    }
    if report.rows == 0 {
        return Err(Error::EmptyInput("slice file has no records".into()));
    }
    if report.kept == 0 {
        return Err(Error::EmptyInput("no valid slice records".into()));
    }
    slices.validate()?;
    Ok((slices, report))
}

/// Loads a slice CSV; the schema defaults to the JSON sidecar `<path>.json` when `schema` is `None`.
pub fn ingest_external_csv(path: &Path, schema: Option<&SliceSchema>) -> Result<(EnsembleSlices<f64>, IngestReport)> {
    let owned;
    let schema = match schema {
        Some(s) => s,
        None => {
            owned = read_json::<SliceMeta>(&sidecar_path(path))?.schema()?;
            &owned
        }
    };
    read_slices(File::open(path)?, schema)
}

pub fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".json");
    name.into()
}

/// Velocity field rows: `bin_center_1..bin_center_K,count,v_plus,se_vplus,v_minus,se_vminus,u,se_u`.
pub fn write_velocity_field<W: Write>(out: W, field: &VelocityField<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=field.grid.axes.len()).map(|i| format!("bin_center_{i}")).collect();
    header.extend(["count", "v_plus", "se_vplus", "v_minus", "se_vminus", "u", "se_u"].map(String::from));
    w.write_record(&header)?;
    for c in &field.cells {
        let mut row: Vec<String> = c.center.iter().map(f64::to_string).collect();
        row.push(c.count.to_string());
        row.extend([c.v_plus, c.se_vplus, c.v_minus, c.se_vminus, c.u, c.se_u].iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    finish(w)
}

/// `eps,nu_plus,nu_minus,half_diff,u_over,in_plateau`.
pub fn write_crossover<W: Write>(out: W, table: &CrossoverTable<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "nu_plus", "nu_minus", "half_diff", "u_over", "in_plateau"])?;
    for r in &table.rows {
        w.write_record([
            r.eps.to_string(),
            r.nu_plus.to_string(),
            r.nu_minus.to_string(),
            r.half_diff.to_string(),
            r.u_over.to_string(),
            r.in_plateau.to_string(),
        ])?;
    }
    finish(w)
}

pub fn write_csv_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    f(&mut file)?;
    file.flush()?;
    Ok(())
}

/// Writes rows of an arbitrary table.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
