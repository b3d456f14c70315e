//! CSV and report serialization.
//!
//! Numbers are written as `{:.16e}` (17 significant digits), which parses back to the same
//! `f64`. Spectrogram files hold natural-log densities: the header row is `t` followed by the
//! frequency grid and every later row is a time index followed by one value per frequency.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use blf::{ScreeRow, Spectrogram, TvarFit};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn parse(field: &str, row: usize, path: &Path) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .with_context(|| format!("{} row {row}: cannot parse '{field}' as a number", path.display()))
}

/// Reads a one-column series. A first row that is not numeric is taken as a header; rows are
/// numbered from 1 in diagnostics, counting the header.
pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut x = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.with_context(|| format!("{} row {row}: malformed record", path.display()))?;
        if rec.len() != 1 {
            bail!("{} row {row}: expected one column, found {}", path.display(), rec.len());
        }
        let field = &rec[0];
        if row == 1 && field.trim().parse::<f64>().is_err() {
            continue;
        }
        let v = parse(field, row, path)?;
        if !v.is_finite() {
            bail!("{} row {row}: non-finite value '{field}'", path.display());
        }
        x.push(v);
    }
    if x.is_empty() {
        bail!("{} holds no observations", path.display());
    }
    Ok(x)
}

pub fn write_series(path: &Path, x: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "x")?;
    for v in x {
        writeln!(w, "{}", num(*v))?;
    }
    w.flush()?;
    Ok(())
}

/// Table with a header row and numeric cells; the first column is an integer index.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub index: Vec<usize>,
    pub values: Array2<f64>,
}

pub fn write_table(path: &Path, header: &[String], index: &[usize], values: &Array2<f64>) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", header.join(","))?;
    for (t, row) in index.iter().zip(values.rows()) {
        write!(w, "{t}")?;
        for v in row {
            write!(w, ",{}", num(*v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let ncol = header.len().saturating_sub(1);
    let mut index = Vec::new();
    let mut cells = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.with_context(|| format!("{} row {row}: malformed record", path.display()))?;
        let t = rec[0]
            .trim()
            .parse::<usize>()
            .with_context(|| format!("{} row {row}: bad index '{}'", path.display(), &rec[0]))?;
        index.push(t);
        for field in rec.iter().skip(1) {
            cells.push(parse(field, row, path)?);
        }
    }
    let values = Array2::from_shape_vec((index.len(), ncol), cells)?;
    Ok(Table { header, index, values })
}

pub fn write_spectrogram(path: &Path, spec: &Spectrogram) -> Result<()> {
    write_log_surface(path, &spec.times, &spec.freqs, &spec.values.mapv(f64::ln))
}

/// Writes a surface that is already on the log scale, such as posterior summaries.
pub fn write_log_surface(path: &Path, times: &[usize], freqs: &[f64], values: &Array2<f64>) -> Result<()> {
    let header: Vec<String> = std::iter::once("t".to_owned()).chain(freqs.iter().map(|f| num(*f))).collect();
    write_table(path, &header, times, values)
}

/// Spectrogram as read back from disk, on the natural-log scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSurface {
    pub times: Vec<usize>,
    pub freqs: Vec<f64>,
    pub log_values: Array2<f64>,
}

pub fn read_spectrogram(path: &Path) -> Result<LogSurface> {
    let table = read_table(path)?;
    if table.header.first().map(String::as_str) != Some("t") {
        bail!("{}: first header cell must be 't'", path.display());
    }
    let freqs = table.header[1..]
        .iter()
        .map(|h| parse(h, 1, path))
        .collect::<Result<Vec<_>>>()?;
    Ok(LogSurface {
        times: table.index,
        freqs,
        log_values: table.values,
    })
}

pub fn write_coefficients(path: &Path, coeffs: &Array2<f64>) -> Result<()> {
    let header: Vec<String> = std::iter::once("t".to_owned())
        .chain((1..=coeffs.ncols()).map(|j| format!("a{j}")))
        .collect();
    let times: Vec<usize> = (1..=coeffs.nrows()).collect();
    write_table(path, &header, &times, coeffs)
}

pub fn write_variance(path: &Path, sigma2: &[f64]) -> Result<()> {
    let times: Vec<usize> = (1..=sigma2.len()).collect();
    let col = Array2::from_shape_vec((sigma2.len(), 1), sigma2.to_vec())?;
    write_table(path, &["t".into(), "sigma2".into()], &times, &col)
}

/// Rebuilds a fit from its coefficient and variance files. Stage log-likelihoods are taken
/// from the scree file.
pub fn read_fit(coefficients: &Path, variance: &Path, scree: &Path) -> Result<TvarFit> {
    let c = read_table(coefficients)?;
    let v = read_table(variance)?;
    if c.index.len() != v.index.len() {
        bail!("coefficient and variance files differ in length");
    }
    let order = c.values.ncols();
    let logliks: Vec<f64> = read_scree(scree)?.into_iter().map(|r| r.loglik).take(order).collect();
    Ok(TvarFit {
        order,
        coeffs: c.values,
        sigma2: v.values.column(0).to_vec(),
        order_loglik: logliks,
    })
}

pub fn write_scree(path: &Path, rows: &[ScreeRow]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "m,loglik,pct_change")?;
    for r in rows {
        let pct = r.pct_change.map(num).unwrap_or_default();
        writeln!(w, "{},{},{pct}", r.m, num(r.loglik))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scree(path: &Path) -> Result<Vec<ScreeRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.with_context(|| format!("{} row {row}: malformed record", path.display()))?;
        let m = rec[0].parse::<usize>().with_context(|| format!("{} row {row}: bad stage", path.display()))?;
        let pct = match rec[2].trim() {
            "" => None,
            s => Some(parse(s, row, path)?),
        };
        rows.push(ScreeRow {
            m,
            loglik: parse(&rec[1], row, path)?,
            pct_change: pct,
        });
    }
    Ok(rows)
}

/// Key-value summary of a fit, written as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: String,
    pub n: usize,
    pub chosen_order: usize,
    pub saturated: bool,
    pub tau: f64,
    pub p_max: usize,
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub scree: Vec<f64>,
    pub prior_mu0: f64,
    pub prior_c0: f64,
    pub prior_v0: f64,
    pub prior_kappa0: f64,
    pub draws: usize,
    pub seed: u64,
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value)?;
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}
