//! Site and observation input, plus the stable text formats for weights,
//! predictions, variograms, solver diagnostics and model documents.
//!
//! | file               | header                        |
//! |--------------------|-------------------------------|
//! | `locations.csv`    | `site_id,x1[,x2,...]`         |
//! | `observations.csv` | `site_id,t,value`             |
//! | `weights.csv`      | `site_id,lambda`              |
//! | `prediction.csv`   | `t,value`                     |
//! | `variogram.csv`    | `r,gamma,count`               |
//! | `diagnostics.csv`  | `k,f,abs_g,rho,mu,inner_iters`|
//!
//! Reals are written with 17 significant digits so that reading a file back
//! reproduces every value bit for bit. Input parsing is strict: anything that
//! is not a finite decimal number is rejected.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sofk::IterationRecord;
use crate::variogram::EmpiricalTraceVariogram;

#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub id: String,
    pub coords: Vec<f64>,
}

/// Validated collection of distinct sites sharing one coordinate dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationSet {
    sites: Vec<Site>,
    dim: usize,
}

impl LocationSet {
    pub fn new(sites: Vec<Site>) -> Result<Self> {
        let dim = match sites.first() {
            Some(s) => s.coords.len(),
            None => return Err(Error::Data("location set is empty".into())),
        };
        if dim == 0 {
            return Err(Error::Data("coordinate dimension must be at least 1".into()));
        }
        let mut ids = HashSet::with_capacity(sites.len());
        let mut coords = HashSet::with_capacity(sites.len());
        for (row, site) in sites.iter().enumerate() {
            if site.coords.len() != dim {
                return Err(Error::Data(format!(
                    "site `{}` (row {}) has {} coordinates, expected {}",
                    site.id,
                    row + 1,
                    site.coords.len(),
                    dim
                )));
            }
            if let Some(bad) = site.coords.iter().find(|c| !c.is_finite()) {
                return Err(Error::Data(format!(
                    "site `{}` has non-finite coordinate {bad}",
                    site.id
                )));
            }
            if !ids.insert(site.id.as_str()) {
                return Err(Error::Data(format!("duplicate site_id `{}`", site.id)));
            }
            // -0.0 and 0.0 are the same location
            let key: Vec<u64> = site.coords.iter().map(|c| (c + 0.0).to_bits()).collect();
            if !coords.insert(key) {
                return Err(Error::Data(format!(
                    "site `{}` duplicates the coordinates of another site",
                    site.id
                )));
            }
        }
        Ok(Self { sites, dim })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn coords(&self, i: usize) -> &[f64] {
        &self.sites[i].coords
    }

    pub fn coord_slices(&self) -> Vec<&[f64]> {
        self.sites.iter().map(|s| s.coords.as_slice()).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.sites.iter().map(|s| s.id.as_str()).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.sites.iter().position(|s| s.id == id)
    }

    /// Sites at `indices`, in the order given.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let sites = indices
            .iter()
            .map(|&i| {
                self.sites
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Contract(format!("site index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites)
    }
}

/// Euclidean distance between two points of equal dimension.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Observations of one site, sorted by time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SiteSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SiteSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Long-format observations grouped by site, aligned with a [`LocationSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalTable {
    series: Vec<SiteSeries>,
    site_ids: Vec<String>,
}

impl LongitudinalTable {
    /// Builds a table from per-site series in location order.
    pub fn new(locations: &LocationSet, mut series: Vec<SiteSeries>) -> Result<Self> {
        if series.len() != locations.len() {
            return Err(Error::Contract(format!(
                "{} series for {} sites",
                series.len(),
                locations.len()
            )));
        }
        for (s, site) in series.iter_mut().zip(locations.sites()) {
            if s.times.len() != s.values.len() {
                return Err(Error::Contract(format!(
                    "site `{}` has {} times but {} values",
                    site.id,
                    s.times.len(),
                    s.values.len()
                )));
            }
            if s.times.iter().chain(&s.values).any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("site `{}` has non-finite data", site.id)));
            }
            let mut order: Vec<usize> = (0..s.times.len()).collect();
            order.sort_by(|&a, &b| s.times[a].total_cmp(&s.times[b]));
            let times: Vec<f64> = order.iter().map(|&i| s.times[i]).collect();
            if times.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Data(format!("site `{}` has repeated time points", site.id)));
            }
            s.values = order.iter().map(|&i| s.values[i]).collect();
            s.times = times;
        }
        Ok(Self {
            series,
            site_ids: locations.sites().iter().map(|s| s.id.clone()).collect(),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.series.len()
    }

    pub fn n_rows(&self) -> usize {
        self.series.iter().map(SiteSeries::len).sum()
    }

    pub fn series(&self, i: usize) -> &SiteSeries {
        &self.series[i]
    }

    pub fn site_id(&self, i: usize) -> &str {
        &self.site_ids[i]
    }

    pub fn site_ids(&self) -> &[String] {
        &self.site_ids
    }

    /// Rows restricted to `indices` (location order of the returned table
    /// follows `indices`).
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            series: indices.iter().map(|&i| self.series[i].clone()).collect(),
            site_ids: indices.iter().map(|&i| self.site_ids[i].clone()).collect(),
        }
    }

    /// Minimum and maximum observation time over all sites.
    pub fn time_range(&self) -> Option<(f64, f64)> {
        let mut it = self.series.iter().flat_map(|s| s.times.iter().copied());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t))))
    }
}

/// Parses a finite decimal number.
pub fn parse_real(field: &str, what: &str) -> Result<f64> {
    let trimmed = field.trim();
    let v: f64 = trimmed
        .parse()
        .map_err(|_| Error::Data(format!("{what}: `{trimmed}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Data(format!("{what}: `{trimmed}` is not finite")));
    }
    Ok(v)
}

/// Formats a real with 17 significant digits (exact round trip).
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("malformed CSV: {e}"))
}

fn expect_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str], file: &str) -> Result<csv::StringRecord> {
    let header = rdr.headers().map_err(csv_err)?.clone();
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Data(format!(
            "{file}: expected header `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(header)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

/// Reads `site_id,x1,...,xd` rows.
pub fn read_locations<R: Read>(reader: R) -> Result<LocationSet> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.len() < 2 || &header[0] != "site_id" {
        return Err(Error::Data("locations: expected header `site_id,x1[,x2,...]`".into()));
    }
    for (k, name) in header.iter().skip(1).enumerate() {
        if name != format!("x{}", k + 1) {
            return Err(Error::Data(format!(
                "locations: coordinate column {} must be named `x{}`, found `{name}`",
                k + 1,
                k + 1
            )));
        }
    }
    let mut sites = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let id = rec.get(0).unwrap_or_default().to_string();
        if id.is_empty() {
            return Err(Error::Data(format!("locations row {}: empty site_id", row + 1)));
        }
        let coords = rec
            .iter()
            .skip(1)
            .map(|f| parse_real(f, &format!("locations row {}", row + 1)))
            .collect::<Result<Vec<_>>>()?;
        sites.push(Site { id, coords });
    }
    LocationSet::new(sites)
}

pub fn load_locations(path: impl AsRef<Path>) -> Result<LocationSet> {
    let path = path.as_ref();
    read_locations(open(path)?)
}

/// Reads `site_id,t,value` rows for sites in `locations`.
pub fn read_longitudinal<R: Read>(reader: R, locations: &LocationSet) -> Result<LongitudinalTable> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, &["site_id", "t", "value"], "observations")?;
    let index: HashMap<&str, usize> = locations
        .sites()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let mut series = vec![SiteSeries::default(); locations.len()];
    let mut rows = 0usize;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 3 {
            return Err(Error::Data(format!(
                "observations row {}: expected 3 fields, found {}",
                row + 1,
                rec.len()
            )));
        }
        let what = format!("observations row {}", row + 1);
        let i = *index
            .get(&rec[0])
            .ok_or_else(|| Error::Data(format!("{what}: unknown site_id `{}`", &rec[0])))?;
        series[i].times.push(parse_real(&rec[1], &what)?);
        series[i].values.push(parse_real(&rec[2], &what)?);
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Data("observations: no data rows".into()));
    }
    for (s, site) in series.iter().zip(locations.sites()) {
        if s.is_empty() {
            log::warn!("site `{}` has no observations", site.id);
        }
    }
    LongitudinalTable::new(locations, series)
}

pub fn load_longitudinal(path: impl AsRef<Path>, locations: &LocationSet) -> Result<LongitudinalTable> {
    let path = path.as_ref();
    read_longitudinal(open(path)?, locations)
}

/// Writes `site_id,x1,...,xd`.
pub fn write_locations(path: impl AsRef<Path>, locations: &LocationSet) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::from("site_id");
    for k in 1..=locations.dim() {
        text.push_str(&format!(",x{k}"));
    }
    text.push('\n');
    for site in locations.sites() {
        text.push_str(&site.id);
        for c in &site.coords {
            text.push(',');
            text.push_str(&fmt_real(*c));
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `site_id,t,value`, sites in table order.
pub fn write_longitudinal(path: impl AsRef<Path>, table: &LongitudinalTable) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::from("site_id,t,value\n");
    for i in 0..table.n_sites() {
        let s = table.series(i);
        for (t, v) in s.times.iter().zip(&s.values) {
            text.push_str(&format!("{},{},{}\n", table.site_id(i), fmt_real(*t), fmt_real(*v)));
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `site_id,w1,...,wM`, one row per site.
pub fn write_coefficients<S: AsRef<str>>(path: impl AsRef<Path>, site_ids: &[S], coefs: &DMatrix<f64>) -> Result<()> {
    if site_ids.len() != coefs.nrows() {
        return Err(Error::Contract(format!(
            "{} site ids for {} coefficient rows",
            site_ids.len(),
            coefs.nrows()
        )));
    }
    let path = path.as_ref();
    let mut text = String::from("site_id");
    for m in 1..=coefs.ncols() {
        text.push_str(&format!(",w{m}"));
    }
    text.push('\n');
    for (i, id) in site_ids.iter().enumerate() {
        text.push_str(id.as_ref());
        for v in coefs.row(i).iter() {
            text.push(',');
            text.push_str(&fmt_real(*v));
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads `site_id,w1,...,wM`.
pub fn read_coefficients<R: Read>(reader: R) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let m = header.len().saturating_sub(1);
    if m == 0
        || &header[0] != "site_id"
        || header
            .iter()
            .skip(1)
            .enumerate()
            .any(|(k, h)| h != format!("w{}", k + 1))
    {
        return Err(Error::Data("coefficients: expected header `site_id,w1,...,wM`".into()));
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let what = format!("coefficients row {}", row + 1);
        if rec.len() != m + 1 {
            return Err(Error::Data(format!(
                "{what}: expected {} fields, found {}",
                m + 1,
                rec.len()
            )));
        }
        ids.push(rec[0].to_string());
        for f in rec.iter().skip(1) {
            values.push(parse_real(f, &what)?);
        }
    }
    let coefs = DMatrix::from_row_slice(ids.len(), m, &values);
    Ok((ids, coefs))
}

pub fn load_coefficients(path: impl AsRef<Path>) -> Result<(Vec<String>, DMatrix<f64>)> {
    let path = path.as_ref();
    read_coefficients(open(path)?)
}

fn write_two_columns<W: Write>(
    writer: W,
    header: [&str; 2],
    keys: impl Iterator<Item = String>,
    values: &[f64],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::Data(format!("CSV write failed: {e}"));
    wtr.write_record(header).map_err(io_err)?;
    for (k, v) in keys.zip(values) {
        wtr.write_record([k, fmt_real(*v)]).map_err(io_err)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_weights_to<W: Write, S: AsRef<str>>(writer: W, site_ids: &[S], lambda: &[f64]) -> Result<()> {
    if site_ids.len() != lambda.len() {
        return Err(Error::Contract(format!(
            "{} site ids for {} weights",
            site_ids.len(),
            lambda.len()
        )));
    }
    write_two_columns(
        writer,
        ["site_id", "lambda"],
        site_ids.iter().map(|s| s.as_ref().to_string()),
        lambda,
    )
}

pub fn write_weights<S: AsRef<str>>(path: impl AsRef<Path>, site_ids: &[S], lambda: &[f64]) -> Result<()> {
    if site_ids.len() != lambda.len() {
        return Err(Error::Contract(format!(
            "{} site ids for {} weights",
            site_ids.len(),
            lambda.len()
        )));
    }
    let path = path.as_ref();
    write_weights_to(create(path)?, site_ids, lambda)
}

pub fn read_weights<R: Read>(reader: R) -> Result<(Vec<String>, Vec<f64>)> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, &["site_id", "lambda"], "weights")?;
    let mut ids = Vec::new();
    let mut lambda = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        ids.push(rec.get(0).unwrap_or_default().to_string());
        lambda.push(parse_real(
            rec.get(1).unwrap_or_default(),
            &format!("weights row {}", row + 1),
        )?);
    }
    Ok((ids, lambda))
}

pub fn write_prediction_to<W: Write>(writer: W, grid: &[f64], values: &[f64]) -> Result<()> {
    if grid.len() != values.len() {
        return Err(Error::Contract(format!(
            "{} grid points for {} values",
            grid.len(),
            values.len()
        )));
    }
    write_two_columns(writer, ["t", "value"], grid.iter().map(|t| fmt_real(*t)), values)
}

pub fn write_prediction(path: impl AsRef<Path>, grid: &[f64], values: &[f64]) -> Result<()> {
    if grid.len() != values.len() {
        return Err(Error::Contract(format!(
            "{} grid points for {} values",
            grid.len(),
            values.len()
        )));
    }
    let path = path.as_ref();
    write_prediction_to(create(path)?, grid, values)
}

pub fn read_prediction<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, &["t", "value"], "prediction")?;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let what = format!("prediction row {}", row + 1);
        grid.push(parse_real(rec.get(0).unwrap_or_default(), &what)?);
        values.push(parse_real(rec.get(1).unwrap_or_default(), &what)?);
    }
    Ok((grid, values))
}

pub fn write_empirical_variogram(path: impl AsRef<Path>, emp: &EmpiricalTraceVariogram) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let mut text = String::from("r,gamma,count\n");
    for b in &emp.bins {
        text.push_str(&format!(
            "{},{},{}\n",
            fmt_real(b.r_center),
            fmt_real(b.gamma_hat),
            b.pair_count
        ));
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_diagnostics(path: impl AsRef<Path>, trace: &[IterationRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let mut text = String::from("k,f,abs_g,rho,mu,inner_iters\n");
    for r in trace {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k,
            fmt_real(r.f),
            fmt_real(r.abs_g),
            fmt_real(r.rho),
            fmt_real(r.mu),
            r.inner_iters
        ));
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sites_parse() {
        let locs = read_locations("site_id,x1,x2\na,0,0\nb,1,0\n".as_bytes()).unwrap();
        assert_eq!(locs.len(), 2);
        assert_eq!(locs.dim(), 2);
        assert_eq!(locs.ids(), vec!["a", "b"]);
    }

    #[test]
    fn duplicate_id_rejected() {
        let err = read_locations("site_id,x1,x2\na,0,0\na,1,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err}");
    }

    #[test]
    fn duplicate_coordinates_rejected() {
        let err = read_locations("site_id,x1\na,1.5\nb,1.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn ragged_dimension_rejected() {
        let err = read_locations("site_id,x1,x2\na,0,0\nb,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(read_locations("site_id,x1\na,NaN\n".as_bytes()).is_err());
        assert!(read_locations("site_id,x1\na,inf\n".as_bytes()).is_err());
    }

    #[test]
    fn sixty_two_rows() {
        let locs = read_locations("site_id,x1\na,0\nb,1\n".as_bytes()).unwrap();
        let mut text = String::from("site_id,t,value\n");
        for site in ["a", "b"] {
            for j in 0..31 {
                text.push_str(&format!("{site},{},{}\n", j as f64 / 30.0, j));
            }
        }
        let table = read_longitudinal(text.as_bytes(), &locs).unwrap();
        assert_eq!(table.n_rows(), 62);
        assert_eq!(table.series(1).len(), 31);
    }

    #[test]
    fn empty_observations_rejected() {
        let locs = read_locations("site_id,x1\na,0\n".as_bytes()).unwrap();
        assert!(read_longitudinal("site_id,t,value\n".as_bytes(), &locs).is_err());
        assert!(read_longitudinal("".as_bytes(), &locs).is_err());
    }

    #[test]
    fn unknown_site_rejected() {
        let locs = read_locations("site_id,x1\na,0\n".as_bytes()).unwrap();
        let err = read_longitudinal("site_id,t,value\nz,0,1\n".as_bytes(), &locs).unwrap_err();
        assert!(err.to_string().contains("`z`"));
    }

    #[test]
    fn repeated_time_rejected() {
        let locs = read_locations("site_id,x1\na,0\n".as_bytes()).unwrap();
        let err = read_longitudinal("site_id,t,value\na,0.5,1\na,0.5,2\n".as_bytes(), &locs);
        assert!(err.is_err());
    }

    #[test]
    fn single_weight_row() {
        let mut buf = Vec::new();
        write_weights_to(&mut buf, &["a"], &[1.0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let (ids, lambda) = read_weights(text.as_bytes()).unwrap();
        assert_eq!(ids, vec!["a"]);
        assert_eq!(lambda, vec![1.0]);
    }

    #[test]
    fn sparse_weight_file() {
        let ids: Vec<String> = (0..34).map(|i| format!("city{i}")).collect();
        let mut lambda = vec![0.0; 34];
        lambda[0] = 0.657;
        lambda[1] = 0.250;
        lambda[2] = 0.093;
        let mut buf = Vec::new();
        write_weights_to(&mut buf, &ids, &lambda).unwrap();
        let (_, back) = read_weights(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 34);
        assert_eq!(back.iter().filter(|&&v| v == 0.0).count(), 31);
        assert_eq!(back, lambda);
    }

    #[test]
    fn mismatched_lengths() {
        let mut buf = Vec::new();
        let err = write_weights_to(&mut buf, &["a", "b"], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        assert!(matches!(
            write_prediction_to(&mut buf, &[0.0], &[]).unwrap_err(),
            Error::Contract(_)
        ));
    }

    #[test]
    fn row_order_preserved() {
        let locs = read_locations("site_id,x1\nc,3\na,1\nb,2\n".as_bytes()).unwrap();
        assert_eq!(locs.ids(), vec!["c", "a", "b"]);
        assert_eq!(locs.index_of("b"), Some(2));
    }

    #[test]
    fn writers_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let locs = LocationSet::new(vec![
            Site {
                id: "a".into(),
                coords: vec![0.1, 0.25],
            },
            Site {
                id: "b".into(),
                coords: vec![1.0 / 3.0, -2.0],
            },
        ])
        .unwrap();
        let p = dir.path().join("locations.csv");
        write_locations(&p, &locs).unwrap();
        assert_eq!(load_locations(&p).unwrap(), locs);

        let table = LongitudinalTable::new(
            &locs,
            vec![
                SiteSeries {
                    times: vec![0.0, 0.5],
                    values: vec![1.0, 0.1],
                },
                SiteSeries {
                    times: vec![0.2],
                    values: vec![-7.0 / 3.0],
                },
            ],
        )
        .unwrap();
        let p = dir.path().join("obs.csv");
        write_longitudinal(&p, &table).unwrap();
        let back = load_longitudinal(&p, &locs).unwrap();
        assert_eq!(back.series(0), table.series(0));
        assert_eq!(back.series(1), table.series(1));

        let coefs = DMatrix::from_row_slice(2, 3, &[0.1, 0.2, 1.0 / 7.0, -1.0, 0.0, 3.5]);
        let p = dir.path().join("coefs.csv");
        write_coefficients(&p, &["a", "b"], &coefs).unwrap();
        let (ids, back) = load_coefficients(&p).unwrap();
        assert_eq!(ids, vec!["a", "b"]);
        assert_eq!(back, coefs);
    }

    #[test]
    fn coefficients_header_is_checked() {
        assert!(matches!(
            read_coefficients("id,w1\na,1\n".as_bytes()),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            read_coefficients("site_id,w2\na,1\n".as_bytes()),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            read_coefficients("site_id,w1,w2\na,1\n".as_bytes()),
            Err(Error::Data(_))
        ));
    }
}
