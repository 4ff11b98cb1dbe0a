use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::GridShape;
use crate::scalar::Scalar;
use crate::series::{BinaryFieldSeries, CovariateSeries};

const FIELD_FILE: &str = "field.csv";
const COVARIATE_FILE: &str = "covariates.csv";
const METADATA_FILE: &str = "metadata.json";

/// Provenance of a dataset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Metadata {
    pub shape: Option<GridShape>,
    pub seed: Option<u64>,
    /// Generator parameters for synthetic data.
    pub generator: Option<serde_json::Value>,
    pub notes: Option<String>,
}

/// Binary field series plus covariates on one lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub shape: GridShape,
    pub z: BinaryFieldSeries,
    pub x: CovariateSeries<T>,
    pub metadata: Metadata,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(shape: GridShape, z: BinaryFieldSeries, x: CovariateSeries<T>, metadata: Metadata) -> Result<Self> {
        shape.validate()?;
        if z.n_sites() != shape.n_sites() {
            return Err(Error::Validation(format!(
                "field has {} sites, grid {}x{} has {}",
                z.n_sites(),
                shape.rows,
                shape.cols,
                shape.n_sites()
            )));
        }
        if x.horizon() != z.horizon() {
            return Err(Error::Validation(format!(
                "covariates cover t = 0..={}, field covers t = 0..={}",
                x.horizon(),
                z.horizon()
            )));
        }
        x.check_covers(z.n_sites(), z.horizon())?;
        Ok(Dataset { shape, z, x, metadata })
    }

    pub fn horizon(&self) -> usize {
        self.z.horizon()
    }
}

fn invalid(path: &Path, line: u64, msg: impl std::fmt::Display) -> Error {
    Error::Validation(format!("{}: line {line}: {msg}", path.display()))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?)
}

fn parse_index(path: &Path, line: u64, name: &str, field: &str) -> Result<usize> {
    field
        .parse()
        .map_err(|_| invalid(path, line, format!("{name} = `{field}` is not a non-negative integer")))
}

/// Dense `[t][site]` table over a grid inferred from the maximum indices.
fn fill_dense<V: Clone>(
    path: &Path,
    entries: Vec<(u64, usize, usize, usize, V)>,
    rows: usize,
    cols: usize,
    horizon: usize,
) -> Result<Vec<Vec<V>>> {
    let n = rows * cols;
    let mut cells: Vec<Option<V>> = vec![None; (horizon + 1) * n];
    for (line, t, r, c, v) in entries {
        if r >= rows || c >= cols || t > horizon {
            return Err(invalid(path, line, format!("cell (t={t}, row={r}, col={c}) outside the {rows}x{cols} grid")));
        }
        let slot = &mut cells[t * n + r * cols + c];
        if slot.is_some() {
            return Err(invalid(path, line, format!("duplicate cell (t={t}, row={r}, col={c})")));
        }
        *slot = Some(v);
    }
    let mut out = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        let mut slice = Vec::with_capacity(n);
        for k in 0..n {
            match &cells[t * n + k] {
                Some(v) => slice.push(v.clone()),
                None => {
                    return Err(Error::Validation(format!(
                        "{}: missing cell (t={t}, row={}, col={})",
                        path.display(),
                        k / cols,
                        k % cols
                    )))
                }
            }
        }
        out.push(slice);
    }
    Ok(out)
}

fn read_field(path: &Path) -> Result<(usize, usize, BinaryFieldSeries)> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["t", "row", "col", "z"] {
        return Err(invalid(path, 1, format!("expected header t,row,col,z, found {}", header.join(","))));
    }
    let mut entries = Vec::new();
    let (mut rows, mut cols, mut horizon) = (0, 0, 0);
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let t = parse_index(path, line, "t", &rec[0])?;
        let r = parse_index(path, line, "row", &rec[1])?;
        let c = parse_index(path, line, "col", &rec[2])?;
        let z: u8 = match &rec[3] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(invalid(
                    path,
                    line,
                    format!("z = `{other}` at (t={t}, row={r}, col={c}) is not binary"),
                ))
            }
        };
        rows = rows.max(r + 1);
        cols = cols.max(c + 1);
        horizon = horizon.max(t);
        entries.push((line, t, r, c, z));
    }
    if entries.is_empty() {
        return Err(Error::Validation(format!("{}: no cells", path.display())));
    }
    let slices = fill_dense(path, entries, rows, cols, horizon)?;
    Ok((rows, cols, BinaryFieldSeries::new(rows * cols, slices)?))
}

fn read_covariates<T: Scalar>(path: &Path, rows: usize, cols: usize, horizon: usize) -> Result<CovariateSeries<T>> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err(invalid(path, 1, "first column must be `t`"));
    }
    let varying = header.len() >= 3 && header[1] == "row" && header[2] == "col";
    let first = if varying { 3 } else { 1 };
    let names: Vec<String> = header[first..].to_vec();
    let parse_values = |line: u64, rec: &csv::StringRecord| -> Result<Vec<T>> {
        rec.iter()
            .skip(first)
            .zip(&names)
            .map(|(v, name)| {
                v.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(T::of)
                    .ok_or_else(|| invalid(path, line, format!("{name} = `{v}` is not a finite number")))
            })
            .collect()
    };
    let n = rows * cols;
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let t = parse_index(path, line, "t", &rec[0])?;
        if t > horizon {
            return Err(invalid(path, line, format!("t = {t} beyond the field horizon {horizon}")));
        }
        let (r, c) = if varying {
            (
                parse_index(path, line, "row", &rec[1])?,
                parse_index(path, line, "col", &rec[2])?,
            )
        } else {
            (0, 0)
        };
        entries.push((line, t, r, c, parse_values(line, &rec)?));
    }
    if varying {
        let dense = fill_dense(path, entries, rows, cols, horizon)?;
        let values = dense.into_iter().flatten().flatten().collect();
        CovariateSeries::varying(n, names, horizon + 1, values)
    } else {
        let dense = fill_dense(path, entries, 1, 1, horizon)?;
        CovariateSeries::constant(n, names, dense.into_iter().map(|mut s| s.remove(0)).collect())
    }
}

/// Loads a field CSV (`t,row,col,z`, dense over the grid for `t = 0..=T`)
/// and an optional covariate CSV (`t,name..` or `t,row,col,name..`). The
/// grid has unit spacing and its size is inferred from the indices.
pub fn load_dataset<T: Scalar>(field_path: &Path, covariate_path: Option<&Path>) -> Result<Dataset<T>> {
    let (rows, cols, z) = read_field(field_path)?;
    let x = match covariate_path {
        Some(p) => read_covariates(p, rows, cols, z.horizon())?,
        None => CovariateSeries::empty(rows * cols, z.horizon()),
    };
    Dataset::new(GridShape::new(rows, cols)?, z, x, Metadata::default())
}

/// Loads a directory written by [`save_dataset`].
pub fn load_dataset_dir<T: Scalar>(dir: &Path) -> Result<Dataset<T>> {
    let cov = dir.join(COVARIATE_FILE);
    let mut ds = load_dataset(&dir.join(FIELD_FILE), cov.exists().then_some(cov.as_path()))?;
    let meta = dir.join(METADATA_FILE);
    if meta.exists() {
        let metadata: Metadata = serde_json::from_str(&fs::read_to_string(meta)?)?;
        if let Some(shape) = metadata.shape {
            if (shape.rows, shape.cols) != (ds.shape.rows, ds.shape.cols) {
                return Err(Error::Validation(format!(
                    "metadata grid {}x{} disagrees with field grid {}x{}",
                    shape.rows, shape.cols, ds.shape.rows, ds.shape.cols
                )));
            }
            shape.validate()?;
            ds.shape = shape;
        }
        ds.metadata = metadata;
    }
    Ok(ds)
}

/// Writes `field.csv`, `covariates.csv` (when there are covariates) and
/// `metadata.json` into `dir`.
pub fn save_dataset<T: Scalar>(dir: &Path, ds: &Dataset<T>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let cols = ds.shape.cols;
    let mut w = csv::Writer::from_path(dir.join(FIELD_FILE))?;
    w.write_record(["t", "row", "col", "z"])?;
    for t in 0..=ds.z.horizon() {
        for (i, &v) in ds.z.slice(t).iter().enumerate() {
            w.write_record(&[t.to_string(), (i / cols).to_string(), (i % cols).to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    if ds.x.p() > 0 {
        let mut w = csv::Writer::from_path(dir.join(COVARIATE_FILE))?;
        let constant = ds.x.is_spatially_constant();
        let mut header = vec!["t".to_string()];
        if !constant {
            header.extend(["row".to_string(), "col".to_string()]);
        }
        header.extend(ds.x.names().iter().cloned());
        w.write_record(&header)?;
        for t in 0..=ds.x.horizon() {
            let sites = if constant { 1 } else { ds.shape.n_sites() };
            for i in 0..sites {
                let mut rec = vec![t.to_string()];
                if !constant {
                    rec.extend([(i / cols).to_string(), (i % cols).to_string()]);
                }
                rec.extend(ds.x.x(i, t).iter().map(|v| v.as_f64().to_string()));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
    }
    let metadata = Metadata {
        shape: Some(ds.shape),
        ..ds.metadata.clone()
    };
    fs::write(dir.join(METADATA_FILE), serde_json::to_string_pretty(&metadata)? + "\n")?;
    Ok(())
}
