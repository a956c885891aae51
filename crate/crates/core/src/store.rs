//! Portable matrix store: the on-disk carrier for logit and feature matrices.
//!
//! A store is a directory holding `header.json`, a row-major `values.bin` of
//! little-endian f32, one sample id per line in the ids file, and one binary
//! OODness flag per line in the z file. Small matrices may instead live in a
//! single CSV file with a header row. A feature archive is a directory whose
//! immediate subdirectories are stores, one per layer.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row cap for the CSV fallback so golden files stay reviewable.
pub const CSV_ROW_CAP: usize = 10_000;

/// Dense row-major matrix. Values travel as f32 on disk and f64 in memory;
/// every f32 is exactly representable as f64, so store round-trips are
/// bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * cols);
        for r in &rows {
            if r.len() != cols {
                return Err(Error::Shape("ragged rows".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: n,
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    /// Copy of the row range `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Matrix {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Row-range chunks of at most `size` rows, in order.
    pub fn chunks(&self, size: usize) -> impl Iterator<Item = Matrix> + '_ {
        let size = size.max(1);
        (0..self.rows.div_ceil(size)).map(move |i| {
            let start = i * size;
            let end = (start + size).min(self.rows);
            self.slice_rows(start, end)
        })
    }

    /// `self (rows x cols) * x (cols)`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.iter_rows().map(|r| dot(r, x)).collect()
    }

    /// `self^T (cols) * v (rows)`.
    pub fn matvec_t(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, vi) in self.iter_rows().zip(v) {
            for (o, rj) in out.iter_mut().zip(r) {
                *o += rj * vi;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A matrix with per-row sample ids, ground-truth OODness, and optional
/// class labels. Serves both logit matrices (cols = classes) and feature
/// matrices (cols = feature dimensions, `name` = layer key).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    pub name: String,
    pub values: Matrix,
    pub sample_ids: Vec<String>,
    /// 0 = ID, 1 = OOD.
    pub z: Vec<u8>,
    pub labels: Option<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    name: String,
    rows: usize,
    cols: usize,
    dtype: String,
    byte_order: String,
    ids_file: String,
    z_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels_file: Option<String>,
}

impl SampleMatrix {
    pub fn new(
        name: impl Into<String>,
        values: Matrix,
        sample_ids: Vec<String>,
        z: Vec<u8>,
    ) -> Result<Self> {
        let m = SampleMatrix {
            name: name.into(),
            values,
            sample_ids,
            z,
            labels: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.values.rows() {
            return Err(Error::Shape("labels length != row count".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.values.rows();
        if self.sample_ids.len() != n || self.z.len() != n {
            return Err(Error::Shape(format!(
                "matrix {}: {} rows, {} ids, {} z flags",
                self.name,
                n,
                self.sample_ids.len(),
                self.z.len()
            )));
        }
        if let Some(l) = &self.labels {
            if l.len() != n {
                return Err(Error::Shape("labels length != row count".into()));
            }
        }
        if self.z.iter().any(|&v| v > 1) {
            return Err(Error::format("z file", "OODness flags must be 0 or 1"));
        }
        if !self.values.is_finite() {
            return Err(Error::NonFinite(format!("matrix {}", self.name)));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    /// Write as a binary store directory (values first, header last, each
    /// atomically, so an interrupted run never leaves a parseable torso).
    pub fn write_store(&self, dir: &Path) -> Result<()> {
        self.validate()?;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let mut bytes = Vec::with_capacity(self.values.data().len() * 4);
        for v in self.values.data() {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        atomic_write(&dir.join("values.bin"), &bytes)?;
        atomic_write(&dir.join("ids.txt"), lines(&self.sample_ids).as_bytes())?;
        let z_lines: Vec<String> = self.z.iter().map(u8::to_string).collect();
        atomic_write(&dir.join("z.txt"), lines(&z_lines).as_bytes())?;
        if let Some(labels) = &self.labels {
            let l: Vec<String> = labels.iter().map(u32::to_string).collect();
            atomic_write(&dir.join("labels.txt"), lines(&l).as_bytes())?;
        }

        let header = Header {
            name: self.name.clone(),
            rows: self.values.rows(),
            cols: self.values.cols(),
            dtype: "f32".into(),
            byte_order: "little-endian".into(),
            ids_file: "ids.txt".into(),
            z_file: "z.txt".into(),
            labels_file: self.labels.as_ref().map(|_| "labels.txt".into()),
        };
        let json = serde_json::to_vec_pretty(&header)
            .map_err(|e| Error::Json {
                path: dir.join("header.json"),
                source: e,
            })?;
        atomic_write(&dir.join("header.json"), &json)
    }

    pub fn read_store(dir: &Path) -> Result<Self> {
        let header_path = dir.join("header.json");
        let raw = fs::read(&header_path).map_err(|e| Error::io(&header_path, e))?;
        let header: Header = serde_json::from_slice(&raw).map_err(|e| Error::Json {
            path: header_path.clone(),
            source: e,
        })?;
        if header.dtype != "f32" {
            return Err(Error::format("header.json", format!("unsupported dtype {}", header.dtype)));
        }
        if header.byte_order != "little-endian" {
            return Err(Error::format(
                "header.json",
                format!("unsupported byte order {}", header.byte_order),
            ));
        }

        let values_path = dir.join("values.bin");
        let bytes = fs::read(&values_path).map_err(|e| Error::io(&values_path, e))?;
        if bytes.len() != header.rows * header.cols * 4 {
            return Err(Error::Shape(format!(
                "{}: expected {} bytes for {}x{} f32, found {}",
                values_path.display(),
                header.rows * header.cols * 4,
                header.rows,
                header.cols,
                bytes.len()
            )));
        }
        let data: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();

        let sample_ids = read_lines(&dir.join(&header.ids_file))?;
        let z = read_lines(&dir.join(&header.z_file))?
            .iter()
            .map(|s| {
                s.parse::<u8>()
                    .map_err(|_| Error::format("z file", format!("bad flag {s:?}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        let labels = match &header.labels_file {
            Some(f) => Some(
                read_lines(&dir.join(f))?
                    .iter()
                    .map(|s| {
                        s.parse::<u32>()
                            .map_err(|_| Error::format("labels file", format!("bad label {s:?}")))
                    })
                    .collect::<Result<Vec<u32>>>()?,
            ),
            None => None,
        };

        let m = SampleMatrix {
            name: header.name,
            values: Matrix::from_vec(header.rows, header.cols, data)?,
            sample_ids,
            z,
            labels,
        };
        m.validate()?;
        Ok(m)
    }

    /// CSV fallback for small matrices: `sample_id,z[,label],c0,c1,...`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.validate()?;
        if self.rows() > CSV_ROW_CAP {
            return Err(Error::InvalidParameter(format!(
                "CSV store is capped at {CSV_ROW_CAP} rows; use a binary store"
            )));
        }
        let mut out = String::new();
        out.push_str("sample_id,z");
        if self.labels.is_some() {
            out.push_str(",label");
        }
        for c in 0..self.cols() {
            out.push_str(&format!(",c{c}"));
        }
        out.push('\n');
        for i in 0..self.rows() {
            out.push_str(&self.sample_ids[i]);
            out.push(',');
            out.push_str(&self.z[i].to_string());
            if let Some(l) = &self.labels {
                out.push(',');
                out.push_str(&l[i].to_string());
            }
            for v in self.values.row(i) {
                out.push(',');
                out.push_str(&format!("{}", *v as f32));
            }
            out.push('\n');
        }
        atomic_write(path, out.as_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| Error::io(path, e))?
            .ok_or_else(|| Error::format("csv store", "missing header row"))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.first() != Some(&"sample_id") || cols.get(1) != Some(&"z") {
            return Err(Error::format("csv store", "header must start with sample_id,z"));
        }
        let has_labels = cols.get(2) == Some(&"label");
        let value_cols = cols.len() - 2 - usize::from(has_labels);

        let mut sample_ids = Vec::new();
        let mut z = Vec::new();
        let mut labels = Vec::new();
        let mut data = Vec::new();
        for (no, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(Error::format(
                    "csv store",
                    format!("row {}: expected {} fields, got {}", no + 2, cols.len(), fields.len()),
                ));
            }
            sample_ids.push(fields[0].to_string());
            z.push(
                fields[1]
                    .parse::<u8>()
                    .map_err(|_| Error::format("csv store", format!("row {}: bad z", no + 2)))?,
            );
            let mut rest = &fields[2..];
            if has_labels {
                labels.push(rest[0].parse::<u32>().map_err(|_| {
                    Error::format("csv store", format!("row {}: bad label", no + 2))
                })?);
                rest = &rest[1..];
            }
            for f in rest {
                // Values are f32 on the wire, same as the binary store.
                data.push(f.parse::<f32>().map(f64::from).map_err(|_| {
                    Error::format("csv store", format!("row {}: bad value {f:?}", no + 2))
                })?);
            }
        }
        let rows = sample_ids.len();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut m = SampleMatrix {
            name,
            values: Matrix::from_vec(rows, value_cols, data)?,
            sample_ids,
            z,
            labels: None,
        };
        if has_labels {
            m.labels = Some(labels);
        }
        m.validate()?;
        Ok(m)
    }

    /// Directory -> binary store, `.csv` file -> CSV fallback.
    pub fn read_auto(path: &Path) -> Result<Self> {
        if path.is_dir() {
            Self::read_store(path)
        } else {
            Self::read_csv(path)
        }
    }
}

/// Ordered collection of per-layer feature matrices.
#[derive(Debug, Clone)]
pub struct FeatureArchive {
    layers: Vec<(String, SampleMatrix)>,
}

impl FeatureArchive {
    pub fn new() -> Self {
        FeatureArchive { layers: Vec::new() }
    }

    pub fn push(&mut self, matrix: SampleMatrix) -> Result<()> {
        if self.layers.iter().any(|(k, _)| *k == matrix.name) {
            return Err(Error::InvalidParameter(format!(
                "duplicate layer key {:?} in archive",
                matrix.name
            )));
        }
        self.layers.push((matrix.name.clone(), matrix));
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.layers.iter().map(|(k, _)| k.as_str())
    }

    pub fn get(&self, key: &str) -> Option<&SampleMatrix> {
        self.layers.iter().find(|(k, _)| k == key).map(|(_, m)| m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SampleMatrix)> {
        self.layers.iter().map(|(k, m)| (k.as_str(), m))
    }

    /// Load every store under `dir`; subdirectory name order fixes the
    /// archive order, layer keys come from the headers.
    pub fn load(dir: &Path) -> Result<Self> {
        let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        subdirs.sort();
        let mut archive = FeatureArchive::new();
        for sub in subdirs {
            archive.push(SampleMatrix::read_store(&sub)?)?;
        }
        if archive.is_empty() {
            return Err(Error::EmptyInput(format!(
                "no matrix stores under {}",
                dir.display()
            )));
        }
        Ok(archive)
    }

    /// Write one store per layer, subdirectory = layer key.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (key, matrix) in &self.layers {
            matrix.write_store(&dir.join(key))?;
        }
        Ok(())
    }
}

impl Default for FeatureArchive {
    fn default() -> Self {
        Self::new()
    }
}

/// Write via a temp file in the same directory plus rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("no file name in {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn lines(items: &[String]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(item);
        out.push('\n');
    }
    out
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<String>>>()
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SampleMatrix {
        // f32-exact payload: the bit-exact round-trip contract covers values
        // representable in the on-disk element type.
        let values: Vec<f64> = [1.0f32, 2.5, -3.0, 0.0, 1e-7, 9.25]
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        SampleMatrix::new(
            "fc",
            Matrix::from_vec(2, 3, values).unwrap(),
            vec!["s0".into(), "s1".into()],
            vec![0, 1],
        )
        .unwrap()
    }

    #[test]
    fn store_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample();
        m.write_store(dir.path()).unwrap();
        let back = SampleMatrix::read_store(dir.path()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fc.csv");
        let m = sample();
        m.write_csv(&path).unwrap();
        let back = SampleMatrix::read_csv(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn truncated_values_rejected() {
        let dir = tempfile::tempdir().unwrap();
        sample().write_store(dir.path()).unwrap();
        let values = dir.path().join("values.bin");
        let bytes = fs::read(&values).unwrap();
        fs::write(&values, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(
            SampleMatrix::read_store(dir.path()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn csv_cap_enforced() {
        let n = CSV_ROW_CAP + 1;
        let m = SampleMatrix::new(
            "big",
            Matrix::zeros(n, 1),
            (0..n).map(|i| format!("s{i}")).collect(),
            vec![0; n],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(m.write_csv(&dir.path().join("big.csv")).is_err());
    }

    #[test]
    fn archive_round_trip_preserves_sorted_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = FeatureArchive::new();
        let mut m1 = sample();
        m1.name = "dense2".into();
        let mut m2 = sample();
        m2.name = "dense1".into();
        a.push(m1).unwrap();
        a.push(m2).unwrap();
        a.save(dir.path()).unwrap();
        let back = FeatureArchive::load(dir.path()).unwrap();
        let keys: Vec<&str> = back.keys().collect();
        assert_eq!(keys, vec!["dense1", "dense2"]);
    }
}
