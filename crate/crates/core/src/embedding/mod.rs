//! Embedding sets: loading, validation, persistence and the seeded real split.
//!
//! Arrays live on disk as NPY 1.0 (`<f4`/`<f8`, C order, 2-D) or as headerless
//! CSV. Provenance sits next to the array in `<file>.meta.json`.

mod manifest;
mod npy;

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use manifest::{EmbeddingManifest, ManifestEntry, MANIFEST_FORMAT_VERSION};

/// Split seed used when none is given.
pub const DEFAULT_SPLIT_SEED: u64 = 0;

/// Model tag that marks the real-image set of a (dataset, extractor) group.
pub const REAL_TAG: &str = "real";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Dtype {
    #[serde(rename = "float32")]
    F32,
    #[default]
    #[serde(rename = "float64")]
    F64,
}

impl Dtype {
    pub(crate) fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub extractor: String,
    pub dataset: String,
    pub model_tag: String,
}

impl EmbeddingMeta {
    pub fn new(
        extractor: impl Into<String>,
        dataset: impl Into<String>,
        model_tag: impl Into<String>,
    ) -> Self {
        EmbeddingMeta {
            extractor: extractor.into(),
            dataset: dataset.into(),
            model_tag: model_tag.into(),
        }
    }

    /// `dataset/model_tag`, used to name the two sides of a distance.
    pub fn label(&self) -> String {
        format!("{}/{}", self.dataset, self.model_tag)
    }
}

impl Default for EmbeddingMeta {
    fn default() -> Self {
        EmbeddingMeta::new("unknown", "unknown", "unknown")
    }
}

/// An immutable `n x d` feature matrix (n >= 2, all entries finite).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    data: DMatrix<f64>,
    meta: EmbeddingMeta,
    dtype: Dtype,
}

impl EmbeddingSet {
    pub fn new(data: DMatrix<f64>, meta: EmbeddingMeta, dtype: Dtype) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::Shape(format!(
                "an embedding set needs at least 2 rows, got {}",
                data.nrows()
            )));
        }
        if data.ncols() == 0 {
            return Err(Error::Shape("an embedding set needs at least 1 column".into()));
        }
        // column-major storage: index -> (row, col)
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: idx % data.nrows(),
                col: idx / data.nrows(),
            });
        }
        Ok(EmbeddingSet { data, meta, dtype })
    }

    pub fn from_rows(rows: &[Vec<f64>], meta: EmbeddingMeta) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::Shape(format!(
                "row {bad} has {} columns, expected {d}",
                rows[bad].len()
            )));
        }
        let data = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        EmbeddingSet::new(data, meta, Dtype::F64)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn meta(&self) -> &EmbeddingMeta {
        &self.meta
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn with_meta(mut self, meta: EmbeddingMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn with_dtype(mut self, dtype: Dtype) -> Self {
        self.dtype = dtype;
        self
    }

    fn row_major(&self) -> Vec<f64> {
        self.data.transpose().as_slice().to_vec()
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads an embedding file (NPY or CSV) plus its sidecar metadata, if any.
///
/// `expected` pins the `(n, d)` shape.
pub fn load_embeddings(path: &Path, expected: Option<(usize, usize)>) -> Result<EmbeddingSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (rows, cols, dtype, values) = if is_csv(path) {
        let (rows, cols, values) = parse_csv(path, &bytes)?;
        (rows, cols, Dtype::F64, values)
    } else {
        let arr = npy::decode(path, &bytes)?;
        (arr.rows, arr.cols, arr.dtype, arr.values)
    };
    if let Some((n, d)) = expected {
        if (n, d) != (rows, cols) {
            return Err(Error::Shape(format!(
                "{}: expected {n}x{d}, file holds {rows}x{cols}",
                path.display()
            )));
        }
    }
    if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: idx / cols,
            col: idx % cols,
        });
    }
    let meta = read_sidecar(path)?.unwrap_or_default();
    let data = DMatrix::from_row_slice(rows, cols, &values);
    EmbeddingSet::new(data, meta, dtype)
}

fn parse_csv(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, format!("row {i}: {e}")))?;
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Shape(format!(
                    "{}: row {i} has {} columns, expected {c}",
                    path.display(),
                    record.len()
                )))
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::format(path, format!("row {i}, column {j}: not a number: {field:?}"))
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            values.push(v);
        }
        rows += 1;
    }
    Ok((rows, cols.unwrap_or(0), values))
}

fn read_sidecar(path: &Path) -> Result<Option<EmbeddingMeta>> {
    let meta_path = sidecar_path(path);
    match fs::read(&meta_path) {
        Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes).map_err(|e| {
            Error::format(&meta_path, format!("invalid sidecar metadata: {e}"))
        })?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(meta_path, e)),
    }
}

/// Writes `set` as NPY (or CSV when the path ends in `.csv`) and its sidecar.
pub fn save_embeddings(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let (n, d) = (set.n_samples(), set.dim());
    let values = set.row_major();
    let bytes = if is_csv(path) {
        let mut out = String::new();
        for row in values.chunks(d) {
            let line: Vec<String> = row
                .iter()
                .map(|v| match set.dtype {
                    Dtype::F64 => v.to_string(),
                    Dtype::F32 => (*v as f32).to_string(),
                })
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out.into_bytes()
    } else {
        npy::encode(n, d, set.dtype, &values)
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let meta_path = sidecar_path(path);
    let meta = serde_json::to_vec_pretty(&set.meta)?;
    fs::write(&meta_path, meta).map_err(|e| Error::io(meta_path, e))
}

/// Seeded random partition of the rows into halves of sizes `ceil(n/2)` and
/// `floor(n/2)`. Rows keep their original relative order within each half.
pub fn split_real(set: &EmbeddingSet, seed: u64) -> Result<(EmbeddingSet, EmbeddingSet)> {
    let n = set.n_samples();
    if n < 4 {
        return Err(Error::Shape(format!(
            "splitting needs at least 4 rows so each half has 2, got {n}"
        )));
    }
    let (first, second) = split_indices(n, seed);
    let half = |idx: &[usize], tag: &str| {
        let meta = EmbeddingMeta {
            model_tag: format!("{}#{tag}", set.meta.model_tag),
            ..set.meta.clone()
        };
        EmbeddingSet::new(set.data.select_rows(idx), meta, set.dtype)
    };
    Ok((half(&first, "1")?, half(&second, "2")?))
}

pub(crate) fn split_indices(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut second = idx.split_off(n.div_ceil(2));
    idx.sort_unstable();
    second.sort_unstable();
    (idx, second)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> EmbeddingMeta {
        EmbeddingMeta::new("inceptionv3-imagenet", "sliver07", "real")
    }

    fn counting(n: usize, d: usize) -> EmbeddingSet {
        let data = DMatrix::from_fn(n, d, |i, j| (i * d + j) as f64);
        EmbeddingSet::new(data, meta(), Dtype::F64).unwrap()
    }

    #[test]
    fn row_major_indexing_from_npy() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.npy");
        let values: Vec<f64> = (0..12).map(f64::from).collect();
        fs::write(&path, npy::encode(4, 3, Dtype::F64, &values)).unwrap();
        let set = load_embeddings(&path, Some((4, 3))).unwrap();
        assert_eq!(set.data()[(2, 1)], 7.0);
        assert_eq!(set.meta(), &EmbeddingMeta::default());
    }

    #[test]
    fn truncated_body_is_a_shape_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.npy");
        let mut bytes = npy::encode(10, 8, Dtype::F64, &[0.5; 80]);
        bytes.truncate(bytes.len() - 8 * 8);
        fs::write(&path, bytes).unwrap();
        let err = load_embeddings(&path, None).unwrap_err();
        assert!(matches!(err, Error::Shape(_)), "{err}");
        assert!(err.to_string().contains("holds 9 rows"), "{err}");
    }

    #[test]
    fn expected_shape_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.npy");
        save_embeddings(&counting(4, 3), &path).unwrap();
        assert!(matches!(
            load_embeddings(&path, Some((4, 4))),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn nan_is_rejected_with_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.npy");
        let mut values = vec![1.0; 12];
        values[7] = f64::NAN;
        fs::write(&path, npy::encode(4, 3, Dtype::F64, &values)).unwrap();
        match load_embeddings(&path, None) {
            Err(Error::NonFinite { row, col }) => assert_eq!((row, col), (2, 1)),
            other => panic!("unexpected {other:?}"),
        }

        let csv = dir.path().join("x.csv");
        fs::write(&csv, "1,2\n3,inf\n").unwrap();
        assert!(matches!(
            load_embeddings(&csv, None),
            Err(Error::NonFinite { row: 1, col: 1 })
        ));
    }

    #[test]
    fn single_value_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        // one row is not a valid set, so check the codec directly for [[3.5]]
        let bytes = npy::encode(1, 1, Dtype::F64, &[3.5]);
        let arr = npy::decode(Path::new("m.npy"), &bytes).unwrap();
        assert_eq!(arr.values, vec![3.5]);

        let set = EmbeddingSet::from_rows(&[vec![3.5], vec![3.5]], meta()).unwrap();
        let path = dir.path().join("m.npy");
        save_embeddings(&set, &path).unwrap();
        let back = load_embeddings(&path, None).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn float32_round_trip_is_exact_for_representable_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.npy");
        let set = EmbeddingSet::from_rows(&[vec![0.25, -1.5], vec![3.0, 1e-3]], meta())
            .unwrap()
            .with_dtype(Dtype::F32);
        save_embeddings(&set, &path).unwrap();
        let back = load_embeddings(&path, None).unwrap();
        assert_eq!(back.dtype(), Dtype::F32);
        assert_eq!(back.data()[(0, 1)], -1.5);
        assert_eq!(back.data()[(1, 1)], f64::from(1e-3f32));
    }

    #[test]
    fn csv_round_trip_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let set = EmbeddingSet::from_rows(
            &[vec![0.1, 1.0 / 3.0], vec![-2e-300, 7.0], vec![1e300, 0.0]],
            meta(),
        )
        .unwrap();
        save_embeddings(&set, &path).unwrap();
        assert!(sidecar_path(&path).exists());
        assert_eq!(load_embeddings(&path, Some((3, 2))).unwrap(), set);
    }

    #[test]
    fn ragged_csv_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        fs::write(&path, "1,2\n3\n").unwrap();
        assert!(load_embeddings(&path, None).is_err());
    }

    #[test]
    fn unwritable_path() {
        let set = counting(2, 2);
        assert!(matches!(
            save_embeddings(&set, Path::new("/nonexistent-dir/x.npy")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn split_sizes() {
        let (a, b) = split_real(&counting(6, 2), 3).unwrap();
        assert_eq!((a.n_samples(), b.n_samples()), (3, 3));
        let (a, b) = split_real(&counting(7, 2), 3).unwrap();
        assert_eq!((a.n_samples(), b.n_samples()), (4, 3));
        assert!(split_real(&counting(3, 2), 0).is_err());
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        assert_eq!(split_indices(100, 9), split_indices(100, 9));
        let base = split_indices(100, 0);
        let distinct = (1..=20).filter(|s| split_indices(100, *s) != base).count();
        assert_eq!(distinct, 20);
    }

    #[test]
    fn too_few_rows() {
        let data = DMatrix::from_element(1, 3, 1.0);
        assert!(EmbeddingSet::new(data, meta(), Dtype::F64).is_err());
    }
}
