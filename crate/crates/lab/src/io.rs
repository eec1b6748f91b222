//! Output tree, CSV tables, field files and manifests.
//!
//! Numbers are written in Rust's shortest round-trip form, so identical
//! inputs give byte-identical files. Every file is written to a temporary
//! name in the same directory and renamed into place.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use disloc_core::{Boundary, FarField, Field, Grid1D};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

/// Root of an output tree; all paths are relative to it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Mutex<Vec<String>>,
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(LabError::io(&root))?;
        Ok(OutputDir {
            root,
            written: Default::default(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Relative paths written so far, in order.
    pub fn written(&self) -> Vec<String> {
        self.written.lock().expect("unpoisoned").clone()
    }

    pub fn write_bytes(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(LabError::io(dir))?;
        }
        let tmp = path.with_file_name(format!(
            ".{}.tmp",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
        ));
        fs::write(&tmp, bytes).map_err(LabError::io(&tmp))?;
        fs::rename(&tmp, &path).map_err(LabError::io(&path))?;
        let mut w = self.written.lock().expect("unpoisoned");
        if !w.iter().any(|r| r == rel) {
            w.push(rel.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, rel: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(rel, &bytes)
    }

    pub fn write_table(&self, rel: &str, table: &Table) -> Result<()> {
        let bytes = table.to_csv().map_err(|source| LabError::Csv {
            path: self.path(rel),
            source,
        })?;
        self.write_bytes(rel, &bytes)
    }

    /// `rel` as `x,value` plus the sidecar next to it with extension `.json`.
    pub fn write_field(&self, rel: &str, field: &Field) -> Result<()> {
        let mut t = Table::new(["x", "value"]);
        for (x, v) in field.grid.nodes().iter().zip(&field.values) {
            t.push([*x, *v]);
        }
        self.write_table(rel, &t)?;
        let sidecar = Path::new(rel).with_extension("json");
        self.write_json(
            sidecar.to_str().expect("utf-8 path"),
            &FieldSidecar::of(field),
        )
    }
}

/// A CSV table of numbers with a fixed header. Missing values are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

pub fn fmt_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e16) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: impl IntoIterator<Item = f64>) {
        self.rows.push(row.into_iter().map(Some).collect());
    }

    pub fn push_opt(&mut self, row: impl IntoIterator<Item = Option<f64>>) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn to_csv(&self) -> std::result::Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.map(fmt_number).unwrap_or_default()))?;
        }
        w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let wrap = |source| LabError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::Reader::from_path(path).map_err(wrap)?;
        let header = r
            .headers()
            .map_err(wrap)?
            .iter()
            .map(String::from)
            .collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(wrap)?;
            let row = rec
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).map_err(|_| {
                            LabError::Config(format!("{}: not a number: {c:?}", path.display()))
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r.get(k).copied().flatten())
                .collect(),
        )
    }
}

/// Far-field metadata stored next to a field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub l_minus: Option<f64>,
    pub l_plus: Option<f64>,
    pub beta: Option<f64>,
    pub c_minus: Option<f64>,
    pub c_plus: Option<f64>,
    /// `"decaying"` or `"periodic"`.
    pub boundary: String,
}

impl FieldSidecar {
    pub fn of(field: &Field) -> Self {
        let boundary = match field.boundary {
            Boundary::Periodic => "periodic",
            Boundary::Decaying => "decaying",
        };
        let f = field.far_field;
        FieldSidecar {
            l_minus: f.map(|f| f.l_minus),
            l_plus: f.map(|f| f.l_plus),
            beta: f.map(|f| f.beta),
            c_minus: f.map(|f| f.c_minus),
            c_plus: f.map(|f| f.c_plus),
            boundary: boundary.into(),
        }
    }

    /// Periodic data sampled on a periodic grid, without far field.
    pub fn periodic() -> Self {
        FieldSidecar {
            l_minus: None,
            l_plus: None,
            beta: None,
            c_minus: None,
            c_plus: None,
            boundary: "periodic".into(),
        }
    }
}

/// Reads a field written by [`OutputDir::write_field`].
pub fn read_field(csv_path: &Path) -> Result<Field> {
    let table = Table::read(csv_path)?;
    let bad = |m: &str| LabError::Config(format!("{}: {m}", csv_path.display()));
    let (x, v) = match (table.column("x"), table.column("value")) {
        (Some(x), Some(v)) => (x, v),
        _ => return Err(bad("needs columns x,value")),
    };
    let x: Vec<f64> = x
        .into_iter()
        .collect::<Option<_>>()
        .ok_or_else(|| bad("empty x cell"))?;
    let v: Vec<f64> = v
        .into_iter()
        .collect::<Option<_>>()
        .ok_or_else(|| bad("empty value cell"))?;
    if x.len() < 2 {
        return Err(bad("needs at least two rows"));
    }
    let side_path = csv_path.with_extension("json");
    let text = fs::read_to_string(&side_path).map_err(LabError::io(&side_path))?;
    let side: FieldSidecar = serde_json::from_str(&text)
        .map_err(|e| LabError::Config(format!("{}: {e}", side_path.display())))?;
    let n = x.len();
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    if x.windows(2)
        .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0))
    {
        return Err(bad("x must be uniformly spaced"));
    }
    match side.boundary.as_str() {
        "decaying" => {
            let grid =
                Grid1D::new(x[0], x[n - 1], n, false).map_err(LabError::core("field grid"))?;
            let far = FarField {
                l_minus: side.l_minus.ok_or_else(|| bad("sidecar lacks l_minus"))?,
                l_plus: side.l_plus.ok_or_else(|| bad("sidecar lacks l_plus"))?,
                beta: side.beta.unwrap_or(1.0),
                c_minus: side.c_minus.unwrap_or(0.0),
                c_plus: side.c_plus.unwrap_or(0.0),
            };
            Field::decaying(grid, v, far).map_err(LabError::core("field"))
        }
        "periodic" => {
            let grid =
                Grid1D::new(x[0], x[n - 1] + h, n, true).map_err(LabError::core("field grid"))?;
            Field::periodic(grid, v).map_err(LabError::core("field"))
        }
        other => Err(bad(&format!("unknown boundary {other:?}"))),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub disloc: String,
    pub disloc_core: String,
}

impl Default for Versions {
    fn default() -> Self {
        Versions {
            disloc: env!("CARGO_PKG_VERSION").into(),
            disloc_core: disloc_core::VERSION.into(),
        }
    }
}

/// Written last in every run directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub versions: Versions,
    pub wall_time_seconds: f64,
    pub threads: usize,
    pub exit_code: i32,
    pub error: Option<String>,
    pub outputs: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            1e21,
            0.0,
            3.05e-9,
            1e-4,
            12345.678,
        ] {
            assert_eq!(fmt_number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_number(f64::NAN), "nan");
        assert_eq!(fmt_number(3.05e-9), "3.05e-9");
    }

    #[test]
    fn fields_round_trip() {
        let dir = std::env::temp_dir().join(format!("disloc-io-{}", std::process::id()));
        let out = OutputDir::new(&dir).unwrap();
        let g = Grid1D::symmetric(2.0, 17).unwrap();
        let far = FarField {
            l_minus: 0.0,
            l_plus: 1.0,
            beta: 1.0,
            c_minus: 0.3,
            c_plus: 0.3,
        };
        let f = Field::decaying(
            g,
            (0..17).map(|j| 0.05 + 0.9 * j as f64 / 16.0).collect(),
            far,
        )
        .unwrap();
        out.write_field("a/profile.csv", &f).unwrap();
        assert_eq!(out.written(), vec!["a/profile.csv", "a/profile.json"]);
        let back = read_field(&out.path("a/profile.csv")).unwrap();
        assert_eq!(back, f);

        let g = Grid1D::periodic(1.0, 16).unwrap();
        let p = Field::periodic(g, (0..16).map(|j| (j as f64 * 0.3).sin()).collect()).unwrap();
        out.write_field("p.csv", &p).unwrap();
        let back = read_field(&out.path("p.csv")).unwrap();
        assert_eq!(back.values, p.values);
        assert!(
            (back.grid.left - p.grid.left).abs() < 1e-15
                && (back.grid.right - p.grid.right).abs() < 1e-12
        );
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
