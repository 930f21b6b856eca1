//! Artifact files: tensors as CSV (`k,i,j,value` or `k,i,value`) or JSON
//! (`{"shape": [..], "data": [..]}` in row-major order), summaries as JSON.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3, ArrayD, Dimension, IxDyn};
use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::error::CliError;

#[derive(Serialize, Deserialize)]
struct TensorJson {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn format_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

pub fn tensor_path(dir: &Path, stem: &str, format: Format) -> PathBuf {
    dir.join(match format {
        Format::Csv => format!("{stem}.csv"),
        Format::Json => format!("{stem}.json"),
    })
}

/// Writes a rank-2 or rank-3 tensor; every entry is listed.
pub fn write_tensor(dir: &Path, stem: &str, format: Format, values: &ArrayD<f64>) -> Result<PathBuf, CliError> {
    let path = tensor_path(dir, stem, format);
    let text = match format {
        Format::Csv => {
            let rank = values.ndim();
            let mut out = String::from(if rank == 3 { "k,i,j,value\n" } else { "k,i,value\n" });
            for (idx, v) in values.indexed_iter() {
                let coords: Vec<String> = idx.as_array_view().iter().map(|c| c.to_string()).collect();
                out.push_str(&format!("{},{v}\n", coords.join(",")));
            }
            out
        }
        Format::Json => {
            let t = TensorJson {
                shape: values.shape().to_vec(),
                data: values.iter().copied().collect(),
            };
            serde_json::to_string(&t).expect("tensor serializes") + "\n"
        }
    };
    fs::write(&path, text)?;
    Ok(path)
}

/// Reads a tensor of the given shape, trying CSV first, then JSON.
pub fn read_tensor(dir: &Path, stem: &str, shape: &[usize]) -> Result<ArrayD<f64>, CliError> {
    let csv = tensor_path(dir, stem, Format::Csv);
    let json = tensor_path(dir, stem, Format::Json);
    if csv.exists() {
        let text = fs::read_to_string(&csv)?;
        let mut out = ArrayD::zeros(IxDyn(shape));
        for (no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != shape.len() + 1 {
                return Err(format_err(&csv, format!("line {}: expected {} fields", no + 1, shape.len() + 1)));
            }
            let mut idx = Vec::with_capacity(shape.len());
            for (f, &dim) in fields[..shape.len()].iter().zip(shape) {
                let c: usize = f
                    .trim()
                    .parse()
                    .map_err(|e| format_err(&csv, format!("line {}: {e}", no + 1)))?;
                if c >= dim {
                    return Err(format_err(&csv, format!("line {}: index {c} out of range {dim}", no + 1)));
                }
                idx.push(c);
            }
            let v: f64 = fields[shape.len()]
                .trim()
                .parse()
                .map_err(|e| format_err(&csv, format!("line {}: {e}", no + 1)))?;
            out[IxDyn(&idx)] = v;
        }
        Ok(out)
    } else if json.exists() {
        let t: TensorJson =
            serde_json::from_str(&fs::read_to_string(&json)?).map_err(|e| format_err(&json, e.to_string()))?;
        if t.shape != shape {
            return Err(format_err(&json, format!("shape {:?}, expected {shape:?}", t.shape)));
        }
        ArrayD::from_shape_vec(IxDyn(shape), t.data).map_err(|e| format_err(&json, e.to_string()))
    } else {
        Err(format_err(&csv, "artifact not found (tried .csv and .json)"))
    }
}

pub fn read_flow(dir: &Path, shape: (usize, usize, usize)) -> Result<Array3<f64>, CliError> {
    let t = read_tensor(dir, "m", &[shape.0, shape.1, shape.2])?;
    Ok(t.into_dimensionality().expect("rank checked"))
}

pub fn read_exit(dir: &Path, shape: (usize, usize)) -> Result<Array2<f64>, CliError> {
    let t = read_tensor(dir, "mu", &[shape.0, shape.1])?;
    Ok(t.into_dimensionality().expect("rank checked"))
}

pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).expect("summary serializes") + "\n")?;
    Ok(path)
}
