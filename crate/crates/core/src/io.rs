//! JSON encoding of complex matrices.
//!
//! Complex entries are `[re, im]` pairs; real entries may be bare numbers.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::{c64, C64, CMat};

pub fn parse_complex(v: &Value, path: &str) -> Result<C64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .map(|x| c64(x, 0.0))
            .ok_or_else(|| Error::Schema(format!("{path}: not a finite number"))),
        Value::Array(pair) if pair.len() == 2 => {
            let re = pair[0].as_f64();
            let im = pair[1].as_f64();
            match (re, im) {
                (Some(re), Some(im)) => Ok(c64(re, im)),
                _ => Err(Error::Schema(format!("{path}: expected [re, im] numbers"))),
            }
        }
        _ => Err(Error::Schema(format!(
            "{path}: expected a number or an [re, im] pair"
        ))),
    }
}

/// Parse a square `dim x dim` matrix given as a list of rows.
pub fn parse_matrix(v: &Value, path: &str, dim: usize) -> Result<CMat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Schema(format!("{path}: expected a list of rows")))?;
    if rows.len() != dim {
        return Err(Error::Schema(format!(
            "{path}: expected {dim} rows, found {}",
            rows.len()
        )));
    }
    let mut m = CMat::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Schema(format!("{path}[{i}]: expected a row")))?;
        if row.len() != dim {
            return Err(Error::Schema(format!(
                "{path}[{i}]: expected {dim} entries, found {}",
                row.len()
            )));
        }
        for (j, entry) in row.iter().enumerate() {
            m[(i, j)] = parse_complex(entry, &format!("{path}[{i}][{j}]"))?;
        }
    }
    if !crate::matrix::is_finite(&m) {
        return Err(Error::Schema(format!("{path}: non-finite entry")));
    }
    Ok(m)
}

pub fn get<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::Schema(format!("{path}: missing field \"{key}\"")))
}

pub fn get_f64(obj: &Value, key: &str, path: &str) -> Result<f64> {
    get(obj, key, path)?
        .as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Schema(format!("{path}.{key}: expected a finite number")))
}

pub fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect()))
            .collect(),
    )
}

/// `re;im` with 17 significant digits.
pub fn complex_csv(z: C64) -> String {
    format!("{:.16e};{:.16e}", z.re, z.im)
}
