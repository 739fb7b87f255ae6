//! Output helpers: 17-significant-digit floats and deterministic JSON text.

use serde_json::Value;

use crate::numerics::{to_f64, CMatrix, Matrix};
use crate::Real;

/// Formats a float with 17 significant digits (round-trip exact for `f64`).
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Serialises a JSON value, writing every float with 17 significant digits.
/// Object keys come out sorted, so equal values give byte-identical text.
pub fn to_json_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap_or(f64::NAN);
                if x.is_finite() {
                    out.push_str(&fmt_f64(x));
                } else {
                    out.push_str("null");
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(item, out);
            }
            out.push('}');
        }
    }
}

/// Float as a JSON number (non-finite values become `null`).
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// Row-major nested array of a real matrix.
pub fn matrix_json<T: Real>(a: &Matrix<T>) -> Value {
    Value::Array(
        (0..a.nrows())
            .map(|i| Value::Array((0..a.ncols()).map(|j| num(to_f64(a[(i, j)]))).collect()))
            .collect(),
    )
}

/// Row-major nested array of `[re, im]` pairs.
pub fn cmatrix_json<T: Real>(a: &CMatrix<T>) -> Value {
    Value::Array(
        (0..a.nrows())
            .map(|i| {
                Value::Array(
                    (0..a.ncols())
                        .map(|j| {
                            let z = a[(i, j)];
                            Value::Array(vec![num(to_f64(z.re)), num(to_f64(z.im))])
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Parses a complex matrix from nested rows whose entries are `[re, im]` pairs
/// or plain reals.
pub fn cmatrix_from_json(v: &Value) -> Option<CMatrix<f64>> {
    let rows = v.as_array()?;
    let n = rows.len();
    let cols = rows.first()?.as_array()?.len();
    let mut a = CMatrix::<f64>::zeros(n, cols);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array()?;
        if row.len() != cols {
            return None;
        }
        for (j, e) in row.iter().enumerate() {
            a[(i, j)] = match e {
                Value::Array(pair) if pair.len() == 2 => {
                    num_complex::Complex::new(pair[0].as_f64()?, pair[1].as_f64()?)
                }
                Value::Number(x) => num_complex::Complex::new(x.as_f64()?, 0.0),
                _ => return None,
            };
        }
    }
    Some(a)
}
