//! Field files and bit-stable JSON output.
//!
//! A field file holds three arrays of monomials,
//! `{"components": [[[[num, den], ex, ey, ez], ...], [...], [...]]}`.
//! Coefficients are integers or decimal strings of arbitrary size.

use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::field::{Poly, PolyField3};
use crate::rational::Q;

fn bigint(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n.as_i64().map(BigInt::from).or_else(|| n.as_u64().map(BigInt::from)),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn exponent(v: &Value) -> Option<u32> {
    v.as_u64().and_then(|e| u32::try_from(e).ok())
}

fn monomial(v: &Value, component: usize, monomial: usize) -> Result<(Q, [u32; 3])> {
    let err = |detail: &str| Error::Parse { component, monomial, detail: detail.to_string() };
    let arr = v.as_array().filter(|a| a.len() == 4).ok_or_else(|| err("expected [[num, den], ex, ey, ez]"))?;
    let c = arr[0].as_array().filter(|a| a.len() == 2).ok_or_else(|| err("expected coefficient [num, den]"))?;
    let num = bigint(&c[0]).ok_or_else(|| err("numerator is not an integer"))?;
    let den = bigint(&c[1]).ok_or_else(|| err("denominator is not an integer"))?;
    if den.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    let mut e = [0u32; 3];
    for k in 0..3 {
        e[k] = exponent(&arr[k + 1]).ok_or_else(|| err("exponent is not a non-negative integer"))?;
    }
    Ok((Q::new(num, den), e))
}

/// Parses the JSON text of a field file. An empty `components` array is
/// the zero field.
pub fn parse_field(text: &str) -> Result<PolyField3> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("field JSON: {e}")))?;
    let comps = v
        .get("components")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Invalid("field JSON: missing \"components\" array".into()))?;
    if comps.is_empty() {
        return Ok(PolyField3::zero());
    }
    if comps.len() != 3 {
        return Err(Error::Invalid(format!("field JSON: expected 3 components, found {}", comps.len())));
    }
    let mut out: [Poly; 3] = Default::default();
    for (i, c) in comps.iter().enumerate() {
        let monos = c.as_array().ok_or(Error::Parse {
            component: i,
            monomial: 0,
            detail: "component is not an array".into(),
        })?;
        let mut terms = Vec::with_capacity(monos.len());
        for (j, m) in monos.iter().enumerate() {
            terms.push(monomial(m, i, j)?);
        }
        out[i] = Poly::from_terms(terms);
    }
    Ok(PolyField3::new(out))
}

pub fn parse_field_file(path: &Path) -> Result<PolyField3> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_field(&text)
}

/// Field file text for `f`, the inverse of [`parse_field`].
pub fn field_to_json(f: &PolyField3) -> String {
    let comps: Vec<Value> = f
        .components
        .iter()
        .map(|p| {
            Value::Array(
                p.terms()
                    .map(|(e, c)| {
                        let num = c.numer().to_string();
                        let den = c.denom().to_string();
                        let n = |s: String| s.parse::<i64>().map(Value::from).unwrap_or(Value::String(s));
                        serde_json::json!([[n(num), n(den)], e.0[0], e.0[1], e.0[2]])
                    })
                    .collect(),
            )
        })
        .collect();
    to_canonical_json(&serde_json::json!({ "components": comps })).expect("field serializes")
}

/// JSON with sorted keys and every float at 17 significant digits, so equal
/// values always print identically.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Invalid(format!("serialization: {e}")))?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn format_float(x: f64) -> String {
    if x == 0.0 {
        // Collapse -0 so sign noise cannot change the bytes.
        return "0.0000000000000000e0".into();
    }
    format!("{x:.16e}")
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                let _ = write!(out, "{n}");
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push_str(": ");
                write_value(&m[*k], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

/// Writes `text` to `path`, surfacing I/O failures verbatim.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
