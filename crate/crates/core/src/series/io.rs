//! Series files (JSON, CSV) and the `builtin:name:key=value` reference syntax.

use std::path::Path;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde_json::Value;

use super::{builtin, CoefficientSeries, Params, Provenance, Radius};
use crate::error::{Error, Result};

/// Exact rational from "p/q", an integer, or a finite decimal such as "-1.25e-3".
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let err = || Error::Parse(format!("not an exact rational: `{s}`"));
    if s.is_empty() {
        return Err(err());
    }
    if s.contains('/') {
        let q = Rational::parse(s).map_err(|_| err())?;
        return Ok(Rational::from(q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((a, b)) => (a, b),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let joined = format!("{int_part}{frac_part}");
    let numer = Integer::from_str_radix(if joined.is_empty() { "0" } else { &joined }, 10).map_err(|_| err())?;
    let scale = exp - frac_part.len() as i32;
    let ten = Integer::from(10);
    let mut q = Rational::from(numer);
    if scale >= 0 {
        q *= Rational::from(ten.pow(scale as u32));
    } else {
        q /= Rational::from(ten.pow((-scale) as u32));
    }
    Ok(if neg { -q } else { q })
}

fn io_err(path: &Path, e: impl ToString) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

fn value_to_string(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::Parse(format!("expected a string or number, got {other}"))),
    }
}

/// Parse the JSON series format: either {"name", "params"} or {"coeffs", "radius"}.
pub fn series_from_json(text: &str, origin: &str, n: usize) -> Result<CoefficientSeries> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("{origin}: {e}")))?;
    let obj = v.as_object().ok_or_else(|| Error::Parse(format!("{origin}: expected a JSON object")))?;
    if let Some(name) = obj.get("name") {
        let name = name.as_str().ok_or_else(|| Error::Parse("`name` must be a string".into()))?;
        let mut params = Params::new();
        if let Some(p) = obj.get("params") {
            let p = p.as_object().ok_or_else(|| Error::Parse("`params` must be an object".into()))?;
            for (k, v) in p {
                params.insert(k.clone(), value_to_string(v)?);
            }
        }
        return builtin(name, &params, n);
    }
    let coeffs = obj
        .get("coeffs")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse(format!("{origin}: need `name` or a `coeffs` array")))?;
    let coeffs = coeffs
        .iter()
        .map(|c| parse_rational(&value_to_string(c)?))
        .collect::<Result<Vec<_>>>()?;
    let radius = match obj.get("radius") {
        Some(r) => Radius::parse(&value_to_string(r)?)?,
        None => return Err(Error::Parse(format!("{origin}: `radius` is required with `coeffs`"))),
    };
    CoefficientSeries::from_rationals(coeffs, radius, Provenance::File { path: origin.into() })
}

/// One coefficient per line, index implicit; blank lines and `#` comments skipped.
pub fn series_from_csv(text: &str, origin: &str, radius: Radius) -> Result<CoefficientSeries> {
    let coeffs = text
        .lines()
        .map(|l| l.split('#').next().unwrap().trim())
        .filter(|l| !l.is_empty())
        .map(|l| parse_rational(l.split(',').next().unwrap()))
        .collect::<Result<Vec<_>>>()?;
    CoefficientSeries::from_rationals(coeffs, radius, Provenance::File { path: origin.into() })
}

pub fn load_series_file(path: &Path, n: usize, csv_radius: Radius) -> Result<CoefficientSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let origin = path.display().to_string();
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        series_from_csv(&text, &origin, csv_radius)
    } else {
        series_from_json(&text, &origin, n)
    }
}

/// Split `name:k=v,k=v` into the name and its parameters.
pub fn parse_builtin_ref(s: &str) -> Result<(String, Params)> {
    let (name, rest) = match s.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let mut params = Params::new();
    if let Some(rest) = rest {
        for kv in rest.split(',').filter(|x| !x.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("parameter `{kv}` is not key=value")))?;
            params.insert(k.trim().into(), v.trim().into());
        }
    }
    Ok((name.trim().into(), params))
}

/// Resolve a series reference: `builtin:name[:k=v,...]`, `file:path`, or a bare path.
pub fn resolve_series(spec: &str, n: usize, csv_radius: Radius) -> Result<CoefficientSeries> {
    if let Some(rest) = spec.strip_prefix("builtin:") {
        let (name, params) = parse_builtin_ref(rest)?;
        return builtin(&name, &params, n);
    }
    let path = spec.strip_prefix("file:").unwrap_or(spec);
    load_series_file(Path::new(path), n, csv_radius)
}
