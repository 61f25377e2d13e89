//! Parsing of targets and compact numeric flag syntaxes.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use scissor_core::targets::{analytic_targets, TargetCurve};
use scissor_core::Vec2;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// A target curve plus the file it came from, if any.
pub struct LoadedTarget {
    pub curve: TargetCurve,
    pub source: Option<PathBuf>,
    pub bytes: Option<Vec<u8>>,
}

fn looks_like_path(spec: &str) -> bool {
    spec.contains('/') || spec.contains('\\') || spec.ends_with(".csv") || spec.ends_with(".json") || spec.ends_with(".txt")
}

/// `name:key=val,...` for an analytic family, otherwise a CSV or JSON file.
/// `closed` only applies to files without their own flag.
pub fn load_target(spec: &str, closed: bool) -> CliResult<LoadedTarget> {
    let path = Path::new(spec);
    if path.is_file() || looks_like_path(spec) {
        let bytes = std::fs::read(path).map_err(|e| CliError::invalid(format!("cannot read target `{spec}`: {e}")))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::invalid(format!("target `{spec}` is not UTF-8")))?;
        let is_json = spec.ends_with(".json") || text.trim_start().starts_with(['[', '{']);
        let curve = if is_json {
            parse_json_target(&text, closed)
        } else {
            parse_csv_target(&text, closed)
        }
        .map_err(|e| CliError::invalid(format!("target `{spec}`: {e}")))?;
        return Ok(LoadedTarget {
            curve,
            source: Some(path.to_path_buf()),
            bytes: Some(bytes),
        });
    }
    let (name, params) = parse_analytic(spec)?;
    Ok(LoadedTarget {
        curve: analytic_targets(&name, &params)?,
        source: None,
        bytes: None,
    })
}

pub fn parse_analytic(spec: &str) -> CliResult<(String, Vec<(String, f64)>)> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut params = Vec::new();
    for kv in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::invalid(format!("expected key=value in target parameters, got `{kv}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::invalid(format!("target parameter `{k}` is not a number: `{v}`")))?;
        params.push((k.trim().to_string(), v));
    }
    Ok((name.trim().to_string(), params))
}

/// Two numeric columns. A first row that does not parse as numbers is a
/// header; columns named `x` and `y` are used when present.
pub fn parse_csv_target(text: &str, closed: bool) -> Result<TargetCurve, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec);
    }
    let first = rows.first().ok_or("empty file")?;
    let numeric = |r: &csv::StringRecord| r.iter().take(2).all(|f| f.parse::<f64>().is_ok());
    let (cx, cy, body) = if numeric(first) {
        (0, 1, &rows[..])
    } else {
        let find = |name: &str| first.iter().position(|h| h.eq_ignore_ascii_case(name));
        match (find("x"), find("y")) {
            (Some(x), Some(y)) => (x, y, &rows[1..]),
            _ => (0, 1, &rows[1..]),
        }
    };
    let mut points = Vec::with_capacity(body.len());
    for (i, r) in body.iter().enumerate() {
        let get = |c: usize| {
            r.get(c)
                .ok_or_else(|| format!("row {} has fewer than {} columns", i + 1, c + 1))?
                .parse::<f64>()
                .map_err(|_| format!("row {}: `{}` is not a number", i + 1, r.get(c).unwrap_or("")))
        };
        points.push(Vec2::new(get(cx)?, get(cy)?));
    }
    TargetCurve::new(points, closed).map_err(|e| e.to_string())
}

/// `[[x, y], ...]`, `[{"x": .., "y": ..}, ...]` or an object with `points`
/// and an optional `closed`.
pub fn parse_json_target(text: &str, closed: bool) -> Result<TargetCurve, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let (list, closed) = match &value {
        Value::Array(a) => (a, closed),
        Value::Object(o) => {
            let list = o.get("points").and_then(Value::as_array).ok_or("missing `points` array")?;
            let closed = match o.get("closed") {
                None => closed,
                Some(v) => v.as_bool().ok_or("`closed` must be a boolean")?,
            };
            (list, closed)
        }
        _ => return Err("expected an array or an object".into()),
    };
    let mut points = Vec::with_capacity(list.len());
    for (i, p) in list.iter().enumerate() {
        let xy = match p {
            Value::Array(a) if a.len() == 2 => (a[0].as_f64(), a[1].as_f64()),
            Value::Object(o) => (o.get("x").and_then(Value::as_f64), o.get("y").and_then(Value::as_f64)),
            _ => (None, None),
        };
        match xy {
            (Some(x), Some(y)) => points.push(Vec2::new(x, y)),
            _ => return Err(format!("point {i} is not a coordinate pair")),
        }
    }
    TargetCurve::new(points, closed).map_err(|e| e.to_string())
}

fn number(s: &str, what: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::invalid(format!("{what}: `{s}` is not a number")))
}

fn count(s: &str, what: &str) -> CliResult<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| CliError::invalid(format!("{what}: `{s}` is not a non-negative integer")))
}

/// Comma-separated numbers with a fixed arity.
pub fn parse_floats(s: &str, n: usize, what: &str) -> CliResult<Vec<f64>> {
    let v = parse_float_list(s, what)?;
    if v.len() != n {
        return Err(CliError::invalid(format!("{what}: expected {n} comma-separated values, got {}", v.len())));
    }
    Ok(v)
}

pub fn parse_float_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(|p| number(p, what)).collect()
}

/// `a:b` as a pair of numbers.
pub fn parse_pair(s: &str, what: &str) -> CliResult<(f64, f64)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::invalid(format!("{what}: expected `a:b`, got `{s}`")))?;
    Ok((number(a, what)?, number(b, what)?))
}

/// `max:min` actuation range; each end as for [`parse_angle`].
pub fn parse_angle_pair(s: &str, what: &str) -> CliResult<(f64, f64)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::invalid(format!("{what}: expected `max:min`, got `{s}`")))?;
    Ok((parse_angle(a, what)?, parse_angle(b, what)?))
}

/// Radians, or degrees with a `deg` suffix.
pub fn parse_angle(s: &str, what: &str) -> CliResult<f64> {
    let s = s.trim();
    match s.strip_suffix("deg") {
        Some(d) => Ok(number(d, what)? * PI / 180.0),
        None => number(s, what),
    }
}

/// Unit counts: `lo:hi` (inclusive), `lo:hi:step`, or a comma list.
pub fn parse_counts(s: &str, what: &str) -> CliResult<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').collect();
    let out: Vec<usize> = match parts.as_slice() {
        [single] => single.split(',').map(|p| count(p, what)).collect::<CliResult<_>>()?,
        [lo, hi] => range(count(lo, what)?, count(hi, what)?, 1, what)?,
        [lo, hi, step] => range(count(lo, what)?, count(hi, what)?, count(step, what)?, what)?,
        _ => return Err(CliError::invalid(format!("{what}: cannot parse `{s}`"))),
    };
    if out.is_empty() {
        return Err(CliError::invalid(format!("{what}: empty selection `{s}`")));
    }
    Ok(out)
}

fn range(lo: usize, hi: usize, step: usize, what: &str) -> CliResult<Vec<usize>> {
    if step == 0 || lo > hi {
        return Err(CliError::invalid(format!("{what}: need lo <= hi and a positive step")));
    }
    Ok((lo..=hi).step_by(step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_spec() {
        let (n, p) = parse_analytic("circle:R=2, n=50").unwrap();
        assert_eq!(n, "circle");
        assert_eq!(p, vec![("R".to_string(), 2.0), ("n".to_string(), 50.0)]);
        assert!(parse_analytic("circle:R").is_err());
        assert!(parse_analytic("circle:R=x").is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(parse_counts("5:12", "u").unwrap().len(), 8);
        assert_eq!(parse_counts("10:100:5", "u").unwrap().len(), 19);
        assert_eq!(parse_counts("100,200,300", "u").unwrap(), vec![100, 200, 300]);
        assert!(parse_counts("9:3", "u").is_err());
        assert!(parse_counts("1:4:0", "u").is_err());
    }

    #[test]
    fn angles() {
        assert!((parse_angle("90deg", "a").unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(parse_angle_pair("3:0.3", "a").unwrap(), (3.0, 0.3));
    }

    #[test]
    fn csv_header_detection() {
        let body = "0,0\n1,0\n1,1\n0,1\n";
        let plain = parse_csv_target(body, false).unwrap();
        let named = parse_csv_target("y,x\n0,0\n0,1\n1,1\n1,0\n", false).unwrap();
        assert_eq!(plain.points, named.points);
        assert!(parse_csv_target("x,y\n0,0\n1,a\n", false).is_err());
    }

    #[test]
    fn json_forms() {
        let a = parse_json_target("[[0,0],[1,0],[1,1],[0,1]]", false).unwrap();
        let b = parse_json_target(r#"{"closed": true, "points": [{"x":0,"y":0},{"x":1,"y":0},{"x":1,"y":1},{"x":0,"y":1}]}"#, false)
            .unwrap();
        assert_eq!(a.points, b.points);
        assert!(b.closed && !a.closed);
    }
}
