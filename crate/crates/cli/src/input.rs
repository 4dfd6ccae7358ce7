//! Parsers for command-line values and configuration files.

use std::path::Path;

use arakelov::adelic::PairConfig;
use arakelov::lattes::{LegendreParam, ProjPoint, Quadruple};
use arakelov::places::{parse_rational, Place};
use arakelov::tree::TreePoint;
use arakelov::{Complex, Error, Rational};
use serde::Deserialize;

use crate::Failure;

/// `inf`, `trivial`, or a prime, raised to `epsilon`.
pub fn place(s: &str, epsilon: f64) -> Result<Place, Error> {
    let base = match s.trim() {
        "inf" | "infinity" | "arch" => Place::archimedean(),
        "trivial" | "0" => Place::trivial(),
        p => Place::finite(p.parse().map_err(|_| Error::Parse(format!("invalid place {p:?}")))?)?,
    };
    if epsilon == 1.0 {
        Ok(base)
    } else {
        base.with_epsilon(epsilon)
    }
}

/// `inf`, `c` (classical point), `c:r` (disk point with log-radius `r`), or `inv:c:r`.
pub fn tree_point(s: &str) -> Result<TreePoint, Error> {
    let bad = || Error::Parse(format!("invalid tree point {s:?}"));
    let log_radius = |r: &str| r.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.trim().split(':').collect();
    match parts.as_slice() {
        ["inf"] => Ok(TreePoint::infinity()),
        [c] => Ok(TreePoint::classical(parse_rational(c)?)),
        [c, r] => Ok(TreePoint::new(parse_rational(c)?, log_radius(r)?)),
        ["inv", c, r] => Ok(TreePoint::inverted(parse_rational(c)?, log_radius(r)?)),
        _ => Err(bad()),
    }
}

/// `re` or `re,im`.
pub fn complex(s: &str) -> Result<Complex, Error> {
    let bad = || Error::Parse(format!("invalid complex number {s:?}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex::new(num(re)?, num(im)?)),
        None => Ok(Complex::new(num(s)?, 0.0)),
    }
}

pub fn rationals(items: &[String]) -> Result<Vec<Rational>, Error> {
    items.iter().flat_map(|s| s.split(',')).filter(|t| !t.trim().is_empty()).map(parse_rational).collect()
}

pub fn quadruple(items: &[String]) -> Result<Quadruple, Error> {
    let parts: Vec<&str> = items.iter().flat_map(|s| s.split(',')).map(str::trim).filter(|t| !t.is_empty()).collect();
    if parts.len() != 4 {
        return Err(Error::Parse(format!("expected four points, got {}", parts.len())));
    }
    Quadruple::parse(&parts)
}

pub fn legendre(s: &str) -> Result<LegendreParam, Error> {
    LegendreParam::new(parse_rational(s)?)
}

pub fn proj_point(s: &str) -> Result<ProjPoint, Error> {
    ProjPoint::parse(s)
}

#[derive(Deserialize)]
struct ConfigFile {
    a: Vec<String>,
    b: Vec<String>,
}

fn config_from_lists(a: &[String], b: &[String]) -> Result<PairConfig, Error> {
    let a: Vec<&str> = a.iter().map(String::as_str).collect();
    let b: Vec<&str> = b.iter().map(String::as_str).collect();
    PairConfig::parse(&a, &b)
}

/// Reads `{"a": [..3 rationals..], "b": [..]}`; the raw bytes are recorded for the manifest digest.
pub fn config_file(path: &Path, inputs: &mut Vec<Vec<u8>>) -> Result<PairConfig, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let file: ConfigFile = serde_json::from_slice(&bytes).map_err(|e| Error::Parse(format!("config: {e}")))?;
    inputs.push(bytes);
    Ok(config_from_lists(&file.a, &file.b)?)
}

/// Configuration from `--config` or from `--a`/`--b` lists.
pub fn config(
    path: Option<&Path>,
    a: &[String],
    b: &[String],
    inputs: &mut Vec<Vec<u8>>,
) -> Result<PairConfig, Failure> {
    match path {
        Some(p) => config_file(p, inputs),
        None => {
            let split = |xs: &[String]| -> Vec<String> {
                xs.iter().flat_map(|s| s.split(',')).map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
            };
            Ok(config_from_lists(&split(a), &split(b))?)
        }
    }
}
