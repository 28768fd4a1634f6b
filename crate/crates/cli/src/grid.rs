//! Sweep grids (`1,2,5`, `0.2:3.0:0.02`, `20:320:*2`) and coupling-constant
//! specs that may refer to the critical curves (`0.9*k1`, `kc2`).

use std::fmt;
use std::str::FromStr;

use blume_capel::equilibrium::{k1, kc1, kc2, DEFAULT_TOL};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, Result};

const MAX_GRID_POINTS: usize = 1_000_000;

/// Raw grid or K spec as written on the command line or in the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Spec(pub String);

impl FromStr for Spec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(Spec(s.trim().to_string()))
    }
}

impl fmt::Display for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Spec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

// accepts `beta = 1.5` as well as `beta = "0.2:3.0:0.02"` in config files
impl<'de> Deserialize<'de> for Spec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            I(i64),
            F(f64),
            L(Vec<Raw>),
        }
        fn flat(r: Raw) -> String {
            match r {
                Raw::S(s) => s,
                Raw::I(i) => i.to_string(),
                Raw::F(f) => f.to_string(),
                Raw::L(v) => v.into_iter().map(flat).collect::<Vec<_>>().join(","),
            }
        }
        Ok(Spec(flat(Raw::deserialize(d)?)))
    }
}

/// Expands a numeric grid: comma-separated values and ranges
/// `start:stop:step` (arithmetic, stop included) or `start:stop:*factor`.
pub fn parse_grid(field: &str, spec: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.extend(parse_item(field, item)?);
        if out.len() > MAX_GRID_POINTS {
            return Err(CliError::Config(format!("--{field}: more than {MAX_GRID_POINTS} grid points")));
        }
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("--{field}: empty grid")));
    }
    Ok(out)
}

fn number(field: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("--{field}: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::Config(format!("--{field}: `{s}` is not finite")));
    }
    Ok(v)
}

fn parse_item(field: &str, item: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = item.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![number(field, v)?]),
        [a, b, step] => {
            let (start, stop) = (number(field, a)?, number(field, b)?);
            if stop < start {
                return Err(CliError::Config(format!("--{field}: range `{item}` has stop < start")));
            }
            if let Some(factor) = step.trim().strip_prefix('*') {
                let f = number(field, factor)?;
                if !(f > 1.0) || !(start > 0.0) {
                    return Err(CliError::Config(format!(
                        "--{field}: geometric range `{item}` needs start > 0 and factor > 1"
                    )));
                }
                let mut v = Vec::new();
                let mut x = start;
                while x <= stop * (1.0 + 1e-12) {
                    v.push(x);
                    x *= f;
                    if v.len() > MAX_GRID_POINTS {
                        break;
                    }
                }
                Ok(v)
            } else {
                let h = number(field, step)?;
                if !(h > 0.0) {
                    return Err(CliError::Config(format!("--{field}: step in `{item}` must be positive")));
                }
                let count = ((stop - start) / h + 1e-9).floor();
                if count > MAX_GRID_POINTS as f64 {
                    return Err(CliError::Config(format!("--{field}: more than {MAX_GRID_POINTS} grid points")));
                }
                // index-based, then rounded to the decimals written in the range
                let digits = [a, step].iter().map(|s| decimals(s)).max().unwrap_or(0) + 3;
                let scale = 10f64.powi(digits.min(15));
                Ok((0..=count as usize).map(|i| ((start + i as f64 * h) * scale).round() / scale).collect())
            }
        }
        _ => Err(CliError::Config(format!(
            "--{field}: cannot parse `{item}` (expected value, start:stop:step or start:stop:*factor)"
        ))),
    }
}

fn decimals(s: &str) -> i32 {
    let s = s.trim();
    let (mantissa, exp) = s.split_once(['e', 'E']).unwrap_or((s, "0"));
    let frac = mantissa.split_once('.').map_or(0, |(_, d)| d.len()) as i32;
    (frac - exp.parse::<i32>().unwrap_or(0)).max(0)
}

/// Grid of system sizes.
pub fn parse_sizes(field: &str, spec: &str) -> Result<Vec<usize>> {
    integers(field, spec, 1)?.into_iter().map(|v| Ok(v as usize)).collect()
}

/// Grid of step counts, zero allowed.
pub fn parse_times(field: &str, spec: &str) -> Result<Vec<u64>> {
    integers(field, spec, 0)
}

fn integers(field: &str, spec: &str, min: u64) -> Result<Vec<u64>> {
    parse_grid(field, spec)?
        .into_iter()
        .map(|v| {
            let r = v.round();
            if (v - r).abs() > 1e-9 || r < min as f64 || r > u64::MAX as f64 {
                Err(CliError::Config(format!("--{field}: {v} is not an integer >= {min}")))
            } else {
                Ok(r as u64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    Kc2,
    K1,
    Kc1,
}

impl Curve {
    pub fn name(self) -> &'static str {
        match self {
            Curve::Kc2 => "kc2",
            Curve::K1 => "k1",
            Curve::Kc1 => "kc1",
        }
    }

    pub fn at(self, beta: f64) -> Result<f64> {
        let v = match self {
            Curve::Kc2 => kc2(beta),
            Curve::K1 => k1(beta, DEFAULT_TOL),
            Curve::Kc1 => kc1(beta, DEFAULT_TOL),
        };
        v.map_err(|e| CliError::Config(format!("cannot resolve {} at beta = {beta}: {e}", self.name())))
    }
}

/// One coupling constant: absolute, or a multiple of a critical curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KSpec {
    Absolute(f64),
    Relative { factor: f64, curve: Curve },
}

impl KSpec {
    /// Resolved afresh for every beta; nothing is cached.
    pub fn resolve(&self, beta: f64) -> Result<f64> {
        match *self {
            KSpec::Absolute(k) => Ok(k),
            KSpec::Relative { factor, curve } => Ok(factor * curve.at(beta)?),
        }
    }

    pub fn label(&self) -> String {
        match self {
            KSpec::Absolute(k) => k.to_string(),
            KSpec::Relative { factor, curve } => format!("{factor}*{}", curve.name()),
        }
    }
}

/// Comma-separated K items: numeric values or ranges, or `[factor*]curve`
/// with curve one of `kc2`, `k1`, `kc1`.
pub fn parse_k(field: &str, spec: &str) -> Result<Vec<KSpec>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let lower = item.to_ascii_lowercase();
        let (factor, name) = match lower.split_once('*') {
            Some((f, c)) if !c.trim().is_empty() && !f.contains(':') => (number(field, f)?, c.trim().to_string()),
            _ => (1.0, lower.clone()),
        };
        let curve = match name.as_str() {
            "kc2" => Some(Curve::Kc2),
            "k1" => Some(Curve::K1),
            "kc1" => Some(Curve::Kc1),
            _ => None,
        };
        match curve {
            Some(curve) => out.push(KSpec::Relative { factor, curve }),
            None => out.extend(parse_item(field, item)?.into_iter().map(KSpec::Absolute)),
        }
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("--{field}: empty list")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_geometric_ranges() {
        assert_eq!(parse_grid("beta", "1").unwrap(), vec![1.0]);
        assert_eq!(parse_grid("beta", "0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = parse_grid("beta", "0.2:3.0:0.02").unwrap();
        assert_eq!(g.len(), 141);
        assert_eq!(g[140], 3.0);
        assert_eq!(g[60], 1.4);
        assert_eq!(parse_grid("z", "1e-5:3e-5:1e-5").unwrap(), vec![1e-5, 2e-5, 3e-5]);
        assert_eq!(parse_sizes("n", "20:320:*2").unwrap(), vec![20, 40, 80, 160, 320]);
        assert_eq!(parse_sizes("n", "20:120:20").unwrap(), vec![20, 40, 60, 80, 100, 120]);
        assert_eq!(parse_grid("k", "1, 2 ,3:4:1").unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn bad_grids_are_config_errors() {
        for bad in ["", "x", "1:0:0.1", "0:1:0", "0:1:*1", "1:2", "1:2:3:4", "nan"] {
            assert!(matches!(parse_grid("beta", bad), Err(CliError::Config(_))), "{bad}");
        }
        assert!(parse_sizes("n", "2.5").is_err());
        assert!(parse_sizes("n", "0").is_err());
    }

    #[test]
    fn curve_relative_k() {
        let ks = parse_k("k", "0.9*k1, kc1,1.5, 1.1*KC2").unwrap();
        assert_eq!(ks[0], KSpec::Relative { factor: 0.9, curve: Curve::K1 });
        assert_eq!(ks[1], KSpec::Relative { factor: 1.0, curve: Curve::Kc1 });
        assert_eq!(ks[2], KSpec::Absolute(1.5));
        assert_eq!(ks[3].label(), "1.1*kc2");
        let k = ks[0].resolve(2.0).unwrap();
        assert!((k - 0.9 * 1.0151125540071309).abs() < 1e-8);
        assert!(matches!(ks[0].resolve(1.0), Err(CliError::Config(_))));
        assert!(parse_k("k", "0.9*k7").is_err());
    }
}
