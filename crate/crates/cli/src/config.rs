//! `key = value` run files. Keys carry their unit (`delta_rad`, `R_len`);
//! command-line flags win over file entries.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};

use crate::exit::CliError;

pub const KEYS: &[&str] = &[
    "model", "radius_len", "l1_len", "l2_len", "dims_len", "N", "seed", "tol", "k_curv", "trials", "curv_tol",
    "n_dim", "delta_rad", "R_len", "budget", "chart_radius_len", "map", "force", "band_lo_len", "band_hi_len",
    "claims", "max_defect", "max_claim", "kappa", "shift_len", "w1", "w2",
];

#[derive(Debug, Default, Clone)]
pub struct RunFile {
    values: BTreeMap<String, String>,
}

impl RunFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", i + 1)));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(CliError::Usage(format!("config line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Ok(Self::parse(&text)?)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("config `{key} = {v}`: {e}"))))
            .transpose()
    }

    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.values.get(key).map(|v| parse_list(v).map_err(|e| CliError::Usage(format!("config `{key}`: {e}")))).transpose()
    }

    /// Flag value, else file value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str, flag_name: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.pick(flag, key)?
            .ok_or_else(|| CliError::Usage(format!("missing {flag_name} (or `{key}` in the config file)")))
    }
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"))).collect()
}

pub fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{name} must be positive and finite, got {v}")))
    }
}
