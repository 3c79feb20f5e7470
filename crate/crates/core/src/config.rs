//! The run configuration: a single human-readable `key = value` file with
//! `#` comments. Every numeric key is validated against the module
//! preconditions before any computation starts.

use crate::error::{ModelError, Result};
use crate::geometry::ModelParams;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub lambda: f64,
    pub n: u32,
    pub m: i32,
    pub p: u32,
    pub r1: f64,
    pub r2: f64,
    /// Scale the ambient model was fixed at; defaults to r1.
    pub r1_init: f64,
    /// Search ratio r2/r1.
    pub ratio: f64,
    pub budget: u32,
    pub seed: u64,
    pub samples: usize,
    pub max_factors: usize,
    pub grid: usize,
    pub mesh: usize,
    pub tol_boundary: f64,
    /// Combinatorics table range.
    pub n_max: u32,
    pub m_max: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lambda: 0.5,
            n: 1,
            m: -1,
            p: 1,
            r1: 0.4,
            r2: 0.1,
            r1_init: 0.4,
            ratio: 0.25,
            budget: 12,
            seed: 20240,
            samples: 10_000,
            max_factors: 9,
            grid: 256,
            mesh: 200,
            tol_boundary: 1e-12,
            n_max: 4,
            m_max: 1,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.lambda, self.n, self.m, self.p, self.r1, self.r2)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(ModelError::Config(format!(
                "ratio must lie in (0,1), got {}",
                self.ratio
            )));
        }
        if self.r1_init < self.r1 {
            return Err(ModelError::Config("r1_init must be at least r1".into()));
        }
        if self.max_factors == 0 || self.max_factors.is_multiple_of(2) {
            return Err(ModelError::Config("max_factors must be odd".into()));
        }
        if self.grid < 16 {
            return Err(ModelError::Config("grid must be at least 16".into()));
        }
        if self.mesh < 2 {
            return Err(ModelError::Config("mesh must be at least 2".into()));
        }
        if !(self.tol_boundary > 0.0 && self.tol_boundary < 1e-3) {
            return Err(ModelError::Config("tol_boundary must lie in (0, 1e-3)".into()));
        }
        if self.n_max < 1 || self.m_max < 1 {
            return Err(ModelError::Config("n_max and m_max must be positive".into()));
        }
        Ok(())
    }

    /// Parse a `key = value` file body over the defaults.
    pub fn parse(body: &str) -> Result<RunConfig> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in body.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ModelError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let mut config = RunConfig::default();
        let mut saw_r1_init = false;
        for (key, value) in &map {
            let num = || -> Result<f64> {
                value.parse::<f64>().map_err(|_| {
                    ModelError::Config(format!("key {}: `{}` is not a number", key, value))
                })
            };
            match key.as_str() {
                "lambda" => config.lambda = num()?,
                "n" => config.n = num()? as u32,
                "m" => config.m = num()? as i32,
                "p" => config.p = num()? as u32,
                "r1" => config.r1 = num()?,
                "r2" => config.r2 = num()?,
                "r1_init" => {
                    config.r1_init = num()?;
                    saw_r1_init = true;
                }
                "ratio" => config.ratio = num()?,
                "budget" => config.budget = num()? as u32,
                "seed" => config.seed = num()? as u64,
                "samples" => config.samples = num()? as usize,
                "max_factors" => config.max_factors = num()? as usize,
                "grid" => config.grid = num()? as usize,
                "mesh" => config.mesh = num()? as usize,
                "tol_boundary" => config.tol_boundary = num()?,
                "n_max" => config.n_max = num()? as u32,
                "m_max" => config.m_max = num()? as u32,
                other => {
                    return Err(ModelError::Config(format!("unknown key `{}`", other)));
                }
            }
        }
        if !saw_r1_init {
            config.r1_init = config.r1;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn echo(&self, checks: Vec<String>) -> crate::report::RunEcho {
        crate::report::RunEcho {
            lambda: self.lambda,
            n: self.n,
            m: self.m,
            p: self.p,
            r1: self.r1,
            r2: self.r2,
            r1_init: self.r1_init,
            seed: self.seed,
            samples: self.samples,
            max_factors: self.max_factors,
            grid: self.grid,
            mesh: self.mesh,
            tol_boundary: self.tol_boundary,
            checks,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let cfg = RunConfig::parse("lambda = 0.5\nn = 2\nm = 1 # coprime\nseed = 9\n").unwrap();
        assert_eq!(cfg.n, 2);
        assert_eq!(cfg.m, 1);
        assert_eq!(cfg.seed, 9);
        // r1_init follows r1 unless set.
        let cfg = RunConfig::parse("r1 = 0.3\nr2 = 0.05\n").unwrap();
        assert_eq!(cfg.r1_init, 0.3);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            RunConfig::parse("unknown_key = 1\n"),
            Err(ModelError::Config(_))
        ));
        assert!(RunConfig::parse("lambda = nope\n").is_err());
        assert!(RunConfig::parse("lambda = 1.7\n").is_err());
        assert!(RunConfig::parse("n = 2\nm = 4\n").is_err());
        assert!(RunConfig::parse("just a line\n").is_err());
    }
}
