//! Experiment configuration and its plain-text `key = value` file format.
//!
//! Blank lines and lines starting with `#` are ignored. Unset keys fall back
//! to the per-experiment defaults. Recognised keys:
//!
//! `experiment`, `family`, `rank`, `replicas`, `steps`, `dt`, `t_grid`
//! (comma separated), `seed`, `repeats`, `out`, `entrance` (`rejection` or
//! `radial`), `t0`, `weight_radius`, `lattice_radius`, `tail_tol`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::charfun::Truncation;
use crate::error::{Error, Result};
use crate::rootsys::{Family, MAX_RANK};

/// The named experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Identities,
    Characters,
    Radial,
    Endorbit,
    Kirillov,
    Endpoint,
    Condorbit,
    Martingale,
    #[serde(rename = "phiQ")]
    PhiQ,
    Entrance,
    Gauge,
    Intertwine,
    Main,
}

impl Experiment {
    pub const ALL: [Experiment; 13] = [
        Experiment::Identities,
        Experiment::Characters,
        Experiment::Radial,
        Experiment::Endorbit,
        Experiment::Kirillov,
        Experiment::Endpoint,
        Experiment::Condorbit,
        Experiment::Martingale,
        Experiment::PhiQ,
        Experiment::Entrance,
        Experiment::Gauge,
        Experiment::Intertwine,
        Experiment::Main,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Identities => "identities",
            Experiment::Characters => "characters",
            Experiment::Radial => "radial",
            Experiment::Endorbit => "endorbit",
            Experiment::Kirillov => "kirillov",
            Experiment::Endpoint => "endpoint",
            Experiment::Condorbit => "condorbit",
            Experiment::Martingale => "martingale",
            Experiment::PhiQ => "phiQ",
            Experiment::Entrance => "entrance",
            Experiment::Gauge => "gauge",
            Experiment::Intertwine => "intertwine",
            Experiment::Main => "main",
        }
    }

    /// The identity or law the experiment checks.
    pub fn anchor(self) -> &'static str {
        match self {
            Experiment::Identities => "affine theta series: lattice form equals character form; Poisson theta identity; sign of the denominator series",
            Experiment::Characters => "Weyl character formula and the heat kernel character expansion",
            Experiment::Radial => "radial density p(e^z)|π(z)|² of Brownian motion on the group",
            Experiment::Endorbit => "Haar average of p(k₁, u k₂ u*) equals Σ ch_λ(k₁⁻¹) ch_λ(k₂) e^{−2π²sσ(‖λ+ρ‖²−‖ρ‖²)}",
            Experiment::Kirillov => "Fourier transform of the orbit (Duistermaat-Heckman) measure equals the normalised Weyl ratio",
            Experiment::Endpoint => "E[e^{(y,x₁)/σ} | rad = z] = φ̂_{d+y}(1/σ, z/σ) / φ̂_d(1/σ, z/σ)",
            Experiment::Condorbit => "conditional exponential moment of a Cartan-valued drift given the radial part",
            Experiment::Martingale => "e^{−(y,y)t/2} φ̂_{d+y}(τ_t, b_t) is a martingale under the free space-time motion",
            Experiment::PhiQ => "E_Q[φ̂_{d+y}/φ̂_d (τ_t, b_t)] = φ̂_{d+y}/φ̂_d (u, x) · e^{(y,y)t/2}",
            Experiment::Entrance => "entrance law of the conditioned process and its π² small-time limit",
            Experiment::Gauge => "gauge action on paths matches conjugation of the stochastic exponential",
            Experiment::Intertwine => "intertwining of the conditioned process with the sheet transition kernel",
            Experiment::Main => "conditioned space-time motion b_t/t equals in law the radial process of a Brownian sheet",
        }
    }

    /// Whether the experiment draws random numbers (and is repeated over seeds).
    pub fn is_stochastic(self) -> bool {
        !matches!(self, Experiment::Identities | Experiment::Characters)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

/// How the entrance law is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntranceChoice {
    Rejection,
    Radial,
}

/// Parameters of one experiment run. `None` fields take experiment defaults.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub family: Family,
    pub rank: Option<usize>,
    pub replicas: Option<usize>,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub truncation: Truncation,
    pub seed: u64,
    /// Number of seeds (`seed, seed + 1, …`) each stochastic check runs at.
    pub repeats: usize,
    pub out: Option<PathBuf>,
    pub entrance: EntranceChoice,
    pub t0: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            family: Family::A,
            rank: None,
            replicas: None,
            steps: None,
            dt: None,
            t_grid: None,
            truncation: Truncation::default(),
            seed: 20240601,
            repeats: 2,
            out: None,
            entrance: EntranceChoice::Rejection,
            t0: None,
        }
    }

    /// Parses a configuration file body.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: Option<ExperimentConfig> = None;
        let mut pending = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            // `#` starts a comment anywhere on the line
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    "config",
                    format!("line {}: expected `key = value`", lineno + 1),
                )
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k == "experiment" {
                cfg = Some(ExperimentConfig::new(v.parse()?));
            } else {
                pending.push((k.to_string(), v.to_string()));
            }
        }
        let mut cfg = cfg.ok_or_else(|| Error::config("experiment", "missing"))?;
        for (k, v) in pending {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
        }
        match key {
            "experiment" => self.experiment = value.parse()?,
            "family" => self.family = value.parse()?,
            "rank" => self.rank = Some(num(key, value)?),
            "replicas" => self.replicas = Some(num(key, value)?),
            "steps" => self.steps = Some(num(key, value)?),
            "dt" => self.dt = Some(num(key, value)?),
            "t_grid" => {
                self.t_grid = Some(
                    value
                        .split(',')
                        .map(|s| num::<f64>(key, s.trim()))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "seed" => self.seed = num(key, value)?,
            "repeats" => self.repeats = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "entrance" => {
                self.entrance = match value {
                    "rejection" => EntranceChoice::Rejection,
                    "radial" => EntranceChoice::Radial,
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("expected `rejection` or `radial`, got `{value}`"),
                        ))
                    }
                }
            }
            "t0" => self.t0 = Some(num(key, value)?),
            "weight_radius" => self.truncation.weight_radius = num(key, value)?,
            "lattice_radius" => self.truncation.lattice_radius = num(key, value)?,
            "tail_tol" => self.truncation.tail_tol = num(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.rank {
            if r == 0 || r > MAX_RANK {
                return Err(Error::config(
                    "rank",
                    format!("must be in 1..={MAX_RANK}, got {r}"),
                ));
            }
        }
        for (name, v) in [("replicas", self.replicas), ("steps", self.steps)] {
            if v == Some(0) {
                return Err(Error::config(name, "must be positive"));
            }
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats", "must be positive"));
        }
        for (name, v) in [("dt", self.dt), ("t0", self.t0)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::config(name, format!("must be positive, got {v}")));
                }
            }
        }
        if let Some(g) = &self.t_grid {
            if g.is_empty()
                || g[0] <= 0.0
                || g.windows(2).any(|w| w[1] <= w[0])
                || g.iter().any(|v| !v.is_finite())
            {
                return Err(Error::config(
                    "t_grid",
                    "must be positive and strictly increasing",
                ));
            }
        }
        self.truncation.validate()
    }

    /// Seeds at which stochastic checks are repeated.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repeats as u64)
            .map(|k| self.seed.wrapping_add(k))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let cfg = ExperimentConfig::parse(
            "# comment\nexperiment = main\nrank = 1\nreplicas = 500\nt_grid = 0.5, 1, 2\ndt = 0.002\nentrance = radial  # inline comment\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::Main);
        assert_eq!(cfg.replicas, Some(500));
        assert_eq!(cfg.t_grid, Some(vec![0.5, 1.0, 2.0]));
        assert_eq!(cfg.entrance, EntranceChoice::Radial);
        assert_eq!(cfg.seeds(), vec![9, 10]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ExperimentConfig::parse("experiment = nosuch"),
            Err(Error::UnknownExperiment(_))
        ));
        assert!(ExperimentConfig::parse("rank = 1").is_err());
        assert!(ExperimentConfig::parse("experiment = main\nreplicas = 0").is_err());
        assert!(ExperimentConfig::parse("experiment = main\nt_grid = 1, 0.5").is_err());
        assert!(ExperimentConfig::parse("experiment = main\nbogus = 1").is_err());
        assert!(ExperimentConfig::parse("experiment = main\nrank = 7").is_err());
    }

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }
}
