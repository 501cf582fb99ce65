//! Experiment configuration: an optional TOML file merged with CLI flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub device: Option<PathBuf>,
    #[serde(default)]
    pub devices: Vec<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub lengths: Option<RangeSpec>,
    pub thetas: Option<RangeSpec>,
    #[serde(default)]
    pub noise: NoiseSettings,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSettings {
    pub counts_per_basis: Option<u64>,
}

impl ExperimentConfig {
    /// Load a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Invalid(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.device.as_mut().map(rebase);
        cfg.calibration.as_mut().map(rebase);
        cfg.out.as_mut().map(rebase);
        cfg.devices.iter_mut().for_each(rebase);
        if let Some(r) = &cfg.lengths {
            r.values()?;
        }
        if let Some(r) = &cfg.thetas {
            r.values()?;
        }
        Ok(cfg)
    }
}

/// Either an explicit ascending list or `start:stop:step` (inclusive of
/// `stop` when it lies on the grid).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RangeSpec {
    List(Vec<f64>),
    Grid { start: f64, stop: f64, step: f64 },
}

impl RangeSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let v = match self {
            RangeSpec::List(v) => v.clone(),
            &RangeSpec::Grid { start, stop, step } => {
                if !step.is_finite()
                    || step <= 0.0
                    || !start.is_finite()
                    || !stop.is_finite()
                    || stop < start
                {
                    return Err(CliError::Invalid(format!(
                        "invalid range {start}:{stop}:{step} (need step > 0 and start ≤ stop)"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| start + i as f64 * step).collect()
            }
        };
        if v.is_empty() {
            return Err(CliError::Invalid("range is empty".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Invalid("range contains non-finite values".into()));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Invalid(
                "range values must be strictly increasing".into(),
            ));
        }
        Ok(v)
    }
}

impl std::str::FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid number `{t}`"))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [a, b, c] => Ok(RangeSpec::Grid {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            }),
            [_] => s
                .split(',')
                .map(num)
                .collect::<Result<Vec<_>, _>>()
                .map(RangeSpec::List),
            _ => Err(format!(
                "expected `start:stop:step` or a comma list, got `{s}`"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_stop() {
        let r: RangeSpec = "0:1:0.25".parse().unwrap();
        assert_eq!(r.values().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let r: RangeSpec = "0:50:0.5".parse().unwrap();
        let v = r.values().unwrap();
        assert_eq!(v.len(), 101);
        assert_eq!(v[46], 23.0);
    }

    #[test]
    fn lists_must_be_ordered() {
        let r: RangeSpec = "3,1,2".parse().unwrap();
        assert!(r.values().is_err());
        let r: RangeSpec = "1,2,3".parse().unwrap();
        assert_eq!(r.values().unwrap(), vec![1.0, 2.0, 3.0]);
        assert!("1:2".parse::<RangeSpec>().is_err());
        assert!("0:1:0".parse::<RangeSpec>().unwrap().values().is_err());
    }

    #[test]
    fn toml_forms() {
        let cfg: ExperimentConfig = toml::from_str(
            "seed = 3\nlengths = { start = 0.0, stop = 10.0, step = 1.0 }\nthetas = [0.0, 90.0]\n[noise]\ncounts_per_basis = 500\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.lengths.unwrap().values().unwrap().len(), 11);
        assert_eq!(cfg.thetas.unwrap().values().unwrap(), vec![0.0, 90.0]);
        assert_eq!(cfg.noise.counts_per_basis, Some(500));
        assert!(toml::from_str::<ExperimentConfig>("bogus = 1").is_err());
    }
}
