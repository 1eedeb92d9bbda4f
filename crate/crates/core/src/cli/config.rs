//! `key=value` experiment configs: one key per line, `#` starts a comment,
//! blank lines are ignored, unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::algorithms::{Algorithm, CommOrder, HyperParams};
use crate::error::{Error, Result};
use crate::problems::{DataSource, MlpLoss, ProblemSpec};
use crate::sim::{DurationLaw, Schedule, ScheduleKind, SimConfig};
use crate::stability::MapAlgorithm;

/// Every accepted key with its default. An empty default means unset.
pub const KEYS: &[(&str, &str)] = &[
    ("mode", "sim"),
    ("algorithm", "easgd_async"),
    ("eta", "0.01"),
    ("rho", "0.1"),
    ("alpha", ""),
    ("tau", "10"),
    ("p", "1"),
    ("delta", "0.99"),
    ("comm_order", "before"),
    ("problem", "quadratic"),
    ("dim", "10"),
    ("condition_number", "10"),
    ("noise_sigma", "0"),
    ("problem_seed", "0"),
    ("h", "1"),
    ("b", "0"),
    ("data", "two_gaussians"),
    ("n_samples", "200"),
    ("separation", "2"),
    ("data_seed", "0"),
    ("l2", "0.0001"),
    ("hidden", "8"),
    ("mlp_loss", "logistic"),
    ("init_seed", "0"),
    ("schedule", ""),
    ("schedule_law", "fixed"),
    ("step_costs", "1"),
    ("schedule_seed", "0"),
    ("steps", "1000"),
    ("cadence", "1"),
    ("seed", "0"),
    ("batch_size", "1"),
    ("burn_in", "0.5"),
    ("output_dir", "out"),
    ("map_algorithm", "easgd_rr"),
    ("grid_eta_step", "0.05"),
    ("grid_eta_count", "39"),
    ("grid_alpha_step", "0.05"),
    ("grid_alpha_count", "19"),
    ("compare_admm", "true"),
    ("variance_sigma", ""),
    ("bind", "127.0.0.1:7070"),
    ("connect", "127.0.0.1:7070"),
    ("worker_id", "0"),
    ("workers", ""),
    ("stop_threshold", ""),
    ("poll_interval_ms", "5"),
    ("grad_sleep_ms", "0"),
    ("metrics_every", "0"),
    ("speedup_p", "1,2,4"),
    ("threshold_fraction", "0.05"),
    ("timeout_s", "120"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sim,
    Stability,
    NetCenter,
    NetWorker,
    Speedup,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Sim => "sim",
            Mode::Stability => "stability",
            Mode::NetCenter => "net-center",
            Mode::NetWorker => "net-worker",
            Mode::Speedup => "speedup",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Mode::Sim, Mode::Stability, Mode::NetCenter, Mode::NetWorker, Mode::Speedup]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::config(format!("mode must be sim|stability|net-center|net-worker|speedup, got {s:?}"))
            })
    }
}

/// A fully resolved experiment: every key has a value once [`ExperimentConfig::parse`] returns.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    values: BTreeMap<&'static str, String>,
}

fn known_key(key: &str) -> Result<&'static str> {
    KEYS.iter().map(|(k, _)| *k).find(|k| *k == key).ok_or_else(|| Error::config(format!("unknown key `{key}`")))
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut cfg = ExperimentConfig { values: KEYS.iter().map(|(k, v)| (*k, v.to_string())).collect() };
        cfg.resolve().expect("defaults resolve");
        cfg
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, &[])
    }

    /// Parses `text`, then applies `overrides` before resolving defaults.
    pub fn parse_with(text: &str, overrides: &[(&str, String)]) -> Result<Self> {
        let mut values: BTreeMap<&'static str, String> = KEYS.iter().map(|(k, v)| (*k, v.to_string())).collect();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: line_no, message: format!("expected key=value, got {line:?}") })?;
            let key = known_key(key.trim()).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{m} on line {line_no}")),
                other => other,
            })?;
            if let Some(prev) = seen.insert(key, line_no) {
                return Err(Error::config(format!("key `{key}` set twice (lines {prev} and {line_no})")));
            }
            values.insert(key, value.trim().to_string());
        }
        for (k, v) in overrides {
            values.insert(known_key(k)?, v.clone());
        }
        let mut cfg = ExperimentConfig { values };
        cfg.resolve()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Fills derived defaults so that the written config is self-contained.
    fn resolve(&mut self) -> Result<()> {
        if !self.get("alpha").is_empty() {
            let alpha: f64 = self.num("alpha")?;
            let eta: f64 = self.num("eta")?;
            if !(eta > 0.0) {
                return Err(Error::config("key `alpha` needs a positive `eta`"));
            }
            self.values.insert("rho", (alpha / eta).to_string());
            self.values.insert("alpha", String::new());
        }
        if self.get("schedule").is_empty() {
            let kind = match self.algorithm()? {
                Algorithm::EasgdSync => ScheduleKind::Sync,
                Algorithm::AdmmRoundRobin => ScheduleKind::RoundRobin,
                _ => ScheduleKind::AsyncRandom,
            };
            self.values.insert("schedule", kind.as_str().to_string());
        }
        if self.get("workers").is_empty() {
            let p = self.get("p").to_string();
            self.values.insert("workers", p);
        }
        Ok(())
    }

    /// Type-checks every key that the selected mode reads.
    pub fn validate(&self) -> Result<()> {
        let mode = self.mode()?;
        self.output_dir();
        match mode {
            Mode::Sim => {
                self.sim_config()?;
                self.num::<f64>("burn_in")?;
            }
            Mode::Stability => {
                self.map_algorithm()?;
                self.grid_axes()?;
                self.flag("compare_admm")?;
                self.opt_num::<f64>("variance_sigma")?;
            }
            Mode::NetCenter => {
                self.problem_spec()?;
                self.num::<usize>("workers")?;
                self.opt_num::<f64>("stop_threshold")?;
                self.num::<u64>("poll_interval_ms")?;
            }
            Mode::NetWorker | Mode::Speedup => {
                self.hyper_params()?;
                self.problem_spec()?;
                self.num::<usize>("worker_id")?;
                self.num::<u64>("grad_sleep_ms")?;
                self.num::<u64>("metrics_every")?;
                self.num::<u64>("steps")?;
                if mode == Mode::Speedup {
                    self.list::<usize>("speedup_p")?;
                    self.opt_num::<f64>("stop_threshold")?;
                    self.num::<f64>("threshold_fraction")?;
                    self.num::<f64>("timeout_s")?;
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        self.values.insert(known_key(key)?, value.into());
        Ok(())
    }

    /// The resolved config in `key=value` form, keys in reference order.
    pub fn to_text(&self) -> String {
        KEYS.iter().map(|(k, _)| format!("{k}={}\n", self.get(k))).collect()
    }

    pub fn num<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key);
        raw.parse().map_err(|_| Error::config(format!("key `{key}`: cannot parse {raw:?}")))
    }

    pub fn opt_num<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        if self.get(key).is_empty() {
            Ok(None)
        } else {
            self.num(key).map(Some)
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        self.get(key)
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| Error::config(format!("key `{key}`: cannot parse {s:?}"))))
            .collect()
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(Error::config(format!("key `{key}`: expected true|false, got {other:?}"))),
        }
    }

    fn with_key<T>(&self, key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::Config(m) if !m.contains('`') => Error::Config(format!("key `{key}`: {m}")),
            other => other,
        })
    }

    pub fn mode(&self) -> Result<Mode> {
        self.with_key("mode", self.get("mode").parse())
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        self.with_key("algorithm", Algorithm::parse(self.get("algorithm")))
    }

    pub fn map_algorithm(&self) -> Result<MapAlgorithm> {
        self.with_key("map_algorithm", MapAlgorithm::parse(self.get("map_algorithm")))
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.get("output_dir"))
    }

    pub fn hyper_params(&self) -> Result<HyperParams> {
        let order = self.with_key("comm_order", CommOrder::parse(self.get("comm_order")))?;
        let hp =
            HyperParams::new(self.num("eta")?, self.num("rho")?, self.num("tau")?, self.num("p")?, self.num("delta")?);
        Ok(hp?.with_comm_order(order))
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let source = || -> Result<DataSource> {
            Ok(match self.get("data") {
                "two_gaussians" => DataSource::TwoGaussians {
                    n: self.num("n_samples")?,
                    d: self.num("dim")?,
                    separation: self.num("separation")?,
                    seed: self.num("data_seed")?,
                },
                path => DataSource::Csv(PathBuf::from(path)),
            })
        };
        Ok(match self.get("problem") {
            "quadratic" => ProblemSpec::Quadratic {
                dim: self.num("dim")?,
                condition_number: self.num("condition_number")?,
                noise_sigma: self.num("noise_sigma")?,
                seed: self.num("problem_seed")?,
            },
            "scalar_quadratic" => ProblemSpec::ScalarQuadratic {
                h: self.num("h")?,
                b: self.num("b")?,
                noise_sigma: self.num("noise_sigma")?,
            },
            "logistic" => ProblemSpec::Logistic { source: source()?, l2: self.num("l2")? },
            "mlp" => ProblemSpec::Mlp {
                source: source()?,
                hidden: self.num("hidden")?,
                loss: match self.get("mlp_loss") {
                    "logistic" => MlpLoss::Logistic,
                    "squared" => MlpLoss::Squared,
                    other => {
                        return Err(Error::config(format!("key `mlp_loss`: expected logistic|squared, got {other:?}")))
                    }
                },
                init_seed: self.num("init_seed")?,
            },
            other => {
                return Err(Error::config(format!(
                    "key `problem`: expected quadratic|scalar_quadratic|logistic|mlp, got {other:?}"
                )))
            }
        })
    }

    pub fn schedule(&self) -> Result<Schedule> {
        Ok(Schedule {
            kind: self.with_key("schedule", ScheduleKind::parse(self.get("schedule")))?,
            law: self.with_key("schedule_law", DurationLaw::parse(self.get("schedule_law")))?,
            costs: self.list("step_costs")?,
            seed: self.num("schedule_seed")?,
        })
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let problem = self.with_key("problem", self.problem_spec()?.build_shared())?;
        let mut cfg =
            SimConfig::new(self.algorithm()?, self.hyper_params()?, problem, self.schedule()?, self.num("steps")?);
        cfg.cadence = self.num("cadence")?;
        cfg.seed = self.num("seed")?;
        cfg.batch_size = self.num("batch_size")?;
        cfg.record_snapshots = true;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `(eta_h axis, alpha axis)`, each `k * step` for `k = 1..=count`.
    pub fn grid_axes(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let axis = |step: &str, count: &str| -> Result<Vec<f64>> {
            let n: u32 = self.num(count)?;
            if n == 0 {
                return Err(Error::config(format!("key `{count}` must be at least 1")));
            }
            Ok(crate::stability::grid_axis(self.num(step)?, 1, n))
        };
        Ok((axis("grid_eta_step", "grid_eta_count")?, axis("grid_alpha_step", "grid_alpha_count")?))
    }

    pub fn duration_ms(&self, key: &str) -> Result<Duration> {
        Ok(Duration::from_millis(self.num(key)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_materialize() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg.get("schedule"), "async_random");
        assert_eq!(cfg.get("workers"), "1");
        let hp = cfg.hyper_params().unwrap();
        assert!((hp.alpha() - 0.001).abs() < 1e-15);
        assert_eq!(hp.tau, 10);
        assert_eq!(hp.delta, 0.99);
    }

    #[test]
    fn unknown_key_named() {
        let err = ExperimentConfig::parse("mode=sim\nfoo=1\n").unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("foo")), "{err}");
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = ExperimentConfig::parse("# header\n\nalgorithm = sgd # inline\nsteps=5\n").unwrap();
        assert_eq!(cfg.get("algorithm"), "sgd");
        assert_eq!(cfg.num::<u64>("steps").unwrap(), 5);
    }

    #[test]
    fn alpha_resolves_to_rho() {
        let cfg = ExperimentConfig::parse("eta=0.5\nalpha=0.25\n").unwrap();
        assert_eq!(cfg.get("rho"), "0.5");
        assert_eq!(cfg.get("alpha"), "");
    }

    #[test]
    fn resolution_is_idempotent() {
        let cfg = ExperimentConfig::parse("algorithm=easgd_sync\nalpha=0.003\np=3\n").unwrap();
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.get("schedule"), "sync");
    }

    #[test]
    fn bad_values_name_their_key() {
        for (text, key) in
            [("eta=abc", "eta"), ("problem=cube", "problem"), ("mode=fly", "mode"), ("schedule=never", "schedule")]
        {
            let err = ExperimentConfig::parse(text).unwrap_err();
            assert!(err.to_string().contains(key), "{text}: {err}");
        }
        assert!(matches!(ExperimentConfig::parse("steps"), Err(Error::Parse { line: 1, .. })));
        assert!(ExperimentConfig::parse("eta=0.1\neta=0.2").is_err());
    }
}
