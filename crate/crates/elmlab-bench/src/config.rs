//! Flat key=value config files.
//!
//! One `key = value` pair per line; `#` starts a comment; blank lines are
//! skipped; later keys override earlier ones. Unknown keys are rejected so
//! typos fail loudly instead of silently running defaults.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use elmlab::datagen::{GridSpec, SplitSpec, TargetSpec};
use elmlab::elm::WeightInit;

use crate::experiments::{ExperimentSpec, Method};
use crate::{DEFAULT_HIDDEN, DEFAULT_SEEDS, DEFAULT_THRESHOLD};

const KNOWN_KEYS: &[&str] = &[
    "id",
    "target",
    "method",
    "init",
    "mean",
    "sd",
    "low",
    "high",
    "hidden",
    "seeds",
    "threshold",
    "x_min",
    "x_max",
    "n_points",
    "test_stride",
    "expect",
    "lr",
    "max_iters",
    "snapshot_every",
    "layers",
    "sds",
    "ls",
    "ks",
    "n_samples",
];

/// Parses the raw key=value map. Structure errors (bad lines, unknown or
/// duplicate-conflicting keys) are reported with line numbers.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`, got `{raw}`", lineno + 1);
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            bail!("line {}: unknown key `{key}`", lineno + 1);
        }
        map.insert(key, value);
    }
    Ok(map)
}

pub fn parse_target(s: &str) -> Result<TargetSpec> {
    if s == "multisine" {
        return Ok(TargetSpec::MultiSine);
    }
    if let Some(k) = s.strip_prefix("sine-k") {
        let k: u32 = k
            .parse()
            .with_context(|| format!("target `{s}`: bad frequency"))?;
        return Ok(TargetSpec::SingleSine { k });
    }
    bail!("target `{s}`: expected `multisine` or `sine-k<freq>`")
}

pub fn parse_method(s: &str) -> Result<Method> {
    match s {
        "elm" => Ok(Method::Elm),
        "gd-ann" => Ok(Method::GdAnn),
        other => bail!("method `{other}`: expected `elm` or `gd-ann`"),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<T>()
                .map_err(|e| anyhow::anyhow!("{what} `{p}`: {e}"))
        })
        .collect()
}

/// Typed view over the raw map with defaults applied. CLI flags are merged
/// by the caller after this, so precedence is defaults < file < flags.
pub struct ConfigFile {
    pub map: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn from_text(text: &str) -> Result<Self> {
        Ok(Self {
            map: parse_kv(text)?,
        })
    }

    pub fn empty() -> Self {
        Self {
            map: BTreeMap::new(),
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("key `{key}` = `{raw}`: {e}")),
        }
    }

    pub fn experiment_spec(&self) -> Result<ExperimentSpec> {
        let init = match self.map.get("init").map(String::as_str) {
            None | Some("normal") => WeightInit::Normal {
                mean: self.get("mean")?.unwrap_or(0.0),
                sd: self.get("sd")?.unwrap_or(1.0),
            },
            Some("uniform") => WeightInit::Uniform {
                low: self.get("low")?.unwrap_or(-1.0),
                high: self.get("high")?.unwrap_or(1.0),
            },
            Some(other) => bail!("init `{other}`: expected `normal` or `uniform`"),
        };
        let grid = GridSpec {
            x_min: self.get("x_min")?.unwrap_or(-std::f64::consts::PI),
            x_max: self.get("x_max")?.unwrap_or(std::f64::consts::PI),
            n_points: self.get("n_points")?.unwrap_or(1000),
        };
        let split = SplitSpec {
            test_stride: self.get("test_stride")?.unwrap_or(5),
        };
        let seeds = match self.map.get("seeds") {
            None => DEFAULT_SEEDS.to_vec(),
            Some(raw) => parse_list(raw, "seed")?,
        };
        Ok(ExperimentSpec {
            id: self.map.get("id").cloned().unwrap_or_else(|| "run".into()),
            target: match self.map.get("target") {
                None => TargetSpec::MultiSine,
                Some(raw) => parse_target(raw)?,
            },
            method: match self.map.get("method") {
                None => Method::Elm,
                Some(raw) => parse_method(raw)?,
            },
            init,
            hidden: self.get("hidden")?.unwrap_or(DEFAULT_HIDDEN),
            seeds,
            threshold: self.get("threshold")?.unwrap_or(DEFAULT_THRESHOLD),
            grid,
            split,
        })
    }

    /// Expected verdict, when the file declares one.
    pub fn expect(&self) -> Result<Option<bool>> {
        match self.map.get("expect").map(String::as_str) {
            None => Ok(None),
            Some("captured") => Ok(Some(true)),
            Some("not-captured") => Ok(Some(false)),
            Some(other) => bail!("expect `{other}`: expected `captured` or `not-captured`"),
        }
    }

    pub fn mlp_config(&self) -> Result<elmlab::gdnet::MLPConfig> {
        let mut config = elmlab::gdnet::MLPConfig::default();
        if let Some(raw) = self.map.get("layers") {
            config.layer_sizes = parse_list(raw, "layer width")?;
        }
        if let Some(lr) = self.get("lr")? {
            config.learning_rate = lr;
        }
        if let Some(n) = self.get("max_iters")? {
            config.max_iters = n;
        }
        if let Some(n) = self.get("snapshot_every")? {
            config.snapshot_every = n;
        }
        Ok(config)
    }

    pub fn list_f64(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.map
            .get(key)
            .map(|raw| parse_list(raw, key))
            .transpose()
    }

    pub fn list_usize(&self, key: &str) -> Result<Option<Vec<usize>>> {
        self.map
            .get(key)
            .map(|raw| parse_list(raw, key))
            .transpose()
    }

    pub fn list_u32(&self, key: &str) -> Result<Option<Vec<u32>>> {
        self.map
            .get(key)
            .map(|raw| parse_list(raw, key))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_blanks_and_overrides() {
        let text =
            "\n# comment\nid = k20-sd20  # trailing comment\ntarget = sine-k20\nsd = 1\nsd = 20\n";
        let map = parse_kv(text).unwrap();
        assert_eq!(map.get("id").unwrap(), "k20-sd20");
        assert_eq!(map.get("sd").unwrap(), "20");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(parse_kv("frobnicate = 1").is_err());
        assert!(parse_kv("just some words").is_err());
    }

    #[test]
    fn builds_spec_with_defaults() {
        let cfg = ConfigFile::from_text("target = sine-k50\nsd = 20\nhidden = 400").unwrap();
        let spec = cfg.experiment_spec().unwrap();
        assert_eq!(spec.target, TargetSpec::SingleSine { k: 50 });
        assert_eq!(spec.hidden, 400);
        assert_eq!(spec.seeds, DEFAULT_SEEDS.to_vec());
        assert_eq!(spec.threshold, DEFAULT_THRESHOLD);
        match spec.init {
            WeightInit::Normal { mean, sd } => {
                assert_eq!(mean, 0.0);
                assert_eq!(sd, 20.0);
            }
            other => panic!("unexpected init {other:?}"),
        }
    }

    #[test]
    fn target_round_trips_through_label() {
        for t in [TargetSpec::MultiSine, TargetSpec::SingleSine { k: 7 }] {
            assert_eq!(parse_target(&t.label()).unwrap(), t);
        }
    }

    #[test]
    fn expectation_parses_both_ways() {
        let cfg = ConfigFile::from_text("expect = captured").unwrap();
        assert_eq!(cfg.expect().unwrap(), Some(true));
        let cfg = ConfigFile::from_text("expect = not-captured").unwrap();
        assert_eq!(cfg.expect().unwrap(), Some(false));
        assert!(ConfigFile::from_text("expect = maybe")
            .unwrap()
            .expect()
            .is_err());
    }

    #[test]
    fn mlp_keys_override_defaults() {
        let cfg = ConfigFile::from_text("layers = 1,64,1\nlr = 0.01\nmax_iters = 500").unwrap();
        let mlp = cfg.mlp_config().unwrap();
        assert_eq!(mlp.layer_sizes, vec![1, 64, 1]);
        assert_eq!(mlp.learning_rate, 0.01);
        assert_eq!(mlp.max_iters, 500);
        assert_eq!(mlp.snapshot_every, 1000);
    }
}
