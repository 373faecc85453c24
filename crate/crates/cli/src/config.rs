//! Run configuration: flags, an optional `key = value` file and the
//! environment, resolved once before any work starts.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;

use crate::io::usage;

pub const DEFAULT_SEED: u64 = 20_230_710;
pub const SEED_ENV: &str = "MMC_TOOLKIT_SEED";

const KNOWN_KEYS: [&str; 6] = ["seed", "jobs", "lenient", "lang", "min_aligned_fraction", "drop_singletons"];

/// Values read from a config file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key = value", i + 1)))?;
            let key = k.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(usage(format!("config line {}: unknown key {key:?}", i + 1)));
            }
            values.insert(key.to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| usage(format!("config key {key}: invalid value {v:?}"))),
        }
    }
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub lenient: bool,
    pub file: ConfigFile,
}

impl RunConfig {
    /// Seed precedence: flag, then environment, then config file, then the
    /// built-in constant.
    pub fn resolve(seed_flag: Option<u64>, env_seed: Option<String>, jobs: Option<usize>, lenient: bool, file: ConfigFile) -> Result<Self> {
        let env = env_seed
            .map(|s| s.trim().parse::<u64>().map_err(|_| usage(format!("{SEED_ENV}: invalid seed {s:?}"))))
            .transpose()?;
        let seed = match seed_flag.or(env) {
            Some(s) => s,
            None => file.get("seed")?.unwrap_or(DEFAULT_SEED),
        };
        let jobs = match jobs {
            Some(j) => Some(j),
            None => file.get("jobs")?,
        };
        if jobs == Some(0) {
            return Err(usage("jobs must be at least 1"));
        }
        let lenient = lenient || file.get("lenient")?.unwrap_or(false);
        Ok(Self { seed, jobs, lenient, file })
    }

    pub fn lang(&self, flag: Option<String>) -> Result<String> {
        Ok(match flag {
            Some(l) => l,
            None => self.file.get("lang")?.unwrap_or_else(|| "zh".to_string()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(text: &str) -> ConfigFile {
        ConfigFile::parse(text).unwrap()
    }

    #[test]
    fn seed_precedence() {
        let cfg = file("seed = 7\n");
        assert_eq!(RunConfig::resolve(Some(1), Some("2".into()), None, false, cfg.clone()).unwrap().seed, 1);
        assert_eq!(RunConfig::resolve(None, Some("2".into()), None, false, cfg.clone()).unwrap().seed, 2);
        assert_eq!(RunConfig::resolve(None, None, None, false, cfg).unwrap().seed, 7);
        assert_eq!(RunConfig::resolve(None, None, None, false, ConfigFile::default()).unwrap().seed, DEFAULT_SEED);
    }

    #[test]
    fn parses_comments_and_rejects_unknown_keys() {
        let cfg = file("# comment\n\nlang = fa\nlenient=true\n");
        let run = RunConfig::resolve(None, None, None, false, cfg).unwrap();
        assert!(run.lenient);
        assert_eq!(run.lang(None).unwrap(), "fa");
        assert_eq!(run.lang(Some("zh".into())).unwrap(), "zh");
        assert!(ConfigFile::parse("colour = red").is_err());
        assert!(ConfigFile::parse("seed").is_err());
        assert!(RunConfig::resolve(None, Some("x".into()), None, false, ConfigFile::default()).is_err());
    }
}
