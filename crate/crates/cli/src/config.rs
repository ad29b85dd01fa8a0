use std::path::Path;
use std::time::Duration;

use anyhow::Context;
use bessbid_core::harness::SolveSettings;
use serde::Deserialize;

/// Keys accepted in a `--config` file.
#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub gap_tol: Option<f64>,
    /// Seconds; 0 means no limit.
    pub time_limit: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub value_cuts: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<FileConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Flag values, including those taken from the environment.
#[derive(Debug, Default, Clone)]
pub struct FlagOverrides {
    pub gap: Option<f64>,
    pub time_limit: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub settings: SolveSettings,
    /// 0 lets the thread pool pick.
    pub threads: usize,
}

pub fn resolve(file: &FileConfig, flags: &FlagOverrides) -> anyhow::Result<RunConfig> {
    let mut settings = SolveSettings::default();
    if let Some(g) = flags.gap.or(file.gap_tol) {
        anyhow::ensure!(g >= 0.0 && g.is_finite(), "gap must be a nonnegative number, got {g}");
        settings.gap = g;
    }
    if let Some(t) = flags.time_limit.or(file.time_limit) {
        anyhow::ensure!(t >= 0.0 && t.is_finite(), "time limit must be a nonnegative number of seconds, got {t}");
        settings.time_limit = (t > 0.0).then(|| Duration::from_secs_f64(t));
    }
    if let Some(s) = flags.seed.or(file.seed) {
        settings.seed = s;
    }
    if let Some(v) = file.value_cuts {
        settings.value_cuts = v;
    }
    Ok(RunConfig { settings, threads: flags.threads.or(file.threads).unwrap_or(0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beats_defaults() {
        let file = FileConfig { gap_tol: Some(0.05), seed: Some(3), time_limit: Some(0.0), ..Default::default() };
        let flags = FlagOverrides { gap: Some(0.001), ..Default::default() };
        let c = resolve(&file, &flags).unwrap();
        assert_eq!(c.settings.gap, 0.001);
        assert_eq!(c.settings.seed, 3);
        assert_eq!(c.settings.time_limit, None);
        let d = resolve(&FileConfig::default(), &FlagOverrides::default()).unwrap();
        assert_eq!(d.settings.gap, SolveSettings::default().gap);
        assert_eq!(d.threads, 0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("gap = 0.1").is_err());
        assert!(resolve(&FileConfig::default(), &FlagOverrides { gap: Some(-1.0), ..Default::default() }).is_err());
    }
}
