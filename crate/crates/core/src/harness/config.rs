//! Experiment configuration.
//!
//! The file format is line based: `[section]` headers, `key = value` pairs,
//! `#` comments. A key may also be written fully qualified (`channel.alpha =
//! 1.3`) anywhere, or bare outside any section when its name is unique across
//! sections (`variant = sfwfl`). Unknown and duplicate keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::{ChannelConfig, FadingKind, FadingModel};
use crate::error::{Error, Result};
use crate::stable_noise::StableNoiseParams;
use crate::tasks::TaskFamily;

/// Environment variable that overrides `run.seed` in the command-line tool.
pub const SEED_ENV: &str = "SFWFL_SEED";

/// `(canonical key, aliases)`.
const KEYS: &[(&str, &[&str])] = &[
    ("task.family", &[]),
    ("task.d", &[]),
    ("task.n_ues", &["N"]),
    ("task.samples_per_ue", &[]),
    ("task.heterogeneity", &[]),
    ("task.conditioning", &[]),
    ("task.target_noise", &[]),
    ("task.regularization", &[]),
    ("algorithm.variant", &[]),
    ("algorithm.local_steps", &["M"]),
    ("algorithm.latency", &["D", "arrival_latency"]),
    ("algorithm.theta", &[]),
    ("algorithm.rounds", &["K"]),
    ("algorithm.participants_per_round", &[]),
    ("channel.alpha", &[]),
    ("channel.noise_scale", &[]),
    ("channel.fading", &[]),
    ("channel.fading_variance", &[]),
    ("run.trials", &[]),
    ("run.seed", &[]),
    ("run.task_seed", &[]),
    ("run.output", &[]),
    ("run.record_every", &[]),
    ("run.g_probes", &[]),
    ("run.l_probes", &[]),
    ("run.probe_radius", &[]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Sfwfl,
    ZeroWait,
    Aggressive,
    Server,
    Sgd,
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sfwfl" => Ok(Variant::Sfwfl),
            "zero_wait" => Ok(Variant::ZeroWait),
            "aggressive" => Ok(Variant::Aggressive),
            "server" => Ok(Variant::Server),
            "sgd" => Ok(Variant::Sgd),
            other => Err(format!("unknown variant `{other}` (sfwfl|zero_wait|aggressive|server|sgd)")),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Sfwfl => "sfwfl",
            Variant::ZeroWait => "zero_wait",
            Variant::Aggressive => "aggressive",
            Variant::Server => "server",
            Variant::Sgd => "sgd",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSection {
    pub family: TaskFamily,
    pub d: usize,
    pub n_ues: usize,
    pub samples_per_ue: usize,
    pub heterogeneity: f64,
    pub conditioning: f64,
    pub target_noise: f64,
    pub regularization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSection {
    pub variant: Variant,
    pub local_steps: usize,
    /// `D` for compute-and-wait and zero-wait, arrival latency for aggressive.
    pub latency: usize,
    pub theta: f64,
    pub rounds: usize,
    pub participants_per_round: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSection {
    pub alpha: f64,
    pub noise_scale: f64,
    pub fading: FadingKind,
    pub fading_variance: f64,
}

impl ChannelSection {
    pub fn channel(&self) -> Result<ChannelConfig> {
        Ok(ChannelConfig {
            fading: FadingModel::new(self.fading, self.fading_variance)?,
            noise: StableNoiseParams::new(self.alpha, self.noise_scale)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub trials: usize,
    pub seed: u64,
    /// Seed for task generation; defaults to `seed`.
    pub task_seed: u64,
    pub output: Option<PathBuf>,
    pub record_every: usize,
    pub g_probes: usize,
    pub l_probes: usize,
    /// Radius of the gradient-probe ball; defaults to `||w0 - w*||`.
    pub probe_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: TaskSection,
    pub algorithm: AlgorithmSection,
    pub channel: ChannelSection,
    pub run: RunSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        RawConfig::default().build().expect("defaults are valid")
    }
}

/// Parsed but unvalidated key/value pairs, keyed by canonical name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

fn canonical(key: &str, section: Option<&str>) -> Option<&'static str> {
    let lookup = |full: &str| {
        KEYS.iter()
            .find(|(k, aliases)| {
                *k == full || {
                    let (sec, _) = k.split_once('.').expect("qualified");
                    full.split_once('.')
                        .is_some_and(|(s, name)| s == sec && aliases.contains(&name))
                }
            })
            .map(|(k, _)| *k)
    };
    if key.contains('.') {
        return lookup(key);
    }
    if let Some(sec) = section {
        return lookup(&format!("{sec}.{key}"));
    }
    let mut hits = KEYS.iter().filter(|(k, aliases)| {
        k.split_once('.').is_some_and(|(_, name)| name == key) || aliases.contains(&key)
    });
    match (hits.next(), hits.next()) {
        (Some((k, _)), None) => Some(k),
        _ => None,
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        let mut section: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Parse { line: ln, message: "unterminated section header".into() })?
                    .trim();
                if !["task", "algorithm", "channel", "run"].contains(&name) {
                    return Err(Error::config(name, format!("unknown section on line {ln}")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: ln, message: format!("expected `key = value`, got `{line}`") })?;
            let key = key.trim();
            let value = value.trim().trim_matches('"');
            let full = canonical(key, section.as_deref())
                .ok_or_else(|| Error::config(key, format!("unknown key on line {ln}")))?;
            if raw.values.insert(full.to_string(), value.to_string()).is_some() {
                return Err(Error::config(full, format!("duplicate key on line {ln}")));
            }
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets or replaces one value; `key` may be qualified, an alias or a unique bare name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let full = canonical(key, None).ok_or_else(|| Error::config(key, "unknown key"))?;
        self.values.insert(full.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        canonical(key, None).and_then(|k| self.values.get(k)).map(String::as_str)
    }

    fn take<T: FromStr>(&self, key: &'static str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn take_opt<T: FromStr>(&self, key: &'static str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse().map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}"))))
            .transpose()
    }

    /// Fills defaults and validates.
    pub fn build(&self) -> Result<ExperimentConfig> {
        let variant: Variant = self.take("algorithm.variant", Variant::Sfwfl)?;
        let task = TaskSection {
            family: self.take("task.family", TaskFamily::Quadratic)?,
            d: self.take("task.d", 10)?,
            n_ues: self.take("task.n_ues", 100)?,
            samples_per_ue: self.take("task.samples_per_ue", 20)?,
            heterogeneity: self.take("task.heterogeneity", 0.5)?,
            conditioning: self.take("task.conditioning", 4.0)?,
            target_noise: self.take("task.target_noise", 0.0)?,
            regularization: self.take("task.regularization", 0.1)?,
        };
        let latency: Option<usize> = self.take_opt("algorithm.latency")?;
        let latency = match (variant, latency) {
            (Variant::ZeroWait, None) => {
                return Err(Error::config("algorithm.latency", "zero_wait requires the latency D"))
            }
            (Variant::ZeroWait | Variant::Aggressive, Some(0)) => {
                return Err(Error::config("algorithm.latency", format!("{variant} requires latency >= 1")))
            }
            (Variant::Aggressive, None) => 1,
            (_, l) => l.unwrap_or(0),
        };
        let algorithm = AlgorithmSection {
            variant,
            local_steps: self.take("algorithm.local_steps", 5)?,
            latency,
            theta: self.take("algorithm.theta", 0.15)?,
            rounds: self.take("algorithm.rounds", 1000)?,
            participants_per_round: self.take_opt("algorithm.participants_per_round")?,
        };
        let channel = ChannelSection {
            alpha: self.take("channel.alpha", 1.6)?,
            noise_scale: self.take("channel.noise_scale", 0.5)?,
            fading: self.take("channel.fading", FadingKind::Rayleigh)?,
            fading_variance: self.take("channel.fading_variance", 0.25)?,
        };
        let seed: u64 = self.take("run.seed", 1)?;
        let run = RunSection {
            trials: self.take("run.trials", 10)?,
            seed,
            task_seed: self.take("run.task_seed", seed)?,
            output: self.take_opt("run.output")?,
            record_every: self.take("run.record_every", 1)?,
            g_probes: self.take("run.g_probes", 200)?,
            l_probes: self.take("run.l_probes", 2000)?,
            probe_radius: self.take_opt("run.probe_radius")?,
        };
        let cfg = ExperimentConfig { task, algorithm, channel, run };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn require(ok: bool, key: &'static str, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, message))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.task;
        require(t.d >= 1, "task.d", "must be >= 1")?;
        require(t.n_ues >= 1, "task.n_ues", "must be >= 1")?;
        require(t.samples_per_ue >= 1, "task.samples_per_ue", "must be >= 1")?;
        require(
            t.family != TaskFamily::Quadratic || t.n_ues * t.samples_per_ue >= t.d,
            "task.samples_per_ue",
            "n_ues * samples_per_ue must be >= d",
        )?;
        require((0.0..=1.0).contains(&t.heterogeneity), "task.heterogeneity", "must lie in [0, 1]")?;
        require(t.conditioning >= 1.0 && t.conditioning.is_finite(), "task.conditioning", "must be finite and >= 1")?;
        require(t.target_noise >= 0.0 && t.target_noise.is_finite(), "task.target_noise", "must be finite and >= 0")?;
        require(t.regularization > 0.0 && t.regularization.is_finite(), "task.regularization", "must be finite and > 0")?;

        let a = &self.algorithm;
        require(a.local_steps >= 1, "algorithm.local_steps", "must be >= 1")?;
        require(a.rounds >= 1, "algorithm.rounds", "must be >= 1")?;
        require(a.theta > 0.0 && a.theta.is_finite(), "algorithm.theta", "theta must be finite and > 0")?;
        if a.variant == Variant::Server {
            let p = a
                .participants_per_round
                .ok_or_else(|| Error::config("algorithm.participants_per_round", "server requires participants_per_round"))?;
            require(
                (1..=t.n_ues).contains(&p),
                "algorithm.participants_per_round",
                format!("must lie in [1, {}]", t.n_ues),
            )?;
        }

        let c = &self.channel;
        require(
            c.alpha > 1.0 && c.alpha <= 2.0,
            "channel.alpha",
            format!("alpha = {} must lie in (1, 2]", c.alpha),
        )?;
        require(c.noise_scale >= 0.0 && c.noise_scale.is_finite(), "channel.noise_scale", "must be finite and >= 0")?;
        require(
            c.fading_variance >= 0.0 && c.fading_variance.is_finite(),
            "channel.fading_variance",
            "must be finite and >= 0",
        )?;

        let r = &self.run;
        require(r.trials >= 1, "run.trials", "must be >= 1")?;
        require(r.record_every >= 1, "run.record_every", "must be >= 1")?;
        if let Some(radius) = r.probe_radius {
            require(radius >= 0.0 && radius.is_finite(), "run.probe_radius", "must be finite and >= 0")?;
        }
        Ok(())
    }

    /// Number of computing rounds the configured variant executes.
    pub fn computing_rounds(&self) -> usize {
        match self.algorithm.variant {
            Variant::ZeroWait | Variant::Aggressive => self.algorithm.rounds * (1 + self.algorithm.latency),
            _ => self.algorithm.rounds,
        }
    }
}

/// Reads, defaults and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    RawConfig::load(path)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = RawConfig::parse("variant = sfwfl\n").unwrap().build().unwrap();
        assert_eq!(cfg.channel.alpha, 1.6);
        assert_eq!(cfg.task.n_ues, 100);
        assert_eq!(cfg.channel.fading, FadingKind::Rayleigh);
        assert_eq!(cfg.algorithm.variant, Variant::Sfwfl);
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn sections_dotted_keys_and_aliases() {
        let text = "# demo\n[task]\nd = 4\nN = 7\n[algorithm]\nvariant = zero_wait\nD = 2\nM = 3\nchannel.alpha = 1.3 # inline\n[run]\nseed = 9\n";
        let cfg = RawConfig::parse(text).unwrap().build().unwrap();
        assert_eq!(cfg.task.d, 4);
        assert_eq!(cfg.task.n_ues, 7);
        assert_eq!(cfg.algorithm.latency, 2);
        assert_eq!(cfg.algorithm.local_steps, 3);
        assert_eq!(cfg.channel.alpha, 1.3);
        assert_eq!(cfg.run.seed, 9);
        assert_eq!(cfg.run.task_seed, 9);
        assert_eq!(cfg.computing_rounds(), 3000);
    }

    fn err_key(text: &str) -> String {
        match RawConfig::parse(text).and_then(|r| r.build()) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn validation_names_the_key() {
        assert_eq!(err_key("channel.alpha = 0.9"), "channel.alpha");
        let msg = RawConfig::parse("channel.alpha = 0.9").unwrap().build().unwrap_err().to_string();
        assert!(msg.contains("(1, 2]"), "{msg}");
        assert_eq!(err_key("variant = zero_wait"), "algorithm.latency");
        assert_eq!(err_key("variant = server"), "algorithm.participants_per_round");
        assert_eq!(err_key("variant = server\nparticipants_per_round = 101"), "algorithm.participants_per_round");
        assert_eq!(err_key("theta = 0"), "algorithm.theta");
        assert_eq!(err_key("bogus = 1"), "bogus");
        assert_eq!(err_key("[task]\nalpha = 1.5"), "alpha");
        assert_eq!(err_key("theta = 0.1\ntheta = 0.2"), "algorithm.theta");
        assert_eq!(err_key("task.d = ten"), "task.d");
        assert_eq!(err_key("[nope]"), "nope");
    }

    #[test]
    fn aggressive_defaults_to_unit_latency() {
        let cfg = RawConfig::parse("variant = aggressive").unwrap().build().unwrap();
        assert_eq!(cfg.algorithm.latency, 1);
        assert!(RawConfig::parse("variant = aggressive\narrival_latency = 0").unwrap().build().is_err());
    }

    #[test]
    fn overrides_use_the_same_resolution() {
        let mut raw = RawConfig::parse("").unwrap();
        raw.set("channel.alpha", "2.0").unwrap();
        raw.set("K", "30").unwrap();
        assert!(raw.set("zzz", "1").is_err());
        let cfg = raw.build().unwrap();
        assert_eq!(cfg.channel.alpha, 2.0);
        assert_eq!(cfg.algorithm.rounds, 30);
        assert_eq!(raw.get("rounds"), Some("30"));
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(RawConfig::parse("[task"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(RawConfig::parse("\njust words"), Err(Error::Parse { line: 2, .. })));
    }
}
