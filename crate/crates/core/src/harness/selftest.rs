//! Quick property battery run by `sfwfl selftest`.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::algorithms::{run_plain_sgd, run_server_baseline, run_sfwfl, LearningSchedule, TrialStreams};
use crate::alpha_geometry::lemma1_gap;
use crate::channel::ChannelConfig;
use crate::error::Result;
use crate::rng::{seeded, SeedBundle};
use crate::stable_noise::{estimate_tail_index, sample_stable, StableNoiseParams, DEFAULT_HILL_FRACTION};
use crate::tasks::{generate_quadratic, QuadraticSpec};
use crate::vector::ModelVector;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// The measured quantity the check thresholds.
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// `check,passed,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,passed,value\n");
        for c in &self.checks {
            let _ = writeln!(out, "{},{},{}", c.name, c.passed, c.value);
        }
        out
    }
}

fn lemma1_battery(seed: u64) -> Check {
    let mut rng = seeded(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..20_000 {
        let d = rng.random_range(1..=16);
        let alpha = rng.random_range(1.0..=2.0);
        let w: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0).collect();
        worst = worst.min(lemma1_gap(&w, &v, alpha).unwrap_or(f64::NEG_INFINITY));
    }
    Check {
        name: "lemma1_gap",
        passed: worst >= -1e-9,
        value: worst,
        detail: format!("smallest gap over 20000 triples: {worst:e}"),
    }
}

fn gaussian_variance(seed: u64) -> Check {
    let p = StableNoiseParams::new(2.0, 1.0).expect("valid");
    let mut rng = seeded(seed);
    let n = 200_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x = sample_stable(&p, &mut rng);
        s += x;
        s2 += x * x;
    }
    let mean = s / n as f64;
    let var = s2 / n as f64 - mean * mean;
    Check {
        name: "alpha2_variance",
        passed: (var / 2.0 - 1.0).abs() < 0.02,
        value: var,
        detail: format!("sample variance {var} (expected 2)"),
    }
}

fn hill_recovery(seed: u64) -> Check {
    let p = StableNoiseParams::new(1.5, 1.0).expect("valid");
    let mut rng = seeded(seed);
    let x: Vec<f64> = (0..1_000_000).map(|_| sample_stable(&p, &mut rng)).collect();
    let est = estimate_tail_index(&x, DEFAULT_HILL_FRACTION).unwrap_or(f64::NAN);
    Check {
        name: "hill_alpha_1_5",
        passed: (est - 1.5).abs() <= 0.1,
        value: est,
        detail: format!("Hill estimate {est} (expected 1.5)"),
    }
}

fn noiseless_reduction(seed: u64) -> Result<Check> {
    let task = generate_quadratic(&QuadraticSpec::new(5, 1, 10, 0.0, 3.0), &mut seeded(seed))?;
    let sched = LearningSchedule::new(0.3, 1, 1000, 0)?;
    let w0 = ModelVector::zeros(5);
    let bundle = SeedBundle::new(seed, 0);
    let a = run_sfwfl(&task, &sched, &ChannelConfig::ideal(), &w0, &mut TrialStreams::new(&bundle, 1))?;
    let b = run_plain_sgd(&task, &sched, &w0, &mut bundle.sampling(1)[0])?;
    let worst = a
        .records
        .iter()
        .zip(&b.records)
        .flat_map(|(x, y)| x.w_mean.iter().zip(y.w_mean.iter()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    Ok(Check {
        name: "noiseless_reduction",
        passed: worst <= 1e-12,
        value: worst,
        detail: format!("max coordinate gap to plain SGD over 1000 rounds: {worst:e}"),
    })
}

fn server_parity(seed: u64) -> Result<Check> {
    let task = generate_quadratic(&QuadraticSpec::new(5, 6, 10, 0.6, 3.0), &mut seeded(seed))?;
    let sched = LearningSchedule::new(0.2, 3, 300, 0)?;
    let w0 = ModelVector::zeros(5);
    let bundle = SeedBundle::new(seed, 0);
    let a = run_sfwfl(&task, &sched, &ChannelConfig::ideal(), &w0, &mut TrialStreams::new(&bundle, 6))?;
    let b = run_server_baseline(&task, &sched, 6, &w0, &mut TrialStreams::new(&bundle, 6))?;
    let same = a.records == b.records;
    Ok(Check {
        name: "full_participation_parity",
        passed: same,
        value: if same { 0.0 } else { 1.0 },
        detail: "noiseless SFWFL vs full-participation server trajectories".into(),
    })
}

/// Runs the battery with fixed seeds.
pub fn run_selftest() -> Result<SelftestReport> {
    Ok(SelftestReport {
        checks: vec![
            lemma1_battery(101),
            gaussian_variance(102),
            hill_recovery(103),
            noiseless_reduction(104)?,
            server_parity(105)?,
        ],
    })
}
