//! Monte Carlo sweeps comparing the closed-form classification with what the
//! numerical pipeline observes on Gaussian samples.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mle::{classify_empirical, EmpiricalVerdict, MleOptions};
use crate::rep::{RepInput, RepTuple};
use crate::scalar::{Field, FieldKind};
use crate::seeding;
use crate::stability::{certify_instability, verify_one_ps, QuiverKind, StabilityLevel};
use crate::thresholds::{classify, MleBehavior, Model};

pub const REPORT_FORMAT: &str = "qmle-sweep/1";
/// Agreement rate that operationalizes "almost surely".
pub const DEFAULT_AGREEMENT: f64 = 0.99;
/// Mismatch rate tolerated before a sweep fails, `1 − DEFAULT_AGREEMENT`.
pub const DEFAULT_ALARM_RATE: f64 = 0.01;
pub const DKH_TRIALS: usize = 100;

/// Inclusive range; `min > max` is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: u64,
    pub max: u64,
}

impl IntRange {
    pub fn new(min: u64, max: u64) -> Self {
        Self { min, max }
    }

    pub fn upto(max: u64) -> Self {
        Self { min: 1, max }
    }

    pub fn values(&self) -> impl Iterator<Item = u64> {
        self.min..=self.max
    }
}

/// Optional overrides of [`MleOptions`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_stat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_unique: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_starts: Option<usize>,
}

impl Tolerances {
    pub fn apply(&self, mut opts: MleOptions) -> MleOptions {
        if let Some(v) = self.tol {
            opts.tol = v;
        }
        if let Some(v) = self.tau_stat {
            opts.tau_stat = v;
        }
        if let Some(v) = self.tau_unique {
            opts.tau_unique = v;
        }
        if let Some(v) = self.max_iter {
            opts.max_iter = v;
        }
        if let Some(v) = self.n_starts {
            opts.n_starts = v;
        }
        opts
    }
}

fn default_alarm_rate() -> f64 {
    DEFAULT_ALARM_RATE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: Model,
    pub p: IntRange,
    pub q: IntRange,
    pub m: IntRange,
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    pub field: FieldKind,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Mismatch rate above which the sweep counts as failed.
    #[serde(default = "default_alarm_rate")]
    pub alarm_rate: f64,
    /// Also build and check a one-parameter subgroup for unstable samples.
    #[serde(default)]
    pub certify: bool,
    /// Record wall-clock time per cell (makes reports non-reproducible).
    #[serde(default)]
    pub timing: bool,
}

fn default_seed() -> u64 {
    seeding::DEFAULT_SEED
}

impl SweepConfig {
    pub fn new(model: Model, p: IntRange, q: IntRange, m: IntRange, trials: usize, field: FieldKind) -> Self {
        Self {
            model,
            p,
            q,
            m,
            trials,
            master_seed: seeding::DEFAULT_SEED,
            field,
            tolerances: Tolerances::default(),
            alarm_rate: default_alarm_rate(),
            certify: false,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        for (name, r) in [("p", self.p), ("q", self.q), ("m", self.m)] {
            if r.min == 0 {
                return Err(Error::Config(format!("{name} range must start at 1 or later")));
            }
        }
        if !(0.0..=1.0).contains(&self.alarm_rate) {
            return Err(Error::Config(format!("alarm rate {} is not in [0, 1]", self.alarm_rate)));
        }
        if self.tolerances.n_starts.is_some_and(|n| n < 2) {
            return Err(Error::Config("n_starts must be at least 2".into()));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(u64, u64, u64)> {
        let mut cells = Vec::new();
        for p in self.p.values() {
            for q in self.q.values() {
                for m in self.m.values() {
                    cells.push((p, q, m));
                }
            }
        }
        cells
    }
}

/// Empirical outcome labels counted per cell.
pub const OUTCOMES: [&str; 4] = ["unbounded", "exists-not-unique", "exists-unique", "inconclusive"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub p: u64,
    pub q: u64,
    pub m: u64,
    pub theory: MleBehavior,
    /// Cells without an almost-sure prediction; excluded from the alarm.
    pub informational: bool,
    pub counts: BTreeMap<String, usize>,
    pub matches: usize,
    pub match_rate: f64,
    /// Trials whose sub-checks contradicted each other.
    pub inconsistent: usize,
    pub mean_iterations: f64,
    /// Unstable trials with a verified one-parameter subgroup, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format: String,
    pub model: Model,
    pub field: FieldKind,
    pub master_seed: u64,
    pub trials: usize,
    pub cells: Vec<CellRecord>,
    pub scored_trials: usize,
    pub mismatches: usize,
    pub mismatch_rate: f64,
    pub alarm_rate: f64,
    /// Samples that disagreed with theory; written to a separate file.
    #[serde(skip)]
    pub diagnostics: Vec<TrialDiagnostic>,
}

impl SweepReport {
    pub fn alarm(&self) -> bool {
        self.mismatch_rate > self.alarm_rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDiagnostic {
    pub p: u64,
    pub q: u64,
    pub m: u64,
    pub trial: usize,
    pub seed: u64,
    pub theory: MleBehavior,
    pub observed: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub sample: RepInput,
}

struct TrialResult {
    outcome: std::result::Result<EmpiricalVerdict, String>,
    certified: Option<bool>,
    sample: RepInput,
    seed: u64,
}

fn trial_seed(master: u64, p: u64, q: u64, m: u64, trial: usize) -> u64 {
    seeding::derive_seed(master, &[p, q, m, trial as u64])
}

/// The sample drawn for one trial of a sweep.
pub fn trial_sample<T: Field>(master: u64, p: u64, q: u64, m: u64, trial: usize) -> RepTuple<T> {
    let mut rng = seeding::rng_for(trial_seed(master, p, q, m, trial), &[]);
    RepTuple::gaussian(p as usize, q as usize, m as usize, &mut rng)
}

fn run_trial<T: Field>(cfg: &SweepConfig, opts: &MleOptions, p: u64, q: u64, m: u64, trial: usize) -> TrialResult {
    let seed = trial_seed(cfg.master_seed, p, q, m, trial);
    let y: RepTuple<T> = trial_sample(cfg.master_seed, p, q, m, trial);
    let outcome = classify_empirical(&y, cfg.model, seeding::derive_seed(seed, &[1]), opts).map_err(|e| e.to_string());
    let certified = match &outcome {
        Ok(v) if cfg.certify && v.semistability == StabilityLevel::Unstable => {
            let mut rng = seeding::rng_for(seed, &[2]);
            Some(
                certify_instability(&y, QuiverKind::from(cfg.model), &mut rng)
                    .map(|c| verify_one_ps(&y, &c))
                    .unwrap_or(false),
            )
        }
        _ => None,
    };
    TrialResult {
        outcome,
        certified,
        sample: y.to_json_input(),
        seed,
    }
}

/// Runs every `(cell, trial)` in parallel; the report does not depend on
/// scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    run_cells(cfg, &cfg.cells())
}

pub fn run_cells(cfg: &SweepConfig, cells: &[(u64, u64, u64)]) -> Result<SweepReport> {
    cfg.validate()?;
    let opts = cfg.tolerances.apply(MleOptions::default());
    let mut records = Vec::with_capacity(cells.len());
    let mut diagnostics = Vec::new();
    let (mut scored, mut mismatches) = (0usize, 0usize);

    for &(p, q, m) in cells {
        let start = Instant::now();
        let results: Vec<TrialResult> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| match cfg.field {
                FieldKind::Real => run_trial::<f64>(cfg, &opts, p, q, m, t),
                FieldKind::Complex => run_trial::<Complex64>(cfg, &opts, p, q, m, t),
            })
            .collect();
        let elapsed = start.elapsed().as_secs_f64() * 1e3;

        let verdict = classify(cfg.model, p, q, m);
        let informational = verdict.indeterminate_real_case && cfg.field == FieldKind::Real;
        let mut counts: BTreeMap<String, usize> = OUTCOMES.iter().map(|k| (k.to_string(), 0)).collect();
        let (mut matches, mut inconsistent, mut iters) = (0, 0, 0usize);
        let mut certified = cfg.certify.then_some(0);
        for (trial, r) in results.into_iter().enumerate() {
            let (label, matched, detail) = match &r.outcome {
                Ok(v) => {
                    iters += v.iterations;
                    if !v.consistent {
                        inconsistent += 1;
                    }
                    let detail = (!v.consistent).then(|| format!("{v:?}"));
                    (v.behavior.to_string(), v.behavior == verdict.behavior, detail)
                }
                Err(e) => ("inconclusive".to_string(), false, Some(e.clone())),
            };
            *counts.entry(label.clone()).or_default() += 1;
            if let (Some(c), Some(true)) = (certified.as_mut(), r.certified) {
                *c += 1;
            }
            if matched {
                matches += 1;
            } else if !informational {
                diagnostics.push(TrialDiagnostic {
                    p,
                    q,
                    m,
                    trial,
                    seed: r.seed,
                    theory: verdict.behavior,
                    observed: label,
                    detail,
                    sample: r.sample,
                });
            }
        }
        if !informational {
            scored += cfg.trials;
            mismatches += cfg.trials - matches;
        }
        records.push(CellRecord {
            p,
            q,
            m,
            theory: verdict.behavior,
            informational,
            counts,
            matches,
            match_rate: matches as f64 / cfg.trials as f64,
            inconsistent,
            mean_iterations: iters as f64 / cfg.trials as f64,
            certified,
            runtime_ms: cfg.timing.then_some(elapsed),
        });
    }

    Ok(SweepReport {
        format: REPORT_FORMAT.to_string(),
        model: cfg.model,
        field: cfg.field,
        master_seed: cfg.master_seed,
        trials: cfg.trials,
        cells: records,
        scored_trials: scored,
        mismatches,
        mismatch_rate: if scored == 0 { 0.0 } else { mismatches as f64 / scored as f64 },
        alarm_rate: cfg.alarm_rate,
        diagnostics,
    })
}

/// The four cells `(5,4), (6,4), (7,4), (8,4)` at `m = 2`, over ℝ.
pub const DKH_CELLS: [(u64, u64, u64); 4] = [(5, 4, 2), (6, 4, 2), (7, 4, 2), (8, 4, 2)];

pub fn dkh_config(trials: usize, master_seed: u64) -> SweepConfig {
    let mut cfg = SweepConfig::new(
        Model::MatrixNormal,
        IntRange::new(5, 8),
        IntRange::new(4, 4),
        IntRange::new(2, 2),
        trials,
        FieldKind::Real,
    );
    cfg.master_seed = master_seed;
    cfg.certify = true;
    cfg
}

pub fn dkh_table(trials: usize, master_seed: u64) -> Result<SweepReport> {
    let cfg = dkh_config(trials, master_seed);
    run_cells(&cfg, &DKH_CELLS)
}
