use rayon::prelude::*;

use super::config::{EeAggregation, ExperimentConfig, Scheme, SweepSpec, SweepVar, GAMMA_GRID};
use crate::admm::{self, AdmmConfig};
use crate::baselines::{self, BruteForceOptions, Scenario};
use crate::channel::sample_channel;
use crate::error::Result;
use crate::metrics::Evaluation;
use crate::quantization::QuantizationBounds;
use crate::random::{derive_seed, rng_from_seed, SimRng};

/// Seed of trial `index`. Every scheme in the trial shares it.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, index)
}

/// One scheme on one channel draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub rate: f64,
    pub power: f64,
    pub ee: f64,
    pub se: f64,
    pub mse_db: f64,
    pub bits: f64,
    /// γ actually used by the ADMM scheme.
    pub gamma: Option<f64>,
}

impl TrialOutcome {
    fn new(eval: &Evaluation, bits: f64, gamma: Option<f64>) -> Self {
        Self {
            rate: eval.rate,
            power: eval.power,
            ee: eval.ee,
            se: eval.se,
            mse_db: eval.mse_db,
            bits,
            gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: u64,
    pub seed: u64,
    /// In the order of `ExperimentConfig::schemes`.
    pub outcomes: Vec<(Scheme, TrialOutcome)>,
}

impl TrialRecord {
    pub fn get(&self, scheme: Scheme) -> Option<&TrialOutcome> {
        self.outcomes.iter().find(|(s, _)| *s == scheme).map(|(_, o)| o)
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Self { mean, se: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            mean,
            se: (var / n).sqrt(),
        }
    }

    /// `mean(num) / mean(den)` with a first-order standard error.
    pub fn of_ratio(num: &[f64], den: &[f64]) -> Self {
        let a = Self::of(num);
        let b = Self::of(den);
        let mean = a.mean / b.mean;
        let n = num.len() as f64;
        if num.len() < 2 {
            return Self { mean, se: 0.0 };
        }
        let cov = num
            .iter()
            .zip(den)
            .map(|(x, y)| (x - a.mean) * (y - b.mean))
            .sum::<f64>()
            / (n - 1.0);
        let (va, vb) = ((a.se * a.se) * n, (b.se * b.se) * n);
        let var = (va - 2.0 * mean * cov + mean * mean * vb) / (b.mean * b.mean * n);
        Self {
            mean,
            se: var.max(0.0).sqrt(),
        }
    }
}

/// Aggregate of one scheme over all trials at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub sweep_var: Option<SweepVar>,
    pub sweep_value: Option<f64>,
    pub trials: usize,
    pub rate: Stat,
    pub power: Stat,
    pub ee: Stat,
    pub se: Stat,
    pub mse_db: Stat,
    pub bits: Stat,
}

fn with_bounds_covering(cfg: &AdmmConfig, b: u32) -> AdmmConfig {
    let bounds = QuantizationBounds {
        b_min: cfg.bounds.b_min.min(b),
        b_max: cfg.bounds.b_max.max(b),
    };
    AdmmConfig { bounds, ..*cfg }
}

fn run_admm(scn: &Scenario<'_>, cfg: &ExperimentConfig, init: &SimRng) -> Result<TrialOutcome> {
    let base = cfg.admm_config();
    let gammas: Vec<f64> = if cfg.gamma_search {
        GAMMA_GRID.to_vec()
    } else {
        vec![cfg.gamma]
    };
    let mut best: Option<TrialOutcome> = None;
    for gamma in gammas {
        let acfg = AdmmConfig { gamma, ..base };
        let out = admm::run(scn.w_opt(), cfg.l_r, &acfg, &cfg.pm, &mut init.clone())?;
        let eval = scn.evaluate_hybrid(&out.combiner)?;
        let o = TrialOutcome::new(&eval, out.combiner.bits.mean(), Some(gamma));
        if best.is_none_or(|b| o.ee > b.ee) {
            best = Some(o);
        }
    }
    Ok(best.expect("γ list is never empty"))
}

fn run_scheme(scheme: Scheme, scn: &Scenario<'_>, cfg: &ExperimentConfig, init: &SimRng) -> Result<TrialOutcome> {
    let base = cfg.admm_config();
    match scheme {
        Scheme::Admm => run_admm(scn, cfg, init),
        Scheme::Hybrid1 | Scheme::Hybrid8 => {
            let b = if scheme == Scheme::Hybrid1 { 1 } else { 8 };
            let acfg = with_bounds_covering(&base, b);
            let r = baselines::fixed_bit_hybrid(scn, b, cfg.l_r, &acfg, &mut init.clone())?;
            Ok(TrialOutcome::new(&r.eval, r.mean_bits(), None))
        }
        Scheme::Digital => {
            let r = baselines::full_digital_baseline(scn)?;
            Ok(TrialOutcome::new(&r.eval, r.mean_bits(), None))
        }
        Scheme::Bf => {
            let acfg = AdmmConfig {
                n_max: cfg.bf_inner_n_max,
                ..base
            };
            let opts = BruteForceOptions {
                budget: cfg.bf_budget,
                ..BruteForceOptions::default()
            };
            let r = baselines::brute_force(scn, cfg.l_r, &acfg, &opts, init)?;
            Ok(TrialOutcome::new(&r.eval, r.mean_bits(), None))
        }
    }
}

/// Runs every enabled scheme on trial `index`. The channel and the ADMM
/// starting point depend only on the master seed and `index`.
pub fn run_trial(cfg: &ExperimentConfig, index: u64) -> Result<TrialRecord> {
    let seed = trial_seed(cfg.seed, index);
    let channel = sample_channel(&cfg.channel_params(), &mut rng_from_seed(derive_seed(seed, 0)))?;
    let scn = Scenario::new(&channel, cfg.n_s, cfg.sigma_n2(), cfg.pm)?;
    let init = rng_from_seed(derive_seed(seed, 1));
    let outcomes = cfg
        .schemes
        .iter()
        .map(|&s| Ok((s, run_scheme(s, &scn, cfg, &init)?)))
        .collect::<Result<_>>()?;
    Ok(TrialRecord { index, seed, outcomes })
}

/// Every trial of `cfg`, in trial order.
pub fn run_trial_records(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Per-scheme statistics over trial records.
pub fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Vec<SummaryRow> {
    cfg.schemes
        .iter()
        .map(|&scheme| {
            let outs: Vec<&TrialOutcome> = records.iter().filter_map(|r| r.get(scheme)).collect();
            let col = |f: fn(&TrialOutcome) -> f64| -> Vec<f64> { outs.iter().map(|o| f(o)).collect() };
            let (rate, power) = (col(|o| o.rate), col(|o| o.power));
            let ee = match cfg.ee_agg {
                EeAggregation::RatioMean => Stat::of(&col(|o| o.ee)),
                EeAggregation::MeanRatio => Stat::of_ratio(&rate, &power),
            };
            SummaryRow {
                scheme,
                sweep_var: None,
                sweep_value: None,
                trials: outs.len(),
                rate: Stat::of(&rate),
                power: Stat::of(&power),
                ee,
                se: Stat::of(&col(|o| o.se)),
                mse_db: Stat::of(&col(|o| o.mse_db)),
                bits: Stat::of(&col(|o| o.bits)),
            }
        })
        .collect()
}

/// Monte-Carlo run of `cfg`: one row per scheme.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    let records = run_trial_records(cfg)?;
    Ok(summarize(cfg, &records))
}

/// One [`run_trials`] per sweep value, rows grouped by value in the given
/// order. Every point is validated before any trial runs.
pub fn sweep(base: &ExperimentConfig, spec: &SweepSpec) -> Result<Vec<SummaryRow>> {
    spec.validate()?;
    let cfgs: Vec<ExperimentConfig> = spec.values.iter().map(|&v| spec.apply(base, v)).collect();
    for c in &cfgs {
        c.validate()?;
    }
    let mut rows = Vec::new();
    for (c, &v) in cfgs.iter().zip(&spec.values) {
        for mut row in run_trials(c)? {
            row.sweep_var = Some(spec.variable);
            row.sweep_value = Some(v);
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n_tx: 8,
            n_rx: 6,
            l_r: 2,
            n_s: 2,
            n_max: 8,
            trials: 3,
            seed: 11,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn stat_mean_and_se() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stat::of(&[7.0]).se, 0.0);
        let r = Stat::of_ratio(&[2.0, 4.0], &[1.0, 2.0]);
        assert!((r.mean - 2.0).abs() < 1e-15);
        assert!(r.se.abs() < 1e-12, "perfectly proportional samples have no spread");
    }

    #[test]
    fn repeat_runs_agree() {
        let cfg = ExperimentConfig { trials: 1, ..small() };
        assert_eq!(run_trials(&cfg).unwrap(), run_trials(&cfg).unwrap());
    }

    #[test]
    fn trial_seeds_differ_and_repeat() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|t| trial_seed(5, t)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(trial_seed(5, 3), trial_seed(5, 3));
        let cfg = ExperimentConfig {
            schemes: vec![Scheme::Digital],
            ..small()
        };
        let a = run_trial(&cfg, 0).unwrap();
        let b = run_trial(&cfg, 1).unwrap();
        assert_ne!(
            a.get(Scheme::Digital).unwrap().rate,
            b.get(Scheme::Digital).unwrap().rate
        );
        assert_eq!(a, run_trial(&cfg, 0).unwrap());
    }

    #[test]
    fn schemes_are_gated() {
        // A brute force over these bounds would blow the budget, so only a run
        // that skips it can succeed.
        let cfg = ExperimentConfig {
            schemes: vec![Scheme::Admm],
            bf_budget: 0,
            ..small()
        };
        let rows = run_trials(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].scheme, Scheme::Admm);
        let with_bf = ExperimentConfig {
            schemes: vec![Scheme::Admm, Scheme::Bf],
            ..cfg
        };
        assert!(matches!(run_trials(&with_bf), Err(Error::Config(_))));
    }

    #[test]
    fn per_trial_ee_is_rate_over_power() {
        let records = run_trial_records(&ExperimentConfig {
            schemes: Scheme::ALL[..4].to_vec(),
            ..small()
        })
        .unwrap();
        for r in &records {
            for (_, o) in &r.outcomes {
                assert!((o.ee - o.rate / o.power).abs() <= 1e-12 * o.ee.abs());
            }
        }
    }

    #[test]
    fn ee_aggregation_modes() {
        let cfg = ExperimentConfig {
            schemes: vec![Scheme::Admm],
            ..small()
        };
        let recs = run_trial_records(&cfg).unwrap();
        let rm = summarize(&cfg, &recs)[0].ee.mean;
        let mr = summarize(
            &ExperimentConfig {
                ee_agg: EeAggregation::MeanRatio,
                ..cfg.clone()
            },
            &recs,
        )[0]
        .ee
        .mean;
        let ees: Vec<f64> = recs.iter().map(|r| r.get(Scheme::Admm).unwrap().ee).collect();
        let rates: f64 = recs.iter().map(|r| r.get(Scheme::Admm).unwrap().rate).sum();
        let powers: f64 = recs.iter().map(|r| r.get(Scheme::Admm).unwrap().power).sum();
        assert!((rm - ees.iter().sum::<f64>() / 3.0).abs() < 1e-12);
        assert!((mr - rates / powers).abs() < 1e-12);
    }

    #[test]
    fn gamma_search_picks_best_ee_from_grid() {
        let cfg = ExperimentConfig {
            schemes: vec![Scheme::Admm],
            gamma_search: true,
            trials: 1,
            ..small()
        };
        let rec = run_trial(&cfg, 0).unwrap();
        let chosen = rec.get(Scheme::Admm).unwrap();
        assert!(GAMMA_GRID.contains(&chosen.gamma.unwrap()));
        for g in GAMMA_GRID {
            let fixed = run_trial(
                &ExperimentConfig {
                    gamma: g,
                    gamma_search: false,
                    ..cfg.clone()
                },
                0,
            )
            .unwrap();
            assert!(fixed.get(Scheme::Admm).unwrap().ee <= chosen.ee);
        }
    }

    #[test]
    fn sweep_rows_follow_values() {
        let spec = SweepSpec::new(SweepVar::SnrDb, vec![0.0, 10.0, 20.0]).unwrap();
        let cfg = ExperimentConfig {
            schemes: vec![Scheme::Digital, Scheme::Hybrid1],
            trials: 2,
            ..small()
        };
        let rows = sweep(&cfg, &spec).unwrap();
        assert_eq!(rows.len(), 6);
        let order: Vec<(f64, Scheme)> = rows.iter().map(|r| (r.sweep_value.unwrap(), r.scheme)).collect();
        assert_eq!(order[0], (0.0, Scheme::Digital));
        assert_eq!(order[1], (0.0, Scheme::Hybrid1));
        assert_eq!(order[5], (20.0, Scheme::Hybrid1));
        assert!(rows[0].rate.mean < rows[4].rate.mean);
    }

    #[test]
    fn sweep_rejects_bad_point_before_running() {
        let spec = SweepSpec::new(SweepVar::NRx, vec![8.0, 1.0]).unwrap();
        assert!(matches!(sweep(&small(), &spec), Err(Error::Config(_))));
    }
}
