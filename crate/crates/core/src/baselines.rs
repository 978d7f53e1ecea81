//! Benchmark receivers and the shared evaluation of a hybrid design on a
//! channel draw.

use rand::Rng;
use rayon::prelude::*;

use crate::admm::{self, AdmmConfig, HybridCombiner};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::metrics::{self, mse_db_of, CombinerView, Evaluation, PowerModel, MSE_FLOOR_DB};
use crate::numerics::CMatrix;
use crate::quantization::{quant_noise_cov, BitVector, QuantizationBounds};

/// Resolution of the fully digital receiver's ADCs.
pub const FULL_RESOLUTION_BITS: u32 = 8;

/// Default cap on the number of brute-force candidates.
pub const DEFAULT_BF_BUDGET: usize = 100_000;

/// Inner iteration count for each brute-force candidate.
pub const DEFAULT_BF_INNER_N_MAX: usize = 20;

/// One channel draw together with everything needed to score a receiver.
#[derive(Debug, Clone)]
pub struct Scenario<'a> {
    pub channel: &'a ChannelRealization,
    pub n_s: usize,
    pub sigma_n2: f64,
    pub pm: PowerModel,
    w_opt: CMatrix,
    f: CMatrix,
}

impl<'a> Scenario<'a> {
    pub fn new(channel: &'a ChannelRealization, n_s: usize, sigma_n2: f64, pm: PowerModel) -> Result<Self> {
        if !(sigma_n2 > 0.0) {
            return Err(Error::invalid("noise variance must be positive"));
        }
        pm.validate()?;
        Ok(Self {
            channel,
            n_s,
            sigma_n2,
            pm,
            w_opt: channel.optimal_combiner(n_s)?,
            f: channel.optimal_precoder(n_s)?,
        })
    }

    pub fn n_r(&self) -> usize {
        self.channel.n_rx()
    }

    pub fn w_opt(&self) -> &CMatrix {
        &self.w_opt
    }

    pub fn precoder(&self) -> &CMatrix {
        &self.f
    }

    /// Scores a hybrid design at its integer resolutions: `Δ` and `C_ε` are
    /// rebuilt from the rounded bits, as the hardware would run.
    pub fn evaluate_hybrid(&self, combiner: &HybridCombiner) -> Result<Evaluation> {
        let delta = combiner.quantized_delta().to_matrix();
        let view = CombinerView {
            w_rf: &combiner.w_rf,
            delta: &delta,
            w_bb: &combiner.w_bb,
        };
        let c_eps = quant_noise_cov(&combiner.bits);
        let rate = metrics::rate(&self.channel.h, &self.f, &view, &c_eps, self.sigma_n2, self.n_s)?;
        let power = metrics::power(&combiner.bits, self.n_r(), combiner.l_r(), &self.pm, true);
        Evaluation::new(rate, power, metrics::combiner_mse(&self.w_opt, &view))
    }

    /// `10 log10 ‖W_opt − W_RF Δ W_BB‖²` with the continuous `Δ`.
    pub fn continuous_mse_db(&self, combiner: &HybridCombiner) -> f64 {
        let delta = combiner.delta.to_matrix();
        mse_db_of(&self.w_opt, &(&combiner.w_rf * delta * &combiner.w_bb))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Combiner {
    Hybrid(HybridCombiner),
    /// Fully digital: one RF chain per antenna at full resolution.
    Digital {
        w: CMatrix,
        stream_powers: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub label: String,
    pub combiner: Combiner,
    pub eval: Evaluation,
}

impl BaselineResult {
    pub fn mean_bits(&self) -> f64 {
        match &self.combiner {
            Combiner::Hybrid(h) => h.bits.mean(),
            Combiner::Digital { .. } => FULL_RESOLUTION_BITS as f64,
        }
    }
}

/// Waterfilling over channels with noise-to-gain ratios `inv_gains`
/// (`σ²/λ_k²`, `+∞` for a dead mode) and total power `budget`.
pub fn waterfill(inv_gains: &[f64], budget: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..inv_gains.len()).collect();
    order.sort_by(|&a, &b| inv_gains[a].total_cmp(&inv_gains[b]));
    let finite = order.iter().take_while(|&&k| inv_gains[k].is_finite()).count();
    let mut powers = vec![0.0; inv_gains.len()];
    if finite == 0 || !(budget > 0.0) {
        return powers;
    }
    let mut active = finite;
    let mut level = 0.0;
    while active > 0 {
        let sum: f64 = order[..active].iter().map(|&k| inv_gains[k]).sum();
        level = (budget + sum) / active as f64;
        if level > inv_gains[order[active - 1]] {
            break;
        }
        active -= 1;
    }
    for &k in &order[..active] {
        powers[k] = level - inv_gains[k];
    }
    powers
}

/// Fully digital SVD receiver with waterfilling over the top `n_s` modes.
/// Every antenna has its own 8-bit ADC pair and there is no analog network.
pub fn full_digital_baseline(scn: &Scenario<'_>) -> Result<BaselineResult> {
    let s = scn.channel.singular_values();
    let inv_gains: Vec<f64> = s[..scn.n_s]
        .iter()
        .map(|&l| if l > 0.0 { scn.sigma_n2 / (l * l) } else { f64::INFINITY })
        .collect();
    let p = waterfill(&inv_gains, 1.0);
    let rate: f64 = p
        .iter()
        .zip(&inv_gains)
        .filter(|(&pk, _)| pk > 0.0)
        .map(|(pk, ng)| (1.0 + pk / ng).log2())
        .sum();
    let n_r = scn.n_r();
    let bits = BitVector::uniform(
        FULL_RESOLUTION_BITS,
        n_r,
        &QuantizationBounds::new(1, FULL_RESOLUTION_BITS)?,
    )?;
    let power = metrics::power(&bits, n_r, n_r, &scn.pm, false);
    Ok(BaselineResult {
        label: "digital".into(),
        combiner: Combiner::Digital {
            w: scn.w_opt().clone(),
            stream_powers: p,
        },
        eval: Evaluation::new(rate, power, MSE_FLOOR_DB)?,
    })
}

/// Hybrid receiver with every ADC at `b_fixed` bits; the analog and digital
/// combiners come from the frozen-Δ ADMM.
pub fn fixed_bit_hybrid<R: Rng + ?Sized>(
    scn: &Scenario<'_>,
    b_fixed: u32,
    l_r: usize,
    cfg: &AdmmConfig,
    rng: &mut R,
) -> Result<BaselineResult> {
    let bits = BitVector::uniform(b_fixed, l_r, &cfg.bounds)?;
    let out = admm::run_frozen(scn.w_opt(), &bits, cfg, rng)?;
    Ok(BaselineResult {
        label: format!("hybrid{b_fixed}"),
        eval: scn.evaluate_hybrid(&out.combiner)?,
        combiner: Combiner::Hybrid(out.combiner),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceOptions {
    /// Smallest RF-chain count searched; `None` searches only `l_r_max`.
    pub l_r_min: Option<usize>,
    /// Only bit vectors with all entries equal.
    pub uniform_only: bool,
    pub budget: usize,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self {
            l_r_min: None,
            uniform_only: false,
            budget: DEFAULT_BF_BUDGET,
        }
    }
}

/// Every candidate bit vector, in lexicographic order per RF-chain count.
pub fn enumerate_candidates(
    l_r_range: std::ops::RangeInclusive<usize>,
    bounds: &QuantizationBounds,
    uniform_only: bool,
) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for l_r in l_r_range {
        if uniform_only {
            out.extend((bounds.b_min..=bounds.b_max).map(|b| vec![b; l_r]));
            continue;
        }
        let mut current = vec![bounds.b_min; l_r];
        loop {
            out.push(current.clone());
            // Odometer increment, last position fastest.
            let mut pos = l_r;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                if current[pos] < bounds.b_max {
                    current[pos] += 1;
                    break;
                }
                current[pos] = bounds.b_min;
            }
            if current.iter().all(|&b| b == bounds.b_min) {
                break;
            }
        }
    }
    out
}

/// Number of candidates the search would evaluate.
pub fn candidate_count(
    l_r_range: std::ops::RangeInclusive<usize>,
    bounds: &QuantizationBounds,
    uniform_only: bool,
) -> Option<usize> {
    let levels = bounds.levels() as usize;
    l_r_range.into_iter().try_fold(0usize, |acc, l_r| {
        let n = if uniform_only {
            Some(levels)
        } else {
            levels.checked_pow(l_r as u32)
        };
        acc.checked_add(n?)
    })
}

/// Exhaustive search over per-ADC resolutions (and optionally RF-chain
/// counts), keeping the candidate with the highest energy efficiency. Every
/// candidate starts from a clone of `rng`, so it sees the same initial
/// iterates a single fixed-bit run with that `rng` would.
pub fn brute_force<R: Rng + Clone + Send + Sync>(
    scn: &Scenario<'_>,
    l_r_max: usize,
    cfg: &AdmmConfig,
    opts: &BruteForceOptions,
    rng: &R,
) -> Result<BaselineResult> {
    let l_r_min = opts.l_r_min.unwrap_or(l_r_max);
    if l_r_min < scn.n_s || l_r_min > l_r_max || l_r_max > scn.n_r() {
        return Err(Error::config(format!(
            "brute force RF-chain range {l_r_min}..={l_r_max} must lie within {}..={}",
            scn.n_s,
            scn.n_r()
        )));
    }
    let count = candidate_count(l_r_min..=l_r_max, &cfg.bounds, opts.uniform_only);
    match count {
        Some(n) if n <= opts.budget => {}
        _ => {
            return Err(Error::config(format!(
                "brute force needs {} candidates, budget is {}",
                count.map_or_else(|| "more than usize::MAX".to_string(), |n| n.to_string()),
                opts.budget
            )))
        }
    }
    let candidates = enumerate_candidates(l_r_min..=l_r_max, &cfg.bounds, opts.uniform_only);

    let scored: Vec<Result<(f64, BaselineResult)>> = candidates
        .par_iter()
        .map(|bits| {
            let bits = BitVector::new(bits.clone(), &cfg.bounds)?;
            let mut local = rng.clone();
            let out = admm::run_frozen(scn.w_opt(), &bits, cfg, &mut local)?;
            let eval = scn.evaluate_hybrid(&out.combiner)?;
            Ok((
                eval.ee,
                BaselineResult {
                    label: "bf".into(),
                    combiner: Combiner::Hybrid(out.combiner),
                    eval,
                },
            ))
        })
        .collect();

    let mut best: Option<(f64, BaselineResult)> = None;
    for item in scored {
        let (ee, result) = item?;
        if best.as_ref().is_none_or(|(b, _)| ee > *b) {
            best = Some((ee, result));
        }
    }
    Ok(best.expect("at least one candidate").1)
}
