//! Additive quantization noise model (AQNM): a `b`-bit ADC acts as a gain
//! `δ(b)` followed by independent Gaussian noise of variance `δ²(1 − δ²)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{real_diag, CMatrix};

/// `π√3 / 2`, the distortion constant of the AQNM.
pub const AQNM_CONST: f64 = PI * 1.732_050_807_568_877_2 / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizationBounds {
    pub b_min: u32,
    pub b_max: u32,
}

impl Default for QuantizationBounds {
    fn default() -> Self {
        Self { b_min: 1, b_max: 8 }
    }
}

impl QuantizationBounds {
    pub fn new(b_min: u32, b_max: u32) -> Result<Self> {
        let b = Self { b_min, b_max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.b_min < 1 || self.b_min > self.b_max {
            return Err(Error::invalid(format!(
                "bit bounds must satisfy 1 <= b_min <= b_max, got [{}, {}]",
                self.b_min, self.b_max
            )));
        }
        Ok(())
    }

    pub fn delta_min(&self) -> f64 {
        delta_of_bits_unchecked(self.b_min as f64)
    }

    pub fn delta_max(&self) -> f64 {
        delta_of_bits_unchecked(self.b_max as f64)
    }

    /// Number of distinct resolutions, `b_max − b_min + 1`.
    pub fn levels(&self) -> u32 {
        self.b_max - self.b_min + 1
    }

    pub fn contains(&self, b: u32) -> bool {
        (self.b_min..=self.b_max).contains(&b)
    }
}

fn distortion_factor(b: f64) -> f64 {
    AQNM_CONST * (-2.0 * b).exp2()
}

fn delta_of_bits_unchecked(b: f64) -> f64 {
    (1.0 - distortion_factor(b)).sqrt()
}

/// Multiplicative distortion `δ(b) = √(1 − (π√3/2)·2^(−2b))`. Accepts
/// fractional `b` as long as the radicand is non-negative.
pub fn delta_of_bits(b: f64) -> Result<f64> {
    if !(b >= 0.0) {
        return Err(Error::domain(format!("bit resolution {b} is negative")));
    }
    let radicand = 1.0 - distortion_factor(b);
    if radicand < 0.0 {
        return Err(Error::domain(format!(
            "bit resolution {b} is below the AQNM validity edge"
        )));
    }
    Ok(radicand.sqrt())
}

/// Inverse of [`delta_of_bits`].
pub fn bits_of_delta(d: f64) -> Result<f64> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::domain(format!("distortion {d} outside (0, 1)")));
    }
    Ok(0.5 * (AQNM_CONST / one_minus_sq(d)).log2())
}

/// `1 − d²` without the cancellation of the naive form near `d = 1`.
fn one_minus_sq(d: f64) -> f64 {
    (1.0 - d) * (1.0 + d)
}

/// `2^b` written in terms of `δ`: `(π√3 / (2(1 − δ²)))^{1/2}`.
pub fn adc_power_units(d: f64) -> f64 {
    (AQNM_CONST / one_minus_sq(d)).sqrt()
}

/// Derivative of [`adc_power_units`] with respect to `δ`.
pub fn adc_power_units_derivative(d: f64) -> f64 {
    let one_minus = one_minus_sq(d);
    AQNM_CONST.sqrt() * d / (one_minus * one_minus.sqrt())
}

/// Quantization noise variance of one ADC, `δ²(1 − δ²)`.
pub fn quant_noise_var(b: f64) -> f64 {
    let k = distortion_factor(b);
    (1.0 - k) * k
}

/// Integer resolution per RF chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVector(Vec<u32>);

impl BitVector {
    pub fn new(bits: Vec<u32>, bounds: &QuantizationBounds) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::invalid("bit vector must not be empty"));
        }
        if let Some(b) = bits.iter().find(|&&b| !bounds.contains(b)) {
            return Err(Error::invalid(format!(
                "bit resolution {b} outside [{}, {}]",
                bounds.b_min, bounds.b_max
            )));
        }
        Ok(Self(bits))
    }

    pub fn uniform(b: u32, len: usize, bounds: &QuantizationBounds) -> Result<Self> {
        Self::new(vec![b; len], bounds)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().map(|&b| b as f64).sum::<f64>() / self.0.len() as f64
    }

    /// `Σ 2^{b_i}`.
    pub fn power_units(&self) -> f64 {
        self.0.iter().map(|&b| (b as f64).exp2()).sum()
    }
}

/// Diagonal of `Δ`, one real gain per RF chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix(Vec<f64>);

impl DistortionMatrix {
    /// Slack allowed on the box `[δ(b_min), δ(b_max)]` when validating.
    pub const BOX_TOL: f64 = 1e-12;

    pub fn new(diag: Vec<f64>, bounds: &QuantizationBounds) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("distortion matrix must not be empty"));
        }
        let (lo, hi) = (bounds.delta_min(), bounds.delta_max());
        for &d in &diag {
            if !(d >= lo - Self::BOX_TOL && d <= hi + Self::BOX_TOL) {
                return Err(Error::invalid(format!("distortion {d} outside [{lo}, {hi}]")));
            }
        }
        Ok(Self(diag))
    }

    pub fn from_bits(bits: &BitVector) -> Self {
        Self(
            bits.as_slice()
                .iter()
                .map(|&b| delta_of_bits_unchecked(b as f64))
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_matrix(&self) -> CMatrix {
        real_diag(&self.0)
    }

    /// `Σ 2^{b_i}` evaluated from the continuous gains.
    pub fn power_units(&self) -> f64 {
        self.0.iter().map(|&d| adc_power_units(d)).sum()
    }
}

/// Nearest-integer resolution per chain, clamped to the bounds. Ties round
/// away from zero.
pub fn round_bits(delta: &DistortionMatrix, bounds: &QuantizationBounds) -> BitVector {
    let bits = delta
        .as_slice()
        .iter()
        .map(|&d| {
            let b = if d >= 1.0 {
                bounds.b_max as f64
            } else if d <= 0.0 {
                bounds.b_min as f64
            } else {
                0.5 * (AQNM_CONST / one_minus_sq(d)).log2()
            };
            (b.round() as i64).clamp(bounds.b_min as i64, bounds.b_max as i64) as u32
        })
        .collect();
    BitVector(bits)
}

/// Diagonal quantization-noise covariance `C_ε`.
pub fn quant_noise_cov(bits: &BitVector) -> CMatrix {
    let diag: Vec<f64> = bits.as_slice().iter().map(|&b| quant_noise_var(b as f64)).collect();
    real_diag(&diag)
}
