//! Scoring of a receive combiner: combined noise covariance, information
//! rate, consumed power, energy efficiency and distance to the optimal
//! digital combiner.

use crate::error::{Error, Result};
use crate::numerics::{self, identity, CMatrix};
use crate::quantization::{BitVector, DistortionMatrix};

/// Reported in place of `−∞` when the combiner error is exactly zero.
pub const MSE_FLOOR_DB: f64 = -300.0;

/// Default bandwidth (Hz); with 1 Hz the spectral efficiency equals the rate.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 1.0;

/// Receiver power model, all values in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    /// Per ADC, multiplied by `2^b`.
    pub p_adc: f64,
    /// Circuit components.
    pub p_cp: f64,
    /// Per receive antenna.
    pub p_r: f64,
    /// Per phase shifter.
    pub p_ps: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_adc: 0.1,
            p_cp: 10.0,
            p_r: 0.1,
            p_ps: 0.01,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let all = [self.p_adc, self.p_cp, self.p_r, self.p_ps];
        if all.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("power model terms must be finite and non-negative"));
        }
        Ok(())
    }

    fn fixed_terms(&self, n_r: usize, l_r: usize, include_phase_shifters: bool) -> f64 {
        let ps = if include_phase_shifters {
            (n_r * l_r) as f64 * self.p_ps
        } else {
            0.0
        };
        n_r as f64 * self.p_r + ps + self.p_cp
    }
}

/// Borrowed view of a factored combiner `W_RF Δ W_BB`.
#[derive(Debug, Clone, Copy)]
pub struct CombinerView<'a> {
    pub w_rf: &'a CMatrix,
    pub delta: &'a CMatrix,
    pub w_bb: &'a CMatrix,
}

impl CombinerView<'_> {
    pub fn product(&self) -> CMatrix {
        self.w_rf * self.delta * self.w_bb
    }

    fn check(&self) -> Result<()> {
        let (n_r, l_r) = self.w_rf.shape();
        if self.delta.shape() != (l_r, l_r) || self.w_bb.nrows() != l_r || n_r == 0 {
            return Err(Error::invalid(format!(
                "non-conformable combiner: W_RF {:?}, Δ {:?}, W_BB {:?}",
                self.w_rf.shape(),
                self.delta.shape(),
                self.w_bb.shape()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// Information rate, bits/s.
    pub rate: f64,
    /// Consumed power, W.
    pub power: f64,
    /// Energy efficiency, bits/J.
    pub ee: f64,
    /// Spectral efficiency, bits/s/Hz.
    pub se: f64,
    /// `10 log10 ‖W_opt − W_RF Δ W_BB‖²_F`.
    pub mse_db: f64,
}

impl Evaluation {
    pub fn new(rate: f64, power: f64, mse_db: f64) -> Result<Self> {
        Self::with_bandwidth(rate, power, mse_db, DEFAULT_BANDWIDTH_HZ)
    }

    pub fn with_bandwidth(rate: f64, power: f64, mse_db: f64, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth must be positive"));
        }
        Ok(Self {
            rate,
            power,
            ee: energy_efficiency(rate, power)?,
            se: rate / bandwidth,
            mse_db,
        })
    }
}

/// `R_η = σ² W_BB^H Δ^H W_RF^H W_RF Δ W_BB + W_BB^H C_ε W_BB`.
pub fn combined_noise_cov(view: &CombinerView<'_>, c_eps: &CMatrix, sigma_n2: f64) -> Result<CMatrix> {
    view.check()?;
    if !(sigma_n2 > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    if c_eps.shape() != view.delta.shape() {
        return Err(Error::invalid("quantization covariance has wrong shape"));
    }
    let rf_delta_bb = view.w_rf * view.delta * view.w_bb;
    let mut r = rf_delta_bb.adjoint() * &rf_delta_bb;
    r.scale_mut(sigma_n2);
    r += view.w_bb.adjoint() * c_eps * view.w_bb;
    let r = (&r + r.adjoint()).scale(0.5);
    if numerics::cholesky_lower(&r).is_err() {
        return Err(Error::DegenerateDesign(
            "combined noise covariance is not invertible".into(),
        ));
    }
    Ok(r)
}

/// Information rate `log2 |I + R_η⁻¹ W^H H F F^H H^H W / N_s|` with
/// `W = W_RF Δ W_BB`. Evaluated as `log2 |I + L⁻¹ T T^H L^{-H} / N_s|`
/// where `R_η = L L^H` and `T = W^H H F`.
pub fn rate(
    h: &CMatrix,
    f: &CMatrix,
    view: &CombinerView<'_>,
    c_eps: &CMatrix,
    sigma_n2: f64,
    n_s: usize,
) -> Result<f64> {
    if n_s == 0 {
        return Err(Error::invalid("stream count must be positive"));
    }
    let r_eta = combined_noise_cov(view, c_eps, sigma_n2)?;
    let l = numerics::cholesky_lower(&r_eta)
        .map_err(|_| Error::DegenerateDesign("combined noise covariance is singular".into()))?;
    let w = view.product();
    if h.nrows() != w.nrows() || h.ncols() != f.nrows() {
        return Err(Error::invalid("channel, precoder and combiner are not conformable"));
    }
    let t = w.adjoint() * h * f;
    let m = l
        .solve_lower_triangular(&t)
        .ok_or_else(|| Error::DegenerateDesign("singular noise whitening factor".into()))?;
    let k = m.nrows();
    let g = identity(k) + (&m * m.adjoint()).scale(1.0 / n_s as f64);
    let r = numerics::logdet2_hpd(&((&g + g.adjoint()).scale(0.5)))?;
    Ok(r.max(0.0))
}

/// Total receiver power with ADC power counted from integer bits.
pub fn power(bits: &BitVector, n_r: usize, l_r: usize, pm: &PowerModel, include_phase_shifters: bool) -> f64 {
    pm.p_adc * bits.power_units() + pm.fixed_terms(n_r, l_r, include_phase_shifters)
}

/// Same model with ADC power written through the distortion gains.
pub fn power_of_delta(
    delta: &DistortionMatrix,
    n_r: usize,
    l_r: usize,
    pm: &PowerModel,
    include_phase_shifters: bool,
) -> f64 {
    pm.p_adc * delta.power_units() + pm.fixed_terms(n_r, l_r, include_phase_shifters)
}

pub fn energy_efficiency(rate: f64, power: f64) -> Result<f64> {
    if !(power > 0.0) {
        return Err(Error::invalid(format!("power must be positive, got {power}")));
    }
    Ok(rate / power)
}

/// `10 log10 ‖W_opt − W_RF Δ W_BB‖²_F`, floored at [`MSE_FLOOR_DB`].
pub fn combiner_mse(w_opt: &CMatrix, view: &CombinerView<'_>) -> f64 {
    mse_db_of(w_opt, &view.product())
}

pub fn mse_db_of(w_opt: &CMatrix, w: &CMatrix) -> f64 {
    let err = numerics::frobenius_sq(&(w_opt - w));
    if err > 0.0 {
        (10.0 * err.log10()).max(MSE_FLOOR_DB)
    } else {
        MSE_FLOOR_DB
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{frobenius, hermitian_eigenvalues, real_diag, C64};
    use crate::quantization::{delta_of_bits, quant_noise_cov, QuantizationBounds};
    use crate::random::{random_phase_matrix, rng_from_seed};
    use crate::testutil::random_cmatrix;

    fn scalar(x: f64) -> CMatrix {
        CMatrix::from_element(1, 1, C64::new(x, 0.0))
    }

    #[test]
    fn scalar_noise_covariance_and_rate() {
        let one = scalar(1.0);
        let delta = scalar(0.565531);
        let c_eps = scalar(0.217542);
        let view = CombinerView {
            w_rf: &one,
            delta: &delta,
            w_bb: &one,
        };
        let r = combined_noise_cov(&view, &c_eps, 0.1).unwrap();
        assert!((r[(0, 0)].re - 0.2495245).abs() < 1e-6);
        let rt = rate(&one, &one, &view, &c_eps, 0.1, 1).unwrap();
        let expected = (1.0f64 + 0.565531f64.powi(2) / 0.2495245).log2();
        assert!((rt - expected).abs() < 1e-6);
        assert!((rt - 1.190).abs() < 5e-4);
        let ee = energy_efficiency(rt, 13.04).unwrap();
        assert!((ee - 0.09126).abs() < 5e-5);
    }

    #[test]
    fn unitary_shaping_gives_white_noise() {
        let mut rng = rng_from_seed(3);
        let q = crate::numerics::svd(&random_cmatrix(&mut rng, 8, 3)).unwrap().u;
        let q_bb = crate::numerics::svd(&random_cmatrix(&mut rng, 3, 3)).unwrap().u;
        let delta = identity(3);
        let view = CombinerView {
            w_rf: &q,
            delta: &delta,
            w_bb: &q_bb,
        };
        let r = combined_noise_cov(&view, &CMatrix::zeros(3, 3), 0.3).unwrap();
        assert!(frobenius(&(r - identity(3).scale(0.3))) < 1e-12);
    }

    #[test]
    fn noise_covariance_is_hermitian_psd() {
        let bounds = QuantizationBounds::default();
        let mut rng = rng_from_seed(21);
        for _ in 0..20 {
            let w_rf = random_phase_matrix(&mut rng, 16, 4);
            let w_bb = random_cmatrix(&mut rng, 4, 4);
            let bits = BitVector::new(vec![1, 3, 5, 8], &bounds).unwrap();
            let delta = DistortionMatrix::from_bits(&bits).to_matrix();
            let view = CombinerView {
                w_rf: &w_rf,
                delta: &delta,
                w_bb: &w_bb,
            };
            let r = combined_noise_cov(&view, &quant_noise_cov(&bits), 0.01).unwrap();
            assert!(frobenius(&(&r - r.adjoint())) < 1e-12);
            assert!(hermitian_eigenvalues(&r).unwrap()[0] >= -1e-10);
        }
    }

    #[test]
    fn rank_deficient_design_is_rejected() {
        let w_rf = identity(4);
        let delta = identity(2);
        let w_rf = w_rf.columns(0, 2).into_owned();
        let w_bb = CMatrix::zeros(2, 2);
        let view = CombinerView {
            w_rf: &w_rf,
            delta: &delta,
            w_bb: &w_bb,
        };
        assert!(matches!(
            combined_noise_cov(&view, &CMatrix::zeros(2, 2), 0.1),
            Err(Error::DegenerateDesign(_))
        ));
    }

    #[test]
    fn zero_channel_has_zero_rate() {
        let mut rng = rng_from_seed(1);
        let w_rf = random_phase_matrix(&mut rng, 6, 2);
        let w_bb = random_cmatrix(&mut rng, 2, 2);
        let delta = real_diag(&[0.9, 0.7]);
        let view = CombinerView {
            w_rf: &w_rf,
            delta: &delta,
            w_bb: &w_bb,
        };
        let h = CMatrix::zeros(6, 5);
        let f = random_cmatrix(&mut rng, 5, 2);
        let c_eps = real_diag(&[0.1, 0.2]);
        assert_eq!(rate(&h, &f, &view, &c_eps, 0.1, 2).unwrap(), 0.0);
    }

    #[test]
    fn rate_increases_with_snr_and_is_rotation_invariant() {
        let mut rng = rng_from_seed(12);
        let h = random_cmatrix(&mut rng, 8, 10);
        let f = random_cmatrix(&mut rng, 10, 3).scale(0.3);
        let w_rf = random_phase_matrix(&mut rng, 8, 3);
        let w_bb = random_cmatrix(&mut rng, 3, 3);
        let bits = BitVector::new(vec![2, 4, 6], &QuantizationBounds::default()).unwrap();
        let delta = DistortionMatrix::from_bits(&bits).to_matrix();
        let c_eps = quant_noise_cov(&bits);
        let view = CombinerView {
            w_rf: &w_rf,
            delta: &delta,
            w_bb: &w_bb,
        };
        let rates: Vec<f64> = [1.0, 0.1, 0.01]
            .iter()
            .map(|&s| rate(&h, &f, &view, &c_eps, s, 3).unwrap())
            .collect();
        assert!(rates[0] < rates[1] && rates[1] < rates[2]);

        let u = crate::numerics::svd(&random_cmatrix(&mut rng, 3, 3)).unwrap().u;
        let rotated = &w_bb * u;
        let view_rot = CombinerView { w_bb: &rotated, ..view };
        let r_rot = rate(&h, &f, &view_rot, &c_eps, 0.1, 3).unwrap();
        assert!((r_rot - rates[1]).abs() < 1e-9);
    }

    #[test]
    fn power_reference_values() {
        let bounds = QuantizationBounds::default();
        let pm = PowerModel::default();
        let ones = BitVector::uniform(1, 4, &bounds).unwrap();
        let eights = BitVector::uniform(8, 4, &bounds).unwrap();
        assert!((power(&ones, 16, 4, &pm, true) - 13.04).abs() < 1e-12);
        assert!((power(&eights, 16, 4, &pm, true) - 114.64).abs() < 1e-12);
        let digital = BitVector::uniform(8, 16, &bounds).unwrap();
        assert!((power(&digital, 16, 16, &pm, false) - 421.2).abs() < 1e-9);
        for b in 1..=8 {
            let bits = BitVector::uniform(b, 4, &bounds).unwrap();
            let p_bits = power(&bits, 16, 4, &pm, true);
            let p_delta = power_of_delta(&DistortionMatrix::from_bits(&bits), 16, 4, &pm, true);
            assert!((p_bits - p_delta).abs() < 1e-9);
            assert!(p_bits >= pm.p_cp + 16.0 * pm.p_r);
        }
    }

    #[test]
    fn energy_efficiency_cases() {
        assert_eq!(energy_efficiency(0.0, 13.04).unwrap(), 0.0);
        assert_eq!(energy_efficiency(13.04, 13.04).unwrap(), 1.0);
        assert!(energy_efficiency(1.0, 0.0).is_err());
        let e = Evaluation::new(5.0, 2.0, -10.0).unwrap();
        assert_eq!(e.ee * e.power, e.rate);
        assert_eq!(e.se, e.rate);
    }

    #[test]
    fn mse_cases() {
        let mut rng = rng_from_seed(2);
        let w_opt = crate::numerics::svd(&random_cmatrix(&mut rng, 8, 4)).unwrap().u;
        assert_eq!(mse_db_of(&w_opt, &w_opt), MSE_FLOOR_DB);
        let zero = CMatrix::zeros(8, 4);
        assert!((mse_db_of(&w_opt, &zero) - 10.0 * 4f64.log10()).abs() < 1e-12);
        let e = random_cmatrix(&mut rng, 8, 4);
        let e = e.scale(0.1 / frobenius(&e));
        assert!((mse_db_of(&w_opt, &(&w_opt + e)) + 20.0).abs() < 1e-9);
        // delta is included in the product.
        let delta = delta_of_bits(3.0).unwrap();
        let d = identity(4).scale(delta);
        let eye = identity(4);
        let view = CombinerView {
            w_rf: &w_opt,
            delta: &d,
            w_bb: &eye,
        };
        let expected = 10.0 * (4.0 * (1.0 - delta).powi(2)).log10();
        assert!((combiner_mse(&w_opt, &view) - expected).abs() < 1e-9);
    }
}
