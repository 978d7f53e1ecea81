//! Box-constrained update of the ADC distortion gains.
//!
//! With `Δ = diag(d)` the penalty term `α/2 ‖Y − W_RF Δ W_BB‖²_F` is a real
//! quadratic in `d`:
//!
//! ```text
//! α/2 (‖Y‖² − 2 qᵀd + dᵀ Q d),   Q_ij = Re[(W_RFᴴW_RF)_ij (W_BB W_BBᴴ)_ji],
//!                                q_i  = Re[(W_RFᴴ Y W_BBᴴ)_ii]
//! ```
//!
//! so the `L_R N_R × L_R N_s`-sized vectorized operator never has to be
//! formed. The ADC power `μ Σ (π√3 / (2(1 − d_i²)))^{1/2}` is added on top,
//! and the sum is minimized over `d ∈ [δ(b_min), δ(b_max)]^{L_R}` by projected
//! gradient descent with Armijo backtracking.

use nalgebra::{DMatrix, DVector};

use crate::numerics::CMatrix;
use crate::quantization::{adc_power_units, adc_power_units_derivative};

const ARMIJO_C: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const INITIAL_STEP: f64 = 1.0;
const MAX_BACKTRACKS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DeltaSolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

/// Reduced Δ-subproblem in the diagonal variables.
#[derive(Debug, Clone)]
pub struct DeltaProblem {
    /// `α Q`.
    hessian: DMatrix<f64>,
    /// `α q`.
    linear: DVector<f64>,
    /// `α/2 ‖Y‖²`.
    offset: f64,
    /// `γ P_ADC`.
    power_weight: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSolution {
    pub d: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub projected_grad_norm: f64,
    pub converged: bool,
}

impl DeltaProblem {
    /// Builds the problem for target `y = Z + Λ/α`.
    pub fn new(
        y: &CMatrix,
        w_rf: &CMatrix,
        w_bb: &CMatrix,
        alpha: f64,
        power_weight: f64,
        lower: f64,
        upper: f64,
    ) -> Self {
        let l_r = w_rf.ncols();
        let gram_rf = w_rf.adjoint() * w_rf;
        let gram_bb = w_bb * w_bb.adjoint();
        let cross = w_rf.adjoint() * y * w_bb.adjoint();
        let hessian = DMatrix::from_fn(l_r, l_r, |i, j| alpha * (gram_rf[(i, j)] * gram_bb[(j, i)]).re);
        let linear = DVector::from_fn(l_r, |i, _| alpha * cross[(i, i)].re);
        let y_sq: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        Self {
            hessian,
            linear,
            offset: 0.5 * alpha * y_sq,
            power_weight,
            lower,
            upper,
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, d: &[f64]) -> f64 {
        let x = DVector::from_column_slice(d);
        let quad = 0.5 * x.dot(&(&self.hessian * &x)) - self.linear.dot(&x) + self.offset;
        quad + self.power_weight * d.iter().map(|&v| adc_power_units(v)).sum::<f64>()
    }

    pub fn gradient(&self, d: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(d);
        let g = &self.hessian * &x - &self.linear;
        g.iter()
            .zip(d)
            .map(|(gi, &di)| gi + self.power_weight * adc_power_units_derivative(di))
            .collect()
    }

    pub fn project(&self, d: &mut [f64]) {
        for v in d.iter_mut() {
            *v = v.clamp(self.lower, self.upper);
        }
    }

    /// `‖P(d − ∇φ(d)) − d‖₂`, zero exactly at first-order stationary points.
    pub fn projected_grad_norm(&self, d: &[f64], grad: &[f64]) -> f64 {
        d.iter()
            .zip(grad)
            .map(|(&di, &gi)| ((di - gi).clamp(self.lower, self.upper) - di).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Projected gradient descent started from `start` (clamped to the box).
    pub fn solve(&self, start: &[f64], opts: &DeltaSolverOptions) -> DeltaSolution {
        let mut d = start.to_vec();
        self.project(&mut d);
        let mut f = self.objective(&d);
        let mut grad = self.gradient(&d);
        let mut pg = self.projected_grad_norm(&d, &grad);
        let mut iterations = 0;
        let mut trial = vec![0.0; d.len()];

        while pg >= opts.tol && iterations < opts.max_iter {
            iterations += 1;
            let mut step = INITIAL_STEP;
            let mut accepted = false;
            for _ in 0..MAX_BACKTRACKS {
                for ((t, &di), &gi) in trial.iter_mut().zip(&d).zip(&grad) {
                    *t = (di - step * gi).clamp(self.lower, self.upper);
                }
                let f_trial = self.objective(&trial);
                let decrease: f64 = grad
                    .iter()
                    .zip(trial.iter().zip(&d))
                    .map(|(gi, (ti, di))| gi * (ti - di))
                    .sum();
                if f_trial <= f + ARMIJO_C * decrease {
                    d.copy_from_slice(&trial);
                    f = f_trial;
                    accepted = true;
                    break;
                }
                step *= SHRINK;
            }
            if !accepted {
                // No representable decrease along the projected path.
                break;
            }
            grad = self.gradient(&d);
            pg = self.projected_grad_norm(&d, &grad);
        }

        DeltaSolution {
            objective: f,
            iterations,
            projected_grad_norm: pg,
            converged: pg < opts.tol,
            d,
        }
    }
}
