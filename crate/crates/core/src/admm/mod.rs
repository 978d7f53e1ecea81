//! ADMM factorization of the optimal digital combiner into
//! `W_RF Δ W_BB`: unit-modulus analog combiner, diagonal ADC distortion and
//! digital baseband combiner, with the ADC power folded into the objective.
//!
//! Each iteration performs, in order:
//!
//! 1. `Z ← (W_opt − Λ + α W_RF Δ W_BB) / (1 + α)`
//! 2. `W_RF ← Π_W{ B (Δ W_BB)^H (α Δ W_BB W_BB^H Δ^H)^{-1} }`, `B = Λ + α Z`
//! 3. `Δ ←` box-constrained minimizer of the Δ-subproblem (see [`delta_step`])
//! 4. `W_BB ← (α Δ^H W_RF^H W_RF Δ)^{-1} Δ^H W_RF^H B`
//! 5. `Λ ← Λ + α (Z − W_RF Δ W_BB)`
//!
//! and the bits are read off `Δ` by rounding once the iteration cap is hit.

pub mod delta_step;

use rand::Rng;

use crate::error::{Error, Result};
use crate::metrics::{mse_db_of, PowerModel};
use crate::numerics::{self, frobenius, frobenius_sq, CMatrix, C64};
use crate::quantization::{round_bits, BitVector, DistortionMatrix, QuantizationBounds};
use crate::random::{complex_gaussian_matrix, random_phase_matrix};

pub use delta_step::{DeltaProblem, DeltaSolution, DeltaSolverOptions};

/// Relative ridge added to a singular Gram matrix before retrying the solve.
pub const RIDGE: f64 = 1e-10;

/// Tolerance on `|[W_RF]_kl| = 1`.
pub const UNIT_MODULUS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    /// Penalty parameter.
    pub alpha: f64,
    /// Rate/power trade-off weight.
    pub gamma: f64,
    /// Number of iterations; there is no early stop.
    pub n_max: usize,
    pub delta_step_tol: f64,
    pub delta_step_max_iter: usize,
    pub bounds: QuantizationBounds,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            gamma: 0.01,
            n_max: 40,
            delta_step_tol: 1e-6,
            delta_step_max_iter: 500,
            bounds: QuantizationBounds::default(),
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid("alpha must be positive"));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid("gamma must be non-negative"));
        }
        if self.n_max == 0 {
            return Err(Error::invalid("n_max must be at least 1"));
        }
        if !(self.delta_step_tol > 0.0) || self.delta_step_max_iter == 0 {
            return Err(Error::invalid("delta step tolerance and cap must be positive"));
        }
        self.bounds.validate()
    }

    fn delta_options(&self) -> DeltaSolverOptions {
        DeltaSolverOptions {
            tol: self.delta_step_tol,
            max_iter: self.delta_step_max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n_r: usize,
    pub l_r: usize,
    pub n_s: usize,
}

impl Dims {
    pub fn validate(&self) -> Result<()> {
        if self.n_s == 0 || self.n_s > self.l_r || self.l_r > self.n_r {
            return Err(Error::invalid(format!(
                "dimensions must satisfy 1 <= N_s <= L_R <= N_R, got N_s={}, L_R={}, N_R={}",
                self.n_s, self.l_r, self.n_r
            )));
        }
        Ok(())
    }
}

/// ADMM iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub z: CMatrix,
    pub w_rf: CMatrix,
    /// Diagonal of `Δ`.
    pub delta: Vec<f64>,
    pub w_bb: CMatrix,
    pub lambda: CMatrix,
    pub iter: usize,
}

impl AdmmState {
    pub fn delta_matrix(&self) -> CMatrix {
        numerics::real_diag(&self.delta)
    }

    /// `W_RF Δ W_BB`.
    pub fn product(&self) -> CMatrix {
        let mut rf_delta = self.w_rf.clone();
        for (j, &d) in self.delta.iter().enumerate() {
            rf_delta.column_mut(j).scale_mut(d);
        }
        rf_delta * &self.w_bb
    }

    pub fn primal_residual(&self) -> f64 {
        frobenius(&(&self.z - self.product()))
    }

    pub fn is_unit_modulus(&self) -> bool {
        self.w_rf.iter().all(|z| (z.norm() - 1.0).abs() <= UNIT_MODULUS_TOL)
    }

    pub fn delta_in_box(&self, bounds: &QuantizationBounds) -> bool {
        let (lo, hi) = (bounds.delta_min(), bounds.delta_max());
        self.delta.iter().all(|&d| d >= lo && d <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    /// `10 log10 ‖W_opt − W_RF Δ W_BB‖²_F` with the continuous `Δ`.
    pub mse_db: f64,
    /// `‖Z − W_RF Δ W_BB‖_F`.
    pub primal_residual: f64,
    pub lagrangian: f64,
    /// `false` when the Δ-step hit its iteration cap before reaching the
    /// stationarity tolerance. Always `true` for frozen-Δ runs.
    pub delta_step_converged: bool,
}

/// Final factored combiner.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridCombiner {
    pub w_rf: CMatrix,
    pub delta: DistortionMatrix,
    pub w_bb: CMatrix,
    pub bits: BitVector,
}

impl HybridCombiner {
    pub fn l_r(&self) -> usize {
        self.w_rf.ncols()
    }

    /// `Δ` at the rounded integer resolutions.
    pub fn quantized_delta(&self) -> DistortionMatrix {
        DistortionMatrix::from_bits(&self.bits)
    }
}

#[derive(Debug, Clone)]
pub struct AdmmRun {
    pub combiner: HybridCombiner,
    pub trace: Vec<TraceRecord>,
}

/// A failed run together with the trace recorded before the failure.
#[derive(Debug)]
pub struct AdmmFailure {
    pub error: Error,
    pub trace: Vec<TraceRecord>,
}

impl std::fmt::Display for AdmmFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} iterations)", self.error, self.trace.len())
    }
}

impl std::error::Error for AdmmFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<AdmmFailure> for Error {
    fn from(f: AdmmFailure) -> Self {
        Error::Solver {
            iteration: f.trace.len() + 1,
            source: Box::new(f.error),
        }
    }
}

/// Random starting point: Gaussian `Z` and `W_BB`, random-phase `W_RF`,
/// `Δ` uniform on the feasible box, `Λ = 0`.
pub fn initialize<R: Rng + ?Sized>(rng: &mut R, dims: Dims, bounds: &QuantizationBounds) -> AdmmState {
    let z = complex_gaussian_matrix(rng, dims.n_r, dims.n_s);
    let w_rf = random_phase_matrix(rng, dims.n_r, dims.l_r);
    let (lo, hi) = (bounds.delta_min(), bounds.delta_max());
    let delta = (0..dims.l_r).map(|_| rng.random_range(lo..=hi)).collect();
    let w_bb = complex_gaussian_matrix(rng, dims.l_r, dims.n_s);
    AdmmState {
        z,
        w_rf,
        delta,
        w_bb,
        lambda: CMatrix::zeros(dims.n_r, dims.n_s),
        iter: 0,
    }
}

/// Closed-form minimizer of `½‖W_opt − Z‖² + α/2 ‖Z + Λ/α − W_RF Δ W_BB‖²`.
pub fn z_step(state: &AdmmState, w_opt: &CMatrix, alpha: f64) -> CMatrix {
    (w_opt - &state.lambda + state.product().scale(alpha)).scale(1.0 / (1.0 + alpha))
}

/// Elementwise `a / |a|`, with zeros left at zero.
pub fn project_unit_modulus(a: &CMatrix) -> CMatrix {
    a.map(|z| {
        let r = z.norm();
        if r == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            z / r
        }
    })
}

/// Solves `G X = R` for Hermitian positive semidefinite `G`, retrying with a
/// small ridge when `G` is numerically singular.
fn solve_gram(g: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    match numerics::solve_hpd(g, rhs) {
        Ok(x) => Ok(x),
        Err(Error::Domain(_)) => {
            let n = g.nrows();
            let trace: f64 = (0..n).map(|i| g[(i, i)].re).sum();
            let ridge = RIDGE * (trace / n as f64).max(f64::MIN_POSITIVE);
            let regularized = g + numerics::identity(n).scale(ridge);
            numerics::solve_hpd(&regularized, rhs)
        }
        Err(e) => Err(e),
    }
}

/// Least-squares `M` minimizing `‖Y − M G‖_F` for `G` of full row or column
/// rank, i.e. `Y G^H (G G^H)^{-1}` (or `Y (G^H G)^{-1} G^H` when `G` is wide
/// in the other direction so the smaller Gram matrix is inverted).
fn right_least_squares(y: &CMatrix, g: &CMatrix) -> Result<CMatrix> {
    if g.nrows() <= g.ncols() {
        let gram = g * g.adjoint();
        Ok(solve_gram(&gram, &(g * y.adjoint()))?.adjoint())
    } else {
        let gram = g.adjoint() * g;
        Ok(solve_gram(&gram, &y.adjoint())?.adjoint() * g.adjoint())
    }
}

/// Unconstrained minimizer of `‖Z + Λ/α − W_RF Δ W_BB‖` over `W_RF`, written
/// as `B W_BB^H Δ^H C^{-1}` with `B = Λ + αZ`, `C = α Δ W_BB W_BB^H Δ^H`.
pub fn wrf_unconstrained(state: &AdmmState, alpha: f64) -> Result<CMatrix> {
    let b = &state.lambda + state.z.scale(alpha);
    let mut delta_bb = state.w_bb.clone();
    for (i, &d) in state.delta.iter().enumerate() {
        delta_bb.row_mut(i).scale_mut(d);
    }
    // alpha cancels between B and C.
    right_least_squares(&b.scale(1.0 / alpha), &delta_bb)
}

pub fn wrf_step(state: &AdmmState, alpha: f64) -> Result<CMatrix> {
    Ok(project_unit_modulus(&wrf_unconstrained(state, alpha)?))
}

/// Reduced Δ-subproblem at the current iterate. `power_weight` is
/// `γ · P_ADC`.
pub fn delta_problem(state: &AdmmState, alpha: f64, power_weight: f64, bounds: &QuantizationBounds) -> DeltaProblem {
    let y = &state.z + state.lambda.scale(1.0 / alpha);
    DeltaProblem::new(
        &y,
        &state.w_rf,
        &state.w_bb,
        alpha,
        power_weight,
        bounds.delta_min(),
        bounds.delta_max(),
    )
}

pub fn delta_step(
    state: &AdmmState,
    gamma: f64,
    alpha: f64,
    pm: &PowerModel,
    bounds: &QuantizationBounds,
    opts: &DeltaSolverOptions,
) -> DeltaSolution {
    delta_problem(state, alpha, gamma * pm.p_adc, bounds).solve(&state.delta, opts)
}

/// Exact least-squares `W_BB = D^{-1} Δ^H W_RF^H B`,
/// `D = α Δ^H W_RF^H W_RF Δ`.
pub fn wbb_step(state: &AdmmState, alpha: f64) -> Result<CMatrix> {
    let b = &state.lambda + state.z.scale(alpha);
    let mut rf_delta = state.w_rf.clone();
    for (j, &d) in state.delta.iter().enumerate() {
        rf_delta.column_mut(j).scale_mut(d);
    }
    let d_mat = (rf_delta.adjoint() * &rf_delta).scale(alpha);
    solve_gram(&d_mat, &(rf_delta.adjoint() * b))
}

/// `Λ + α (Z − W_RF Δ W_BB)`.
pub fn dual_update(state: &AdmmState, alpha: f64) -> CMatrix {
    &state.lambda + (&state.z - state.product()).scale(alpha)
}

/// Value of the augmented Lagrangian at a feasible iterate.
pub fn lagrangian(state: &AdmmState, w_opt: &CMatrix, alpha: f64, power_weight: f64) -> f64 {
    let fit = 0.5 * frobenius_sq(&(w_opt - &state.z));
    let penalty = 0.5 * alpha * frobenius_sq(&(&state.z + state.lambda.scale(1.0 / alpha) - state.product()));
    let power: f64 = state
        .delta
        .iter()
        .map(|&d| crate::quantization::adc_power_units(d))
        .sum();
    fit + penalty + power_weight * power
}

#[derive(Debug, Clone, PartialEq)]
enum DeltaMode {
    Optimize,
    Frozen,
}

/// Step-by-step driver. [`run`] and [`run_frozen`] wrap it.
#[derive(Debug, Clone)]
pub struct Solver {
    w_opt: CMatrix,
    cfg: AdmmConfig,
    power_weight: f64,
    mode: DeltaMode,
    state: AdmmState,
    trace: Vec<TraceRecord>,
}

impl Solver {
    /// Continuous-Δ solver with a random start.
    pub fn new<R: Rng + ?Sized>(
        w_opt: &CMatrix,
        l_r: usize,
        cfg: &AdmmConfig,
        pm: &PowerModel,
        rng: &mut R,
    ) -> Result<Self> {
        let dims = Self::check(w_opt, l_r, cfg)?;
        let state = initialize(rng, dims, &cfg.bounds);
        Ok(Self::with_state(
            w_opt,
            cfg,
            cfg.gamma * pm.p_adc,
            DeltaMode::Optimize,
            state,
        ))
    }

    /// Solver with `Δ` pinned at `δ(bits)`. The random start is drawn exactly
    /// as in [`Solver::new`] and then `Δ` is overwritten, so a frozen run and a
    /// free run from the same seed share `Z`, `W_RF` and `W_BB` at start.
    pub fn frozen<R: Rng + ?Sized>(w_opt: &CMatrix, bits: &BitVector, cfg: &AdmmConfig, rng: &mut R) -> Result<Self> {
        let dims = Self::check(w_opt, bits.len(), cfg)?;
        BitVector::new(bits.as_slice().to_vec(), &cfg.bounds)?;
        let mut state = initialize(rng, dims, &cfg.bounds);
        state.delta = DistortionMatrix::from_bits(bits).as_slice().to_vec();
        Ok(Self::with_state(w_opt, cfg, 0.0, DeltaMode::Frozen, state))
    }

    /// Continuous-Δ solver resuming from an explicit state.
    pub fn from_state(w_opt: &CMatrix, cfg: &AdmmConfig, pm: &PowerModel, state: AdmmState) -> Result<Self> {
        let dims = Self::check(w_opt, state.w_rf.ncols(), cfg)?;
        let shapes_ok = state.z.shape() == (dims.n_r, dims.n_s)
            && state.lambda.shape() == (dims.n_r, dims.n_s)
            && state.w_bb.shape() == (dims.l_r, dims.n_s)
            && state.delta.len() == dims.l_r;
        if !shapes_ok {
            return Err(Error::invalid("ADMM state does not match W_opt"));
        }
        if !state.delta_in_box(&cfg.bounds) {
            return Err(Error::invalid("ADMM state has Δ outside the feasible box"));
        }
        Ok(Self::with_state(
            w_opt,
            cfg,
            cfg.gamma * pm.p_adc,
            DeltaMode::Optimize,
            state,
        ))
    }

    fn check(w_opt: &CMatrix, l_r: usize, cfg: &AdmmConfig) -> Result<Dims> {
        cfg.validate()?;
        if !numerics::is_finite(w_opt) {
            return Err(Error::invalid("W_opt has non-finite entries"));
        }
        let dims = Dims {
            n_r: w_opt.nrows(),
            l_r,
            n_s: w_opt.ncols(),
        };
        dims.validate()?;
        Ok(dims)
    }

    fn with_state(w_opt: &CMatrix, cfg: &AdmmConfig, power_weight: f64, mode: DeltaMode, state: AdmmState) -> Self {
        Self {
            w_opt: w_opt.clone(),
            cfg: *cfg,
            power_weight,
            mode,
            state,
            trace: Vec::with_capacity(cfg.n_max),
        }
    }

    pub fn state(&self) -> &AdmmState {
        &self.state
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// One full ADMM iteration.
    pub fn step(&mut self) -> Result<&TraceRecord> {
        let alpha = self.cfg.alpha;
        let s = &mut self.state;

        s.z = z_step(s, &self.w_opt, alpha);
        s.w_rf = wrf_step(s, alpha)?;

        let mut delta_converged = true;
        if self.mode == DeltaMode::Optimize {
            let sol =
                delta_problem(s, alpha, self.power_weight, &self.cfg.bounds).solve(&s.delta, &self.cfg.delta_options());
            delta_converged = sol.converged;
            s.delta = sol.d;
        }

        s.w_bb = wbb_step(s, alpha)?;
        s.lambda = dual_update(s, alpha);
        s.iter += 1;

        debug_assert!(s.is_unit_modulus());
        let product = s.product();
        self.trace.push(TraceRecord {
            iter: s.iter,
            mse_db: mse_db_of(&self.w_opt, &product),
            primal_residual: frobenius(&(&s.z - &product)),
            lagrangian: lagrangian(s, &self.w_opt, alpha, self.power_weight),
            delta_step_converged: delta_converged,
        });
        Ok(self.trace.last().expect("just pushed"))
    }

    /// Runs the remaining iterations up to `n_max`.
    pub fn finish(mut self) -> std::result::Result<AdmmRun, AdmmFailure> {
        while self.state.iter < self.cfg.n_max {
            if let Err(error) = self.step() {
                return Err(AdmmFailure {
                    error,
                    trace: self.trace,
                });
            }
        }
        let delta = DistortionMatrix::new(self.state.delta.clone(), &self.cfg.bounds);
        let delta = match delta {
            Ok(d) => d,
            Err(error) => {
                return Err(AdmmFailure {
                    error,
                    trace: self.trace,
                })
            }
        };
        let bits = round_bits(&delta, &self.cfg.bounds);
        Ok(AdmmRun {
            combiner: HybridCombiner {
                w_rf: self.state.w_rf,
                delta,
                w_bb: self.state.w_bb,
                bits,
            },
            trace: self.trace,
        })
    }
}

/// Joint design of `W_RF`, `Δ` and `W_BB` for `l_r` RF chains.
pub fn run<R: Rng + ?Sized>(
    w_opt: &CMatrix,
    l_r: usize,
    cfg: &AdmmConfig,
    pm: &PowerModel,
    rng: &mut R,
) -> std::result::Result<AdmmRun, AdmmFailure> {
    let solver = Solver::new(w_opt, l_r, cfg, pm, rng).map_err(|error| AdmmFailure {
        error,
        trace: Vec::new(),
    })?;
    solver.finish()
}

/// Combiner design with the ADC resolutions fixed to `bits`.
pub fn run_frozen<R: Rng + ?Sized>(
    w_opt: &CMatrix,
    bits: &BitVector,
    cfg: &AdmmConfig,
    rng: &mut R,
) -> std::result::Result<AdmmRun, AdmmFailure> {
    let solver = Solver::frozen(w_opt, bits, cfg, rng).map_err(|error| AdmmFailure {
        error,
        trace: Vec::new(),
    })?;
    solver.finish()
}

#[cfg(test)]
mod tests;
