//! Narrowband clustered mmWave channel with uniform linear arrays at both
//! ends, and the SVD-derived optimal digital precoder and combiner.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{self, CMatrix, CVector, Svd, C64};
use crate::random::{complex_gaussian, laplacian};

/// Default in-cluster angular spread, expressed as a standard deviation.
pub const DEFAULT_ANGLE_SPREAD_DEG: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_clusters: usize,
    pub n_rays: usize,
    /// Average power of every cluster.
    pub cluster_power: f64,
    /// Laplacian scale parameter of the per-ray azimuth offsets (radians).
    pub angle_spread: f64,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            n_tx: 32,
            n_rx: 16,
            n_clusters: 2,
            n_rays: 4,
            cluster_power: 1.0,
            // Laplace(0, b) has standard deviation sqrt(2) b.
            angle_spread: DEFAULT_ANGLE_SPREAD_DEG.to_radians() / 2f64.sqrt(),
            element_spacing: 0.5,
        }
    }
}

impl ChannelParams {
    pub fn with_antennas(n_tx: usize, n_rx: usize) -> Self {
        Self {
            n_tx,
            n_rx,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 || self.n_clusters == 0 || self.n_rays == 0 {
            return Err(Error::invalid("channel: all counts must be at least 1"));
        }
        if !(self.cluster_power > 0.0) {
            return Err(Error::invalid("channel: cluster power must be positive"));
        }
        if !(self.angle_spread >= 0.0) {
            return Err(Error::invalid("channel: angle spread must be non-negative"));
        }
        if !(self.element_spacing > 0.0) {
            return Err(Error::invalid("channel: element spacing must be positive"));
        }
        Ok(())
    }

    fn path_count(&self) -> usize {
        self.n_clusters * self.n_rays
    }
}

/// One propagation path: complex gain plus departure/arrival azimuths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: C64,
    pub aod: f64,
    pub aoa: f64,
}

#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub params: ChannelParams,
    pub paths: Vec<Path>,
    pub h: CMatrix,
    pub svd: Svd,
}

/// Normalized ULA steering vector, entry `k` is
/// `exp(j 2π spacing k sin φ) / √n`.
pub fn array_response_ula(n: usize, phi: f64, spacing: f64) -> CVector {
    let norm = 1.0 / (n as f64).sqrt();
    let step = 2.0 * PI * spacing * phi.sin();
    CVector::from_iterator(n, (0..n).map(|k| C64::from_polar(norm, step * k as f64)))
}

/// Sums the rank-one path contributions into the channel matrix.
pub fn assemble_channel(params: &ChannelParams, paths: &[Path]) -> CMatrix {
    let scale = ((params.n_tx * params.n_rx) as f64 / params.path_count() as f64).sqrt();
    let mut h = CMatrix::zeros(params.n_rx, params.n_tx);
    for p in paths {
        let a_r = array_response_ula(params.n_rx, p.aoa, params.element_spacing);
        let a_t = array_response_ula(params.n_tx, p.aod, params.element_spacing);
        h.ger(p.gain * scale, &a_r, &a_t.conjugate(), C64::new(1.0, 0.0));
    }
    h
}

pub fn sample_channel<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> Result<ChannelRealization> {
    params.validate()?;
    let mut paths = Vec::with_capacity(params.path_count());
    for _ in 0..params.n_clusters {
        let mean_aod = rng.random_range(0.0..2.0 * PI);
        let mean_aoa = rng.random_range(0.0..2.0 * PI);
        for _ in 0..params.n_rays {
            let gain = complex_gaussian(rng, params.cluster_power);
            let aod = mean_aod + laplacian(rng, params.angle_spread);
            let aoa = mean_aoa + laplacian(rng, params.angle_spread);
            paths.push(Path { gain, aod, aoa });
        }
    }
    let h = assemble_channel(params, &paths);
    from_parts(params.clone(), paths, h)
}

fn from_parts(params: ChannelParams, paths: Vec<Path>, h: CMatrix) -> Result<ChannelRealization> {
    let svd = numerics::svd(&h)?;
    Ok(ChannelRealization { params, paths, h, svd })
}

impl ChannelRealization {
    /// Wraps an explicit channel matrix (no path description).
    pub fn from_matrix(h: CMatrix) -> Result<Self> {
        let params = ChannelParams {
            n_tx: h.ncols(),
            n_rx: h.nrows(),
            ..ChannelParams::default()
        };
        from_parts(params, Vec::new(), h)
    }

    pub fn n_rx(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.h.ncols()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.svd.s
    }

    fn check_streams(&self, n_s: usize) -> Result<()> {
        let max = self.n_rx().min(self.n_tx());
        if n_s == 0 || n_s > max {
            return Err(Error::invalid(format!("stream count {n_s} must lie in 1..={max}")));
        }
        Ok(())
    }

    /// First `n_s` left singular vectors.
    pub fn optimal_combiner(&self, n_s: usize) -> Result<CMatrix> {
        self.check_streams(n_s)?;
        Ok(self.svd.u.columns(0, n_s).into_owned())
    }

    /// First `n_s` right singular vectors scaled by `1/√n_s`, so `‖F‖_F = 1`.
    pub fn optimal_precoder(&self, n_s: usize) -> Result<CMatrix> {
        self.check_streams(n_s)?;
        Ok(self.svd.v.columns(0, n_s).into_owned().scale(1.0 / (n_s as f64).sqrt()))
    }
}
