use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{LinkLosses, SystemConfig};
use super::{CMatrix, CVector, C64};
use crate::error::{Error, Result};

/// IRS-hop small-scale fading vectors for one coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub g_s: CVector,
    pub g_b: CVector,
    pub g_r: CVector,
    pub g_w: CVector,
    /// IRS distances to (S, BD, R, W) in metres.
    pub distances: (f64, f64, f64, f64),
    pub losses: LinkLosses,
}

impl ChannelRealization {
    pub fn elements(&self) -> usize {
        self.g_s.len()
    }
}

/// √(B/(1+B))·e^{jφ} + √(1/(1+B))·CN(0,1); unit second moment for every B ≥ 0.
pub fn rician_entry<R: Rng + ?Sized>(rician_factor: f64, rng: &mut R) -> C64 {
    let phi: f64 = rng.random::<f64>() * TAU;
    if rician_factor.is_infinite() {
        return C64::from_polar(1.0, phi);
    }
    let los = (rician_factor / (1.0 + rician_factor)).sqrt();
    let nlos = (1.0 / (1.0 + rician_factor)).sqrt() * std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::from_polar(los, phi) + C64::new(nlos * re, nlos * im)
}

pub fn rician_vector<R: Rng + ?Sized>(m: usize, rician_factor: f64, rng: &mut R) -> CVector {
    CVector::from_fn(m, |_, _| rician_entry(rician_factor, rng))
}

pub fn sample_channels<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<ChannelRealization> {
    config.validate()?;
    let m = config.elements;
    let b = config.rician_factor;
    Ok(ChannelRealization {
        g_s: rician_vector(m, b, rng),
        g_b: rician_vector(m, b, rng),
        g_r: rician_vector(m, b, rng),
        g_w: rician_vector(m, b, rng),
        distances: config.distances(),
        losses: config.losses()?,
    })
}

/// IRS phase vector θ and its unit-modulus form v = e^{jθ}.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    pub theta: Vec<f64>,
    pub v: CVector,
}

impl PhaseProfile {
    pub fn from_theta(theta: Vec<f64>) -> Self {
        let theta: Vec<f64> = theta.into_iter().map(|t| t.rem_euclid(TAU)).collect();
        let v = CVector::from_iterator(theta.len(), theta.iter().map(|&t| C64::from_polar(1.0, t)));
        Self { theta, v }
    }

    pub fn zeros(m: usize) -> Self {
        Self::from_theta(vec![0.0; m])
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        Self::from_theta((0..m).map(|_| rng.random::<f64>() * TAU).collect())
    }

    /// Keeps only the phase of each entry; zero entries map to phase 0.
    pub fn from_vector(x: &CVector) -> Self {
        Self::from_theta(x.iter().map(|z| if z.norm() > 0.0 { z.arg() } else { 0.0 }).collect())
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// [v; 1][v; 1]^H.
    pub fn lifted(&self) -> CMatrix {
        let w = self.v.clone().insert_row(self.len(), C64::new(1.0, 0.0));
        &w * w.adjoint()
    }
}

/// Σ_m conj(g_i,m)·e^{jθ_m}·g_j,m / √(l_i·l_j).
pub fn cascade_gain(g_i: &CVector, g_j: &CVector, phase: &PhaseProfile, l_i: f64, l_j: f64) -> Result<C64> {
    let m = g_i.len();
    for len in [g_j.len(), phase.len()] {
        if len != m {
            return Err(Error::Dimension { expected: m, got: len });
        }
    }
    let sum: C64 = (0..m).map(|k| g_i[k].conj() * phase.v[k] * g_j[k]).sum();
    Ok(sum / (l_i * l_j).sqrt())
}

/// Path-loss-scaled cascade channels through the IRS for one phase profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeGains {
    pub h_sr: C64,
    pub h_sb: C64,
    pub h_br: C64,
    pub h_sw: C64,
    pub h_bw: C64,
}

impl CascadeGains {
    pub fn new(ch: &ChannelRealization, phase: &PhaseProfile) -> Result<Self> {
        let l = &ch.losses;
        Ok(Self {
            h_sr: cascade_gain(&ch.g_s, &ch.g_r, phase, l.source, l.receiver)?,
            h_sb: cascade_gain(&ch.g_s, &ch.g_b, phase, l.source, l.backscatter)?,
            h_br: cascade_gain(&ch.g_b, &ch.g_r, phase, l.backscatter, l.receiver)?,
            h_sw: cascade_gain(&ch.g_s, &ch.g_w, phase, l.source, l.warden)?,
            h_bw: cascade_gain(&ch.g_b, &ch.g_w, phase, l.backscatter, l.warden)?,
        })
    }

    /// |h_SB|²·|h_BR|², the double-reflection power gain toward R.
    pub fn backscatter_gain(&self) -> f64 {
        self.h_sb.norm_sqr() * self.h_br.norm_sqr()
    }
}

/// Rank-one Hermitian forms with v^H·G_ij·v = |g_i^H Θ g_j|² (no path loss),
/// plus their (M+1)-dimensional zero-padded versions Q_ij.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMatrices {
    pub g_sb: CMatrix,
    pub g_br: CMatrix,
    pub g_sr: CMatrix,
    pub q_sb: CMatrix,
    pub q_br: CMatrix,
    pub q_sr: CMatrix,
    /// Factors c with G = c·c^H.
    pub c_sb: CVector,
    pub c_br: CVector,
    pub c_sr: CVector,
}

fn factor(g_i: &CVector, g_j: &CVector) -> CVector {
    g_i.component_mul(&g_j.map(|z| z.conj()))
}

/// Embeds an M×M matrix in the top-left of an (M+1)×(M+1) zero matrix.
pub fn pad(g: &CMatrix) -> CMatrix {
    let n = g.nrows();
    let mut q = CMatrix::zeros(n + 1, n + 1);
    q.view_mut((0, 0), (n, n)).copy_from(g);
    q
}

pub fn build_lifted(ch: &ChannelRealization) -> LiftedMatrices {
    let c_sb = factor(&ch.g_s, &ch.g_b);
    let c_br = factor(&ch.g_b, &ch.g_r);
    let c_sr = factor(&ch.g_s, &ch.g_r);
    let g_sb = &c_sb * c_sb.adjoint();
    let g_br = &c_br * c_br.adjoint();
    let g_sr = &c_sr * c_sr.adjoint();
    LiftedMatrices { q_sb: pad(&g_sb), q_br: pad(&g_br), q_sr: pad(&g_sr), g_sb, g_br, g_sr, c_sb, c_br, c_sr }
}

/// v^H·G·v for Hermitian G, as a real number.
pub fn quad_form(g: &CMatrix, v: &CVector) -> f64 {
    v.dotc(&(g * v)).re
}
