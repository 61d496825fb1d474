//! Descent-lemma minorant of Γ(v) = (vᴴG_SB v)(vᴴG_BR v) and the Taylor bound on χ.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{quad_form, CMatrix, CVector, PhaseProfile, C64};
use crate::sdp::trace_product;
use crate::{Error, Result};

/// (vᴴG_SB v)(vᴴG_BR v).
pub fn gamma(v: &CVector, g_sb: &CMatrix, g_br: &CMatrix) -> f64 {
    quad_form(g_sb, v) * quad_form(g_br, v)
}

/// Γ(v) ≥ Γ(v₀) + Re{∇Γ(v₀)ᴴ(v − v₀)} − (L/2)‖v − v₀‖², written on the lifted
/// matrix V = [v; 1][v; 1]ᴴ as (L/2)·Tr(U·V) + constant.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub v0: CVector,
    pub w_mat: CMatrix,
    pub u: CMatrix,
    pub constant: f64,
    pub lipschitz: f64,
    pub gamma0: f64,
    /// Largest |Tr-form − lemma form| seen for the off-the-shelf block signs.
    pub discrepancy: f64,
    /// True when U and the constant had to be rebuilt from the lemma form.
    pub rebuilt: bool,
}

const VALIDATION_SAMPLES: usize = 100;
const VALIDATION_SEED: u64 = 0x5eed_0f_1e44a;

impl Surrogate {
    /// 2·W·v₀.
    pub fn gradient(&self) -> CVector {
        &self.w_mat * &self.v0 * C64::new(2.0, 0.0)
    }

    /// Lemma form at any v.
    pub fn value(&self, v: &CVector) -> f64 {
        let d = v - &self.v0;
        self.gamma0 + self.gradient().dotc(&d).re - 0.5 * self.lipschitz * d.norm_squared()
    }

    /// (L/2)·Tr(U·V) + constant.
    pub fn trace_value(&self, lifted: &CMatrix) -> f64 {
        0.5 * self.lipschitz * trace_product(&self.u, lifted) + self.constant
    }

    /// Scale against which surrogate/Γ agreement is judged.
    pub fn scale(&self) -> f64 {
        1.0 + self.gamma0.abs() + self.lipschitz * self.v0.len() as f64
    }

    /// Whether the surrogate stays below Γ at every given point.
    pub fn is_minorant(&self, points: &[CVector], g_sb: &CMatrix, g_br: &CMatrix) -> bool {
        let slack = 1e-9 * self.scale();
        points.iter().all(|v| self.value(v) <= gamma(v, g_sb, g_br) + slack)
    }
}

/// Curvature above which the surrogate at v₀ is a minorant of Γ on all of ℂᴹ.
///
/// With x = c_sbᴴv, y = c_brᴴv and z₀ = x₀y₀, the Taylor remainder of
/// Γ = |xy|² is 2Re(z̄₀·δx·δy) + |δ(xy)|² ≥ −2√Γ₀·|dᵀSd|, where S is the
/// symmetrized conj(c_sb)·conj(c_br)ᵀ. Its largest Takagi value is
/// (‖c_sb‖‖c_br‖ + |c_brᴴc_sb|)/2, and both norms follow from G = c·cᴴ.
pub fn certified_lipschitz(v0: &CVector, g_sb: &CMatrix, g_br: &CMatrix) -> f64 {
    let norms = (g_sb.trace().re * g_br.trace().re).max(0.0).sqrt();
    let overlap = (g_sb * g_br).trace().re.max(0.0).sqrt();
    2.0 * gamma(v0, g_sb, g_br).sqrt() * (norms + overlap)
}

/// Doubles `start` until the surrogate at v₀ passes the sampled check and, when
/// `certify` is set, also clears [`certified_lipschitz`].
pub fn backtracked_lipschitz(
    v0: &CVector,
    g_sb: &CMatrix,
    g_br: &CMatrix,
    start: f64,
    samples: &[CVector],
    certify: bool,
) -> Result<f64> {
    let cert = if certify { certified_lipschitz(v0, g_sb, g_br) } else { 0.0 };
    let mut l = start;
    while l.is_finite() && (l < cert || !build_surrogate(v0, g_sb, g_br, l)?.is_minorant(samples, g_sb, g_br)) {
        l *= 2.0;
    }
    Ok(l)
}

fn block_u(v0: &CVector, w_mat: &CMatrix, lipschitz: f64, sign: f64) -> CMatrix {
    let m = v0.len();
    let off = (w_mat * v0 * C64::new(2.0 / lipschitz, 0.0) + v0) * C64::new(sign, 0.0);
    let mut u = CMatrix::zeros(m + 1, m + 1);
    for k in 0..m {
        u[(k, k)] = C64::new(-sign, 0.0);
        u[(k, m)] = off[k];
        u[(m, k)] = off[k].conj();
    }
    u
}

/// Builds the surrogate at v₀. The commonly quoted block form
/// U = [[I, −(2/L)Wv₀ − v₀], [·ᴴ, 0]] is checked against the lemma on random
/// unit-modulus points first; it has the opposite sign of the lemma, so in
/// practice U = [[−I, (2/L)Wv₀ + v₀], [·ᴴ, 0]] is what gets used.
pub fn build_surrogate(v0: &CVector, g_sb: &CMatrix, g_br: &CMatrix, lipschitz: f64) -> Result<Surrogate> {
    if !(lipschitz > 0.0) {
        return Err(Error::Domain { what: "surrogate: lipschitz", value: lipschitz });
    }
    if let Some(z) = v0.iter().find(|z| (z.norm() - 1.0).abs() > 1e-9) {
        return Err(Error::Domain { what: "surrogate: anchor modulus", value: z.norm() });
    }
    let m = v0.len();
    let a = quad_form(g_sb, v0);
    let b = quad_form(g_br, v0);
    let gsb_v = g_sb * v0;
    let gbr_v = g_br * v0;
    let w_mat = &gsb_v * gbr_v.adjoint() + &gbr_v * gsb_v.adjoint();
    let gamma0 = a * b;
    // vᴴWv at v₀ is 2Γ(v₀), and ‖v₀‖² = M on the unit-modulus set.
    let constant = gamma0 - 2.0 * (2.0 * gamma0) - 0.5 * lipschitz * m as f64;
    let mut s = Surrogate {
        v0: v0.clone(),
        u: block_u(v0, &w_mat, lipschitz, -1.0),
        w_mat,
        constant,
        lipschitz,
        gamma0,
        discrepancy: 0.0,
        rebuilt: false,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
    let samples: Vec<PhaseProfile> = (0..VALIDATION_SAMPLES).map(|_| PhaseProfile::random(m, &mut rng)).collect();
    let max_gap =
        |s: &Surrogate| samples.iter().map(|p| (s.trace_value(&p.lifted()) - s.value(&p.v)).abs()).fold(0.0, f64::max);
    s.discrepancy = max_gap(&s);
    let tol = 1e-8 * s.scale();
    if s.discrepancy > tol {
        s.u = block_u(v0, &s.w_mat, lipschitz, 1.0);
        s.rebuilt = true;
        let residual = max_gap(&s);
        if residual > tol {
            return Err(Error::Degenerate(format!(
                "surrogate trace form disagrees with the descent lemma by {residual:e}"
            )));
        }
    }
    Ok(s)
}

/// √((1+γ_SIC)σ₀⁴ − 4σ₀²p̂·t).
pub fn chi(trace_val: f64, p_hat: f64, sigma2: f64, gamma_sic: f64) -> Result<f64> {
    let arg = sigma2 * sigma2 * (1.0 + gamma_sic) - 4.0 * sigma2 * p_hat * trace_val;
    if !(arg > 0.0) {
        return Err(Error::Domain { what: "chi: low-regime radicand", value: arg });
    }
    Ok(arg.sqrt())
}

/// First-order upper bound of the concave χ at `trace_val`, expanded at `trace_anchor`.
pub fn taylor_chi_upper(trace_val: f64, trace_anchor: f64, p_hat: f64, sigma2: f64, gamma_sic: f64) -> Result<f64> {
    let c0 = chi(trace_anchor, p_hat, sigma2, gamma_sic)?;
    Ok(c0 - 4.0 * sigma2 * p_hat * (trace_val - trace_anchor) / (2.0 * c0))
}
