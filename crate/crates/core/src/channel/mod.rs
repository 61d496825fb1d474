//! Scenario geometry, path loss, Rician channel sampling and the lifted
//! quadratic forms used by the phase optimizers.

mod config;
mod realization;

pub use config::{path_loss_linear, Geometry, LinkLosses, PathLossModel, Point, SystemConfig};
pub use realization::{
    build_lifted, cascade_gain, pad, quad_form, rician_entry, rician_vector, sample_channels, CascadeGains,
    ChannelRealization, LiftedMatrices, PhaseProfile,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}
