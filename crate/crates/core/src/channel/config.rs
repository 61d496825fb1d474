use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Node positions in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub source: Point,
    pub backscatter: Point,
    pub receiver: Point,
    pub warden: Point,
    pub irs: Point,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            source: Point::new(0.0, 0.0),
            backscatter: Point::new(20.0, 0.0),
            receiver: Point::new(40.0, 0.0),
            warden: Point::new(45.0, 0.0),
            irs: Point::new(20.0, 25.0),
        }
    }
}

/// Log-distance path loss: intercept + slope·log10(d) − G_t − G_r (dB).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    pub intercept_db: f64,
    pub slope_db: f64,
    pub gain_tx_dbi: f64,
    pub gain_rx_dbi: f64,
}

impl PathLossModel {
    pub fn with_gains(gain_tx_dbi: f64, gain_rx_dbi: f64) -> Self {
        Self { intercept_db: 35.1, slope_db: 36.7, gain_tx_dbi, gain_rx_dbi }
    }

    pub fn db(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::Domain { what: "path loss distance", value: d });
        }
        Ok(self.intercept_db + self.slope_db * d.log10() - self.gain_tx_dbi - self.gain_rx_dbi)
    }
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self::with_gains(10.0, 10.0)
    }
}

pub fn path_loss_linear(d: f64, model: &PathLossModel) -> Result<f64> {
    Ok(10f64.powf(model.db(d)? / 10.0))
}

/// Every scalar of a scenario. Powers are in watts, rates in bit/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// IRS element count M.
    pub elements: usize,
    pub geometry: Geometry,
    pub rician_factor: f64,
    pub noise_power: f64,
    pub p_max: f64,
    /// Backscatter-to-primary symbol period ratio.
    pub eta: u32,
    pub eps_sic: f64,
    pub eps_c: f64,
    pub quadrature_order: usize,
    /// Initial curvature for the descent-lemma surrogate.
    pub lipschitz: f64,
    /// Relative objective change at which the outer optimizers stop.
    pub tol: f64,
    pub gain_tx_dbi: f64,
    pub gain_rx_dbi: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            elements: 10,
            geometry: Geometry::default(),
            rician_factor: 3.0,
            noise_power: 1e-11,
            p_max: 10f64.powf(-0.5),
            eta: 4,
            eps_sic: 2.0,
            eps_c: 0.5,
            quadrature_order: 5,
            lipschitz: 2.5e-3,
            tol: 1e-3,
            gain_tx_dbi: 10.0,
            gain_rx_dbi: 10.0,
        }
    }
}

/// Per-link linear path losses, indexed by the node at the far end of the IRS hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkLosses {
    pub source: f64,
    pub backscatter: f64,
    pub receiver: f64,
    pub warden: f64,
}

impl SystemConfig {
    /// Default parameters with 19 dBi antennas and the BD 2 m from the IRS:
    /// the cascaded links are strong enough that the rate constraints can be
    /// met with α < 1, which the default layout cannot do.
    pub fn calibrated(elements: usize) -> Self {
        let mut c = Self { elements, gain_tx_dbi: 19.0, gain_rx_dbi: 19.0, ..Self::default() };
        c.geometry.backscatter = Point::new(20.0, 23.0);
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if self.elements == 0 {
            return bad("elements must be at least 1");
        }
        if !(self.noise_power > 0.0) {
            return bad("noise_power must be positive");
        }
        if !(self.p_max > 0.0) {
            return bad("p_max must be positive");
        }
        if self.eta == 0 {
            return bad("eta must be at least 1");
        }
        if !(self.rician_factor >= 0.0) {
            return bad("rician_factor must be non-negative");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if !(self.lipschitz > 0.0) {
            return bad("lipschitz must be positive");
        }
        if self.quadrature_order == 0 {
            return bad("quadrature_order must be at least 1");
        }
        if !(self.eps_sic >= 0.0 && self.eps_c >= 0.0) {
            return bad("rate requirements must be non-negative");
        }
        let d = self.distances();
        if [d.0, d.1, d.2, d.3].iter().any(|&x| !(x > 0.0)) {
            return bad("a node coincides with the IRS");
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        1.0 / self.elements as f64
    }

    pub fn gamma_c(&self) -> f64 {
        self.eps_c.exp2() - 1.0
    }

    pub fn gamma_sic(&self) -> f64 {
        self.eps_sic.exp2() - 1.0
    }

    pub fn path_loss_model(&self) -> PathLossModel {
        PathLossModel::with_gains(self.gain_tx_dbi, self.gain_rx_dbi)
    }

    /// IRS distances to (S, BD, R, W).
    pub fn distances(&self) -> (f64, f64, f64, f64) {
        let g = &self.geometry;
        (
            g.source.distance(&g.irs),
            g.backscatter.distance(&g.irs),
            g.receiver.distance(&g.irs),
            g.warden.distance(&g.irs),
        )
    }

    pub fn losses(&self) -> Result<LinkLosses> {
        let m = self.path_loss_model();
        let (s, b, r, w) = self.distances();
        Ok(LinkLosses {
            source: path_loss_linear(s, &m)?,
            backscatter: path_loss_linear(b, &m)?,
            receiver: path_loss_linear(r, &m)?,
            warden: path_loss_linear(w, &m)?,
        })
    }
}

impl LinkLosses {
    /// L_S·L_W: attenuation of the S→IRS→W hop.
    pub fn l1(&self) -> f64 {
        self.source * self.warden
    }

    /// l1·L_B²: attenuation of the S→IRS→BD→IRS→W path.
    pub fn l2(&self) -> f64 {
        self.l1() * self.backscatter * self.backscatter
    }
}
