//! Fanger's Predicted Mean Vote (ISO 7730 steady-state model).

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 150;
const SURFACE_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanRadiant {
    /// Mean radiant temperature equals the air temperature.
    EqualsAir,
    /// Fixed offset from air temperature, °C.
    Offset(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComfortParams {
    /// met
    pub metabolic_rate: f64,
    /// clo
    pub clothing: f64,
    /// m/s
    pub air_velocity: f64,
    pub mean_radiant: MeanRadiant,
}

impl ComfortParams {
    /// Office activity in summer clothing.
    pub fn summer() -> Self {
        Self {
            metabolic_rate: 1.2,
            clothing: 0.5,
            air_velocity: 0.1,
            mean_radiant: MeanRadiant::EqualsAir,
        }
    }

    /// Office activity in winter clothing.
    pub fn winter() -> Self {
        Self {
            clothing: 1.0,
            ..Self::summer()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.metabolic_rate > 0.0 && self.clothing > 0.0 && self.air_velocity > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("comfort parameters must be positive: {self:?}")))
        }
    }
}

/// PMV with mean radiant temperature taken from `params`.
pub fn compute_pmv(t_air: f64, rh: f64, params: &ComfortParams) -> Result<f64> {
    if !(-10.0..=50.0).contains(&t_air) {
        return Err(Error::InvalidInput(format!("air temperature {t_air} °C outside [-10, 50]")));
    }
    if !(0.0..=1.0).contains(&rh) {
        return Err(Error::InvalidInput(format!("relative humidity {rh} outside [0, 1]")));
    }
    params.validate()?;
    let t_radiant = match params.mean_radiant {
        MeanRadiant::EqualsAir => t_air,
        MeanRadiant::Offset(d) => t_air + d,
    };
    pmv_iso7730(t_air, t_radiant, params.air_velocity, rh, params.metabolic_rate, params.clothing)
}

/// Full ISO 7730 equation set. `rh` is a fraction, activity in met, clothing in clo.
pub fn pmv_iso7730(t_air: f64, t_radiant: f64, velocity: f64, rh: f64, met: f64, clo: f64) -> Result<f64> {
    // water vapour partial pressure, Pa
    let pa = rh * 1000.0 * (16.6536 - 4030.183 / (t_air + 235.0)).exp();
    let icl = 0.155 * clo;
    let m = met * 58.15;
    let mw = m; // no external work
    let fcl = if icl <= 0.078 {
        1.0 + 1.29 * icl
    } else {
        1.05 + 0.645 * icl
    };
    let hcf = 12.1 * velocity.sqrt();
    let taa = t_air + 273.0;
    let tra = t_radiant + 273.0;

    // clothing surface temperature by damped fixed-point iteration, in units of 100 K
    let p1 = icl * fcl;
    let p2 = p1 * 3.96;
    let p3 = p1 * 100.0;
    let p4 = p1 * taa;
    let p5 = 308.7 - 0.028 * mw + p2 * (tra / 100.0).powi(4);
    let tcla = taa + (35.5 - t_air) / (3.5 * icl + 0.1);
    let mut xn = tcla / 100.0;
    let mut xf = tcla / 50.0;
    let mut hc = hcf;
    let mut iterations = 0;
    // 100 * |xn - xf| is the surface temperature change in kelvin
    while 100.0 * (xn - xf).abs() > SURFACE_TOLERANCE {
        if iterations == MAX_ITERATIONS {
            return Err(Error::PmvNotConverged { iterations });
        }
        xf = (xf + xn) / 2.0;
        let hcn = 2.38 * (100.0 * xf - taa).abs().powf(0.25);
        hc = hcf.max(hcn);
        xn = (p5 + p4 * hc - p2 * xf.powi(4)) / (100.0 + p3 * hc);
        iterations += 1;
    }
    let tcl = 100.0 * xn - 273.0;

    let skin_diffusion = 3.05e-3 * (5733.0 - 6.99 * mw - pa);
    let sweating = if mw > 58.15 { 0.42 * (mw - 58.15) } else { 0.0 };
    let latent_respiration = 1.7e-5 * m * (5867.0 - pa);
    let dry_respiration = 0.0014 * m * (34.0 - t_air);
    let radiation = 3.96 * fcl * (xn.powi(4) - (tra / 100.0).powi(4));
    let convection = fcl * hc * (tcl - t_air);

    let sensitivity = 0.303 * (-0.036 * m).exp() + 0.028;
    Ok(sensitivity
        * (mw
            - skin_diffusion
            - sweating
            - latent_respiration
            - dry_respiration
            - radiation
            - convection))
}
