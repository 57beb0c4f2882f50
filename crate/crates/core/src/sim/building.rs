//! First-order RC thermal network with setpoint-tracking HVAC.

use crate::error::{check_dim, Error, Result};
use crate::sim::comfort::{compute_pmv, ComfortParams};
use crate::state::{Action, EnvironmentState, ZoneBuildingState};

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneParams {
    /// kWh/°C
    pub capacitance: f64,
    /// Zone to outdoor resistance, °C/kW.
    pub r_out: f64,
    /// kW thermal
    pub heat_capacity: f64,
    /// kW thermal
    pub cool_capacity: f64,
    /// Effective aperture, m²; solar gain in kW is `aperture * (direct + diffuse) / 1000`.
    pub solar_aperture: f64,
    /// Internal gain while the zone is occupied, kW.
    pub occupant_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingConfig {
    pub zones: Vec<ZoneParams>,
    /// Symmetric inter-zone resistance, °C/kW. `f64::INFINITY` means not adjacent.
    pub r_between: Vec<Vec<f64>>,
    pub heating_efficiency: f64,
    pub cooling_cop: f64,
    pub timestep_minutes: f64,
    /// Fraction of the indoor/outdoor humidity gap closed per step.
    pub rh_relaxation: f64,
    pub comfort: ComfortParams,
}

impl BuildingConfig {
    /// Five-zone single-floor office: four perimeter zones around a core.
    /// Zone 2 faces south and receives 1.5x the perimeter solar aperture.
    pub fn five_zone_office() -> Self {
        let perimeter = ZoneParams {
            capacitance: 3.0,
            r_out: 3.0,
            heat_capacity: 5.0,
            cool_capacity: 9.0,
            solar_aperture: 1.6,
            occupant_gain: 0.8,
        };
        let south = ZoneParams {
            solar_aperture: 2.4,
            ..perimeter.clone()
        };
        let core = ZoneParams {
            capacitance: 3.5,
            r_out: 5.0,
            solar_aperture: 0.4,
            ..perimeter.clone()
        };
        let zones = vec![perimeter.clone(), perimeter.clone(), south, perimeter, core];
        let inf = f64::INFINITY;
        let ring = 6.0; // neighbouring perimeter zones
        let to_core = 4.0;
        let r_between = vec![
            vec![inf, ring, inf, ring, to_core],
            vec![ring, inf, ring, inf, to_core],
            vec![inf, ring, inf, ring, to_core],
            vec![ring, inf, ring, inf, to_core],
            vec![to_core, to_core, to_core, to_core, inf],
        ];
        Self {
            zones,
            r_between,
            heating_efficiency: 0.9,
            cooling_cop: 3.0,
            timestep_minutes: 15.0,
            rh_relaxation: 0.1,
            comfort: ComfortParams::summer(),
        }
    }

    /// `n` identical, unconnected zones with the perimeter parameters.
    pub fn uniform(n: usize, zone: ZoneParams) -> Self {
        Self {
            zones: vec![zone; n],
            r_between: vec![vec![f64::INFINITY; n]; n],
            heating_efficiency: 0.9,
            cooling_cop: 3.0,
            timestep_minutes: 15.0,
            rh_relaxation: 0.1,
            comfort: ComfortParams::summer(),
        }
    }

    pub fn n_zones(&self) -> usize {
        self.zones.len()
    }

    pub fn timestep_hours(&self) -> f64 {
        self.timestep_minutes / 60.0
    }

    pub fn steps_per_day(&self) -> usize {
        (24.0 * 60.0 / self.timestep_minutes).round() as usize
    }

    /// Largest energy a zone can draw in one step, kWh.
    pub fn max_step_energy(&self, zone: usize) -> f64 {
        let z = &self.zones[zone];
        (z.heat_capacity / self.heating_efficiency + z.cool_capacity / self.cooling_cop)
            * self.timestep_hours()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_zones();
        if n == 0 {
            return Err(Error::Config("building has no zones".into()));
        }
        for (i, z) in self.zones.iter().enumerate() {
            let positive = [
                z.capacitance,
                z.r_out,
                z.heat_capacity,
                z.cool_capacity,
            ];
            if positive.iter().any(|v| !(*v > 0.0)) || z.solar_aperture < 0.0 || z.occupant_gain < 0.0 {
                return Err(Error::Config(format!("zone {i} has non-positive parameters")));
            }
        }
        check_dim(n, self.r_between.len())?;
        for i in 0..n {
            check_dim(n, self.r_between[i].len())?;
            for j in 0..n {
                let r = self.r_between[i][j];
                if r != self.r_between[j][i] || !(r > 0.0) {
                    return Err(Error::Config(format!("inter-zone resistance ({i},{j}) invalid")));
                }
            }
        }
        if !(self.heating_efficiency > 0.0 && self.cooling_cop > 0.0 && self.timestep_minutes > 0.0) {
            return Err(Error::Config("efficiencies and timestep must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.rh_relaxation) {
            return Err(Error::Config("rh relaxation outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Advances every zone by one timestep.
///
/// Each zone first computes the free-floating temperature from envelope,
/// inter-zone, solar and occupant flows. HVAC then supplies just enough
/// heating (or cooling) to reach the violated setpoint, clipped to capacity;
/// inside the deadband it stays off. `env` is the environment during the step.
pub fn step_zones(
    config: &BuildingConfig,
    zones: &[ZoneBuildingState],
    action: &Action,
    env: &EnvironmentState,
) -> Result<Vec<ZoneBuildingState>> {
    let n = config.n_zones();
    check_dim(n, zones.len())?;
    check_dim(n, action.n_zones())?;
    check_dim(n, env.n_zones())?;
    let dt = config.timestep_hours();
    let w = &env.weather;
    let irradiance = (w.direct_solar + w.diffuse_solar) / 1000.0;

    let mut next = Vec::with_capacity(n);
    for (i, (zone, p)) in zones.iter().zip(&config.zones).enumerate() {
        let t = zone.temp_in;
        let mut flux = (w.temp_out - t) / p.r_out + p.solar_aperture * irradiance;
        for (j, other) in zones.iter().enumerate() {
            let r = config.r_between[i][j];
            if j != i && r.is_finite() {
                flux += (other.temp_in - t) / r;
            }
        }
        if env.occupancy[i] {
            flux += p.occupant_gain;
        }
        let free = t + dt / p.capacitance * flux;
        let sp = action.setpoints[i];
        let (hvac, heat_energy, cool_energy) = if free < sp.heat {
            let q = ((sp.heat - free) * p.capacitance / dt).min(p.heat_capacity);
            (q, q * dt / config.heating_efficiency, 0.0)
        } else if free > sp.cool {
            let q = ((free - sp.cool) * p.capacitance / dt).min(p.cool_capacity);
            (-q, 0.0, q * dt / config.cooling_cop)
        } else {
            (0.0, 0.0, 0.0)
        };
        let temp_in = free + dt / p.capacitance * hvac;
        if !temp_in.is_finite() {
            return Err(Error::NonFiniteState { zone: i });
        }
        let rh_in = (zone.rh_in + config.rh_relaxation * (w.rh_out - zone.rh_in)).clamp(0.0, 1.0);
        let pmv = compute_pmv(temp_in, rh_in, &config.comfort)?;
        next.push(ZoneBuildingState {
            temp_in,
            rh_in,
            pmv,
            heat_energy,
            cool_energy,
        });
    }
    Ok(next)
}
