//! Building, environment and action vectors.
//!
//! Flattened layout of a [`FullState`] (the order is frozen; model files
//! carry a hash of it):
//!
//! ```text
//! zone 0: temp_in rh_in pmv heat_energy cool_energy
//! zone 1: ...
//! ...
//! env:    temp_out rh_out diffuse_solar direct_solar incident_angle wind_speed wind_dir
//! occ:    occupancy_0 .. occupancy_{N-1}
//! ```
//!
//! For N zones that is `5N + 7 + N` values (37 for the five-zone building).
//! Actions flatten as `heat_sp_0 cool_sp_0 heat_sp_1 cool_sp_1 ...`.

use crate::error::{check_dim, Error, Result};

pub const ZONE_FIELDS: [&str; 5] = ["temp_in", "rh_in", "pmv", "heat_energy", "cool_energy"];
pub const WEATHER_FIELDS: [&str; 7] = [
    "temp_out",
    "rh_out",
    "diffuse_solar",
    "direct_solar",
    "incident_angle",
    "wind_speed",
    "wind_dir",
];
pub const ZONE_DIM: usize = ZONE_FIELDS.len();
pub const WEATHER_DIM: usize = WEATHER_FIELDS.len();
pub const ACTION_PER_ZONE: usize = 2;

/// Offset of the indoor temperature inside one zone block.
pub const TEMP_OFFSET: usize = 0;
pub const RH_OFFSET: usize = 1;
pub const PMV_OFFSET: usize = 2;
pub const HEAT_OFFSET: usize = 3;
pub const COOL_OFFSET: usize = 4;

pub fn building_dim(n_zones: usize) -> usize {
    ZONE_DIM * n_zones
}

pub fn env_dim(n_zones: usize) -> usize {
    WEATHER_DIM + n_zones
}

pub fn state_dim(n_zones: usize) -> usize {
    building_dim(n_zones) + env_dim(n_zones)
}

pub fn action_dim(n_zones: usize) -> usize {
    ACTION_PER_ZONE * n_zones
}

pub fn fahrenheit_to_celsius(f: f64) -> f64 {
    (f - 32.0) * 5.0 / 9.0
}

/// Column names of a flattened state, in flattening order.
pub fn state_feature_names(n_zones: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(state_dim(n_zones));
    for z in 0..n_zones {
        for f in ZONE_FIELDS {
            names.push(format!("zone{z}_{f}"));
        }
    }
    names.extend(WEATHER_FIELDS.iter().map(|f| f.to_string()));
    for z in 0..n_zones {
        names.push(format!("zone{z}_occupied"));
    }
    names
}

pub fn action_feature_names(n_zones: usize) -> Vec<String> {
    (0..n_zones)
        .flat_map(|z| [format!("zone{z}_heat_sp"), format!("zone{z}_cool_sp")])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZoneBuildingState {
    /// °C
    pub temp_in: f64,
    /// Relative humidity as a fraction in [0, 1].
    pub rh_in: f64,
    pub pmv: f64,
    /// kWh consumed during the step that produced this state.
    pub heat_energy: f64,
    pub cool_energy: f64,
}

impl ZoneBuildingState {
    pub fn to_array(&self) -> [f64; ZONE_DIM] {
        [
            self.temp_in,
            self.rh_in,
            self.pmv,
            self.heat_energy,
            self.cool_energy,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            temp_in: v[TEMP_OFFSET],
            rh_in: v[RH_OFFSET],
            pmv: v[PMV_OFFSET],
            heat_energy: v[HEAT_OFFSET],
            cool_energy: v[COOL_OFFSET],
        }
    }

    pub fn total_energy(&self) -> f64 {
        self.heat_energy + self.cool_energy
    }
}

/// Exogenous weather at one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WeatherSample {
    pub temp_out: f64,
    pub rh_out: f64,
    /// W/m²
    pub diffuse_solar: f64,
    /// W/m²
    pub direct_solar: f64,
    /// degrees
    pub incident_angle: f64,
    /// m/s
    pub wind_speed: f64,
    /// degrees
    pub wind_dir: f64,
}

impl WeatherSample {
    pub fn to_array(&self) -> [f64; WEATHER_DIM] {
        [
            self.temp_out,
            self.rh_out,
            self.diffuse_solar,
            self.direct_solar,
            self.incident_angle,
            self.wind_speed,
            self.wind_dir,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            temp_out: v[0],
            rh_out: v[1],
            diffuse_solar: v[2],
            direct_solar: v[3],
            incident_angle: v[4],
            wind_speed: v[5],
            wind_dir: v[6],
        }
    }
}

/// Weather plus the per-zone occupancy flags. Neither is affected by control.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnvironmentState {
    pub weather: WeatherSample,
    pub occupancy: Vec<bool>,
}

impl EnvironmentState {
    pub fn n_zones(&self) -> usize {
        self.occupancy.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(env_dim(self.n_zones()));
        self.write_into(&mut v);
        v
    }

    pub fn write_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.weather.to_array());
        out.extend(self.occupancy.iter().map(|&o| if o { 1.0 } else { 0.0 }));
    }
}

/// Heating and cooling setpoints of one zone, °C.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoint {
    pub heat: f64,
    pub cool: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub setpoints: Vec<Setpoint>,
}

impl Action {
    pub fn n_zones(&self) -> usize {
        self.setpoints.len()
    }

    pub fn uniform(n_zones: usize, heat: f64, cool: f64) -> Self {
        Self {
            setpoints: vec![Setpoint { heat, cool }; n_zones],
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.setpoints.iter().flat_map(|s| [s.heat, s.cool]).collect()
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if !v.len().is_multiple_of(ACTION_PER_ZONE) {
            return Err(Error::InvalidInput(format!(
                "action vector of odd length {}",
                v.len()
            )));
        }
        Ok(Self {
            setpoints: v
                .chunks_exact(ACTION_PER_ZONE)
                .map(|c| Setpoint {
                    heat: c[0],
                    cool: c[1],
                })
                .collect(),
        })
    }
}

/// Setpoint limits. Defaults are 65–72 °F heating and 72–80 °F cooling, which
/// also guarantees `heat <= cool` whenever both lie inside their ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionBounds {
    pub heat: (f64, f64),
    pub cool: (f64, f64),
}

impl Default for ActionBounds {
    fn default() -> Self {
        Self {
            heat: (fahrenheit_to_celsius(65.0), fahrenheit_to_celsius(72.0)),
            cool: (fahrenheit_to_celsius(72.0), fahrenheit_to_celsius(80.0)),
        }
    }
}

impl ActionBounds {
    /// `(low, high)` per flattened action dimension.
    pub fn per_dim(&self, n_zones: usize) -> Vec<(f64, f64)> {
        (0..n_zones).flat_map(|_| [self.heat, self.cool]).collect()
    }

    pub fn clamp(&self, action: &Action) -> Action {
        Action {
            setpoints: action
                .setpoints
                .iter()
                .map(|s| {
                    let heat = s.heat.clamp(self.heat.0, self.heat.1);
                    let cool = s.cool.clamp(self.cool.0, self.cool.1).max(heat);
                    Setpoint { heat, cool }
                })
                .collect(),
        }
    }

    pub fn contains(&self, action: &Action) -> bool {
        const EPS: f64 = 1e-9;
        action.setpoints.iter().all(|s| {
            s.heat >= self.heat.0 - EPS
                && s.heat <= self.heat.1 + EPS
                && s.cool >= self.cool.0 - EPS
                && s.cool <= self.cool.1 + EPS
                && s.heat <= s.cool + EPS
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub zones: Vec<ZoneBuildingState>,
    pub env: EnvironmentState,
}

impl FullState {
    pub fn n_zones(&self) -> usize {
        self.zones.len()
    }

    /// The controllable part only: `5N` values, zone-major.
    pub fn building_vec(&self) -> Vec<f64> {
        self.zones.iter().flat_map(|z| z.to_array()).collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.building_vec();
        v.reserve(env_dim(self.n_zones()));
        self.env.write_into(&mut v);
        v
    }

    pub fn unflatten(n_zones: usize, v: &[f64]) -> Result<Self> {
        check_dim(state_dim(n_zones), v.len())?;
        let b = building_dim(n_zones);
        let zones = v[..b]
            .chunks_exact(ZONE_DIM)
            .map(ZoneBuildingState::from_slice)
            .collect();
        let weather = WeatherSample::from_slice(&v[b..b + WEATHER_DIM]);
        let occupancy = v[b + WEATHER_DIM..]
            .iter()
            .map(|&o| {
                if o == 0.0 {
                    Ok(false)
                } else if o == 1.0 {
                    Ok(true)
                } else {
                    Err(Error::InvalidInput(format!("occupancy flag {o} is not 0/1")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            zones,
            env: EnvironmentState { weather, occupancy },
        })
    }

    pub fn with_building_vec(&self, building: &[f64], env: EnvironmentState) -> Self {
        Self {
            zones: building
                .chunks_exact(ZONE_DIM)
                .map(ZoneBuildingState::from_slice)
                .collect(),
            env,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: FullState,
    pub action: Action,
    pub next_state: FullState,
    pub step: usize,
}
