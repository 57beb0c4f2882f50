use crate::error::{check_dim, Result};
use crate::norm::MinMaxBounds;
use crate::sim::building::BuildingConfig;
use crate::state::{ZoneBuildingState, COOL_OFFSET, HEAT_OFFSET, PMV_OFFSET, ZONE_DIM};

/// Comfort/energy trade-off of the per-step reward.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardConfig {
    pub rho_occupied: f64,
    pub rho_unoccupied: f64,
    pub pmv_bounds: MinMaxBounds,
    /// Per zone, `(0, max kWh per step)`.
    pub energy_bounds: Vec<MinMaxBounds>,
}

impl RewardConfig {
    pub fn for_building(config: &BuildingConfig) -> Result<Self> {
        Ok(Self {
            rho_occupied: 4.0,
            rho_unoccupied: 0.1,
            pmv_bounds: MinMaxBounds::new(0.0, 3.0)?,
            energy_bounds: (0..config.n_zones())
                .map(|z| MinMaxBounds::new(0.0, config.max_step_energy(z)))
                .collect::<Result<_>>()?,
        })
    }

    pub fn n_zones(&self) -> usize {
        self.energy_bounds.len()
    }

    fn zone_penalty(&self, zone: usize, pmv: f64, energy: f64, occupied: bool) -> f64 {
        let rho = if occupied {
            self.rho_occupied
        } else {
            self.rho_unoccupied
        };
        rho * self.pmv_bounds.normalize(pmv.abs()) + self.energy_bounds[zone].normalize(energy)
    }

    /// Same as [`reward`] on a flattened building-state vector (`5N` values).
    pub fn reward_from_building_vec(&self, building: &[f64], occupancy: &[bool]) -> f64 {
        let mut penalty = 0.0;
        for (i, z) in building.chunks_exact(ZONE_DIM).enumerate() {
            penalty += self.zone_penalty(i, z[PMV_OFFSET], z[HEAT_OFFSET] + z[COOL_OFFSET], occupancy[i]);
        }
        -penalty
    }
}

/// `R = -Σ_i (ρ_i · Norm(|PMV_i|) + Norm(E_i))`, with `ρ_i` picked by the
/// zone's occupancy and `E_i` its heating plus cooling energy.
pub fn reward(zones: &[ZoneBuildingState], occupancy: &[bool], cfg: &RewardConfig) -> Result<f64> {
    check_dim(cfg.n_zones(), zones.len())?;
    check_dim(cfg.n_zones(), occupancy.len())?;
    Ok(-zones
        .iter()
        .zip(occupancy)
        .enumerate()
        .map(|(i, (z, &occ))| cfg.zone_penalty(i, z.pmv, z.total_energy(), occ))
        .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_with_energy_max(max: f64, n: usize) -> RewardConfig {
        RewardConfig {
            rho_occupied: 4.0,
            rho_unoccupied: 0.1,
            pmv_bounds: MinMaxBounds::new(0.0, 3.0).unwrap(),
            energy_bounds: vec![MinMaxBounds::new(0.0, max).unwrap(); n],
        }
    }

    fn zone(pmv: f64, heat: f64, cool: f64) -> ZoneBuildingState {
        ZoneBuildingState {
            temp_in: 22.0,
            rh_in: 0.5,
            pmv,
            heat_energy: heat,
            cool_energy: cool,
        }
    }

    #[test]
    fn neutral_and_idle_is_zero() {
        let cfg = cfg_with_energy_max(1.0, 3);
        assert_eq!(reward(&[zone(0.0, 0.0, 0.0); 3], &[true, false, true], &cfg).unwrap(), 0.0);
    }

    #[test]
    fn occupied_and_unoccupied_examples() {
        // Norm(|PMV|) = 1.5/3 = 0.5, Norm(E) = 0.2
        let cfg = cfg_with_energy_max(1.0, 1);
        let z = [zone(-1.5, 0.15, 0.05)];
        let occupied = reward(&z, &[true], &cfg).unwrap();
        assert!((occupied + 2.2).abs() < 1e-12, "{occupied}");
        let empty = reward(&z, &[false], &cfg).unwrap();
        assert!((empty + 0.25).abs() < 1e-12, "{empty}");
    }

    #[test]
    fn vector_form_matches() {
        let cfg = cfg_with_energy_max(0.8, 2);
        let zones = [zone(0.4, 0.1, 0.0), zone(-2.0, 0.0, 0.3)];
        let v: Vec<f64> = zones.iter().flat_map(|z| z.to_array()).collect();
        let occ = [true, false];
        assert_eq!(
            reward(&zones, &occ, &cfg).unwrap(),
            cfg.reward_from_building_vec(&v, &occ)
        );
    }

    #[test]
    fn building_energy_bounds() {
        let b = BuildingConfig::five_zone_office();
        let cfg = RewardConfig::for_building(&b).unwrap();
        let z = &b.zones[0];
        let expected = (z.heat_capacity / 0.9 + z.cool_capacity / 3.0) * 0.25;
        assert!((cfg.energy_bounds[0].max() - expected).abs() < 1e-12);
    }
}
