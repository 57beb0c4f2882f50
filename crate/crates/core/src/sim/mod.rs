pub mod building;
pub mod comfort;
pub mod episode;
pub mod occupancy;
pub mod weather;

pub use building::{step_zones, BuildingConfig, ZoneParams};
pub use comfort::{compute_pmv, ComfortParams, MeanRadiant};
pub use episode::{rollout_episode, rollout_steps, ControlContext, Controller, EpisodeTrace, Simulator};
pub use occupancy::{OccupancySchedule, SimClock, ZoneSchedule};
pub use weather::{load_weather_csv, synthesize_weather, WeatherProfile, WeatherSeries};
