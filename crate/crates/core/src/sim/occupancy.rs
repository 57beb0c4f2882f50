//! Calendar helpers and per-zone occupancy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Position of a step in the simulated week. Step 0 is Monday 00:00.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub step: usize,
    pub steps_per_day: usize,
}

impl SimClock {
    pub fn new(step: usize, steps_per_day: usize) -> Self {
        Self { step, steps_per_day }
    }

    pub fn day(&self) -> usize {
        self.step / self.steps_per_day
    }

    /// 0 = Monday.
    pub fn weekday(&self) -> usize {
        self.day() % 7
    }

    pub fn is_weekend(&self) -> bool {
        self.weekday() >= 5
    }

    /// Hour of day at the start of the step, in [0, 24).
    pub fn hour(&self) -> f64 {
        (self.step % self.steps_per_day) as f64 * 24.0 / self.steps_per_day as f64
    }

    pub fn offset(&self, steps: usize) -> Self {
        Self {
            step: self.step + steps,
            ..*self
        }
    }
}

/// Weekday occupancy intervals in hours, `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSchedule {
    pub weekday_hours: Vec<(f64, f64)>,
}

impl ZoneSchedule {
    fn occupied(&self, clock: &SimClock) -> bool {
        if clock.is_weekend() {
            return false;
        }
        let h = clock.hour();
        self.weekday_hours.iter().any(|&(s, e)| h >= s && h < e)
    }
}

/// Deterministic weekly schedule per zone, plus occasional evening sessions
/// (people working late) drawn from a seeded stream.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancySchedule {
    pub zones: Vec<ZoneSchedule>,
    /// Probability that a zone hosts an evening session on a given night.
    pub night_probability: f64,
    /// Earliest and latest evening session start, hours.
    pub night_start: (f64, f64),
    /// Session length range, hours.
    pub night_duration: (f64, f64),
}

impl OccupancySchedule {
    /// Office pattern for `n` zones: full-day offices, split-shift offices, a
    /// conference room and an extended-hours lab, cycled over the zones.
    pub fn office(n_zones: usize) -> Self {
        let patterns = [
            vec![(8.0, 18.0)],
            vec![(8.0, 12.0), (13.0, 17.0)],
            vec![(9.0, 17.0)],
            vec![(10.0, 12.0), (14.0, 16.0)],
            vec![(8.0, 19.0)],
        ];
        Self {
            zones: (0..n_zones)
                .map(|i| ZoneSchedule {
                    weekday_hours: patterns[i % patterns.len()].clone(),
                })
                .collect(),
            night_probability: 0.12,
            night_start: (19.0, 22.0),
            night_duration: (1.0, 3.0),
        }
    }

    pub fn always(n_zones: usize, occupied: bool) -> Self {
        Self {
            zones: vec![
                ZoneSchedule {
                    weekday_hours: if occupied { vec![(0.0, 24.0)] } else { Vec::new() },
                };
                n_zones
            ],
            night_probability: 0.0,
            night_start: (19.0, 22.0),
            night_duration: (1.0, 3.0),
        }
    }

    pub fn n_zones(&self) -> usize {
        self.zones.len()
    }

    /// Per-step flags for `n_steps` steps. The same seed yields the same trace.
    pub fn realize(&self, n_steps: usize, steps_per_day: usize, seed: u64) -> Vec<Vec<bool>> {
        let mut flags: Vec<Vec<bool>> = (0..n_steps)
            .map(|step| {
                let clock = SimClock::new(step, steps_per_day);
                self.zones.iter().map(|z| z.occupied(&clock)).collect()
            })
            .collect();
        if self.night_probability > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let steps_per_hour = steps_per_day as f64 / 24.0;
            let days = n_steps.div_ceil(steps_per_day);
            for day in 0..days {
                for zone in 0..self.n_zones() {
                    // draws happen whether or not a session occurs, so traces of
                    // different lengths agree on their common prefix
                    let happens = rng.random_bool(self.night_probability);
                    let start_h = rng.random_range(self.night_start.0..=self.night_start.1);
                    let dur_h = rng.random_range(self.night_duration.0..=self.night_duration.1);
                    if !happens {
                        continue;
                    }
                    let start = day * steps_per_day + (start_h * steps_per_hour).round() as usize;
                    let len = (dur_h * steps_per_hour).round() as usize;
                    for step in start..(start + len).min(n_steps) {
                        flags[step][zone] = true;
                    }
                }
            }
        }
        flags
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_arithmetic() {
        let c = SimClock::new(96 * 5 + 30, 96);
        assert_eq!(c.weekday(), 5);
        assert!(c.is_weekend());
        assert_eq!(c.hour(), 7.5);
        assert!(!SimClock::new(96 * 7, 96).is_weekend());
    }

    #[test]
    fn weekday_office_hours() {
        let s = OccupancySchedule {
            night_probability: 0.0,
            ..OccupancySchedule::office(5)
        };
        let flags = s.realize(96 * 7, 96, 0);
        // Monday 09:00
        assert_eq!(flags[36], vec![true, true, true, false, true]);
        // Monday 12:30: split-shift zone at lunch, meeting room empty
        assert_eq!(flags[50], vec![true, false, true, false, true]);
        // Saturday noon
        assert!(flags[96 * 5 + 48].iter().all(|&o| !o));
        // Monday 03:00
        assert!(flags[12].iter().all(|&o| !o));
    }

    #[test]
    fn night_sessions_are_seeded() {
        let s = OccupancySchedule::office(5);
        let a = s.realize(2976, 96, 3);
        assert_eq!(a, s.realize(2976, 96, 3));
        assert_ne!(a, s.realize(2976, 96, 4));
        let late: usize = a
            .iter()
            .enumerate()
            .filter(|(i, _)| (i % 96) >= 80)
            .map(|(_, f)| f.iter().filter(|&&o| o).count())
            .sum();
        assert!(late > 0);
        let prefix = s.realize(500, 96, 3);
        assert_eq!(&a[..500], &prefix[..]);
    }
}
