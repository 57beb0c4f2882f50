//! Weather series: synthetic seasonal profiles and CSV ingestion.

use std::f64::consts::PI;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::sim::comfort::ComfortParams;
use crate::state::WeatherSample;

pub const STEP_MINUTES: f64 = 15.0;
pub const STEPS_PER_DAY: usize = 96;
/// One 31-day month of 15-minute steps.
pub const STEPS_PER_MONTH: usize = 31 * STEPS_PER_DAY;

pub const CSV_COLUMNS: [&str; 8] = [
    "step",
    "t_out_c",
    "rh_out",
    "diffuse_wm2",
    "direct_wm2",
    "incident_deg",
    "wind_ms",
    "wind_dir_deg",
];

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    pub step_minutes: f64,
    pub samples: Vec<WeatherSample>,
}

impl WeatherSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample at `step`; steps past the end hold the last sample.
    pub fn at(&self, step: usize) -> WeatherSample {
        self.samples[step.min(self.samples.len() - 1)]
    }

    pub fn slice(&self, start: usize, len: usize) -> Self {
        Self {
            step_minutes: self.step_minutes,
            samples: self.samples[start..start + len].to_vec(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "{}", CSV_COLUMNS.join(",")).map_err(io)?;
        for (i, s) in self.samples.iter().enumerate() {
            let a = s.to_array();
            writeln!(w, "{i},{},{},{},{},{},{},{}", a[0], a[1], a[2], a[3], a[4], a[5], a[6]).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeatherProfile {
    FresnoJan,
    FresnoJul,
    ChicagoJan,
    ChicagoJul,
}

impl FromStr for WeatherProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fresno_jan" => Ok(Self::FresnoJan),
            "fresno_jul" => Ok(Self::FresnoJul),
            "chicago_jan" => Ok(Self::ChicagoJan),
            "chicago_jul" => Ok(Self::ChicagoJul),
            other => Err(Error::UnknownProfile(other.to_string())),
        }
    }
}

impl fmt::Display for WeatherProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FresnoJan => "fresno_jan",
            Self::FresnoJul => "fresno_jul",
            Self::ChicagoJan => "chicago_jan",
            Self::ChicagoJul => "chicago_jul",
        })
    }
}

struct Climate {
    /// Hard limits of the series, °C.
    range: (f64, f64),
    /// Typical daily low and high, °C.
    low: f64,
    high: f64,
    /// Day-to-day standard deviation of the daily mean, °C.
    day_jitter: f64,
    rh_mean: f64,
    sunrise: f64,
    sunset: f64,
    direct_peak: f64,
    diffuse_peak: f64,
    max_elevation: f64,
    wind_mean: f64,
}

impl WeatherProfile {
    pub const ALL: [WeatherProfile; 4] = [
        Self::FresnoJan,
        Self::FresnoJul,
        Self::ChicagoJan,
        Self::ChicagoJul,
    ];

    /// Hard temperature limits of the profile, °C.
    pub fn temperature_range(&self) -> (f64, f64) {
        self.climate().range
    }

    pub fn is_summer(&self) -> bool {
        matches!(self, Self::FresnoJul | Self::ChicagoJul)
    }

    pub fn comfort(&self) -> ComfortParams {
        if self.is_summer() {
            ComfortParams::summer()
        } else {
            ComfortParams::winter()
        }
    }

    fn climate(&self) -> Climate {
        match self {
            Self::FresnoJul => Climate {
                range: (15.0, 42.0),
                low: 20.0,
                high: 37.0,
                day_jitter: 2.0,
                rh_mean: 0.35,
                sunrise: 5.75,
                sunset: 20.25,
                direct_peak: 820.0,
                diffuse_peak: 110.0,
                max_elevation: 75.0,
                wind_mean: 3.0,
            },
            Self::FresnoJan => Climate {
                range: (-1.0, 18.0),
                low: 3.0,
                high: 13.0,
                day_jitter: 2.0,
                rh_mean: 0.75,
                sunrise: 7.2,
                sunset: 17.1,
                direct_peak: 520.0,
                diffuse_peak: 80.0,
                max_elevation: 32.0,
                wind_mean: 2.0,
            },
            Self::ChicagoJan => Climate {
                range: (-20.0, 15.0),
                low: -9.0,
                high: -1.0,
                day_jitter: 5.0,
                rh_mean: 0.7,
                sunrise: 7.3,
                sunset: 16.6,
                direct_peak: 420.0,
                diffuse_peak: 70.0,
                max_elevation: 26.0,
                wind_mean: 5.0,
            },
            Self::ChicagoJul => Climate {
                range: (15.0, 40.0),
                low: 20.0,
                high: 30.0,
                day_jitter: 3.0,
                rh_mean: 0.65,
                sunrise: 5.4,
                sunset: 20.5,
                direct_peak: 740.0,
                diffuse_peak: 120.0,
                max_elevation: 70.0,
                wind_mean: 4.0,
            },
        }
    }
}

/// Daily shape in [-1, 1]: minimum at 05:00, maximum at 15:00.
fn diurnal_shape(hour: f64) -> f64 {
    if (5.0..15.0).contains(&hour) {
        -(PI * (hour - 5.0) / 10.0).cos()
    } else {
        let since_peak = if hour >= 15.0 { hour - 15.0 } else { hour + 9.0 };
        (PI * since_peak / 14.0).cos()
    }
}

/// Daily sinusoid plus seeded day-level and step-level noise, clipped to the
/// profile's temperature range. Solar terms follow a daytime half-sinusoid.
pub fn synthesize_weather(profile: WeatherProfile, months: usize, seed: u64) -> Result<WeatherSeries> {
    if months == 0 {
        return Err(Error::InvalidInput("months must be at least 1".into()));
    }
    let c = profile.climate();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let days = months * STEPS_PER_MONTH / STEPS_PER_DAY;
    let mean = 0.5 * (c.low + c.high);
    let amp = 0.5 * (c.high - c.low);
    let mut samples = Vec::with_capacity(days * STEPS_PER_DAY);
    let mut temp_noise = 0.0;
    let mut wind = c.wind_mean;
    let mut wind_dir: f64 = rng.random_range(0.0..360.0);
    let mut day_offset = 0.0;
    for _day in 0..days {
        // persistent synoptic anomaly
        day_offset = 0.6 * day_offset + 0.8 * c.day_jitter * unit.sample(&mut rng);
        let day_amp = amp * rng.random_range(0.8..1.1);
        let clearness: f64 = rng.random_range(0.65..1.0);
        for k in 0..STEPS_PER_DAY {
            let hour = k as f64 * STEP_MINUTES / 60.0;
            temp_noise = 0.9 * temp_noise + 0.15 * unit.sample(&mut rng);
            let temp_out = (mean + day_offset + day_amp * diurnal_shape(hour) + temp_noise)
                .clamp(c.range.0, c.range.1);
            let rh_out = (c.rh_mean - 0.02 * (temp_out - mean) + 0.03 * unit.sample(&mut rng)).clamp(0.05, 1.0);

            let daylight = c.sunset - c.sunrise;
            let sun = if hour > c.sunrise && hour < c.sunset {
                (PI * (hour - c.sunrise) / daylight).sin()
            } else {
                0.0
            };
            let direct_solar = c.direct_peak * clearness * sun;
            let diffuse_solar = c.diffuse_peak * (0.6 + 0.4 * (1.0 - clearness)) * sun;
            let incident_angle = 90.0 - c.max_elevation * sun;

            wind = (wind + 0.2 * (c.wind_mean - wind) + 0.4 * unit.sample(&mut rng)).max(0.0);
            wind_dir = (wind_dir + 8.0 * unit.sample(&mut rng)).rem_euclid(360.0);
            samples.push(WeatherSample {
                temp_out,
                rh_out,
                diffuse_solar,
                direct_solar,
                incident_angle,
                wind_speed: wind,
                wind_dir,
            });
        }
    }
    Ok(WeatherSeries {
        step_minutes: STEP_MINUTES,
        samples,
    })
}

/// Reads a weather CSV with the header
/// `step,t_out_c,rh_out,diffuse_wm2,direct_wm2,incident_deg,wind_ms,wind_dir_deg`.
/// Steps must start anywhere and increase by exactly one per row.
pub fn load_weather_csv(path: &Path) -> Result<WeatherSeries> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let mut index = [0usize; CSV_COLUMNS.len()];
    for (slot, column) in index.iter_mut().zip(CSV_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == column)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: column.to_string(),
            })?;
    }
    let mut samples = Vec::new();
    let mut previous: Option<i64> = None;
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::csv(path, e))?;
        let field = |col: usize| -> Result<f64> {
            let raw = record.get(index[col]).unwrap_or("");
            raw.trim().parse::<f64>().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("column `{}` value `{raw}`: {e}", CSV_COLUMNS[col]),
            })
        };
        let step_raw = record.get(index[0]).unwrap_or("");
        let step = step_raw.trim().parse::<i64>().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("column `step` value `{step_raw}`: {e}"),
        })?;
        if let Some(prev) = previous {
            if step != prev + 1 {
                return Err(Error::Ordering {
                    path: path.to_path_buf(),
                    line,
                    previous: prev,
                    step,
                });
            }
        }
        previous = Some(step);
        let v = [field(1)?, field(2)?, field(3)?, field(4)?, field(5)?, field(6)?, field(7)?];
        if v.iter().any(|x| !x.is_finite()) || v[2] < 0.0 || v[3] < 0.0 || !(0.0..=1.0).contains(&v[1]) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "value out of physical range".into(),
            });
        }
        samples.push(WeatherSample::from_slice(&v));
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(WeatherSeries {
        step_minutes: STEP_MINUTES,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_extremes(series: &WeatherSeries) -> (f64, f64) {
        series.samples.iter().fold((f64::MAX, f64::MIN), |(lo, hi), s| {
            (lo.min(s.temp_out), hi.max(s.temp_out))
        })
    }

    #[test]
    fn fresno_july_range() {
        let w = synthesize_weather(WeatherProfile::FresnoJul, 2, 5).unwrap();
        let (lo, hi) = temp_extremes(&w);
        assert!(lo >= 14.0 && hi <= 43.0, "{lo} {hi}");
        assert_eq!(w.len(), 2 * STEPS_PER_MONTH);
    }

    #[test]
    fn chicago_january_range() {
        let w = synthesize_weather(WeatherProfile::ChicagoJan, 1, 9).unwrap();
        let (lo, hi) = temp_extremes(&w);
        assert!(lo >= -21.0 && hi <= 16.0, "{lo} {hi}");
    }

    #[test]
    fn every_profile_stays_in_range_with_nonnegative_solar() {
        for p in WeatherProfile::ALL {
            let (lo, hi) = p.temperature_range();
            let w = synthesize_weather(p, 1, 1).unwrap();
            for s in &w.samples {
                assert!(s.temp_out >= lo && s.temp_out <= hi);
                assert!(s.direct_solar >= 0.0 && s.diffuse_solar >= 0.0);
                assert!((0.0..=1.0).contains(&s.rh_out));
            }
            assert_eq!(p.to_string().parse::<WeatherProfile>().unwrap(), p);
        }
    }

    #[test]
    fn same_seed_same_series() {
        let a = synthesize_weather(WeatherProfile::ChicagoJul, 1, 42).unwrap();
        let b = synthesize_weather(WeatherProfile::ChicagoJul, 1, 42).unwrap();
        assert_eq!(a, b);
        let c = synthesize_weather(WeatherProfile::ChicagoJul, 1, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_unknown_profile_and_zero_months() {
        assert!(matches!("tokyo_jul".parse::<WeatherProfile>(), Err(Error::UnknownProfile(_))));
        assert!(synthesize_weather(WeatherProfile::FresnoJan, 0, 0).is_err());
    }

    #[test]
    fn afternoon_is_warmer_than_dawn() {
        assert_eq!(diurnal_shape(5.0), -1.0);
        assert!((diurnal_shape(15.0) - 1.0).abs() < 1e-12);
        assert!((diurnal_shape(4.999) + 1.0).abs() < 1e-3);
    }
}
