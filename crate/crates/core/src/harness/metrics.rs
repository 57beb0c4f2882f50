//! Per-step results rows, their CSV form, and summary metrics.

use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::episode::EpisodeTrace;
use crate::sim::weather::STEPS_PER_MONTH;

/// PMV magnitude above which an occupied step counts as a violation.
pub const PMV_LIMIT: f64 = 0.7;

const ZONE_COLUMNS: [&str; 7] = ["temp", "pmv", "heat_kwh", "cool_kwh", "heat_sp", "cool_sp", "occupied"];

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneResult {
    pub temp: f64,
    pub pmv: f64,
    pub heat_kwh: f64,
    pub cool_kwh: f64,
    pub heat_sp: f64,
    pub cool_sp: f64,
    pub occupied: bool,
}

/// One control step: the executed action and the state it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub step: usize,
    pub zones: Vec<ZoneResult>,
    pub reward: f64,
}

pub fn results_from_trace(trace: &EpisodeTrace) -> Vec<ResultRow> {
    trace
        .transitions
        .iter()
        .zip(&trace.rewards)
        .map(|(t, &reward)| ResultRow {
            step: t.step,
            zones: t
                .next_state
                .zones
                .iter()
                .zip(&t.action.setpoints)
                .zip(&t.next_state.env.occupancy)
                .map(|((z, sp), &occupied)| ZoneResult {
                    temp: z.temp_in,
                    pmv: z.pmv,
                    heat_kwh: z.heat_energy,
                    cool_kwh: z.cool_energy,
                    heat_sp: sp.heat,
                    cool_sp: sp.cool,
                    occupied,
                })
                .collect(),
            reward,
        })
        .collect()
}

pub fn results_header(n_zones: usize) -> Vec<String> {
    let mut cols = vec!["step".to_string()];
    for i in 0..n_zones {
        cols.extend(ZONE_COLUMNS.iter().map(|c| format!("zone{i}_{c}")));
    }
    cols.push("reward".into());
    cols
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let n = rows.first().map_or(0, |r| r.zones.len());
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(results_header(n)).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        let mut rec = vec![row.step.to_string()];
        for z in &row.zones {
            rec.extend([z.temp, z.pmv, z.heat_kwh, z.cool_kwh, z.heat_sp, z.cool_sp].map(|v| v.to_string()));
            rec.push(u8::from(z.occupied).to_string());
        }
        rec.push(row.reward.to_string());
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let n_zones = header.len().saturating_sub(2) / ZONE_COLUMNS.len();
    let expected = results_header(n_zones);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        let missing = expected
            .iter()
            .find(|c| !header.iter().any(|h| h == c.as_str()))
            .cloned()
            .unwrap_or_else(|| "column order".into());
        return Err(Error::MissingColumn {
            path: path.into(),
            column: missing,
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = |message: String| Error::Parse {
            path: path.into(),
            line,
            message,
        };
        let num = |j: usize| -> Result<f64> {
            rec[j].parse().map_err(|_| bad(format!("`{}` is not a number", &rec[j])))
        };
        let step = rec[0].parse().map_err(|_| bad(format!("bad step `{}`", &rec[0])))?;
        let mut zones = Vec::with_capacity(n_zones);
        for z in 0..n_zones {
            let o = 1 + z * ZONE_COLUMNS.len();
            let occupied = match &rec[o + 6] {
                "0" => false,
                "1" => true,
                other => return Err(bad(format!("occupancy `{other}` is not 0/1"))),
            };
            zones.push(ZoneResult {
                temp: num(o)?,
                pmv: num(o + 1)?,
                heat_kwh: num(o + 2)?,
                cool_kwh: num(o + 3)?,
                heat_sp: num(o + 4)?,
                cool_sp: num(o + 5)?,
                occupied,
            });
        }
        let reward = num(rec.len() - 1)?;
        rows.push(ResultRow { step, zones, reward });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub heat_kwh: Vec<f64>,
    pub cool_kwh: Vec<f64>,
    pub total_heat_kwh: f64,
    pub total_cool_kwh: f64,
    /// Number of occupied zone-steps.
    pub occupied_steps: usize,
    /// PMV statistics over occupied zone-steps; `None` if nothing was occupied.
    pub pmv_mean: Option<f64>,
    pub pmv_std: Option<f64>,
    /// Fraction of occupied zone-steps with |PMV| above the limit (0 if none).
    pub violation_rate: f64,
    /// Accumulated reward of each 2976-step episode; a shorter tail counts as one.
    pub episode_rewards: Vec<f64>,
}

impl MetricsReport {
    pub fn total_kwh(&self) -> f64 {
        self.total_heat_kwh + self.total_cool_kwh
    }

    pub fn total_reward(&self) -> f64 {
        self.episode_rewards.iter().sum()
    }
}

/// Summarizes results rows; occupancy comes from the realized schedule
/// recorded in each row.
pub fn compute_metrics(rows: &[ResultRow]) -> Result<MetricsReport> {
    let n = rows.first().ok_or(Error::EmptyDataset)?.zones.len();
    let mut heat = vec![0.0; n];
    let mut cool = vec![0.0; n];
    let mut occupied = 0usize;
    let mut violations = 0usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for row in rows {
        if row.zones.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: row.zones.len(),
            });
        }
        for (i, z) in row.zones.iter().enumerate() {
            heat[i] += z.heat_kwh;
            cool[i] += z.cool_kwh;
            if z.occupied {
                occupied += 1;
                sum += z.pmv;
                sum_sq += z.pmv * z.pmv;
                if z.pmv.abs() > PMV_LIMIT {
                    violations += 1;
                }
            }
        }
    }
    let (pmv_mean, pmv_std, violation_rate) = if occupied == 0 {
        (None, None, 0.0)
    } else {
        let m = sum / occupied as f64;
        let var = (sum_sq / occupied as f64 - m * m).max(0.0);
        (Some(m), Some(var.sqrt()), violations as f64 / occupied as f64)
    };
    let episode_rewards = rows
        .chunks(STEPS_PER_MONTH)
        .map(|c| c.iter().map(|r| r.reward).sum())
        .collect();
    Ok(MetricsReport {
        total_heat_kwh: heat.iter().sum(),
        total_cool_kwh: cool.iter().sum(),
        heat_kwh: heat,
        cool_kwh: cool,
        occupied_steps: occupied,
        pmv_mean,
        pmv_std,
        violation_rate,
        episode_rewards,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `metric,value` rows, one per scalar and per zone.
pub fn write_metrics_csv(path: &Path, m: &MetricsReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut rows: Vec<(String, String)> = vec![
        ("total_kwh".into(), m.total_kwh().to_string()),
        ("heat_kwh".into(), m.total_heat_kwh.to_string()),
        ("cool_kwh".into(), m.total_cool_kwh.to_string()),
        ("occupied_steps".into(), m.occupied_steps.to_string()),
        ("pmv_mean".into(), opt(m.pmv_mean)),
        ("pmv_std".into(), opt(m.pmv_std)),
        ("violation_rate".into(), m.violation_rate.to_string()),
        ("reward".into(), m.total_reward().to_string()),
    ];
    for (i, (h, c)) in m.heat_kwh.iter().zip(&m.cool_kwh).enumerate() {
        rows.push((format!("zone{i}_heat_kwh"), h.to_string()));
        rows.push((format!("zone{i}_cool_kwh"), c.to_string()));
    }
    for (i, r) in m.episode_rewards.iter().enumerate() {
        rows.push((format!("episode{i}_reward"), r.to_string()));
    }
    w.write_record(["metric", "value"]).map_err(|e| Error::csv(path, e))?;
    for (k, v) in rows {
        w.write_record([k, v]).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
