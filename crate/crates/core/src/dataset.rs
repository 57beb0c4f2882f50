//! Transition datasets: splitting, training-pair extraction and CSV persistence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::state::{
    action_dim, action_feature_names, state_dim, state_feature_names, Action, FullState,
    Transition,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_zones: usize,
    pub transitions: Vec<Transition>,
}

impl Dataset {
    pub fn new(n_zones: usize, transitions: Vec<Transition>) -> Self {
        Self {
            n_zones,
            transitions,
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_transitions_csv(path, self.n_zones, &self.transitions)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        read_transitions_csv(path)
    }
}

/// Seeded shuffle, then the first `round(ratio * len)` transitions go to training.
pub fn split_train_val(
    transitions: &[Transition],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<Transition>, Vec<Transition>)> {
    if transitions.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidInput(format!("split ratio {ratio} outside [0, 1]")));
    }
    let mut idx: Vec<usize> = (0..transitions.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (ratio * transitions.len() as f64).round() as usize;
    let train = idx[..n_train].iter().map(|&i| transitions[i].clone()).collect();
    let val = idx[n_train..].iter().map(|&i| transitions[i].clone()).collect();
    Ok((train, val))
}

/// Network input for one transition: building state, action, environment.
pub fn model_input(state: &FullState, action: &Action) -> Vec<f64> {
    let mut x = state.building_vec();
    x.extend(action.to_vec());
    state.env.write_into(&mut x);
    x
}

/// Regression target: building-state difference `s_{t+1} - s_t`.
pub fn model_target(t: &Transition) -> Vec<f64> {
    let now = t.state.building_vec();
    t.next_state
        .building_vec()
        .iter()
        .zip(&now)
        .map(|(n, c)| n - c)
        .collect()
}

pub fn input_feature_names(n_zones: usize) -> Vec<String> {
    let state = state_feature_names(n_zones);
    let b = crate::state::building_dim(n_zones);
    let mut names: Vec<String> = state[..b].to_vec();
    names.extend(action_feature_names(n_zones));
    names.extend(state[b..].iter().cloned());
    names
}

fn csv_header(n_zones: usize) -> Vec<String> {
    let state = state_feature_names(n_zones);
    let mut header: Vec<String> = state.iter().map(|n| format!("s_{n}")).collect();
    header.extend(action_feature_names(n_zones).iter().map(|n| format!("a_{n}")));
    header.extend(state.iter().map(|n| format!("next_{n}")));
    header.push("step".to_string());
    header
}

pub fn write_transitions_csv(path: &Path, n_zones: usize, transitions: &[Transition]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", csv_header(n_zones).join(",")).map_err(io)?;
    let mut line = String::new();
    for t in transitions {
        line.clear();
        let values = t
            .state
            .flatten()
            .into_iter()
            .chain(t.action.to_vec())
            .chain(t.next_state.flatten());
        for v in values {
            line.push_str(&v.to_string());
            line.push(',');
        }
        line.push_str(&t.step.to_string());
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_transitions_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    // 14 columns per zone (6 in each of state/next state, 2 action) plus 15 shared
    let n_cols = headers.len();
    let n_zones = (n_cols.saturating_sub(15)) / 14;
    if n_zones == 0 || 14 * n_zones + 15 != n_cols {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("{n_cols} columns do not describe a transition table"),
        });
    }
    let expected = csv_header(n_zones);
    for (i, name) in expected.iter().enumerate() {
        if headers.get(i) != Some(name.as_str()) {
            return Err(Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.clone(),
            });
        }
    }
    let sd = state_dim(n_zones);
    let ad = action_dim(n_zones);
    let mut transitions = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 2;
        let record = record.map_err(|e| Error::csv(path, e))?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut values = Vec::with_capacity(n_cols - 1);
        for field in record.iter().take(n_cols - 1) {
            values.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("`{field}`: {e}")))?,
            );
        }
        let step_field = record.get(n_cols - 1).unwrap_or("");
        let step = step_field
            .trim()
            .parse::<usize>()
            .map_err(|e| parse_err(format!("step `{step_field}`: {e}")))?;
        let state = FullState::unflatten(n_zones, &values[..sd]).map_err(|e| parse_err(e.to_string()))?;
        let action = Action::from_slice(&values[sd..sd + ad])?;
        let next_state =
            FullState::unflatten(n_zones, &values[sd + ad..]).map_err(|e| parse_err(e.to_string()))?;
        transitions.push(Transition {
            state,
            action,
            next_state,
            step,
        });
    }
    Ok(Dataset::new(n_zones, transitions))
}
