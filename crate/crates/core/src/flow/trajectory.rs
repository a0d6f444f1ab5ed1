use std::io::Write;

use crate::ensemble::{fmt17, PhaseEnsemble};
use crate::error::{Error, Result};

/// Sampled states of one ensemble along its characteristics.
#[derive(Clone, Debug, Default)]
pub struct Trajectory<const D: usize> {
    times: Vec<f64>,
    states: Vec<PhaseEnsemble<D>>,
}

impl<const D: usize> Trajectory<D> {
    pub fn new() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
        }
    }

    /// Appends a sample. The first sample must be at `t = 0` and times must
    /// increase strictly.
    pub fn record(&mut self, t: f64, state: PhaseEnsemble<D>) -> Result<()> {
        match self.times.last() {
            None if t != 0.0 => {
                return Err(Error::Precondition(format!(
                    "trajectory must start at t = 0, got {t}"
                )))
            }
            Some(&last) if t <= last => {
                return Err(Error::Precondition(format!(
                    "sample time {t} does not follow {last}"
                )));
            }
            _ => {}
        }
        if let Some(first) = self.states.first() {
            if first.len() != state.len() {
                return Err(Error::Precondition(
                    "particle count changed along the trajectory".into(),
                ));
            }
        }
        self.times.push(t);
        self.states.push(state);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[PhaseEnsemble<D>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// State recorded at time `t` (matched to 1e-9 relative).
    pub fn state_at(&self, t: f64) -> Result<&PhaseEnsemble<D>> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * (1.0 + t.abs()))
            .map(|i| &self.states[i])
            .ok_or_else(|| Error::Precondition(format!("no trajectory sample at t = {t}")))
    }

    /// `t,particle_id,x1..xd,v1..vd`, one row per particle per sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = vec!["t".to_string(), "particle_id".to_string()];
        header.extend((1..=D).map(|k| format!("x{k}")));
        header.extend((1..=D).map(|k| format!("v{k}")));
        writeln!(out, "{}", header.join(","))?;
        for (t, state) in self.times.iter().zip(&self.states) {
            for (i, p) in state.particles().iter().enumerate() {
                let mut row = vec![fmt17(*t), i.to_string()];
                row.extend(p.position.coords().iter().map(|c| fmt17(*c)));
                row.extend(p.velocity.iter().map(|c| fmt17(*c)));
                writeln!(out, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}
