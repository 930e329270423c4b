//! Integral conservation and energy bookkeeping over a trajectory.

use crate::model::ModelParams;
use crate::solver::{summarize, Grid1D, Topography, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub t: f64,
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    /// Backward-difference rate of change of the energy; `None` for the first row.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyReport {
    pub rows: Vec<EnergyRow>,
}

impl EnergyReport {
    /// `E(t_0) − E(t_end)`.
    pub fn energy_loss(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => a.energy - b.energy,
            _ => 0.0,
        }
    }

    pub fn max_relative_drift(&self, value: impl Fn(&EnergyRow) -> f64) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        let reference = value(first).abs().max(f64::MIN_POSITIVE);
        self.rows
            .iter()
            .map(|r| (value(r) - value(first)).abs() / reference)
            .fold(0.0, f64::max)
    }
}

/// Mass, momentum and total energy of every snapshot.
pub fn energy_report(
    trajectory: &Trajectory,
    grid: &Grid1D,
    topography: &Topography,
    params: &ModelParams,
) -> EnergyReport {
    let mut rows: Vec<EnergyRow> = Vec::with_capacity(trajectory.snapshots.len());
    for snap in &trajectory.snapshots {
        let s = summarize(&snap.states, topography, params, grid.dx(), 0, snap.t);
        let rate = rows.last().map(|prev| (s.total_energy - prev.energy) / (snap.t - prev.t));
        rows.push(EnergyRow {
            t: snap.t,
            mass: s.mass,
            momentum: s.momentum,
            energy: s.total_energy,
            rate,
        });
    }
    EnergyReport { rows }
}
