//! Mesh convergence studies in the L1 norm of the depth.

use super::stoker::StokerSolution;
use crate::error::{Error, Result};
use crate::model::ConservedState;
use crate::parallel::Execution;
use crate::solver::{Boundary, Grid1D, InitialCondition, Scenario, Solver};

/// Where the reference solution comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Exact dam-break solution sampled at cell centers.
    Stoker(StokerSolution),
    /// Finest mesh of the study, averaged onto each coarser mesh.
    FinestMesh,
}

impl Reference {
    /// Exact reference for a flat-bottom `N = 0` dam break with outflow
    /// boundaries, self-reference otherwise.
    pub fn for_scenario(scenario: &Scenario) -> Result<Self> {
        if let InitialCondition::DamBreak { h_left, h_right, .. } = scenario.initial {
            let exact = h_left > h_right
                && scenario.boundary == Boundary::Outflow
                && scenario.params.order() == 0
                && scenario.topography.is_flat();
            if exact {
                let s = StokerSolution::new(h_left, h_right, scenario.params.g())?;
                return Ok(Reference::Stoker(s));
            }
        }
        Ok(Reference::FinestMesh)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Reference::Stoker(_) => "exact dam break",
            Reference::FinestMesh => "finest mesh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub l1_error: f64,
    /// `log(e_coarse/e_fine) / log(n_fine/n_coarse)` against the previous row.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub reference: Reference,
    pub rows: Vec<ConvergenceRow>,
    /// L1 norm of the reference depth on the finest reported mesh.
    pub reference_l1_norm: f64,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cells,l1_error,observed_order\n");
        for row in &self.rows {
            let order = row.observed_order.map(|o| format!("{o:?}")).unwrap_or_default();
            out.push_str(&format!("{},{:?},{}\n", row.cells, row.l1_error, order));
        }
        out
    }
}

/// `Σ |h_a − h_b| dx` between two states on the same mesh.
pub fn l1_depth_difference(a: &[ConservedState], b: &[ConservedState], dx: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::MeshAlignment(format!(
            "cell counts differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x.h - y.h).abs()).sum::<f64>() * dx)
}

/// Average a fine-mesh depth onto `coarse` cells.
pub fn restrict_depth(fine: &[ConservedState], coarse: usize) -> Result<Vec<f64>> {
    if coarse == 0 || !fine.len().is_multiple_of(coarse) {
        return Err(Error::MeshAlignment(format!(
            "{} cells cannot be averaged onto {coarse} cells",
            fine.len()
        )));
    }
    let ratio = fine.len() / coarse;
    Ok(fine
        .chunks(ratio)
        .map(|c| c.iter().map(|s| s.h).sum::<f64>() / ratio as f64)
        .collect())
}

fn solve(scenario: &Scenario, cells: usize, bottom: &dyn Fn(f64) -> f64, execution: Execution) -> Result<(Grid1D, Vec<ConservedState>)> {
    let sc = scenario.with_cells(cells, bottom)?;
    let grid = sc.grid;
    let traj = Solver::new(sc).with_execution(execution).run();
    if let Some(err) = traj.failure {
        return Err(err);
    }
    Ok((grid, traj.final_snapshot().states.clone()))
}

fn with_orders(mut rows: Vec<ConvergenceRow>) -> Vec<ConvergenceRow> {
    for k in 1..rows.len() {
        let (c, f) = (rows[k - 1], rows[k]);
        rows[k].observed_order =
            Some((c.l1_error / f.l1_error).ln() / (f.cells as f64 / c.cells as f64).ln());
    }
    rows
}

/// Run `scenario` on each mesh in `meshes` (strictly increasing cell counts)
/// and tabulate L1 depth errors and observed orders at `t_end`.
pub fn convergence_study(
    scenario: &Scenario,
    meshes: &[usize],
    bottom: &dyn Fn(f64) -> f64,
    reference: Reference,
    execution: Execution,
) -> Result<ConvergenceTable> {
    if meshes.is_empty() {
        return Err(Error::Usage("convergence study needs at least one mesh".into()));
    }
    if let Some(w) = meshes.windows(2).find(|w| w[1] <= w[0]) {
        let what = if w[0] == w[1] { "repeated" } else { "decreasing" };
        return Err(Error::Usage(format!(
            "meshes must be strictly increasing, got {what} entry {} after {}",
            w[1], w[0]
        )));
    }
    match reference {
        Reference::Stoker(exact) => {
            let InitialCondition::DamBreak { x0, .. } = scenario.initial else {
                return Err(Error::Usage("exact reference requires a dam break".into()));
            };
            if !(scenario.t_end > 0.0) {
                return Err(Error::Usage("exact reference requires t_end > 0".into()));
            }
            let t = scenario.t_end;
            let mut rows = Vec::new();
            let mut norm = 0.0;
            for &cells in meshes {
                let (grid, states) = solve(scenario, cells, bottom, execution)?;
                let mut err = 0.0;
                norm = 0.0;
                for (i, s) in states.iter().enumerate() {
                    let (h, _) = exact.sample(grid.center(i) - x0, t);
                    err += (s.h - h).abs();
                    norm += h.abs();
                }
                rows.push(ConvergenceRow {
                    cells,
                    l1_error: err * grid.dx(),
                    observed_order: None,
                });
                norm *= grid.dx();
            }
            Ok(ConvergenceTable {
                reference,
                rows: with_orders(rows),
                reference_l1_norm: norm,
            })
        }
        Reference::FinestMesh => {
            if meshes.len() < 2 {
                return Err(Error::Usage(
                    "self-referenced convergence study needs at least two meshes".into(),
                ));
            }
            let finest = *meshes.last().unwrap();
            for &cells in &meshes[..meshes.len() - 1] {
                if !finest.is_multiple_of(cells) {
                    return Err(Error::MeshAlignment(format!(
                        "finest mesh of {finest} cells is not a refinement of {cells} cells"
                    )));
                }
            }
            let (_, fine) = solve(scenario, finest, bottom, execution)?;
            let mut rows = Vec::new();
            let mut norm = 0.0;
            for &cells in &meshes[..meshes.len() - 1] {
                let (grid, states) = solve(scenario, cells, bottom, execution)?;
                let reference_h = restrict_depth(&fine, cells)?;
                let err: f64 = states.iter().zip(&reference_h).map(|(s, h)| (s.h - h).abs()).sum();
                norm = reference_h.iter().map(|h| h.abs()).sum::<f64>() * grid.dx();
                rows.push(ConvergenceRow {
                    cells,
                    l1_error: err * grid.dx(),
                    observed_order: None,
                });
            }
            Ok(ConvergenceTable {
                reference,
                rows: with_orders(rows),
                reference_l1_norm: norm,
            })
        }
    }
}
