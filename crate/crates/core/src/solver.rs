//! First-order path-conservative finite-volume solver.
//!
//! Interface fluctuations use a Rusanov splitting with the nonconservative
//! product integrated along the straight segment between the two states and
//! evaluated at its midpoint. Topography enters through hydrostatic
//! reconstruction of the interface depths, which keeps the lake at rest a
//! discrete fixed point. Time integration is the three-stage SSP Runge–Kutta
//! scheme.

use crate::error::{Error, Result};
use crate::model::{
    self, checked_max_wave_speed, to_primitive, wave_speed_bound, ConservedState, ModelParams,
    PrimitiveState,
};
use crate::parallel::{nan_max, Execution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::Usage(format!(
                "grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if cells < 2 {
            return Err(Error::Usage(format!("grid needs at least 2 cells, got {cells}")));
        }
        Ok(Grid1D { x_min, x_max, cells })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.cells as f64
    }

    /// Center of cell `i`, `x_min + (i + 1/2) dx`.
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.center(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Outflow,
    Reflective,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Outflow => "outflow",
            Boundary::Reflective => "reflective",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "periodic" => Ok(Boundary::Periodic),
            "outflow" => Ok(Boundary::Outflow),
            "reflective" => Ok(Boundary::Reflective),
            other => Err(Error::Usage(format!(
                "unknown boundary `{other}` (expected periodic, outflow or reflective)"
            ))),
        }
    }
}

/// Bottom elevation at cell centers and its sampled slope.
#[derive(Debug, Clone, PartialEq)]
pub struct Topography {
    b: Vec<f64>,
    dbdx: Vec<f64>,
}

impl Topography {
    pub fn flat(cells: usize) -> Self {
        Topography {
            b: vec![0.0; cells],
            dbdx: vec![0.0; cells],
        }
    }

    /// Sample `b` at cell centers; the slope uses central differences, wrapped
    /// for periodic grids and one-sided at the ends otherwise.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Grid1D, boundary: Boundary, b: F) -> Self {
        let samples = grid.centers().into_iter().map(b).collect();
        Self::from_samples(grid, boundary, samples)
    }

    pub fn from_samples(grid: &Grid1D, boundary: Boundary, b: Vec<f64>) -> Self {
        assert_eq!(b.len(), grid.cells(), "one bottom sample per cell");
        let m = b.len();
        let dx = grid.dx();
        let dbdx = (0..m)
            .map(|i| match (i, boundary) {
                (0, Boundary::Periodic) => (b[1] - b[m - 1]) / (2.0 * dx),
                (_, Boundary::Periodic) if i == m - 1 => (b[0] - b[m - 2]) / (2.0 * dx),
                (0, _) => (b[1] - b[0]) / dx,
                _ if i == m - 1 => (b[m - 1] - b[m - 2]) / dx,
                _ => (b[i + 1] - b[i - 1]) / (2.0 * dx),
            })
            .collect();
        Topography { b, dbdx }
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn dbdx(&self) -> &[f64] {
        &self.dbdx
    }

    pub fn is_flat(&self) -> bool {
        self.b.iter().all(|&v| v == self.b[0])
    }

    /// Bottom values with one ghost per side filled according to `boundary`.
    fn with_ghosts(&self, boundary: Boundary) -> Vec<f64> {
        let m = self.b.len();
        let (left, right) = match boundary {
            Boundary::Periodic => (self.b[m - 1], self.b[0]),
            Boundary::Outflow | Boundary::Reflective => (self.b[0], self.b[m - 1]),
        };
        let mut ext = Vec::with_capacity(m + 2);
        ext.push(left);
        ext.extend_from_slice(&self.b);
        ext.push(right);
        ext
    }
}

/// Named initial-condition presets.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Depth `h_left` for `x < x0`, `h_right` otherwise, fluid at rest.
    DamBreak { h_left: f64, h_right: f64, x0: f64 },
    /// Flat free surface `h + b = surface`, fluid at rest.
    LakeAtRest { surface: f64 },
    /// `h = h0 + amp_h sin(2πx/L)`, `u_m = u0 + amp_u sin(2πx/L)`,
    /// `u_i = moment_amps[i] sin(2πx/L)`.
    SmoothPeriodic {
        h0: f64,
        amp_h: f64,
        u0: f64,
        amp_u: f64,
        moment_amps: Vec<f64>,
    },
    /// Uniform state.
    Constant { h: f64, u_m: f64, moments: Vec<f64> },
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::DamBreak { .. } => "dam_break",
            InitialCondition::LakeAtRest { .. } => "lake_at_rest",
            InitialCondition::SmoothPeriodic { .. } => "smooth_periodic",
            InitialCondition::Constant { .. } => "constant",
        }
    }
}

fn padded_moments(values: &[f64], order: usize) -> Result<Vec<f64>> {
    if values.len() > order {
        return Err(Error::InvalidInitialCondition(format!(
            "{} moment values given for order N = {order}",
            values.len()
        )));
    }
    let mut out = values.to_vec();
    out.resize(order, 0.0);
    Ok(out)
}

/// Evaluate an initial condition at the cell centers.
pub fn initial_condition(
    ic: &InitialCondition,
    params: &ModelParams,
    grid: &Grid1D,
    topography: &Topography,
) -> Result<Vec<ConservedState>> {
    let order = params.order();
    let two_pi = 2.0 * std::f64::consts::PI;
    let states: Vec<PrimitiveState> = match ic {
        InitialCondition::DamBreak { h_left, h_right, x0 } => grid
            .centers()
            .into_iter()
            .map(|x| PrimitiveState::at_rest(if x < *x0 { *h_left } else { *h_right }, order))
            .collect(),
        InitialCondition::LakeAtRest { surface } => topography
            .b()
            .iter()
            .map(|&b| PrimitiveState::at_rest(surface - b, order))
            .collect(),
        InitialCondition::SmoothPeriodic {
            h0,
            amp_h,
            u0,
            amp_u,
            moment_amps,
        } => {
            let amps = padded_moments(moment_amps, order)?;
            grid.centers()
                .into_iter()
                .map(|x| {
                    let s = (two_pi * (x - grid.x_min()) / grid.length()).sin();
                    PrimitiveState::new(
                        h0 + amp_h * s,
                        u0 + amp_u * s,
                        amps.iter().map(|a| a * s).collect(),
                    )
                })
                .collect()
        }
        InitialCondition::Constant { h, u_m, moments } => {
            let u = padded_moments(moments, order)?;
            vec![PrimitiveState::new(*h, *u_m, u); grid.cells()]
        }
    };
    states
        .iter()
        .enumerate()
        .map(|(i, w)| {
            if !(w.h > 0.0 && w.h.is_finite()) {
                return Err(Error::InvalidInitialCondition(format!(
                    "non-positive depth h = {} in cell {i}",
                    w.h
                )));
            }
            model::to_conserved(w)
        })
        .collect()
}

/// How interface and CFL wave speeds are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaveSpeedMode {
    /// Analytic bound only.
    #[default]
    Analytic,
    /// Analytic bound checked against an eigensolve; the larger value wins.
    Checked,
}

fn wave_speed(w: &PrimitiveState, p: &ModelParams, mode: WaveSpeedMode) -> Result<(f64, bool)> {
    match mode {
        WaveSpeedMode::Analytic => Ok((wave_speed_bound(w, p.g()), false)),
        WaveSpeedMode::Checked => {
            let s = checked_max_wave_speed(w, p)?;
            Ok((s.speed, s.bound_exceeded))
        }
    }
}

/// `dt = cfl · dx / max_i s_i`.
pub fn cfl_dt(states: &[ConservedState], grid: &Grid1D, params: &ModelParams, cfl: f64) -> Result<f64> {
    cfl_dt_with(states, grid, params, cfl, Execution::Sequential, WaveSpeedMode::Analytic)
        .map(|(dt, _)| dt)
}

fn cfl_dt_with(
    states: &[ConservedState],
    grid: &Grid1D,
    params: &ModelParams,
    cfl: f64,
    execution: Execution,
    mode: WaveSpeedMode,
) -> Result<(f64, usize)> {
    let speeds = execution.try_map_range(states.len(), |i| {
        params.check_depth(states[i].h).map_err(|e| e.at(i, 0))?;
        let w = to_primitive(&states[i])?;
        wave_speed(&w, params, mode)
    })?;
    let warnings = speeds.iter().filter(|(_, exceeded)| *exceeded).count();
    let s_max = speeds.iter().map(|(s, _)| *s).fold(0.0, nan_max);
    let dt = cfl * grid.dx() / s_max;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Usage(format!("invalid time step {dt} (max speed {s_max})")));
    }
    Ok((dt, warnings))
}

/// Fluctuations `(D⁻, D⁺)` at an interface with left state `U_L` and right state `U_R`.
///
/// `D^± = ½(F_R − F_L − P ± s (U_R − U_L))` with `s` the larger of the two
/// speed bounds and `P` the nonconservative product at the mean state applied
/// to the jump, so that `D⁻ + D⁺ = F_R − F_L − P`.
pub fn pc_rusanov_update(
    left: &ConservedState,
    right: &ConservedState,
    params: &ModelParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    params.check_depth(left.h)?;
    params.check_depth(right.h)?;
    let wl = to_primitive(left)?;
    let wr = to_primitive(right)?;
    fluctuations(left, right, &wl, &wr, params, WaveSpeedMode::Analytic).map(|(d, _)| d)
}

type Fluctuations = (Vec<f64>, Vec<f64>);

fn fluctuations(
    left: &ConservedState,
    right: &ConservedState,
    wl: &PrimitiveState,
    wr: &PrimitiveState,
    params: &ModelParams,
    mode: WaveSpeedMode,
) -> Result<(Fluctuations, bool)> {
    let nv = params.num_vars();
    let mut fl = Vec::with_capacity(nv);
    let mut fr = Vec::with_capacity(nv);
    model::write_flux(wl, params, true, &mut fl);
    model::write_flux(wr, params, true, &mut fr);
    let (sl, el) = wave_speed(wl, params, mode)?;
    let (sr, er) = wave_speed(wr, params, mode)?;
    let s = sl.max(sr);

    let mean = left.midpoint(right);
    let jump = right.diff(left);
    let w_mean = to_primitive(&mean)?;
    let mut ncp = Vec::with_capacity(nv);
    model::write_nonconservative(&w_mean, &jump, params, &mut ncp);

    let mut d_minus = Vec::with_capacity(nv);
    let mut d_plus = Vec::with_capacity(nv);
    for k in 0..nv {
        let central = fr[k] - fl[k] - ncp[k];
        let diffusion = s * jump.get(k);
        d_minus.push(0.5 * (central - diffusion));
        d_plus.push(0.5 * (central + diffusion));
    }
    Ok(((d_minus, d_plus), el || er))
}

/// Hydrostatically reconstructed interface depths `(h_L*, h_R*)`.
pub fn hydrostatic_reconstruction(h_left: f64, b_left: f64, h_right: f64, b_right: f64) -> (f64, f64) {
    let b_star = b_left.max(b_right);
    (
        (h_left + b_left - b_star).max(0.0),
        (h_right + b_right - b_star).max(0.0),
    )
}

/// State with depth `h_star` carrying the velocities of `w`.
fn reconstructed(w: &PrimitiveState, h_star: f64) -> ConservedState {
    ConservedState {
        h: h_star,
        q: h_star * w.u_m,
        r: w.u.iter().map(|&ui| h_star * ui).collect(),
    }
}

/// Fill one ghost cell per side.
pub fn apply_boundary(interior: &[ConservedState], boundary: Boundary) -> Vec<ConservedState> {
    let m = interior.len();
    assert!(m >= 1, "need at least one interior cell");
    let reflect = |u: &ConservedState| ConservedState {
        h: u.h,
        q: -u.q,
        r: u.r.iter().map(|v| -v).collect(),
    };
    let (left, right) = match boundary {
        Boundary::Periodic => (interior[m - 1].clone(), interior[0].clone()),
        Boundary::Outflow => (interior[0].clone(), interior[m - 1].clone()),
        Boundary::Reflective => (reflect(&interior[0]), reflect(&interior[m - 1])),
    };
    let mut ext = Vec::with_capacity(m + 2);
    ext.push(left);
    ext.extend_from_slice(interior);
    ext.push(right);
    ext
}

/// Everything computed at one interface of the extended array.
struct InterfaceFlux {
    d_minus: Vec<f64>,
    d_plus: Vec<f64>,
    /// Reconstructed state on the left side of the interface.
    left_star: ConservedState,
    /// Reconstructed state on the right side of the interface.
    right_star: ConservedState,
    bound_exceeded: bool,
}

fn interface_flux(
    ext: &[ConservedState],
    prim: &[PrimitiveState],
    b: &[f64],
    k: usize,
    params: &ModelParams,
    mode: WaveSpeedMode,
) -> Result<InterfaceFlux> {
    let (hl, hr) = hydrostatic_reconstruction(ext[k].h, b[k], ext[k + 1].h, b[k + 1]);
    let cell = k.min(ext.len() - 3);
    params.check_depth(hl).map_err(|e| e.at(cell, 0))?;
    params.check_depth(hr).map_err(|e| e.at(cell, 0))?;
    let left_star = reconstructed(&prim[k], hl);
    let right_star = reconstructed(&prim[k + 1], hr);
    let wl = PrimitiveState::new(hl, prim[k].u_m, prim[k].u.clone());
    let wr = PrimitiveState::new(hr, prim[k + 1].u_m, prim[k + 1].u.clone());
    let ((d_minus, d_plus), exceeded) =
        fluctuations(&left_star, &right_star, &wl, &wr, params, mode)?;
    Ok(InterfaceFlux {
        d_minus,
        d_plus,
        left_star,
        right_star,
        bound_exceeded: exceeded,
    })
}

/// Reconstruction source for one cell, from the reconstructed states on its
/// left face (`west`, right side of the interface `i − ½`) and right face
/// (`east`, left side of `i + ½`):
/// `−(A(east) − A(west) − N(w)(east − west)) / dx`, where `A` is the flux
/// without the hydrostatic term. Combined with the interface fluctuations this
/// reproduces the hydrostatic-reconstruction treatment of `−g h ∂x b`.
fn cell_source(
    w: &PrimitiveState,
    west: &ConservedState,
    east: &ConservedState,
    params: &ModelParams,
    dx: f64,
    out: &mut Vec<f64>,
) {
    let nv = params.num_vars();
    let mut ae = Vec::with_capacity(nv);
    let mut aw = Vec::with_capacity(nv);
    let we = PrimitiveState::new(east.h, w.u_m, w.u.clone());
    let ww = PrimitiveState::new(west.h, w.u_m, w.u.clone());
    model::write_flux(&we, params, false, &mut ae);
    model::write_flux(&ww, params, false, &mut aw);
    let jump = east.diff(west);
    let mut ncp = Vec::with_capacity(nv);
    model::write_nonconservative(w, &jump, params, &mut ncp);
    out.clear();
    out.extend((0..nv).map(|k| -(ae[k] - aw[k] - ncp[k]) / dx));
}

/// Per-cell well-balancing source terms for the interior cells of `states`.
///
/// Zero on a flat bottom. Together with fluctuations computed on the
/// reconstructed interface states, the lake at rest is a fixed point.
pub fn well_balanced_source(
    states: &[ConservedState],
    topography: &Topography,
    boundary: Boundary,
    params: &ModelParams,
    dx: f64,
) -> Result<Vec<Vec<f64>>> {
    let ext = apply_boundary(states, boundary);
    let b = topography.with_ghosts(boundary);
    let prim = ext.iter().map(to_primitive).collect::<Result<Vec<_>>>()?;
    (0..states.len())
        .map(|i| {
            let c = i + 1;
            let (_, west) = hydrostatic_reconstruction(ext[c - 1].h, b[c - 1], ext[c].h, b[c]);
            let (east, _) = hydrostatic_reconstruction(ext[c].h, b[c], ext[c + 1].h, b[c + 1]);
            let mut out = Vec::new();
            cell_source(
                &prim[c],
                &reconstructed(&prim[c], west),
                &reconstructed(&prim[c], east),
                params,
                dx,
                &mut out,
            );
            Ok(out)
        })
        .collect()
}

/// Output cadence for [`Solver::run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputCadence {
    /// Summary rows are emitted every `every_steps` steps (the full
    /// trajectory always keeps every step).
    pub every_steps: usize,
    /// Number of evenly spaced snapshot times in `(0, t_end]`, in addition to
    /// the initial snapshot.
    pub snapshots: usize,
}

impl Default for OutputCadence {
    fn default() -> Self {
        OutputCadence {
            every_steps: 1,
            snapshots: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ModelParams,
    pub grid: Grid1D,
    pub topography: Topography,
    pub initial: InitialCondition,
    pub boundary: Boundary,
    pub t_end: f64,
    pub cfl: f64,
    pub output: OutputCadence,
}

impl Scenario {
    pub fn new(
        params: ModelParams,
        grid: Grid1D,
        topography: Topography,
        initial: InitialCondition,
        boundary: Boundary,
        t_end: f64,
        cfl: f64,
    ) -> Result<Self> {
        let scenario = Scenario {
            params,
            grid,
            topography,
            initial,
            boundary,
            t_end,
            cfl,
            output: OutputCadence::default(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn with_output(mut self, output: OutputCadence) -> Self {
        self.output = output;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Usage(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Usage(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.topography.b().len() != self.grid.cells() {
            return Err(Error::Usage("topography does not match the grid".into()));
        }
        self.initial_states().map(|_| ())
    }

    pub fn initial_states(&self) -> Result<Vec<ConservedState>> {
        initial_condition(&self.initial, &self.params, &self.grid, &self.topography)
    }

    /// Same scenario on a grid with a different cell count; topography is
    /// resampled with `bottom`.
    pub fn with_cells<F: Fn(f64) -> f64>(&self, cells: usize, bottom: F) -> Result<Self> {
        let grid = Grid1D::new(self.grid.x_min(), self.grid.x_max(), cells)?;
        let topography = Topography::from_fn(&grid, self.boundary, bottom);
        let mut s = self.clone();
        s.grid = grid;
        s.topography = topography;
        s.validate()?;
        Ok(s)
    }
}

/// Integral quantities of one state array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub momentum: f64,
    pub total_energy: f64,
}

pub fn summarize(
    states: &[ConservedState],
    topography: &Topography,
    params: &ModelParams,
    dx: f64,
    step: usize,
    t: f64,
) -> Summary {
    let mut mass = 0.0;
    let mut momentum = 0.0;
    let mut total_energy = 0.0;
    for (u, &b) in states.iter().zip(topography.b()) {
        mass += u.h * dx;
        momentum += u.q * dx;
        total_energy += model::energy_density_conserved(u, b, params.g()) * dx;
    }
    Summary {
        step,
        t,
        mass,
        momentum,
        total_energy,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub states: Vec<ConservedState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// One entry per step, starting with the initial state at step 0.
    pub summaries: Vec<Summary>,
    /// Set when the run aborted; the trajectory holds everything up to the
    /// last completed step.
    pub failure: Option<Error>,
    /// Number of wave-speed bound violations recorded in checked mode.
    pub wave_speed_warnings: usize,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }
}

/// Time integrator for a [`Scenario`].
#[derive(Debug, Clone)]
pub struct Solver {
    scenario: Scenario,
    execution: Execution,
    wave_speeds: WaveSpeedMode,
}

impl Solver {
    pub fn new(scenario: Scenario) -> Self {
        Solver {
            scenario,
            execution: Execution::default(),
            wave_speeds: WaveSpeedMode::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_wave_speed_mode(mut self, mode: WaveSpeedMode) -> Self {
        self.wave_speeds = mode;
        self
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn cfl_dt(&self, states: &[ConservedState]) -> Result<f64> {
        let s = &self.scenario;
        cfl_dt_with(states, &s.grid, &s.params, s.cfl, self.execution, self.wave_speeds).map(|(dt, _)| dt)
    }

    /// Semi-discrete right-hand side `dU/dt` for the interior cells.
    pub fn rhs(&self, states: &[ConservedState]) -> Result<Vec<Vec<f64>>> {
        self.rhs_counted(states, 1).map(|(r, _)| r)
    }

    fn rhs_counted(&self, states: &[ConservedState], stage: usize) -> Result<(Vec<Vec<f64>>, usize)> {
        let s = &self.scenario;
        let params = &s.params;
        let m = states.len();
        let dx = s.grid.dx();
        let ext = apply_boundary(states, s.boundary);
        let b = s.topography.with_ghosts(s.boundary);

        let prim = self.execution.try_map_range(ext.len(), |k| {
            let cell = k.saturating_sub(1).min(m - 1);
            params.check_depth(ext[k].h).map_err(|e| e.at(cell, stage))?;
            to_primitive(&ext[k])
        })?;
        let faces = self.execution.try_map_range(m + 1, |k| {
            interface_flux(&ext, &prim, &b, k, params, self.wave_speeds).map_err(|e| match e {
                Error::DryState { h, h_min, cell, .. } => Error::DryState {
                    h,
                    h_min,
                    cell,
                    stage: Some(stage),
                },
                other => other,
            })
        })?;
        let warnings = faces.iter().filter(|f| f.bound_exceeded).count();
        let rates = self.execution.map_range(m, |i| {
            let west = &faces[i];
            let east = &faces[i + 1];
            let mut source = Vec::new();
            cell_source(&prim[i + 1], &west.right_star, &east.left_star, params, dx, &mut source);
            (0..params.num_vars())
                .map(|k| -(west.d_plus[k] + east.d_minus[k]) / dx + source[k])
                .collect::<Vec<f64>>()
        });
        Ok((rates, warnings))
    }

    /// One SSP-RK3 step of size `dt`.
    pub fn step(&self, states: &[ConservedState], dt: f64) -> Result<Vec<ConservedState>> {
        self.step_counted(states, dt).map(|(s, _)| s)
    }

    fn step_counted(&self, states: &[ConservedState], dt: f64) -> Result<(Vec<ConservedState>, usize)> {
        let (l0, w0) = self.rhs_counted(states, 1)?;
        let stage1 = combine(states, 0.0, states, 1.0, &l0, dt, self.execution);
        let (l1, w1) = self.rhs_counted(&stage1, 2)?;
        let stage2 = combine(states, 0.75, &stage1, 0.25, &l1, dt, self.execution);
        let (l2, w2) = self.rhs_counted(&stage2, 3)?;
        let next = combine(states, 1.0 / 3.0, &stage2, 2.0 / 3.0, &l2, dt, self.execution);
        Ok((next, w0 + w1 + w2))
    }

    /// Advance to `t_end`, recording summaries every step and snapshots per
    /// the output cadence.
    pub fn run(&self) -> Trajectory {
        let s = &self.scenario;
        let dx = s.grid.dx();
        let mut traj = Trajectory {
            snapshots: Vec::new(),
            summaries: Vec::new(),
            failure: None,
            wave_speed_warnings: 0,
        };
        let mut states = match s.initial_states() {
            Ok(states) => states,
            Err(e) => {
                traj.failure = Some(e);
                return traj;
            }
        };
        traj.snapshots.push(Snapshot {
            t: 0.0,
            states: states.clone(),
        });
        traj.summaries
            .push(summarize(&states, &s.topography, &s.params, dx, 0, 0.0));
        if s.t_end == 0.0 {
            return traj;
        }

        let n_out = s.output.snapshots.max(1);
        let output_time = |k: usize| {
            if k == n_out {
                s.t_end
            } else {
                s.t_end * k as f64 / n_out as f64
            }
        };
        let mut next_output = 1;
        let mut t = 0.0;
        let mut step = 0;
        while next_output <= n_out {
            let target = output_time(next_output);
            let result = cfl_dt_with(&states, &s.grid, &s.params, s.cfl, self.execution, self.wave_speeds)
                .and_then(|(dt, warn)| {
                    traj.wave_speed_warnings += warn;
                    let remaining = target - t;
                    let (dt, lands) = if dt >= remaining * (1.0 - 1e-12) {
                        (remaining, true)
                    } else {
                        (dt, false)
                    };
                    self.step_counted(&states, dt).map(|(next, warn)| (next, dt, lands, warn))
                });
            match result {
                Ok((next, dt, lands, warn)) => {
                    traj.wave_speed_warnings += warn;
                    states = next;
                    step += 1;
                    t = if lands { target } else { t + dt };
                    traj.summaries
                        .push(summarize(&states, &s.topography, &s.params, dx, step, t));
                    if lands {
                        traj.snapshots.push(Snapshot {
                            t,
                            states: states.clone(),
                        });
                        next_output += 1;
                    }
                }
                Err(e) => {
                    traj.failure = Some(e);
                    break;
                }
            }
        }
        traj
    }
}

/// `a·U + c·(V + dt·L)` per cell, into a fresh buffer.
fn combine(
    u: &[ConservedState],
    a: f64,
    v: &[ConservedState],
    c: f64,
    rates: &[Vec<f64>],
    dt: f64,
    execution: Execution,
) -> Vec<ConservedState> {
    execution.map_range(u.len(), |i| {
        let mix = |x: f64, y: f64, l: f64| {
            let euler = y + dt * l;
            if a == 0.0 {
                c * euler
            } else {
                a * x + c * euler
            }
        };
        let rate = &rates[i];
        ConservedState {
            h: mix(u[i].h, v[i].h, rate[0]),
            q: mix(u[i].q, v[i].q, rate[1]),
            r: (0..u[i].r.len())
                .map(|k| mix(u[i].r[k], v[i].r[k], rate[k + 2]))
                .collect(),
        }
    })
}
