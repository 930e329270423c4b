//! Flat `section.key = value` scenario files.
//!
//! Blank lines and everything after `#` are ignored. Keys are case sensitive.
//! The schema is documented in `docs/config.md`; [`Config`]'s `Display`
//! writes the canonical form, which parses back to an equal value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::basis::Variant;
use crate::error::{Error, Result};
use crate::model::{ModelParams, DEFAULT_H_MIN};
use crate::solver::{Boundary, Grid1D, InitialCondition, OutputCadence, Scenario, Topography};

pub const DEFAULT_G: f64 = 9.812;

/// Bottom profile presets.
#[derive(Debug, Clone, PartialEq)]
pub enum TopographyPreset {
    Flat,
    /// `b = amplitude · exp(−((x − center)/width)²)`.
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// `b = offset + slope · x`.
    Linear { slope: f64, offset: f64 },
}

impl TopographyPreset {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TopographyPreset::Flat => 0.0,
            TopographyPreset::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let z = (x - center) / width;
                amplitude * (-z * z).exp()
            }
            TopographyPreset::Linear { slope, offset } => offset + slope * x,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TopographyPreset::Flat => "flat",
            TopographyPreset::Gaussian { .. } => "gaussian",
            TopographyPreset::Linear { .. } => "linear",
        }
    }

    pub fn sample(&self, grid: &Grid1D, boundary: Boundary) -> Topography {
        match self {
            TopographyPreset::Flat => Topography::flat(grid.cells()),
            _ => Topography::from_fn(grid, boundary, |x| self.eval(x)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub order: usize,
    pub g: f64,
    pub variant: Variant,
    pub h_min: f64,
    pub cells: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub boundary: Boundary,
    pub initial: InitialCondition,
    pub topography: TopographyPreset,
    pub t_end: f64,
    pub cfl: f64,
    pub output_path: PathBuf,
    pub output: OutputCadence,
}

struct Entries {
    map: BTreeMap<String, (String, usize)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    line,
                    format!("line {lineno}: expected `section.key = value`"),
                ));
            };
            let key = key.trim();
            let value = value.trim();
            if key.split('.').count() != 2 || key.split('.').any(str::is_empty) {
                return Err(Error::config(key, format!("line {lineno}: keys have the form `section.key`")));
            }
            if map.insert(key.to_string(), (value.to_string(), lineno)).is_some() {
                return Err(Error::config(key, format!("line {lineno}: duplicate key")));
            }
        }
        Ok(Entries { map })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key).map(|(v, _)| v)
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take(key).ok_or_else(|| Error::config(key, "missing required key"))
    }

    fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        value
            .parse()
            .map_err(|e| Error::config(key, format!("cannot parse `{value}`: {e}")))
    }

    fn required_as<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = self.required(key)?;
        Self::parse_value(key, &v)
    }

    fn optional_as<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            Some(v) => Self::parse_value(key, &v),
            None => Ok(default),
        }
    }

    fn optional_list(&mut self, key: &str) -> Result<Vec<f64>> {
        match self.take(key) {
            None => Ok(Vec::new()),
            Some(v) if v.is_empty() => Ok(Vec::new()),
            Some(v) => v.split(',').map(|s| Self::parse_value(key, s.trim())).collect(),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.into_iter().next() {
            Some((key, (_, lineno))) => Err(Error::config(key, format!("line {lineno}: unknown key"))),
            None => Ok(()),
        }
    }
}

fn check(ok: bool, key: &str, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, message))
    }
}

fn finite(key: &str, v: f64) -> Result<f64> {
    check(v.is_finite(), key, "must be finite")?;
    Ok(v)
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;

        let order: usize = e.required_as("model.N")?;
        let g = finite("model.g", e.optional_as("model.g", DEFAULT_G)?)?;
        check(g > 0.0, "model.g", "must be positive")?;
        let variant: Variant = e.required_as("model.variant")?;
        let h_min = finite("model.h_min", e.optional_as("model.h_min", DEFAULT_H_MIN)?)?;
        check(h_min > 0.0, "model.h_min", "must be positive")?;

        let cells: usize = e.required_as("grid.cells")?;
        check(cells >= 2, "grid.cells", "must be at least 2")?;
        let x_min = finite("grid.xmin", e.required_as("grid.xmin")?)?;
        let x_max = finite("grid.xmax", e.required_as("grid.xmax")?)?;
        check(x_max > x_min, "grid.xmax", "must exceed grid.xmin")?;

        let boundary: Boundary = e.required_as("bc.kind")?;

        let ic_name = e.required("ic.name")?;
        let initial = match ic_name.as_str() {
            "dam_break" => InitialCondition::DamBreak {
                h_left: finite("ic.h_left", e.required_as("ic.h_left")?)?,
                h_right: finite("ic.h_right", e.required_as("ic.h_right")?)?,
                x0: finite("ic.x0", e.optional_as("ic.x0", 0.0)?)?,
            },
            "lake_at_rest" => InitialCondition::LakeAtRest {
                surface: finite("ic.surface", e.required_as("ic.surface")?)?,
            },
            "smooth_periodic" => InitialCondition::SmoothPeriodic {
                h0: finite("ic.h0", e.required_as("ic.h0")?)?,
                amp_h: finite("ic.amp_h", e.optional_as("ic.amp_h", 0.0)?)?,
                u0: finite("ic.u0", e.optional_as("ic.u0", 0.0)?)?,
                amp_u: finite("ic.amp_u", e.optional_as("ic.amp_u", 0.0)?)?,
                moment_amps: e.optional_list("ic.moment_amps")?,
            },
            "constant" => InitialCondition::Constant {
                h: finite("ic.h", e.required_as("ic.h")?)?,
                u_m: finite("ic.u_m", e.optional_as("ic.u_m", 0.0)?)?,
                moments: e.optional_list("ic.moments")?,
            },
            other => {
                return Err(Error::config("ic.name", Error::UnknownPreset(other.into()).to_string()))
            }
        };
        let moment_key = match &initial {
            InitialCondition::SmoothPeriodic { moment_amps, .. } => Some(("ic.moment_amps", moment_amps)),
            InitialCondition::Constant { moments, .. } => Some(("ic.moments", moments)),
            _ => None,
        };
        if let Some((key, m)) = moment_key {
            check(m.len() <= order, key, "more moment values than model.N")?;
            check(m.iter().all(|v| v.is_finite()), key, "moment values must be finite")?;
        }

        let topo_name = e.take("topo.name").unwrap_or_else(|| "flat".into());
        let topography = match topo_name.as_str() {
            "flat" => TopographyPreset::Flat,
            "gaussian" => TopographyPreset::Gaussian {
                amplitude: finite("topo.amplitude", e.required_as("topo.amplitude")?)?,
                center: finite("topo.center", e.optional_as("topo.center", 0.0)?)?,
                width: {
                    let w = finite("topo.width", e.optional_as("topo.width", 1.0)?)?;
                    check(w > 0.0, "topo.width", "must be positive")?;
                    w
                },
            },
            "linear" => TopographyPreset::Linear {
                slope: finite("topo.slope", e.required_as("topo.slope")?)?,
                offset: finite("topo.offset", e.optional_as("topo.offset", 0.0)?)?,
            },
            other => {
                return Err(Error::config("topo.name", Error::UnknownPreset(other.into()).to_string()))
            }
        };

        let t_end = finite("time.t_end", e.required_as("time.t_end")?)?;
        check(t_end >= 0.0, "time.t_end", "must be non-negative")?;
        let cfl: f64 = e.required_as("time.cfl")?;
        check(cfl > 0.0 && cfl <= 1.0, "time.cfl", "must lie in (0, 1]")?;

        let output_path = PathBuf::from(e.required("output.path")?);
        check(!output_path.as_os_str().is_empty(), "output.path", "must not be empty")?;
        let every_steps: usize = e.optional_as("output.every_steps", 1)?;
        check(every_steps >= 1, "output.every_steps", "must be at least 1")?;
        let snapshots: usize = e.optional_as("output.snapshots", 1)?;
        check(snapshots >= 1, "output.snapshots", "must be at least 1")?;

        e.finish()?;
        Ok(Config {
            order,
            g,
            variant,
            h_min,
            cells,
            x_min,
            x_max,
            boundary,
            initial,
            topography,
            t_end,
            cfl,
            output_path,
            output: OutputCadence {
                every_steps,
                snapshots,
            },
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.g, self.order, self.variant)?.with_h_min(self.h_min)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let grid = Grid1D::new(self.x_min, self.x_max, self.cells)?;
        let topography = self.topography.sample(&grid, self.boundary);
        Ok(Scenario::new(
            self.params()?,
            grid,
            topography,
            self.initial.clone(),
            self.boundary,
            self.t_end,
            self.cfl,
        )?
        .with_output(self.output))
    }
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model.N = {}", self.order)?;
        writeln!(f, "model.g = {:?}", self.g)?;
        writeln!(f, "model.variant = {}", self.variant)?;
        writeln!(f, "model.h_min = {:?}", self.h_min)?;
        writeln!(f, "grid.cells = {}", self.cells)?;
        writeln!(f, "grid.xmin = {:?}", self.x_min)?;
        writeln!(f, "grid.xmax = {:?}", self.x_max)?;
        writeln!(f, "bc.kind = {}", self.boundary.as_str())?;
        writeln!(f, "ic.name = {}", self.initial.name())?;
        match &self.initial {
            InitialCondition::DamBreak { h_left, h_right, x0 } => {
                writeln!(f, "ic.h_left = {h_left:?}")?;
                writeln!(f, "ic.h_right = {h_right:?}")?;
                writeln!(f, "ic.x0 = {x0:?}")?;
            }
            InitialCondition::LakeAtRest { surface } => writeln!(f, "ic.surface = {surface:?}")?,
            InitialCondition::SmoothPeriodic {
                h0,
                amp_h,
                u0,
                amp_u,
                moment_amps,
            } => {
                writeln!(f, "ic.h0 = {h0:?}")?;
                writeln!(f, "ic.amp_h = {amp_h:?}")?;
                writeln!(f, "ic.u0 = {u0:?}")?;
                writeln!(f, "ic.amp_u = {amp_u:?}")?;
                writeln!(f, "ic.moment_amps = {}", list(moment_amps))?;
            }
            InitialCondition::Constant { h, u_m, moments } => {
                writeln!(f, "ic.h = {h:?}")?;
                writeln!(f, "ic.u_m = {u_m:?}")?;
                writeln!(f, "ic.moments = {}", list(moments))?;
            }
        }
        writeln!(f, "topo.name = {}", self.topography.name())?;
        match self.topography {
            TopographyPreset::Flat => {}
            TopographyPreset::Gaussian {
                amplitude,
                center,
                width,
            } => {
                writeln!(f, "topo.amplitude = {amplitude:?}")?;
                writeln!(f, "topo.center = {center:?}")?;
                writeln!(f, "topo.width = {width:?}")?;
            }
            TopographyPreset::Linear { slope, offset } => {
                writeln!(f, "topo.slope = {slope:?}")?;
                writeln!(f, "topo.offset = {offset:?}")?;
            }
        }
        writeln!(f, "time.t_end = {:?}", self.t_end)?;
        writeln!(f, "time.cfl = {:?}", self.cfl)?;
        writeln!(f, "output.path = {}", self.output_path.display())?;
        writeln!(f, "output.every_steps = {}", self.output.every_steps)?;
        writeln!(f, "output.snapshots = {}", self.output.snapshots)
    }
}
