//! Exact Riemann solution of the shallow water dam break on a wet bed.

use crate::error::{Error, Result};

/// Exact dam-break solution for initial depths `h_left > h_right > 0` at rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokerSolution {
    pub h_left: f64,
    pub h_right: f64,
    pub g: f64,
    /// Depth of the intermediate state.
    pub h_mid: f64,
    /// Velocity of the intermediate state.
    pub u_mid: f64,
    /// Bore speed.
    pub shock_speed: f64,
    /// Root residual of the intermediate-state equation.
    pub residual: f64,
}

const MAX_ITERATIONS: usize = 200;

impl StokerSolution {
    pub fn new(h_left: f64, h_right: f64, g: f64) -> Result<Self> {
        if !(h_left > h_right && h_right > 0.0 && g > 0.0 && h_left.is_finite()) {
            return Err(Error::Usage(format!(
                "dam break requires h_left > h_right > 0 and g > 0, got h_left = {h_left}, h_right = {h_right}, g = {g}"
            )));
        }
        let c_left = (g * h_left).sqrt();
        let f = |hm: f64| {
            let s = (0.5 * g * (1.0 / hm + 1.0 / h_right)).sqrt();
            let value = 2.0 * (c_left - (g * hm).sqrt()) - (hm - h_right) * s;
            let slope = -(g / hm).sqrt() - s + (hm - h_right) * g / (4.0 * hm * hm * s);
            (value, slope)
        };

        // Safeguarded Newton: f decreases from f(h_right) > 0 to f(h_left) < 0.
        let (mut lo, mut hi) = (h_right, h_left);
        let mut hm = 0.5 * (lo + hi);
        let tol = 1e-15 * c_left.max(1.0);
        let mut converged = false;
        for _ in 0..MAX_ITERATIONS {
            let (value, slope) = f(hm);
            if value.abs() <= tol {
                converged = true;
                break;
            }
            if value > 0.0 {
                lo = hm;
            } else {
                hi = hm;
            }
            let newton = hm - value / slope;
            hm = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= f64::EPSILON * hi {
                converged = true;
                break;
            }
        }
        let residual = f(hm).0.abs();
        if !converged && residual > 1e-13 {
            return Err(Error::RootSolve {
                lo,
                hi,
                iterations: MAX_ITERATIONS,
            });
        }
        let u_mid = 2.0 * (c_left - (g * hm).sqrt());
        Ok(StokerSolution {
            h_left,
            h_right,
            g,
            h_mid: hm,
            u_mid,
            shock_speed: hm * u_mid / (hm - h_right),
            residual,
        })
    }

    /// `(h, u_m)` at position `x` relative to the dam, time `t > 0`.
    pub fn sample(&self, x: f64, t: f64) -> (f64, f64) {
        let xi = x / t;
        let c_left = (self.g * self.h_left).sqrt();
        let c_mid = (self.g * self.h_mid).sqrt();
        if xi <= -c_left {
            (self.h_left, 0.0)
        } else if xi <= self.u_mid - c_mid {
            let c = (2.0 * c_left - xi) / 3.0;
            (c * c / self.g, 2.0 * (c_left + xi) / 3.0)
        } else if xi <= self.shock_speed {
            (self.h_mid, self.u_mid)
        } else {
            (self.h_right, 0.0)
        }
    }

    /// Relative defects of the mass and momentum jump conditions across the bore.
    pub fn rankine_hugoniot_defects(&self) -> (f64, f64) {
        let (hm, um, hr, g, s) = (self.h_mid, self.u_mid, self.h_right, self.g, self.shock_speed);
        let mass = (s * (hm - hr) - hm * um).abs() / (s.abs() * (hm + hr) + (hm * um).abs());
        let flux_jump = hm * um * um + 0.5 * g * (hm * hm - hr * hr);
        let scale = (s * hm * um).abs() + hm * um * um + 0.5 * g * (hm * hm + hr * hr);
        let momentum = (s * hm * um - flux_jump).abs() / scale;
        (mass, momentum)
    }
}

/// `(h, u_m)` of the dam break with the dam at `x = 0`.
pub fn stoker_dam_break(h_left: f64, h_right: f64, g: f64, x: f64, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::Usage(format!("dam break sample needs t > 0, got {t}")));
    }
    Ok(StokerSolution::new(h_left, h_right, g)?.sample(x, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intermediate_state_satisfies_jump_conditions() {
        for (hl, hr) in [(1.0, 0.5), (2.0, 0.1), (5.0, 4.9), (1.0, 1e-3)] {
            let s = StokerSolution::new(hl, hr, 9.81).unwrap();
            assert!(s.residual <= 1e-13, "{hl},{hr}: {}", s.residual);
            assert!(s.h_mid > hr && s.h_mid < hl);
            let (mass, momentum) = s.rankine_hugoniot_defects();
            assert!(mass <= 1e-14 && momentum <= 1e-12, "{mass} {momentum}");
        }
    }

    #[test]
    fn known_intermediate_depth() {
        // h_L = 1, h_R = 0.5, g = 1 solved independently by bisection to 1e-15.
        let s = StokerSolution::new(1.0, 0.5, 1.0).unwrap();
        let c_l = 1.0f64;
        let f = |hm: f64| 2.0 * (c_l - hm.sqrt()) - (hm - 0.5) * (0.5 * (1.0 / hm + 2.0)).sqrt();
        let (mut lo, mut hi) = (0.5, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((s.h_mid - lo).abs() < 1e-14);
    }

    #[test]
    fn profile_is_continuous_through_rarefaction() {
        let s = StokerSolution::new(1.0, 0.3, 9.81).unwrap();
        let c_l = 9.81f64.sqrt();
        let head = s.sample(-c_l * 1.0000001, 1.0);
        assert!((head.0 - 1.0).abs() < 1e-6);
        let tail_xi = s.u_mid - (9.81 * s.h_mid).sqrt();
        let tail = s.sample(tail_xi - 1e-9, 1.0);
        assert!((tail.0 - s.h_mid).abs() < 1e-8 && (tail.1 - s.u_mid).abs() < 1e-8);
        assert_eq!(s.sample(s.shock_speed + 1e-9, 1.0), (0.3, 0.0));
    }

    #[test]
    fn invalid_inputs() {
        assert!(StokerSolution::new(0.5, 1.0, 9.81).is_err());
        assert!(StokerSolution::new(1.0, 0.0, 9.81).is_err());
        assert!(stoker_dam_break(1.0, 0.5, 9.81, 0.0, 0.0).is_err());
    }
}
