//! States, fluxes, nonconservative products and the energy/entropy pair.
//!
//! The system for `U = (h, q, r_1..r_N)` with `q = h u_m`, `r_i = h u_i` reads
//!
//! ```text
//! ∂t h   + ∂x(h u_m)                                   = 0
//! ∂t q   + ∂x(h u_m² + h Σ u_j²/(2j+1) + g h²/2)         = −g h ∂x b
//! ∂t r_i + ∂x(2 h u_m u_i + h Σ A_ijk u_j u_k)           = u_m ∂x r_i − Σ B_ijk u_k ∂x r_j
//! ```
//!
//! with `A = B = 0` for the linearized variant. All moment sums run over
//! `1..=N` and are empty for `N = 0`, where every formula reduces to the
//! plain shallow water equations through the same code path.

use nalgebra::{Complex, DMatrix, Schur};

use crate::basis::{compute_tensors, ClosureTensors, Variant};
use crate::error::{Error, Result};

/// Default dry-state threshold.
pub const DEFAULT_H_MIN: f64 = 1e-10;

/// `1/(2i+1)` for the 1-based moment index `i`.
#[inline]
pub fn moment_weight(i: usize) -> f64 {
    1.0 / (2.0 * i as f64 + 1.0)
}

/// `Σ u_i² / (2i+1)` over the moment coefficients.
#[inline]
pub fn weighted_moment_square_sum(u: &[f64]) -> f64 {
    u.iter()
        .enumerate()
        .map(|(idx, &ui)| ui * ui * moment_weight(idx + 1))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    g: f64,
    order: usize,
    variant: Variant,
    tensors: ClosureTensors,
    h_min: f64,
}

impl ModelParams {
    pub fn new(g: f64, order: usize, variant: Variant) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::Usage(format!("gravity must be positive, got {g}")));
        }
        Ok(ModelParams {
            g,
            order,
            variant,
            tensors: compute_tensors(order, variant),
            h_min: DEFAULT_H_MIN,
        })
    }

    pub fn with_h_min(mut self, h_min: f64) -> Result<Self> {
        if !(h_min.is_finite() && h_min > 0.0) {
            return Err(Error::Usage(format!("h_min must be positive, got {h_min}")));
        }
        self.h_min = h_min;
        Ok(self)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// Moment order `N`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of evolved unknowns, `N + 2`.
    pub fn num_vars(&self) -> usize {
        self.order + 2
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn tensors(&self) -> &ClosureTensors {
        &self.tensors
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub(crate) fn check_depth(&self, h: f64) -> Result<()> {
        // Written so that NaN depths are rejected as well.
        if h > self.h_min {
            Ok(())
        } else {
            Err(Error::DryState {
                h,
                h_min: self.h_min,
                cell: None,
                stage: None,
            })
        }
    }
}

/// Conserved variables `(h, q = h u_m, r_i = h u_i)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConservedState {
    pub h: f64,
    pub q: f64,
    pub r: Vec<f64>,
}

/// Primitive variables `(h, u_m, u_i)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrimitiveState {
    pub h: f64,
    pub u_m: f64,
    pub u: Vec<f64>,
}

impl ConservedState {
    pub fn new(h: f64, q: f64, r: Vec<f64>) -> Self {
        ConservedState { h, q, r }
    }

    pub fn zeros(order: usize) -> Self {
        ConservedState {
            h: 0.0,
            q: 0.0,
            r: vec![0.0; order],
        }
    }

    pub fn order(&self) -> usize {
        self.r.len()
    }

    pub fn len(&self) -> usize {
        self.r.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Component `k` of the flat vector `(h, q, r_1, ..)`.
    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        match k {
            0 => self.h,
            1 => self.q,
            _ => self.r[k - 2],
        }
    }

    /// Flat vector `(h, q, r_1, ..)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.push(self.h);
        v.push(self.q);
        v.extend_from_slice(&self.r);
        v
    }

    pub fn from_slice(v: &[f64]) -> Self {
        ConservedState {
            h: v[0],
            q: v[1],
            r: v[2..].to_vec(),
        }
    }

    /// Componentwise `self - other`.
    pub fn diff(&self, other: &ConservedState) -> ConservedState {
        ConservedState {
            h: self.h - other.h,
            q: self.q - other.q,
            r: self.r.iter().zip(&other.r).map(|(a, b)| a - b).collect(),
        }
    }

    /// Arithmetic mean of two states.
    pub fn midpoint(&self, other: &ConservedState) -> ConservedState {
        ConservedState {
            h: 0.5 * (self.h + other.h),
            q: 0.5 * (self.q + other.q),
            r: self.r.iter().zip(&other.r).map(|(a, b)| 0.5 * (a + b)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.q.is_finite() && self.r.iter().all(|v| v.is_finite())
    }
}

impl PrimitiveState {
    pub fn new(h: f64, u_m: f64, u: Vec<f64>) -> Self {
        PrimitiveState { h, u_m, u }
    }

    /// Lake-at-rest state of depth `h` with `order` zero moments.
    pub fn at_rest(h: f64, order: usize) -> Self {
        PrimitiveState {
            h,
            u_m: 0.0,
            u: vec![0.0; order],
        }
    }

    pub fn order(&self) -> usize {
        self.u.len()
    }
}

fn check_positive_depth(h: f64) -> Result<()> {
    if h > 0.0 {
        Ok(())
    } else {
        Err(Error::DryState {
            h,
            h_min: 0.0,
            cell: None,
            stage: None,
        })
    }
}

pub fn to_primitive(state: &ConservedState) -> Result<PrimitiveState> {
    check_positive_depth(state.h)?;
    let h = state.h;
    Ok(PrimitiveState {
        h,
        u_m: state.q / h,
        u: state.r.iter().map(|&ri| ri / h).collect(),
    })
}

pub fn to_conserved(state: &PrimitiveState) -> Result<ConservedState> {
    check_positive_depth(state.h)?;
    let h = state.h;
    Ok(ConservedState {
        h,
        q: h * state.u_m,
        r: state.u.iter().map(|&ui| h * ui).collect(),
    })
}

/// Physical flux `F(U)` of length `N + 2`.
pub fn flux(w: &PrimitiveState, p: &ModelParams) -> Result<Vec<f64>> {
    p.check_depth(w.h)?;
    let mut f = Vec::with_capacity(p.num_vars());
    write_flux(w, p, true, &mut f);
    Ok(f)
}

/// Flux terms; `with_pressure = false` drops the hydrostatic `g h²/2` term.
pub(crate) fn write_flux(w: &PrimitiveState, p: &ModelParams, with_pressure: bool, f: &mut Vec<f64>) {
    let h = w.h;
    let um = w.u_m;
    let moment_sum = weighted_moment_square_sum(&w.u);
    let pressure = if with_pressure { 0.5 * p.g * h * h } else { 0.0 };
    f.clear();
    f.push(h * um);
    f.push(h * um * um + h * moment_sum + pressure);
    let t = p.tensors();
    let swme = p.variant == Variant::Swme;
    for i in 1..=w.u.len() {
        let mut fi = 2.0 * h * um * w.u[i - 1];
        if swme {
            let mut contraction = 0.0;
            for j in 1..=w.u.len() {
                for k in 1..=w.u.len() {
                    contraction += t.a(i, j, k) * w.u[j - 1] * w.u[k - 1];
                }
            }
            fi += h * contraction;
        }
        f.push(fi);
    }
}

/// Nonconservative right-hand side `(0, 0, u_m ∂x r_i − Σ B_ijk u_k ∂x r_j)`.
pub fn nonconservative_rhs(
    w: &PrimitiveState,
    du_dx: &ConservedState,
    p: &ModelParams,
) -> Result<Vec<f64>> {
    p.check_depth(w.h)?;
    let mut out = Vec::with_capacity(p.num_vars());
    write_nonconservative(w, du_dx, p, &mut out);
    Ok(out)
}

pub(crate) fn write_nonconservative(
    w: &PrimitiveState,
    du: &ConservedState,
    p: &ModelParams,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.push(0.0);
    out.push(0.0);
    let n = w.u.len();
    let t = p.tensors();
    let swme = p.variant == Variant::Swme;
    for i in 1..=n {
        let mut v = w.u_m * du.r[i - 1];
        if swme {
            let mut contraction = 0.0;
            for j in 1..=n {
                for k in 1..=n {
                    contraction += t.b(i, j, k) * w.u[k - 1] * du.r[j - 1];
                }
            }
            v -= contraction;
        }
        out.push(v);
    }
}

/// Topography source `(0, −g h ∂x b, 0, …)` for `order` moments.
pub fn topo_source(w: &PrimitiveState, dbdx: f64, g: f64) -> Vec<f64> {
    let mut s = vec![0.0; w.u.len() + 2];
    s[1] = -g * w.h * dbdx;
    s
}

/// Energy density and its flux at a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPair {
    pub e: f64,
    pub f: f64,
}

pub fn energy(w: &PrimitiveState, b: f64, g: f64) -> EnergyPair {
    let h = w.h;
    let um = w.u_m;
    let s = weighted_moment_square_sum(&w.u);
    EnergyPair {
        e: 0.5 * h * um * um + 0.5 * h * s + 0.5 * g * h * h + g * h * b,
        f: 0.5 * h * um * um * um + 1.5 * h * um * s + g * h * um * (h + b),
    }
}

/// Energy density expressed in conserved variables.
pub fn energy_density_conserved(u: &ConservedState, b: f64, g: f64) -> f64 {
    let h = u.h;
    let s: f64 = u
        .r
        .iter()
        .enumerate()
        .map(|(idx, &ri)| ri * ri * moment_weight(idx + 1))
        .sum();
    u.q * u.q / (2.0 * h) + s / (2.0 * h) + 0.5 * g * h * h + g * h * b
}

/// Entropy variables: the gradient of the energy in `(h, q, r_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyVars {
    pub q1: f64,
    pub q2: f64,
    pub q_u: Vec<f64>,
}

pub fn entropy_vars(w: &PrimitiveState, b: f64, g: f64) -> EntropyVars {
    let um = w.u_m;
    EntropyVars {
        q1: -0.5 * um * um - 0.5 * weighted_moment_square_sum(&w.u) + g * (w.h + b),
        q2: um,
        q_u: w
            .u
            .iter()
            .enumerate()
            .map(|(idx, &ui)| ui * moment_weight(idx + 1))
            .collect(),
    }
}

/// Boussinesq coefficient `β = 1 + Σ (u_i/u_m)² / (2i+1)`.
pub fn boussinesq_beta(w: &PrimitiveState) -> Result<f64> {
    check_positive_depth(w.h)?;
    if w.u_m == 0.0 {
        return Err(Error::UndefinedBeta);
    }
    let ratio_sum: f64 = w
        .u
        .iter()
        .enumerate()
        .map(|(idx, &ui)| {
            let ratio = ui / w.u_m;
            ratio * ratio * moment_weight(idx + 1)
        })
        .sum();
    Ok(1.0 + ratio_sum)
}

/// Analytic flux Jacobian `∂F/∂U`.
pub fn flux_jacobian(w: &PrimitiveState, p: &ModelParams) -> Result<DMatrix<f64>> {
    p.check_depth(w.h)?;
    let n = w.u.len();
    let nv = n + 2;
    let um = w.u_m;
    let g = p.g;
    let t = p.tensors();
    let swme = p.variant == Variant::Swme;
    let mut jac = DMatrix::zeros(nv, nv);

    jac[(0, 1)] = 1.0;
    jac[(1, 0)] = -um * um - weighted_moment_square_sum(&w.u) + g * w.h;
    jac[(1, 1)] = 2.0 * um;
    for j in 1..=n {
        jac[(1, j + 1)] = 2.0 * moment_weight(j) * w.u[j - 1];
    }
    for i in 1..=n {
        let ui = w.u[i - 1];
        let mut a_uu = 0.0;
        if swme {
            for j in 1..=n {
                for k in 1..=n {
                    a_uu += t.a(i, j, k) * w.u[j - 1] * w.u[k - 1];
                }
            }
        }
        jac[(i + 1, 0)] = -2.0 * um * ui - a_uu;
        jac[(i + 1, 1)] = 2.0 * ui;
        for j in 1..=n {
            let mut v = if i == j { 2.0 * um } else { 0.0 };
            if swme {
                for k in 1..=n {
                    v += (t.a(i, j, k) + t.a(i, k, j)) * w.u[k - 1];
                }
            }
            jac[(i + 1, j + 1)] = v;
        }
    }
    Ok(jac)
}

/// Matrix `N(U)` with `nonconservative_rhs = N(U) ∂x U`.
pub fn nonconservative_matrix(w: &PrimitiveState, p: &ModelParams) -> Result<DMatrix<f64>> {
    p.check_depth(w.h)?;
    let n = w.u.len();
    let t = p.tensors();
    let swme = p.variant == Variant::Swme;
    let mut m = DMatrix::zeros(n + 2, n + 2);
    for i in 1..=n {
        for j in 1..=n {
            let mut v = if i == j { w.u_m } else { 0.0 };
            if swme {
                for k in 1..=n {
                    v -= t.b(i, j, k) * w.u[k - 1];
                }
            }
            m[(i + 1, j + 1)] = v;
        }
    }
    Ok(m)
}

/// Quasilinear matrix `Q(U) = ∂F/∂U − N(U)` so that `∂t U + Q(U) ∂x U = S`.
pub fn quasilinear_matrix(w: &PrimitiveState, p: &ModelParams) -> Result<DMatrix<f64>> {
    Ok(flux_jacobian(w, p)? - nonconservative_matrix(w, p)?)
}

const SCHUR_MAX_ITERATIONS: usize = 5000;

/// Eigenvalues by a bounded real Schur iteration, loosening the deflation
/// threshold if the iteration stalls.
pub fn eigenvalues(q: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    for eps in [f64::EPSILON, 1e-14, 1e-12] {
        if let Some(schur) = Schur::try_new(q.clone(), eps, SCHUR_MAX_ITERATIONS) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::EigenSolve {
        dim: q.nrows(),
        iterations: SCHUR_MAX_ITERATIONS,
    })
}

/// Largest eigenvalue modulus of [`quasilinear_matrix`], computed numerically.
pub fn spectral_radius(w: &PrimitiveState, p: &ModelParams) -> Result<f64> {
    let q = quasilinear_matrix(w, p)?;
    Ok(eigenvalues(&q)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Analytic speed bound `|u_m| + √(g h + 3 Σ u_i²/(2i+1))`.
pub fn max_wave_speed(w: &PrimitiveState, p: &ModelParams) -> Result<f64> {
    p.check_depth(w.h)?;
    Ok(wave_speed_bound(w, p.g))
}

#[inline]
pub(crate) fn wave_speed_bound(w: &PrimitiveState, g: f64) -> f64 {
    w.u_m.abs() + (g * w.h + 3.0 * weighted_moment_square_sum(&w.u)).sqrt()
}

/// Result of [`checked_max_wave_speed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSpeed {
    /// Speed to use: the analytic bound, or the numeric radius if larger.
    pub speed: f64,
    pub bound: f64,
    pub spectral_radius: f64,
    /// True when the numeric radius exceeded the analytic bound.
    pub bound_exceeded: bool,
}

/// Relative slack allowed between the analytic bound and the eigensolve.
const BOUND_SLACK: f64 = 1e-10;

/// Analytic bound validated against a numeric eigensolve of `Q(U)`.
pub fn checked_max_wave_speed(w: &PrimitiveState, p: &ModelParams) -> Result<WaveSpeed> {
    let bound = max_wave_speed(w, p)?;
    let radius = spectral_radius(w, p)?;
    let exceeded = radius > bound * (1.0 + BOUND_SLACK);
    if exceeded {
        log::warn!("wave speed bound {bound} exceeded by spectral radius {radius}");
    }
    Ok(WaveSpeed {
        speed: if exceeded { radius } else { bound },
        bound,
        spectral_radius: radius,
        bound_exceeded: exceeded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn swlme(order: usize, g: f64) -> ModelParams {
        ModelParams::new(g, order, Variant::Swlme).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, order: usize) -> PrimitiveState {
        PrimitiveState {
            h: rng.random_range(0.1..10.0),
            u_m: rng.random_range(-3.0..3.0),
            u: (0..order).map(|_| rng.random_range(-3.0..3.0)).collect(),
        }
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn primitive_conversion_examples() {
        let w = to_primitive(&ConservedState::new(2.0, 4.0, vec![2.0])).unwrap();
        assert_eq!(w, PrimitiveState::new(2.0, 2.0, vec![1.0]));
        let w = to_primitive(&ConservedState::new(1.0, 0.0, vec![])).unwrap();
        assert_eq!(w, PrimitiveState::new(1.0, 0.0, vec![]));
        let w = to_primitive(&ConservedState::new(1e-3, 1e-6, vec![0.0])).unwrap();
        assert_eq!(w.h, 1e-3);
        assert!((w.u_m - 1e-3).abs() < 1e-18);
        assert_eq!(w.u, vec![0.0]);

        let u = to_conserved(&PrimitiveState::new(2.0, 2.0, vec![1.0])).unwrap();
        assert_eq!(u, ConservedState::new(2.0, 4.0, vec![2.0]));
        let u = to_conserved(&PrimitiveState::new(1.0, 0.0, vec![0.0, 0.0])).unwrap();
        assert_eq!(u, ConservedState::new(1.0, 0.0, vec![0.0, 0.0]));
    }

    #[test]
    fn dry_states_are_rejected() {
        assert!(matches!(
            to_primitive(&ConservedState::new(0.0, 1.0, vec![])),
            Err(Error::DryState { .. })
        ));
        assert!(to_conserved(&PrimitiveState::new(-1.0, 0.0, vec![])).is_err());
        let p = swlme(1, 10.0);
        assert!(flux(&PrimitiveState::new(1e-12, 0.0, vec![0.0]), &p).is_err());
        assert!(max_wave_speed(&PrimitiveState::new(f64::NAN, 0.0, vec![0.0]), &p).is_err());
    }

    #[test]
    fn round_trip_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let order = rng.random_range(0..6);
            let u = ConservedState {
                h: rng.random_range(1e-3..10.0),
                q: rng.random_range(-10.0..10.0),
                r: (0..order).map(|_| rng.random_range(-10.0..10.0)).collect(),
            };
            let back = to_conserved(&to_primitive(&u).unwrap()).unwrap();
            assert_eq!(back.h, u.h);
            assert!(rel_close(back.q, u.q, 1e-15) || (back.q - u.q).abs() < 1e-300);
            for (a, b) in back.r.iter().zip(&u.r) {
                assert!(rel_close(*a, *b, 1e-15));
            }
        }
    }

    #[test]
    fn flux_examples() {
        let p = swlme(1, 10.0);
        let f = flux(&PrimitiveState::new(1.0, 0.0, vec![0.0]), &p).unwrap();
        assert_eq!(f, vec![0.0, 5.0, 0.0]);
        let f = flux(&PrimitiveState::new(1.0, 1.0, vec![1.0]), &p).unwrap();
        assert_eq!(f[0], 1.0);
        assert!((f[1] - (1.0 + 1.0 / 3.0 + 5.0)).abs() < 1e-15);
        assert!((f[1] - 6.3333333333).abs() < 1e-9);
        assert_eq!(f[2], 2.0);
    }

    #[test]
    fn swme_flux_with_zero_moments_equals_swlme() {
        let a = ModelParams::new(9.81, 3, Variant::Swme).unwrap();
        let b = swlme(3, 9.81);
        let w = PrimitiveState::new(1.3, -0.7, vec![0.0; 3]);
        assert_eq!(flux(&w, &a).unwrap(), flux(&w, &b).unwrap());
    }

    #[test]
    fn nonconservative_examples() {
        let p = swlme(1, 10.0);
        let w = PrimitiveState::new(1.0, 2.0, vec![3.0]);
        let zero = ConservedState::zeros(1);
        assert_eq!(nonconservative_rhs(&w, &zero, &p).unwrap(), vec![0.0; 3]);
        let d = ConservedState::new(0.3, -0.2, vec![0.5]);
        assert_eq!(nonconservative_rhs(&w, &d, &p).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn swme_nonconservative_matches_naive_contraction() {
        let p = ModelParams::new(9.81, 2, Variant::Swme).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let w = random_state(&mut rng, 2);
            let d = ConservedState {
                h: rng.random_range(-1.0..1.0),
                q: rng.random_range(-1.0..1.0),
                r: (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
            };
            let got = nonconservative_rhs(&w, &d, &p).unwrap();
            let t = crate::basis::compute_tensors(2, Variant::Swme);
            let mut expected = vec![0.0; 4];
            for i in 0..2 {
                let mut s = 0.0;
                for j in 0..2 {
                    for k in 0..2 {
                        s += t.b(i + 1, j + 1, k + 1) * w.u[k] * d.r[j];
                    }
                }
                expected[i + 2] = w.u_m * d.r[i] - s;
            }
            for (a, b) in got.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-14);
            }
            // The matrix form reproduces the same product.
            let m = nonconservative_matrix(&w, &p).unwrap();
            let dv = nalgebra::DVector::from_vec(d.to_vec());
            let mv = m * dv;
            for (a, b) in mv.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn topo_source_examples() {
        let w = PrimitiveState::new(2.0, 1.0, vec![0.5]);
        assert_eq!(topo_source(&w, 0.0, 10.0), vec![0.0, -0.0, 0.0]);
        let s = topo_source(&w, 0.1, 10.0);
        assert!((s[1] + 2.0).abs() < 1e-15);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[2], 0.0);
        // Uphill slope decelerates positive flow.
        assert!(topo_source(&w, 0.3, 9.81)[1] < 0.0);
    }

    #[test]
    fn energy_examples() {
        let pair = energy(&PrimitiveState::at_rest(1.0, 1), 0.0, 10.0);
        assert_eq!(pair, EnergyPair { e: 5.0, f: 0.0 });
        let pair = energy(&PrimitiveState::new(1.0, 1.0, vec![1.0]), 0.0, 10.0);
        assert!((pair.e - (0.5 + 1.0 / 6.0 + 5.0)).abs() < 1e-15);
        assert!((pair.e - 5.6666667).abs() < 1e-7);
        assert!((pair.f - 11.0).abs() < 1e-14);
    }

    #[test]
    fn energy_reduces_to_swe_for_zero_order() {
        let (h, um, b, g) = (1.7, -0.4, 0.3, 9.81);
        let pair = energy(&PrimitiveState::new(h, um, vec![]), b, g);
        assert_eq!(pair.e, 0.5 * h * um * um + 0.0 + 0.5 * g * h * h + g * h * b);
        let swe_f = 0.5 * h * um * um * um + g * h * um * (h + b);
        assert!((pair.f - swe_f).abs() <= 1e-15 * swe_f.abs());
    }

    #[test]
    fn entropy_vars_examples() {
        let v = entropy_vars(&PrimitiveState::at_rest(1.0, 2), 0.0, 10.0);
        assert_eq!(v.q1, 10.0);
        assert_eq!(v.q2, 0.0);
        assert_eq!(v.q_u, vec![0.0, 0.0]);
        let v = entropy_vars(&PrimitiveState::new(1.0, 1.0, vec![1.0]), 0.0, 10.0);
        assert!((v.q1 - 9.3333333).abs() < 1e-7);
        assert_eq!(v.q2, 1.0);
        assert!((v.q_u[0] - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn entropy_vars_are_exact_on_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let w = random_state(&mut rng, 4);
            let v = entropy_vars(&w, 0.5, 9.81);
            assert_eq!(v.q2, w.u_m);
            for (i, (&qi, &ui)) in v.q_u.iter().zip(&w.u).enumerate() {
                let expected = ui / (2.0 * (i + 1) as f64 + 1.0);
                assert!((qi - expected).abs() <= f64::EPSILON * expected.abs());
            }
        }
    }

    #[test]
    fn boussinesq_examples() {
        assert_eq!(boussinesq_beta(&PrimitiveState::new(1.0, 2.0, vec![0.0, 0.0])).unwrap(), 1.0);
        let b = boussinesq_beta(&PrimitiveState::new(1.0, 0.7, vec![0.7])).unwrap();
        assert!((b - 4.0 / 3.0).abs() < 1e-15);
        let b = boussinesq_beta(&PrimitiveState::new(1.0, 0.7, vec![0.7, 0.7])).unwrap();
        assert!((b - 1.5333333).abs() < 1e-7);
        assert_eq!(
            boussinesq_beta(&PrimitiveState::new(1.0, 0.0, vec![1.0])),
            Err(Error::UndefinedBeta)
        );
    }

    #[test]
    fn sign_flip_of_moments_leaves_energy_and_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let w = random_state(&mut rng, 3);
            let flipped = PrimitiveState {
                u: w.u.iter().map(|v| -v).collect(),
                ..w.clone()
            };
            assert_eq!(energy(&w, 0.2, 9.81), energy(&flipped, 0.2, 9.81));
            if w.u_m != 0.0 {
                assert_eq!(boussinesq_beta(&w).unwrap(), boussinesq_beta(&flipped).unwrap());
            }
        }
    }

    #[test]
    fn rest_state_eigenvalues() {
        let p = swlme(0, 10.0);
        let q = quasilinear_matrix(&PrimitiveState::at_rest(1.0, 0), &p).unwrap();
        let mut ev: Vec<f64> = eigenvalues(&q).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 10f64.sqrt()).abs() < 1e-12);
        assert!((ev[1] - 10f64.sqrt()).abs() < 1e-12);
    }

    fn fd_jacobian(w: &PrimitiveState, p: &ModelParams) -> DMatrix<f64> {
        let u = to_conserved(w).unwrap().to_vec();
        let nv = u.len();
        let mut jac = DMatrix::zeros(nv, nv);
        for col in 0..nv {
            let step = 1e-6 * u[col].abs().max(1.0);
            let mut up = u.clone();
            let mut dn = u.clone();
            up[col] += step;
            dn[col] -= step;
            let fp = flux(&to_primitive(&ConservedState::from_slice(&up)).unwrap(), p).unwrap();
            let fm = flux(&to_primitive(&ConservedState::from_slice(&dn)).unwrap(), p).unwrap();
            for row in 0..nv {
                jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * step);
            }
        }
        jac
    }

    #[test]
    fn flux_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for variant in [Variant::Swlme, Variant::Swme] {
            for _ in 0..100 {
                let order = rng.random_range(0..4);
                let p = ModelParams::new(9.81, order, variant).unwrap();
                let w = random_state(&mut rng, order);
                let exact = flux_jacobian(&w, &p).unwrap();
                let fd = fd_jacobian(&w, &p);
                let scale = exact.amax().max(1.0);
                let err = (&exact - &fd).amax();
                assert!(err <= 1e-6 * scale, "err={err} scale={scale}");
            }
        }
    }

    #[test]
    fn zero_moments_decouple_with_speed_um() {
        let p = swlme(3, 9.81);
        let w = PrimitiveState::new(1.5, 0.8, vec![0.0; 3]);
        let q = quasilinear_matrix(&w, &p).unwrap();
        for i in 2..5 {
            for j in 0..5 {
                let expected = if i == j { 0.8 } else { 0.0 };
                assert_eq!(q[(i, j)], expected);
            }
        }
        let mut ev: Vec<f64> = eigenvalues(&q).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        let c = (9.81f64 * 1.5).sqrt();
        assert!((ev[0] - (0.8 - c)).abs() < 1e-12);
        assert!((ev[4] - (0.8 + c)).abs() < 1e-12);
        for v in &ev[1..4] {
            assert!((v - 0.8).abs() < 1e-7);
        }
    }

    #[test]
    fn wave_speed_examples() {
        let s = max_wave_speed(&PrimitiveState::at_rest(1.0, 0), &swlme(0, 10.0)).unwrap();
        assert!((s - 10f64.sqrt()).abs() < 1e-15);
        let p = swlme(1, 10.0);
        let w = PrimitiveState::new(1.0, 0.0, vec![1.0]);
        let s = max_wave_speed(&w, &p).unwrap();
        assert!((s - 11f64.sqrt()).abs() < 1e-15);
        assert!((s - 3.3166).abs() < 1e-4);
        let checked = checked_max_wave_speed(&w, &p).unwrap();
        assert!(!checked.bound_exceeded);
        assert!(checked.spectral_radius <= s * (1.0 + 1e-12));
    }

    #[test]
    fn wave_speed_bound_dominates_spectral_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20_000 {
            let order = rng.random_range(0..6);
            let p = swlme(order, if rng.random_bool(0.5) { 1.0 } else { 9.81 });
            let w = random_state(&mut rng, order);
            let bound = max_wave_speed(&w, &p).unwrap();
            let radius = spectral_radius(&w, &p).unwrap();
            assert!(radius <= bound * (1.0 + 1e-10), "bound {bound} radius {radius}");
        }
        // First-order SWME shares the same characteristic speeds.
        let p = ModelParams::new(9.81, 1, Variant::Swme).unwrap();
        for _ in 0..2000 {
            let w = random_state(&mut rng, 1);
            let c = checked_max_wave_speed(&w, &p).unwrap();
            assert!(!c.bound_exceeded, "{c:?}");
        }
    }

    #[test]
    fn energy_is_strictly_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let order = rng.random_range(0..4);
            let w = random_state(&mut rng, order);
            let b = rng.random_range(0.0..1.0);
            let u = to_conserved(&w).unwrap().to_vec();
            let nv = u.len();
            let e = |v: &[f64]| energy_density_conserved(&ConservedState::from_slice(v), b, 9.81);
            let mut hess = DMatrix::zeros(nv, nv);
            for a in 0..nv {
                for c in 0..nv {
                    let ha = 1e-4 * u[a].abs().max(1.0);
                    let hc = 1e-4 * u[c].abs().max(1.0);
                    let eval = |sa: f64, sc: f64| {
                        let mut v = u.clone();
                        v[a] += sa * ha;
                        v[c] += sc * hc;
                        e(&v)
                    };
                    hess[(a, c)] =
                        (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                            / (4.0 * ha * hc);
                }
            }
            let hess = 0.5 * (&hess + hess.transpose());
            let eig = SymmetricEigen::new(hess);
            assert!(eig.eigenvalues.iter().all(|&l| l > 0.0), "{:?}", eig.eigenvalues);
        }
    }

    #[test]
    fn conserved_energy_matches_primitive_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let w = random_state(&mut rng, 3);
            let u = to_conserved(&w).unwrap();
            let a = energy(&w, 0.4, 9.81).e;
            let b = energy_density_conserved(&u, 0.4, 9.81);
            assert!(rel_close(a, b, 1e-13));
        }
    }

    #[test]
    fn moment_nullity() {
        let p = swlme(4, 9.81);
        let w = PrimitiveState::new(2.0, 1.3, vec![0.0; 4]);
        let f = flux(&w, &p).unwrap();
        assert!(f[2..].iter().all(|&v| v == 0.0));
        let d = ConservedState::new(0.1, 0.2, vec![0.0; 4]);
        assert!(nonconservative_rhs(&w, &d, &p).unwrap().iter().all(|&v| v == 0.0));
        assert!(entropy_vars(&w, 0.0, 9.81).q_u.iter().all(|&v| v == 0.0));
    }
}
