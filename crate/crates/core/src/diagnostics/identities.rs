//! Pointwise checks of the energy-equation derivation.
//!
//! Every equation is expanded with the product rule into a sum of terms in the
//! field values and independent derivative slots of a [`FreeSample`]. An
//! identity `X = Y` is checked through `|Σ X − Σ Y| / (scale(X) + scale(Y))`,
//! where the scale is the sum of absolute values of all terms.

use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{moment_weight, EntropyVars, PrimitiveState};

/// Field values plus independent time/space derivative slots.
///
/// No compatibility between values and derivatives is assumed; the checked
/// identities only use linearity and the product rule.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeSample {
    pub h: f64,
    pub u_m: f64,
    pub u: Vec<f64>,
    pub b: f64,
    pub dt_h: f64,
    pub dx_h: f64,
    pub dt_um: f64,
    pub dx_um: f64,
    pub dt_u: Vec<f64>,
    pub dx_u: Vec<f64>,
    pub dx_b: f64,
}

impl FreeSample {
    /// Sample with all derivative slots zero.
    pub fn at_state(h: f64, u_m: f64, u: Vec<f64>, b: f64) -> Self {
        let n = u.len();
        FreeSample {
            h,
            u_m,
            u,
            b,
            dt_h: 0.0,
            dx_h: 0.0,
            dt_um: 0.0,
            dx_um: 0.0,
            dt_u: vec![0.0; n],
            dx_u: vec![0.0; n],
            dx_b: 0.0,
        }
    }

    /// Random sample with O(1) values: `h ∈ [0.1, 2]`, velocities in `[−2, 2]`,
    /// `b ∈ [0, 1]`, derivative slots in `[−1, 1]`.
    pub fn random<R: Rng>(rng: &mut R, order: usize) -> Self {
        let slot = |rng: &mut R| rng.random_range(-1.0..1.0);
        FreeSample {
            h: rng.random_range(0.1..2.0),
            u_m: rng.random_range(-2.0..2.0),
            u: (0..order).map(|_| rng.random_range(-2.0..2.0)).collect(),
            b: rng.random_range(0.0..1.0),
            dt_h: slot(rng),
            dx_h: slot(rng),
            dt_um: slot(rng),
            dx_um: slot(rng),
            dt_u: (0..order).map(|_| slot(rng)).collect(),
            dx_u: (0..order).map(|_| slot(rng)).collect(),
            dx_b: slot(rng),
        }
    }

    pub fn order(&self) -> usize {
        self.u.len()
    }

    pub fn primitive(&self) -> PrimitiveState {
        PrimitiveState::new(self.h, self.u_m, self.u.clone())
    }
}

/// A sum of terms, tracked with the sum of their magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Terms {
    pub value: f64,
    pub scale: f64,
}

impl Terms {
    fn of(terms: &[f64]) -> Self {
        terms.iter().fold(Terms::default(), |acc, &t| acc.push(t))
    }

    fn push(self, term: f64) -> Self {
        Terms {
            value: self.value + term,
            scale: self.scale + term.abs(),
        }
    }

    /// Relative defect against another expansion of the same quantity.
    pub fn defect(self, other: Terms) -> f64 {
        let scale = self.scale + other.scale;
        if scale == 0.0 {
            0.0
        } else {
            (self.value - other.value).abs() / scale
        }
    }
}

impl Add for Terms {
    type Output = Terms;
    fn add(self, rhs: Terms) -> Terms {
        Terms {
            value: self.value + rhs.value,
            scale: self.scale + rhs.scale,
        }
    }
}

impl Sub for Terms {
    type Output = Terms;
    fn sub(self, rhs: Terms) -> Terms {
        self + (-rhs)
    }
}

impl Neg for Terms {
    type Output = Terms;
    fn neg(self) -> Terms {
        Terms {
            value: -self.value,
            scale: self.scale,
        }
    }
}

impl Mul<Terms> for f64 {
    type Output = Terms;
    fn mul(self, rhs: Terms) -> Terms {
        Terms {
            value: self * rhs.value,
            scale: self.abs() * rhs.scale,
        }
    }
}

impl std::iter::Sum for Terms {
    fn sum<I: Iterator<Item = Terms>>(iter: I) -> Terms {
        iter.fold(Terms::default(), Add::add)
    }
}

/// Left-hand side minus right-hand side of the three model equations.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelResiduals {
    pub continuity: Terms,
    pub momentum: Terms,
    pub moments: Vec<Terms>,
}

impl ModelResiduals {
    /// Residual values in the order `(C, M, u_1, .., u_N)`.
    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![self.continuity.value, self.momentum.value];
        v.extend(self.moments.iter().map(|t| t.value));
        v
    }
}

fn continuity(s: &FreeSample) -> Terms {
    Terms::of(&[s.dt_h, s.dx_h * s.u_m, s.h * s.dx_um])
}

/// `∂x Σ h u_j²/(2j+1)`.
fn moment_pressure_dx(s: &FreeSample) -> Terms {
    (0..s.order())
        .map(|j| {
            let c = moment_weight(j + 1);
            let uj = s.u[j];
            Terms::of(&[c * s.dx_h * uj * uj, 2.0 * c * s.h * uj * s.dx_u[j]])
        })
        .sum()
}

fn momentum(s: &FreeSample, g: f64) -> Terms {
    // ∂t(h u_m) + ∂x(h u_m² + h Σ + g h²/2) + g h ∂x b
    Terms::of(&[
        s.dt_h * s.u_m,
        s.h * s.dt_um,
        s.dx_h * s.u_m * s.u_m,
        2.0 * s.h * s.u_m * s.dx_um,
        0.5 * g * 2.0 * s.h * s.dx_h,
        g * s.h * s.dx_b,
    ]) + moment_pressure_dx(s)
}

fn moment_equation(s: &FreeSample, i: usize) -> Terms {
    // ∂t(h u_i) + ∂x(2 h u_m u_i) − u_m ∂x(h u_i)
    let ui = s.u[i];
    Terms::of(&[
        s.dt_h * ui,
        s.h * s.dt_u[i],
        2.0 * s.dx_h * s.u_m * ui,
        2.0 * s.h * s.dx_um * ui,
        2.0 * s.h * s.u_m * s.dx_u[i],
        -s.u_m * s.dx_h * ui,
        -s.u_m * s.h * s.dx_u[i],
    ])
}

/// Residuals of the continuity, momentum and moment equations at a sample.
pub fn residual_c_m_ui(s: &FreeSample, g: f64) -> ModelResiduals {
    ModelResiduals {
        continuity: continuity(s),
        momentum: momentum(s, g),
        moments: (0..s.order()).map(|i| moment_equation(s, i)).collect(),
    }
}

/// How the energy flux is expanded; the corrupted form exists to prove the
/// checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyFluxForm {
    #[default]
    Exact,
    /// Uses `½ h u_m Σ` instead of `3/2 h u_m Σ` in the flux.
    Corrupted,
}

/// `∂t e + ∂x f` expanded on the sample slots.
pub fn energy_residual(s: &FreeSample, g: f64, form: EnergyFluxForm) -> Terms {
    let (h, um, b) = (s.h, s.u_m, s.b);
    let flux_coeff = match form {
        EnergyFluxForm::Exact => 1.5,
        EnergyFluxForm::Corrupted => 0.5,
    };
    let dt_e = Terms::of(&[
        0.5 * s.dt_h * um * um,
        h * um * s.dt_um,
        g * h * s.dt_h,
        g * b * s.dt_h,
    ]) + (0..s.order())
        .map(|j| {
            let c = moment_weight(j + 1);
            Terms::of(&[0.5 * c * s.dt_h * s.u[j] * s.u[j], c * h * s.u[j] * s.dt_u[j]])
        })
        .sum();
    let dx_f = Terms::of(&[
        0.5 * s.dx_h * um * um * um,
        1.5 * h * um * um * s.dx_um,
        g * s.dx_h * um * h,
        g * s.dx_h * um * b,
        g * h * s.dx_um * h,
        g * h * s.dx_um * b,
        g * h * um * s.dx_h,
        g * h * um * s.dx_b,
    ]) + (0..s.order())
        .map(|j| {
            let c = moment_weight(j + 1);
            let uj = s.u[j];
            Terms::of(&[
                flux_coeff * c * s.dx_h * um * uj * uj,
                flux_coeff * c * h * s.dx_um * uj * uj,
                2.0 * flux_coeff * c * h * um * uj * s.dx_u[j],
            ])
        })
        .sum();
    dt_e + dx_f
}

fn entropy_variables(s: &FreeSample, g: f64) -> EntropyVars {
    crate::model::entropy_vars(&s.primitive(), s.b, g)
}

/// Entropy variables applied to the residuals: `q1·r_h + q2·r_q + Σ q_ui·r_i`.
pub fn entropy_combination(s: &FreeSample, g: f64) -> Terms {
    let r = residual_c_m_ui(s, g);
    let v = entropy_variables(s, g);
    v.q1 * r.continuity
        + v.q2 * r.momentum
        + v.q_u.iter().zip(&r.moments).map(|(&q, &m)| q * m).sum()
}

/// Relative defect between the entropy-variable combination of the model
/// equations and the total energy equation.
pub fn check_total_energy_identity(s: &FreeSample, g: f64) -> f64 {
    check_total_energy_identity_with(s, g, EnergyFluxForm::Exact)
}

pub fn check_total_energy_identity_with(s: &FreeSample, g: f64, form: EnergyFluxForm) -> f64 {
    entropy_combination(s, g).defect(energy_residual(s, g, form))
}

/// Individual steps of the energy derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DerivationStep {
    /// Momentum with `g h ∂x(h + b)` agrees with the `½ g ∂x h² + g h ∂x b` form.
    MomentumRewrite,
    /// Potential energy equals `g(h + b)` times continuity.
    PotentialEnergy,
    /// Advective momentum form: momentum minus `u_m` times continuity.
    AdvectiveMomentum,
    /// Skew-symmetric momentum: average of the advective and conservative forms.
    SkewMomentum,
    /// Mean kinetic energy: `u_m` times the skew-symmetric momentum.
    KineticEnergy,
    /// Moment equation with the nonconservative term folded in.
    MomentRewrite,
    /// Advective moment form: rewritten moment minus `u_i` times continuity.
    AdvectiveMoment,
    /// Skew-symmetric moment average.
    SkewMoment,
    /// Partial kinetic energy: `u_i/(2i+1)` times the skew-symmetric moment.
    PartialKineticEnergy,
    /// Total kinetic energy: mean plus all partial kinetic energies.
    TotalKineticEnergy,
    /// Total energy: total kinetic plus potential energy.
    TotalEnergy,
}

impl DerivationStep {
    pub const ALL: [DerivationStep; 11] = [
        DerivationStep::MomentumRewrite,
        DerivationStep::PotentialEnergy,
        DerivationStep::AdvectiveMomentum,
        DerivationStep::SkewMomentum,
        DerivationStep::KineticEnergy,
        DerivationStep::MomentRewrite,
        DerivationStep::AdvectiveMoment,
        DerivationStep::SkewMoment,
        DerivationStep::PartialKineticEnergy,
        DerivationStep::TotalKineticEnergy,
        DerivationStep::TotalEnergy,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DerivationStep::MomentumRewrite => "momentum rewrite",
            DerivationStep::PotentialEnergy => "potential energy",
            DerivationStep::AdvectiveMomentum => "advective momentum",
            DerivationStep::SkewMomentum => "skew-symmetric momentum",
            DerivationStep::KineticEnergy => "kinetic energy",
            DerivationStep::MomentRewrite => "moment rewrite",
            DerivationStep::AdvectiveMoment => "advective moment",
            DerivationStep::SkewMoment => "skew-symmetric moment",
            DerivationStep::PartialKineticEnergy => "partial kinetic energy",
            DerivationStep::TotalKineticEnergy => "total kinetic energy",
            DerivationStep::TotalEnergy => "total energy",
        }
    }
}

// Displayed forms of the intermediate equations, each expanded directly.

fn momentum_rewritten(s: &FreeSample, g: f64) -> Terms {
    // ∂t(h u_m) + ∂x(h u_m² + h Σ) + g h ∂x(h + b)
    Terms::of(&[
        s.dt_h * s.u_m,
        s.h * s.dt_um,
        s.dx_h * s.u_m * s.u_m,
        2.0 * s.h * s.u_m * s.dx_um,
        g * s.h * (s.dx_h + s.dx_b),
    ]) + moment_pressure_dx(s)
}

fn potential_energy(s: &FreeSample, g: f64) -> Terms {
    // ∂t(g h²/2 + g h b) + g(h + b) ∂x(h u_m)
    Terms::of(&[
        g * s.h * s.dt_h,
        g * s.b * s.dt_h,
        g * (s.h + s.b) * s.dx_h * s.u_m,
        g * (s.h + s.b) * s.h * s.dx_um,
    ])
}

fn advective_momentum(s: &FreeSample, g: f64) -> Terms {
    // h ∂t u_m + h u_m ∂x u_m + g h ∂x(h + b) + ∂x Σ h u_j²/(2j+1)
    Terms::of(&[
        s.h * s.dt_um,
        s.h * s.u_m * s.dx_um,
        g * s.h * (s.dx_h + s.dx_b),
    ]) + moment_pressure_dx(s)
}

fn skew_momentum(s: &FreeSample, g: f64) -> Terms {
    // ½(∂t(h u_m) + h ∂t u_m) + ½(∂x(h u_m²) + h u_m ∂x u_m) + g h ∂x(h + b) + ∂x Σ
    Terms::of(&[
        0.5 * (s.dt_h * s.u_m + s.h * s.dt_um),
        0.5 * s.h * s.dt_um,
        0.5 * (s.dx_h * s.u_m * s.u_m + 2.0 * s.h * s.u_m * s.dx_um),
        0.5 * s.h * s.u_m * s.dx_um,
        g * s.h * (s.dx_h + s.dx_b),
    ]) + moment_pressure_dx(s)
}

fn kinetic_energy(s: &FreeSample, g: f64) -> Terms {
    // ∂t(h u_m²/2) + ∂x(h u_m³/2) + g h u_m ∂x(h + b) + u_m ∂x Σ
    Terms::of(&[
        0.5 * s.dt_h * s.u_m * s.u_m,
        s.h * s.u_m * s.dt_um,
        0.5 * s.dx_h * s.u_m.powi(3),
        1.5 * s.h * s.u_m * s.u_m * s.dx_um,
        g * s.h * s.u_m * (s.dx_h + s.dx_b),
    ]) + s.u_m * moment_pressure_dx(s)
}

fn moment_rewritten(s: &FreeSample, i: usize) -> Terms {
    // ∂t(h u_i) + ∂x(h u_m u_i) + h u_i ∂x u_m
    let ui = s.u[i];
    Terms::of(&[
        s.dt_h * ui,
        s.h * s.dt_u[i],
        s.dx_h * s.u_m * ui,
        s.h * s.dx_um * ui,
        s.h * s.u_m * s.dx_u[i],
        s.h * ui * s.dx_um,
    ])
}

fn advective_moment(s: &FreeSample, i: usize) -> Terms {
    // h ∂t u_i + h u_m ∂x u_i + h u_i ∂x u_m
    Terms::of(&[
        s.h * s.dt_u[i],
        s.h * s.u_m * s.dx_u[i],
        s.h * s.u[i] * s.dx_um,
    ])
}

fn skew_moment(s: &FreeSample, i: usize) -> Terms {
    // ½(∂t(h u_i) + h ∂t u_i) + ½(∂x(h u_m u_i) + h u_m ∂x u_i) + h u_i ∂x u_m
    let ui = s.u[i];
    Terms::of(&[
        0.5 * (s.dt_h * ui + s.h * s.dt_u[i]),
        0.5 * s.h * s.dt_u[i],
        0.5 * (s.dx_h * s.u_m * ui + s.h * s.dx_um * ui + s.h * s.u_m * s.dx_u[i]),
        0.5 * s.h * s.u_m * s.dx_u[i],
        s.h * ui * s.dx_um,
    ])
}

fn partial_kinetic_energy(s: &FreeSample, i: usize) -> Terms {
    // ∂t(h u_i²/(2(2i+1))) + ∂x(h u_m u_i²/(2(2i+1))) + h u_i²/(2i+1) ∂x u_m
    let c = moment_weight(i + 1);
    let ui = s.u[i];
    Terms::of(&[
        0.5 * c * s.dt_h * ui * ui,
        c * s.h * ui * s.dt_u[i],
        0.5 * c * s.dx_h * s.u_m * ui * ui,
        0.5 * c * s.h * s.dx_um * ui * ui,
        c * s.h * s.u_m * ui * s.dx_u[i],
        c * s.h * ui * ui * s.dx_um,
    ])
}

fn total_kinetic_energy(s: &FreeSample, g: f64) -> Terms {
    // ∂t(h u_m²/2 + h/2 Σ) + ∂x(h u_m³/2) + g h u_m ∂x(h + b) + ∂x(3/2 h u_m Σ)
    let mean = Terms::of(&[
        0.5 * s.dt_h * s.u_m * s.u_m,
        s.h * s.u_m * s.dt_um,
        0.5 * s.dx_h * s.u_m.powi(3),
        1.5 * s.h * s.u_m * s.u_m * s.dx_um,
        g * s.h * s.u_m * (s.dx_h + s.dx_b),
    ]);
    let moments: Terms = (0..s.order())
        .map(|j| {
            let c = moment_weight(j + 1);
            let uj = s.u[j];
            Terms::of(&[
                0.5 * c * s.dt_h * uj * uj,
                c * s.h * uj * s.dt_u[j],
                1.5 * c * s.dx_h * s.u_m * uj * uj,
                1.5 * c * s.h * s.dx_um * uj * uj,
                3.0 * c * s.h * s.u_m * uj * s.dx_u[j],
            ])
        })
        .sum();
    mean + moments
}

/// Defects of every derivation step at one sample, in [`DerivationStep::ALL`] order.
/// Moment steps report the maximum over `i`; for `N = 0` they are zero.
pub fn check_skew_forms(s: &FreeSample, g: f64) -> Vec<(DerivationStep, f64)> {
    let c = continuity(s);
    let m = momentum(s, g);
    let m_prime = momentum_rewritten(s, g);
    let p = potential_energy(s, g);
    let a = advective_momentum(s, g);
    let sk = skew_momentum(s, g);
    let k = kinetic_energy(s, g);
    let ku = total_kinetic_energy(s, g);
    let e = energy_residual(s, g, EnergyFluxForm::Exact);

    let mut moment_defects = [0.0f64; 4];
    let mut partial_sum = Terms::default();
    for i in 0..s.order() {
        let ui = s.u[i];
        let eq = moment_equation(s, i);
        let eq_prime = moment_rewritten(s, i);
        let au = advective_moment(s, i);
        let su = skew_moment(s, i);
        let kui = partial_kinetic_energy(s, i);
        let defects = [
            eq_prime.defect(eq),
            au.defect(eq_prime - ui * c),
            su.defect(0.5 * au + 0.5 * eq_prime),
            kui.defect((moment_weight(i + 1) * ui) * su),
        ];
        for (acc, d) in moment_defects.iter_mut().zip(defects) {
            *acc = acc.max(d);
        }
        partial_sum = partial_sum + kui;
    }

    vec![
        (DerivationStep::MomentumRewrite, m_prime.defect(m)),
        (DerivationStep::PotentialEnergy, p.defect(g * (s.h + s.b) * c)),
        (DerivationStep::AdvectiveMomentum, a.defect(m_prime - s.u_m * c)),
        (DerivationStep::SkewMomentum, sk.defect(0.5 * a + 0.5 * m_prime)),
        (DerivationStep::KineticEnergy, k.defect(s.u_m * sk)),
        (DerivationStep::MomentRewrite, moment_defects[0]),
        (DerivationStep::AdvectiveMoment, moment_defects[1]),
        (DerivationStep::SkewMoment, moment_defects[2]),
        (DerivationStep::PartialKineticEnergy, moment_defects[3]),
        (DerivationStep::TotalKineticEnergy, ku.defect(k + partial_sum)),
        (DerivationStep::TotalEnergy, e.defect(ku + p)),
    ]
}

/// Deterministic RNG for chunk `chunk` of the batch for moment order `order`.
pub(crate) fn chunk_rng(seed: u64, order: usize, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((order as u64) << 40) ^ chunk as u64);
    rng
}
