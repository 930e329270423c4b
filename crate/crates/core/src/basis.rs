//! Shifted Legendre basis on `[0, 1]`, Gauss–Legendre rules and closure tensors.
//!
//! The basis is normalized so that `φ_i(0) = 1`, which gives `φ_1(ζ) = 1 − 2ζ`
//! and `∫₀¹ φ_i φ_j dζ = δ_ij / (2i + 1)`. Internally every polynomial is
//! evaluated as `P_i(x)` with `x = 1 − 2ζ` so that integrands that are odd
//! about `ζ = 1/2` sum to exactly zero on the (exactly mirrored) Gauss nodes.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Which member of the moment hierarchy the tensors describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Linearized moment equations: `A = B = 0`.
    Swlme,
    /// Full moment equations with quadrature-built `A`, `B`.
    Swme,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Swlme => "swlme",
            Variant::Swme => "swme",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "swlme" => Ok(Variant::Swlme),
            "swme" => Ok(Variant::Swme),
            other => Err(Error::Usage(format!(
                "unknown variant `{other}` (expected swlme or swme)"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_zeta(zeta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&zeta) {
        Ok(())
    } else {
        Err(Error::Usage(format!("zeta = {zeta} outside [0, 1]")))
    }
}

/// Legendre values `P_0(x) ..= P_n(x)` by the three-term recurrence.
fn legendre_table(n: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(x);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        p.push(next);
    }
    p
}

fn legendre(n: usize, x: f64) -> f64 {
    legendre_table(n, x)[n]
}

/// `P_n'(x)` via `P'_{k+1} = P'_{k-1} + (2k + 1) P_k`.
fn legendre_derivative(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = legendre_table(n, x);
    let mut d_prev = 0.0; // P_0'
    let mut d_curr = 1.0; // P_1'
    for k in 1..n {
        let d_next = d_prev + (2.0 * k as f64 + 1.0) * p[k];
        d_prev = d_curr;
        d_curr = d_next;
    }
    d_curr
}

// Unchecked evaluations in reference coordinate x = 1 − 2ζ.

fn phi_x(i: usize, x: f64) -> f64 {
    legendre(i, x)
}

fn phi_prime_x(i: usize, x: f64) -> f64 {
    -2.0 * legendre_derivative(i, x)
}

fn phi_antiderivative_x(i: usize, x: f64) -> f64 {
    if i == 0 {
        return 0.5 * (1.0 - x);
    }
    let p = legendre_table(i + 1, x);
    (p[i - 1] - p[i + 1]) / (2.0 * (2.0 * i as f64 + 1.0))
}

/// Shifted Legendre polynomial `φ_i(ζ)`.
pub fn phi(i: usize, zeta: f64) -> Result<f64> {
    check_zeta(zeta)?;
    Ok(phi_x(i, 1.0 - 2.0 * zeta))
}

/// Derivative `dφ_i/dζ`.
pub fn phi_prime(i: usize, zeta: f64) -> Result<f64> {
    check_zeta(zeta)?;
    Ok(phi_prime_x(i, 1.0 - 2.0 * zeta))
}

/// `∫₀^ζ φ_i(s) ds`. Vanishes at `ζ = 1` for `i ≥ 1`.
pub fn phi_antiderivative(i: usize, zeta: f64) -> Result<f64> {
    check_zeta(zeta)?;
    if i == 0 {
        return Ok(zeta);
    }
    Ok(phi_antiderivative_x(i, 1.0 - 2.0 * zeta))
}

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }
}

/// Reference rule on `[-1, 1]` with exactly mirrored nodes: `x[n-1-k] == -x[k]`.
/// Nodes are returned in decreasing order of `x` (increasing `ζ`).
#[derive(Debug, Clone)]
struct ReferenceRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl ReferenceRule {
    fn new(n: usize) -> Self {
        debug_assert!(n >= 1);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        for k in 0..n.div_ceil(2) {
            // Tricomi initial guess for the k-th largest root.
            let mut root = (PI * (k as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let p = legendre(n, root);
                let dp = legendre_derivative(n, root);
                let delta = p / dp;
                root -= delta;
                if delta.abs() <= 1e-16 * root.abs().max(1.0) {
                    break;
                }
            }
            if 2 * k + 1 == n {
                root = 0.0;
            }
            let dp = legendre_derivative(n, root);
            let weight = 2.0 / ((1.0 - root * root) * dp * dp);
            x[k] = root;
            w[k] = weight;
            x[n - 1 - k] = -root;
            w[n - 1 - k] = weight;
        }
        ReferenceRule { x, w }
    }

    /// `∫₀¹ f dζ` for `f` given in terms of `x`, summing mirrored pairs first
    /// so odd integrands cancel exactly.
    fn integrate_zeta<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let n = self.x.len();
        let mut total = 0.0;
        for k in 0..n / 2 {
            total += self.w[k] * (f(self.x[k]) + f(self.x[n - 1 - k]));
        }
        if n % 2 == 1 {
            total += self.w[n / 2] * f(self.x[n / 2]);
        }
        0.5 * total
    }
}

/// Gauss–Legendre rule with `n` nodes mapped to `[0, 1]`, exact to degree `2n − 1`.
pub fn gauss_rule(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::Usage("quadrature node count must be >= 1".into()));
    }
    let reference = ReferenceRule::new(n);
    let nodes = reference.x.iter().map(|&x| 0.5 * (1.0 - x)).collect();
    let weights = reference.w.iter().map(|&w| 0.5 * w).collect();
    Ok(QuadratureRule { nodes, weights })
}

/// Closure tensors `A_ijk`, `B_ijk` for moment order `N`.
///
/// Logical indices `i, j, k` run over `1..=N`; storage is dense and 0-based,
/// entry `(i, j, k)` at `((i-1) N + (j-1)) N + (k-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureTensors {
    order: usize,
    variant: Variant,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ClosureTensors {
    /// All-zero tensors of the given order.
    pub(crate) fn zeros(order: usize, variant: Variant) -> Self {
        let len = order * order * order;
        ClosureTensors {
            order,
            variant,
            a: vec![0.0; len],
            b: vec![0.0; len],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!((1..=self.order).contains(&i));
        debug_assert!((1..=self.order).contains(&j));
        debug_assert!((1..=self.order).contains(&k));
        let n = self.order;
        ((i - 1) * n + (j - 1)) * n + (k - 1)
    }

    /// `A_ijk` with 1-based indices.
    #[inline]
    pub fn a(&self, i: usize, j: usize, k: usize) -> f64 {
        self.a[self.index(i, j, k)]
    }

    /// `B_ijk` with 1-based indices.
    #[inline]
    pub fn b(&self, i: usize, j: usize, k: usize) -> f64 {
        self.b[self.index(i, j, k)]
    }

    /// True when every entry of both tensors is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(&self.b).all(|&v| v == 0.0)
    }

    /// Iterate `(i, j, k, A_ijk, B_ijk)` in row-major 1-based order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64, f64)> + '_ {
        let n = self.order;
        (1..=n).flat_map(move |i| {
            (1..=n).flat_map(move |j| (1..=n).map(move |k| (i, j, k, self.a(i, j, k), self.b(i, j, k))))
        })
    }
}

/// Node count used by [`compute_tensors`]: `⌈(3N + 1)/2⌉ + 2`.
pub fn tensor_node_count(order: usize) -> usize {
    (3 * order + 1).div_ceil(2) + 2
}

/// Closure tensors for moment order `N`. SWLME tensors are identically zero.
pub fn compute_tensors(order: usize, variant: Variant) -> ClosureTensors {
    compute_tensors_with_nodes(order, variant, tensor_node_count(order))
}

/// As [`compute_tensors`] with an explicit quadrature node count.
pub fn compute_tensors_with_nodes(order: usize, variant: Variant, nodes: usize) -> ClosureTensors {
    let mut tensors = ClosureTensors::zeros(order, variant);
    if variant == Variant::Swlme || order == 0 {
        return tensors;
    }
    let rule = ReferenceRule::new(nodes.max(1));
    for i in 1..=order {
        let scale = 2.0 * i as f64 + 1.0;
        for j in 1..=order {
            for k in 1..=order {
                let a = if k < j {
                    tensors.a[tensors.index(i, k, j)]
                } else {
                    scale * rule.integrate_zeta(|x| phi_x(i, x) * phi_x(j, x) * phi_x(k, x))
                };
                let b = scale
                    * rule.integrate_zeta(|x| {
                        phi_prime_x(i, x) * phi_antiderivative_x(j, x) * phi_x(k, x)
                    });
                let idx = tensors.index(i, j, k);
                tensors.a[idx] = a;
                tensors.b[idx] = b;
            }
        }
    }
    tensors
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Coefficients of `φ_n(ζ) = Σ_k (−1)^k C(n,k) C(n+k,k) ζ^k`.
    fn monomial_coeffs(n: usize) -> Vec<f64> {
        fn binom(n: usize, k: usize) -> f64 {
            (0..k).fold(1.0, |acc, m| acc * (n - m) as f64 / (m + 1) as f64)
        }
        (0..=n)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * binom(n, k) * binom(n + k, k)
            })
            .collect()
    }

    fn poly_eval(p: &[f64], z: f64) -> f64 {
        p.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    #[test]
    fn phi_trivial_values() {
        assert_eq!(phi(0, 0.7).unwrap(), 1.0);
        assert_eq!(phi(1, 0.5).unwrap(), 0.0);
        assert_eq!(phi(2, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn phi_rejects_out_of_range_zeta() {
        assert!(matches!(phi(1, -0.1), Err(Error::Usage(_))));
        assert!(matches!(phi_prime(1, 1.5), Err(Error::Usage(_))));
        assert!(phi_antiderivative(1, f64::NAN).is_err());
    }

    #[test]
    fn phi_matches_monomial_form() {
        for n in 0..=8 {
            let c = monomial_coeffs(n);
            for k in 0..=20 {
                let z = k as f64 / 20.0;
                let expected = poly_eval(&c, z);
                assert!((phi(n, z).unwrap() - expected).abs() < 1e-10, "n={n} z={z}");
            }
        }
    }

    #[test]
    fn phi_prime_values() {
        assert_eq!(phi_prime(0, 0.3).unwrap(), 0.0);
        assert_eq!(phi_prime(1, 0.9).unwrap(), -2.0);
        // Finite-difference oracle on φ_2, symmetric about 1/2.
        let h = 1e-5;
        let fd = (phi(2, 0.5 + h).unwrap() - phi(2, 0.5 - h).unwrap()) / (2.0 * h);
        assert!(fd.abs() < 1e-8);
        assert!(phi_prime(2, 0.5).unwrap().abs() < 1e-15);
    }

    #[test]
    fn phi_prime_matches_finite_differences() {
        let h = 1e-6;
        for i in 0..=8 {
            for k in 1..20 {
                let z = k as f64 / 20.0;
                let fd = (phi(i, z + h).unwrap() - phi(i, z - h).unwrap()) / (2.0 * h);
                let d = phi_prime(i, z).unwrap();
                assert!((fd - d).abs() < 1e-7 * d.abs().max(1.0), "i={i} z={z} fd={fd} d={d}");
            }
        }
    }

    #[test]
    fn antiderivative_values() {
        assert_eq!(phi_antiderivative(0, 0.25).unwrap(), 0.25);
        assert_eq!(phi_antiderivative(1, 1.0).unwrap(), 0.0);
        // Closed form ζ − ζ² at 1/2, cross-checked by quadrature of φ_1 on [0, 1/2].
        let v = phi_antiderivative(1, 0.5).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        let rule = gauss_rule(4).unwrap();
        let quad = 0.5 * rule.integrate(|s| phi(1, 0.5 * s).unwrap());
        assert!((quad - 0.25).abs() < 1e-15);
    }

    #[test]
    fn antiderivative_endpoints() {
        for i in 1..=8 {
            assert_eq!(phi_antiderivative(i, 0.0).unwrap(), 0.0);
            assert!(phi_antiderivative(i, 1.0).unwrap().abs() < 1e-15, "i={i}");
        }
    }

    #[test]
    fn antiderivative_matches_monomial_integral() {
        for i in 0..=8 {
            let c = monomial_coeffs(i);
            for k in 0..=10 {
                let z = k as f64 / 10.0;
                let expected: f64 = c
                    .iter()
                    .enumerate()
                    .map(|(m, &cm)| cm * z.powi(m as i32 + 1) / (m + 1) as f64)
                    .sum();
                assert!((phi_antiderivative(i, z).unwrap() - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gauss_rule_examples() {
        let r1 = gauss_rule(1).unwrap();
        assert_eq!(r1.nodes(), &[0.5]);
        assert_eq!(r1.weights(), &[1.0]);
        let r2 = gauss_rule(2).unwrap();
        assert!((r2.integrate(|z| z.powi(3)) - 0.25).abs() < 1e-16);
        let r5 = gauss_rule(5).unwrap();
        assert!((r5.integrate(|z| z.powi(9)) - 0.1).abs() < 1e-14);
        assert!(matches!(gauss_rule(0), Err(Error::Usage(_))));
    }

    #[test]
    fn gauss_rule_invariants() {
        for n in 1..=30 {
            let r = gauss_rule(n).unwrap();
            assert_eq!(r.len(), n);
            assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!(r.nodes().iter().all(|&z| z > 0.0 && z < 1.0));
            assert!(r.weights().iter().all(|&w| w > 0.0));
            let sum: f64 = r.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-14, "n={n} sum={sum}");
            for k in 0..(2 * n) {
                let exact = 1.0 / (k as f64 + 1.0);
                let got = r.integrate(|z| z.powi(k as i32));
                assert!((got - exact).abs() <= 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn orthogonality() {
        let rule = gauss_rule(12).unwrap();
        for i in 0..=8 {
            for j in 0..=8 {
                let v = rule.integrate(|z| phi(i, z).unwrap() * phi(j, z).unwrap());
                let expected = if i == j { 1.0 / (2.0 * i as f64 + 1.0) } else { 0.0 };
                assert!((v - expected).abs() < 1e-12, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn swlme_tensors_are_exactly_zero() {
        let t = compute_tensors(3, Variant::Swlme);
        assert_eq!(t.order(), 3);
        assert!(t.is_zero());
        assert_eq!(t.entries().count(), 27);
    }

    #[test]
    fn swme_first_order_is_zero_by_symmetry() {
        let t = compute_tensors(1, Variant::Swme);
        assert_eq!(t.a(1, 1, 1), 0.0);
        assert_eq!(t.b(1, 1, 1), 0.0);
    }

    /// Exact integer coefficients of `φ_n` in powers of `ζ`.
    fn integer_coeffs(n: usize) -> Vec<i128> {
        monomial_coeffs(n).iter().map(|&c| c.round() as i128).collect()
    }

    fn int_poly_mul(a: &[i128], b: &[i128]) -> Vec<i128> {
        let mut out = vec![0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    /// `∫₀¹ p dζ` as an exact fraction over `lcm(1, .., deg + 1)`, rounded once.
    fn int_poly_integral_01(p: &[i128]) -> f64 {
        let lcm = (1..=p.len() as i128).fold(1i128, |l, k| {
            let (mut a, mut b) = (l, k);
            while b != 0 {
                (a, b) = (b, a % b);
            }
            l / a * k
        });
        let num: i128 = p.iter().enumerate().map(|(k, &c)| c * (lcm / (k as i128 + 1))).sum();
        num as f64 / lcm as f64
    }

    #[test]
    fn swme_tensors_match_exact_polynomial_oracle() {
        // Antiderivatives are scaled by 60 = lcm(1..5) to keep integer coefficients.
        const ANTI_SCALE: i128 = 60;
        for order in 1..=4 {
            let t = compute_tensors(order, Variant::Swme);
            for i in 1..=order {
                let pi = integer_coeffs(i);
                let dpi: Vec<i128> = pi.iter().enumerate().skip(1).map(|(k, &c)| k as i128 * c).collect();
                for j in 1..=order {
                    let pj = integer_coeffs(j);
                    let mut ipj = vec![0i128];
                    ipj.extend(pj.iter().enumerate().map(|(k, &c)| c * ANTI_SCALE / (k as i128 + 1)));
                    for k in 1..=order {
                        let pk = integer_coeffs(k);
                        let scale = 2.0 * i as f64 + 1.0;
                        let a = scale * int_poly_integral_01(&int_poly_mul(&int_poly_mul(&pi, &pj), &pk));
                        let b = scale * int_poly_integral_01(&int_poly_mul(&int_poly_mul(&dpi, &ipj), &pk))
                            / ANTI_SCALE as f64;
                        assert!((t.a(i, j, k) - a).abs() < 1e-12, "A{i}{j}{k} {} {a}", t.a(i, j, k));
                        assert!((t.b(i, j, k) - b).abs() < 1e-12, "B{i}{j}{k} {} {b}", t.b(i, j, k));
                    }
                }
            }
        }
    }

    #[test]
    fn swme_order_two_matches_high_order_quadrature() {
        let t = compute_tensors(2, Variant::Swme);
        let oracle = compute_tensors_with_nodes(2, Variant::Swme, 4 * tensor_node_count(2));
        for ((_, _, _, a, b), (_, _, _, ao, bo)) in t.entries().zip(oracle.entries()) {
            assert!((a - ao).abs() < 1e-13);
            assert!((b - bo).abs() < 1e-13);
        }
        // Known entries for the φ(0) = 1 convention.
        assert!((t.a(1, 1, 2) - 0.4).abs() < 1e-14);
        assert!((t.a(2, 1, 1) - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn a_is_symmetric_in_last_two_indices() {
        for order in 1..=5 {
            let t = compute_tensors(order, Variant::Swme);
            for i in 1..=order {
                for j in 1..=order {
                    for k in 1..=order {
                        assert_eq!(t.a(i, j, k), t.a(i, k, j));
                    }
                }
            }
        }
    }

    #[test]
    fn tensors_plateau_under_node_increase() {
        for order in 1..=6 {
            let m = tensor_node_count(order);
            let t1 = compute_tensors_with_nodes(order, Variant::Swme, m);
            let t2 = compute_tensors_with_nodes(order, Variant::Swme, m + 3);
            for ((_, _, _, a1, b1), (_, _, _, a2, b2)) in t1.entries().zip(t2.entries()) {
                assert!((a1 - a2).abs() < 1e-13);
                assert!((b1 - b2).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn variant_parses() {
        assert_eq!("SWLME".parse::<Variant>().unwrap(), Variant::Swlme);
        assert_eq!("swme".parse::<Variant>().unwrap(), Variant::Swme);
        assert!("foo".parse::<Variant>().is_err());
    }
}
