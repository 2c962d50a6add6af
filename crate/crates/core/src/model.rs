//! Duffing oscillator carrying a nonlinear tuned vibration absorber.
//!
//! The primary mass `m1` is connected to ground through a linear spring, a
//! cubic spring and a dashpot, and is driven by `F cos(ωt)`. The absorber
//! mass `m2` is attached to the primary through a linear spring, a cubic
//! spring and a dashpot acting on the relative displacement `x1 - x2`.
//!
//! Tuning rules place the two resonance peaks of the underlying linear system
//! at equal height and pick the absorber cubic stiffness that keeps them equal
//! as the response grows.

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensional parameters of the coupled two-mass system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub m1: f64,
    pub c1: f64,
    pub k1: f64,
    pub knl1: f64,
    pub m2: f64,
    pub c2: f64,
    pub k2: f64,
    pub knl2: f64,
}

/// Harmonic excitation `F cos(ωt)` applied to the primary mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    pub amplitude: f64,
    pub omega: f64,
}

impl Forcing {
    pub fn new(amplitude: f64, omega: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::Domain(format!(
                "forcing amplitude must be >= 0, got {amplitude}"
            )));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Domain(format!(
                "forcing frequency must be > 0, got {omega}"
            )));
        }
        Ok(Self { amplitude, omega })
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    pub epsilon: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub lambda: f64,
    pub alpha3: f64,
    pub beta3: f64,
    pub gamma: f64,
}

/// Position and velocity of both masses.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub x1: f64,
    pub v1: f64,
    pub x2: f64,
    pub v2: f64,
}

impl State {
    pub const ZERO: State = State {
        x1: 0.0,
        v1: 0.0,
        x2: 0.0,
        v2: 0.0,
    };

    pub fn to_array(self) -> [f64; 4] {
        [self.x1, self.v1, self.x2, self.v2]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            x1: a[0],
            v1: a[1],
            x2: a[2],
            v2: a[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Optimal absorber parameters produced by the tuning rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub k2: f64,
    pub c2: f64,
    pub knl2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessTuning {
    pub lambda: f64,
    pub mu2: f64,
    pub beta3: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn check_non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be non-negative and finite, got {v}"
        )))
    }
}

// Shared bracket 16 + 23ε + 9ε² + 2(2+ε)√(4+3ε) of the stiffness rule.
fn stiffness_bracket(eps: f64) -> f64 {
    16.0 + 23.0 * eps + 9.0 * eps * eps + 2.0 * (2.0 + eps) * (4.0 + 3.0 * eps).sqrt()
}

fn stiffness_denominator(eps: f64) -> f64 {
    64.0 + 80.0 * eps + 27.0 * eps * eps
}

fn damping_bracket(eps: f64) -> f64 {
    8.0 + 9.0 * eps - 4.0 * (4.0 + 3.0 * eps).sqrt()
}

/// Equal-peak linear absorber stiffness and damping for an undamped primary.
///
/// Returns `(k2, c2)` for an absorber of mass `epsilon * m1`.
pub fn tune_linear(m1: f64, k1: f64, epsilon: f64) -> Result<(f64, f64)> {
    check_positive("m1", m1)?;
    check_positive("k1", k1)?;
    check_positive("epsilon", epsilon)?;
    let m2 = epsilon * m1;
    let k2 = 8.0 * epsilon * k1 * stiffness_bracket(epsilon)
        / (3.0 * (1.0 + epsilon).powi(2) * stiffness_denominator(epsilon));
    let c2 = (k2 * m2 * damping_bracket(epsilon) / (4.0 * (1.0 + epsilon))).sqrt();
    Ok((k2, c2))
}

/// Absorber cubic stiffness that mirrors the primary cubic spring.
pub fn tune_nonlinear(knl1: f64, epsilon: f64) -> Result<f64> {
    check_non_negative("knl1", knl1)?;
    check_positive("epsilon", epsilon)?;
    Ok(2.0 * epsilon * epsilon * knl1 / (1.0 + 4.0 * epsilon))
}

/// Tuning rules expressed with the dimensionless groups.
pub fn tune_dimensionless(epsilon: f64, alpha3: f64) -> Result<DimensionlessTuning> {
    check_positive("epsilon", epsilon)?;
    check_non_negative("alpha3", alpha3)?;
    let lambda = 2.0 / (1.0 + epsilon)
        * (2.0 * stiffness_bracket(epsilon) / (3.0 * stiffness_denominator(epsilon))).sqrt();
    let mu2 = 0.25 * (damping_bracket(epsilon) / (1.0 + epsilon)).sqrt();
    let beta3 = 2.0 * alpha3 * epsilon / (1.0 + 4.0 * epsilon);
    Ok(DimensionlessTuning { lambda, mu2, beta3 })
}

impl SystemParams {
    /// Reference system with the absorber values rounded to four decimals.
    pub fn rounded_reference() -> Self {
        Self {
            m1: 1.0,
            c1: 0.002,
            k1: 1.0,
            knl1: 1.0,
            m2: 0.05,
            c2: 0.0128,
            k2: 0.0454,
            knl2: 0.0042,
        }
    }

    /// Primary system with an absorber tuned by the nonlinear equal-peak rule.
    pub fn nltva(m1: f64, c1: f64, k1: f64, knl1: f64, epsilon: f64) -> Result<Self> {
        let (k2, c2) = tune_linear(m1, k1, epsilon)?;
        let knl2 = tune_nonlinear(knl1, epsilon)?;
        let p = Self {
            m1,
            c1,
            k1,
            knl1,
            m2: epsilon * m1,
            c2,
            k2,
            knl2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same primary and linear absorber, without the absorber cubic spring.
    pub fn ltva(m1: f64, c1: f64, k1: f64, knl1: f64, epsilon: f64) -> Result<Self> {
        Ok(Self {
            knl2: 0.0,
            ..Self::nltva(m1, c1, k1, knl1, epsilon)?
        })
    }

    /// The reference primary oscillator with an exactly tuned NLTVA (ε = 0.05).
    pub fn reference_nltva() -> Self {
        Self::nltva(1.0, 0.002, 1.0, 1.0, 0.05).expect("reference parameters are valid")
    }

    pub fn reference_ltva() -> Self {
        Self::ltva(1.0, 0.002, 1.0, 1.0, 0.05).expect("reference parameters are valid")
    }

    /// Realization of a dimensionless parameter set with `m1 = k1 = knl1 = 1`.
    ///
    /// The cubic coefficients do not depend on the forcing amplitude here:
    /// `alpha3 = 3 F² / 4` selects the forcing amplitude, and the absorber cubic
    /// stiffness `4 ε β3 / (3 F²)` is fixed by the ratio `β3 / α3`.
    /// Returns the parameters and the forcing amplitude for `alpha3`.
    pub fn from_dimensionless(d: &DimensionlessParams) -> Result<(Self, f64)> {
        check_positive("epsilon", d.epsilon)?;
        check_positive("alpha3", d.alpha3)?;
        let amplitude = (4.0 * d.alpha3 / 3.0).sqrt();
        let p = Self {
            m1: 1.0,
            c1: 2.0 * d.mu1,
            k1: 1.0,
            knl1: 1.0,
            m2: d.epsilon,
            c2: 2.0 * d.mu2 * d.epsilon * d.lambda,
            k2: d.epsilon * d.lambda * d.lambda,
            knl2: d.epsilon * d.beta3 / d.alpha3,
        };
        p.validate()?;
        Ok((p, amplitude))
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("m1", self.m1)?;
        check_positive("m2", self.m2)?;
        check_positive("k1", self.k1)?;
        check_non_negative("c1", self.c1)?;
        check_non_negative("c2", self.c2)?;
        check_non_negative("k2", self.k2)?;
        check_non_negative("knl1", self.knl1)?;
        check_non_negative("knl2", self.knl2)?;
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.m2 / self.m1
    }

    pub fn omega_n1(&self) -> f64 {
        (self.k1 / self.m1).sqrt()
    }

    pub fn omega_n2(&self) -> f64 {
        (self.k2 / self.m2).sqrt()
    }

    /// Static deflection `F / k1`, the natural amplitude scale.
    pub fn static_deflection(&self, amplitude: f64) -> f64 {
        amplitude / self.k1
    }

    pub fn mass_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.m1, 0.0, 0.0, self.m2)
    }

    pub fn damping_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.c1 + self.c2, -self.c2, -self.c2, self.c2)
    }

    pub fn stiffness_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.k1 + self.k2, -self.k2, -self.k2, self.k2)
    }

    /// First-order state matrix of the linearized system, state `(x1, v1, x2, v2)`.
    pub fn linear_state_matrix(&self) -> Matrix4<f64> {
        let m = self.mass_matrix();
        let minv = Matrix2::new(1.0 / m[(0, 0)], 0.0, 0.0, 1.0 / m[(1, 1)]);
        let kk = minv * self.stiffness_matrix();
        let cc = minv * self.damping_matrix();
        let mut a = Matrix4::zeros();
        a[(0, 1)] = 1.0;
        a[(2, 3)] = 1.0;
        for (row, dof) in [(1usize, 0usize), (3, 1)] {
            for (col_x, col_v, j) in [(0usize, 1usize, 0usize), (2, 3, 1)] {
                a[(row, col_x)] = -kk[(dof, j)];
                a[(row, col_v)] = -cc[(dof, j)];
            }
        }
        a
    }

    /// Nonlinear restoring forces `(f1, f2)` acting on each mass.
    #[inline]
    pub fn cubic_forces(&self, x1: f64, x2: f64) -> (f64, f64) {
        let r = x1 - x2;
        let fr = self.knl2 * r * r * r;
        (self.knl1 * x1 * x1 * x1 + fr, -fr)
    }
}

/// Dimensionless groups of a parameter set under a given excitation.
pub fn to_dimensionless(params: &SystemParams, forcing: &Forcing) -> DimensionlessParams {
    let wn1 = params.omega_n1();
    let wn2 = params.omega_n2();
    let epsilon = params.epsilon();
    let f2 = forcing.amplitude * forcing.amplitude;
    let k13 = params.k1.powi(3);
    DimensionlessParams {
        epsilon,
        mu1: params.c1 / (2.0 * params.m1 * wn1),
        mu2: if wn2 > 0.0 {
            params.c2 / (2.0 * params.m2 * wn2)
        } else {
            0.0
        },
        lambda: wn2 / wn1,
        alpha3: 3.0 * params.knl1 * f2 / (4.0 * k13),
        beta3: 3.0 * params.knl2 * f2 / (4.0 * k13 * epsilon),
        gamma: forcing.omega / wn1,
    }
}

/// Time derivative of the state under the equations of motion.
#[inline]
pub fn rhs(state: &State, t: f64, params: &SystemParams, forcing: &Forcing) -> State {
    let State { x1, v1, x2, v2 } = *state;
    let (fnl1, fnl2) = params.cubic_forces(x1, x2);
    let r = x1 - x2;
    let rv = v1 - v2;
    let coupling = params.c2 * rv + params.k2 * r;
    let f1 = forcing.amplitude * (forcing.omega * t).cos()
        - params.c1 * v1
        - params.k1 * x1
        - coupling
        - fnl1;
    let f2 = coupling - fnl2;
    State {
        x1: v1,
        v1: f1 / params.m1,
        x2: v2,
        v2: f2 / params.m2,
    }
}

/// Dimensionless right-hand side in the primary/relative coordinates `(q1, q1', q2, q2')`,
/// with `q2` the normalized relative displacement.
pub fn dimensionless_rhs(q: &[f64; 4], tau: f64, d: &DimensionlessParams) -> [f64; 4] {
    let [q1, dq1, q2, dq2] = *q;
    let primary = 2.0 * d.mu1 * dq1 + q1 + 4.0 / 3.0 * d.alpha3 * q1 * q1 * q1;
    let absorber = 2.0 * d.mu2 * d.lambda * dq2
        + d.lambda * d.lambda * q2
        + 4.0 / 3.0 * d.beta3 * q2 * q2 * q2;
    let drive = (d.gamma * tau).cos();
    let ddq1 = drive - primary - d.epsilon * absorber;
    let ddq2 = drive - primary - (d.epsilon + 1.0) * absorber;
    [dq1, ddq1, dq2, ddq2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sig4(x: f64) -> f64 {
        let e = x.abs().log10().floor();
        let s = 10f64.powf(3.0 - e);
        (x * s).round() / s
    }

    #[test]
    fn tune_linear_matches_table() {
        let (k2, c2) = tune_linear(1.0, 1.0, 0.05).unwrap();
        assert_eq!(sig4(k2), 0.04535);
        // the printed table rounds to three decimals
        assert_eq!((k2 * 1e4).round() / 1e4, 0.0454);
        assert_eq!((c2 * 1e4).round() / 1e4, 0.0128);
    }

    #[test]
    fn tune_linear_scaling_and_limits() {
        let (k2a, _) = tune_linear(1.0, 1.0, 0.05).unwrap();
        let (k2b, _) = tune_linear(2.0, 3.0, 0.05).unwrap();
        assert_relative_eq!(k2b, 3.0 * k2a, max_relative = 1e-14);
        let (k2, c2) = tune_linear(1.0, 1.0, 1e-12).unwrap();
        assert!(k2 < 1e-10 && c2 < 1e-10);
        assert!(tune_linear(0.0, 1.0, 0.05).is_err());
        assert!(tune_linear(1.0, -1.0, 0.05).is_err());
        assert!(tune_linear(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn tune_nonlinear_values() {
        assert_relative_eq!(
            tune_nonlinear(1.0, 0.05).unwrap(),
            0.005 / 1.2,
            max_relative = 1e-14
        );
        assert_eq!(
            (tune_nonlinear(1.0, 0.05).unwrap() * 1e4).round() / 1e4,
            0.0042
        );
        assert_eq!(tune_nonlinear(0.0, 0.3).unwrap(), 0.0);
        assert_relative_eq!(
            tune_nonlinear(1.0, 0.25).unwrap(),
            0.0625,
            max_relative = 1e-14
        );
        assert!(tune_nonlinear(-1.0, 0.05).is_err());
    }

    #[test]
    fn tune_dimensionless_values() {
        let t = tune_dimensionless(0.05, 0.009075).unwrap();
        // direct evaluation: λ = 0.952372044..., μ2 = 0.133937726...
        assert_relative_eq!(t.lambda, 0.9523720443351102, max_relative = 1e-13);
        assert_relative_eq!(t.mu2, 0.13393772651574165, max_relative = 1e-13);
        assert_relative_eq!(t.beta3, 0.00075625, max_relative = 1e-10);
        let t0 = tune_dimensionless(0.05, 0.0).unwrap();
        assert_eq!(t0.beta3, 0.0);
        assert_eq!(t0.lambda, t.lambda);
        assert_eq!(t0.mu2, t.mu2);
        assert!(tune_dimensionless(-0.1, 0.0).is_err());
    }

    #[test]
    fn dimensional_and_dimensionless_rules_agree() {
        for eps in [0.01, 0.05, 0.25] {
            let (k2, _) = tune_linear(1.0, 1.0, eps).unwrap();
            let t = tune_dimensionless(eps, 0.0).unwrap();
            assert_relative_eq!(eps * t.lambda * t.lambda, k2, max_relative = 1e-13);
        }
    }

    #[test]
    fn to_dimensionless_reference_values() {
        let p = SystemParams::rounded_reference();
        let d = to_dimensionless(&p, &Forcing::new(0.11, 1.0).unwrap());
        assert_relative_eq!(d.alpha3, 0.009075, max_relative = 1e-12);
        assert_relative_eq!(d.mu2, 0.1343, max_relative = 5e-4);
        assert_relative_eq!(d.mu1, 0.001, max_relative = 1e-12);
        let d0 = to_dimensionless(&p, &Forcing::new(0.0, 1.0).unwrap());
        assert_eq!(d0.alpha3, 0.0);
        assert_eq!(d0.beta3, 0.0);
    }

    #[test]
    fn rhs_trivial_states() {
        let p = SystemParams::rounded_reference();
        let f = Forcing::new(0.1, 1.3).unwrap();
        let d = rhs(&State::ZERO, 0.0, &p, &f);
        assert_eq!(d.v1, 0.1);
        assert_eq!(d.v2, 0.0);
        let s = State {
            x1: 1.0,
            v1: 0.0,
            x2: 1.0,
            v2: 0.0,
        };
        let d = rhs(&s, 0.0, &p, &Forcing::new(0.0, 1.0).unwrap());
        assert_relative_eq!(d.v1, -2.0, max_relative = 1e-15);
        assert_eq!(d.v2, 0.0);
    }

    // Force balance written out term by term, independently of `rhs`.
    fn total_force(p: &SystemParams, s: &State, t: f64, f: &Forcing) -> (f64, f64) {
        let spring1 = p.k1 * s.x1 + p.knl1 * s.x1.powi(3);
        let dash1 = p.c1 * s.v1;
        let g = p.k2 * (s.x1 - s.x2) + p.knl2 * (s.x1 - s.x2).powi(3);
        let dash2 = p.c2 * (s.v1 - s.v2);
        let ext = f.amplitude * (f.omega * t).cos();
        (ext - spring1 - dash1 - g - dash2, g + dash2)
    }

    #[test]
    fn rhs_matches_force_summation() {
        let p = SystemParams::reference_nltva();
        let f = Forcing::new(0.13, 1.7).unwrap();
        let s = State {
            x1: 0.3,
            v1: -0.2,
            x2: -0.5,
            v2: 0.9,
        };
        let t = 0.77;
        let d = rhs(&s, t, &p, &f);
        let (f1, f2) = total_force(&p, &s, t, &f);
        assert_relative_eq!(d.v1, f1 / p.m1, max_relative = 1e-13);
        assert_relative_eq!(d.v2, f2 / p.m2, max_relative = 1e-13);
        assert_eq!(d.x1, s.v1);
        assert_eq!(d.x2, s.v2);
    }

    #[test]
    fn dimensionless_system_matches_transformed_dimensional_one() {
        let p = SystemParams::reference_nltva();
        let f = Forcing::new(0.11, 1.2).unwrap();
        let d = to_dimensionless(&p, &f);
        let wn1 = p.omega_n1();
        let scale = p.static_deflection(f.amplitude);
        let s = State {
            x1: 0.12,
            v1: -0.05,
            x2: -0.31,
            v2: 0.4,
        };
        let t = 2.1;
        let ds = rhs(&s, t, &p, &f);
        // q1 = x1/f, q2 = (x1 - x2)/f, τ = ωn1 t
        let q = [
            s.x1 / scale,
            s.v1 / (scale * wn1),
            (s.x1 - s.x2) / scale,
            (s.v1 - s.v2) / (scale * wn1),
        ];
        let dq = dimensionless_rhs(&q, wn1 * t, &d);
        let acc_scale = scale * wn1 * wn1;
        assert_relative_eq!(dq[1], ds.v1 / acc_scale, max_relative = 1e-12);
        assert_relative_eq!(dq[3], (ds.v1 - ds.v2) / acc_scale, max_relative = 1e-12);
    }

    #[test]
    fn dimensionless_realization_round_trips() {
        let p = SystemParams::reference_nltva();
        let f = Forcing::new(0.11, 1.0).unwrap();
        let d = to_dimensionless(&p, &f);
        let (q, amp) = SystemParams::from_dimensionless(&d).unwrap();
        let back = to_dimensionless(&q, &Forcing::new(amp, 1.0).unwrap());
        assert_relative_eq!(back.alpha3, d.alpha3, max_relative = 1e-13);
        assert_relative_eq!(back.beta3, d.beta3, max_relative = 1e-13);
        assert_relative_eq!(back.mu2, d.mu2, max_relative = 1e-13);
        assert_relative_eq!(back.lambda, d.lambda, max_relative = 1e-13);
        assert_relative_eq!(back.mu1, d.mu1, max_relative = 1e-13);
    }
}
