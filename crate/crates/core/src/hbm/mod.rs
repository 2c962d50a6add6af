//! Multi-harmonic balance for the forced two-mass system.
//!
//! A periodic response is written per degree of freedom as the real series
//! `x(t) = a0 + Σ_k (a_k cos kωt + b_k sin kωt)`, `k = 1..NH`. Coefficients are
//! stored DOF-major: `[a0, a1, b1, ..., aNH, bNH]` for `x1`, then the same for `x2`.
//!
//! Linear forces are balanced spectrally. Cubic forces go through the
//! alternating frequency/time scheme: synthesize samples, cube them pointwise,
//! project back. With `Nt >= 4 NH + 1` samples the projection of the cubic
//! term onto the retained harmonics is exact.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};
use crate::model::SystemParams;

pub mod hill;

pub use hill::{hill_data, hill_exponents, HillData};

/// Number of degrees of freedom of the coupled system.
pub const DOFS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbmConfig {
    pub harmonics: usize,
    pub samples: usize,
}

impl Default for HbmConfig {
    fn default() -> Self {
        Self {
            harmonics: 5,
            samples: 128,
        }
    }
}

impl HbmConfig {
    pub fn new(harmonics: usize, samples: usize) -> Result<Self> {
        let c = Self { harmonics, samples };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let required = 4 * self.harmonics + 1;
        if self.harmonics == 0 {
            return Err(Error::Domain("at least one harmonic is required".into()));
        }
        if self.samples < required {
            return Err(Error::Aliasing {
                samples: self.samples,
                harmonics: self.harmonics,
                required,
            });
        }
        Ok(())
    }

    /// Coefficients per degree of freedom, `2 NH + 1`.
    pub fn block(&self) -> usize {
        2 * self.harmonics + 1
    }

    pub fn unknowns(&self) -> usize {
        DOFS * self.block()
    }
}

/// Index of the cosine coefficient of harmonic `k` (k = 0 is the mean).
#[inline]
pub fn cos_index(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        2 * k - 1
    }
}

#[inline]
pub fn sin_index(k: usize) -> usize {
    2 * k
}

/// Harmonic number of a position inside one DOF block.
#[inline]
pub fn harmonic_of(j: usize) -> usize {
    (j + 1) / 2
}

/// Trigonometric tables for one `(NH, Nt)` pair.
#[derive(Debug, Clone)]
pub struct Aft {
    config: HbmConfig,
    // Nt × (2NH+1): time samples of each basis function
    synth: DMatrix<f64>,
    // (2NH+1) × Nt: Fourier projection, proj * synth = I
    proj: DMatrix<f64>,
}

impl Aft {
    pub fn new(config: HbmConfig) -> Result<Self> {
        config.validate()?;
        let nt = config.samples;
        let nb = config.block();
        let mut synth = DMatrix::zeros(nt, nb);
        let mut proj = DMatrix::zeros(nb, nt);
        for j in 0..nt {
            let theta = 2.0 * PI * j as f64 / nt as f64;
            synth[(j, 0)] = 1.0;
            proj[(0, j)] = 1.0 / nt as f64;
            for k in 1..=config.harmonics {
                let (s, c) = (k as f64 * theta).sin_cos();
                synth[(j, cos_index(k))] = c;
                synth[(j, sin_index(k))] = s;
                proj[(cos_index(k), j)] = 2.0 * c / nt as f64;
                proj[(sin_index(k), j)] = 2.0 * s / nt as f64;
            }
        }
        Ok(Self {
            config,
            synth,
            proj,
        })
    }

    pub fn config(&self) -> HbmConfig {
        self.config
    }

    /// Samples of one DOF over a period.
    pub fn to_time(&self, block: &[f64]) -> Vec<f64> {
        let nb = self.config.block();
        debug_assert_eq!(block.len(), nb);
        (0..self.config.samples)
            .map(|j| (0..nb).map(|b| self.synth[(j, b)] * block[b]).sum())
            .collect()
    }

    pub fn to_freq(&self, samples: &[f64], out: &mut [f64]) {
        let nb = self.config.block();
        for (b, o) in out.iter_mut().enumerate().take(nb) {
            *o = (0..self.config.samples)
                .map(|j| self.proj[(b, j)] * samples[j])
                .sum();
        }
    }

    /// Fourier matrix of a time-varying gain: `P diag(w) Γ`.
    fn weighted(&self, w: &[f64]) -> DMatrix<f64> {
        let nb = self.config.block();
        let mut scaled = self.synth.clone();
        for j in 0..self.config.samples {
            for b in 0..nb {
                scaled[(j, b)] *= w[j];
            }
        }
        &self.proj * scaled
    }
}

/// Harmonic balance equations of one parameter set.
#[derive(Debug, Clone)]
pub struct HbmSystem {
    params: SystemParams,
    aft: Aft,
}

/// Partial derivatives of the balance residual.
#[derive(Debug, Clone)]
pub struct HbmJacobian {
    pub coeffs: DMatrix<f64>,
    pub omega: DVector<f64>,
    pub amplitude: DVector<f64>,
}

impl HbmSystem {
    pub fn new(params: SystemParams, config: HbmConfig) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            aft: Aft::new(config)?,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn config(&self) -> HbmConfig {
        self.aft.config
    }

    pub fn aft(&self) -> &Aft {
        &self.aft
    }

    fn check_len(&self, coeffs: &DVector<f64>) {
        assert_eq!(
            coeffs.len(),
            self.config().unknowns(),
            "coefficient vector length mismatch"
        );
    }

    /// Time samples `(x1, x2)` of a coefficient vector.
    pub fn samples(&self, coeffs: &DVector<f64>) -> (Vec<f64>, Vec<f64>) {
        self.check_len(coeffs);
        let nb = self.config().block();
        (
            self.aft.to_time(&coeffs.as_slice()[..nb]),
            self.aft.to_time(&coeffs.as_slice()[nb..]),
        )
    }

    /// Linear dynamic stiffness operator and its derivative in ω.
    pub fn linear_operator(&self, omega: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let cfg = self.config();
        let nb = cfg.block();
        let n = cfg.unknowns();
        let m = self.params.mass_matrix();
        let c = self.params.damping_matrix();
        let k = self.params.stiffness_matrix();
        let mut l = DMatrix::zeros(n, n);
        let mut dl = DMatrix::zeros(n, n);
        for d in 0..DOFS {
            for e in 0..DOFS {
                let (r0, c0) = (d * nb, e * nb);
                l[(r0, c0)] = k[(d, e)];
                for h in 1..=cfg.harmonics {
                    let kw = h as f64 * omega;
                    let (ci, si) = (cos_index(h), sin_index(h));
                    let dyn_st = k[(d, e)] - kw * kw * m[(d, e)];
                    l[(r0 + ci, c0 + ci)] = dyn_st;
                    l[(r0 + si, c0 + si)] = dyn_st;
                    l[(r0 + ci, c0 + si)] = kw * c[(d, e)];
                    l[(r0 + si, c0 + ci)] = -kw * c[(d, e)];
                    let hh = h as f64;
                    dl[(r0 + ci, c0 + ci)] = -2.0 * hh * kw * m[(d, e)];
                    dl[(r0 + si, c0 + si)] = -2.0 * hh * kw * m[(d, e)];
                    dl[(r0 + ci, c0 + si)] = hh * c[(d, e)];
                    dl[(r0 + si, c0 + ci)] = -hh * c[(d, e)];
                }
            }
        }
        (l, dl)
    }

    /// Fourier coefficients of the external load per unit amplitude.
    pub fn forcing_direction(&self) -> DVector<f64> {
        let mut f = DVector::zeros(self.config().unknowns());
        f[cos_index(1)] = 1.0;
        f
    }

    /// Fourier coefficients of the cubic forces on both masses.
    pub fn nonlinear_forces(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        let nb = self.config().block();
        let (x1, x2) = self.samples(coeffs);
        let mut f1 = Vec::with_capacity(x1.len());
        let mut f2 = Vec::with_capacity(x1.len());
        for (&a, &b) in x1.iter().zip(&x2) {
            let (g1, g2) = self.params.cubic_forces(a, b);
            f1.push(g1);
            f2.push(g2);
        }
        let mut out = DVector::zeros(self.config().unknowns());
        self.aft.to_freq(&f1, &mut out.as_mut_slice()[..nb]);
        self.aft.to_freq(&f2, &mut out.as_mut_slice()[nb..]);
        out
    }

    /// Balance residual: internal forces minus the harmonic load.
    pub fn residual(&self, coeffs: &DVector<f64>, omega: f64, amplitude: f64) -> DVector<f64> {
        self.check_len(coeffs);
        let (l, _) = self.linear_operator(omega);
        let mut r = l * coeffs + self.nonlinear_forces(coeffs);
        r[cos_index(1)] -= amplitude;
        r
    }

    /// Assembles `P diag(w) Γ` blocks for a symmetric 2×2 gain sampled in time,
    /// gains given as `(g11, g12, g22)` per sample.
    pub(crate) fn gain_matrix(&self, g11: &[f64], g12: &[f64], g22: &[f64]) -> DMatrix<f64> {
        let nb = self.config().block();
        let n = self.config().unknowns();
        let b11 = self.aft.weighted(g11);
        let b12 = self.aft.weighted(g12);
        let b22 = self.aft.weighted(g22);
        let mut out = DMatrix::zeros(n, n);
        out.view_mut((0, 0), (nb, nb)).copy_from(&b11);
        out.view_mut((0, nb), (nb, nb)).copy_from(&b12);
        out.view_mut((nb, 0), (nb, nb)).copy_from(&b12);
        out.view_mut((nb, nb), (nb, nb)).copy_from(&b22);
        out
    }

    /// Tangent stiffness of the cubic springs in the Fourier basis.
    pub fn nonlinear_jacobian(&self, coeffs: &DVector<f64>) -> DMatrix<f64> {
        let (x1, x2) = self.samples(coeffs);
        let p = &self.params;
        let nt = x1.len();
        let (mut g11, mut g12, mut g22) = (vec![0.0; nt], vec![0.0; nt], vec![0.0; nt]);
        for j in 0..nt {
            let r = x1[j] - x2[j];
            let kr = 3.0 * p.knl2 * r * r;
            g11[j] = 3.0 * p.knl1 * x1[j] * x1[j] + kr;
            g12[j] = -kr;
            g22[j] = kr;
        }
        self.gain_matrix(&g11, &g12, &g22)
    }

    /// Derivative of the coefficient Jacobian applied to a fixed vector `phi`,
    /// taken with respect to the coefficients: `∂(J(c) φ)/∂c`.
    pub fn jacobian_action_derivative(
        &self,
        coeffs: &DVector<f64>,
        phi: &DVector<f64>,
    ) -> DMatrix<f64> {
        let (x1, x2) = self.samples(coeffs);
        let (p1, p2) = self.samples(phi);
        let p = &self.params;
        let nt = x1.len();
        let (mut g11, mut g12, mut g22) = (vec![0.0; nt], vec![0.0; nt], vec![0.0; nt]);
        for j in 0..nt {
            let r = x1[j] - x2[j];
            let rp = p1[j] - p2[j];
            let kr = 6.0 * p.knl2 * r * rp;
            g11[j] = 6.0 * p.knl1 * x1[j] * p1[j] + kr;
            g12[j] = -kr;
            g22[j] = kr;
        }
        self.gain_matrix(&g11, &g12, &g22)
    }

    /// Coefficient Jacobian alone (no ω or F derivatives).
    pub fn coeff_jacobian(&self, coeffs: &DVector<f64>, omega: f64) -> DMatrix<f64> {
        let (l, _) = self.linear_operator(omega);
        l + self.nonlinear_jacobian(coeffs)
    }

    pub fn jacobian(&self, coeffs: &DVector<f64>, omega: f64, _amplitude: f64) -> HbmJacobian {
        self.check_len(coeffs);
        let (l, dl) = self.linear_operator(omega);
        HbmJacobian {
            coeffs: l + self.nonlinear_jacobian(coeffs),
            omega: dl * coeffs,
            amplitude: -self.forcing_direction(),
        }
    }

    /// `Δ1` and `Δ2` of the Hill quadratic eigenproblem
    /// `(J + λ Δ1 + λ² Δ2) u = 0`, plus `∂Δ1/∂ω`.
    pub fn hill_operators(&self, omega: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let cfg = self.config();
        let nb = cfg.block();
        let n = cfg.unknowns();
        let m = self.params.mass_matrix();
        let c = self.params.damping_matrix();
        let mut d1 = DMatrix::zeros(n, n);
        let mut d2 = DMatrix::zeros(n, n);
        let mut dd1 = DMatrix::zeros(n, n);
        for d in 0..DOFS {
            for e in 0..DOFS {
                let (r0, c0) = (d * nb, e * nb);
                for j in 0..nb {
                    d1[(r0 + j, c0 + j)] = c[(d, e)];
                    d2[(r0 + j, c0 + j)] = m[(d, e)];
                }
                for h in 1..=cfg.harmonics {
                    let (ci, si) = (cos_index(h), sin_index(h));
                    let hh = h as f64;
                    d1[(r0 + ci, c0 + si)] = 2.0 * hh * omega * m[(d, e)];
                    d1[(r0 + si, c0 + ci)] = -2.0 * hh * omega * m[(d, e)];
                    dd1[(r0 + ci, c0 + si)] = 2.0 * hh * m[(d, e)];
                    dd1[(r0 + si, c0 + ci)] = -2.0 * hh * m[(d, e)];
                }
            }
        }
        (d1, d2, dd1)
    }

    /// Classical linear receptance solution (first harmonic only).
    pub fn linear_solution(&self, omega: f64, amplitude: f64) -> DVector<f64> {
        let (x1, x2) = linear_receptance(&self.params, omega);
        let nb = self.config().block();
        let mut c = DVector::zeros(self.config().unknowns());
        // x = Re(X e^{iωt}) = Re X cos - Im X sin
        c[cos_index(1)] = amplitude * x1.re;
        c[sin_index(1)] = -amplitude * x1.im;
        c[nb + cos_index(1)] = amplitude * x2.re;
        c[nb + sin_index(1)] = -amplitude * x2.im;
        c
    }
}

/// Complex receptances `(X1/F, X2/F)` of the linear two-mass system.
pub fn linear_receptance(p: &SystemParams, omega: f64) -> (Complex<f64>, Complex<f64>) {
    let iw = Complex::new(0.0, omega);
    let z = |m: f64, c: f64, k: f64| Complex::new(k - m * omega * omega, 0.0) + iw * c;
    let m = p.mass_matrix();
    let c = p.damping_matrix();
    let k = p.stiffness_matrix();
    let a = z(m[(0, 0)], c[(0, 0)], k[(0, 0)]);
    let b = z(m[(0, 1)], c[(0, 1)], k[(0, 1)]);
    let d = z(m[(1, 1)], c[(1, 1)], k[(1, 1)]);
    let det = a * d - b * b;
    (d / det, -b / det)
}

/// Peak of `|X1/F|` over a frequency window, by dense sampling and golden-section refinement.
pub fn linear_peaks(p: &SystemParams, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let n = 4000;
    let amp = |w: f64| linear_receptance(p, w).0.norm();
    let grid: Vec<f64> = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&w| amp(w)).collect();
    let mut peaks = Vec::new();
    for i in 1..n {
        if vals[i] > vals[i - 1] && vals[i] >= vals[i + 1] {
            let (mut a, mut b) = (grid[i - 1], grid[i + 1]);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..80 {
                let x1 = b - g * (b - a);
                let x2 = a + g * (b - a);
                if amp(x1) > amp(x2) {
                    b = x2;
                } else {
                    a = x1;
                }
            }
            let w = 0.5 * (a + b);
            peaks.push((w, amp(w)));
        }
    }
    peaks
}

/// A converged periodic solution and its stability.
#[derive(Debug, Clone)]
pub struct HarmonicSolution {
    pub coeffs: DVector<f64>,
    pub omega: f64,
    pub amplitude: f64,
    pub harmonics: usize,
    pub floquet: Vec<Complex<f64>>,
    pub stable: bool,
}

impl HarmonicSolution {
    pub fn new(coeffs: DVector<f64>, omega: f64, amplitude: f64, harmonics: usize) -> Self {
        Self {
            coeffs,
            omega,
            amplitude,
            harmonics,
            floquet: Vec::new(),
            stable: false,
        }
    }

    pub fn block(&self) -> usize {
        2 * self.harmonics + 1
    }

    pub fn dof(&self, d: usize) -> &[f64] {
        let nb = self.block();
        &self.coeffs.as_slice()[d * nb..(d + 1) * nb]
    }
}

/// One period of a solution sampled on `samples` equispaced instants.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl TimeSeries {
    pub fn max_abs_x1(&self) -> f64 {
        self.x1.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_x2(&self) -> f64 {
        self.x2.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Evaluates the Fourier series of a solution over one period.
pub fn synthesize(solution: &HarmonicSolution, samples: usize) -> TimeSeries {
    let period = 2.0 * PI / solution.omega;
    let eval = |block: &[f64], theta: f64| {
        let mut v = block[0];
        for k in 1..solution.harmonics + 1 {
            let (s, c) = (k as f64 * theta).sin_cos();
            v += block[cos_index(k)] * c + block[sin_index(k)] * s;
        }
        v
    };
    let mut ts = TimeSeries {
        t: Vec::new(),
        x1: Vec::new(),
        x2: Vec::new(),
    };
    for j in 0..samples {
        let theta = 2.0 * PI * j as f64 / samples as f64;
        ts.t.push(period * j as f64 / samples as f64);
        ts.x1.push(eval(solution.dof(0), theta));
        ts.x2.push(eval(solution.dof(1), theta));
    }
    ts
}

/// `max |x(θ)|` of one DOF block: best of `samples` equispaced phases, polished by Newton on `x'(θ)`.
fn block_peak(block: &[f64], harmonics: usize, samples: usize) -> f64 {
    let derivs = |theta: f64| {
        let (mut x, mut dx, mut ddx) = (block[0], 0.0, 0.0);
        for k in 1..=harmonics {
            let kf = k as f64;
            let (s, c) = (kf * theta).sin_cos();
            let (a, b) = (block[cos_index(k)], block[sin_index(k)]);
            x += a * c + b * s;
            dx += kf * (-a * s + b * c);
            ddx -= kf * kf * (a * c + b * s);
        }
        (x, dx, ddx)
    };
    let n = samples.max(4);
    let dtheta = 2.0 * PI / n as f64;
    let (mut best_theta, mut best) = (0.0, 0.0f64);
    for j in 0..n {
        let theta = dtheta * j as f64;
        let x = derivs(theta).0.abs();
        if x > best {
            best = x;
            best_theta = theta;
        }
    }
    let mut theta = best_theta;
    for _ in 0..20 {
        let (_, dx, ddx) = derivs(theta);
        if ddx == 0.0 {
            break;
        }
        let step = (dx / ddx).clamp(-dtheta, dtheta);
        theta -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    if (theta - best_theta).abs() <= dtheta {
        best = best.max(derivs(theta).0.abs());
    }
    best
}

/// Displacement amplitudes `(max |x1|, max |x2|)` used for reporting.
pub fn response_amplitudes(solution: &HarmonicSolution, samples: usize) -> (f64, f64) {
    (
        block_peak(solution.dof(0), solution.harmonics, samples),
        block_peak(solution.dof(1), solution.harmonics, samples),
    )
}

/// Reporting amplitude, `max |x1(t)|` over one period.
pub fn amplitude_x1(solution: &HarmonicSolution, samples: usize) -> f64 {
    block_peak(solution.dof(0), solution.harmonics, samples)
}

/// State `(x1, v1, x2, v2)` of a solution at time `t`.
pub fn state_at(solution: &HarmonicSolution, t: f64) -> [f64; 4] {
    let w = solution.omega;
    let mut out = [0.0; 4];
    for d in 0..DOFS {
        let block = solution.dof(d);
        let (mut x, mut v) = (block[0], 0.0);
        for k in 1..=solution.harmonics {
            let kw = k as f64 * w;
            let (s, c) = (kw * t).sin_cos();
            let (a, b) = (block[cos_index(k)], block[sin_index(k)]);
            x += a * c + b * s;
            v += kw * (-a * s + b * c);
        }
        out[2 * d] = x;
        out[2 * d + 1] = v;
    }
    out
}

pub(crate) fn diag_inverse(m: &Matrix2<f64>) -> [f64; 2] {
    [1.0 / m[(0, 0)], 1.0 / m[(1, 1)]]
}
