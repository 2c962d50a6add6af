//! Floquet exponents from the harmonic balance Jacobian (Hill's method).
//!
//! A perturbation `e^{λt} u(t)` with `u` periodic turns the linearized
//! equations into the quadratic eigenproblem `(J + λ Δ1 + λ² Δ2) u = 0` on
//! the Fourier coefficients of `u`. It is solved in first-order form. Each
//! exponent appears with truncated copies shifted by `i k ω`; the `2n` kept
//! are those whose eigenvectors are most centred on harmonic zero, measured by
//! the energy-weighted mean of the complex harmonic index.

use nalgebra::linalg::Schur;
use nalgebra::{Complex, DMatrix, DVector};

use super::{diag_inverse, HarmonicSolution, HbmSystem, DOFS};
use crate::error::{Error, Result};

/// Relative tolerance on the real part of an exponent below which it counts as stable.
pub const STABILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct HillData {
    /// First-order Hill matrix, `2N × 2N` with `N` the number of coefficients.
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    /// Energy-weighted mean harmonic index of each eigenvector.
    pub centroid: Vec<f64>,
    /// The `2n` retained exponents, sorted by imaginary part.
    pub filtered: Vec<Complex<f64>>,
    /// Coefficient part of the eigenvector of each retained exponent, unit norm.
    pub filtered_vectors: Vec<DVector<Complex<f64>>>,
}

impl HillData {
    pub fn max_real(&self) -> f64 {
        self.filtered
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `[[0, I], [-Δ2⁻¹ J, -Δ2⁻¹ Δ1]]` for the coefficient Jacobian `jac`.
pub fn hill_matrix(system: &HbmSystem, jac: &DMatrix<f64>, omega: f64) -> DMatrix<f64> {
    let n = system.config().unknowns();
    let nb = system.config().block();
    let (d1, _, _) = system.hill_operators(omega);
    let minv = diag_inverse(&system.params().mass_matrix());
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(i, n + i)] = 1.0;
    }
    for row in 0..n {
        let s = minv[row / nb];
        for col in 0..n {
            a[(n + row, col)] = -s * jac[(row, col)];
            a[(n + row, n + col)] = -s * d1[(row, col)];
        }
    }
    a
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Eigenvectors of an upper triangular matrix by back substitution.
fn triangular_eigenvector(
    t: &DMatrix<Complex<f64>>,
    i: usize,
    scale: f64,
) -> DVector<Complex<f64>> {
    let n = t.nrows();
    let lambda = t[(i, i)];
    let mut y = DVector::from_element(n, Complex::new(0.0, 0.0));
    y[i] = Complex::new(1.0, 0.0);
    let floor = 1e-14 * scale.max(1e-300);
    for j in (0..i).rev() {
        let mut s = Complex::new(0.0, 0.0);
        for l in j + 1..=i {
            s += t[(j, l)] * y[l];
        }
        let mut den = t[(j, j)] - lambda;
        if den.norm() < floor {
            den = Complex::new(floor, 0.0);
        }
        y[j] = -s / den;
    }
    let norm = y.norm();
    if norm > 0.0 && norm.is_finite() {
        y /= Complex::new(norm, 0.0);
    }
    y
}

/// Mean of `k` over the complex harmonics `U_k e^{ikωt}` of `v`, weighted by `|U_k|²`.
fn harmonic_centroid(v: &DVector<Complex<f64>>, nb: usize) -> f64 {
    let half = Complex::new(0.5, 0.0);
    let i = Complex::new(0.0, 1.0);
    let mut weight = 0.0;
    let mut moment = 0.0;
    for d in 0..DOFS {
        let base = d * nb;
        weight += v[base].norm_sqr();
        for k in 1..=(nb - 1) / 2 {
            let (a, b) = (v[base + 2 * k - 1], v[base + 2 * k]);
            let plus = ((a - i * b) * half).norm_sqr();
            let minus = ((a + i * b) * half).norm_sqr();
            weight += plus + minus;
            moment += k as f64 * (plus - minus);
        }
    }
    if weight > 0.0 {
        moment / weight
    } else {
        0.0
    }
}

/// Eigen-analysis of the Hill matrix for a coefficient vector at frequency `omega`.
pub fn hill_data(system: &HbmSystem, coeffs: &DVector<f64>, omega: f64) -> Result<HillData> {
    let jac = system.coeff_jacobian(coeffs, omega);
    let matrix = hill_matrix(system, &jac, omega);
    let n = system.config().unknowns();
    let nb = system.config().block();
    let complex = matrix.map(|v| Complex::new(v, 0.0));
    let schur = Schur::try_new(complex, 1e-15, 10_000).ok_or_else(|| Error::Eigen {
        condition: condition_estimate(&matrix),
    })?;
    let (q, t) = schur.unpack();
    let scale = matrix.amax();
    let mut eigenvalues = Vec::with_capacity(2 * n);
    let mut centroid = Vec::with_capacity(2 * n);
    let mut vectors = Vec::with_capacity(2 * n);
    for i in 0..2 * n {
        let y = triangular_eigenvector(&t, i, scale);
        let v = (&q * y).rows(0, n).into_owned();
        let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        eigenvalues.push(t[(i, i)]);
        centroid.push(harmonic_centroid(&v, nb));
        vectors.push(if total > 0.0 {
            v / Complex::new(total.sqrt(), 0.0)
        } else {
            v
        });
    }
    if eigenvalues
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::Eigen {
            condition: condition_estimate(&matrix),
        });
    }
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| {
        centroid[a]
            .abs()
            .total_cmp(&centroid[b].abs())
            .then(eigenvalues[a].im.abs().total_cmp(&eigenvalues[b].im.abs()))
    });
    let mut keep: Vec<usize> = order[..2 * DOFS].to_vec();
    keep.sort_by(|&a, &b| {
        let (za, zb) = (eigenvalues[a], eigenvalues[b]);
        za.im.total_cmp(&zb.im).then(za.re.total_cmp(&zb.re))
    });
    let filtered = keep.iter().map(|&i| eigenvalues[i]).collect();
    let filtered_vectors = keep.iter().map(|&i| vectors[i].clone()).collect();
    Ok(HillData {
        matrix,
        eigenvalues,
        centroid,
        filtered,
        filtered_vectors,
    })
}

/// Computes the filtered Floquet exponents of a solution and stores them with its stability flag.
pub fn hill_exponents(
    system: &HbmSystem,
    solution: &mut HarmonicSolution,
) -> Result<Vec<Complex<f64>>> {
    let data = hill_data(system, &solution.coeffs, solution.omega)?;
    let tol = STABILITY_TOLERANCE * system.params().omega_n1();
    solution.stable = data.filtered.iter().all(|z| z.re <= tol);
    solution.floquet = data.filtered.clone();
    Ok(data.filtered)
}

/// Real parts of the exponents with nonzero imaginary part, grouped in conjugate pairs.
/// Returns the largest real part among oscillatory pairs, if any.
pub fn oscillatory_max_real(floquet: &[Complex<f64>], omega: f64) -> Option<f64> {
    let thresh = 1e-6 * omega.max(1.0);
    floquet
        .iter()
        .filter(|z| z.im.abs() > thresh)
        .map(|z| z.re)
        .reduce(f64::max)
}

/// Real part of the oscillatory exponent closest to the imaginary axis.
pub fn oscillatory_nearest_real(floquet: &[Complex<f64>], omega: f64) -> Option<f64> {
    let thresh = 1e-6 * omega.max(1.0);
    floquet
        .iter()
        .filter(|z| z.im.abs() > thresh)
        .map(|z| z.re)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
}

/// Number of exponents with positive real part, split into (real, oscillatory).
pub fn unstable_counts(floquet: &[Complex<f64>], omega: f64, tol: f64) -> (usize, usize) {
    let thresh = 1e-6 * omega.max(1.0);
    let mut real = 0;
    let mut osc = 0;
    for z in floquet.iter().filter(|z| z.re > tol) {
        if z.im.abs() > thresh {
            osc += 1;
        } else {
            real += 1;
        }
    }
    (real, osc)
}
