//! Pseudo-arclength continuation of harmonic balance solutions in frequency.
//!
//! Unknowns are scaled before continuation: coefficients are divided by the
//! static deflection `F / k1` and residuals by `F`, so the arclength and the
//! corrector tolerance do not depend on the response level. The tangent
//! orientation is carried from point to point, which makes the sign of its
//! frequency component a fold test function.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hbm::hill::{oscillatory_nearest_real, unstable_counts, STABILITY_TOLERANCE};
use crate::hbm::{amplitude_x1, response_amplitudes, HarmonicSolution, HbmConfig, HbmSystem};
use crate::model::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    pub grow: f64,
    pub shrink: f64,
    /// Steps converging within this many Newton iterations enlarge the next step.
    pub fast_iterations: usize,
    pub max_points: usize,
    /// Smallest accepted cosine between consecutive tangents.
    pub min_tangent_cosine: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            initial: 1e-2,
            min: 1e-5,
            max: 5e-2,
            grow: 1.3,
            shrink: 0.5,
            fast_iterations: 3,
            max_points: 40_000,
            min_tangent_cosine: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CorrectorConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationConfig {
    pub hbm: HbmConfig,
    pub step: StepConfig,
    pub corrector: CorrectorConfig,
    /// Compute Floquet exponents at every point.
    pub stability: bool,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            hbm: HbmConfig::default(),
            step: StepConfig::default(),
            corrector: CorrectorConfig::default(),
            stability: true,
        }
    }
}

/// Maps physical `(coefficients, ω)` to the scaled continuation vector and back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub coeff: f64,
    pub force: f64,
}

impl Scaling {
    pub fn for_forcing(params: &SystemParams, amplitude: f64) -> Self {
        Self {
            coeff: params.static_deflection(amplitude),
            force: amplitude,
        }
    }

    pub fn pack(&self, coeffs: &DVector<f64>, omega: f64) -> DVector<f64> {
        let n = coeffs.len();
        let mut z = DVector::zeros(n + 1);
        z.rows_mut(0, n).copy_from(&(coeffs / self.coeff));
        z[n] = omega;
        z
    }

    pub fn unpack(&self, z: &DVector<f64>) -> (DVector<f64>, f64) {
        let n = z.len() - 1;
        (z.rows(0, n) * self.coeff, z[n])
    }
}

/// Extra equation closing the Newton system.
#[derive(Debug, Clone, Copy)]
pub enum Constraint<'a> {
    /// Frequency held at the guess value.
    FixedOmega,
    /// `tangent · (z - predictor) = 0` in scaled variables.
    Arclength {
        predictor: &'a DVector<f64>,
        tangent: &'a DVector<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Corrected {
    pub solution: HarmonicSolution,
    pub iterations: usize,
    pub residual: f64,
}

fn scaled_residual(
    system: &HbmSystem,
    coeffs: &DVector<f64>,
    omega: f64,
    scale: &Scaling,
) -> DVector<f64> {
    system.residual(coeffs, omega, scale.force) / scale.force
}

/// Newton corrector. The forcing amplitude of `guess` is held fixed.
pub fn correct(
    system: &HbmSystem,
    guess: &HarmonicSolution,
    constraint: Constraint<'_>,
    config: &CorrectorConfig,
) -> Result<Corrected> {
    let amplitude = guess.amplitude;
    if !(amplitude > 0.0) {
        return Err(Error::Domain(
            "continuation needs a positive forcing amplitude".into(),
        ));
    }
    let scale = Scaling::for_forcing(system.params(), amplitude);
    let n = system.config().unknowns();
    let k1 = system.params().k1;
    let mut z = match constraint {
        Constraint::FixedOmega => scale.pack(&guess.coeffs, guess.omega),
        Constraint::Arclength { predictor, .. } => predictor.clone(),
    };
    let mut iterations = 0;
    loop {
        let (c, w) = scale.unpack(&z);
        let r = scaled_residual(system, &c, w, &scale);
        let extra = match constraint {
            Constraint::FixedOmega => 0.0,
            Constraint::Arclength { predictor, tangent } => tangent.dot(&(&z - predictor)),
        };
        let norm = r.amax().max(extra.abs());
        if !norm.is_finite() {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm,
            });
        }
        if norm <= config.tolerance {
            let mut solution = HarmonicSolution::new(c, w, amplitude, system.config().harmonics);
            solution.floquet.clear();
            return Ok(Corrected {
                solution,
                iterations,
                residual: norm,
            });
        }
        if iterations >= config.max_iterations || norm > 1e8 {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm,
            });
        }
        iterations += 1;
        let jac = system.jacobian(&c, w, amplitude);
        let jq = jac.coeffs / k1;
        match constraint {
            Constraint::FixedOmega => {
                let dq = jq.lu().solve(&(-&r)).ok_or(Error::Singular)?;
                for i in 0..n {
                    z[i] += dq[i];
                }
            }
            Constraint::Arclength { tangent, .. } => {
                let mut a = DMatrix::zeros(n + 1, n + 1);
                a.view_mut((0, 0), (n, n)).copy_from(&jq);
                a.view_mut((0, n), (n, 1))
                    .copy_from(&(jac.omega / scale.force));
                a.view_mut((n, 0), (1, n + 1))
                    .copy_from(&tangent.transpose());
                let mut rhs = DVector::zeros(n + 1);
                rhs.rows_mut(0, n).copy_from(&(-&r));
                rhs[n] = -extra;
                let dz = a.lu().solve(&rhs).ok_or(Error::Singular)?;
                z += dz;
            }
        }
    }
}

/// Unit tangent of the branch in scaled variables, oriented along `reference`.
pub fn tangent(
    system: &HbmSystem,
    solution: &HarmonicSolution,
    reference: &DVector<f64>,
) -> Result<DVector<f64>> {
    let scale = Scaling::for_forcing(system.params(), solution.amplitude);
    let n = system.config().unknowns();
    let jac = system.jacobian(&solution.coeffs, solution.omega, solution.amplitude);
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a.view_mut((0, 0), (n, n))
        .copy_from(&(jac.coeffs / system.params().k1));
    a.view_mut((0, n), (n, 1))
        .copy_from(&(jac.omega / scale.force));
    a.view_mut((n, 0), (1, n + 1))
        .copy_from(&reference.transpose());
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let t = a.lu().solve(&rhs).ok_or(Error::Singular)?;
    let norm = t.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::Singular);
    }
    Ok(t / norm)
}

/// Fills the Floquet exponents and stability flag of a solution.
pub fn assess_stability(system: &HbmSystem, solution: &mut HarmonicSolution) -> Result<()> {
    crate::hbm::hill_exponents(system, solution).map(|_| ())
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub solution: HarmonicSolution,
    /// Unit tangent in scaled `(coefficients, ω)` variables.
    pub tangent: DVector<f64>,
    pub amplitude_x1: f64,
    pub amplitude_x2: f64,
}

impl BranchPoint {
    pub fn omega(&self) -> f64 {
        self.solution.omega
    }

    /// Sign of this is the fold test function.
    pub fn tangent_omega(&self) -> f64 {
        self.tangent[self.tangent.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub newton_iterations: usize,
    pub min_step: f64,
    pub max_step: f64,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub params: SystemParams,
    pub hbm: HbmConfig,
    pub amplitude: f64,
    pub points: Vec<BranchPoint>,
    pub stats: StepStats,
    /// Continuation stopped before leaving the frequency window.
    pub truncated: bool,
    /// The branch returned to its first point.
    pub closed: bool,
}

impl Branch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn system(&self) -> Result<HbmSystem> {
        HbmSystem::new(self.params, self.hbm)
    }

    pub fn scaling(&self) -> Scaling {
        Scaling::for_forcing(&self.params, self.amplitude)
    }

    pub fn omega_range(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.omega()), hi.max(p.omega()))
            })
    }

    pub fn max_amplitude(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.amplitude_x1)
            .fold(0.0, f64::max)
    }

    /// Solutions of the branch interpolated at frequency `omega`, one per crossing.
    pub fn crossings(&self, omega: f64) -> Vec<(usize, DVector<f64>)> {
        let mut out = Vec::new();
        for (i, w) in self.points.windows(2).enumerate() {
            let (a, b) = (w[0].omega(), w[1].omega());
            if (a - omega) * (b - omega) <= 0.0 && a != b {
                let th = (omega - a) / (b - a);
                let c = &w[0].solution.coeffs * (1.0 - th) + &w[1].solution.coeffs * th;
                out.push((i, c));
            }
        }
        out
    }
}

fn make_point(
    system: &HbmSystem,
    mut solution: HarmonicSolution,
    tangent: DVector<f64>,
    with_stability: bool,
) -> Result<BranchPoint> {
    if with_stability {
        assess_stability(system, &mut solution)?;
    }
    let (a1, a2) = response_amplitudes(&solution, system.config().samples);
    Ok(BranchPoint {
        solution,
        tangent,
        amplitude_x1: a1,
        amplitude_x2: a2,
    })
}

/// Stopping rule for [`trace`].
#[derive(Debug, Clone, Copy)]
pub struct TraceBounds {
    pub omega_min: f64,
    pub omega_max: f64,
    /// Stop when the branch comes back to its first point.
    pub detect_closure: bool,
}

/// Traces a branch from a converged start point along `direction` (+1 / -1 in ω).
pub fn trace(
    system: &HbmSystem,
    start: HarmonicSolution,
    direction: f64,
    bounds: TraceBounds,
    config: &ContinuationConfig,
) -> Result<Branch> {
    let params = *system.params();
    let amplitude = start.amplitude;
    let scale = Scaling::for_forcing(&params, amplitude);
    let n = system.config().unknowns();
    let mut reference = DVector::zeros(n + 1);
    reference[n] = direction.signum();
    let t0 = tangent(system, &start, &reference)?;
    let first = make_point(system, start, t0, config.stability)?;
    let z_first = scale.pack(&first.solution.coeffs, first.omega());
    let mut branch = Branch {
        params,
        hbm: system.config(),
        amplitude,
        points: vec![first],
        stats: StepStats {
            min_step: f64::INFINITY,
            ..Default::default()
        },
        truncated: false,
        closed: false,
    };
    let step = config.step;
    let mut h = step.initial.clamp(step.min, step.max);
    let mut travelled = 0.0;
    loop {
        if branch.points.len() >= step.max_points {
            branch.truncated = true;
            break;
        }
        let last = branch.points.last().expect("branch is never empty");
        let z = scale.pack(&last.solution.coeffs, last.omega());
        let predictor = &z + &last.tangent * h;
        let guess = HarmonicSolution::new(
            last.solution.coeffs.clone(),
            last.omega(),
            amplitude,
            last.solution.harmonics,
        );
        let attempt = correct(
            system,
            &guess,
            Constraint::Arclength {
                predictor: &predictor,
                tangent: &last.tangent,
            },
            &config.corrector,
        )
        .and_then(|c| {
            let t = tangent(system, &c.solution, &last.tangent)?;
            Ok((c, t))
        });
        let accepted = match attempt {
            Ok((c, t))
                if t.dot(&last.tangent) >= step.min_tangent_cosine || h <= step.min * 1.0001 =>
            {
                Some((c, t))
            }
            _ => None,
        };
        let Some((c, t)) = accepted else {
            branch.stats.rejected += 1;
            h *= step.shrink;
            if h < step.min {
                branch.truncated = true;
                break;
            }
            continue;
        };
        branch.stats.accepted += 1;
        branch.stats.newton_iterations += c.iterations;
        branch.stats.min_step = branch.stats.min_step.min(h);
        branch.stats.max_step = branch.stats.max_step.max(h);
        travelled += h;
        let z_new = scale.pack(&c.solution.coeffs, c.solution.omega);
        let point = make_point(system, c.solution, t, config.stability)?;
        let omega = point.omega();
        branch.points.push(point);
        if omega < bounds.omega_min || omega > bounds.omega_max {
            break;
        }
        if bounds.detect_closure && travelled > 10.0 * step.max {
            let gap = (&z_new - &z_first).norm();
            if gap < 1.5 * h {
                // close onto the starting solution
                let mut closing = branch.points[0].clone();
                closing.tangent = branch.points[0].tangent.clone();
                branch.points.push(closing);
                branch.closed = true;
                break;
            }
        }
        if c.iterations <= step.fast_iterations {
            h = (h * step.grow).min(step.max);
        }
    }
    Ok(branch)
}

/// Periodic solutions of `branch` at exactly `omega`, with stability, one per crossing.
pub fn solutions_at(
    branch: &Branch,
    omega: f64,
    corrector: &CorrectorConfig,
) -> Result<Vec<BranchPoint>> {
    let system = branch.system()?;
    let mut out: Vec<BranchPoint> = Vec::new();
    for (_, guess) in branch.crossings(omega) {
        let sol = solve_at(&system, &guess, omega, branch.amplitude, corrector)?;
        let point = make_point(&system, sol, DVector::zeros(0), true)?;
        // crossings at a closing point repeat the same solution
        if out.iter().all(|p| {
            (p.amplitude_x1 - point.amplitude_x1).abs() > 1e-8 * point.amplitude_x1.max(1.0)
        }) {
            out.push(point);
        }
    }
    Ok(out)
}

/// Solves the balance equations at a fixed frequency from a guess.
pub fn solve_at(
    system: &HbmSystem,
    guess: &DVector<f64>,
    omega: f64,
    amplitude: f64,
    corrector: &CorrectorConfig,
) -> Result<HarmonicSolution> {
    let g = HarmonicSolution::new(guess.clone(), omega, amplitude, system.config().harmonics);
    correct(system, &g, Constraint::FixedOmega, corrector).map(|c| c.solution)
}

/// Frequency response over `omega_range` starting from the linear solution at its lower end.
pub fn continue_branch(
    params: &SystemParams,
    amplitude: f64,
    omega_range: (f64, f64),
    config: &ContinuationConfig,
) -> Result<Branch> {
    let (lo, hi) = omega_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!(
            "invalid frequency range [{lo}, {hi}]"
        )));
    }
    if !(amplitude > 0.0) {
        return Err(Error::Domain("forcing amplitude must be positive".into()));
    }
    let system = HbmSystem::new(*params, config.hbm)?;
    let guess = system.linear_solution(lo, amplitude);
    let start = solve_at(&system, &guess, lo, amplitude, &config.corrector).or_else(|_| {
        solve_at(
            &system,
            &DVector::zeros(guess.len()),
            lo,
            amplitude,
            &config.corrector,
        )
    })?;
    trace(
        &system,
        start,
        1.0,
        TraceBounds {
            omega_min: lo,
            omega_max: hi,
            detect_closure: false,
        },
        config,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BifurcationKind {
    Fold,
    NeimarkSacker,
}

impl BifurcationKind {
    pub fn name(&self) -> &'static str {
        match self {
            BifurcationKind::Fold => "fold",
            BifurcationKind::NeimarkSacker => "neimark_sacker",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BifurcationPoint {
    pub kind: BifurcationKind,
    pub solution: HarmonicSolution,
    pub test_value: f64,
    /// Indices of the branch points enclosing the detection.
    pub bracket: (usize, usize),
    /// Localization met its tolerance.
    pub precise: bool,
    pub tangent: Option<DVector<f64>>,
}

impl BifurcationPoint {
    pub fn omega(&self) -> f64 {
        self.solution.omega
    }
}

fn ns_test(p: &BranchPoint) -> Option<f64> {
    oscillatory_nearest_real(&p.solution.floquet, p.omega())
}

/// Brackets folds and Neimark-Sacker points between consecutive branch points.
pub fn detect_bifurcations(branch: &Branch) -> Vec<BifurcationPoint> {
    let tol = STABILITY_TOLERANCE * branch.params.omega_n1();
    let mut out = Vec::new();
    for (i, w) in branch.points.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        if branch.closed && i + 2 == branch.points.len() {
            // the closing segment duplicates the first point
            if (&a.solution.coeffs - &b.solution.coeffs).norm() == 0.0 {
                continue;
            }
        }
        let (ta, tb) = (a.tangent_omega(), b.tangent_omega());
        if ta * tb < 0.0 {
            out.push(BifurcationPoint {
                kind: BifurcationKind::Fold,
                solution: a.solution.clone(),
                test_value: ta,
                bracket: (i, i + 1),
                precise: false,
                tangent: Some(a.tangent.clone()),
            });
        }
        let (ra, oa) = unstable_counts(&a.solution.floquet, a.omega(), tol);
        let (rb, ob) = unstable_counts(&b.solution.floquet, b.omega(), tol);
        if ra == rb && oa.abs_diff(ob) >= 2 {
            let test_value = ns_test(a).unwrap_or(0.0);
            out.push(BifurcationPoint {
                kind: BifurcationKind::NeimarkSacker,
                solution: a.solution.clone(),
                test_value,
                bracket: (i, i + 1),
                precise: false,
                tangent: Some(a.tangent.clone()),
            });
        }
    }
    out
}

/// Tolerances for [`localize`].
#[derive(Debug, Clone, Copy)]
pub struct LocalizeConfig {
    pub test_tolerance: f64,
    pub omega_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LocalizeConfig {
    fn default() -> Self {
        Self {
            test_tolerance: 1e-8,
            omega_tolerance: 1e-6,
            max_iterations: 80,
        }
    }
}

struct Probe {
    solution: HarmonicSolution,
    tangent: DVector<f64>,
    value: f64,
}

fn probe(
    system: &HbmSystem,
    branch: &Branch,
    kind: BifurcationKind,
    bracket: (usize, usize),
    theta: f64,
    corrector: &CorrectorConfig,
) -> Result<Probe> {
    let scale = branch.scaling();
    let a = &branch.points[bracket.0];
    let b = &branch.points[bracket.1];
    let za = scale.pack(&a.solution.coeffs, a.omega());
    let zb = scale.pack(&b.solution.coeffs, b.omega());
    let secant = &zb - &za;
    let len = secant.norm();
    if len == 0.0 {
        return Err(Error::Singular);
    }
    let dir = secant / len;
    let predictor = &za * (1.0 - theta) + &zb * theta;
    let guess = HarmonicSolution::new(
        a.solution.coeffs.clone(),
        a.omega(),
        branch.amplitude,
        a.solution.harmonics,
    );
    let c = correct(
        system,
        &guess,
        Constraint::Arclength {
            predictor: &predictor,
            tangent: &dir,
        },
        corrector,
    )?;
    let mut solution = c.solution;
    let t = tangent(system, &solution, &a.tangent)?;
    let value = match kind {
        BifurcationKind::Fold => t[t.len() - 1],
        BifurcationKind::NeimarkSacker => {
            assess_stability(system, &mut solution)?;
            oscillatory_nearest_real(&solution.floquet, solution.omega).ok_or(Error::Singular)?
        }
    };
    if kind == BifurcationKind::Fold {
        assess_stability(system, &mut solution)?;
    }
    Ok(Probe {
        solution,
        tangent: t,
        value,
    })
}

/// Refines a detected bifurcation by regula falsi (Illinois) on the test function
/// along the bracketing segment.
pub fn localize(
    branch: &Branch,
    point: &BifurcationPoint,
    config: &LocalizeConfig,
) -> Result<BifurcationPoint> {
    let system = branch.system()?;
    let corrector = CorrectorConfig::default();
    let (ia, ib) = point.bracket;
    let value_at = |i: usize| -> Option<f64> {
        let p = &branch.points[i];
        match point.kind {
            BifurcationKind::Fold => Some(p.tangent_omega()),
            BifurcationKind::NeimarkSacker => ns_test(p),
        }
    };
    let (Some(mut fa), Some(mut fb)) = (value_at(ia), value_at(ib)) else {
        return Ok(BifurcationPoint {
            precise: false,
            ..point.clone()
        });
    };
    let done = |p: &BranchPoint, v: f64, bracket| BifurcationPoint {
        kind: point.kind,
        solution: p.solution.clone(),
        test_value: v,
        bracket,
        precise: true,
        tangent: Some(p.tangent.clone()),
    };
    if fa.abs() <= config.test_tolerance {
        return Ok(done(&branch.points[ia], fa, point.bracket));
    }
    if fb.abs() <= config.test_tolerance {
        return Ok(done(&branch.points[ib], fb, point.bracket));
    }
    if fa * fb > 0.0 {
        return Ok(BifurcationPoint {
            precise: false,
            ..point.clone()
        });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut w_lo, mut w_hi) = (branch.points[ia].omega(), branch.points[ib].omega());
    let mut best: Option<Probe> = None;
    let mut side = 0i32;
    for _ in 0..config.max_iterations {
        let mut theta = (lo * fb - hi * fa) / (fb - fa);
        if !(theta > lo && theta < hi) {
            theta = 0.5 * (lo + hi);
        }
        let p = match probe(
            &system,
            branch,
            point.kind,
            point.bracket,
            theta,
            &corrector,
        ) {
            Ok(p) => p,
            Err(_) => break,
        };
        let v = p.value;
        let w = p.solution.omega;
        let better = best.as_ref().map_or(true, |b| v.abs() < b.value.abs());
        let converged = v.abs() <= config.test_tolerance;
        if v * fa > 0.0 {
            lo = theta;
            fa = v;
            w_lo = w;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            hi = theta;
            fb = v;
            w_hi = w;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if better {
            best = Some(p);
        }
        if converged || ((w_hi - w_lo).abs() <= config.omega_tolerance && (hi - lo) < 1e-9) {
            break;
        }
    }
    match best {
        Some(p) => Ok(BifurcationPoint {
            kind: point.kind,
            precise: p.value.abs() <= config.test_tolerance
                || ((w_hi - w_lo).abs() <= config.omega_tolerance
                    && p.value.abs() <= 1e3 * config.test_tolerance),
            test_value: p.value,
            solution: p.solution,
            bracket: point.bracket,
            tangent: Some(p.tangent),
        }),
        None => Ok(BifurcationPoint {
            precise: false,
            ..point.clone()
        }),
    }
}

/// Detects and localizes all bifurcations of a branch.
pub fn bifurcations(branch: &Branch) -> Vec<BifurcationPoint> {
    let cfg = LocalizeConfig::default();
    detect_bifurcations(branch)
        .iter()
        .map(|b| localize(branch, b, &cfg).unwrap_or_else(|_| b.clone()))
        .collect()
}

/// How to look for a detached resonance curve.
#[derive(Debug, Clone)]
pub struct DrcSearch {
    /// Frequencies scanned with high-amplitude initial guesses.
    pub omega_window: (f64, f64),
    pub scan_frequencies: usize,
    /// Primary displacement amplitudes tried as single-harmonic guesses.
    pub guess_amplitudes: Vec<f64>,
    /// Known points on the curve, e.g. from fold tracking: `(ω, coefficients)`.
    pub seeds: Vec<(f64, DVector<f64>)>,
    /// Hard limits for tracing a candidate curve.
    pub trace_window: (f64, f64),
    pub config: ContinuationConfig,
}

impl DrcSearch {
    pub fn new(omega_window: (f64, f64)) -> Self {
        Self {
            omega_window,
            scan_frequencies: 9,
            guess_amplitudes: vec![0.3, 0.5, 0.7, 0.9, 1.1, 1.4, 1.8, 2.4],
            seeds: Vec::new(),
            trace_window: (0.2, 6.0),
            config: ContinuationConfig::default(),
        }
    }
}

fn on_branch(branch: &Branch, omega: f64, coeffs: &DVector<f64>, tol: f64) -> bool {
    branch
        .crossings(omega)
        .iter()
        .any(|(_, c)| (c - coeffs).norm() <= tol * c.norm().max(coeffs.norm()).max(1e-12))
}

/// Single-harmonic guess with the absorber following the linear relative-motion response.
fn high_amplitude_guess(system: &HbmSystem, omega: f64, a1: f64, phase: f64) -> DVector<f64> {
    let p = system.params();
    let nb = system.config().block();
    let iw = nalgebra::Complex::new(0.0, omega);
    let num = nalgebra::Complex::new(p.k2, 0.0) + iw * p.c2;
    let den = nalgebra::Complex::new(p.k2 - p.m2 * omega * omega, 0.0) + iw * p.c2;
    let ratio = num / den;
    let x1 = nalgebra::Complex::from_polar(a1, phase);
    let x2 = x1 * ratio;
    let mut c = DVector::zeros(system.config().unknowns());
    c[1] = x1.re;
    c[2] = -x1.im;
    c[nb + 1] = x2.re;
    c[nb + 2] = -x2.im;
    c
}

/// Looks for a closed branch of periodic solutions not connected to `main`.
pub fn find_drc(
    params: &SystemParams,
    amplitude: f64,
    main: &Branch,
    search: &DrcSearch,
) -> Result<Option<Branch>> {
    let system = HbmSystem::new(*params, search.config.hbm)?;
    let corrector = search.config.corrector;
    let mut candidates: Vec<HarmonicSolution> = Vec::new();
    for (w, c) in &search.seeds {
        if let Ok(s) = solve_at(&system, c, *w, amplitude, &corrector) {
            candidates.push(s);
        }
    }
    let (lo, hi) = search.omega_window;
    let nscan = search.scan_frequencies.max(1);
    let mut scanned = false;
    let try_trace = |start: HarmonicSolution| -> Result<Option<Branch>> {
        if on_branch(main, start.omega, &start.coeffs, 1e-4) {
            return Ok(None);
        }
        let bounds = TraceBounds {
            omega_min: search.trace_window.0,
            omega_max: search.trace_window.1,
            detect_closure: true,
        };
        let b = trace(&system, start, 1.0, bounds, &search.config)?;
        if b.closed {
            Ok(Some(b))
        } else {
            Ok(None)
        }
    };
    for s in candidates.drain(..) {
        if let Some(b) = try_trace(s)? {
            return Ok(Some(b));
        }
    }
    while !scanned {
        scanned = true;
        for i in 0..nscan {
            let w = if nscan == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (nscan - 1) as f64
            };
            let mut found: Vec<DVector<f64>> = Vec::new();
            for &a in &search.guess_amplitudes {
                for phase in [
                    0.0,
                    -0.5 * std::f64::consts::PI,
                    -std::f64::consts::PI,
                    0.5 * std::f64::consts::PI,
                ] {
                    let g = high_amplitude_guess(&system, w, a, phase);
                    let Ok(s) = solve_at(&system, &g, w, amplitude, &corrector) else {
                        continue;
                    };
                    if found
                        .iter()
                        .any(|c| (c - &s.coeffs).norm() < 1e-6 * s.coeffs.norm().max(1e-12))
                    {
                        continue;
                    }
                    found.push(s.coeffs.clone());
                    if let Some(b) = try_trace(s)? {
                        return Ok(Some(b));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Reporting amplitude of a solution using the configured sample count.
pub fn solution_amplitude(system: &HbmSystem, solution: &HarmonicSolution) -> f64 {
    amplitude_x1(solution, system.config().samples)
}
