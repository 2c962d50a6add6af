//! Two-parameter continuation of fold and Neimark-Sacker points in `(ω, F)`.
//!
//! Both loci are followed as solutions of a bordered system: the balance
//! equations plus a null-vector condition on the coefficient Jacobian (fold) or
//! a purely imaginary Hill exponent `iκ` with its complex eigenvector (NS).
//! Unknowns are scaled like in [`crate::continuation`], with the forcing
//! carried as `f = F / F_ref`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::continuation::{BifurcationKind, BifurcationPoint, CorrectorConfig, StepConfig};
use crate::error::{Error, Result};
use crate::hbm::{amplitude_x1, hill_data, HarmonicSolution, HbmConfig, HbmSystem};
use crate::model::SystemParams;

/// Continuation direction in forcing amplitude from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackConfig {
    pub hbm: HbmConfig,
    pub step: StepConfig,
    pub corrector: CorrectorConfig,
    pub forcing_range: (f64, f64),
    pub omega_range: (f64, f64),
    pub direction: Direction,
    /// NS tracking stops once the crossing frequency falls below this.
    pub kappa_min: f64,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            hbm: HbmConfig::default(),
            step: StepConfig {
                max_points: 20_000,
                ..StepConfig::default()
            },
            corrector: CorrectorConfig::default(),
            forcing_range: (0.01, 0.3),
            omega_range: (0.3, 4.0),
            direction: Direction::Both,
            kappa_min: 1e-3,
        }
    }
}

/// Fold branch labels: first resonance peak (A) or second peak and DRC (B).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchLabel {
    A,
    B,
}

#[derive(Debug, Clone)]
pub struct TrackedPoint {
    pub solution: HarmonicSolution,
    pub forcing: f64,
    pub amplitude_x1: f64,
    /// Fold: unit null vector of the coefficient Jacobian. NS: `[v_r; v_i]`.
    pub eigen: DVector<f64>,
    /// Crossing frequency of the NS pair.
    pub kappa: Option<f64>,
    /// Unit tangent in the extended unknowns.
    pub tangent: DVector<f64>,
}

impl TrackedPoint {
    pub fn omega(&self) -> f64 {
        self.solution.omega
    }

    /// `dF/ds` up to the positive factor `F_ref`.
    pub fn forcing_slope(&self) -> f64 {
        self.tangent[self.tangent.len() - 1]
    }
}

#[derive(Debug, Clone)]
pub struct BifurcationBranch {
    pub kind: BifurcationKind,
    pub label: Option<BranchLabel>,
    pub params: SystemParams,
    pub hbm: HbmConfig,
    pub reference_forcing: f64,
    pub points: Vec<TrackedPoint>,
    /// Stopped at minimum step or point budget.
    pub truncated: bool,
    /// NS branch stopped because `κ` approached zero.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurningKind {
    Minimum,
    Maximum,
}

/// Extremum of the forcing amplitude along a bifurcation branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoint {
    pub kind: TurningKind,
    /// Index of the branch point preceding the extremum.
    pub index: usize,
    pub forcing: f64,
    pub omega: f64,
    pub amplitude_x1: f64,
}

impl BifurcationBranch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn forcing_range(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.forcing), hi.max(p.forcing))
            })
    }

    /// Sign changes of `dF/ds`, refined on the branch.
    pub fn turning_points(&self) -> Vec<TurningPoint> {
        let mut out = Vec::new();
        for i in 0..self.points.len().saturating_sub(1) {
            let (a, b) = (
                self.points[i].forcing_slope(),
                self.points[i + 1].forcing_slope(),
            );
            if a * b < 0.0 {
                let kind = if a > 0.0 {
                    TurningKind::Maximum
                } else {
                    TurningKind::Minimum
                };
                let tp = self
                    .refine_turning(i, kind)
                    .unwrap_or_else(|_| quadratic_turning(&self.points, i, kind));
                out.push(tp);
            }
        }
        out
    }

    fn extended(&self, reference: &TrackedPoint) -> Result<Box<dyn Extended + '_>> {
        let system = HbmSystem::new(self.params, self.hbm)?;
        Ok(match self.kind {
            BifurcationKind::Fold => Box::new(FoldSystem::new(system, self.reference_forcing)),
            BifurcationKind::NeimarkSacker => {
                let n = self.hbm.unknowns();
                let w = reference.eigen.clone();
                Box::new(NsSystem::new(
                    system,
                    self.reference_forcing,
                    w.rows(0, n).into_owned(),
                    w.rows(n, n).into_owned(),
                ))
            }
        })
    }

    fn refine_turning(&self, i: usize, kind: TurningKind) -> Result<TurningPoint> {
        let a = &self.points[i];
        let b = &self.points[i + 1];
        let sys = self.extended(a)?;
        let ya = sys.pack(a);
        let yb = sys.pack(b);
        let secant = &yb - &ya;
        let len = secant.norm();
        if len == 0.0 {
            return Err(Error::Singular);
        }
        let dir = secant / len;
        let corrector = CorrectorConfig::default();
        let probe = |theta: f64| -> Result<(DVector<f64>, f64)> {
            let pred = &ya * (1.0 - theta) + &yb * theta;
            let target = dir.dot(&pred);
            let (y, _) = newton(sys.as_ref(), pred, &dir, target, &corrector)?;
            let t = null_tangent(sys.as_ref(), &y, &a.tangent)?;
            Ok((y, t[t.len() - 1]))
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let (mut fa, mut fb) = (a.forcing_slope(), b.forcing_slope());
        let mut best: Option<(DVector<f64>, f64)> = None;
        let mut side = 0;
        for _ in 0..60 {
            let mut theta = (lo * fb - hi * fa) / (fb - fa);
            if !(theta > lo && theta < hi) {
                theta = 0.5 * (lo + hi);
            }
            let (y, v) = probe(theta)?;
            let better = best.as_ref().map_or(true, |(_, bv)| v.abs() < bv.abs());
            if v * fa > 0.0 {
                lo = theta;
                fa = v;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                hi = theta;
                fb = v;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
            if better {
                best = Some((y, v));
            }
            if v.abs() < 1e-10 || hi - lo < 1e-12 {
                break;
            }
        }
        let (y, _) = best.ok_or(Error::Singular)?;
        let p = sys.unpack(&y, DVector::zeros(0));
        Ok(TurningPoint {
            kind,
            index: i,
            forcing: p.forcing,
            omega: p.omega(),
            amplitude_x1: p.amplitude_x1,
        })
    }
}

/// Vertex of the parabola through three consecutive points around a sign change of `dF/ds`.
fn quadratic_turning(points: &[TrackedPoint], i: usize, kind: TurningKind) -> TurningPoint {
    let j = if i == 0 {
        0
    } else {
        (i - 1).min(points.len().saturating_sub(3))
    };
    let idx = [j, j + 1, j + 2];
    let mut s = [0.0; 3];
    for k in 1..3 {
        let (p, q) = (&points[idx[k - 1]], &points[idx[k]]);
        s[k] =
            s[k - 1] + ((q.forcing - p.forcing).powi(2) + (q.omega() - p.omega()).powi(2)).sqrt();
    }
    let fit = |v: [f64; 3]| quadratic_coefficients(s, v);
    let f = fit([
        points[idx[0]].forcing,
        points[idx[1]].forcing,
        points[idx[2]].forcing,
    ]);
    let sv = if f.2 != 0.0 { -f.1 / (2.0 * f.2) } else { s[1] };
    let sv = sv.clamp(s[0], s[2]);
    let eval = |c: (f64, f64, f64)| c.0 + c.1 * sv + c.2 * sv * sv;
    let w = fit([
        points[idx[0]].omega(),
        points[idx[1]].omega(),
        points[idx[2]].omega(),
    ]);
    let a = fit([
        points[idx[0]].amplitude_x1,
        points[idx[1]].amplitude_x1,
        points[idx[2]].amplitude_x1,
    ]);
    TurningPoint {
        kind,
        index: i,
        forcing: eval(f),
        omega: eval(w),
        amplitude_x1: eval(a),
    }
}

/// `(c0, c1, c2)` of the parabola through `(s_k, v_k)`.
pub fn quadratic_coefficients(s: [f64; 3], v: [f64; 3]) -> (f64, f64, f64) {
    let d01 = (v[1] - v[0]) / (s[1] - s[0]);
    let d12 = (v[2] - v[1]) / (s[2] - s[1]);
    let c2 = (d12 - d01) / (s[2] - s[0]);
    let c1 = d01 - c2 * (s[0] + s[1]);
    let c0 = v[0] - c1 * s[0] - c2 * s[0] * s[0];
    (c0, c1, c2)
}

/// Extended system `G(y) = 0` with one fewer equation than unknowns.
trait Extended {
    fn dim(&self) -> usize;
    fn evaluate(&self, y: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>);
    /// Called after a point is accepted.
    fn accept(&mut self, _y: &DVector<f64>) {}
    fn pack(&self, p: &TrackedPoint) -> DVector<f64>;
    fn unpack(&self, y: &DVector<f64>, tangent: DVector<f64>) -> TrackedPoint;
    fn kappa(&self, _y: &DVector<f64>) -> Option<f64> {
        None
    }
}

struct FoldSystem {
    system: HbmSystem,
    f_ref: f64,
    n: usize,
}

impl FoldSystem {
    fn new(system: HbmSystem, f_ref: f64) -> Self {
        let n = system.config().unknowns();
        Self { system, f_ref, n }
    }

    fn scale(&self) -> f64 {
        self.f_ref / self.system.params().k1
    }
}

impl Extended for FoldSystem {
    fn dim(&self) -> usize {
        2 * self.n + 2
    }

    fn evaluate(&self, y: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let k1 = self.system.params().k1;
        let s = self.scale();
        let c = y.rows(0, n) * s;
        let phi = y.rows(n, n).into_owned();
        let (w, f) = (y[2 * n], y[2 * n + 1]);
        let (l, dl) = self.system.linear_operator(w);
        let jac = l + self.system.nonlinear_jacobian(&c);
        let mut g = DVector::zeros(2 * n + 1);
        g.rows_mut(0, n)
            .copy_from(&(self.system.residual(&c, w, f * self.f_ref) / self.f_ref));
        g.rows_mut(n, n).copy_from(&(&jac * &phi / k1));
        g[2 * n] = 0.5 * (phi.dot(&phi) - 1.0);
        let mut m = DMatrix::zeros(2 * n + 1, 2 * n + 2);
        m.view_mut((0, 0), (n, n)).copy_from(&(&jac / k1));
        m.view_mut((0, 2 * n), (n, 1))
            .copy_from(&(&dl * &c / self.f_ref));
        m.view_mut((0, 2 * n + 1), (n, 1))
            .copy_from(&(-self.system.forcing_direction()));
        m.view_mut((n, 0), (n, n))
            .copy_from(&(self.system.jacobian_action_derivative(&c, &phi) * (s / k1)));
        m.view_mut((n, n), (n, n)).copy_from(&(&jac / k1));
        m.view_mut((n, 2 * n), (n, 1)).copy_from(&(&dl * &phi / k1));
        m.view_mut((2 * n, n), (1, n)).copy_from(&phi.transpose());
        (g, m)
    }

    fn pack(&self, p: &TrackedPoint) -> DVector<f64> {
        let n = self.n;
        let mut y = DVector::zeros(2 * n + 2);
        y.rows_mut(0, n)
            .copy_from(&(&p.solution.coeffs / self.scale()));
        y.rows_mut(n, n).copy_from(&p.eigen);
        y[2 * n] = p.omega();
        y[2 * n + 1] = p.forcing / self.f_ref;
        y
    }

    fn unpack(&self, y: &DVector<f64>, tangent: DVector<f64>) -> TrackedPoint {
        let n = self.n;
        let forcing = y[2 * n + 1] * self.f_ref;
        let solution = HarmonicSolution::new(
            y.rows(0, n) * self.scale(),
            y[2 * n],
            forcing,
            self.system.config().harmonics,
        );
        let amplitude = amplitude_x1(&solution, self.system.config().samples);
        TrackedPoint {
            solution,
            forcing,
            amplitude_x1: amplitude,
            eigen: y.rows(n, n).into_owned(),
            kappa: None,
            tangent,
        }
    }
}

struct NsSystem {
    system: HbmSystem,
    f_ref: f64,
    n: usize,
    wr: DVector<f64>,
    wi: DVector<f64>,
}

impl NsSystem {
    fn new(system: HbmSystem, f_ref: f64, wr: DVector<f64>, wi: DVector<f64>) -> Self {
        let n = system.config().unknowns();
        Self {
            system,
            f_ref,
            n,
            wr,
            wi,
        }
    }

    fn scale(&self) -> f64 {
        self.f_ref / self.system.params().k1
    }
}

impl Extended for NsSystem {
    fn dim(&self) -> usize {
        3 * self.n + 3
    }

    fn evaluate(&self, y: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let k1 = self.system.params().k1;
        let s = self.scale();
        let c = y.rows(0, n) * s;
        let vr = y.rows(n, n).into_owned();
        let vi = y.rows(2 * n, n).into_owned();
        let (kappa, w, f) = (y[3 * n], y[3 * n + 1], y[3 * n + 2]);
        let (l, dl) = self.system.linear_operator(w);
        let jac = l + self.system.nonlinear_jacobian(&c);
        let (d1, d2, dd1) = self.system.hill_operators(w);
        let a = &jac - &d2 * (kappa * kappa);
        let mut g = DVector::zeros(3 * n + 2);
        g.rows_mut(0, n)
            .copy_from(&(self.system.residual(&c, w, f * self.f_ref) / self.f_ref));
        g.rows_mut(n, n)
            .copy_from(&((&a * &vr - &d1 * &vi * kappa) / k1));
        g.rows_mut(2 * n, n)
            .copy_from(&((&a * &vi + &d1 * &vr * kappa) / k1));
        g[3 * n] = 0.5 * (vr.dot(&vr) + vi.dot(&vi) - 1.0);
        g[3 * n + 1] = self.wr.dot(&vi) - self.wi.dot(&vr);

        let mut m = DMatrix::zeros(3 * n + 2, 3 * n + 3);
        m.view_mut((0, 0), (n, n)).copy_from(&(&jac / k1));
        m.view_mut((0, 3 * n + 1), (n, 1))
            .copy_from(&(&dl * &c / self.f_ref));
        m.view_mut((0, 3 * n + 2), (n, 1))
            .copy_from(&(-self.system.forcing_direction()));

        m.view_mut((n, 0), (n, n))
            .copy_from(&(self.system.jacobian_action_derivative(&c, &vr) * (s / k1)));
        m.view_mut((n, n), (n, n)).copy_from(&(&a / k1));
        m.view_mut((n, 2 * n), (n, n))
            .copy_from(&(&d1 * (-kappa / k1)));
        m.view_mut((n, 3 * n), (n, 1))
            .copy_from(&((&d2 * &vr * (-2.0 * kappa) - &d1 * &vi) / k1));
        m.view_mut((n, 3 * n + 1), (n, 1))
            .copy_from(&((&dl * &vr - &dd1 * &vi * kappa) / k1));

        m.view_mut((2 * n, 0), (n, n))
            .copy_from(&(self.system.jacobian_action_derivative(&c, &vi) * (s / k1)));
        m.view_mut((2 * n, n), (n, n))
            .copy_from(&(&d1 * (kappa / k1)));
        m.view_mut((2 * n, 2 * n), (n, n)).copy_from(&(&a / k1));
        m.view_mut((2 * n, 3 * n), (n, 1))
            .copy_from(&((&d2 * &vi * (-2.0 * kappa) + &d1 * &vr) / k1));
        m.view_mut((2 * n, 3 * n + 1), (n, 1))
            .copy_from(&((&dl * &vi + &dd1 * &vr * kappa) / k1));

        m.view_mut((3 * n, n), (1, n)).copy_from(&vr.transpose());
        m.view_mut((3 * n, 2 * n), (1, n))
            .copy_from(&vi.transpose());
        m.view_mut((3 * n + 1, n), (1, n))
            .copy_from(&(-self.wi.transpose()));
        m.view_mut((3 * n + 1, 2 * n), (1, n))
            .copy_from(&self.wr.transpose());
        (g, m)
    }

    fn accept(&mut self, y: &DVector<f64>) {
        let n = self.n;
        self.wr = y.rows(n, n).into_owned();
        self.wi = y.rows(2 * n, n).into_owned();
    }

    fn pack(&self, p: &TrackedPoint) -> DVector<f64> {
        let n = self.n;
        let mut y = DVector::zeros(3 * n + 3);
        y.rows_mut(0, n)
            .copy_from(&(&p.solution.coeffs / self.scale()));
        y.rows_mut(n, 2 * n).copy_from(&p.eigen);
        y[3 * n] = p.kappa.unwrap_or(0.0);
        y[3 * n + 1] = p.omega();
        y[3 * n + 2] = p.forcing / self.f_ref;
        y
    }

    fn unpack(&self, y: &DVector<f64>, tangent: DVector<f64>) -> TrackedPoint {
        let n = self.n;
        let forcing = y[3 * n + 2] * self.f_ref;
        let solution = HarmonicSolution::new(
            y.rows(0, n) * self.scale(),
            y[3 * n + 1],
            forcing,
            self.system.config().harmonics,
        );
        let amplitude = amplitude_x1(&solution, self.system.config().samples);
        TrackedPoint {
            solution,
            forcing,
            amplitude_x1: amplitude,
            eigen: y.rows(n, 2 * n).into_owned(),
            kappa: Some(y[3 * n]),
            tangent,
        }
    }

    fn kappa(&self, y: &DVector<f64>) -> Option<f64> {
        Some(y[3 * self.n])
    }
}

/// Newton on `G(y) = 0`, `border · y = target`.
fn newton(
    sys: &dyn Extended,
    mut y: DVector<f64>,
    border: &DVector<f64>,
    target: f64,
    config: &CorrectorConfig,
) -> Result<(DVector<f64>, usize)> {
    let d = sys.dim();
    let mut iterations = 0;
    loop {
        let (g, m) = sys.evaluate(&y);
        let extra = border.dot(&y) - target;
        let norm = g.amax().max(extra.abs());
        if !norm.is_finite() || norm > 1e8 {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm,
            });
        }
        if norm <= config.tolerance {
            return Ok((y, iterations));
        }
        if iterations >= config.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm,
            });
        }
        iterations += 1;
        let mut a = DMatrix::zeros(d, d);
        a.view_mut((0, 0), (d - 1, d)).copy_from(&m);
        a.view_mut((d - 1, 0), (1, d))
            .copy_from(&border.transpose());
        let mut rhs = DVector::zeros(d);
        rhs.rows_mut(0, d - 1).copy_from(&(-&g));
        rhs[d - 1] = -extra;
        y += a.lu().solve(&rhs).ok_or(Error::Singular)?;
    }
}

fn null_tangent(
    sys: &dyn Extended,
    y: &DVector<f64>,
    reference: &DVector<f64>,
) -> Result<DVector<f64>> {
    let d = sys.dim();
    let (_, m) = sys.evaluate(y);
    let mut a = DMatrix::zeros(d, d);
    a.view_mut((0, 0), (d - 1, d)).copy_from(&m);
    a.view_mut((d - 1, 0), (1, d))
        .copy_from(&reference.transpose());
    let mut rhs = DVector::zeros(d);
    rhs[d - 1] = 1.0;
    let t = a.lu().solve(&rhs).ok_or(Error::Singular)?;
    let norm = t.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::Singular);
    }
    Ok(t / norm)
}

struct Traced {
    points: Vec<TrackedPoint>,
    truncated: bool,
    degenerate: bool,
}

fn trace_extended(
    sys: &mut dyn Extended,
    y0: DVector<f64>,
    sign: f64,
    config: &TrackConfig,
) -> Result<Traced> {
    let d = sys.dim();
    let mut reference = DVector::zeros(d);
    reference[d - 1] = sign;
    let mut t = null_tangent(sys, &y0, &reference)?;
    let f_of = |p: &TrackedPoint| p.forcing;
    let mut y = y0;
    let mut points = vec![sys.unpack(&y, t.clone())];
    let step = config.step;
    let mut h = step.initial.clamp(step.min, step.max);
    let (mut truncated, mut degenerate) = (false, false);
    loop {
        if points.len() >= step.max_points {
            truncated = true;
            break;
        }
        let pred = &y + &t * h;
        let target = t.dot(&pred);
        let attempt = newton(sys, pred, &t, target, &config.corrector)
            .and_then(|(yn, it)| null_tangent(sys, &yn, &t).map(|tn| (yn, it, tn)));
        let ok = match &attempt {
            Ok((_, _, tn)) => tn.dot(&t) >= step.min_tangent_cosine || h <= step.min * 1.0001,
            Err(_) => false,
        };
        if !ok {
            h *= step.shrink;
            if h < step.min {
                truncated = true;
                break;
            }
            continue;
        }
        let (yn, it, tn) = attempt.expect("checked above");
        sys.accept(&yn);
        y = yn;
        t = tn;
        let p = sys.unpack(&y, t.clone());
        let (f, w) = (f_of(&p), p.omega());
        points.push(p);
        if let Some(k) = sys.kappa(&y) {
            if k.abs() < config.kappa_min {
                degenerate = true;
                break;
            }
        }
        if f < config.forcing_range.0
            || f > config.forcing_range.1
            || w < config.omega_range.0
            || w > config.omega_range.1
        {
            break;
        }
        if it <= step.fast_iterations {
            h = (h * step.grow).min(step.max);
        }
    }
    Ok(Traced {
        points,
        truncated,
        degenerate,
    })
}

fn run_tracking(
    sys: &mut dyn Extended,
    seed: &TrackedPoint,
    config: &TrackConfig,
) -> Result<(Vec<TrackedPoint>, bool, bool)> {
    let d = sys.dim();
    let y_seed = sys.pack(seed);
    // polish the seed at fixed forcing
    let mut fix = DVector::zeros(d);
    fix[d - 1] = 1.0;
    let (y0, _) = newton(sys, y_seed.clone(), &fix, y_seed[d - 1], &config.corrector)?;
    sys.accept(&y0);
    let run = |sign: f64, sys: &mut dyn Extended| -> Result<Traced> {
        sys.accept(&y0);
        trace_extended(sys, y0.clone(), sign, config)
    };
    Ok(match config.direction {
        Direction::Increasing => {
            let t = run(1.0, sys)?;
            (t.points, t.truncated, t.degenerate)
        }
        Direction::Decreasing => {
            let t = run(-1.0, sys)?;
            (t.points, t.truncated, t.degenerate)
        }
        Direction::Both => {
            let down = run(-1.0, sys)?;
            let up = run(1.0, sys)?;
            // reverse the decreasing half so the branch is traversed in one direction
            let mut points: Vec<TrackedPoint> = down
                .points
                .into_iter()
                .rev()
                .map(|mut p| {
                    p.tangent = -p.tangent;
                    p
                })
                .collect();
            points.pop();
            points.extend(up.points);
            (
                points,
                down.truncated || up.truncated,
                down.degenerate || up.degenerate,
            )
        }
    })
}

fn is_linear(params: &SystemParams) -> bool {
    params.knl1 == 0.0 && params.knl2 == 0.0
}

/// Follows a fold point in `(ω, F)`.
pub fn track_fold(
    seed: &BifurcationPoint,
    params: &SystemParams,
    config: &TrackConfig,
) -> Result<BifurcationBranch> {
    if seed.kind != BifurcationKind::Fold {
        return Err(Error::SeedNotFound(
            "fold tracking needs a fold seed".into(),
        ));
    }
    if is_linear(params) {
        return Err(Error::SeedNotFound("a linear system has no folds".into()));
    }
    let system = HbmSystem::new(*params, config.hbm)?;
    let jac = system.coeff_jacobian(&seed.solution.coeffs, seed.solution.omega);
    let svd = jac.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::Singular)?;
    let (imin, smin) = svd.singular_values.argmin();
    let smax = svd.singular_values.max();
    if !(smin <= 1e-4 * smax) {
        return Err(Error::SeedNotFound(format!(
            "coefficient Jacobian is not singular at the seed (σ_min/σ_max = {:.2e})",
            smin / smax
        )));
    }
    let phi = v_t.row(imin).transpose();
    let f_ref = seed.solution.amplitude;
    let seed_point = TrackedPoint {
        solution: seed.solution.clone(),
        forcing: f_ref,
        amplitude_x1: amplitude_x1(&seed.solution, config.hbm.samples),
        eigen: phi,
        kappa: None,
        tangent: DVector::zeros(0),
    };
    let mut sys = FoldSystem::new(system, f_ref);
    let (points, truncated, _) = run_tracking(&mut sys, &seed_point, config)?;
    Ok(BifurcationBranch {
        kind: BifurcationKind::Fold,
        label: None,
        params: *params,
        hbm: config.hbm,
        reference_forcing: f_ref,
        points,
        truncated,
        degenerate: false,
    })
}

/// Follows a Neimark-Sacker point in `(ω, F)`.
pub fn track_ns(
    seed: &BifurcationPoint,
    params: &SystemParams,
    config: &TrackConfig,
) -> Result<BifurcationBranch> {
    if seed.kind != BifurcationKind::NeimarkSacker {
        return Err(Error::SeedNotFound(
            "NS tracking needs a Neimark-Sacker seed".into(),
        ));
    }
    if is_linear(params) {
        return Err(Error::SeedNotFound(
            "a linear system has no Neimark-Sacker points".into(),
        ));
    }
    let system = HbmSystem::new(*params, config.hbm)?;
    let data = hill_data(&system, &seed.solution.coeffs, seed.solution.omega)?;
    let thresh = 1e-6 * seed.solution.omega.max(1.0);
    let pick = data
        .filtered
        .iter()
        .enumerate()
        .filter(|(_, z)| z.im > thresh)
        .min_by(|a, b| a.1.re.abs().total_cmp(&b.1.re.abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::SeedNotFound("no oscillatory exponent at the seed".into()))?;
    let kappa = data.filtered[pick].im;
    let v: &DVector<Complex<f64>> = &data.filtered_vectors[pick];
    let n = v.len();
    let mut eigen = DVector::zeros(2 * n);
    for i in 0..n {
        eigen[i] = v[i].re;
        eigen[n + i] = v[i].im;
    }
    eigen /= eigen.norm();
    let f_ref = seed.solution.amplitude;
    let seed_point = TrackedPoint {
        solution: seed.solution.clone(),
        forcing: f_ref,
        amplitude_x1: amplitude_x1(&seed.solution, config.hbm.samples),
        eigen: eigen.clone(),
        kappa: Some(kappa),
        tangent: DVector::zeros(0),
    };
    let mut sys = NsSystem::new(
        system,
        f_ref,
        eigen.rows(0, n).into_owned(),
        eigen.rows(n, n).into_owned(),
    );
    let (points, truncated, degenerate) = run_tracking(&mut sys, &seed_point, config)?;
    Ok(BifurcationBranch {
        kind: BifurcationKind::NeimarkSacker,
        label: None,
        params: *params,
        hbm: config.hbm,
        reference_forcing: f_ref,
        points,
        truncated,
        degenerate,
    })
}

/// Birth and merging of the detached resonance curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrcEvents {
    pub f_appear: f64,
    pub f_merge: f64,
    pub appear: TurningPoint,
    pub merge: TurningPoint,
}

/// Reads the DRC events off a fold branch of the second resonance:
/// the merge is the forcing maximum, the appearance the minimum next to it on
/// the high-frequency side.
pub fn find_drc_events(branch: &BifurcationBranch) -> Option<DrcEvents> {
    drc_events_from(&branch.turning_points())
}

pub fn drc_events_from(turning: &[TurningPoint]) -> Option<DrcEvents> {
    if turning.len() < 2 {
        return None;
    }
    let (im, merge) = turning
        .iter()
        .enumerate()
        .filter(|(_, t)| t.kind == TurningKind::Maximum)
        .max_by(|a, b| a.1.forcing.total_cmp(&b.1.forcing))?;
    let before = turning[..im]
        .iter()
        .rev()
        .find(|t| t.kind == TurningKind::Minimum);
    let after = turning[im + 1..]
        .iter()
        .find(|t| t.kind == TurningKind::Minimum);
    let appear = match (before, after) {
        (Some(a), Some(b)) => {
            if a.omega > b.omega {
                a
            } else {
                b
            }
        }
        (Some(a), None) | (None, Some(a)) => {
            if a.omega > merge.omega {
                a
            } else {
                return None;
            }
        }
        (None, None) => return None,
    };
    if appear.forcing >= merge.forcing {
        return None;
    }
    Some(DrcEvents {
        f_appear: appear.forcing,
        f_merge: merge.forcing,
        appear: *appear,
        merge: *merge,
    })
}

/// Lowest forcing on a Neimark-Sacker branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOnset {
    pub forcing: f64,
    pub omega: f64,
    /// The branch has no interior minimum; the value is its lowest stored point.
    pub at_boundary: bool,
}

pub fn find_qp_onset(branch: &BifurcationBranch) -> Option<QpOnset> {
    let interior = branch
        .turning_points()
        .into_iter()
        .filter(|t| t.kind == TurningKind::Minimum)
        .min_by(|a, b| a.forcing.total_cmp(&b.forcing));
    if let Some(t) = interior {
        return Some(QpOnset {
            forcing: t.forcing,
            omega: t.omega,
            at_boundary: false,
        });
    }
    branch
        .points
        .iter()
        .min_by(|a, b| a.forcing.total_cmp(&b.forcing))
        .map(|p| QpOnset {
            forcing: p.forcing,
            omega: p.omega(),
            at_boundary: true,
        })
}
