//! Direct time integration, steady-state classification and basins of attraction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{rhs, Forcing, State, SystemParams};

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type Vec4 = [f64; 4];

/// Adaptive Dormand-Prince integrator of the equations of motion.
#[derive(Debug, Clone)]
pub struct Integrator {
    params: SystemParams,
    forcing: Forcing,
    tol: f64,
    t: f64,
    y: Vec4,
    f: Vec4,
    h: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl Integrator {
    pub fn new(
        params: &SystemParams,
        forcing: &Forcing,
        initial: &State,
        t0: f64,
        tol: f64,
    ) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::Domain(format!(
                "integration tolerance must be positive, got {tol}"
            )));
        }
        if !initial.is_finite() {
            return Err(Error::Domain("initial state is not finite".into()));
        }
        let y = initial.to_array();
        let f = rhs(initial, t0, params, forcing).to_array();
        let h = 0.01
            * forcing
                .period()
                .min(2.0 * std::f64::consts::PI / params.omega_n1());
        Ok(Self {
            params: *params,
            forcing: *forcing,
            tol,
            t: t0,
            y,
            f,
            h,
            steps: 0,
            rejected: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> State {
        State::from_array(self.y)
    }

    fn eval(&self, t: f64, y: &Vec4) -> Vec4 {
        rhs(&State::from_array(*y), t, &self.params, &self.forcing).to_array()
    }

    /// Steps until `t_target` is reached exactly, reporting every accepted step.
    pub fn advance_to(
        &mut self,
        t_target: f64,
        mut on_step: impl FnMut(f64, &State),
    ) -> Result<()> {
        let span = (t_target - self.t).abs().max(1.0);
        while self.t < t_target {
            let remaining = t_target - self.t;
            let clamped = self.h >= remaining;
            let h = if clamped { remaining } else { self.h };
            let h_min = 1e-12 * span;
            if h < h_min && !clamped {
                return Err(Error::StepUnderflow { t: self.t, h });
            }
            let (t, y) = (self.t, self.y);
            let k1 = self.f;
            let mut k = [[0.0; 4]; 7];
            k[0] = k1;
            let mut y_new = y;
            for s in 1..7 {
                let mut ys = y;
                for j in 0..s {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..4 {
                            ys[i] += h * a * k[j][i];
                        }
                    }
                }
                k[s] = self.eval(t + C[s] * h, &ys);
                y_new = ys;
            }
            let mut err = 0.0;
            for i in 0..4 {
                let mut e = 0.0;
                for s in 0..7 {
                    e += E[s] * k[s][i];
                }
                let sc = self.tol + self.tol * y[i].abs().max(y_new[i].abs());
                err += (h * e / sc).powi(2);
            }
            let err = (err / 4.0).sqrt();
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                self.rejected += 1;
                self.h = 0.25 * h;
                if self.h < h_min {
                    return Err(Error::StepUnderflow {
                        t: self.t,
                        h: self.h,
                    });
                }
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.steps += 1;
                self.t = if clamped { t_target } else { t + h };
                self.y = y_new;
                self.f = k[6];
                if !clamped || factor < 1.0 {
                    self.h = h * factor;
                }
                on_step(self.t, &State::from_array(self.y));
            } else {
                self.rejected += 1;
                self.h = h * factor.min(1.0);
                if self.h < h_min {
                    return Err(Error::StepUnderflow {
                        t: self.t,
                        h: self.h,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<State>,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    /// `max |x1|` over samples with `t >= t_from`.
    pub fn max_abs_x1_after(&self, t_from: f64) -> f64 {
        self.t
            .iter()
            .zip(&self.states)
            .filter(|(t, _)| **t >= t_from)
            .fold(0.0, |m, (_, s)| m.max(s.x1.abs()))
    }
}

/// Integrates from `t = 0` to `t_end`, recording every accepted step.
pub fn integrate(
    params: &SystemParams,
    forcing: &Forcing,
    initial: &State,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::Domain(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let mut integ = Integrator::new(params, forcing, initial, 0.0, tol)?;
    let mut traj = Trajectory {
        t: vec![0.0],
        states: vec![*initial],
        steps: 0,
        rejected: 0,
    };
    integ.advance_to(t_end, |t, s| {
        traj.t.push(t);
        traj.states.push(*s);
    })?;
    traj.steps = integ.steps;
    traj.rejected = integ.rejected;
    Ok(traj)
}

/// `max |x1|` over `periods` forcing periods, sampled `samples` times per period
/// with a parabolic refinement around the largest sample.
pub fn measure_amplitude(integ: &mut Integrator, periods: usize, samples: usize) -> Result<f64> {
    let period = integ.forcing.period();
    let t0 = integ.time();
    let dt = period / samples as f64;
    let mut best = 0.0f64;
    let (mut prev2, mut prev1) = (f64::NAN, integ.state().x1.abs());
    for j in 1..=periods * samples {
        integ.advance_to(t0 + j as f64 * dt, |_, _| {})?;
        let x = integ.state().x1.abs();
        best = best.max(prev1);
        if prev1 >= prev2 && prev1 >= x {
            let den = prev2 - 2.0 * prev1 + x;
            if den < 0.0 {
                let p = 0.5 * (prev2 - x) / den;
                if p.abs() <= 1.0 {
                    best = best.max(prev1 - 0.25 * (prev2 - x) * p);
                }
            }
        }
        prev2 = prev1;
        prev1 = x;
    }
    Ok(best.max(prev1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttractorKind {
    PeriodicLow,
    PeriodicHigh,
    Quasiperiodic,
    Unconverged,
}

impl AttractorKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttractorKind::PeriodicLow => "periodic_low",
            AttractorKind::PeriodicHigh => "periodic_high",
            AttractorKind::Quasiperiodic => "quasiperiodic",
            AttractorKind::Unconverged => "unconverged",
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            AttractorKind::PeriodicLow => 0,
            AttractorKind::PeriodicHigh => 1,
            AttractorKind::Quasiperiodic => 2,
            AttractorKind::Unconverged => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorLabel {
    pub kind: AttractorKind,
    /// `max |x1|` over the analysis window.
    pub amplitude: f64,
    /// Period multiplicity of the stroboscopic returns (0 when not periodic).
    pub multiplicity: usize,
    /// Forcing periods integrated before the decision.
    pub periods: usize,
    pub final_state: State,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub tol: f64,
    pub transient_periods: usize,
    pub extension_periods: usize,
    pub max_periods: usize,
    pub window_returns: usize,
    /// Stroboscopic dispersion below which returns count as a fixed point [m].
    pub dispersion: f64,
    /// Largest period multiplicity accepted as periodic.
    pub max_lag: usize,
    /// Amplitude separating low from high periodic attractors.
    pub split_amplitude: Option<f64>,
    pub amplitude_samples: usize,
    /// Periods over which a quasiperiodic amplitude is measured.
    pub quasiperiodic_periods: usize,
    /// Returns beyond this distance from the origin are treated as divergent [m].
    pub escape_radius: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            transient_periods: 300,
            extension_periods: 300,
            max_periods: 1500,
            window_returns: 20,
            dispersion: 1e-4,
            max_lag: 8,
            split_amplitude: None,
            amplitude_samples: 128,
            quasiperiodic_periods: 100,
            escape_radius: 1e3,
        }
    }
}

/// Stroboscopic point with velocities scaled to displacement units.
fn section_point(s: &State, omega: f64) -> Vec4 {
    [s.x1, s.v1 / omega, s.x2, s.v2 / omega]
}

fn dist(a: &Vec4, b: &Vec4) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Largest distance of the points to their centroid.
fn spread(points: &[Vec4]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut mean = [0.0; 4];
    for p in points {
        for i in 0..4 {
            mean[i] += p[i] / points.len() as f64;
        }
    }
    points.iter().map(|p| dist(p, &mean)).fold(0.0, f64::max)
}

/// Smallest `k ≤ max_lag` for which every `k`-th return of the window coincides.
fn return_multiplicity(returns: &[Vec4], window: usize, max_lag: usize, tol: f64) -> Option<usize> {
    for k in 1..=max_lag {
        let need = window.max(2 * k);
        if returns.len() < need {
            return None;
        }
        let tail = &returns[returns.len() - need..];
        let ok = (0..k).all(|phase| {
            let sub: Vec<Vec4> = tail.iter().skip(phase).step_by(k).copied().collect();
            spread(&sub) < tol
        });
        if ok {
            return Some(k);
        }
    }
    None
}

fn label_periodic(amplitude: f64, split: Option<f64>) -> AttractorKind {
    match split {
        Some(s) if amplitude > s => AttractorKind::PeriodicHigh,
        _ => AttractorKind::PeriodicLow,
    }
}

/// Integrates past the transient and labels the attractor reached from `initial`.
pub fn classify(
    params: &SystemParams,
    forcing: &Forcing,
    initial: &State,
    config: &ClassifyConfig,
) -> Result<AttractorLabel> {
    let period = forcing.period();
    let omega = forcing.omega;
    let mut integ = Integrator::new(params, forcing, initial, 0.0, config.tol)?;
    let mut returns: Vec<Vec4> = Vec::with_capacity(config.max_periods);
    let mut horizon = config.transient_periods.max(2 * config.window_returns);
    let unconverged = |integ: &Integrator, n: usize| AttractorLabel {
        kind: AttractorKind::Unconverged,
        amplitude: integ.state().x1.abs(),
        multiplicity: 0,
        periods: n,
        final_state: integ.state(),
    };
    loop {
        while returns.len() < horizon {
            let k = returns.len() + 1;
            if integ.advance_to(k as f64 * period, |_, _| {}).is_err() {
                return Ok(unconverged(&integ, returns.len()));
            }
            let p = section_point(&integ.state(), omega);
            if p.iter().any(|v| !v.is_finite())
                || p.iter().map(|v| v * v).sum::<f64>().sqrt() > config.escape_radius
            {
                return Ok(unconverged(&integ, returns.len()));
            }
            returns.push(p);
        }
        let n = returns.len();
        if let Some(k) = return_multiplicity(
            &returns,
            config.window_returns,
            config.max_lag,
            config.dispersion,
        ) {
            let amplitude = measure_amplitude(&mut integ, k, config.amplitude_samples)?;
            return Ok(AttractorLabel {
                kind: label_periodic(amplitude, config.split_amplitude),
                amplitude,
                multiplicity: k,
                periods: n,
                final_state: integ.state(),
            });
        }
        let w = config.window_returns;
        let now = spread(&returns[n - w..]);
        let mid = n / 2;
        let before = spread(&returns[mid.saturating_sub(w)..mid.max(w)]);
        // sustained spread: the returns fill a curve instead of spiralling in
        if now >= 0.8 * before && now > config.dispersion {
            let amplitude = measure_amplitude(
                &mut integ,
                config.quasiperiodic_periods,
                config.amplitude_samples,
            )?;
            return Ok(AttractorLabel {
                kind: AttractorKind::Quasiperiodic,
                amplitude,
                multiplicity: 0,
                periods: n,
                final_state: integ.state(),
            });
        }
        if horizon >= config.max_periods {
            return Ok(unconverged(&integ, n));
        }
        horizon = (horizon + config.extension_periods).min(config.max_periods);
    }
}

/// Frequency sweep along a quasiperiodic attractor, each frequency started from
/// the final state of the previous one. Frequencies where the attractor is lost are omitted.
pub fn sweep_quasiperiodic(
    params: &SystemParams,
    amplitude: f64,
    omegas: &[f64],
    initial: &State,
    config: &ClassifyConfig,
) -> Result<Vec<(f64, f64)>> {
    let mut state = *initial;
    let mut out = Vec::new();
    for &w in omegas {
        let forcing = Forcing::new(amplitude, w)?;
        let label = classify(params, &forcing, &state, config)?;
        if label.kind == AttractorKind::Quasiperiodic {
            out.push((w, label.amplitude));
        }
        if label.final_state.is_finite() {
            state = label.final_state;
        }
    }
    Ok(out)
}

/// Rectangular window of primary initial conditions `(x1⁰, ẋ1⁰)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub v_range: (f64, f64),
    pub nx: usize,
    pub nv: usize,
}

impl GridSpec {
    /// Square window of half-width `1.5 × max(amplitudes)` on both axes.
    pub fn around(amplitudes: &[f64], resolution: usize) -> Result<Self> {
        let a = amplitudes.iter().copied().fold(0.0, f64::max);
        if !(a > 0.0) {
            return Err(Error::Domain(
                "grid window needs a positive reference amplitude".into(),
            ));
        }
        let h = 1.5 * a;
        Ok(Self {
            x_range: (-h, h),
            v_range: (-h, h),
            nx: resolution,
            nv: resolution,
        })
    }

    pub fn cells(&self) -> usize {
        self.nx * self.nv
    }

    fn coord(range: (f64, f64), n: usize, i: usize) -> f64 {
        if n <= 1 {
            0.5 * (range.0 + range.1)
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
        }
    }

    /// Initial condition of cell `index` in row-major order (rows follow `ẋ1⁰`).
    pub fn point(&self, index: usize) -> (f64, f64) {
        let (iv, ix) = (index / self.nx, index % self.nx);
        (
            Self::coord(self.x_range, self.nx, ix),
            Self::coord(self.v_range, self.nv, iv),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.nv == 0 {
            return Err(Error::Validation(
                "basin grid needs at least one cell per axis".into(),
            ));
        }
        if !(self.x_range.1 >= self.x_range.0 && self.v_range.1 >= self.v_range.0) {
            return Err(Error::Validation("basin grid ranges are reversed".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Maps `f` over `0..n`, collecting in index order.
pub fn map_indices<T, F>(n: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = execution;
    (0..n).map(f).collect()
}

/// Sets the size of the global worker pool. Without the `parallel` feature this is a no-op.
pub fn configure_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
        }
    }
    let _ = threads;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinConfig {
    pub grid: GridSpec,
    pub classify: ClassifyConfig,
    pub execution: Execution,
    /// Absorber initial state `(x2⁰, ẋ2⁰)`.
    pub absorber_initial: (f64, f64),
}

impl BasinConfig {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            classify: ClassifyConfig::default(),
            execution: Execution::default(),
            absorber_initial: (0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinMap {
    pub grid: GridSpec,
    pub forcing: Forcing,
    /// Row-major labels, rows along `ẋ1⁰`.
    pub labels: Vec<AttractorKind>,
    /// Primary amplitude reached from each cell, NaN where integration failed.
    pub amplitudes: Vec<f64>,
    /// SHA-256 of the parameters and configuration that produced the map.
    pub config_hash: String,
}

impl BasinMap {
    pub fn count(&self, kind: AttractorKind) -> usize {
        self.labels.iter().filter(|&&k| k == kind).count()
    }

    pub fn label_at(&self, ix: usize, iv: usize) -> AttractorKind {
        self.labels[iv * self.grid.nx + ix]
    }
}

fn config_hash(params: &SystemParams, forcing: &Forcing, config: &BasinConfig) -> String {
    let mut h = Sha256::new();
    // execution mode does not affect the result
    let canonical = BasinConfig {
        execution: Execution::Sequential,
        ..*config
    };
    h.update(format!("{params:?}|{forcing:?}|{canonical:?}").as_bytes());
    hex::encode(h.finalize())
}

/// Labels every grid cell with the primary started at `(x1⁰, ẋ1⁰)`.
///
/// `coexisting` holds the amplitudes of the known stable periodic solutions; the
/// grid must cover them and their midpoint splits low from high attractors.
pub fn compute_basins(
    params: &SystemParams,
    forcing: &Forcing,
    coexisting: &[f64],
    config: &BasinConfig,
) -> Result<BasinMap> {
    config.grid.validate()?;
    for &a in coexisting {
        if a > config.grid.x_range.1.max(-config.grid.x_range.0) {
            return Err(Error::Validation(format!(
                "basin grid [{}, {}] does not reach the solution amplitude {a}",
                config.grid.x_range.0, config.grid.x_range.1
            )));
        }
    }
    let mut classify_cfg = config.classify;
    if classify_cfg.split_amplitude.is_none() && coexisting.len() >= 2 {
        let lo = coexisting.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = coexisting.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        classify_cfg.split_amplitude = Some(0.5 * (lo + hi));
    }
    let grid = config.grid;
    let (x2, v2) = config.absorber_initial;
    let cells = map_indices(grid.cells(), config.execution, |i| {
        let (x1, v1) = grid.point(i);
        let initial = State { x1, v1, x2, v2 };
        classify(params, forcing, &initial, &classify_cfg)
            .map(|l| (l.kind, l.amplitude))
            .unwrap_or((AttractorKind::Unconverged, f64::NAN))
    });
    let (labels, amplitudes) = cells.into_iter().unzip();
    Ok(BasinMap {
        grid,
        forcing: *forcing,
        labels,
        amplitudes,
        config_hash: config_hash(params, forcing, config),
    })
}

/// Basins estimated from seeded uniform random initial states in the grid window.
pub fn sample_basins(
    params: &SystemParams,
    forcing: &Forcing,
    coexisting: &[f64],
    config: &BasinConfig,
    samples: usize,
    seed: u64,
) -> Result<Vec<((f64, f64), AttractorKind)>> {
    config.grid.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = config.grid;
    let points: Vec<(f64, f64)> = (0..samples)
        .map(|_| {
            (
                rng.random_range(g.x_range.0..=g.x_range.1),
                rng.random_range(g.v_range.0..=g.v_range.1),
            )
        })
        .collect();
    let mut classify_cfg = config.classify;
    if classify_cfg.split_amplitude.is_none() && coexisting.len() >= 2 {
        let lo = coexisting.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = coexisting.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        classify_cfg.split_amplitude = Some(0.5 * (lo + hi));
    }
    let (x2, v2) = config.absorber_initial;
    let labels = map_indices(points.len(), config.execution, |i| {
        let (x1, v1) = points[i];
        classify(params, forcing, &State { x1, v1, x2, v2 }, &classify_cfg)
            .map(|l| l.kind)
            .unwrap_or(AttractorKind::Unconverged)
    });
    Ok(points.into_iter().zip(labels).collect())
}

/// `100 × high / low` cell counts.
pub fn area_ratio(labels: &[AttractorKind]) -> Result<f64> {
    let low = labels
        .iter()
        .filter(|&&k| k == AttractorKind::PeriodicLow)
        .count();
    let high = labels
        .iter()
        .filter(|&&k| k == AttractorKind::PeriodicHigh)
        .count();
    if low == 0 {
        return Err(Error::UndefinedRatio(
            "no cell reaches the low-amplitude attractor".into(),
        ));
    }
    Ok(100.0 * high as f64 / low as f64)
}

/// Ratio of the high-amplitude basin to the low-amplitude basin, in percent.
pub fn basin_area_ratio(map: &BasinMap) -> Result<f64> {
    area_ratio(&map.labels)
}
