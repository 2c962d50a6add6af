//! Operating regions, peak amplitudes and parameter sweeps.
//!
//! Sweeps use the realization `m1 = k1 = knl1 = 1`, in which the forcing
//! amplitude alone sets `α3 = 3 F² / 4` and the absorber is built from
//! `(ε, μ2, λ, β3/α3)`.

use serde::{Deserialize, Serialize};

use crate::continuation::{
    bifurcations, continue_branch, find_drc, BifurcationKind, BifurcationPoint, Branch,
    ContinuationConfig, DrcSearch,
};
use crate::error::{Error, Result};
use crate::model::{tune_dimensionless, SystemParams};
use crate::timedomain::{map_indices, Execution};
use crate::tracking::{
    find_drc_events, find_qp_onset, track_fold, track_ns, BifurcationBranch, BranchLabel,
    DrcEvents, TrackConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationRegion {
    Safe,
    Unsafe,
    Unacceptable,
}

impl OperationRegion {
    pub fn name(&self) -> &'static str {
        match self {
            OperationRegion::Safe => "safe",
            OperationRegion::Unsafe => "unsafe",
            OperationRegion::Unacceptable => "unacceptable",
        }
    }
}

/// Region of a forcing amplitude given the DRC events of the parameter set.
/// Without events the branch has no folding and every amplitude is safe.
pub fn classify_operation(events: Option<&DrcEvents>, forcing: f64) -> OperationRegion {
    classify_level(events.map(|e| (e.f_appear, e.f_merge)), forcing)
}

/// Same rule on any monotone forcing measure, e.g. `α3` with `(α3_appear, α3_merge)`.
pub fn classify_level(appear_merge: Option<(f64, f64)>, level: f64) -> OperationRegion {
    match appear_merge {
        None => OperationRegion::Safe,
        Some((appear, _)) if level < appear => OperationRegion::Safe,
        Some((_, merge)) if level < merge => OperationRegion::Unsafe,
        Some(_) => OperationRegion::Unacceptable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsorberVariant {
    Ltva,
    Nltva,
    Perturbed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub omega: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakRecord {
    pub forcing: f64,
    pub variant: AbsorberVariant,
    pub first: Option<Peak>,
    pub second: Option<Peak>,
    /// Largest amplitude on a detached curve, when one was searched for and found.
    pub drc: Option<Peak>,
    /// Largest primary amplitude anywhere on the computed main branch, window edges included.
    pub branch_max: f64,
}

impl PeakRecord {
    /// Larger of the two resonance peaks.
    pub fn max_peak(&self) -> Option<f64> {
        match (self.first, self.second) {
            (Some(a), Some(b)) => Some(a.amplitude.max(b.amplitude)),
            (Some(a), None) | (None, Some(a)) => Some(a.amplitude),
            (None, None) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    pub omega_range: (f64, f64),
    pub continuation: ContinuationConfig,
    /// Frequency window scanned for a detached curve.
    pub drc_window: Option<(f64, f64)>,
    /// Local maxima closer than this in ω belong to the same peak.
    pub min_separation: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            omega_range: (0.5, 1.8),
            continuation: ContinuationConfig {
                stability: false,
                ..ContinuationConfig::default()
            },
            drc_window: None,
            min_separation: 0.05,
        }
    }
}

fn cumulative_chord(branch: &Branch) -> Vec<f64> {
    let mut s = vec![0.0];
    for w in branch.points.windows(2) {
        let d = ((w[1].omega() - w[0].omega()).powi(2)
            + (w[1].amplitude_x1 - w[0].amplitude_x1).powi(2))
        .sqrt();
        s.push(s.last().copied().unwrap_or(0.0) + d);
    }
    s
}

/// Local maxima of the primary amplitude along the branch, refined by a parabola in arclength.
pub fn local_maxima(branch: &Branch) -> Vec<(usize, Peak)> {
    let s = cumulative_chord(branch);
    let pts = &branch.points;
    let mut out = Vec::new();
    for i in 1..pts.len().saturating_sub(1) {
        let (a, b, c) = (
            pts[i - 1].amplitude_x1,
            pts[i].amplitude_x1,
            pts[i + 1].amplitude_x1,
        );
        if b > a && b >= c {
            let (c0, c1, c2) =
                crate::tracking::quadratic_coefficients([s[i - 1], s[i], s[i + 1]], [a, b, c]);
            let (w0, w1, w2) = crate::tracking::quadratic_coefficients(
                [s[i - 1], s[i], s[i + 1]],
                [pts[i - 1].omega(), pts[i].omega(), pts[i + 1].omega()],
            );
            let sv = if c2 < 0.0 {
                (-c1 / (2.0 * c2)).clamp(s[i - 1], s[i + 1])
            } else {
                s[i]
            };
            let amplitude = (c0 + c1 * sv + c2 * sv * sv).max(b);
            let omega = w0 + w1 * sv + w2 * sv * sv;
            out.push((i, Peak { omega, amplitude }));
        }
    }
    out
}

/// The two dominant resonance peaks `(first, second)` with their branch indices, ordered by frequency.
pub fn resonance_peaks(
    branch: &Branch,
    min_separation: f64,
) -> (Option<(usize, Peak)>, Option<(usize, Peak)>) {
    let mut maxima = local_maxima(branch);
    maxima.sort_by(|a, b| b.1.amplitude.total_cmp(&a.1.amplitude));
    let Some(top) = maxima.first().copied() else {
        return (None, None);
    };
    let other = maxima
        .iter()
        .copied()
        .find(|m| (m.1.omega - top.1.omega).abs() > min_separation);
    match other {
        None => (Some(top), None),
        Some(o) => {
            if o.1.omega < top.1.omega {
                (Some(o), Some(top))
            } else {
                (Some(top), Some(o))
            }
        }
    }
}

/// Index of the smallest amplitude between the two resonance peaks.
pub fn valley_index(branch: &Branch, min_separation: f64) -> Option<usize> {
    let (Some((i, _)), Some((j, _))) = resonance_peaks(branch, min_separation) else {
        return None;
    };
    let (lo, hi) = (i.min(j), i.max(j));
    (lo..=hi).min_by(|&a, &b| {
        branch.points[a]
            .amplitude_x1
            .total_cmp(&branch.points[b].amplitude_x1)
    })
}

/// Resonance peaks of the main frequency response at forcing `forcing`.
pub fn peak_amplitudes(
    params: &SystemParams,
    forcing: f64,
    variant: AbsorberVariant,
    options: &PeakOptions,
) -> Result<PeakRecord> {
    if !(forcing > 0.0) {
        return Err(Error::Domain(
            "peak extraction needs a positive forcing amplitude".into(),
        ));
    }
    let branch = continue_branch(params, forcing, options.omega_range, &options.continuation)?;
    let (first, second) = resonance_peaks(&branch, options.min_separation);
    let drc = match options.drc_window {
        Some(window) => {
            let search = DrcSearch {
                config: options.continuation,
                ..DrcSearch::new(window)
            };
            find_drc(params, forcing, &branch, &search)?.map(|d| {
                let p = d
                    .points
                    .iter()
                    .max_by(|a, b| a.amplitude_x1.total_cmp(&b.amplitude_x1))
                    .expect("non-empty");
                Peak {
                    omega: p.omega(),
                    amplitude: p.amplitude_x1,
                }
            })
        }
        None => None,
    };
    Ok(PeakRecord {
        forcing,
        variant,
        first: first.map(|p| p.1),
        second: second.map(|p| p.1),
        drc,
        branch_max: branch.max_amplitude(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    C2,
    Knl2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub coefficient: Coefficient,
    pub fraction: f64,
}

impl Perturbation {
    pub fn apply(&self, params: &SystemParams, sign: f64) -> SystemParams {
        let factor = 1.0 + sign * self.fraction;
        let mut p = *params;
        match self.coefficient {
            Coefficient::C2 => p.c2 *= factor,
            Coefficient::Knl2 => p.knl2 *= factor,
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePoint {
    pub forcing: f64,
    pub nominal: PeakRecord,
    /// Records for `-fraction` and `+fraction`.
    pub perturbed: [PeakRecord; 2],
    pub first: (f64, f64),
    pub second: (f64, f64),
}

fn span(values: &[Option<Peak>]) -> (f64, f64) {
    values
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.amplitude), hi.max(p.amplitude))
        })
}

/// Min/max peak amplitudes over `{-fraction, 0, +fraction}` on one coefficient.
pub fn sensitivity_envelope(
    params: &SystemParams,
    forcings: &[f64],
    perturbation: &Perturbation,
    options: &PeakOptions,
    execution: Execution,
) -> Result<Vec<EnvelopePoint>> {
    if !(perturbation.fraction >= 0.0 && perturbation.fraction <= 0.5) {
        return Err(Error::Domain(format!(
            "perturbation fraction must lie in [0, 0.5], got {}",
            perturbation.fraction
        )));
    }
    let jobs: Vec<(f64, f64)> = forcings
        .iter()
        .flat_map(|&f| [(f, 0.0), (f, -1.0), (f, 1.0)])
        .collect();
    let records = map_indices(jobs.len(), execution, |i| {
        let (f, sign) = jobs[i];
        let (p, variant) = if sign == 0.0 {
            (*params, AbsorberVariant::Nltva)
        } else {
            (perturbation.apply(params, sign), AbsorberVariant::Perturbed)
        };
        peak_amplitudes(&p, f, variant, options)
    });
    let records: Vec<PeakRecord> = records.into_iter().collect::<Result<_>>()?;
    Ok(records
        .chunks(3)
        .map(|r| {
            let firsts = [r[0].first, r[1].first, r[2].first];
            let seconds = [r[0].second, r[1].second, r[2].second];
            EnvelopePoint {
                forcing: r[0].forcing,
                nominal: r[0],
                perturbed: [r[1], r[2]],
                first: span(&firsts),
                second: span(&seconds),
            }
        })
        .collect())
}

/// Absorber built from the tuning rules with multiplicative departures
/// `p_mu = μ2 / μ2_opt` and `p_beta = β3 / β3_opt`, in the unit realization.
pub fn dimensionless_params(
    epsilon: f64,
    p_mu: f64,
    p_beta: f64,
    mu1: f64,
) -> Result<SystemParams> {
    let t = tune_dimensionless(epsilon, 1.0)?;
    if !(p_mu > 0.0 && p_beta >= 0.0) {
        return Err(Error::Domain(
            "p_mu must be positive and p_beta non-negative".into(),
        ));
    }
    let mu2 = p_mu * t.mu2;
    let p = SystemParams {
        m1: 1.0,
        c1: 2.0 * mu1,
        k1: 1.0,
        knl1: 1.0,
        m2: epsilon,
        c2: 2.0 * mu2 * epsilon * t.lambda,
        k2: epsilon * t.lambda * t.lambda,
        // β3/α3 = knl2 / (ε knl1)
        knl2: epsilon * p_beta * t.beta3,
    };
    p.validate()?;
    Ok(p)
}

/// `α3` of forcing `F` in the unit realization.
pub fn alpha3_of(forcing: f64) -> f64 {
    0.75 * forcing * forcing
}

pub fn forcing_of(alpha3: f64) -> f64 {
    (alpha3 / 0.75).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Epsilon,
    PMu,
    PBeta,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Epsilon => "epsilon",
            SweepParameter::PMu => "p_mu",
            SweepParameter::PBeta => "p_beta",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionBase {
    pub epsilon: f64,
    pub p_mu: f64,
    pub p_beta: f64,
    pub mu1: f64,
    /// `α3` values scanned for seed bifurcations on the main branch.
    pub alpha3_scan: Vec<f64>,
    pub alpha3_range: (f64, f64),
    pub omega_range: (f64, f64),
    pub min_separation: f64,
    pub continuation: ContinuationConfig,
    pub tracking: TrackConfig,
    /// Also locate the quasiperiodic onset (needs stability along the scans).
    pub with_qp: bool,
    pub execution: Execution,
}

impl Default for RegionBase {
    fn default() -> Self {
        let alpha3_scan = (0..20).map(|k| 1e-4 * 2f64.sqrt().powi(k)).collect();
        Self {
            epsilon: 0.05,
            p_mu: 1.0,
            p_beta: 1.0,
            mu1: 0.001,
            alpha3_scan,
            alpha3_range: (1e-4, 0.1),
            omega_range: (0.5, 1.8),
            min_separation: 0.05,
            continuation: ContinuationConfig::default(),
            tracking: TrackConfig::default(),
            with_qp: true,
            execution: Execution::default(),
        }
    }
}

impl RegionBase {
    fn with(&self, parameter: SweepParameter, value: f64) -> Self {
        let mut b = self.clone();
        match parameter {
            SweepParameter::Epsilon => b.epsilon = value,
            SweepParameter::PMu => b.p_mu = value,
            SweepParameter::PBeta => b.p_beta = value,
        }
        b
    }

    fn params(&self) -> Result<SystemParams> {
        dimensionless_params(self.epsilon, self.p_mu, self.p_beta, self.mu1)
    }

    fn forcing_scan(&self) -> Vec<f64> {
        self.alpha3_scan.iter().map(|&a| forcing_of(a)).collect()
    }

    fn track_config(&self) -> TrackConfig {
        TrackConfig {
            forcing_range: (
                forcing_of(self.alpha3_range.0),
                forcing_of(self.alpha3_range.1),
            ),
            ..self.tracking
        }
    }
}

/// Localized folds of a main branch split by the valley between the resonance
/// peaks: `(first peak, second peak)`.
pub fn split_folds(
    branch: &Branch,
    min_separation: f64,
) -> (Vec<BifurcationPoint>, Vec<BifurcationPoint>) {
    let valley = valley_index(branch, min_separation);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for f in bifurcations(branch)
        .into_iter()
        .filter(|f| f.kind == BifurcationKind::Fold)
    {
        match valley {
            Some(v) if f.bracket.0 < v => a.push(f),
            _ => b.push(f),
        }
    }
    (a, b)
}

/// First fold of the labelled branch found along a scan of forcing amplitudes.
pub fn fold_seed(
    params: &SystemParams,
    label: BranchLabel,
    forcings: &[f64],
    omega_range: (f64, f64),
    min_separation: f64,
    config: &ContinuationConfig,
) -> Result<BifurcationPoint> {
    let cfg = ContinuationConfig {
        stability: false,
        ..*config
    };
    for &f in forcings {
        let branch = continue_branch(params, f, omega_range, &cfg)?;
        let (a, b) = split_folds(&branch, min_separation);
        let pick = match label {
            BranchLabel::A => a.into_iter().min_by(|x, y| x.omega().total_cmp(&y.omega())),
            BranchLabel::B => b.into_iter().max_by(|x, y| x.omega().total_cmp(&y.omega())),
        };
        if let Some(p) = pick {
            return Ok(p);
        }
    }
    Err(Error::SeedNotFound(format!(
        "no fold of branch {label:?} over the scanned forcing levels"
    )))
}

/// Main-branch fold seeds tried before falling back to detached curves.
const MAIN_SEED_ATTEMPTS: usize = 3;

/// Upper frequency of the detached-curve search used for seeding.
const DRC_SEARCH_OMEGA: f64 = 3.0;

fn labelled(mut branch: BifurcationBranch) -> BifurcationBranch {
    branch.label = Some(BranchLabel::B);
    branch
}

/// Fold branch B over the scanned forcing levels.
///
/// The fold locus that carries the DRC events need not be the one reached
/// from the first folds of the main branch. Main-branch seeds are tried
/// first; when none of them shows events, folds of detached curves found at
/// lower forcing are used. Without events the first tracked branch is returned.
pub fn track_branch_b(
    params: &SystemParams,
    forcings: &[f64],
    omega_range: (f64, f64),
    min_separation: f64,
    config: &ContinuationConfig,
    track: &TrackConfig,
) -> Result<BifurcationBranch> {
    let cfg = ContinuationConfig {
        stability: false,
        ..*config
    };
    let mut first: Option<(usize, BifurcationBranch)> = None;
    let mut attempts = 0;
    for (k, &f) in forcings.iter().enumerate() {
        let main = continue_branch(params, f, omega_range, &cfg)?;
        let (_, b) = split_folds(&main, min_separation);
        let Some(seed) = b.into_iter().max_by(|x, y| x.omega().total_cmp(&y.omega())) else {
            continue;
        };
        let branch = labelled(track_fold(&seed, params, track)?);
        if find_drc_events(&branch).is_some() {
            return Ok(branch);
        }
        first.get_or_insert((k, branch));
        attempts += 1;
        if attempts >= MAIN_SEED_ATTEMPTS {
            break;
        }
    }
    let upto = first.as_ref().map_or(forcings.len(), |(k, _)| *k);
    for &f in &forcings[..upto] {
        let hi = DRC_SEARCH_OMEGA.max(omega_range.1);
        let main = continue_branch(params, f, (omega_range.0, hi), &cfg)?;
        let lo = match resonance_peaks(&main, min_separation) {
            (_, Some((_, p))) | (Some((_, p)), None) => p.omega,
            _ => omega_range.0,
        };
        let search = DrcSearch {
            config: cfg,
            ..DrcSearch::new((lo, hi))
        };
        let Some(drc) = find_drc(params, f, &main, &search)? else {
            continue;
        };
        for seed in bifurcations(&drc)
            .into_iter()
            .filter(|b| b.kind == BifurcationKind::Fold)
        {
            let Ok(branch) = track_fold(&seed, params, track) else {
                continue;
            };
            let branch = labelled(branch);
            if find_drc_events(&branch).is_some() {
                return Ok(branch);
            }
        }
    }
    first.map(|(_, b)| b).ok_or_else(|| {
        Error::SeedNotFound("no fold of branch B over the scanned forcing levels".into())
    })
}

/// First NS point between the resonance peaks found along a scan of forcing amplitudes.
pub fn ns_seed(
    params: &SystemParams,
    forcings: &[f64],
    omega_range: (f64, f64),
    min_separation: f64,
    config: &ContinuationConfig,
) -> Result<BifurcationPoint> {
    let cfg = ContinuationConfig {
        stability: true,
        ..*config
    };
    for &f in forcings {
        let branch = continue_branch(params, f, omega_range, &cfg)?;
        let (first, second) = resonance_peaks(&branch, min_separation);
        let (Some((i, _)), Some((j, _))) = (first, second) else {
            continue;
        };
        let (lo, hi) = (i.min(j), i.max(j));
        if let Some(p) = bifurcations(&branch).into_iter().find(|b| {
            b.kind == BifurcationKind::NeimarkSacker && b.bracket.0 >= lo && b.bracket.1 <= hi
        }) {
            return Ok(p);
        }
    }
    Err(Error::SeedNotFound(
        "no Neimark-Sacker point between the resonance peaks".into(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSample {
    pub value: f64,
    pub alpha3_appear: Option<f64>,
    pub alpha3_merge: Option<f64>,
    pub alpha3_qp_onset: Option<f64>,
    /// Tracking failed at this sweep point.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionBoundary {
    pub parameter: SweepParameter,
    pub samples: Vec<RegionSample>,
}

impl RegionBoundary {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }
}

/// DRC events of the unit realization, in `α3`.
pub fn alpha3_events(base: &RegionBase) -> Result<Option<(f64, f64)>> {
    let params = base.params()?;
    let branch = track_branch_b(
        &params,
        &base.forcing_scan(),
        base.omega_range,
        base.min_separation,
        &base.continuation,
        &base.track_config(),
    )?;
    Ok(find_drc_events(&branch).map(|e| (alpha3_of(e.f_appear), alpha3_of(e.f_merge))))
}

/// Lowest `α3` on the NS branch between the peaks, if it has an interior minimum.
pub fn alpha3_qp_onset(base: &RegionBase) -> Result<Option<f64>> {
    let params = base.params()?;
    let seed = match ns_seed(
        &params,
        &base.forcing_scan(),
        base.omega_range,
        base.min_separation,
        &base.continuation,
    ) {
        Ok(s) => s,
        Err(Error::SeedNotFound(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let branch = track_ns(&seed, &params, &base.track_config())?;
    Ok(find_qp_onset(&branch)
        .filter(|o| !o.at_boundary)
        .map(|o| alpha3_of(o.forcing)))
}

fn region_sample(base: &RegionBase, value: f64) -> RegionSample {
    let mut flagged = false;
    let events = match alpha3_events(base) {
        Ok(e) => e,
        Err(_) => {
            flagged = true;
            None
        }
    };
    let qp = if base.with_qp {
        alpha3_qp_onset(base).unwrap_or_else(|_| {
            flagged = true;
            None
        })
    } else {
        None
    };
    RegionSample {
        value,
        alpha3_appear: events.map(|e| e.0),
        alpha3_merge: events.map(|e| e.1),
        alpha3_qp_onset: qp,
        flagged,
    }
}

/// Boundary `α3` values for each value of the swept parameter.
pub fn region_sweep(
    parameter: SweepParameter,
    values: &[f64],
    base: &RegionBase,
) -> Result<RegionBoundary> {
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("sweep values must be positive".into()));
    }
    let samples = map_indices(values.len(), base.execution, |i| {
        region_sample(&base.with(parameter, values[i]), values[i])
    });
    Ok(RegionBoundary { parameter, samples })
}

/// Smallest `p_mu` in `[lo, hi]` without DRC events, to within `tol`.
pub fn elimination_threshold(base: &RegionBase, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let probe = |p: f64| -> Result<bool> {
        let b = RegionBase {
            p_mu: p,
            with_qp: false,
            ..base.clone()
        };
        Ok(alpha3_events(&b)?.is_some())
    };
    if !probe(lo)? {
        return Err(Error::Validation(format!(
            "DRC events already absent at p_mu = {lo}"
        )));
    }
    if probe(hi)? {
        return Err(Error::Validation(format!(
            "DRC events still present at p_mu = {hi}"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if probe(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracking::{TurningKind, TurningPoint};
    use approx::assert_relative_eq;

    fn events(appear: f64, merge: f64) -> DrcEvents {
        let tp = |kind, forcing| TurningPoint {
            kind,
            index: 0,
            forcing,
            omega: 1.0,
            amplitude_x1: 1.0,
        };
        DrcEvents {
            f_appear: appear,
            f_merge: merge,
            appear: tp(TurningKind::Minimum, appear),
            merge: tp(TurningKind::Maximum, merge),
        }
    }

    #[test]
    fn regions_follow_events() {
        let e = events(0.12, 0.18);
        assert_eq!(classify_operation(Some(&e), 0.09), OperationRegion::Safe);
        assert_eq!(classify_operation(Some(&e), 0.12), OperationRegion::Unsafe);
        assert_eq!(
            classify_operation(Some(&e), 0.18),
            OperationRegion::Unacceptable
        );
        assert_eq!(classify_operation(None, 10.0), OperationRegion::Safe);
    }

    #[test]
    fn unit_realization_reproduces_reference_absorber() {
        let p = dimensionless_params(0.05, 1.0, 1.0, 0.001).unwrap();
        let r = SystemParams::reference_nltva();
        assert_relative_eq!(p.k2, r.k2, max_relative = 1e-13);
        assert_relative_eq!(p.c2, r.c2, max_relative = 1e-13);
        assert_relative_eq!(p.knl2, r.knl2, max_relative = 1e-13);
        assert_relative_eq!(p.c1, r.c1, max_relative = 1e-15);
    }

    #[test]
    fn alpha3_at_reference_forcing() {
        assert_relative_eq!(alpha3_of(0.11), 0.009075, max_relative = 1e-14);
        assert_relative_eq!(forcing_of(alpha3_of(0.137)), 0.137, max_relative = 1e-14);
    }

    #[test]
    fn zero_perturbation_is_nominal() {
        let p = SystemParams::reference_nltva();
        let z = Perturbation {
            coefficient: Coefficient::C2,
            fraction: 0.0,
        };
        assert_eq!(z.apply(&p, 1.0), p);
        assert_eq!(z.apply(&p, -1.0), p);
    }
}
