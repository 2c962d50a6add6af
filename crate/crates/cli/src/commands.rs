//! One function per subcommand.

use nltva_core::continuation::{
    bifurcations, continue_branch, find_drc, solutions_at, BifurcationPoint, Branch,
    ContinuationConfig, CorrectorConfig, DrcSearch,
};
use nltva_core::hbm::{state_at, HbmConfig};
use nltva_core::model::{
    tune_dimensionless, tune_linear, tune_nonlinear, Forcing, State, SystemParams,
};
use nltva_core::regions::{
    alpha3_events, classify_level, fold_seed, ns_seed, region_sweep, track_branch_b, RegionBase,
};
use nltva_core::timedomain::{
    area_ratio, compute_basins, sample_basins, sweep_quasiperiodic, BasinConfig, ClassifyConfig,
    GridSpec,
};
use nltva_core::tracking::{
    find_drc_events, find_qp_onset, track_fold, track_ns, BifurcationBranch, BranchLabel,
    TrackConfig,
};
use nltva_core::Error as CoreError;
use serde::Serialize;

use crate::config::{
    round_decimals, Analysis, BasinSettings, FreqResponseSettings, RegionSettings, RunConfig,
    TrackSettings,
};
use crate::error::CliError;
use crate::output::{num, opt, Artifacts};

/// State shared by the commands while they write artifacts.
pub struct Run {
    pub artifacts: Artifacts,
    pub warnings: Vec<String>,
    pub truncated: bool,
}

impl Run {
    fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }
}

pub fn execute(config: &RunConfig, run: &mut Run) -> Result<(), CliError> {
    match &config.analysis {
        Analysis::Tune(_) => tune(config, run),
        Analysis::FreqResponse(s) => freq_response(config, s, run),
        Analysis::Track(s) => track(config, s, run),
        Analysis::Basins(s) => basins(config, s, run),
        Analysis::Regions(s) => regions(config, s, run),
    }
}

#[derive(Serialize)]
struct Rounded {
    k2: f64,
    c2: f64,
    knl2: f64,
}

#[derive(Serialize)]
struct TuneReport {
    epsilon: f64,
    m2: f64,
    k2: f64,
    c2: f64,
    knl2: f64,
    lambda: f64,
    mu2: f64,
    beta3_over_alpha3: f64,
    rounded: Rounded,
}

fn tune(config: &RunConfig, run: &mut Run) -> Result<(), CliError> {
    let s = &config.system;
    let eps = s.epsilon()?;
    let (k2, c2) = tune_linear(s.m1, s.k1, eps)?;
    let knl2 = tune_nonlinear(s.knl1, eps)?;
    let d = tune_dimensionless(eps, 1.0)?;
    let report = TuneReport {
        epsilon: eps,
        m2: eps * s.m1,
        k2,
        c2,
        knl2,
        lambda: d.lambda,
        mu2: d.mu2,
        beta3_over_alpha3: d.beta3,
        rounded: Rounded {
            k2: round_decimals(k2, 4),
            c2: round_decimals(c2, 4),
            knl2: round_decimals(knl2, 4),
        },
    };
    println!("k2   = {:.4e}  ({})", k2, report.rounded.k2);
    println!("c2   = {:.4e}  ({})", c2, report.rounded.c2);
    println!("knl2 = {:.4e}  ({})", knl2, report.rounded.knl2);
    println!(
        "lambda = {:.6}, mu2 = {:.6}, beta3/alpha3 = {:.6}",
        d.lambda, d.mu2, d.beta3
    );
    run.artifacts.json("tune.json", &report)
}

fn hbm_config(harmonics: usize, samples: usize) -> Result<HbmConfig, CliError> {
    Ok(HbmConfig::new(harmonics, samples)?)
}

fn branch_rows(branch: &Branch) -> Vec<Vec<String>> {
    branch
        .points
        .iter()
        .map(|p| {
            vec![
                num(p.omega()),
                num(p.amplitude_x1),
                num(p.amplitude_x2),
                if p.solution.stable { "true" } else { "false" }.to_string(),
            ]
        })
        .collect()
}

fn bifurcation_rows(points: &[BifurcationPoint], forcing: f64, branch: &str) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|b| {
            vec![
                num(b.omega()),
                num(forcing),
                b.kind.name().to_string(),
                branch.to_string(),
            ]
        })
        .collect()
}

const BRANCH_HEADER: [&str; 4] = ["omega", "amplitude_x1", "amplitude_x2", "stable"];

fn freq_response(
    config: &RunConfig,
    s: &FreqResponseSettings,
    run: &mut Run,
) -> Result<(), CliError> {
    let params = config.system.params()?;
    let cc = ContinuationConfig {
        hbm: hbm_config(s.harmonics, s.samples)?,
        corrector: CorrectorConfig {
            tolerance: s.tolerance,
            ..CorrectorConfig::default()
        },
        ..ContinuationConfig::default()
    };
    let main = continue_branch(&params, s.forcing, (s.omega_min, s.omega_max), &cc)?;
    if main.truncated {
        run.truncated = true;
        run.warn(format!("main branch truncated after {} points", main.len()));
    }
    run.artifacts
        .csv("branch_main.csv", &BRANCH_HEADER, &branch_rows(&main))?;
    let mut bif = bifurcation_rows(&bifurcations(&main), s.forcing, "main");
    if s.drc {
        let window = (
            s.drc_omega_min.unwrap_or(s.omega_min),
            s.drc_omega_max.unwrap_or(s.omega_max),
        );
        let search = DrcSearch {
            config: cc,
            ..DrcSearch::new(window)
        };
        if let Some(drc) = find_drc(&params, s.forcing, &main, &search)? {
            if drc.truncated {
                run.truncated = true;
                run.warn("detached curve truncated".into());
            }
            run.artifacts
                .csv("branch_drc.csv", &BRANCH_HEADER, &branch_rows(&drc))?;
            bif.extend(bifurcation_rows(&bifurcations(&drc), s.forcing, "drc"));
        }
    }
    run.artifacts
        .csv("bifurcations.csv", &["omega", "F", "kind", "branch"], &bif)?;
    if s.qp_points > 0 {
        let n = s.qp_points;
        let omegas: Vec<f64> = (0..n)
            .map(|i| {
                let t = if n == 1 {
                    0.0
                } else {
                    i as f64 / (n - 1) as f64
                };
                s.qp_omega_min + t * (s.qp_omega_max - s.qp_omega_min)
            })
            .collect();
        let start = solutions_at(&main, omegas[0], &cc.corrector)?;
        let initial = start
            .iter()
            .find(|p| !p.solution.stable)
            .or(start.first())
            .map(|p| {
                let q = state_at(&p.solution, 0.0);
                State {
                    x1: q[0] * 1.01,
                    v1: q[1],
                    x2: q[2],
                    v2: q[3],
                }
            })
            .unwrap_or(State::ZERO);
        let qp = sweep_quasiperiodic(
            &params,
            s.forcing,
            &omegas,
            &initial,
            &ClassifyConfig::default(),
        )?;
        let rows: Vec<Vec<String>> = qp.iter().map(|(w, a)| vec![num(*w), num(*a)]).collect();
        run.artifacts
            .csv("quasiperiodic.csv", &["omega", "amplitude_x1"], &rows)?;
    }
    Ok(())
}

fn locus_rows(branch: Option<&BifurcationBranch>) -> Vec<Vec<String>> {
    branch
        .map(|b| {
            b.points
                .iter()
                .map(|p| vec![num(p.forcing), num(p.omega()), num(p.amplitude_x1)])
                .collect()
        })
        .unwrap_or_default()
}

#[derive(Serialize)]
struct Events {
    #[serde(rename = "F_appear")]
    f_appear: Option<f64>,
    #[serde(rename = "F_merge")]
    f_merge: Option<f64>,
    #[serde(rename = "F_qp_onset")]
    f_qp_onset: Option<f64>,
}

fn optional<T>(r: Result<T, CoreError>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(CoreError::SeedNotFound(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn track(config: &RunConfig, s: &TrackSettings, run: &mut Run) -> Result<(), CliError> {
    let params = config.system.params()?;
    let hbm = hbm_config(s.harmonics, s.samples)?;
    let cc = ContinuationConfig {
        hbm,
        stability: false,
        ..ContinuationConfig::default()
    };
    let tc = TrackConfig {
        hbm,
        forcing_range: (s.forcing_min, s.forcing_max),
        ..TrackConfig::default()
    };
    let window = (s.omega_min, s.omega_max);
    let b = track_branch_b(&params, &s.seed_forcing, window, 0.05, &cc, &tc)?;
    let a = match optional(fold_seed(
        &params,
        BranchLabel::A,
        &s.seed_forcing,
        window,
        0.05,
        &cc,
    ))? {
        Some(seed) => {
            let mut a = track_fold(&seed, &params, &tc)?;
            a.label = Some(BranchLabel::A);
            Some(a)
        }
        None => {
            run.warn("no fold of branch A in the scanned forcing levels".into());
            None
        }
    };
    let ns = if s.ns {
        let cs = ContinuationConfig {
            stability: true,
            ..cc
        };
        match optional(ns_seed(&params, &s.seed_forcing, window, 0.05, &cs))? {
            Some(seed) => Some(track_ns(&seed, &params, &tc)?),
            None => {
                run.warn(
                    "no Neimark-Sacker point between the peaks in the scanned forcing levels"
                        .into(),
                );
                None
            }
        }
    } else {
        None
    };
    for br in [Some(&b), a.as_ref(), ns.as_ref()].into_iter().flatten() {
        if br.truncated {
            run.truncated = true;
            run.warn(format!("{} branch truncated", br.kind.name()));
        }
    }
    let header = ["F", "omega", "amplitude_x1"];
    run.artifacts
        .csv("fold_A.csv", &header, &locus_rows(a.as_ref()))?;
    run.artifacts
        .csv("fold_B.csv", &header, &locus_rows(Some(&b)))?;
    run.artifacts
        .csv("ns.csv", &header, &locus_rows(ns.as_ref()))?;
    let ev = find_drc_events(&b);
    let events = Events {
        f_appear: ev.as_ref().map(|e| e.f_appear),
        f_merge: ev.as_ref().map(|e| e.f_merge),
        f_qp_onset: ns
            .as_ref()
            .and_then(find_qp_onset)
            .filter(|o| !o.at_boundary)
            .map(|o| o.forcing),
    };
    println!(
        "F_appear = {:?}, F_merge = {:?}, F_qp_onset = {:?}",
        events.f_appear, events.f_merge, events.f_qp_onset
    );
    run.artifacts.json("events.json", &events)
}

/// Amplitudes of the stable periodic solutions at `omega` on the given branches.
fn stable_amplitudes(branches: &[&Branch], omega: f64) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for b in branches {
        for p in solutions_at(b, omega, &CorrectorConfig::default())? {
            if p.solution.stable {
                out.push(p.amplitude_x1);
            }
        }
    }
    Ok(out)
}

fn window(s: &BasinSettings, amplitudes: &[f64], resolution: usize) -> Result<GridSpec, CliError> {
    let mut g = GridSpec::around(amplitudes, resolution)?;
    if let Some(v) = s.x_min {
        g.x_range.0 = v;
    }
    if let Some(v) = s.x_max {
        g.x_range.1 = v;
    }
    if let Some(v) = s.v_min {
        g.v_range.0 = v;
    }
    if let Some(v) = s.v_max {
        g.v_range.1 = v;
    }
    Ok(g)
}

fn basins(config: &RunConfig, s: &BasinSettings, run: &mut Run) -> Result<(), CliError> {
    let params = config.system.params()?;
    let cc = ContinuationConfig::default();
    let main = continue_branch(
        &params,
        s.forcing,
        (s.branch_omega_min, s.branch_omega_max),
        &cc,
    )?;
    let drc = find_drc(
        &params,
        s.forcing,
        &main,
        &DrcSearch::new((s.branch_omega_min, s.branch_omega_max)),
    )?;
    let mut branches = vec![&main];
    if let Some(d) = drc.as_ref() {
        branches.push(d);
    }
    let classify = ClassifyConfig {
        tol: s.tolerance,
        ..ClassifyConfig::default()
    };
    let setup =
        |omega: f64, resolution: usize| -> Result<(Forcing, Vec<f64>, BasinConfig), CliError> {
            let amps = stable_amplitudes(&branches, omega)?;
            if amps.is_empty() {
                return Err(CliError::Validation(format!(
                    "no stable periodic solution at omega = {omega}"
                )));
            }
            let grid = window(s, &amps, resolution)?;
            Ok((
                Forcing::new(s.forcing, omega)?,
                amps,
                BasinConfig {
                    classify,
                    ..BasinConfig::new(grid)
                },
            ))
        };

    let (forcing, amps, bc) = setup(s.omega, s.resolution)?;
    let map = compute_basins(&params, &forcing, &amps, &bc)?;
    let rows: Vec<Vec<String>> = (0..map.grid.cells())
        .map(|i| {
            let (x, v) = map.grid.point(i);
            vec![
                num(x),
                num(v),
                map.labels[i].name().to_string(),
                num(map.amplitudes[i]),
            ]
        })
        .collect();
    run.artifacts.csv(
        "basins_raster.csv",
        &["x1_0", "v1_0", "label", "amplitude"],
        &rows,
    )?;
    match area_ratio(&map.labels) {
        Ok(r) => println!("omega = {}: ratio = {r:.3}%", s.omega),
        Err(e) => run.warn(format!("omega = {}: {e}", s.omega)),
    }

    let mut ratio_rows = Vec::new();
    for &w in &s.ratio_omegas {
        let (forcing, amps, bc) = setup(w, s.ratio_resolution)?;
        let map = compute_basins(&params, &forcing, &amps, &bc)?;
        let ratio = match area_ratio(&map.labels) {
            Ok(r) => Some(r),
            Err(e) => {
                run.warn(format!("omega = {w}: {e}"));
                None
            }
        };
        ratio_rows.push(vec![num(w), opt(ratio)]);
    }
    if !s.ratio_omegas.is_empty() {
        run.artifacts
            .csv("basins_ratio.csv", &["omega", "ratio_percent"], &ratio_rows)?;
    }

    if s.samples > 0 {
        let pts = sample_basins(&params, &forcing, &amps, &bc, s.samples, config.run.seed)?;
        let rows: Vec<Vec<String>> = pts
            .iter()
            .map(|((x, v), k)| vec![num(*x), num(*v), k.name().to_string()])
            .collect();
        run.artifacts
            .csv("basins_samples.csv", &["x1_0", "v1_0", "label"], &rows)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ClassifiedPoint {
    #[serde(rename = "F")]
    forcing: f64,
    alpha3: f64,
    region: &'static str,
}

#[derive(Serialize)]
struct ClassificationReport {
    epsilon: f64,
    p_mu: f64,
    p_beta: f64,
    alpha3_appear: Option<f64>,
    alpha3_merge: Option<f64>,
    points: Vec<ClassifiedPoint>,
}

fn regions(config: &RunConfig, s: &RegionSettings, run: &mut Run) -> Result<(), CliError> {
    let sys = &config.system;
    let mu1 = sys.c1 / (2.0 * (sys.k1 * sys.m1).sqrt());
    let base = RegionBase {
        epsilon: sys.epsilon()?,
        p_mu: sys.p_mu,
        p_beta: sys.p_beta,
        mu1,
        alpha3_range: (s.alpha3_min, s.alpha3_max),
        with_qp: s.qp,
        ..RegionBase::default()
    };
    let boundary = region_sweep(s.parameter, &s.values, &base)?;
    let rows: Vec<Vec<String>> = boundary
        .samples
        .iter()
        .map(|r| {
            vec![
                num(r.value),
                opt(r.alpha3_appear),
                opt(r.alpha3_merge),
                opt(r.alpha3_qp_onset),
                r.flagged.to_string(),
            ]
        })
        .collect();
    for r in boundary.samples.iter().filter(|r| r.flagged) {
        run.warn(format!(
            "tracking failed at {} = {}",
            s.parameter.name(),
            r.value
        ));
    }
    let name = format!("boundary_{}.csv", s.parameter.name());
    run.artifacts.csv(
        &name,
        &[
            "param_value",
            "alpha3_appear",
            "alpha3_merge",
            "alpha3_qp_onset",
            "flagged",
        ],
        &rows,
    )?;

    let events = if s.classify_forcing.is_empty() {
        None
    } else {
        match alpha3_events(&base) {
            Ok(e) => e,
            Err(CoreError::SeedNotFound(_)) => None,
            Err(e) => return Err(e.into()),
        }
    };
    let points = s
        .classify_forcing
        .iter()
        .map(|&f| {
            let alpha3 = 0.75 * sys.knl1 * f * f / sys.k1.powi(3);
            ClassifiedPoint {
                forcing: f,
                alpha3,
                region: classify_level(events, alpha3).name(),
            }
        })
        .collect::<Vec<_>>();
    for p in &points {
        println!("F = {}: alpha3 = {:.6}, {}", p.forcing, p.alpha3, p.region);
    }
    let report = ClassificationReport {
        epsilon: base.epsilon,
        p_mu: base.p_mu,
        p_beta: base.p_beta,
        alpha3_appear: events.map(|e| e.0),
        alpha3_merge: events.map(|e| e.1),
        points,
    };
    run.artifacts.json("classification.json", &report)
}

/// Parameters actually simulated, for the console.
pub fn describe(params: &SystemParams) -> String {
    format!(
        "m1={} c1={} k1={} knl1={} m2={} c2={:.6e} k2={:.6e} knl2={:.6e}",
        params.m1, params.c1, params.k1, params.knl1, params.m2, params.c2, params.k2, params.knl2
    )
}
