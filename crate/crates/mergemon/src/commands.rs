//! Subcommand drivers. Each returns the artifacts it would write.

use rayon::prelude::*;
use serde::Serialize;

use mergemon_core::cqed::{self, CouplingForm, CqedSystem};
use mergemon_core::design;
use mergemon_core::dynamics::{self, SpectrumPoint};
use mergemon_core::fields::{self, CellKind, DeviceGeometry, FieldSolution, Participation};
use mergemon_core::loss::{self, LossBudget, RadiusScaling, Scenario, SweepPoint};
use mergemon_core::qubit::{self, QubitSpectrum, TransmonParams};
use mergemon_core::Error as CoreError;

use crate::config::{self, RunConfig};
use crate::error::CliError;
use crate::output::{json_artifact, spectrum_file_name, Artifact, Csv, F};
use crate::schema;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads for sweeps; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Use the series-capacitor participation model instead of the field solver.
    pub analytic_pr: bool,
    /// Overrides `loss.scenario`.
    pub scenario: Option<String>,
}

fn pool(opts: &RunOptions) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Internal(e.to_string()))
}

/// Transmon parameters from the `[qubit]` or `[design]` section.
pub fn qubit_params(config: &RunConfig) -> Result<TransmonParams, CliError> {
    let section = config.qubit.as_ref();
    let ng = section.map_or(0.0, |q| q.ng);
    let params = match section {
        Some(q) if q.ej_ghz.is_some() => TransmonParams::new(q.ej_ghz.unwrap_or(0.0), q.ec_ghz.unwrap_or(0.0))?,
        Some(q) if q.f01_ghz.is_some() => {
            qubit::fit_params_to_observables(q.f01_ghz.unwrap_or(0.0), q.anharmonicity_ghz.unwrap_or(0.0))?
        }
        _ if config.design.is_some() => design::circuit_parameters(&config.junction_design()?)?,
        _ => return Err(CliError::Config("[qubit] section is required for this command".into())),
    };
    Ok(params.with_ng(ng)?)
}

pub fn qubit_spectrum(config: &RunConfig) -> Result<QubitSpectrum, CliError> {
    let n = config.qubit.as_ref().map_or(5, |q| q.n_levels);
    Ok(qubit::diagonalize(&qubit_params(config)?, n)?)
}

#[derive(Debug, Serialize)]
struct QubitReport {
    ej_ghz: f64,
    ec_ghz: f64,
    ej_over_ec: f64,
    ng: f64,
    cutoff: usize,
    f01_ghz: f64,
    f12_ghz: f64,
    f02_ghz: f64,
    anharmonicity_ghz: f64,
    f01_charge_dispersion_ghz: f64,
    levels_ghz: Vec<f64>,
    charge_dispersion_ghz: Vec<f64>,
}

pub fn cmd_qubit(config: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let s = qubit_spectrum(config)?;
    let p = s.params;
    let dispersion = (0..s.n_levels())
        .map(|l| qubit::charge_dispersion(&p, l))
        .collect::<Result<Vec<_>, _>>()?;
    let report = QubitReport {
        ej_ghz: p.ej,
        ec_ghz: p.ec,
        ej_over_ec: p.ej_over_ec(),
        ng: p.ng,
        cutoff: p.cutoff,
        f01_ghz: s.f01,
        f12_ghz: s.f12,
        f02_ghz: s.f02,
        anharmonicity_ghz: s.anharmonicity,
        f01_charge_dispersion_ghz: qubit::transition_dispersion(&p, 1)?,
        levels_ghz: s.levels.clone(),
        charge_dispersion_ghz: dispersion.clone(),
    };
    let mut csv = Csv::new(&["level", "energy_ghz", "charge_dispersion_ghz"]);
    for (l, (e, d)) in s.levels.iter().zip(&dispersion).enumerate() {
        csv.row(&[&l, &F(*e), &F(*d)]);
    }
    Ok(vec![
        json_artifact("qubit.json", &report, schema::QUBIT_REPORT)?,
        csv.into_artifact("qubit_levels.csv"),
    ])
}

/// Coupled system from `[qubit]` and `[resonator]`, with the coupling's origin.
pub fn cqed_system(config: &RunConfig) -> Result<(CqedSystem, &'static str), CliError> {
    let r = config.resonator()?;
    let q = qubit_spectrum(config)?;
    let (g, source) = match (r.g01_ghz, r.chi01_ghz) {
        (Some(g), _) => (g, "config"),
        (None, Some(chi)) => (cqed::g_from_measured_shift(chi, r.f_r_ghz, q.f01)?, "measured_shift"),
        (None, None) => {
            return Err(CliError::Config(
                "resonator: one of g01_ghz or chi01_ghz is required".into(),
            ))
        }
    };
    Ok((CqedSystem::new(q, r.f_r_ghz, g, r.n_fock)?, source))
}

#[derive(Debug, Serialize)]
struct DispersiveJson {
    f01_ghz: f64,
    f_r_ghz: f64,
    g01_ghz: f64,
    g01_source: &'static str,
    g01_formula: &'static str,
    chi01_measured_ghz: Option<f64>,
    dispersive_ratio: f64,
    dispersive: bool,
    chi_ghz: Vec<f64>,
    dressed_freq_ghz: Vec<f64>,
    exact_dressed_ground_ghz: f64,
}

pub fn cmd_dispersive(config: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let (sys, source) = cqed_system(config)?;
    let report = cqed::dispersive_shifts(&sys)?;
    let exact = cqed::photon_addition_energy(&sys, 0, CouplingForm::Full)?;
    let json = DispersiveJson {
        f01_ghz: sys.qubit.f01,
        f_r_ghz: sys.f_r,
        g01_ghz: sys.g01,
        g01_source: source,
        g01_formula: match source {
            "measured_shift" => "g01 = sqrt(|chi01| (f_r - f01))",
            _ => "given",
        },
        chi01_measured_ghz: config.resonator()?.chi01_ghz,
        dispersive_ratio: sys.dispersive_ratio(),
        dispersive: sys.is_dispersive(),
        chi_ghz: report.chi,
        dressed_freq_ghz: report.dressed_freq,
        exact_dressed_ground_ghz: exact,
    };
    Ok(vec![json_artifact(
        "dispersive.json",
        &json,
        schema::DISPERSIVE_REPORT,
    )?])
}

#[derive(Debug, Serialize)]
struct PeakJson {
    center_ghz: f64,
    height: f64,
    prominence: f64,
}

#[derive(Debug, Serialize)]
struct TraceJson {
    power_dbm: f64,
    amplitude_ghz: f64,
    file: String,
    peaks: Vec<PeakJson>,
    max_residual_norm: f64,
    max_trace_error: f64,
    min_eigenvalue: f64,
}

#[derive(Debug, Serialize)]
struct SpectrumJson {
    f01_ghz: f64,
    anharmonicity_ghz: f64,
    two_photon_ghz: f64,
    f_r_ghz: f64,
    g01_ghz: f64,
    n_levels: usize,
    n_fock: usize,
    t1_ns: f64,
    dephasing_rate_per_ns: f64,
    traces: Vec<TraceJson>,
}

/// Solved two-tone traces, one per configured power, in config order.
pub struct SpectrumRun {
    pub system: CqedSystem,
    pub powers_dbm: Vec<f64>,
    pub traces: Vec<dynamics::SpectrumTrace>,
}

pub fn run_spectrum(config: &RunConfig, opts: &RunOptions) -> Result<SpectrumRun, CliError> {
    let (sys, _) = cqed_system(config)?;
    let drive = config.drive()?;
    let diss = config.dissipation()?;
    if drive.powers_dbm.is_empty() {
        return Err(CliError::Config("drive.powers_dbm: must not be empty".into()));
    }
    let n = drive.points;
    let freqs: Vec<f64> = (0..n)
        .map(|i| drive.f_start_ghz + (drive.f_stop_ghz - drive.f_start_ghz) * i as f64 / (n - 1) as f64)
        .collect();
    let amplitudes = drive
        .powers_dbm
        .iter()
        .map(|&p| dynamics::dbm_to_amplitude(p, drive.ref_amplitude_ghz, drive.ref_power_dbm))
        .collect::<Result<Vec<_>, _>>()?;
    let grid: Vec<(f64, f64, f64)> = drive
        .powers_dbm
        .iter()
        .zip(&amplitudes)
        .flat_map(|(&p, &a)| freqs.iter().map(move |&f| (p, f, a)))
        .collect();
    let solve = |&(p, f, a): &(f64, f64, f64)| -> Result<SpectrumPoint, CoreError> {
        let mut spec = dynamics::DriveSpec::new(f, a, diss.t1_ns)?;
        spec.power_dbm = Some(p);
        spec.dephasing_rate = diss.dephasing_rate_per_ns;
        dynamics::spectrum_point(&sys, &spec).map_err(|e| CoreError::SpectrumPoint {
            f_pump: f,
            amplitude: a,
            source: Box::new(e),
        })
    };
    let points = pool(opts)?.install(|| grid.par_iter().map(solve).collect::<Result<Vec<_>, _>>())?;
    let traces = dynamics::assemble_traces(&sys, diss.t1_ns, points);
    Ok(SpectrumRun {
        system: sys,
        powers_dbm: drive.powers_dbm.clone(),
        traces,
    })
}

pub fn cmd_spectrum(config: &RunConfig, opts: &RunOptions) -> Result<Vec<Artifact>, CliError> {
    let run = run_spectrum(config, opts)?;
    let drive = config.drive()?;
    let diss = config.dissipation()?;
    let sys = &run.system;
    let mut artifacts = Vec::new();
    let mut traces = Vec::new();
    let mut peaks_csv = Csv::new(&["power_dbm", "amplitude_ghz", "center_ghz", "height", "prominence"]);
    for (power, trace) in run.powers_dbm.iter().zip(&run.traces) {
        let name = spectrum_file_name(*power);
        let mut csv = Csv::new(&["f_pump_ghz", "amplitude_ghz", "n_avg"]);
        for p in &trace.points {
            csv.row(&[&F(p.f_pump), &F(p.amplitude), &F(p.n_avg)]);
        }
        artifacts.push(csv.into_artifact(name.clone()));
        let peaks = dynamics::find_peaks(&trace.curve(), drive.min_prominence);
        for pk in &peaks {
            peaks_csv.row(&[
                &F(*power),
                &F(trace.amplitude),
                &F(pk.center),
                &F(pk.height),
                &F(pk.prominence),
            ]);
        }
        let fold = |f: fn(&SpectrumPoint) -> f64, init: f64, op: fn(f64, f64) -> f64| {
            trace.points.iter().map(f).fold(init, op)
        };
        traces.push(TraceJson {
            power_dbm: *power,
            amplitude_ghz: trace.amplitude,
            file: name,
            peaks: peaks
                .iter()
                .map(|p| PeakJson {
                    center_ghz: p.center,
                    height: p.height,
                    prominence: p.prominence,
                })
                .collect(),
            max_residual_norm: fold(|p| p.residual_norm, 0.0, f64::max),
            max_trace_error: fold(|p| p.trace_error, 0.0, f64::max),
            min_eigenvalue: fold(|p| p.min_eigenvalue, f64::INFINITY, f64::min),
        });
    }
    artifacts.push(peaks_csv.into_artifact("spectrum_peaks.csv"));
    let summary = SpectrumJson {
        f01_ghz: sys.qubit.f01,
        anharmonicity_ghz: sys.qubit.anharmonicity,
        two_photon_ghz: 0.5 * sys.qubit.f02,
        f_r_ghz: sys.f_r,
        g01_ghz: sys.g01,
        n_levels: sys.n_levels(),
        n_fock: sys.n_fock,
        t1_ns: diss.t1_ns,
        dephasing_rate_per_ns: diss.dephasing_rate_per_ns,
        traces,
    };
    artifacts.push(json_artifact("spectrum.json", &summary, schema::SPECTRUM_REPORT)?);
    Ok(artifacts)
}

/// Where a budget's participation ratios came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParticipationSource {
    Config,
    Series,
    Solver,
}

impl ParticipationSource {
    pub fn name(self) -> &'static str {
        match self {
            ParticipationSource::Config => "config",
            ParticipationSource::Series => "series",
            ParticipationSource::Solver => "solver",
        }
    }
}

fn participation_for(g: &DeviceGeometry, analytic: bool) -> Result<Vec<Participation>, CoreError> {
    if analytic {
        fields::series_participation(g)
    } else {
        fields::simulate(g)
    }
}

/// Loss tangents of the configured geometry with overrides, before the
/// scenario is applied.
fn base_tangents(config: &RunConfig, g: &DeviceGeometry) -> Vec<(String, f64)> {
    let mut tangents = loss::tangents_of(&g.regions);
    if let Some(over) = config.loss.as_ref().and_then(|l| l.tan_delta.as_ref()) {
        for (name, t) in over {
            match tangents.iter_mut().find(|(n, _)| n == name) {
                Some(slot) => slot.1 = *t,
                None => tangents.push((name.clone(), *t)),
            }
        }
    }
    tangents
}

fn resolve_scenario(config: &RunConfig, opts: &RunOptions) -> Result<Scenario, CliError> {
    match &opts.scenario {
        Some(name) => config::parse_scenario(name),
        None => config.scenario(),
    }
}

pub struct LossRun {
    pub scenario: Scenario,
    pub source: ParticipationSource,
    pub geometry: DeviceGeometry,
    pub budget: LossBudget,
    pub solution: Option<FieldSolution>,
    pub sweep: Option<(RadiusScaling, Vec<SweepPoint>)>,
}

pub fn run_loss(config: &RunConfig, opts: &RunOptions) -> Result<LossRun, CliError> {
    let g = config.device_geometry()?;
    let scenario = resolve_scenario(config, opts)?;
    let f_q = config
        .loss
        .as_ref()
        .and_then(|l| l.f_q_ghz)
        .unwrap_or(loss::DESIGN_FREQUENCY);
    let tangents = scenario.tangents(&base_tangents(config, &g));
    let fixed = config.loss.as_ref().and_then(|l| l.participation.as_ref());
    let want_map = config.output.as_ref().is_some_and(|o| o.field_map);

    let (source, participation, solution) = if let Some(map) = fixed {
        let mut ordered: Vec<(String, f64)> = g
            .regions
            .iter()
            .filter_map(|r| map.get(&r.name).map(|p| (r.name.clone(), *p)))
            .collect();
        for (name, p) in map {
            if !ordered.iter().any(|(n, _)| n == name) {
                ordered.push((name.clone(), *p));
            }
        }
        (ParticipationSource::Config, ordered, None)
    } else if opts.analytic_pr {
        let p = fields::series_participation(&g)?;
        (ParticipationSource::Series, loss::participation_pairs(&p), None)
    } else {
        let sol = fields::solve_potential(&fields::build_geometry(&g)?, 1.0)?;
        let p = fields::participation_ratios(&sol);
        (
            ParticipationSource::Solver,
            loss::participation_pairs(&p),
            want_map.then_some(sol),
        )
    };
    let budget = loss::t1_budget(&participation, &tangents, f_q)?;

    let sweep = match &config.sweep {
        Some(s) => {
            let scaling = match &s.scaling {
                Some(name) => config::parse_scaling(name)?,
                None => RadiusScaling::Independent,
            };
            let grid: Vec<(f64, f64)> = s
                .thickness_nm
                .iter()
                .flat_map(|&d| s.radius_nm.iter().map(move |&r| (d, r)))
                .collect();
            let analytic = opts.analytic_pr;
            let point = |&(d, r): &(f64, f64)| -> Result<SweepPoint, CoreError> {
                let sg = loss::sweep_geometry(&g, d, r, scaling);
                participation_for(&sg, analytic)
                    .and_then(|p| loss::t1_budget(&loss::participation_pairs(&p), &tangents, f_q))
                    .map(|b| SweepPoint {
                        d_nm: d,
                        r_nm: sg.junction_radius,
                        t1_us: b.t1_total_us,
                    })
                    .map_err(|e| CoreError::GeometryPoint {
                        d_nm: d,
                        r_nm: r,
                        source: Box::new(e),
                    })
            };
            let points = pool(opts)?.install(|| grid.par_iter().map(point).collect::<Result<Vec<_>, _>>())?;
            Some((scaling, points))
        }
        None => None,
    };
    Ok(LossRun {
        scenario,
        source,
        geometry: g,
        budget,
        solution,
        sweep,
    })
}

/// Whether T1 never decreases along each sweep axis.
pub fn sweep_trends(points: &[SweepPoint], n_d: usize, n_r: usize) -> (bool, bool) {
    let t = |i: usize, j: usize| points[i * n_r + j].t1_us;
    let along_d = (0..n_r).all(|j| (1..n_d).all(|i| t(i, j) >= t(i - 1, j)));
    let along_r = (0..n_d).all(|i| (1..n_r).all(|j| t(i, j) >= t(i, j - 1)));
    (along_d, along_r)
}

#[derive(Debug, Serialize)]
struct RowJson {
    region: String,
    participation: f64,
    tan_delta: f64,
    t1_us: Option<f64>,
}

#[derive(Debug, Serialize)]
struct GeometryJson {
    junction_radius_nm: f64,
    barrier_thickness_nm: f64,
    electrode_thickness_nm: f64,
    bottom_electrode_radius_nm: f64,
    barrier_faces: u8,
    domain_radius_nm: f64,
    domain_height_nm: f64,
}

#[derive(Debug, Serialize)]
struct SweepJson {
    file: &'static str,
    scaling: &'static str,
    points: usize,
    monotone_in_thickness: bool,
    monotone_in_radius: bool,
    t1_min_us: f64,
    t1_max_us: f64,
}

#[derive(Debug, Serialize)]
struct LossJson {
    f_q_ghz: f64,
    scenario: &'static str,
    participation_source: &'static str,
    geometry: GeometryJson,
    rows: Vec<RowJson>,
    t1_total_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepJson>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn cmd_loss(config: &RunConfig, opts: &RunOptions) -> Result<Vec<Artifact>, CliError> {
    let run = run_loss(config, opts)?;
    let b = &run.budget;
    let mut artifacts = Vec::new();
    let mut csv = Csv::new(&["region", "participation", "tan_delta", "t1_us"]);
    for r in &b.rows {
        csv.row(&[&r.name, &F(r.participation), &F(r.tan_delta), &F(r.t1_us)]);
    }
    artifacts.push(csv.into_artifact("loss_budget.csv"));

    let sweep = match &run.sweep {
        Some((scaling, points)) => {
            let s = config.sweep.as_ref().expect("sweep ran");
            let mut csv = Csv::new(&["d_nm", "r_nm", "t1_us"]);
            for p in points {
                csv.row(&[&F(p.d_nm), &F(p.r_nm), &F(p.t1_us)]);
            }
            artifacts.push(csv.into_artifact("t1_sweep.csv"));
            let (along_d, along_r) = sweep_trends(points, s.thickness_nm.len(), s.radius_nm.len());
            Some(SweepJson {
                file: "t1_sweep.csv",
                scaling: config::scaling_name(*scaling),
                points: points.len(),
                monotone_in_thickness: along_d,
                monotone_in_radius: along_r,
                t1_min_us: points.iter().map(|p| p.t1_us).fold(f64::INFINITY, f64::min),
                t1_max_us: points.iter().map(|p| p.t1_us).fold(0.0, f64::max),
            })
        }
        None => None,
    };

    if let Some(sol) = &run.solution {
        artifacts.push(field_map(sol));
    }

    let g = &run.geometry;
    let report = LossJson {
        f_q_ghz: b.f_q,
        scenario: config::scenario_name(run.scenario),
        participation_source: run.source.name(),
        geometry: GeometryJson {
            junction_radius_nm: g.junction_radius,
            barrier_thickness_nm: g.barrier_thickness,
            electrode_thickness_nm: g.electrode_thickness,
            bottom_electrode_radius_nm: g.bottom_electrode_radius,
            barrier_faces: g.barrier_faces,
            domain_radius_nm: g.domain_radius,
            domain_height_nm: g.domain_height,
        },
        rows: b
            .rows
            .iter()
            .map(|r| RowJson {
                region: r.name.clone(),
                participation: r.participation,
                tan_delta: r.tan_delta,
                t1_us: finite(r.t1_us),
            })
            .collect(),
        t1_total_us: finite(b.t1_total_us),
        sweep,
    };
    artifacts.push(json_artifact("loss_budget.json", &report, schema::LOSS_REPORT)?);
    Ok(artifacts)
}

/// Cell-centered potential and energy density over the r-z grid.
pub fn field_map(sol: &FieldSolution) -> Artifact {
    let m = &sol.mesh;
    let mut csv = Csv::new(&["r_nm", "z_nm", "region", "potential_v", "energy_density"]);
    for k in 0..m.nz() {
        let z = 0.5 * (m.z_edges[k] + m.z_edges[k + 1]);
        for i in 0..m.nr() {
            let r = 0.5 * (m.r_edges[i] + m.r_edges[i + 1]);
            let region = match m.cell(i, k) {
                CellKind::Dielectric(n) => m.regions[n].name.as_str(),
                CellKind::Bottom => "bottom_electrode",
                CellKind::Top => "top_electrode",
            };
            csv.row(&[
                &F(r),
                &F(z),
                &region,
                &F(sol.potential_at(i, k)),
                &F(sol.energy_density(i, k)),
            ]);
        }
    }
    csv.into_artifact("field_map.csv")
}

#[derive(Debug, Serialize)]
struct DesignJson {
    radius_nm: f64,
    barrier_thickness_nm: f64,
    barrier_epsilon: f64,
    critical_current_ua: f64,
    extra_capacitance_ff: f64,
    junction_capacitance_ff: f64,
    total_capacitance_ff: f64,
    ec_ghz: f64,
    ej_ghz: f64,
    ej_over_ec: f64,
    josephson_inductance_nh: f64,
    f01_ghz: f64,
    anharmonicity_ghz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius_for_target_ec_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    measured_ec_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    projected_permittivity: Option<f64>,
}

pub fn cmd_design(config: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let d = config.junction_design()?;
    let section = config.design()?;
    let params = design::circuit_parameters(&d)?;
    let s = qubit::diagonalize(&params, 3)?;
    let measured = match (section.measured_f01_ghz, section.measured_anharmonicity_ghz) {
        (Some(f), Some(a)) => Some(qubit::fit_params_to_observables(f, a)?.ec),
        (None, None) => None,
        _ => {
            return Err(CliError::Config(
                "design: measured_f01_ghz and measured_anharmonicity_ghz must be given together".into(),
            ))
        }
    };
    let report = DesignJson {
        radius_nm: d.radius,
        barrier_thickness_nm: d.barrier_thickness,
        barrier_epsilon: d.barrier_epsilon,
        critical_current_ua: d.critical_current,
        extra_capacitance_ff: d.extra_capacitance,
        junction_capacitance_ff: design::junction_capacitance(&d)?,
        total_capacitance_ff: d.total_capacitance()?,
        ec_ghz: params.ec,
        ej_ghz: params.ej,
        ej_over_ec: params.ej_over_ec(),
        josephson_inductance_nh: design::josephson_inductance(d.critical_current),
        f01_ghz: s.f01,
        anharmonicity_ghz: s.anharmonicity,
        radius_for_target_ec_nm: section
            .target_ec_ghz
            .map(|ec| design::radius_for_charging_energy(ec, &d))
            .transpose()?,
        measured_ec_ghz: measured,
        projected_permittivity: measured
            .map(|ec| design::permittivity_for_charging_energy(ec, &d))
            .transpose()?,
    };
    Ok(vec![json_artifact("design.json", &report, schema::DESIGN_REPORT)?])
}
