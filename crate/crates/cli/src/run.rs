use std::path::Path;
use std::time::Instant;

use breakchain::chain::{break_location_histogram, ChainCrossing, ChainConfig, ForceMode};
use breakchain::config::{IntegratorSettings, ModelConfig, Preset};
use breakchain::deviation::{boundary_curves, build_linearization, variance_data};
use breakchain::dynamics::{expansion_check, trace_trajectory};
use breakchain::experiments::{
    classify_regime, classify_regime_quadratic, conditional_hit_experiment, corridor_experiment,
    estimate_break_prob, proof_corridor_width, reflection_experiment, sweep, tau_l_experiment,
    DEFAULT_MARGIN,
};
use breakchain::potential::{validate_potential, DEFAULT_VALIDATION_POINTS, DEFAULT_VALIDATION_TOL};
use breakchain::report::{
    bond_histogram_table, curves_table, histogram_table, sweep_table, to_json_string, trajectory_table, CsvTable,
    ResultRecord,
};
use breakchain::{Error, LinearizationData, ModelParams, RegimeSpec, Scheme, Side};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{Cli, Command, ForceModeArg, SideArg};

/// Everything needed to reproduce a run. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Copy embedded in results; the worker count is left out since results do not depend on it.
    fn echo(&self) -> Self {
        Self {
            threads: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<SideArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    /// Step of the grid on which the deterministic path and the linearised process live.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_over_sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Reflection levels in units of the terminal standard deviation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection_levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force_mode: Option<ForceModeArg>,
    /// Write every k-th point of trial 0 to trajectory.csv.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_thin: Option<usize>,
}

/// Failure of a run, mapped onto the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or a failed validation: exit 2.
    Validation(String),
    /// Anything that went wrong while computing: exit 3.
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::Precondition(_)
            | Error::Extension { .. }
            | Error::EmptyExperiment
            | Error::Json(_) => Failure::Validation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

/// Reads the config file (if any) and applies preset and flags on top.
pub fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?
        }
        None => RunConfig {
            command: None,
            model: None,
            integrator: IntegratorSettings::default(),
            experiment: ExperimentConfig::default(),
            threads: None,
        },
    };
    cfg.command = Some(cli.command);
    let preset: Preset = cli.preset.map_or(Preset::Fast, Into::into);
    let model = cfg.model.get_or_insert_with(|| preset.model());
    if let Some(s) = cli.sigma {
        model.sigma = s;
    }
    if let Some(e) = cli.epsilon {
        model.epsilon = e;
    }
    let integ = &mut cfg.integrator;
    if let Some(f) = cli.frame {
        integ.frame = f.into();
    }
    if let Some(dt) = cli.dt {
        integ.dt = Some(dt);
    }
    if let Some(s) = cli.scheme {
        integ.scheme = s.into();
    }
    if let Some(c) = cli.crossing {
        integ.crossing = c.into();
    }
    if let Some(seed) = cli.seed {
        integ.seed = seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    let ex = &mut cfg.experiment;
    macro_rules! take {
        ($($field:ident),*) => {
            $(if cli.$field.is_some() { ex.$field = cli.$field.clone(); })*
        };
    }
    take!(n, side, margin, d, h_over_sigma, t_end, f_plus, t_star, delta, sigmas, epsilons, particles, force_mode, trace_thin);
    Ok(cfg)
}

/// Output of one command.
pub struct Outcome {
    pub resolved: RunConfig,
    pub results: Value,
    pub tables: Vec<(&'static str, CsvTable)>,
    /// `validate` found a violated condition.
    pub failed_validation: bool,
}

struct Derived {
    params: ModelParams<f64>,
    regime: Option<RegimeSpec>,
}

fn regime_of(model: &ModelConfig, margin: f64) -> Option<RegimeSpec> {
    let f = if model.potential.is_quadratic() { classify_regime_quadratic } else { classify_regime };
    f(model.sigma, model.epsilon, margin).ok()
}

fn linearize(params: &ModelParams<f64>, grid_dt: f64) -> Result<LinearizationData<f64>, Failure> {
    Ok(build_linearization(params, grid_dt)?)
}

fn side_of(s: SideArg) -> Side {
    match s {
        SideArg::Left => Side::Left,
        SideArg::Right => Side::Right,
    }
}

fn scheme_of(cfg: &RunConfig) -> Scheme {
    cfg.integrator.scheme.into()
}

pub fn execute(mut cfg: RunConfig, timing: bool) -> Result<Outcome, Failure> {
    let command = cfg.command.expect("resolved config names a command");
    let model = cfg.model.clone().expect("resolved config has a model");
    if command == Command::Validate {
        return validate(cfg);
    }
    let params = model.build()?;
    let margin = *cfg.experiment.margin.get_or_insert(DEFAULT_MARGIN);
    let derived = Derived {
        regime: regime_of(&model, margin),
        params,
    };
    let params = &derived.params;
    cfg.model = Some(model.resolved(params));
    let explicit_dt = cfg.integrator.dt;
    cfg.integrator = cfg.integrator.resolved(params);
    let integ = cfg.integrator.build(params);
    let seed = integ.seed;
    let eps = params.epsilon();
    let sigma = params.sigma();
    let grid_dt = *cfg.experiment.grid_dt.get_or_insert(eps / 50.0);
    let started = Instant::now();

    let mut tables = Vec::new();
    let mut records = Vec::new();
    let params_json = json!({
        "sigma": sigma,
        "epsilon": eps,
        "a": params.a(),
        "b": params.b(),
    });
    let lin = linearize(params, grid_dt)?;
    let mut derived_json = json!({
        "t_close": params.t_close(),
        "A0": lin.a0,
        "A1": lin.a1,
        "M": lin.m,
        "stiffness": params.stiffness(),
        "regime": derived.regime.map(|r| r.regime.label()),
        "regime_detail": derived.regime,
        "regime_note": derived.regime.and_then(|r| r.regime.marker()),
    });

    let ex = &mut cfg.experiment;
    match command {
        Command::Validate => unreachable!(),
        Command::Deterministic => {
            let curves = boundary_curves(params, lin.path())?;
            let var = variance_data(&lin)?;
            let check = expansion_check(params, lin.path());
            let right_break = curves.time_of_level(0.0);
            let details = json!({
                "grid_points": lin.len(),
                "x_det_at_close": lin.path().x.last(),
                "deterministic_right_break": right_break,
                "xi_minus": var.xi_minus,
                "xi_plus": var.xi_plus,
                "xi_v_envelope_constant": var.envelope_constant(&lin),
                "expansion_check": check,
            });
            records.push(ResultRecord::new("deterministic", params_json.clone(), seed).with_details(&details)?);
            tables.push(("curves.csv", curves_table(&lin, &curves, &var)));
        }
        Command::Simulate => {
            let n = *ex.n.get_or_insert(1000);
            let side = *ex.side.get_or_insert(SideArg::Left);
            let est = estimate_break_prob(params, &integ, n, side_of(side))?;
            let details = json!({ "side": side, "estimate": est });
            if let Some(thin) = ex.trace_thin {
                let (_, points) = trace_trajectory(params, &integ, thin)?;
                tables.push(("trajectory.csv", trajectory_table(&points)));
            }
            records.push(
                ResultRecord::new("simulate", params_json.clone(), seed)
                    .with_estimate(&est)
                    .with_details(&details)?,
            );
        }
        Command::Sweep => {
            let n = *ex.n.get_or_insert(1000);
            let sigmas = ex.sigmas.get_or_insert_with(|| vec![sigma]).clone();
            let epsilons = ex.epsilons.get_or_insert_with(|| vec![eps]).clone();
            if sigmas.is_empty() || epsilons.is_empty() {
                return Err(invalid("sweep needs at least one sigma and one epsilon"));
            }
            let base = integ.with_seed(seed);
            let quadratic = model.potential.is_quadratic();
            let rows = sweep(params, &sigmas, &epsilons, &base, explicit_dt, n, margin, quadratic)?;
            for r in &rows {
                let p = json!({ "sigma": r.sigma, "epsilon": r.epsilon });
                let mut rec = ResultRecord::new("sweep", p, seed).with_details(r)?;
                rec.n = r.n;
                rec.p_hat = Some(r.p_left);
                rec.ci = Some([r.ci_low, r.ci_high]);
                records.push(rec);
            }
            tables.push(("sweep.csv", sweep_table(&rows)));
        }
        Command::Corridor => {
            let n = *ex.n.get_or_insert(1000);
            let hs = ex.h_over_sigma.get_or_insert_with(|| vec![3.0, 4.0, 5.0]).clone();
            let t_close = params.t_close();
            let ts = ex
                .t_end
                .get_or_insert_with(|| vec![t_close / 4.0, t_close / 2.0, t_close])
                .clone();
            let var = variance_data(&lin)?;
            for &hr in &hs {
                for &t_end in &ts {
                    let out = corridor_experiment(&lin, &var, sigma, hr * sigma, t_end, n, scheme_of(&cfg), seed)?;
                    let p = json!({ "sigma": sigma, "epsilon": eps, "h_over_sigma": hr, "t_end": t_end });
                    records.push(
                        ResultRecord::new("corridor", p, seed)
                            .with_estimate(&out.empirical)
                            .with_details(&json!({
                                "bound": out.bound,
                                "prefactor": out.prefactor,
                                "within_bound": out.empirical.p_hat <= out.bound,
                            }))?,
                    );
                }
            }
        }
        Command::TauL => {
            let n = *ex.n.get_or_insert(1000);
            let d = *ex.d.get_or_insert(if model.potential.is_quadratic() {
                0.0
            } else {
                proof_corridor_width(sigma, eps)
            });
            let f_plus = *ex.f_plus.get_or_insert(sigma.ln().abs());
            let bins = *ex.bins.get_or_insert(40);
            let curves = boundary_curves(params, lin.path())?;
            let out = tau_l_experiment(&lin, &curves, sigma, d, f_plus, n, bins, scheme_of(&cfg), seed)?;
            let p = json!({ "sigma": sigma, "epsilon": eps, "D": d, "f_plus": f_plus });
            records.push(
                ResultRecord::new("tau-l", p, seed)
                    .with_estimate(&out.in_window)
                    .with_details(&out)?,
            );
            tables.push(("histogram.csv", histogram_table(&out.histogram)));
        }
        Command::Conditional => {
            let n = *ex.n.get_or_insert(1000);
            let d = *ex.d.get_or_insert(0.0);
            let log = sigma.ln().abs();
            let f_plus = *ex.f_plus.get_or_insert(log);
            let t_star = *ex.t_star.get_or_insert(params.b() / params.a() - 1.0 - sigma * log.sqrt() / params.a());
            let delta = *ex.delta.get_or_insert(eps / (4.0 * f_plus * f_plus));
            let levels = ex.reflection_levels.get_or_insert_with(|| vec![0.5, 1.0, 2.0]).clone();
            let curves = boundary_curves(params, lin.path())?;
            let out = conditional_hit_experiment(&lin, &curves, sigma, d, t_star, delta, n, scheme_of(&cfg), seed)?;
            let p = json!({ "sigma": sigma, "epsilon": eps, "D": d, "t_star": t_star, "delta": delta });
            records.push(
                ResultRecord::new("conditional", p.clone(), seed)
                    .with_estimate(&out.crosses_upper)
                    .with_details(&out)?,
            );
            let refl = reflection_experiment(&lin, sigma, t_star, delta, &levels, 200, n, seed)?;
            for r in &refl {
                records.push(
                    ResultRecord::new("reflection", p.clone(), seed)
                        .with_estimate(&r.sup_exceeds)
                        .with_details(&json!({
                            "outcome": r,
                            "agrees_within_3se": r.agrees_within(3.0),
                        }))?,
                );
            }
        }
        Command::Chain => {
            let n = *ex.n.get_or_insert(1000);
            let particles = *ex.particles.get_or_insert(3);
            let mode = *ex.force_mode.get_or_insert(ForceModeArg::NeighborList);
            let mut chain = ChainConfig::new(particles, params.potential().base().clone(), sigma, eps)
                .with_seed(seed)
                .with_force_mode(match mode {
                    ForceModeArg::AllPairs => ForceMode::AllPairs,
                    ForceModeArg::NeighborList => ForceMode::NeighborList,
                })
                .with_crossing(match integ.crossing {
                    breakchain::Crossing::BridgeCorrected => ChainCrossing::BridgeCorrected,
                    _ => ChainCrossing::Grid,
                });
            if cfg.integrator.frame == breakchain::config::FrameName::Physical {
                chain = chain.with_dt(integ.dt);
            } else {
                chain = chain.with_dt(integ.dt / eps);
            }
            let hist = break_location_histogram(&chain, n)?;
            let p = json!({ "sigma": sigma, "epsilon": eps, "particles": particles, "dt": chain.dt });
            let mut rec = ResultRecord::new("chain", p, seed).with_details(&hist)?;
            rec.n = n;
            rec.p_hat = Some(hist.fraction(particles - 1));
            records.push(rec);
            tables.push(("histogram.csv", bond_histogram_table(&hist)));
        }
    }
    if timing {
        let secs = started.elapsed().as_secs_f64();
        for r in &mut records {
            r.runtime = Some(secs);
        }
    }
    if let Some(w) = records.iter().find_map(|r| r.details.get("estimate").and_then(|e| e.get("warning")).cloned()) {
        derived_json["warning"] = w;
    }
    let results = json!({
        "config": cfg.echo(),
        "derived": derived_json,
        "results": records,
    });
    Ok(Outcome {
        resolved: cfg,
        results,
        tables,
        failed_validation: false,
    })
}

fn validate(mut cfg: RunConfig) -> Result<Outcome, Failure> {
    let model = cfg.model.clone().expect("resolved config has a model");
    let spec = model.potential.build()?;
    let points = *cfg.experiment.validation_points.get_or_insert(DEFAULT_VALIDATION_POINTS);
    let tol = *cfg.experiment.validation_tol.get_or_insert(DEFAULT_VALIDATION_TOL);
    let report = validate_potential(&spec, points, tol)?;
    let extension = match model.blend_width {
        Some(w) => spec.extend(w),
        None => spec.extend_default(),
    };
    let extension_error = extension.as_ref().err().map(|e| e.to_string());
    let failed = !report.all_passed() || extension_error.is_some();
    let mut resolved_model = model.clone();
    resolved_model.potential = model.potential.resolved(&spec);
    if let Ok(ext) = &extension {
        resolved_model.blend_width = Some(ext.blend_width());
    }
    cfg.model = Some(resolved_model);
    let details = json!({
        "report": report,
        "all_passed": report.all_passed(),
        "extension_error": extension_error,
    });
    let rec = ResultRecord::new("validate", json!({ "a": spec.a(), "b": spec.b() }), cfg.integrator.seed)
        .with_details(&details)?;
    let results = json!({ "config": cfg.echo(), "results": [rec] });
    Ok(Outcome {
        resolved: cfg,
        results,
        tables: Vec::new(),
        failed_validation: failed,
    })
}

/// Writes `results.json`, `config.json` and the command's tables into `dir`.
pub fn write_outputs(dir: &Path, outcome: &Outcome) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Runtime(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let results = to_json_string(&outcome.results)?;
    std::fs::write(dir.join("results.json"), results).map_err(io)?;
    let config = to_json_string(&outcome.resolved)?;
    std::fs::write(dir.join("config.json"), config).map_err(io)?;
    for (name, table) in &outcome.tables {
        table.write(&dir.join(name))?;
    }
    Ok(())
}
