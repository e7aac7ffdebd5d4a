use damctl_core::analytics::{self, critical_rho12, CostModel};
use damctl_core::control::{self, AsymptoticProblem, ExactProblem};
use damctl_core::simulator::{self, SimulationConfig, SimulationReport, DEFAULT_BATCH_COUNT};
use damctl_core::verify::{self, VerifyConfig, VerifyRow, VerifyTable};
use damctl_core::{ControlSolution, DamModel};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Mode, OptimizeFlags, Settings, SimulateFlags, SweepFlags, VerifyFlags, DEFAULT_CYCLES, DEFAULT_SEED};
use crate::error::CliError;
use crate::output::{render_record, render_table, Format};

/// Rendered result of a command plus notes meant for standard error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub body: String,
    pub notes: String,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Exact metrics of one model. Counts and times that exceed the `f64` range
/// are reported as null; `log10_q_level` is always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub lambda: f64,
    pub level: usize,
    pub rho1: f64,
    pub rho2: f64,
    pub q_level: Option<f64>,
    pub log10_q_level: f64,
    pub e_nu1: Option<f64>,
    pub e_nu2: Option<f64>,
    pub e_t1: Option<f64>,
    pub e_t2: Option<f64>,
    pub e_t: Option<f64>,
    pub p1: f64,
    pub p2: f64,
    /// `J(L)`; null when no costs were given.
    pub cost: Option<f64>,
}

pub fn analyze_report(settings: &Settings) -> Result<AnalyzeReport, CliError> {
    let model = settings.model()?;
    let costs = settings.optional_costs()?;
    let a = analytics::analyze(&model, &costs.unwrap_or(CostModel { j1: 0.0, j2: 0.0 }), settings.precision()?)?;
    let m = a.metrics;
    Ok(AnalyzeReport {
        lambda: model.lambda,
        level: model.level,
        rho1: model.rho1(),
        rho2: model.rho2(),
        q_level: finite(a.q_level.to_f64()),
        log10_q_level: a.q_level.ln() / std::f64::consts::LN_10,
        e_nu1: finite(m.e_nu1),
        e_nu2: finite(m.e_nu2),
        e_t1: finite(m.e_t1),
        e_t2: finite(m.e_t2),
        e_t: finite(m.e_t),
        p1: a.stationary.p1,
        p2: a.stationary.p2,
        cost: costs.map(|_| a.stationary.cost),
    })
}

pub fn cmd_analyze(settings: &Settings) -> Result<CommandOutput, CliError> {
    let report = analyze_report(settings)?;
    Ok(CommandOutput { body: render_record(&report, settings.format(Format::Json))?, notes: String::new() })
}

pub fn optimize_solution(settings: &Settings, flags: &OptimizeFlags) -> Result<ControlSolution, CliError> {
    let model = settings.model()?;
    let costs = settings.costs()?;
    let file = &settings.file;
    match flags.mode.or(file.mode).unwrap_or(Mode::Asymptotic) {
        Mode::Asymptotic => {
            let mut problem = AsymptoticProblem::new(
                model.lambda,
                model.rho2(),
                critical_rho12(model.lambda, &model.b1)?,
                model.level,
                costs,
            );
            problem.c_max = flags.c_max.or(file.c_max);
            Ok(control::optimize_asymptotic(&problem)?)
        }
        Mode::Exact => {
            let mut problem = ExactProblem::new(model.lambda, model.b1.clone(), model.b2.clone(), model.level, costs);
            let (lo, hi) = problem.rho1_range;
            problem.rho1_range = (flags.rho1_min.or(file.rho1_min).unwrap_or(lo), flags.rho1_max.or(file.rho1_max).unwrap_or(hi));
            problem.precision = settings.precision()?;
            Ok(control::optimize_exact(&problem)?)
        }
    }
}

pub fn cmd_optimize(settings: &Settings, flags: &OptimizeFlags) -> Result<CommandOutput, CliError> {
    let solution = optimize_solution(settings, flags)?;
    Ok(CommandOutput { body: render_record(&solution, settings.format(Format::Json))?, notes: String::new() })
}

pub fn verify_table(settings: &Settings, flags: &VerifyFlags) -> Result<VerifyTable, CliError> {
    let file = &settings.file;
    let regime = flags.regime.or(file.regime).ok_or_else(|| CliError::missing("regime", "--regime"))?;
    let mut config = VerifyConfig::new(settings.lambda()?, settings.b1()?, settings.b2()?, regime);
    if let Some(levels) = flags.levels.clone().or_else(|| file.levels.clone()) {
        config.levels = levels;
    }
    if let Some(cs) = flags.c_values.clone().or_else(|| file.c_values.clone()) {
        config.c_values = cs;
    }
    config.rho1 = flags.rho1.or(file.rho1);
    config.precision = settings.precision()?;
    Ok(verify::verify_sweep(&config)?)
}

pub fn cmd_verify(settings: &Settings, flags: &VerifyFlags) -> Result<CommandOutput, CliError> {
    let table = verify_table(settings, flags)?;
    let format = settings.format(Format::Csv);
    let body = if format == Format::Json {
        render_record(&table, format)?
    } else {
        let rows = table.rows.iter().map(verify_cells).collect();
        render_table(&VerifyRow::HEADER, rows, format)?
    };
    Ok(CommandOutput { body, notes: table.discrepancy_report() })
}

fn verify_cells(r: &VerifyRow) -> Vec<Value> {
    vec![
        json!(r.level),
        json!(r.delta),
        json!(r.c),
        json!(r.p1_exact),
        json!(r.p1_asym),
        json!(r.p1_rel_err),
        json!(r.p2_exact),
        json!(r.p2_asym),
        json!(r.p2_rel_err),
    ]
}

/// Exact counterparts of the simulated quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactValues {
    pub p1: f64,
    pub p2: f64,
    pub e_nu1: f64,
    pub e_nu2: f64,
    pub e_t1: f64,
    pub e_t2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub report: SimulationReport,
    /// Null when the exact recurrence cannot be evaluated for this model.
    pub exact: Option<ExactValues>,
}

fn exact_values(model: &DamModel, settings: &Settings) -> Result<Option<ExactValues>, CliError> {
    let zero = CostModel { j1: 0.0, j2: 0.0 };
    match analytics::analyze(model, &zero, settings.precision()?) {
        Ok(a) => Ok(Some(ExactValues {
            p1: a.stationary.p1,
            p2: a.stationary.p2,
            e_nu1: a.metrics.e_nu1,
            e_nu2: a.metrics.e_nu2,
            e_t1: a.metrics.e_t1,
            e_t2: a.metrics.e_t2,
        })),
        Err(e) if e.is_config_error() => Err(e.into()),
        Err(_) => Ok(None),
    }
}

pub fn simulate_output(settings: &Settings, flags: &SimulateFlags) -> Result<SimulateOutput, CliError> {
    let file = &settings.file;
    let config = SimulationConfig {
        model: settings.model()?,
        n_cycles: flags.cycles.or(file.cycles).unwrap_or(DEFAULT_CYCLES),
        seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        batch_count: flags.batches.or(file.batches).unwrap_or(DEFAULT_BATCH_COUNT),
    };
    let report = simulator::simulate(&config)?;
    Ok(SimulateOutput { exact: exact_values(&config.model, settings)?, report })
}

pub fn cmd_simulate(settings: &Settings, flags: &SimulateFlags) -> Result<CommandOutput, CliError> {
    let out = simulate_output(settings, flags)?;
    Ok(CommandOutput { body: render_record(&out, settings.format(Format::Json))?, notes: String::new() })
}

pub fn sweep_rows(settings: &Settings, flags: &SweepFlags) -> Result<Vec<control::SweepRow>, CliError> {
    let file = &settings.file;
    let costs = settings.costs()?;
    let grid = flags.c_values.clone().or_else(|| file.c_values.clone()).ok_or_else(|| CliError::missing("c_values", "--c-values"))?;
    let rho12 = match flags.rho12.or(file.rho12) {
        Some(r) => r,
        None => critical_rho12(settings.lambda()?, &settings.b1()?)?,
    };
    let rho2 = match flags.rho2.or(file.rho2) {
        Some(r) => r,
        None => settings.lambda()? * settings.b2()?.mean(),
    };
    Ok(control::cost_sweep(&grid, rho12, rho2, &costs)?)
}

pub fn cmd_sweep(settings: &Settings, flags: &SweepFlags) -> Result<CommandOutput, CliError> {
    let rows = sweep_rows(settings, flags)?;
    let cells = rows.iter().map(|r| vec![json!(r.c), json!(r.j_upper), json!(r.j_lower)]).collect();
    Ok(CommandOutput { body: render_table(&["C", "J_upper", "J_lower"], cells, settings.format(Format::Csv))?, notes: String::new() })
}
