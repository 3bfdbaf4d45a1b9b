use std::fs::File;
use std::path::{Path, PathBuf};

use brink_core::envelope::{
    envelope_curve, extract_decay, verify_lower, verify_upper, DecayForm, EnvelopeKind,
    EnvelopeSpec, PowerComparison,
};
use brink_core::io::{
    fmt_f64, read_wavefunction_csv, to_json, write_envelope_curve_csv, write_scaled_csv,
    write_wavefunction_csv, CriticalRecord, DiscrepancyRecord, EigenRecord, EnvelopeReport,
};
use brink_core::solver::{default_spacing, solve_ground, solve_ground_auto, EigenResult, Grid};
use brink_core::threshold::{
    at_critical, critical_by_bisection, critical_by_matching, threshold_state, CriticalResult,
};
use brink_core::{Error, RadialModel, Wavefunction};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{GridConfig, MethodChoice, RunConfig, StateSource};
use crate::error::{CliError, EXIT_OK, EXIT_WINDOW_FAILED};

/// Bisection grid extent when `grid.r_max` is not set.
pub const BISECTION_R_MAX: f64 = 2000.0;
/// Threshold-state grid extent in well radii when `grid.r_max` is not set.
pub const CRITICAL_R_MAX: f64 = 1600.0;

pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub workers: usize,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn create(&self, name: &str) -> Result<File, CliError> {
        let path = self.path(name);
        File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        if !self.config.output.json {
            return Ok(());
        }
        let mut text = to_json(value)?;
        text.push('\n');
        let path = self.path(name);
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    fn write_wavefunction(
        &self,
        name: &str,
        wf: &Wavefunction,
        model: &RadialModel,
    ) -> Result<(), CliError> {
        if self.config.output.csv {
            write_wavefunction_csv(self.create(name)?, wf, model, self.config.output.stride)?;
        }
        Ok(())
    }

    fn spacing(&self, model: &RadialModel) -> f64 {
        self.config.grid.h.unwrap_or_else(|| default_spacing(model))
    }

    fn fixed_grid(&self, model: &RadialModel, default_r_max: f64) -> Result<Grid, CliError> {
        let r_max = self.config.grid.r_max.unwrap_or(default_r_max);
        Ok(Grid::with_spacing(r_max, self.spacing(model))?)
    }
}

fn solve_model(model: &RadialModel, grid: GridConfig, ctx: &Context) -> Result<EigenResult, Error> {
    let h = grid.h.unwrap_or_else(|| default_spacing(model));
    match grid.r_max {
        Some(r_max) => solve_ground(model, Grid::with_spacing(r_max, h)?, ctx.config.solve),
        None => solve_ground_auto(model, h, ctx.config.solve),
    }
}

pub fn cmd_solve(ctx: &Context) -> Result<i32, CliError> {
    let model = &ctx.config.model;
    let res = solve_model(model, ctx.config.grid, ctx)?;
    eprintln!(
        "solve: E = {:.12e}, nodes = {}, r_max = {}, n = {}",
        res.energy,
        res.nodes,
        res.wavefunction.grid.r_max(),
        res.wavefunction.grid.len()
    );
    ctx.write_json("eigen.json", &EigenRecord::new(model, &res))?;
    ctx.write_wavefunction("wavefunction.csv", &res.wavefunction, model)?;
    Ok(EXIT_OK)
}

fn report_critical(label: &str, c: &CriticalResult) {
    eprintln!(
        "critical ({label}): {} = {:.12} on [{}, {}], residual {:.3e}",
        c.parameter, c.value, c.bracket.0, c.bracket.1, c.residual
    );
}

pub fn cmd_critical(ctx: &Context) -> Result<i32, CliError> {
    let cfg = &ctx.config.critical;
    let model = &ctx.config.model;
    let matching = || critical_by_matching(model, cfg.parameter, cfg.bracket);
    let bisection = || -> Result<CriticalResult, CliError> {
        let grid = ctx.fixed_grid(model, BISECTION_R_MAX * model.well_radius)?;
        Ok(critical_by_bisection(
            model,
            cfg.parameter,
            cfg.bracket,
            grid,
            cfg.tolerance,
        )?)
    };
    match cfg.method {
        MethodChoice::Matching => {
            let m = matching()?;
            report_critical("matching", &m);
            ctx.write_json("critical.json", &CriticalRecord::from(&m))?;
        }
        MethodChoice::Bisection => {
            let b = bisection()?;
            report_critical("bisection", &b);
            ctx.write_json("critical.json", &CriticalRecord::from(&b))?;
        }
        MethodChoice::Both => {
            let m = matching()?;
            report_critical("matching", &m);
            let b = bisection()?;
            report_critical("bisection", &b);
            let discrepancy = DiscrepancyRecord {
                parameter: cfg.parameter.as_str(),
                matching: m.value,
                bisection: b.value,
                discrepancy: (m.value - b.value).abs(),
            };
            eprintln!("critical: discrepancy {:.3e}", discrepancy.discrepancy);
            ctx.write_json("critical.json", &CriticalRecord::from(&m))?;
            ctx.write_json("critical_matching.json", &CriticalRecord::from(&m))?;
            ctx.write_json("critical_bisection.json", &CriticalRecord::from(&b))?;
            ctx.write_json("critical_discrepancy.json", &discrepancy)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_envelope(ctx: &Context) -> Result<i32, CliError> {
    let env =
        ctx.config.envelope.as_ref().ok_or_else(|| {
            CliError::Config("the envelope command needs an envelope block".into())
        })?;
    let (model, wf, binding) = match env.state {
        StateSource::Critical => {
            let (model, crit) = at_critical(&ctx.config.model, env.parameter)?;
            report_critical("matching", &crit);
            let grid = ctx.fixed_grid(&model, CRITICAL_R_MAX * model.well_radius)?;
            let state = threshold_state(&model, grid)?;
            eprintln!(
                "envelope: threshold state is {:?}",
                state.classification.kind
            );
            (model, state.wavefunction, 0.0)
        }
        StateSource::Solve => {
            let model = ctx.config.model.clone();
            let res = solve_model(&model, ctx.config.grid, ctx)?;
            eprintln!("envelope: solved E = {:.12e}", res.energy);
            (model, res.wavefunction, res.binding)
        }
        StateSource::Input => {
            let path: &Path = env.input.as_deref().expect("checked when parsing");
            let file =
                File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let wf = read_wavefunction_csv(file, ctx.config.model.symmetry)
                .map_err(|e| match e {
                    Error::Io(msg) => CliError::Io(msg),
                    other => CliError::Config(format!("{}: {other}", path.display())),
                })?
                .normalize()?;
            (ctx.config.model.clone(), wf, env.binding_energy)
        }
    };

    let kind = match env.kind {
        EnvelopeKind::Ab { b, .. } if env.a_from_binding => EnvelopeKind::Ab { a: binding, b },
        k => k,
    };
    let region = env
        .region_r
        .unwrap_or_else(|| EnvelopeSpec::default_region(&model, &wf.grid));
    let spec = EnvelopeSpec::new(kind, region);
    spec.validate(&model)
        .map_err(|e| CliError::Config(format!("envelope: {e}")))?;

    let upper = verify_upper(&wf, &spec, &model, binding, region)?;
    let mut report = EnvelopeReport::new(spec, binding, &upper);
    let mut verified = upper.verified;
    eprintln!(
        "envelope: margin {:.3e}, C_fit {:.6e}, worst window ratio {:.6}",
        upper.margin,
        upper.c_fit,
        upper.window_ratios.iter().copied().fold(0.0, f64::max)
    );

    if let Some(window) = env.fit_window {
        match extract_decay(&wf, window, env.fit_form) {
            Ok(fit) => {
                eprintln!(
                    "envelope: fit A = {:.6}, p = {:.6}, rms {:.3e}",
                    fit.a, fit.p, fit.rms
                );
                if env.fit_form == DecayForm::Critical {
                    let cmp = PowerComparison::new(&fit);
                    eprintln!(
                        "envelope: tail power {:.4} is closer to {}",
                        cmp.fitted, cmp.closer
                    );
                    report.power = Some(cmp);
                }
                report.fit = Some(fit);
            }
            Err(e) => eprintln!("envelope: fit skipped: {e}"),
        }
    }
    if let Some((k, kappa)) = env.lower {
        let lower = verify_lower(&wf, k, kappa, region)?;
        eprintln!("envelope: lower bound holds = {}", lower.holds);
        verified &= lower.holds;
        report.lower = Some(lower);
    }

    ctx.write_json("envelope_report.json", &report)?;
    if ctx.config.output.csv {
        let curve = envelope_curve(&wf, &spec, &model, binding, region)?;
        write_envelope_curve_csv(ctx.create("envelope_curve.csv")?, &curve, upper.c_fit)?;
    }
    Ok(if verified {
        EXIT_OK
    } else {
        EXIT_WINDOW_FAILED
    })
}

#[derive(Debug, Clone)]
struct SweepRow {
    value: f64,
    energy: Option<f64>,
    mean_radius: Option<f64>,
    fit: Option<(f64, f64)>,
    status: &'static str,
    exit_code: i32,
}

fn status_of(e: &Error) -> &'static str {
    match e {
        Error::NoBoundState => "no_bound_state",
        Error::GridTooSmall { .. } => "grid_too_small",
        Error::InvalidModel(_) => "invalid_model",
        _ => "numerical_error",
    }
}

fn sweep_one(ctx: &Context, index: usize, value: f64) -> Result<SweepRow, CliError> {
    let sweep = ctx.config.sweep.as_ref().expect("checked by caller");
    let failed = |e: Error| {
        eprintln!("sweep: {} = {value}: {e}", sweep.parameter);
        let exit_code = CliError::Core(e.clone()).exit_code();
        SweepRow {
            value,
            energy: None,
            mean_radius: None,
            fit: None,
            status: status_of(&e),
            exit_code,
        }
    };
    let model = match sweep.parameter.apply(&ctx.config.model, value) {
        Ok(m) => m,
        Err(e) => return Ok(failed(e)),
    };
    let res = match solve_model(&model, ctx.config.grid, ctx) {
        Ok(r) => r,
        Err(e) => return Ok(failed(e)),
    };
    let wf = &res.wavefunction;
    let r_max = wf.grid.r_max();
    let window = sweep.fit_window.unwrap_or((0.25 * r_max, 0.75 * r_max));
    let fit = match extract_decay(wf, window, sweep.fit_form) {
        Ok(f) => Some((f.a, f.p)),
        Err(e) => {
            eprintln!("sweep: {} = {value}: fit skipped: {e}", sweep.parameter);
            None
        }
    };
    eprintln!(
        "sweep: {} = {value}: E = {:.12e}",
        sweep.parameter, res.energy
    );
    ctx.write_wavefunction(&format!("wavefunction_{index}.csv"), wf, &model)?;
    if ctx.config.output.csv {
        write_scaled_csv(ctx.create(&format!("scaled_{index}.csv"))?, wf)?;
    }
    Ok(SweepRow {
        value,
        energy: Some(res.energy),
        mean_radius: Some(wf.mean_radius()),
        fit,
        status: "ok",
        exit_code: EXIT_OK,
    })
}

pub fn cmd_sweep(ctx: &Context) -> Result<i32, CliError> {
    let sweep = ctx
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("the sweep command needs a sweep block".into()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", ctx.workers)))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        sweep
            .values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| sweep_one(ctx, i, v))
            .collect::<Result<Vec<_>, _>>()
    })?;

    if ctx.config.output.csv {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        let mut text = String::from("param,E,mean_radius,fit_A,fit_p,status\n");
        for row in &rows {
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f64(row.value),
                opt(row.energy),
                opt(row.mean_radius),
                opt(row.fit.map(|f| f.0)),
                opt(row.fit.map(|f| f.1)),
                row.status
            ));
        }
        let path = ctx.path("sweep.csv");
        std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    let succeeded = rows.iter().filter(|r| r.exit_code == EXIT_OK).count();
    eprintln!("sweep: {succeeded} of {} values solved", rows.len());
    Ok(if succeeded > 0 {
        EXIT_OK
    } else {
        rows[0].exit_code
    })
}
