//! The four subcommands. Each returns the process exit code on success.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use biconserve_core::meancurv::{solve_f, ModelParams};
use biconserve_core::surface::{point_geometry, MeshGrid};
use biconserve_core::verify::{Pipeline, PointOutcome, VerificationReport, VerifyGrid, TOLERANCE_TABLE};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Output, RunConfig};
use crate::error::CliError;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 1;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(CliError::io(path))
}

fn write_with(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let mut file = create(dir, name)?;
    body(&mut file).and_then(|_| file.flush()).map_err(CliError::io(dir.join(name)))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    write_with(dir, name, |f| writeln!(f, "{text}"))
}

pub fn solve(cfg: &RunConfig) -> Result<u8, CliError> {
    let sol = solve_f(&cfg.model).map_err(biconserve_core::Error::from)?;
    if cfg.wants(Output::Csv) {
        write_with(&cfg.out, "f_solution.csv", |f| sol.write_csv(f))?;
    }
    let (a, b) = sol.span();
    println!("span: [{a}, {b}]");
    println!("Q drift: {:e}", sol.q_drift());
    let marks: Vec<String> = sol.branch_marks().iter().map(f64::to_string).collect();
    println!("turning points: [{}]", marks.join(", "));
    if let Some(cut) = sol.truncation() {
        eprintln!(
            "warning: f fell below f_floor = {} at s = {}; span truncated from {}",
            cut.f_floor, cut.actual_end, cut.requested_end
        );
    }
    Ok(EXIT_PASS)
}

pub fn build(cfg: &RunConfig) -> Result<u8, CliError> {
    let pipe = Pipeline::new(&cfg.model, cfg.perturb)?;
    let period = pipe.surface.t_period().unwrap_or(std::f64::consts::TAU);
    let grid = MeshGrid { s_range: pipe.solution.span(), t_range: (0.0, period), n_s: cfg.grid.n_s, n_t: cfg.grid.n_t };
    if grid.n_s < 2 || grid.n_t < 2 {
        return Err(CliError::Usage("mesh grid needs at least 2x2 vertices".into()));
    }
    if cfg.wants(Output::Csv) {
        write_with(&cfg.out, "profile.csv", |f| pipe.closed_curve.write_csv(f))?;
        write_with(&cfg.out, "surface_4d.csv", |f| pipe.surface.write_csv(&grid, f))?;
    }
    if cfg.wants(Output::Obj) {
        write_with(&cfg.out, "mesh_123.obj", |f| pipe.surface.write_obj(&grid, [0, 1, 2], f))?;
        write_with(&cfg.out, "mesh_124.obj", |f| pipe.surface.write_obj(&grid, [0, 1, 3], f))?;
    }
    println!("congruence rmsd: {:e}", pipe.congruence.rmsd);
    println!("unit-speed deviation: {:e}", pipe.closed_curve.max_speed_deviation());
    Ok(EXIT_PASS)
}

/// Grid outcomes in grid order, evaluated on the current rayon pool.
pub fn evaluate_parallel(pipe: &Pipeline, grid: VerifyGrid) -> Vec<PointOutcome> {
    pipe.grid_points(grid).par_iter().map(|&(s, t)| pipe.evaluate_point(s, t)).collect()
}

#[derive(Serialize)]
struct Stamp<'a> {
    version: &'static str,
    config_hash: String,
    config: String,
    pass: bool,
    total_points: usize,
    skipped_points: usize,
    skip_reasons: &'a std::collections::BTreeMap<String, usize>,
}

pub fn verify(cfg: &RunConfig) -> Result<u8, CliError> {
    let tolerances = cfg.tolerances()?;
    let pipe = Pipeline::new(&cfg.model, cfg.perturb)?;
    let outcomes = evaluate_parallel(&pipe, cfg.grid);
    let report: VerificationReport = pipe.summarize(&outcomes, &tolerances)?;
    print!("{}", report.table());
    println!("skipped points: {} of {}", report.skipped_points, report.total_points);
    if cfg.wants(Output::Report) {
        write_json(&cfg.out, "report.json", &report.checks)?;
        write_json(&cfg.out, "points.json", &outcomes)?;
        let stamp = Stamp {
            version: env!("CARGO_PKG_VERSION"),
            config_hash: cfg.hash(),
            config: cfg.canonical(),
            pass: report.pass,
            total_points: report.total_points,
            skipped_points: report.skipped_points,
            skip_reasons: &report.skip_reasons,
        };
        write_json(&cfg.out, "stamp.json", &stamp)?;
    }
    Ok(if report.pass { EXIT_PASS } else { EXIT_VERIFY_FAILED })
}

/// One sweep row: status, headline values and the worst residual per check.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub c: f64,
    pub c2: f64,
    pub f0: f64,
    pub status: &'static str,
    pub pass: bool,
    pub f_turning: f64,
    pub k_s0: Option<f64>,
    pub residuals: Vec<Option<f64>>,
    pub message: String,
}

fn sweep_row(base: &RunConfig, c: f64, c2: f64, f0: f64) -> SweepRow {
    let model = ModelParams { c, c2, f0, ..base.model.clone() };
    let mut row = SweepRow {
        c,
        c2,
        f0,
        status: "ok",
        pass: false,
        f_turning: model.f_turning(),
        k_s0: None,
        residuals: vec![None; TOLERANCE_TABLE.len()],
        message: String::new(),
    };
    let result = (|| -> Result<(), CliError> {
        let tolerances = base.tolerances()?;
        let pipe = Pipeline::new(&model, base.perturb)?;
        row.k_s0 = point_geometry(&pipe.surface, pipe.solution.span().0, 0.0).ok().map(|g| g.k_intrinsic);
        let outcomes = evaluate_parallel(&pipe, base.grid);
        let report = pipe.summarize(&outcomes, &tolerances)?;
        for (slot, (name, _)) in row.residuals.iter_mut().zip(TOLERANCE_TABLE) {
            *slot = report.check(name).and_then(|c| c.max_residual);
        }
        row.pass = report.pass;
        if !report.pass {
            let failing: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.check.as_str()).collect();
            row.status = "verify-failed";
            row.message = failing.join(" ");
        }
        Ok(())
    })();
    if let Err(err) = result {
        row.status = if err.exit_code() == 2 { "invalid-params" } else { "domain-error" };
        row.message = err.to_string();
    }
    row
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn sweep_rows(cfg: &RunConfig) -> Vec<SweepRow> {
    let m = &cfg.model;
    let cs = cfg.sweep_c.clone().unwrap_or_else(|| vec![m.c]);
    let c2s = cfg.sweep_c2.clone().unwrap_or_else(|| vec![m.c2]);
    let f0s = cfg.sweep_f0.clone().unwrap_or_else(|| vec![m.f0]);
    let mut combos = Vec::with_capacity(cs.len() * c2s.len() * f0s.len());
    for &c in &cs {
        for &c2 in &c2s {
            for &f0 in &f0s {
                combos.push((c, c2, f0));
            }
        }
    }
    combos.par_iter().map(|&(c, c2, f0)| sweep_row(cfg, c, c2, f0)).collect()
}

pub fn sweep(cfg: &RunConfig) -> Result<u8, CliError> {
    cfg.tolerances()?;
    let rows = sweep_rows(cfg);
    let path = cfg.out.join("sweep.csv");
    let file = create(&cfg.out, "sweep.csv")?;
    let mut writer = csv::Writer::from_writer(file);
    let to_io = |e: csv::Error| CliError::Io { path: path.clone(), source: e.into() };
    let mut header = vec!["c", "c2", "f0", "status", "pass", "f_turning", "K_s0"];
    header.extend(TOLERANCE_TABLE.iter().map(|(name, _)| *name));
    header.push("message");
    writer.write_record(&header).map_err(to_io)?;
    for row in &rows {
        let mut record = vec![
            row.c.to_string(),
            row.c2.to_string(),
            row.f0.to_string(),
            row.status.to_string(),
            row.pass.to_string(),
            row.f_turning.to_string(),
            cell(row.k_s0),
        ];
        record.extend(row.residuals.iter().map(|r| cell(*r)));
        record.push(row.message.clone());
        writer.write_record(&record).map_err(to_io)?;
        println!("c={} c2={} f0={}: {}", row.c, row.c2, row.f0, row.status);
    }
    writer.flush().map_err(CliError::io(&path))?;
    Ok(EXIT_PASS)
}
