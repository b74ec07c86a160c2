//! Run orchestration and result emission.
//!
//! Every simulation writes `manifest.json` (resolved config, hypothesis
//! audit, family ledger), a `series.csv` diagnostics table, and one CSV per
//! requested snapshot time.  Sweeps collect a `summary.csv` with one row per
//! run.  All floating-point output carries 17 significant digits so repeated
//! executions are byte-comparable.

use crate::config::ModeConfig;
use crate::scenario::Scenario;
use crate::CliError;
use haptolab::diagnostics::{energy_slope_check, DiagnosticsRecord};
use haptolab::regularize::RegularizationFamily;
use haptolab::solver::{run, RunOptions, SimState, Snapshot, Trajectory};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Exact column order of the diagnostics series.
pub const SERIES_HEADER: &str = "t,mass_u,mass_w,w_inf,w_min,E1,E2,E3,E_total,D1,D2,D3,mu,dev_L1,ln_du_min,ln_du_max,cum_dissipation,cum_wx_l2,cum_dev_sq,equi_worst";

/// Exact column order of the sweep summary.
pub const SUMMARY_HEADER: &str =
    "eps,final_dev_L1,final_w_inf,max_ln_du,energy_violations,wall_time_s";

/// 17 significant digits; fixed format for byte-reproducible artifacts.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(context: &str, e: std::io::Error) -> CliError {
    CliError::Abort(format!("{context}: {e}"))
}

/// One summary row of a sweep or grid study.
#[derive(Debug, Clone, Copy)]
pub struct SummaryRow {
    pub eps: f64,
    pub final_dev_l1: f64,
    pub final_w_inf: f64,
    pub max_ln_du: f64,
    pub energy_violations: usize,
    pub wall_time_s: f64,
}

pub fn write_series(path: &Path, records: &[DiagnosticsRecord]) -> Result<(), CliError> {
    let mut out = String::with_capacity(records.len() * 400);
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for r in records {
        let cols = [
            r.t,
            r.mass_u,
            r.mass_w,
            r.w_inf,
            r.w_min,
            r.e1,
            r.e2,
            r.e3,
            r.e_total,
            r.d1,
            r.d2,
            r.d3,
            r.mu,
            r.dev_l1,
            r.ln_du_min,
            r.ln_du_max,
            r.cum_dissipation,
            r.cum_wx_l2,
            r.cum_dev_sq,
            r.equi_worst,
        ];
        let row: Vec<String> = cols.iter().map(|&c| fmt_f64(c)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

fn write_snapshot(
    dir: &Path,
    centers: &[f64],
    snap: &Snapshot,
    d_eps: &[f64],
) -> Result<(), CliError> {
    let name = format!("snap_t{:.6}.csv", snap.t);
    let mut out = String::new();
    out.push_str("x,u,w,d_eps\n");
    for i in 0..centers.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(centers[i]),
            fmt_f64(snap.u.values()[i]),
            fmt_f64(snap.w.values()[i]),
            fmt_f64(d_eps[i])
        );
    }
    let path = dir.join(name);
    fs::write(&path, out).map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.3}",
            fmt_f64(r.eps),
            fmt_f64(r.final_dev_l1),
            fmt_f64(r.final_w_inf),
            fmt_f64(r.max_ln_du),
            r.energy_violations,
            r.wall_time_s
        );
    }
    fs::write(path, out).map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

fn write_manifest(
    dir: &Path,
    scenario: &Scenario,
    family: &RegularizationFamily,
) -> Result<(), CliError> {
    let manifest = serde_json::json!({
        "config": scenario.config,
        "hypothesis_report": scenario.hypotheses,
        "family": {
            "epsilons": family.epsilons(),
            "ledger": family.ledger().rows,
        },
    });
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Abort(format!("serializing manifest: {e}")))?;
    let path = dir.join("manifest.json");
    fs::write(&path, text).map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

/// Writes the family inspection bundle: the per-member ledger and the full
/// fields in long format (`j,x,d,d_eps,d_eps_x,w0j,w0eps`).
pub fn write_family_bundle(dir: &Path, family: &RegularizationFamily) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err("creating family bundle dir", e))?;
    let mut ledger = String::new();
    ledger.push_str(
        "j,eps,grad_sq_bound,grad_quartic_bound,floor_bound,log_slope_bound,w_energy,w_weight,sup_dist\n",
    );
    for r in &family.ledger().rows {
        let _ = writeln!(
            ledger,
            "{},{},{},{},{},{},{},{},{}",
            r.j,
            fmt_f64(r.eps),
            fmt_f64(r.grad_sq_bound),
            fmt_f64(r.grad_quartic_bound),
            fmt_f64(r.floor_bound),
            fmt_f64(r.log_slope_bound),
            fmt_f64(r.w_energy),
            fmt_f64(r.w_weight),
            fmt_f64(r.sup_dist)
        );
    }
    fs::write(dir.join("family_ledger.csv"), ledger)
        .map_err(|e| io_err("writing family_ledger.csv", e))?;

    let grid = family.grid();
    let mut fields = String::new();
    fields.push_str("j,x,d,d_eps,d_eps_x,w0j,w0eps\n");
    for j in 1..=family.len() {
        let d_eps = family.d_eps(j).values();
        let d_eps_x = family.d_eps_x(j).values();
        let w0j = family.w0j(j).values();
        let w0eps = family.w0eps(j).values();
        for (i, &x) in grid.centers().iter().enumerate() {
            let _ = writeln!(
                fields,
                "{},{},{},{},{},{},{}",
                j,
                fmt_f64(x),
                fmt_f64(family.d_work()[work_index(i)]),
                fmt_f64(d_eps[i]),
                fmt_f64(d_eps_x[i]),
                fmt_f64(w0j[i]),
                fmt_f64(w0eps[i])
            );
        }
    }
    fs::write(dir.join("family_fields.csv"), fields)
        .map_err(|e| io_err("writing family_fields.csv", e))
}

/// Working-grid index of simulation cell `i` (centers coincide).
pub(crate) fn work_index(i: usize) -> usize {
    use haptolab::regularize::WORK_REFINE;
    WORK_REFINE * i + WORK_REFINE / 2
}

/// Runs one family member and writes its artifacts into `dir`.
fn run_member(
    scenario: &Scenario,
    family: &RegularizationFamily,
    j: usize,
    dir: &Path,
) -> Result<(SummaryRow, Trajectory), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err("creating run dir", e))?;
    let slice = family.slice(j);
    let params = scenario.solver_params();
    let options = RunOptions {
        snapshot_times: scenario.config.output.snapshot_times.clone(),
        equi_delta: scenario.config.output.equi_delta,
        steady_stop_rel_tol: scenario.config.solver.steady_stop_rel_tol,
    };
    let state = SimState::new(
        scenario.initial.u0().clone(),
        family.w0eps(j).clone(),
        slice.eps,
    );
    let t0 = Instant::now();
    let traj = run(
        state,
        &scenario.grid,
        &slice,
        &scenario.absorption,
        &params,
        &options,
    )
    .map_err(|e| CliError::Abort(format!("member {j}: {e}")))?;
    let wall_time_s = t0.elapsed().as_secs_f64();

    write_series(&dir.join("series.csv"), &traj.records)?;
    for snap in &traj.snapshots {
        write_snapshot(dir, scenario.grid.centers(), snap, slice.d_eps)?;
    }

    let tol_energy = 1e-6 * traj.records[0].e_total.abs();
    let (energy_violations, _) = energy_slope_check(
        &traj.records,
        slice.eps,
        &scenario.absorption,
        scenario.m_bound(),
        tol_energy,
    );
    let last = traj.records.last().expect("at least the initial record");
    let max_ln_du = traj
        .records
        .iter()
        .map(|r| r.ln_du_max)
        .fold(f64::NEG_INFINITY, f64::max);
    let row = SummaryRow {
        eps: slice.eps,
        final_dev_l1: last.dev_l1,
        final_w_inf: last.w_inf,
        max_ln_du,
        energy_violations,
        wall_time_s,
    };
    Ok((row, traj))
}

fn preflight_writable(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("output dir {}: {e}", dir.display())))?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"")
        .map_err(|e| CliError::Config(format!("output dir {} not writable: {e}", dir.display())))?;
    fs::remove_file(&probe).ok();
    Ok(())
}

/// Builds the family for a scenario (the expensive shared setup).
pub fn build_family(scenario: &Scenario) -> Result<RegularizationFamily, CliError> {
    RegularizationFamily::build(
        &scenario.coefficient,
        scenario.initial.w0(),
        &scenario.grid,
        scenario.config.family.j_max,
    )
    .map_err(|e| CliError::Abort(format!("family construction: {e}")))
}

/// Executes the scenario's mode into `out_dir`.  Sweep members may run on up
/// to `workers` parallel threads; each run owns its directory exclusively
/// and the summary is assembled in listed order.
pub fn execute(scenario: &Scenario, out_dir: &Path, workers: usize) -> Result<(), CliError> {
    preflight_writable(out_dir)?;
    let family = build_family(scenario)?;
    write_manifest(out_dir, scenario, &family)?;

    match scenario.mode().clone() {
        ModeConfig::Single => {
            let j = scenario.config.family.j;
            let (row, traj) = run_member(scenario, &family, j, out_dir)?;
            println!(
                "single run: member j={j} (eps={:.3e}), {} samples, final dev_L1={:.3e}, final w_inf={:.3e}, energy violations={}",
                row.eps,
                traj.records.len(),
                row.final_dev_l1,
                row.final_w_inf,
                row.energy_violations
            );
            // equicontinuity quotient of the final attractant; informational
            if let Ok(omega_h) =
                haptolab::model::omega_d(&scenario.coefficient, &scenario.grid, scenario.grid.h())
            {
                println!(
                    "final attractant equicontinuity quotient: {:.3e}",
                    haptolab::diagnostics::w_holder_quotient(&traj.final_state.w, omega_h)
                );
            }
            Ok(())
        }
        ModeConfig::EpsSweep { js } => {
            let jobs: Vec<usize> = js;
            let rows = run_parallel(workers, jobs.len(), |idx| {
                let j = jobs[idx];
                let dir = out_dir.join(format!("j{j}"));
                run_member(scenario, &family, j, &dir).map(|(row, _)| row)
            })?;
            write_summary(&out_dir.join("summary.csv"), &rows)?;
            println!("eps sweep: {} runs -> {}", rows.len(), out_dir.display());
            Ok(())
        }
        ModeConfig::GridStudy { ns } => {
            let rows = run_parallel(workers, ns.len(), |idx| {
                let n = ns[idx];
                let sc = scenario.at_resolution(n)?;
                let fam = build_family(&sc)?;
                let dir = out_dir.join(format!("n{n}"));
                run_member(&sc, &fam, sc.config.family.j, &dir).map(|(row, _)| row)
            })?;
            write_summary(&out_dir.join("summary.csv"), &rows)?;
            println!("grid study: {} runs -> {}", rows.len(), out_dir.display());
            Ok(())
        }
    }
}

/// Simple indexed worker pool; results are collected in job order.
fn run_parallel<F>(workers: usize, jobs: usize, job: F) -> Result<Vec<SummaryRow>, CliError>
where
    F: Fn(usize) -> Result<SummaryRow, CliError> + Sync,
{
    let workers = workers.max(1).min(jobs.max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<Result<SummaryRow, CliError>>>> =
        (0..jobs).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if idx >= jobs {
                    break;
                }
                let r = job(idx);
                *results[idx].lock().unwrap() = Some(r);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every job ran"))
        .collect()
}

/// Runs the scenario twice into scratch subdirectories and verifies that
/// every emitted `series.csv` is byte-identical between the two executions.
pub fn seed_check(scenario: &Scenario, out_dir: &Path, workers: usize) -> Result<(), CliError> {
    let dir_a = out_dir.join("seed_check_a");
    let dir_b = out_dir.join("seed_check_b");
    execute(scenario, &dir_a, workers)?;
    execute(scenario, &dir_b, workers)?;
    let mut series_a = find_series(&dir_a)?;
    let mut series_b = find_series(&dir_b)?;
    series_a.sort();
    series_b.sort();
    if series_a.len() != series_b.len() {
        return Err(CliError::Abort(
            "seed check: run layouts differ between executions".to_string(),
        ));
    }
    for (a, b) in series_a.iter().zip(&series_b) {
        let bytes_a = fs::read(dir_a.join(a)).map_err(|e| io_err("seed check read", e))?;
        let bytes_b = fs::read(dir_b.join(b)).map_err(|e| io_err("seed check read", e))?;
        if a != b || bytes_a != bytes_b {
            return Err(CliError::Abort(format!(
                "seed check: {} differs between executions",
                a.display()
            )));
        }
    }
    println!(
        "seed check: {} series file(s) byte-identical across two executions",
        series_a.len()
    );
    fs::remove_dir_all(&dir_a).ok();
    fs::remove_dir_all(&dir_b).ok();
    Ok(())
}

/// Relative paths of every `series.csv` below `root`.
fn find_series(root: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| io_err("walking output", e))? {
            let entry = entry.map_err(|e| io_err("walking output", e))?;
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "series.csv") {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    Ok(out)
}
