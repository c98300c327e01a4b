use std::fs;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use ibbm_core::conjecture::{conjecture_experiment, TestFunction};
use ibbm_core::sbm::{self, MartingaleSeries};
use ibbm_core::simulate::{try_replicate_map, Snapshot};
use ibbm_core::stats::{DEFAULT_Z, TestReport};
use ibbm_core::validation::{run_criterion, CriterionReport, Sizes, Suite};
use serde_json::{json, Value};

use crate::config::{Experiment, RunConfig};
use crate::output;

/// What a finished run reports back to `main`.
#[derive(Debug)]
pub struct Outcome {
    pub pass: bool,
    pub lines: Vec<String>,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    output::write_json(&cfg.out, "config.json", cfg)?;
    let started = Instant::now();
    let result = match cfg.experiment {
        Experiment::Simulate => simulate(cfg),
        Experiment::ValidateBbm => validate(cfg, Suite::Bbm),
        Experiment::ValidateAll => validate(cfg, Suite::All),
        Experiment::Conjecture => conjecture(cfg),
        Experiment::Sbm => sbm_run(cfg),
    };
    let metadata = json!({
        "timestamp_unix": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "version": env!("CARGO_PKG_VERSION"),
        "seconds": started.elapsed().as_secs_f64(),
    });
    match result {
        Ok((outcome, mut summary)) => {
            summary["metadata"] = metadata;
            summary["status"] = json!(if outcome.pass { "pass" } else { "fail" });
            output::write_json(&cfg.out, "summary.json", &summary)?;
            Ok(outcome)
        }
        Err(e) => {
            let summary = json!({
                "experiment": cfg.experiment,
                "status": "error",
                "partial": true,
                "message": format!("{e:#}"),
                "metadata": metadata,
            });
            output::write_json(&cfg.out, "summary.json", &summary)?;
            Err(e)
        }
    }
}

fn simulate(cfg: &RunConfig) -> Result<(Outcome, Value)> {
    let params = cfg.model_params()?;
    let replicates = cfg.replicates_or(10);
    let buffers = try_replicate_map(replicates, |r| {
        let mut csv = String::new();
        let mut jsonl = String::new();
        let mut sink = |s: &Snapshot<'_>| {
            if cfg.format.csv() {
                output::snapshot_csv(s, &mut csv);
            }
            if cfg.format.json() {
                output::snapshot_jsonl(s, &mut jsonl);
            }
            Ok(())
        };
        let last = ibbm_core::simulate(&params, cfg.seed, r, &mut sink)?;
        Ok((csv, jsonl, last.center_of_mass()))
    })?;
    if cfg.format.csv() {
        let mut text = output::snapshot_header(params.dim);
        buffers.iter().for_each(|b| text.push_str(&b.0));
        output::write_text(&cfg.out, "snapshots.csv", &text)?;
    }
    if cfg.format.json() {
        let text: String = buffers.iter().map(|b| b.1.as_str()).collect();
        output::write_text(&cfg.out, "snapshots.jsonl", &text)?;
    }
    let coms: Vec<&Vec<f64>> = buffers.iter().map(|b| &b.2).collect();
    let summary = json!({
        "experiment": cfg.experiment,
        "replicates": replicates,
        "final_time": params.max_epoch + 1,
        "particles": 1u64 << params.max_epoch,
        "final_com": coms,
    });
    let line = format!("simulated {replicates} replicates to t = {}", params.max_epoch + 1);
    Ok((Outcome { pass: true, lines: vec![line] }, summary))
}

fn validate(cfg: &RunConfig, suite: Suite) -> Result<(Outcome, Value)> {
    let mut sizes = Sizes::default();
    if let Some(r) = cfg.replicates {
        sizes.com_replicates = r;
        sizes.ou_replicates = r;
        sizes.euler_samples = r;
    }
    let mut reports: Vec<CriterionReport> = Vec::new();
    let mut lines = Vec::new();
    for id in suite.ids() {
        let report = run_criterion(id, &sizes, cfg.seed)?;
        lines.push(report.summary_line());
        reports.push(report);
    }
    output::write_json(&cfg.out, "reports.json", &reports)?;
    let pass = reports.iter().all(|r| r.pass);
    let summary = json!({
        "experiment": cfg.experiment,
        "sizes": sizes,
        "criteria": reports.iter().map(|r| json!({
            "id": r.id,
            "name": r.name,
            "pass": r.pass,
            "exploratory": r.exploratory,
            "checks": r.checks.iter().map(|c| json!({"test": c.name, "pass": c.pass})).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    Ok((Outcome { pass, lines }, summary))
}

fn conjecture(cfg: &RunConfig) -> Result<(Outcome, Value)> {
    let params = cfg.model_params()?;
    let g = TestFunction::indicator_box(vec![0.0; cfg.dim], vec![1.0; cfg.dim])?;
    let replicates = cfg.replicates_or(100);
    let report = conjecture_experiment(&params, &g, true, replicates, cfg.seed)?;
    output::write_json(&cfg.out, "conjecture.json", &report)?;
    if cfg.format.csv() {
        let mut text = format!("{}\nreplicate_id,observed,predicted\n", output::SCHEMA_LINE);
        for row in &report.rows {
            text.push_str(&format!("{},{},{}\n", row.replicate_id, row.observed, row.predicted));
        }
        output::write_text(&cfg.out, "conjecture_pairs.csv", &text)?;
    }
    let summary = json!({
        "experiment": cfg.experiment,
        "exploratory": true,
        "ratio": report.ratio,
        "sampled_variance": report.sampled_variance,
        "variance_candidates": report.variance_candidates,
    });
    let line = format!(
        "exploratory: median observed/predicted ratio {:.4} over {} replicates",
        report.ratio.median, report.ratio.n
    );
    Ok((Outcome { pass: true, lines: vec![line] }, summary))
}

fn sbm_run(cfg: &RunConfig) -> Result<(Outcome, Value)> {
    let params = cfg.sbm_params()?;
    let replicates = cfg.replicates_or(1000);
    let ens: Vec<MartingaleSeries> = sbm::sbm_ensemble(&params, cfg.seed, replicates)?;
    if cfg.format.csv() {
        let mut text = output::series_header(params.dim);
        ens.iter().for_each(|s| output::series_csv(s, &mut text));
        output::write_text(&cfg.out, "series.csv", &text)?;
    }
    if cfg.format.json() {
        let mut text = String::new();
        ens.iter().for_each(|s| output::series_jsonl(s, &mut text));
        output::write_text(&cfg.out, "series.jsonl", &text)?;
    }

    let mut checks: Vec<TestReport> = Vec::new();
    let extinction = sbm::extinction_probability(&params, replicates, cfg.seed)?;
    checks.push(extinction.check_scheme(DEFAULT_Z));
    let grid = params.grid();
    let kept = sbm::exclude_capped(&ens).0.len();
    if grid.len() >= 3 && kept >= sbm::MIN_MARTINGALE_REPLICATES {
        let h = params.horizon;
        let t = grid[1..grid.len() - 1]
            .iter()
            .copied()
            .min_by(|a, b| (a - h / 2.0).abs().total_cmp(&(b - h / 2.0).abs()))
            .expect("interior grid point");
        checks.extend(sbm::martingale_check(&ens, t, h - t, params.beta, DEFAULT_Z)?);
    }
    let profile = sbm::second_moment_profile(&ens, params.alpha, params.n);
    let fine = grid.windows(2).all(|w| w[1] - w[0] <= ibbm_core::com::QV_MAX_SPACING + 1e-12);
    let stabilization = if fine && ens.iter().any(|s| s.survived() && !s.capped) {
        let h = params.horizon;
        Some(sbm::com_stabilization(&ens, &[(0.25 * h, 0.5 * h), (0.75 * h, h)])?)
    } else {
        None
    };
    let reports = json!({
        "extinction": extinction,
        "checks": checks,
        "second_moment": profile,
        "second_moment_plateau": 2.0 * params.alpha / (params.beta * params.beta),
        "printed_second_moment_bound": sbm::printed_second_moment_bound(params.alpha, params.beta),
        "com_stabilization": stabilization,
    });
    output::write_json(&cfg.out, "sbm_reports.json", &reports)?;

    let pass = checks.iter().all(|c| c.pass);
    let lines = checks
        .iter()
        .map(|c| format!("[{}] {} (statistic {:.4})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.statistic))
        .collect();
    let summary = json!({
        "experiment": cfg.experiment,
        "replicates": replicates,
        "capped": replicates as usize - kept,
        "checks": checks.iter().map(|c| json!({"test": c.name, "pass": c.pass})).collect::<Vec<_>>(),
    });
    Ok((Outcome { pass, lines }, summary))
}
