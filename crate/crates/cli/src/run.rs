use std::fmt::Write as _;
use std::io::Write;

use teleportsim::channel::{channel_from_tv, choi_entanglement, classify, taunu_to_tv, CLASSIFY_TOL};
use teleportsim::mbnla::success_probability;
use teleportsim::montecarlo::{run_trials, source_alpha};
use teleportsim::teleporter::{fidelity, input_moments, output_moments, tv_parameters};
use teleportsim::{ChannelParams, Error, OutputMoments, RunOptions};

use crate::config::{Mode, RunConfig};
use crate::error::CliError;

pub const CSV_HEADER: [&str; 17] = [
    "step",
    "axis_value",
    "mean_x",
    "mean_y",
    "var_x",
    "var_y",
    "Tq",
    "Vq",
    "tau",
    "nu",
    "tau_err",
    "nu_err",
    "p_success",
    "n_accepted",
    "fidelity",
    "eof_choi",
    "warning",
];

/// Estimates of one run. Missing values are `None` and explain themselves
/// in `warnings`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub moments: Option<OutputMoments>,
    pub t_q: Option<f64>,
    pub v_q: Option<f64>,
    pub channel: Option<ChannelParams>,
    pub tau_err: Option<f64>,
    pub nu_err: Option<f64>,
    pub p_success: Option<f64>,
    pub n_accepted: Option<u64>,
    pub fidelity: Option<f64>,
    pub eof_choi: Option<f64>,
    pub warnings: Vec<String>,
}

impl Row {
    fn finish(&mut self, run: &RunConfig) {
        let Some(ch) = self.channel else { return };
        match choi_entanglement(&ch, run.r_choi) {
            Ok(e) => self.eof_choi = Some(e),
            Err(Error::NonPhysical(_)) | Err(Error::NotPositiveDefinite) => {
                self.warnings.push("non-physical channel has no Choi state".into())
            }
            Err(e) => self.warnings.push(format!("E_F unavailable: {e}")),
        }
    }
}

/// Analytic evaluation of one configuration.
pub fn evaluate_analytic(run: &RunConfig) -> Result<Row, CliError> {
    let cfg = run.teleporter()?;
    let filter = run.filter()?;
    let mut row = Row::default();
    let m = output_moments(&cfg)?;
    row.moments = Some(m);
    row.fidelity = Some(fidelity(&input_moments(&cfg), &m));
    match tv_parameters(&cfg) {
        Ok(tv) => {
            row.t_q = Some(tv.t_q);
            row.v_q = Some(tv.v_q);
            match channel_from_tv(&tv) {
                Ok(ch) => row.channel = Some(ch),
                Err(e) => row.warnings.push(e.to_string()),
            }
        }
        Err(e) => row.warnings.push(e.to_string()),
    }
    row.p_success = Some(success_probability(&filter, source_alpha(&cfg)?)?);
    row.finish(run);
    Ok(row)
}

/// Monte Carlo evaluation of one configuration.
pub fn evaluate_mc(run: &RunConfig, threads: Option<usize>) -> Result<Row, CliError> {
    let cfg = run.teleporter()?;
    let filter = run.filter()?;
    let opts = RunOptions {
        threads,
        ..RunOptions::default()
    };
    let batch = run_trials(&cfg, &filter, run.trials, run.seed, &opts)?;
    let mut row = Row {
        p_success: Some(batch.p_success_hat),
        n_accepted: Some(batch.n_accepted),
        warnings: batch.warnings.clone(),
        ..Row::default()
    };
    if let Some(est) = batch.moments {
        let m = OutputMoments {
            mean_x: est.mean_x.value,
            mean_y: est.mean_y.value,
            var_x: est.var_x.value,
            var_y: est.var_y.value,
        };
        row.moments = Some(m);
        row.fidelity = Some(fidelity(&input_moments(&cfg), &m));
    }
    if let Some(ch) = batch.channel {
        row.t_q = Some(ch.t_q.value);
        row.v_q = Some(ch.v_q.value);
        row.channel = Some(ChannelParams {
            tau: ch.tau.value,
            nu: ch.nu.value,
        });
        row.tau_err = Some(ch.tau.std_err);
        row.nu_err = Some(ch.nu.std_err);
    }
    row.finish(run);
    Ok(row)
}

pub fn evaluate(run: &RunConfig, threads: Option<usize>) -> Result<Row, CliError> {
    match run.mode {
        Mode::Analytic => evaluate_analytic(run),
        Mode::MonteCarlo => evaluate_mc(run, threads),
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.11e}"))
}

fn csv_record(step: usize, axis_value: f64, row: &Row) -> Vec<String> {
    let m = row.moments;
    vec![
        step.to_string(),
        format!("{axis_value:.11e}"),
        cell(m.map(|m| m.mean_x)),
        cell(m.map(|m| m.mean_y)),
        cell(m.map(|m| m.var_x)),
        cell(m.map(|m| m.var_y)),
        cell(row.t_q),
        cell(row.v_q),
        cell(row.channel.map(|c| c.tau)),
        cell(row.channel.map(|c| c.nu)),
        cell(row.tau_err),
        cell(row.nu_err),
        cell(row.p_success),
        row.n_accepted.map_or_else(String::new, |n| n.to_string()),
        cell(row.fidelity),
        cell(row.eof_choi),
        row.warnings.join("; "),
    ]
}

/// Runs the sweep of `run` and writes one CSV row per step. Every step uses
/// the configured seed, so Monte Carlo steps are paired.
pub fn sweep<W: Write>(run: &RunConfig, threads: Option<usize>, out: W) -> Result<Vec<Row>, CliError> {
    run.validate()?;
    let spec = run
        .sweep
        .ok_or_else(|| CliError::Config("sweep needs sweep.axis, sweep.start, sweep.stop and sweep.steps".into()))?;
    let steps: Vec<(f64, RunConfig)> = spec.values().into_iter().map(|v| (v, run.at(spec.axis, v))).collect();
    for (v, step) in &steps {
        step.teleporter()
            .and_then(|_| step.filter())
            .map_err(|e| CliError::Config(format!("{} = {v}: {e}", spec.axis)))?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    let mut rows = Vec::with_capacity(steps.len());
    for (i, (v, step)) in steps.iter().enumerate() {
        let row = evaluate(step, threads)?;
        writer.write_record(csv_record(i, *v, &row))?;
        rows.push(row);
    }
    writer.flush()?;
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.6}"))
}

fn describe(row: &Row, out: &mut String) {
    if let Some(m) = row.moments {
        let _ = writeln!(out, "  output mean      ({:.6}, {:.6})", m.mean_x, m.mean_y);
        let _ = writeln!(out, "  output variance  ({:.6}, {:.6})", m.var_x, m.var_y);
    }
    let _ = writeln!(out, "  fidelity         {}", opt(row.fidelity));
    let _ = writeln!(out, "  T_q, V_q         {}, {}", opt(row.t_q), opt(row.v_q));
    match row.channel {
        Some(ch) => {
            let err = match (row.tau_err, row.nu_err) {
                (Some(a), Some(b)) => format!(" (± {a:.6}, ± {b:.6})"),
                _ => String::new(),
            };
            let class = classify(&ch, CLASSIFY_TOL);
            let _ = writeln!(out, "  tau, nu          {:.6}, {:.6}{err}", ch.tau, ch.nu);
            let _ = writeln!(out, "  channel          {}", class.kind);
        }
        None => {
            let _ = writeln!(out, "  tau, nu          n/a");
        }
    }
    let _ = writeln!(out, "  p_success        {}", opt(row.p_success));
    if let Some(n) = row.n_accepted {
        let _ = writeln!(out, "  accepted         {n}");
    }
    let _ = writeln!(out, "  E_F(Choi)        {}", opt(row.eof_choi));
    for w in &row.warnings {
        let _ = writeln!(out, "  warning: {w}");
    }
}

/// Single run. In Monte Carlo mode the analytic prediction is printed
/// alongside for comparison.
pub fn simulate(run: &RunConfig, threads: Option<usize>) -> Result<String, CliError> {
    run.validate()?;
    let analytic = evaluate_analytic(run)?;
    let mut out = String::new();
    let _ = writeln!(out, "analytic");
    describe(&analytic, &mut out);
    if run.mode == Mode::MonteCarlo {
        let mc = evaluate_mc(run, threads)?;
        let _ = writeln!(out, "monte carlo ({} trials, seed {})", run.trials, run.seed);
        describe(&mc, &mut out);
    }
    Ok(out)
}

/// Classification, physicality, `(T_q, V_q)` and Choi entanglement of a
/// `(τ, ν)` pair.
pub fn channel_map(tau: f64, nu: f64, r_choi: f64) -> Result<String, CliError> {
    if !(tau.is_finite() && nu.is_finite() && r_choi.is_finite()) {
        return Err(CliError::Config("tau, nu and r-choi must be finite".into()));
    }
    let p = ChannelParams::new(tau, nu).map_err(|e| CliError::Config(e.to_string()))?;
    if r_choi <= 0.0 {
        return Err(CliError::Config(format!("r-choi = {r_choi} must be positive")));
    }
    let class = classify(&p, CLASSIFY_TOL);
    let mut out = String::new();
    let _ = writeln!(out, "tau = {tau}, nu = {nu}");
    let _ = writeln!(out, "class     {}", class.kind);
    if let Some(chi) = class.chi {
        let _ = writeln!(out, "chi       {chi:.6}");
    }
    let _ = writeln!(out, "physical  {}", p.is_physical(CLASSIFY_TOL));
    match taunu_to_tv(&p) {
        Ok((t, v)) => {
            let _ = writeln!(out, "T_q, V_q  {t:.6}, {v:.6}");
        }
        Err(e) => {
            let _ = writeln!(out, "T_q, V_q  n/a ({e})");
        }
    }
    match choi_entanglement(&p, r_choi) {
        Ok(e) => {
            let _ = writeln!(out, "E_F(Choi) {e:.6} (r = {r_choi})");
        }
        Err(_) => {
            let _ = writeln!(out, "E_F(Choi) n/a (no physical Choi state)");
        }
    }
    Ok(out)
}
