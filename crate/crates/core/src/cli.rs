//! The `wq` batch front end. Each subcommand loads a JSON measure spec, runs
//! one library operation and writes a CSV or JSON report that embeds the
//! [`RunConfig`] and the library [`VERSION`]. Reports depend only on the
//! config, never on `--jobs`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{self, DP_RESOLUTION_PER_POINT};
use crate::cantor;
use crate::check;
use crate::error::{invalid, Result};
use crate::format::g12;
use crate::measures::{Measure, MeasureSpec};
use crate::quantizer::{self, InitLaw, QuadratureSpec, QuantizeOptions, QuantizerResult};
use crate::VERSION;

/// Exit code of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code of usage, spec and check failures.
pub const EXIT_ERROR: i32 = 1;
/// Exit code of a run whose iteration did not converge; the report is
/// still written.
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wq", version, about = "Optimal N-point quantization of measures under Wasserstein distances")]
pub struct Cli {
    /// Worker threads. Output does not depend on it.
    #[arg(long, global = true, env = "WQ_DEFAULT_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Lloyd iteration with restarts.
    Lloyd,
    /// Exact dynamic programming over a fine partition, 1-D only.
    Dp,
    /// Greedy covering baseline.
    Cover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// Initial points drawn from the measure.
    Measure,
    /// Stratified initial points from the predicted support density.
    Predicted,
}

impl From<Init> for InitLaw {
    fn from(i: Init) -> Self {
        match i {
            Init::Measure => InitLaw::Measure,
            Init::Predicted => InitLaw::PredictedDensity,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON measure spec.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// `grid:<nodes per axis>` or `mc:<nodes>[:<seed>]`.
    #[arg(long, value_parser = parse_quad)]
    pub quad: Option<QuadratureSpec>,
    /// Relative energy decrease below which Lloyd stops.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, value_enum)]
    pub init: Option<Init>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Best N-point support of a measure.
    Quantize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Method::Lloyd)]
        method: Method,
    },
    /// Quantization error over a list of N and its log-log slope.
    RateScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        /// Closed-form errors of the Cantor measure instead of quantizing.
        #[arg(long)]
        exact: bool,
    },
    /// Closed-form Cantor errors for N = 1..=n-max.
    Cantor {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_max: u64,
    },
    /// Estimate of the unit-cube constant.
    Theta {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<usize>,
        /// Independent Lloyd runs per N, seeded from `--seed` upwards.
        #[arg(long, default_value_t = 8)]
        seeds: u64,
    },
    /// Support points against the predicted density.
    SupportLaw {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        bins: usize,
        /// Defaults to `dp` on the line and `lloyd` otherwise.
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Per-region average point energies.
    Equidist {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        cells: usize,
    },
    /// Randomized property suites for transport and quantization.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Also validate a deliberately corrupted plan.
        #[arg(long)]
        inject_fault: bool,
    },
}

/// Everything a report depends on, echoed into it.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub measure: Option<String>,
    pub measure_spec: Option<MeasureSpec>,
    pub p: f64,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N_list", skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad: Option<QuadratureSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<InitLaw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polish_max_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
    pub out: Option<String>,
    pub format: Format,
}

/// A finished run: the report text and the exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub report: String,
    pub code: i32,
    /// Printed to stderr when nonempty.
    pub message: Option<String>,
}

fn parse_quad(s: &str) -> std::result::Result<QuadratureSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.parse::<u64>().map_err(|_| format!("bad number `{t}` in quadrature `{s}`"));
    match parts.as_slice() {
        ["grid", n] => Ok(QuadratureSpec::grid(num(n)? as usize)),
        ["mc", n] => Ok(QuadratureSpec::monte_carlo(num(n)? as usize, 0)),
        ["mc", n, seed] => Ok(QuadratureSpec::monte_carlo(num(n)? as usize, num(seed)?)),
        _ => Err(format!("quadrature `{s}` is not grid:<n> or mc:<n>[:<seed>]")),
    }
}

fn load_measure(path: &Path) -> Result<(MeasureSpec, Measure)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid!("cannot read measure spec {}: {e}", path.display()))?;
    let spec = MeasureSpec::from_json(&text)?;
    let measure = spec.build()?;
    Ok((spec, measure))
}

fn require_n(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(invalid!("N must be ≥ 1"));
    }
    Ok(n)
}

struct Prepared {
    config: RunConfig,
    measure: Option<Measure>,
}

fn prepare(command: &str, common: &Common, default_measure: Option<MeasureSpec>) -> Result<Prepared> {
    let (path, spec, measure) = match (&common.measure, default_measure) {
        (Some(p), _) => {
            let (spec, m) = load_measure(p)?;
            (Some(p.display().to_string()), Some(spec), Some(m))
        }
        (None, Some(spec)) => {
            let m = spec.build()?;
            (None, Some(spec), Some(m))
        }
        (None, None) => (None, None, None),
    };
    Ok(Prepared {
        config: RunConfig {
            command: command.into(),
            measure: path,
            measure_spec: spec,
            p: common.p,
            n: None,
            n_list: None,
            seed: common.seed,
            restarts: None,
            quad: None,
            tol: None,
            max_iters: None,
            init: None,
            polish_max_n: None,
            method: None,
            extra: None,
            out: common.output.out.as_ref().map(|p| p.display().to_string()),
            format: common.output.format,
        },
        measure,
    })
}

fn need_measure(m: Option<Measure>) -> Result<Measure> {
    m.ok_or_else(|| invalid!("--measure is required"))
}

/// Lloyd options from the flags, with per-command defaults, recorded in the
/// config.
fn lloyd_options(common: &Common, config: &mut RunConfig, restarts: usize, tol: f64, init: Init) -> QuantizeOptions {
    let base = QuantizeOptions::default();
    let opts = QuantizeOptions {
        restarts: common.restarts.unwrap_or(restarts),
        max_iters: common.max_iters.unwrap_or(base.max_iters),
        tol: common.tol.unwrap_or(tol),
        seed: common.seed,
        quad: common.quad,
        init: common.init.unwrap_or(init).into(),
        polish_max_n: base.polish_max_n,
    };
    config.restarts = Some(opts.restarts);
    config.max_iters = Some(opts.max_iters);
    config.tol = Some(opts.tol);
    config.quad = opts.quad;
    config.init = Some(opts.init);
    config.polish_max_n = Some(opts.polish_max_n);
    opts
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'a str,
    config: &'a RunConfig,
    result: &'a T,
}

fn render<T: Serialize>(config: &RunConfig, result: &T, csv: impl FnOnce() -> String) -> Result<String> {
    Ok(match config.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&Envelope { version: VERSION, config, result })?;
            s.push('\n');
            s
        }
        Format::Csv => format!("# {VERSION}\n# config={}\n{}", serde_json::to_string(config)?, csv()),
    })
}

fn quantizer_csv(r: &QuantizerResult) -> String {
    let d = r.dim();
    let mut s = String::from("index");
    for k in 1..=d {
        s.push_str(&format!(",x{k}"));
    }
    s.push_str(",mass\n");
    for (i, (x, m)) in r.points.iter().zip(&r.masses).enumerate() {
        s.push_str(&i.to_string());
        for c in x {
            s.push(',');
            s.push_str(&g12(*c));
        }
        s.push_str(&format!(",{}\n", g12(*m)));
    }
    s.push_str(&format!(
        "# energy={},W_p={},iterations={},converged={}\n",
        g12(r.energy),
        g12(r.wasserstein()),
        r.iterations,
        r.converged
    ));
    s
}

/// Headline numbers of a quantization, for reports built on top of one.
#[derive(Debug, Serialize)]
struct RunSummary {
    #[serde(rename = "N")]
    n: usize,
    energy: f64,
    wasserstein: f64,
    iterations: usize,
    converged: bool,
}

impl From<&QuantizerResult> for RunSummary {
    fn from(r: &QuantizerResult) -> Self {
        Self { n: r.n, energy: r.energy, wasserstein: r.wasserstein(), iterations: r.iterations, converged: r.converged }
    }
}

fn converged_code(converged: bool) -> (i32, Option<String>) {
    if converged {
        (EXIT_OK, None)
    } else {
        (EXIT_NOT_CONVERGED, Some("iteration limit reached before convergence; report written".into()))
    }
}

fn run_quantize(common: &Common, n: usize, method: Method) -> Result<Outcome> {
    let mut prep = prepare("quantize", common, None)?;
    let measure = need_measure(prep.measure.take())?;
    let n = require_n(n)?;
    let config = &mut prep.config;
    config.n = Some(n);
    config.method = Some(method);
    let (result, delta) = match method {
        Method::Lloyd => {
            let opts = lloyd_options(common, config, 4, QuantizeOptions::default().tol, Init::Measure);
            (quantizer::quantize(&measure, n, common.p, &opts)?, None)
        }
        Method::Dp => (quantizer::quantize_1d_dp(&measure, n, common.p, DP_RESOLUTION_PER_POINT * n)?, None),
        Method::Cover => {
            let c = quantizer::cover_baseline(&measure, n, common.p, common.seed)?;
            (c.result, Some(c.delta))
        }
    };
    let report = match delta {
        None => render(config, &result, || quantizer_csv(&result))?,
        Some(delta) => {
            let cover = quantizer::CoverResult { result: result.clone(), delta };
            render(config, &cover, || format!("{}# delta={}\n", quantizer_csv(&result), g12(delta)))?
        }
    };
    let (code, message) = converged_code(result.converged);
    Ok(Outcome { report, code, message })
}

#[derive(Serialize)]
struct RateOutput {
    #[serde(flatten)]
    scan: analysis::RateScanReport,
    /// `-1 / s` for the largest component dimension `s`.
    expected_slope: Option<f64>,
}

fn run_rate_scan(common: &Common, n_list: &[usize], exact: bool) -> Result<Outcome> {
    if n_list.is_empty() {
        return Err(invalid!("the N list is empty"));
    }
    for &n in n_list {
        require_n(n)?;
    }
    let mut prep = prepare("rate-scan", common, if exact { Some(MeasureSpec::Cantor {}) } else { None })?;
    let measure = need_measure(prep.measure.take())?;
    let config = &mut prep.config;
    config.n_list = Some(n_list.to_vec());
    config.extra = Some(serde_json::json!({ "exact": exact }));
    let scan = if exact {
        analysis::cantor_exact_scan(common.p, n_list)?
    } else {
        let opts = lloyd_options(common, config, 4, QuantizeOptions::default().tol, Init::Measure);
        analysis::rate_scan(&measure, common.p, n_list, &opts)?
    };
    let s = analysis::component_dimension(&measure);
    let out = RateOutput { scan, expected_slope: (s > 0.0).then(|| -1.0 / s) };
    let report = render(config, &out, || {
        let mut csv = out.scan.to_csv();
        if let Some(e) = out.expected_slope {
            csv.push_str(&format!("# expected_slope={}\n", g12(e)));
        }
        csv
    })?;
    Ok(Outcome { report, code: EXIT_OK, message: None })
}

fn run_cantor(common: &Common, n_max: u64) -> Result<Outcome> {
    let mut prep = prepare("cantor", common, Some(MeasureSpec::Cantor {}))?;
    prep.config.extra = Some(serde_json::json!({ "n_max": n_max }));
    let table = cantor::scan(n_max, common.p)?;
    let report = render(&prep.config, &table, || {
        format!(
            "{}# c1={},sup={},inf={},ratio={}\n",
            table.to_csv(),
            g12(table.c1),
            g12(table.sup),
            g12(table.inf),
            g12(table.ratio)
        )
    })?;
    Ok(Outcome { report, code: EXIT_OK, message: None })
}

fn default_theta_n(d: usize) -> Vec<usize> {
    match d {
        1 => vec![256],
        2 => vec![256, 1024],
        _ => vec![512],
    }
}

fn run_theta(common: &Common, d: usize, n_list: &[usize], seeds: u64) -> Result<Outcome> {
    if !(1..=3).contains(&d) {
        return Err(invalid!("d must be 1, 2 or 3, got {d}"));
    }
    let cube = MeasureSpec::UniformBox { bounds: vec![[0.0, 1.0]; d] };
    let mut prep = prepare("theta", common, Some(cube))?;
    let n_list = if n_list.is_empty() { default_theta_n(d) } else { n_list.to_vec() };
    for &n in &n_list {
        require_n(n)?;
    }
    if seeds == 0 {
        return Err(invalid!("need at least one seed"));
    }
    let config = &mut prep.config;
    config.n_list = Some(n_list.clone());
    config.extra = Some(serde_json::json!({ "d": d, "seeds": seeds }));
    let opts = if d == 1 {
        QuantizeOptions::default()
    } else {
        lloyd_options(common, config, 1, 1e-6, Init::Measure)
    };
    let seed_list: Vec<u64> = (0..seeds).map(|k| common.seed.wrapping_add(k)).collect();
    let est = analysis::estimate_theta(d, common.p, &n_list, &seed_list, &opts)?;
    let report = render(config, &est, || {
        let mut s = String::from("N,scaled,seed\n");
        for (n, v, seed) in &est.per_n {
            s.push_str(&format!("{n},{},{seed}\n", g12(*v)));
        }
        s.push_str(&format!("# theta_hat={},stderr={}", g12(est.theta_hat), g12(est.stderr)));
        if let Some(k) = &est.known {
            s.push_str(&format!(",known={}", g12(k.value)));
            if let Some(printed) = k.printed {
                s.push_str(&format!(",printed={}", g12(printed)));
            }
        }
        s.push('\n');
        s
    })?;
    Ok(Outcome { report, code: EXIT_OK, message: None })
}

fn gridded(measure: &Measure) -> Result<&crate::measures::GriddedDensity> {
    match measure {
        Measure::Gridded(g) => Ok(g),
        _ => Err(invalid!("this command needs a uniform_box or piecewise density")),
    }
}

#[derive(Serialize)]
struct SupportOutput {
    quantizer: RunSummary,
    report: analysis::SupportLawReport,
}

fn run_support_law(common: &Common, n: usize, bins: usize, method: Option<Method>) -> Result<Outcome> {
    let mut prep = prepare("support-law", common, None)?;
    let measure = need_measure(prep.measure.take())?;
    let density = gridded(&measure)?;
    let n = require_n(n)?;
    let method = method.unwrap_or(if density.dim() == 1 { Method::Dp } else { Method::Lloyd });
    let config = &mut prep.config;
    config.n = Some(n);
    config.method = Some(method);
    config.extra = Some(serde_json::json!({ "bins": bins }));
    let result = match method {
        Method::Dp => quantizer::quantize_1d_dp(&measure, n, common.p, DP_RESOLUTION_PER_POINT * n)?,
        Method::Lloyd => {
            let opts = lloyd_options(common, config, 4, QuantizeOptions::default().tol, Init::Measure);
            quantizer::quantize(&measure, n, common.p, &opts)?
        }
        Method::Cover => quantizer::cover_baseline(&measure, n, common.p, common.seed)?.result,
    };
    let report = analysis::support_density_report(&result, density, common.p, bins)?;
    let d = density.dim();
    let out = SupportOutput { quantizer: (&result).into(), report };
    let text = render(config, &out, || {
        let mut s = String::new();
        for k in 1..=d {
            s.push_str(&format!("lower{k},"));
        }
        s.push_str("observed,predicted\n");
        for b in &out.report.histogram {
            for c in &b.lower[..d] {
                s.push_str(&g12(*c));
                s.push(',');
            }
            s.push_str(&format!("{},{}\n", g12(b.observed), g12(b.predicted)));
        }
        let ks = out.report.ks.map_or("none".into(), g12);
        s.push_str(&format!("# beta={},ks={ks},chi_square={}\n", g12(out.report.beta), g12(out.report.chi_square)));
        s
    })?;
    let (code, message) = converged_code(result.converged);
    Ok(Outcome { report: text, code, message })
}

#[derive(Serialize)]
struct EquidistOutput {
    quantizer: RunSummary,
    report: analysis::EquidistReport,
}

fn run_equidist(common: &Common, n: usize, cells: usize) -> Result<Outcome> {
    let square = MeasureSpec::UniformBox { bounds: vec![[0.0, 1.0]; 2] };
    let mut prep = prepare("equidist", common, Some(square))?;
    let measure = need_measure(prep.measure.take())?;
    let density = gridded(&measure)?;
    let n = require_n(n)?;
    let config = &mut prep.config;
    config.n = Some(n);
    config.extra = Some(serde_json::json!({ "cells": cells }));
    let opts = lloyd_options(common, config, 1, QuantizeOptions::default().tol, Init::Predicted);
    let result = quantizer::quantize(&measure, n, common.p, &opts)?;
    let report = analysis::equidist_report(&result, density, common.p, cells)?;
    let out = EquidistOutput { quantizer: (&result).into(), report };
    let text = render(config, &out, || {
        let mut s = String::from("cell,points,scaled_avg_energy\n");
        for c in &out.report.cells {
            let idx: Vec<String> = c.index.iter().map(usize::to_string).collect();
            s.push_str(&format!("{},{},{}\n", idx.join("-"), c.points, g12(c.scaled_avg_energy)));
        }
        s.push_str(&format!(
            "# cv={},spread={},empty_cells={}",
            g12(out.report.coefficient_of_variation),
            g12(out.report.spread),
            out.report.empty_cells.len()
        ));
        if let Some(l) = out.report.predicted_limit {
            s.push_str(&format!(",predicted_limit={}", g12(l)));
        }
        s.push('\n');
        s
    })?;
    let (code, message) = converged_code(result.converged);
    Ok(Outcome { report: text, code, message })
}

fn run_check(common: &Common, trials: usize, inject_fault: bool) -> Result<Outcome> {
    let mut prep = prepare("check", common, None)?;
    prep.config.extra = Some(serde_json::json!({ "trials": trials, "inject_fault": inject_fault }));
    let mut summary = check::run_checks(trials, common.seed)?;
    if inject_fault {
        summary.properties.push(check::negative_control());
        summary.all_passed = false;
    }
    let report = render(&prep.config, &summary, || {
        let mut s = String::from("property,trials,passed,failed,worst\n");
        for p in &summary.properties {
            s.push_str(&format!("{},{},{},{},{}\n", p.name, p.trials, p.passed, p.failed, g12(p.worst)));
        }
        s
    })?;
    let failures: Vec<String> = summary
        .properties
        .iter()
        .filter(|p| p.failed > 0)
        .map(|p| format!("{}: {}", p.name, p.first_failure.as_deref().unwrap_or("failed")))
        .collect();
    Ok(if failures.is_empty() {
        Outcome { report, code: EXIT_OK, message: None }
    } else {
        Outcome { report, code: EXIT_ERROR, message: Some(format!("check failed: {}", failures.join("; "))) }
    })
}

fn output_of(command: &Command) -> &Output {
    match command {
        Command::Quantize { common, .. }
        | Command::RateScan { common, .. }
        | Command::Cantor { common, .. }
        | Command::Theta { common, .. }
        | Command::SupportLaw { common, .. }
        | Command::Equidist { common, .. }
        | Command::Check { common, .. } => &common.output,
    }
}

/// Runs a parsed command line and returns the report without writing it.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let go = || match &cli.command {
        Command::Quantize { common, n, method } => run_quantize(common, *n, *method),
        Command::RateScan { common, n_list, exact } => run_rate_scan(common, n_list, *exact),
        Command::Cantor { common, n_max } => run_cantor(common, *n_max),
        Command::Theta { common, d, n_list, seeds } => run_theta(common, *d, n_list, *seeds),
        Command::SupportLaw { common, n, bins, method } => run_support_law(common, *n, *bins, *method),
        Command::Equidist { common, n, cells } => run_equidist(common, *n, *cells),
        Command::Check { common, trials, inject_fault } => run_check(common, *trials, *inject_fault),
    };
    match cli.jobs {
        None => go(),
        Some(0) => Err(invalid!("--jobs must be >= 1")),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| invalid!("cannot start {j} workers: {e}"))?
            .install(go),
    }
}

/// Parses `args`, runs the command, writes the report and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("wq: {e}");
            return EXIT_ERROR;
        }
    };
    let written = match &output_of(&cli.command).out {
        Some(path) => std::fs::write(path, &outcome.report),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(outcome.report.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("wq: cannot write report: {e}");
        return EXIT_ERROR;
    }
    if let Some(m) = &outcome.message {
        eprintln!("wq: {m}");
    }
    outcome.code
}
