use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use gartfima::acvf::{acvf_fft, full_acvf, gartfima_core_acvf};
use gartfima::estimate::{
    fit, monte_carlo, parameter_names, select_orders, Estimator, EstimationResult, FitOptions, MonteCarloConfig,
    OptimizeOptions,
};
use gartfima::forecast::{compare_models, one_step_forecasts, split_index, Candidate, CompareOptions, ForecastOptions};
use gartfima::simulate::{derive_stream_seed, simulate, SimulationConfig};
use gartfima::spectrum::spectral_density;
use gartfima::{ModelFamily, ModelSpec};
use serde::Serialize;
use serde_json::{json, Value};

use crate::io::{fmt_num, ingest_csv, json_number, pretty, to_json, write_file, CsvTable, Output};
use crate::manifest::RunManifest;
use crate::CliError;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a path and write it as a one-column CSV with header `x`.
    Simulate(SimulateArgs),
    /// Fit a model to a CSV series by log-periodogram NLS or Whittle.
    Estimate(EstimateArgs),
    /// Evaluate the spectral density on an even grid over (0, π].
    Spectrum(SpectrumArgs),
    /// Theoretical autocovariances γ(0..=max-lag).
    Acvf(AcvfArgs),
    /// Rolling one-step forecasts over the test segment of a series.
    Forecast(ForecastArgs),
    /// Fit several candidate models and rank them by test RMSE.
    Compare(CompareArgs),
    /// Simulate-and-fit study with box-plot summaries.
    Montecarlo(MonteCarloArgs),
    /// Choose AR and MA orders by AIC on the Whittle objective.
    SelectOrders(SelectArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Memory parameter d.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub d: f64,
    /// Tempering parameter λ ≥ 0.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Gegenbauer frequency parameter u.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub u: f64,
    /// Innovation variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// AR coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub ar: Vec<f64>,
    /// MA coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub ma: Vec<f64>,
    /// JSON model file (flat keys ar, ma, d, lambda, u, sigma2, or an
    /// `estimate` output); overrides the flags above.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Require the open GARTFIMA region (|u| < 1, |d| < 1/2).
    #[arg(long)]
    pub strict: bool,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, CliError> {
        let spec = match &self.model {
            Some(path) => read_model(path)?,
            None => ModelSpec { ar: self.ar.clone(), ma: self.ma.clone(), d: self.d, lambda: self.lambda, u: self.u, sigma2: self.sigma2 },
        };
        if self.strict {
            spec.ensure_valid(ModelFamily::Gartfima)?;
        } else {
            spec.ensure_valid_reduced()?;
        }
        Ok(spec)
    }
}

fn read_model(path: &Path) -> Result<ModelSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let inner = v.get("model").cloned().unwrap_or(v);
    serde_json::from_value(inner).map_err(|e| CliError::Data(format!("{}: not a model: {e}", path.display())))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// One-column CSV (optional header).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Zero-based column to read.
    #[arg(long, default_value_t = 0)]
    pub column: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long, default_value = "gartfima", value_parser = parse_family)]
    #[serde(serialize_with = "ser_display")]
    pub family: ModelFamily,
    #[arg(long, default_value_t = 0)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub q: usize,
    /// Fraction of the harmonic frequencies used by NLS.
    #[arg(long, default_value_t = 1.0)]
    pub band_frac: f64,
    /// Optimizer starting points.
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    /// Evaluation budget per optimizer run.
    #[arg(long, default_value_t = 4000)]
    pub max_evals: usize,
}

impl FitArgs {
    fn options(&self) -> FitOptions {
        FitOptions {
            family: self.family,
            band_frac: self.band_frac,
            optimizer: OptimizeOptions { restarts: self.restarts, max_evals: self.max_evals, ..OptimizeOptions::default() },
        }
    }
}

fn parse_family(s: &str) -> Result<ModelFamily, String> {
    s.parse().map_err(|e: gartfima::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Estimator, String> {
    s.parse().map_err(|e: gartfima::Error| e.to_string())
}

fn ser_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn ser_display_opt<T: std::fmt::Display, S: serde::Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.collect_str(x),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub burnin: usize,
    /// Truncation of the MA(∞) filter.
    #[arg(long, default_value_t = 1000)]
    pub trunc: usize,
    /// Output CSV (stdout if omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "nls", value_parser = parse_method)]
    #[serde(serialize_with = "ser_display")]
    pub method: Estimator,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Output JSON (stdout if omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Grid size N; frequencies are πk/N, k = 1..=N.
    #[arg(long, default_value_t = 512)]
    pub points: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AcvfRoute {
    Auto,
    Series,
    Fft,
}

#[derive(Debug, Args, Serialize)]
pub struct AcvfArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 20)]
    pub max_lag: usize,
    #[arg(long, value_enum, default_value_t = AcvfRoute::Auto)]
    pub route: AcvfRoute,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Fit the model on the training segment instead of using the model flags.
    #[arg(long, value_parser = parse_method)]
    #[serde(serialize_with = "ser_display_opt")]
    pub fit_method: Option<Estimator>,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Training fraction.
    #[arg(long, default_value_t = 0.75)]
    pub split: f64,
    /// π-weight truncation (default min(train length, 1000)).
    #[arg(long)]
    pub trunc: Option<usize>,
    #[arg(long)]
    pub no_demean: bool,
    /// Output JSON report (stdout if omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Residual CSV with header `t,actual,predicted,residual`.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Candidates as FAMILY:p:q, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "ARMA:1:0,ARFIMA:1:0,ARTFIMA:1:0,GARMA:1:0,GARTFIMA:1:0", value_parser = parse_candidate)]
    #[serde(serialize_with = "ser_candidates")]
    pub candidates: Vec<Candidate>,
    #[arg(long, default_value = "whittle", value_parser = parse_method)]
    #[serde(serialize_with = "ser_display")]
    pub method: Estimator,
    #[arg(long, default_value_t = 0.75)]
    pub split: f64,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn parse_candidate(s: &str) -> Result<Candidate, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [fam, p, q] = parts[..] else {
        return Err(format!("expected FAMILY:p:q, got '{s}'"));
    };
    let family = parse_family(fam)?;
    let p = p.parse().map_err(|_| format!("bad AR order in '{s}'"))?;
    let q = q.parse().map_err(|_| format!("bad MA order in '{s}'"))?;
    Ok(Candidate::new(family, p, q))
}

fn ser_candidates<S: serde::Serializer>(v: &[Candidate], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|c| format!("{}:{}:{}", c.family, c.p, c.q)))
}

#[derive(Debug, Args, Serialize)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value = "nls", value_parser = parse_method)]
    #[serde(serialize_with = "ser_display")]
    pub method: Estimator,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub burnin: usize,
    #[arg(long, default_value_t = 1000)]
    pub trunc: usize,
    /// Per-replication CSV (stdout if omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Box-plot summary JSON (stderr if omitted).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 2)]
    pub p_max: usize,
    #[arg(long, default_value_t = 2)]
    pub q_max: usize,
    #[arg(long, default_value = "gartfima", value_parser = parse_family)]
    #[serde(serialize_with = "ser_display")]
    pub family: ModelFamily,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Acvf(a) => cmd_acvf(a),
        Command::Forecast(a) => cmd_forecast(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Montecarlo(a) => cmd_montecarlo(a),
        Command::SelectOrders(a) => cmd_select(a),
    }
}

fn options<T: Serialize>(a: &T) -> Value {
    to_json(a)
}

fn spec_json(spec: &ModelSpec) -> Value {
    to_json(spec)
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let spec = a.model.spec()?;
    let cfg = SimulationConfig { n: a.n, seed: a.seed, burnin: a.burnin, trunc_len: a.trunc };
    let x = simulate(&spec, &cfg)?;
    let mut t = CsvTable::new(&["x"]);
    for v in &x {
        t.row(&[fmt_num(*v)]);
    }
    Output::new(a.out.clone()).write(&t.finish())?;
    RunManifest::new("simulate", options(&a)).with_seeds(vec![a.seed]).emit(a.out.as_deref())
}

fn estimate_json(r: &EstimationResult, n: usize) -> Value {
    let v = json!({
        "method": r.method.to_string(),
        "family": r.family.to_string(),
        "n": n,
        "d": r.d_hat,
        "lambda": r.lambda_hat,
        "u": r.u_hat,
        "sigma2": r.sigma2_hat,
        "ar": r.ar_hat,
        "ma": r.ma_hat,
        "intercept": r.intercept_hat,
        "objective": r.objective,
        "converged": r.converged,
        "n_freqs_used": r.n_freqs_used,
        "zero_ordinates_dropped": r.zero_ordinates_dropped,
        "restarts_used": r.restarts_used,
        "evaluations": r.evaluations,
        "model": r.spec(),
    });
    to_json(&v)
}

fn cmd_estimate(a: EstimateArgs) -> Result<(), CliError> {
    let x = ingest_csv(&a.input.input, a.input.column)?;
    let r = fit(&x, a.fit.p, a.fit.q, a.method, &a.fit.options())?;
    Output::new(a.out.clone()).write(&pretty(&estimate_json(&r, x.len())))?;
    RunManifest::new("estimate", options(&a)).with_input(&a.input.input)?.emit(a.out.as_deref())?;
    if !r.converged {
        return Err(CliError::NoConvergence(format!(
            "optimizer did not converge after {} evaluations; best-effort estimates written",
            r.evaluations
        )));
    }
    Ok(())
}

fn cmd_spectrum(a: SpectrumArgs) -> Result<(), CliError> {
    if a.points == 0 {
        return Err(CliError::Usage("--points must be positive".into()));
    }
    let spec = a.model.spec()?;
    let mut t = CsvTable::new(&["omega", "f"]);
    for k in 1..=a.points {
        let w = std::f64::consts::PI * k as f64 / a.points as f64;
        let f = spectral_density(&spec, w)?;
        t.row(&[fmt_num(w), fmt_num(f)]);
    }
    Output::new(a.out.clone()).write(&t.finish())?;
    RunManifest::new("spectrum", options(&a)).emit(a.out.as_deref())
}

fn cmd_acvf(a: AcvfArgs) -> Result<(), CliError> {
    let spec = a.model.spec()?;
    let seq = match a.route {
        AcvfRoute::Auto => full_acvf(&spec, a.max_lag)?,
        AcvfRoute::Fft => acvf_fft(&spec, a.max_lag)?,
        AcvfRoute::Series => {
            if spec.p() > 0 || spec.q() > 0 {
                return Err(CliError::Usage("the series route needs p = q = 0; use --route auto".into()));
            }
            gartfima_core_acvf(spec.d, spec.lambda, spec.u, spec.sigma2, a.max_lag)?
        }
    };
    if let Some(w) = &seq.warning {
        eprintln!("warning: {w}");
    }
    let mut t = CsvTable::new(&["lag", "gamma"]);
    for (h, g) in seq.values.iter().enumerate() {
        t.row(&[h.to_string(), fmt_num(*g)]);
    }
    Output::new(a.out.clone()).write(&t.finish())?;
    RunManifest::new("acvf", options(&a)).emit(a.out.as_deref())
}

fn cmd_forecast(a: ForecastArgs) -> Result<(), CliError> {
    let x = ingest_csv(&a.input.input, a.input.column)?;
    let fopts = ForecastOptions { split_frac: a.split, demean: !a.no_demean, trunc_len: a.trunc };
    let (spec, fitted) = match a.fit_method {
        Some(method) => {
            let split = split_index(x.len(), a.split)?;
            let r = fit(&x[..split], a.fit.p, a.fit.q, method, &a.fit.options())?;
            (r.spec(), Some(estimate_json(&r, split)))
        }
        None => (a.model.spec()?, None),
    };
    let rep = one_step_forecasts(&spec, &x, &fopts)?;
    let report = json!({
        "n": x.len(),
        "split_index": rep.split_index,
        "n_test": rep.predictions.len(),
        "train_mean": json_number(rep.train_mean),
        "trunc_len": rep.trunc_len,
        "rmse": json_number(rep.rmse),
        "residual_mean": json_number(rep.residual_mean),
        "residual_variance": json_number(rep.residual_variance),
        "model": spec_json(&spec),
        "fit": fitted,
    });
    Output::new(a.out.clone()).write(&pretty(&report))?;
    if let Some(path) = &a.residuals {
        let mut t = CsvTable::new(&["t", "actual", "predicted", "residual"]);
        for (i, ((y, p), e)) in rep.actual.iter().zip(&rep.predictions).zip(&rep.residuals).enumerate() {
            t.row(&[(rep.split_index + i).to_string(), fmt_num(*y), fmt_num(*p), fmt_num(*e)]);
        }
        write_file(path, &t.finish())?;
    }
    RunManifest::new("forecast", options(&a)).with_input(&a.input.input)?.emit(a.out.as_deref())
}

fn cmd_compare(a: CompareArgs) -> Result<(), CliError> {
    let x = ingest_csv(&a.input.input, a.input.column)?;
    let opts = CompareOptions {
        method: a.method,
        forecast: ForecastOptions { split_frac: a.split, ..ForecastOptions::default() },
        fit: FitOptions { optimizer: OptimizeOptions { restarts: a.restarts, ..OptimizeOptions::default() }, ..FitOptions::default() },
    };
    let rows = compare_models(&x, &a.candidates, &opts)?;
    let table: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "family": r.candidate.family.to_string(),
                "p": r.candidate.p,
                "q": r.candidate.q,
                "rmse": r.rmse.map(json_number),
                "error": r.error,
                "fit": r.fit.as_ref().map(|f| estimate_json(f, split_index(x.len(), a.split).unwrap_or(0))),
            })
        })
        .collect();
    let out = json!({ "method": a.method.to_string(), "n": x.len(), "rows": table });
    Output::new(a.out.clone()).write(&pretty(&out))?;
    RunManifest::new("compare", options(&a)).with_input(&a.input.input)?.emit(a.out.as_deref())
}

fn cmd_montecarlo(a: MonteCarloArgs) -> Result<(), CliError> {
    let truth = a.model.spec()?;
    let cfg = MonteCarloConfig {
        n: a.n,
        replications: a.reps,
        method: a.method,
        p: a.fit.p,
        q: a.fit.q,
        base_seed: a.seed,
        burnin: a.burnin,
        trunc_len: a.trunc,
        fit: a.fit.options(),
    };
    let s = monte_carlo(&truth, &cfg)?;
    let names = parameter_names(s.family, cfg.p, cfg.q);
    let mut header = vec!["replication", "seed", "converged", "error"];
    header.extend(names.iter().map(String::as_str));
    let mut t = CsvTable::new(&header);
    for r in &s.replications {
        let mut row = vec![r.index.to_string(), r.seed.to_string(), r.converged.to_string(), csv_field(r.error.as_deref().unwrap_or(""))];
        if r.error.is_some() {
            row.extend(names.iter().map(|_| String::new()));
        } else {
            row.extend(r.estimates.iter().map(|v| fmt_num(*v)));
        }
        t.row(&row);
    }
    Output::new(a.out.clone()).write(&t.finish())?;

    let params: Vec<Value> = s
        .parameters
        .iter()
        .map(|p| json!({ "name": p.name, "truth": p.truth, "stats": p.stats }))
        .collect();
    let summary = to_json(&json!({
        "method": s.method.to_string(),
        "family": s.family.to_string(),
        "replications": s.replications.len(),
        "failures": s.failures,
        "not_converged": s.not_converged,
        "truth": truth,
        "parameters": params,
    }));
    match &a.summary {
        Some(p) => write_file(p, &pretty(&summary))?,
        None => eprint!("{}", pretty(&summary)),
    }
    let seeds = (0..a.reps as u64).map(|r| derive_stream_seed(a.seed, r)).collect();
    RunManifest::new("montecarlo", options(&a)).with_seeds(seeds).emit(a.out.as_deref())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_select(a: SelectArgs) -> Result<(), CliError> {
    let x = ingest_csv(&a.input.input, a.input.column)?;
    let opts = FitOptions {
        family: a.family,
        optimizer: OptimizeOptions { restarts: a.restarts, ..OptimizeOptions::default() },
        ..FitOptions::default()
    };
    let sel = select_orders(&x, a.p_max, a.q_max, &opts)?;
    Output::new(a.out.clone()).write(&pretty(&to_json(&sel)))?;
    RunManifest::new("select-orders", options(&a)).with_input(&a.input.input)?.emit(a.out.as_deref())
}
