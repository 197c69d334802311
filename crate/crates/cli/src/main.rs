use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use splitgrid::circuit::SplitSystem;
use splitgrid::error::Error;
use splitgrid::fitting::{fit_per_tag, validate, CenterPolicy, FitConfig, SweepSpec};
use splitgrid::glass::{monomial_label, GlassKind};
use splitgrid::io::{
    load_case, load_measurements, load_model, load_template, save_measurements, save_template, write_history,
    write_solve_results, write_stamps, write_validation, StoredTemplate, UnitSystem,
};
use splitgrid::solver::{solve_power_flow_observed, SolveResult, SolverOptions};
use splitgrid::{fit, synthesize, SplitPhasor};

// Writes a stdout line, ignoring a closed pipe so `splitgrid ... | head` exits cleanly.
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Split-circuit power flow and GLASS model fitting.
#[derive(Debug, Parser)]
#[command(name = "splitgrid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the power flow of a case file.
    Solve {
        case: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Per-bus results CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Residual history CSV.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Synthesize measurement records from a physics model.
    Synth {
        model: PathBuf,
        /// Real voltage values: a comma list or `from:to:count`.
        #[arg(long = "v-re", allow_hyphen_values = true)]
        v_re: String,
        /// Imaginary voltage values: a comma list or `from:to:count`.
        #[arg(long = "v-im", default_value = "0", allow_hyphen_values = true)]
        v_im: String,
        /// Tag values (torque for motors); defaults to the model's own torque.
        #[arg(long, allow_hyphen_values = true)]
        tag: Option<String>,
        /// Standard deviation of additive Gaussian noise on each current component.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Smallest acceptable fraction of feasible sweep points.
        #[arg(long = "min-fraction", default_value_t = 0.5)]
        min_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a GLASS template to measurement records.
    Fit {
        measurements: PathBuf,
        #[arg(long)]
        order: u32,
        #[arg(long, value_enum, default_value_t = KindArg::Voltage)]
        kind: KindArg,
        #[arg(long, default_value_t = 0.0)]
        ridge: f64,
        #[arg(long, value_enum, default_value_t = CenterArg::Mean)]
        center: CenterArg,
        /// Unit system the measurements are expressed in.
        #[arg(long, value_enum, default_value_t = UnitsArg::PerUnit)]
        units: UnitsArg,
        /// Fit only records carrying this tag.
        #[arg(long, allow_hyphen_values = true)]
        tag: Option<f64>,
        /// Fit one template per distinct tag; `out` receives a `-<k>` suffix per tag.
        #[arg(long = "per-tag", conflicts_with = "tag")]
        per_tag: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a template's predictions with measurement records.
    Validate {
        template: PathBuf,
        measurements: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Unit system of the measurements; must match the template.
        #[arg(long, value_enum)]
        units: Option<UnitsArg>,
    },
    /// Dump every assembled split-circuit system of a solve.
    ExportStamps {
        case: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
struct SolverArgs {
    /// Tolerance for both the voltage correction and the KCL residual.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = 1.0)]
    damping: f64,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions<f64> {
        SolverOptions {
            tol_v: self.tol,
            tol_kcl: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Voltage,
    Current,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CenterArg {
    Zero,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum UnitsArg {
    PerUnit,
    Si,
}

impl From<UnitsArg> for UnitSystem {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::PerUnit => UnitSystem::PerUnit,
            UnitsArg::Si => UnitSystem::Si,
        }
    }
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self { code: if e.is_numerical() { 2 } else { 1 }, message: e.to_string() }
    }
}

type Outcome = Result<u8, Failure>;

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::input(format!("cannot create {}: {e}", path.display())))
}

fn parse_values(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = |what: &str| Failure::input(format!("invalid value list '{spec}': {what}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("'{}' is not a number", s.trim())));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [from, to, steps] => {
            let (from, to) = (num(from)?, num(to)?);
            let steps: usize = steps.trim().parse().map_err(|_| bad("step count must be a positive integer"))?;
            match steps {
                0 => Err(bad("step count must be a positive integer")),
                1 => Ok(vec![from]),
                _ => Ok((0..steps).map(|k| from + (to - from) * k as f64 / (steps - 1) as f64).collect()),
            }
        }
        [list] => list.split(',').filter(|s| !s.trim().is_empty()).map(num).collect(),
        _ => Err(bad("expected a comma list or from:to:steps")),
    }
}

fn summarize_solve(result: &SolveResult<f64>) {
    out!("converged={}", result.converged);
    out!("iterations={}", result.iterations);
    let last = result.residual_history.last().map_or(f64::NAN, |h| h.residual);
    out!("residual={last:e}");
    if let Some(c) = result.final_correction {
        out!("final_correction={c:e}");
    }
    for (k, h) in result.residual_history.iter().enumerate() {
        out!("iteration={} step={:e} residual={:e} damping={}", k + 1, h.step, h.residual, h.damping);
    }
    if let Some(e) = &result.failure {
        eprintln!("solve stopped: {e}");
    } else if !result.converged {
        eprintln!("no convergence within {} iterations", result.iterations);
    }
}

fn solve_exit(result: &SolveResult<f64>) -> u8 {
    if result.converged {
        0
    } else {
        2
    }
}

fn cmd_solve(case: &Path, solver: &SolverArgs, out: Option<&Path>, history: Option<&Path>) -> Outcome {
    let case = load_case(case)?;
    let result = solve_power_flow_observed(&case, &solver.options(), |_, _| {})?;
    summarize_solve(&result);
    if let Some(path) = out {
        write_solve_results(&case, &result, create(path)?)?;
    }
    if let Some(path) = history {
        write_history(&result.residual_history, create(path)?)?;
    }
    Ok(solve_exit(&result))
}

fn cmd_export_stamps(case: &Path, solver: &SolverArgs, out: &Path) -> Outcome {
    let case = load_case(case)?;
    let mut systems: Vec<(usize, SplitSystem<f64>)> = Vec::new();
    let result = solve_power_flow_observed(&case, &solver.options(), |k, sys| systems.push((k, sys.clone())))?;
    write_stamps(&systems, create(out)?)?;
    out!("systems={}", systems.len());
    out!("dimension={}", systems.first().map_or(0, |(_, s)| s.dimension()));
    summarize_solve(&result);
    Ok(solve_exit(&result))
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    model: &Path,
    v_re: &str,
    v_im: &str,
    tag: Option<&str>,
    noise: f64,
    seed: u64,
    min_fraction: f64,
    out: &Path,
) -> Outcome {
    let spec = load_model(model)?;
    let (re, im) = (parse_values(v_re)?, parse_values(v_im)?);
    let voltages = im.iter().flat_map(|&i| re.iter().map(move |&r| SplitPhasor::new(r, i))).collect();
    let tags = match tag {
        Some(t) => parse_values(t)?,
        None => spec.default_tag.into_iter().collect(),
    };
    let sweep = SweepSpec::new(voltages).with_tags(tags).with_noise(noise, seed);
    let report = synthesize(spec.model.as_ref(), &sweep)?;
    for s in &report.skipped {
        eprintln!("skipped v=({}, {}) tag={:?}: {}", s.v.re, s.v.im, s.tag, s.error);
    }
    if !report.skipped.is_empty() {
        eprintln!("{} of {} sweep points skipped", report.skipped.len(), report.skipped.len() + report.records.len());
    }
    out!("model={}", spec.type_tag);
    out!("records={}", report.records.len());
    out!("skipped={}", report.skipped.len());
    out!("success_fraction={}", report.success_fraction());
    if report.records.is_empty() {
        return Err(Failure::numerical("no sweep point could be synthesized"));
    }
    save_measurements(&report.records, out)?;
    if report.success_fraction() < min_fraction {
        return Err(Failure::numerical(format!(
            "only {:.3} of sweep points succeeded (minimum {min_fraction})",
            report.success_fraction()
        )));
    }
    Ok(0)
}

fn print_fit(prefix: &str, report: &splitgrid::FitReport<f64>) {
    out!("{prefix}n_records={}", report.n_records);
    out!("{prefix}order={}", report.template.order());
    out!("{prefix}kind={}", report.template.kind().as_str());
    out!("{prefix}rmse_r={:e}", report.rmse_r);
    out!("{prefix}rmse_i={:e}", report.rmse_i);
    out!("{prefix}max_abs_residual={:e}", report.max_abs_residual);
    out!("{prefix}condition_number={:e}", report.condition_number);
    let labels: Vec<String> = report.unidentifiable.iter().map(|&(a, b)| monomial_label(a, b)).collect();
    out!("{prefix}unidentifiable={}", labels.join(","));
    let t = &report.template;
    for (k, &(a, b)) in t.basis().exponents().iter().enumerate() {
        out!(
            "{prefix}coefficient term={} e_re={a} e_im={b} real={:e} imag={:e}",
            monomial_label(a, b),
            t.coeffs_r()[k],
            t.coeffs_i()[k]
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    measurements: &Path,
    order: u32,
    kind: KindArg,
    ridge: f64,
    center: CenterArg,
    units: UnitsArg,
    tag: Option<f64>,
    per_tag: bool,
    out: &Path,
) -> Outcome {
    let mut records = load_measurements(measurements)?;
    if let Some(t) = tag {
        records.retain(|r| r.tag == Some(t));
    }
    let mut config = FitConfig::new(order);
    config.kind = match kind {
        KindArg::Voltage => GlassKind::VoltageDependent,
        KindArg::Current => GlassKind::CurrentDependent,
    };
    config.ridge = ridge;
    config.center_policy = match center {
        CenterArg::Zero => CenterPolicy::Zero,
        CenterArg::Mean => CenterPolicy::DataMean,
    };
    let units = UnitSystem::from(units);
    if per_tag {
        let reports = fit_per_tag(&records, &config)?;
        let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("template");
        let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("toml");
        for (k, (t, report)) in reports.iter().enumerate() {
            let path = out.with_file_name(format!("{stem}-{k}.{ext}"));
            let prefix = format!("group{k}.");
            out!("{prefix}tag={}", t.map_or(String::new(), |v| v.to_string()));
            out!("{prefix}file={}", path.display());
            print_fit(&prefix, report);
            save_template(&StoredTemplate { template: report.template.clone(), units }, &path)?;
        }
        return Ok(0);
    }
    let report = fit(&records, &config)?;
    print_fit("", &report);
    save_template(&StoredTemplate { template: report.template.clone(), units }, out)?;
    Ok(0)
}

fn cmd_validate(template: &Path, measurements: &Path, out: Option<&Path>, units: Option<UnitsArg>) -> Outcome {
    let stored = load_template(template)?;
    if let Some(u) = units {
        let declared = UnitSystem::from(u);
        if declared != stored.units {
            return Err(Failure::input(format!(
                "unit mismatch: template is {}, measurements declared {}",
                stored.units.as_str(),
                declared.as_str()
            )));
        }
    }
    let records = load_measurements(measurements)?;
    let report = validate(&stored.template, &records);
    out!("n_records={}", report.rows.len());
    out!("rmse_r={:e}", report.rmse_r);
    out!("rmse_i={:e}", report.rmse_i);
    out!("max_abs_residual={:e}", report.max_abs_residual);
    out!("extrapolated_fraction={}", report.extrapolated_fraction);
    if let Some(path) = out {
        write_validation(&report, create(path)?)?;
    }
    Ok(0)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Solve { case, solver, out, history } => cmd_solve(&case, &solver, out.as_deref(), history.as_deref()),
        Command::Synth { model, v_re, v_im, tag, noise, seed, min_fraction, out } => {
            cmd_synth(&model, &v_re, &v_im, tag.as_deref(), noise, seed, min_fraction, &out)
        }
        Command::Fit { measurements, order, kind, ridge, center, units, tag, per_tag, out } => {
            cmd_fit(&measurements, order, kind, ridge, center, units, tag, per_tag, &out)
        }
        Command::Validate { template, measurements, out, units } => cmd_validate(&template, &measurements, out.as_deref(), units),
        Command::ExportStamps { case, solver, out } => cmd_export_stamps(&case, &solver, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    let _ = std::io::stdout().flush();
    ExitCode::from(code)
}
