//! `xdyn` command-line front end.
//!
//! Exit codes: 0 on success, 1 on validation or domain errors, 2 on usage
//! errors (bad flags, malformed `--state` specs or state files).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dynamics::{
    classify, detect_period, evolve_closed, scan, FidelityTrace, TimeGrid, STATIONARY_THRESHOLD,
};
use crate::error::Error;
use crate::fidelity::fidelity_wang;
use crate::linalg::ComplexMatrix4;
use crate::model::{propagator, spectrum, CouplingParams};
use crate::states::{
    preset_bell_diagonal, preset_p_mixture, preset_werner, BellKind, BlochVector, XState,
};
use crate::validate::run_suite;

#[derive(Debug, Parser)]
#[command(
    name = "xdyn",
    version,
    about = "Two-qubit X-state dynamics under the anisotropic Heisenberg model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form energies and eigenvectors (optionally the propagator at --t)
    Spectrum {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, allow_negative_numbers = true)]
        t: Option<f64>,
        /// Include the global phase e^{-iJz t/2} in the propagator
        #[arg(long)]
        phase: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evolved density matrix at a single time
    Evolve {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        state: String,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        phase: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fidelity, purity and c1 - c2 over a time grid
    Scan {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        state: String,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Stationary or periodic verdict
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        state: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Period measured from the fidelity minima of a scan
    Period {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        state: String,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Randomized oracle-equivalence suite
    Validate {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        cases: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    jx: f64,
    #[arg(long, allow_negative_numbers = true)]
    jy: f64,
    #[arg(long, allow_negative_numbers = true)]
    jz: f64,
    /// Magnetic field B
    #[arg(long, allow_negative_numbers = true)]
    field: f64,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<i32> {
    match cmd {
        Command::Spectrum {
            params,
            t,
            phase,
            output,
        } => {
            let p = params.build()?;
            let text = render_spectrum(&p, t, phase, output.format.unwrap_or(Format::Json))?;
            emit(&output.out, &text)?;
        }
        Command::Evolve {
            params,
            state,
            t,
            phase,
            output,
        } => {
            let p = params.build()?;
            let s = parse_state_spec(&state)?;
            let text = render_evolve(&s, &p, t, phase, output.format.unwrap_or(Format::Json))?;
            emit(&output.out, &text)?;
        }
        Command::Scan {
            params,
            state,
            grid,
            output,
        } => {
            let p = params.build()?;
            let s = parse_state_spec(&state)?;
            let trace = scan(&s, &p, &grid.build(&p)?)?;
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Csv => trace_csv(&trace),
                Format::Json => to_json(&trace),
            };
            emit(&output.out, &text)?;
        }
        Command::Classify {
            params,
            state,
            output,
        } => {
            let p = params.build()?;
            let s = parse_state_spec(&state)?;
            let v = classify(&s, &p)?;
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&v),
                Format::Csv => format!(
                    "kind,reason,period\n{},{},{}\n",
                    enum_name(&v.kind),
                    enum_name(&v.reason),
                    v.period.map(fmt_num).unwrap_or_default()
                ),
            };
            emit(&output.out, &text)?;
        }
        Command::Period {
            params,
            state,
            grid,
            output,
        } => {
            let p = params.build()?;
            let s = parse_state_spec(&state)?;
            let g = grid.build(&p)?;
            let trace = scan(&s, &p, &g)?;
            let period = detect_period(&trace, STATIONARY_THRESHOLD)?;
            let expected = p.frequencies().bell_period();
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&json!({
                    "period": period,
                    "bell_period": expected,
                    "t_max": g.t_max(),
                    "steps": g.steps(),
                })),
                Format::Csv => format!(
                    "period,bell_period\n{},{}\n",
                    period.map(fmt_num).unwrap_or_default(),
                    expected.map(fmt_num).unwrap_or_default()
                ),
            };
            emit(&output.out, &text)?;
        }
        Command::Validate {
            seed,
            cases,
            output,
        } => {
            if cases == 0 {
                return Err(CliError::Usage("--cases must be at least 1".into()));
            }
            let report = run_suite(seed, cases)?;
            let text = match output.format {
                Some(Format::Json) => to_json(&report),
                _ => report.render_text(),
            };
            emit(&output.out, &text)?;
            if !report.all_binding_passed() {
                eprintln!("error: binding oracle checks failed");
                return Ok(1);
            }
        }
    }
    Ok(0)
}

impl ParamArgs {
    fn build(&self) -> CliResult<CouplingParams> {
        CouplingParams::new(self.jx, self.jy, self.jz, self.field)
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

impl GridArgs {
    fn build(&self, p: &CouplingParams) -> CliResult<TimeGrid> {
        let default = TimeGrid::default_for(p);
        TimeGrid::new(
            self.t_max.unwrap_or(default.t_max()),
            self.steps.unwrap_or(default.steps()),
        )
        .map_err(|e| CliError::Usage(format!("--t-max/--steps: {e}")))
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
        }
    }
}

/// 17 significant digits, scientific notation, `.` as decimal separator.
fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn trace_csv(trace: &FidelityTrace) -> String {
    let mut out = String::from("t,f_numeric,f_closed,purity,c1_minus_c2\n");
    for k in 0..trace.len() {
        let closed = trace
            .f_closed
            .as_ref()
            .map(|f| fmt_num(f[k]))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_num(trace.times[k]),
            fmt_num(trace.f_numeric[k]),
            closed,
            fmt_num(trace.purity[k]),
            fmt_num(trace.c1_minus_c2[k])
        );
    }
    out
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &ComplexMatrix4) -> Value {
    Value::Array(
        m.rows()
            .iter()
            .map(|row| Value::Array(row.iter().map(|z| complex_json(*z)).collect()))
            .collect(),
    )
}

fn propagator_json(p: &CouplingParams, t: f64, phase: bool) -> Value {
    let u = propagator(p, t, phase);
    json!({
        "t": t,
        "global_phase_included": u.global_phase_included,
        "mu_plus": complex_json(u.mu_plus),
        "mu_minus": complex_json(u.mu_minus),
        "delta": complex_json(u.delta_entry),
        "matrix": matrix_json(&u.matrix),
    })
}

fn render_spectrum(
    p: &CouplingParams,
    t: Option<f64>,
    phase: bool,
    format: Format,
) -> CliResult<String> {
    let s = spectrum(p);
    Ok(match format {
        Format::Json => {
            let mut v = json!({
                "params": p,
                "frequencies": p.frequencies(),
                "energies": s.energies,
                "eigenvectors": serde_json::to_value(&s).expect("spectrum")["eigenvectors"].clone(),
                "norms": s.norms,
            });
            if let Some(t) = t {
                v["propagator"] = propagator_json(p, t, phase);
            }
            to_json(&v)
        }
        Format::Csv => {
            let mut out = String::from(
                "index,energy,v00_re,v00_im,v01_re,v01_im,v10_re,v10_im,v11_re,v11_im\n",
            );
            for k in 0..4 {
                let _ = write!(out, "{},{}", k + 1, fmt_num(s.energies[k]));
                for z in s.eigenvectors[k] {
                    let _ = write!(out, ",{},{}", fmt_num(z.re), fmt_num(z.im));
                }
                out.push('\n');
            }
            out
        }
    })
}

fn render_evolve(
    s: &XState,
    p: &CouplingParams,
    t: f64,
    phase: bool,
    format: Format,
) -> CliResult<String> {
    let rho = evolve_closed(s, p, t)?;
    Ok(match format {
        Format::Json => {
            let bloch = BlochVector::from_density(&rho);
            to_json(&json!({
                "t": t,
                "rho": matrix_json(rho.matrix()),
                "bloch": bloch,
                "purity": rho.purity(),
                "fidelity": fidelity_wang(&s.to_density(), &rho)?,
                "propagator": propagator_json(p, t, phase),
            }))
        }
        Format::Csv => {
            let mut out = String::from("row,col,re,im\n");
            for i in 0..4 {
                for j in 0..4 {
                    let z = rho.matrix()[(i, j)];
                    let _ = writeln!(out, "{i},{j},{},{}", fmt_num(z.re), fmt_num(z.im));
                }
            }
            out
        }
    })
}

/// Parses `bell_diag:c1,c2,c3`, `phi_plus_mix:p`, `phi_minus_mix:p`,
/// `psi_plus_mix:p`, `psi_minus_mix:p`, `werner:x` or `file:PATH`.
fn parse_state_spec(spec: &str) -> CliResult<XState> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("--state: expected KIND:ARGS, got `{spec}`")))?;
    let numbers = |n: usize| -> CliResult<Vec<f64>> {
        let vals = rest
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("--state: `{x}` is not a number")))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if vals.len() != n {
            return Err(CliError::Usage(format!(
                "--state {kind}: expected {n} value(s), got {}",
                vals.len()
            )));
        }
        Ok(vals)
    };
    let state = match kind {
        "bell_diag" => {
            let c = numbers(3)?;
            preset_bell_diagonal(c[0], c[1], c[2])?
        }
        "phi_plus_mix" => preset_p_mixture(BellKind::PhiPlus, numbers(1)?[0])?,
        "phi_minus_mix" => preset_p_mixture(BellKind::PhiMinus, numbers(1)?[0])?,
        "psi_plus_mix" => preset_p_mixture(BellKind::PsiPlus, numbers(1)?[0])?,
        "psi_minus_mix" => preset_p_mixture(BellKind::PsiMinus, numbers(1)?[0])?,
        "werner" => preset_werner(numbers(1)?[0])?,
        "file" => load_state_file(Path::new(rest))?,
        other => return Err(CliError::Usage(format!("--state: unknown kind `{other}`"))),
    };
    Ok(state)
}

fn load_state_file(path: &Path) -> CliResult<XState> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read state file {}: {e}", path.display())))?;
    parse_state_file(&text)
}

fn number_at(arr: &[Value], idx: usize, field: &str) -> CliResult<f64> {
    arr.get(idx)
        .and_then(Value::as_f64)
        .ok_or_else(|| CliError::Usage(format!("state file: `{field}[{idx}]` must be a number")))
}

fn number_array(v: &Value, field: &str, len: usize) -> CliResult<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| CliError::Usage(format!("state file: `{field}` must be an array")))?;
    if arr.len() != len {
        return Err(CliError::Usage(format!(
            "state file: `{field}` must have {len} entries, got {}",
            arr.len()
        )));
    }
    (0..len).map(|i| number_at(arr, i, field)).collect()
}

/// Parses the JSON state file format:
/// `{"abcdzw": [a,b,c,d,z,w]}`, `{"bloch": [s1,s2,c1,c2,c3]}` or
/// `{"preset": {"name": ..., "args": [...]}}`.
fn parse_state_file(text: &str) -> CliResult<XState> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Usage(format!("state file: invalid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| CliError::Usage("state file: top level must be an object".into()))?;
    if let Some(key) = obj
        .keys()
        .find(|k| !matches!(k.as_str(), "abcdzw" | "bloch" | "preset"))
    {
        return Err(CliError::Usage(format!(
            "state file: unknown field `{key}`"
        )));
    }
    if obj.len() != 1 {
        return Err(CliError::Usage(
            "state file: exactly one of `abcdzw`, `bloch`, `preset` is required".into(),
        ));
    }
    let (key, value) = obj.iter().next().expect("one entry");
    let state = match key.as_str() {
        "abcdzw" => {
            let v = number_array(value, "abcdzw", 6)?;
            XState::new(v[0], v[1], v[2], v[3], v[4], v[5])?
        }
        "bloch" => {
            let v = number_array(value, "bloch", 5)?;
            XState::from_bloch(&BlochVector::new(v[0], v[1], v[2], v[3], v[4])?)?
        }
        _ => parse_preset(value)?,
    };
    Ok(state)
}

fn parse_preset(value: &Value) -> CliResult<XState> {
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::Usage("state file: `preset` must be an object".into()))?;
    if let Some(key) = obj.keys().find(|k| !matches!(k.as_str(), "name" | "args")) {
        return Err(CliError::Usage(format!(
            "state file: unknown field `preset.{key}`"
        )));
    }
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Usage("state file: `preset.name` must be a string".into()))?;
    let args_value = obj
        .get("args")
        .ok_or_else(|| CliError::Usage("state file: `preset.args` is required".into()))?;
    let state = match name {
        "bell_diagonal" => {
            let c = number_array(args_value, "preset.args", 3)?;
            preset_bell_diagonal(c[0], c[1], c[2])?
        }
        "werner" => preset_werner(number_array(args_value, "preset.args", 1)?[0])?,
        "p_mixture" => {
            let arr = args_value.as_array().ok_or_else(|| {
                CliError::Usage("state file: `preset.args` must be an array".into())
            })?;
            if arr.len() != 2 {
                return Err(CliError::Usage(
                    "state file: `preset.args` for p_mixture must be [kind, p]".into(),
                ));
            }
            let kind = arr[0].as_str().and_then(BellKind::parse).ok_or_else(|| {
                CliError::Usage(
                    "state file: `preset.args[0]` must be one of phi_plus, phi_minus, psi_plus, psi_minus".into(),
                )
            })?;
            preset_p_mixture(kind, number_at(arr, 1, "preset.args")?)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "state file: `preset.name` `{other}` is not one of bell_diagonal, p_mixture, werner"
            )))
        }
    };
    Ok(state)
}
