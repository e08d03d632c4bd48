//! Command-line front end for `qarc`.
//!
//! Flags are merged over an optional `--config` JSON file, flags winning.
//! Reports go to stdout (or `--output`) as JSON or CSV with floats rounded
//! to 12 significant digits.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::laurent::LaurentPoly;
use crate::par::Execution;
use crate::qcalc::{epsilon_m, q_integer, QDeformation};
use crate::qms::{
    continuity_scan, default_mk_grid, diameter_scan, gh_band_bound, leibniz_ratio, mk_distance, MkProblem,
    SpectralBand, CSV_HEADER,
};
use crate::report::{fmt_sig, round_json};
use crate::sample::{random_poly, seeded_rng};
use crate::schur::{op_norm, random_operator, Ensemble};
use crate::verify::{run_all, Check, Scale};

#[derive(Debug, Parser)]
#[command(
    name = "qarc",
    version,
    about = "q-deformed calculus on the circle and quantum-metric bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// q-integer [n]_q.
    Qint,
    /// q-derivative of a polynomial.
    Deriv,
    /// q-integral of a polynomial.
    Integrate,
    /// Certified sup-norm of a polynomial, or operator norm with --W.
    Norm,
    /// Fejér mean of a polynomial and its approximation error.
    Fejer,
    /// Monge-Kantorovich distance between two evaluation states.
    Mk,
    /// Largest MK distance over all pairs of --angles.
    Diameter,
    /// Leibniz ratio [2n]_q / (2 [n]_q).
    Leibniz,
    /// Composed distance bound between the q and q0 spaces through A_M.
    Gh,
    /// Best composed bound per q over bands 0..=M.
    Continuity,
    /// Run the property suite.
    Verify {
        /// Reduced sample sizes (default).
        #[arg(long, conflicts_with = "full")]
        quick: bool,
        /// Full sample sizes.
        #[arg(long)]
        full: bool,
    },
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Qint => "qint",
            Command::Deriv => "deriv",
            Command::Integrate => "integrate",
            Command::Norm => "norm",
            Command::Fejer => "fejer",
            Command::Mk => "mk",
            Command::Diameter => "diameter",
            Command::Leibniz => "leibniz",
            Command::Gh => "gh",
            Command::Continuity => "continuity",
            Command::Verify { .. } => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Deformation parameter, or a comma-separated list for `continuity`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// Reference deformation for `gh` and `continuity`.
    #[arg(long, global = true)]
    pub q0: Option<f64>,
    /// Band half-width.
    #[arg(long = "M", global = true)]
    pub m: Option<usize>,
    /// Grid size.
    #[arg(long = "N", global = true)]
    pub grid: Option<usize>,
    /// Operator window half-width.
    #[arg(long = "W", global = true)]
    pub window: Option<usize>,
    /// q-integer index, or the degree of the monomial input z^n.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub n: Option<i64>,
    /// First evaluation angle in radians.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta_a: Option<f64>,
    /// Second evaluation angle in radians.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta_b: Option<f64>,
    /// Comma-separated angles in radians.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub angles: Option<Vec<f64>>,
    /// Seed for a random operator (`norm --W`) or a random input polynomial.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Report format, json by default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON file with defaults for any of the flags above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Contents of a `--config` file. Keys follow the flag names.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default, deserialize_with = "one_or_many")]
    q: Option<Vec<f64>>,
    q0: Option<f64>,
    #[serde(rename = "M")]
    m: Option<usize>,
    #[serde(rename = "N")]
    grid: Option<usize>,
    #[serde(rename = "W")]
    window: Option<usize>,
    n: Option<i64>,
    #[serde(alias = "theta-a")]
    theta_a: Option<f64>,
    #[serde(alias = "theta-b")]
    theta_b: Option<f64>,
    angles: Option<Vec<f64>>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    format: Option<Format>,
    /// Input polynomial for deriv, integrate, norm and fejer.
    poly: Option<LaurentPoly>,
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<f64>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(Option::<OneOrMany>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

/// Fully merged and validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub q: Vec<f64>,
    pub q0: f64,
    pub m: Option<usize>,
    pub grid: Option<usize>,
    pub window: Option<usize>,
    pub n: i64,
    pub theta_a: f64,
    pub theta_b: f64,
    pub angles: Vec<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub poly: Option<LaurentPoly>,
}

/// Why a run stopped.
#[derive(Debug)]
pub enum CliError {
    /// Bad input; the message names the flag. Exit code 2.
    Config { flag: &'static str, message: String },
    /// Numerical failure. Exit code 1.
    Numerical(Error),
    /// The property suite ran but something failed. Exit code 1.
    ChecksFailed(String),
    /// Writing the report failed. Exit code 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }

    /// Message for stderr: plain text for config errors, JSON otherwise.
    pub fn diagnostic(&self, command: Option<Command>) -> String {
        let cmd = command.map(Command::name);
        match self {
            CliError::Config { flag, message } => format!("error: invalid value for {flag}: {message}"),
            CliError::Numerical(e) => json!({"error": e.kind(), "message": e.to_string(), "command": cmd}).to_string(),
            CliError::ChecksFailed(ids) => {
                json!({"error": "checks_failed", "message": ids, "command": cmd}).to_string()
            }
            CliError::Io(msg) => json!({"error": "io", "message": msg, "command": cmd}).to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(flag: &'static str, message: impl Into<String>) -> CliError {
    CliError::Config {
        flag,
        message: message.into(),
    }
}

fn read_config(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err("--config", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err("--config", format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Merges flags over the config file and validates ranges.
    pub fn from_cli(cli: &Cli) -> CliResult<Self> {
        let f = &cli.flags;
        let file = match &f.config {
            Some(p) => read_config(p)?,
            None => ConfigFile::default(),
        };
        let config = RunConfig {
            command: cli.command,
            q: f.q.clone().or(file.q).unwrap_or_else(|| vec![1.0]),
            q0: f.q0.or(file.q0).unwrap_or(1.0),
            m: f.m.or(file.m),
            grid: f.grid.or(file.grid),
            window: f.window.or(file.window),
            n: f.n.or(file.n).unwrap_or(1),
            theta_a: f.theta_a.or(file.theta_a).unwrap_or(0.0),
            theta_b: f.theta_b.or(file.theta_b).unwrap_or(PI),
            angles: f.angles.clone().or(file.angles).unwrap_or_default(),
            seed: f.seed.or(file.seed),
            output: f.output.clone().or(file.output),
            format: f.format.or(file.format),
            poly: file.poly,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> CliResult<()> {
        if self.q.is_empty() {
            return Err(config_err("--q", "no value given"));
        }
        for &v in &self.q {
            QDeformation::new(v).map_err(|_| config_err("--q", format!("{v} is outside (0, 1]")))?;
        }
        QDeformation::new(self.q0).map_err(|_| config_err("--q0", format!("{} is outside (0, 1]", self.q0)))?;
        if self.q.len() > 1 && self.command != Command::Continuity {
            return Err(config_err("--q", "a list of values is only accepted by continuity"));
        }
        for (flag, v) in [("--theta-a", self.theta_a), ("--theta-b", self.theta_b)] {
            if !v.is_finite() {
                return Err(config_err(flag, format!("{v} is not finite")));
            }
        }
        if let Some(bad) = self.angles.iter().find(|a| !a.is_finite()) {
            return Err(config_err("--angles", format!("{bad} is not finite")));
        }
        if matches!(self.command, Command::Mk | Command::Diameter) {
            let m = self.band();
            let grid = self.mk_grid();
            if grid <= 2 * m {
                return Err(config_err("--N", format!("grid {grid} must exceed 2M = {}", 2 * m)));
            }
        }
        if self.command == Command::Diameter && !self.angles.is_empty() && self.angles.len() < 2 {
            return Err(config_err("--angles", "need at least two angles"));
        }
        if self.command == Command::Leibniz && self.n < 1 {
            return Err(config_err("--n", format!("need n >= 1, got {}", self.n)));
        }
        if self.command == Command::Norm {
            if let (Some(grid), Some(poly)) = (self.grid, self.input_poly().ok()) {
                if grid <= 2 * poly.band() {
                    return Err(config_err(
                        "--N",
                        format!("grid {grid} must exceed twice the band {}", poly.band()),
                    ));
                }
            }
        }
        Ok(())
    }

    fn single_q(&self) -> QDeformation {
        QDeformation::new(self.q[0]).expect("validated")
    }

    fn q0(&self) -> QDeformation {
        QDeformation::new(self.q0).expect("validated")
    }

    /// Band half-width, 16 unless given.
    fn band(&self) -> usize {
        self.m.unwrap_or(16)
    }

    fn mk_grid(&self) -> usize {
        self.grid.unwrap_or_else(|| default_mk_grid(self.band()))
    }

    /// `poly` from the config file, else a seeded random polynomial of band
    /// `M` when `--seed` is given, else `z^n`.
    fn input_poly(&self) -> CliResult<LaurentPoly> {
        if let Some(p) = &self.poly {
            return Ok(p.clone());
        }
        if let Some(seed) = self.seed {
            return Ok(random_poly(&mut seeded_rng(seed), self.band()));
        }
        Ok(LaurentPoly::z_pow(self.n))
    }

    fn angle_list(&self) -> Vec<f64> {
        if self.angles.is_empty() {
            (0..8).map(|k| 2.0 * PI * k as f64 / 8.0).collect()
        } else {
            self.angles.clone()
        }
    }
}

/// A finished report: a JSON value plus its CSV rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub json: Value,
    pub csv: String,
}

impl Report {
    fn from_json(mut json: Value) -> Self {
        round_json(&mut json);
        let csv = scalar_csv(&json);
        Report { json, csv }
    }

    fn with_csv(mut json: Value, csv: String) -> Self {
        round_json(&mut json);
        Report { json, csv }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = self.json.to_string();
                s.push('\n');
                s
            }
            Format::Csv => self.csv.clone(),
        }
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Number(n) => n
            .as_f64()
            .filter(|_| n.is_f64())
            .map(fmt_sig)
            .unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Header and one row from the scalar top-level fields of an object.
fn scalar_csv(v: &Value) -> String {
    let Value::Object(map) = v else {
        return format!("value\n{}\n", csv_cell(v));
    };
    let scalars: Vec<(&String, &Value)> = map.iter().filter(|(_, v)| !v.is_object() && !v.is_array()).collect();
    let header: Vec<&str> = scalars.iter().map(|(k, _)| k.as_str()).collect();
    let row: Vec<String> = scalars.iter().map(|(_, v)| csv_cell(v)).collect();
    format!("{}\n{}\n", header.join(","), row.join(","))
}

fn poly_csv(p: &LaurentPoly) -> String {
    let mut out = String::from("n,re,im\n");
    for (n, c) in p.iter() {
        let _ = writeln!(out, "{n},{},{}", fmt_sig(c.re), fmt_sig(c.im));
    }
    out
}

fn obj(pairs: Vec<(&str, Value)>) -> Value {
    Value::Object(
        pairs
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect::<Map<_, _>>(),
    )
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report types serialize")
}

/// Runs one command. `Err` carries the exit code.
pub fn run(config: &RunConfig) -> CliResult<Report> {
    let exec = Execution::Parallel;
    let report = match config.command {
        Command::Qint => Report::from_json(json!({"value": q_integer(config.n, config.single_q())?})),
        Command::Deriv | Command::Integrate => {
            let q = config.single_q();
            let f = config.input_poly()?;
            let out = if config.command == Command::Deriv {
                f.d_q(q)?
            } else {
                f.q_integral(q)?
            };
            let csv = poly_csv(&out);
            Report::with_csv(
                json!({"q": q.value(), "input": to_value(&f), "output": to_value(&out)}),
                csv,
            )
        }
        Command::Norm => match config.window {
            Some(w) => {
                let seed = config.seed.unwrap_or(0);
                let t = random_operator(w, seed, Ensemble::Gaussian);
                Report::from_json(json!({"W": w, "seed": seed, "ensemble": "gaussian", "op_norm": op_norm(&t)?}))
            }
            None => {
                let f = config.input_poly()?;
                let cert = match config.grid {
                    Some(n) => f.sup_norm(n)?,
                    None => f.sup_norm_default(),
                };
                Report::from_json(to_value(&cert))
            }
        },
        Command::Fejer => {
            let m = config.band() as u64;
            let f = config.input_poly()?;
            let out = f.fejer(m);
            let err = (&f - &out).sup_norm_default();
            let csv = poly_csv(&out);
            Report::with_csv(
                obj(vec![
                    ("M", json!(m)),
                    ("eps_M", json!(epsilon_m(m).value)),
                    ("error_grid_max", json!(err.grid_max)),
                    ("error_upper", json!(err.corrected_upper)),
                    ("input", to_value(&f)),
                    ("output", to_value(&out)),
                ]),
                csv,
            )
        }
        Command::Mk => {
            let band = SpectralBand::new(config.band(), config.single_q());
            let p = MkProblem::new(band, config.theta_a, config.theta_b, config.mk_grid())?;
            let r = mk_distance(&p)?;
            let mut json = to_value(&r);
            if let Value::Object(map) = &mut json {
                map.insert("M".into(), json!(band.m));
                map.insert("q".into(), json!(band.q.value()));
                map.insert("theta_a".into(), json!(p.state_a.theta()));
                map.insert("theta_b".into(), json!(p.state_b.theta()));
            }
            Report::from_json(json)
        }
        Command::Diameter => {
            let band = SpectralBand::new(config.band(), config.single_q());
            let angles = config.angle_list();
            let scan = diameter_scan(band, &angles, config.mk_grid(), exec)?;
            Report::from_json(json!({
                "M": band.m,
                "q": band.q.value(),
                "N": config.mk_grid(),
                "max_upper": scan.max_upper,
                "theta_a": angles[scan.argmax.0],
                "theta_b": angles[scan.argmax.1],
                "bound": scan.bound,
                "pairs": scan.pairs,
            }))
        }
        Command::Leibniz => Report::from_json(json!({"ratio": leibniz_ratio(config.n, config.single_q())?})),
        Command::Gh => {
            let r = gh_band_bound(config.band(), config.single_q(), config.q0())?;
            let csv = format!("{CSV_HEADER}\n{}\n", r.csv_row());
            Report::with_csv(to_value(&r), csv)
        }
        Command::Continuity => {
            let qs: Vec<QDeformation> = config
                .q
                .iter()
                .map(|&v| QDeformation::new(v).expect("validated"))
                .collect();
            let ms: Vec<usize> = (0..=config.m.unwrap_or(256)).collect();
            let scan = continuity_scan(config.q0(), &qs, &ms, exec)?;
            let csv = scan.to_csv();
            Report::with_csv(json!({"q0": config.q0, "rows": to_value(&scan.rows)}), csv)
        }
        Command::Verify { full, .. } => {
            let scale = if full { Scale::Full } else { Scale::Quick };
            let checks = run_all(scale, exec);
            let report = verify_report(scale, &checks);
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.id).collect();
            if !failed.is_empty() {
                emit(config, &report)?;
                return Err(CliError::ChecksFailed(failed.join(",")));
            }
            report
        }
    };
    Ok(report)
}

fn verify_report(scale: Scale, checks: &[Check]) -> Report {
    let passed = checks.iter().all(|c| c.passed);
    // Timings are left out so the report is reproducible.
    let items: Vec<Value> = checks
        .iter()
        .map(|c| json!({"id": c.id, "description": c.description, "passed": c.passed, "detail": c.detail}))
        .collect();
    let mut csv = String::from("id,passed,detail\n");
    for c in checks {
        let _ = writeln!(csv, "{},{},\"{}\"", c.id, c.passed, c.detail.replace('"', "'"));
    }
    Report::with_csv(json!({"scale": scale, "passed": passed, "checks": items}), csv)
}

/// Writes a report to `--output` or stdout. Defaults to JSON.
pub fn emit(config: &RunConfig, report: &Report) -> CliResult<()> {
    let text = report.render(config.format.unwrap_or(Format::Json));
    match &config.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// Parses arguments, runs, prints, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = RunConfig::from_cli(&cli).and_then(|config| {
        let report = run(&config)?;
        emit(&config, &report)
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.diagnostic(Some(cli.command)));
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> CliResult<RunConfig> {
        let cli = Cli::try_parse_from(std::iter::once("qarc").chain(args.iter().copied())).expect("parses");
        RunConfig::from_cli(&cli)
    }

    fn run_json(args: &[&str]) -> Value {
        run(&config(args).unwrap()).unwrap().json
    }

    #[test]
    fn examples() {
        assert_eq!(run_json(&["qint", "--n", "2", "--q", "0.5"]), json!({"value": 2.5}));
        assert_eq!(run_json(&["leibniz", "--q", "1", "--n", "7"]), json!({"ratio": 1.0}));
        let mk = run_json(&[
            "mk",
            "--q",
            "1",
            "--M",
            "1",
            "--theta-a",
            "0",
            "--theta-b",
            "3.14159265",
            "--N",
            "4096",
        ]);
        assert!((mk["upper"].as_f64().unwrap() - 2.0).abs() < 1e-6, "{mk}");
    }

    #[test]
    fn invalid_values_name_the_flag() {
        for (args, flag) in [
            (vec!["qint", "--q", "1.5"], "--q"),
            (vec!["gh", "--q0", "0"], "--q0"),
            (vec!["mk", "--M", "8", "--N", "16"], "--N"),
            (vec!["leibniz", "--n", "0"], "--n"),
            (vec!["qint", "--q", "0.5,0.6"], "--q"),
        ] {
            match config(&args) {
                Err(CliError::Config { flag: f, .. }) => assert_eq!(f, flag, "{args:?}"),
                other => panic!("{args:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"q": 0.5, "n": 3, "M": 4}"#).unwrap();
        let p = path.to_str().unwrap();
        let c = config(&["qint", "--config", p, "--n", "2"]).unwrap();
        assert_eq!((c.q.clone(), c.n, c.m), (vec![0.5], 2, Some(4)));
        assert_eq!(run(&c).unwrap().json, json!({"value": 2.5}));

        std::fs::write(&path, r#"{"q": 0.5, "bogus": 1}"#).unwrap();
        assert!(matches!(
            config(&["qint", "--config", p]),
            Err(CliError::Config { flag: "--config", .. })
        ));
    }

    #[test]
    fn numerical_failure_is_exit_one() {
        let err = run(&config(&["qint", "--q", "0.01", "--n", "400"]).unwrap()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let diag: Value = serde_json::from_str(&err.diagnostic(Some(Command::Qint))).unwrap();
        assert_eq!(diag["error"], "overflow");
    }

    #[test]
    fn csv_has_header() {
        let r = run(&config(&["gh", "--M", "2", "--q", "0.9"]).unwrap()).unwrap();
        let csv = r.render(Format::Csv);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("0.9,2,"));
        let q = run(&config(&["qint", "--n", "3", "--q", "0.5"]).unwrap()).unwrap();
        assert_eq!(q.render(Format::Csv), "value\n5.25\n");
    }

    #[test]
    fn reports_are_deterministic() {
        let args = ["norm", "--seed", "7", "--M", "12"];
        let a = run(&config(&args).unwrap()).unwrap().render(Format::Json);
        let b = run(&config(&args).unwrap()).unwrap().render(Format::Json);
        assert_eq!(a, b);
    }
}
