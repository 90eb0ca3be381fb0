use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use pseudoherm::models::{self, Assembly, ModelSpec};
use pseudoherm::numerics::{make_grid, BasisSpec, Representation};
use pseudoherm::Error;

use crate::args::Options;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or model text; exit 2.
    Config(String),
    /// The computation itself failed; exit 3.
    Numerical(String),
    /// Verification ran but verdicts disagree with the expected pattern; exit 4.
    Mismatch(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Mismatch(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Mismatch(rows) => write!(f, "verdict pattern mismatch: {}", rows.join("; ")),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Parse { .. } | Error::UnsupportedInBasis(_) | Error::SingularMap { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Builtin(String),
    Expression(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RepChoice {
    Grid { half_width: f64, half_points: usize },
    Basis { size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NuSetting {
    Single(f64),
    Range { start: f64, stop: f64, step: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricChoice {
    Auto,
    Flat,
    Weight(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelSource,
    pub omega: f64,
    pub nu: NuSetting,
    pub representation: Option<RepChoice>,
    pub quad: Option<usize>,
    pub count: Option<usize>,
    pub transform: Option<String>,
    pub assembly: Assembly,
    pub tmax: f64,
    pub steps: usize,
    pub metric: MetricChoice,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub digits: usize,
    pub summary: Option<PathBuf>,
}

const KEYS: &[(&str, &[&str])] = &[
    ("model", &["name", "expr", "omega", "nu"]),
    ("representation", &["grid", "basis", "quad"]),
    ("task", &["count", "transform", "assembly", "tmax", "steps", "metric"]),
    ("output", &["format", "path", "digits", "summary"]),
];

fn parse_value<T: FromStr>(key: &str, text: &str) -> CliResult<T> {
    text.trim()
        .parse()
        .map_err(|_| config_err(format!("cannot read `{text}` as a value for {key}")))
}

/// Fill every option not given on the command line from the config file.
pub fn merge_file(flags: &Options, path: &Path) -> CliResult<Options> {
    let ini = Ini::load_from_file(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let mut out = flags.clone();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if props.is_empty() {
                continue;
            }
            return Err(config_err("config keys must sit inside a [section]"));
        };
        let allowed = KEYS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, k)| *k)
            .ok_or_else(|| config_err(format!("unknown config section [{section}]")))?;
        for (key, value) in props.iter() {
            if !allowed.contains(&key) {
                return Err(config_err(format!("unknown key `{key}` in [{section}]")));
            }
            let name = format!("{section}.{key}");
            let value = value.trim().to_string();
            match (section, key) {
                ("model", "name") => fill(&mut out.model, value),
                ("model", "expr") => fill(&mut out.expr, value),
                ("model", "omega") => fill(&mut out.omega, parse_value(&name, &value)?),
                ("model", "nu") => fill(&mut out.nu, value),
                ("representation", "grid") => fill(&mut out.grid, value),
                ("representation", "basis") => fill(&mut out.basis, parse_value(&name, &value)?),
                ("representation", "quad") => fill(&mut out.quad, parse_value(&name, &value)?),
                ("task", "count") => fill(&mut out.count, parse_value(&name, &value)?),
                ("task", "transform") => fill(&mut out.transform, value),
                ("task", "assembly") => fill(&mut out.assembly, value),
                ("task", "tmax") => fill(&mut out.tmax, parse_value(&name, &value)?),
                ("task", "steps") => fill(&mut out.steps, parse_value(&name, &value)?),
                ("task", "metric") => fill(&mut out.metric, value),
                ("output", "format") => fill(&mut out.format, value),
                ("output", "path") => fill(&mut out.output, PathBuf::from(value)),
                ("output", "digits") => fill(&mut out.digits, parse_value(&name, &value)?),
                ("output", "summary") => fill(&mut out.summary, PathBuf::from(value)),
                _ => unreachable!("key list checked above"),
            }
        }
    }
    Ok(out)
}

fn fill<T>(slot: &mut Option<T>, value: T) {
    if slot.is_none() {
        *slot = Some(value);
    }
}

fn parse_grid(text: &str) -> CliResult<RepChoice> {
    let (l, n) = text
        .split_once(':')
        .ok_or_else(|| config_err(format!("grid must be L:N, got `{text}`")))?;
    let half_width: f64 = parse_value("grid half-width", l)?;
    let half_points: usize = parse_value("grid points", n)?;
    Ok(RepChoice::Grid { half_width, half_points })
}

fn parse_nu(text: &str) -> CliResult<NuSetting> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(NuSetting::Single(parse_value("nu", v)?)),
        [a, b, s] => {
            let (start, stop, step) = (parse_value("nu start", a)?, parse_value("nu stop", b)?, parse_value("nu step", s)?);
            let valid = [start, stop, step].iter().all(|v: &f64| v.is_finite()) && step > 0.0 && stop >= start;
            if !valid {
                return Err(config_err(format!(
                    "nu range needs start ≤ stop and step > 0, got `{text}`"
                )));
            }
            Ok(NuSetting::Range { start, stop, step })
        }
        _ => Err(config_err(format!("nu must be a value or start:stop:step, got `{text}`"))),
    }
}

impl RunConfig {
    /// Validate merged options.
    pub fn from_options(o: &Options) -> CliResult<Self> {
        let model = match (&o.model, &o.expr) {
            (Some(_), Some(_)) => return Err(config_err("give either a model name or an expression, not both")),
            (Some(name), None) => ModelSource::Builtin(name.clone()),
            (None, Some(text)) => ModelSource::Expression(text.clone()),
            (None, None) => return Err(config_err("no model: pass --model or --expr")),
        };
        let representation = match (&o.grid, o.basis) {
            (Some(_), Some(_)) => return Err(config_err("give either a grid or a basis, not both")),
            (Some(g), None) => Some(parse_grid(g)?),
            (None, Some(size)) => Some(RepChoice::Basis { size }),
            (None, None) => None,
        };
        let assembly = match o.assembly.as_deref() {
            None | Some("stencil") => Assembly::Stencil,
            Some("algebraic") => Assembly::Algebraic,
            Some(other) => return Err(config_err(format!("assembly must be stencil or algebraic, got `{other}`"))),
        };
        let metric = match o.metric.as_deref() {
            None | Some("auto") => MetricChoice::Auto,
            Some("flat") => MetricChoice::Flat,
            Some(w) => MetricChoice::Weight(w.to_string()),
        };
        let format = match o.format.as_deref() {
            None => None,
            Some("json") => Some(Format::Json),
            Some("csv") => Some(Format::Csv),
            Some(other) => return Err(config_err(format!("format must be json or csv, got `{other}`"))),
        };
        let digits = o.digits.unwrap_or(12);
        if !(1..=17).contains(&digits) {
            return Err(config_err(format!("digits must lie in 1..=17, got {digits}")));
        }
        if o.count == Some(0) {
            return Err(config_err("count must be at least 1"));
        }
        let tmax = o.tmax.unwrap_or(10.0);
        if !(tmax.is_finite() && tmax >= 0.0) {
            return Err(config_err(format!("tmax must be finite and non-negative, got {tmax}")));
        }
        let steps = o.steps.unwrap_or(200);
        if steps == 0 {
            return Err(config_err("steps must be at least 1"));
        }
        Ok(RunConfig {
            model,
            omega: o.omega.unwrap_or(1.0),
            nu: o.nu.as_deref().map(parse_nu).transpose()?.unwrap_or(NuSetting::Single(1.0)),
            representation,
            quad: o.quad,
            count: o.count,
            transform: o.transform.clone(),
            assembly,
            tmax,
            steps,
            metric,
            format,
            output: o.output.clone(),
            digits,
            summary: o.summary.clone(),
        })
    }

    /// Single ν value; a range is rejected.
    pub fn single_nu(&self) -> CliResult<f64> {
        match self.nu {
            NuSetting::Single(v) => Ok(v),
            NuSetting::Range { .. } => Err(config_err("a nu range is only accepted by sweep")),
        }
    }

    /// The model at exponent `nu`.
    pub fn build_model(&self, nu: f64) -> CliResult<ModelSpec> {
        Ok(match &self.model {
            ModelSource::Builtin(name) => models::builtin(name, self.omega, nu)?,
            ModelSource::Expression(text) => ModelSpec::from_expression(text)?,
        })
    }

    /// The requested representation, or the model's recommendation, checked
    /// against the model's coefficients.
    pub fn representation(&self, model: &ModelSpec) -> CliResult<Representation> {
        let rep = match self.representation {
            Some(RepChoice::Grid { half_width, half_points }) => make_grid(half_width, half_points)?.into(),
            Some(RepChoice::Basis { size }) => BasisSpec::new(size, 1.0)?.into(),
            None => model.recommended,
        };
        model.check_representation(&rep)?;
        Ok(rep)
    }

    /// Quadrature points: the flag, else the model default.
    pub fn quadrature(&self, model: &ModelSpec) -> Option<usize> {
        self.quad.or(model.quadrature_points)
    }
}
