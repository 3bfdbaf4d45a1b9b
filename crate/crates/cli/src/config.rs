//! Run configuration: flat `dotted.key = value` lines.
//!
//! Values are TOML scalars or arrays (`1.5`, `"path"`, `[0.5, 1.0]`); a bare
//! word such as `coulomb` is read as a string. `#` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use brink_core::envelope::{DecayForm, EnvelopeKind};
use brink_core::solver::SolveOptions;
use brink_core::threshold::{default_bracket, Parameter};
use brink_core::{RadialModel, Symmetry, Tail};
use toml::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Matching,
    Bisection,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSource {
    Critical,
    Solve,
    Input,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridConfig {
    pub r_max: Option<f64>,
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalConfig {
    pub parameter: Parameter,
    pub method: MethodChoice,
    pub bracket: (f64, f64),
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeConfig {
    /// `a` of an `ab` envelope may be left out and taken as the binding energy.
    pub kind: EnvelopeKind,
    pub a_from_binding: bool,
    pub region_r: Option<f64>,
    pub state: StateSource,
    pub parameter: Parameter,
    pub input: Option<PathBuf>,
    pub binding_energy: f64,
    pub fit_window: Option<(f64, f64)>,
    pub fit_form: DecayForm,
    pub lower: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub parameter: Parameter,
    pub values: Vec<f64>,
    pub fit_window: Option<(f64, f64)>,
    pub fit_form: DecayForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub csv: bool,
    pub json: bool,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: RadialModel,
    pub grid: GridConfig,
    pub solve: SolveOptions,
    pub critical: CriticalConfig,
    pub envelope: Option<EnvelopeConfig>,
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Strips a trailing `#` comment that is not inside a quoted string.
fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    for (i, c) in line.char_indices() {
        match (quote, c) {
            (None, '#') => return &line[..i],
            (None, '"' | '\'') => quote = Some(c),
            (Some(q), _) if c == q => quote = None,
            _ => {}
        }
    }
    line
}

fn parse_value(text: &str) -> Option<Value> {
    if let Ok(mut table) = toml::from_str::<toml::Table>(&format!("v = {text}")) {
        return table.remove("v");
    }
    let bare = !text.is_empty()
        && text
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "_-./".contains(c));
    bare.then(|| Value::String(text.to_string()))
}

/// Parses the key/value text into a flat map.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, Value>, CliError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected `key = value`", n + 1)))?;
        let key = key.trim();
        let valid_key = !key.is_empty()
            && key.split('.').all(|part| {
                !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            });
        if !valid_key {
            return Err(config_err(format!("line {}: bad key {key:?}", n + 1)));
        }
        let value = parse_value(value.trim())
            .ok_or_else(|| config_err(format!("line {}: cannot parse value for {key}", n + 1)))?;
        if out.insert(key.to_string(), value).is_some() {
            return Err(config_err(format!("line {}: duplicate key {key}", n + 1)));
        }
    }
    Ok(out)
}

/// Typed lookups that remember which keys were consumed.
struct Entries {
    map: BTreeMap<String, Value>,
    used: BTreeSet<String>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<&Value> {
        let v = self.map.get(key)?;
        self.used.insert(key.to_string());
        Some(v)
    }

    fn has_prefix(&self, prefix: &str) -> bool {
        self.map.keys().any(|k| k.starts_with(prefix))
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(config_err(format!("{key}: expected a number, got {v}"))),
        }
    }

    fn required_float(&mut self, key: &str) -> Result<f64, CliError> {
        self.float(key)?
            .ok_or_else(|| config_err(format!("missing {key}")))
    }

    fn uint(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(v) => Err(config_err(format!(
                "{key}: expected a nonnegative integer, got {v}"
            ))),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(config_err(format!("{key}: expected a string, got {v}"))),
        }
    }

    fn floats(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(v) = self.take(key) else {
            return Ok(None);
        };
        let Value::Array(items) = v else {
            return Err(config_err(format!("{key}: expected an array, got {v}")));
        };
        items
            .iter()
            .map(|x| match x {
                Value::Float(f) => Ok(*f),
                Value::Integer(i) => Ok(*i as f64),
                other => Err(config_err(format!("{key}: non-numeric entry {other}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn pair(&mut self, key: &str) -> Result<Option<(f64, f64)>, CliError> {
        match self.floats(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 && v[0] < v[1] => Ok(Some((v[0], v[1]))),
            Some(v) => Err(config_err(format!(
                "{key}: expected [lo, hi] with lo < hi, got {v:?}"
            ))),
        }
    }

    fn choice<T>(&mut self, key: &str, options: &[(&str, T)]) -> Result<Option<T>, CliError>
    where
        T: Copy,
    {
        let Some(s) = self.string(key)? else {
            return Ok(None);
        };
        options
            .iter()
            .find(|(name, _)| *name == s)
            .map(|(_, v)| Some(*v))
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                config_err(format!("{key}: {s:?} is not one of {}", names.join("|")))
            })
    }

    fn finish(self) -> Result<(), CliError> {
        let unknown: Vec<&String> = self
            .map
            .keys()
            .filter(|k| !self.used.contains(*k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(config_err(format!(
                "unknown keys: {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }
}

const PARAMETERS: [(&str, Parameter); 2] = [
    ("well_depth", Parameter::WellDepth),
    ("tail_strength", Parameter::TailStrength),
];
const FORMS: [(&str, DecayForm); 2] = [
    ("critical", DecayForm::Critical),
    ("subcritical", DecayForm::Subcritical),
];

fn model_from(e: &mut Entries) -> Result<RadialModel, CliError> {
    let symmetry = e
        .choice(
            "model.symmetry",
            &[
                ("even1d", Symmetry::Even1d),
                ("odd1d", Symmetry::Odd1d),
                ("swave3d", Symmetry::Swave3d),
            ],
        )?
        .unwrap_or(Symmetry::Even1d);
    let kind = e
        .string("model.tail.kind")?
        .ok_or_else(|| config_err("missing model.tail.kind"))?;
    let tail = match kind.as_str() {
        "coulomb" => Tail::Coulomb {
            strength: e.required_float("model.tail.strength")?,
            exponent: e.float("model.tail.exponent")?.unwrap_or(1.0),
        },
        "barrier" => Tail::Barrier {
            height: e.required_float("model.tail.strength")?,
            outer_radius: e.required_float("model.tail.outer_radius")?,
        },
        "none" => Tail::None,
        other => {
            return Err(config_err(format!(
                "model.tail.kind: {other:?} is not one of coulomb|barrier|none"
            )))
        }
    };
    let model = RadialModel {
        two_m: e.float("model.two_m")?.unwrap_or(1.0),
        well_depth: e.required_float("model.well_depth")?,
        well_radius: e.float("model.well_radius")?.unwrap_or(1.0),
        tail,
        symmetry,
    };
    model.validate().map_err(|violations| {
        let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        config_err(format!("invalid model: {}", text.join("; ")))
    })?;
    Ok(model)
}

fn envelope_from(e: &mut Entries) -> Result<Option<EnvelopeConfig>, CliError> {
    if !e.has_prefix("envelope.") {
        return Ok(None);
    }
    let kind_name = e
        .string("envelope.kind")?
        .ok_or_else(|| config_err("missing envelope.kind"))?;
    let mut a_from_binding = false;
    let kind = match kind_name.as_str() {
        "linear" => EnvelopeKind::Linear {
            mu: e.required_float("envelope.mu")?,
        },
        "sqrt" => EnvelopeKind::Sqrt {
            b: e.required_float("envelope.b")?,
        },
        "ab" => {
            let a = e.float("envelope.a")?;
            a_from_binding = a.is_none();
            EnvelopeKind::Ab {
                a: a.unwrap_or(0.0),
                b: e.required_float("envelope.b")?,
            }
        }
        "ansatz" => EnvelopeKind::Ansatz {
            a: e.float("envelope.a")?.unwrap_or(0.0),
            b: e.required_float("envelope.b")?,
            k: e.required_float("envelope.k")?,
            kappa: e.required_float("envelope.kappa")?,
        },
        "general_u" => EnvelopeKind::GeneralU {
            delta: e.required_float("envelope.delta")?,
            r0: e.float("envelope.r0")?.unwrap_or(1.0),
        },
        other => {
            return Err(config_err(format!(
                "envelope.kind: {other:?} is not one of linear|sqrt|ab|ansatz|general_u"
            )))
        }
    };
    let state = e
        .choice(
            "envelope.state",
            &[
                ("critical", StateSource::Critical),
                ("solve", StateSource::Solve),
                ("input", StateSource::Input),
            ],
        )?
        .unwrap_or(StateSource::Critical);
    let input = e.string("envelope.input")?.map(PathBuf::from);
    if (state == StateSource::Input) != input.is_some() {
        return Err(config_err(
            "envelope.input is required exactly when envelope.state = input",
        ));
    }
    let default_form = if state == StateSource::Solve {
        DecayForm::Subcritical
    } else {
        DecayForm::Critical
    };
    let lower = match (
        e.float("envelope.lower_k")?,
        e.float("envelope.lower_kappa")?,
    ) {
        (Some(k), Some(kappa)) => Some((k, kappa)),
        (None, None) => None,
        _ => {
            return Err(config_err(
                "envelope.lower_k and envelope.lower_kappa go together",
            ))
        }
    };
    let binding_energy = e.float("envelope.binding_energy")?.unwrap_or(0.0);
    if !(binding_energy >= 0.0) {
        return Err(config_err("envelope.binding_energy must be >= 0"));
    }
    Ok(Some(EnvelopeConfig {
        kind,
        a_from_binding,
        region_r: e.float("envelope.region_r")?,
        state,
        parameter: e
            .choice("envelope.parameter", &PARAMETERS)?
            .unwrap_or(Parameter::WellDepth),
        input,
        binding_energy,
        fit_window: e.pair("envelope.fit_window")?,
        fit_form: e
            .choice("envelope.fit_form", &FORMS)?
            .unwrap_or(default_form),
        lower,
    }))
}

fn sweep_from(e: &mut Entries) -> Result<Option<SweepConfig>, CliError> {
    if !e.has_prefix("sweep.") {
        return Ok(None);
    }
    let values = e
        .floats("sweep.values")?
        .ok_or_else(|| config_err("missing sweep.values"))?;
    if values.is_empty() || values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(config_err(
            "sweep.values must be nonempty and strictly increasing",
        ));
    }
    Ok(Some(SweepConfig {
        parameter: e
            .choice("sweep.parameter", &PARAMETERS)?
            .ok_or_else(|| config_err("missing sweep.parameter"))?,
        values,
        fit_window: e.pair("sweep.fit_window")?,
        fit_form: e
            .choice("sweep.fit_form", &FORMS)?
            .unwrap_or(DecayForm::Subcritical),
    }))
}

fn output_from(e: &mut Entries) -> Result<OutputConfig, CliError> {
    let directory = PathBuf::from(e.string("output.directory")?.unwrap_or_else(|| ".".into()));
    let (mut csv, mut json) = (true, true);
    if let Some(v) = e.take("output.formats").cloned() {
        let Value::Array(items) = v else {
            return Err(config_err(
                "output.formats: expected an array such as [\"csv\", \"json\"]",
            ));
        };
        (csv, json) = (false, false);
        for item in items {
            match item.as_str() {
                Some("csv") => csv = true,
                Some("json") => json = true,
                _ => return Err(config_err(format!("output.formats: unknown format {item}"))),
            }
        }
    }
    let stride = e.uint("output.stride")?.unwrap_or(1);
    if stride == 0 {
        return Err(config_err("output.stride must be >= 1"));
    }
    Ok(OutputConfig {
        directory,
        csv,
        json,
        stride,
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut e = Entries {
            map: parse_entries(text)?,
            used: BTreeSet::new(),
        };
        let model = model_from(&mut e)?;
        let grid = GridConfig {
            r_max: e.float("grid.r_max")?,
            h: e.float("grid.h")?,
        };
        if grid.r_max.is_some_and(|r| !(r > model.well_radius))
            || grid.h.is_some_and(|h| !(h > 0.0))
        {
            return Err(config_err(
                "grid.r_max must exceed the well radius and grid.h must be > 0",
            ));
        }
        let solve = SolveOptions {
            e_tol: e.float("solve.e_tol")?,
            max_iter: e.uint("solve.max_iter")?.unwrap_or(200),
        };
        let parameter = e
            .choice("critical.parameter", &PARAMETERS)?
            .unwrap_or(Parameter::WellDepth);
        let critical = CriticalConfig {
            parameter,
            method: e
                .choice(
                    "critical.method",
                    &[
                        ("matching", MethodChoice::Matching),
                        ("bisection", MethodChoice::Bisection),
                        ("both", MethodChoice::Both),
                    ],
                )?
                .unwrap_or(MethodChoice::Matching),
            bracket: e
                .pair("critical.bracket")?
                .unwrap_or(default_bracket(parameter)),
            tolerance: e.float("critical.tolerance")?.unwrap_or(1e-4),
        };
        if !(critical.tolerance > 0.0) {
            return Err(config_err("critical.tolerance must be > 0"));
        }
        let envelope = envelope_from(&mut e)?;
        let sweep = sweep_from(&mut e)?;
        let output = output_from(&mut e)?;
        e.finish()?;
        Ok(Self {
            model,
            grid,
            solve,
            critical,
            envelope,
            sweep,
            output,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| CliError::Io(format!("{}: {err}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
# coulomb tail, critical search
model.well_depth = 1.0
model.tail.kind = coulomb      # bare word
model.tail.strength = 1
critical.method = "both"
critical.bracket = [0.3, 1.0]
output.directory = "out # not a comment"
"#;

    #[test]
    fn parses_flat_keys() {
        let cfg = RunConfig::parse(EXAMPLE).unwrap();
        assert_eq!(cfg.model, RadialModel::example1(1.0));
        assert_eq!(cfg.critical.method, MethodChoice::Both);
        assert_eq!(cfg.critical.bracket, (0.3, 1.0));
        assert_eq!(cfg.output.directory, PathBuf::from("out # not a comment"));
        assert!(cfg.output.csv && cfg.output.json);
        assert!(cfg.envelope.is_none() && cfg.sweep.is_none());
    }

    #[test]
    fn rejects_bad_input() {
        let base = "model.well_depth = 1\nmodel.tail.kind = none\n";
        assert!(RunConfig::parse(base).is_ok());
        for extra in [
            "model.wel_depth = 2",
            "model.well_radius = -1",
            "sweep.parameter = well_depth\nsweep.values = [1.0, 0.5]",
            "sweep.parameter = well_depth\nsweep.values = []",
            "critical.bracket = [2, 1]",
            "grid.h = 0",
            "output.formats = [\"xml\"]",
            "envelope.kind = sqrt",
            "model.two_m = 1\nmodel.two_m = 2",
            "no equals sign",
        ] {
            let text = format!("{base}{extra}\n");
            assert!(
                matches!(RunConfig::parse(&text), Err(CliError::Config(_))),
                "accepted: {extra}"
            );
        }
    }

    #[test]
    fn envelope_block() {
        let text = "model.well_depth = 0.7\nmodel.tail.kind = coulomb\nmodel.tail.strength = 1\n\
                    envelope.kind = ab\nenvelope.b = 0.9\nenvelope.state = solve\n";
        let env = RunConfig::parse(text).unwrap().envelope.unwrap();
        assert!(env.a_from_binding);
        assert_eq!(env.fit_form, DecayForm::Subcritical);
        assert_eq!(env.state, StateSource::Solve);
    }
}
