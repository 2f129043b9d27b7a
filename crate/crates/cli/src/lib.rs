//! Sweep configuration, CSV output and the command implementations behind the
//! `tpa-metrology` binary.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use tpa_core::error::TpaError;
use tpa_core::fock::{FockCutoff, ProbeSpec, DEFAULT_CUTOFF_CAP, DEFAULT_TAIL_TOL};
use tpa_core::metrology::{evaluate, Evaluation, Observable, Sensitivity};
use tpa_core::{LossSpec, QuadGridSpec};

pub const CUTOFF_ENV: &str = "TPA_CUTOFF_MAX";

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 1.
    Usage(String),
    /// Numerical contract violated: exit code 2.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<TpaError> for CliError {
    fn from(e: TpaError) -> Self {
        match e {
            TpaError::InvalidParameter(m) => CliError::Usage(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateFamily {
    SqueezedVacuum,
    Coherent,
    SqueezedCoherent,
}

impl StateFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            StateFamily::SqueezedVacuum => "sv",
            StateFamily::Coherent => "coherent",
            StateFamily::SqueezedCoherent => "squeezed_coherent",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "sv" | "squeezed_vacuum" => Ok(StateFamily::SqueezedVacuum),
            "coherent" | "coh" => Ok(StateFamily::Coherent),
            "squeezed_coherent" | "sc" => Ok(StateFamily::SqueezedCoherent),
            other => usage(format!("unknown state family '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Nbar,
    Eta,
    Phi,
    NR,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Nbar => "nbar",
            SweepAxis::Eta => "eta",
            SweepAxis::Phi => "phi",
            SweepAxis::NR => "n_r",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "nbar" => Ok(SweepAxis::Nbar),
            "eta" => Ok(SweepAxis::Eta),
            "phi" => Ok(SweepAxis::Phi),
            "n_r" => Ok(SweepAxis::NR),
            other => usage(format!("unknown sweep axis '{other}'")),
        }
    }
}

const FIXED_KEYS: [&str; 5] = ["nbar", "eta", "phi", "n_r", "tail_tol"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub state_family: StateFamily,
    pub observable: Observable,
    pub sweep_axis: SweepAxis,
    pub axis_values: Vec<f64>,
    pub fixed_params: BTreeMap<String, f64>,
    pub output_path: Option<String>,
}

/// Parses `values` entries: a comma list, `linspace(a, b, n)` or `logspace(a, b, n)`
/// (base-10 exponents).
pub fn parse_values(text: &str) -> CliResult<Vec<f64>> {
    let t = text.trim();
    let ranged = |prefix: &str| -> Option<CliResult<(f64, f64, usize)>> {
        let inner = t
            .strip_prefix(prefix)?
            .trim()
            .strip_prefix('(')?
            .strip_suffix(')')?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Some(usage(format!("{prefix} needs three arguments")));
        }
        let parsed = (|| -> CliResult<(f64, f64, usize)> {
            Ok((
                parse_number(parts[0])?,
                parse_number(parts[1])?,
                parse_count(parts[2])?,
            ))
        })();
        Some(parsed)
    };
    if let Some(r) = ranged("linspace") {
        let (a, b, n) = r?;
        return Ok(linspace(a, b, n));
    }
    if let Some(r) = ranged("logspace") {
        let (a, b, n) = r?;
        return Ok(linspace(a, b, n)
            .into_iter()
            .map(|e| 10f64.powf(e))
            .collect());
    }
    if t.is_empty() {
        return Ok(Vec::new());
    }
    t.split(',').map(|s| parse_number(s.trim())).collect()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn parse_number(s: &str) -> CliResult<f64> {
    let v = match s {
        "pi" => std::f64::consts::PI,
        "pi/2" => std::f64::consts::FRAC_PI_2,
        "pi/4" => std::f64::consts::FRAC_PI_4,
        _ => s
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("'{s}' is not a number")))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        usage(format!("'{s}' is not finite"))
    }
}

fn parse_count(s: &str) -> CliResult<usize> {
    s.parse::<usize>()
        .map_err(|_| CliError::Usage(format!("'{s}' is not a point count")))
}

impl SweepConfig {
    /// Parses `key = value` lines under a `[sweep]` header; `#` starts a comment.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        let mut in_section = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if line != "[sweep]" {
                    return usage(format!("line {}: unknown section {line}", lineno + 1));
                }
                in_section = true;
                continue;
            }
            if !in_section {
                return usage(format!(
                    "line {}: entries must follow a [sweep] header",
                    lineno + 1
                ));
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("line {}: expected key = value", lineno + 1));
            };
            let key = k.trim().to_string();
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return usage(format!("line {}: duplicate key '{key}'", lineno + 1));
            }
        }
        if !in_section {
            return usage("missing [sweep] section");
        }
        Self::from_entries(entries)
    }

    pub fn from_entries(mut entries: BTreeMap<String, String>) -> CliResult<Self> {
        let mut take = |k: &str| entries.remove(k);
        let state_family =
            StateFamily::parse(&take("state_family").ok_or_else(|| missing("state_family"))?)?;
        let observable: Observable = take("observable")
            .ok_or_else(|| missing("observable"))?
            .parse()
            .map_err(CliError::from)?;
        let sweep_axis = SweepAxis::parse(&take("axis").ok_or_else(|| missing("axis"))?)?;
        let axis_values = parse_values(&take("values").ok_or_else(|| missing("values"))?)?;
        let output_path = take("output");
        let mut fixed_params = BTreeMap::new();
        for key in FIXED_KEYS {
            if let Some(v) = take(key) {
                fixed_params.insert(key.to_string(), parse_number(&v)?);
            }
        }
        if let Some(k) = entries.keys().next() {
            return usage(format!("unknown key '{k}'"));
        }
        let cfg = SweepConfig {
            state_family,
            observable,
            sweep_axis,
            axis_values,
            fixed_params,
            output_path,
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> CliResult<()> {
        let Some((k, v)) = assignment.split_once('=') else {
            return usage(format!("override '{assignment}' is not key=value"));
        };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "state_family" => self.state_family = StateFamily::parse(v)?,
            "observable" => self.observable = v.parse().map_err(CliError::from)?,
            "axis" => self.sweep_axis = SweepAxis::parse(v)?,
            "values" => self.axis_values = parse_values(v)?,
            "output" => self.output_path = Some(v.to_string()),
            _ if FIXED_KEYS.contains(&k) => {
                self.fixed_params.insert(k.to_string(), parse_number(v)?);
            }
            _ => return usage(format!("unknown key '{k}'")),
        }
        self.check()
    }

    fn check(&self) -> CliResult<()> {
        if self.axis_values.is_empty() {
            return usage("sweep axis has no values");
        }
        if self.axis_values.windows(2).any(|w| w[1] <= w[0]) {
            return usage("sweep values must be strictly increasing");
        }
        let axis = self.sweep_axis.as_str();
        if self.fixed_params.contains_key(axis) {
            return usage(format!("'{axis}' is both swept and fixed"));
        }
        match (self.state_family, self.sweep_axis) {
            (StateFamily::SqueezedVacuum, SweepAxis::Phi | SweepAxis::NR)
            | (StateFamily::Coherent, SweepAxis::NR) => {
                return usage(format!(
                    "axis '{axis}' does not apply to state family '{}'",
                    self.state_family.as_str()
                ));
            }
            _ => {}
        }
        if self.sweep_axis != SweepAxis::Nbar && !self.fixed_params.contains_key("nbar") {
            return usage("'nbar' must be fixed when it is not swept");
        }
        Ok(())
    }

    fn param(&self, key: &str, axis_value: f64, default: f64) -> f64 {
        if self.sweep_axis.as_str() == key {
            axis_value
        } else {
            self.fixed_params.get(key).copied().unwrap_or(default)
        }
    }

    /// Probe and loss at one axis value.
    pub fn point(&self, x: f64) -> CliResult<(ProbeSpec, LossSpec)> {
        let nbar = self.param("nbar", x, f64::NAN);
        let phi = self.param("phi", x, 0.0);
        let loss = LossSpec::new(self.param("eta", x, 1.0))?;
        let spec = match self.state_family {
            StateFamily::SqueezedVacuum => ProbeSpec::squeezed_vacuum_photons(nbar)?,
            StateFamily::Coherent => ProbeSpec::coherent_photons(nbar, phi)?,
            StateFamily::SqueezedCoherent => {
                ProbeSpec::with_incident_photons(nbar, self.param("n_r", x, 0.0), phi)?
            }
        };
        Ok((spec, loss))
    }

    pub fn tail_tol(&self) -> f64 {
        self.fixed_params
            .get("tail_tol")
            .copied()
            .unwrap_or(DEFAULT_TAIL_TOL)
    }

    /// Canonical `key = value` echo used in the CSV header.
    pub fn echo(&self) -> Vec<String> {
        let mut lines = vec![
            format!("state_family = {}", self.state_family.as_str()),
            format!("observable = {}", self.observable),
            format!("axis = {}", self.sweep_axis.as_str()),
            format!(
                "values = {}",
                self.axis_values
                    .iter()
                    .map(|v| fmt_num(*v))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        ];
        for (k, v) in &self.fixed_params {
            lines.push(format!("{k} = {}", fmt_num(*v)));
        }
        lines
    }
}

fn missing(key: &str) -> CliError {
    CliError::Usage(format!("missing key '{key}'"))
}

/// Twelve significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}

/// Cutoff cap from `TPA_CUTOFF_MAX`, or the default.
pub fn cutoff_cap() -> CliResult<usize> {
    match std::env::var(CUTOFF_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "{CUTOFF_ENV} must be a positive integer, got '{v}'"
                ))
            }),
        Err(_) => Ok(DEFAULT_CUTOFF_CAP),
    }
}

pub fn cutoff(tail_tol: f64) -> CliResult<FockCutoff> {
    Ok(FockCutoff::adaptive(tail_tol)?.with_cap(cutoff_cap()?))
}

pub const CSV_HEADER: &str =
    "axis_value,mean_n_incident,fi_numeric,sens_analytic_inverse,cutoff_used,warnings";

fn csv_row(x: f64, e: &Evaluation) -> String {
    let inverse = match e.analytic.sensitivity {
        Sensitivity::Finite(v) => fmt_num(1.0 / v),
        Sensitivity::Diverges => "divergent".to_string(),
    };
    let warnings = e.warnings.join("; ").replace(',', ";");
    format!(
        "{},{},{},{},{},{}",
        fmt_num(x),
        fmt_num(e.incident_photons),
        fmt_num(e.fisher.fi),
        inverse,
        e.cutoff_used,
        warnings
    )
}

/// Result of a sweep: CSV text plus warnings destined for standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub csv: String,
    pub warnings: Vec<String>,
}

/// Evaluates every axis value (in parallel when `parallel`) and assembles the
/// CSV in axis order.
pub fn run_sweep(config: &SweepConfig, parallel: bool) -> CliResult<SweepOutput> {
    let cut = cutoff(config.tail_tol())?;
    let grid = QuadGridSpec::default();
    let eval = |&x: &f64| -> CliResult<Evaluation> {
        let (spec, loss) = config.point(x)?;
        Ok(evaluate(&spec, &loss, config.observable, &cut, &grid)?)
    };
    let results: Vec<CliResult<Evaluation>> = if parallel {
        config.axis_values.par_iter().map(eval).collect()
    } else {
        config.axis_values.iter().map(eval).collect()
    };
    let mut csv = format!("# tpa-metrology {}\n", env!("CARGO_PKG_VERSION"));
    for line in config.echo() {
        csv.push_str(&format!("# {line}\n"));
    }
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    let mut warnings = Vec::new();
    for (x, r) in config.axis_values.iter().zip(results) {
        let e = r?;
        for w in &e.warnings {
            warnings.push(format!(
                "{} = {}: {w}",
                config.sweep_axis.as_str(),
                fmt_num(*x)
            ));
        }
        csv.push_str(&csv_row(*x, &e));
        csv.push('\n');
    }
    Ok(SweepOutput { csv, warnings })
}

pub fn load_config(path: &Path) -> CliResult<SweepConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    SweepConfig::parse(&text)
}

/// Builds a probe from explicit squeezing, seed amplitude and phase flags.
pub fn probe_from_flags(family: StateFamily, r: f64, alpha: f64, phi: f64) -> CliResult<ProbeSpec> {
    Ok(match family {
        StateFamily::SqueezedVacuum => ProbeSpec::squeezed_vacuum(r)?,
        StateFamily::Coherent => ProbeSpec::coherent(alpha, phi)?,
        StateFamily::SqueezedCoherent => ProbeSpec::new(r, 0.0, alpha, phi)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "
# coherent photon counting
[sweep]
state_family = coherent
observable = photon_number
axis = nbar
values = 1, 2, 4
eta = 0.5
";

    #[test]
    fn parses_basic_config() {
        let cfg = SweepConfig::parse(BASIC).unwrap();
        assert_eq!(cfg.state_family, StateFamily::Coherent);
        assert_eq!(cfg.axis_values, vec![1.0, 2.0, 4.0]);
        assert_eq!(cfg.fixed_params["eta"], 0.5);
    }

    #[test]
    fn value_generators() {
        assert_eq!(
            parse_values("linspace(0, 1, 3)").unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        let v = parse_values("logspace(0, 2, 3)").unwrap();
        assert!((v[2] - 100.0).abs() < 1e-12 && (v[1] - 10.0).abs() < 1e-12);
        assert!(parse_values("linspace(0, 1)").is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        let empty = BASIC.replace("values = 1, 2, 4", "values = ");
        assert!(matches!(
            SweepConfig::parse(&empty),
            Err(CliError::Usage(_))
        ));
        let decreasing = BASIC.replace("values = 1, 2, 4", "values = 4, 2");
        assert!(SweepConfig::parse(&decreasing).is_err());
        let both = BASIC.replace("eta = 0.5", "eta = 0.5\nnbar = 3");
        assert!(SweepConfig::parse(&both).is_err());
        let no_section = BASIC.replace("[sweep]", "");
        assert!(SweepConfig::parse(&no_section).is_err());
        let bad_axis = BASIC.replace("axis = nbar", "axis = n_r");
        assert!(SweepConfig::parse(&bad_axis).is_err());
        let unknown = BASIC.replace("eta = 0.5", "eta = 0.5\ncolour = 3");
        assert!(SweepConfig::parse(&unknown).is_err());
    }

    #[test]
    fn overrides_apply_and_recheck() {
        let mut cfg = SweepConfig::parse(BASIC).unwrap();
        cfg.set("eta=0.25").unwrap();
        assert_eq!(cfg.fixed_params["eta"], 0.25);
        assert!(cfg.set("nbar=2").is_err());
    }

    #[test]
    fn sweep_marks_divergent_points() {
        let text =
            "[sweep]\nstate_family = sv\nobservable = quad_q\naxis = nbar\nvalues = 0.5, 1\n";
        let out = run_sweep(&SweepConfig::parse(text).unwrap(), false).unwrap();
        let rows: Vec<&str> = out
            .csv
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .collect();
        assert_eq!(rows.len(), 2);
        assert!(rows
            .iter()
            .all(|r| r.split(',').nth(3) == Some("divergent")));
    }
}
