use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tpa_core::metrology::{evaluate, limit_table, phase_scan, squeeze_scan, Observable, ScanPoint};
use tpa_core::validate::{run_validate, ValidateOptions};
use tpa_core::{LossSpec, QuadGridSpec};
use tpa_metrology::{
    cutoff, fmt_num, load_config, probe_from_flags, run_sweep, CliError, CliResult, StateFamily,
};

#[derive(Parser)]
#[command(
    name = "tpa-metrology",
    version,
    about = "Sensitivity and Fisher information for two-photon absorption sensing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep described by a config file and emit CSV.
    Sweep {
        config: PathBuf,
        /// Override a config entry, `key=value`. May be repeated.
        #[arg(long = "set")]
        set: Vec<String>,
        /// Write CSV here instead of the config's output path or stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Evaluate points one at a time.
        #[arg(long)]
        serial: bool,
    },
    /// Error-propagation sensitivity, numeric and closed form, as JSON.
    Sensitivity(PointArgs),
    /// Classical Fisher information of the chosen measurement, as JSON.
    Fisher(PointArgs),
    /// Sweep the seed phase at fixed photon numbers; CSV on stdout.
    PhaseScan {
        #[arg(long)]
        nbar: f64,
        #[arg(long)]
        n_r: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value = "photon_number")]
        observable: String,
        #[arg(long, default_value_t = 73)]
        points: usize,
        #[arg(long, default_value_t = 1e-10)]
        tail_tol: f64,
    },
    /// Photon-counting Fisher information versus squeezed fraction at fixed
    /// photon number; CSV on stdout.
    SqueezeScan {
        #[arg(long)]
        nbar: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 51)]
        points: usize,
        #[arg(long, default_value_t = 1e-10)]
        tail_tol: f64,
    },
    /// Closed-form sensitivity limits as JSON.
    Table {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        nbar: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
    },
    /// Run the built-in consistency checks and print a JSON report.
    Validate {
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct PointArgs {
    /// sv, coherent or squeezed_coherent.
    #[arg(long)]
    state: String,
    /// photon_number, quad_q or quad_p.
    #[arg(long)]
    observable: String,
    /// Squeezing parameter.
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    /// Seed amplitude |α|.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Seed phase.
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 1e-10)]
    tail_tol: f64,
}

fn to_json<T: serde::Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Numerical(e.to_string()))
}

fn scan_csv(header: &str, axis: &str, points: &[ScanPoint]) -> String {
    let mut out = format!(
        "# tpa-metrology {}\n# {header}\n",
        env!("CARGO_PKG_VERSION")
    );
    out.push_str(&format!(
        "{axis},mean_n_incident,fi_numeric,sens_analytic_inverse,cutoff_used,warnings\n"
    ));
    for p in points {
        let e = &p.evaluation;
        let inv = e
            .analytic
            .delta_eps_sq()
            .map_or("divergent".to_string(), |v| fmt_num(1.0 / v));
        for w in &e.warnings {
            eprintln!("warning: {axis} = {}: {w}", fmt_num(p.x));
        }
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_num(p.x),
            fmt_num(e.incident_photons),
            fmt_num(e.fisher.fi),
            inv,
            e.cutoff_used,
            e.warnings.join("; ").replace(',', ";")
        ));
    }
    out
}

fn run(cmd: Command) -> CliResult<ExitCode> {
    match cmd {
        Command::Sweep {
            config,
            set,
            output,
            serial,
        } => {
            let mut cfg = load_config(&config)?;
            for s in &set {
                cfg.set(s)?;
            }
            let out = run_sweep(&cfg, !serial)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            match output.or(cfg.output_path.as_ref().map(PathBuf::from)) {
                Some(path) => fs::write(&path, &out.csv).map_err(|e| {
                    CliError::Usage(format!("cannot write {}: {e}", path.display()))
                })?,
                None => print!("{}", out.csv),
            }
        }
        Command::Sensitivity(a) => {
            let e = point_eval(&a)?;
            let report = serde_json::json!({
                "spec": e.spec,
                "observable": e.observable,
                "eta": e.eta,
                "incident_photons": e.incident_photons,
                "numeric": e.numeric,
                "analytic": e.analytic,
                "cutoff_used": e.cutoff_used,
                "warnings": e.warnings,
            });
            println!("{}", to_json(&report)?);
        }
        Command::Fisher(a) => {
            let e = point_eval(&a)?;
            let report = serde_json::json!({
                "spec": e.spec,
                "observable": e.observable,
                "eta": e.eta,
                "incident_photons": e.incident_photons,
                "fisher": e.fisher,
                "cutoff_used": e.cutoff_used,
                "warnings": e.warnings,
            });
            println!("{}", to_json(&report)?);
        }
        Command::PhaseScan {
            nbar,
            n_r,
            eta,
            observable,
            points,
            tail_tol,
        } => {
            if points < 2 {
                return Err(CliError::Usage("a scan needs at least two points".into()));
            }
            let obs: Observable = observable.parse()?;
            let phis: Vec<f64> = (0..points)
                .map(|i| PI * i as f64 / (points - 1) as f64)
                .collect();
            let pts = phase_scan(
                nbar,
                n_r,
                &LossSpec::new(eta)?,
                obs,
                &phis,
                &cutoff(tail_tol)?,
            )?;
            let header =
                format!("phase scan: nbar = {nbar}, n_r = {n_r}, eta = {eta}, observable = {obs}");
            print!("{}", scan_csv(&header, "phi", &pts));
        }
        Command::SqueezeScan {
            nbar,
            eta,
            points,
            tail_tol,
        } => {
            let pts = squeeze_scan(nbar, &LossSpec::new(eta)?, points, &cutoff(tail_tol)?)?;
            let header = format!(
                "squeeze scan: nbar = {nbar}, eta = {eta}, phi = pi/2, observable = photon_number"
            );
            print!("{}", scan_csv(&header, "n_r", &pts));
        }
        Command::Table { r, nbar, eta, phi } => {
            println!("{}", to_json(&limit_table(r, nbar, eta, phi)?)?);
        }
        Command::Validate { eta, seed } => {
            let mut opts = ValidateOptions::default();
            if let Some(eta) = eta {
                LossSpec::new(eta)?;
                opts.eta = eta;
            }
            if let Some(seed) = seed {
                opts.seed = seed;
            }
            let report = run_validate(&opts);
            println!("{}", to_json(&report)?);
            if !report.passed() {
                for f in report.failures() {
                    eprintln!("failed: {}: {}", f.name, f.detail);
                }
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn point_eval(a: &PointArgs) -> CliResult<tpa_core::metrology::Evaluation> {
    let family = StateFamily::parse(&a.state)?;
    let obs: Observable = a.observable.parse()?;
    let spec = probe_from_flags(family, a.r, a.alpha, a.phi)?;
    let e = evaluate(
        &spec,
        &LossSpec::new(a.eta)?,
        obs,
        &cutoff(a.tail_tol)?,
        &QuadGridSpec::default(),
    )?;
    for w in &e.warnings {
        eprintln!("warning: {w}");
    }
    Ok(e)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
