//! Command-line front-end: JSON models in, JSON/CSV results out.
//!
//! Exit codes: 0 success, 2 malformed input (flags or model schema),
//! 3 domain errors (NotFluid, OverPacked, divergence, ...).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use tonks::expansions::{
    coefficient_table_csv, exact_criterion, sufficient_criteria, truncated_pressure,
    CriterionReport,
};
use tonks::finite_volume::{
    packing_distribution, renewal_asymptotics_check, xi_continuous, xi_discrete,
};
use tonks::model::DEFAULT_TOL;
use tonks::regime::{classify_with, packing_fraction, pressure_with, Regime};
use tonks::virial::{
    activities_from_densities, corollary_domain_report, densities, virial_pressure,
    DensityVector,
};
use tonks::{ActivityModel, EnsembleKind, Error, Family};

#[derive(Parser)]
#[command(
    name = "tonks",
    version,
    about = "Exact thermodynamics for mixtures of non-overlapping rods"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ModelArg {
    /// Model description (JSON file).
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Model file as a positional argument.
    #[arg(value_name = "MODEL", conflicts_with = "model")]
    model_pos: Option<PathBuf>,
}

impl ModelArg {
    fn load(&self) -> Result<ActivityModel, CliError> {
        let path = self
            .model
            .as_ref()
            .or(self.model_pos.as_ref())
            .ok_or_else(|| CliError::Schema("no model file given (use --model)".into()))?;
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Schema(format!("model does not match the schema: {e}")))
    }
}

#[derive(Args)]
struct OutputArg {
    /// Write the result here as well as to stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Significant digits in CSV and JSON float output.
    #[arg(long, default_value_t = 12)]
    precision_digits: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify the model as fluid / close-packing / transition.
    Classify {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        output: OutputArg,
        /// Certified enclosure width requested at the convergence boundary.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Solve the pressure fixed-point equation.
    Pressure {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        output: OutputArg,
        /// Residual tolerance of the solver.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Species densities rho_k = z_k dp/dz_k (fluid regime only).
    Density {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Truncated activity expansion of the pressure, plus a coefficient
    /// table in CSV form when --out is given.
    Expand {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        output: OutputArg,
        /// Total-degree cap of the expansion.
        #[arg(long, default_value_t = 10)]
        degree: u32,
        /// Number of species included from infinite families.
        #[arg(long, default_value_t = 12)]
        species_cap: usize,
    },
    /// Exact and classical sufficient convergence criteria, side by side.
    Criteria {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Densities, virial pressure and the activity round trip.
    Virial {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Finite-volume partition functions and renewal diagnostics (CSV).
    Oracle {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        output: OutputArg,
        /// Volumes to evaluate (repeatable).
        #[arg(long, required = true)]
        volume: Vec<f64>,
        /// Optional degree cap for the continuous partition sum.
        #[arg(long)]
        degree: Option<u32>,
        /// Also write the packing-fraction histogram CSV here.
        #[arg(long, value_name = "FILE")]
        histogram: Option<PathBuf>,
    },
    /// Parameter sweep; emits (mu, regime, p, sigma, dp_dmu) rows.
    Scan {
        #[command(flatten)]
        output: OutputArg,
        /// Swept parameter; `mu` sweeps the stretched-exponential family.
        #[arg(long, default_value = "mu")]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        /// Number of grid points (inclusive of both ends).
        #[arg(long, default_value_t = 300)]
        steps: usize,
        /// Residual tolerance of the pressure solver.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Activity/density domain-separation demonstration for the
    /// power-law density family rho_k = c/k^3.
    Report {
        #[command(flatten)]
        output: OutputArg,
        /// Density amplitude c (must satisfy c*zeta(2) < 1).
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        /// Truncation rank of the density family.
        #[arg(long, default_value_t = 200)]
        species_cap: usize,
    },
}

enum CliError {
    Schema(String),
    Domain(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidModel(_) => CliError::Schema(e.to_string()),
            other => CliError::Domain(other),
        }
    }
}

fn error_name(e: &Error) -> &'static str {
    match e {
        Error::InvalidModel(_) => "InvalidModel",
        Error::DivergentSeries { .. } => "DivergentSeries",
        Error::InfiniteAbscissa => "InfiniteAbscissa",
        Error::Unstable => "Unstable",
        Error::NotFluid(_) => "NotFluid",
        Error::OverPacked { .. } => "OverPacked",
        Error::DomainError(_) => "DomainError",
        Error::InvalidIndex => "InvalidIndex",
        Error::CapExceeded { .. } => "CapExceeded",
        Error::ZeroLengthSpecies => "ZeroLengthSpecies",
        Error::Degenerate(_) => "Degenerate",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Schema(msg)) => {
            eprintln!("error: InvalidModel: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {}: {e}", error_name(&e));
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: Io: {msg}");
            ExitCode::from(2)
        }
    }
}

/// JSON-safe float: non-finite values become strings.
fn j(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

fn fnum(x: f64, digits: usize) -> String {
    if x.is_finite() {
        format!("{x:.digits$}")
    } else {
        x.to_string()
    }
}

fn fsci(x: f64, digits: usize) -> String {
    if x.is_finite() {
        format!("{x:.digits$e}")
    } else {
        x.to_string()
    }
}

fn emit(output: &OutputArg, text: &str) -> Result<(), CliError> {
    println!("{text}");
    if let Some(path) = &output.out {
        fs::write(path, format!("{text}\n"))
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn emit_csv(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn criterion_json(r: &CriterionReport) -> Value {
    json!({
        "criterion_id": r.criterion_id.to_string(),
        "holds": r.holds,
        "witness_a": r.witness_a.map(j),
        "margin": j(r.margin),
        "boundary_equality": r.boundary_equality,
    })
}

fn density_json(d: &DensityVector) -> Value {
    json!({
        "entries": d.entries().iter().map(|e| json!({"length": j(e.length), "rho": j(e.rho)})).collect::<Vec<_>>(),
        "total_number": j(d.total_number()),
        "occupied_fraction": j(d.occupied_fraction()),
    })
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Classify { model, output, tol } => {
            let m = model.load()?;
            let r = classify_with(&m, tol)?;
            let p = pressure_with(&m, 1e-12)?;
            let doc = json!({
                "regime": r.regime.to_string(),
                "theta_star": j(r.theta_star),
                "boundary_g": j(r.boundary_g),
                "indeterminate_width": r.indeterminate_width.map(j),
                "p": j(p.p),
            });
            emit(&output, &serde_json::to_string_pretty(&doc).unwrap())
        }
        Cmd::Pressure { model, output, tol } => {
            let m = model.load()?;
            let sol = pressure_with(&m, tol)?;
            println!("p={:.6}", sol.p);
            let doc = json!({
                "p": j(sol.p),
                "residual": j(sol.residual),
                "bracket": [j(sol.bracket.0), j(sol.bracket.1)],
                "iterations": sol.iterations,
                "regime": sol.regime.regime.to_string(),
                "theta_star": j(sol.regime.theta_star),
            });
            if let Some(path) = &output.out {
                fs::write(path, serde_json::to_string_pretty(&doc).unwrap()).map_err(|e| {
                    CliError::Io(format!("cannot write {}: {e}", path.display()))
                })?;
            }
            Ok(())
        }
        Cmd::Density { model, output } => {
            let m = model.load()?;
            let d = densities(&m)?;
            emit(&output, &serde_json::to_string_pretty(&density_json(&d)).unwrap())
        }
        Cmd::Expand { model, output, degree, species_cap } => {
            let m = model.load()?;
            let species = active_species(&m, species_cap);
            let (value, terms) = truncated_pressure(&m, &species, degree)?;
            let doc = json!({
                "truncated_pressure": j(value),
                "terms": terms,
                "degree": degree,
                "species": species.len(),
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            if let Some(path) = &output.out {
                let lengths: Vec<f64> = species
                    .iter()
                    .map(|&s| m.species(s).expect("validated above").length)
                    .collect();
                let csv = coefficient_table_csv(m.kind(), &lengths, degree)?;
                fs::write(path, csv).map_err(|e| {
                    CliError::Io(format!("cannot write {}: {e}", path.display()))
                })?;
            }
            Ok(())
        }
        Cmd::Criteria { model, output } => {
            let m = model.load()?;
            let mut reports = vec![exact_criterion(&m)?];
            reports.extend(sufficient_criteria(&m)?);
            let doc = Value::Array(reports.iter().map(criterion_json).collect());
            emit(&output, &serde_json::to_string_pretty(&doc).unwrap())
        }
        Cmd::Virial { model, output } => {
            let m = model.load()?;
            let d = densities(&m)?;
            let pv = virial_pressure(m.kind(), &d)?;
            let pf = pressure_with(&m, 1e-12)?.p;
            let back = activities_from_densities(m.kind(), &d)?;
            // largest relative activity mismatch across the round trip
            let mut err = 0.0f64;
            if let Some(orig) = m.finite_entries() {
                for (a, b) in orig.iter().zip(&back) {
                    let scale = a.z.abs().max(1e-300);
                    err = err.max((a.z - b.z).abs() / scale);
                }
            }
            let doc = json!({
                "densities": density_json(&d),
                "virial_pressure": j(pv),
                "fixed_point_pressure": j(pf),
                "activity_roundtrip_max_rel_err": j(err),
            });
            emit(&output, &serde_json::to_string_pretty(&doc).unwrap())
        }
        Cmd::Oracle { model, output, volume, degree, histogram } => {
            let m = model.load()?;
            oracle(&m, &output, &volume, degree, histogram.as_ref())
        }
        Cmd::Scan { output, param, from, to, steps, tol } => {
            if param != "mu" {
                return Err(CliError::Schema(format!(
                    "unsupported scan parameter `{param}` (supported: mu)"
                )));
            }
            if steps < 2 || !(from < to) {
                return Err(CliError::Schema("need from < to and steps >= 2".into()));
            }
            let digits = output.precision_digits;
            let mut csv = String::from("mu,regime,p,sigma,dp_dmu\n");
            for i in 0..steps {
                let mu = from + (to - from) * i as f64 / (steps - 1) as f64;
                let m = ActivityModel::continuous(Family::StretchedExp { mu })?;
                let sol = pressure_with(&m, tol)?;
                let sigma = packing_fraction(&m)?;
                let dp_dmu = match sol.regime.regime {
                    Regime::Fluid => sigma,
                    _ => 1.0,
                };
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fnum(mu, digits),
                    sol.regime.regime,
                    fnum(sol.p, digits),
                    fnum(sigma, digits),
                    fnum(dp_dmu, digits),
                ));
            }
            emit_csv(&output.out, &csv)
        }
        Cmd::Report { output, c, species_cap } => {
            let r = corollary_domain_report(c, species_cap)?;
            let doc = json!({
                "c": j(r.c),
                "species": r.species,
                "occupied_fraction": j(r.occupied_fraction),
                "total_number": j(r.total_number),
                "sum_tail_bounds": [j(r.sum_tail_bounds.0), j(r.sum_tail_bounds.1)],
                "in_virial_domain": r.in_virial_domain,
                "pressure": j(r.pressure),
                "activity_criterion": criterion_json(&r.activity_criterion),
                "growth_rate_last": r.growth_rate.last().map(|&(k, g)| json!([k, j(g)])),
                "log_z_over_k_last": r.log_z_over_k.last().map(|&(k, g)| json!([k, j(g)])),
            });
            emit(&output, &serde_json::to_string_pretty(&doc).unwrap())
        }
    }
}

/// Species included in expansions: all of them for finite lists, the first
/// `cap` for parametric families.
fn active_species(model: &ActivityModel, cap: usize) -> Vec<usize> {
    match model.finite_entries() {
        Some(es) => (0..es.len().min(cap)).collect(),
        None => (0..cap).collect(),
    }
}

fn oracle(
    m: &ActivityModel,
    output: &OutputArg,
    volumes: &[f64],
    degree: Option<u32>,
    histogram: Option<&PathBuf>,
) -> Result<(), CliError> {
    let digits = output.precision_digits;
    let mut rows = volumes.to_vec();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p_inf = pressure_with(m, 1e-12)?.p;
    // Renewal diagnostics only exist for fluid lattice systems.
    let renewal: Option<Vec<(u64, f64)>> = if m.kind() == EnsembleKind::Discrete {
        let ls: Vec<u64> = rows.iter().map(|&v| v as u64).collect();
        renewal_asymptotics_check(m, &ls).ok().map(|r| r.rows)
    } else {
        None
    };
    let mut csv = String::from("L,Xi,log_Xi,log_Xi_over_L,p_infinity,epsilon_renewal\n");
    for (i, &vol) in rows.iter().enumerate() {
        let pv = match m.kind() {
            EnsembleKind::Discrete => {
                if vol < 0.0 || vol.fract() != 0.0 {
                    return Err(CliError::Schema(format!(
                        "lattice volume {vol} must be an integer"
                    )));
                }
                xi_discrete(m, vol as u64)?
            }
            EnsembleKind::Continuous => xi_continuous(m, vol, degree)?,
        };
        let ln_xi = pv.ln();
        let eps = renewal
            .as_ref()
            .map(|r| fnum(r[i].1, digits))
            .unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fnum(vol, 1),
            fsci(pv.to_f64(), digits),
            fnum(ln_xi, digits),
            fnum(if vol > 0.0 { ln_xi / vol } else { 0.0 }, digits),
            fnum(p_inf, digits),
            eps,
        ));
    }
    emit_csv(&output.out, &csv)?;
    if let Some(path) = histogram {
        let mut csv = String::from("L,sigma_bin,mass\n");
        for &vol in &rows {
            let h = packing_distribution(m, vol)?;
            for (sigma, mass) in h.points {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    fnum(vol, 1),
                    fnum(sigma, digits),
                    fnum(mass, digits)
                ));
            }
        }
        fs::write(path, csv)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
