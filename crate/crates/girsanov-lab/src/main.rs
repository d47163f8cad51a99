//! Command-line front end: every experiment the library offers, wired to a
//! TOML config and a run directory of artifacts.
//!
//! Each invocation creates `<out>/<timestamp>-<config hash>/` containing
//! the resolved `config.toml`, a `manifest.json`, the diagnostic
//! `modes.csv`, and the command's own artifacts (`summary.json` plus CSV or
//! binary dumps).  Data artifacts depend only on the resolved config and
//! master seed -- never on wall-clock time or thread count -- so reruns are
//! byte-identical and diffable.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;

use girsanov_lab::config::{LevelPolicy, RunConfig};
use girsanov_lab::girsanov::{
    direct_estimate, importance_estimate, normalization_check, pilot_truncation_level,
};
use girsanov_lab::linsim::simulate_linear;
use girsanov_lab::nonlinsim::{simulate_nonlinear, twin_path_divergence};
use girsanov_lab::operators::growth_audit;
use girsanov_lab::regimes::{regime_report, RegimeReport};
use girsanov_lab::spectral::{build_spectrum, sample_gaussian_field, Covariance};
use girsanov_lab::{ergodics, output, rng, SpectralField};

#[derive(Parser)]
#[command(
    name = "girsanov-lab",
    version,
    about = "Spectral Galerkin laboratory for stochastic Kuramoto-Sivashinsky and \
             fractional Navier-Stokes dynamics"
)]
struct Cli {
    /// TOML run configuration (missing fields fall back to defaults).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed, overriding the config's `seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Base directory for run artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = "runs")]
    out: PathBuf,

    /// Treat admissibility violations as fatal instead of warnings.
    #[arg(long, global = true)]
    strict: bool,

    /// Worker threads for ensembles (0 = one per core).  Results do not
    /// depend on this.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    threads: usize,

    /// Print the fully resolved default configuration as TOML and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Check admissibility of the (gamma, theta, alpha) parameter regime.
    CheckRegime,
    /// Sample one exact path of the linearized dynamics.
    SimulateLinear,
    /// Integrate one path of the full nonlinear dynamics.
    SimulateNonlinear,
    /// Monte Carlo check of the truncated density normalization E[e^V] = 1.
    GirsanovNormalization,
    /// Importance-sampled observable under the nonlinear law, with an
    /// optional direct nonlinear baseline.
    GirsanovImportance,
    /// Drive two nonlinear paths with one noise realization and track
    /// their divergence against the uniqueness budget.
    TwinPath,
    /// Invariant-measure statistics from the exact sampler (and optionally
    /// a long subsampled path).
    Ergodics,
    /// Audit the polynomial growth bound of the drift over invariant
    /// samples.
    GrowthAudit,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckRegime => "check-regime",
            Command::SimulateLinear => "simulate-linear",
            Command::SimulateNonlinear => "simulate-nonlinear",
            Command::GirsanovNormalization => "girsanov-normalization",
            Command::GirsanovImportance => "girsanov-importance",
            Command::TwinPath => "twin-path",
            Command::Ergodics => "ergodics",
            Command::GrowthAudit => "growth-audit",
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.print_defaults {
        print!("{}", RunConfig::default().to_toml());
        return Ok(());
    }
    let Some(command) = cli.command else {
        bail!("no subcommand given; see --help, or --print-defaults for a starter config");
    };

    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }

    let resolved = config.to_toml();
    let spec = config.spec()?;
    let regime = regime_report(&spec)?;
    let violated: Vec<String> = regime
        .conditions
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{}: {}", c.name, c.statement))
        .collect();
    let is_check = matches!(command, Command::CheckRegime);
    for v in &violated {
        eprintln!("warning: admissibility condition violated -- {v}");
    }
    if let Some(series) = &regime.series {
        if !series.convergent {
            eprintln!(
                "warning: numerical series probe does not certify convergence \
                 (fitted tail exponent {:.3})",
                series.tail_exponent
            );
        }
    }
    if cli.strict && !regime.admissible() && !is_check {
        bail!(
            "parameter regime is inadmissible ({} condition(s) violated) and --strict is set",
            violated.len()
        );
    }

    let run_dir = output::create_run_dir(&cli.out, output::config_hash(&resolved))?;
    fs::write(run_dir.join("config.toml"), &resolved)?;
    let manifest =
        output::Manifest::new(&spec, config.seed, cli.threads, command.name());
    artifact(&run_dir, "manifest.json", |w| output::write_json(&manifest, w))?;
    let spectrum = build_spectrum(&spec)?;
    for w in spectrum.warnings() {
        eprintln!("warning: {w}");
    }
    artifact(&run_dir, "modes.csv", |w| spectrum.write_modes_csv(w))?;

    let seed = config.seed;
    let sim = &config.simulation;
    match command {
        Command::CheckRegime => {
            artifact(&run_dir, "summary.json", |w| {
                output::write_json(&output::summary(&spec, seed, &regime), w)
            })?;
            print_regime(&regime);
            println!("artifacts: {}", run_dir.display());
            if cli.strict && !regime.admissible() {
                bail!("parameter regime is inadmissible and --strict is set");
            }
        }
        Command::SimulateLinear | Command::SimulateNonlinear => {
            let x = sample_gaussian_field(
                &spectrum,
                Covariance::Invariant,
                rng::derive_seed(seed, rng::tags::INITIAL_CONDITION),
            );
            let record = match command {
                Command::SimulateLinear => simulate_linear(&x, sim.t_final, sim.dt, seed)?,
                _ => simulate_nonlinear(&x, sim.t_final, sim.dt, seed)?,
            };
            artifact(&run_dir, "path.csv", |w| output::write_path_csv(&record, w))?;
            artifact(&run_dir, "path.bin", |w| output::write_path_binary(&record, w))?;
            let terminal = record.terminal_field();
            #[derive(Serialize)]
            struct SimSummary {
                kind: &'static str,
                t_final: f64,
                dt: f64,
                steps: usize,
                terminal_l2: f64,
                terminal_sobolev: f64,
            }
            let s = SimSummary {
                kind: command.name(),
                t_final: sim.t_final,
                dt: sim.dt,
                steps: record.num_steps(),
                terminal_l2: terminal.l2_norm(),
                terminal_sobolev: terminal.sobolev_norm(spec.theta),
            };
            artifact(&run_dir, "summary.json", |w| {
                output::write_json(&output::summary(&spec, seed, &s), w)
            })?;
            println!(
                "{} steps of dt = {:.6}: |u_T| = {:.6}, |A^theta u_T| = {:.6}",
                s.steps, s.dt, s.terminal_l2, s.terminal_sobolev
            );
            println!("artifacts: {}", run_dir.display());
        }
        Command::GirsanovNormalization => {
            let x = SpectralField::zero(&spectrum);
            let level = resolve_level(&config, &x, seed)?;
            let report =
                normalization_check(&x, sim.t_final, sim.dt, sim.paths, level, seed)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            artifact(&run_dir, "girsanov.csv", |w| {
                output::write_girsanov_csv(&report.per_path, w)
            })?;
            artifact(&run_dir, "summary.json", |w| {
                output::write_json(&output::summary(&spec, seed, &report), w)
            })?;
            let z = (report.mean - 1.0) / report.std_error;
            println!(
                "E[e^V] over {} paths at level {}: {:.6} +- {:.6} (z = {:+.2})",
                report.paths,
                if level.is_finite() { format!("{level:.4}") } else { "unbounded".into() },
                report.mean,
                report.std_error,
                z
            );
            println!(
                "ESS {:.1} ({:.1}% of paths), truncation frequency {:.4}",
                report.ess,
                100.0 * report.ess / report.paths as f64,
                report.truncation_frequency
            );
            println!("artifacts: {}", run_dir.display());
        }
        Command::GirsanovImportance => {
            let x = SpectralField::zero(&spectrum);
            let level = resolve_level(&config, &x, seed)?;
            let obs = &config.girsanov.observable;
            let imp =
                importance_estimate(&x, obs, sim.t_final, sim.dt, sim.paths, level, seed)?;
            for w in &imp.warnings {
                eprintln!("warning: {w}");
            }
            #[derive(Serialize)]
            struct DirectSummary {
                paths: usize,
                estimate: f64,
                std_error: f64,
            }
            let direct = if config.girsanov.direct_paths > 0 {
                let (est, se) = direct_estimate(
                    &x,
                    obs,
                    sim.t_final,
                    sim.dt,
                    config.girsanov.direct_paths,
                    seed,
                )?;
                Some(DirectSummary {
                    paths: config.girsanov.direct_paths,
                    estimate: est,
                    std_error: se,
                })
            } else {
                None
            };
            #[derive(Serialize)]
            struct ImportanceSummary<'a> {
                importance: &'a girsanov_lab::girsanov::ImportanceReport,
                #[serde(skip_serializing_if = "Option::is_none")]
                direct: Option<DirectSummary>,
            }
            println!(
                "importance estimate of {} over {} linear paths: {:.6} +- {:.6}",
                obs.label(),
                imp.paths,
                imp.estimate,
                imp.std_error
            );
            if let Some(d) = &direct {
                println!(
                    "direct nonlinear baseline over {} paths: {:.6} +- {:.6} \
                     (difference {:+.6})",
                    d.paths,
                    d.estimate,
                    d.std_error,
                    imp.estimate - d.estimate
                );
            }
            println!(
                "ESS {:.1} ({:.1}% of paths), truncation frequency {:.4}",
                imp.ess,
                100.0 * imp.ess / imp.paths as f64,
                imp.truncation_frequency
            );
            artifact(&run_dir, "girsanov.csv", |w| {
                output::write_girsanov_csv(&imp.per_path, w)
            })?;
            let s = ImportanceSummary { importance: &imp, direct };
            artifact(&run_dir, "summary.json", |w| {
                output::write_json(&output::summary(&spec, seed, &s), w)
            })?;
            println!("artifacts: {}", run_dir.display());
        }
        Command::TwinPath => {
            let dof = config.twin.dof;
            if dof >= spectrum.num_dofs() {
                bail!(
                    "twin.dof = {dof} out of range (spectrum has {} dofs)",
                    spectrum.num_dofs()
                );
            }
            let x1 = sample_gaussian_field(
                &spectrum,
                Covariance::Invariant,
                rng::derive_seed(seed, rng::tags::INITIAL_CONDITION),
            );
            let mut x2 = x1.clone();
            x2.set_dof(dof, x2.dof(dof) + config.twin.delta);
            let twin = twin_path_divergence(&x1, &x2, sim.t_final, sim.dt, seed)?;
            artifact(&run_dir, "twin.csv", |w| output::write_twin_csv(&twin, w))?;
            #[derive(Serialize)]
            struct TwinSummary {
                delta: f64,
                dof: usize,
                initial_divergence: f64,
                terminal_divergence: f64,
                budget: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                gronwall_ratio: Option<f64>,
            }
            let s = TwinSummary {
                delta: config.twin.delta,
                dof,
                initial_divergence: twin.divergence[0],
                terminal_divergence: *twin.divergence.last().unwrap(),
                budget: *twin.budget.last().unwrap(),
                gronwall_ratio: twin.gronwall_ratio(),
            };
            artifact(&run_dir, "summary.json", |w| {
                output::write_json(&output::summary(&spec, seed, &s), w)
            })?;
            println!(
                "divergence {:.3e} -> {:.3e} over budget {:.4}",
                s.initial_divergence, s.terminal_divergence, s.budget
            );
            if let Some(g) = s.gronwall_ratio {
                println!("empirical exponential rate {g:.4}");
            }
            println!("artifacts: {}", run_dir.display());
        }
        Command::Ergodics => {
            let erg = &config.ergodics;
            let exact = ergodics::stationary_stats_exact(
                &spectrum,
                erg.samples,
                erg.significance,
                seed,
            )?;
            artifact(&run_dir, "ergodics.csv", |w| output::write_ergodics_csv(&exact, w))?;
            let long = if erg.long_path {
                let stats = ergodics::stationary_stats_path(
                    &spectrum,
                    erg.samples,
                    erg.significance,
                    rng::derive_seed(seed, rng::tags::LONG_PATH),
                )?;
                artifact(&run_dir, "ergodics_path.csv", |w| {
                    output::write_ergodics_csv(&stats, w)
                })?;
                Some(stats)
            } else {
                None
            };
            #[derive(Serialize)]
            struct ErgodicsSummary<'a> {
                exact: &'a ergodics::StationaryStats,
                #[serde(skip_serializing_if = "Option::is_none")]
                long_path: Option<&'a ergodics::StationaryStats>,
            }
            let s = ErgodicsSummary { exact: &exact, long_path: long.as_ref() };
            artifact(&run_dir, "summary.json", |w| {
                output::write_json(&output::summary(&spec, seed, &s), w)
            })?;
            println!(
                "exact sampler: {} samples, {} of {} dofs flagged",
                exact.samples,
                exact.flagged,
                spectrum.num_dofs()
            );
            if let Some(l) = &long {
                println!(
                    "long path:     {} samples, {} of {} dofs flagged",
                    l.samples,
                    l.flagged,
                    spectrum.num_dofs()
                );
            }
            println!("artifacts: {}", run_dir.display());
        }
        Command::GrowthAudit => {
            let audit = growth_audit(&spectrum, config.audit.samples, seed)?;
            artifact(&run_dir, "growth.csv", |w| output::write_growth_csv(&audit, w))?;
            artifact(&run_dir, "summary.json", |w| {
                output::write_json(&output::summary(&spec, seed, &audit), w)
            })?;
            println!(
                "growth ratio over {} invariant samples: mean {:.4}, q95 {:.4}, \
                 q99 {:.4}, max {:.4}",
                audit.samples, audit.mean_ratio, audit.q95, audit.q99, audit.max_ratio
            );
            println!("artifacts: {}", run_dir.display());
        }
    }
    Ok(())
}

/// Resolves the configured truncation-level policy into a number, running
/// the pilot calibration if asked for.
fn resolve_level(config: &RunConfig, x: &SpectralField, seed: u64) -> anyhow::Result<f64> {
    let sim = &config.simulation;
    Ok(match config.girsanov.level.policy()? {
        LevelPolicy::Fixed(v) => v,
        LevelPolicy::Unbounded => f64::INFINITY,
        LevelPolicy::Pilot => {
            let level = pilot_truncation_level(
                x,
                sim.t_final,
                sim.dt,
                config.girsanov.pilot_paths,
                config.girsanov.pilot_quantile,
                seed,
            )?;
            eprintln!(
                "pilot calibration: level = {level:.6} ({}th percentile of {} paths)",
                (100.0 * config.girsanov.pilot_quantile).round(),
                config.girsanov.pilot_paths
            );
            level
        }
    })
}

fn print_regime(report: &RegimeReport) {
    println!(
        "model {} (dim {}), gamma = {}, theta = {}{}",
        report.model,
        report.dim,
        report.gamma,
        report.theta,
        report
            .alpha
            .map(|a| format!(", alpha = {a}"))
            .unwrap_or_default()
    );
    for c in &report.conditions {
        println!(
            "  [{}] {}: {} (margin {:+.3e})",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.statement,
            c.margin
        );
    }
    if let Some(series) = &report.series {
        println!(
            "  series probe: tail exponent {:.3} -> {}",
            series.tail_exponent,
            if series.convergent { "convergent" } else { "not certified" }
        );
    }
    for note in &report.notes {
        println!("  note: {note}");
    }
    println!(
        "verdict: {}",
        if report.admissible() { "admissible" } else { "inadmissible" }
    );
}

/// Creates `dir/name` and streams a writer closure into it.
fn artifact<F>(dir: &Path, name: &str, f: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> girsanov_lab::Result<()>,
{
    let path = dir.join(name);
    let file =
        fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    Ok(())
}
