//! Subcommand implementations.
//!
//! Random streams: each command draws from stream `k` of the root seed, with
//! `k` = 1 simulate, 2 crossval, 3 bootstrap, 4 sweep-m, 5 sweep-grid.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use cstomo::{
    bootstrap_fidelity, cross_validate, dephased_ghz, direct_fidelity_with, draw_settings,
    enumerate_settings, epsilon_hat, fidelity, purity, reconstruct, sample_counts, surrogate_state,
    sweep_grid, sweep_settings, CrossValConfig, Dataset, DensityMatrix, EpsilonRule,
    PauliCoefficients, PauliWord, RandomSource, ReconstructionResult, SettingSelection,
    SettingsPlan, SolverConfig, SweepOptions,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::{
    BootstrapArgs, Cli, Command, CrossvalArgs, DfeArgs, Format, ReconstructArgs, SimulateArgs,
    SolverArgs, SweepGridArgs, SweepMArgs,
};

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Reconstruct(a) => reconstruct_cmd(cli, a),
        Command::Crossval(a) => crossval(cli, a),
        Command::Dfe(a) => dfe(cli, a),
        Command::Bootstrap(a) => bootstrap(cli, a),
        Command::SweepM(a) => sweep_m(cli, a),
        Command::SweepGrid(a) => sweep_grid_cmd(cli, a),
    }
}

fn stream(cli: &Cli, k: u64) -> RandomSource {
    RandomSource::with_stream(cli.seed, k)
}

/// Writes `json` or the CSV rendering to `--output` or standard output.
fn emit(cli: &Cli, json: &Value, csv: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut out: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, json)?;
            writeln!(out)?;
        }
        Format::Csv => csv(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn load_data(path: &Path) -> Result<Dataset> {
    Dataset::load(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn load_state(path: &Path) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn state_spec(spec: &str, n: usize, dephase: f64) -> Result<DensityMatrix> {
    Ok(match spec {
        "ghz" => dephased_ghz(n, dephase)?,
        "surrogate" => surrogate_state(n)?,
        path => load_state(Path::new(path))?,
    })
}

fn target_spec(spec: &str, n: usize) -> Result<DensityMatrix> {
    let target = state_spec(spec, n, 0.0)?;
    if target.n_qubits() != n {
        return Err(CliError::Invalid(format!(
            "target has {} qubits, data has {n}",
            target.n_qubits()
        )));
    }
    Ok(target)
}

fn solver_config(args: &SolverArgs) -> Result<SolverConfig> {
    let cfg = SolverConfig {
        max_iterations: args.max_iterations,
        primal_tolerance: args.tolerance,
        ..SolverConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let state = state_spec(&a.state, a.n, a.dephase)?;
    let n = state.n_qubits();
    let src = stream(cli, 1);
    let all = enumerate_settings(n)?;
    let words: Vec<PauliWord> = match a.settings.as_str() {
        "all" => all,
        s if s.chars().all(|c| c.is_ascii_digit()) => {
            let m: usize = s
                .parse()
                .map_err(|_| CliError::Invalid(format!("bad settings count {s}")))?;
            draw_settings(&all, m, src.substream(0))?
        }
        s => s
            .split(',')
            .map(|w| w.trim().parse::<PauliWord>())
            .collect::<cstomo::Result<_>>()?,
    };
    let plan = SettingsPlan::uniform(words, a.shots)?;
    let data = sample_counts(&state, &plan, src.substream(1))?;
    emit(cli, &serde_json::to_value(&data)?, |out| {
        Ok(data.write_csv(out)?)
    })
}

fn estimate_csv(result: &ReconstructionResult, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "row,col,re,im")?;
    let m = result.estimate.matrix();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            writeln!(out, "{r},{c},{},{}", m[(r, c)].re, m[(r, c)].im)?;
        }
    }
    Ok(())
}

fn reconstruct_cmd(cli: &Cli, a: &ReconstructArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let cfg = solver_config(&a.solver)?;
    let eps = match a.epsilon {
        Some(e) => e,
        None => epsilon_hat(&data)?,
    };
    let result = reconstruct(&data, eps, &cfg)?;
    let mut json = serde_json::to_value(&result)?;
    json["rank"] = json!(result.rank(1e-6 * result.raw_trace.max(f64::MIN_POSITIVE)));
    json["purity"] = json!(purity(&result.estimate));
    if let Some(t) = &a.target {
        let target = target_spec(t, data.n_qubits())?;
        json["fidelity"] = json!(fidelity(&result.estimate, &target)?);
    }
    emit(cli, &json, |out| estimate_csv(&result, out))?;
    if !result.is_feasible() {
        return Err(CliError::Infeasible(format!(
            "no PSD matrix within epsilon = {eps}; best residual {}",
            result.residual
        )));
    }
    Ok(())
}

fn crossval(cli: &Cli, a: &CrossvalArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let cv = CrossValConfig {
        m_values: a.m.clone(),
        epsilon_multipliers: a.multipliers.clone(),
        folds: a.folds,
        repetitions: a.repetitions,
    };
    let report = cross_validate(&data, &cv, stream(cli, 2), &solver_config(&a.solver)?)?;
    emit(cli, &serde_json::to_value(&report)?, |out| {
        Ok(report.write_csv(out)?)
    })
}

fn dfe(cli: &Cli, a: &DfeArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let target = target_spec(&a.target, data.n_qubits())?;
    if (purity(&target) - 1.0).abs() > 1e-9 {
        return Err(CliError::Invalid(
            "direct fidelity estimation needs a pure target".into(),
        ));
    }
    let mut coeffs = PauliCoefficients::of_state(&target);
    coeffs.terms.retain(|_, v| v.abs() > 1e-12);
    let selection = if a.minimal {
        SettingSelection::Minimal
    } else {
        SettingSelection::All
    };
    let est = direct_fidelity_with(&data, &coeffs, selection)?;
    emit(cli, &serde_json::to_value(&est)?, |out| {
        writeln!(out, "f2,f,std_f2,settings")?;
        let words: Vec<String> = est.settings_used.iter().map(|w| w.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{}",
            est.f_squared,
            est.f,
            est.std_f_squared,
            words.join(" ")
        )?;
        Ok(())
    })
}

/// Reconstructs `data` at its own noise estimate; infeasibility is an error.
fn fit(data: &Dataset, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    let eps = epsilon_hat(data)?;
    let result = reconstruct(data, eps, cfg)?;
    if !result.is_feasible() {
        return Err(CliError::Infeasible(format!(
            "dataset is infeasible at its noise estimate {eps}"
        )));
    }
    Ok(result)
}

fn bootstrap(cli: &Cli, a: &BootstrapArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let cfg = solver_config(&a.solver)?;
    let target = target_spec(&a.target, data.n_qubits())?;
    let estimate = fit(&data, &cfg)?.estimate;
    let point = fidelity(&estimate, &target)?;
    let report = bootstrap_fidelity(
        &estimate,
        &data.plan()?,
        &target,
        &a.target,
        EpsilonRule::Multiple(a.epsilon_multiplier),
        a.repetitions,
        stream(cli, 3),
        &cfg,
    )?;
    let mut json = serde_json::to_value(&report)?;
    json["fidelity"] = json!(point);
    emit(cli, &json, |out| {
        writeln!(
            out,
            "target,fidelity,fidelity_mean,fidelity_std,repetitions,infeasible"
        )?;
        writeln!(
            out,
            "{},{point},{},{},{},{}",
            report.target_label,
            report.fidelity_mean,
            report.fidelity_std,
            report.repetitions,
            report.infeasible
        )?;
        Ok(())
    })
}

fn sweep_m(cli: &Cli, a: &SweepMArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let target = target_spec(&a.target, data.n_qubits())?;
    let m_values = if a.m.is_empty() {
        let mut m: Vec<usize> = [6, 10, 20, 40]
            .into_iter()
            .filter(|&m| m < data.len())
            .collect();
        m.push(data.len());
        m
    } else {
        a.m.clone()
    };
    let options = SweepOptions {
        draws_per_m: a.draws_per_m,
        bootstrap_repetitions: a.bootstrap_repetitions,
    };
    let report = sweep_settings(
        &data,
        &m_values,
        &target,
        options,
        stream(cli, 4),
        &solver_config(&a.solver)?,
    )?;
    emit(cli, &serde_json::to_value(&report)?, |out| {
        Ok(report.write_csv(out)?)
    })
}

fn sweep_grid_cmd(cli: &Cli, a: &SweepGridArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let cfg = solver_config(&a.solver)?;
    let generator = fit(&data, &cfg)?.estimate;
    let report = sweep_grid(
        &generator,
        &data.plan()?,
        &a.m,
        &a.multipliers,
        a.repetitions,
        stream(cli, 5),
        &cfg,
    )?;
    emit(cli, &serde_json::to_value(&report)?, |out| {
        Ok(report.write_csv(out)?)
    })
}
