//! Command-line front end for `posthoc-core`.
//!
//! [`execute`] runs a parsed command line and returns the rendered output,
//! diagnostics, exit code and run manifest; `main` only does the I/O.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod render;

use posthoc_core::montecarlo::geometric_edges;
use posthoc_core::{EvidenceModel, StrategySpec};
use serde_json::json;

use crate::args::{AxisArg, BinArgs, Cli, Command, EvidenceKind, OutputArgs, ScaleArg};
use crate::commands::{
    CompareOptions, GridScale, SimulateOptions, SweepAxis, SweepOptions,
};
use crate::error::{CliError, EXIT_OK, EXIT_ORACLE};
use crate::manifest::RunManifest;
use crate::render::Format;

#[derive(Debug)]
pub struct Execution {
    pub output: String,
    /// Lines for stderr.
    pub diagnostics: Vec<String>,
    pub exit_code: u8,
    pub manifest: RunManifest,
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("cannot parse `{tok}` as a number")))
        })
        .collect()
}

fn evidence(kind: EvidenceKind, delta: f64) -> Result<EvidenceModel, CliError> {
    let model = match kind {
        EvidenceKind::Uniform => EvidenceModel::ExactUniform,
        EvidenceKind::Gaussian => EvidenceModel::GaussianZ { delta_design: delta },
        EvidenceKind::CalibratedE => EvidenceModel::CalibratedE { delta_design: delta },
    };
    model.validate()?;
    Ok(model)
}

fn bin_edges(bins: &BinArgs, strategy: &StrategySpec) -> Result<Option<Vec<f64>>, CliError> {
    if let Some(text) = &bins.bin_edges {
        return Ok(Some(parse_list(text)?));
    }
    match (bins.bins, strategy) {
        (None, _) => Ok(None),
        (Some(0), _) => Err(CliError::Usage("--bins must be at least 1".into())),
        (Some(k), StrategySpec::ContinuumGreedy { cap, floor }) if *floor < cap.value() => {
            Ok(Some(geometric_edges(*floor, cap.value(), k)))
        }
        (Some(_), _) => Err(CliError::Usage(
            "--bins only applies to a continuum strategy with eps < C".into(),
        )),
    }
}

fn format_or(output: &OutputArgs, default: Format) -> Format {
    output.format.unwrap_or(default)
}

/// Runs one command. `argv` is echoed into the manifest.
pub fn execute(cli: &Cli, argv: &[String]) -> Result<Execution, CliError> {
    let mut diagnostics = Vec::new();
    let mut exit_code = EXIT_OK;
    let (output, manifest) = match &cli.command {
        Command::Exact(a) => {
            let out = commands::exact(&a.strategy)?;
            let text = match format_or(&a.output, Format::Table) {
                Format::Table => render::exact_table(&out),
                Format::Json => render::json(&out)?,
                Format::Csv => render::exact_csv(&out)?,
            };
            let manifest = RunManifest::new("exact", argv, json!({ "strategy": a.strategy }), None, None);
            (text, manifest)
        }
        Command::Simulate(a) => {
            let strategy = commands::parse_runnable_strategy(&a.strategy)?;
            let opts = SimulateOptions {
                bin_edges: bin_edges(&a.bins, &strategy)?,
                strategy,
                evidence: evidence(a.evidence, a.delta)?,
                n_trials: a.run.n,
                seed: a.run.seed,
                workers: a.run.workers(),
            };
            let out = commands::simulate(&opts)?;
            let format = format_or(&a.output, Format::Table);
            let text = match format {
                Format::Table => render::simulate_table(&out),
                Format::Json => render::json(&out.report)?,
                Format::Csv => render::report_csv(&out.report)?,
            };
            if let Some(line) = render::agreement_line(out.oracle_z) {
                if format != Format::Table {
                    diagnostics.push(line);
                }
            }
            if out.report.tail_warning && format != Format::Table {
                diagnostics.push("warning: heavy-tailed ratio terms; the normal CI is unreliable".into());
            }
            if out.oracle_failed() {
                exit_code = EXIT_ORACLE;
            }
            let manifest = RunManifest::new(
                "simulate",
                argv,
                serde_json::to_value(&out.report.config)?,
                Some(opts.seed),
                Some(opts.workers),
            );
            (text, manifest)
        }
        Command::Compare(a) => {
            let strategy = commands::parse_runnable_strategy(&a.strategy)?;
            let opts = CompareOptions {
                bin_edges: bin_edges(&a.bins, &strategy)?,
                strategy,
                delta: a.delta,
                n_trials: a.run.n,
                seed: a.run.seed,
                workers: a.run.workers(),
                z_slack: a.z_slack,
            };
            let out = commands::compare(&opts)?;
            let text = match format_or(&a.output, Format::Table) {
                Format::Table => render::compare_table(&out),
                Format::Json => render::json(&out)?,
                Format::Csv => render::compare_csv(&out)?,
            };
            if out.oracle_failed() {
                diagnostics.extend(render::agreement_line(out.raw.oracle_z()));
                exit_code = EXIT_ORACLE;
            }
            let config = json!({
                "strategy": opts.strategy,
                "delta": opts.delta,
                "n_trials": opts.n_trials,
                "seed": opts.seed,
                "z_slack": opts.z_slack,
                "bin_edges": opts.bin_edges,
            });
            let manifest = RunManifest::new("compare", argv, config, Some(opts.seed), Some(opts.workers));
            (text, manifest)
        }
        Command::Sweep(a) => {
            let values = match (&a.values, a.from, a.to, a.points) {
                (Some(list), ..) => parse_list(list)?,
                (None, Some(from), Some(to), Some(points)) => {
                    let scale = match a.scale {
                        ScaleArg::Geometric => GridScale::Geometric,
                        ScaleArg::Linear => GridScale::Linear,
                    };
                    commands::grid(from, to, points, scale)?
                }
                _ => {
                    return Err(CliError::Usage(
                        "give the grid as --values v1,v2,... or --from A --to B --points K".into(),
                    ))
                }
            };
            let axis = match a.axis {
                AxisArg::Eps => SweepAxis::Eps,
                AxisArg::A1 => SweepAxis::A1,
                AxisArg::Delta => SweepAxis::Delta,
            };
            let opts = SweepOptions {
                axis,
                values,
                strategy: commands::parse_runnable_strategy(&a.strategy)?,
                evidence: evidence(a.evidence, a.delta)?,
                n_trials: a.run.n,
                seed: a.run.seed,
                workers: a.run.workers(),
                z_slack: a.z_slack,
            };
            let rows = commands::sweep(&opts)?;
            let text = match format_or(&a.output, Format::Csv) {
                Format::Table => render::sweep_table(&rows),
                Format::Json => render::json(&rows)?,
                Format::Csv => render::sweep_csv(&rows)?,
            };
            if commands::sweep_oracle_failed(&rows) {
                diagnostics.push("oracle agreement: a grid point is more than 6 SE from its closed form".into());
                exit_code = EXIT_ORACLE;
            }
            let config = json!({
                "axis": axis,
                "values": opts.values,
                "strategy": opts.strategy,
                "evidence": opts.evidence,
                "n_trials": opts.n_trials,
                "seed": opts.seed,
                "z_slack": opts.z_slack,
            });
            let manifest = RunManifest::new("sweep", argv, config, Some(opts.seed), Some(opts.workers));
            (text, manifest)
        }
    };
    Ok(Execution {
        output,
        diagnostics,
        exit_code,
        manifest,
    })
}

/// The output sinks of the parsed command.
pub fn output_args(cli: &Cli) -> &OutputArgs {
    match &cli.command {
        Command::Exact(a) => &a.output,
        Command::Simulate(a) => &a.output,
        Command::Compare(a) => &a.output,
        Command::Sweep(a) => &a.output,
    }
}
