//! Command-line entry point.
//!
//! Usage:
//!   emlab rate|picard|pde-check|sewing-check|simulate --config <file>
//!         [--out <dir>] [--gate] [--workers N] [--plot]
//!   emlab plot --csv <file> --out <svg> --x <col> --y <col>
//!         [--group <col>] [--loglog] [--title <text>]
//!
//! Exit codes: 0 ok/pass, 1 usage or config error, 2 runtime error,
//! 3 gate failure.

use emlab::config::ExperimentKind;
use emlab::plot::{plot_csv, PlotSpec};
use emlab::{run, validate_config, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "usage:
  emlab <rate|picard|pde-check|sewing-check|simulate> --config <file> \
[--out <dir>] [--gate] [--workers N] [--plot]
  emlab plot --csv <file> --out <svg> --x <col> --y <col> [--group <col>] \
[--loglog] [--title <text>]";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}

struct Flags {
    values: std::collections::HashMap<String, String>,
    switches: std::collections::HashSet<String>,
}

fn parse_flags(args: &[String], value_flags: &[&str], switch_flags: &[&str]) -> Result<Flags, String> {
    let mut values = std::collections::HashMap::new();
    let mut switches = std::collections::HashSet::new();
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        if switch_flags.contains(&arg.as_str()) {
            switches.insert(arg.clone());
            i += 1;
        } else if value_flags.contains(&arg.as_str()) {
            let v = args
                .get(i + 1)
                .ok_or_else(|| format!("{arg} needs a value\n{USAGE}"))?;
            values.insert(arg.clone(), v.clone());
            i += 2;
        } else {
            return Err(format!("unrecognized argument `{arg}`\n{USAGE}"));
        }
    }
    Ok(Flags { values, switches })
}

fn dispatch(args: &[String]) -> Result<ExitCode, String> {
    let Some(subcommand) = args.first() else {
        return Err(USAGE.to_string());
    };
    if subcommand == "plot" {
        return run_plot(&args[1..]);
    }
    let kind = match subcommand.as_str() {
        "rate" => ExperimentKind::Rate,
        "picard" => ExperimentKind::Picard,
        "pde-check" => ExperimentKind::PdeCheck,
        "sewing-check" => ExperimentKind::SewingCheck,
        "simulate" => ExperimentKind::Simulate,
        other => return Err(format!("unknown subcommand `{other}`\n{USAGE}")),
    };

    let flags = parse_flags(
        &args[1..],
        &["--config", "--out", "--workers"],
        &["--gate", "--plot"],
    )?;
    let config_path = flags
        .values
        .get("--config")
        .ok_or_else(|| format!("--config is required\n{USAGE}"))?;
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| format!("cannot read {config_path}: {e}"))?;
    let mut config = match validate_config(&text) {
        Ok(c) => c,
        Err(errors) => {
            return Err(format!(
                "invalid configuration {config_path}:\n{}",
                errors.join("\n")
            ))
        }
    };
    if config.kind != kind {
        return Err(format!(
            "config declares experiment = {}, but the subcommand is {}",
            config.kind.as_str(),
            kind.as_str()
        ));
    }
    config.apply_env_seed()?;

    if let Some(workers) = flags.values.get("--workers") {
        let n: usize = workers
            .parse()
            .map_err(|_| format!("--workers `{workers}` is not an integer"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("worker pool: {e}"))?;
    }

    let out_dir = flags
        .values
        .get("--out")
        .cloned()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| format!("out-{}", kind.as_str()));
    let out_dir = PathBuf::from(out_dir);

    let output = match run(&config, &out_dir) {
        Ok(o) => o,
        Err(RunError::Config(errors)) => {
            return Err(format!("configuration rejected:\n{}", errors.join("\n")))
        }
        Err(e) => {
            eprintln!("runtime error: {e}");
            return Ok(ExitCode::from(2));
        }
    };

    for (gate, passed) in &output.manifest.gates {
        println!(
            "gate {gate}: {}",
            if *passed { "pass" } else { "FAIL" }
        );
    }
    println!(
        "{}: status = {}, results in {}",
        kind.as_str(),
        output.manifest.status,
        output.out_dir.display()
    );

    if flags.switches.contains("--plot") {
        emit_default_plots(&output.out_dir, kind);
    }

    if flags.switches.contains("--gate") && !output.manifest.all_gates_pass() {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

/// Best-effort companion plots for the standard CSVs; failures are reported
/// but never change the exit code.
fn emit_default_plots(out_dir: &std::path::Path, kind: ExperimentKind) {
    let jobs: &[(&str, &str, &str, Option<&str>, bool, &str)] = match kind {
        ExperimentKind::Rate => &[(
            "metrics.csv",
            "n",
            "value",
            Some("metric"),
            true,
            "error vs steps",
        )],
        ExperimentKind::Picard => &[(
            "picard.csv",
            "iteration",
            "value",
            Some("metric"),
            false,
            "picard iteration",
        )],
        ExperimentKind::PdeCheck => &[(
            "pde.csv",
            "lambda",
            "sup_grad",
            None,
            true,
            "gradient vs damping",
        )],
        ExperimentKind::SewingCheck => &[(
            "sewing.csv",
            "n",
            "norm",
            None,
            true,
            "germ norm vs mesh",
        )],
        ExperimentKind::Simulate => &[(
            "trajectory.csv",
            "t",
            "X_1",
            None,
            false,
            "trajectory",
        )],
    };
    for (file, x, y, group, loglog, title) in jobs {
        let csv = out_dir.join(file);
        let svg = out_dir.join(format!("{}.svg", file.trim_end_matches(".csv")));
        let result = plot_csv(
            &csv,
            &svg,
            &PlotSpec {
                x_column: x,
                y_column: y,
                group_column: *group,
                log_log: *loglog,
                title,
            },
        );
        match result {
            Ok(()) => println!("plot written to {}", svg.display()),
            Err(e) => eprintln!("plot skipped: {e}"),
        }
    }
}

fn run_plot(args: &[String]) -> Result<ExitCode, String> {
    let flags = parse_flags(
        args,
        &["--csv", "--out", "--x", "--y", "--group", "--title"],
        &["--loglog"],
    )?;
    let get = |name: &str| -> Result<&String, String> {
        flags
            .values
            .get(name)
            .ok_or_else(|| format!("{name} is required\n{USAGE}"))
    };
    let csv = PathBuf::from(get("--csv")?);
    let out = PathBuf::from(get("--out")?);
    let x = get("--x")?.clone();
    let y = get("--y")?.clone();
    let title = flags
        .values
        .get("--title")
        .cloned()
        .unwrap_or_else(|| y.clone());
    plot_csv(
        &csv,
        &out,
        &PlotSpec {
            x_column: &x,
            y_column: &y,
            group_column: flags.values.get("--group").map(|s| s.as_str()),
            log_log: flags.switches.contains("--loglog"),
            title: &title,
        },
    )
    .map_err(|e| format!("plot failed: {e}"))?;
    println!("plot written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}
