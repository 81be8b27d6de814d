use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::parser::ValueSource;
use clap::{Arg, ArgMatches, Command};
use spherevc_cli::{command, run, ExperimentConfig, COMMANDS};

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

fn cli() -> Command {
    let mut app = Command::new("spherevc")
        .about("Configuration integrals, 4-cycle and shattering search, and threshold checks for sphere classifiers")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("run")
                .about("Re-run a saved experiment config")
                .arg(Arg::new("config").required(true).value_parser(clap::value_parser!(PathBuf))),
        );
    for spec in COMMANDS {
        let mut sub = Command::new(spec.name)
            .about(spec.about)
            .after_help(format!("Output: {}", spec.output))
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("load parameters from a key = value file; flags override it"),
            )
            .arg(
                Arg::new("emit_config")
                    .long("emit-config")
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("write the resolved config to this file"),
            );
        for p in spec.all_params() {
            let mut help = p.help.to_string();
            if !p.default.is_empty() {
                help.push_str(&format!(" [default: {}]", p.default));
            }
            sub = sub.arg(Arg::new(p.key).long(flag(p.key)).value_name("VALUE").help(help));
        }
        app = app.subcommand(sub);
    }
    app
}

fn resolve(name: &str, m: &ArgMatches) -> Result<(ExperimentConfig, Option<PathBuf>)> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            anyhow::ensure!(
                cfg.subcommand == name,
                "config {} is for `{}`, not `{name}`",
                path.display(),
                cfg.subcommand
            );
            cfg
        }
        None => ExperimentConfig::defaults(name)?,
    };
    let spec = command(name).expect("registered subcommand");
    for p in spec.all_params() {
        if m.value_source(p.key) == Some(ValueSource::CommandLine) {
            cfg.set(p.key, m.get_one::<String>(p.key).expect("has value"))?;
        }
    }
    Ok((cfg, m.get_one::<PathBuf>("emit_config").cloned()))
}

fn execute() -> Result<()> {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let (cfg, emit) = if name == "run" {
        (ExperimentConfig::load(sub.get_one::<PathBuf>("config").expect("required"))?, None)
    } else {
        resolve(name, sub)?
    };
    if let Some(path) = emit {
        std::fs::write(&path, cfg.to_text()).with_context(|| format!("writing {}", path.display()))?;
    }
    let outcome = run(&cfg)?;
    match cfg.raw("out") {
        Some(path) => {
            std::fs::write(path, &outcome.artifact).with_context(|| format!("writing {path}"))?;
            println!("{} -> {path}", outcome.summary);
        }
        None => {
            std::io::stdout().write_all(&outcome.artifact)?;
            eprintln!("{}", outcome.summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
