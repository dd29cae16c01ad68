//! `ael`: equilibrium quoting, fee design and Monte Carlo validation for a two-player
//! double auction.

mod commands;
mod config;
mod csv;
mod error;
mod validate;

use std::fs;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

use config::{Origin, RawConfig, RunConfig, KEYS};
use error::CliError;

fn with_common_args(cmd: Command) -> Command {
    let mut cmd = cmd
        .arg(Arg::new("config").long("config").short('c').value_name("FILE").help("key=value config file, or a CSV written by ael"))
        .arg(Arg::new("strict").long("strict").action(ArgAction::SetTrue).help("exit with status 3 if any solve does not converge"));
    for (key, default, help) in KEYS {
        let help = if default.is_empty() { help.to_string() } else { format!("{help} [default: {default}]") };
        cmd = cmd.arg(Arg::new(*key).long(*key).value_name("VALUE").help(help));
    }
    cmd
}

fn cli() -> Command {
    Command::new("ael")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Equilibrium quoting strategies, exchange fee design and Monte Carlo checks for a two-player double auction")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            with_common_args(Command::new("stats").about("market statistics of a strategy"))
                .arg(Arg::new("simulate").long("simulate").action(ArgAction::SetTrue).help("add Monte Carlo estimates and standard errors")),
        )
        .subcommand(with_common_args(Command::new("solve-ne").about("equilibrium strategies for one or more penalty levels")))
        .subcommand(with_common_args(Command::new("optimal-fee").about("exchange revenue across penalty levels")))
        .subcommand(with_common_args(Command::new("payoff-curve").about("payoff and its derivatives against a fixed opponent")))
        .subcommand(with_common_args(Command::new("simulate").about("Monte Carlo market statistics next to the closed forms")))
        .subcommand(with_common_args(Command::new("validate").about("run the self-check suite on the configured market")))
}

fn resolve(m: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut raw = RawConfig::default();
    if let Some(path) = m.get_one::<String>("config") {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
        raw.merge_text(&text, path)?;
    }
    for (key, _, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            raw.set(key, v, Origin::Flag)?;
        }
    }
    raw.resolve()
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var("AEL_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("AEL_THREADS must be a nonnegative integer, got '{text}'")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("AEL_THREADS: {e}")))?;
    }
    Ok(())
}

fn run(m: &ArgMatches) -> Result<(), CliError> {
    configure_threads()?;
    let (name, sub) = m.subcommand().expect("subcommand required");
    let cfg = resolve(sub)?;
    let strict = sub.get_flag("strict");
    match name {
        "stats" => commands::stats(&cfg, sub.get_flag("simulate"))?.write(&cfg.output),
        "simulate" => commands::simulate(&cfg)?.write(&cfg.output),
        "payoff-curve" => commands::payoff_curve(&cfg)?.write(&cfg.output),
        "solve-ne" | "optimal-fee" => {
            let (table, converged) = if name == "solve-ne" { commands::solve_ne(&cfg)? } else { commands::optimal_fee(&cfg)? };
            table.write(&cfg.output)?;
            if !converged {
                eprintln!("warning: at least one solve did not converge");
                if strict {
                    return Err(CliError::Convergence("at least one solve did not converge".into()));
                }
            }
            Ok(())
        }
        "validate" => {
            let checks = validate::run(&cfg)?;
            print!("{}", validate::render(&checks));
            match checks.iter().filter(|c| !c.passed).count() {
                0 => Ok(()),
                n => Err(CliError::Validation(n)),
            }
        }
        other => unreachable!("unknown subcommand {other}"),
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ael: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn dotted_flags_override_defaults() {
        let m = cli().get_matches_from(["ael", "stats", "--market.rho", "0.05", "--strategy.delta", "0.3"]);
        let cfg = resolve(m.subcommand().unwrap().1).unwrap();
        assert_eq!(cfg.market.rho(), 0.05);
        assert_eq!(cfg.strategy, config::StrategySource::Constant(0.3));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(String::new()).exit_code(), 2);
        assert_eq!(CliError::Convergence(String::new()).exit_code(), 3);
        assert_eq!(CliError::NoEquilibrium(String::new()).exit_code(), 3);
        assert_eq!(CliError::Validation(1).exit_code(), 4);
    }
}
