//! Argument parsing. Every configuration key is also a `--kebab-case` flag.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};
use hyprec::recdata::Group;

use crate::commands::{self, evaluate::Subject};
use crate::config::{RunConfig, KEYS, SEED_ENV};
use crate::error::{CliError, CliResult, EXIT_USAGE};

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn with_config_args(cmd: Command) -> Command {
    let cmd = cmd
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key=value configuration file"),
        )
        .arg(
            Arg::new("set")
                .long("set")
                .value_name("KEY=VALUE")
                .action(ArgAction::Append)
                .help("override one configuration key"),
        );
    KEYS.iter().fold(cmd, |cmd, (key, help)| {
        cmd.arg(
            Arg::new(*key)
                .long(flag_name(key))
                .value_name("VALUE")
                .help(*help)
                .help_heading("Configuration"),
        )
    })
}

pub fn command() -> Command {
    Command::new("hyprec")
        .about("Hyperbolic autoencoders for implicit-feedback recommendation")
        .version(env!("CARGO_PKG_VERSION"))
        .after_help(format!("{SEED_ENV} sets the default seed. Exit codes: 0 ok, 1 usage, 2 data, 3 numerical."))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(with_config_args(
            Command::new("estimate-curvature")
                .about("Estimate the curvature c from δ-hyperbolicity of the SVD item embeddings")
                .arg(Arg::new("raw-delta").long("raw-delta").action(ArgAction::SetTrue).help("use the raw δ"))
                .arg(
                    Arg::new("relative-delta")
                        .long("relative-delta")
                        .action(ArgAction::SetTrue)
                        .conflicts_with("raw-delta")
                        .help("use 2δ/diam (default)"),
                )
                .arg(Arg::new("output").long("output").value_name("FILE").help("result JSON [default: <out>/curvature.json]")),
        ))
        .subcommand(with_config_args(Command::new("split").about("Build a weak or strong evaluation split")))
        .subcommand(with_config_args(
            Command::new("train")
                .about("Train a model, keeping the best-validation checkpoint")
                .arg(Arg::new("resume").long("resume").action(ArgAction::SetTrue).help("continue from <out>/last.ckpt"))
                .arg(
                    Arg::new("stop-after")
                        .long("stop-after")
                        .value_name("EPOCHS")
                        .value_parser(clap::value_parser!(usize))
                        .hide(true),
                ),
        ))
        .subcommand(with_config_args(Command::new("tune").about("Random hyperparameter search on the validation users")))
        .subcommand(with_config_args(
            Command::new("evaluate")
                .about("Evaluate a checkpoint or baseline on a split")
                .arg(Arg::new("checkpoint").long("checkpoint").value_name("FILE"))
                .arg(
                    Arg::new("baseline")
                        .long("baseline")
                        .value_parser(["popularity"])
                        .conflicts_with("checkpoint"),
                )
                .arg(
                    Arg::new("group")
                        .long("group")
                        .value_parser(["test", "val"])
                        .default_value("test"),
                ),
        ))
        .subcommand(
            Command::new("report")
                .about("Merge evaluation reports and summarize tuning logs")
                .arg(Arg::new("inputs").value_name("PATH").num_args(1..).required(true).value_parser(clap::value_parser!(PathBuf)))
                .arg(Arg::new("output").long("output").value_name("DIR").value_parser(clap::value_parser!(PathBuf)).default_value(".")),
        )
}

/// Defaults, then `HYPREC_SEED`, the config file, `--set`, and explicit flags.
pub fn build_config(m: &ArgMatches) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::from_env()?;
    if let Some(p) = m.get_one::<String>("config") {
        cfg.apply_file(p.as_ref())?;
    }
    for kv in m.get_many::<String>("set").into_iter().flatten() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--set {kv}: expected KEY=VALUE")))?;
        cfg.set(&k.trim().replace('-', "_"), v)?;
    }
    for (key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

fn dispatch(m: &ArgMatches) -> CliResult<()> {
    let (name, sub) = m.subcommand().expect("subcommand required");
    if name == "report" {
        let inputs: Vec<PathBuf> = sub.get_many::<PathBuf>("inputs").expect("required").cloned().collect();
        let out = sub.get_one::<PathBuf>("output").expect("defaulted");
        commands::report::run(&inputs, out)?;
        return Ok(());
    }
    let mut cfg = build_config(sub)?;
    if name == "estimate-curvature" {
        if sub.get_flag("raw-delta") {
            cfg.set("delta_mode", "raw")?;
        }
        if sub.get_flag("relative-delta") {
            cfg.set("delta_mode", "relative")?;
        }
    }
    cfg.validate()?;
    match name {
        "estimate-curvature" => {
            let out = sub
                .get_one::<String>("output")
                .map(PathBuf::from)
                .unwrap_or_else(|| commands::out_path(&cfg, "curvature.json"));
            commands::estimate::run(&cfg, &out)?;
        }
        "split" => {
            commands::split::run(&cfg)?;
        }
        "train" => {
            let o = commands::train::run(&cfg, sub.get_flag("resume"), sub.get_one::<usize>("stop-after").copied())?;
            if let Some((e, v)) = o.best {
                if v.is_finite() {
                    println!("best validation NDCG {v:.6} at epoch {e}");
                }
            }
        }
        "tune" => {
            let o = commands::tune::run(&cfg)?;
            if let Some((t, _)) = o.best {
                println!("best trial {t}; configuration written to {}", commands::out_path(&cfg, commands::tune::BEST_CONFIG_FILE).display());
            }
        }
        "evaluate" => {
            let group = match sub.get_one::<String>("group").map(String::as_str) {
                Some("val") => Group::Val,
                _ => Group::Test,
            };
            let subject = match (sub.get_one::<String>("checkpoint"), sub.get_one::<String>("baseline")) {
                (Some(p), _) => Subject::Checkpoint(p.as_ref()),
                (None, Some(_)) => Subject::Popularity,
                (None, None) => return Err(CliError::usage("evaluate needs --checkpoint or --baseline")),
            };
            commands::evaluate::run(&cfg, subject, group)?;
        }
        _ => unreachable!("unknown subcommand {name}"),
    }
    Ok(())
}

/// Parses `args`, runs the subcommand and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let m = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&m) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
