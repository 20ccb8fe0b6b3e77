use std::collections::BTreeMap;

use clap::CommandFactory;
use serde_json::Value;

use crate::args::Cli;
use crate::expand::to_flags;

/// Runs experiment stages by re-entering the argument parser, so a stage
/// behaves exactly like the equivalent command line.
pub struct CliRunner;

impl papyrion::corpus::StageRunner for CliRunner {
    fn known_keys(&self, command: &str) -> Option<Vec<String>> {
        let cmd = Cli::command();
        let sub = cmd.find_subcommand(command)?;
        Some(
            sub.get_arguments()
                .filter_map(|a| a.get_long())
                .filter(|l| !matches!(*l, "manifest" | "help"))
                .map(|l| l.replace('-', "_"))
                .collect(),
        )
    }

    fn run(&self, command: &str, args: &BTreeMap<String, Value>, seed: u64) -> papyrion::Result<()> {
        let mut argv = vec!["papyrion".to_string(), "--seed".to_string(), seed.to_string(), command.to_string()];
        let to_err = |e: anyhow::Error| e.downcast::<papyrion::Error>().unwrap_or_else(|e| papyrion::Error::Manifest(format!("{e:#}")));
        argv.extend(to_flags(args).map_err(to_err)?);
        let cli = <Cli as clap::Parser>::try_parse_from(&argv).map_err(|e| papyrion::Error::Manifest(e.to_string().lines().next().unwrap_or("").to_string()))?;
        crate::dispatch(&cli).map_err(to_err)
    }
}
