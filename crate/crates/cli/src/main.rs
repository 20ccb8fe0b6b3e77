mod args;
mod commands;
mod expand;
mod runner;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

pub(crate) fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Binarize(a) => commands::binarize(a, seed),
        Command::GridSearch(a) => commands::grid(a, seed),
        Command::EvalBin(a) => commands::eval_bin(a, seed),
        Command::Augment(a) => commands::augment(a, seed),
        Command::Extract(a) => commands::extract(a, seed),
        Command::Codebook(a) => commands::codebook(a, seed),
        Command::SurrogateLabels(a) => commands::surrogate(a, seed),
        Command::Encode(a) => commands::encode(a, seed),
        Command::Retrieve(a) => commands::retrieve(a, seed),
        Command::Classify(a) => commands::classify(a, seed),
        Command::Correlate(a) => commands::correlate(a, seed),
        Command::Run(a) => commands::run(a),
    }
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    e.chain().find_map(|c| c.downcast_ref::<papyrion::Error>()).map_or("other", papyrion::Error::kind)
}

fn main() -> ExitCode {
    let argv = match expand::expand_manifest(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: kind=manifest msg={}", format!("{e:#}").replace('\n', " "));
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };

    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }

    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: kind={} msg={}", error_kind(&e), format!("{e:#}").replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
