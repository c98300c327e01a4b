//! Command-line front end: configuration merging, experiment dispatch and
//! output files.

pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::process::ExitCode;

pub use config::{parse_config, Experiment, Format, RunConfig};
pub use run::{run, Outcome};

pub const EXIT_FAILED_CHECKS: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_config(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            if let Some(clap_err) = e.downcast_ref::<clap::Error>() {
                let _ = clap_err.print();
                return ExitCode::from(if clap_err.use_stderr() { EXIT_USAGE } else { 0 });
            }
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Some(threads) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    match run(&cfg) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED_CHECKS)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
