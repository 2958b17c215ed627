// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod error;
mod run;

use clap::Parser;

use args::{Cli, Command};
use error::EXIT_OK;

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Build(a) => commands::build(a),
        Command::Refine(a) => commands::refine(a),
        Command::Eval(a) => commands::eval(a),
        Command::Study(a) => commands::study(a),
        Command::ReportAnisotropy(a) => commands::report_anisotropy(a),
    };
    let code = match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("sparsetrig: error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
