use std::process::ExitCode;

use clap::Parser;
use tumordyn::cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|(out, dir)| {
        if let Some(dir) = dir {
            out.write_to(&dir)?;
        }
        print!("{}", out.summary);
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
