use std::process::ExitCode;

use bfstab_cli::{exit_code, run, Cli, EXIT_MALFORMED};
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_MALFORMED } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(out) => {
            println!("{}", out.json);
            if out.code != 0 {
                eprintln!("bfstab: finished with exit code {}", out.code);
            }
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("bfstab: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
