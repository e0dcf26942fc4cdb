use std::process::ExitCode;

use clap::Parser;

use bld::config::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are input errors; help and version are not errors.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match bld::run(&cli.command) {
        Ok(outputs) => {
            if let Some(text) = outputs.stdout {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = serde_json::json!({
                "error": e.kind(),
                "command": cli.command.name(),
                "message": e.to_string(),
            });
            eprintln!("{msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
