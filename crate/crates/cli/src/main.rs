use std::process::ExitCode;

use spp_cli::CliError;

fn main() -> ExitCode {
    match spp_cli::run_from(std::env::args_os()) {
        Ok(summary) => {
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("wrote {} ({} rows), {}", summary.output.display(), summary.rows, summary.manifest.display());
            ExitCode::SUCCESS
        }
        Err(CliError::Clap(e)) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
