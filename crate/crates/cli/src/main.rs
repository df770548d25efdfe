use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use holdim_cli::{run_pipeline, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are not usage errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run_pipeline(&cli) {
        Ok(out) => {
            let _ = std::io::stderr().write_all(out.summary_table().as_bytes());
            if let Some(doc) = &out.stdout {
                let _ = std::io::stdout().write_all(doc);
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                let _ = writeln!(std::io::stderr(), "{}", out.failure_json());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
