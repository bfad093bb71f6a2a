use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use opo_squeezing_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut diag = stderr.lock();
    let result = run(cli, &mut out, &mut diag);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(diag, "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
