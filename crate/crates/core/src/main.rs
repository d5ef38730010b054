use std::io::{self, Write};
use std::process::ExitCode;

use jwalk::cli::{self, CliError};

fn run() -> Result<(), CliError> {
    let threads = cli::thread_cap(std::env::var("JWALK_THREADS").ok().as_deref())?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global thread pool configured once");
    }
    let spec = cli::parse_args(std::env::args_os())?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    cli::execute(&spec, &mut out)?;
    out.flush().map_err(|source| CliError::Io {
        path: "<stdout>".into(),
        source,
    })
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Clap(e)) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("jwalk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
