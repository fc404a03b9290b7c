use clap::Parser;
use lacuna_cli::{emit, run, RunConfig};

fn main() {
    let config = RunConfig::parse();
    let code = match run(&config).and_then(|outcome| {
        emit(&config, &outcome)?;
        Ok(outcome)
    }) {
        Ok(outcome) => {
            for line in &outcome.diagnostics {
                eprintln!("{line}");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
