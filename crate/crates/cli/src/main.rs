use clap::Parser;
use pjts_cli::{run, Cli};
use std::process::ExitCode;

fn write_outputs(cli: &Cli, rep: &pjts_cli::Report) -> Result<(), String> {
    if let Some(path) = &cli.json {
        let text = rep.to_json().map_err(|e| e.to_string())?;
        std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = &cli.csv {
        let file = std::fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        rep.write_csv(file).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let echo = std::env::args().collect::<Vec<_>>().join(" ");
    let rep = match run(&cli, &echo) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    print!("{}", rep.render_text());
    if let Err(e) = write_outputs(&cli, &rep) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if rep.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
