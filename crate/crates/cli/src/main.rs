use std::process::ExitCode;

use clap::Parser;

use rwrs_cli::{resolve_config, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = resolve_config(&cli).and_then(|cfg| {
        let report = run(cli.command, &cfg)?;
        Ok((cfg, report))
    });
    match outcome {
        Ok((cfg, report)) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let failed = report.rows.iter().filter(|r| r.pass == Some(false)).count();
            eprintln!(
                "{}: {} rows ({failed} failing) written to {}",
                cli.command.name(),
                report.rows.len(),
                cfg.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
