use std::process::ExitCode;

use mplab::experiment::{run_experiment, ExperimentConfig};

fn main() -> ExitCode {
    let result = ExperimentConfig::from_env().and_then(|cfg| {
        let summary = run_experiment(&cfg)?;
        if cfg.summary.is_none() {
            eprintln!("{}", summary.to_json());
        }
        Ok(summary)
    });
    match result {
        Ok(s) if s.passed => ExitCode::SUCCESS,
        Ok(s) => {
            let failures = serde_json::to_string(&s.failures).unwrap_or_default();
            eprintln!("mplab: threshold failures: {failures}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("mplab: {e}");
            ExitCode::from(2)
        }
    }
}
