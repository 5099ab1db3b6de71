//! Drives the batch runner from code: same flags as the `mplab` binary,
//! records collected in memory, acceptance checks in the summary.

use mplab::experiment::{run_with_sink, ExperimentConfig, RecordSink, TrialRecord};

#[derive(Default)]
struct Keep(Vec<TrialRecord>);

impl RecordSink for Keep {
    fn write(&mut self, r: &TrialRecord) -> mplab::Result<()> {
        self.0.push(r.clone());
        Ok(())
    }
    fn finish(&mut self) -> mplab::Result<()> {
        Ok(())
    }
}

fn main() -> mplab::Result<()> {
    let args = "esd --model iid-rademacher --p 512 --n 1024 --trials 4 --seed 42";
    let cfg = ExperimentConfig::from_args(args.split_whitespace())?;
    let mut sink = Keep::default();
    let summary = run_with_sink(&cfg, &mut sink)?;
    for r in &sink.0 {
        println!("trial {} {} = {:.5}", r.trial, r.statistic, r.value);
    }
    println!("{}", summary.to_json());
    Ok(())
}
