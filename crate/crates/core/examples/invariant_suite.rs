//! Randomized linear-algebra identities behind the resolvent arguments.

use mplab::matcore::facts::run_suite;
use mplab::rng::StreamKey;

fn main() -> mplab::Result<()> {
    let instances = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    for r in run_suite(instances, StreamKey::new(0, "invariants"))? {
        println!(
            "{:<28} {:>5} instances  {} violations  worst margin {:+.2e}",
            r.fact.name(),
            r.instances,
            r.violations,
            r.worst_margin
        );
    }
    Ok(())
}
