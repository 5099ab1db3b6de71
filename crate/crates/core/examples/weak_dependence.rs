//! Moving-average vectors with summable coefficients: quadratic forms still
//! concentrate and the resolvent stays close to the matching Gaussian.

use mplab::conditions::{a3_stat, concentration_probe, MatrixFamily};
use mplab::ensembles::{population_covariance, VectorModel};
use mplab::equivalence::{resolvent_gap, SwapConfig};
use mplab::matcore::ComplexPoint;
use mplab::rng::StreamKey;

fn main() -> mplab::Result<()> {
    let model: VectorModel = "weak-ma:1,0.6,0.3,0.1".parse()?;
    let z = ComplexPoint::new(1.0, 0.5)?;
    println!("{model}, covariance band {:?}", model.covariance_spec().to_string());
    for p in [64, 256, 1024] {
        let key = StreamKey::new(p as u64, "weak");
        let a3 = a3_stat(&population_covariance(&model, p)?);
        let exc = concentration_probe(&model, &MatrixFamily::FixedHalfProjector, p, 0.1, 400, &key)?;
        let gap = resolvent_gap(&SwapConfig::new(model.clone(), p, 2 * p, z), &key)?.norm();
        println!("  p = {p:>4}  a3 = {a3:.2e}  P(|stat| > 0.1) = {:.3}  |gap| = {gap:.4}", exc.value);
    }
    Ok(())
}
