//! Gap between normalized trace resolvents of a model's sample covariance
//! and that of its Gaussian twin, at z = i.

use mplab::ensembles::VectorModel;
use mplab::equivalence::{resolvent_gap, swap_spectra, ShiftSpec, SwapConfig};
use mplab::matcore::ComplexPoint;
use mplab::rng::StreamKey;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 { 0.5 * (v[m - 1] + v[m]) } else { v[m] }
}

fn main() -> mplab::Result<()> {
    let z = ComplexPoint::new(0.0, 1.0)?;
    for model in [VectorModel::IidRademacher, VectorModel::SparseSpike] {
        println!("{model}");
        for p in [64, 128, 256] {
            let cfg = SwapConfig::new(model.clone(), p, 2 * p, z);
            let gaps = (0..8)
                .map(|t| Ok(resolvent_gap(&cfg, &StreamKey::new(t, "swap"))?.norm()))
                .collect::<mplab::Result<Vec<f64>>>()?;
            println!("  p = {p:>3}  median |gap| = {:.5}", median(gaps));
        }
    }

    // adding beta*I moves the evaluation point by beta
    let mut cfg = SwapConfig::new(VectorModel::IidRademacher, 64, 128, z);
    let key = StreamKey::new(0, "shift");
    let plain = swap_spectra(&cfg, &key)?.gap(z.shifted(0.5));
    cfg.shift = ShiftSpec::ScaledIdentity(0.5);
    let shifted = swap_spectra(&cfg, &key)?.gap(z);
    println!("shift by 0.5*I vs z - 0.5: |difference| = {:.1e}", (plain - shifted).norm());
    Ok(())
}
