//! An isotropic vector supported on one random half of the coordinates.
//! Its full sample covariance still follows the MP law, but quadratic forms
//! against the half projector do not concentrate and neither does the
//! projected spectrum.

use mplab::conditions::{concentration_probe, e9_stat, mp_property_trial, FrameMode, MatrixFamily};
use mplab::ensembles::VectorModel;
use mplab::mp_law::MpLaw;
use mplab::rng::StreamKey;
use mplab::spectra::{esd_psd, ks_distance, sample_covariance};

fn main() -> mplab::Result<()> {
    let (p, n) = (512, 512);
    let model = VectorModel::BlockXi;
    let key = StreamKey::new(0, "block-counterexample");

    let x = model.sampler(p)?.data_matrix(n, &key.derive("full"))?;
    let ks = ks_distance(&esd_psd(&sample_covariance(&x)?)?, &MpLaw::for_dims(p, n)?);
    println!("full ESD: KS to MP(1) = {ks:.4}");

    let c = concentration_probe(&model, &MatrixFamily::FixedHalfProjector, p, 0.25, 500, &key.derive("quad"))?;
    println!("half-projector quadratic form: P(|stat| > 0.25) = {:.3}", c.value);

    for mode in [FrameMode::FixedHalf, FrameMode::Haar] {
        let ks = mp_property_trial(&model, p, n, p / 2, &key.derive("proj"), mode)?;
        println!("projected spectrum ({mode} frame): KS to MP(1/2) = {ks:.4}");
    }

    let norms: Vec<f64> = (0..2000)
        .map(|t| e9_stat(&model, p, &key.derive("norm").trial(t)))
        .collect::<mplab::Result<_>>()?;
    let within = norms.iter().filter(|v| v.abs() <= 0.1).count() as f64 / norms.len() as f64;
    println!("(x'x - p)/p within 0.1: {within:.3}  (sd is 2/sqrt(p) = {:.4})", 2.0 / (p as f64).sqrt());
    Ok(())
}
