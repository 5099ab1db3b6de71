//! Projected sample covariances C X X'C'/n under Haar and coordinate frames.

use mplab::conditions::{mp_property_trial, FrameMode};
use mplab::ensembles::VectorModel;
use mplab::rng::StreamKey;

fn main() -> mplab::Result<()> {
    let (p, n) = (512, 512);
    for model in [VectorModel::IidGaussian, VectorModel::BlockXi] {
        for q in [64, 256] {
            for mode in [FrameMode::Haar, FrameMode::FixedHalf] {
                let key = StreamKey::new(0, "projection").trial(q as u64);
                let ks = mp_property_trial(&model, p, n, q, &key, mode)?;
                println!("{model:>10}  q = {q:>3}  {mode:>10} frame  KS to MP(q/n) = {ks:.4}");
            }
        }
    }
    Ok(())
}
