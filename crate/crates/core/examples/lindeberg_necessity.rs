//! Sparse spikes break the Lindeberg condition and the MP limit with it,
//! while Rademacher entries satisfy both.

use mplab::conditions::lindeberg_stat;
use mplab::ensembles::VectorModel;
use mplab::mp_law::MpLaw;
use mplab::rng::StreamKey;
use mplab::spectra::{esd_psd, ks_distance, sample_covariance};

fn main() -> mplab::Result<()> {
    let (p, n) = (512, 1024);
    let law = MpLaw::for_dims(p, n)?;
    for model in [VectorModel::IidRademacher, VectorModel::SparseSpike] {
        let key = StreamKey::new(0, "lindeberg-necessity");
        let l = lindeberg_stat(&model, p, 0.5, 2000, &key.derive("lindeberg"))?;
        let x = model.sampler(p)?.data_matrix(n, &key.derive("x"))?;
        let ks = ks_distance(&esd_psd(&sample_covariance(&x)?)?, &law);
        println!("{model:>15}: L(0.5) = {:.3} +- {:.3}   KS to MP(p/n) = {ks:.4}", l.value, l.se);
    }
    Ok(())
}
