//! KS distance between the sample-covariance ESD and the MP law as p grows,
//! for i.i.d. Gaussian and Rademacher entries (n = 2p).
//!
//! Pass a path to also write the eigenvalues of the largest Gaussian run.

use mplab::ensembles::VectorModel;
use mplab::mp_law::MpLaw;
use mplab::rng::StreamKey;
use mplab::spectra::{esd_psd, ks_distance, sample_covariance};

fn main() -> mplab::Result<()> {
    let out = std::env::args().nth(1);
    let law = MpLaw::new(0.5)?;
    for model in [VectorModel::IidGaussian, VectorModel::IidRademacher] {
        println!("{model}");
        for p in [64, 128, 256, 512] {
            let key = StreamKey::new(1, "esd-convergence").trial(p as u64);
            let x = model.sampler(p)?.data_matrix(2 * p, &key)?;
            let e = esd_psd(&sample_covariance(&x)?)?;
            println!("  p = {p:>4}  KS = {:.4}  mean eigenvalue = {:.4}", ks_distance(&e, &law), e.moment(1));
            if p == 512 && model == VectorModel::IidGaussian {
                if let Some(path) = &out {
                    let f = std::fs::File::create(path).expect("create output file");
                    e.write_csv(f).expect("write eigenvalues");
                    println!("  eigenvalues written to {path}");
                }
            }
        }
    }
    Ok(())
}
