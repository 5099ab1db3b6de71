//! Haar-distributed orthonormal frames and their projectors.

use mplab::matcore::{eigh, haar_frame};
use mplab::rng::StreamKey;

fn main() -> mplab::Result<()> {
    let mut rng = StreamKey::new(7, "haar").stream();
    let (q, p) = (3, 6);
    let f = haar_frame(q, p, &mut rng)?;
    println!("C ({q} x {p}):");
    for i in 0..q {
        let row: Vec<String> = f.as_matrix().row(i).iter().map(|v| format!("{v:+.3}")).collect();
        println!("  {}", row.join(" "));
    }
    println!("orthonormality error: {:.1e}", f.orthonormality_error());
    let s = eigh(&f.projector(), false)?;
    let vals: Vec<String> = s.values().iter().map(|v| format!("{v:.3}")).collect();
    println!("eigenvalues of C'C: {}", vals.join(" "));

    // the average projector is (q/p) I
    let draws = 2000;
    let mut diag = 0.0;
    let mut off = 0.0;
    for _ in 0..draws {
        let m = haar_frame(q, p, &mut rng)?.projector();
        diag += m.as_matrix().row(0)[0];
        off += m.as_matrix().row(0)[1];
    }
    println!(
        "mean of (C'C)_11 = {:.3} (q/p = {:.3}), mean of (C'C)_12 = {:+.3}",
        diag / draws as f64,
        q as f64 / p as f64,
        off / draws as f64
    );
    Ok(())
}
