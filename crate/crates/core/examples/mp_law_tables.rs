//! Support, atom, moments and Stieltjes transform of the Marchenko-Pastur law.

use mplab::matcore::ComplexPoint;
use mplab::mp_law::MpLaw;

fn main() -> mplab::Result<()> {
    println!("{:>5} {:>8} {:>8} {:>6} {:>9} {:>9} {:>9}", "rho", "a", "b", "atom", "m2", "m3", "m4");
    for rho in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let law = MpLaw::new(rho)?;
        let (a, b, atom) = law.support();
        println!(
            "{rho:>5} {a:>8.4} {b:>8.4} {atom:>6.3} {:>9.4} {:>9.4} {:>9.4}",
            law.moment(2)?,
            law.moment(3)?,
            law.moment(4)?
        );
    }

    let law = MpLaw::new(0.5)?;
    println!("\nStieltjes transform of mu_0.5, closed form vs quadrature:");
    for (re, im) in [(-1.0, 0.05), (0.5, 0.2), (2.0, 1.0), (5.0, 3.0)] {
        let z = ComplexPoint::new(re, im)?;
        let (m, q) = (law.stieltjes(z), law.stieltjes_quadrature(z));
        println!("  z = {re:+.2}{im:+.2}i  m = {:.6}{:+.6}i  |diff| = {:.1e}", m.re, m.im, (m - q).norm());
    }

    println!("\nquantiles of mu_2 (atom at 0 has mass 1/2):");
    let law = MpLaw::new(2.0)?;
    for u in [0.25, 0.5, 0.75, 0.95] {
        println!("  F^-1({u}) = {:.4}", law.quantile(u)?);
    }
    Ok(())
}
