//! The Marchenko–Pastur law `μ_ρ`:
//!
//! ```text
//! dμ_ρ = max{1 − 1/ρ, 0} dδ₀ + √((b−x)(x−a)) / (2πxρ) · 1[a ≤ x ≤ b] dx,
//! a = (1 − √ρ)²,  b = (1 + √ρ)².
//! ```
//!
//! Integrals of the continuous part use the substitution
//! `x = a + (b − a) sin²θ`, which turns the square-root endpoint behaviour
//! into a smooth integrand on `[0, π/2]`:
//!
//! ```text
//! density(x) dx = (b − a)² sin²θ cos²θ / (π ρ x(θ)) dθ.
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::ComplexPoint;
use crate::quad;

const QUAD_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpLaw {
    rho: f64,
    a: f64,
    b: f64,
    atom0: f64,
}

impl MpLaw {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Domain(format!("MP law needs rho > 0, got {rho}")));
        }
        let s = rho.sqrt();
        Ok(Self {
            rho,
            a: (1.0 - s) * (1.0 - s),
            b: (1.0 + s) * (1.0 + s),
            atom0: (1.0 - 1.0 / rho).max(0.0),
        })
    }

    /// Law for `p` variables and `n` observations, `ρ = p/n`.
    pub fn for_dims(p: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("MP law needs n >= 1".into()));
        }
        Self::new(p as f64 / n as f64)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `(a, b, atom at 0)`.
    pub fn support(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.atom0)
    }

    /// Density of the continuous part; 0 outside `(a, b)` and, by convention,
    /// at `x = 0` when `a = 0`.
    pub fn density(&self, x: f64) -> f64 {
        if !(x > self.a && x < self.b) || x == 0.0 {
            return 0.0;
        }
        ((self.b - x) * (x - self.a)).sqrt() / (2.0 * PI * x * self.rho)
    }

    /// Distribution function, right-continuous, including the atom at 0.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x <= self.a {
            self.atom0
        } else if x >= self.b {
            1.0
        } else {
            let theta = ((x - self.a) / (self.b - self.a)).sqrt().asin();
            (self.atom0 + quad::integrate(|t| self.angular_weight(t), 0.0, theta, QUAD_TOL))
                .min(1.0)
        }
    }

    /// Left limit `F(x−)`; differs from [`cdf`](Self::cdf) only at the atom.
    pub fn cdf_left(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            self.cdf(x)
        }
    }

    /// `∫ x^k dμ_ρ` for `0 ≤ k ≤ 4`.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k > 4 {
            return Err(Error::Domain(format!("moment order must be in 0..=4, got {k}")));
        }
        let cont = quad::integrate(
            |t| self.point(t).powi(k as i32) * self.angular_weight(t),
            0.0,
            FRAC_PI_2,
            QUAD_TOL,
        );
        Ok(cont + if k == 0 { self.atom0 } else { 0.0 })
    }

    /// Closed-form Stieltjes transform `m(z) = ∫ dμ_ρ(λ)/(λ − z)`.
    ///
    /// `m` solves `ρ z m² + (z + ρ − 1) m + 1 = 0`; of the two roots the one
    /// in the upper half-plane is returned.
    pub fn stieltjes(&self, z: ComplexPoint) -> Complex64 {
        let z = z.to_complex();
        let qa = self.rho * z;
        let qb = z + (self.rho - 1.0);
        let mut sq = (qb * qb - 4.0 * qa).sqrt();
        if (qb.conj() * sq).re < 0.0 {
            sq = -sq;
        }
        let q = -0.5 * (qb + sq);
        let r1 = q / qa;
        let r2 = 1.0 / q;
        if r1.im >= r2.im {
            r1
        } else {
            r2
        }
    }

    /// Stieltjes transform by quadrature of the density plus the atom term.
    pub fn stieltjes_quadrature(&self, z: ComplexPoint) -> Complex64 {
        let zc = z.to_complex();
        let f = |t: f64| {
            let w = self.angular_weight(t);
            let r = (self.point(t) - zc).inv();
            (w * r.re, w * r.im)
        };
        let re = quad::integrate(|t| f(t).0, 0.0, FRAC_PI_2, QUAD_TOL);
        let im = quad::integrate(|t| f(t).1, 0.0, FRAC_PI_2, QUAD_TOL);
        Complex64::new(re, im) - self.atom0 / zc
    }

    /// Smallest `x` with `F(x) ≥ u`, by bisection.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("quantile level must be in [0, 1], got {u}")));
        }
        if u <= self.atom0 {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (self.a, self.b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        Ok(hi)
    }

    fn point(&self, theta: f64) -> f64 {
        let s = theta.sin();
        self.a + (self.b - self.a) * s * s
    }

    /// Density times `dx/dθ` under `x = a + (b−a) sin²θ`.
    fn angular_weight(&self, theta: f64) -> f64 {
        let s2 = theta.sin().powi(2);
        let width = self.b - self.a;
        let x = self.a + width * s2;
        if x == 0.0 {
            // a = 0: sin²θ / x → 1/(b − a)
            return width * (1.0 - s2) / (PI * self.rho);
        }
        width * width * s2 * (1.0 - s2) / (PI * self.rho * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(re: f64, im: f64) -> ComplexPoint {
        ComplexPoint::new(re, im).unwrap()
    }

    #[test]
    fn support_values() {
        assert_eq!(MpLaw::new(1.0).unwrap().support(), (0.0, 4.0, 0.0));
        assert_eq!(MpLaw::new(4.0).unwrap().support(), (1.0, 9.0, 0.75));
        let (a, b, atom) = MpLaw::new(1e-6).unwrap().support();
        assert!((a - 1.0).abs() < 3e-3 && (b - 1.0).abs() < 3e-3);
        assert_eq!(atom, 0.0);
    }

    #[test]
    fn invalid_rho() {
        for rho in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(MpLaw::new(rho), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn density_values() {
        let law = MpLaw::new(1.0).unwrap();
        assert!((law.density(2.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(law.density(5.0), 0.0);
        assert_eq!(law.density(0.0), 0.0);
        assert_eq!(law.density(4.0), 0.0);
        assert_eq!(law.density(-1.0), 0.0);
    }

    #[test]
    fn cdf_atom_and_endpoints() {
        let law = MpLaw::new(4.0).unwrap();
        assert_eq!(law.cdf(0.0), 0.75);
        assert_eq!(law.cdf(0.5), 0.75);
        assert_eq!(law.cdf(-1e-12), 0.0);
        assert_eq!(law.cdf_left(0.0), 0.0);
        let law = MpLaw::new(1.0).unwrap();
        assert!((law.cdf(4.0 - 1e-12) - 1.0).abs() < 1e-8);
        assert_eq!(law.cdf(4.0), 1.0);
    }

    #[test]
    fn moment_range() {
        let law = MpLaw::new(0.5).unwrap();
        assert!(matches!(law.moment(5), Err(Error::Domain(_))));
        assert!((law.moment(0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stieltjes_matches_internal_quadrature() {
        for rho in [0.1, 0.5, 1.0, 2.0, 4.0] {
            let law = MpLaw::new(rho).unwrap();
            for zz in [z(0.0, 4.0), z(1.0, 1.0), z(-1.0, 0.5), z(3.0, 0.2)] {
                let d = (law.stieltjes(zz) - law.stieltjes_quadrature(zz)).norm();
                assert!(d < 1e-9, "rho={rho} z={zz:?} diff={d}");
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let law = MpLaw::new(0.5).unwrap();
        for u in [0.1, 0.5, 0.9] {
            let x = law.quantile(u).unwrap();
            assert!((law.cdf(x) - u).abs() < 1e-10);
        }
        let law = MpLaw::new(2.0).unwrap();
        assert_eq!(law.quantile(0.3).unwrap(), 0.0);
    }
}
