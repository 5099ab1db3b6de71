//! Randomised invariant suite for the linear-algebra facts the resolvent
//! arguments rest on: trace and norm inequalities, resolvent bounds,
//! Sherman–Morrison, and the explicit quotient-perturbation constant.
//!
//! Each check draws a random instance (dimension at most 40), evaluates
//! `lhs − rhs` and records a violation when that margin exceeds the
//! tolerance. The suite is what `mplab facts` runs.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    complex_spectral_norm, eigh, rank_one_terms, spectral_form, spectral_norm, ComplexPoint,
    Matrix, SymMatrix,
};
use crate::error::Result;
use crate::rng::{Stream, StreamKey};

/// Additive slack for every inequality in the suite.
pub const FACT_TOL: f64 = 1e-10;

/// Relative agreement required between Sherman–Morrison and direct recomputation.
pub const SHERMAN_MORRISON_TOL: f64 = 1e-9;

pub const MAX_DIM: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fact {
    TraceProduct,
    SymmetricPartNorm,
    ComplexPartsNorm,
    ResolventNorm,
    QuadraticRatio,
    TraceLowerBound,
    ShermanMorrison,
    ShiftedTrace,
    QuotientPerturbation,
    EighDeterminism,
}

impl Fact {
    pub const ALL: [Fact; 10] = [
        Fact::TraceProduct,
        Fact::SymmetricPartNorm,
        Fact::ComplexPartsNorm,
        Fact::ResolventNorm,
        Fact::QuadraticRatio,
        Fact::TraceLowerBound,
        Fact::ShermanMorrison,
        Fact::ShiftedTrace,
        Fact::QuotientPerturbation,
        Fact::EighDeterminism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fact::TraceProduct => "trace_product",
            Fact::SymmetricPartNorm => "symmetric_part",
            Fact::ComplexPartsNorm => "complex_parts",
            Fact::ResolventNorm => "resolvent_norm",
            Fact::QuadraticRatio => "quadratic_ratio",
            Fact::TraceLowerBound => "trace_lower_bound",
            Fact::ShermanMorrison => "sherman_morrison",
            Fact::ShiftedTrace => "shifted_trace",
            Fact::QuotientPerturbation => "quotient_perturbation",
            Fact::EighDeterminism => "eigh_determinism",
        }
    }

    /// One random instance; returns the worst `lhs − rhs − tolerance`
    /// (non-positive means the inequality held).
    pub fn check_once(self, rng: &mut Stream) -> Result<f64> {
        match self {
            Fact::TraceProduct => trace_product(rng),
            Fact::SymmetricPartNorm => symmetric_part_norm(rng),
            Fact::ComplexPartsNorm => complex_parts_norm(rng),
            Fact::ResolventNorm => resolvent_norm(rng),
            Fact::QuadraticRatio => quadratic_ratio(rng),
            Fact::TraceLowerBound => trace_lower_bound(rng),
            Fact::ShermanMorrison => sherman_morrison(rng),
            Fact::ShiftedTrace => shifted_trace(rng),
            Fact::QuotientPerturbation => Ok(quotient_perturbation(rng)),
            Fact::EighDeterminism => eigh_determinism(rng),
        }
    }

    /// Instance `i` of this fact under `key`: column `i` of the key derived
    /// from the fact's name.
    pub fn check_instance(self, key: StreamKey, i: u64) -> Result<f64> {
        self.check_once(&mut key.derive(self.name()).column(i))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactReport {
    pub fact: Fact,
    pub instances: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

impl FactReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Runs `instances` random draws of `fact` (see [`Fact::check_instance`]).
pub fn run_fact(fact: Fact, instances: usize, key: StreamKey) -> Result<FactReport> {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..instances {
        let margin = fact.check_instance(key, i as u64)?;
        if !(margin <= 0.0) {
            violations += 1;
        }
        worst = worst.max(margin);
    }
    Ok(FactReport {
        fact,
        instances,
        violations,
        worst_margin: worst,
    })
}

pub fn run_suite(instances: usize, key: StreamKey) -> Result<Vec<FactReport>> {
    Fact::ALL
        .iter()
        .map(|&f| run_fact(f, instances, key))
        .collect()
}

fn dim(rng: &mut Stream) -> usize {
    rng.random_range(1..=MAX_DIM)
}

fn gaussian(rows: usize, cols: usize, rng: &mut Stream) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random PSD matrix `G Gᵀ / p` with random rank.
fn random_psd(p: usize, rng: &mut Stream) -> SymMatrix {
    let rank = rng.random_range(1..=p);
    let g = gaussian(p, rank, rng);
    let mut m = g.matmul_transpose(&g).expect("conformable");
    m.scale(1.0 / p as f64);
    SymMatrix::new(m).expect("finite")
}

fn random_symmetric(p: usize, rng: &mut Stream) -> SymMatrix {
    let mut g = gaussian(p, p, rng);
    g.scale(1.0 / (p as f64).sqrt());
    SymMatrix::symmetric_part(&g).expect("square")
}

fn random_vector(p: usize, rng: &mut Stream) -> Vec<f64> {
    (0..p).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_point(rng: &mut Stream) -> ComplexPoint {
    let re = rng.random_range(-3.0..5.0);
    let im = rng.random_range(0.05..3.0);
    ComplexPoint::new(re, im).expect("upper half-plane")
}

fn trace_product(rng: &mut Stream) -> Result<f64> {
    let p = dim(rng);
    let b = random_psd(p, rng);
    let c = random_psd(p, rng);
    let nb = spectral_norm(b.as_matrix())?;
    let bc = b.as_matrix().matmul(c.as_matrix())?;
    let tr_bc = bc.trace();
    let tr_bcbc: f64 = (0..p)
        .map(|i| (0..p).map(|j| bc[(i, j)] * bc[(j, i)]).sum::<f64>())
        .sum();
    let tr_c2 = c.trace_product(&c);
    let m1 = tr_bc - nb * c.trace();
    let m2 = tr_bcbc - nb * nb * tr_c2;
    Ok(m1.max(m2) - FACT_TOL)
}

fn symmetric_part_norm(rng: &mut Stream) -> Result<f64> {
    let p = dim(rng);
    let b = gaussian(p, p, rng);
    let c = SymMatrix::symmetric_part(&b)?;
    Ok(spectral_norm(c.as_matrix())? - spectral_norm(&b)? - FACT_TOL)
}

fn complex_parts_norm(rng: &mut Stream) -> Result<f64> {
    let p = dim(rng);
    let b = gaussian(p, p, rng);
    let c = gaussian(p, p, rng);
    let na = complex_spectral_norm(&b, &c)?;
    let nb = spectral_norm(&b)?;
    let nc = spectral_norm(&c)?;
    Ok(nb.max(nc) - na - FACT_TOL)
}

fn resolvent_norm(rng: &mut Stream) -> Result<f64> {
    let p = dim(rng);
    let c = random_symmetric(p, rng);
    let z = random_point(rng).to_complex();
    let s = eigh(&c, false)?;
    let norm = s
        .values()
        .iter()
        .map(|&l| (l - z).norm().recip())
        .fold(0.0, f64::max);
    Ok(norm - 1.0 / z.im - FACT_TOL)
}

fn quadratic_ratio(rng: &mut Stream) -> Result<f64> {
    let p = dim(rng);
    let c = random_symmetric(p, rng);
    let w = random_vector(p, rng);
    let z = random_point(rng);
    let s = eigh(&c, true)?;
    let t = rank_one_terms(&s, &w, z.to_complex())?;
    Ok(t.second.norm() / (1.0 + t.first).norm() - 1.0 / z.im() - FACT_TOL)
}

fn trace_lower_bound(rng: &mut Stream) -> Result<f64> {
    let p = dim(rng);
    let b = random_psd(p, rng);
    let c = random_psd(p, rng);
    let z = random_point(rng).to_complex();
    let s = eigh(&c, true)?;
    let q = s.vectors().expect("requested vectors");
    // tr(B (C − zI)⁻¹) = Σ_k q_kᵀ B q_k / (λ_k − z)
    let mut tr = Complex64::new(0.0, 0.0);
    for (k, &l) in s.values().iter().enumerate() {
        let qk = q.column(k);
        tr += b.quadratic_form(&qk) / (l - z);
    }
    Ok(z.im / z.norm() - (1.0 + tr).norm() - FACT_TOL)
}

fn sherman_morrison(rng: &mut Stream) -> Result<f64> {
    let p = dim(rng);
    let a = random_symmetric(p, rng);
    let w = random_vector(p, rng);
    let z = random_point(rng);
    let zc = z.to_complex();

    let s = eigh(&a, true)?;
    let terms = rank_one_terms(&s, &w, zc)?;

    let mut updated = a.as_matrix().clone();
    for i in 0..p {
        for j in 0..p {
            updated[(i, j)] += w[i] * w[j];
        }
    }
    let su = eigh(&SymMatrix::new(updated)?, true)?;
    let direct_trace: Complex64 = su.values().iter().map(|&l| (l - zc).inv()).sum();
    let direct_form = spectral_form(&su, &w, |l| (l - zc).inv())?;

    let rel = |got: Complex64, want: Complex64| (got - want).norm() / want.norm().max(1.0);
    let m_trace = rel(terms.updated_trace(), direct_trace) - SHERMAN_MORRISON_TOL;
    let m_form = rel(terms.updated_form(), direct_form) - SHERMAN_MORRISON_TOL;
    // the update never moves the trace by more than 1/Im z
    let m_bound = (terms.updated_trace() - terms.trace).norm() - 1.0 / z.im() - FACT_TOL;
    Ok(m_trace.max(m_form).max(m_bound))
}

fn shifted_trace(rng: &mut Stream) -> Result<f64> {
    let p = dim(rng);
    let c = random_psd(p, rng);
    let eps = rng.random_range(0.05..2.0);
    let v = rng.random_range(0.01..3.0);
    let s = eigh(&c, false)?;
    let z = Complex64::new(-eps, v);
    let diff: Complex64 = s
        .values()
        .iter()
        .map(|&l| (l - z).inv() - 1.0 / (l + eps))
        .sum();
    Ok(diff.norm() - p as f64 * v / (eps * eps) - FACT_TOL)
}

/// Explicit constant of the quotient perturbation bound:
/// `|z₁/(1+w₁) − z₂/(1+w₂)| ≤ γ (2/δ² + M/δ + 4/min{δ², 2δ})`.
pub fn quotient_constant(delta: f64, m: f64) -> f64 {
    2.0 / (delta * delta) + m / delta + 4.0 / (delta * delta).min(2.0 * delta)
}

fn unit_disc(rng: &mut Stream, on_boundary: bool) -> Complex64 {
    let r: f64 = if on_boundary { 1.0 } else { rng.random::<f64>().sqrt() };
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, theta)
}

fn quotient_perturbation(rng: &mut Stream) -> f64 {
    let delta = rng.random_range(0.05..3.0);
    let m = rng.random_range(0.05..5.0);
    let gamma = rng.random_range(0.0..0.5) * delta;
    let boundary = rng.random_bool(0.3);

    let r2 = if boundary { delta } else { delta + rng.random_range(0.0..3.0) };
    let w2 = Complex64::new(-1.0, 0.0) + unit_disc(rng, true) * r2;
    let w1 = w2 + unit_disc(rng, boundary) * gamma;
    let t = if boundary { 1.0 } else { rng.random::<f64>() };
    let z1 = unit_disc(rng, true) * (m * (1.0 + w1).norm() * t);
    let z2 = z1 + unit_disc(rng, boundary) * gamma;

    let lhs = (z1 / (1.0 + w1) - z2 / (1.0 + w2)).norm();
    lhs - gamma * quotient_constant(delta, m) - FACT_TOL
}

fn eigh_determinism(rng: &mut Stream) -> Result<f64> {
    let p = dim(rng);
    let c = random_symmetric(p, rng);
    let a = eigh(&c, true)?;
    let b = eigh(&c, true)?;
    Ok(if a == b { -1.0 } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fact_holds_on_a_small_sample() {
        let key = StreamKey::new(99, "facts-unit");
        for report in run_suite(60, key).unwrap() {
            assert!(report.passed(), "{:?}", report);
        }
    }

    #[test]
    fn suite_is_reproducible() {
        let key = StreamKey::new(5, "facts-unit");
        assert_eq!(run_suite(10, key).unwrap(), run_suite(10, key).unwrap());
    }

    #[test]
    fn quotient_constant_matches_hand_value() {
        // δ = 1, M = 1: 2 + 1 + 4/min(1, 2) = 7
        assert_eq!(quotient_constant(1.0, 1.0), 7.0);
        // δ = 4, M = 2: 2/16 + 1/2 + 4/8 = 1.125
        assert_eq!(quotient_constant(4.0, 2.0), 1.125);
    }
}
