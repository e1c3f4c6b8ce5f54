//! Pointwise jets of Kähler potentials in K-gauge.
//!
//! The sole geometric input of this crate is the truncated Taylor expansion at
//! a point of ξ = log a + |z|², where `a` is the local weight of the Hermitian
//! metric in a normalized frame. In K-gauge (K-coordinates plus the frame
//! normalization a(0) = 1, all pure-holomorphic derivatives of `a` vanishing)
//! ξ contains only bidegrees (p, q) with p, q ≥ 2, so its lowest terms have
//! total degree 4. The metric is recovered as g_{ij̄} = δ_ij − ∂_i∂_j̄ ξ.
//!
//! This module owns the jet type, the gauge validator, the deterministic
//! random-jet generator for the identity suites, and the normalization of a
//! general real-analytic potential into K-gauge (pluriharmonic subtraction
//! plus an order-by-order holomorphic coordinate change).

pub mod curvature;
pub mod io;
pub mod taylor;

use crate::poly::{multi_indices_of_degree, MultiIndex, Poly, TruncPoly};
use crate::scalar::{rat_sqrt_exact, CRat, Rat};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JetError {
    #[error("{what}: needs series data to degree {needed}, only degree {available} available")]
    Truncation {
        what: String,
        needed: i64,
        available: i64,
    },
    #[error("dimension must be ≥ 1, got {0}")]
    InvalidDimension(usize),
    #[error("max_degree must be ≥ {min}, got {got}")]
    InvalidDegree { min: u32, got: u32 },
    #[error("series is not real-valued: coeff(I,J) ≠ conj(coeff(J,I)) somewhere")]
    NotReal,
    #[error("not in K-gauge: offending bidegrees {0:?}")]
    NotKGauge(Vec<(u32, u32)>),
    #[error("the (1,1) part of the potential is not positive definite")]
    SingularMetric,
    #[error(
        "linear normalization pivot {0} is not a perfect rational square; cannot normalize exactly"
    )]
    PivotNotSquare(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error("potential file: {0}")]
    FileFormat(String),
}

/// Truncated Taylor data of ξ = log a + |z|² at the base point, in K-gauge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PotentialJet {
    pub n: usize,
    pub max_degree: u32,
    pub xi: Poly,
}

/// Result of the K-gauge scan: either a pass or the offending bidegrees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaugeReport {
    pub pass: bool,
    pub offending: Vec<(u32, u32)>,
}

/// Scan a candidate ξ for terms forbidden in K-gauge: any bidegree (p, q)
/// with p ≤ 1 or q ≤ 1, or total degree above the stated truncation.
pub fn validate_kgauge_poly(xi: &Poly, max_degree: u32) -> GaugeReport {
    let mut offending: Vec<(u32, u32)> = Vec::new();
    for (i, j) in xi.terms.keys() {
        let (p, q) = (i.degree(), j.degree());
        let bad = p <= 1 || q <= 1 || p + q > max_degree;
        if bad && !offending.contains(&(p, q)) {
            offending.push((p, q));
        }
    }
    offending.sort_unstable();
    GaugeReport {
        pass: offending.is_empty(),
        offending,
    }
}

/// Diagnostic form of the gauge scan on a finished jet.
pub fn validate_kgauge(jet: &PotentialJet) -> GaugeReport {
    validate_kgauge_poly(&jet.xi, jet.max_degree)
}

impl PotentialJet {
    /// Construct and validate: realness, gauge, and degree bounds all hold.
    pub fn new(n: usize, max_degree: u32, xi: Poly) -> Result<Self, JetError> {
        if n == 0 {
            return Err(JetError::InvalidDimension(n));
        }
        if max_degree < 4 {
            return Err(JetError::InvalidDegree {
                min: 4,
                got: max_degree,
            });
        }
        if xi.n != n {
            return Err(JetError::InvalidDimension(xi.n));
        }
        if !xi.is_hermitian_symmetric() {
            return Err(JetError::NotReal);
        }
        let report = validate_kgauge_poly(&xi, max_degree);
        if !report.pass {
            return Err(JetError::NotKGauge(report.offending));
        }
        Ok(PotentialJet { n, max_degree, xi })
    }

    pub fn flat(n: usize, max_degree: u32) -> Self {
        PotentialJet {
            n,
            max_degree,
            xi: Poly::zero(n),
        }
    }

    /// ξ as a series known to `max_degree`.
    pub fn xi_series(&self) -> TruncPoly {
        TruncPoly::new(self.xi.clone(), self.max_degree as i64)
    }

    /// The potential φ = |z|² − ξ whose complex Hessian is the metric.
    pub fn potential(&self) -> TruncPoly {
        let mut phi = self.xi.neg();
        for i in 0..self.n {
            phi.add_term(
                MultiIndex::unit(self.n, i),
                MultiIndex::unit(self.n, i),
                CRat::one(),
            );
        }
        TruncPoly::new(phi, self.max_degree as i64)
    }
}

/// Deterministic pseudo-random K-gauge jet: every admissible bidegree pair is
/// filled with a bounded rational coefficient, Hermitian symmetry enforced by
/// construction. Identical (n, max_degree, seed, bound) yield identical jets.
pub fn random_kgauge_jet(
    n: usize,
    max_degree: u32,
    seed: u64,
    bound: u32,
) -> Result<PotentialJet, JetError> {
    if n == 0 {
        return Err(JetError::InvalidDimension(n));
    }
    if max_degree < 4 {
        return Err(JetError::InvalidDegree {
            min: 4,
            got: max_degree,
        });
    }
    let bound = bound.max(1) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Rat {
        let num = rng.gen_range(-bound..=bound);
        let den = rng.gen_range(1..=bound);
        Rat::new(num.into(), den.into())
    };
    let mut xi = Poly::zero(n);
    for p in 2..=(max_degree - 2) {
        for q in 2..=(max_degree.saturating_sub(p)) {
            if q < 2 || p + q > max_degree {
                continue;
            }
            for i in multi_indices_of_degree(n, p) {
                for j in multi_indices_of_degree(n, q) {
                    // Fill each unordered pair once; the mirror is forced.
                    if (i.clone(), j.clone()) > (j.clone(), i.clone()) {
                        continue;
                    }
                    let diagonal = i == j;
                    let re = draw(&mut rng);
                    let im = if diagonal {
                        Rat::zero()
                    } else {
                        draw(&mut rng)
                    };
                    let c = CRat::new(re, im);
                    if c.is_zero() {
                        continue;
                    }
                    xi.add_term(i.clone(), j.clone(), c.clone());
                    if !diagonal {
                        xi.add_term(j.clone(), i.clone(), c.conj());
                    }
                }
            }
        }
    }
    PotentialJet::new(n, max_degree, xi)
}

/// LDL* factorization data of the (1,1) part with the diagonal square roots,
/// used to bring g(0) to the identity exactly.
fn linear_normalization(h: &[Vec<CRat>]) -> Result<Vec<Vec<CRat>>, JetError> {
    let n = h.len();
    // Hermitian LDL*: H = L D L† with L unit lower triangular.
    let mut l = vec![vec![CRat::zero(); n]; n];
    let mut d = vec![Rat::zero(); n];
    for i in 0..n {
        l[i][i] = CRat::one();
    }
    for j in 0..n {
        let mut dj = h[j][j].expect_real("diagonal of a Hermitian matrix");
        for k in 0..j {
            dj -= l[j][k].norm_sqr() * &d[k];
        }
        if !dj.is_positive() {
            return Err(JetError::SingularMetric);
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let mut v = h[i][j].clone();
            for k in 0..j {
                let t = &l[i][k] * &l[j][k].conj();
                v = &v - &t.scale(&d[k]);
            }
            l[i][j] = v.scale(&(Rat::one() / &d[j]));
        }
    }
    // Want w = D^{1/2} L† z, i.e. z = (L†)^{-1} D^{-1/2} w. Pivot roots must
    // be exact rationals for the normalization to stay in exact arithmetic.
    let mut sqrt_d = Vec::with_capacity(n);
    for dj in &d {
        match rat_sqrt_exact(dj) {
            Some(s) => sqrt_d.push(s),
            None => return Err(JetError::PivotNotSquare(crate::scalar::rat_to_string(dj))),
        }
    }
    // Invert the unit upper-triangular L† by back substitution: U = L†,
    // solve U X = I.
    let u = |i: usize, j: usize| l[j][i].conj(); // U_{ij} = conj(L_{ji})
    let mut x = vec![vec![CRat::zero(); n]; n];
    for col in 0..n {
        for i in (0..n).rev() {
            let mut v = if i == col { CRat::one() } else { CRat::zero() };
            for k in (i + 1)..n {
                let t = &u(i, k) * &x[k][col];
                v = &v - &t;
            }
            x[i][col] = v; // U is unit diagonal
        }
    }
    // M = (L†)^{-1} D^{-1/2}: column j scaled by 1/sqrt(d_j).
    let mut m = vec![vec![CRat::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = x[i][j].scale(&(Rat::one() / &sqrt_d[j]));
        }
    }
    Ok(m)
}

/// Bring a real-analytic Kähler potential series into K-gauge.
///
/// The input is the potential φ itself (its (1,1) part carries the metric at
/// the origin; e.g. the flat model is |z|²), trusted to total degree `order`.
/// Steps: subtract the pluriharmonic (p,0)/(0,p) parts, apply the exact
/// linear change making the (1,1) part |w|², then kill the (d−1,1)/(1,d−1)
/// parts order by order with holomorphic substitutions z ← z + f(z). The
/// coordinates this fixes are unique up to an affine change; the identity
/// linear part is chosen, so degree ≥ 5 jet coefficients are representative-
/// dependent while every curvature invariant is not.
pub fn normalize_to_kgauge(series: &Poly, order: u32) -> Result<PotentialJet, JetError> {
    let n = series.n;
    if n == 0 {
        return Err(JetError::InvalidDimension(n));
    }
    if order < 4 {
        return Err(JetError::InvalidDegree { min: 4, got: order });
    }
    if !series.is_hermitian_symmetric() {
        return Err(JetError::NotReal);
    }
    let strip_pluriharmonic = |p: &Poly| -> Poly {
        let mut out = Poly::zero(n);
        for ((i, j), c) in &p.terms {
            if i.degree() == 0 || j.degree() == 0 {
                continue;
            }
            out.terms.insert((i.clone(), j.clone()), c.clone());
        }
        out
    };
    let mut phi = strip_pluriharmonic(&series.truncated(order));

    // Linear step: (1,1) part → |w|².
    let mut h = vec![vec![CRat::zero(); n]; n];
    for (a, row) in h.iter_mut().enumerate() {
        for (b, entry) in row.iter_mut().enumerate() {
            *entry = phi.coeff(&MultiIndex::unit(n, a), &MultiIndex::unit(n, b));
        }
    }
    let is_identity =
        (0..n).all(|a| (0..n).all(|b| h[a][b] == if a == b { CRat::one() } else { CRat::zero() }));
    if !is_identity {
        let m = linear_normalization(&h)?;
        let maps: Vec<Poly> = (0..n)
            .map(|i| {
                let mut p = Poly::zero(n);
                for (j, mij) in m[i].iter().enumerate() {
                    p.add_term(MultiIndex::unit(n, j), MultiIndex::zero(n), mij.clone());
                }
                p
            })
            .collect();
        phi = phi.substitute_holo(&maps, order);
    }

    // Order-by-order elimination of (d−1,1)/(1,d−1) parts. A substitution with
    // f homogeneous of degree d−1 only touches total degrees ≥ d, and at
    // degree d only through the |z|² part, so earlier orders stay clean.
    for d in 3..=order {
        phi = strip_pluriharmonic(&phi);
        let bad = phi.bidegree_part(d - 1, 1);
        if bad.is_zero() {
            continue;
        }
        let maps: Vec<Poly> = (0..n)
            .map(|i| {
                let b_i = bad.d_zbar(i); // holomorphic polynomial of degree d−1
                let mut zi = Poly::zero(n);
                zi.add_term(MultiIndex::unit(n, i), MultiIndex::zero(n), CRat::one());
                zi.sub(&b_i)
            })
            .collect();
        phi = phi.substitute_holo(&maps, order);
    }
    phi = strip_pluriharmonic(&phi);

    // Split off the flat part: ξ = |w|² − φ.
    let mut xi = phi.neg();
    for i in 0..n {
        let e = MultiIndex::unit(n, i);
        xi.add_term(e.clone(), e, CRat::one());
    }
    if !xi.bidegree_part(1, 1).is_zero() {
        return Err(JetError::Internal(
            "linear normalization failed to make the (1,1) part flat".into(),
        ));
    }
    let report = validate_kgauge_poly(&xi, order);
    if !report.pass {
        return Err(JetError::Internal(format!(
            "gauge elimination left terms at bidegrees {:?}",
            report.offending
        )));
    }
    PotentialJet::new(n, order, xi)
}

/// Shared fixtures for the unit tests of this module tree.
#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;
    use crate::scalar::rat_frac;

    /// ξ of the Fubini–Study weight at the origin: |z|² − log(1+|z|²),
    /// truncated at `degree`.
    pub(crate) fn fs_xi(n: usize, degree: u32) -> Poly {
        let mut u = Poly::zero(n);
        for i in 0..n {
            u.add_term(MultiIndex::unit(n, i), MultiIndex::unit(n, i), CRat::one());
        }
        // ξ = u − log(1+u) = Σ_{k≥2} (−1)^k u^k / k with u = |z|².
        let mut xi = Poly::zero(n);
        let mut upow = u.clone();
        for k in 2..=(degree / 2) {
            upow = upow.mul(&u);
            let sign = if k % 2 == 0 { 1 } else { -1 };
            xi = xi.add(&upow.scale(&CRat::from_rat(rat_frac(sign, k as i64))));
        }
        xi.truncated(degree)
    }

    pub(crate) fn fs_jet(n: usize, degree: u32) -> PotentialJet {
        PotentialJet::new(n, degree, fs_xi(n, degree)).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::tests_support::fs_xi;
    use super::*;
    use crate::scalar::rat_int;

    #[test]
    fn flat_jet_passes_gauge() {
        let jet = PotentialJet::flat(2, 8);
        assert!(validate_kgauge(&jet).pass);
    }

    #[test]
    fn explicit_violation_is_reported() {
        // z₁³ has bidegree (3,0): direct violation of the gauge scan. The
        // constructor rejects it (it is also not real), so scan the raw poly.
        let mut xi = Poly::zero(2);
        xi.add_term(MultiIndex(vec![3, 0]), MultiIndex::zero(2), CRat::one());
        let report = validate_kgauge_poly(&xi, 8);
        assert!(!report.pass);
        assert_eq!(report.offending, vec![(3, 0)]);
    }

    #[test]
    fn cp1_xi_is_kgauge() {
        // ξ = |z|⁴/2 − |z|⁶/3 + |z|⁸/4 from the log(1+x) series.
        let xi = fs_xi(1, 8);
        let mut expected = Poly::zero(1);
        expected.add_term(
            MultiIndex(vec![2]),
            MultiIndex(vec![2]),
            CRat::from_frac(1, 2),
        );
        expected.add_term(
            MultiIndex(vec![3]),
            MultiIndex(vec![3]),
            CRat::from_frac(-1, 3),
        );
        expected.add_term(
            MultiIndex(vec![4]),
            MultiIndex(vec![4]),
            CRat::from_frac(1, 4),
        );
        assert_eq!(xi, expected);
        let jet = PotentialJet::new(1, 8, xi).unwrap();
        assert!(validate_kgauge(&jet).pass);
    }

    #[test]
    fn random_jets_are_deterministic_real_and_gauged() {
        let a = random_kgauge_jet(2, 8, 7, 6).unwrap();
        let b = random_kgauge_jet(2, 8, 7, 6).unwrap();
        assert_eq!(a, b);
        let c = random_kgauge_jet(2, 8, 8, 6).unwrap();
        assert_ne!(a, c);
        assert!(a.xi.is_hermitian_symmetric());
        assert!(validate_kgauge(&a).pass);
        // Magnitude bound on numerators/denominators.
        for c in a.xi.terms.values() {
            for r in [&c.re, &c.im] {
                assert!(r.numer().magnitude() <= &6u32.into());
                assert!(r.denom().magnitude() <= &6u32.into());
            }
        }
    }

    #[test]
    fn random_jet_rejects_bad_arguments() {
        assert!(matches!(
            random_kgauge_jet(0, 8, 1, 4),
            Err(JetError::InvalidDimension(0))
        ));
        assert!(matches!(
            random_kgauge_jet(2, 3, 1, 4),
            Err(JetError::InvalidDegree { min: 4, got: 3 })
        ));
    }

    #[test]
    fn normalize_fixed_point() {
        // A potential already in K-gauge form comes back unchanged.
        let xi = fs_xi(2, 8);
        let jet = PotentialJet::new(2, 8, xi.clone()).unwrap();
        let normalized = normalize_to_kgauge(&jet.potential().poly, 8).unwrap();
        assert_eq!(normalized.xi, xi);
    }

    #[test]
    fn pluriharmonic_perturbation_is_pure_gauge() {
        // |z|² + Re(z₁³) normalizes to the flat jet.
        let n = 2;
        let mut phi = Poly::zero(n);
        for i in 0..n {
            phi.add_term(MultiIndex::unit(n, i), MultiIndex::unit(n, i), CRat::one());
        }
        phi.add_term(
            MultiIndex(vec![3, 0]),
            MultiIndex::zero(n),
            CRat::from_frac(1, 2),
        );
        phi.add_term(
            MultiIndex::zero(n),
            MultiIndex(vec![3, 0]),
            CRat::from_frac(1, 2),
        );
        let jet = normalize_to_kgauge(&phi, 8).unwrap();
        assert!(jet.xi.is_zero());
    }

    #[test]
    fn normalize_rejects_degenerate_and_complex_inputs() {
        let n = 1;
        // No (1,1) part at all → singular metric.
        let mut phi = Poly::zero(n);
        phi.add_term(MultiIndex(vec![2]), MultiIndex(vec![2]), CRat::one());
        assert!(matches!(
            normalize_to_kgauge(&phi, 4),
            Err(JetError::SingularMetric)
        ));
        // Negative definite.
        let mut phi = Poly::zero(n);
        phi.add_term(MultiIndex(vec![1]), MultiIndex(vec![1]), CRat::from_int(-1));
        assert!(matches!(
            normalize_to_kgauge(&phi, 4),
            Err(JetError::SingularMetric)
        ));
        // Non-real input.
        let mut phi = Poly::zero(n);
        phi.add_term(MultiIndex(vec![1]), MultiIndex(vec![1]), CRat::one());
        phi.add_term(
            MultiIndex(vec![2]),
            MultiIndex(vec![1]),
            CRat::new(rat_int(0), rat_int(1)),
        );
        assert!(matches!(
            normalize_to_kgauge(&phi, 4),
            Err(JetError::NotReal)
        ));
        // Non-square pivot: (1,1) part 2|z|² has no exact normalizer.
        let mut phi = Poly::zero(n);
        phi.add_term(MultiIndex(vec![1]), MultiIndex(vec![1]), CRat::from_int(2));
        phi.add_term(MultiIndex(vec![2]), MultiIndex(vec![2]), CRat::one());
        assert!(matches!(
            normalize_to_kgauge(&phi, 4),
            Err(JetError::PivotNotSquare(_))
        ));
    }

    #[test]
    fn normalize_applies_exact_linear_change() {
        // φ = 4|z|² + |z|⁴: w = 2z brings it to |w|² + |w|⁴/16.
        let n = 1;
        let mut phi = Poly::zero(n);
        phi.add_term(MultiIndex(vec![1]), MultiIndex(vec![1]), CRat::from_int(4));
        phi.add_term(MultiIndex(vec![2]), MultiIndex(vec![2]), CRat::one());
        let jet = normalize_to_kgauge(&phi, 8).unwrap();
        let mut expected = Poly::zero(n);
        expected.add_term(
            MultiIndex(vec![2]),
            MultiIndex(vec![2]),
            CRat::from_frac(-1, 16),
        );
        assert_eq!(jet.xi, expected);
    }
}
