//! Exact Gaussian moment calculus on ℂⁿ, the K and L functionals, truncated
//! asymptotic series in 1/m, and the Schur-complement block inverse.
//!
//! The normalization is dV₀ = (i/2π)ⁿ dz∧dz̄, so that
//!
//!   ∫ |z^P|² |z|^{2q} e^{-m|z|²} dV₀ = (n+p+q-1)! P! / ((p+n-1)! m^{n+p+q}),
//!
//! and in particular K(1) = ∫ e^{-m|z|²} dV₀ = 1/mⁿ. Integrals of `z^I z̄^J`
//! vanish unless I = J componentwise. Everything here is exact rational.

use crate::poly::{MultiIndex, Poly};
use crate::scalar::{factorial, CRat, ConjField, Rat};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MomentError {
    #[error("multi-index length mismatch: |P|-len {p}, |Q|-len {q}, n = {n}")]
    LengthMismatch { p: usize, q: usize, n: usize },
    #[error(
        "L functional requires a homogeneous balanced (p,p) polynomial; found bidegree ({0}, {1})"
    )]
    Unbalanced(u32, u32),
    #[error("series reciprocal/power requires a nonzero leading coefficient")]
    ZeroLeadingCoefficient,
    #[error("series truncation too shallow: requested coefficient {requested} of a series with {available} known")]
    SeriesTruncation { requested: usize, available: usize },
    #[error("incompatible power grids (half-integer vs integer) in series addition")]
    GridMismatch,
    #[error("singular pivot block in matrix inversion")]
    SingularPivot,
}

// ---------------------------------------------------------------------------
// Asymptotic series in 1/m
// ---------------------------------------------------------------------------

/// Order sentinel for series known exactly at every depth.
pub const EXACT_ORDER: usize = usize::MAX >> 1;

/// A finite expansion Σ_k c_k m^{-(ν+k)} + O(m^{-(ν+order)}).
///
/// ν may be a half-integer and is stored doubled (`nu_x2`). Coefficients step
/// by whole powers of 1/m. `weight_offset_x2` is the index bookkeeping of the
/// coefficients: when present, coefficient k is certified to carry curvature
/// weight k + offset, so every term of the series has index offset − ν.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AsymptoticSeries {
    pub nu_x2: i64,
    pub coeffs: Vec<CRat>,
    pub order: usize,
    pub weight_offset_x2: Option<i64>,
}

impl AsymptoticSeries {
    pub fn zero() -> Self {
        AsymptoticSeries {
            nu_x2: 0,
            coeffs: vec![],
            order: EXACT_ORDER,
            weight_offset_x2: None,
        }
    }

    /// A single exact term c·m^{-ν}.
    pub fn single_term(nu_x2: i64, c: CRat) -> Self {
        AsymptoticSeries {
            nu_x2,
            coeffs: vec![c],
            order: EXACT_ORDER,
            weight_offset_x2: None,
        }
    }

    pub fn constant_one() -> Self {
        AsymptoticSeries {
            nu_x2: 0,
            coeffs: vec![CRat::one()],
            order: EXACT_ORDER,
            weight_offset_x2: Some(0),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn cutoff_x2(&self) -> i64 {
        if self.order == EXACT_ORDER {
            i64::MAX / 4
        } else {
            self.nu_x2 + 2 * self.order as i64
        }
    }

    /// Coefficient at index k (i.e. of m^{-(ν+k)}).
    pub fn coeff(&self, k: usize) -> Result<CRat, MomentError> {
        if k >= self.order {
            return Err(MomentError::SeriesTruncation {
                requested: k,
                available: self.order,
            });
        }
        Ok(self.coeffs.get(k).cloned().unwrap_or_else(CRat::zero))
    }

    /// Coefficient of the absolute power m^{-p} with p = power_x2/2.
    pub fn coeff_at_power_x2(&self, power_x2: i64) -> Result<CRat, MomentError> {
        let d = power_x2 - self.nu_x2;
        if d < 0 {
            return Ok(CRat::zero());
        }
        if d % 2 != 0 {
            // Off-grid powers are identically zero within the known range.
            return if power_x2 < self.cutoff_x2() {
                Ok(CRat::zero())
            } else {
                Err(MomentError::SeriesTruncation {
                    requested: 0,
                    available: 0,
                })
            };
        }
        self.coeff((d / 2) as usize)
    }

    /// The common index of every term, doubled, when weight tags are being
    /// tracked: a series with w(c_k) = k + offset has every term of index
    /// offset − ν. Regular series have index 0.
    pub fn index_x2(&self) -> Option<i64> {
        self.weight_offset_x2.map(|o| o - self.nu_x2)
    }

    /// First nonzero coefficient as (index, value).
    pub fn leading(&self) -> Option<(usize, CRat)> {
        self.coeffs
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_zero())
            .map(|(k, c)| (k, c.clone()))
    }

    fn set_coeff(&mut self, k: usize, c: CRat) {
        if self.coeffs.len() <= k {
            self.coeffs.resize(k + 1, CRat::zero());
        }
        self.coeffs[k] = c;
    }

    pub fn add(&self, other: &AsymptoticSeries) -> Result<AsymptoticSeries, MomentError> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if (self.nu_x2 - other.nu_x2) % 2 != 0 {
            return Err(MomentError::GridMismatch);
        }
        let nu_x2 = self.nu_x2.min(other.nu_x2);
        let cut = self.cutoff_x2().min(other.cutoff_x2());
        let order = if cut >= i64::MAX / 8 {
            EXACT_ORDER
        } else {
            ((cut - nu_x2) / 2).max(0) as usize
        };
        let weight_offset_x2 = match (self.weight_offset_x2, other.weight_offset_x2) {
            (Some(a), Some(b)) => {
                // Offsets are relative to each series' own ν; on a merged grid
                // they agree only if the absolute tags match.
                if a + self.nu_x2 == b + other.nu_x2 {
                    Some(a + self.nu_x2 - nu_x2)
                } else {
                    None
                }
            }
            _ => None,
        };
        let mut out = AsymptoticSeries {
            nu_x2,
            coeffs: vec![],
            order,
            weight_offset_x2,
        };
        let n_terms = |s: &AsymptoticSeries| s.coeffs.len();
        for (s, len) in [(self, n_terms(self)), (other, n_terms(other))] {
            let shift = ((s.nu_x2 - nu_x2) / 2) as usize;
            for k in 0..len {
                let idx = k + shift;
                if out.order != EXACT_ORDER && idx >= out.order {
                    break;
                }
                let cur = out.coeffs.get(idx).cloned().unwrap_or_else(CRat::zero);
                out.set_coeff(idx, &cur + &s.coeffs[k]);
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> AsymptoticSeries {
        AsymptoticSeries {
            nu_x2: self.nu_x2,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            order: self.order,
            weight_offset_x2: self.weight_offset_x2,
        }
    }

    pub fn sub(&self, other: &AsymptoticSeries) -> Result<AsymptoticSeries, MomentError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &CRat) -> AsymptoticSeries {
        AsymptoticSeries {
            nu_x2: self.nu_x2,
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
            order: self.order,
            weight_offset_x2: self.weight_offset_x2,
        }
    }

    /// Multiply by m^{+s} with s = shift_x2/2 (lowers ν).
    pub fn shift_power_x2(&self, shift_x2: i64) -> AsymptoticSeries {
        AsymptoticSeries {
            nu_x2: self.nu_x2 - shift_x2,
            coeffs: self.coeffs.clone(),
            order: self.order,
            weight_offset_x2: self.weight_offset_x2,
        }
    }

    pub fn mul(&self, other: &AsymptoticSeries) -> AsymptoticSeries {
        if self.is_zero() || other.is_zero() {
            return AsymptoticSeries::zero();
        }
        let order = self.order.min(other.order);
        let nu_x2 = self.nu_x2 + other.nu_x2;
        let weight_offset_x2 = match (self.weight_offset_x2, other.weight_offset_x2) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        let len = if order == EXACT_ORDER {
            self.coeffs.len() + other.coeffs.len()
        } else {
            order.min(self.coeffs.len() + other.coeffs.len())
        };
        let mut coeffs = vec![CRat::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let k = i + j;
                if k >= len {
                    break;
                }
                coeffs[k] += &(a * b);
            }
        }
        AsymptoticSeries {
            nu_x2,
            coeffs,
            order,
            weight_offset_x2,
        }
    }

    pub fn conj(&self) -> AsymptoticSeries {
        AsymptoticSeries {
            nu_x2: self.nu_x2,
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
            order: self.order,
            weight_offset_x2: self.weight_offset_x2,
        }
    }

    /// Reciprocal of a series with nonzero leading coefficient; the result has
    /// leading power −ν and the same truncation depth.
    pub fn reciprocal(&self) -> Result<AsymptoticSeries, MomentError> {
        let c0 = self.coeffs.first().cloned().unwrap_or_else(CRat::zero);
        if c0.is_zero() {
            return Err(MomentError::ZeroLeadingCoefficient);
        }
        let order = self.order;
        let len = if order == EXACT_ORDER {
            self.coeffs.len().max(1)
        } else {
            order
        };
        let inv0 = c0.inv();
        let mut d = vec![CRat::zero(); len];
        d[0] = inv0.clone();
        for k in 1..len {
            // c0·d_k + Σ_{j=1..k} c_j d_{k-j} = 0
            let mut acc = CRat::zero();
            for j in 1..=k.min(self.coeffs.len().saturating_sub(1)) {
                acc += &(&self.coeffs[j] * &d[k - j]);
            }
            d[k] = -&(&acc * &inv0);
        }
        let weight_offset_x2 = match self.weight_offset_x2 {
            Some(0) => Some(0),
            _ => None,
        };
        Ok(AsymptoticSeries {
            nu_x2: -self.nu_x2,
            coeffs: d,
            order,
            weight_offset_x2,
        })
    }

    /// (series)^α by the binomial expansion, for a series of the form
    /// 1 + u with u = O(1/m) and ν = 0. α is an arbitrary rational.
    pub fn pow_rational(&self, alpha: &Rat) -> Result<AsymptoticSeries, MomentError> {
        if self.nu_x2 != 0
            || self
                .coeffs
                .first()
                .map(|c| c != &CRat::one())
                .unwrap_or(true)
        {
            return Err(MomentError::ZeroLeadingCoefficient);
        }
        let order = self.order;
        let len = if order == EXACT_ORDER {
            self.coeffs.len().max(1)
        } else {
            order
        };
        let mut u = self.clone();
        u.coeffs[0] = CRat::zero();
        let mut out = AsymptoticSeries {
            nu_x2: 0,
            coeffs: vec![CRat::one()],
            order,
            weight_offset_x2: None,
        };
        let mut upow = AsymptoticSeries {
            nu_x2: 0,
            coeffs: vec![CRat::one()],
            order,
            weight_offset_x2: None,
        };
        let mut binom = Rat::one();
        for k in 1..len {
            // binom = C(α, k)
            let kk = Rat::from_integer(BigInt::from(k as i64));
            binom = binom * (alpha - &(kk.clone() - Rat::one())) / kk;
            upow = upow.mul(&u);
            if upow.is_zero() {
                break;
            }
            out = out.add(&upow.scale(&CRat::from_rat(binom.clone())))?;
        }
        Ok(out)
    }

    /// Render as "c0/m^a + c1/m^(a+1) + ..." for reports.
    pub fn display(&self) -> String {
        let mut parts = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let p_x2 = self.nu_x2 + 2 * k as i64;
            let power = if p_x2 % 2 == 0 {
                format!("{}", p_x2 / 2)
            } else {
                format!("{}/2", p_x2)
            };
            let cs = if c.is_real() {
                crate::scalar::rat_to_string(&c.re)
            } else {
                format!("({:?})", c)
            };
            parts.push(if p_x2 == 0 {
                cs
            } else {
                format!("{cs} / m^{power}")
            });
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

// ---------------------------------------------------------------------------
// Gaussian monomial moments
// ---------------------------------------------------------------------------

/// ∫ z^P z̄^Q |z|^{2q} e^{-m|z|²} dV₀ as a one-term series: zero unless
/// P = Q, in which case the value is (n+p+q-1)!·P! / ((p+n-1)!·m^{n+p+q}).
pub fn monomial_moment(
    p: &MultiIndex,
    q_idx: &MultiIndex,
    q: u32,
    n: usize,
) -> Result<AsymptoticSeries, MomentError> {
    if p.len() != n || q_idx.len() != n {
        return Err(MomentError::LengthMismatch {
            p: p.len(),
            q: q_idx.len(),
            n,
        });
    }
    if p != q_idx {
        return Ok(AsymptoticSeries::zero());
    }
    let pdeg = p.degree() as u64;
    let num = BigRational::from_integer(BigInt::from(factorial(n as u64 + pdeg + q as u64 - 1)))
        * p.factorial();
    let den = BigRational::from_integer(BigInt::from(factorial(pdeg + n as u64 - 1)));
    let power = n as i64 + pdeg as i64 + q as i64;
    Ok(AsymptoticSeries::single_term(
        2 * power,
        CRat::from_rat(num / den),
    ))
}

// ---------------------------------------------------------------------------
// m-graded polynomials and the K functional
// ---------------------------------------------------------------------------

/// A polynomial in (z, z̄) whose terms carry a power of m and a curvature
/// weight tag: Σ c · m^μ · z^I z̄^J with w(c) recorded alongside.
///
/// μ and w are stored doubled so half-integers stay exact. The quantity
/// t − 2μ (t = |I|+|J|) decides which terms can still contribute at a given
/// expansion depth; multiplication takes a threshold and discards beyond it.
#[derive(Clone, Debug)]
pub struct GradedPoly {
    pub n: usize,
    pub terms: BTreeMap<(MultiIndex, MultiIndex, i64), (CRat, i64)>,
}

impl GradedPoly {
    pub fn new(n: usize) -> Self {
        GradedPoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(n: usize) -> Self {
        let mut g = GradedPoly::new(n);
        g.add_term(MultiIndex::zero(n), MultiIndex::zero(n), 0, CRat::one(), 0);
        g
    }

    pub fn add_term(&mut self, i: MultiIndex, j: MultiIndex, mu_x2: i64, c: CRat, weight_x2: i64) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry((i, j, mu_x2)) {
            Entry::Vacant(e) => {
                e.insert((c, weight_x2));
            }
            Entry::Occupied(mut e) => {
                let (acc, w) = e.get_mut();
                assert_eq!(
                    *w, weight_x2,
                    "weight bookkeeping collision on a graded term"
                );
                *acc += &c;
                if acc.is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Effective depth t − 2μ of a term key, in x1 units (μ integer or half).
    fn depth_x2(key: &(MultiIndex, MultiIndex, i64)) -> i64 {
        2 * (key.0.degree() + key.1.degree()) as i64 - 2 * key.2
    }

    /// Discard terms with t − 2μ > threshold.
    pub fn truncate_depth(&self, threshold: i64) -> GradedPoly {
        let mut out = GradedPoly::new(self.n);
        for (k, v) in &self.terms {
            if Self::depth_x2(k) <= 2 * threshold {
                out.terms.insert(k.clone(), v.clone());
            }
        }
        out
    }

    pub fn mul(&self, other: &GradedPoly, threshold: i64) -> GradedPoly {
        let mut out = GradedPoly::new(self.n);
        for ((i1, j1, m1), (c1, w1)) in &self.terms {
            let d1 = Self::depth_x2(&(i1.clone(), j1.clone(), *m1));
            for ((i2, j2, m2), (c2, w2)) in &other.terms {
                let d2 = 2 * (i2.degree() + j2.degree()) as i64 - 2 * m2;
                if d1 + d2 > 2 * threshold {
                    continue;
                }
                out.add_term(i1.add(i2), j1.add(j2), m1 + m2, c1 * c2, w1 + w2);
            }
        }
        out
    }

    pub fn scale(&self, c: &CRat) -> GradedPoly {
        let mut out = GradedPoly::new(self.n);
        if c.is_zero() {
            return out;
        }
        for (k, (v, w)) in &self.terms {
            out.terms.insert(k.clone(), (v * c, *w));
        }
        out
    }

    pub fn add(&self, other: &GradedPoly) -> GradedPoly {
        let mut out = self.clone();
        for ((i, j, m), (c, w)) in &other.terms {
            out.add_term(i.clone(), j.clone(), *m, c.clone(), *w);
        }
        out
    }

    /// Every term has index μ + w − (p+q)/2 equal to zero.
    pub fn is_regular(&self) -> bool {
        self.terms
            .iter()
            .all(|((i, j, mu_x2), (_, w_x2))| mu_x2 + w_x2 - (i.degree() + j.degree()) as i64 == 0)
    }
}

/// K(z^P z̄^Q · g) = ∫ z^P z̄^Q g e^{-m|z|²} dV₀ applied term by term.
///
/// Only terms with P+I = Q+J survive; each contributes (P+I)!·m^{μ-n-|P+I|}.
/// The returned series carries the weight tags accumulated per power; a
/// mismatch between a term's weight and the slot it lands in (which would
/// break Lemma-level regularity) is a bookkeeping bug and panics.
pub fn k_functional_weighted(
    p: &MultiIndex,
    q: &MultiIndex,
    g: &GradedPoly,
    n: usize,
) -> Result<AsymptoticSeries, MomentError> {
    if p.len() != n || q.len() != n {
        return Err(MomentError::LengthMismatch {
            p: p.len(),
            q: q.len(),
            n,
        });
    }
    let pq_x2 = (p.degree() + q.degree()) as i64;
    let mut by_power: BTreeMap<i64, CRat> = BTreeMap::new();
    for ((i, j, mu_x2), (c, w_x2)) in &g.terms {
        let pi = p.add(i);
        let qj = q.add(j);
        if pi != qj {
            continue;
        }
        // Absolute power of 1/m (doubled): n + |P+I| − μ.
        let power_x2 = 2 * (n as i64 + pi.degree() as i64) - mu_x2;
        // Index bookkeeping: the coefficient landing at m^{-(n+s)} must have
        // weight s − (p+q)/2.
        assert_eq!(
            *w_x2,
            power_x2 - 2 * n as i64 - pq_x2,
            "graded term landed at a power inconsistent with its weight tag"
        );
        let val = c.scale(&pi.factorial());
        by_power
            .entry(power_x2)
            .and_modify(|acc| *acc += &val)
            .or_insert(val);
    }
    if by_power.is_empty() {
        return Ok(AsymptoticSeries::zero());
    }
    let nu_x2 = *by_power.keys().next().unwrap();
    let max_x2 = *by_power.keys().last().unwrap();
    let len = ((max_x2 - nu_x2) / 2 + 1) as usize;
    let mut coeffs = vec![CRat::zero(); len];
    for (pw, c) in by_power {
        coeffs[((pw - nu_x2) / 2) as usize] = c;
    }
    Ok(AsymptoticSeries {
        nu_x2,
        coeffs,
        order: EXACT_ORDER,
        weight_offset_x2: Some(nu_x2 - 2 * n as i64 - pq_x2),
    })
}

/// K of an ungraded polynomial (all μ = 0, no weight tags).
pub fn k_functional(poly: &Poly, n: usize) -> AsymptoticSeries {
    let mut by_power: BTreeMap<i64, CRat> = BTreeMap::new();
    for ((i, j), c) in &poly.terms {
        if i != j {
            continue;
        }
        let power_x2 = 2 * (n as i64 + i.degree() as i64);
        let val = c.scale(&i.factorial());
        by_power
            .entry(power_x2)
            .and_modify(|acc| *acc += &val)
            .or_insert(val);
    }
    if by_power.is_empty() {
        return AsymptoticSeries::zero();
    }
    let nu_x2 = *by_power.keys().next().unwrap();
    let max_x2 = *by_power.keys().last().unwrap();
    let len = ((max_x2 - nu_x2) / 2 + 1) as usize;
    let mut coeffs = vec![CRat::zero(); len];
    for (pw, c) in by_power {
        coeffs[((pw - nu_x2) / 2) as usize] = c;
    }
    AsymptoticSeries {
        nu_x2,
        coeffs,
        order: EXACT_ORDER,
        weight_offset_x2: None,
    }
}

// ---------------------------------------------------------------------------
// The L functional
// ---------------------------------------------------------------------------

/// All permutations of {0, .., p-1}.
pub fn permutations(p: usize) -> Vec<Vec<usize>> {
    if p == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..p).collect();
    fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, items, out);
            if k % 2 == 0 {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    heap(p, &mut items, &mut out);
    out
}

/// L(A) = (1/p!) Σ_I Σ_{σ∈S_p} A_{I, σ(I)} for a homogeneous balanced (p,p)
/// polynomial, where A is the symmetric tuple-coefficient representative of
/// the stored multi-index coefficients: A_{I,J} = c_{P(I),Q(J)}·P!Q!/(p!)².
///
/// Evaluated by direct enumeration over index tuples and permutations with
/// zero-coefficient pruning. The identity L(A) = m^{n+p} K(A)/p! ties this to
/// the moment route and is enforced in tests.
pub fn l_functional(poly: &Poly) -> Result<CRat, MomentError> {
    if poly.is_zero() {
        return Ok(CRat::zero());
    }
    let n = poly.n;
    let mut deg: Option<(u32, u32)> = None;
    for (i, j) in poly.terms.keys() {
        let d = (i.degree(), j.degree());
        match deg {
            None => deg = Some(d),
            Some(prev) if prev == d => {}
            Some(prev) => {
                return Err(MomentError::Unbalanced(prev.0.max(d.0), prev.1.max(d.1)));
            }
        }
    }
    let (p, q) = deg.unwrap();
    if p != q {
        return Err(MomentError::Unbalanced(p, q));
    }
    let p = p as usize;
    if p == 0 {
        return Ok(poly.constant_term());
    }
    let perms = permutations(p);
    let pfact = factorial(p as u64);
    let pfact_sq = BigRational::from_integer(BigInt::from(&pfact * &pfact));
    let mut total = CRat::zero();
    let mut tuple = vec![0usize; p];
    loop {
        let pi = MultiIndex::from_tuple(n, &tuple);
        // Pruning: permutations of a tuple share its multi-index, so the whole
        // σ-loop touches the diagonal block of P(I) only.
        if poly.terms.contains_key(&(pi.clone(), pi.clone())) {
            let pi_fact = pi.factorial();
            for sigma in &perms {
                let permuted: Vec<usize> = sigma.iter().map(|&s| tuple[s]).collect();
                let qj = MultiIndex::from_tuple(n, &permuted);
                let c = poly.coeff(&pi, &qj);
                if c.is_zero() {
                    continue;
                }
                let weight = &pi_fact * &qj.factorial() / &pfact_sq;
                total += &c.scale(&weight);
            }
        }
        // Next tuple in odometer order.
        let mut pos = 0;
        loop {
            if pos == p {
                let extra = total.scale(&Rat::new(BigInt::one(), BigInt::from(pfact)));
                return Ok(extra);
            }
            tuple[pos] += 1;
            if tuple[pos] < n {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}

/// Cross-check route: L(A) = m^{n+p}·K(A)/p! (Corollary-level identity).
pub fn l_via_k(poly: &Poly) -> Result<CRat, MomentError> {
    if poly.is_zero() {
        return Ok(CRat::zero());
    }
    let n = poly.n;
    let mut bidegree: Option<u32> = None;
    for (i, j) in poly.terms.keys() {
        if i.degree() != j.degree() {
            return Err(MomentError::Unbalanced(i.degree(), j.degree()));
        }
        match bidegree {
            None => bidegree = Some(i.degree()),
            Some(p) if p == i.degree() => {}
            Some(p) => return Err(MomentError::Unbalanced(p, i.degree())),
        }
    }
    let p = bidegree.unwrap();
    let series = k_functional(poly, n);
    let c = series.coeff_at_power_x2(2 * (n as u32 + p) as i64)?;
    Ok(c.scale(&(Rat::one() / crate::scalar::factorial_rat(p as u64))))
}

// ---------------------------------------------------------------------------
// Dense matrices and the Schur block inverse
// ---------------------------------------------------------------------------

/// Minimal dense matrix over an exact or floating scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<F>,
}

impl<F: ConjField> Matrix<F> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = F::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> F) -> Self {
        let mut m = Self::zero(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                *m.at_mut(i, j) = f(i, j);
            }
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut F {
        &mut self.data[i * self.cols + j]
    }

    pub fn mul(&self, other: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.cols, other.rows);
        let mut out: Matrix<F> = Matrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = a.mul(other.at(k, j));
                    *out.at_mut(i, j) = out.at(i, j).add(&v);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Matrix<F>) -> Matrix<F> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = a.sub(b);
        }
        out
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix<F> {
        Matrix::from_fn(rows, cols, |i, j| self.at(r0 + i, c0 + j).clone())
    }

    pub fn conj_transpose(&self) -> Matrix<F> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn is_hermitian(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self.at(i, j).sub(&self.at(j, i).conj()).is_zero() {
                    // Floating entries compare exactly; Hermitian inputs here
                    // are constructed symmetrically so this is still an
                    // identity check, not a tolerance check.
                    return false;
                }
            }
        }
        true
    }

    /// Gauss–Jordan inverse (first-nonzero pivoting; exact fields need no
    /// magnitude pivoting and the float use sites are small well-conditioned
    /// Hermitian matrices).
    pub fn inverse(&self) -> Result<Matrix<F>, MomentError> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv: Matrix<F> = Matrix::identity(n);
        for col in 0..n {
            let pivot_row = (col..n)
                .find(|&r| !a.at(r, col).is_zero())
                .ok_or(MomentError::SingularPivot)?;
            if pivot_row != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot_row * n + j);
                    inv.data.swap(col * n + j, pivot_row * n + j);
                }
            }
            let piv = a.at(col, col).clone();
            for j in 0..n {
                *a.at_mut(col, j) = a.at(col, j).div(&piv);
                *inv.at_mut(col, j) = inv.at(col, j).div(&piv);
            }
            for r in 0..n {
                if r == col || a.at(r, col).is_zero() {
                    continue;
                }
                let f = a.at(r, col).clone();
                for j in 0..n {
                    let av = a.at(col, j).mul(&f);
                    *a.at_mut(r, j) = a.at(r, j).sub(&av);
                    let iv = inv.at(col, j).mul(&f);
                    *inv.at_mut(r, j) = inv.at(r, j).sub(&iv);
                }
            }
        }
        Ok(inv)
    }
}

/// Top-left block of the inverse of a Hermitian positive block matrix,
/// partitioned after `split` rows:
///
///   N₁₁ = M₁₁⁻¹ + M₁₁⁻¹ M₁₂ (M₂₂ − M₂₁ M₁₁⁻¹ M₁₂)⁻¹ M₂₁ M₁₁⁻¹.
pub fn schur_top_left<F: ConjField>(m: &Matrix<F>, split: usize) -> Result<Matrix<F>, MomentError> {
    assert_eq!(m.rows, m.cols);
    assert!(
        split > 0 && split < m.rows,
        "split must leave two nonempty blocks"
    );
    let n = m.rows;
    let m11 = m.block(0, 0, split, split);
    let m12 = m.block(0, split, split, n - split);
    let m21 = m.block(split, 0, n - split, split);
    let m22 = m.block(split, split, n - split, n - split);
    let m11_inv = m11.inverse()?;
    let schur = m22.sub(&m21.mul(&m11_inv).mul(&m12));
    let schur_inv = schur.inverse()?;
    let correction = m11_inv.mul(&m12).mul(&schur_inv).mul(&m21).mul(&m11_inv);
    let mut out = m11_inv;
    for (a, b) in out.data.iter_mut().zip(&correction.data) {
        *a = a.add(b);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat_frac, rat_int};
    use num_traits::Zero;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    /// Independent oracle: iterated 1-D radial Gamma integrals. Expanding
    /// |z|^{2q} multinomially reduces the moment to a product of one-variable
    /// integrals ∫|z_i|^{2a} e^{-m|z_i|²} dV₀ = a!/m^{a+1}.
    fn brute_moment(p: &MultiIndex, q: u32, n: usize) -> (Rat, i64) {
        // Enumerate the multinomial expansion of |z|^{2q} over k with |k| = q.
        let mut total = Rat::zero();
        let ks = crate::poly::multi_indices_of_degree(n, q);
        let qfact = crate::scalar::factorial_rat(q as u64);
        for k in ks {
            // multinomial q!/k!
            let mult = &qfact / k.factorial();
            let mut prod = Rat::one();
            for i in 0..n {
                let a = (p.0[i] + k.0[i]) as u64;
                prod *= crate::scalar::factorial_rat(a);
            }
            total += mult * prod;
        }
        (total, (n as u32 + p.degree() + q) as i64)
    }

    #[test]
    fn moment_matches_paper_examples() {
        // Normalized Gaussian.
        let s = monomial_moment(&mi(&[0, 0]), &mi(&[0, 0]), 0, 2).unwrap();
        assert_eq!(s.nu_x2, 4);
        assert_eq!(s.coeffs[0], CRat::one());
        // P!/m^{n+p}.
        let s = monomial_moment(&mi(&[1, 0]), &mi(&[1, 0]), 0, 2).unwrap();
        assert_eq!(s.nu_x2, 6);
        assert_eq!(s.coeffs[0], CRat::one());
        // 6!·2!·1!/(4!·m⁷) = 60/m⁷.
        let s = monomial_moment(&mi(&[2, 1]), &mi(&[2, 1]), 2, 2).unwrap();
        assert_eq!(s.nu_x2, 14);
        assert_eq!(s.coeffs[0], CRat::from_int(60));
        // Distinct exponents integrate to zero.
        let s = monomial_moment(&mi(&[1, 0]), &mi(&[0, 1]), 0, 2).unwrap();
        assert!(s.is_zero());
    }

    #[test]
    fn moment_matches_radial_gamma_oracle() {
        for n in 1..=3usize {
            for pp in 0..=4u32 {
                for p in crate::poly::multi_indices_of_degree(n, pp) {
                    for q in 0..=3u32 {
                        let s = monomial_moment(&p, &p, q, n).unwrap();
                        let (oracle, power) = brute_moment(&p, q, n);
                        assert_eq!(s.nu_x2, 2 * power, "power mismatch at {:?} q={}", p, q);
                        assert_eq!(s.coeffs[0].expect_real("moment"), oracle);
                    }
                }
            }
        }
    }

    #[test]
    fn k_functional_basics() {
        // K(|z|²) = n/m^{n+1}: |z|² = Σ z_i z̄_i.
        for n in 1..=3usize {
            let mut p = Poly::zero(n);
            for i in 0..n {
                p.add_term(MultiIndex::unit(n, i), MultiIndex::unit(n, i), CRat::one());
            }
            let s = k_functional(&p, n);
            assert_eq!(s.nu_x2, 2 * (n as i64 + 1));
            assert_eq!(s.coeffs[0], CRat::from_int(n as i64));
        }
        // Unbalanced terms are annihilated.
        let mut p = Poly::zero(2);
        p.add_term(mi(&[2, 1]), mi(&[1, 1]), CRat::one());
        assert!(k_functional(&p, 2).is_zero());
    }

    #[test]
    fn l_functional_examples() {
        // L(c) = c at p = 0.
        let c = Poly::constant(2, CRat::from_frac(7, 3));
        assert_eq!(l_functional(&c).unwrap(), CRat::from_frac(7, 3));
        // L(|z|⁴) = n(n+1)/2.
        for n in 1..=3usize {
            let mut zsq = Poly::zero(n);
            for i in 0..n {
                zsq.add_term(MultiIndex::unit(n, i), MultiIndex::unit(n, i), CRat::one());
            }
            let z4 = zsq.mul(&zsq);
            let l = l_functional(&z4).unwrap().expect_real("L");
            assert_eq!(l, rat_frac((n * (n + 1)) as i64, 2));
            // Cross-route agreement.
            assert_eq!(l_functional(&z4).unwrap(), l_via_k(&z4).unwrap());
        }
        // Unbalanced input is rejected.
        let mut bad = Poly::zero(2);
        bad.add_term(mi(&[2, 0]), mi(&[1, 0]), CRat::one());
        assert!(matches!(
            l_functional(&bad),
            Err(MomentError::Unbalanced(..))
        ));
    }

    #[test]
    fn series_reciprocal_is_inverse() {
        // s = m⁻¹(1 - 1/m + 1/m² - 1/m³): s·s⁻¹ = 1 on retained coefficients.
        let s = AsymptoticSeries {
            nu_x2: 2,
            coeffs: vec![
                CRat::from_int(1),
                CRat::from_int(-1),
                CRat::from_int(1),
                CRat::from_int(-1),
            ],
            order: 4,
            weight_offset_x2: Some(0),
        };
        let inv = s.reciprocal().unwrap();
        assert_eq!(inv.nu_x2, -2);
        let prod = s.mul(&inv);
        assert_eq!(prod.coeff(0).unwrap(), CRat::one());
        for k in 1..4 {
            assert!(prod.coeff(k).unwrap().is_zero(), "k={k}");
        }
        // 1/(1 - x + x² - x³) = 1 + x + O(x⁴).
        assert_eq!(inv.coeffs[1], CRat::one());
        assert!(inv.coeffs[2].is_zero());
        assert!(inv.coeffs[3].is_zero());
    }

    #[test]
    fn series_binomial_sqrt() {
        // (1+u)^{-1/2} squared times (1+u) = 1.
        let s = AsymptoticSeries {
            nu_x2: 0,
            coeffs: vec![CRat::one(), CRat::from_frac(3, 7), CRat::from_int(-2)],
            order: 5,
            weight_offset_x2: None,
        };
        let r = s.pow_rational(&rat_frac(-1, 2)).unwrap();
        let prod = r.mul(&r).mul(&s);
        assert_eq!(prod.coeff(0).unwrap(), CRat::one());
        for k in 1..5 {
            assert!(prod.coeff(k).unwrap().is_zero(), "k={k}");
        }
    }

    #[test]
    fn series_truncation_errors() {
        let s = AsymptoticSeries {
            nu_x2: 0,
            coeffs: vec![CRat::one()],
            order: 1,
            weight_offset_x2: None,
        };
        assert!(s.coeff(0).is_ok());
        assert!(matches!(
            s.coeff(1),
            Err(MomentError::SeriesTruncation { .. })
        ));
        let z = AsymptoticSeries {
            nu_x2: 0,
            coeffs: vec![CRat::zero()],
            order: 1,
            weight_offset_x2: None,
        };
        assert!(z.reciprocal().is_err());
    }

    #[test]
    fn schur_examples() {
        // Identity.
        let id: Matrix<CRat> = Matrix::identity(3);
        let n11 = schur_top_left(&id, 1).unwrap();
        assert_eq!(n11, Matrix::identity(1));
        // [[2,1],[1,1]] has inverse [[1,-1],[-1,2]].
        let m = Matrix::from_fn(2, 2, |i, j| {
            CRat::from_int(match (i, j) {
                (0, 0) => 2,
                _ => 1,
            })
        });
        let n11 = schur_top_left(&m, 1).unwrap();
        assert_eq!(n11.at(0, 0), &CRat::one());
        // Random-ish Hermitian PD 4×4 (A·A† + I), split 2+2, vs full inverse.
        let a = Matrix::from_fn(4, 4, |i, j| {
            CRat::new(
                rat_int((3 * i + 5 * j + 1) as i64 % 7),
                rat_int((i * j) as i64 % 3 - 1),
            )
        });
        let mut h = a.mul(&a.conj_transpose());
        for i in 0..4 {
            *h.at_mut(i, i) = h.at(i, i).add(&CRat::from_int(1));
        }
        assert!(h.is_hermitian());
        let full = h.inverse().unwrap();
        let n11 = schur_top_left(&h, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(n11.at(i, j), full.at(i, j));
            }
        }
    }

    #[test]
    fn graded_poly_regularity() {
        let mut g = GradedPoly::new(1);
        // m·(degree-4 balanced term): the coefficient carries weight 1.
        g.add_term(mi(&[2]), mi(&[2]), 2, CRat::one(), 2);
        assert!(g.is_regular());
        let k = k_functional_weighted(&mi(&[0]), &mi(&[0]), &g, 1).unwrap();
        // m·K(z²z̄²) = m·2!/m³: power m⁻², coefficient 2.
        assert_eq!(k.nu_x2, 4);
        assert_eq!(k.coeffs[0], CRat::from_int(2));
        assert_eq!(k.weight_offset_x2, Some(2));
    }
}
