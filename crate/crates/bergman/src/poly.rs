//! Multi-indices and bidegree polynomials over exact complex rationals.
//!
//! A bidegree polynomial is a finite sum of terms `c · z^I · z̄^J` keyed by the
//! pair of multi-indices `(I, J)`. It is the common carrier for Kähler
//! potential jets, the Taylor blocks e_k / c_k of `log a` and `log det g`, and
//! every intermediate series in the curvature engine.
//!
//! [`TruncPoly`] wraps a polynomial together with the largest total degree up
//! to which its coefficients are trustworthy. Arithmetic propagates that bound
//! (min rule for sums, valuation-shifted min rule for products) and requests
//! for coefficients above it fail loudly instead of silently reading zeros.

use crate::scalar::{factorial, CRat, Rat};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use std::collections::BTreeMap;
use std::fmt;

/// Exponent vector of a monomial `z^P = z_1^{p_1} ··· z_n^{p_n}`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `P!` = product of component factorials.
    pub fn factorial(&self) -> Rat {
        let mut acc = num_bigint::BigUint::one();
        for &p in &self.0 {
            acc *= factorial(p as u64);
        }
        BigRational::from_integer(BigInt::from(acc))
    }

    /// Multi-index of a tuple of variable indices, e.g. (0,2,0) over n=3 → (2,0,1).
    pub fn from_tuple(n: usize, tuple: &[usize]) -> MultiIndex {
        let mut v = vec![0u32; n];
        for &i in tuple {
            v[i] += 1;
        }
        MultiIndex(v)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// All multi-indices of length `n` with total degree exactly `d`, in
/// lexicographic order.
pub fn multi_indices_of_degree(n: usize, d: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(cur: &mut Vec<u32>, pos: usize, rem: u32, out: &mut Vec<MultiIndex>) {
        if pos == cur.len() - 1 {
            cur[pos] = rem;
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for v in 0..=rem {
            cur[pos] = v;
            rec(cur, pos + 1, rem - v, out);
        }
    }
    if n == 0 {
        if d == 0 {
            out.push(MultiIndex(vec![]));
        }
        return out;
    }
    rec(&mut cur, 0, d, &mut out);
    out
}

/// Finite sum of terms `c · z^I · z̄^J` with exact complex-rational
/// coefficients. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    pub n: usize,
    pub terms: BTreeMap<(MultiIndex, MultiIndex), CRat>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: CRat) -> Self {
        let mut p = Poly::zero(n);
        p.add_term(MultiIndex::zero(n), MultiIndex::zero(n), c);
        p
    }

    pub fn one(n: usize) -> Self {
        Poly::constant(n, CRat::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, i: MultiIndex, j: MultiIndex, c: CRat) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(i.len(), self.n);
        debug_assert_eq!(j.len(), self.n);
        use std::collections::btree_map::Entry;
        match self.terms.entry((i, j)) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn coeff(&self, i: &MultiIndex, j: &MultiIndex) -> CRat {
        self.terms
            .get(&(i.clone(), j.clone()))
            .cloned()
            .unwrap_or_else(CRat::zero)
    }

    pub fn constant_term(&self) -> CRat {
        self.coeff(&MultiIndex::zero(self.n), &MultiIndex::zero(self.n))
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for ((i, j), c) in &other.terms {
            out.add_term(i.clone(), j.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        let mut out = Poly::zero(self.n);
        for ((i, j), c) in &self.terms {
            out.terms.insert((i.clone(), j.clone()), -c);
        }
        out
    }

    pub fn scale(&self, c: &CRat) -> Poly {
        let mut out = Poly::zero(self.n);
        if c.is_zero() {
            return out;
        }
        for ((i, j), v) in &self.terms {
            out.terms.insert((i.clone(), j.clone()), v * c);
        }
        out
    }

    /// Product truncated to total degree ≤ `cap` (`None` = no cap).
    pub fn mul_capped(&self, other: &Poly, cap: Option<u32>) -> Poly {
        let mut out = Poly::zero(self.n);
        for ((i1, j1), c1) in &self.terms {
            let d1 = i1.degree() + j1.degree();
            if let Some(cap) = cap {
                if d1 > cap {
                    continue;
                }
            }
            for ((i2, j2), c2) in &other.terms {
                let d = d1 + i2.degree() + j2.degree();
                if let Some(cap) = cap {
                    if d > cap {
                        continue;
                    }
                }
                out.add_term(i1.add(i2), j1.add(j2), c1 * c2);
            }
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.mul_capped(other, None)
    }

    /// Complex conjugate as a function: swaps `z^I z̄^J` → `z^J z̄^I`.
    pub fn conj(&self) -> Poly {
        let mut out = Poly::zero(self.n);
        for ((i, j), c) in &self.terms {
            out.terms.insert((j.clone(), i.clone()), c.conj());
        }
        out
    }

    /// ∂/∂z_v.
    pub fn d_z(&self, v: usize) -> Poly {
        let mut out = Poly::zero(self.n);
        for ((i, j), c) in &self.terms {
            let e = i.0[v];
            if e == 0 {
                continue;
            }
            let mut i2 = i.clone();
            i2.0[v] -= 1;
            out.add_term(i2, j.clone(), c.scale(&Rat::from_integer(BigInt::from(e))));
        }
        out
    }

    /// ∂/∂z̄_v.
    pub fn d_zbar(&self, v: usize) -> Poly {
        let mut out = Poly::zero(self.n);
        for ((i, j), c) in &self.terms {
            let e = j.0[v];
            if e == 0 {
                continue;
            }
            let mut j2 = j.clone();
            j2.0[v] -= 1;
            out.add_term(i.clone(), j2, c.scale(&Rat::from_integer(BigInt::from(e))));
        }
        out
    }

    /// Terms of bidegree exactly `(p, q)`.
    pub fn bidegree_part(&self, p: u32, q: u32) -> Poly {
        let mut out = Poly::zero(self.n);
        for ((i, j), c) in &self.terms {
            if i.degree() == p && j.degree() == q {
                out.terms.insert((i.clone(), j.clone()), c.clone());
            }
        }
        out
    }

    /// Terms of total degree exactly `d`.
    pub fn total_degree_part(&self, d: u32) -> Poly {
        let mut out = Poly::zero(self.n);
        for ((i, j), c) in &self.terms {
            if i.degree() + j.degree() == d {
                out.terms.insert((i.clone(), j.clone()), c.clone());
            }
        }
        out
    }

    /// Drop all terms of total degree > `cap`.
    pub fn truncated(&self, cap: u32) -> Poly {
        let mut out = Poly::zero(self.n);
        for ((i, j), c) in &self.terms {
            if i.degree() + j.degree() <= cap {
                out.terms.insert((i.clone(), j.clone()), c.clone());
            }
        }
        out
    }

    /// Lowest total degree among stored terms (None when zero).
    pub fn valuation(&self) -> Option<u32> {
        self.terms
            .keys()
            .map(|(i, j)| i.degree() + j.degree())
            .min()
    }

    pub fn max_total_degree(&self) -> Option<u32> {
        self.terms
            .keys()
            .map(|(i, j)| i.degree() + j.degree())
            .max()
    }

    /// Real-valued as a function of (z, z̄): coeff(I,J) = conj(coeff(J,I)).
    pub fn is_hermitian_symmetric(&self) -> bool {
        self.terms.iter().all(|((i, j), c)| {
            self.terms
                .get(&(j.clone(), i.clone()))
                .map(|d| d == &c.conj())
                .unwrap_or(false)
        })
    }

    /// Substitute `z_v → maps[v]` (holomorphic polynomials in the new
    /// variables) and `z̄_v → conj(maps[v])`, truncating at `cap`.
    pub fn substitute_holo(&self, maps: &[Poly], cap: u32) -> Poly {
        assert_eq!(maps.len(), self.n);
        let conj_maps: Vec<Poly> = maps.iter().map(|m| m.conj()).collect();
        let mut out = Poly::zero(self.n);
        // Cache powers of each map as they are needed.
        let mut pow_cache: Vec<Vec<Poly>> = maps
            .iter()
            .map(|m| vec![Poly::one(self.n), m.clone()])
            .collect();
        let mut cpow_cache: Vec<Vec<Poly>> = conj_maps
            .iter()
            .map(|m| vec![Poly::one(self.n), m.clone()])
            .collect();
        fn power(cache: &mut Vec<Poly>, k: usize, cap: u32) -> Poly {
            while cache.len() <= k {
                let last = cache.last().unwrap().clone();
                let next = last.mul_capped(&cache[1].clone(), Some(cap));
                cache.push(next);
            }
            cache[k].clone()
        }
        for ((i, j), c) in &self.terms {
            let mut term = Poly::constant(self.n, c.clone());
            for v in 0..self.n {
                if i.0[v] > 0 {
                    let p = power(&mut pow_cache[v], i.0[v] as usize, cap);
                    term = term.mul_capped(&p, Some(cap));
                }
                if j.0[v] > 0 {
                    let p = power(&mut cpow_cache[v], j.0[v] as usize, cap);
                    term = term.mul_capped(&p, Some(cap));
                }
                if term.is_zero() {
                    break;
                }
            }
            out = out.add(&term);
        }
        out
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((i, j), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:?})·z^{:?}·zb^{:?}", c, i.0, j.0)?;
        }
        Ok(())
    }
}

/// Sentinel "known to effectively infinite degree" for exact polynomials.
pub const EXACT: i64 = i64::MAX >> 2;

/// A polynomial whose coefficients are exact only up to total degree `known`.
///
/// Terms above `known` are never stored. The `known` bound propagates through
/// arithmetic so that reading a coefficient above it is a programming error
/// surfaced by [`TruncPoly::require_degree`]. `known < 0` means not even the
/// constant term is trustworthy (e.g. after too many derivatives).
#[derive(Clone, PartialEq, Eq)]
pub struct TruncPoly {
    pub poly: Poly,
    pub known: i64,
}

impl TruncPoly {
    pub fn new(poly: Poly, known: i64) -> Self {
        TruncPoly {
            poly: truncate_signed(&poly, known),
            known,
        }
    }

    pub fn exact(poly: Poly) -> Self {
        TruncPoly { poly, known: EXACT }
    }

    pub fn zero(n: usize, known: i64) -> Self {
        TruncPoly {
            poly: Poly::zero(n),
            known,
        }
    }

    pub fn constant(n: usize, c: crate::scalar::CRat) -> Self {
        TruncPoly::exact(Poly::constant(n, c))
    }

    pub fn n(&self) -> usize {
        self.poly.n
    }

    /// Lower bound on the true valuation: unknown terms start at `known + 1`.
    pub fn valuation_lb(&self) -> i64 {
        self.poly
            .valuation()
            .map(|v| v as i64)
            .unwrap_or_else(|| self.known.saturating_add(1))
    }

    pub fn add(&self, other: &TruncPoly) -> TruncPoly {
        TruncPoly::new(self.poly.add(&other.poly), self.known.min(other.known))
    }

    pub fn sub(&self, other: &TruncPoly) -> TruncPoly {
        TruncPoly::new(self.poly.sub(&other.poly), self.known.min(other.known))
    }

    pub fn neg(&self) -> TruncPoly {
        TruncPoly {
            poly: self.poly.neg(),
            known: self.known,
        }
    }

    pub fn scale(&self, c: &CRat) -> TruncPoly {
        TruncPoly {
            poly: self.poly.scale(c),
            known: self.known,
        }
    }

    /// Product with truncation tracking; `cap` additionally limits the carried
    /// degree (tightening `known` accordingly).
    pub fn mul(&self, other: &TruncPoly, cap: Option<i64>) -> TruncPoly {
        let k = self
            .known
            .saturating_add(other.valuation_lb())
            .min(other.known.saturating_add(self.valuation_lb()));
        let k = match cap {
            Some(c) => k.min(c),
            None => k,
        };
        let capped = if k >= 0 {
            self.poly
                .mul_capped(&other.poly, Some(k.min(u32::MAX as i64) as u32))
        } else {
            Poly::zero(self.poly.n)
        };
        TruncPoly {
            poly: capped,
            known: k,
        }
    }

    pub fn d_z(&self, v: usize) -> TruncPoly {
        TruncPoly {
            poly: self.poly.d_z(v),
            known: self.known.saturating_sub(1),
        }
    }

    pub fn d_zbar(&self, v: usize) -> TruncPoly {
        TruncPoly {
            poly: self.poly.d_zbar(v),
            known: self.known.saturating_sub(1),
        }
    }

    pub fn conj(&self) -> TruncPoly {
        TruncPoly {
            poly: self.poly.conj(),
            known: self.known,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    /// Value at the origin (constant coefficient). Panics if the constant
    /// term is not within the known range; callers gate on `require_degree`.
    pub fn at_origin(&self) -> CRat {
        assert!(
            self.known >= 0,
            "reading the origin value of a fully truncated series"
        );
        self.poly.constant_term()
    }

    /// Assert that coefficients up to total degree `d` are known.
    pub fn require_degree(&self, d: i64, what: &str) -> Result<(), crate::jets::JetError> {
        if d > self.known {
            Err(crate::jets::JetError::Truncation {
                what: what.to_string(),
                needed: d,
                available: self.known,
            })
        } else {
            Ok(())
        }
    }

    /// Restrict the carried degree (e.g. before entering a cheap contraction).
    pub fn capped(&self, cap: i64) -> TruncPoly {
        if cap >= self.known {
            self.clone()
        } else {
            TruncPoly::new(self.poly.clone(), cap)
        }
    }
}

fn truncate_signed(p: &Poly, known: i64) -> Poly {
    if known < 0 {
        Poly::zero(p.n)
    } else if known >= EXACT {
        p.clone()
    } else {
        p.truncated(known as u32)
    }
}

impl fmt::Debug for TruncPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} (+O(deg>{}))", self.poly, self.known)
    }
}
