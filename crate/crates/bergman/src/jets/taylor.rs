//! Taylor blocks of log a and log det g from a jet.
//!
//! With ξ the jet data, log a = −|z|² + ξ and the degree-k parts of ξ are the
//! blocks e_k (k ≥ 4). The metric determinant series gives
//! log det g = c₂ + c₃ + ⋯ via tr log(I − E), E = ∂∂̄ξ. The balanced parts
//! ẽ₆ (3,3), ẽ₈ (4,4), c̃₄ (2,2), c̃₆ (3,3) are the only ones the Gaussian
//! functional K sees.
//!
//! Extraction cross-checks itself against the curvature route: the degree-4
//! block must equal −¼ R_{ij̄kl̄} z_i z_k z̄_j z̄_l and the degree-2 log-det
//! block must equal −R_{ij̄} z_i z̄_j, with curvature computed independently
//! from the metric series.

use super::curvature::{curvature_data, CurvatureData, OriginVals};
use super::{JetError, PotentialJet};
use crate::poly::{MultiIndex, Poly, TruncPoly};
use crate::scalar::{rat_frac, CRat};

/// η = log det(g_{ij̄}) as a truncated series (K-gauge only: g(0) = I).
pub fn log_det_metric(jet: &PotentialJet) -> TruncPoly {
    let n = jet.n;
    let xi = jet.xi_series();
    let cap = jet.max_degree as i64 - 2;
    // E_{ij} = ∂_i ∂_j̄ ξ, valuation ≥ 2 in K-gauge.
    let e: Vec<TruncPoly> = (0..n * n)
        .map(|idx| xi.d_z(idx / n).d_zbar(idx % n).capped(cap))
        .collect();
    // log det(I − E) = −Σ_k tr(E^k)/k; E^k has valuation ≥ 2k.
    let mut eta = TruncPoly::zero(n, crate::poly::EXACT);
    let mut epow = e.clone();
    let mut k = 1i64;
    loop {
        let mut tr = TruncPoly::zero(n, crate::poly::EXACT);
        for i in 0..n {
            tr = tr.add(&epow[i * n + i]);
        }
        eta = eta.sub(&tr.scale(&CRat::from_rat(rat_frac(1, k))));
        if epow
            .iter()
            .map(|p| p.valuation_lb())
            .min()
            .unwrap_or(i64::MAX)
            > cap - 2
        {
            break;
        }
        let mut next = vec![TruncPoly::zero(n, cap); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = TruncPoly::zero(n, crate::poly::EXACT);
                for l in 0..n {
                    acc = acc.add(&epow[i * n + l].mul(&e[l * n + j], Some(cap)));
                }
                next[i * n + j] = acc;
            }
        }
        epow = next;
        k += 1;
    }
    eta.capped(cap)
}

/// The Taylor blocks used by the expansion assembly: degree-k parts of
/// log a + |z|² and of log det g, plus their balanced projections.
#[derive(Clone, Debug)]
pub struct ExpansionTerms {
    pub e4: Poly,
    pub e5: Poly,
    pub e6_tilde: Poly,
    pub e8_tilde: Poly,
    pub c2: Poly,
    pub c3: Poly,
    pub c4_tilde: Poly,
    pub c5: Poly,
    pub c6_tilde: Poly,
}

/// Build a polynomial Σ f(I, J) z_I z̄_J from tuple coefficients.
pub fn poly_from_tuples(
    n: usize,
    holo_rank: usize,
    anti_rank: usize,
    f: impl Fn(&[usize], &[usize]) -> CRat,
) -> Poly {
    let mut out = Poly::zero(n);
    let mut hi = vec![0usize; holo_rank];
    let mut ai = vec![0usize; anti_rank];
    let hcount = n.pow(holo_rank as u32);
    let acount = n.pow(anti_rank as u32);
    for hf in 0..hcount {
        let mut rem = hf;
        for s in (0..holo_rank).rev() {
            hi[s] = rem % n;
            rem /= n;
        }
        for af in 0..acount {
            let mut rem = af;
            for s in (0..anti_rank).rev() {
                ai[s] = rem % n;
                rem /= n;
            }
            let c = f(&hi, &ai);
            if !c.is_zero() {
                out.add_term(
                    MultiIndex::from_tuple(n, &hi),
                    MultiIndex::from_tuple(n, &ai),
                    c,
                );
            }
        }
    }
    out
}

/// Reconstruction of the degree-4 block from curvature at the origin.
pub(crate) fn e4_from_curvature(r0: &OriginVals) -> Poly {
    poly_from_tuples(r0.n, 2, 2, |h, a| {
        r0.get(&[h[0], a[0], h[1], a[1]]).scale(&rat_frac(-1, 4))
    })
}

/// Reconstruction of the degree-2 log-det block from the Ricci tensor.
pub(crate) fn c2_from_curvature(ric0: &OriginVals) -> Poly {
    poly_from_tuples(ric0.n, 1, 1, |h, a| {
        ric0.get(&[h[0], a[0]]).scale(&rat_frac(-1, 1))
    })
}

/// All expansion blocks of a jet, with the structural cross-checks
/// e₄ = −¼ R z_i z_k z̄_j z̄_l and c₂ = −Ric z_i z̄_j enforced against an
/// independent curvature computation.
pub fn expansion_terms(jet: &PotentialJet) -> Result<ExpansionTerms, JetError> {
    let data = curvature_data(&jet.potential())?;
    expansion_terms_with_data(jet, &data)
}

/// Same as [`expansion_terms`] but reusing an existing curvature computation
/// for the structural checks.
pub fn expansion_terms_with_data(
    jet: &PotentialJet,
    data: &CurvatureData,
) -> Result<ExpansionTerms, JetError> {
    let xi = jet.xi_series();
    xi.require_degree(8, "e8_tilde")?;
    let eta = log_det_metric(jet);
    eta.require_degree(6, "c6_tilde")?;

    let terms = ExpansionTerms {
        e4: xi.poly.total_degree_part(4),
        e5: xi.poly.total_degree_part(5),
        e6_tilde: xi.poly.bidegree_part(3, 3),
        e8_tilde: xi.poly.bidegree_part(4, 4),
        c2: eta.poly.total_degree_part(2),
        c3: eta.poly.total_degree_part(3),
        c4_tilde: eta.poly.bidegree_part(2, 2),
        c5: eta.poly.total_degree_part(5),
        c6_tilde: eta.poly.bidegree_part(3, 3),
    };

    let r0 = data.r.at_origin("curvature tensor")?;
    let ric0 = data.ric.at_origin("Ricci tensor")?;
    if terms.e4 != e4_from_curvature(&r0) {
        return Err(JetError::Internal(
            "degree-4 block does not match its curvature reconstruction".into(),
        ));
    }
    if terms.c2 != c2_from_curvature(&ric0) {
        return Err(JetError::Internal(
            "degree-2 log-det block does not match the Ricci reconstruction".into(),
        ));
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::curvature::Slot;
    use crate::jets::random_kgauge_jet;
    use crate::jets::tests_support::fs_jet;
    use crate::scalar::rat_frac;

    fn zmon(n: usize, zi: &[u32], zb: &[u32], c: CRat) -> Poly {
        let mut p = Poly::zero(n);
        p.add_term(MultiIndex(zi.to_vec()), MultiIndex(zb.to_vec()), c);
        p
    }

    #[test]
    fn cp1_blocks_match_log_series() {
        // log a = −log(1+|z|²): e₄ = ½z²z̄², e₆ = −⅓, e₈ = ¼;
        // log det g = −2 log(1+|z|²): c₂ = −2zz̄, c₄ = |z|⁴, c₆ = −⅔|z|⁶.
        let jet = fs_jet(1, 8);
        let t = expansion_terms(&jet).unwrap();
        assert_eq!(t.e4, zmon(1, &[2], &[2], CRat::from_frac(1, 2)));
        assert!(t.e5.is_zero());
        assert_eq!(t.e6_tilde, zmon(1, &[3], &[3], CRat::from_frac(-1, 3)));
        assert_eq!(t.e8_tilde, zmon(1, &[4], &[4], CRat::from_frac(1, 4)));
        assert_eq!(t.c2, zmon(1, &[1], &[1], CRat::from_int(-2)));
        assert!(t.c3.is_zero());
        assert_eq!(t.c4_tilde, zmon(1, &[2], &[2], CRat::one()));
        assert!(t.c5.is_zero());
        assert_eq!(t.c6_tilde, zmon(1, &[3], &[3], CRat::from_frac(-2, 3)));
    }

    /// L(Σ R_{ij̄kl̄} z_i z_k z̄_j z̄_l) = −ρ: the quartic curvature block
    /// feeds the symmetrizing functional the scalar curvature.
    #[test]
    fn l_of_curvature_quartic_is_minus_rho() {
        use crate::moments::l_functional;
        for seed in [3u64, 8] {
            let jet = random_kgauge_jet(2, 8, seed, 4).unwrap();
            let data = curvature_data(&jet.potential()).unwrap();
            let r0 = data.r.at_origin("R").unwrap();
            let quartic =
                poly_from_tuples(2, 2, 2, |h, a| r0.get(&[h[0], a[0], h[1], a[1]]).clone());
            let l = l_functional(&quartic).unwrap().expect_real("L");
            let rho = data.rho.at_origin().expect_real("rho");
            assert_eq!(l, -rho, "seed {seed}");
        }
    }

    #[test]
    fn flat_jet_blocks_vanish() {
        let jet = crate::jets::PotentialJet::flat(2, 8);
        let t = expansion_terms(&jet).unwrap();
        assert!(t.e4.is_zero() && t.e5.is_zero() && t.e6_tilde.is_zero());
        assert!(t.c2.is_zero() && t.c3.is_zero() && t.c4_tilde.is_zero() && t.c6_tilde.is_zero());
    }

    /// Higher reconstruction identities: e₅, c₃, c̃₄ and ẽ₆ from covariant
    /// curvature data, on random jets. These pin the covariant-derivative and
    /// sign conventions of the whole engine.
    #[test]
    fn taylor_blocks_reconstruct_from_curvature() {
        for seed in [1u64, 5, 9] {
            let jet = random_kgauge_jet(2, 8, seed, 4).unwrap();
            let t = expansion_terms(&jet).unwrap();
            let data = curvature_data(&jet.potential()).unwrap();
            let ctx = &data.ctx;
            let r0 = data.r.at_origin("R").unwrap();
            let ric0 = data.ric.at_origin("Ric").unwrap();
            let dr0 = data.r.covd(ctx, true, 0).at_origin("DR").unwrap();
            let dric0 = data.ric.covd(ctx, true, 0).at_origin("DRic").unwrap();
            let ddric0 = data
                .ric
                .covd(ctx, true, 1)
                .covd(ctx, false, 0)
                .at_origin("DDRic")
                .unwrap();
            let ddr0 = data
                .r
                .covd(ctx, true, 1)
                .covd(ctx, false, 0)
                .at_origin("DDR")
                .unwrap();
            assert_eq!(ddr0.slots.len(), 6);
            assert_eq!(ddr0.slots[4], Slot::Holo);

            // e₅ = −(1/12) R_{ij̄kl̄,p} z_i z_k z_p z̄_j z̄_l + conjugate.
            let a = poly_from_tuples(2, 3, 2, |h, an| {
                dr0.get(&[h[0], an[0], h[1], an[1], h[2]])
                    .scale(&rat_frac(-1, 12))
            });
            assert_eq!(t.e5, a.add(&a.conj()), "e5 reconstruction at seed {seed}");

            // c₃ = −½ R_{ij̄,k} z_i z_k z̄_j + conjugate.
            let b = poly_from_tuples(2, 2, 1, |h, an| {
                dric0.get(&[h[0], an[0], h[1]]).scale(&rat_frac(-1, 2))
            });
            assert_eq!(t.c3, b.add(&b.conj()), "c3 reconstruction at seed {seed}");

            // c̃₄ = −¼ (R_{ij̄,kl̄} + R_{is̄kl̄} R_{sj̄}) z_i z_k z̄_j z̄_l.
            let c4r = poly_from_tuples(2, 2, 2, |h, an| {
                let (i, k) = (h[0], h[1]);
                let (j, l) = (an[0], an[1]);
                let mut v = ddric0.get(&[i, j, k, l]).clone();
                for s in 0..2 {
                    v = &v + &(r0.get(&[i, s, k, l]) * ric0.get(&[s, j]));
                }
                v.scale(&rat_frac(-1, 4))
            });
            assert_eq!(t.c4_tilde, c4r, "c4_tilde reconstruction at seed {seed}");

            // ẽ₆ = −(1/36)(R_{ij̄kl̄,pq̄} + R_{is̄pq̄}R_{sj̄kl̄} + R_{ks̄pq̄}R_{sl̄ij̄}
            //              + R_{is̄kq̄}R_{sj̄pl̄}) z_i z_k z_p z̄_j z̄_l z̄_q.
            let e6r = poly_from_tuples(2, 3, 3, |h, an| {
                let (i, k, p) = (h[0], h[1], h[2]);
                let (j, l, q) = (an[0], an[1], an[2]);
                let mut v = ddr0.get(&[i, j, k, l, p, q]).clone();
                for s in 0..2 {
                    v = &v + &(r0.get(&[i, s, p, q]) * r0.get(&[s, j, k, l]));
                    v = &v + &(r0.get(&[k, s, p, q]) * r0.get(&[s, l, i, j]));
                    v = &v + &(r0.get(&[i, s, k, q]) * r0.get(&[s, j, p, l]));
                }
                v.scale(&rat_frac(-1, 36))
            });
            assert_eq!(t.e6_tilde, e6r, "e6_tilde reconstruction at seed {seed}");
        }
    }
}
