//! Assembly of the Bergman density expansion: peak-section norms and inner
//! products as exact series in 1/m, the σ₃ correction from the Gram block
//! inverse, the density coefficients a₀–a₃ by brute-force moment integration,
//! their closed curvature-polynomial forms, and the identity suite tying the
//! two together.
//!
//! The brute-force route expands the weight e^{mξ+η} (η = log det g) as an
//! m-graded polynomial, discarding any term m^μ z^I z̄^J with
//! t − 2μ > threshold (t = |I|+|J|); a discarded term can only contribute at
//! orders beyond m^{-(n+threshold/2)} under the K functional, so a₀..a_k are
//! exact with threshold = 2k. The squared-norm series of the zero peak
//! section is then |λ₀|⁻² = K(e^{mξ+η}), the density is I₀₀·|λ₀|², and
//! I₀₀ = 1 + σ₃/m³ + O(m^{-7/2}) with σ₃ coming from the off-diagonal
//! inner products (S₀, S_i).
//!
//! The half-integer corrections σ_{k/2} are never assumed to vanish:
//! everything at or below m^{-7/2} is simply out of range for a₃.
//!
//! Note on vanishing K's: K annihilates every unbalanced monomial, so
//! K(e₅) = K(e₇) = K(c₃) = K(c₅) = 0 identically, while K(c₂) is nonzero
//! (c₂ is balanced) and enters a₁ through L(c₂) = −ρ. The computation never
//! relies on a hand-maintained vanishing list.

use crate::jets::curvature::{curvature_data, invariants_from_data, ScalarInvariants};
use crate::jets::taylor::{expansion_terms_with_data, log_det_metric, ExpansionTerms};
use crate::jets::{random_kgauge_jet, JetError, PotentialJet};
use crate::moments::{
    k_functional, k_functional_weighted, l_functional, AsymptoticSeries, GradedPoly,
};
use crate::poly::{MultiIndex, Poly};
use crate::scalar::{rat_frac, rat_int, CRat, Rat};
use num_traits::{One, Zero};
use rayon::prelude::*;

/// Values of the density coefficient polynomials at the base point.
/// Coefficients beyond the order they were computed at are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityCoefficients {
    pub a0: Rat,
    pub a1: Rat,
    pub a2: Rat,
    pub a3: Rat,
}

impl DensityCoefficients {
    pub fn as_array(&self) -> [&Rat; 4] {
        [&self.a0, &self.a1, &self.a2, &self.a3]
    }
}

// ---------------------------------------------------------------------------
// The truncated weight expansion and λ series
// ---------------------------------------------------------------------------

/// exp(mξ + η) as an m-graded polynomial, keeping terms with
/// t − 2μ ≤ threshold. Needs ξ to degree threshold + 2 and η to threshold.
fn truncated_weight_exp(jet: &PotentialJet, threshold: i64) -> Result<GradedPoly, JetError> {
    let n = jet.n;
    let xi = jet.xi_series();
    xi.require_degree(threshold + 2, "weight expansion exp(mξ+η)")?;
    let eta = log_det_metric(jet);
    eta.require_degree(threshold, "weight expansion exp(mξ+η)")?;

    // F = mξ + η with weight tags: a ξ term of degree t carries weight t/2 − 1
    // (one m in front), an η term of degree t carries weight t/2.
    let mut f = GradedPoly::new(n);
    for ((i, j), c) in &xi.poly.terms {
        let t = (i.degree() + j.degree()) as i64;
        f.add_term(i.clone(), j.clone(), 2, c.clone(), t - 2);
    }
    for ((i, j), c) in &eta.poly.terms {
        let t = (i.degree() + j.degree()) as i64;
        f.add_term(i.clone(), j.clone(), 0, c.clone(), t);
    }
    let f = f.truncate_depth(threshold);
    debug_assert!(f.is_regular());

    // Every factor has depth ≥ 2, so powers beyond threshold/2 are dead.
    let mut exp = GradedPoly::one(n);
    let mut fpow = GradedPoly::one(n);
    let mut kfact = Rat::one();
    for k in 1..=(threshold / 2).max(0) {
        fpow = fpow.mul(&f, threshold);
        if fpow.terms.is_empty() {
            break;
        }
        kfact *= rat_int(k);
        exp = exp.add(&fpow.scale(&CRat::from_rat(Rat::one() / &kfact)));
    }
    Ok(exp)
}

/// Clamp a series produced from a depth-truncated weight expansion: absolute
/// powers beyond `last_valid_x2` are incomplete and must be dropped.
fn clamp_validity(mut s: AsymptoticSeries, last_valid_x2: i64) -> AsymptoticSeries {
    if s.is_zero() {
        return s;
    }
    let order = ((last_valid_x2 - s.nu_x2) / 2 + 1).max(0) as usize;
    s.coeffs.truncate(order);
    s.order = order;
    s
}

/// |λ_P|⁻² = K(z^P z̄^P e^{mξ+η}) as an exact series with `order` correction
/// coefficients beyond the leading P!/m^{n+p}. The result is regular: the
/// coefficient of m^{-(n+p+k)} carries weight exactly k, which the graded
/// bookkeeping asserts term by term.
pub fn lambda_inverse_series(
    jet: &PotentialJet,
    p: &MultiIndex,
    order: usize,
) -> Result<AsymptoticSeries, JetError> {
    if p.len() != jet.n {
        return Err(JetError::InvalidDimension(p.len()));
    }
    let need = 2 * order as i64 + 2 + 2 * p.degree() as i64;
    if (jet.max_degree as i64) < need {
        return Err(JetError::Truncation {
            what: "lambda_inverse_series".into(),
            needed: need,
            available: jet.max_degree as i64,
        });
    }
    let threshold = 2 * order as i64;
    let weight = truncated_weight_exp(jet, threshold)?;
    let series = k_functional_weighted(p, p, &weight, jet.n)
        .map_err(|e| JetError::Internal(format!("K functional: {e}")))?;
    let nu_expected = 2 * (jet.n as i64 + p.degree() as i64);
    let series = clamp_validity(series, nu_expected + 2 * order as i64);
    if series.nu_x2 != nu_expected || series.coeffs[0] != CRat::from_rat(p.factorial()) {
        return Err(JetError::Internal(
            "leading term of |λ_P|⁻² is not P!/m^{n+p}".into(),
        ));
    }
    if series.weight_offset_x2 != Some(0) {
        return Err(JetError::Internal(
            "|λ_P|⁻² series failed its regularity tags".into(),
        ));
    }
    Ok(series)
}

/// Normalized peak-section inner product (S_P, S_Q) = B_PQ/√(B_PP·B_QQ).
/// The value is `series / √scale_radicand` with a rational-coefficient series;
/// the radicand P!·Q! stays symbolic so the arithmetic is exact.
#[derive(Clone, Debug)]
pub struct PeakInnerProduct {
    pub series: AsymptoticSeries,
    pub scale_radicand: Rat,
}

impl PeakInnerProduct {
    /// |(S_P, S_Q)|² as an exact rational series.
    pub fn norm_sqr_series(&self) -> AsymptoticSeries {
        self.series
            .mul(&self.series.conj())
            .scale(&CRat::from_rat(Rat::one() / &self.scale_radicand))
    }

    /// Leading power as a half-integer (×2), if the series is nonzero.
    pub fn leading_power_x2(&self) -> Option<i64> {
        self.series
            .leading()
            .map(|(k, _)| self.series.nu_x2 + 2 * k as i64)
    }
}

/// Inner-product series of two peak sections, with `order` coefficients from
/// the leading power on. B_PP > 0 always; a nonpositive leading coefficient
/// signals a bug and is reported as an internal error.
pub fn peak_inner_product_series(
    jet: &PotentialJet,
    p: &MultiIndex,
    q: &MultiIndex,
    order: usize,
) -> Result<PeakInnerProduct, JetError> {
    let n = jet.n;
    if p.len() != n || q.len() != n {
        return Err(JetError::InvalidDimension(p.len().max(q.len())));
    }
    let threshold = 2 * (order as i64 + 1);
    if (jet.max_degree as i64) < threshold + 2 {
        return Err(JetError::Truncation {
            what: "peak_inner_product_series".into(),
            needed: threshold + 2,
            available: jet.max_degree as i64,
        });
    }
    let weight = truncated_weight_exp(jet, threshold)?;
    let kfun = |a: &MultiIndex, b: &MultiIndex| -> Result<AsymptoticSeries, JetError> {
        let s = k_functional_weighted(a, b, &weight, n)
            .map_err(|e| JetError::Internal(format!("K functional: {e}")))?;
        Ok(clamp_validity(
            s,
            2 * n as i64 + threshold + (a.degree() + b.degree()) as i64,
        ))
    };
    let b_pq = kfun(p, q)?;
    let b_pp = kfun(p, p)?;
    let b_qq = kfun(q, q)?;
    let normalize = |b: &AsymptoticSeries, m: &MultiIndex| -> Result<AsymptoticSeries, JetError> {
        let lead = b.coeffs.first().cloned().unwrap_or_else(CRat::zero);
        let fact = m.factorial();
        if b.nu_x2 != 2 * (n as i64 + m.degree() as i64) || !lead.is_real() || lead.re != fact {
            return Err(JetError::Internal(
                "diagonal peak norm series must lead with P!/m^{n+p} > 0".into(),
            ));
        }
        // (1 + u)^{-1/2} with 1 + u = B_PP·m^{n+p}/P!.
        let unit = b
            .shift_power_x2(b.nu_x2)
            .scale(&CRat::from_rat(Rat::one() / fact));
        unit.pow_rational(&rat_frac(-1, 2))
            .map_err(|e| JetError::Internal(format!("peak norm square root: {e}")))
    };
    let f_p = normalize(&b_pp, p)?;
    let f_q = normalize(&b_qq, q)?;
    let series = b_pq
        .shift_power_x2(2 * n as i64 + (p.degree() + q.degree()) as i64)
        .mul(&f_p)
        .mul(&f_q);
    Ok(PeakInnerProduct {
        series,
        scale_radicand: p.factorial() * q.factorial(),
    })
}

// ---------------------------------------------------------------------------
// σ₃: two routes
// ---------------------------------------------------------------------------

/// Closed form of the first Gram-inverse correction: σ₃ = ¼|D′ρ|².
pub fn sigma3_closed(inv: &ScalarInvariants) -> Rat {
    &inv.norm_drho2 / rat_int(4)
}

/// σ₃ from first principles: I₀₀ = 1 + Σ_i |(S₀, S_i)|² + O(m^{-7/2}), and
/// σ₃ is the m⁻³ coefficient. The leading coefficient of each (S₀, S_i)
/// comes out as −½ ∂ρ/∂z_i at the base point (the series route settles the
/// ρ-derivative reading of the inner-product asymptotics), so this must
/// reproduce ¼|D′ρ|² — that equality is the test, never an assumption.
pub fn sigma3_via_inner_products(jet: &PotentialJet) -> Result<Rat, JetError> {
    let n = jet.n;
    let zero = MultiIndex::zero(n);
    let mut i00 = AsymptoticSeries::constant_one();
    for i in 0..n {
        let e_i = MultiIndex::unit(n, i);
        let pip = peak_inner_product_series(jet, &zero, &e_i, 1)?;
        let sq = pip.norm_sqr_series();
        i00 = i00
            .add(&sq)
            .map_err(|e| JetError::Internal(format!("I00 assembly: {e}")))?;
    }
    let c = i00
        .coeff_at_power_x2(6)
        .map_err(|e| JetError::Internal(format!("I00 m^-3 coefficient: {e}")))?;
    if !c.is_real() {
        return Err(JetError::Internal("σ₃ came out non-real".into()));
    }
    Ok(c.re)
}

// ---------------------------------------------------------------------------
// Density coefficients, two routes
// ---------------------------------------------------------------------------

/// Brute-force density coefficients: the density series is I₀₀ · |λ₀|², with
/// |λ₀|² the exact reciprocal of the moment series. `order` ≤ 3; coefficients
/// beyond it are returned as zero.
pub fn density_coeffs_bruteforce(
    jet: &PotentialJet,
    order: usize,
) -> Result<DensityCoefficients, JetError> {
    assert!(order <= 3, "the expansion stops at a3");
    let n = jet.n;
    let lam_inv = lambda_inverse_series(jet, &MultiIndex::zero(n), order)?;
    let mut density = lam_inv
        .reciprocal()
        .map_err(|e| JetError::Internal(format!("λ reciprocal: {e}")))?;
    if order >= 3 {
        let sigma3 = sigma3_via_inner_products(jet)?;
        let i00 = AsymptoticSeries {
            nu_x2: 0,
            coeffs: vec![
                CRat::one(),
                CRat::zero(),
                CRat::zero(),
                CRat::from_rat(sigma3),
            ],
            order: 4,
            weight_offset_x2: Some(0),
        };
        density = density.mul(&i00);
    }
    let mut a = [Rat::zero(), Rat::zero(), Rat::zero(), Rat::zero()];
    for (k, slot) in a.iter_mut().enumerate().take(order + 1) {
        let c = density
            .coeff(k)
            .map_err(|e| JetError::Internal(format!("density coefficient {k}: {e}")))?;
        if !c.is_real() {
            return Err(JetError::Internal(format!("a{k} came out non-real")));
        }
        *slot = c.re;
    }
    let [a0, a1, a2, a3] = a;
    if a0 != Rat::one() {
        return Err(JetError::Internal(format!("a0 = {a0}, expected 1")));
    }
    Ok(DensityCoefficients { a0, a1, a2, a3 })
}

/// a₃ in its Laplacian/divergence form (the shape the closed-form
/// coefficient is usually quoted in).
pub fn a3_theorem_form(inv: &ScalarInvariants) -> Rat {
    &inv.laplap_rho / rat_int(8) + &inv.divdiv_r_ric / rat_int(24)
        - &inv.divdiv_rho_ric / rat_int(6)
        + (&inv.lap_norm_r2 - rat_int(4) * &inv.lap_norm_ric2 + rat_int(8) * &inv.lap_rho2)
            / rat_int(48)
        + &inv.rho * (&inv.rho * &inv.rho - rat_int(4) * &inv.norm_ric2 + &inv.norm_r2)
            / rat_int(48)
        + (&inv.sigma3_ric - &inv.ric_r_r - &inv.r_ric_ric) / rat_int(24)
}

/// a₃ with every divergence/Laplacian quantity reduced to primitive
/// contractions; |D′ρ|², Ric(R,R) and the mixed R·∇∇Ric term cancel in the
/// reduction.
pub fn a3_reduced_form(inv: &ScalarInvariants) -> Rat {
    &inv.laplap_rho / rat_int(8) - rat_frac(3, 8) * &inv.ric_hess_rho - &inv.norm_dric2 / rat_int(4)
        + &inv.norm_dr2 / rat_int(24)
        + &inv.rho * &inv.lap_rho / rat_int(6)
        + &inv.sigma1_r / rat_int(12)
        - &inv.sigma2_r / rat_int(24)
        - &inv.r_ric_ric / rat_int(4)
        - &inv.sigma3_ric / rat_int(6)
        + &inv.rho * &inv.rho * &inv.rho / rat_int(48)
        - &inv.rho * &inv.norm_ric2 / rat_int(12)
        + &inv.rho * &inv.norm_r2 / rat_int(48)
}

/// Closed-form density coefficients from the invariant dictionary:
/// a₁ = ½ρ, a₂ = ⅓Δρ + (1/24)(|R|² − 4|Ric|² + 3ρ²), and a₃ in its
/// Laplacian/divergence form. [`a3_reduced_form`] must agree on any
/// dictionary produced by the curvature engine; the identity suite checks
/// that agreement.
pub fn density_coeffs_closed_form(inv: &ScalarInvariants) -> DensityCoefficients {
    let a1 = &inv.rho / rat_int(2);
    let a2 = &inv.lap_rho / rat_int(3)
        + (&inv.norm_r2 - rat_int(4) * &inv.norm_ric2 + rat_int(3) * &inv.rho * &inv.rho)
            / rat_int(24);
    let a3 = a3_theorem_form(inv);
    DensityCoefficients {
        a0: Rat::one(),
        a1,
        a2,
        a3,
    }
}

// ---------------------------------------------------------------------------
// Identity suite
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct IdentityResidual {
    pub name: String,
    pub residual: Rat,
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub residuals: Vec<IdentityResidual>,
}

impl IdentityReport {
    pub fn pass(&self) -> bool {
        self.residuals.iter().all(|r| r.residual.is_zero())
    }

    pub fn failures(&self) -> Vec<&IdentityResidual> {
        self.residuals
            .iter()
            .filter(|r| !r.residual.is_zero())
            .collect()
    }
}

/// Which identities to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteSelection {
    All,
    Claims,
    Prop44,
    Prop53,
    Sigma3,
    Density,
}

impl SuiteSelection {
    pub fn parse(s: &str) -> Option<SuiteSelection> {
        Some(match s {
            "all" => SuiteSelection::All,
            "claims" => SuiteSelection::Claims,
            "prop44" => SuiteSelection::Prop44,
            "prop53" => SuiteSelection::Prop53,
            "sigma3" => SuiteSelection::Sigma3,
            "density" => SuiteSelection::Density,
            _ => return None,
        })
    }
}

/// The (p,p) part of a polynomial (everything else dies under K and L).
fn balanced_part(poly: &Poly) -> Poly {
    let mut out = Poly::zero(poly.n);
    for ((i, j), c) in &poly.terms {
        if i.degree() == j.degree() {
            out.terms.insert((i.clone(), j.clone()), c.clone());
        }
    }
    out
}

fn l_of(poly: &Poly, what: &str) -> Result<Rat, JetError> {
    let balanced = balanced_part(poly);
    let v = l_functional(&balanced).map_err(|e| JetError::Internal(format!("L({what}): {e}")))?;
    if !v.is_real() {
        return Err(JetError::Internal(format!("L({what}) non-real")));
    }
    Ok(v.re)
}

/// Coefficient of m^{-(n+s)} in K(poly) (poly is an exact polynomial).
fn k_coeff(poly: &Poly, n: usize, s: i64) -> Result<Rat, JetError> {
    let series = k_functional(poly, n);
    let c = series
        .coeff_at_power_x2(2 * (n as i64 + s))
        .map_err(|e| JetError::Internal(format!("K coefficient: {e}")))?;
    if !c.is_real() {
        return Err(JetError::Internal("K coefficient non-real".into()));
    }
    Ok(c.re)
}

struct SuiteCtx {
    n: usize,
    t: ExpansionTerms,
    inv: ScalarInvariants,
}

fn prop44_residuals(
    ctx: &SuiteCtx,
    jet: &PotentialJet,
    out: &mut Vec<IdentityResidual>,
) -> Result<(), JetError> {
    let n = ctx.n;
    let inv = &ctx.inv;
    let t = &ctx.t;
    let xi = jet.xi_series();
    let eta = log_det_metric(jet);
    let e6_full = xi.poly.total_degree_part(6);
    let c4_full = eta.poly.total_degree_part(4);
    let half = rat_frac(1, 2);

    let mut push = |name: &str, lhs: Rat, rhs: Rat| {
        out.push(IdentityResidual {
            name: format!("prop44/{name}"),
            residual: lhs - rhs,
        });
    };
    // K(1) = 1/mⁿ.
    push("K(1)", k_coeff(&Poly::one(n), n, 0)?, Rat::one());
    // mK(e₄) = ½ρ/m^{n+1}.
    push("mK(e4)", k_coeff(&t.e4, n, 2)?, &half * &inv.rho);
    // K(c₂) = −ρ/m^{n+1}.
    push("K(c2)", k_coeff(&t.c2, n, 1)?, -inv.rho.clone());
    // mK(e₆) = −(1/6)(−Δρ + 2|Ric|² + |R|²)/m^{n+2}.
    push(
        "mK(e6)",
        k_coeff(&e6_full, n, 3)?,
        rat_frac(-1, 6) * (-&inv.lap_rho + rat_int(2) * &inv.norm_ric2 + &inv.norm_r2),
    );
    // ½m²K(e₄²) = (1/8)(ρ² + 4|Ric|² + |R|²)/m^{n+2}.
    push(
        "m2K(e4^2)/2",
        &half * k_coeff(&t.e4.mul(&t.e4), n, 4)?,
        rat_frac(1, 8) * (&inv.rho * &inv.rho + rat_int(4) * &inv.norm_ric2 + &inv.norm_r2),
    );
    // mK(c₂e₄) = −½(ρ² + 2|Ric|²)/m^{n+2}.
    push(
        "mK(c2e4)",
        k_coeff(&t.c2.mul(&t.e4), n, 3)?,
        -&half * (&inv.rho * &inv.rho + rat_int(2) * &inv.norm_ric2),
    );
    // ½K(c₂²) = ½(ρ² + |Ric|²)/m^{n+2}.
    push(
        "K(c2^2)/2",
        &half * k_coeff(&t.c2.mul(&t.c2), n, 2)?,
        &half * (&inv.rho * &inv.rho + &inv.norm_ric2),
    );
    // K(c₄) = −½(Δρ − |Ric|²)/m^{n+2}.
    push(
        "K(c4)",
        k_coeff(&c4_full, n, 2)?,
        -&half * (&inv.lap_rho - &inv.norm_ric2),
    );
    Ok(())
}

/// The thirteen appendix claims: each left side is an L value computed by
/// permutation enumeration on the jet's Taylor blocks, each right side a
/// polynomial in the invariant dictionary.
fn claim_values(ctx: &SuiteCtx) -> Result<Vec<(String, Rat, Rat)>, JetError> {
    let t = &ctx.t;
    let v = &ctx.inv;
    let rho2 = &v.rho * &v.rho;
    let rho3 = &rho2 * &v.rho;
    let mut out = Vec::new();
    let mut claim = |name: &str, lhs: Rat, rhs: Rat| {
        out.push((name.to_string(), lhs, rhs));
    };

    claim(
        "claim01 L(c2^3)",
        l_of(&t.c2.mul(&t.c2).mul(&t.c2), "c2^3")?,
        rat_frac(-1, 6) * (&rho3 + rat_int(3) * &v.rho * &v.norm_ric2 + rat_int(2) * &v.sigma3_ric),
    );
    claim(
        "claim02 3L(c3^2)",
        rat_int(3) * l_of(&t.c3.mul(&t.c3), "c3^2")?,
        &v.norm_drho2 + rat_frac(1, 2) * &v.norm_dric2,
    );
    claim(
        "claim03 12L(c2^2 e4)",
        rat_int(12) * l_of(&t.c2.mul(&t.c2).mul(&t.e4), "c2^2 e4")?,
        rat_frac(1, 4)
            * (&rho3 - rat_int(2) * &v.r_ric_ric
                + rat_int(4) * &v.sigma3_ric
                + rat_int(5) * &v.rho * &v.norm_ric2),
    );
    claim(
        "claim04 6L(c2 c4~)",
        rat_int(6) * l_of(&t.c2.mul(&t.c4_tilde), "c2 c4~")?,
        rat_frac(1, 2) * &v.rho * &v.lap_rho + &v.ric_hess_rho
            - rat_frac(1, 2) * &v.rho * &v.norm_ric2
            + &v.r_ric_ric,
    );
    claim(
        "claim05 120L(e4^3)",
        rat_int(120) * l_of(&t.e4.mul(&t.e4).mul(&t.e4), "e4^3")?,
        rat_frac(1, 48) * &rho3
            + rat_frac(1, 4) * &v.rho * &v.norm_ric2
            + rat_frac(1, 16) * &v.rho * &v.norm_r2
            - rat_frac(1, 2) * &v.r_ric_ric
            + rat_frac(1, 2) * &v.ric_r_r
            - rat_frac(1, 6) * &v.sigma1_r
            - rat_frac(1, 24) * &v.sigma2_r
            + rat_frac(1, 3) * &v.sigma3_ric,
    );
    claim(
        "claim06 24L(c4~ e4)",
        rat_int(24) * l_of(&t.c4_tilde.mul(&t.e4), "c4~ e4")?,
        rat_frac(-1, 4) * &v.rho * &v.lap_rho + rat_frac(1, 4) * &v.rho * &v.norm_ric2
            - &v.ric_hess_rho
            - &v.r_ric_ric
            + rat_frac(1, 4) * &v.cross_r_d2ric
            + rat_frac(1, 4) * &v.ric_r_r,
    );
    claim(
        "claim07 24L(c2 e6~)",
        rat_int(24) * l_of(&t.c2.mul(&t.e6_tilde), "c2 e6~")?,
        rat_frac(-1, 6) * &v.rho * &v.lap_rho - rat_frac(1, 2) * &v.ric_hess_rho
            + rat_frac(1, 3) * &v.rho * &v.norm_ric2
            + rat_frac(1, 6) * &v.rho * &v.norm_r2
            - &v.r_ric_ric
            + rat_frac(1, 2) * &v.ric_r_r,
    );
    claim(
        "claim08 120L(e4 e6~)",
        rat_int(120) * l_of(&t.e4.mul(&t.e6_tilde), "e4 e6~")?,
        rat_frac(1, 12) * &v.rho * &v.lap_rho + rat_frac(1, 2) * &v.ric_hess_rho
            - rat_frac(1, 4) * &v.cross_r_d2ric
            - rat_frac(1, 6) * &v.rho * &v.norm_ric2
            - rat_frac(1, 12) * &v.rho * &v.norm_r2
            + &v.r_ric_ric
            - rat_frac(3, 4) * &v.ric_r_r
            + rat_frac(1, 2) * &v.sigma1_r,
    );
    claim(
        "claim09 60L(c2 e4^2)",
        rat_int(60) * l_of(&t.c2.mul(&t.e4).mul(&t.e4), "c2 e4^2")?,
        rat_frac(-1, 8) * &rho3 - &v.rho * &v.norm_ric2 - rat_frac(1, 8) * &v.rho * &v.norm_r2
            + &v.r_ric_ric
            - &v.sigma3_ric
            - rat_frac(1, 2) * &v.ric_r_r,
    );
    claim(
        "claim10 24L(c3 e5)",
        rat_int(24) * l_of(&t.c3.mul(&t.e5), "c3 e5")?,
        -&v.norm_drho2 - &v.norm_dric2,
    );
    claim(
        "claim11 60L(e5^2)",
        rat_int(60) * l_of(&t.e5.mul(&t.e5), "e5^2")?,
        rat_frac(1, 12) * (rat_int(3) * &v.norm_drho2 + rat_int(6) * &v.norm_dric2 + &v.norm_dr2),
    );
    claim(
        "claim12 6L(c6~)",
        rat_int(6) * l_of(&t.c6_tilde, "c6~")?,
        rat_frac(-1, 6) * &v.laplap_rho + rat_frac(2, 3) * &v.ric_hess_rho
            - rat_frac(1, 3) * &v.cross_r_d2ric
            + rat_frac(2, 3) * &v.norm_dric2
            - rat_frac(1, 6) * &v.ric_r_r
            + rat_frac(2, 3) * &v.r_ric_ric
            + rat_frac(1, 3) * &v.sigma3_ric,
    );
    claim(
        "claim13 24L(e8~)",
        rat_int(24) * l_of(&t.e8_tilde, "e8~")?,
        rat_frac(1, 24) * &v.laplap_rho
            - rat_frac(5, 12) * &v.norm_dric2
            - rat_frac(1, 8) * &v.norm_dr2
            - rat_frac(7, 24) * &v.ric_hess_rho
            + rat_frac(1, 3) * &v.cross_r_d2ric
            + rat_frac(1, 6) * &v.ric_r_r
            - rat_frac(5, 12) * &v.r_ric_ric
            - rat_frac(5, 12) * &v.sigma1_r
            + rat_frac(1, 12) * &v.sigma2_r
            - rat_frac(1, 6) * &v.sigma3_ric,
    );
    Ok(out)
}

fn prop53_residuals(ctx: &SuiteCtx, out: &mut Vec<IdentityResidual>) {
    let v = &ctx.inv;
    let mut push = |name: &str, lhs: Rat, rhs: Rat| {
        out.push(IdentityResidual {
            name: format!("prop53/{name}"),
            residual: lhs - rhs,
        });
    };
    push(
        "divdiv(R,Ric)",
        v.divdiv_r_ric.clone(),
        -&v.ric_hess_rho - rat_int(2) * &v.norm_dric2 + &v.cross_r_d2ric
            - &v.r_ric_ric
            - &v.sigma3_ric,
    );
    push(
        "divdiv(rho Ric)",
        v.divdiv_rho_ric.clone(),
        rat_int(2) * &v.norm_drho2 + &v.ric_hess_rho + &v.rho * &v.lap_rho,
    );
    push(
        "lap|R|^2",
        v.lap_norm_r2.clone(),
        rat_int(-2) * &v.cross_r_d2ric + rat_int(2) * &v.norm_dr2 + rat_int(4) * &v.sigma1_r
            - rat_int(2) * &v.sigma2_r
            + rat_int(2) * &v.ric_r_r,
    );
    push(
        "lap|Ric|^2",
        v.lap_norm_ric2.clone(),
        rat_int(2) * &v.norm_dric2
            + rat_int(2) * &v.ric_hess_rho
            + rat_int(2) * &v.r_ric_ric
            + rat_int(2) * &v.sigma3_ric,
    );
    push(
        "lap(rho^2)",
        v.lap_rho2.clone(),
        rat_int(2) * &v.norm_drho2 + rat_int(2) * &v.rho * &v.lap_rho,
    );
}

/// Run the selected identity checks on one jet; every residual must be
/// exactly zero.
pub fn identity_suite(
    jet: &PotentialJet,
    selection: SuiteSelection,
) -> Result<IdentityReport, JetError> {
    let data = curvature_data(&jet.potential())?;
    let inv = invariants_from_data(&data)?;
    let t = expansion_terms_with_data(jet, &data)?;
    let ctx = SuiteCtx { n: jet.n, t, inv };
    let mut residuals = Vec::new();

    let want = |s: SuiteSelection| selection == SuiteSelection::All || selection == s;

    if want(SuiteSelection::Prop44) {
        prop44_residuals(&ctx, jet, &mut residuals)?;
    }
    if want(SuiteSelection::Claims) {
        let claims = claim_values(&ctx)?;
        // The aggregate is the m⁻³ bracket of the λ series: the sum of the
        // thirteen claims with their stated multiplicities already applied.
        let mut lhs_sum = Rat::zero();
        let mut rhs_sum = Rat::zero();
        for (name, lhs, rhs) in claims {
            lhs_sum += &lhs;
            rhs_sum += &rhs;
            residuals.push(IdentityResidual {
                name: format!("claims/{name}"),
                residual: lhs - rhs,
            });
        }
        let v = &ctx.inv;
        let f3_rhs = rat_frac(-1, 8) * &v.laplap_rho
            + rat_frac(1, 4) * &v.norm_drho2
            + rat_frac(1, 4) * &v.norm_dric2
            - rat_frac(1, 24) * &v.norm_dr2
            + rat_frac(1, 6) * &v.rho * &v.lap_rho
            + rat_frac(3, 8) * &v.ric_hess_rho
            - rat_frac(1, 48) * &v.rho * &v.rho * &v.rho
            - rat_frac(1, 12) * &v.rho * &v.norm_ric2
            + rat_frac(1, 48) * &v.rho * &v.norm_r2
            - rat_frac(1, 12) * &v.sigma1_r
            + rat_frac(1, 24) * &v.sigma2_r
            + rat_frac(1, 6) * &v.sigma3_ric
            + rat_frac(1, 4) * &v.r_ric_ric;
        residuals.push(IdentityResidual {
            name: "claims/f3-aggregate".into(),
            residual: &lhs_sum - &f3_rhs,
        });
        residuals.push(IdentityResidual {
            name: "claims/f3-rhs-sum".into(),
            residual: rhs_sum - f3_rhs,
        });
    }
    if want(SuiteSelection::Prop53) {
        prop53_residuals(&ctx, &mut residuals);
    }
    if want(SuiteSelection::Sigma3) {
        let sigma3 = sigma3_via_inner_products(jet)?;
        residuals.push(IdentityResidual {
            name: "sigma3/inner-products-vs-closed".into(),
            residual: sigma3 - sigma3_closed(&ctx.inv),
        });
    }
    if want(SuiteSelection::Density) {
        let brute = density_coeffs_bruteforce(jet, 3)?;
        let closed = density_coeffs_closed_form(&ctx.inv);
        for (k, (b, c)) in brute
            .as_array()
            .iter()
            .zip(closed.as_array().iter())
            .enumerate()
        {
            residuals.push(IdentityResidual {
                name: format!("density/a{k}"),
                residual: *b - *c,
            });
        }
        residuals.push(IdentityResidual {
            name: "density/a3-theorem-vs-reduced".into(),
            residual: a3_theorem_form(&ctx.inv) - a3_reduced_form(&ctx.inv),
        });
    }
    Ok(IdentityReport { residuals })
}

/// Identity suite over a deterministic pool of random K-gauge jets,
/// parallelized across trials (exact arithmetic keeps the result independent
/// of the thread count).
pub fn suite_over_random_jets(
    selection: SuiteSelection,
    n: usize,
    degree: u32,
    trials: u64,
    seed: u64,
    bound: u32,
) -> Result<Vec<(u64, IdentityReport)>, JetError> {
    let seeds: Vec<u64> = (0..trials).map(|t| seed.wrapping_add(t)).collect();
    seeds
        .par_iter()
        .map(|&s| {
            let jet = random_kgauge_jet(n, degree, s, bound)?;
            let report = identity_suite(&jet, selection)?;
            Ok((s, report))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::curvature::curvature_invariants;
    use crate::verify::cpn_jet_with_degree;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn flat_jet_series_are_trivial() {
        let jet = PotentialJet::flat(2, 8);
        let lam = lambda_inverse_series(&jet, &mi(&[0, 0]), 3).unwrap();
        assert_eq!(lam.nu_x2, 4);
        assert_eq!(lam.coeffs[0], CRat::one());
        for k in 1..=3 {
            assert!(lam.coeff(k).unwrap().is_zero());
        }
        let jet1 = PotentialJet::flat(2, 10);
        let lam1 = lambda_inverse_series(&jet1, &mi(&[1, 0]), 1).unwrap();
        assert_eq!(lam1.nu_x2, 6);
        assert_eq!(lam1.coeffs[0], CRat::one());
        let d = density_coeffs_bruteforce(&jet, 3).unwrap();
        assert_eq!(
            d,
            DensityCoefficients {
                a0: Rat::one(),
                a1: Rat::zero(),
                a2: Rat::zero(),
                a3: Rat::zero()
            }
        );
        assert_eq!(sigma3_via_inner_products(&jet).unwrap(), Rat::zero());
    }

    #[test]
    fn lambda_series_index_bookkeeping() {
        // |λ₀|⁻² has index −n; multiplying by mⁿ makes it regular.
        let jet = cpn_jet_with_degree(2, 8).unwrap();
        let lam = lambda_inverse_series(&jet, &mi(&[0, 0]), 3).unwrap();
        assert_eq!(lam.index_x2(), Some(-4));
        assert_eq!(lam.shift_power_x2(4).index_x2(), Some(0));
    }

    #[test]
    fn cp1_lambda_series_is_geometric() {
        // On CP¹ monomial sections are orthogonal and the density is m+1,
        // so m·|λ₀|⁻² = 1/(1 + 1/m): coefficients alternate ±1.
        let jet = cpn_jet_with_degree(1, 8).unwrap();
        let lam = lambda_inverse_series(&jet, &mi(&[0]), 3).unwrap();
        assert_eq!(lam.nu_x2, 2);
        let expect = [1i64, -1, 1, -1];
        for (k, e) in expect.iter().enumerate() {
            assert_eq!(lam.coeff(k).unwrap(), CRat::from_int(*e), "k={k}");
        }
    }

    #[test]
    fn truncation_rule_is_sound() {
        // Keeping more terms than the t−2μ rule requires must not change the
        // retained coefficients: compare the order-3 λ data of a degree-10
        // jet computed at thresholds 6 and 8.
        let jet10 = cpn_jet_with_degree(1, 10).unwrap();
        let w6 = truncated_weight_exp(&jet10, 6).unwrap();
        let w8 = truncated_weight_exp(&jet10, 8).unwrap();
        let p = mi(&[0]);
        let k6 = k_functional_weighted(&p, &p, &w6, 1).unwrap();
        let k8 = k_functional_weighted(&p, &p, &w8, 1).unwrap();
        for k in 0..=3i64 {
            assert_eq!(
                k6.coeff_at_power_x2(2 * (1 + k)).unwrap(),
                k8.coeff_at_power_x2(2 * (1 + k)).unwrap(),
                "k={k}"
            );
        }
    }

    #[test]
    fn cpn_density_coefficients_match_binomial() {
        // (m+n)!/m! = Π (m+k): elementary symmetric functions of 1..n.
        let cases: [(usize, [i64; 4]); 3] =
            [(1, [1, 1, 0, 0]), (2, [1, 3, 2, 0]), (3, [1, 6, 11, 6])];
        for (n, expect) in cases {
            let jet = cpn_jet_with_degree(n, 8).unwrap();
            let brute = density_coeffs_bruteforce(&jet, 3).unwrap();
            let inv = curvature_invariants(&jet).unwrap();
            let closed = density_coeffs_closed_form(&inv);
            for (k, e) in expect.iter().enumerate() {
                assert_eq!(brute.as_array()[k], &rat_int(*e), "brute a{k} at n={n}");
                assert_eq!(closed.as_array()[k], &rat_int(*e), "closed a{k} at n={n}");
            }
        }
    }

    #[test]
    fn cpn_peak_sections_are_orthogonal() {
        let jet = cpn_jet_with_degree(2, 8).unwrap();
        for q in [mi(&[1, 0]), mi(&[0, 1]), mi(&[1, 1]), mi(&[2, 0])] {
            let pip = peak_inner_product_series(&jet, &mi(&[0, 0]), &q, 1).unwrap();
            assert!(pip.series.is_zero(), "(S_0, S_{:?}) should vanish", q.0);
        }
        assert_eq!(sigma3_via_inner_products(&jet).unwrap(), Rat::zero());
    }

    #[test]
    fn peak_leading_term_is_rho_derivative() {
        // Leading coefficient of (S₀, S_i) is −½ ∂ρ/∂z_i(0) at m^{-3/2}.
        let jet = random_kgauge_jet(1, 8, 11, 4).unwrap();
        let data = crate::jets::curvature::curvature_data(&jet.potential()).unwrap();
        let drho = data.rho.d_z(0).at_origin();
        let pip = peak_inner_product_series(&jet, &mi(&[0]), &mi(&[1]), 1).unwrap();
        assert_eq!(pip.leading_power_x2(), Some(3));
        let (k, lead) = pip.series.leading().unwrap();
        assert_eq!(k, 0);
        assert_eq!(lead, drho.scale(&rat_frac(-1, 2)));
        assert_eq!(pip.scale_radicand, Rat::one());
    }

    #[test]
    fn sigma3_two_routes_agree_on_random_jets() {
        for seed in [0u64, 3, 17] {
            let jet = random_kgauge_jet(2, 8, seed, 4).unwrap();
            let inv = curvature_invariants(&jet).unwrap();
            assert_eq!(
                sigma3_via_inner_products(&jet).unwrap(),
                sigma3_closed(&inv),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn offdiagonal_peaks_decay_like_three_halves() {
        for seed in [2u64, 5] {
            let jet = random_kgauge_jet(2, 8, seed, 4).unwrap();
            for q in [mi(&[1, 0]), mi(&[0, 1])] {
                let pip = peak_inner_product_series(&jet, &mi(&[0, 0]), &q, 1).unwrap();
                if let Some(p_x2) = pip.leading_power_x2() {
                    assert!(p_x2 >= 3, "leading power {p_x2}/2 too shallow");
                }
            }
        }
    }

    #[test]
    fn identity_suite_on_cp1_and_a_random_jet() {
        let jet = cpn_jet_with_degree(1, 8).unwrap();
        let report = identity_suite(&jet, SuiteSelection::All).unwrap();
        assert!(report.pass(), "CP¹ failures: {:?}", report.failures());

        let jet = random_kgauge_jet(2, 8, 42, 3).unwrap();
        let report = identity_suite(&jet, SuiteSelection::All).unwrap();
        assert!(
            report.pass(),
            "random-jet failures: {:?}",
            report.failures()
        );
    }

    #[test]
    fn insufficient_degree_is_reported() {
        let jet = random_kgauge_jet(2, 6, 1, 3).unwrap();
        assert!(matches!(
            density_coeffs_bruteforce(&jet, 3),
            Err(JetError::Truncation { .. })
        ));
        // Order 2 works on a degree-6 jet.
        let d = density_coeffs_bruteforce(&jet, 2).unwrap();
        assert_eq!(d.a0, Rat::one());
        assert!(d.a3.is_zero());
    }
}
