//! Ground-truth verification: exact CP^n density checks, the asymptotic
//! Riemann–Roch identity, and a floating-point Bergman density on CP¹
//! computed by quadrature and fitted against the exact coefficients.
//!
//! On CP^n the sections √((m+n)!/P!)·z^P are orthonormal, the density is
//! (m+n)!/m! = Π_{k=1..n}(m+k), and the top four coefficients are the
//! elementary symmetric polynomials e_j(1, …, n) — an exact, independent
//! target for both coefficient routes. On CP¹ the Gram matrix of z^A under a
//! perturbed Fubini–Study weight is computed by Gauss–Legendre × uniform
//! angular quadrature after the compactifying substitution t = u/(1−u); for
//! the unperturbed weight the radial integrand becomes the polynomial
//! u^A (1−u)^{m−A}, so the rule is exact there up to rounding.

use crate::expansion::{
    density_coeffs_bruteforce, density_coeffs_closed_form, DensityCoefficients,
};
use crate::jets::curvature::curvature_invariants;
use crate::jets::{normalize_to_kgauge, JetError, PotentialJet};
use crate::moments::Matrix;
use crate::poly::{MultiIndex, Poly};
use crate::scalar::{factorial_rat, rat_int, rat_to_f64, CRat, Rat, C64};
use num_traits::{One, Zero};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("quadrature produced a non-positive-definite Gram matrix (under-resolved)")]
    NotPositiveDefinite,
    #[error("least-squares fit needs at least {needed} distinct m values, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("ill-conditioned fit design (m-range too narrow)")]
    IllConditioned,
    #[error("{0}")]
    BadSpec(String),
}

// ---------------------------------------------------------------------------
// CP^n jets and exact checks
// ---------------------------------------------------------------------------

/// Jet of ξ = |z|² − log(1+|z|²) for the Fubini–Study weight at a chart
/// origin, truncated at `degree`.
pub fn cpn_jet_with_degree(n: usize, degree: u32) -> Result<PotentialJet, JetError> {
    if n == 0 {
        return Err(JetError::InvalidDimension(0));
    }
    let mut u = Poly::zero(n);
    for i in 0..n {
        u.add_term(MultiIndex::unit(n, i), MultiIndex::unit(n, i), CRat::one());
    }
    // ξ = Σ_{k≥2} (−1)^k |z|^{2k}/k.
    let mut xi = Poly::zero(n);
    let mut upow = u.clone();
    for k in 2..=(degree / 2) {
        upow = upow.mul(&u).truncated(degree);
        let sign = if k % 2 == 0 { 1 } else { -1 };
        xi = xi.add(&upow.scale(&CRat::from_rat(Rat::new(sign.into(), (k as i64).into()))));
    }
    PotentialJet::new(n, degree, xi.truncated(degree))
}

/// Degree-8 Fubini–Study jet (enough for a₃).
pub fn cpn_jet(n: usize) -> Result<PotentialJet, JetError> {
    cpn_jet_with_degree(n, 8)
}

/// Elementary symmetric polynomials e₀..e₃ of {1, …, n}: the top four
/// coefficients of Π_{k=1..n} (m+k) in descending powers of m.
pub fn binomial_top_coefficients(n: usize) -> [Rat; 4] {
    let mut e = [Rat::one(), Rat::zero(), Rat::zero(), Rat::zero()];
    for k in 1..=n as i64 {
        // Multiply (m + k) into the polynomial, tracked to four coefficients.
        let kk = rat_int(k);
        for j in (1..4).rev() {
            let (head, tail) = e.split_at_mut(j);
            tail[0] = &tail[0] + &head[j - 1] * &kk;
        }
    }
    e
}

#[derive(Clone, Debug)]
pub struct CpnCheckReport {
    pub n: usize,
    pub expected: [Rat; 4],
    pub bruteforce: DensityCoefficients,
    pub closed_form: DensityCoefficients,
    pub pass: bool,
}

/// Exact golden test: both coefficient routes must reproduce the top four
/// coefficients of (m+n)!/m! on CP^n.
pub fn cpn_exact_check(n: usize, order: usize) -> Result<CpnCheckReport, JetError> {
    let jet = cpn_jet(n)?;
    let bruteforce = density_coeffs_bruteforce(&jet, order)?;
    let inv = curvature_invariants(&jet)?;
    let closed_form = density_coeffs_closed_form(&inv);
    let expected = binomial_top_coefficients(n);
    let upto = order.min(3);
    let pass = (0..=upto).all(|k| {
        bruteforce.as_array()[k] == &expected[k] && closed_form.as_array()[k] == &expected[k]
    });
    Ok(CpnCheckReport {
        n,
        expected,
        bruteforce,
        closed_form,
        pass,
    })
}

#[derive(Clone, Debug)]
pub struct RiemannRochReport {
    pub n: usize,
    /// Coefficient of m^{n-j} in C(m+n, n), j = 0..3.
    pub binomial: [Rat; 4],
    /// ∫ a_j dV over CP^n (= a_j/n! by homogeneity).
    pub integrated: [Rat; 4],
    /// Characteristic-number route: vol, ½∫c₁ω^{n-1}/(n-1)!,
    /// (1/12)∫(c₂+c₁²)ω^{n-2}/(n-2)!, (1/24)∫c₁c₂ω^{n-3}/(n-3)!.
    pub characteristic: [Rat; 4],
    pub pass: bool,
}

/// dim H⁰(CPⁿ, O(m)) = C(m+n, n) recovered from the integrated expansion
/// through order m^{n−3}. Conventions: vol(CPⁿ) = 1/n! and the Chern classes
/// of CPⁿ pair as c₁ = (n+1)H, c₂ = ½n(n+1)H² against ∫H^n = 1.
pub fn riemann_roch_check(n: usize) -> Result<RiemannRochReport, JetError> {
    let jet = cpn_jet(n)?;
    let inv = curvature_invariants(&jet)?;
    let closed = density_coeffs_closed_form(&inv);
    let nfact = factorial_rat(n as u64);
    let integrated: [Rat; 4] = [
        &closed.a0 / &nfact,
        &closed.a1 / &nfact,
        &closed.a2 / &nfact,
        &closed.a3 / &nfact,
    ];
    // C(m+n, n) = Π(m+k)/n!.
    let tops = binomial_top_coefficients(n);
    let binomial: [Rat; 4] = [
        &tops[0] / &nfact,
        &tops[1] / &nfact,
        &tops[2] / &nfact,
        &tops[3] / &nfact,
    ];
    let nn = n as i64;
    let c1 = rat_int(nn + 1);
    let c2 = rat_int(nn * (nn + 1) / 2);
    let inv_fact = |k: i64| -> Rat {
        if k < 0 {
            Rat::zero()
        } else {
            Rat::one() / factorial_rat(k as u64)
        }
    };
    let characteristic: [Rat; 4] = [
        inv_fact(nn),
        &c1 / rat_int(2) * inv_fact(nn - 1),
        (&c2 + &c1 * &c1) / rat_int(12) * inv_fact(nn - 2),
        &c1 * &c2 / rat_int(24) * inv_fact(nn - 3),
    ];
    let pass = (0..4).all(|j| binomial[j] == integrated[j] && binomial[j] == characteristic[j]);
    Ok(RiemannRochReport {
        n,
        binomial,
        integrated,
        characteristic,
        pass,
    })
}

// ---------------------------------------------------------------------------
// CP¹ weights: Fubini–Study plus controlled perturbations
// ---------------------------------------------------------------------------

/// Perturbation shape: a rotation-symmetric bump or a single angular
/// frequency Re(z^k)/(1+s)^{k+2}, with s = |z|².
///
/// The symmetric bump is χ = s²/(1+s)³ + (4/5)·s³/(1+s)⁴. The cubic term is
/// weighted so that the perturbed weight's density expansion has |a₃| ≪ |a₂|,
/// which keeps the three-term fit model of [`fit_coefficients`] unbiased over
/// the sampled range of m.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationMode {
    Sym,
    Freq(u32),
}

/// Weight φ_w = log(1+|z|²) + ε·χ on the CP¹ chart. ε is kept rational so
/// the exact jet side sees the same weight as the quadrature side.
#[derive(Clone, Debug)]
pub struct WeightSpec {
    pub eps: Rat,
    pub mode: PerturbationMode,
}

impl WeightSpec {
    pub fn fubini_study() -> Self {
        WeightSpec {
            eps: Rat::zero(),
            mode: PerturbationMode::Sym,
        }
    }

    pub fn eps_f64(&self) -> f64 {
        rat_to_f64(&self.eps)
    }

    /// φ_w(z).
    pub fn phi(&self, z: C64) -> f64 {
        let s = z.norm_sqr();
        let eps = self.eps_f64();
        match self.mode {
            PerturbationMode::Sym => {
                (1.0 + s).ln()
                    + eps * (s * s / (1.0 + s).powi(3) + 0.8 * s * s * s / (1.0 + s).powi(4))
            }
            PerturbationMode::Freq(k) => {
                let re_zk = z.powu(k).re;
                (1.0 + s).ln() + eps * re_zk / (1.0 + s).powi(k as i32 + 2)
            }
        }
    }

    /// Metric density G = ∂²φ_w/∂z∂z̄ on the chart.
    pub fn metric(&self, z: C64) -> f64 {
        let s = z.norm_sqr();
        let eps = self.eps_f64();
        let fs = 1.0 / (1.0 + s).powi(2);
        match self.mode {
            PerturbationMode::Sym => {
                // ∂∂̄(χ(s)) = χ' + sχ'' for a radial χ.
                let chi1_p = (2.0 * s - s * s) / (1.0 + s).powi(4);
                let chi1_pp = (2.0 - 8.0 * s + 2.0 * s * s) / (1.0 + s).powi(5);
                let chi2_p = (3.0 * s * s - s * s * s) / (1.0 + s).powi(5);
                let chi2_pp = (6.0 * s - 12.0 * s * s + 2.0 * s * s * s) / (1.0 + s).powi(6);
                fs + eps * ((chi1_p + s * chi1_pp) + 0.8 * (chi2_p + s * chi2_pp))
            }
            PerturbationMode::Freq(k) => {
                // χ = Re(z^k)ψ(s): ∂∂̄χ = Re(z^k)·((k+1)ψ' + sψ'').
                let kk = k as f64;
                let psi_p = -(kk + 2.0) / (1.0 + s).powi(k as i32 + 3);
                let psi_pp = (kk + 2.0) * (kk + 3.0) / (1.0 + s).powi(k as i32 + 4);
                let re_zk = z.powu(k).re;
                fs + eps * re_zk * ((kk + 1.0) * psi_p + s * psi_pp)
            }
        }
    }

    /// Exact Taylor series of φ_w at the chart origin, to total degree `deg`.
    pub fn potential_series(&self, deg: u32) -> Poly {
        let n = 1;
        let s = {
            let mut p = Poly::zero(n);
            p.add_term(MultiIndex(vec![1]), MultiIndex(vec![1]), CRat::one());
            p
        };
        // log(1+s) = Σ (−1)^{k+1} s^k/k.
        let mut phi = Poly::zero(n);
        let mut spow = Poly::one(n);
        let half_deg = deg / 2;
        let mut s_powers = Vec::with_capacity(half_deg as usize + 1);
        for _ in 0..=half_deg {
            s_powers.push(spow.clone());
            spow = spow.mul(&s).truncated(deg);
        }
        for k in 1..=half_deg as i64 {
            let sign = if k % 2 == 1 { 1 } else { -1 };
            phi = phi
                .add(&s_powers[k as usize].scale(&CRat::from_rat(Rat::new(sign.into(), k.into()))));
        }
        // (1+s)^{-a} = Σ C(-a, k) s^k with C(-a,k) = (−1)^k C(a+k−1, k).
        let neg_binom = |a: i64, k: i64| -> Rat {
            let mut acc = Rat::one();
            for j in 0..k {
                acc = acc * rat_int(a + j) / rat_int(j + 1);
            }
            if k % 2 == 0 {
                acc
            } else {
                -acc
            }
        };
        let eps = CRat::from_rat(self.eps.clone());
        match self.mode {
            PerturbationMode::Sym => {
                // χ = s²(1+s)^{-3} + (4/5) s³(1+s)^{-4}.
                let mut chi = Poly::zero(n);
                for k in 0..=half_deg.saturating_sub(2) as i64 {
                    chi = chi
                        .add(&s_powers[(k + 2) as usize].scale(&CRat::from_rat(neg_binom(3, k))));
                }
                let weight = CRat::from_rat(Rat::new(4.into(), 5.into()));
                for k in 0..=half_deg.saturating_sub(3) as i64 {
                    let c = CRat::from_rat(neg_binom(4, k));
                    chi = chi.add(&s_powers[(k + 3) as usize].scale(&(&c * &weight)));
                }
                phi = phi.add(&chi.scale(&eps));
            }
            PerturbationMode::Freq(kf) => {
                // χ = ½(z^k + z̄^k)(1+s)^{-(k+2)}.
                let mut zk = Poly::zero(n);
                zk.add_term(
                    MultiIndex(vec![kf]),
                    MultiIndex(vec![0]),
                    CRat::from_frac(1, 2),
                );
                zk.add_term(
                    MultiIndex(vec![0]),
                    MultiIndex(vec![kf]),
                    CRat::from_frac(1, 2),
                );
                let mut psi = Poly::zero(n);
                for k in 0..=half_deg as i64 {
                    psi = psi.add(
                        &s_powers[k as usize].scale(&CRat::from_rat(neg_binom(kf as i64 + 2, k))),
                    );
                }
                phi = phi.add(&zk.mul(&psi).truncated(deg).scale(&eps));
            }
        }
        phi.truncated(deg)
    }

    /// K-gauge jet of the weight at the chart origin.
    pub fn jet(&self, degree: u32) -> Result<PotentialJet, JetError> {
        normalize_to_kgauge(&self.potential_series(degree), degree)
    }
}

// ---------------------------------------------------------------------------
// Gram matrices and densities on CP¹
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct QuadratureSpec {
    pub radial: usize,
    pub angular: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radial: 240,
            angular: 64,
        }
    }
}

/// Inner-product matrix of the section basis z^A, A = 0..m.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub m: u32,
    pub entries: GramEntries,
}

#[derive(Clone, Debug)]
pub enum GramEntries {
    Exact(Matrix<CRat>),
    Float(Matrix<C64>),
}

/// Exact Fubini–Study Gram matrix: F_AA = A!(m−A)!/(m+1)! (Beta integrals),
/// off-diagonal zero. The oracle for the quadrature route.
pub fn cp1_gram_exact_fs(m: u32) -> GramMatrix {
    let d = m as usize + 1;
    let mut f: Matrix<CRat> = Matrix::zero(d, d);
    let mfact = factorial_rat(m as u64 + 1);
    for a in 0..d {
        let v = factorial_rat(a as u64) * factorial_rat((m as usize - a) as u64) / &mfact;
        *f.at_mut(a, a) = CRat::from_rat(v);
    }
    GramMatrix {
        m,
        entries: GramEntries::Exact(f),
    }
}

/// Gauss–Legendre nodes and weights on [0, 1] (Newton on the Legendre
/// recurrence; deterministic).
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Initial guess: Chebyshev-like.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and P'_n(x) by recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = 0.5 * (1.0 - x); // descending x → ascending node order
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    // Ensure ascending order for the fixed summation contract.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| nodes[a].partial_cmp(&nodes[b]).unwrap());
    let nodes_sorted: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
    let weights_sorted: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
    (nodes_sorted, weights_sorted)
}

/// Gram matrix of z^A under the weight, by radial Gauss–Legendre after the
/// substitution t = u/(1−u) times a uniform angular rule. Summation order is
/// radial-major ascending for bit-reproducibility.
pub fn cp1_gram(
    spec: &WeightSpec,
    m: u32,
    quad: QuadratureSpec,
) -> Result<GramMatrix, VerifyError> {
    if quad.radial < 2 || quad.angular < 1 {
        return Err(VerifyError::BadSpec(
            "quadrature needs ≥2 radial and ≥1 angular nodes".into(),
        ));
    }
    let d = m as usize + 1;
    let (nodes, weights) = gauss_legendre_unit(quad.radial);
    let mut f: Matrix<C64> = Matrix::zero(d, d);
    match spec.mode {
        PerturbationMode::Sym => {
            // Angular orthogonality is exact: only diagonals survive.
            for a in 0..d {
                let mut acc = 0.0f64;
                for (u, w) in nodes.iter().zip(&weights) {
                    let t = u / (1.0 - u);
                    let z = C64::new(t.sqrt(), 0.0);
                    let g = spec.metric(z);
                    let phi = spec.phi(z);
                    // t^A e^{-mφ} in log space: t^A alone overflows f64 for
                    // large m even though the product is tiny.
                    let val =
                        (a as f64 * t.ln() - m as f64 * phi).exp() * g / ((1.0 - u) * (1.0 - u));
                    acc += w * val;
                }
                *f.at_mut(a, a) = C64::new(acc, 0.0);
            }
        }
        PerturbationMode::Freq(_) => {
            // Full tensor rule; fill A ≤ B and mirror for exact Hermiticity.
            let n_ang = quad.angular;
            for a in 0..d {
                for b in a..d {
                    let mut acc = C64::zero();
                    for (u, w) in nodes.iter().zip(&weights) {
                        let t = u / (1.0 - u);
                        let r = t.sqrt();
                        let jac = 1.0 / ((1.0 - u) * (1.0 - u));
                        let mut ang = C64::zero();
                        for jth in 0..n_ang {
                            let theta = 2.0 * PI * jth as f64 / n_ang as f64;
                            let z = C64::from_polar(r, theta);
                            let g = spec.metric(z);
                            let phi = spec.phi(z);
                            // r^{A+B} e^{-mφ} in log space, phase separate.
                            let mag = (((a + b) as f64) * 0.5 * t.ln() - m as f64 * phi).exp();
                            let phase = C64::from_polar(1.0, (a as f64 - b as f64) * theta);
                            ang += phase * (mag * g);
                        }
                        acc += ang * (*w * jac / n_ang as f64);
                    }
                    *f.at_mut(a, b) = acc;
                    *f.at_mut(b, a) = acc.conj();
                }
            }
        }
    }
    // Positive definiteness = Cholesky success.
    cholesky_c64(&f).ok_or(VerifyError::NotPositiveDefinite)?;
    Ok(GramMatrix {
        m,
        entries: GramEntries::Float(f),
    })
}

/// Hermitian Cholesky for C64 matrices; None when a pivot is ≤ 0.
fn cholesky_c64(h: &Matrix<C64>) -> Option<Matrix<C64>> {
    let n = h.rows;
    let mut l: Matrix<C64> = Matrix::zero(n, n);
    for j in 0..n {
        let mut diag = h.at(j, j).re;
        for k in 0..j {
            diag -= l.at(j, k).norm_sqr();
        }
        if diag <= 0.0 || !diag.is_finite() {
            return None;
        }
        let dj = diag.sqrt();
        *l.at_mut(j, j) = C64::new(dj, 0.0);
        for i in (j + 1)..n {
            let mut v = *h.at(i, j);
            for k in 0..j {
                v = v - *l.at(i, k) * l.at(j, k).conj();
            }
            *l.at_mut(i, j) = v * (1.0 / dj);
        }
    }
    Some(l)
}

/// Solve L L† x = b.
fn cholesky_solve(l: &Matrix<C64>, b: &[C64]) -> Vec<C64> {
    let n = l.rows;
    let mut y = vec![C64::zero(); n];
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v = v - *l.at(i, k) * y[k];
        }
        y[i] = v * (1.0 / l.at(i, i).re);
    }
    let mut x = vec![C64::zero(); n];
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in (i + 1)..n {
            v = v - l.at(k, i).conj() * x[k];
        }
        x[i] = v * (1.0 / l.at(i, i).re);
    }
    x
}

/// Bergman density Σ ||orthonormal section||² at a chart point, from the Gram
/// inverse: e^{-mφ}·⟨F⁻¹u, u⟩ with u_A = z^A. Basis-independent.
pub fn cp1_density(gram: &GramMatrix, spec: &WeightSpec, z: C64) -> Result<f64, VerifyError> {
    let m = gram.m;
    let d = m as usize + 1;
    let f = match &gram.entries {
        GramEntries::Float(f) => f.clone(),
        GramEntries::Exact(e) => Matrix::from_fn(d, d, |i, j| {
            let c = e.at(i, j);
            C64::new(rat_to_f64(&c.re), rat_to_f64(&c.im))
        }),
    };
    let l = cholesky_c64(&f).ok_or(VerifyError::NotPositiveDefinite)?;
    let u: Vec<C64> = (0..d).map(|a| z.powu(a as u32)).collect();
    let w = cholesky_solve(&l, &u);
    let mut acc = C64::zero();
    for a in 0..d {
        acc += u[a].conj() * w[a];
    }
    let weight = (-(m as f64) * spec.phi(z)).exp();
    Ok(acc.re * weight)
}

// ---------------------------------------------------------------------------
// Coefficient fitting
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct FitReport {
    /// (m, density/m) pairs, ascending in m.
    pub samples: Vec<(u32, f64)>,
    pub a1_hat: f64,
    pub a2_hat: f64,
    pub a1_ref: f64,
    pub a2_ref: f64,
    pub rel_err_a1: f64,
    pub rel_err_a2: f64,
    pub residual_norm: f64,
}

/// Least-squares fit of density/m against {1, 1/m, 1/m²} (n = 1), compared to
/// reference closed-form coefficients.
pub fn fit_coefficients(
    samples: &[(u32, f64)],
    reference: &DensityCoefficients,
) -> Result<FitReport, VerifyError> {
    let mut ms: Vec<u32> = samples.iter().map(|s| s.0).collect();
    ms.dedup();
    if samples.len() < 6 || ms.len() < samples.len() {
        return Err(VerifyError::TooFewSamples {
            needed: 6,
            got: ms.len(),
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by_key(|s| s.0);
    // Normal equations for the 3-parameter model y = b0 + b1/m + b2/m².
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(m, dens) in &sorted {
        let y = dens / m as f64;
        let row = [1.0, 1.0 / m as f64, 1.0 / (m as f64 * m as f64)];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    let b = solve3(ata, atb).ok_or(VerifyError::IllConditioned)?;
    let mut residual_norm = 0.0;
    for &(m, dens) in &sorted {
        let y = dens / m as f64;
        let yhat = b[0] + b[1] / m as f64 + b[2] / (m as f64 * m as f64);
        residual_norm += (y - yhat) * (y - yhat);
    }
    residual_norm = residual_norm.sqrt();
    let a1_ref = rat_to_f64(&reference.a1);
    let a2_ref = rat_to_f64(&reference.a2);
    let rel = |hat: f64, reference: f64| {
        if reference == 0.0 {
            hat.abs()
        } else {
            ((hat - reference) / reference).abs()
        }
    };
    Ok(FitReport {
        samples: sorted.iter().map(|&(m, d)| (m, d / m as f64)).collect(),
        a1_hat: b[1],
        a2_hat: b[2],
        a1_ref,
        a2_ref,
        rel_err_a1: rel(b[1], a1_ref),
        rel_err_a2: rel(b[2], a2_ref),
        residual_norm,
    })
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = a;
    let mut v = b;
    for col in 0..3 {
        let piv =
            (col..3).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, piv);
        v.swap(col, piv);
        for r in 0..3 {
            if r == col {
                continue;
            }
            let f = m[r][col] / m[col][col];
            for c in 0..3 {
                m[r][c] -= f * m[col][c];
            }
            v[r] -= f * v[col];
        }
    }
    Some([v[0] / m[0][0], v[1] / m[1][1], v[2] / m[2][2]])
}
