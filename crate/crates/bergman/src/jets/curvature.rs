//! Curvature of a Kähler metric from a potential series, and every pointwise
//! scalar invariant the density coefficients need.
//!
//! Conventions (all signs matter and are pinned by the CP^n golden values):
//!
//!   g_{ij̄}   = ∂²φ/∂z_i∂z̄_j                     (φ = |z|² − ξ for a jet)
//!   R_{ij̄kl̄} = ∂²g_{ij̄}/∂z_k∂z̄_l − g^{pq̄} (∂_k g_{iq̄})(∂_l̄ g_{pj̄})
//!   R_{ij̄}   = −g^{kl̄} R_{ij̄kl̄}                 (so CP^n has ρ = n(n+1) > 0)
//!   ρ        = g^{ij̄} R_{ij̄}
//!   Δf       = g^{ij̄} ∂²f/∂z_i∂z̄_j
//!
//! Covariant derivatives use Γ^s_{ip} = g^{st̄} ∂_p g_{it̄} on unbarred slots
//! and the conjugate symbols on barred slots. Everything is computed as a
//! truncated series around the base point in whatever holomorphic coordinates
//! the potential is given in — the contractions carry the full g^{ij̄} series,
//! so the same code evaluates invariants in K-gauge and in general gauge
//! (which is how gauge invariance of the normalization is tested).

use super::{JetError, PotentialJet};
use crate::moments::Matrix;
use crate::poly::TruncPoly;
use crate::scalar::{CRat, Rat};
use num_traits::{Signed, Zero};

/// Pointwise curvature scalars entering a₁, a₂, a₃.
///
/// `cross_r_d2ric` is Σ R_{jīlk̄} R_{ij̄,kl̄} (second covariant derivative of
/// the Ricci tensor, ∇_k then ∇_l̄). The div-div quantities contract the
/// derivative index of each divergence against the tensor slot with the full
/// inverse metric, outermost derivative last:
/// divdiv_r_ric = Σ (R_{ij̄kl̄}R_{jī})_{,l k̄} and
/// divdiv_rho_ric = Σ (ρ R_{jī})_{,j̄ i}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarInvariants {
    pub rho: Rat,
    pub lap_rho: Rat,
    pub laplap_rho: Rat,
    pub norm_r2: Rat,
    pub norm_ric2: Rat,
    pub norm_drho2: Rat,
    pub norm_dric2: Rat,
    pub norm_dr2: Rat,
    pub sigma1_r: Rat,
    pub sigma2_r: Rat,
    pub sigma3_ric: Rat,
    pub ric_r_r: Rat,
    pub r_ric_ric: Rat,
    pub divdiv_r_ric: Rat,
    pub divdiv_rho_ric: Rat,
    pub ric_hess_rho: Rat,
    pub cross_r_d2ric: Rat,
    pub lap_norm_r2: Rat,
    pub lap_norm_ric2: Rat,
    pub lap_rho2: Rat,
}

impl ScalarInvariants {
    pub fn all_zero(&self) -> bool {
        let z = Rat::zero();
        [
            &self.rho,
            &self.lap_rho,
            &self.laplap_rho,
            &self.norm_r2,
            &self.norm_ric2,
            &self.norm_drho2,
            &self.norm_dric2,
            &self.norm_dr2,
            &self.sigma1_r,
            &self.sigma2_r,
            &self.sigma3_ric,
            &self.ric_r_r,
            &self.r_ric_ric,
            &self.divdiv_r_ric,
            &self.divdiv_rho_ric,
            &self.ric_hess_rho,
            &self.cross_r_d2ric,
            &self.lap_norm_r2,
            &self.lap_norm_ric2,
            &self.lap_rho2,
        ]
        .iter()
        .all(|r| **r == z)
    }
}

/// The subset computable from a degree-6 jet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct A2Invariants {
    pub rho: Rat,
    pub lap_rho: Rat,
    pub norm_r2: Rat,
    pub norm_ric2: Rat,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Slot {
    Holo,
    Anti,
}

/// A tensor field near the origin: one truncated series per component, with a
/// barred/unbarred tag per index slot.
#[derive(Clone)]
pub struct TensorSeries {
    pub n: usize,
    pub slots: Vec<Slot>,
    pub entries: Vec<TruncPoly>,
}

impl TensorSeries {
    fn flat(&self, idx: &[usize]) -> usize {
        let mut f = 0;
        for &i in idx {
            f = f * self.n + i;
        }
        f
    }

    pub fn from_fn(n: usize, slots: Vec<Slot>, f: impl Fn(&[usize]) -> TruncPoly) -> Self {
        let rank = slots.len();
        let count = n.pow(rank as u32);
        let mut entries = Vec::with_capacity(count);
        let mut idx = vec![0usize; rank];
        for flat in 0..count {
            let mut rem = flat;
            for s in (0..rank).rev() {
                idx[s] = rem % n;
                rem /= n;
            }
            entries.push(f(&idx));
        }
        TensorSeries { n, slots, entries }
    }

    pub fn get(&self, idx: &[usize]) -> &TruncPoly {
        &self.entries[self.flat(idx)]
    }

    pub fn conj(&self) -> TensorSeries {
        TensorSeries {
            n: self.n,
            slots: self
                .slots
                .iter()
                .map(|s| match s {
                    Slot::Holo => Slot::Anti,
                    Slot::Anti => Slot::Holo,
                })
                .collect(),
            entries: self.entries.iter().map(|e| e.conj()).collect(),
        }
    }

    /// Covariant derivative; the direction becomes a new trailing slot
    /// (Holo for ∇_p, Anti for ∇_p̄).
    pub fn covd(&self, ctx: &MetricCtx, holo_dir: bool, cap: i64) -> TensorSeries {
        let n = self.n;
        let rank = self.slots.len();
        let mut slots = self.slots.clone();
        slots.push(if holo_dir { Slot::Holo } else { Slot::Anti });
        TensorSeries::from_fn(n, slots, |idx| {
            let base = &idx[..rank];
            let p = idx[rank];
            let entry = self.get(base);
            let mut out = if holo_dir {
                entry.d_z(p)
            } else {
                entry.d_zbar(p)
            };
            for (s, kind) in self.slots.iter().enumerate() {
                let acts = match (kind, holo_dir) {
                    (Slot::Holo, true) | (Slot::Anti, false) => true,
                    _ => false,
                };
                if !acts {
                    continue;
                }
                let mut swapped = base.to_vec();
                for t in 0..n {
                    swapped[s] = t;
                    let gamma = if holo_dir {
                        ctx.gamma(t, base[s], p)
                    } else {
                        ctx.gamma_bar(t, base[s], p)
                    };
                    let term = gamma.mul(self.get(&swapped), Some(cap));
                    out = out.sub(&term);
                }
            }
            out.capped(cap)
        })
    }

    /// Values at the origin as a dense array (requires each entry to be known
    /// at least to degree 0).
    pub fn at_origin(&self, what: &str) -> Result<OriginVals, JetError> {
        let mut vals = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            e.require_degree(0, what)?;
            vals.push(e.at_origin());
        }
        Ok(OriginVals {
            n: self.n,
            slots: self.slots.clone(),
            vals,
        })
    }
}

/// Component values of a tensor at the base point.
#[derive(Clone, Debug)]
pub struct OriginVals {
    pub n: usize,
    pub slots: Vec<Slot>,
    pub vals: Vec<CRat>,
}

impl OriginVals {
    pub fn get(&self, idx: &[usize]) -> &CRat {
        let mut f = 0;
        for &i in idx {
            f = f * self.n + i;
        }
        &self.vals[f]
    }
}

/// Metric context: inverse metric and Christoffel symbols as series.
pub struct MetricCtx {
    pub n: usize,
    g: Vec<TruncPoly>,
    ginv: Vec<TruncPoly>,
    gamma_v: Vec<TruncPoly>,
    gamma_bar_v: Vec<TruncPoly>,
    g0inv: Vec<CRat>,
    pub g0_is_identity: bool,
}

impl MetricCtx {
    pub fn g(&self, i: usize, j: usize) -> &TruncPoly {
        &self.g[i * self.n + j]
    }

    /// g^{a b̄} as a series.
    pub fn ginv(&self, a: usize, b: usize) -> &TruncPoly {
        &self.ginv[a * self.n + b]
    }

    /// Γ^s_{ip}.
    pub fn gamma(&self, s: usize, i: usize, p: usize) -> &TruncPoly {
        &self.gamma_v[(s * self.n + i) * self.n + p]
    }

    /// Conjugate symbols for barred slots.
    pub fn gamma_bar(&self, s: usize, i: usize, p: usize) -> &TruncPoly {
        &self.gamma_bar_v[(s * self.n + i) * self.n + p]
    }

    /// g^{a b̄}(0).
    pub fn g0inv(&self, a: usize, b: usize) -> &CRat {
        &self.g0inv[a * self.n + b]
    }
}

const METRIC_CAP: i64 = 6;
const GAMMA_CAP: i64 = 5;
const CURV_CAP: i64 = 4;

/// Build the metric context from φ with g = ∂∂̄φ. Fails on a non-positive
/// (1,1) part at the origin.
pub fn metric_ctx(phi: &TruncPoly) -> Result<MetricCtx, JetError> {
    let n = phi.n();
    let mut g = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            g.push(phi.d_z(i).d_zbar(j).capped(METRIC_CAP));
        }
    }
    for e in &g {
        e.require_degree(0, "metric from potential")?;
    }
    // Constant part: Hermitian positive definite.
    let g0 = Matrix::from_fn(n, n, |i, j| g[i * n + j].at_origin());
    if !g0.is_hermitian() {
        return Err(JetError::NotReal);
    }
    hermitian_pd_check(&g0)?;
    let m0 = g0.inverse().map_err(|_| JetError::SingularMetric)?;
    let g0_is_identity = g0 == Matrix::identity(n);

    // Series inverse: G(z)^{-1} = (Σ_k F^k) G0^{-1} with F = I − G0^{-1} G(z).
    let mut f = vec![TruncPoly::zero(n, METRIC_CAP); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = if i == j {
                TruncPoly::constant(n, CRat::one())
            } else {
                TruncPoly::zero(n, crate::poly::EXACT)
            };
            for k in 0..n {
                let prod = g[k * n + j].scale(m0.at(i, k));
                acc = acc.sub(&prod);
            }
            f[i * n + j] = acc.capped(METRIC_CAP);
        }
    }
    debug_assert!(f.iter().all(|e| e.valuation_lb() >= 1));
    let mut neumann: Vec<TruncPoly> = (0..n * n)
        .map(|idx| {
            if idx / n == idx % n {
                TruncPoly::constant(n, CRat::one()).capped(f[idx].known)
            } else {
                TruncPoly::zero(n, f[idx].known)
            }
        })
        .collect();
    let mut fpow = f.clone();
    loop {
        let min_val = fpow
            .iter()
            .map(|e| e.valuation_lb())
            .min()
            .unwrap_or(i64::MAX);
        if min_val > METRIC_CAP || fpow.iter().all(|e| e.is_zero()) {
            break;
        }
        for i in 0..n * n {
            neumann[i] = neumann[i].add(&fpow[i]);
        }
        // fpow ← F · fpow
        let mut next = vec![TruncPoly::zero(n, METRIC_CAP); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = TruncPoly::zero(n, crate::poly::EXACT);
                for k in 0..n {
                    acc = acc.add(&f[i * n + k].mul(&fpow[k * n + j], Some(METRIC_CAP)));
                }
                next[i * n + j] = acc;
            }
        }
        fpow = next;
    }
    // Matrix inverse M(z) = Neumann·G0^{-1}, then g^{ab̄}(z) = M(z)[b][a].
    let mut minv = vec![TruncPoly::zero(n, METRIC_CAP); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = TruncPoly::zero(n, crate::poly::EXACT);
            for k in 0..n {
                acc = acc.add(&neumann[i * n + k].scale(m0.at(k, j)));
            }
            minv[i * n + j] = acc;
        }
    }
    let mut ginv = vec![TruncPoly::zero(n, METRIC_CAP); n * n];
    for a in 0..n {
        for b in 0..n {
            ginv[a * n + b] = minv[b * n + a].clone();
        }
    }
    let g0inv: Vec<CRat> = (0..n * n).map(|idx| ginv[idx].at_origin()).collect();

    // Γ^s_{ip} = g^{st̄} ∂_p g_{it̄}.
    let mut gamma_v = vec![TruncPoly::zero(n, GAMMA_CAP); n * n * n];
    for s in 0..n {
        for i in 0..n {
            for p in 0..n {
                let mut acc = TruncPoly::zero(n, crate::poly::EXACT);
                for t in 0..n {
                    acc = acc.add(&ginv[s * n + t].mul(&g[i * n + t].d_z(p), Some(GAMMA_CAP)));
                }
                gamma_v[(s * n + i) * n + p] = acc;
            }
        }
    }
    let gamma_bar_v = gamma_v.iter().map(|e| e.conj()).collect();
    Ok(MetricCtx {
        n,
        g,
        ginv,
        gamma_v,
        gamma_bar_v,
        g0inv,
        g0_is_identity,
    })
}

fn hermitian_pd_check(h: &Matrix<CRat>) -> Result<(), JetError> {
    // LDL* pivots must all be positive.
    let n = h.rows;
    let mut l = vec![vec![CRat::zero(); n]; n];
    let mut d = vec![Rat::zero(); n];
    for j in 0..n {
        let mut dj = h.at(j, j).expect_real("diagonal of Hermitian matrix");
        for k in 0..j {
            dj -= l[j][k].norm_sqr() * &d[k];
        }
        if !dj.is_positive() {
            return Err(JetError::SingularMetric);
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let mut v = h.at(i, j).clone();
            for k in 0..j {
                let t = &l[i][k] * &l[j][k].conj();
                v = &v - &t.scale(&d[k]);
            }
            l[i][j] = v.scale(&(Rat::one() / &d[j]));
        }
    }
    Ok(())
}

use num_traits::One;

/// Curvature tensor R_{ij̄kl̄} as series, carried to degree 4.
pub fn curvature_tensor(ctx: &MetricCtx) -> TensorSeries {
    let n = ctx.n;
    TensorSeries::from_fn(
        n,
        vec![Slot::Holo, Slot::Anti, Slot::Holo, Slot::Anti],
        |idx| {
            let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            let mut out = ctx.g(i, j).d_z(k).d_zbar(l).capped(CURV_CAP);
            for p in 0..n {
                for q in 0..n {
                    let t = ctx
                        .ginv(p, q)
                        .mul(&ctx.g(i, q).d_z(k), Some(CURV_CAP))
                        .mul(&ctx.g(p, j).d_zbar(l), Some(CURV_CAP));
                    out = out.sub(&t);
                }
            }
            out
        },
    )
}

/// Ricci tensor R_{ij̄} = −g^{kl̄} R_{ij̄kl̄}.
pub fn ricci_tensor(ctx: &MetricCtx, r: &TensorSeries) -> TensorSeries {
    let n = ctx.n;
    TensorSeries::from_fn(n, vec![Slot::Holo, Slot::Anti], |idx| {
        let mut acc = TruncPoly::zero(n, crate::poly::EXACT);
        for k in 0..n {
            for l in 0..n {
                acc = acc.add(
                    &ctx.ginv(k, l)
                        .mul(r.get(&[idx[0], idx[1], k, l]), Some(CURV_CAP)),
                );
            }
        }
        acc.neg()
    })
}

/// Scalar curvature ρ = g^{ij̄} R_{ij̄} as a series.
pub fn scalar_curvature(ctx: &MetricCtx, ric: &TensorSeries) -> TruncPoly {
    let n = ctx.n;
    let mut acc = TruncPoly::zero(n, crate::poly::EXACT);
    for i in 0..n {
        for j in 0..n {
            acc = acc.add(&ctx.ginv(i, j).mul(ric.get(&[i, j]), Some(CURV_CAP)));
        }
    }
    acc
}

/// Δf = g^{ij̄} ∂_i ∂_j̄ f with the full inverse-metric series.
pub fn laplacian(ctx: &MetricCtx, f: &TruncPoly, cap: i64) -> TruncPoly {
    let n = ctx.n;
    let mut acc = TruncPoly::zero(n, crate::poly::EXACT);
    for i in 0..n {
        for j in 0..n {
            acc = acc.add(&ctx.ginv(i, j).mul(&f.d_z(i).d_zbar(j), Some(cap)));
        }
    }
    acc.capped(cap)
}

/// Pointwise squared norm of a tensor as a scalar field:
/// ⟨T, T⟩ = Σ T_A conj(T)_B Π_s w_s with w_s = g^{A_s B̄_s} on Holo slots and
/// g^{B_s Ā_s} on Anti slots.
pub fn norm_field(t: &TensorSeries, ctx: &MetricCtx, cap: i64) -> TruncPoly {
    let n = ctx.n;
    let rank = t.slots.len();
    let count = n.pow(rank as u32);
    let c = t.conj();
    let mut acc = TruncPoly::zero(n, crate::poly::EXACT);
    let decode = |mut f: usize| {
        let mut idx = vec![0usize; rank];
        for s in (0..rank).rev() {
            idx[s] = f % n;
            f /= n;
        }
        idx
    };
    for fa in 0..count {
        let a_entry = &t.entries[fa];
        if a_entry.is_zero() {
            continue;
        }
        let ia = decode(fa);
        for fb in 0..count {
            let b_entry = &c.entries[fb];
            if b_entry.is_zero() {
                continue;
            }
            let ib = decode(fb);
            let mut term = a_entry.mul(b_entry, Some(cap));
            for s in 0..rank {
                if term.is_zero() {
                    break;
                }
                let w = match t.slots[s] {
                    Slot::Holo => ctx.ginv(ia[s], ib[s]),
                    Slot::Anti => ctx.ginv(ib[s], ia[s]),
                };
                term = term.mul(w, Some(cap));
            }
            acc = acc.add(&term);
        }
    }
    acc.capped(cap)
}

/// T_{kl̄} = Σ R_{ij̄kl̄} Ric_{jī} with full metric contractions (the tensor
/// whose double divergence is divdiv_r_ric).
fn r_contract_ric_field(
    r: &TensorSeries,
    ric: &TensorSeries,
    ctx: &MetricCtx,
    cap: i64,
) -> TensorSeries {
    let n = ctx.n;
    TensorSeries::from_fn(n, vec![Slot::Holo, Slot::Anti], |idx| {
        let (k, l) = (idx[0], idx[1]);
        let mut acc = TruncPoly::zero(n, crate::poly::EXACT);
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        // pair R.i (holo) with Ric.b̄ (anti): g^{i b̄};
                        // pair Ric.a (holo) with R.j̄ (anti): g^{a j̄}.
                        let term = r
                            .get(&[i, j, k, l])
                            .mul(ric.get(&[a, b]), Some(cap))
                            .mul(ctx.ginv(i, b), Some(cap))
                            .mul(ctx.ginv(a, j), Some(cap));
                        acc = acc.add(&term);
                    }
                }
            }
        }
        acc.capped(cap)
    })
}

/// First divergence over the Anti slot `anti_slot` of a rank-r tensor:
/// contracts a new holomorphic covariant derivative against that slot.
fn div_on_anti(t: &TensorSeries, anti_slot: usize, ctx: &MetricCtx, cap: i64) -> TensorSeries {
    assert_eq!(t.slots[anti_slot], Slot::Anti);
    let n = ctx.n;
    let d = t.covd(ctx, true, cap); // new trailing Holo slot
    let rank = t.slots.len();
    let mut slots = t.slots.clone();
    slots.remove(anti_slot);
    TensorSeries::from_fn(n, slots, |rest| {
        let mut acc = TruncPoly::zero(n, crate::poly::EXACT);
        for dir in 0..n {
            for l in 0..n {
                let mut idx = Vec::with_capacity(rank + 1);
                let mut rpos = 0;
                for s in 0..rank {
                    if s == anti_slot {
                        idx.push(l);
                    } else {
                        idx.push(rest[rpos]);
                        rpos += 1;
                    }
                }
                idx.push(dir);
                acc = acc.add(&ctx.ginv(dir, l).mul(d.get(&idx), Some(cap)));
            }
        }
        acc.capped(cap)
    })
}

/// First divergence over the Holo slot: contracts a new antiholomorphic
/// covariant derivative against that slot.
fn div_on_holo(t: &TensorSeries, holo_slot: usize, ctx: &MetricCtx, cap: i64) -> TensorSeries {
    assert_eq!(t.slots[holo_slot], Slot::Holo);
    let n = ctx.n;
    let d = t.covd(ctx, false, cap); // new trailing Anti slot
    let rank = t.slots.len();
    let mut slots = t.slots.clone();
    slots.remove(holo_slot);
    TensorSeries::from_fn(n, slots, |rest| {
        let mut acc = TruncPoly::zero(n, crate::poly::EXACT);
        for k in 0..n {
            for dir in 0..n {
                let mut idx = Vec::with_capacity(rank + 1);
                let mut rpos = 0;
                for s in 0..rank {
                    if s == holo_slot {
                        idx.push(k);
                    } else {
                        idx.push(rest[rpos]);
                        rpos += 1;
                    }
                }
                idx.push(dir);
                acc = acc.add(&ctx.ginv(k, dir).mul(d.get(&idx), Some(cap)));
            }
        }
        acc.capped(cap)
    })
}

/// Contract a product of origin tensors along `pairs` of (holo, anti) slot
/// references, each pairing weighted by g^{ab̄}(0). With an identity metric
/// the pairing degenerates to index matching.
pub fn contract_at_origin(
    tensors: &[&OriginVals],
    pairs: &[((usize, usize), (usize, usize))],
    ctx: &MetricCtx,
) -> CRat {
    let n = ctx.n;
    // Every slot of every tensor must appear exactly once.
    #[cfg(debug_assertions)]
    {
        let mut seen: Vec<Vec<bool>> = tensors.iter().map(|t| vec![false; t.slots.len()]).collect();
        for ((th, sh), (ta, sa)) in pairs {
            assert_eq!(tensors[*th].slots[*sh], Slot::Holo);
            assert_eq!(tensors[*ta].slots[*sa], Slot::Anti);
            assert!(!seen[*th][*sh] && !seen[*ta][*sa]);
            seen[*th][*sh] = true;
            seen[*ta][*sa] = true;
        }
        assert!(seen.iter().all(|v| v.iter().all(|&b| b)));
    }
    let np = pairs.len();
    let identity = ctx.g0_is_identity;
    let mut total = CRat::zero();
    let combos: usize = if identity {
        n.pow(np as u32)
    } else {
        n.pow(2 * np as u32)
    };
    let mut hv = vec![0usize; np];
    let mut av = vec![0usize; np];
    for combo in 0..combos {
        let mut rem = combo;
        if identity {
            for s in 0..np {
                hv[s] = rem % n;
                av[s] = hv[s];
                rem /= n;
            }
        } else {
            for s in 0..np {
                hv[s] = rem % n;
                rem /= n;
                av[s] = rem % n;
                rem /= n;
            }
        }
        let mut term = CRat::one();
        if !identity {
            for s in 0..np {
                term = &term * ctx.g0inv(hv[s], av[s]);
                if term.is_zero() {
                    break;
                }
            }
            if term.is_zero() {
                continue;
            }
        }
        let mut ok = true;
        let mut indices: Vec<Vec<usize>> = tensors
            .iter()
            .map(|t| vec![0usize; t.slots.len()])
            .collect();
        for (p, ((th, sh), (ta, sa))) in pairs.iter().enumerate() {
            indices[*th][*sh] = hv[p];
            indices[*ta][*sa] = av[p];
        }
        for (t, idx) in tensors.iter().zip(&indices) {
            let v = t.get(idx);
            if v.is_zero() {
                ok = false;
                break;
            }
            term = &term * v;
        }
        if ok {
            total += &term;
        }
    }
    total
}

fn realize(c: CRat, what: &str) -> Result<Rat, JetError> {
    if c.im.is_zero() {
        Ok(c.re)
    } else {
        Err(JetError::Internal(format!(
            "{what} came out non-real: {c:?}"
        )))
    }
}

/// All curvature data the invariant assembly needs, kept around so expansion
/// terms and identity checks can share one metric/curvature computation.
pub struct CurvatureData {
    pub ctx: MetricCtx,
    pub r: TensorSeries,
    pub ric: TensorSeries,
    pub rho: TruncPoly,
}

pub fn curvature_data(phi: &TruncPoly) -> Result<CurvatureData, JetError> {
    let ctx = metric_ctx(phi)?;
    let r = curvature_tensor(&ctx);
    let ric = ricci_tensor(&ctx, &r);
    let rho = scalar_curvature(&ctx, &ric);
    Ok(CurvatureData { ctx, r, ric, rho })
}

/// The full invariant dictionary from a potential series. Needs data to total
/// degree 8; each field reports its own truncation shortfall by name.
pub fn invariants_from_potential(phi: &TruncPoly) -> Result<ScalarInvariants, JetError> {
    let data = curvature_data(phi)?;
    invariants_from_data(&data)
}

pub fn invariants_from_data(data: &CurvatureData) -> Result<ScalarInvariants, JetError> {
    let ctx = &data.ctx;
    let r = &data.r;
    let ric = &data.ric;
    let rho = &data.rho;
    let n = ctx.n;

    rho.require_degree(0, "rho")?;
    let rho0 = realize(rho.at_origin(), "rho")?;

    let lap_rho_series = laplacian(ctx, rho, 2);
    lap_rho_series.require_degree(0, "lap_rho")?;
    let lap_rho = realize(lap_rho_series.at_origin(), "lap_rho")?;

    let laplap_series = laplacian(ctx, &lap_rho_series, 0);
    laplap_series.require_degree(0, "laplap_rho")?;
    let laplap_rho = realize(laplap_series.at_origin(), "laplap_rho")?;

    // Origin tensors.
    let r0 = r.at_origin("curvature tensor")?;
    let ric0 = ric.at_origin("Ricci tensor")?;
    let drho = TensorSeries::from_fn(n, vec![Slot::Holo], |idx| rho.d_z(idx[0]).capped(0));
    let drho0 = drho.at_origin("D'rho")?;
    let dric = ric.covd(ctx, true, 0);
    let dric0 = dric.at_origin("D'Ric")?;
    let dr = r.covd(ctx, true, 0);
    let dr0 = dr.at_origin("D'R")?;
    let ddric = ric.covd(ctx, true, 1).covd(ctx, false, 0);
    let ddric0 = ddric.at_origin("Ric second covariant derivative")?;
    let hess_rho = TensorSeries::from_fn(n, vec![Slot::Holo, Slot::Anti], |idx| {
        rho.d_z(idx[0]).d_zbar(idx[1]).capped(0)
    });
    let hess_rho0 = hess_rho.at_origin("Hessian of rho")?;

    // Norm-type invariants.
    let norm_r2 = realize(
        contract_at_origin(
            &[&r0, &r0.conj_vals()],
            &[
                ((0, 0), (1, 0)),
                ((1, 1), (0, 1)),
                ((0, 2), (1, 2)),
                ((1, 3), (0, 3)),
            ],
            ctx,
        ),
        "norm_r2",
    )?;
    let norm_ric2 = realize(
        contract_at_origin(
            &[&ric0, &ric0.conj_vals()],
            &[((0, 0), (1, 0)), ((1, 1), (0, 1))],
            ctx,
        ),
        "norm_ric2",
    )?;
    let norm_drho2 = realize(
        contract_at_origin(&[&drho0, &drho0.conj_vals()], &[((0, 0), (1, 0))], ctx),
        "norm_drho2",
    )?;
    let norm_dric2 = realize(
        contract_at_origin(
            &[&dric0, &dric0.conj_vals()],
            &[((0, 0), (1, 0)), ((1, 1), (0, 1)), ((0, 2), (1, 2))],
            ctx,
        ),
        "norm_dric2",
    )?;
    let norm_dr2 = realize(
        contract_at_origin(
            &[&dr0, &dr0.conj_vals()],
            &[
                ((0, 0), (1, 0)),
                ((1, 1), (0, 1)),
                ((0, 2), (1, 2)),
                ((1, 3), (0, 3)),
                ((0, 4), (1, 4)),
            ],
            ctx,
        ),
        "norm_dr2",
    )?;

    // σ invariants and mixed contractions.
    let sigma1_r = realize(
        contract_at_origin(
            &[&r0, &r0, &r0],
            &[
                ((0, 0), (2, 3)), // i
                ((2, 2), (0, 1)), // j
                ((0, 2), (1, 1)), // k
                ((1, 0), (0, 3)), // l
                ((1, 2), (2, 1)), // p
                ((2, 0), (1, 3)), // q
            ],
            ctx,
        ),
        "sigma1_r",
    )?;
    let sigma2_r = realize(
        contract_at_origin(
            &[&r0, &r0, &r0],
            &[
                ((0, 0), (1, 1)), // i
                ((2, 0), (0, 1)), // j
                ((0, 2), (1, 3)), // k
                ((2, 2), (0, 3)), // l
                ((1, 0), (2, 1)), // p
                ((1, 2), (2, 3)), // q
            ],
            ctx,
        ),
        "sigma2_r",
    )?;
    let sigma3_ric = realize(
        contract_at_origin(
            &[&ric0, &ric0, &ric0],
            &[((0, 0), (2, 1)), ((1, 0), (0, 1)), ((2, 0), (1, 1))],
            ctx,
        ),
        "sigma3_ric",
    )?;
    let ric_r_r = realize(
        contract_at_origin(
            &[&ric0, &r0, &r0],
            &[
                ((0, 0), (2, 1)), // i
                ((1, 0), (0, 1)), // j
                ((2, 0), (1, 1)), // k
                ((1, 2), (2, 3)), // p
                ((2, 2), (1, 3)), // q
            ],
            ctx,
        ),
        "ric_r_r",
    )?;
    let r_ric_ric = realize(
        contract_at_origin(
            &[&r0, &ric0, &ric0],
            &[
                ((0, 0), (1, 1)), // i
                ((1, 0), (0, 1)), // j
                ((0, 2), (2, 1)), // k
                ((2, 0), (0, 3)), // l
            ],
            ctx,
        ),
        "r_ric_ric",
    )?;
    let ric_hess_rho = realize(
        contract_at_origin(
            &[&ric0, &hess_rho0],
            &[((0, 0), (1, 1)), ((1, 0), (0, 1))],
            ctx,
        ),
        "ric_hess_rho",
    )?;
    let cross_r_d2ric = realize(
        contract_at_origin(
            &[&r0, &ddric0],
            &[
                ((0, 0), (1, 1)), // j: R_{j ī l k̄} vs DDRic_{i j̄ k l̄}
                ((1, 0), (0, 1)), // i
                ((0, 2), (1, 3)), // l
                ((1, 2), (0, 3)), // k
            ],
            ctx,
        ),
        "cross_r_d2ric",
    )?;

    // Laplacians of norm fields.
    let r2_field = norm_field(r, ctx, 2);
    let lap_r2_series = laplacian(ctx, &r2_field, 0);
    lap_r2_series.require_degree(0, "lap_norm_r2")?;
    let lap_norm_r2 = realize(lap_r2_series.at_origin(), "lap_norm_r2")?;

    let ric2_field = norm_field(ric, ctx, 2);
    let lap_ric2_series = laplacian(ctx, &ric2_field, 0);
    lap_ric2_series.require_degree(0, "lap_norm_ric2")?;
    let lap_norm_ric2 = realize(lap_ric2_series.at_origin(), "lap_norm_ric2")?;

    let rho2 = rho.mul(rho, Some(2));
    let lap_rho2_series = laplacian(ctx, &rho2, 0);
    lap_rho2_series.require_degree(0, "lap_rho2")?;
    let lap_rho2 = realize(lap_rho2_series.at_origin(), "lap_rho2")?;

    // Double divergences.
    let t_rric = r_contract_ric_field(r, ric, ctx, 2);
    let v = div_on_anti(&t_rric, 1, ctx, 1); // ∇_l first
    let dd = div_on_holo(&v, 0, ctx, 0); // then ∇_k̄
    dd.entries[0].require_degree(0, "divdiv_r_ric")?;
    let divdiv_r_ric = realize(dd.entries[0].at_origin(), "divdiv_r_ric")?;

    let s_rhoric = TensorSeries::from_fn(n, vec![Slot::Holo, Slot::Anti], |idx| {
        rho.mul(ric.get(&[idx[0], idx[1]]), Some(2))
    });
    let w = div_on_holo(&s_rhoric, 0, ctx, 1); // ∇_j̄ first
    let dd2 = div_on_anti(&w, 0, ctx, 0); // then ∇_i
    dd2.entries[0].require_degree(0, "divdiv_rho_ric")?;
    let divdiv_rho_ric = realize(dd2.entries[0].at_origin(), "divdiv_rho_ric")?;

    Ok(ScalarInvariants {
        rho: rho0,
        lap_rho,
        laplap_rho,
        norm_r2,
        norm_ric2,
        norm_drho2,
        norm_dric2,
        norm_dr2,
        sigma1_r,
        sigma2_r,
        sigma3_ric,
        ric_r_r,
        r_ric_ric,
        divdiv_r_ric,
        divdiv_rho_ric,
        ric_hess_rho,
        cross_r_d2ric,
        lap_norm_r2,
        lap_norm_ric2,
        lap_rho2,
    })
}

impl OriginVals {
    /// Componentwise conjugate with flipped slot tags.
    pub fn conj_vals(&self) -> OriginVals {
        OriginVals {
            n: self.n,
            slots: self
                .slots
                .iter()
                .map(|s| match s {
                    Slot::Holo => Slot::Anti,
                    Slot::Anti => Slot::Holo,
                })
                .collect(),
            vals: self.vals.iter().map(|c| c.conj()).collect(),
        }
    }
}

/// Full invariant dictionary of a jet (needs max_degree ≥ 8; the a₂ subset is
/// available from degree 6 via [`a2_invariants`]).
pub fn curvature_invariants(jet: &PotentialJet) -> Result<ScalarInvariants, JetError> {
    invariants_from_potential(&jet.potential())
}

/// The degree-6 subset: ρ, Δρ, |R|², |Ric|².
pub fn a2_invariants(jet: &PotentialJet) -> Result<A2Invariants, JetError> {
    let data = curvature_data(&jet.potential())?;
    let ctx = &data.ctx;
    data.rho.require_degree(0, "rho")?;
    let rho0 = realize(data.rho.at_origin(), "rho")?;
    let lap_rho_series = laplacian(ctx, &data.rho, 0);
    lap_rho_series.require_degree(0, "lap_rho")?;
    let lap_rho = realize(lap_rho_series.at_origin(), "lap_rho")?;
    let r0 = data.r.at_origin("curvature tensor")?;
    let ric0 = data.ric.at_origin("Ricci tensor")?;
    let norm_r2 = realize(
        contract_at_origin(
            &[&r0, &r0.conj_vals()],
            &[
                ((0, 0), (1, 0)),
                ((1, 1), (0, 1)),
                ((0, 2), (1, 2)),
                ((1, 3), (0, 3)),
            ],
            ctx,
        ),
        "norm_r2",
    )?;
    let norm_ric2 = realize(
        contract_at_origin(
            &[&ric0, &ric0.conj_vals()],
            &[((0, 0), (1, 0)), ((1, 1), (0, 1))],
            ctx,
        ),
        "norm_ric2",
    )?;
    Ok(A2Invariants {
        rho: rho0,
        lap_rho,
        norm_r2,
        norm_ric2,
    })
}
