//! Exact computation of the large-power expansion of the Bergman density on
//! a polarized Kähler manifold, from the pointwise Taylor jet of the Kähler
//! potential.
//!
//! The density of states Σ_i ||S_i(x)||² over an orthonormal basis of
//! H⁰(M, Lᵐ) expands as mⁿ(a₀ + a₁/m + a₂/m² + a₃/m³ + …) with coefficients
//! that are universal curvature polynomials at x. This crate computes a₀–a₃
//! two independent ways and insists they agree exactly:
//!
//! * brute force — Gaussian moment integration of the truncated weight
//!   exp(mξ + log det g) term by term ([`expansion`]);
//! * closed form — the curvature polynomials evaluated on the invariant
//!   dictionary of the jet ([`jets::curvature`], [`expansion::density_coeffs_closed_form`]).
//!
//! Everything on this path is exact rational arithmetic. Floating point is
//! confined to [`verify`], which integrates actual Bergman densities on CP¹
//! by quadrature and fits the expansion against the exact coefficients.

pub mod cli;
pub mod expansion;
pub mod jets;
pub mod moments;
pub mod poly;
pub mod scalar;
pub mod verify;
