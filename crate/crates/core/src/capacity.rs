//! Quantum-capacity upper bounds for `k`-receiver restrictions of symmetric
//! broadcast channels: closed-form estimates and the transpose-diamond value
//! computed by semidefinite programming.

use serde::Serialize;

use crate::channels::{self, SymChannel};
use crate::combinat::sym_dim_usize;
use crate::diamond::{self, DiamondOptions, HermitianMap};
use crate::{Error, Result};

/// `-x log2 x - (1-x) log2(1-x)` with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Argument(format!("binary entropy needs 0 <= x <= 1, got {x}")));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    Ok(term(x) + term(1.0 - x))
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityReport {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub k: usize,
    pub d_in: usize,
    /// `(16kd/M) log2 d_+^(k) + 4 H(2kd/M)`; absent when `2kd/M > 1`.
    pub continuity_bound: Option<f64>,
    pub continuity_omitted: bool,
    /// `min(log2(1 + 2kd d_+^(k)/M), log2(1 + 2kd d_in/M))`.
    pub transpose_bound_log: f64,
    /// `min(2kd d_+^(k)/M, 2kd d_in/M)`. With base-2 logarithms this sits
    /// below `transpose_bound_log` whenever its argument is below 1, so it is
    /// reported but not used in `min_bound`.
    pub transpose_bound_linear: f64,
    /// `transpose_bound_linear / ln 2`, which does dominate the log form.
    pub transpose_bound_linear_sound: f64,
    /// Minimum of the continuity bound (when defined) and the log bound.
    pub min_bound: f64,
    pub computed_transpose_diamond: Option<f64>,
}

pub fn capacity_bounds(d: usize, m: usize, k: usize, d_in: usize) -> Result<CapacityReport> {
    if d < 1 || m < 1 || k < 1 || d_in < 1 {
        return Err(Error::Argument("d, M, k and d_in must all be >= 1".into()));
    }
    let dk = sym_dim_usize(d, k)? as f64;
    let eps = (2 * k * d) as f64 / m as f64;
    let continuity_bound = if eps <= 1.0 {
        Some(16.0 * (k * d) as f64 / m as f64 * dk.log2() + 4.0 * binary_entropy(eps)?)
    } else {
        None
    };
    let lin_out = eps * dk;
    let lin_in = eps * d_in as f64;
    let transpose_bound_linear = lin_out.min(lin_in);
    let transpose_bound_log = lin_out.ln_1p().min(lin_in.ln_1p()) / std::f64::consts::LN_2;
    let min_bound = continuity_bound.map_or(transpose_bound_log, |c| c.min(transpose_bound_log));
    Ok(CapacityReport {
        d,
        m,
        k,
        d_in,
        continuity_bound,
        continuity_omitted: continuity_bound.is_none(),
        transpose_bound_log,
        transpose_bound_linear,
        transpose_bound_linear_sound: transpose_bound_linear / std::f64::consts::LN_2,
        min_bound,
        computed_transpose_diamond: None,
    })
}

/// `log2 ‖E_k ∘ Θ_in‖_⋄`, with `Θ_in` the transposition in the canonical
/// occupation basis of the input. Returns the certified SDP upper value.
pub fn transpose_diamond(e_k: &SymChannel, opts: &DiamondOptions) -> Result<f64> {
    let map = HermitianMap::from_channel(&e_k.compose_input_transpose());
    let cert = diamond::sdp_upper(&map, opts.tol_sdp)?;
    Ok(cert.upper.log2())
}

/// Bounds for the identity broadcast on `(H^{⊗M})_+` together with the
/// computed transpose-diamond value of its `k`-receiver restriction.
pub fn identity_broadcast_report(d: usize, m: usize, k: usize, opts: &DiamondOptions) -> Result<CapacityReport> {
    let mut report = capacity_bounds(d, m, k, sym_dim_usize(d, m)?)?;
    let restriction = channels::trace_channel(d, m, k)?;
    report.computed_transpose_diamond = Some(transpose_diamond(&restriction, opts)?);
    Ok(report)
}
