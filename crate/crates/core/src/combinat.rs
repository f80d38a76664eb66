//! Exact combinatorics behind the measure-and-prepare / cloning relations.
//!
//! Everything here works in arbitrary-precision integers and rationals;
//! conversion to `f64` happens only where a square root is involved or at
//! report boundaries.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::{Error, Result};

/// Binomial coefficient `C(n, r)`, extended by zero outside `0 <= r <= n`.
pub fn binomial(n: i64, r: i64) -> BigInt {
    if n < 0 || r < 0 || r > n {
        return BigInt::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigInt::one();
    for i in 0..r {
        acc *= BigInt::from(n - i);
        acc /= BigInt::from(i + 1);
    }
    acc
}

fn binomial_u(n: i64, r: i64) -> BigUint {
    binomial(n, r).to_biguint().expect("binomials are nonnegative")
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn check_dimension(d: u32) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidDimension("single-particle dimension d must be >= 1".into()));
    }
    Ok(())
}

/// Dimension of the symmetric subspace of `M` qudits of dimension `d`,
/// `C(d + M - 1, M)`.
pub fn sym_dim(d: u32, m: u32) -> Result<BigUint> {
    check_dimension(d)?;
    Ok(binomial_u(d as i64 + m as i64 - 1, m as i64))
}

/// [`sym_dim`] as a machine-sized integer, for matrix shapes.
pub fn sym_dim_usize(d: usize, m: usize) -> Result<usize> {
    let dim = sym_dim(d as u32, m as u32)?;
    dim.to_usize()
        .ok_or_else(|| Error::InvalidDimension(format!("symmetric dimension for d={d}, M={m} overflows")))
}

/// A finite probability distribution with exact rational entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    entries: Vec<BigRational>,
}

impl ProbabilityVector {
    pub fn new(entries: Vec<BigRational>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Argument("empty probability vector".into()));
        }
        if entries.iter().any(|p| p.is_negative()) {
            return Err(Error::Argument("negative probability".into()));
        }
        let total: BigRational = entries.iter().cloned().sum();
        if !total.is_one() {
            return Err(Error::Argument(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { entries })
    }

    /// Builds from floating-point weights, normalizing nothing; the sum must be
    /// within `1e-12` of one.
    pub fn from_f64(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!("weights {weights:?} are not a probability vector")));
        }
        let mut entries: Vec<BigRational> = weights
            .iter()
            .map(|w| BigRational::from_float(*w).expect("finite weight"))
            .collect();
        // absorb the rounding residue into the last entry
        let head: BigRational = entries[..entries.len() - 1].iter().cloned().sum();
        let last = entries.last_mut().unwrap();
        *last = BigRational::one() - head;
        if last.is_negative() {
            *last = BigRational::zero();
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(rational_to_f64).collect()
    }
}

/// Single loss weight `p_s = C(M,s) C(d+k-1, k-s) / C(d+M+k-1, k)`.
pub fn ps_weight(d: u32, m: u32, k: u32, s: u32) -> BigRational {
    let (d, m, k, s) = (d as i64, m as i64, k as i64, s as i64);
    ratio(
        binomial(m, s) * binomial(d + k - 1, k - s),
        binomial(d + m + k - 1, k),
    )
}

/// Distribution of the number `s` of surviving copies in the loss-plus-cloning
/// form of the measure-and-prepare channel, `s = 0..=min(k, M)`.
pub fn ps_distribution(d: u32, m: u32, k: u32) -> Result<ProbabilityVector> {
    check_dimension(d)?;
    if m == 0 || k == 0 {
        return Err(Error::Argument("ps_distribution needs M >= 1 and k >= 1".into()));
    }
    let entries = (0..=k.min(m)).map(|s| ps_weight(d, m, k, s)).collect();
    ProbabilityVector::new(entries)
}

/// Optimal average fidelity of estimating `M` copies into `k` copies,
/// `d_+^(M) / d_+^(M+k)`.
pub fn fidelity_est(d: u32, m: u32, k: u32) -> Result<BigRational> {
    check_dimension(d)?;
    let num = BigInt::from(sym_dim(d, m)?);
    let den = BigInt::from(sym_dim(d, m + k)?);
    Ok(ratio(num, den))
}

/// Single-copy fidelity of the universal `s -> k` cloner,
/// `s/k + (k-s)(s+1) / (k(s+d))`.
pub fn fidelity_clon(d: u32, s: u32, k: u32) -> BigRational {
    let (d, s, k) = (BigInt::from(d), BigInt::from(s), BigInt::from(k));
    ratio(s.clone(), k.clone())
        + ratio((&k - &s) * (&s + 1), &k * (&s + &d))
}

/// Analytic distance bounds for a `(d, M, k)` triple.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub d: u32,
    pub m: u32,
    pub k: u32,
    /// `2k(d+k-1)/(M+d)`.
    #[serde(serialize_with = "ser_rational")]
    pub bound_estimation_1: BigRational,
    /// `4(1 - sqrt(d_+^(M-k)/d_+^(M)))`, only for `k <= M`.
    pub bound_estimation_2_exact: Option<f64>,
    /// `2kd/M`, only for `k <= M`.
    #[serde(serialize_with = "ser_opt_rational")]
    pub bound_estimation_2_linear: Option<BigRational>,
    /// `2M(d+M-1)/(k+d)`.
    #[serde(serialize_with = "ser_rational")]
    pub bound_cloning: BigRational,
    /// `min(bound_estimation_1, bound_estimation_2_exact)`.
    pub min_estimation_bound: f64,
    /// `M(k-1) <= d^2`, the regime where the first estimation bound beats `2kd/M`.
    pub first_bound_regime: bool,
    /// Set when `k > M` and the second estimation bound is not defined.
    pub estimation_2_undefined: bool,
}

fn ser_rational<S: serde::Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(rational_to_f64(q))
}

fn ser_opt_rational<S: serde::Serializer>(
    q: &Option<BigRational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match q {
        Some(q) => s.serialize_some(&rational_to_f64(q)),
        None => s.serialize_none(),
    }
}

impl BoundReport {
    pub fn bound_estimation_1_f64(&self) -> f64 {
        rational_to_f64(&self.bound_estimation_1)
    }

    pub fn bound_cloning_f64(&self) -> f64 {
        rational_to_f64(&self.bound_cloning)
    }

    pub fn bound_estimation_2_linear_f64(&self) -> Option<f64> {
        self.bound_estimation_2_linear.as_ref().map(rational_to_f64)
    }
}

/// `4(1 - sqrt(d_+^(M-k) / d_+^(M)))` for `k <= M`.
pub fn sqrt_bound(d: u32, m: u32, k: u32) -> Result<f64> {
    if k > m {
        return Err(Error::Argument(format!("k = {k} exceeds M = {m}")));
    }
    let q = ratio(BigInt::from(sym_dim(d, m - k)?), BigInt::from(sym_dim(d, m)?));
    Ok(4.0 * (1.0 - rational_to_f64(&q).sqrt()))
}

pub fn analytic_bounds(d: u32, m: u32, k: u32) -> Result<BoundReport> {
    check_dimension(d)?;
    if m == 0 || k == 0 {
        return Err(Error::Argument("analytic_bounds needs M >= 1 and k >= 1".into()));
    }
    let (di, mi, ki) = (BigInt::from(d), BigInt::from(m), BigInt::from(k));
    let two = BigInt::from(2);
    let bound_estimation_1 = ratio(&two * &ki * (&di + &ki - 1), &mi + &di);
    let bound_cloning = ratio(&two * &mi * (&di + &mi - 1), &ki + &di);
    let (exact, linear) = if k <= m {
        (Some(sqrt_bound(d, m, k)?), Some(ratio(&two * &ki * &di, mi.clone())))
    } else {
        (None, None)
    };
    let b1 = rational_to_f64(&bound_estimation_1);
    let min_estimation_bound = exact.map_or(b1, |e| e.min(b1));
    Ok(BoundReport {
        d,
        m,
        k,
        bound_estimation_1,
        bound_estimation_2_exact: exact,
        bound_estimation_2_linear: linear,
        bound_cloning,
        min_estimation_bound,
        first_bound_regime: (m as u64) * (k as u64).saturating_sub(1) <= (d as u64) * (d as u64),
        estimation_2_undefined: k > m,
    })
}

/// `2(1 - p_s)`: the mixture bound on the distance between the
/// measure-and-prepare channel and its `s`-survivor branch.
pub fn mixture_bound(d: u32, m: u32, k: u32, s: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(2)) * (BigRational::one() - ps_weight(d, m, k, s))
}

/// Which identity failed, with the arguments that broke it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Counterexample {
    /// `sum_n (-1)^(s-n) C(s,n) C(M+n,M) = C(M,s)`.
    AlternatingSum { m: i64, s: i64, lhs: String, rhs: String },
    /// `sum_l C(s,l) C(M-s, M-s-l) = C(M,s)`.
    KleeIntermediate { m: i64, s: i64, lhs: String, rhs: String },
    /// `C(z+w, N) = sum_i C(z,i) C(w,N-i)`.
    ChuVandermonde { z: i64, w: i64, n: i64, lhs: String, rhs: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub max_m: u32,
    pub checks: u64,
    pub first_failure: Option<Counterexample>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Checks the three exact identities used to derive the mixture weights for
/// every `0 <= s <= M <= max_m` (and `0 <= z, w <= max_m` for Chu–Vandermonde).
pub fn identity_suite(max_m: u32) -> Result<IdentityReport> {
    identity_suite_with(max_m, binomial)
}

/// Same as [`identity_suite`] with a caller-chosen binomial; used to inject
/// faults when testing the reporting path.
pub fn identity_suite_with<F>(max_m: u32, binom: F) -> Result<IdentityReport>
where
    F: Fn(i64, i64) -> BigInt,
{
    if max_m == 0 {
        return Err(Error::Argument("identity suite needs max_M >= 1".into()));
    }
    let top = 2 * max_m as i64 + 1;
    let table: Vec<Vec<BigInt>> = (0..=top)
        .map(|n| (0..=n).map(|r| binom(n, r)).collect())
        .collect();
    let c = |n: i64, r: i64| -> BigInt {
        if n < 0 || r < 0 || r > n {
            BigInt::zero()
        } else {
            table[n as usize][r as usize].clone()
        }
    };

    let mut checks = 0u64;
    let mm = max_m as i64;
    for m in 0..=mm {
        for s in 0..=m {
            let rhs = c(m, s);
            let mut alt = BigInt::zero();
            for n in 0..=s {
                let term = c(s, n) * c(m + n, m);
                if (s - n) % 2 == 0 {
                    alt += term;
                } else {
                    alt -= term;
                }
            }
            checks += 1;
            if alt != rhs {
                return Ok(failure(max_m, checks, Counterexample::AlternatingSum {
                    m,
                    s,
                    lhs: alt.to_string(),
                    rhs: rhs.to_string(),
                }));
            }
            let klee: BigInt = (0..=m - s).map(|l| c(s, l) * c(m - s, m - s - l)).sum();
            checks += 1;
            if klee != rhs {
                return Ok(failure(max_m, checks, Counterexample::KleeIntermediate {
                    m,
                    s,
                    lhs: klee.to_string(),
                    rhs: rhs.to_string(),
                }));
            }
        }
    }
    for z in 0..=mm {
        for w in 0..=mm {
            for n in 0..=z + w + 1 {
                let lhs = c(z + w, n);
                let rhs: BigInt = (0..=n).map(|i| c(z, i) * c(w, n - i)).sum();
                checks += 1;
                if lhs != rhs {
                    return Ok(failure(max_m, checks, Counterexample::ChuVandermonde {
                        z,
                        w,
                        n,
                        lhs: lhs.to_string(),
                        rhs: rhs.to_string(),
                    }));
                }
            }
        }
    }
    Ok(IdentityReport { max_m, checks, first_failure: None })
}

fn failure(max_m: u32, checks: u64, cx: Counterexample) -> IdentityReport {
    IdentityReport { max_m, checks, first_failure: Some(cx) }
}
