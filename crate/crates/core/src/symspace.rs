//! Symmetric subspaces of `M` qudits in the occupation-number basis.
//!
//! Basis order is fixed once for the whole crate: occupation vectors
//! `(n_1, ..., n_d)` in lexicographically *descending* order, so for `d = 2,
//! M = 2` the basis is `(2,0), (1,1), (0,2)`. Tensor-power coordinates use
//! the first copy as the most significant digit.
//!
//! Operators are stored on the symmetric subspace only; the dense `d^M`
//! embedding is built on demand (behind a size guard) and serves as the
//! reference for the combinatorial fast paths.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinat::sym_dim_usize;
use crate::linalg::{self, c, CMat, CVec};
use crate::{Error, Result, TAU_ALG};

/// Occupation numbers of one basis vector `|n⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationVector {
    pub counts: Vec<u32>,
}

impl OccupationVector {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn d(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Number of distinct computational-basis strings with these occupations,
    /// `M! / prod n_i!`.
    pub fn multinomial(&self) -> f64 {
        let mut acc = 1.0;
        let mut placed = 0u32;
        for &n in &self.counts {
            for j in 1..=n {
                placed += 1;
                acc *= placed as f64 / j as f64;
            }
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect())
    }

    /// Occupation vector of a computational-basis string.
    pub fn of_string(digits: &[usize], d: usize) -> Self {
        let mut counts = vec![0u32; d];
        for &x in digits {
            counts[x] += 1;
        }
        Self::new(counts)
    }
}

/// All partitions of `m` into `d` nonnegative parts, lexicographically descending.
pub fn occupation_basis(d: usize, m: usize) -> Vec<OccupationVector> {
    fn fill(prefix: &mut Vec<u32>, remaining: u32, slots: usize, out: &mut Vec<OccupationVector>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(OccupationVector::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for n in (0..=remaining).rev() {
            prefix.push(n);
            fill(prefix, remaining - n, slots - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    fill(&mut Vec::with_capacity(d), m as u32, d, &mut out);
    out
}

/// Occupation basis with a reverse index.
#[derive(Debug, Clone)]
pub struct SymBasis {
    pub d: usize,
    pub m: usize,
    states: Vec<OccupationVector>,
    index: HashMap<OccupationVector, usize>,
}

impl SymBasis {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension("single-particle dimension d must be >= 1".into()));
        }
        let states = occupation_basis(d, m);
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(Self { d, m, states, index })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[OccupationVector] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &OccupationVector {
        &self.states[i]
    }

    pub fn index_of(&self, n: &OccupationVector) -> Option<usize> {
        self.index.get(n).copied()
    }
}

/// Overlap `⟨a+b| (|a⟩ ⊗ |b⟩)` between symmetric basis vectors, equal to
/// `sqrt(N_a N_b / N_{a+b})` with `N` the multinomial string counts.
pub fn split_weight(a: &OccupationVector, b: &OccupationVector) -> f64 {
    let ta = a.total() as u64;
    let tb = b.total() as u64;
    let mut num = 1.0;
    for (&x, &y) in a.counts.iter().zip(&b.counts) {
        num *= binomial_f64(x as u64 + y as u64, x as u64);
    }
    (num / binomial_f64(ta + tb, ta)).sqrt()
}

fn binomial_f64(n: u64, r: u64) -> f64 {
    let r = r.min(n - r);
    let mut acc = 1.0;
    for i in 0..r {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Digits of a tensor-power index, first copy most significant.
pub fn digits(mut index: usize, d: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for slot in (0..m).rev() {
        out[slot] = index % d;
        index /= d;
    }
    out
}

pub fn undigits(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

/// Isometry `V : (H^{⊗M})_+ → H^{⊗M}` whose columns are the occupation states.
pub fn embed_isometry(d: usize, m: usize) -> Result<CMat> {
    let full = linalg::guarded_power(d, m, "embed_isometry")?;
    let basis = SymBasis::new(d, m)?;
    let mut v = CMat::zeros(full, basis.dim());
    for x in 0..full {
        let occ = OccupationVector::of_string(&digits(x, d, m), d);
        let col = basis.index_of(&occ).expect("every string has an occupation");
        v[(x, col)] = c(1.0 / occ.multinomial().sqrt());
    }
    Ok(v)
}

/// Projector onto the symmetric subspace of `H^{⊗M}`.
pub fn symmetrizer(d: usize, m: usize) -> Result<CMat> {
    let v = embed_isometry(d, m)?;
    Ok(&v * v.adjoint())
}

/// Amplitudes of `|ψ⟩^{⊗M}` in the occupation basis.
pub fn coherent_amplitudes(psi: &CVec, m: usize) -> Result<CVec> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > TAU_ALG {
        return Err(Error::Normalization { norm });
    }
    let basis = SymBasis::new(psi.len(), m)?;
    Ok(CVec::from_iterator(
        basis.dim(),
        basis.states().iter().map(|n| {
            let mut amp = c(n.multinomial().sqrt());
            for (i, &ni) in n.counts.iter().enumerate() {
                amp *= psi[i].powu(ni);
            }
            amp
        }),
    ))
}

/// Traces out the last `m - keep` copies of an operator on the full space
/// `H^{⊗m}`.
pub fn partial_trace_full(op: &CMat, d: usize, m: usize, keep: usize) -> Result<CMat> {
    if keep > m {
        return Err(Error::Argument(format!("cannot keep {keep} of {m} copies")));
    }
    let kept = d.pow(keep as u32);
    let traced = d.pow((m - keep) as u32);
    if op.nrows() != kept * traced || op.ncols() != kept * traced {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, expected side {}",
            op.nrows(),
            op.ncols(),
            kept * traced
        )));
    }
    Ok(linalg::partial_trace_second(op, kept, traced))
}

/// A complex matrix on `(H^{⊗M})_+` in the canonical occupation order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymOperator {
    pub d: usize,
    pub m: usize,
    pub matrix: CMat,
}

impl SymOperator {
    pub fn new(d: usize, m: usize, matrix: CMat) -> Result<Self> {
        let dim = sym_dim_usize(d, m)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, symmetric subspace for d={d}, M={m} has dimension {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { d, m, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Projector `|v⟩⟨v|` for an occupation-basis amplitude vector.
    pub fn pure(d: usize, m: usize, amplitudes: &CVec) -> Result<Self> {
        Self::new(d, m, amplitudes * amplitudes.adjoint())
    }

    /// `|ψ⟩⟨ψ|^{⊗M}`.
    pub fn product_pure(psi: &CVec, m: usize) -> Result<Self> {
        Self::pure(psi.len(), m, &coherent_amplitudes(psi, m)?)
    }

    pub fn maximally_mixed(d: usize, m: usize) -> Result<Self> {
        let dim = sym_dim_usize(d, m)?;
        Self::new(d, m, CMat::identity(dim, dim).unscale(dim as f64))
    }

    /// Random density operator `G G† / Tr` supported on the symmetric subspace.
    pub fn random_state<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Result<Self> {
        let dim = sym_dim_usize(d, m)?;
        let rank = rng.random_range(1..=dim);
        Self::new(d, m, linalg::random_density(dim, rank, rng))
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    /// Checks Hermiticity, positivity and unit trace within `tol`.
    pub fn validate_state(&self, tol: f64) -> Result<()> {
        let herm = linalg::hermitian_residual(&self.matrix);
        if herm > tol {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:e})")));
        }
        let min = linalg::min_eigenvalue(&self.matrix);
        if min < -tol {
            return Err(Error::InvalidState(format!("not positive (min eigenvalue {min:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(())
    }

    /// Operator on the full tensor-power space, `V ρ V†`.
    pub fn to_full(&self) -> Result<CMat> {
        let v = embed_isometry(self.d, self.m)?;
        Ok(&v * &self.matrix * v.adjoint())
    }
}

/// `k`-copy marginal of an operator on `(H^{⊗M})_+`, computed directly in the
/// occupation basis: `⟨a|Tr_{M-k} ρ|b⟩ = Σ_c ρ_{a+c, b+c} w(a,c) w(b,c)`.
pub fn partial_trace_sym(rho: &SymOperator, k: usize) -> Result<SymOperator> {
    if k > rho.m {
        return Err(Error::Argument(format!("k = {k} exceeds M = {}", rho.m)));
    }
    let full = SymBasis::new(rho.d, rho.m)?;
    let kept = SymBasis::new(rho.d, k)?;
    let rest = SymBasis::new(rho.d, rho.m - k)?;
    let mut out = CMat::zeros(kept.dim(), kept.dim());
    for cst in rest.states() {
        let cols: Vec<(usize, f64)> = kept
            .states()
            .iter()
            .map(|a| (full.index_of(&a.add(cst)).unwrap(), split_weight(a, cst)))
            .collect();
        for (ia, &(ra, wa)) in cols.iter().enumerate() {
            for (ib, &(rb, wb)) in cols.iter().enumerate() {
                out[(ia, ib)] += rho.matrix[(ra, rb)] * (wa * wb);
            }
        }
    }
    SymOperator::new(rho.d, k, out)
}

/// Reference marginal through dense embeddings,
/// `V_k† Tr_{M-k}[V_M ρ V_M†] V_k`.
pub fn partial_trace_sym_oracle(rho: &SymOperator, k: usize) -> Result<SymOperator> {
    if k > rho.m {
        return Err(Error::Argument(format!("k = {k} exceeds M = {}", rho.m)));
    }
    let full = rho.to_full()?;
    let reduced = partial_trace_full(&full, rho.d, rho.m, k)?;
    let vk = embed_isometry(rho.d, k)?;
    SymOperator::new(rho.d, k, vk.adjoint() * reduced * vk)
}

/// Monte-Carlo residual `‖ mean |φ⟩⟨φ|^{⊗M} − P_+/d_+ ‖_∞` over Haar-random
/// pure states, evaluated in the occupation basis.
pub fn haar_moment_residual<R: Rng + ?Sized>(d: usize, m: usize, n_samples: usize, rng: &mut R) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::Argument("n_samples must be >= 1".into()));
    }
    let dim = sym_dim_usize(d, m)?;
    let mut acc = CMat::zeros(dim, dim);
    for _ in 0..n_samples {
        let psi = linalg::haar_vector(d, rng);
        let amp = coherent_amplitudes(&psi, m)?;
        acc += &amp * amp.adjoint();
    }
    let diff = acc.unscale(n_samples as f64) - CMat::identity(dim, dim).unscale(dim as f64);
    let spectrum = linalg::eigvalsh(&diff);
    Ok(spectrum.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Permutes the copies of a full tensor-power operator: copy `j` of the input
/// lands on slot `perm[j]`.
pub fn permute_copies(op: &CMat, d: usize, m: usize, perm: &[usize]) -> CMat {
    let n = op.nrows();
    let map: Vec<usize> = (0..n)
        .map(|x| {
            let src = digits(x, d, m);
            let mut dst = vec![0; m];
            for (j, &p) in perm.iter().enumerate() {
                dst[p] = src[j];
            }
            undigits(&dst, d)
        })
        .collect();
    let mut out = CMat::zeros(n, n);
    for r in 0..n {
        for col in 0..n {
            out[(map[r], map[col])] = op[(r, col)];
        }
    }
    out
}

/// JSON form of a [`SymOperator`]: `{d, M, re, im}` with row-major entries.
/// Matrices may be written flat (`d_+^2` numbers) or as nested rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymOperatorJson {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub re: MatrixEntries,
    pub im: MatrixEntries,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixEntries {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

impl MatrixEntries {
    pub fn flatten(&self, side: usize, what: &str) -> Result<Vec<f64>> {
        let flat: Vec<f64> = match self {
            MatrixEntries::Flat(v) => v.clone(),
            MatrixEntries::Nested(rows) => {
                if rows.len() != side || rows.iter().any(|r| r.len() != side) {
                    return Err(Error::Parse(format!("{what}: expected {side} rows of {side} entries")));
                }
                rows.iter().flatten().copied().collect()
            }
        };
        if flat.len() != side * side {
            return Err(Error::Parse(format!(
                "{what}: expected {} entries, found {}",
                side * side,
                flat.len()
            )));
        }
        Ok(flat)
    }
}

pub(crate) fn matrix_from_parts(re: &[f64], im: &[f64], side: usize) -> CMat {
    CMat::from_fn(side, side, |r, col| {
        num_complex::Complex64::new(re[r * side + col], im[r * side + col])
    })
}

pub(crate) fn matrix_parts(m: &CMat) -> (Vec<f64>, Vec<f64>) {
    let mut re = Vec::with_capacity(m.len());
    let mut im = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for col in 0..m.ncols() {
            re.push(m[(r, col)].re);
            im.push(m[(r, col)].im);
        }
    }
    (re, im)
}

impl From<&SymOperator> for SymOperatorJson {
    fn from(op: &SymOperator) -> Self {
        let (re, im) = matrix_parts(&op.matrix);
        Self { d: op.d, m: op.m, re: MatrixEntries::Flat(re), im: MatrixEntries::Flat(im) }
    }
}

impl TryFrom<SymOperatorJson> for SymOperator {
    type Error = Error;

    fn try_from(js: SymOperatorJson) -> Result<Self> {
        let side = sym_dim_usize(js.d, js.m)?;
        let re = js.re.flatten(side, "re")?;
        let im = js.im.flatten(side, "im")?;
        SymOperator::new(js.d, js.m, matrix_from_parts(&re, &im, side))
    }
}

impl SymOperator {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&SymOperatorJson::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let js: SymOperatorJson = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        js.try_into()
    }
}
