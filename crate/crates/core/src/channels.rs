//! Channels between symmetric subspaces, stored as Choi matrices.
//!
//! Convention: `J = Σ_{ij} Φ(|i⟩⟨j|) ⊗ |i⟩⟨j|`, output factor first, both
//! factors in the canonical occupation order. Row `(o, i)` of `J` sits at
//! `o * dim_in + i`. Trace preservation is then `Tr_out J = I_in`.
//!
//! The universal constructions (cloning, measure-and-prepare, partial trace)
//! are assembled from exact occupation-basis overlaps; the `*_embedded`
//! variants rebuild the same channels through dense tensor-power embeddings
//! and are kept as independent references.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::combinat::{self, sym_dim_usize, ProbabilityVector};
use crate::linalg::{self, c, CMat, MaxAbs};
use crate::symspace::{self, embed_isometry, split_weight, MatrixEntries, SymBasis, SymOperator};
use crate::{Error, Result};

/// A symmetric subspace `(C^d)^{⊗copies}_+`. A plain `n`-dimensional space is
/// `SymSpace { d: n, copies: 1 }`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymSpace {
    pub d: usize,
    pub copies: usize,
}

impl SymSpace {
    pub fn new(d: usize, copies: usize) -> Self {
        Self { d, copies }
    }

    /// Unstructured space of dimension `n`.
    pub fn plain(n: usize) -> Self {
        Self { d: n, copies: 1 }
    }

    pub fn dim(&self) -> usize {
        sym_dim_usize(self.d, self.copies).expect("valid symmetric space")
    }
}

/// A linear map between symmetric subspaces in Choi form. Constructors of
/// quantum channels guarantee the CPTP invariants; [`SymChannel::validate`]
/// re-checks them for user-supplied data.
#[derive(Debug, Clone, PartialEq)]
pub struct SymChannel {
    pub input: SymSpace,
    pub output: SymSpace,
    pub choi: CMat,
}

/// Residuals of the channel laws.
#[derive(Debug, Clone, Copy)]
pub struct CptpResiduals {
    pub hermiticity: f64,
    /// `max(0, -λ_min(J))`.
    pub negativity: f64,
    /// `max |Tr_out J - I|`.
    pub trace_preservation: f64,
}

impl CptpResiduals {
    pub fn max(&self) -> f64 {
        self.hermiticity.max(self.negativity).max(self.trace_preservation)
    }
}

impl SymChannel {
    pub fn new(input: SymSpace, output: SymSpace, choi: CMat) -> Result<Self> {
        let side = input.dim() * output.dim();
        if choi.nrows() != side || choi.ncols() != side {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix is {}x{}, expected side {side}",
                choi.nrows(),
                choi.ncols()
            )));
        }
        Ok(Self { input, output, choi })
    }

    /// Builds the Choi matrix from the images of the matrix units `|i⟩⟨j|`.
    pub fn from_action<F>(input: SymSpace, output: SymSpace, mut image: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> CMat,
    {
        let (ni, no) = (input.dim(), output.dim());
        let mut choi = CMat::zeros(no * ni, no * ni);
        for i in 0..ni {
            for j in 0..ni {
                let block = image(i, j);
                debug_assert_eq!(block.shape(), (no, no));
                for a in 0..no {
                    for b in 0..no {
                        choi[(a * ni + i, b * ni + j)] = block[(a, b)];
                    }
                }
            }
        }
        Self::new(input, output, choi)
    }

    pub fn identity(space: SymSpace) -> Self {
        let n = space.dim();
        Self::from_action(space, space, |i, j| {
            let mut m = CMat::zeros(n, n);
            m[(i, j)] = c(1.0);
            m
        })
        .expect("square identity")
    }

    pub fn dim_in(&self) -> usize {
        self.input.dim()
    }

    pub fn dim_out(&self) -> usize {
        self.output.dim()
    }

    /// Image of the matrix unit `|i⟩⟨j|`.
    pub fn block(&self, i: usize, j: usize) -> CMat {
        let (ni, no) = (self.dim_in(), self.dim_out());
        CMat::from_fn(no, no, |a, b| self.choi[(a * ni + i, b * ni + j)])
    }

    /// `Φ(X) = Tr_in[J (I ⊗ X^T)]`.
    pub fn apply_matrix(&self, x: &CMat) -> Result<CMat> {
        let (ni, no) = (self.dim_in(), self.dim_out());
        if x.nrows() != ni || x.ncols() != ni {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, channel input has dimension {ni}",
                x.nrows(),
                x.ncols()
            )));
        }
        let mut out = CMat::zeros(no, no);
        for a in 0..no {
            for b in 0..no {
                let mut acc = c(0.0);
                for i in 0..ni {
                    for j in 0..ni {
                        acc += self.choi[(a * ni + i, b * ni + j)] * x[(i, j)];
                    }
                }
                out[(a, b)] = acc;
            }
        }
        Ok(out)
    }

    pub fn apply(&self, rho: &SymOperator) -> Result<SymOperator> {
        if rho.d != self.input.d || rho.m != self.input.copies {
            return Err(Error::DimensionMismatch(format!(
                "operator lives on d={}, M={} but channel input is d={}, M={}",
                rho.d, rho.m, self.input.d, self.input.copies
            )));
        }
        SymOperator::new(self.output.d, self.output.copies, self.apply_matrix(&rho.matrix)?)
    }

    /// `Tr_out J`.
    pub fn input_marginal(&self) -> CMat {
        linalg::partial_trace_first(&self.choi, self.dim_out(), self.dim_in())
    }

    pub fn cptp_residuals(&self) -> CptpResiduals {
        let n = self.dim_in();
        CptpResiduals {
            hermiticity: linalg::hermitian_residual(&self.choi),
            negativity: (-linalg::min_eigenvalue(&self.choi)).max(0.0),
            trace_preservation: (self.input_marginal() - CMat::identity(n, n)).max_abs(),
        }
    }

    /// Checks the CPTP laws within `tol`, naming the first one that fails.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let r = self.cptp_residuals();
        if r.hermiticity > tol {
            return Err(Error::InvalidChannel(format!("Choi matrix not Hermitian (residual {:e})", r.hermiticity)));
        }
        if r.negativity > tol {
            return Err(Error::InvalidChannel(format!("Choi matrix not positive (min eigenvalue {:e})", -r.negativity)));
        }
        if r.trace_preservation > tol {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (residual {:e})",
                r.trace_preservation
            )));
        }
        Ok(())
    }

    /// `Φ ∘ Θ_in` with `Θ_in` the transposition in the input occupation basis.
    pub fn compose_input_transpose(&self) -> SymChannel {
        let ni = self.dim_in();
        let side = self.choi.nrows();
        let choi = CMat::from_fn(side, side, |r, col| {
            let (o, i) = (r / ni, r % ni);
            let (p, j) = (col / ni, col % ni);
            self.choi[(o * ni + j, p * ni + i)]
        });
        SymChannel { input: self.input, output: self.output, choi }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SymChannelJson::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let js: SymChannelJson = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        js.try_into()
    }
}

/// `after ∘ before`.
pub fn compose(after: &SymChannel, before: &SymChannel) -> Result<SymChannel> {
    if after.input != before.output {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose: inner spaces {:?} and {:?} differ",
            before.output, after.input
        )));
    }
    let mut failure = None;
    let out = SymChannel::from_action(before.input, after.output, |i, j| {
        match after.apply_matrix(&before.block(i, j)) {
            Ok(m) => m,
            Err(e) => {
                failure.get_or_insert(e);
                CMat::zeros(after.dim_out(), after.dim_out())
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Convex mixture `Σ_i w_i Φ_i`.
pub fn mix(channels: &[SymChannel], weights: &ProbabilityVector) -> Result<SymChannel> {
    if channels.is_empty() || channels.len() != weights.len() {
        return Err(Error::Argument(format!(
            "{} channels but {} weights",
            channels.len(),
            weights.len()
        )));
    }
    let first = &channels[0];
    let mut choi = CMat::zeros(first.choi.nrows(), first.choi.ncols());
    for (ch, w) in channels.iter().zip(weights.to_f64()) {
        if ch.input != first.input || ch.output != first.output {
            return Err(Error::DimensionMismatch("mixed channels must share input and output spaces".into()));
        }
        choi += ch.choi.scale(w);
    }
    SymChannel::new(first.input, first.output, choi)
}

fn dim_ratio(d: usize, lo: usize, hi: usize) -> Result<f64> {
    let num = combinat::sym_dim(d as u32, lo as u32)?;
    let den = combinat::sym_dim(d as u32, hi as u32)?;
    Ok(num.to_f64().unwrap() / den.to_f64().unwrap())
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidDimension("single-particle dimension d must be >= 1".into()));
    }
    Ok(())
}

/// Universal `s → k` cloner `ρ ↦ (d_+^(s)/d_+^(k)) P_+ (ρ ⊗ I^{⊗(k-s)}) P_+`.
/// `s = 0` is allowed and prepares the maximally mixed symmetric state.
pub fn uclon_channel(d: usize, s: usize, k: usize) -> Result<SymChannel> {
    check_d(d)?;
    if s > k {
        return Err(Error::Argument(format!("cloning needs s <= k, got s = {s}, k = {k}")));
    }
    let scale = dim_ratio(d, s, k)?;
    let inp = SymBasis::new(d, s)?;
    let out = SymBasis::new(d, k)?;
    let extra = SymBasis::new(d, k - s)?;
    let no = out.dim();
    SymChannel::from_action(SymSpace::new(d, s), SymSpace::new(d, k), |i, j| {
        let (m, n) = (inp.state(i), inp.state(j));
        let mut block = CMat::zeros(no, no);
        for cst in extra.states() {
            let a = out.index_of(&m.add(cst)).unwrap();
            let b = out.index_of(&n.add(cst)).unwrap();
            block[(a, b)] += c(scale * split_weight(m, cst) * split_weight(n, cst));
        }
        block
    })
}

/// Universal measure-and-prepare channel from `M` to `k` copies,
/// `ρ ↦ (d_+^(M)/d_+^(M+k)) Tr_M[(ρ ⊗ I^{⊗k}) P_+^(M+k)]`.
///
/// In the occupation basis `Φ(|m⟩⟨n|)_{ab} = c · w(n,a) w(m,b) [n+a = m+b]`.
pub fn umeasprep_channel(d: usize, m: usize, k: usize) -> Result<SymChannel> {
    check_d(d)?;
    let scale = dim_ratio(d, m, m + k)?;
    let inp = SymBasis::new(d, m)?;
    let out = SymBasis::new(d, k)?;
    let no = out.dim();
    SymChannel::from_action(SymSpace::new(d, m), SymSpace::new(d, k), |i, j| {
        let (mi, nj) = (inp.state(i), inp.state(j));
        let mut block = CMat::zeros(no, no);
        for (ia, a) in out.states().iter().enumerate() {
            let target = nj.add(a);
            let wa = split_weight(nj, a);
            for (ib, b) in out.states().iter().enumerate() {
                if mi.add(b) == target {
                    block[(ia, ib)] = c(scale * wa * split_weight(mi, b));
                }
            }
        }
        block
    })
}

/// Partial trace `Tr_{M-k}` as a channel on symmetric subspaces.
pub fn trace_channel(d: usize, m: usize, k: usize) -> Result<SymChannel> {
    check_d(d)?;
    if k > m {
        return Err(Error::Argument(format!("k = {k} exceeds M = {m}")));
    }
    let inp = SymBasis::new(d, m)?;
    let out = SymBasis::new(d, k)?;
    let rest = SymBasis::new(d, m - k)?;
    let no = out.dim();
    SymChannel::from_action(SymSpace::new(d, m), SymSpace::new(d, k), |i, j| {
        let (mi, nj) = (inp.state(i), inp.state(j));
        let mut block = CMat::zeros(no, no);
        for cst in rest.states() {
            let a_counts: Option<Vec<u32>> =
                mi.counts.iter().zip(&cst.counts).map(|(x, y)| x.checked_sub(*y)).collect();
            let b_counts: Option<Vec<u32>> =
                nj.counts.iter().zip(&cst.counts).map(|(x, y)| x.checked_sub(*y)).collect();
            if let (Some(ac), Some(bc)) = (a_counts, b_counts) {
                let a = symspace::OccupationVector::new(ac);
                let b = symspace::OccupationVector::new(bc);
                let ia = out.index_of(&a).unwrap();
                let ib = out.index_of(&b).unwrap();
                block[(ia, ib)] += c(split_weight(&a, cst) * split_weight(&b, cst));
            }
        }
        block
    })
}

/// Reference construction of [`uclon_channel`] through dense embeddings.
pub fn uclon_channel_embedded(d: usize, s: usize, k: usize) -> Result<SymChannel> {
    if s > k {
        return Err(Error::Argument(format!("cloning needs s <= k, got s = {s}, k = {k}")));
    }
    let scale = dim_ratio(d, s, k)?;
    let vk = embed_isometry(d, k)?;
    let vs = embed_isometry(d, s)?;
    let pad = linalg::guarded_power(d, k - s, "uclon_channel_embedded")?;
    // U[a, (m, e)] = ⟨a| (|m⟩ ⊗ |e⟩)
    let u = vk.adjoint() * linalg::kron(&vs, &CMat::identity(pad, pad));
    let no = vk.ncols();
    SymChannel::from_action(SymSpace::new(d, s), SymSpace::new(d, k), |i, j| {
        CMat::from_fn(no, no, |a, b| {
            let mut acc = c(0.0);
            for e in 0..pad {
                acc += u[(a, i * pad + e)] * u[(b, j * pad + e)].conj();
            }
            acc * scale
        })
    })
}

/// Reference construction of [`umeasprep_channel`] through the dense
/// embedding of `(H^{⊗(M+k)})_+`.
pub fn umeasprep_channel_embedded(d: usize, m: usize, k: usize) -> Result<SymChannel> {
    let scale = dim_ratio(d, m, m + k)?;
    let vmk = embed_isometry(d, m + k)?;
    let vm = embed_isometry(d, m)?;
    let vk = embed_isometry(d, k)?;
    let (nm, nk) = (vm.ncols(), vk.ncols());
    // W[r, (n, a)] = ⟨r| (|n⟩ ⊗ |a⟩)
    let w = vmk.adjoint() * linalg::kron(&vm, &vk);
    SymChannel::from_action(SymSpace::new(d, m), SymSpace::new(d, k), |i, j| {
        CMat::from_fn(nk, nk, |a, b| {
            let mut acc = c(0.0);
            for r in 0..w.nrows() {
                acc += w[(r, j * nk + a)].conj() * w[(r, i * nk + b)];
            }
            acc * scale
        })
    })
    .inspect(|ch| debug_assert_eq!(ch.dim_in(), nm))
}

/// Reference construction of [`trace_channel`] through dense embeddings.
pub fn trace_channel_embedded(d: usize, m: usize, k: usize) -> Result<SymChannel> {
    if k > m {
        return Err(Error::Argument(format!("k = {k} exceeds M = {m}")));
    }
    let vm = embed_isometry(d, m)?;
    let vk = embed_isometry(d, k)?;
    let pad = linalg::guarded_power(d, m - k, "trace_channel_embedded")?;
    // T[(a, e), m] = (⟨a| ⊗ ⟨e|) |m⟩
    let t = linalg::kron(&vk, &CMat::identity(pad, pad)).adjoint() * vm;
    let nk = vk.ncols();
    SymChannel::from_action(SymSpace::new(d, m), SymSpace::new(d, k), |i, j| {
        CMat::from_fn(nk, nk, |a, b| {
            let mut acc = c(0.0);
            for e in 0..pad {
                acc += t[(a * pad + e, i)] * t[(b * pad + e, j)].conj();
            }
            acc
        })
    })
}

/// Right-hand side of the loss-plus-cloning decomposition,
/// `Σ_s p_s UClon_{s,k} ∘ Tr_{M-s}`.
pub fn loss_cloning_mixture(d: usize, m: usize, k: usize) -> Result<SymChannel> {
    let weights = combinat::ps_distribution(d as u32, m as u32, k as u32)?;
    let branches = (0..weights.len())
        .map(|s| compose(&uclon_channel(d, s, k)?, &trace_channel(d, m, s)?))
        .collect::<Result<Vec<_>>>()?;
    mix(&branches, &weights)
}

/// Trace norm of the Choi difference between the measure-and-prepare channel
/// and its loss-plus-cloning mixture.
pub fn decomposition_residual(d: usize, m: usize, k: usize) -> Result<f64> {
    let lhs = umeasprep_channel(d, m, k)?;
    let rhs = loss_cloning_mixture(d, m, k)?;
    Ok(linalg::trace_norm_hermitian(&(lhs.choi - rhs.choi)))
}

/// Fidelity `⟨ψ|^{⊗k} Φ(|ψ⟩⟨ψ|^{⊗M}) |ψ⟩^{⊗k}` of a channel on product inputs.
pub fn product_fidelity(ch: &SymChannel, psi: &linalg::CVec) -> Result<f64> {
    let input = SymOperator::product_pure(psi, ch.input.copies)?;
    let out = ch.apply(&input)?;
    let target = symspace::coherent_amplitudes(psi, ch.output.copies)?;
    Ok((target.adjoint() * &out.matrix * &target)[(0, 0)].re)
}

/// JSON form of a [`SymChannel`]; `d_in` defaults to `d` and `d_out` to `d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymChannelJson {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_in: Option<usize>,
    pub copies_in: usize,
    pub copies_out: usize,
    pub choi_re: MatrixEntries,
    pub choi_im: MatrixEntries,
}

impl From<&SymChannel> for SymChannelJson {
    fn from(ch: &SymChannel) -> Self {
        let (re, im) = symspace::matrix_parts(&ch.choi);
        Self {
            d: ch.output.d,
            d_in: (ch.input.d != ch.output.d).then_some(ch.input.d),
            copies_in: ch.input.copies,
            copies_out: ch.output.copies,
            choi_re: MatrixEntries::Flat(re),
            choi_im: MatrixEntries::Flat(im),
        }
    }
}

impl TryFrom<SymChannelJson> for SymChannel {
    type Error = Error;

    fn try_from(js: SymChannelJson) -> Result<Self> {
        check_d(js.d)?;
        let input = SymSpace::new(js.d_in.unwrap_or(js.d), js.copies_in);
        check_d(input.d)?;
        let output = SymSpace::new(js.d, js.copies_out);
        let side = input.dim() * output.dim();
        let re = js.choi_re.flatten(side, "choi_re")?;
        let im = js.choi_im.flatten(side, "choi_im")?;
        SymChannel::new(input, output, symspace::matrix_from_parts(&re, &im, side))
    }
}
