//! Finite de Finetti approximations: symmetric states, permutation-invariant
//! states through a pair purification, and symmetric broadcast channels.
//!
//! The approximants are always exact compositions of Choi matrices with the
//! measure-and-prepare channel; no coherent-state measurement is sampled.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::channels::{self, SymChannel, SymSpace};
use crate::combinat::{self, rational_to_f64};
use crate::diamond::{self, DiamondOptions};
use crate::linalg::{self, c, CMat, CVec, MaxAbs};
use crate::symspace::{self, digits, embed_isometry, permute_copies, OccupationVector, SymBasis, SymOperator};
use crate::{Error, Result, TAU_ALG, TAU_NUM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Trace,
    Diamond,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeFinettiCertificate {
    pub k: usize,
    pub distance: f64,
    pub bound: f64,
    /// `bound - distance`.
    pub margin: f64,
    /// Single-particle dimension the bound was evaluated at (`d` or `d^2`).
    pub dimension_used: usize,
    pub norm: NormKind,
    /// Slack allowed on `margin`.
    pub tolerance: f64,
}

impl DeFinettiCertificate {
    fn new(k: usize, distance: f64, bound: f64, dimension_used: usize, norm: NormKind, tolerance: f64) -> Self {
        Self { k, distance, bound, margin: bound - distance, dimension_used, norm, tolerance }
    }

    pub fn holds(&self) -> bool {
        self.margin >= -self.tolerance
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    fn checked(self) -> Result<Self> {
        if self.holds() {
            Ok(self)
        } else {
            Err(Error::Validation(format!(
                "distance {} exceeds bound {} (k = {}, dimension {})",
                self.distance, self.bound, self.k, self.dimension_used
            )))
        }
    }
}

/// `2k(d+k-1)/(M+d)`.
fn estimation_bound(d: usize, m: usize, k: usize) -> f64 {
    (2 * k * (d + k - 1)) as f64 / (m + d) as f64
}

/// `ρ̃_k = UMeasPrep_{M,k}(ρ)`, certified against the exact marginal `Tr_{M-k} ρ`.
pub fn definetti_state(rho: &SymOperator, k: usize) -> Result<(SymOperator, DeFinettiCertificate)> {
    if k > rho.m {
        return Err(Error::Argument(format!("k = {k} exceeds M = {}", rho.m)));
    }
    rho.validate_state(TAU_ALG.max(1e-9))?;
    let approx = channels::umeasprep_channel(rho.d, rho.m, k)?.apply(rho)?;
    let marginal = symspace::partial_trace_sym(rho, k)?;
    let distance = linalg::trace_norm_hermitian(&(&approx.matrix - &marginal.matrix));
    let cert = DeFinettiCertificate::new(
        k,
        distance,
        estimation_bound(rho.d, rho.m, k),
        rho.d,
        NormKind::Trace,
        TAU_NUM,
    )
    .checked()?;
    Ok((approx, cert))
}

/// Pure state on `(K^{⊗M})_+` with `K = H ⊗ H`, stored in the occupation
/// basis over pair labels `s * d + t`.
#[derive(Debug, Clone)]
pub struct PurifiedSymState {
    pub d: usize,
    pub m: usize,
    pub amplitudes: CVec,
    /// Distance of the pair vector from its symmetrization.
    pub symmetry_residual: f64,
}

impl PurifiedSymState {
    pub fn to_operator(&self) -> Result<SymOperator> {
        SymOperator::new(self.d * self.d, self.m, &self.amplitudes * self.amplitudes.adjoint())
    }

    /// Amplitudes over pair strings `u` of `K^{⊗M}`.
    pub fn pair_vector(&self) -> Result<CVec> {
        Ok(embed_isometry(self.d * self.d, self.m)? * &self.amplitudes)
    }

    /// Traces out the second factor of every pair.
    pub fn reduced_state(&self) -> Result<CMat> {
        let a = pair_matrix(&self.pair_vector()?, self.d, self.m);
        Ok(&a * a.adjoint())
    }
}

/// Regroups a vector over pair strings into the matrix `A[s, t]`.
fn pair_matrix(v: &CVec, d: usize, m: usize) -> CMat {
    let side = d.pow(m as u32);
    let mut a = CMat::zeros(side, side);
    for (u, &amp) in v.iter().enumerate() {
        let (mut s, mut t) = (0, 0);
        for label in digits(u, d * d, m) {
            s = s * d + label / d;
            t = t * d + label % d;
        }
        a[(s, t)] = amp;
    }
    a
}

fn pair_index(s: usize, t: usize, d: usize, m: usize) -> usize {
    let (ds, dt) = (digits(s, d, m), digits(t, d, m));
    ds.iter().zip(&dt).fold(0, |acc, (&x, &y)| acc * d * d + x * d + y)
}

/// Checks invariance under every adjacent transposition of copies.
fn check_permutation_invariant(rho: &CMat, d: usize, m: usize) -> Result<()> {
    for t in 0..m.saturating_sub(1) {
        let mut perm: Vec<usize> = (0..m).collect();
        perm.swap(t, t + 1);
        let residual = (permute_copies(rho, d, m, &perm) - rho).max_abs();
        if residual > TAU_ALG {
            return Err(Error::NotPermutationInvariant(t, t + 1, residual));
        }
    }
    Ok(())
}

fn check_full_state(rho: &CMat, d: usize, m: usize) -> Result<()> {
    let side = linalg::guarded_power(d, m, "permutation-invariant state")?;
    if rho.shape() != (side, side) {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, expected side {side}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let residual = linalg::hermitian_residual(rho);
    if residual > TAU_ALG {
        return Err(Error::NotHermitian { residual });
    }
    let tr = linalg::trace(rho).re;
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("trace {tr}")));
    }
    let lmin = linalg::min_eigenvalue(rho);
    if lmin < -1e-9 {
        return Err(Error::InvalidState(format!("negative eigenvalue {lmin}")));
    }
    Ok(())
}

/// `|Ψ⟩ = (ρ^{1/2} ⊗ I)|Ω⟩` regrouped into pairs; lies in `(K^{⊗M})_+`
/// whenever `ρ` commutes with copy permutations, which is checked on input
/// and re-checked on the constructed vector.
pub fn purify_perm_invariant(rho: &CMat, d: usize, m: usize) -> Result<PurifiedSymState> {
    check_full_state(rho, d, m)?;
    check_permutation_invariant(rho, d, m)?;
    linalg::guarded_power(d * d, m, "pair purification")?;
    let root = linalg::psd_sqrt(&linalg::hermitize(rho));
    let side = root.nrows();
    let mut pair = CVec::zeros(side * side);
    for s in 0..side {
        for t in 0..side {
            pair[pair_index(s, t, d, m)] = root[(s, t)];
        }
    }
    let basis = SymBasis::new(d * d, m)?;
    let mut sums = vec![c(0.0); basis.dim()];
    let mut class = vec![0usize; pair.len()];
    for (u, &amp) in pair.iter().enumerate() {
        let occ = OccupationVector::of_string(&digits(u, d * d, m), d * d);
        let idx = basis.index_of(&occ).expect("occupation of a string");
        sums[idx] += amp;
        class[u] = idx;
    }
    let sizes: Vec<f64> = basis.states().iter().map(|n| n.multinomial()).collect();
    let mut residual2 = 0.0;
    for (u, &amp) in pair.iter().enumerate() {
        let mean = sums[class[u]] / sizes[class[u]];
        residual2 += (amp - mean).norm_sqr();
    }
    let symmetry_residual = residual2.sqrt();
    if symmetry_residual > 1e-8 {
        return Err(Error::InvalidState(format!(
            "purification left the symmetric subspace (residual {symmetry_residual:.3e})"
        )));
    }
    let amplitudes = CVec::from_iterator(basis.dim(), sums.iter().zip(&sizes).map(|(&s, &n)| s / n.sqrt()));
    let norm = amplitudes.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Normalization { norm });
    }
    Ok(PurifiedSymState { d, m, amplitudes, symmetry_residual })
}

/// Channel `(K^{⊗k})_+ → H^{⊗k}` tracing out the second factor of every
/// pair. The output is an unstructured space of dimension `d^k`.
pub fn purifier_trace_channel(d: usize, k: usize) -> Result<SymChannel> {
    let v = embed_isometry(d * d, k)?;
    let mats: Vec<CMat> = (0..v.ncols()).map(|col| pair_matrix(&v.column(col).into_owned(), d, k)).collect();
    let out = d.pow(k as u32);
    SymChannel::from_action(SymSpace::new(d * d, k), SymSpace::plain(out), |i, j| &mats[i] * mats[j].adjoint())
}

/// De Finetti certificate for a permutation-invariant state on the full
/// space `H^{⊗M}`, via the symmetric purification at dimension `d^2`.
pub fn definetti_perm_invariant(rho: &CMat, d: usize, m: usize, k: usize) -> Result<DeFinettiCertificate> {
    if k > m {
        return Err(Error::Argument(format!("k = {k} exceeds M = {m}")));
    }
    let purified = purify_perm_invariant(rho, d, m)?;
    let sigma = purified.to_operator()?;
    let dd = d * d;
    let approx = channels::umeasprep_channel(dd, m, k)?.apply(&sigma)?;
    let marginal = symspace::partial_trace_sym(&sigma, k)?;
    let reduce = purifier_trace_channel(d, k)?;
    let diff = reduce.apply_matrix(&(&approx.matrix - &marginal.matrix))?;
    let distance = linalg::trace_norm_hermitian(&diff);
    DeFinettiCertificate::new(k, distance, estimation_bound(dd, m, k), dd, NormKind::Trace, TAU_NUM).checked()
}

/// `min(4(1 - sqrt(d_+^(M-k)/d_+^(M))), 2kd/M)`.
fn broadcast_bound(d: usize, m: usize, k: usize) -> Result<f64> {
    let sqrt = combinat::sqrt_bound(d as u32, m as u32, k as u32)?;
    Ok(sqrt.min((2 * k * d) as f64 / m as f64))
}

/// Measure-and-prepare approximation of the `k`-receiver restriction of a
/// broadcast channel whose output lies in `(H^{⊗M})_+`.
pub fn broadcast_approx(
    e: &SymChannel,
    k: usize,
    opts: &DiamondOptions,
) -> Result<(SymChannel, DeFinettiCertificate)> {
    let (d, m) = (e.output.d, e.output.copies);
    if k == 0 || k > m {
        return Err(Error::Argument(format!("k = {k} must lie in 1..={m}")));
    }
    let approx = channels::compose(&channels::umeasprep_channel(d, m, k)?, e)?;
    let exact = channels::compose(&channels::trace_channel(d, m, k)?, e)?;
    let result = diamond::diamond_distance(&approx, &exact, opts)?;
    let cert = DeFinettiCertificate::new(
        k,
        result.upper,
        broadcast_bound(d, m, k)?,
        d,
        NormKind::Diamond,
        TAU_NUM.max(opts.tol_sdp),
    )
    .checked()?;
    Ok((approx, cert))
}

/// Broadcast certificate from a caller-supplied symmetric dilation.
///
/// `v` maps `C^{dim_in}` into `K^{⊗M} ⊗ C^{dim_env}` with rows ordered pair
/// string first, then environment. Its range must lie in
/// `(K^{⊗M})_+ ⊗ C^{dim_env}`. The broadcast channel is
/// `E(X) = Tr_{env, second factors}(V X V†)`; the bound is evaluated at `d^2`.
pub fn broadcast_approx_general(
    v: &CMat,
    d: usize,
    m: usize,
    dim_in: usize,
    dim_env: usize,
    k: usize,
    opts: &DiamondOptions,
) -> Result<DeFinettiCertificate> {
    if k == 0 || k > m {
        return Err(Error::Argument(format!("k = {k} must lie in 1..={m}")));
    }
    let dd = d * d;
    let pairs = linalg::guarded_power(dd, m, "dilation range")?;
    if v.shape() != (pairs * dim_env, dim_in) {
        return Err(Error::DimensionMismatch(format!(
            "dilation is {}x{}, expected {}x{dim_in}",
            v.nrows(),
            v.ncols(),
            pairs * dim_env
        )));
    }
    let gram = v.adjoint() * v - CMat::identity(dim_in, dim_in);
    if gram.max_abs() > TAU_ALG {
        return Err(Error::InvalidChannel(format!("V is not an isometry (residual {:.3e})", gram.max_abs())));
    }
    let emb = embed_isometry(dd, m)?;
    let nsym = emb.ncols();
    // W = (V_sym† ⊗ I_env) V, rows (n, env)
    let mut w = CMat::zeros(nsym * dim_env, dim_in);
    for e in 0..dim_env {
        let rows = CMat::from_fn(pairs, dim_in, |u, i| v[(u * dim_env + e, i)]);
        let proj = emb.adjoint() * rows;
        for n in 0..nsym {
            for i in 0..dim_in {
                w[(n * dim_env + e, i)] = proj[(n, i)];
            }
        }
    }
    let support = (w.adjoint() * &w - CMat::identity(dim_in, dim_in)).max_abs();
    if support > TAU_ALG {
        return Err(Error::InvalidChannel(format!(
            "dilation range leaves the symmetric subspace (residual {support:.3e})"
        )));
    }
    let f = SymChannel::from_action(SymSpace::plain(dim_in), SymSpace::new(dd, m), |i, j| {
        CMat::from_fn(nsym, nsym, |a, b| {
            (0..dim_env).map(|e| w[(a * dim_env + e, i)] * w[(b * dim_env + e, j)].conj()).sum()
        })
    })?;
    let approx = channels::compose(&channels::umeasprep_channel(dd, m, k)?, &f)?;
    let exact = channels::compose(&channels::trace_channel(dd, m, k)?, &f)?;
    let reduce = purifier_trace_channel(d, k)?;
    let approx_e = channels::compose(&reduce, &approx)?;
    let exact_e = channels::compose(&reduce, &exact)?;
    let result = diamond::diamond_distance(&approx_e, &exact_e, opts)?;
    DeFinettiCertificate::new(
        k,
        result.upper,
        broadcast_bound(dd, m, k)?,
        dd,
        NormKind::Diamond,
        TAU_NUM.max(opts.tol_sdp),
    )
    .checked()
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub m: usize,
    pub f_clon: f64,
    pub f_est: f64,
    pub gap: f64,
    /// `2d/M`.
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapTable {
    pub d: usize,
    pub n: usize,
    pub rows: Vec<GapRow>,
    /// `0 <= gap <= bound` on every row, decided in exact arithmetic.
    pub within_bounds: bool,
    /// Gap strictly decreasing in `M`.
    pub decreasing: bool,
}

/// Single-copy fidelity of universal `N → M` cloning against optimal
/// estimation from `N` copies, over a range of `M`.
pub fn cloning_estimation_gap(d: usize, n: usize, m_range: std::ops::RangeInclusive<usize>) -> Result<GapTable> {
    let ms: Vec<usize> = m_range.collect();
    if ms.is_empty() {
        return Err(Error::Argument("empty M range".into()));
    }
    if d < 1 || n < 1 || ms[0] < n {
        return Err(Error::Argument(format!("need d >= 1, N >= 1 and M >= N = {n}")));
    }
    let f_est = combinat::fidelity_est(d as u32, n as u32, 1)?;
    let mut rows = Vec::with_capacity(ms.len());
    let mut within = true;
    let mut decreasing = true;
    let mut prev: Option<BigRational> = None;
    for &m in &ms {
        let f_clon = combinat::fidelity_clon(d as u32, n as u32, m as u32);
        let gap = &f_clon - &f_est;
        let bound = BigRational::new(BigInt::from(2 * d), BigInt::from(m));
        within &= !(gap < BigRational::zero()) && gap <= bound;
        if let Some(p) = &prev {
            decreasing &= gap < *p;
        }
        rows.push(GapRow {
            m,
            f_clon: rational_to_f64(&f_clon),
            f_est: rational_to_f64(&f_est),
            gap: rational_to_f64(&gap),
            bound: bound.to_f64().unwrap_or(f64::NAN),
        });
        prev = Some(gap);
    }
    Ok(GapTable { d, n, rows, within_bounds: within, decreasing })
}

/// Random state on `H^{⊗M}` averaged over copy permutations, for tests and
/// the command line.
pub fn random_perm_invariant<R: rand::Rng + ?Sized>(d: usize, m: usize, rank: usize, rng: &mut R) -> Result<CMat> {
    let side = linalg::guarded_power(d, m, "random permutation-invariant state")?;
    let base = linalg::random_density(side, rank, rng);
    let perms = permutations(m);
    let mut acc = CMat::zeros(side, side);
    for p in &perms {
        acc += permute_copies(&base, d, m, p);
    }
    Ok(linalg::hermitize(&acc.unscale(perms.len() as f64)))
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for slot in 0..m {
            let mut q = p.clone();
            q.insert(slot, m - 1);
            out.push(q);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{trace_channel, uclon_channel, umeasprep_channel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn product_full(psi: &CVec, m: usize) -> CMat {
        let mut v = CVec::from_element(1, c(1.0));
        for _ in 0..m {
            v = linalg::kron(&CMat::from_column_slice(v.len(), 1, v.as_slice()), &CMat::from_column_slice(psi.len(), 1, psi.as_slice()))
                .column(0)
                .into_owned();
        }
        &v * v.adjoint()
    }

    #[test]
    fn pure_product_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (d, m, k) in [(2, 3, 1), (2, 4, 2), (3, 2, 2)] {
            let psi = linalg::haar_vector(d, &mut rng);
            let rho = SymOperator::product_pure(&psi, m).unwrap();
            let (approx, cert) = definetti_state(&rho, k).unwrap();
            let target = symspace::coherent_amplitudes(&psi, k).unwrap();
            let f = (target.adjoint() * &approx.matrix * &target)[(0, 0)].re;
            let expect = rational_to_f64(&combinat::fidelity_est(d as u32, m as u32, k as u32).unwrap());
            assert!((f - expect).abs() < 1e-10);
            assert!(cert.holds());
        }
    }

    #[test]
    fn maximally_mixed_example() {
        let rho = SymOperator::maximally_mixed(2, 6).unwrap();
        let (_, cert) = definetti_state(&rho, 1).unwrap();
        assert!(cert.distance <= 0.5 + 1e-12);
        assert!((cert.bound - 0.5).abs() < 1e-15);
    }

    #[test]
    fn full_restriction_sqrt_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for m in 1..=5usize {
            let psi = linalg::haar_vector(2, &mut rng);
            let rho = SymOperator::product_pure(&psi, m).unwrap();
            let (_, cert) = definetti_state(&rho, m).unwrap();
            assert!(cert.distance <= 4.0 * (1.0 - (1.0 / (m as f64 + 1.0)).sqrt()) + 1e-10);
        }
    }

    #[test]
    fn restriction_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (d, m) in [(2, 4), (3, 3)] {
            let rho = SymOperator::random_state(d, m, &mut rng).unwrap();
            let full = umeasprep_channel(d, m, m).unwrap().apply(&rho).unwrap();
            for k in 1..=m {
                let a = symspace::partial_trace_sym(&full, k).unwrap();
                let b = umeasprep_channel(d, m, k).unwrap().apply(&rho).unwrap();
                assert!((a.matrix - b.matrix).max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn k_above_m_rejected() {
        let rho = SymOperator::maximally_mixed(2, 2).unwrap();
        assert!(definetti_state(&rho, 3).is_err());
    }

    #[test]
    fn purification_of_product_and_mixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = linalg::haar_vector(2, &mut rng);
        let rho = product_full(&psi, 3);
        let p = purify_perm_invariant(&rho, 2, 3).unwrap();
        assert!((p.reduced_state().unwrap() - &rho).max_abs() < 1e-10);
        // (|ψ⟩|ψ*⟩)^{⊗3}
        let pair = CVec::from_fn(4, |u, _| psi[u / 2] * psi[u % 2].conj());
        let expect = symspace::coherent_amplitudes(&pair, 3).unwrap();
        assert!((p.amplitudes - expect).max_abs() < 1e-8);

        let mixed = CMat::identity(8, 8).unscale(8.0);
        let p = purify_perm_invariant(&mixed, 2, 3).unwrap();
        let omega = CVec::from_fn(4, |u, _| if u / 2 == u % 2 { c(1.0 / 2f64.sqrt()) } else { c(0.0) });
        let expect = symspace::coherent_amplitudes(&omega, 3).unwrap();
        assert!((p.amplitudes - expect).max_abs() < 1e-10);
    }

    #[test]
    fn werner_state_purification() {
        // p |Ψ-⟩⟨Ψ-| + (1-p) P_sym / 3
        let mut flip = CMat::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                flip[(a * 2 + b, b * 2 + a)] = c(1.0);
            }
        }
        let id = CMat::identity(4, 4);
        let anti = (&id - &flip).unscale(2.0);
        let sym = (&id + &flip).unscale(2.0);
        let rho = anti.scale(0.3) + sym.scale(0.7 / 3.0);
        let p = purify_perm_invariant(&rho, 2, 2).unwrap();
        assert!(p.symmetry_residual < 1e-10);
        assert!((p.reduced_state().unwrap() - &rho).max_abs() < 1e-10);
    }

    #[test]
    fn non_invariant_reports_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = linalg::random_density(2, 1, &mut rng);
        let b = linalg::random_density(2, 1, &mut rng);
        let rho = linalg::kron(&linalg::kron(&a, &a), &b);
        match purify_perm_invariant(&rho, 2, 3) {
            Err(Error::NotPermutationInvariant(1, 2, r)) => assert!(r > 1e-3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn perm_invariant_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for m in 2..=4usize {
            let rho = random_perm_invariant(2, m, 3, &mut rng).unwrap();
            for k in 1..=m {
                let cert = definetti_perm_invariant(&rho, 2, m, k).unwrap();
                assert_eq!(cert.dimension_used, 4);
                assert!(cert.holds());
            }
        }
        let rho = random_perm_invariant(2, 4, 4, &mut rng).unwrap();
        assert!(definetti_perm_invariant(&rho, 2, 4, 1).unwrap().distance <= 1.0);
    }

    #[test]
    fn product_route_agrees_with_symmetric_route() {
        // for |ψ⟩^{⊗M} the marginal comparison at d^2, reduced, matches d
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let psi = linalg::haar_vector(2, &mut rng);
        let m = 3;
        let rho = product_full(&psi, m);
        let purified = purify_perm_invariant(&rho, 2, m).unwrap();
        let sigma = purified.to_operator().unwrap();
        let marg = symspace::partial_trace_sym(&sigma, 1).unwrap();
        let reduced = purifier_trace_channel(2, 1).unwrap().apply_matrix(&marg.matrix).unwrap();
        let direct = psi.clone() * psi.adjoint();
        assert!((reduced - direct).max_abs() < 1e-10);
        let cert = definetti_perm_invariant(&rho, 2, m, 1).unwrap();
        assert!(cert.holds());
    }

    #[test]
    fn identity_broadcast_matches_table() {
        let opts = DiamondOptions::default();
        for m in 2..=4usize {
            let e = SymChannel::identity(SymSpace::new(2, m));
            let (_, cert) = broadcast_approx(&e, 1, &opts).unwrap();
            let direct = diamond::diamond_distance(&umeasprep_channel(2, m, 1).unwrap(), &trace_channel(2, m, 1).unwrap(), &opts)
                .unwrap();
            assert!((cert.distance - direct.upper).abs() < 1e-7);
            assert!(cert.holds());
        }
    }

    #[test]
    fn cloning_broadcast() {
        let opts = DiamondOptions::default();
        let e = uclon_channel(2, 1, 4).unwrap();
        let (_, cert) = broadcast_approx(&e, 1, &opts).unwrap();
        assert!(cert.distance <= 1.0);
        for m in 1..=4usize {
            let (_, cert) = broadcast_approx(&SymChannel::identity(SymSpace::new(2, m)), m, &opts).unwrap();
            assert!(cert.distance <= 4.0 * (1.0 - (1.0 / (m as f64 + 1.0)).sqrt()) + 1e-6);
        }
    }

    /// `V|i⟩ = Σ R[(x,i),(y,l)] |x⟩|y,l⟩` with `R = J^{1/2}`; `y` is paired
    /// with `x` copy by copy, `l` is the environment.
    fn sqrt_choi_dilation(j: &CMat, d: usize, m: usize, dim_in: usize) -> CMat {
        let r = linalg::psd_sqrt(j);
        let side = d.pow(m as u32);
        let mut v = CMat::zeros(side * side * dim_in, dim_in);
        for x in 0..side {
            for y in 0..side {
                let u = pair_index(x, y, d, m);
                for l in 0..dim_in {
                    for i in 0..dim_in {
                        v[(u * dim_in + l, i)] = r[(x * dim_in + i, y * dim_in + l)];
                    }
                }
            }
        }
        v
    }

    #[test]
    fn swap_broadcast_dilation() {
        // E(ρ) = (ρ ⊗ I/2 + I/2 ⊗ ρ)/2 on two receivers
        let (d, m) = (2usize, 2usize);
        let half = CMat::identity(2, 2).unscale(2.0);
        let mut j = CMat::zeros(8, 8);
        for i in 0..2 {
            for jj in 0..2 {
                let mut unit = CMat::zeros(2, 2);
                unit[(i, jj)] = c(1.0);
                let img = (linalg::kron(&unit, &half) + linalg::kron(&half, &unit)).unscale(2.0);
                for x in 0..4 {
                    for y in 0..4 {
                        j[(x * 2 + i, y * 2 + jj)] = img[(x, y)];
                    }
                }
            }
        }
        let v = sqrt_choi_dilation(&j, d, m, 2);
        let cert = broadcast_approx_general(&v, d, m, 2, 2, 1, &DiamondOptions::default()).unwrap();
        assert!(cert.holds());
        assert_eq!(cert.dimension_used, 4);
    }

    #[test]
    fn trivial_input_recovers_state_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (d, m) = (2usize, 3usize);
        let rho = random_perm_invariant(d, m, 2, &mut rng).unwrap();
        let p = purify_perm_invariant(&rho, d, m).unwrap();
        let v = CMat::from_column_slice(p.pair_vector().unwrap().len(), 1, p.pair_vector().unwrap().as_slice());
        let cert = broadcast_approx_general(&v, d, m, 1, 1, 1, &DiamondOptions::default()).unwrap();
        let state = definetti_perm_invariant(&rho, d, m, 1).unwrap();
        assert!((cert.distance - state.distance).abs() < 1e-6, "{} vs {}", cert.distance, state.distance);
    }

    #[test]
    fn non_isometry_rejected() {
        let v = CMat::zeros(16, 1);
        assert!(broadcast_approx_general(&v, 2, 2, 1, 1, 1, &DiamondOptions::default()).is_err());
        // a unit vector outside the symmetric subspace
        let mut v = CMat::zeros(16, 1);
        v[(1, 0)] = c(1.0);
        assert!(broadcast_approx_general(&v, 2, 2, 1, 1, 1, &DiamondOptions::default()).is_err());
    }

    #[test]
    fn gap_table() {
        let t = cloning_estimation_gap(2, 1, 1..=50).unwrap();
        assert!((t.rows[0].f_clon - 1.0).abs() < 1e-15);
        assert!((t.rows[0].gap - 1.0 / 3.0).abs() < 1e-15);
        assert!((t.rows[1].f_clon - 5.0 / 6.0).abs() < 1e-15);
        assert!((t.rows[1].gap - 1.0 / 6.0).abs() < 1e-15);
        assert!(t.within_bounds && t.decreasing);
        assert!(t.rows.last().unwrap().gap < 0.01);
        let big = cloning_estimation_gap(2, 1, 50..=500).unwrap();
        let scaled: Vec<f64> = big.rows.iter().map(|r| r.gap * r.m as f64).collect();
        let (lo, hi) = scaled.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 1.05);
    }

    #[test]
    fn gap_closed_form_matches_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for m in 1..=4usize {
            let psi = linalg::haar_vector(2, &mut rng);
            let clon = uclon_channel(2, 1, m).unwrap();
            let tr = trace_channel(2, m, 1).unwrap();
            let single = channels::compose(&tr, &clon).unwrap();
            let f = channels::product_fidelity(&single, &psi).unwrap();
            let expect = rational_to_f64(&combinat::fidelity_clon(2, 1, m as u32));
            assert!((f - expect).abs() < 1e-10);
        }
    }
}
