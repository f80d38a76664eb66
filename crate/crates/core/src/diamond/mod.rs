//! Diamond norms of Hermitian-preserving maps between symmetric spaces.
//!
//! Two independent numbers are produced for every map: a see-saw value,
//! achieved by an explicit witness state and therefore a lower bound, and
//! the value of a dual feasible point of the standard semidefinite program,
//! repaired to exact feasibility and therefore an upper bound.

pub mod sdp;

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{self, SymChannel, SymSpace};
use crate::combinat::{self, BoundReport};
use crate::linalg::{self, c, CMat, CVec, MaxAbs};
use crate::symspace::occupation_basis;
use crate::{Error, Result, TAU_ALG};

pub use crate::linalg::trace_norm;

use sdp::{Entry, RMat, SdpProblem, SdpSettings};

/// A linear map in Choi form whose Choi matrix is only required to be
/// Hermitian, e.g. the difference of two channels.
#[derive(Debug, Clone)]
pub struct HermitianMap {
    pub input: SymSpace,
    pub output: SymSpace,
    pub choi: CMat,
}

impl HermitianMap {
    pub fn new(input: SymSpace, output: SymSpace, choi: CMat) -> Result<Self> {
        let side = input.dim() * output.dim();
        if choi.shape() != (side, side) {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix is {}x{}, expected side {side}",
                choi.nrows(),
                choi.ncols()
            )));
        }
        let residual = linalg::hermitian_residual(&choi);
        if residual > TAU_ALG * (1.0 + choi.max_abs()) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self { input, output, choi: linalg::hermitize(&choi) })
    }

    pub fn from_channel(ch: &SymChannel) -> Self {
        Self { input: ch.input, output: ch.output, choi: linalg::hermitize(&ch.choi) }
    }

    /// `a − b`.
    pub fn difference(a: &SymChannel, b: &SymChannel) -> Result<Self> {
        if a.input != b.input || a.output != b.output {
            return Err(Error::DimensionMismatch(format!(
                "cannot subtract channels {:?}->{:?} and {:?}->{:?}",
                a.input, a.output, b.input, b.output
            )));
        }
        Self::new(a.input, a.output, &a.choi - &b.choi)
    }

    pub fn dim_in(&self) -> usize {
        self.input.dim()
    }

    pub fn dim_out(&self) -> usize {
        self.output.dim()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiamondOptions {
    /// Required certified primal-dual gap (relative to `max(1, value)`).
    pub tol_sdp: f64,
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for DiamondOptions {
    fn default() -> Self {
        Self { tol_sdp: 1e-6, restarts: 2, iters: 200, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiamondResult {
    pub lower: f64,
    pub upper: f64,
    /// `upper - lower`.
    pub gap: f64,
    /// Certified SDP upper value minus the SDP primal objective.
    pub sdp_gap: f64,
    /// `‖J‖_1 / dim_in`, the value at the maximally entangled witness.
    pub choi_lower: f64,
    /// Unit vector on ancilla ⊗ input, index `a * dim_in + i`.
    #[serde(skip)]
    pub witness: CVec,
}

/// Output of `(id ⊗ Δ)` on the witness, ordered ancilla first.
fn output_operator(map: &HermitianMap, psi: &CMat) -> CMat {
    let (ni, no) = (map.dim_in(), map.dim_out());
    let j = &map.choi;
    // t[(a,o),(o',j)] = Σ_i ψ[a,i] J[(o,i),(o',j)]
    let mut t = CMat::zeros(ni * no, no * ni);
    for a in 0..ni {
        for o in 0..no {
            for col in 0..no * ni {
                let mut acc = c(0.0);
                for i in 0..ni {
                    acc += psi[(a, i)] * j[(o * ni + i, col)];
                }
                t[(a * no + o, col)] = acc;
            }
        }
    }
    CMat::from_fn(ni * no, ni * no, |r, col| {
        let (b, o2) = (col / no, col % no);
        let mut acc = c(0.0);
        for jj in 0..ni {
            acc += t[(r, o2 * ni + jj)] * psi[(b, jj)].conj();
        }
        acc
    })
}

/// Hermitian form `K` with `tr(U Ω(ψ)) = ψ† K ψ`.
fn pullback(map: &HermitianMap, u: &CMat) -> CMat {
    let (ni, no) = (map.dim_in(), map.dim_out());
    let j = &map.choi;
    let mut k = CMat::zeros(ni * ni, ni * ni);
    for b in 0..ni {
        for jj in 0..ni {
            for a in 0..ni {
                for i in 0..ni {
                    let mut acc = c(0.0);
                    for o in 0..no {
                        for o2 in 0..no {
                            acc += u[(b * no + o2, a * no + o)] * j[(o * ni + i, o2 * ni + jj)];
                        }
                    }
                    k[(b * ni + jj, a * ni + i)] = acc;
                }
            }
        }
    }
    linalg::hermitize(&k)
}

fn hermitian_sign(omega: &CMat) -> CMat {
    let (vals, vecs) = linalg::eigh(omega);
    let signs = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&v| c(if v >= 0.0 { 1.0 } else { -1.0 })),
    ));
    &vecs * signs * vecs.adjoint()
}

/// One see-saw run. Returns the value trace, final value and witness.
fn seesaw_run(map: &HermitianMap, start: CMat, iters: usize) -> (Vec<f64>, f64, CMat) {
    let ni = map.dim_in();
    let mut psi = start;
    let mut value = linalg::trace_norm_hermitian(&output_operator(map, &psi));
    let mut history = vec![value];
    for _ in 0..iters {
        let u = hermitian_sign(&output_operator(map, &psi));
        let (_, vecs) = linalg::eigh(&pullback(map, &u));
        let top = vecs.column(ni * ni - 1);
        let next = CMat::from_fn(ni, ni, |a, i| top[a * ni + i]);
        let next_value = linalg::trace_norm_hermitian(&output_operator(map, &next));
        if next_value <= value {
            break;
        }
        let improvement = next_value - value;
        psi = next;
        value = next_value;
        history.push(value);
        if improvement < 1e-11 * (1.0 + value) {
            break;
        }
    }
    (history, value, psi)
}

/// See-saw lower bound on `‖Δ‖_⋄`: the maximally entangled witness first,
/// then `restarts` Haar-random witnesses from a seeded generator.
pub fn seesaw_lower(map: &HermitianMap, restarts: usize, iters: usize, seed: u64) -> Result<(f64, CVec)> {
    let residual = linalg::hermitian_residual(&map.choi);
    if residual > TAU_ALG * (1.0 + map.choi.max_abs()) {
        return Err(Error::NotHermitian { residual });
    }
    let ni = map.dim_in();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![CMat::identity(ni, ni) * c(1.0 / (ni as f64).sqrt())];
    for _ in 0..restarts {
        let v = linalg::haar_vector(ni * ni, &mut rng);
        starts.push(CMat::from_fn(ni, ni, |a, i| v[a * ni + i]));
    }
    let mut best = (f64::NEG_INFINITY, CMat::zeros(ni, ni));
    for start in starts {
        let (_, value, psi) = seesaw_run(map, start, iters);
        if value > best.0 {
            best = (value, psi);
        }
    }
    let (value, psi) = best;
    Ok((value, CVec::from_fn(ni * ni, |idx, _| psi[(idx / ni, idx % ni)])))
}

/// Dual feasible point of the diamond-norm SDP, repaired to exact
/// feasibility.
#[derive(Debug, Clone)]
pub struct SdpCertificate {
    pub y0: CMat,
    pub y1: CMat,
    /// `(λ_max(Tr_out Y0) + λ_max(Tr_out Y1)) / 2`.
    pub upper: f64,
    /// Primal objective of the returned primal point.
    pub primal: f64,
    /// `upper - primal`.
    pub gap: f64,
    pub iterations: usize,
    /// Number of diagonal-phase symmetry classes the problem split into.
    pub classes: usize,
}

/// Charge of an occupation label, used to split the SDP along a diagonal
/// phase symmetry of the Choi matrix.
fn labels(space: SymSpace) -> Vec<Vec<i64>> {
    occupation_basis(space.d, space.copies)
        .iter()
        .map(|n| n.counts.iter().map(|&x| x as i64).collect())
        .collect()
}

/// Partition of the Choi indices into classes of a phase grading that `J`
/// respects. Falls back to a single class.
fn grading(map: &HermitianMap) -> Vec<Vec<usize>> {
    let (ni, no) = (map.dim_in(), map.dim_out());
    let n = ni * no;
    let all = vec![(0..n).collect::<Vec<_>>()];
    if map.input.d != map.output.d {
        return all;
    }
    let (lin, lout) = (labels(map.input), labels(map.output));
    let scale = 1e-13 * (1.0 + map.choi.max_abs());
    let mut best = all.clone();
    for sign in [-1i64, 1] {
        let charge = |p: usize| -> Vec<i64> {
            let (o, i) = (p / ni, p % ni);
            lout[o].iter().zip(&lin[i]).map(|(a, b)| a + sign * b).collect()
        };
        let charges: Vec<Vec<i64>> = (0..n).map(charge).collect();
        let respects = (0..n).all(|p| {
            (0..n).all(|q| charges[p] == charges[q] || map.choi[(p, q)].norm() <= scale)
        });
        if !respects {
            continue;
        }
        let mut classes: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for (p, ch) in charges.into_iter().enumerate() {
            classes.entry(ch).or_default().push(p);
        }
        let candidate: Vec<Vec<usize>> = classes.into_values().collect();
        let cost = |cl: &[Vec<usize>]| cl.iter().map(|v| v.len() * v.len()).sum::<usize>();
        if cost(&candidate) < cost(&best) {
            best = candidate;
        }
    }
    best
}

/// Layout of the SDP built from a grading.
struct Layout {
    classes: Vec<Vec<usize>>,
    /// Input-index classes on which `Tr_out Y` is block diagonal.
    input_classes: Vec<Vec<usize>>,
    input_pos: Vec<(usize, usize)>,
    complex: bool,
}

impl Layout {
    fn new(map: &HermitianMap, classes: Vec<Vec<usize>>) -> Self {
        let ni = map.dim_in();
        // union inputs that share an output index inside a class
        let mut parent: Vec<usize> = (0..ni).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            parent[x] = r;
            r
        }
        for cl in &classes {
            for &p in cl {
                for &q in cl {
                    if p / ni == q / ni {
                        let (a, b) = (find(&mut parent, p % ni), find(&mut parent, q % ni));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..ni {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let input_classes: Vec<Vec<usize>> = groups.into_values().collect();
        let mut input_pos = vec![(0, 0); ni];
        for (g, members) in input_classes.iter().enumerate() {
            for (k, &i) in members.iter().enumerate() {
                input_pos[i] = (g, k);
            }
        }
        let complex = map.choi.iter().any(|z| z.im.abs() > 1e-14 * (1.0 + map.choi.max_abs()));
        Self { classes, input_classes, input_pos, complex }
    }

    fn factor(&self) -> usize {
        if self.complex {
            2
        } else {
            1
        }
    }

    /// Blocks: one per class, then Y0-trace and Y1-trace blocks per input class.
    fn block_sizes(&self) -> Vec<usize> {
        let f = self.factor();
        let mut sizes: Vec<usize> = self.classes.iter().map(|cl| 2 * cl.len() * f).collect();
        for _ in 0..2 {
            sizes.extend(self.input_classes.iter().map(|g| g.len() * f));
        }
        sizes
    }

    fn trace_block(&self, which: usize, group: usize) -> usize {
        self.classes.len() + which * self.input_classes.len() + group
    }
}

/// Entries of a Hermitian matrix unit at `(p, q)` in a block of complex side
/// `n`: the symmetric real unit, or with `imag` the unit `i(E_pq − E_qp)`.
fn push_unit(out: &mut Vec<Entry>, block: usize, n: usize, complex: bool, (p, q): (usize, usize), imag: bool, val: f64) {
    let mut put = |row: usize, col: usize, v: f64| out.push(Entry { block, row, col, val: v });
    if p == q {
        put(p, p, val);
        if complex {
            put(p + n, p + n, val);
        }
    } else if !imag {
        put(p, q, val);
        put(q, p, val);
        if complex {
            put(p + n, q + n, val);
            put(q + n, p + n, val);
        }
    } else {
        // H = i(E_pq − E_qp), embedded as [[A, −B], [B, A]]
        put(p, q + n, -val);
        put(q, p + n, val);
        put(p + n, q, val);
        put(q + n, p, -val);
    }
}

/// One free real parameter of `Y0` or `Y1`.
#[derive(Debug, Clone, Copy)]
struct Param {
    which: usize,
    class: usize,
    /// Positions inside the class.
    lp: usize,
    lq: usize,
    imag: bool,
}

fn build_problem(map: &HermitianMap, layout: &Layout) -> (SdpProblem, Vec<Param>) {
    let ni = map.dim_in();
    let complex = layout.complex;
    let sizes = layout.block_sizes();
    let mut params = Vec::new();
    let mut constraints = Vec::new();
    for which in 0..2 {
        for (ci, cl) in layout.classes.iter().enumerate() {
            let m = cl.len();
            for lp in 0..m {
                for lq in lp..m {
                    let kinds: &[bool] = if lp == lq || !complex { &[false] } else { &[false, true] };
                    for &imag in kinds {
                        let mut con = Vec::new();
                        let off = which * m;
                        push_unit(&mut con, ci, 2 * m, complex, (off + lp, off + lq), imag, 1.0);
                        let (p, q) = (cl[lp], cl[lq]);
                        if p / ni == q / ni {
                            let (g, ip) = layout.input_pos[p % ni];
                            let (g2, iq) = layout.input_pos[q % ni];
                            debug_assert_eq!(g, g2);
                            let block = layout.trace_block(which, g);
                            let gn = layout.input_classes[g].len();
                            // trace part enters as t I − Tr_out Y; an inverted
                            // pair needs the conjugate imaginary sign
                            let (a, b, s) = if ip <= iq { (ip, iq, 1.0) } else { (iq, ip, -1.0) };
                            let val = if imag { -s } else { -1.0 };
                            push_unit(&mut con, block, gn, complex, (a, b), imag, val);
                        }
                        params.push(Param { which, class: ci, lp, lq, imag });
                        constraints.push(con);
                    }
                }
            }
        }
    }
    for which in 0..2 {
        let mut con = Vec::new();
        for g in 0..layout.input_classes.len() {
            let block = layout.trace_block(which, g);
            for r in 0..sizes[block] {
                con.push(Entry { block, row: r, col: r, val: 1.0 });
            }
        }
        constraints.push(con);
    }
    let mut a = vec![0.0; constraints.len()];
    let nc = a.len();
    a[nc - 2] = 0.5;
    a[nc - 1] = 0.5;

    let mut c_blocks: Vec<RMat> = sizes.iter().map(|&s| RMat::zeros(s, s)).collect();
    for (ci, cl) in layout.classes.iter().enumerate() {
        let m = cl.len();
        let n = 2 * m;
        let blk = &mut c_blocks[ci];
        for (lp, &p) in cl.iter().enumerate() {
            for (lq, &q) in cl.iter().enumerate() {
                let z = map.choi[(p, q)];
                // [[0, J], [J†, 0]] at (lp, m + lq) and (m + lq, lp)
                let (r1, c1) = (lp, m + lq);
                blk[(r1, c1)] = z.re;
                blk[(c1, r1)] = z.re;
                if complex {
                    blk[(r1 + n, c1 + n)] = z.re;
                    blk[(c1 + n, r1 + n)] = z.re;
                    // imaginary part: B at (r1, c1), −B at (c1, r1) for J†
                    blk[(r1 + n, c1)] = z.im;
                    blk[(r1, c1 + n)] = -z.im;
                    blk[(c1 + n, r1)] = -z.im;
                    blk[(c1, r1 + n)] = z.im;
                }
            }
        }
    }
    (SdpProblem { block_sizes: sizes, c: c_blocks, constraints, a }, params)
}

/// Builds the Hermitian matrices `Y0`, `Y1` from the dual vector.
fn dual_matrices(map: &HermitianMap, layout: &Layout, params: &[Param], y: &DVector<f64>) -> [CMat; 2] {
    let n = map.dim_in() * map.dim_out();
    let mut ys = [CMat::zeros(n, n), CMat::zeros(n, n)];
    for (par, &v) in params.iter().zip(y.iter()) {
        let cl = &layout.classes[par.class];
        let (p, q) = (cl[par.lp], cl[par.lq]);
        let m = &mut ys[par.which];
        if p == q {
            m[(p, p)] += c(v);
        } else if par.imag {
            m[(p, q)] += num_complex::Complex64::new(0.0, v);
            m[(q, p)] += num_complex::Complex64::new(0.0, -v);
        } else {
            m[(p, q)] += c(v);
            m[(q, p)] += c(v);
        }
    }
    ys
}

fn trace_out(y: &CMat, ni: usize, no: usize) -> CMat {
    CMat::from_fn(ni, ni, |i, j| (0..no).map(|o| y[(o * ni + i, o * ni + j)]).sum())
}

/// Upper bound on `‖Δ‖_⋄` from the standard SDP
/// `min (‖Tr_out Y0‖ + ‖Tr_out Y1‖)/2` s.t. `[[Y0, −J], [−J†, Y1]] ⪰ 0`.
///
/// The solver's dual point is shifted onto the feasible set before its value
/// is taken, so `upper` is a bound at floating-point precision. Fails unless
/// `upper - primal <= tol * max(1, upper)`.
pub fn sdp_upper(map: &HermitianMap, tol: f64) -> Result<SdpCertificate> {
    let (ni, no) = (map.dim_in(), map.dim_out());
    let n = ni * no;
    let residual = linalg::hermitian_residual(&map.choi);
    if residual > TAU_ALG * (1.0 + map.choi.max_abs()) {
        return Err(Error::NotHermitian { residual });
    }
    let limit = linalg::max_dense();
    if (n as u128) * (n as u128) > limit {
        return Err(Error::Resource { what: "diamond SDP Choi side squared".into(), needed: (n * n) as u128, limit });
    }
    if map.choi.max_abs() == 0.0 {
        return Ok(SdpCertificate {
            y0: CMat::zeros(n, n),
            y1: CMat::zeros(n, n),
            upper: 0.0,
            primal: 0.0,
            gap: 0.0,
            iterations: 0,
            classes: 1,
        });
    }
    let layout = Layout::new(map, grading(map));
    let (problem, params) = build_problem(map, &layout);
    let inner = (tol * 1e-2).min(1e-8);
    let settings = SdpSettings { max_iter: 150, gap_tol: inner, feas_tol: inner };
    let sol = sdp::solve(&problem, &settings)?;
    let [mut y0, mut y1] = dual_matrices(map, &layout, &params, &sol.y);

    for cl in &layout.classes {
        let m = cl.len();
        let block = CMat::from_fn(2 * m, 2 * m, |r, col| {
            let (pr, pc) = (cl[r % m], cl[col % m]);
            match (r < m, col < m) {
                (true, true) => y0[(pr, pc)],
                (false, false) => y1[(pr, pc)],
                (true, false) => -map.choi[(pr, pc)],
                (false, true) => -map.choi[(pc, pr)].conj(),
            }
        });
        let lmin = linalg::min_eigenvalue(&block);
        if lmin < 0.0 {
            // a little extra absorbs the rounding in the eigensolver
            let shift = -lmin * (1.0 + 1e-9) + 1e-15;
            for &p in cl {
                y0[(p, p)] += c(shift);
                y1[(p, p)] += c(shift);
            }
        }
    }
    let upper = 0.5
        * (linalg::max_eigenvalue(&trace_out(&y0, ni, no)) + linalg::max_eigenvalue(&trace_out(&y1, ni, no)));
    let primal = sol.primal_objective;
    let gap = upper - primal;
    if gap > tol * upper.max(1.0) {
        return Err(Error::SolverFailure(format!(
            "certified gap {gap:.3e} exceeds tolerance {tol:.1e} (upper {upper}, primal {primal})"
        )));
    }
    Ok(SdpCertificate { y0, y1, upper, primal, gap, iterations: sol.iterations, classes: layout.classes.len() })
}

/// See-saw and SDP on one map.
pub fn diamond_norm(map: &HermitianMap, opts: &DiamondOptions) -> Result<DiamondResult> {
    let choi_lower = linalg::trace_norm_hermitian(&map.choi) / map.dim_in() as f64;
    let (lower, witness) = seesaw_lower(map, opts.restarts, opts.iters, opts.seed)?;
    let cert = sdp_upper(map, opts.tol_sdp)?;
    let upper = cert.upper;
    if lower > upper + opts.tol_sdp * upper.max(1.0) {
        return Err(Error::SolverFailure(format!(
            "see-saw value {lower} exceeds certified upper bound {upper}"
        )));
    }
    Ok(DiamondResult { lower, upper, gap: upper - lower, sdp_gap: cert.gap, choi_lower, witness })
}

/// `‖A − B‖_⋄` with both a lower and a certified upper value.
pub fn diamond_distance(a: &SymChannel, b: &SymChannel, opts: &DiamondOptions) -> Result<DiamondResult> {
    diamond_norm(&HermitianMap::difference(a, b)?, opts)
}

/// One row of the estimation-distance table.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub m: usize,
    pub computed: DiamondResult,
    pub bounds: BoundReport,
    /// `2(1 − p_k)`.
    pub mixture_bound: f64,
    /// `computed.upper <= min(mixture, analytic) + tol`.
    pub within_bounds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonTable {
    pub d: usize,
    pub k: usize,
    pub rows: Vec<ComparisonRow>,
    /// Whether the computed distance is nonincreasing in `M` (observed,
    /// not assumed).
    pub nonincreasing: bool,
}

/// Distance between `umeasprep(d, M, k)` and `trace_channel(d, M, k)` for
/// every `M` in the range, against the analytic bounds.
pub fn bound_comparison_table(
    d: usize,
    m_range: std::ops::RangeInclusive<usize>,
    k: usize,
    opts: &DiamondOptions,
) -> Result<ComparisonTable> {
    let ms: Vec<usize> = m_range.collect();
    if ms.is_empty() {
        return Err(Error::Argument("empty M range".into()));
    }
    if ms[0] < k {
        return Err(Error::Argument(format!("M range must start at k = {k} or later")));
    }
    let rows = ms
        .par_iter()
        .map(|&m| -> Result<ComparisonRow> {
            let a = channels::umeasprep_channel(d, m, k)?;
            let b = channels::trace_channel(d, m, k)?;
            let computed = diamond_distance(&a, &b, opts)?;
            let bounds = combinat::analytic_bounds(d as u32, m as u32, k as u32)?;
            let mixture = combinat::rational_to_f64(&combinat::mixture_bound(d as u32, m as u32, k as u32, k as u32));
            let cap = mixture.min(bounds.min_estimation_bound);
            let within_bounds = computed.upper <= cap + opts.tol_sdp;
            Ok(ComparisonRow { m, computed, bounds, mixture_bound: mixture, within_bounds })
        })
        .collect::<Result<Vec<_>>>()?;
    let nonincreasing = rows
        .windows(2)
        .all(|w| w[1].computed.upper <= w[0].computed.upper + opts.tol_sdp);
    Ok(ComparisonTable { d, k, rows, nonincreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{trace_channel, uclon_channel, umeasprep_channel};
    use crate::combinat::{mixture_bound, rational_to_f64};
    use num_complex::Complex64;
    use rand::Rng;

    fn opts() -> DiamondOptions {
        DiamondOptions::default()
    }

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm(&CMat::identity(4, 4)) - 4.0).abs() < 1e-12);
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(-1.0)]));
        assert!((trace_norm(&m) - 2.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = CMat::from_fn(5, 5, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let h = linalg::hermitize(&g);
        let s: f64 = linalg::eigvalsh(&h).iter().map(|v| v.abs()).sum();
        assert!((trace_norm(&h) - s).abs() < 1e-12);
    }

    #[test]
    fn zero_map() {
        let ch = umeasprep_channel(2, 2, 1).unwrap();
        let r = diamond_distance(&ch, &ch, &opts()).unwrap();
        assert!(r.lower.abs() < 1e-12 && r.upper.abs() < 1e-9);
    }

    #[test]
    fn single_channel_has_norm_one() {
        for ch in [umeasprep_channel(2, 2, 1).unwrap(), uclon_channel(2, 1, 2).unwrap(), trace_channel(3, 2, 1).unwrap()] {
            let map = HermitianMap::from_channel(&ch);
            let cert = sdp_upper(&map, 1e-6).unwrap();
            assert!((cert.upper - 1.0).abs() < 1e-6, "{}", cert.upper);
            let (low, w) = seesaw_lower(&map, 1, 50, 1).unwrap();
            assert!((low - 1.0).abs() < 1e-9);
            assert!((w.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn estimation_example_sandwich() {
        let a = umeasprep_channel(2, 4, 1).unwrap();
        let b = trace_channel(2, 4, 1).unwrap();
        let r = diamond_distance(&a, &b, &opts()).unwrap();
        assert!(r.upper - r.lower < 1e-4, "{r:?}");
        assert!(r.sdp_gap <= 1e-6);
        assert!(r.upper <= 2.0 / 3.0 + 1e-9);
        assert!(r.choi_lower <= r.lower + 1e-9);
    }

    #[test]
    fn grading_is_used_and_harmless() {
        let a = umeasprep_channel(2, 3, 2).unwrap();
        let b = trace_channel(2, 3, 2).unwrap();
        let map = HermitianMap::difference(&a, &b).unwrap();
        let graded = sdp_upper(&map, 1e-6).unwrap();
        assert!(graded.classes > 1);
        let layout = Layout::new(&map, vec![(0..map.dim_in() * map.dim_out()).collect()]);
        let (problem, _) = build_problem(&map, &layout);
        let sol = sdp::solve(&problem, &SdpSettings::default()).unwrap();
        assert!((sol.dual_objective - graded.upper).abs() < 1e-6);
    }

    #[test]
    fn complex_choi_path() {
        // conjugating by a diagonal phase keeps the norm but makes J complex
        let a = umeasprep_channel(2, 2, 1).unwrap();
        let b = trace_channel(2, 2, 1).unwrap();
        let base = HermitianMap::difference(&a, &b).unwrap();
        let (ni, no) = (base.dim_in(), base.dim_out());
        let phase: Vec<Complex64> = (0..ni).map(|i| Complex64::from_polar(1.0, 0.7 * i as f64 + 0.3)).collect();
        let d = CMat::from_fn(ni * no, ni * no, |p, q| if p == q { phase[p % ni] } else { c(0.0) });
        let rotated = &d * &base.choi * d.adjoint();
        let map = HermitianMap::new(base.input, base.output, rotated).unwrap();
        let plain = sdp_upper(&base, 1e-6).unwrap().upper;
        let rot = sdp_upper(&map, 1e-6).unwrap().upper;
        assert!((plain - rot).abs() < 1e-6);
        let (low, _) = seesaw_lower(&map, 1, 100, 2).unwrap();
        assert!((low - rot).abs() < 1e-4);
    }

    #[test]
    fn seesaw_is_monotone() {
        let a = umeasprep_channel(2, 3, 1).unwrap();
        let b = trace_channel(2, 3, 1).unwrap();
        let map = HermitianMap::difference(&a, &b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..3 {
            let v = linalg::haar_vector(map.dim_in() * map.dim_in(), &mut rng);
            let ni = map.dim_in();
            let start = CMat::from_fn(ni, ni, |x, i| v[x * ni + i]);
            let (hist, _, _) = seesaw_run(&map, start, 30);
            assert!(hist.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let space = SymSpace::plain(2);
        let mut j = CMat::zeros(4, 4);
        j[(0, 1)] = c(1.0);
        assert!(HermitianMap::new(space, space, j.clone()).is_err());
        let map = HermitianMap { input: space, output: space, choi: j };
        assert!(seesaw_lower(&map, 0, 5, 0).is_err());
        assert!(sdp_upper(&map, 1e-6).is_err());
    }

    #[test]
    fn estimation_bounds_small_grid() {
        for d in [2usize, 3] {
            for k in 1..=2usize {
                let top = if d == 2 { 6 } else { 3 };
                for m in k..=top {
                    let a = umeasprep_channel(d, m, k).unwrap();
                    let b = trace_channel(d, m, k).unwrap();
                    let r = diamond_distance(&a, &b, &opts()).unwrap();
                    let rep = combinat::analytic_bounds(d as u32, m as u32, k as u32).unwrap();
                    let mix = rational_to_f64(&mixture_bound(d as u32, m as u32, k as u32, k as u32));
                    assert!(r.upper <= mix + 1e-6, "d={d} M={m} k={k}: {} > {mix}", r.upper);
                    assert!(r.upper <= rep.bound_estimation_1_f64() + 1e-6);
                    assert!(r.upper <= rep.bound_estimation_2_exact.unwrap() + 1e-6);
                    assert!(r.gap <= 1e-3, "d={d} M={m} k={k}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn cloning_distance_bound() {
        for m in 1..=2usize {
            for k in m..=6usize {
                let a = umeasprep_channel(2, m, k).unwrap();
                let b = uclon_channel(2, m, k).unwrap();
                let r = diamond_distance(&a, &b, &opts()).unwrap();
                let rep = combinat::analytic_bounds(2, m as u32, k as u32).unwrap();
                assert!(r.upper <= rep.bound_cloning_f64() + 1e-6);
                assert!(r.gap <= 1e-3);
            }
        }
    }

    #[test]
    fn table_rows() {
        let t = bound_comparison_table(2, 2..=5, 1, &opts()).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert!(t.rows.iter().all(|r| r.within_bounds));
        assert!(t.nonincreasing);
        let rep = combinat::analytic_bounds(2, 10, 1).unwrap();
        assert!((rep.bound_estimation_1_f64() - 1.0 / 3.0).abs() < 1e-15);
        assert!((rep.bound_estimation_2_exact.unwrap() - 0.1861).abs() < 1e-4);
    }

    #[test]
    fn full_cloning_is_within_sqrt_bound() {
        // k = M: measure-and-prepare against the identity
        for m in 1..=4usize {
            let a = umeasprep_channel(2, m, m).unwrap();
            let b = SymChannel::identity(SymSpace::new(2, m));
            let r = diamond_distance(&a, &b, &opts()).unwrap();
            let bound = 4.0 * (1.0 - (1.0 / (m as f64 + 1.0)).sqrt());
            assert!(r.upper <= bound + 1e-6);
        }
    }
}
