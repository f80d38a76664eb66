//! Small dense primal-dual interior-point solver for block-diagonal SDPs.
//!
//! Problem form (real symmetric blocks):
//!
//! ```text
//! (P)  maximize  tr(C X)   s.t.  tr(A_i X) = a_i,  X ⪰ 0
//! (D)  minimize  a·y       s.t.  Z = Σ_i y_i A_i − C ⪰ 0
//! ```
//!
//! Infeasible-start path following with the HKM search direction and a
//! Mehrotra predictor-corrector step. Constraint matrices are sparse; the
//! Schur complement is formed entry by entry and factored densely.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

pub type RMat = DMatrix<f64>;

/// One nonzero of a symmetric constraint matrix. Off-diagonal entries must be
/// listed in both orientations.
#[derive(Debug, Clone, Copy)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub val: f64,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub c: Vec<RMat>,
    pub constraints: Vec<Vec<Entry>>,
    pub a: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpSettings {
    pub max_iter: usize,
    /// Relative primal-dual gap target.
    pub gap_tol: f64,
    /// Relative infeasibility target.
    pub feas_tol: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { max_iter: 120, gap_tol: 1e-9, feas_tol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: Vec<RMat>,
    pub y: DVector<f64>,
    pub z: Vec<RMat>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

impl SdpProblem {
    fn apply(&self, x: &[RMat]) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints
                .iter()
                .map(|con| con.iter().map(|e| e.val * x[e.block][(e.row, e.col)]).sum::<f64>()),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<RMat> {
        let mut out: Vec<RMat> = self.block_sizes.iter().map(|&n| RMat::zeros(n, n)).collect();
        for (con, &yi) in self.constraints.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for e in con {
                out[e.block][(e.row, e.col)] += yi * e.val;
            }
        }
        out
    }

    fn total_size(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    fn validate(&self) -> Result<()> {
        if self.c.len() != self.block_sizes.len() || self.constraints.len() != self.a.len() {
            return Err(Error::Argument("inconsistent SDP data".into()));
        }
        for con in &self.constraints {
            for e in con {
                if e.block >= self.block_sizes.len()
                    || e.row >= self.block_sizes[e.block]
                    || e.col >= self.block_sizes[e.block]
                {
                    return Err(Error::Argument("constraint entry out of range".into()));
                }
            }
        }
        Ok(())
    }

    /// Constraint entries grouped by block, built once per solve.
    fn block_index(&self) -> Vec<Vec<(usize, Vec<Entry>)>> {
        let mut per_block: Vec<Vec<(usize, Vec<Entry>)>> = vec![Vec::new(); self.block_sizes.len()];
        for (i, con) in self.constraints.iter().enumerate() {
            let mut by_block: Vec<(usize, Vec<Entry>)> = Vec::new();
            for e in con {
                match by_block.iter_mut().find(|(b, _)| *b == e.block) {
                    Some((_, v)) => v.push(*e),
                    None => by_block.push((e.block, vec![*e])),
                }
            }
            for (b, es) in by_block {
                per_block[b].push((i, es));
            }
        }
        per_block
    }
}

/// Schur complement `M_ij = tr(A_i X A_j Z^{-1})`.
fn schur(m: usize, index: &[Vec<(usize, Vec<Entry>)>], x: &[RMat], zinv: &[RMat]) -> RMat {
    let mut out = RMat::zeros(m, m);
    for (b, list) in index.iter().enumerate() {
        let (xb, zb) = (&x[b], &zinv[b]);
        for (p, (i, ei)) in list.iter().enumerate() {
            for (j, ej) in &list[p..] {
                let mut acc = 0.0;
                for e1 in ei {
                    for e2 in ej {
                        acc += e1.val * e2.val * xb[(e1.col, e2.row)] * zb[(e2.col, e1.row)];
                    }
                }
                out[(*i, *j)] += acc;
                if i != j {
                    out[(*j, *i)] += acc;
                }
            }
        }
    }
    out
}

fn dot(a: &[RMat], b: &[RMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &[RMat]) -> f64 {
    dot(a, a).sqrt()
}

fn sym(a: &RMat) -> RMat {
    (a + a.transpose()) * 0.5
}

fn inverse_spd(a: &RMat) -> Option<RMat> {
    Cholesky::new(a.clone()).map(|ch| ch.inverse())
}

/// Largest `α` with `X + α dX ⪰ 0` (capped at `cap`).
fn max_step(x: &[RMat], dx: &[RMat], cap: f64) -> f64 {
    let mut alpha = cap;
    for (xb, dxb) in x.iter().zip(dx) {
        let Some(ch) = Cholesky::new(xb.clone()) else {
            return 0.0;
        };
        let l = ch.l();
        let Some(linv) = l.clone().try_inverse() else {
            return 0.0;
        };
        let w = sym(&(&linv * dxb * linv.transpose()));
        let lmin = SymmetricEigen::new(w).eigenvalues.min();
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    alpha
}

fn axpy(x: &[RMat], alpha: f64, dx: &[RMat]) -> Vec<RMat> {
    x.iter().zip(dx).map(|(a, b)| a + b * alpha).collect()
}

pub fn solve(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    problem.validate()?;
    let m = problem.constraints.len();
    let n_total = problem.total_size() as f64;
    let a = DVector::from_vec(problem.a.clone());
    let index = problem.block_index();
    let norm_a = a.norm();
    let norm_c = frob(&problem.c);

    // starting point scaled to the data
    let mut max_con: f64 = 0.0;
    for con in &problem.constraints {
        let f: f64 = con.iter().map(|e| e.val * e.val).sum::<f64>().sqrt();
        max_con = max_con.max(f);
    }
    let mut alpha0: f64 = 1.0;
    for (con, ai) in problem.constraints.iter().zip(&problem.a) {
        let f: f64 = con.iter().map(|e| e.val * e.val).sum::<f64>().sqrt();
        alpha0 = alpha0.max(n_total * (1.0 + ai.abs()) / (1.0 + f));
    }
    let beta0 = (1.0 + max_con.max(norm_c)) / n_total.sqrt();
    let mut x: Vec<RMat> = problem.block_sizes.iter().map(|&n| RMat::identity(n, n) * alpha0).collect();
    let mut z: Vec<RMat> = problem.block_sizes.iter().map(|&n| RMat::identity(n, n) * (10.0 * beta0)).collect();
    let mut y = DVector::zeros(m);

    for iter in 0..settings.max_iter {
        let aty = problem.adjoint(&y);
        let rd: Vec<RMat> = aty
            .iter()
            .zip(&problem.c)
            .zip(&z)
            .map(|((at, c), zb)| at - c - zb)
            .collect();
        let rp = &a - problem.apply(&x);
        let pobj = dot(&problem.c, &x);
        let dobj = a.dot(&y);
        let pinf = rp.norm() / (1.0 + norm_a);
        let dinf = frob(&rd) / (1.0 + norm_c);
        let gap = (dobj - pobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let mu = dot(&x, &z) / n_total;
        if gap < settings.gap_tol && pinf < settings.feas_tol && dinf < settings.feas_tol {
            return Ok(SdpSolution {
                x,
                y,
                z,
                primal_objective: pobj,
                dual_objective: dobj,
                iterations: iter,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
            });
        }

        let zinv: Vec<RMat> = z
            .iter()
            .map(|zb| inverse_spd(zb).ok_or_else(|| Error::SolverFailure("dual slack lost definiteness".into())))
            .collect::<Result<_>>()?;
        let mut schur = schur(m, &index, &x, &zinv);
        let chol = match Cholesky::new(schur.clone()) {
            Some(ch) => ch,
            None => {
                let reg = 1e-12 * (1.0 + schur.diagonal().amax());
                for i in 0..m {
                    schur[(i, i)] += reg;
                }
                Cholesky::new(schur).ok_or_else(|| Error::SolverFailure("Schur complement is singular".into()))?
            }
        };
        let x_rd_zinv: Vec<RMat> = x.iter().zip(&rd).zip(&zinv).map(|((xb, r), zi)| xb * r * zi).collect();

        let direction = |sigma_mu: f64, corr: Option<(&[RMat], &[RMat])>| -> (Vec<RMat>, DVector<f64>, Vec<RMat>) {
            let q: Vec<RMat> = (0..x.len())
                .map(|b| {
                    let mut qb = &zinv[b] * sigma_mu - &x[b] - &x_rd_zinv[b];
                    if let Some((dxa, dza)) = corr {
                        qb -= &dxa[b] * &dza[b] * &zinv[b];
                    }
                    qb
                })
                .collect();
            let rhs = problem.apply(&q) - &rp;
            let dy = chol.solve(&rhs);
            let atdy = problem.adjoint(&dy);
            let dz: Vec<RMat> = atdy.iter().zip(&rd).map(|(t, r)| t + r).collect();
            let dx: Vec<RMat> = (0..x.len())
                .map(|b| sym(&(&q[b] - &x[b] * &atdy[b] * &zinv[b])))
                .collect();
            (dx, dy, dz)
        };

        let (dxa, _dya, dza) = direction(0.0, None);
        let ap = max_step(&x, &dxa, 1.0);
        let ad = max_step(&z, &dza, 1.0);
        let mu_aff = dot(&axpy(&x, ap, &dxa), &axpy(&z, ad, &dza)) / n_total;
        let sigma = ((mu_aff / mu).max(0.0)).powi(3).min(1.0);

        let (dx, dy, dz) = direction(sigma * mu, Some((&dxa, &dza)));
        let ap = (0.95 * max_step(&x, &dx, 1.0 / 0.95)).min(1.0);
        let ad = (0.95 * max_step(&z, &dz, 1.0 / 0.95)).min(1.0);
        if ap <= 0.0 || ad <= 0.0 {
            return Err(Error::SolverFailure(format!("zero step length at iteration {iter}")));
        }
        x = axpy(&x, ap, &dx);
        y += &dy * ad;
        z = axpy(&z, ad, &dz);
    }
    Err(Error::SolverFailure(format!(
        "no convergence within {} iterations",
        settings.max_iter
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// max λ_max(C) as an SDP: min y s.t. y I − C ⪰ 0.
    #[test]
    fn largest_eigenvalue() {
        let c = RMat::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, -1.0]);
        let con = (0..3).map(|i| Entry { block: 0, row: i, col: i, val: 1.0 }).collect();
        let p = SdpProblem { block_sizes: vec![3], c: vec![c], constraints: vec![con], a: vec![1.0] };
        let sol = solve(&p, &SdpSettings::default()).unwrap();
        assert!((sol.dual_objective - 3.0).abs() < 1e-7, "{}", sol.dual_objective);
        assert!((sol.primal_objective - 3.0).abs() < 1e-7);
    }

    /// Two blocks with a coupling constraint: max x11 + 2 y11 with trace sum 1.
    #[test]
    fn two_blocks() {
        let c = vec![RMat::from_row_slice(1, 1, &[1.0]), RMat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5])];
        let con = vec![
            Entry { block: 0, row: 0, col: 0, val: 1.0 },
            Entry { block: 1, row: 0, col: 0, val: 1.0 },
            Entry { block: 1, row: 1, col: 1, val: 1.0 },
        ];
        let p = SdpProblem { block_sizes: vec![1, 2], c, constraints: vec![con], a: vec![1.0] };
        let sol = solve(&p, &SdpSettings::default()).unwrap();
        assert!((sol.primal_objective - 2.0).abs() < 1e-7);
    }
}
