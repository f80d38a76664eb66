//! Dense complex linear-algebra helpers shared by the other modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Environment variable overriding the dense size guard.
pub const MAX_DENSE_ENV: &str = "SYMCLONE_MAX_DENSE";

/// Default bound on the dimension of a dense tensor-power space (`d^M`).
pub const DEFAULT_MAX_DENSE: u128 = 1 << 20;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Current dense size guard, honoring [`MAX_DENSE_ENV`].
pub fn max_dense() -> u128 {
    std::env::var(MAX_DENSE_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u128>().ok())
        .unwrap_or(DEFAULT_MAX_DENSE)
}

/// `d^m` as an exact integer, failing with a resource error above the guard.
pub fn guarded_power(d: usize, m: usize, what: &str) -> Result<usize> {
    let limit = max_dense();
    let mut acc: u128 = 1;
    for _ in 0..m {
        acc = acc.saturating_mul(d as u128);
        if acc > limit {
            return Err(Error::Resource {
                what: what.to_string(),
                needed: (d as u128).saturating_pow(m as u32),
                limit,
            });
        }
    }
    Ok(acc as usize)
}

/// Largest entry modulus.
pub trait MaxAbs {
    fn max_abs(&self) -> f64;
}

impl MaxAbs for CMat {
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }
}

impl MaxAbs for CVec {
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }
}

pub fn hermitian_residual(a: &CMat) -> f64 {
    (a - a.adjoint()).max_abs()
}

pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Eigen-decomposition of the Hermitian part of `a`, eigenvalues ascending.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitize(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    eigh(a).0
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    eigvalsh(a).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(a: &CMat) -> f64 {
    eigvalsh(a).last().copied().unwrap_or(0.0)
}

/// Sum of singular values.
pub fn trace_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.iter().sum()
}

/// Trace norm of a Hermitian matrix through its spectrum.
pub fn trace_norm_hermitian(a: &CMat) -> f64 {
    eigvalsh(a).iter().map(|v| v.abs()).sum()
}

/// Square root of the positive part of a Hermitian matrix. Eigenvalues at
/// rounding level are dropped so that null spaces stay clean.
pub fn psd_sqrt(a: &CMat) -> CMat {
    let (vals, vecs) = eigh(a);
    let n = a.nrows();
    let floor = 64.0 * f64::EPSILON * vals.iter().fold(0.0f64, |m, v| m.max(v.abs())) * n as f64;
    let mut out = CMat::zeros(n, n);
    for (idx, &v) in vals.iter().enumerate() {
        if v <= floor {
            continue;
        }
        let col = vecs.column(idx);
        out += (col * col.adjoint()).scale(v.sqrt());
    }
    out
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Traces out the first factor of an operator on `C^{d1} (x) C^{d2}`.
pub fn partial_trace_first(a: &CMat, d1: usize, d2: usize) -> CMat {
    let mut out = CMat::zeros(d2, d2);
    for i in 0..d1 {
        out += a.view((i * d2, i * d2), (d2, d2));
    }
    out
}

/// Traces out the second factor of an operator on `C^{d1} (x) C^{d2}`.
pub fn partial_trace_second(a: &CMat, d1: usize, d2: usize) -> CMat {
    CMat::from_fn(d1, d1, |r, col| {
        (0..d2).map(|j| a[(r * d2 + j, col * d2 + j)]).sum()
    })
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Haar-random unit vector of length `n`.
pub fn haar_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(n, |_, _| complex_gaussian(rng));
    let norm = v.norm();
    v.unscale(norm)
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { c(1.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random density matrix `G G† / Tr` with a Ginibre factor of the given rank.
pub fn random_density<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, rank.max(1), |_, _| complex_gaussian(rng));
    let rho = &g * g.adjoint();
    let tr = trace(&rho).re;
    rho.unscale(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trace_norm_of_identity_and_sign_matrix() {
        assert!((trace_norm(&CMat::identity(5, 5)) - 5.0).abs() < 1e-12);
        let a = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(-1.0)]));
        assert!((trace_norm(&a) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_matches_spectrum_for_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..7 {
            let g = CMat::from_fn(n, n, |_, _| complex_gaussian(&mut rng));
            let h = hermitize(&g);
            let spectral: f64 = eigvalsh(&h).iter().map(|v| v.abs()).sum();
            assert!((trace_norm(&h) - spectral).abs() < 1e-12);
            assert!((trace_norm_hermitian(&h) - spectral).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = haar_unitary(4, &mut rng);
        assert!((&u * u.adjoint() - CMat::identity(4, 4)).max_abs() < 1e-12);
    }

    #[test]
    fn partial_traces_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_density(2, 2, &mut rng);
        let b = random_density(3, 3, &mut rng);
        let ab = kron(&a, &b);
        assert!((partial_trace_first(&ab, 2, 3) - &b).max_abs() < 1e-12);
        assert!((partial_trace_second(&ab, 2, 3) - &a).max_abs() < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density(5, 3, &mut rng);
        let s = psd_sqrt(&rho);
        assert!((&s * &s - &rho).max_abs() < 1e-10);
    }
}
