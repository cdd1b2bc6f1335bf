//! Complex matrix helpers shared across the simulator.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// One circularly-symmetric complex Gaussian sample with E{|z|^2} = `var`.
/// Real and imaginary parts are i.i.d. N(0, var/2).
#[inline]
pub fn cn_sample<R: Rng + ?Sized>(var: f64, rng: &mut R) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(s * re, s * im)
}

/// Matrix with i.i.d. CN(0, var) entries.
pub fn crandn<R: Rng + ?Sized>(rows: usize, cols: usize, var: f64, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| cn_sample(var, rng))
}

/// Vector with i.i.d. CN(0, var) entries.
pub fn crandn_vec<R: Rng + ?Sized>(len: usize, var: f64, rng: &mut R) -> CVec {
    CVec::from_fn(len, |_, _| cn_sample(var, rng))
}

/// Hermitian part (A + A^H)/2; cheap guard against round-off asymmetry before
/// a Cholesky factorization.
pub fn hermitize(a: &CMat) -> CMat {
    let n = a.nrows();
    let mut out = a.clone();
    for i in 0..n {
        for j in 0..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            out[(i, j)] = v;
        }
        out[(i, i)] = Complex::new(out[(i, i)].re, 0.0);
    }
    out
}

/// Cholesky of a Hermitian positive (semi-)definite matrix with jitter
/// escalation: retries with 1e-12..1e-4 times the mean diagonal added until
/// the factorization succeeds.
pub fn chol_jittered(a: &CMat) -> Result<Cholesky<C64, Dyn>> {
    let h = hermitize(a);
    if let Some(c) = Cholesky::new(h.clone()) {
        return Ok(c);
    }
    let n = h.nrows();
    let scale = (0..n).map(|i| h[(i, i)].re.abs()).sum::<f64>() / n.max(1) as f64;
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut jitter = 1e-12;
    while jitter <= 1e-4 {
        let mut j = h.clone();
        for i in 0..n {
            j[(i, i)] += Complex::new(jitter * scale, 0.0);
        }
        if let Some(c) = Cholesky::new(j) {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(Error::IllConditioned(format!(
        "cholesky failed for {n}x{n} matrix after jitter escalation"
    )))
}

/// log2 det(I + A) for a Hermitian PSD `A`, via Cholesky of I + A.
pub fn logdet2_eye_plus(a: &CMat) -> Result<f64> {
    let n = a.nrows();
    let mut m = hermitize(a);
    for i in 0..n {
        m[(i, i)] += Complex::new(1.0, 0.0);
    }
    let chol = chol_jittered(&m)?;
    let l = chol.l();
    let mut acc = 0.0;
    for i in 0..n {
        acc += l[(i, i)].re.ln();
    }
    Ok(2.0 * acc / std::f64::consts::LN_2)
}

/// Solves A X = B for Hermitian positive definite A.
pub fn solve_hpd(a: &CMat, b: &CMat) -> Result<CMat> {
    Ok(chol_jittered(a)?.solve(b))
}

/// Lower factor L with L L^H = A for Hermitian PSD `A`. Falls back to an
/// eigenvalue square root (negative eigenvalues clipped to zero) when the
/// matrix is singular, so it is safe for sampling from degenerate Gaussians.
pub fn psd_factor(a: &CMat) -> CMat {
    let h = hermitize(a);
    if let Some(c) = Cholesky::new(h.clone()) {
        return c.l().clone_owned();
    }
    let eig = h.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut u = eig.eigenvectors;
    for j in 0..n {
        let s = eig.eigenvalues[j].max(0.0).sqrt();
        for i in 0..n {
            u[(i, j)] *= Complex::new(s, 0.0);
        }
    }
    u
}

/// Frobenius norm of a complex matrix.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// FNV-1a hash of raw bytes; stable across platforms and rust versions,
/// used for config fingerprints in CSV output.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn cn_sample_moments() {
        let mut rng = stream(1, &[99]);
        let n = 200_000;
        let mut mean = Complex::new(0.0, 0.0);
        let mut pow = 0.0;
        for _ in 0..n {
            let z = cn_sample(2.0, &mut rng);
            mean += z;
            pow += z.norm_sqr();
        }
        mean /= n as f64;
        pow /= n as f64;
        assert!(mean.norm() < 0.02, "mean {mean} should be near 0");
        assert!((pow - 2.0).abs() < 0.03, "per-entry power {pow} should be near 2");
    }

    #[test]
    fn logdet_matches_diagonal_case() {
        // I + diag(1, 3) has det 2*4 = 8.
        let mut a = CMat::zeros(2, 2);
        a[(0, 0)] = Complex::new(1.0, 0.0);
        a[(1, 1)] = Complex::new(3.0, 0.0);
        let ld = logdet2_eye_plus(&a).unwrap();
        assert!((ld - 3.0).abs() < 1e-12);
    }

    #[test]
    fn psd_factor_reconstructs() {
        let mut rng = stream(7, &[1]);
        let b = crandn(4, 4, 1.0, &mut rng);
        let a = &b * b.adjoint();
        let l = psd_factor(&a);
        let back = &l * l.adjoint();
        assert!(fro_norm(&(&back - &a)) < 1e-9 * fro_norm(&a).max(1.0));
    }

    #[test]
    fn solve_hpd_roundtrip() {
        let mut rng = stream(7, &[2]);
        let b = crandn(5, 5, 1.0, &mut rng);
        let mut a = &b * b.adjoint();
        for i in 0..5 {
            a[(i, i)] += Complex::new(1.0, 0.0);
        }
        let x_true = crandn(5, 2, 1.0, &mut rng);
        let rhs = &a * &x_true;
        let x = solve_hpd(&a, &rhs).unwrap();
        assert!(fro_norm(&(&x - &x_true)) < 1e-9);
    }
}
