//! Hermitian eigenvalues by cyclic Jacobi rotations.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest dimension accepted by [`hermitian_eigenvalues`].
pub const MAX_DIMENSION: usize = 256;

/// Inputs must be Hermitian to this absolute tolerance (scaled by `‖H‖_F`).
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Sweeps stop once the off-diagonal Frobenius norm drops below this
/// fraction of `‖H‖_F`.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-13;

const MAX_SWEEPS: usize = 64;

fn frobenius(h: &Array2<Complex64>) -> f64 {
    h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn off_diagonal(h: &Array2<Complex64>) -> f64 {
    let n = h.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += h[[i, j]].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Returns `Ok(())` if `h` is square and Hermitian to the given tolerance.
pub fn check_hermitian(h: &Array2<Complex64>, tolerance: f64) -> Result<()> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::Domain(format!("matrix is {}x{}, not square", n, h.ncols())));
    }
    let scale = frobenius(h).max(1.0);
    for i in 0..n {
        for j in i..n {
            let dev = (h[[i, j]] - h[[j, i]].conj()).norm();
            if dev > tolerance * scale {
                return Err(Error::Domain(format!(
                    "matrix is not Hermitian: |H[{i},{j}] - conj(H[{j},{i}])| = {dev:e}"
                )));
            }
        }
    }
    Ok(())
}

/// Eigenvalues of a complex Hermitian matrix, sorted ascending.
pub fn hermitian_eigenvalues(h: &Array2<Complex64>) -> Result<Vec<f64>> {
    let n = h.nrows();
    if n > MAX_DIMENSION {
        return Err(Error::Resource(format!(
            "dimension {n} exceeds the eigen-solver cap {MAX_DIMENSION}"
        )));
    }
    check_hermitian(h, HERMITIAN_TOLERANCE)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    // symmetrise so that rotations act on an exactly Hermitian matrix
    let mut a = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            Complex64::new(h[[i, i]].re, 0.0)
        } else {
            (h[[i, j]] + h[[j, i]].conj()) * 0.5
        }
    });
    let target = OFF_DIAGONAL_TOLERANCE * frobenius(&a);

    let mut sweeps = 0;
    while off_diagonal(&a) > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi iteration did not converge in {MAX_SWEEPS} sweeps (off-diagonal {:e})",
                off_diagonal(&a)
            )));
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, p, q);
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// One Jacobi rotation annihilating `a[p, q]`.
///
/// The rotation is `J = D R` with `D = diag(.., 1_p, .., ū_q, ..)` making the
/// pivot real and `R` the classical real rotation; `a ← J† a J`.
fn rotate(a: &mut Array2<Complex64>, p: usize, q: usize) {
    let b = a[[p, q]];
    let g = b.norm();
    if g == 0.0 {
        return;
    }
    let u = b / g;
    let app = a[[p, p]].re;
    let aqq = a[[q, q]].re;
    let theta = (aqq - app) / (2.0 * g);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.nrows();

    // columns: a ← a J
    let uc = u.conj();
    for k in 0..n {
        let akp = a[[k, p]];
        let akq = a[[k, q]];
        a[[k, p]] = akp * c - akq * uc * s;
        a[[k, q]] = akp * s + akq * uc * c;
    }
    // rows: a ← J† a
    for k in 0..n {
        let apk = a[[p, k]];
        let aqk = a[[q, k]];
        a[[p, k]] = apk * c - aqk * u * s;
        a[[q, k]] = apk * s + aqk * u * c;
    }
    a[[p, q]] = Complex64::new(0.0, 0.0);
    a[[q, p]] = Complex64::new(0.0, 0.0);
    a[[p, p]] = Complex64::new(app - t * g, 0.0);
    a[[q, q]] = Complex64::new(aqq + t * g, 0.0);
}

/// Eigenvalues `(λ₋, λ₊)` of `[[a, b], [b̄, c]]`:
/// `λ± = ½((a + c) ± √((a − c)² + 4|b|²))`.
pub fn eigenvalues_2x2(a: f64, b: Complex64, c: f64) -> (f64, f64) {
    let root = ((a - c).powi(2) + 4.0 * b.norm_sqr()).sqrt();
    (0.5 * (a + c - root), 0.5 * (a + c + root))
}

/// Trace norm `Σ|λ|` of a Hermitian matrix.
pub fn trace_norm(h: &Array2<Complex64>) -> Result<f64> {
    Ok(hermitian_eigenvalues(h)?.iter().map(|l| l.abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Array2<Complex64> {
        let mut h = Array2::zeros((n, n));
        for i in 0..n {
            h[[i, i]] = c(rng.random_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                h[[i, j]] = z;
                h[[j, i]] = z.conj();
            }
        }
        h
    }

    #[test]
    fn diagonal_input() {
        let h = Array2::from_diag(&ndarray::arr1(&[c(3.0, 0.0), c(-1.0, 0.0)]));
        assert_eq!(hermitian_eigenvalues(&h).unwrap(), vec![-1.0, 3.0]);
    }

    #[test]
    fn pauli_x() {
        let h = ndarray::arr2(&[[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]);
        let e = hermitian_eigenvalues(&h).unwrap();
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn trace_identities_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 8, 17] {
            let h = random_hermitian(&mut rng, n);
            let e = hermitian_eigenvalues(&h).unwrap();
            let trace: f64 = (0..n).map(|i| h[[i, i]].re).sum();
            let frob2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
            assert_abs_diff_eq!(e.iter().sum::<f64>(), trace, epsilon = 1e-10);
            assert_abs_diff_eq!(e.iter().map(|l| l * l).sum::<f64>(), frob2, epsilon = 1e-10);
        }
    }

    #[test]
    fn closed_form_2x2() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let h = random_hermitian(&mut rng, 2);
            let (lo, hi) = eigenvalues_2x2(h[[0, 0]].re, h[[0, 1]], h[[1, 1]].re);
            let e = hermitian_eigenvalues(&h).unwrap();
            assert_abs_diff_eq!(lo, e[0], epsilon = 1e-12);
            assert_abs_diff_eq!(hi, e[1], epsilon = 1e-12);
            // trace identity pins the centre at (a + c)/2
            assert_abs_diff_eq!(lo + hi, h[[0, 0]].re + h[[1, 1]].re, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = ndarray::arr2(&[[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]);
        assert!(matches!(hermitian_eigenvalues(&h), Err(Error::Domain(_))));
        let rect = Array2::<Complex64>::zeros((2, 3));
        assert!(hermitian_eigenvalues(&rect).is_err());
    }

    #[test]
    fn rejects_oversized() {
        let h = Array2::<Complex64>::zeros((MAX_DIMENSION + 1, MAX_DIMENSION + 1));
        assert!(matches!(hermitian_eigenvalues(&h), Err(Error::Resource(_))));
    }

    #[test]
    fn degenerate_spectrum() {
        let mut h = Array2::<Complex64>::eye(4);
        h[[0, 3]] = c(0.0, 1e-30);
        h[[3, 0]] = c(0.0, -1e-30);
        let e = hermitian_eigenvalues(&h).unwrap();
        for l in e {
            assert_abs_diff_eq!(l, 1.0, epsilon = 1e-15);
        }
    }
}
