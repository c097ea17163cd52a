//! Dense eigen-solves shared by the characteristic-polynomial and state-space code.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Parlett–Reinsch balancing: a diagonal similarity (powers of two) that
/// equalises row and column norms. Eigenvalues are unchanged.
pub fn balance<T: Real>(mut a: DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let radix: T = lit(2.0);
    let radix2 = radix * radix;
    let threshold: T = lit(0.95);
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let s = c + r;
            let mut f = T::one();
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix2;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix2;
            }
            if (c + r) / f < threshold * s {
                done = false;
                let inv = T::one() / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
    a
}

/// All eigenvalues of a real square matrix, sorted by descending real part
/// (ties: positive imaginary part first).
pub fn eigenvalues<T: Real>(a: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("matrix has non-finite entries".into()));
    }
    let schur = Schur::try_new(balance(a.clone()), T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::Eigensolver("Schur iteration did not converge".into()))?;
    let mut ev: Vec<Complex<T>> = schur.complex_eigenvalues().iter().copied().collect();
    sort_descending_real(&mut ev);
    Ok(ev)
}

pub fn sort_descending_real<T: Real>(v: &mut [Complex<T>]) {
    v.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Unit vector spanning (approximately) the null space of `a - λI`: the right
/// singular vector of the smallest singular value.
pub fn null_vector<T: Real>(a: &DMatrix<T>, lambda: Complex<T>) -> Result<DVector<Complex<T>>> {
    let n = a.nrows();
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        let v = Complex::new(a[(i, j)], T::zero());
        if i == j {
            v - lambda
        } else {
            v
        }
    });
    let svd = nalgebra::SVD::try_new(shifted, false, true, T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::Eigensolver("SVD did not converge".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Eigensolver("SVD returned no right vectors".into()))?;
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .fold(None::<(usize, T)>, |best, (i, &s)| match best {
            Some((_, bv)) if bv <= s => best,
            _ => Some((i, s)),
        })
        .map_or(0, |(i, _)| i);
    Ok(v_t.row(k).transpose().map(|z| z.conj()))
}
