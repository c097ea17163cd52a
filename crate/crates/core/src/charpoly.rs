//! Per-mode characteristic polynomial and the critical eigenvalue `μ_cr`.
//!
//! For uniform R/X ratio `ρ` and droop ratio `k = m/n`, every eigenvalue `μ`
//! of `C = M B'` contributes the five roots `λ` of
//!
//! ```text
//! k g(λ)² (h(λ)² + 1) λ + g(λ) (k + λ) μ + μ² = 0
//! g(λ) = 1 + τλ,   h(λ) = ρ + λ/ω₀
//! ```
//!
//! to the spectrum of the full state matrix. Roots come from the eigenvalues
//! of the companion matrix in the rescaled variable `z = λ/ω₀`, which keeps
//! the coefficients within a few orders of magnitude of each other.

use std::io::Write;

use nalgebra::{DMatrix, Normed};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{self, sort_descending_real};
use crate::netmodel::NetworkModel;
use crate::scalar::{lit, to_f64, Real};

/// Bisection bracket for `μ_cr`.
pub const MU_BRACKET: (f64, f64) = (1.0, 1e5);
/// Log-spaced points checked before bisecting.
pub const PRESCAN_POINTS: usize = 32;
/// Default relative tolerance of the bisection.
pub const MU_CR_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPolyModel<T> {
    pub rho: T,
    pub k: T,
    /// Power-filter time constant, seconds.
    pub tau: T,
    /// Nominal angular frequency, rad/s.
    pub omega0: T,
}

impl<T: Real> CharPolyModel<T> {
    pub fn new(rho: T, k: T, tau: T, omega0: T) -> Self {
        Self { rho, k, tau, omega0 }
    }

    pub fn from_network(model: &NetworkModel<T>) -> Self {
        let tau = model.inverters.first().map(|i| i.tau).unwrap_or_else(|| T::one() / model.omega_c());
        Self::new(model.rho, model.k, tau, model.base.omega0)
    }

    /// Coefficients of the quintic in `λ`, constant term first.
    pub fn coefficients(&self, mu: T) -> [T; 6] {
        let g = [T::one(), self.tau];
        let w = T::one() / self.omega0;
        // h² + 1
        let h2p1 = [T::one() + self.rho * self.rho, lit::<T>(2.0) * self.rho * w, w * w];
        let g2 = poly_mul(&g, &g);
        let lead = poly_mul(&poly_mul(&g2, &h2p1), &[T::zero(), self.k]);
        let mid = poly_mul(&g, &[self.k, T::one()]);
        let mut c = [T::zero(); 6];
        for (i, &v) in lead.iter().enumerate() {
            c[i] += v;
        }
        for (i, &v) in mid.iter().enumerate() {
            c[i] += v * mu;
        }
        c[0] += mu * mu;
        c
    }

    /// Polynomial value at `λ`.
    pub fn evaluate(&self, mu: T, lambda: Complex<T>) -> Complex<T> {
        let c = self.coefficients(mu);
        c.iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &ci| acc * lambda + Complex::new(ci, T::zero()))
    }

    /// `Σ |c_i| |λ|^i`, the scale against which a residual is judged.
    pub fn residual_scale(&self, mu: T, lambda: Complex<T>) -> T {
        let r = lambda.norm();
        self.coefficients(mu)
            .iter()
            .rev()
            .fold(T::zero(), |acc, &ci| acc * r + ci.abs())
    }

    /// The five roots for one `μ ≥ 0`, by descending real part.
    pub fn quintic_roots(&self, mu: T) -> Result<[Complex<T>; 5]> {
        if !(mu >= T::zero()) {
            return Err(Error::InvalidArgument(format!("mu must be nonnegative, got {}", to_f64(mu))));
        }
        let c = self.coefficients(mu);
        if c[5] == T::zero() {
            return Err(Error::InvalidArgument("polynomial degree drops below 5 (k or tau is zero)".into()));
        }
        // coefficients in z = λ/ω₀
        let mut scaled = [T::zero(); 6];
        let mut p = T::one();
        for i in 0..6 {
            scaled[i] = c[i] * p;
            p *= self.omega0;
        }
        let lead = scaled[5];
        let companion = DMatrix::from_fn(5, 5, |i, j| {
            if i == 0 {
                -scaled[4 - j] / lead
            } else if i == j + 1 {
                T::one()
            } else {
                T::zero()
            }
        });
        let ev = linalg::eigenvalues(&companion)?;
        let mut roots = [Complex::new(T::zero(), T::zero()); 5];
        for (r, z) in roots.iter_mut().zip(ev) {
            *r = z * self.omega0;
        }
        sort_descending_real(&mut roots);
        Ok(roots)
    }

    /// Largest real part, ignoring the branch that starts at the origin for
    /// `μ = 0` (the rigid rotation of all angles). That branch is the
    /// smallest-modulus root; it is only dropped while it lies in the closed
    /// left half-plane.
    pub fn dominant_real_part(&self, mu: T) -> Result<T> {
        let roots = self.quintic_roots(mu)?;
        Ok(dominant_of(&roots).re)
    }

    pub fn dominant_root(&self, mu: T) -> Result<Complex<T>> {
        Ok(dominant_of(&self.quintic_roots(mu)?))
    }

    /// True iff every root of the mode lies in the open left half-plane; at
    /// `μ = 0` the structural root at the origin is accepted as marginal.
    pub fn is_stable_mode(&self, mu: T) -> Result<bool> {
        let roots = self.quintic_roots(mu)?;
        let max_re = if mu == T::zero() {
            dominant_of(&roots).re
        } else {
            roots[0].re
        };
        Ok(max_re < T::zero())
    }

    /// `μ_cr` with the default tolerance.
    pub fn mu_critical(&self) -> Result<T> {
        self.mu_critical_with_tol(lit(MU_CR_REL_TOL))
    }

    /// Bisection on the sign of the dominant real part over [`MU_BRACKET`].
    ///
    /// A log-spaced pre-scan must show stability at the lower end, instability
    /// at the upper end and exactly one stable-to-unstable transition.
    pub fn mu_critical_with_tol(&self, rel_tol: T) -> Result<T> {
        let (lo, hi) = (lit::<T>(MU_BRACKET.0), lit::<T>(MU_BRACKET.1));
        let grid = log_grid(lo, hi, PRESCAN_POINTS);
        let values = grid
            .iter()
            .map(|&mu| self.dominant_real_part(mu))
            .collect::<Result<Vec<T>>>()?;

        let first = values[0];
        let last = values[values.len() - 1];
        if !(first < T::zero()) || !(last >= T::zero()) {
            return Err(Error::NoSignChange {
                lower_mu: MU_BRACKET.0,
                upper_mu: MU_BRACKET.1,
                lower_re: to_f64(first),
                upper_re: to_f64(last),
            });
        }
        let transitions = values
            .windows(2)
            .filter(|w| (w[0] < T::zero()) != (w[1] < T::zero()))
            .count();
        if transitions != 1 {
            return Err(Error::NonMonotone(format!(
                "dominant real part changes sign {transitions} times on the pre-scan"
            )));
        }
        let cross = values.iter().position(|&v| v >= T::zero()).expect("sign change located");

        let (mut a, mut b) = (grid[cross - 1], grid[cross]);
        let half: T = lit(0.5);
        while b - a > rel_tol * b {
            let mid = (a + b) * half;
            if self.dominant_real_part(mid)? < T::zero() {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok((a + b) * half)
    }

    /// Roots over `count` evenly spaced `μ` in `[mu_min, mu_max]`.
    pub fn root_locus(&self, mu_min: T, mu_max: T, count: usize) -> Result<RootLocusResult<T>> {
        if !(mu_min >= T::zero()) || !(mu_max >= mu_min) || mu_max > lit(MU_BRACKET.1) {
            return Err(Error::InvalidArgument(format!(
                "mu range [{}, {}] must lie within [0, {}]",
                to_f64(mu_min),
                to_f64(mu_max),
                MU_BRACKET.1
            )));
        }
        let count = if mu_max == mu_min { 1 } else { count.max(2) };
        let mut mu = Vec::with_capacity(count);
        let mut roots = Vec::with_capacity(count);
        let mut dominant = Vec::with_capacity(count);
        for i in 0..count {
            let m = if count == 1 {
                mu_min
            } else {
                mu_min + (mu_max - mu_min) * lit::<T>(i as f64 / (count - 1) as f64)
            };
            let r = self.quintic_roots(m)?;
            dominant.push(dominant_of(&r));
            roots.push(r);
            mu.push(m);
        }
        let monotone = dominant.windows(2).all(|w| w[1].re >= w[0].re);
        Ok(RootLocusResult { mu, roots, dominant, monotone })
    }
}

fn dominant_of<T: Real>(roots: &[Complex<T>; 5]) -> Complex<T> {
    let slow = (0..5)
        .min_by(|&a, &b| roots[a].norm().partial_cmp(&roots[b].norm()).unwrap_or(std::cmp::Ordering::Equal))
        .expect("five roots");
    let skip = if roots[slow].re <= T::zero() { Some(slow) } else { None };
    (0..5)
        .filter(|&i| Some(i) != skip)
        .map(|i| roots[i])
        .fold(None::<Complex<T>>, |best, r| match best {
            Some(b) if b.re >= r.re => Some(b),
            _ => Some(r),
        })
        .expect("at least four roots")
}

fn poly_mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let (l, h) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l + (h - l) * lit::<T>(i as f64 / (n - 1) as f64)).exp())
        .collect()
}

#[derive(Debug, Clone)]
pub struct RootLocusResult<T> {
    pub mu: Vec<T>,
    /// Roots per `μ`, descending real part.
    pub roots: Vec<[Complex<T>; 5]>,
    /// Dominant root per `μ` (origin branch excluded).
    pub dominant: Vec<Complex<T>>,
    /// Whether the dominant real part is nondecreasing over the grid.
    pub monotone: bool,
}

impl<T: Real> RootLocusResult<T> {
    /// CSV with header `mu,re1,im1,...,re5,im5`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = vec!["mu".to_string()];
        for i in 1..=5 {
            header.push(format!("re{i}"));
            header.push(format!("im{i}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for (mu, roots) in self.mu.iter().zip(&self.roots) {
            let mut row = vec![format!("{}", to_f64(*mu))];
            for r in roots {
                row.push(format!("{}", to_f64(r.re)));
                row.push(format!("{}", to_f64(r.im)));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}
