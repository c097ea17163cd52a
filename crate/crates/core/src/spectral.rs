//! Spectrum of the droop-weighted Laplacian `C = M B'` and the clusters its
//! eigenvectors describe.
//!
//! `C` is not symmetric, but `M^{1/2} B' M^{1/2}` is similar to it and
//! symmetric positive semidefinite. Eigenpairs are computed on the symmetric
//! form and mapped back with `u = M^{1/2} u'`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::admittance::SusceptanceSet;
use crate::error::{Error, Result};
use crate::netmodel::{BusId, NetworkModel};
use crate::scalar::{lit, to_f64, Real};

/// Default membership threshold, as a fraction of the largest |u_j|.
pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.1;

/// `|μ| < TRIVIAL_TOL · μ_max` marks the rigid-rotation mode.
pub const TRIVIAL_TOL: f64 = 1e-9;

/// Relative gap below which neighbouring eigenvalues count as repeated.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct WeightedSpectrum<T: Real> {
    /// `M B'`.
    pub c: DMatrix<T>,
    /// Eigenvalues, ascending.
    pub mu: Vec<T>,
    /// Column `i` is the eigenvector of `mu[i]`: unit 2-norm, largest-magnitude
    /// entry positive.
    pub vectors: DMatrix<T>,
    /// Orthonormal eigenvectors of the symmetrised matrix, same column order.
    pub sym_vectors: DMatrix<T>,
    pub m_diag: DVector<T>,
}

impl<T: Real> WeightedSpectrum<T> {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn max_mu(&self) -> T {
        self.mu.last().copied().unwrap_or_else(T::zero)
    }

    pub fn vector(&self, i: usize) -> DVector<T> {
        self.vectors.column(i).into_owned()
    }

    pub fn is_trivial(&self, i: usize) -> bool {
        self.mu[i].abs() < lit::<T>(TRIVIAL_TOL) * self.max_mu().abs().max(lit::<T>(1e-30))
    }

    /// Number of eigenvalues within the degeneracy tolerance of `mu[i]`.
    pub fn multiplicity(&self, i: usize) -> usize {
        let tol = lit::<T>(DEGENERACY_TOL) * self.max_mu().abs();
        self.mu.iter().filter(|&&v| (v - self.mu[i]).abs() <= tol).count()
    }

    /// The symmetric matrix `M^{1/2} B' M^{1/2}`.
    pub fn symmetrized(&self) -> DMatrix<T> {
        let sqrt_m = self.m_diag.map(|v| v.sqrt());
        let inv = sqrt_m.map(|v| T::one() / v);
        // M^{-1/2} C M^{1/2}
        DMatrix::from_fn(self.c.nrows(), self.c.ncols(), |i, j| inv[i] * self.c[(i, j)] * sqrt_m[j])
    }
}

/// Eigen-decomposition of `C = diag(m_diag) · b_prime`.
pub fn weighted_spectrum<T: Real>(b_prime: &DMatrix<T>, m_diag: &DVector<T>) -> Result<WeightedSpectrum<T>> {
    let n = b_prime.nrows();
    if b_prime.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b_prime.ncols() });
    }
    if m_diag.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m_diag.len() });
    }
    if let Some((index, &value)) = m_diag.iter().enumerate().find(|(_, &v)| !(v > T::zero())) {
        return Err(Error::NonPositiveDroop { index, value: to_f64(value) });
    }

    let sqrt_m = m_diag.map(|v| v.sqrt());
    let sym = DMatrix::from_fn(n, n, |i, j| sqrt_m[i] * b_prime[(i, j)] * sqrt_m[j]);
    let eig = SymmetricEigen::try_new(sym, T::default_epsilon(), 0)
        .ok_or_else(|| Error::Eigensolver("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal));

    let mu: Vec<T> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut sym_vectors = DMatrix::zeros(n, n);
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut up = eig.eigenvectors.column(i).into_owned();
        let mut u = up.component_mul(&sqrt_m);
        let norm = u.norm();
        u /= norm;
        if sign_of_largest(&u) < T::zero() {
            u = -u;
            up = -up;
        }
        sym_vectors.set_column(col, &up);
        vectors.set_column(col, &u);
    }

    let c = DMatrix::from_fn(n, n, |i, j| m_diag[i] * b_prime[(i, j)]);
    Ok(WeightedSpectrum {
        c,
        mu,
        vectors,
        sym_vectors,
        m_diag: m_diag.clone(),
    })
}

/// Spectrum of a network, droop gains carrying the `omega0` factor.
pub fn network_spectrum<T: Real>(model: &NetworkModel<T>) -> Result<(SusceptanceSet<T>, WeightedSpectrum<T>)> {
    let set = SusceptanceSet::from_model(model)?;
    let m = DVector::from_vec(model.m_gains());
    let spec = weighted_spectrum(&set.b_prime, &m)?;
    Ok((set, spec))
}

fn sign_of_largest<T: Real>(u: &DVector<T>) -> T {
    let mut best = T::zero();
    for &v in u.iter() {
        // first entry wins ties, so the sign choice is deterministic
        if v.abs() > best.abs() * (T::one() + lit(1e-12)) {
            best = v;
        }
    }
    best.signum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterMember {
    pub bus: String,
    pub component: f64,
}

/// One oscillation mode of the network: which inverters take part and which
/// lines join antiphase members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterDescriptor {
    pub mu: f64,
    /// 1 for the largest μ.
    pub rank: usize,
    pub members: Vec<ClusterMember>,
    pub critical_lines: Vec<String>,
    pub degenerate: bool,
    pub eigenspace_dim: usize,
}

impl ClusterDescriptor {
    pub fn member_ids(&self) -> Vec<&str> {
        self.members.iter().map(|m| m.bus.as_str()).collect()
    }
}

/// One descriptor per nontrivial μ, largest μ first.
///
/// Members are buses with `|u_j| >= threshold · max|u|`. A mode's components
/// sum to zero, so if no negative component clears the threshold the most
/// negative one is added to keep both coherent groups represented.
pub fn extract_clusters<T: Real>(
    spectrum: &WeightedSpectrum<T>,
    model: &NetworkModel<T>,
    threshold: f64,
) -> Vec<ClusterDescriptor> {
    let ids: Vec<BusId> = model.inverter_bus_ids();
    let mut out = Vec::new();
    for i in (0..spectrum.len()).rev() {
        if spectrum.is_trivial(i) {
            continue;
        }
        let u = spectrum.vector(i);
        let comps: Vec<f64> = u.iter().map(|&v| to_f64(v)).collect();
        let max_abs = comps.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut selected: Vec<usize> = (0..comps.len())
            .filter(|&j| comps[j].abs() >= threshold * max_abs)
            .collect();
        for sign in [1.0, -1.0] {
            if !selected.iter().any(|&j| comps[j] * sign > 0.0) {
                let extreme = (0..comps.len())
                    .filter(|&j| comps[j] * sign > 0.0)
                    .max_by(|&a, &b| (comps[a] * sign).total_cmp(&(comps[b] * sign)));
                if let Some(j) = extreme {
                    selected.push(j);
                }
            }
        }
        selected.sort_unstable();

        let sign_of = |id: &BusId| -> Option<f64> {
            let j = ids.iter().position(|b| b == id)?;
            selected.contains(&j).then(|| comps[j].signum())
        };
        let critical_lines = model
            .lines
            .iter()
            .filter(|l| matches!((sign_of(&l.from), sign_of(&l.to)), (Some(a), Some(b)) if a * b < 0.0))
            .map(|l| l.id())
            .collect();

        let dim = spectrum.multiplicity(i);
        out.push(ClusterDescriptor {
            mu: to_f64(spectrum.mu[i]),
            rank: out.len() + 1,
            members: selected
                .iter()
                .map(|&j| ClusterMember { bus: ids[j].0.clone(), component: comps[j] })
                .collect(),
            critical_lines,
            degenerate: dim > 1,
            eigenspace_dim: dim,
        });
    }
    out
}

/// Result of adding a line (or susceptance) and re-computing the spectrum.
#[derive(Debug, Clone)]
pub struct WeylCheck<T> {
    pub old_mu: Vec<T>,
    pub new_mu: Vec<T>,
    /// `(1+ρ²)(M_a + M_b)/X_e` in the same units as μ.
    pub bound: T,
}

/// Adds a line of reactance `x` between inverter buses `from` and `to`
/// (parallel to an existing line if there is one), recomputes the spectrum
/// from scratch and checks `μ_i ≤ μ̂_i ≤ μ_i + bound` for every mode.
pub fn weyl_bound_check<T: Real>(model: &NetworkModel<T>, from: &BusId, to: &BusId, x: T) -> Result<WeylCheck<T>> {
    let m = model.inverter_count();
    let idx = |id: &BusId| {
        model
            .bus_index(id)
            .filter(|&i| i < m)
            .ok_or_else(|| Error::InvalidArgument(format!("bus {id} is not an inverter bus")))
    };
    let (a, b) = (idx(from)?, idx(to)?);
    if a == b || !(x > T::zero()) {
        return Err(Error::InvalidArgument("added line needs distinct ends and X > 0".into()));
    }

    let (set, old) = network_spectrum(model)?;
    let scale = T::one() + model.rho * model.rho;
    let y = scale / x;
    let mut b_new = set.b_prime.clone();
    b_new[(a, a)] += y;
    b_new[(b, b)] += y;
    b_new[(a, b)] -= y;
    b_new[(b, a)] -= y;
    let new = weighted_spectrum(&b_new, &old.m_diag)?;

    let bound = (old.m_diag[a] + old.m_diag[b]) * y;
    let tol = lit::<T>(1e-9) * (new.max_mu().abs() + bound).max(T::one());
    for i in 0..old.len() {
        let (o, n) = (old.mu[i], new.mu[i]);
        if n < o - tol || n > o + bound + tol {
            return Err(Error::WeylViolation {
                index: i,
                old: to_f64(o),
                new: to_f64(n),
                bound: to_f64(bound),
            });
        }
    }
    Ok(WeylCheck { old_mu: old.mu, new_mu: new.mu, bound })
}
