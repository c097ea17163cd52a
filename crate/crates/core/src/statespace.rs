//! Full linearised state matrix over `x = [θ, ω, V, I_d, I_q]`, its
//! eigenvalues, the per-mode equivalence check and linear time responses.

use std::io::Write;

use nalgebra::{DMatrix, DVector, Normed};
use num_complex::Complex;
use serde::Serialize;

use crate::admittance::SusceptanceSet;
use crate::charpoly::CharPolyModel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::matching::match_multisets;
use crate::netmodel::{validate, NetworkModel, ViolationCode};
use crate::scalar::{lit, to_f64, Real};
use crate::spectral::WeightedSpectrum;

/// Relative tolerance (to the spectral radius of A) of the equivalence check.
pub const EQUIVALENCE_TOL: f64 = 1e-6;
/// Allowed cosine distance between a C eigenvector and a θ block.
pub const COSINE_TOL: f64 = 1e-6;
/// Hard cap on trace rows.
pub const MAX_TRACE_ROWS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct StateSpaceModel<T: Real> {
    pub a: DMatrix<T>,
    /// Number of inverters, `a` is `5m × 5m`.
    pub m: usize,
    pub omega_c: T,
    pub omega0: T,
    pub rho: T,
    pub m_diag: DVector<T>,
    pub n_diag: DVector<T>,
    pub b_prime: DMatrix<T>,
}

/// Builds
///
/// ```text
/// [ 0      I      0      0       0     ]
/// [ 0    -ωc I    0    -ωc M     0     ]
/// [ 0      0    -ωc I    0      ωc N   ]
/// [ 0      0    ω0 B'  -ω0 ρ I  ω0 I   ]
/// [ ω0 B'  0      0    -ω0 I   -ω0 ρ I ]
/// ```
pub fn assemble_state_matrix<T: Real>(model: &NetworkModel<T>, b_prime: &DMatrix<T>) -> Result<StateSpaceModel<T>> {
    let m = model.inverter_count();
    if b_prime.nrows() != m || b_prime.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, found: b_prime.nrows().max(b_prime.ncols()) });
    }
    if model.inverters.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: model.inverters.len() });
    }
    let m_diag = DVector::from_vec(model.m_gains());
    let n_diag = DVector::from_vec(model.n_gains());
    let omega_c = model.omega_c();
    let omega0 = model.base.omega0;
    let rho = model.rho;

    let mut a = DMatrix::zeros(5 * m, 5 * m);
    let (th, om, v, id, iq) = (0, m, 2 * m, 3 * m, 4 * m);
    for i in 0..m {
        a[(th + i, om + i)] = T::one();

        a[(om + i, om + i)] = -omega_c;
        a[(om + i, id + i)] = -omega_c * m_diag[i];

        a[(v + i, v + i)] = -omega_c;
        a[(v + i, iq + i)] = omega_c * n_diag[i];

        a[(id + i, id + i)] = -omega0 * rho;
        a[(id + i, iq + i)] = omega0;

        a[(iq + i, id + i)] = -omega0;
        a[(iq + i, iq + i)] = -omega0 * rho;
        for j in 0..m {
            a[(id + i, v + j)] = omega0 * b_prime[(i, j)];
            a[(iq + i, th + j)] = omega0 * b_prime[(i, j)];
        }
    }
    Ok(StateSpaceModel {
        a,
        m,
        omega_c,
        omega0,
        rho,
        m_diag,
        n_diag,
        b_prime: b_prime.clone(),
    })
}

impl<T: Real> StateSpaceModel<T> {
    pub fn from_network(model: &NetworkModel<T>) -> Result<Self> {
        let set = SusceptanceSet::from_model(model)?;
        assemble_state_matrix(model, &set.b_prime)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn state_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(5 * self.m);
        for prefix in ["theta", "omega", "V", "Id", "Iq"] {
            names.extend((1..=self.m).map(|i| format!("{prefix}_{i}")));
        }
        names
    }
}

/// All `5m` eigenvalues of A, by descending real part.
pub fn oracle_eigenvalues<T: Real>(ss: &StateSpaceModel<T>) -> Result<Vec<Complex<T>>> {
    linalg::eigenvalues(&ss.a)
}

/// Largest real part after removing the single smallest-modulus eigenvalue
/// (the rigid rotation of all angles, which sits at the origin).
pub fn max_nontrivial_real_part<T: Real>(eigs: &[Complex<T>]) -> Option<T> {
    let zero = (0..eigs.len()).min_by(|&a, &b| {
        eigs[a].norm().partial_cmp(&eigs[b].norm()).unwrap_or(std::cmp::Ordering::Equal)
    })?;
    eigs.iter()
        .enumerate()
        .filter(|&(i, _)| i != zero)
        .map(|(_, z)| z.re)
        .fold(None, |best: Option<T>, r| Some(best.map_or(r, |b| b.max(r))))
}

pub fn spectral_radius<T: Real>(eigs: &[Complex<T>]) -> T {
    eigs.iter().fold(T::zero(), |r, z| r.max(z.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "SKIPPED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl<T: Real> From<Complex<T>> for ComplexValue {
    fn from(z: Complex<T>) -> Self {
        Self { re: to_f64(z.re), im: to_f64(z.im) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RootPair {
    /// Index of the C eigenvalue the quintic root belongs to (ascending order).
    pub mode: usize,
    pub mu: f64,
    pub predicted: ComplexValue,
    pub actual: ComplexValue,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub status: CheckStatus,
    pub notice: Option<String>,
    pub pairs: Vec<RootPair>,
    pub max_distance: Option<f64>,
    pub spectral_radius: f64,
    pub tolerance: f64,
    pub refined_matching: bool,
    pub max_cosine_distance: Option<f64>,
    pub vectors_checked: usize,
    pub vectors_skipped: usize,
    pub max_real_part: Option<f64>,
}

/// Compares the union of per-mode quintic roots with the eigenvalues of A, and
/// each C eigenvector with the θ block of the matching A eigenvectors.
///
/// Skipped (not failed) when ρ or k is not uniform.
pub fn equivalence_check<T: Real>(
    model: &NetworkModel<T>,
    spectrum: &WeightedSpectrum<T>,
    cp: &CharPolyModel<T>,
) -> Result<EquivalenceReport> {
    let ss = StateSpaceModel::from_network(model)?;
    let actual = oracle_eigenvalues(&ss)?;
    let radius = to_f64(spectral_radius(&actual));
    let tolerance = EQUIVALENCE_TOL * radius;
    let max_real_part = max_nontrivial_real_part(&actual).map(to_f64);

    let gate: Vec<_> = validate(model)
        .into_iter()
        .filter(|v| matches!(v.code, ViolationCode::NonuniformK | ViolationCode::NonuniformRho))
        .collect();
    if !gate.is_empty() {
        let mut codes: Vec<&str> = gate.iter().map(|v| v.code.as_str()).collect();
        codes.sort_unstable();
        codes.dedup();
        return Ok(EquivalenceReport {
            status: CheckStatus::Skipped,
            notice: Some(format!(
                "{}: per-mode decomposition needs uniform R/X ratio and droop ratio",
                codes.join(", ")
            )),
            pairs: Vec::new(),
            max_distance: None,
            spectral_radius: radius,
            tolerance,
            refined_matching: false,
            max_cosine_distance: None,
            vectors_checked: 0,
            vectors_skipped: 0,
            max_real_part,
        });
    }

    let mut predicted = Vec::with_capacity(actual.len());
    let mut owner = Vec::with_capacity(actual.len());
    for (i, &mu) in spectrum.mu.iter().enumerate() {
        let mu = if spectrum.is_trivial(i) { T::zero() } else { mu.max(T::zero()) };
        for r in cp.quintic_roots(mu)? {
            predicted.push(r);
            owner.push(i);
        }
    }
    let pairing = match_multisets(&predicted, &actual, tolerance)?;
    let pairs: Vec<RootPair> = pairing
        .pairs
        .iter()
        .map(|&(p, a)| RootPair {
            mode: owner[p],
            mu: to_f64(spectrum.mu[owner[p]]),
            predicted: predicted[p].into(),
            actual: actual[a].into(),
            distance: to_f64((predicted[p] - actual[a]).norm()),
        })
        .collect();

    // eigenvector part: simple modes, A eigenvalues well separated from the rest
    let sep = lit::<T>(tolerance);
    let mut checked = 0;
    let mut skipped = 0;
    let mut worst_cos: f64 = 0.0;
    for &(p, a) in &pairing.pairs {
        let mode = owner[p];
        if spectrum.multiplicity(mode) > 1 {
            skipped += 1;
            continue;
        }
        let lambda = actual[a];
        if spectrum.is_trivial(mode) {
            // only the root at the origin carries the all-ones angle vector
            if lambda.norm() > sep {
                continue;
            }
        }
        let crowded = actual
            .iter()
            .enumerate()
            .any(|(j, z)| j != a && (z - lambda).norm() <= sep);
        if crowded {
            skipped += 1;
            continue;
        }
        let v = linalg::null_vector(&ss.a, lambda)?;
        let u = spectrum.vector(mode);
        let theta = v.rows(0, ss.m);
        let dot = theta
            .iter()
            .zip(u.iter())
            .fold(Complex::new(T::zero(), T::zero()), |s, (t, &ui)| s + t * ui);
        let denom = theta.norm() * u.norm();
        let cos_dist = if denom > T::zero() { 1.0 - to_f64(dot.norm() / denom) } else { 1.0 };
        worst_cos = worst_cos.max(cos_dist);
        checked += 1;
    }

    let pass = pairing.max_distance < tolerance && worst_cos < COSINE_TOL;
    Ok(EquivalenceReport {
        status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
        notice: None,
        pairs,
        max_distance: Some(pairing.max_distance),
        spectral_radius: radius,
        tolerance,
        refined_matching: pairing.refined,
        max_cosine_distance: Some(worst_cos),
        vectors_checked: checked,
        vectors_skipped: skipped,
        max_real_part,
    })
}

#[derive(Debug, Clone)]
pub struct TraceTable<T> {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<T>>,
    pub method: &'static str,
    /// The requested horizon needed more than [`MAX_TRACE_ROWS`] rows.
    pub truncated: bool,
}

impl<T: Real> TraceTable<T> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{}", to_f64(*v))).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Largest |x_i| in one row, time column excluded.
    pub fn row_max_abs(&self, row: usize) -> T {
        self.rows[row][1..].iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// `x(t) = exp(A t) x0` sampled every `dt` up to `horizon`, stepping with the
/// dense exponential of `A dt`.
pub fn time_response<T: Real>(ss: &StateSpaceModel<T>, x0: &DVector<T>, horizon: T, dt: T) -> Result<TraceTable<T>> {
    if x0.len() != ss.dim() {
        return Err(Error::DimensionMismatch { expected: ss.dim(), found: x0.len() });
    }
    if !(dt > T::zero()) || !(horizon >= dt) {
        return Err(Error::InvalidArgument("time response needs dt > 0 and horizon >= dt".into()));
    }
    let steps = to_f64(horizon / dt + lit(1e-9)).floor() as usize;
    let wanted = steps + 1;
    let rows_n = wanted.min(MAX_TRACE_ROWS);
    let step = (&ss.a * dt).exp();

    let mut columns = vec!["t".to_string()];
    columns.extend(ss.state_names());
    let mut rows = Vec::with_capacity(rows_n);
    let mut x = x0.clone();
    for i in 0..rows_n {
        if i > 0 {
            x = &step * x;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigensolver("time response overflowed".into()));
        }
        let mut row = Vec::with_capacity(ss.dim() + 1);
        row.push(dt * lit(i as f64));
        row.extend(x.iter().copied());
        rows.push(row);
    }
    Ok(TraceTable {
        columns,
        rows,
        method: "matrix-exponential",
        truncated: wanted > rows_n,
    })
}
