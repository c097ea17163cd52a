//! Susceptance matrix assembly, Kron reduction and the `(1+ρ²)` scaling.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::netmodel::{BusId, NetworkModel};
use crate::scalar::Real;

/// Full, reduced and scaled susceptance matrices of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptanceSet<T: Real> {
    /// All buses, per-unit.
    pub b_full: DMatrix<T>,
    /// Inverter buses only, after eliminating passive buses.
    pub b_reduced: DMatrix<T>,
    /// `(1+ρ²) · b_reduced`.
    pub b_prime: DMatrix<T>,
    pub bus_index: BTreeMap<BusId, usize>,
}

impl<T: Real> SusceptanceSet<T> {
    pub fn from_model(model: &NetworkModel<T>) -> Result<Self> {
        let b_full = build_susceptance(model);
        let m = model.inverter_count();
        let retained: Vec<usize> = (0..m).collect();
        let b_reduced = kron_reduce(&b_full, &retained).map_err(|e| match e {
            Error::SingularPassiveBlock { .. } => Error::SingularPassiveBlock {
                buses: model.buses[m..].iter().map(|b| b.id.0.clone()).collect(),
            },
            other => other,
        })?;
        let b_prime = scale_to_bprime(&b_reduced, model.rho);
        let bus_index = model
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.clone(), i))
            .collect();
        Ok(Self {
            b_full,
            b_reduced,
            b_prime,
            bus_index,
        })
    }
}

/// Bus susceptance Laplacian: `B[i][i] = Σ 1/X`, `B[i][k] = -1/X` per line.
///
/// Lines that refer to unknown buses are skipped; validation reports them.
pub fn build_susceptance<T: Real>(model: &NetworkModel<T>) -> DMatrix<T> {
    let n = model.buses.len();
    let mut b = DMatrix::zeros(n, n);
    for line in &model.lines {
        let (Some(i), Some(j)) = (model.bus_index(&line.from), model.bus_index(&line.to)) else {
            continue;
        };
        if i == j {
            continue;
        }
        let y = T::one() / line.x;
        b[(i, i)] += y;
        b[(j, j)] += y;
        b[(i, j)] -= y;
        b[(j, i)] -= y;
    }
    b
}

/// Schur complement `B_ii - B_ic B_cc⁻¹ B_ci` onto the `retained` rows.
///
/// `b_full` must be a Laplacian. `B_cc` is factored by Cholesky; the result is
/// symmetrised and its diagonal re-projected so every row sums to zero.
pub fn kron_reduce<T: Real>(b_full: &DMatrix<T>, retained: &[usize]) -> Result<DMatrix<T>> {
    let n = b_full.nrows();
    if b_full.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b_full.ncols(),
        });
    }
    if let Some(&bad) = retained.iter().find(|&&i| i >= n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad + 1 });
    }
    let eliminated: Vec<usize> = (0..n).filter(|i| !retained.contains(i)).collect();
    let b_ii = b_full.select_rows(retained).select_columns(retained);
    if eliminated.is_empty() {
        return Ok(b_ii);
    }

    let b_ic = b_full.select_rows(retained).select_columns(&eliminated);
    let b_cc = b_full.select_rows(&eliminated).select_columns(&eliminated);
    let chol = b_cc.cholesky().ok_or_else(|| Error::SingularPassiveBlock {
        buses: eliminated.iter().map(|i| format!("#{i}")).collect(),
    })?;
    let mut reduced = b_ii - &b_ic * chol.solve(&b_ic.transpose());
    restore_laplacian(&mut reduced);
    Ok(reduced)
}

/// Symmetrises and sets each diagonal entry to minus its off-diagonal row sum.
pub(crate) fn restore_laplacian<T: Real>(b: &mut DMatrix<T>) {
    let n = b.nrows();
    let half: T = nalgebra::convert(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (b[(i, j)] + b[(j, i)]) * half;
            b[(i, j)] = avg;
            b[(j, i)] = avg;
        }
    }
    for i in 0..n {
        let off: T = (0..n).filter(|&j| j != i).fold(T::zero(), |s, j| s + b[(i, j)]);
        b[(i, i)] = -off;
    }
}

/// `B' = (1+ρ²) B`.
pub fn scale_to_bprime<T: Real>(b_reduced: &DMatrix<T>, rho: T) -> DMatrix<T> {
    b_reduced * (T::one() + rho * rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{BaseSystem, Bus, BusKind, InverterRecord, LineRecord};
    use nalgebra::dmatrix;

    fn chain(xs: &[f64], passive: &[usize]) -> NetworkModel<f64> {
        let base = BaseSystem::new(230.0, 1e4, 50.0).unwrap();
        let n = xs.len() + 1;
        let buses = (0..n)
            .map(|i| Bus {
                id: BusId(format!("{}", i + 1)),
                kind: if passive.contains(&i) { BusKind::Passive } else { BusKind::Inverter },
            })
            .collect::<Vec<_>>();
        let inverters = buses
            .iter()
            .filter(|b| b.kind == BusKind::Inverter)
            .map(|b| InverterRecord { bus: b.id.clone(), m: 0.01, n: 0.01, tau: 0.05 })
            .collect();
        let lines = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| LineRecord {
                from: BusId(format!("{}", i + 1)),
                to: BusId(format!("{}", i + 2)),
                r: 0.5 * x,
                x,
                length_km: None,
            })
            .collect();
        NetworkModel::from_parts(base, buses, inverters, lines)
    }

    #[test]
    fn three_bus_unit_chain() {
        let b = build_susceptance(&chain(&[1.0, 1.0], &[]));
        assert_eq!(b, dmatrix![1.0, -1.0, 0.0; -1.0, 2.0, -1.0; 0.0, -1.0, 1.0]);
    }

    #[test]
    fn three_bus_general_chain_matches_droop_stripped_c() {
        let (x12, x23) = (0.3, 0.7);
        let b = build_susceptance(&chain(&[x12, x23], &[]));
        let expected = dmatrix![
            1.0 / x12, -1.0 / x12, 0.0;
            -1.0 / x12, 1.0 / x12 + 1.0 / x23, -1.0 / x23;
            0.0, -1.0 / x23, 1.0 / x23
        ];
        assert!((b - expected).abs().max() < 1e-14);
    }

    #[test]
    fn single_line() {
        let b = build_susceptance(&chain(&[0.5], &[]));
        assert_eq!(b, dmatrix![2.0, -2.0; -2.0, 2.0]);
    }

    #[test]
    fn no_passive_is_identity() {
        let b = build_susceptance(&chain(&[0.2, 0.4, 0.1], &[]));
        let r = kron_reduce(&b, &[0, 1, 2, 3]).unwrap();
        assert_eq!(r, b);
    }

    #[test]
    fn series_through_passive_bus() {
        // 1 -- (passive 2) -- 3 reduces to one line with X1 + X2.
        let (x1, x2) = (0.3, 0.45);
        let model = chain(&[x1, x2], &[1]);
        let set = SusceptanceSet::from_model(&model).unwrap();
        let y = 1.0 / (x1 + x2);
        let expected = dmatrix![y, -y; -y, y];
        assert!((&set.b_reduced - expected).abs().max() < 1e-12);
    }

    #[test]
    fn bprime_scaling() {
        let b = dmatrix![1.0f64, -1.0; -1.0, 1.0];
        assert_eq!(scale_to_bprime(&b, 0.0), b);
        let s = scale_to_bprime(&b, 1.4);
        assert!((s[(0, 0)] - 2.96).abs() < 1e-12);
    }

    #[test]
    fn singular_passive_block_names_buses() {
        // A passive bus with no lines gives a zero B_cc.
        let mut model = chain(&[0.3], &[]);
        model.buses.push(Bus { id: BusId("x".into()), kind: BusKind::Passive });
        let err = SusceptanceSet::from_model(&model).unwrap_err();
        match err {
            Error::SingularPassiveBlock { buses } => assert_eq!(buses, vec!["x".to_string()]),
            other => panic!("{other:?}"),
        }
    }
}
