//! Pairing of two eigenvalue multisets.

use nalgebra::Normed;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    /// `(index into predicted, index into actual)`, in predicted order.
    pub pairs: Vec<(usize, usize)>,
    pub max_distance: f64,
    /// Whether the assignment refinement was needed.
    pub refined: bool,
}

/// Pairs `predicted` with `actual` one-to-one.
///
/// Greedy nearest neighbour first; if its worst distance exceeds `tol`, a
/// minimum-cost assignment is solved and kept when it does better.
pub fn match_multisets<T: Real>(predicted: &[Complex<T>], actual: &[Complex<T>], tol: f64) -> Result<Pairing> {
    let n = predicted.len();
    if actual.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: actual.len() });
    }
    let dist = |i: usize, j: usize| to_f64((predicted[i] - actual[j]).norm());

    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(n);
    for i in 0..n {
        let j = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)))
            .expect("unused candidate remains");
        used[j] = true;
        pairs.push((i, j));
    }
    let greedy_max = pairs.iter().map(|&(i, j)| dist(i, j)).fold(0.0, f64::max);
    if greedy_max <= tol {
        return Ok(Pairing { pairs, max_distance: greedy_max, refined: false });
    }

    let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| dist(i, j)).collect()).collect();
    let assign = hungarian(&cost);
    let hungarian_max = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max);
    if hungarian_max < greedy_max {
        Ok(Pairing {
            pairs: assign.into_iter().enumerate().collect(),
            max_distance: hungarian_max,
            refined: true,
        })
    } else {
        Ok(Pairing { pairs, max_distance: greedy_max, refined: true })
    }
}

/// Minimum-cost perfect assignment on a square cost matrix (row -> column).
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    // 1-based potentials and matching, column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.len()])
    }

    #[test]
    fn hungarian_matches_enumeration() {
        let cost = vec![
            vec![4.0, 1.0, 3.0, 7.0],
            vec![2.0, 0.0, 5.0, 1.0],
            vec![3.0, 2.0, 2.0, 6.0],
            vec![9.0, 4.0, 1.0, 2.5],
        ];
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert!((total - brute_force(&cost)).abs() < 1e-12);
    }

    #[test]
    fn greedy_trap_is_refined() {
        // Greedy takes 0 -> 0 at distance 0.1, forcing 1 -> 1 at distance 10.
        let p = [Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)];
        let a = [Complex::new(0.1, 0.0), Complex::new(-9.0, 0.0)];
        let r = match_multisets(&p, &a, 1e-3).unwrap();
        assert!(r.refined);
        assert!(r.max_distance <= 10.0 + 1e-12);
    }

    #[test]
    fn conjugate_pairs_match_exactly() {
        let p = [Complex::new(-1.0, 2.0), Complex::new(-1.0, -2.0), Complex::new(-5.0, 0.0)];
        let a = [Complex::new(-5.0, 0.0), Complex::new(-1.0, -2.0), Complex::new(-1.0, 2.0)];
        let r = match_multisets(&p, &a, 1e-9).unwrap();
        assert_eq!(r.max_distance, 0.0);
        assert_eq!(r.pairs, vec![(0, 2), (1, 1), (2, 0)]);
    }
}
