use mgcluster::random::{random_network, seeded_rng, RandomOptions};
use mgcluster::{build_susceptance, kron_reduce, BaseSystem, Bus, BusId, BusKind, InverterRecord, LineRecord, Network, SusceptanceSet};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

/// B_ii - B_ic B_cc^-1 B_ci with an explicit inverse.
fn schur_by_inverse(b: &DMatrix<f64>, keep: usize) -> DMatrix<f64> {
    let n = b.nrows();
    let b_ii = b.view((0, 0), (keep, keep)).into_owned();
    let b_ic = b.view((0, keep), (keep, n - keep)).into_owned();
    let b_cc = b.view((keep, keep), (n - keep, n - keep)).into_owned();
    let inv = b_cc.try_inverse().expect("invertible passive block");
    &b_ii - &b_ic * inv * b_ic.transpose()
}

fn star(x: f64) -> Network {
    let base = BaseSystem::new(230.0, 1e4, 50.0).unwrap();
    let mut buses: Vec<Bus> = (1..=3).map(|i| Bus { id: BusId(i.to_string()), kind: BusKind::Inverter }).collect();
    buses.push(Bus { id: BusId("c".into()), kind: BusKind::Passive });
    let inverters = (1..=3)
        .map(|i| InverterRecord { bus: BusId(i.to_string()), m: 0.01, n: 0.01, tau: 0.05 })
        .collect();
    let lines = (1..=3)
        .map(|i| LineRecord { from: BusId(i.to_string()), to: BusId("c".into()), r: x, x, length_km: None })
        .collect();
    Network::from_parts(base, buses, inverters, lines)
}

#[test]
fn star_reduces_to_triangle() {
    let x = 0.2;
    let set = SusceptanceSet::from_model(&star(x)).unwrap();
    // Y-Delta: each branch of the equivalent triangle has reactance 3X.
    let y = 1.0 / (3.0 * x);
    let expected = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 * y } else { -y });
    assert!((&set.b_reduced - &expected).abs().max() < 1e-12);
    let dense = schur_by_inverse(&set.b_full, 3);
    assert!((&set.b_reduced - dense).abs().max() < 1e-12);
}

fn with_passive(seed: u64, m: usize) -> Network {
    let opts = RandomOptions { max_passive: 4, ..Default::default() };
    random_network(&mut seeded_rng(seed), m, &opts)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn reduction_matches_dense_schur(seed in any::<u64>(), m in 2usize..=8) {
        let net = with_passive(seed, m);
        let set = SusceptanceSet::from_model(&net).unwrap();
        let dense = schur_by_inverse(&set.b_full, m);
        let scale = set.b_full.abs().max();
        prop_assert!((&set.b_reduced - dense).abs().max() < 1e-10 * scale);
    }

    #[test]
    fn reduction_is_symmetric_laplacian(seed in any::<u64>(), m in 2usize..=8) {
        let net = with_passive(seed, m);
        let r = SusceptanceSet::from_model(&net).unwrap().b_reduced;
        prop_assert!((&r - r.transpose()).abs().max() < 1e-10);
        for i in 0..m {
            prop_assert!(r.row(i).sum().abs() < 1e-10);
        }
        let ev = SymmetricEigen::new(r).eigenvalues;
        let max = ev.max();
        prop_assert!(ev.min() > -1e-9 * max);
        let near_zero = ev.iter().filter(|v| v.abs() <= 1e-9 * max).count();
        prop_assert_eq!(near_zero, 1);
    }

    #[test]
    fn elimination_order_does_not_matter(seed in any::<u64>(), m in 2usize..=6, order_seed in any::<u64>()) {
        let net = with_passive(seed, m);
        let b = build_susceptance(&net);
        let n = b.nrows();
        let all_at_once = kron_reduce(&b, &(0..m).collect::<Vec<_>>()).unwrap();

        // Remove passive buses one at a time in a shuffled order.
        let mut passive: Vec<usize> = (m..n).collect();
        let mut s = order_seed;
        for i in (1..passive.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            passive.swap(i, (s >> 33) as usize % (i + 1));
        }
        let mut labels: Vec<usize> = (0..n).collect();
        let mut cur = b.clone();
        for p in passive {
            let pos = labels.iter().position(|&l| l == p).unwrap();
            let keep: Vec<usize> = (0..labels.len()).filter(|&i| i != pos).collect();
            cur = kron_reduce(&cur, &keep).unwrap();
            labels.remove(pos);
        }
        prop_assert_eq!(labels, (0..m).collect::<Vec<_>>());
        let scale = b.abs().max();
        prop_assert!((&cur - &all_at_once).abs().max() < 1e-10 * scale);
    }
}
