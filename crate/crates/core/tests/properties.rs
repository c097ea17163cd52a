use mgcluster::linalg;
use mgcluster::random::{random_network, seeded_rng, RandomOptions};
use mgcluster::spectral::weyl_bound_check;
use mgcluster::statespace::{max_nontrivial_real_part, oracle_eigenvalues};
use mgcluster::{
    network_spectrum, parse_network, to_canonical_json, validate, BaseSystem, BusId, CharPoly, Network, StateSpace,
};
use nalgebra::{DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::Rng;

fn net(seed: u64, m: usize) -> Network {
    random_network(&mut seeded_rng(seed), m, &RandomOptions::default())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn per_unit_round_trip(
        v in 100.0f64..50e3, s in 1e3f64..1e8, f in prop::sample::select(vec![50.0, 60.0]),
        ohms in 1e-4f64..1e3, henries in 1e-7f64..1.0,
    ) {
        let base = BaseSystem::new(v, s, f).unwrap();
        prop_assert!(rel_close(base.pu_to_ohms(base.ohms_to_pu(ohms)), ohms, 1e-12));
        let x = base.henries_to_pu_reactance(henries);
        prop_assert!(rel_close(base.pu_reactance_to_henries(x), henries, 1e-12));
    }

    #[test]
    fn canonical_json_round_trip(seed in any::<u64>(), m in 2usize..=8) {
        let a = net(seed, m);
        let b: Network = parse_network(&to_canonical_json(&a)).unwrap();
        prop_assert_eq!(&a.buses, &b.buses);
        prop_assert_eq!(a.lines.len(), b.lines.len());
        for (x, y) in a.lines.iter().zip(&b.lines) {
            prop_assert!(rel_close(x.r, y.r, 1e-12) && rel_close(x.x, y.x, 1e-12));
        }
        for (x, y) in a.inverters.iter().zip(&b.inverters) {
            prop_assert!(rel_close(x.m, y.m, 1e-12) && rel_close(x.n, y.n, 1e-12) && rel_close(x.tau, y.tau, 1e-12));
        }
    }

    #[test]
    fn symmetric_and_general_spectra_agree(seed in any::<u64>(), m in 2usize..=8) {
        let (_, s) = network_spectrum(&net(seed, m)).unwrap();
        let general = linalg::eigenvalues(&s.c).unwrap();
        let mut re: Vec<f64> = general.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        let scale = s.max_mu();
        for (a, b) in re.iter().zip(&s.mu) {
            prop_assert!((a - b).abs() < 1e-8 * scale, "{} vs {}", a, b);
        }
        prop_assert!(general.iter().all(|z| z.im.abs() < 1e-8 * scale));
    }

    #[test]
    fn psd_and_single_zero_mode(seed in any::<u64>(), m in 2usize..=8) {
        let (_, s) = network_spectrum(&net(seed, m)).unwrap();
        let ev = SymmetricEigen::new(s.symmetrized()).eigenvalues;
        prop_assert!(ev.min() > -1e-9 * ev.max());
        prop_assert_eq!((0..s.len()).filter(|&i| s.is_trivial(i)).count(), 1);
    }

    #[test]
    fn sandwich_bound(seed in any::<u64>(), m in 2usize..=8) {
        let model = net(seed, m);
        let (set, s) = network_spectrum(&model).unwrap();
        let mut lb = SymmetricEigen::new(set.b_prime.clone()).eigenvalues.as_slice().to_vec();
        lb.sort_by(f64::total_cmp);
        let m_min = s.m_diag.min();
        let m_max = s.m_diag.max();
        let tol = 1e-9 * s.max_mu();
        for i in 0..s.len() {
            prop_assert!(m_min * lb[i] <= s.mu[i] + tol);
            prop_assert!(s.mu[i] <= m_max * lb[i] + tol);
        }
    }

    #[test]
    fn weyl_monotonicity(seed in any::<u64>(), m in 2usize..=8, x in 0.01f64..2.0) {
        let model = net(seed, m);
        let mut rng = seeded_rng(seed ^ 0x5eed);
        let a = rng.random_range(0..m);
        let b = (a + rng.random_range(1..m)) % m;
        let ids = model.inverter_bus_ids();
        prop_assert!(weyl_bound_check(&model, &ids[a], &ids[b], x).is_ok());
    }

    #[test]
    fn eigenvectors_are_deterministic(seed in any::<u64>(), m in 2usize..=8) {
        let model = net(seed, m);
        let (_, s1) = network_spectrum(&model).unwrap();
        let (_, s2) = network_spectrum(&model).unwrap();
        prop_assert_eq!(&s1.vectors, &s2.vectors);
        for i in 0..s1.len() {
            let u: DVector<f64> = s1.vector(i);
            let big = u.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            prop_assert!(big > 0.0);
        }
    }

    #[test]
    fn roots_are_conjugate_closed_with_small_residual(
        rho in 0.1f64..5.0, k in 0.2f64..10.0, wc in 2.0f64..100.0, mu in 0.0f64..2000.0,
    ) {
        let cp = CharPoly::new(rho, k, 1.0 / wc, 100.0 * std::f64::consts::PI);
        let roots = cp.quintic_roots(mu).unwrap();
        for r in &roots {
            let scale = cp.residual_scale(mu, *r);
            prop_assert!(cp.evaluate(mu, *r).norm() < 1e-8 * scale, "residual at {}", r);
            let tol = 1e-8 * (1.0 + r.norm());
            prop_assert!(roots.iter().any(|q| (q - r.conj()).norm() < tol));
        }
    }

    #[test]
    fn stability_is_monotone_in_mu(rho in 0.3f64..3.0, k in 0.5f64..5.0, wc in 5.0f64..60.0) {
        let cp = CharPoly::new(rho, k, 1.0 / wc, 100.0 * std::f64::consts::PI);
        let grid = log_points(1.0, 1e5, 64);
        let stable: Vec<bool> = grid.iter().map(|&mu| cp.is_stable_mode(mu).unwrap()).collect();
        for w in stable.windows(2) {
            prop_assert!(!(w[1] && !w[0]), "stable again after instability");
        }
    }

    #[test]
    fn verdicts_agree(seed in any::<u64>(), m in 2usize..=8) {
        let model = net(seed, m);
        prop_assume!(validate(&model).is_empty());
        let (_, s) = network_spectrum(&model).unwrap();
        let mu_cr = CharPoly::from_network(&model).mu_critical().unwrap();
        let spectral_unstable = s.max_mu() > mu_cr;
        let ev = oracle_eigenvalues(&StateSpace::from_network(&model).unwrap()).unwrap();
        let a_unstable = max_nontrivial_real_part(&ev).unwrap() > 0.0;
        if spectral_unstable != a_unstable {
            prop_assert!((s.max_mu() - mu_cr).abs() < 1e-3 * mu_cr);
        }
    }

    #[test]
    fn zero_eigenvalue_of_state_matrix(seed in any::<u64>(), m in 2usize..=8) {
        let ev = oracle_eigenvalues(&StateSpace::from_network(&net(seed, m)).unwrap()).unwrap();
        prop_assert_eq!(ev.len(), 5 * m);
        let closest = ev.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        prop_assert!(closest < 1e-8, "closest to zero: {}", closest);
    }
}

/// With k fixed, mu_cr should rise with rho across the 20 x 20 surface grid.
#[test]
fn mu_cr_grows_with_rho() {
    let omega0 = 100.0 * std::f64::consts::PI;
    let tau = 1.0 / mgcluster::netmodel::DEFAULT_OMEGA_C;
    let mut drops = Vec::new();
    for j in 0..20 {
        let k = 0.5 + 4.5 * j as f64 / 19.0;
        let values: Vec<f64> = (0..20)
            .map(|i| {
                let rho = 0.5 + 2.5 * i as f64 / 19.0;
                CharPoly::new(rho, k, tau, omega0).mu_critical().unwrap()
            })
            .collect();
        if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
            drops.push(format!("k = {k:.3}: drops after rho index {i} ({:.1} -> {:.1})", values[i], values[i + 1]));
        }
    }
    assert!(drops.is_empty(), "{}", drops.join("\n"));
}

#[test]
fn doubled_line_susceptance_raises_every_mu() {
    let model: Network = parse_network(include_str!("data/four_bus.json")).unwrap();
    let (_, before) = network_spectrum(&model).unwrap();
    let (_, after) = network_spectrum(&model.with_line_length("3-4", 1.5).unwrap()).unwrap();
    for (a, b) in before.mu.iter().zip(&after.mu) {
        assert!(*b >= *a - 1e-9);
    }
    let added = weyl_bound_check(&model, &BusId::from("1"), &BusId::from("4"), 1.0).unwrap();
    assert!(added.new_mu.iter().zip(&added.old_mu).all(|(n, o)| n >= o));
}
