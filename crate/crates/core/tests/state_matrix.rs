use mgcluster::random::{random_network, seeded_rng, RandomOptions};
use mgcluster::statespace::{max_nontrivial_real_part, oracle_eigenvalues};
use mgcluster::{
    network_spectrum, parse_network, equivalence_check, time_response, BaseSystem, Bus, BusId, BusKind, CharPoly,
    CheckStatus, InverterRecord, LineRecord, Network, StateSpace,
};
use nalgebra::DVector;
use proptest::prelude::*;

fn four_bus() -> Network {
    parse_network(include_str!("data/four_bus.json")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn per_mode_roots_match_state_matrix(seed in any::<u64>(), m in 2usize..=8) {
        let model = random_network(&mut seeded_rng(seed), m, &RandomOptions::default());
        let (_, spec) = network_spectrum(&model).unwrap();
        let r = equivalence_check(&model, &spec, &CharPoly::from_network(&model)).unwrap();
        prop_assert_eq!(r.status, CheckStatus::Pass, "{:?} {:?}", r.max_distance, r.max_cosine_distance);
    }

    #[test]
    fn nonuniform_k_skips(seed in any::<u64>(), m in 2usize..=8) {
        let opts = RandomOptions { nonuniform_k: true, ..Default::default() };
        let model = random_network(&mut seeded_rng(seed), m, &opts);
        let (_, spec) = network_spectrum(&model).unwrap();
        let r = equivalence_check(&model, &spec, &CharPoly::from_network(&model)).unwrap();
        prop_assert_eq!(r.status, CheckStatus::Skipped);
        prop_assert!(r.notice.unwrap().contains("NONUNIFORM_K"));
    }
}

/// One inverter tied to a much stiffer one, which stands in for an infinite bus.
fn against_stiff_bus(x: f64) -> Network {
    let base = BaseSystem::new(230.0, 1e4, 50.0).unwrap();
    let buses = vec![
        Bus { id: BusId::from("inv"), kind: BusKind::Inverter },
        Bus { id: BusId::from("grid"), kind: BusKind::Inverter },
    ];
    let tau = 1.0 / 14.0;
    let inverters = vec![
        InverterRecord { bus: BusId::from("inv"), m: 0.01, n: 0.01, tau },
        InverterRecord { bus: BusId::from("grid"), m: 1e-5, n: 1e-5, tau },
    ];
    let lines = vec![LineRecord { from: BusId::from("inv"), to: BusId::from("grid"), r: 1.4 * x, x, length_km: None }];
    Network::from_parts(base, buses, inverters, lines)
}

#[test]
fn stiff_bus_below_threshold_is_stable() {
    let model = against_stiff_bus(0.5);
    let (_, spec) = network_spectrum(&model).unwrap();
    let mu_cr = CharPoly::from_network(&model).mu_critical().unwrap();
    assert!(spec.max_mu() < mu_cr);
    let ev = oracle_eigenvalues(&StateSpace::from_network(&model).unwrap()).unwrap();
    assert!(max_nontrivial_real_part(&ev).unwrap() < 0.0);
}

#[test]
fn stable_case_decays() {
    let model = four_bus().with_line_length("3-4", 5.0).unwrap();
    let ss = StateSpace::from_network(&model).unwrap();
    let mut x0 = DVector::zeros(20);
    // zero-mean angle offsets so the rigid-rotation mode is not excited
    x0[0] = 0.05;
    x0[1] = -0.02;
    x0[2] = 0.03;
    x0[3] = -0.06;
    x0[12] = 0.01;
    let tr = time_response(&ss, &x0, 20.0, 0.01).unwrap();
    let last = tr.rows.len() - 1;
    assert!(tr.row_max_abs(last) < x0.amax() * 1e-3, "{}", tr.row_max_abs(last));
}

#[test]
fn four_bus_oscillation_grows_on_buses_3_and_4() {
    let ss = StateSpace::from_network(&four_bus()).unwrap();
    let mut x0 = DVector::zeros(20);
    x0[2] = 1e-4;
    x0[3] = -1e-4;
    let tr = time_response(&ss, &x0, 2.0, 1e-3).unwrap();
    let last = tr.rows.len() - 1;
    assert!(tr.row_max_abs(last) > 1e3 * x0.amax());
    // angle deviations from their mean at the end of the run
    let theta: Vec<f64> = tr.rows[last][1..5].to_vec();
    let mean = theta.iter().sum::<f64>() / 4.0;
    let dev: Vec<f64> = theta.iter().map(|t| (t - mean).abs()).collect();
    assert!(dev[2] > 5.0 * dev[0] && dev[2] > 5.0 * dev[1]);
    assert!(dev[3] > 5.0 * dev[0] && dev[3] > 5.0 * dev[1]);
}

#[test]
fn trace_is_capped() {
    let ss = StateSpace::from_network(&four_bus().with_line_length("3-4", 5.0).unwrap()).unwrap();
    let tr = time_response(&ss, &DVector::zeros(20), 20.0, 1e-5).unwrap();
    assert_eq!(tr.rows.len(), 1_000_000);
    assert!(tr.truncated);
}
