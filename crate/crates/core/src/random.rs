//! Seeded random connected networks for the property suites and `oracle --random`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netmodel::{BaseSystem, Bus, BusId, BusKind, InverterRecord, LineRecord, NetworkModel};

#[derive(Debug, Clone)]
pub struct RandomOptions {
    /// Passive buses are drawn from `0..=max_passive`.
    pub max_passive: usize,
    /// Extra lines beyond a spanning tree, drawn from `0..=max_extra_lines`.
    pub max_extra_lines: usize,
    pub rho_range: (f64, f64),
    pub k_range: (f64, f64),
    /// Per-unit reactance range of each line.
    pub x_range: (f64, f64),
    /// Frequency droop range, as a fraction.
    pub m_range: (f64, f64),
    /// Filter cutoff range, rad/s.
    pub omega_c_range: (f64, f64),
    /// Give the second inverter a different droop ratio.
    pub nonuniform_k: bool,
}

impl Default for RandomOptions {
    fn default() -> Self {
        Self {
            max_passive: 2,
            max_extra_lines: 3,
            rho_range: (0.3, 3.0),
            k_range: (0.5, 5.0),
            x_range: (0.02, 0.5),
            m_range: (0.002, 0.03),
            omega_c_range: (5.0, 60.0),
            nonuniform_k: false,
        }
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn draw<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// A connected network with `inverters` inverter buses and uniform ρ and k
/// (unless `nonuniform_k` is set). Buses are named `1..`, passive ones `p1..`.
pub fn random_network<R: Rng>(rng: &mut R, inverters: usize, opts: &RandomOptions) -> NetworkModel<f64> {
    let passive = rng.random_range(0..=opts.max_passive);
    let rho = draw(rng, opts.rho_range);
    let k = draw(rng, opts.k_range);
    let tau = 1.0 / draw(rng, opts.omega_c_range);

    let mut buses: Vec<Bus> = (1..=inverters)
        .map(|i| Bus { id: BusId(i.to_string()), kind: BusKind::Inverter })
        .collect();
    buses.extend((1..=passive).map(|i| Bus { id: BusId(format!("p{i}")), kind: BusKind::Passive }));
    let n = buses.len();

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        pairs.push((j, i));
    }
    let extra = rng.random_range(0..=opts.max_extra_lines);
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let (a, b) = (a.min(b), a.max(b));
        if a != b && !pairs.contains(&(a, b)) {
            pairs.push((a, b));
        }
    }

    let lines = pairs
        .into_iter()
        .map(|(a, b)| {
            let x = draw(rng, opts.x_range);
            LineRecord {
                from: buses[a].id.clone(),
                to: buses[b].id.clone(),
                r: rho * x,
                x,
                length_km: None,
            }
        })
        .collect();

    let invs = (0..inverters)
        .map(|i| {
            let m = draw(rng, opts.m_range);
            let ki = if opts.nonuniform_k && i == 1 { k * 1.5 } else { k };
            InverterRecord { bus: buses[i].id.clone(), m, n: m / ki, tau }
        })
        .collect();

    let base = BaseSystem::new(230.0, 1e4, 50.0).expect("positive base");
    NetworkModel::from_parts(base, buses, invs, lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{validate, ViolationCode};

    #[test]
    fn random_networks_validate() {
        let mut rng = seeded_rng(7);
        for _ in 0..50 {
            let m = rng.random_range(2..=8);
            let net = random_network(&mut rng, m, &RandomOptions::default());
            assert!(validate(&net).is_empty(), "{:?}", validate(&net));
            assert_eq!(net.inverter_count(), m);
        }
    }

    #[test]
    fn same_seed_same_network() {
        let a = random_network(&mut seeded_rng(3), 5, &RandomOptions::default());
        let b = random_network(&mut seeded_rng(3), 5, &RandomOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn nonuniform_injection() {
        let opts = RandomOptions { nonuniform_k: true, ..Default::default() };
        let net = random_network(&mut seeded_rng(1), 4, &opts);
        let codes: Vec<_> = validate(&net).into_iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![ViolationCode::NonuniformK]);
    }
}
