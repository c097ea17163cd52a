//! End-to-end pipeline in `f64`: stability report, parameter sweeps and the
//! `μ_cr` surface.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::charpoly::{CharPolyModel, MU_CR_REL_TOL};
use crate::error::{Error, Result};
use crate::netmodel::{BusId, BusKind, NetworkModel};
use crate::spectral::{extract_clusters, network_spectrum, ClusterDescriptor};
use crate::statespace::{equivalence_check, CheckStatus};

pub const UNIT_CONVENTION: &str = "droop gains enter M and N as fraction x omega0 \
(rad/s per unit power); mu is in rad/s per unit; B' = (1 + rho^2) x Kron-reduced susceptance";

/// Relative resolution of sweep crossings.
pub const CROSSING_REL_TOL: f64 = 1e-3;

/// Band around `μ_cr` where the two verdict paths may legitimately disagree.
pub const VERDICT_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
}

impl Verdict {
    pub fn from_unstable(unstable: bool) -> Self {
        if unstable {
            Verdict::Unstable
        } else {
            Verdict::Stable
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkSummary {
    pub buses: usize,
    pub inverters: usize,
    pub passive_buses: usize,
    pub lines: usize,
    pub inverter_bus_order: Vec<String>,
    pub rho: f64,
    pub k: f64,
    pub tau_s: f64,
    pub omega_c_rad_s: f64,
    pub omega0_rad_s: f64,
    pub base_voltage_v: f64,
    pub base_power_va: f64,
    pub impedance_base_ohm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEntry {
    pub mu: f64,
    pub trivial: bool,
    /// Entries in `inverter_bus_order`.
    pub eigenvector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    #[serde(flatten)]
    pub cluster: ClusterDescriptor,
    pub verdict: Verdict,
    /// `μ_cr − μ`; negative for an unstable cluster.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleBlock {
    pub status: CheckStatus,
    pub notice: Option<String>,
    pub max_distance: Option<f64>,
    pub tolerance: f64,
    pub max_cosine_distance: Option<f64>,
    pub max_real_part: Option<f64>,
    pub verdict: Verdict,
    pub agrees: bool,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Provenance {
    pub input_sha256: Option<String>,
    pub tool_version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub network: NetworkSummary,
    pub unit_convention: String,
    pub mu_cr: f64,
    /// Ascending μ.
    pub spectrum: Vec<SpectrumEntry>,
    /// Largest μ first.
    pub clusters: Vec<ClusterReport>,
    pub verdict: Verdict,
    pub oracle: OracleBlock,
    pub provenance: Provenance,
}

impl StabilityReport {
    pub fn max_mu(&self) -> f64 {
        self.spectrum.last().map_or(0.0, |s| s.mu)
    }

    /// Plain-text rendering for `--pretty`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let n = &self.network;
        s += &format!(
            "network: {} buses ({} inverters, {} passive), {} lines\n",
            n.buses, n.inverters, n.passive_buses, n.lines
        );
        s += &format!("rho = {:.6}  k = {:.6}  omega_c = {:.4} rad/s\n", n.rho, n.k, n.omega_c_rad_s);
        s += &format!("mu_cr = {:.4}\n", self.mu_cr);
        s += &format!("bus order: {}\n", n.inverter_bus_order.join(" "));
        s += "spectrum:\n";
        for e in &self.spectrum {
            let v: Vec<String> = e.eigenvector.iter().map(|x| format!("{x:+.5}")).collect();
            s += &format!("  mu = {:>12.5}  [{}]{}\n", e.mu, v.join(", "), if e.trivial { "  (trivial)" } else { "" });
        }
        s += "clusters:\n";
        for c in &self.clusters {
            s += &format!(
                "  #{} mu = {:.4} {} members {{{}}} critical lines [{}]\n",
                c.cluster.rank,
                c.cluster.mu,
                c.verdict.as_str(),
                c.cluster.member_ids().join(", "),
                c.cluster.critical_lines.join(", ")
            );
        }
        let o = &self.oracle;
        s += &format!(
            "state-matrix check: {} (max distance {}, max Re {}) -> {}\n",
            o.status.as_str(),
            o.max_distance.map_or("-".into(), |d| format!("{d:.3e}")),
            o.max_real_part.map_or("-".into(), |d| format!("{d:.6}")),
            o.verdict.as_str()
        );
        if let Some(w) = &o.warning {
            s += &format!("WARNING: {w}\n");
        }
        s += &format!("verdict: {}\n", self.verdict.as_str());
        s
    }
}

fn summary(model: &NetworkModel<f64>) -> NetworkSummary {
    let inverters = model.inverter_count();
    NetworkSummary {
        buses: model.buses.len(),
        inverters,
        passive_buses: model.buses.iter().filter(|b| b.kind == BusKind::Passive).count(),
        lines: model.lines.len(),
        inverter_bus_order: model.inverter_bus_ids().into_iter().map(|b| b.0).collect(),
        rho: model.rho,
        k: model.k,
        tau_s: 1.0 / model.omega_c(),
        omega_c_rad_s: model.omega_c(),
        omega0_rad_s: model.base.omega0,
        base_voltage_v: model.base.voltage,
        base_power_va: model.base.power,
        impedance_base_ohm: model.base.impedance,
    }
}

/// Spectrum, `μ_cr`, clusters and the state-matrix cross-check of a
/// validated model.
pub fn analyze(model: &NetworkModel<f64>, cluster_threshold: f64) -> Result<StabilityReport> {
    let (_, spectrum) = network_spectrum(model)?;
    let cp = CharPolyModel::from_network(model);
    let mu_cr = cp.mu_critical()?;

    let entries: Vec<SpectrumEntry> = (0..spectrum.len())
        .map(|i| SpectrumEntry {
            mu: spectrum.mu[i],
            trivial: spectrum.is_trivial(i),
            eigenvector: spectrum.vector(i).iter().copied().collect(),
        })
        .collect();
    let unstable = entries.iter().any(|e| !e.trivial && e.mu > mu_cr);
    let verdict = Verdict::from_unstable(unstable);

    let clusters = extract_clusters(&spectrum, model, cluster_threshold)
        .into_iter()
        .map(|c| ClusterReport {
            verdict: Verdict::from_unstable(c.mu > mu_cr),
            margin: mu_cr - c.mu,
            cluster: c,
        })
        .collect();

    let check = equivalence_check(model, &spectrum, &cp)?;
    let a_verdict = Verdict::from_unstable(check.max_real_part.is_some_and(|r| r > 0.0));
    let agrees = a_verdict == verdict;
    let max_mu = spectrum.max_mu();
    let warning = if !agrees {
        let near = (max_mu - mu_cr).abs() < VERDICT_MARGIN * mu_cr;
        Some(format!(
            "VERDICT DISAGREEMENT: spectral path says {}, state matrix says {}{}",
            verdict.as_str(),
            a_verdict.as_str(),
            if near { " (max mu within the margin band around mu_cr)" } else { "" }
        ))
    } else if check.status == CheckStatus::Fail {
        Some("state-matrix eigenvalues do not match the per-mode roots".into())
    } else {
        None
    };

    Ok(StabilityReport {
        network: summary(model),
        unit_convention: UNIT_CONVENTION.into(),
        mu_cr,
        spectrum: entries,
        clusters,
        verdict,
        oracle: OracleBlock {
            status: check.status,
            notice: check.notice,
            max_distance: check.max_distance,
            tolerance: check.tolerance,
            max_cosine_distance: check.max_cosine_distance,
            max_real_part: check.max_real_part,
            verdict: a_verdict,
            agrees,
            warning,
        },
        provenance: Provenance::default(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepParameter {
    /// Length of one line, km.
    LineLength(String),
    /// Frequency droop of one inverter, percent. Voltage droop follows so k
    /// stays fixed.
    DroopM(BusId),
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("line-length", id)) if !id.is_empty() => Ok(SweepParameter::LineLength(id.to_string())),
            Some(("droop-m", bus)) if !bus.is_empty() => Ok(SweepParameter::DroopM(BusId(bus.to_string()))),
            _ => Err(Error::UnknownParameter(format!(
                "{s} (expected line-length:<line-id> or droop-m:<bus-id>)"
            ))),
        }
    }
}

impl SweepParameter {
    pub fn name(&self) -> String {
        match self {
            SweepParameter::LineLength(id) => format!("line-length:{id}"),
            SweepParameter::DroopM(bus) => format!("droop-m:{bus}"),
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            SweepParameter::LineLength(_) => "km",
            SweepParameter::DroopM(_) => "%",
        }
    }

    pub fn apply(&self, model: &NetworkModel<f64>, value: f64) -> Result<NetworkModel<f64>> {
        if !(value > 0.0) {
            return Err(Error::InvalidArgument(format!("sweep value must be positive, got {value}")));
        }
        match self {
            SweepParameter::LineLength(id) => model.with_line_length(id, value),
            SweepParameter::DroopM(bus) => model.with_droop_m(bus, value / 100.0),
        }
    }

    /// Checks the parameter refers to something in `model`.
    pub fn check(&self, model: &NetworkModel<f64>) -> Result<()> {
        match self {
            SweepParameter::LineLength(id) => {
                let line = model.line(id).ok_or_else(|| Error::UnknownParameter(format!("line {id}")))?;
                if line.length_km.is_none() {
                    return Err(Error::InvalidArgument(format!("line {id} has no length (per-unit input)")));
                }
                Ok(())
            }
            SweepParameter::DroopM(bus) => model
                .inverters
                .iter()
                .any(|i| &i.bus == bus)
                .then_some(())
                .ok_or_else(|| Error::UnknownParameter(format!("inverter at bus {bus}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    /// Nontrivial μ, largest first.
    pub mu: Vec<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct Crossing {
    /// Parameter value where the μ of this rank equals `μ_cr`.
    pub value: f64,
    /// 1 for the largest μ.
    pub rank: usize,
    /// Whether this μ lies above `μ_cr` just below / just above the crossing.
    pub above_before: bool,
    pub above_after: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub parameter: String,
    pub unit: String,
    pub mu_cr: f64,
    pub points: Vec<SweepPoint>,
    /// Crossings of the largest μ, where the verdict flips.
    pub stability_crossings: Vec<Crossing>,
    /// Crossings of every rank, including the largest.
    pub mode_crossings: Vec<Crossing>,
}

impl SweepResult {
    /// `value,mu_1,...,mu_r,mu_cr,verdict`, `mu_1` the largest.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let r = self.points.first().map_or(0, |p| p.mu.len());
        let mut header = vec![self.parameter.replace(',', "_")];
        header.extend((1..=r).map(|i| format!("mu_{i}")));
        header.push("mu_cr".into());
        header.push("verdict".into());
        writeln!(w, "{}", header.join(","))?;
        for p in &self.points {
            let mut row = vec![format!("{}", p.value)];
            row.extend(p.mu.iter().map(|m| format!("{m}")));
            row.push(format!("{}", self.mu_cr));
            row.push(p.verdict.as_str().into());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Nontrivial μ of `model`, largest first.
pub fn nontrivial_mu(model: &NetworkModel<f64>) -> Result<Vec<f64>> {
    let (_, s) = network_spectrum(model)?;
    Ok((0..s.len()).rev().filter(|&i| !s.is_trivial(i)).map(|i| s.mu[i]).collect())
}

fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 || hi == lo {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Sweeps one parameter over a linear grid. `μ_cr` is computed once from the
/// base model; crossings of every μ rank are bisected to [`CROSSING_REL_TOL`].
pub fn sweep(model: &NetworkModel<f64>, param: &SweepParameter, range: (f64, f64), count: usize) -> Result<SweepResult> {
    let (lo, hi) = range;
    if !(lo > 0.0) || !(hi >= lo) || count == 0 {
        return Err(Error::InvalidArgument(format!("sweep range [{lo}, {hi}] with {count} points")));
    }
    param.check(model)?;
    let mu_cr = CharPolyModel::from_network(model).mu_critical()?;

    let values = linear_grid(lo, hi, count);
    let spectra: Vec<Vec<f64>> = values
        .par_iter()
        .map(|&v| nontrivial_mu(&param.apply(model, v)?))
        .collect::<Result<_>>()?;

    let points: Vec<SweepPoint> = values
        .iter()
        .zip(&spectra)
        .map(|(&value, mu)| SweepPoint {
            value,
            verdict: Verdict::from_unstable(mu.first().is_some_and(|&m| m > mu_cr)),
            mu: mu.clone(),
        })
        .collect();

    let ranks = spectra.first().map_or(0, |m| m.len());
    for r in 0..ranks {
        let series: Vec<f64> = spectra.iter().map(|m| m[r]).collect();
        check_monotone(&series, r + 1, &values)?;
    }

    let mut brackets = Vec::new();
    for r in 0..ranks {
        for i in 1..values.len() {
            let before = spectra[i - 1][r] > mu_cr;
            let after = spectra[i][r] > mu_cr;
            if before != after {
                brackets.push((r, values[i - 1], values[i], before));
            }
        }
    }
    let mode_crossings: Vec<Crossing> = brackets
        .par_iter()
        .map(|&(r, a, b, before)| {
            let value = bisect_crossing(model, param, r, a, b, before, mu_cr)?;
            Ok(Crossing { value, rank: r + 1, above_before: before, above_after: !before })
        })
        .collect::<Result<_>>()?;
    let stability_crossings = mode_crossings.iter().filter(|c| c.rank == 1).cloned().collect();

    Ok(SweepResult {
        parameter: param.name(),
        unit: param.unit().into(),
        mu_cr,
        points,
        stability_crossings,
        mode_crossings,
    })
}

fn check_monotone(series: &[f64], rank: usize, values: &[f64]) -> Result<()> {
    let scale = series.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let tol = 1e-9 * scale;
    let up = series.windows(2).all(|w| w[1] >= w[0] - tol);
    let down = series.windows(2).all(|w| w[1] <= w[0] + tol);
    if up || down {
        Ok(())
    } else {
        Err(Error::NonMonotone(format!(
            "mu of rank {rank} is not monotone over [{}, {}]",
            values[0],
            values[values.len() - 1]
        )))
    }
}

fn bisect_crossing(
    model: &NetworkModel<f64>,
    param: &SweepParameter,
    rank: usize,
    mut a: f64,
    mut b: f64,
    above_at_a: bool,
    mu_cr: f64,
) -> Result<f64> {
    while b - a > CROSSING_REL_TOL * b.abs() {
        let mid = 0.5 * (a + b);
        let mu = nontrivial_mu(&param.apply(model, mid)?)?;
        if (mu[rank] > mu_cr) == above_at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurfaceRow {
    pub rho: f64,
    pub k: f64,
    /// NaN where the bisection failed.
    pub mu_cr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MucrSurface {
    pub rows: Vec<SurfaceRow>,
    pub failures: usize,
    pub minimum: Option<SurfaceRow>,
}

impl MucrSurface {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "rho,k,mu_cr")?;
        for r in &self.rows {
            if r.mu_cr.is_nan() {
                writeln!(w, "{},{},nan", r.rho, r.k)?;
            } else {
                writeln!(w, "{},{},{}", r.rho, r.k, r.mu_cr)?;
            }
        }
        Ok(())
    }

    pub fn summary_line(&self) -> String {
        match &self.minimum {
            Some(m) => format!(
                "grid minimum mu_cr = {:.4} at rho = {:.4}, k = {:.4}; {} of {} points failed",
                m.mu_cr,
                m.rho,
                m.k,
                self.failures,
                self.rows.len()
            ),
            None => format!("no grid point converged; {} of {} points failed", self.failures, self.rows.len()),
        }
    }
}

/// `μ_cr` on a linear `n_rho × n_k` grid, `rho` varying slowest.
pub fn mucr_surface(
    rho: (f64, f64),
    k: (f64, f64),
    n_rho: usize,
    n_k: usize,
    tau: f64,
    omega0: f64,
) -> Result<MucrSurface> {
    for (name, (lo, hi)) in [("rho", rho), ("k", k)] {
        if !(lo > 0.0) || !(hi >= lo) {
            return Err(Error::InvalidArgument(format!("{name} range [{lo}, {hi}] must be positive")));
        }
    }
    if !(tau > 0.0) || !(omega0 > 0.0) || n_rho == 0 || n_k == 0 {
        return Err(Error::InvalidArgument("tau, omega0 and grid counts must be positive".into()));
    }
    let rhos = linear_grid(rho.0, rho.1, n_rho);
    let ks = linear_grid(k.0, k.1, n_k);
    let grid: Vec<(f64, f64)> = rhos.iter().flat_map(|&r| ks.iter().map(move |&k| (r, k))).collect();
    let rows: Vec<SurfaceRow> = grid
        .par_iter()
        .map(|&(rho, k)| {
            let mu_cr = CharPolyModel::new(rho, k, tau, omega0)
                .mu_critical_with_tol(MU_CR_REL_TOL)
                .unwrap_or(f64::NAN);
            SurfaceRow { rho, k, mu_cr }
        })
        .collect();
    let failures = rows.iter().filter(|r| r.mu_cr.is_nan()).count();
    let minimum = rows
        .iter()
        .filter(|r| !r.mu_cr.is_nan())
        .min_by(|a, b| a.mu_cr.total_cmp(&b.mu_cr))
        .copied();
    Ok(MucrSurface { rows, failures, minimum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::parse_network;

    const FOUR_BUS: &str = include_str!("../tests/data/four_bus.json");

    fn four_bus() -> NetworkModel<f64> {
        parse_network(FOUR_BUS).unwrap()
    }

    #[test]
    fn four_bus_report() {
        let r = analyze(&four_bus(), 0.1).unwrap();
        assert_eq!(r.verdict, Verdict::Unstable);
        assert!(r.oracle.agrees);
        assert_eq!(r.oracle.status, CheckStatus::Pass);
        assert_eq!(r.clusters[0].cluster.member_ids(), vec!["3", "4"]);
        assert_eq!(r.clusters[0].verdict, Verdict::Unstable);
        assert_eq!(r.spectrum.len(), 4);
    }

    #[test]
    fn parameter_parsing() {
        assert_eq!(
            "line-length:3-4".parse::<SweepParameter>().unwrap(),
            SweepParameter::LineLength("3-4".into())
        );
        assert_eq!("droop-m:1".parse::<SweepParameter>().unwrap(), SweepParameter::DroopM("1".into()));
        assert!(matches!("foo:1".parse::<SweepParameter>(), Err(Error::UnknownParameter(_))));
        assert!(matches!("line-length:".parse::<SweepParameter>(), Err(Error::UnknownParameter(_))));
    }

    #[test]
    fn unknown_line_is_rejected() {
        let err = sweep(&four_bus(), &SweepParameter::LineLength("1-4".into()), (1.0, 2.0), 3).unwrap_err();
        assert!(matches!(err, Error::UnknownParameter(_)));
    }

    #[test]
    fn single_point_surface() {
        let s = mucr_surface((1.4, 1.4), (1.0, 1.0), 1, 1, 1.0 / 14.0, 100.0 * std::f64::consts::PI).unwrap();
        assert_eq!(s.rows.len(), 1);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }
}
