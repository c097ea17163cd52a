//! Microgrid network description: per-unit normalisation, parsing and validation.
//!
//! The input is a JSON document:
//!
//! ```json
//! {
//!   "base": {"voltage_V": 230, "rating_VA": 10000, "frequency_Hz": 50},
//!   "power_filter_cutoff_rad_s": 14.0,
//!   "buses": [{"id": "1", "inverter": {"m_pct": 1, "n_pct": 1}}, {"id": "5"}],
//!   "lines": [
//!     {"from": "1", "to": "5", "length_km": 6, "R_ohm_per_km": 0.2222, "L_H_per_km": 0.00051},
//!     {"from": "5", "to": "2", "R_pu": 0.04, "X_pu": 0.03}
//!   ]
//! }
//! ```
//!
//! Buses without an `inverter` object are passive interior nodes and are
//! eliminated by Kron reduction downstream. After parsing, buses are ordered
//! inverter buses first (document order), then passive buses.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{lit, rel_diff, to_f64, Real};

/// Default power-filter cutoff in rad/s.
pub const DEFAULT_OMEGA_C: f64 = 14.0;

/// Relative tolerance for the uniform R/X and m/n requirements.
pub const UNIFORMITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BusId(pub String);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BusId {
    fn from(s: &str) -> Self {
        BusId(s.to_owned())
    }
}

/// Per-unit base of the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseSystem<T> {
    /// Volts.
    pub voltage: T,
    /// Volt-amperes.
    pub power: T,
    /// Nominal angular frequency in rad/s.
    pub omega0: T,
    /// Ohms, always `voltage² / power`.
    pub impedance: T,
}

impl<T: Real> BaseSystem<T> {
    pub fn new(voltage: T, power: T, frequency_hz: T) -> Result<Self> {
        for (name, v) in [("voltage_V", voltage), ("rating_VA", power), ("frequency_Hz", frequency_hz)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Field {
                    context: format!("base.{name}"),
                    message: format!("must be a positive number, got {}", to_f64(v)),
                });
            }
        }
        Ok(Self {
            voltage,
            power,
            omega0: T::two_pi() * frequency_hz,
            impedance: voltage * voltage / power,
        })
    }

    pub fn frequency_hz(&self) -> T {
        self.omega0 / T::two_pi()
    }

    pub fn ohms_to_pu(&self, ohms: T) -> T {
        ohms / self.impedance
    }

    pub fn pu_to_ohms(&self, pu: T) -> T {
        pu * self.impedance
    }

    /// Reactance in per-unit of an inductance at the nominal frequency.
    pub fn henries_to_pu_reactance(&self, henries: T) -> T {
        self.omega0 * henries / self.impedance
    }

    pub fn pu_reactance_to_henries(&self, x_pu: T) -> T {
        x_pu * self.impedance / self.omega0
    }
}

/// Droop settings of one grid-forming inverter.
#[derive(Debug, Clone, PartialEq)]
pub struct InverterRecord<T> {
    pub bus: BusId,
    /// Frequency droop as a fraction (1 % is 0.01).
    pub m: T,
    /// Voltage droop as a fraction.
    pub n: T,
    /// Power-filter time constant, seconds.
    pub tau: T,
}

impl<T: Real> InverterRecord<T> {
    pub fn k(&self) -> T {
        self.m / self.n
    }
}

/// A line between two buses, impedances in per-unit.
#[derive(Debug, Clone, PartialEq)]
pub struct LineRecord<T> {
    pub from: BusId,
    pub to: BusId,
    pub r: T,
    pub x: T,
    /// Physical length when the line was given per kilometre.
    pub length_km: Option<T>,
}

impl<T: Real> LineRecord<T> {
    /// `"from-to"`, the identifier used in reports and sweep specs.
    pub fn id(&self) -> String {
        format!("{}-{}", self.from, self.to)
    }

    pub fn rho(&self) -> T {
        self.r / self.x
    }

    /// Per-unit inductance (`X / omega0`).
    pub fn inductance(&self, omega0: T) -> T {
        self.x / omega0
    }

    pub fn joins(&self, a: &BusId, b: &BusId) -> bool {
        (&self.from == a && &self.to == b) || (&self.from == b && &self.to == a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Inverter,
    Passive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
}

/// Validated-or-not description of a microgrid.
///
/// `buses` holds inverter buses first, then passive buses; `inverters[i]`
/// belongs to `buses[i]`. Every matrix in the crate indexes in this order.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel<T> {
    pub base: BaseSystem<T>,
    pub buses: Vec<Bus>,
    pub inverters: Vec<InverterRecord<T>>,
    pub lines: Vec<LineRecord<T>>,
    /// System R/X ratio.
    pub rho: T,
    /// System droop ratio m/n.
    pub k: T,
}

impl<T: Real> NetworkModel<T> {
    /// Assembles a model without validating it. Buses are reordered inverter
    /// first and `rho`/`k` are taken as the mean over lines/inverters.
    pub fn from_parts(
        base: BaseSystem<T>,
        buses: Vec<Bus>,
        inverters: Vec<InverterRecord<T>>,
        lines: Vec<LineRecord<T>>,
    ) -> Self {
        let (mut ordered, passive): (Vec<Bus>, Vec<Bus>) =
            buses.into_iter().partition(|b| b.kind == BusKind::Inverter);
        ordered.extend(passive);

        let mut invs = Vec::with_capacity(inverters.len());
        let mut rest = inverters;
        for bus in ordered.iter().filter(|b| b.kind == BusKind::Inverter) {
            if let Some(pos) = rest.iter().position(|i| i.bus == bus.id) {
                invs.push(rest.remove(pos));
            }
        }
        invs.extend(rest);

        let rho = mean(lines.iter().map(|l| l.rho()));
        let k = mean(invs.iter().map(|i| i.k()));
        Self {
            base,
            buses: ordered,
            inverters: invs,
            lines,
            rho,
            k,
        }
    }

    /// Runs [`validate`] and turns violations into an error.
    pub fn validated(self) -> Result<Self> {
        let v = validate(&self);
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::Invalid(v))
        }
    }

    pub fn inverter_count(&self) -> usize {
        self.buses.iter().filter(|b| b.kind == BusKind::Inverter).count()
    }

    pub fn bus_index(&self, id: &BusId) -> Option<usize> {
        self.buses.iter().position(|b| &b.id == id)
    }

    pub fn inverter_bus_ids(&self) -> Vec<BusId> {
        self.buses
            .iter()
            .filter(|b| b.kind == BusKind::Inverter)
            .map(|b| b.id.clone())
            .collect()
    }

    /// Power-filter cutoff `1/tau` of the first inverter.
    pub fn omega_c(&self) -> T {
        self.inverters
            .first()
            .map(|i| T::one() / i.tau)
            .unwrap_or_else(|| lit(DEFAULT_OMEGA_C))
    }

    /// Frequency droop gains in rad/s per unit power (`m * omega0`).
    pub fn m_gains(&self) -> Vec<T> {
        self.inverters.iter().map(|i| i.m * self.base.omega0).collect()
    }

    /// Voltage droop gains carrying the same `omega0` factor, so that
    /// `m_gains = k * n_gains`.
    pub fn n_gains(&self) -> Vec<T> {
        self.inverters.iter().map(|i| i.n * self.base.omega0).collect()
    }

    pub fn line(&self, id: &str) -> Option<&LineRecord<T>> {
        self.lines.iter().find(|l| l.id() == id || reversed_id(l) == id)
    }

    /// Copy with every inverter's filter cutoff set to `omega_c`.
    pub fn with_omega_c(&self, omega_c: T) -> Self {
        let mut out = self.clone();
        for inv in &mut out.inverters {
            inv.tau = T::one() / omega_c;
        }
        out
    }

    /// Copy with one line stretched to `length_km`, scaling R and X.
    pub fn with_line_length(&self, line_id: &str, length_km: T) -> Result<Self> {
        let mut out = self.clone();
        let line = out
            .lines
            .iter_mut()
            .find(|l| l.id() == line_id || reversed_id(l) == line_id)
            .ok_or_else(|| Error::UnknownParameter(format!("line {line_id}")))?;
        let old = line.length_km.ok_or_else(|| {
            Error::InvalidArgument(format!("line {line_id} was given in per-unit and has no length"))
        })?;
        let scale = length_km / old;
        line.r *= scale;
        line.x *= scale;
        line.length_km = Some(length_km);
        Ok(out)
    }

    /// Copy with the frequency droop of one inverter set to `m` (fraction).
    /// The voltage droop moves with it so the ratio k stays unchanged.
    pub fn with_droop_m(&self, bus: &BusId, m: T) -> Result<Self> {
        let mut out = self.clone();
        let inv = out
            .inverters
            .iter_mut()
            .find(|i| &i.bus == bus)
            .ok_or_else(|| Error::UnknownParameter(format!("inverter at bus {bus}")))?;
        let k = inv.k();
        inv.m = m;
        inv.n = m / k;
        Ok(out)
    }

    /// Copy with an additional line of per-unit reactance `x` (R = rho·X).
    pub fn with_added_line(&self, from: &BusId, to: &BusId, x: T) -> Self {
        let mut out = self.clone();
        out.lines.push(LineRecord {
            from: from.clone(),
            to: to.clone(),
            r: self.rho * x,
            x,
            length_km: None,
        });
        out
    }
}

fn reversed_id<T>(l: &LineRecord<T>) -> String {
    format!("{}-{}", l.to, l.from)
}

fn mean<T: Real>(it: impl Iterator<Item = T>) -> T {
    let (sum, n) = it.fold((T::zero(), 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        T::zero()
    } else {
        sum / lit(n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationCode {
    NonpositiveBase,
    NonpositiveDroop,
    NegativeResistance,
    NonpositiveReactance,
    SelfLoop,
    DuplicateLine,
    DuplicateBus,
    UnknownBus,
    InverterMismatch,
    TooFewInverters,
    Disconnected,
    NonuniformRho,
    NonuniformK,
    NonuniformTau,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::NonpositiveBase => "NONPOSITIVE_BASE",
            ViolationCode::NonpositiveDroop => "NONPOSITIVE_DROOP",
            ViolationCode::NegativeResistance => "NEGATIVE_RESISTANCE",
            ViolationCode::NonpositiveReactance => "NONPOSITIVE_REACTANCE",
            ViolationCode::SelfLoop => "SELF_LOOP",
            ViolationCode::DuplicateLine => "DUPLICATE_LINE",
            ViolationCode::DuplicateBus => "DUPLICATE_BUS",
            ViolationCode::UnknownBus => "UNKNOWN_BUS",
            ViolationCode::InverterMismatch => "INVERTER_MISMATCH",
            ViolationCode::TooFewInverters => "TOO_FEW_INVERTERS",
            ViolationCode::Disconnected => "DISCONNECTED",
            ViolationCode::NonuniformRho => "NONUNIFORM_RHO",
            ViolationCode::NonuniformK => "NONUNIFORM_K",
            ViolationCode::NonuniformTau => "NONUNIFORM_TAU",
        }
    }
}

impl serde::Serialize for ViolationCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

/// Checks every model invariant. An empty list means the model is usable.
pub fn validate<T: Real>(model: &NetworkModel<T>) -> Vec<Violation> {
    use ViolationCode::*;
    let mut out = Vec::new();

    let b = &model.base;
    if !(b.voltage > T::zero() && b.power > T::zero() && b.omega0 > T::zero()) {
        out.push(Violation::new(NonpositiveBase, "all base quantities must be positive"));
    }

    let mut seen = BTreeSet::new();
    for bus in &model.buses {
        if !seen.insert(&bus.id) {
            out.push(Violation::new(DuplicateBus, format!("bus {} declared twice", bus.id)));
        }
    }

    for bus in &model.buses {
        let n = model.inverters.iter().filter(|i| i.bus == bus.id).count();
        match bus.kind {
            BusKind::Inverter if n != 1 => out.push(Violation::new(
                InverterMismatch,
                format!("inverter bus {} has {n} inverter records", bus.id),
            )),
            BusKind::Passive if n != 0 => out.push(Violation::new(
                InverterMismatch,
                format!("passive bus {} has {n} inverter records", bus.id),
            )),
            _ => {}
        }
    }
    for inv in &model.inverters {
        if model.bus_index(&inv.bus).is_none() {
            out.push(Violation::new(UnknownBus, format!("inverter refers to unknown bus {}", inv.bus)));
        }
        if !(inv.m > T::zero() && inv.n > T::zero() && inv.tau > T::zero()) {
            out.push(Violation::new(
                NonpositiveDroop,
                format!(
                    "inverter at bus {}: m, n and tau must be positive (m={}, n={}, tau={})",
                    inv.bus,
                    to_f64(inv.m),
                    to_f64(inv.n),
                    to_f64(inv.tau)
                ),
            ));
        }
    }

    let inv_count = model.inverter_count();
    if inv_count < 2 {
        out.push(Violation::new(
            TooFewInverters,
            format!("{inv_count} inverter(s): at least two are needed for any inter-inverter mode"),
        ));
    }

    let mut edges = BTreeSet::new();
    for line in &model.lines {
        let id = line.id();
        if line.from == line.to {
            out.push(Violation::new(SelfLoop, format!("line {id} connects a bus to itself")));
        }
        for end in [&line.from, &line.to] {
            if model.bus_index(end).is_none() {
                out.push(Violation::new(UnknownBus, format!("line {id} refers to unknown bus {end}")));
            }
        }
        let key = if line.from <= line.to {
            (line.from.clone(), line.to.clone())
        } else {
            (line.to.clone(), line.from.clone())
        };
        if line.from != line.to && !edges.insert(key) {
            out.push(Violation::new(DuplicateLine, format!("line {id} duplicates an existing line")));
        }
        if line.r < T::zero() {
            out.push(Violation::new(NegativeResistance, format!("line {id} has R < 0")));
        }
        if !(line.x > T::zero()) {
            out.push(Violation::new(NonpositiveReactance, format!("line {id} has X <= 0")));
        }
    }

    let components = connected_components(model);
    if components.len() > 1 {
        let listing = components
            .iter()
            .map(|c| format!("{{{}}}", c.iter().map(|b| b.0.as_str()).collect::<Vec<_>>().join(", ")))
            .collect::<Vec<_>>()
            .join(" ");
        out.push(Violation::new(
            Disconnected,
            format!("network has {} components: {listing}", components.len()),
        ));
    }

    let tol: T = lit(UNIFORMITY_TOL);
    let good_lines: Vec<&LineRecord<T>> = model.lines.iter().filter(|l| l.x > T::zero()).collect();
    let rhos: Vec<T> = good_lines.iter().map(|l| l.rho()).collect();
    for i in outliers(&rhos, tol) {
        out.push(Violation::new(
            NonuniformRho,
            format!(
                "line {} has R/X = {}, which differs from the system value",
                good_lines[i].id(),
                to_f64(rhos[i])
            ),
        ));
    }
    let good_invs: Vec<&InverterRecord<T>> =
        model.inverters.iter().filter(|i| i.n > T::zero() && i.m > T::zero()).collect();
    let ks: Vec<T> = good_invs.iter().map(|i| i.k()).collect();
    for i in outliers(&ks, tol) {
        out.push(Violation::new(
            NonuniformK,
            format!(
                "inverter at bus {} has m/n = {}, which differs from the system value",
                good_invs[i].bus,
                to_f64(ks[i])
            ),
        ));
    }
    let taus: Vec<T> = model.inverters.iter().map(|i| i.tau).collect();
    for i in outliers(&taus, tol) {
        out.push(Violation::new(
            NonuniformTau,
            format!("inverter at bus {} has a different filter time constant", model.inverters[i].bus),
        ));
    }
    out
}

/// Indices of values that disagree with the largest group of mutually
/// close values.
fn outliers<T: Real>(values: &[T], tol: T) -> Vec<usize> {
    if values.len() < 2 {
        return Vec::new();
    }
    let support = |v: T| values.iter().filter(|&&w| rel_diff(v, w) <= tol).count();
    let mut best = 0;
    let mut best_count = 0;
    for (i, &v) in values.iter().enumerate() {
        let c = support(v);
        if c > best_count {
            best = i;
            best_count = c;
        }
    }
    let reference = values[best];
    (0..values.len())
        .filter(|&i| rel_diff(values[i], reference) > tol)
        .collect()
}

fn connected_components<T: Real>(model: &NetworkModel<T>) -> Vec<Vec<BusId>> {
    let n = model.buses.len();
    let mut adj = vec![Vec::new(); n];
    for line in &model.lines {
        if let (Some(a), Some(b)) = (model.bus_index(&line.from), model.bus_index(&line.to)) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        comp[start] = id;
        while let Some(v) = queue.pop_front() {
            members.push(model.buses[v].id.clone());
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    queue.push_back(w);
                }
            }
        }
        out.push(members);
    }
    out
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IdDoc {
    Text(String),
    Int(i64),
}

impl From<IdDoc> for BusId {
    fn from(d: IdDoc) -> Self {
        match d {
            IdDoc::Text(s) => BusId(s),
            IdDoc::Int(i) => BusId(i.to_string()),
        }
    }
}

#[derive(Deserialize)]
struct BaseDoc {
    #[serde(rename = "voltage_V")]
    voltage: f64,
    #[serde(rename = "rating_VA")]
    rating: f64,
    #[serde(rename = "frequency_Hz")]
    frequency: f64,
}

#[derive(Deserialize)]
struct InverterDoc {
    m_pct: f64,
    n_pct: f64,
}

#[derive(Deserialize)]
struct BusDoc {
    id: IdDoc,
    inverter: Option<InverterDoc>,
}

#[derive(Deserialize)]
#[allow(non_snake_case)]
struct LineDoc {
    from: IdDoc,
    to: IdDoc,
    length_km: Option<f64>,
    R_ohm_per_km: Option<f64>,
    L_H_per_km: Option<f64>,
    R_pu: Option<f64>,
    X_pu: Option<f64>,
}

#[derive(Deserialize)]
struct Document {
    base: BaseDoc,
    power_filter_cutoff_rad_s: Option<f64>,
    buses: Vec<BusDoc>,
    lines: Vec<LineDoc>,
}

/// Parses a network document without validating it.
pub fn parse_unchecked<T: Real>(text: &str) -> Result<NetworkModel<T>> {
    let doc: Document = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let base = BaseSystem::new(lit(doc.base.voltage), lit(doc.base.rating), lit(doc.base.frequency))?;
    let omega_c = doc.power_filter_cutoff_rad_s.unwrap_or(DEFAULT_OMEGA_C);
    if !(omega_c > 0.0 && omega_c.is_finite()) {
        return Err(Error::Field {
            context: "power_filter_cutoff_rad_s".into(),
            message: format!("must be positive, got {omega_c}"),
        });
    }
    let tau: T = lit(1.0 / omega_c);

    let mut buses = Vec::with_capacity(doc.buses.len());
    let mut inverters = Vec::new();
    for b in doc.buses {
        let id: BusId = b.id.into();
        let kind = match b.inverter {
            Some(inv) => {
                inverters.push(InverterRecord {
                    bus: id.clone(),
                    m: lit(inv.m_pct / 100.0),
                    n: lit(inv.n_pct / 100.0),
                    tau,
                });
                BusKind::Inverter
            }
            None => BusKind::Passive,
        };
        buses.push(Bus { id, kind });
    }

    let mut lines = Vec::with_capacity(doc.lines.len());
    for (idx, l) in doc.lines.into_iter().enumerate() {
        let from: BusId = l.from.into();
        let to: BusId = l.to.into();
        let context = format!("lines[{idx}] ({from}-{to})");
        let si = l.R_ohm_per_km.is_some() || l.L_H_per_km.is_some();
        let pu = l.R_pu.is_some() || l.X_pu.is_some();
        let (r, x, length_km) = match (si, pu) {
            (true, true) => {
                return Err(Error::Field {
                    context,
                    message: "mixes SI-per-km and per-unit fields".into(),
                })
            }
            (false, false) => {
                return Err(Error::Field {
                    context,
                    message: "needs either length_km/R_ohm_per_km/L_H_per_km or R_pu/X_pu".into(),
                })
            }
            (true, false) => {
                let (Some(len), Some(r_km), Some(l_km)) = (l.length_km, l.R_ohm_per_km, l.L_H_per_km) else {
                    return Err(Error::Field {
                        context,
                        message: "SI line needs length_km, R_ohm_per_km and L_H_per_km".into(),
                    });
                };
                let len: T = lit(len);
                (
                    base.ohms_to_pu(lit::<T>(r_km) * len),
                    base.henries_to_pu_reactance(lit::<T>(l_km) * len),
                    Some(len),
                )
            }
            (false, true) => {
                let (Some(r), Some(x)) = (l.R_pu, l.X_pu) else {
                    return Err(Error::Field {
                        context,
                        message: "per-unit line needs both R_pu and X_pu".into(),
                    });
                };
                (lit(r), lit(x), l.length_km.map(lit))
            }
        };
        lines.push(LineRecord {
            from,
            to,
            r,
            x,
            length_km,
        });
    }

    Ok(NetworkModel::from_parts(base, buses, inverters, lines))
}

/// Parses and validates a network document.
pub fn parse_network<T: Real>(text: &str) -> Result<NetworkModel<T>> {
    parse_unchecked(text)?.validated()
}

/// Canonical per-unit JSON form of a model (keys sorted). It is itself a
/// valid input document.
pub fn to_canonical_json<T: Real>(model: &NetworkModel<T>) -> String {
    let buses: Vec<Value> = model
        .buses
        .iter()
        .map(|b| match model.inverters.iter().find(|i| i.bus == b.id) {
            Some(inv) => json!({
                "id": b.id.0,
                "inverter": {"m_pct": to_f64(inv.m) * 100.0, "n_pct": to_f64(inv.n) * 100.0},
            }),
            None => json!({"id": b.id.0}),
        })
        .collect();
    let lines: Vec<Value> = model
        .lines
        .iter()
        .map(|l| {
            let mut obj = BTreeMap::new();
            obj.insert("from", json!(l.from.0));
            obj.insert("to", json!(l.to.0));
            obj.insert("R_pu", json!(to_f64(l.r)));
            obj.insert("X_pu", json!(to_f64(l.x)));
            if let Some(len) = l.length_km {
                obj.insert("length_km", json!(to_f64(len)));
            }
            json!(obj)
        })
        .collect();
    let doc = json!({
        "base": {
            "voltage_V": to_f64(model.base.voltage),
            "rating_VA": to_f64(model.base.power),
            "frequency_Hz": to_f64(model.base.frequency_hz()),
        },
        "power_filter_cutoff_rad_s": to_f64(model.omega_c()),
        "buses": buses,
        "lines": lines,
        "derived": {
            "impedance_base_ohm": to_f64(model.base.impedance),
            "omega0_rad_s": to_f64(model.base.omega0),
            "rho": to_f64(model.rho),
            "k": to_f64(model.k),
        },
    });
    serde_json::to_string_pretty(&doc).expect("json value serialises")
}
