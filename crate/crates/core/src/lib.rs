//! Small-signal stability of droop-controlled inverter microgrids through the
//! spectrum of the droop-weighted susceptance matrix `C = M B'`.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod admittance;
pub mod analysis;
pub mod charpoly;
pub mod error;
pub mod linalg;
pub mod matching;
pub mod netmodel;
pub mod random;
pub mod scalar;
pub mod spectral;
pub mod statespace;

pub use admittance::{build_susceptance, kron_reduce, scale_to_bprime, SusceptanceSet};
pub use analysis::{analyze, mucr_surface, sweep, StabilityReport, SweepParameter, SweepResult, Verdict};
pub use charpoly::{CharPolyModel, RootLocusResult};
pub use error::{Error, Result};
pub use netmodel::{
    parse_network, parse_unchecked, to_canonical_json, validate, BaseSystem, Bus, BusId, BusKind, InverterRecord,
    LineRecord, NetworkModel, Violation, ViolationCode,
};
pub use scalar::Real;
pub use spectral::{extract_clusters, network_spectrum, weighted_spectrum, ClusterDescriptor, WeightedSpectrum};
pub use statespace::{
    assemble_state_matrix, oracle_eigenvalues, equivalence_check, time_response, CheckStatus, StateSpaceModel,
    EquivalenceReport, TraceTable,
};

pub type Network = NetworkModel<f64>;
pub type Spectrum = WeightedSpectrum<f64>;
pub type CharPoly = CharPolyModel<f64>;
pub type StateSpace = StateSpaceModel<f64>;
pub type Susceptance = SusceptanceSet<f64>;
