//! Negative-imaginary (NI) plant certification, hybrid integrator-gain
//! system (HIGS) controllers and their positive-feedback closed loops.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: dense linear algebra helpers and tolerances.
//! * [`plant`]: state-space plants, frequency responses and NI tests.
//! * [`higs`]: the HIGS element, parallel and series compositions, storage
//!   functions and dissipation predicates.
//! * [`closedloop`]: interconnection, hybrid simulation and Lyapunov
//!   monitoring.
//! * [`synthesis`]: DC-gain based HIGS gain selection.
//! * [`analysis`]: describing functions and step-response metrics.
//! * [`io`]: JSON and CSV formats.

pub mod analysis;
pub mod closedloop;
pub mod error;
pub mod higs;
pub mod io;
pub mod numerics;
pub mod plant;
pub mod synthesis;

pub use analysis::{describing_function, step_metrics, step_metrics_window, DescribingOptions, DescribingPoint, StepMetrics};
pub use closedloop::{
    assemble, lyapunov_value, monitor_report, simulate, ClosedLoop, ControllerConfig, InitialState, InputChannel,
    InputKind, InputSignal, SimConfig, SimReport, SwitchEvent, Trajectory, Wiring,
};
pub use error::{Error, Result};
pub use higs::{
    classify_mode, dissipation_residual, higs_rate, sector_residual, storage_cascade, storage_multi, storage_single,
    CascadeHigs, HigsElement, HigsMode, HigsParams, MultiHigs, StorageKind,
};
pub use numerics::{CMat, Mat, Tolerances};
pub use plant::{
    find_ni_certificate, ni_certificate_test, ni_frequency_test, ni_hamiltonian_test, NiCertificate, NiMethod,
    NiVerdict, PlantModel,
};
pub use synthesis::{
    synthesize, synthesize_cascade, synthesize_multi, synthesize_single, SynthesisRequest, SynthesisResult, Topology,
};
