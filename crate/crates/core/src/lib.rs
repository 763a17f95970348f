//! Storage, two-stage release and two-photon interference of single-photon
//! pulses in a tripod atomic medium.
//!
//! - [`control`]: control-field schedules and mixing angles.
//! - [`medium`]: split-step solver for the signal and coherence mode functions.
//! - [`polariton`]: polariton decomposition, basis changes and analytic transport.
//! - [`interference`]: time-bin beam splitter and two-photon statistics.
//! - [`protocol`]: storage/release timelines and end-to-end runs.

pub mod control;
pub mod error;
pub mod interference;
pub mod medium;
pub mod polariton;
pub mod protocol;

pub use num_complex::Complex64 as C64;

pub use control::{
    angle_trace, chi_integrate, mixing_angles, AngleState, ControlSchedule, ControlSet, RabiPair,
    RampShape, ScheduleBuilder, Segment,
};
pub use error::{Error, Result};
pub use interference::{
    bs_matrix, coalescence_amplitude, coalescence_probs, fock_oracle, hom_scan, linspace,
    noncoal_gaussian, overlap, BeamSplitterMatrix, ScanAxis, ScanParams, ScanRow, TwoPhotonStats,
    WavePacket,
};
pub use medium::{
    excitation_norm, released_fraction, run, scaled_rhs, FieldState, Grid, MediumParams, RunResult,
    RunSpec, SampleEdge, Solver, StageWindow,
};
pub use polariton::{
    basis_change, from_polaritons, to_polaritons, transport, transport_shift, PolaritonBasis,
    PolaritonField,
};
pub use protocol::{AutoPlan, Photon, Timeline};
