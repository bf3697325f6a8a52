//! Spectral form factor of coupled chaotic Floquet systems: Monte Carlo over
//! random-matrix transition ensembles and coupled kicked rotors, together
//! with the closed-form large-`N` predictions they are compared against.

pub mod bessel;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod experiment;
pub mod matrix;
pub mod output;
pub mod random;
pub mod rotor;
pub mod theory;

pub use config::{ExperimentConfig, Model, OutputFormat};
pub use ensemble::{
    build_rmte, eigenphases, eigenphases_with, trace_powers, EigenRoute, EigenphaseSpectrum,
    EnsembleParams, TraceSequence,
};
pub use error::{Result, SffError};
pub use estimator::{rescale, smooth, MomentAccumulator, RescaledCurve, SffCurve, Smoothing};
pub use experiment::{run_experiment, DerivedScales, ResultBundle};
pub use matrix::UnitaryMatrix;
pub use output::{emit_results, read_csv, read_metadata, Metadata, ResultRow};
pub use random::{sample_cue, sample_phases, PhaseDistribution, RngStream};
pub use rotor::{build_coupled_rotors, rotor_effective_theory, RotorParams};
pub use theory::{CouplingModel, TheoryCurve};
