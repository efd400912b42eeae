//! Numerical laboratory for SU(2) parallel transports of scaled homogeneous
//! connections along analytic curves: geometric integration, closed-form
//! references for constant-coefficient curves, fiducial energies, and
//! almost-periodicity diagnostics of c ↦ g_c.

pub mod algebra;
pub mod apcheck;
pub mod cheb;
pub mod cli;
pub mod closedform;
pub mod curve;
pub mod energy;
pub mod report;
pub mod transport;

pub use algebra::{su2_conjugate, su2_distance, su2_mul, AlgebraError, Su2};
pub use curve::{
    from_spec, Classification, ConjugatedFrame, Curve, CurveError, CurveSpec, Family, FrameField,
    FrameSample, SpiralParams, M_FLOOR,
};
pub use transport::{
    holonomy, holonomy_aniso, holonomy_segment, holonomy_track, IntegratorOptions, Scale, Track,
    TransportError, TransportResult,
};
