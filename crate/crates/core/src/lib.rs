//! Separable (homologous) solutions of a self-gravitating hyperelastic ball.
//!
//! The spatial profile is the fixed point of a contraction built on the
//! radial operator `L ζ = ζ'' + (4/R) ζ'`; the reference density is chosen
//! by bisection so that the boundary is stress free. The time amplitude
//! solves `q² q̈ = μ`.

pub mod cli_io;
pub mod constitutive;
pub mod error;
pub mod fixed_point;
pub mod radial_ops;
pub mod shooting;
pub mod temporal;
pub mod verify;

pub use constitutive::{make_builtin_model, validate_model, ConstitutiveModel, StrainFunction, ValidatedModel};
pub use error::{Result, SolverError};
pub use fixed_point::{picard_solve, Parameters};
pub use radial_ops::{reconstruct_geometry, GeometryProfile, RadialGrid, ZetaProfile};
pub use shooting::{solve_separable, sweep, ParameterBox, SolutionProfile, SolveSettings};
pub use temporal::{classify, collapse_time, evolve_q, Regime, TemporalSolution};
pub use verify::{residual_report, ResidualReport};
