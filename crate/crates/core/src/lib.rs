//! Mixed finite elements for the fully dynamic response of incompressible
//! saturated porous media.
//!
//! The medium is described by three independent fields: skeleton displacement
//! `u` (nodal P1 or P2 triangles), fluid Darcy velocity `w` (lowest-order
//! Raviart-Thomas edge elements) and pore pressure `p` (elementwise constant).
//! Both skeleton and fluid inertia are retained, so the semi-discrete system
//! is an index-2 DAE advanced with the constant-average Newmark scheme from
//! consistent initial conditions.
//!
//! Module map:
//! - [`mesh`]: structured triangulations (criss / crisscross / union jack)
//!   with oriented edge topology,
//! - [`basis`]: shape functions, RT0 edge basis and Gauss rules on triangles,
//! - [`assembly`]: global coefficient matrices, mass lumping, load vectors,
//! - [`linsolve`]: direct factorization of the saddle-point systems,
//! - [`timestep`]: Newmark stepping, consistent initialization, energy audit,
//! - [`stability`]: constraint-rank and numerical inf-sup diagnostics,
//! - [`benchmarks`]: canned verification cases and derived measurements.
//!
//! All numerics are generic over the floating scalar; see [`scalar::Scalar`].
//! The aliases below fix the two supported precisions.

pub mod assembly;
pub mod basis;
pub mod benchmarks;
pub mod linalg;
pub mod linsolve;
pub mod mesh;
pub mod scalar;
pub mod stability;
pub mod timestep;

pub use scalar::Scalar;

use thiserror::Error;

/// Errors surfaced by mesh generation, assembly, factorization and runs.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid mesh spec: {0}")]
    InvalidMeshSpec(String),
    #[error("degenerate triangle {tri}: area {area:e}")]
    DegenerateTriangle { tri: usize, area: f64 },
    #[error("unsupported quadrature degree {0} (supported: 2, 4)")]
    UnsupportedDegree(usize),
    #[error("unknown boundary side `{0}`")]
    UnknownSide(String),
    #[error("unknown mass lumping method `{0}`")]
    UnknownLumping(String),
    #[error("boundary condition coverage: {0}")]
    BcCoverage(String),
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),
    #[error("invalid parameter combination: {0}")]
    InvalidParameter(String),
    #[error("matrix is not positive definite at dof {dof}")]
    NotPositiveDefinite { dof: usize },
    #[error(
        "singular constraint block: pressure dof {pressure_dof} carries a redundant constraint"
    )]
    SingularPressurePivot { pressure_dof: usize },
    #[error("eigenvalue iteration did not converge")]
    EigenNoConverge,
    #[error("load history lookup out of range at t = {t:e} s")]
    LoadOutOfRange { t: f64 },
    #[error("probe `{0}` does not resolve to a free dof")]
    ProbeUnresolved(String),
    #[error("wave front never reaches depth {depth} within the run duration")]
    WavefrontNotDetected { depth: f64 },
    #[error("{stage} failed for case `{case}`: {source}")]
    Run {
        case: String,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Concrete aliases for the two supported precisions.
pub type Mesh64 = mesh::Mesh<f64>;
pub type Mesh32 = mesh::Mesh<f32>;
pub type MaterialParams64 = assembly::MaterialParams<f64>;
pub type MaterialParams32 = assembly::MaterialParams<f32>;
pub type SystemMatrices64 = assembly::SystemMatrices<f64>;
pub type State64 = timestep::State<f64>;
pub type EnergyLedger64 = timestep::EnergyLedger<f64>;
pub type BenchmarkCase64 = benchmarks::BenchmarkCase<f64>;
