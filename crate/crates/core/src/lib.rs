//! Discontinuous Galerkin solver for 1D/2D hyperbolic conservation laws with a
//! continuously bounds-preserving squeeze limiter.

pub mod basis;
pub mod cases;
pub mod constraints;
pub mod error;
pub mod limiter;
pub mod mesh;
pub mod reference;
pub mod solver;
pub mod stabilize;
pub mod verify;

pub use cases::{get_case, CaseDefinition, CASE_NAMES};
pub use basis::{build_basis, nodal_to_modal, ElementBasis, ModalSolution, MonomialBasis, NodalBasis};
pub use constraints::{ApplicationMode, ConstraintFunctional, ConstraintSet, Quantity};
pub use error::{Error, Result};
pub use limiter::{LimiterConfig, LimiterMode, LimiterReport};
pub use mesh::{BoundaryKind, FaceLink, Mesh};
pub use reference::{ElementKind, RefPoint, ReferenceElement, DEFAULT_TOL};
pub use solver::{AdvectionField, EquationSet, SimulationState, Solver, SolverConfig, StateFn, StepStats};
pub use stabilize::IndicatorConfig;
pub use verify::{oversample_min, rate_of_convergence, AuditEntry, AuditRecord, Norm, Oversampler, RocMethod};
