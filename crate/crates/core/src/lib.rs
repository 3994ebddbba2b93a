//! Sharp identified sets for finite games with multiple equilibria.
//!
//! A parameter value belongs to the identified set iff the observed outcome
//! distribution lies in the core of the model's Choquet-capacity likelihood.
//! Pure-strategy models can be checked exhaustively, by submodular
//! minimization, by max-flow feasibility, or through a core-determining
//! interval class; mixed-strategy models through the upper-envelope capacity
//! or a convex feasibility program.

pub mod capacity;
pub mod cd;
pub mod error;
pub mod flow;
pub mod games;
pub mod identify;
pub mod mixed;
pub mod space;
pub mod submodular;

pub use capacity::{
    capacity_from_combos, check_capacity, choquet_integral, core_contains_bruteforce, Capacity, CapacityReport,
    CoreCheck, EquilibriumCombos,
};
pub use cd::{cd_membership, interval_class, reduce_isolated, CdCheck, IntervalClass};
pub use error::{Error, Result};
pub use flow::{feasible, selection_from_flow, FlowCheck, SelectionMechanism};
pub use games::{Builtin, GameDescriptor, GameSpec, LatentDistribution, NuSpec};
pub use identify::{GridSpec, IdentifyOptions, Method, Model, PointResult, Witness};
pub use mixed::{ConvexCheck, ConvexConfig, Integration, MixedCapacitySpec, Verdict};
pub use space::{OutcomeSpace, ProbabilityVector, SubsetIndex, MAX_OUTCOMES};
pub use submodular::{core_membership_submodular, SubmodularCheck};
