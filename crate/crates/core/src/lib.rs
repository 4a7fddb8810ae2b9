//! Utility-based route choice with complaint-driven preference adaptation.
//!
//! Routes are scored by a weighted sum of attribute utilities under a
//! preference vector on the probability simplex. Passenger complaints are
//! encoded as a fitness function and a genetic algorithm searches the simplex
//! for the closest preference that stops recommending the complained route.

pub mod complaint;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod fitness;
pub mod ga;
pub mod map;
pub mod planner;
pub mod rng;
pub mod session;
pub mod user_sim;

pub use complaint::{Complaint, ComplaintLedger, ComplaintMessage, PreferenceComplaint, StateId, StudyOption};
pub use domain::{cos_sim, AttributeId, PreferenceVector};
pub use error::{Error, Result};
pub use experiment::{CohortReport, ExperimentConfig, ReportFormat};
pub use fitness::{FitnessBreakdown, FitnessContext, FitnessParams};
pub use ga::{adapt_preferences, AdaptationReport, CrossoverRepair, GaConfig, Termination};
pub use map::{Edge, Greenery, MapGraph, Node, Surface};
pub use planner::{cost_graph_best_route, RouteOption, RouteSet};
pub use session::{Session, SessionSettings, SessionTrace};
pub use user_sim::{SimulatedUser, UserProfile};
