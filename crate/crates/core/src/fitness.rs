//! Complaint-encoded fitness `f(p) = λ₁·f₁ + λ₂·f₂ + λ₃·f₃`, maximised by the GA.
//!
//! * `f₁`: cosine similarity to the pre-update preference (higher is closer).
//! * `f₂`: `ρ₁` when the best route for `p` crosses a complained state.
//! * `f₃`: implicit constraint of the most recent complaint, in `[ρ₂, 0]`.

use serde::{Deserialize, Serialize};

use crate::complaint::{Complaint, ComplaintLedger};
use crate::domain::{cos_sim, PreferenceVector, SUM_TOLERANCE};
use crate::error::{Error, Result};
use crate::planner::RouteSet;

/// Equality tolerance for the ideal-weight complaint.
pub const W_OPT_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// Complaint-avoidance penalty; must be far below `rho2`.
    pub rho1: f64,
    /// Implicit-constraint penalty.
    pub rho2: f64,
    /// Width of the linear transition above the previous weight.
    pub phi: f64,
}

impl Default for FitnessParams {
    fn default() -> Self {
        FitnessParams {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 1.0,
            rho1: -100.0,
            rho2: -1.0,
            phi: 0.15,
        }
    }
}

impl FitnessParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.lambda1 > 0.0 && self.lambda2 > 0.0 && self.lambda3 > 0.0) {
            return bad("lambda1..3 must be positive");
        }
        if !(self.rho2 < 0.0 && self.rho1 <= 10.0 * self.rho2) {
            return bad("penalties must satisfy rho1 <= 10*rho2 < 0");
        }
        if !(self.phi > 0.0 && self.phi < 0.5) {
            return bad("phi must lie in (0, 0.5)");
        }
        Ok(())
    }

    /// Fitness lower bound `λ₂ρ₁ + λ₃ρ₂`.
    pub fn lower_bound(&self) -> f64 {
        self.lambda2 * self.rho1 + self.lambda3 * self.rho2
    }
}

/// Everything a fitness evaluation reads: the complained map, the ledger
/// and the preference before the update.
#[derive(Debug, Clone)]
pub struct FitnessContext<'a> {
    pub routes: &'a RouteSet,
    pub ledger: &'a ComplaintLedger,
    pub p_prev: &'a PreferenceVector,
    pub params: FitnessParams,
    /// Per route (enumeration order): does it cross a complained state?
    crosses_complaint: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub total: f64,
}

impl<'a> FitnessContext<'a> {
    pub fn new(
        routes: &'a RouteSet,
        ledger: &'a ComplaintLedger,
        p_prev: &'a PreferenceVector,
        params: FitnessParams,
    ) -> Self {
        let crosses_complaint = routes
            .routes()
            .iter()
            .map(|r| ledger.intersects(routes.map().name(), r))
            .collect();
        FitnessContext {
            routes,
            ledger,
            p_prev,
            params,
            crosses_complaint,
        }
    }

    /// Whether the route at `index` (0-based) crosses a complained state.
    pub fn route_crosses_complaint(&self, index: usize) -> bool {
        self.crosses_complaint[index]
    }

    pub fn f1(&self, p: &PreferenceVector) -> f64 {
        cos_sim(p, self.p_prev)
    }

    pub fn f2(&self, p: &PreferenceVector) -> f64 {
        if self.crosses_complaint[self.routes.best_index(p)] {
            self.params.rho1
        } else {
            0.0
        }
    }

    pub fn f3(&self, p: &PreferenceVector) -> f64 {
        let rho2 = self.params.rho2;
        match self.ledger.latest() {
            None | Some(Complaint::GeneralDiscontent { .. }) => 0.0,
            Some(Complaint::SpecificDiscontent { attr, .. }) => {
                specific_discontent_penalty(p.weight(*attr), self.p_prev.weight(*attr), self.params.phi, rho2)
            }
            Some(Complaint::GeneralPreferenceDiscontent { id1, id2 }) => {
                if p.weight(*id1) < p.weight(*id2) {
                    rho2
                } else {
                    0.0
                }
            }
            Some(Complaint::SpecificPreferenceDiscontent { id, w_opt }) => {
                if (p.weight(*id) - w_opt).abs() <= W_OPT_TOLERANCE {
                    0.0
                } else {
                    rho2
                }
            }
        }
    }

    pub fn breakdown(&self, p: &PreferenceVector) -> FitnessBreakdown {
        let (f1, f2, f3) = (self.f1(p), self.f2(p), self.f3(p));
        let FitnessParams {
            lambda1,
            lambda2,
            lambda3,
            ..
        } = self.params;
        FitnessBreakdown {
            f1,
            f2,
            f3,
            total: lambda1 * f1 + lambda2 * f2 + lambda3 * f3,
        }
    }

    pub fn fitness(&self, p: &PreferenceVector) -> f64 {
        self.breakdown(p).total
    }
}

/// Penalty ramp for a "too much X" complaint: full `rho2` while the weight
/// has not grown past `previous`, rising linearly to 0 over a band of width
/// `b = min(phi, 1 − previous)`.
pub fn specific_discontent_penalty(weight: f64, previous: f64, phi: f64, rho2: f64) -> f64 {
    let band = phi.min(1.0 - previous);
    if band <= 0.0 {
        return if 1.0 - weight <= SUM_TOLERANCE { 0.0 } else { rho2 };
    }
    if weight <= previous {
        rho2
    } else if weight <= previous + band {
        rho2 * ((previous - weight) / band + 1.0)
    } else {
        0.0
    }
}
