//! Synthetic passengers with hidden preferences.
//!
//! A simulated user complains when the recommended route falls short of its
//! own best route by more than `complaint_margin`, naming the attribute with
//! the dominant weighted deficit, and rates routes on a five-point scale by
//! their rank under its hidden preference.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::complaint::StudyOption;
use crate::domain::{AttributeId, PreferenceVector};
use crate::planner::{RouteOption, RouteSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserProfile {
    /// Uniform over the simplex.
    Uniform,
    /// Uniform, conditioned on the given attribute carrying the largest weight.
    AttributeBiased(AttributeId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedUser {
    pub true_prefs: PreferenceVector,
    pub complaint_margin: f64,
    pub dominance_margin: f64,
}

pub const DEFAULT_COMPLAINT_MARGIN: f64 = 0.03;
pub const DEFAULT_DOMINANCE_MARGIN: f64 = 0.15;

impl SimulatedUser {
    pub fn new(true_prefs: PreferenceVector) -> Self {
        SimulatedUser {
            true_prefs,
            complaint_margin: DEFAULT_COMPLAINT_MARGIN,
            dominance_margin: DEFAULT_DOMINANCE_MARGIN,
        }
    }

    pub fn with_margins(true_prefs: PreferenceVector, complaint_margin: f64, dominance_margin: f64) -> Self {
        SimulatedUser {
            true_prefs,
            complaint_margin,
            dominance_margin,
        }
    }

    /// Study option chosen after riding `recommended`.
    pub fn react(&self, routes: &RouteSet, recommended: &RouteOption) -> StudyOption {
        let p = &self.true_prefs;
        let ideal = routes.best_route(p);
        if recommended.utility(p) >= ideal.utility(p) - self.complaint_margin {
            return StudyOption::NoComplaint;
        }
        let mut deficits: Vec<(usize, f64)> = p
            .weights()
            .iter()
            .zip(ideal.utilities.as_slice().iter().zip(recommended.utilities.as_slice()))
            .map(|(w, (best, got))| w * (best - got))
            .enumerate()
            .collect();
        // descending by deficit, lowest attribute first on ties
        deficits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let (top_attr, top) = deficits[0];
        let runner_up = deficits.get(1).map_or(f64::NEG_INFINITY, |d| d.1);
        if top - runner_up >= self.dominance_margin * top {
            StudyOption::for_attribute(AttributeId::from_position(top_attr)).unwrap_or(StudyOption::DislikeRoad)
        } else {
            StudyOption::DislikeRoad
        }
    }

    /// Five-point rating from the route's rank among the map's routes.
    ///
    /// `q = 1 − (#routes with strictly higher utility) / (m − 1)` and the
    /// rating is `1 + round(4q)`, so the best route gets 5, the worst 1,
    /// and tied routes share the higher bin.
    pub fn rate_route(&self, routes: &RouteSet, route: &RouteOption) -> u8 {
        let p = &self.true_prefs;
        let u = route.utility(p);
        let m = routes.routes().len();
        if m <= 1 {
            return 5;
        }
        let better = routes.routes().iter().filter(|r| r.utility(p) > u).count();
        let q = 1.0 - better as f64 / (m - 1) as f64;
        (1.0 + (4.0 * q).round()).clamp(1.0, 5.0) as u8
    }
}

/// Draws a hidden preference vector for a profile.
///
/// `concentration` is the symmetric Dirichlet parameter: 1 is uniform on the
/// simplex, larger values cluster users around equal weights.
pub fn sample_true_preferences<R: Rng + ?Sized>(
    rng: &mut R,
    profile: UserProfile,
    concentration: f64,
    n: usize,
) -> PreferenceVector {
    let p = if concentration == 1.0 {
        PreferenceVector::random(n, rng)
    } else {
        let draw: Vec<f64> = (0..n)
            .map(|_| Gamma::new(concentration, 1.0).expect("positive concentration").sample(rng))
            .collect();
        PreferenceVector::normalized(&draw).unwrap_or_else(|_| PreferenceVector::study_baseline(n))
    };
    match profile {
        UserProfile::Uniform => p,
        UserProfile::AttributeBiased(attr) => {
            // swapping the maximum into place preserves uniformity on the conditioned region
            let mut w = p.weights().to_vec();
            let (max_pos, _) = w
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
            w.swap(max_pos, attr.position().min(n - 1));
            PreferenceVector::from_trusted(w)
        }
    }
}
