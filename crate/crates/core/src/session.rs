//! Per-passenger recommend → rate → complain → adapt state machine.
//!
//! A session walks an ordered list of maps. On each map it recommends the
//! best route for the current preference, accepts any number of ratings,
//! and then exactly one complaint message (possibly `none`), which closes the
//! map, adapts the preference when there is a complaint, and moves on.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::complaint::{ComplaintLedger, ComplaintMessage, StudyOption};
use crate::domain::{cos_sim, PreferenceVector};
use crate::error::{Error, Result};
use crate::experiment::stats::normalize_scores;
use crate::fitness::{FitnessContext, FitnessParams};
use crate::ga::{adapt_preferences, AdaptationReport, GaConfig};
use crate::map::MapGraph;
use crate::planner::{RouteOption, RouteSet};
use crate::rng::derive_seed;

/// Outcome of one map of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub map: String,
    pub recommended_route: usize,
    pub complaint: ComplaintMessage,
    /// Likert rating per route, in enumeration order.
    pub ratings: Vec<Option<u8>>,
    /// 1 + number of routes rated strictly higher than the recommendation.
    pub recommended_rank: Option<usize>,
    /// Min-max normalised rating of the recommendation among the map's ratings.
    pub recommended_score_norm: Option<f64>,
    pub adaptation: Option<AdaptationReport>,
}

impl MapRecord {
    pub fn complaint_label(&self) -> &'static str {
        match &self.complaint {
            ComplaintMessage::Study { option } => option.as_str(),
            ComplaintMessage::Preference(crate::complaint::PreferenceComplaint::PreferenceOrder { .. }) => {
                "preference_order"
            }
            ComplaintMessage::Preference(crate::complaint::PreferenceComplaint::PreferenceValue { .. }) => {
                "preference_value"
            }
        }
    }

    pub fn is_complaint(&self) -> bool {
        self.complaint.study_option() != Some(StudyOption::NoComplaint)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub records: Vec<MapRecord>,
    /// Initial preference followed by one checkpoint per completed map.
    pub checkpoints: Vec<PreferenceVector>,
    /// Preference the checkpoints are compared against, when known.
    pub reference: Option<PreferenceVector>,
    /// `cos_sim(checkpoint, reference)` per checkpoint.
    pub similarities: Vec<f64>,
}

impl SessionTrace {
    pub fn new(initial: PreferenceVector) -> Self {
        SessionTrace {
            records: Vec::new(),
            checkpoints: vec![initial],
            reference: None,
            similarities: Vec::new(),
        }
    }

    pub fn set_reference(&mut self, reference: PreferenceVector) {
        self.similarities = self.checkpoints.iter().map(|p| cos_sim(p, &reference)).collect();
        self.reference = Some(reference);
    }

    pub fn adaptations(&self) -> usize {
        self.records.iter().filter(|r| r.adaptation.is_some()).count()
    }
}

/// Tunables of a session.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionSettings {
    pub initial: Option<PreferenceVector>,
    pub fitness: FitnessParams,
    pub ga: GaConfig,
    /// Base seed; the GA run after map `k` uses `derive_seed(seed, k)`.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub map_index: usize,
    pub map: String,
    pub route: RouteOption,
    pub utility: f64,
    pub preference: PreferenceVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub next: Option<Recommendation>,
    pub checkpoint: PreferenceVector,
    pub adaptation: Option<AdaptationReport>,
    pub finished: bool,
}

/// A route of the current map, with what a renderer needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteView {
    pub route: RouteOption,
    pub utility: f64,
    pub recommended: bool,
    pub rating: Option<u8>,
    /// `[x, y]` of each node along the route.
    pub polyline: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoutesView {
    pub map_index: usize,
    pub map: MapGraph,
    pub routes: Vec<RouteView>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionState {
    pub id: String,
    pub maps: Vec<String>,
    pub cursor: usize,
    pub finished: bool,
    pub preference: PreferenceVector,
    pub ledger: ComplaintLedger,
    pub trace: SessionTrace,
    pub pending_ratings: Vec<Option<u8>>,
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    maps: Vec<Arc<RouteSet>>,
    settings: SessionSettings,
    cursor: usize,
    current: PreferenceVector,
    ledger: ComplaintLedger,
    trace: SessionTrace,
    pending_ratings: Vec<Option<u8>>,
}

impl Session {
    pub fn new(id: impl Into<String>, maps: Vec<Arc<RouteSet>>, settings: SessionSettings) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidConfig("a session needs at least one map".into()));
        }
        settings.fitness.validate()?;
        settings.ga.validate()?;
        let n = maps[0].map().attribute_count();
        let current = settings
            .initial
            .clone()
            .unwrap_or_else(|| PreferenceVector::study_baseline(n));
        if current.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: current.len(),
            });
        }
        let pending_ratings = vec![None; maps[0].routes().len()];
        Ok(Session {
            id: id.into(),
            trace: SessionTrace::new(current.clone()),
            maps,
            settings,
            cursor: 0,
            current,
            ledger: ComplaintLedger::new(),
            pending_ratings,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_finished(&self) -> bool {
        self.cursor >= self.maps.len()
    }

    pub fn preference(&self) -> &PreferenceVector {
        &self.current
    }

    pub fn trace(&self) -> &SessionTrace {
        &self.trace
    }

    pub fn into_trace(self) -> SessionTrace {
        self.trace
    }

    pub fn ledger(&self) -> &ComplaintLedger {
        &self.ledger
    }

    pub fn current_routes(&self) -> Option<&RouteSet> {
        self.maps.get(self.cursor).map(|m| m.as_ref())
    }

    pub fn recommendation(&self) -> Option<Recommendation> {
        let routes = self.current_routes()?;
        let route = routes.best_route(&self.current).clone();
        Some(Recommendation {
            map_index: self.cursor,
            map: routes.map().name().to_string(),
            utility: route.utility(&self.current),
            route,
            preference: self.current.clone(),
        })
    }

    pub fn routes_view(&self) -> Result<RoutesView> {
        let routes = self
            .current_routes()
            .ok_or_else(|| Error::OutOfOrderMessage("session has finished".into()))?;
        let map = routes.map();
        let best = routes.best_index(&self.current);
        let views = routes
            .routes()
            .iter()
            .enumerate()
            .map(|(i, r)| RouteView {
                utility: r.utility(&self.current),
                recommended: i == best,
                rating: self.pending_ratings[i],
                polyline: r
                    .nodes
                    .iter()
                    .filter_map(|n| map.node_position(n))
                    .map(|n| [map.nodes()[n].x, map.nodes()[n].y])
                    .collect(),
                route: r.clone(),
            })
            .collect();
        Ok(RoutesView {
            map_index: self.cursor,
            map: map.clone(),
            routes: views,
        })
    }

    /// Records a rating for a route of the current map; later ratings overwrite.
    pub fn rate(&mut self, route_id: usize, likert: u8) -> Result<()> {
        let routes = self
            .current_routes()
            .ok_or_else(|| Error::OutOfOrderMessage("rating after the session has finished".into()))?;
        if !(1..=5).contains(&likert) {
            return Err(Error::InvalidConfig(format!("likert rating {likert} outside 1..=5")));
        }
        if routes.route(route_id).is_none() {
            return Err(Error::InvalidRoute(format!("no route {route_id} on the current map")));
        }
        self.pending_ratings[route_id - 1] = Some(likert);
        Ok(())
    }

    /// Closes the current map with a complaint message and advances.
    pub fn complain(&mut self, message: &ComplaintMessage) -> Result<StepOutcome> {
        let routes = Arc::clone(
            self.maps
                .get(self.cursor)
                .ok_or_else(|| Error::OutOfOrderMessage("complaint after the session has finished".into()))?,
        );
        let recommended = routes.best_route(&self.current).clone();
        let complaint = message.to_complaint(routes.map().name(), &recommended, &self.current)?;

        let (rank, score) = rate_summary(&self.pending_ratings, recommended.id - 1);
        let mut adaptation = None;
        if let Some(complaint) = complaint {
            let ledger = self.ledger.record(complaint, &routes);
            let ctx = FitnessContext::new(&routes, &ledger, &self.current, self.settings.fitness);
            let cfg = self.settings.ga.with_seed(derive_seed(self.settings.seed, self.cursor as u64));
            let (next, report) = adapt_preferences(&ctx, &cfg)?;
            self.ledger = ledger;
            self.current = next;
            adaptation = Some(report);
        }

        self.trace.records.push(MapRecord {
            map: routes.map().name().to_string(),
            recommended_route: recommended.id,
            complaint: message.clone(),
            ratings: std::mem::take(&mut self.pending_ratings),
            recommended_rank: rank,
            recommended_score_norm: score,
            adaptation: adaptation.clone(),
        });
        self.trace.checkpoints.push(self.current.clone());
        self.cursor += 1;
        if let Some(next_map) = self.maps.get(self.cursor) {
            self.pending_ratings = vec![None; next_map.routes().len()];
        }
        Ok(StepOutcome {
            next: self.recommendation(),
            checkpoint: self.current.clone(),
            adaptation,
            finished: self.is_finished(),
        })
    }

    pub fn state(&self) -> SessionState {
        SessionState {
            id: self.id.clone(),
            maps: self.maps.iter().map(|m| m.map().name().to_string()).collect(),
            cursor: self.cursor,
            finished: self.is_finished(),
            preference: self.current.clone(),
            ledger: self.ledger.clone(),
            trace: self.trace.clone(),
            pending_ratings: self.pending_ratings.clone(),
        }
    }
}

/// Rank and normalised score of the route at `recommended` from the ratings.
fn rate_summary(ratings: &[Option<u8>], recommended: usize) -> (Option<usize>, Option<f64>) {
    let Some(own) = ratings.get(recommended).copied().flatten() else {
        return (None, None);
    };
    let rated: Vec<(usize, u8)> = ratings
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|v| (i, v)))
        .collect();
    let rank = 1 + rated.iter().filter(|(_, v)| *v > own).count();
    let scores: Vec<f64> = rated.iter().map(|(_, v)| *v as f64).collect();
    let normalized = normalize_scores(&scores).ok();
    let position = rated.iter().position(|(i, _)| *i == recommended);
    let score = normalized.zip(position).map(|(n, p)| n[p]);
    (Some(rank), score)
}
