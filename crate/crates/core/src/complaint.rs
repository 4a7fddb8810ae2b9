//! Complaint categories, the study's complaint options, and the ledger of
//! complained states.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{AttributeId, PreferenceVector};
use crate::error::{Error, Result};
use crate::planner::{RouteOption, RouteSet};

/// Edge utilities below this mark an edge as an offender.
pub const OFFENDER_THRESHOLD: f64 = 0.5;

/// The five choices offered to a passenger after each ride.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyOption {
    DislikeRoad,
    ExcessiveNoise,
    ExcessiveBumpiness,
    ExcessiveDistance,
    #[serde(rename = "none", alias = "no_complaint")]
    NoComplaint,
}

impl StudyOption {
    pub const ALL: [StudyOption; 5] = [
        StudyOption::DislikeRoad,
        StudyOption::ExcessiveNoise,
        StudyOption::ExcessiveBumpiness,
        StudyOption::ExcessiveDistance,
        StudyOption::NoComplaint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StudyOption::DislikeRoad => "dislike_road",
            StudyOption::ExcessiveNoise => "excessive_noise",
            StudyOption::ExcessiveBumpiness => "excessive_bumpiness",
            StudyOption::ExcessiveDistance => "excessive_distance",
            StudyOption::NoComplaint => "none",
        }
    }

    /// Option naming a specific attribute.
    pub fn for_attribute(attr: AttributeId) -> Option<StudyOption> {
        match attr {
            AttributeId::ROAD_CONDITION => Some(StudyOption::ExcessiveBumpiness),
            AttributeId::EFFICIENCY => Some(StudyOption::ExcessiveDistance),
            AttributeId::AESTHETIC_APPEAL => Some(StudyOption::ExcessiveNoise),
            _ => None,
        }
    }

    pub fn is_complaint(self) -> bool {
        self != StudyOption::NoComplaint
    }
}

impl fmt::Display for StudyOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StudyOption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dislike_road" => Ok(StudyOption::DislikeRoad),
            "excessive_noise" => Ok(StudyOption::ExcessiveNoise),
            "excessive_bumpiness" => Ok(StudyOption::ExcessiveBumpiness),
            "excessive_distance" => Ok(StudyOption::ExcessiveDistance),
            "none" | "no_complaint" => Ok(StudyOption::NoComplaint),
            other => Err(Error::UnknownOption(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "category", rename_all = "snake_case")]
pub enum Complaint {
    /// "I don't like this road."
    GeneralDiscontent { map: String, route: RouteOption },
    /// "Too bumpy", "too noisy", "too far".
    SpecificDiscontent {
        map: String,
        route: RouteOption,
        attr: AttributeId,
    },
    /// Attribute `id1` should outrank `id2`.
    GeneralPreferenceDiscontent { id1: AttributeId, id2: AttributeId },
    /// Attribute `id` should weigh `w_opt`.
    SpecificPreferenceDiscontent { id: AttributeId, w_opt: f64 },
}

impl Complaint {
    pub fn general_preference(id1: AttributeId, id2: AttributeId) -> Result<Self> {
        if id1 == id2 {
            return Err(Error::InvalidComplaint("id1 and id2 must differ".into()));
        }
        Ok(Complaint::GeneralPreferenceDiscontent { id1, id2 })
    }

    pub fn specific_preference(id: AttributeId, w_opt: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w_opt) {
            return Err(Error::InvalidComplaint(format!("w_opt {w_opt} outside [0, 1]")));
        }
        Ok(Complaint::SpecificPreferenceDiscontent { id, w_opt })
    }

    /// Checks the attribute ids against the preference dimension.
    pub fn validate(&self, n: usize) -> Result<()> {
        let check = |a: AttributeId| AttributeId::new(a.index(), n).map(|_| ());
        match self {
            Complaint::GeneralDiscontent { .. } => Ok(()),
            Complaint::SpecificDiscontent { attr, .. } => check(*attr),
            Complaint::GeneralPreferenceDiscontent { id1, id2 } => {
                check(*id1)?;
                check(*id2)?;
                if id1 == id2 {
                    return Err(Error::InvalidComplaint("id1 and id2 must differ".into()));
                }
                Ok(())
            }
            Complaint::SpecificPreferenceDiscontent { id, w_opt } => {
                check(*id)?;
                if !(0.0..=1.0).contains(w_opt) {
                    return Err(Error::InvalidComplaint(format!("w_opt {w_opt} outside [0, 1]")));
                }
                Ok(())
            }
        }
    }
}

/// Maps a study option on `route` to a complaint; `none` maps to `None`.
pub fn option_to_complaint(option: StudyOption, map: &str, route: &RouteOption) -> Option<Complaint> {
    let specific = |attr| Complaint::SpecificDiscontent {
        map: map.to_string(),
        route: route.clone(),
        attr,
    };
    match option {
        StudyOption::DislikeRoad => Some(Complaint::GeneralDiscontent {
            map: map.to_string(),
            route: route.clone(),
        }),
        StudyOption::ExcessiveBumpiness => Some(specific(AttributeId::ROAD_CONDITION)),
        StudyOption::ExcessiveDistance => Some(specific(AttributeId::EFFICIENCY)),
        StudyOption::ExcessiveNoise => Some(specific(AttributeId::AESTHETIC_APPEAL)),
        StudyOption::NoComplaint => None,
    }
}

/// A complained-about map element: an edge of a named map.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId {
    pub map: String,
    pub edge: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplaintLedger {
    complaints: Vec<Complaint>,
    complained_states: BTreeSet<StateId>,
}

impl ComplaintLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn complaints(&self) -> &[Complaint] {
        &self.complaints
    }

    pub fn complained_states(&self) -> &BTreeSet<StateId> {
        &self.complained_states
    }

    pub fn latest(&self) -> Option<&Complaint> {
        self.complaints.last()
    }

    pub fn is_empty(&self) -> bool {
        self.complaints.is_empty()
    }

    /// Returns a new ledger with `complaint` appended and its states added.
    ///
    /// `routes` must be the route set of the map the complaint refers to;
    /// it is ignored for preference complaints.
    pub fn record(&self, complaint: Complaint, routes: &RouteSet) -> ComplaintLedger {
        let mut next = self.clone();
        next.complained_states.extend(extract_states(&complaint, routes));
        next.complaints.push(complaint);
        next
    }

    /// True if any edge of `route` on `map` is a complained state.
    pub fn intersects(&self, map: &str, route: &RouteOption) -> bool {
        if self.complained_states.is_empty() {
            return false;
        }
        route.edges.iter().any(|edge| {
            self.complained_states.contains(&StateId {
                map: map.to_string(),
                edge: edge.clone(),
            })
        })
    }
}

/// Edges on every start→goal route of the map.
fn universal_edges(routes: &RouteSet) -> BTreeSet<&str> {
    let mut iter = routes.routes().iter();
    let Some(first) = iter.next() else {
        return BTreeSet::new();
    };
    let mut common: BTreeSet<&str> = first.edges.iter().map(String::as_str).collect();
    for r in iter {
        let edges: BTreeSet<&str> = r.edges.iter().map(String::as_str).collect();
        common.retain(|e| edges.contains(e));
    }
    common
}

/// Complained states contributed by one complaint.
///
/// Specific discontent marks the route's edges whose utility for the named
/// attribute is below [`OFFENDER_THRESHOLD`]; efficiency has no per-edge
/// utility, so a distance complaint marks the whole route when its route-level
/// efficiency is below the threshold. General discontent marks the whole
/// route. Edges shared by every route are never marked.
pub fn extract_states(complaint: &Complaint, routes: &RouteSet) -> Vec<StateId> {
    let (map, route, attr) = match complaint {
        Complaint::GeneralDiscontent { map, route } => (map, route, None),
        Complaint::SpecificDiscontent { map, route, attr } => (map, route, Some(*attr)),
        _ => return Vec::new(),
    };
    let shared = universal_edges(routes);
    let graph = routes.map();
    let whole_route = match attr {
        None => true,
        Some(AttributeId::EFFICIENCY) => route.utilities.get(AttributeId::EFFICIENCY) < OFFENDER_THRESHOLD,
        Some(_) => false,
    };
    route
        .edges
        .iter()
        .filter(|e| !shared.contains(e.as_str()))
        .filter(|e| {
            whole_route
                || match (attr, graph.edge_position(e)) {
                    (Some(a), Some(pos)) if a != AttributeId::EFFICIENCY => graph.edges()[pos]
                        .utility(a)
                        .is_ok_and(|u| u < OFFENDER_THRESHOLD),
                    _ => false,
                }
        })
        .map(|e| StateId {
            map: map.clone(),
            edge: e.clone(),
        })
        .collect()
}

/// Complaint body accepted by the session API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplaintMessage {
    Study { option: StudyOption },
    Preference(PreferenceComplaint),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PreferenceComplaint {
    PreferenceOrder { id1: usize, id2: usize },
    PreferenceValue { id: usize, w_opt: f64 },
}

impl ComplaintMessage {
    /// Resolves the message against the current recommendation.
    pub fn to_complaint(
        &self,
        map: &str,
        route: &RouteOption,
        current: &PreferenceVector,
    ) -> Result<Option<Complaint>> {
        let n = current.len();
        match self {
            ComplaintMessage::Study { option } => Ok(option_to_complaint(*option, map, route)),
            ComplaintMessage::Preference(PreferenceComplaint::PreferenceOrder { id1, id2 }) => {
                Complaint::general_preference(AttributeId::new(*id1, n)?, AttributeId::new(*id2, n)?).map(Some)
            }
            ComplaintMessage::Preference(PreferenceComplaint::PreferenceValue { id, w_opt }) => {
                Complaint::specific_preference(AttributeId::new(*id, n)?, *w_opt).map(Some)
            }
        }
    }

    /// Study option recorded in traces; preference complaints have none.
    pub fn study_option(&self) -> Option<StudyOption> {
        match self {
            ComplaintMessage::Study { option } => Some(*option),
            ComplaintMessage::Preference(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::bundled;

    fn scenario() -> RouteSet {
        RouteSet::new(bundled::by_name("scenario1.map.json").unwrap()).unwrap()
    }

    #[test]
    fn options_map_to_attributes() {
        let set = scenario();
        let r = &set.routes()[0];
        let attr_of = |o| match option_to_complaint(o, "m", r) {
            Some(Complaint::SpecificDiscontent { attr, .. }) => Some(attr),
            _ => None,
        };
        assert_eq!(attr_of(StudyOption::ExcessiveNoise), Some(AttributeId::AESTHETIC_APPEAL));
        assert_eq!(attr_of(StudyOption::ExcessiveBumpiness), Some(AttributeId::ROAD_CONDITION));
        assert_eq!(attr_of(StudyOption::ExcessiveDistance), Some(AttributeId::EFFICIENCY));
        assert!(option_to_complaint(StudyOption::NoComplaint, "m", r).is_none());
        assert!(matches!(
            option_to_complaint(StudyOption::DislikeRoad, "m", r),
            Some(Complaint::GeneralDiscontent { .. })
        ));
    }

    #[test]
    fn option_parsing() {
        for o in StudyOption::ALL {
            assert_eq!(o.as_str().parse::<StudyOption>().unwrap(), o);
        }
        assert_eq!("no_complaint".parse::<StudyOption>().unwrap(), StudyOption::NoComplaint);
        assert!(matches!("too_hot".parse::<StudyOption>(), Err(Error::UnknownOption(_))));
        let m: ComplaintMessage = serde_json::from_str(r#"{"option":"excessive_noise"}"#).unwrap();
        assert_eq!(m.study_option(), Some(StudyOption::ExcessiveNoise));
        let m: ComplaintMessage = serde_json::from_str(r#"{"kind":"preference_order","id1":1,"id2":2}"#).unwrap();
        assert!(matches!(m, ComplaintMessage::Preference(PreferenceComplaint::PreferenceOrder { id1: 1, id2: 2 })));
        let m: ComplaintMessage = serde_json::from_str(r#"{"kind":"preference_value","id":1,"w_opt":0.8}"#).unwrap();
        assert!(matches!(m, ComplaintMessage::Preference(PreferenceComplaint::PreferenceValue { id: 1, .. })));
        assert!(serde_json::from_str::<ComplaintMessage>(r#"{"option":"bogus"}"#).is_err());
    }

    #[test]
    fn preference_complaints_validate() {
        assert!(Complaint::general_preference(AttributeId::ROAD_CONDITION, AttributeId::ROAD_CONDITION).is_err());
        assert!(Complaint::specific_preference(AttributeId::ROAD_CONDITION, 1.2).is_err());
        assert!(Complaint::specific_preference(AttributeId::ROAD_CONDITION, 0.8).is_ok());
    }

    #[test]
    fn bumpiness_marks_rough_edges() {
        let set = scenario();
        let route = &set.routes()[0];
        let rough: Vec<&String> = route
            .edges
            .iter()
            .filter(|e| {
                let pos = set.map().edge_position(e).unwrap();
                set.map().edges()[pos].surface == crate::map::Surface::RoughStone
            })
            .collect();
        assert_eq!(rough.len(), 2);
        let c = option_to_complaint(StudyOption::ExcessiveBumpiness, set.map().name(), route).unwrap();
        let ledger = ComplaintLedger::new().record(c.clone(), &set);
        let marked: Vec<&String> = ledger.complained_states().iter().map(|s| &s.edge).collect();
        assert_eq!(marked, rough);
        // idempotent on the state set
        let again = ledger.record(c, &set);
        assert_eq!(again.complained_states(), ledger.complained_states());
        assert_eq!(again.complaints().len(), 2);
    }

    #[test]
    fn noise_on_quiet_route_marks_nothing() {
        let set = scenario();
        let scenic = &set.routes()[3];
        let c = option_to_complaint(StudyOption::ExcessiveNoise, set.map().name(), scenic).unwrap();
        assert!(extract_states(&c, &set).is_empty());
    }

    #[test]
    fn preference_complaints_add_no_states() {
        let set = scenario();
        let c = Complaint::general_preference(AttributeId::ROAD_CONDITION, AttributeId::EFFICIENCY).unwrap();
        let ledger = ComplaintLedger::new().record(c, &set);
        assert!(ledger.complained_states().is_empty());
        assert_eq!(ledger.complaints().len(), 1);
    }

    #[test]
    fn general_discontent_skips_universal_edges() {
        let set = RouteSet::new(bundled::by_name("scenario2.map.json").unwrap()).unwrap();
        let shared = universal_edges(&set);
        assert!(!shared.is_empty());
        let route = &set.routes()[1];
        let c = option_to_complaint(StudyOption::DislikeRoad, set.map().name(), route).unwrap();
        let ledger = ComplaintLedger::new().record(c, &set);
        assert_eq!(ledger.complained_states().len(), route.edges.len() - shared.len());
        assert!(ledger.intersects(set.map().name(), route));
        assert!(!ledger.intersects("other-map", route));
        for s in ledger.complained_states() {
            assert!(route.edges.contains(&s.edge));
        }
    }
}
