use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use prefloop_core::experiment::{self, ExperimentConfig, ReportFormat};
use prefloop_core::map::bundled;
use prefloop_core::planner::RouteSet;
use prefloop_core::{
    adapt_preferences, AdaptationReport, ComplaintLedger, Error, FitnessContext, FitnessParams, GaConfig, MapGraph,
    PreferenceVector, Result, StudyOption,
};
use serde::Serialize;

/// Parses `w1,w2,…` into a preference vector.
pub fn parse_prefs(text: &str) -> Result<PreferenceVector> {
    let weights = text
        .split(',')
        .map(|w| {
            w.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("`{w}` is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    PreferenceVector::new(weights)
}

/// Loads a bundled map by file or map name, falling back to the filesystem.
pub fn resolve_map(name: &str) -> Result<MapGraph> {
    match bundled::by_name(name) {
        Some(map) => Ok(map),
        None => MapGraph::from_file(name),
    }
}

/// Every `*.map.json` in `dir`, sorted by file name.
pub fn load_map_dir(dir: &Path) -> Result<Vec<MapGraph>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".map.json")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!("no *.map.json files in {}", dir.display())));
    }
    paths.iter().map(MapGraph::from_file).collect()
}

#[derive(Debug, Serialize)]
pub struct RankedRoute {
    pub rank: usize,
    pub route: usize,
    pub utility: f64,
    pub attributes: Vec<f64>,
    pub length: u32,
    pub edges: Vec<String>,
}

pub fn plan(map: MapGraph, prefs: &PreferenceVector) -> Result<Vec<RankedRoute>> {
    let set = RouteSet::new(map)?;
    Ok(set
        .rank_routes(prefs)
        .into_iter()
        .enumerate()
        .map(|(i, (r, u))| RankedRoute {
            rank: i + 1,
            route: r.id,
            utility: u,
            attributes: r.utilities.as_slice().to_vec(),
            length: r.length,
            edges: r.edges.clone(),
        })
        .collect())
}

pub fn render_plan(map_name: &str, prefs: &PreferenceVector, ranked: &[RankedRoute]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "map {map_name}, preference {prefs}");
    let _ = writeln!(out, "{:>4} {:>5} {:>8} {:>24} {:>6}  edges", "rank", "route", "U", "u (road, eff, aes)", "length");
    for r in ranked {
        let attrs: Vec<String> = r.attributes.iter().map(|u| format!("{u:.3}")).collect();
        let _ = writeln!(
            out,
            "{:>4} {:>5} {:>8.4} {:>24} {:>6}  {}",
            r.rank,
            r.route,
            r.utility,
            attrs.join(", "),
            r.length,
            r.edges.join(" ")
        );
    }
    out
}

#[derive(Debug, Serialize)]
pub struct AdaptOutcome {
    pub before: PreferenceVector,
    pub after: PreferenceVector,
    pub recommended_before: usize,
    pub recommended_after: usize,
    pub report: Option<AdaptationReport>,
}

/// One complaint on the route recommended for `prefs`, then adaptation.
pub fn adapt(
    map: MapGraph,
    prefs: &PreferenceVector,
    option: StudyOption,
    params: FitnessParams,
    ga: &GaConfig,
) -> Result<AdaptOutcome> {
    let set = RouteSet::new(map)?;
    let recommended = set.best_route(prefs).clone();
    let Some(complaint) = prefloop_core::complaint::option_to_complaint(option, set.map().name(), &recommended) else {
        return Ok(AdaptOutcome {
            before: prefs.clone(),
            after: prefs.clone(),
            recommended_before: recommended.id,
            recommended_after: recommended.id,
            report: None,
        });
    };
    let ledger = ComplaintLedger::new().record(complaint, &set);
    let ctx = FitnessContext::new(&set, &ledger, prefs, params);
    let (after, report) = adapt_preferences(&ctx, ga)?;
    Ok(AdaptOutcome {
        before: prefs.clone(),
        recommended_before: recommended.id,
        recommended_after: set.best_route(&after).id,
        after,
        report: Some(report),
    })
}

pub fn render_adapt(outcome: &AdaptOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "before: {} (route {})", outcome.before, outcome.recommended_before);
    let _ = writeln!(out, "after:  {} (route {})", outcome.after, outcome.recommended_after);
    if let Some(r) = &outcome.report {
        let _ = writeln!(
            out,
            "fitness {:.6} (f1 {:.6}, f2 {}, f3 {:.6}) after {} generations ({:?})",
            r.breakdown.total, r.breakdown.f1, r.breakdown.f2, r.breakdown.f3, r.generations, r.termination
        );
    } else {
        let _ = writeln!(out, "no complaint, preference unchanged");
    }
    out
}

/// Runs the configured cohort and writes `report.json` and `report.csv`.
pub fn simulate(config_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let cfg = ExperimentConfig::from_file(config_path)?;
    let report = experiment::run_configured(&cfg, config_path.parent())?;
    fs::create_dir_all(out_dir)?;
    let json = out_dir.join("report.json");
    let csv = out_dir.join("report.csv");
    experiment::export_report(&report, ReportFormat::Json, &json)?;
    experiment::export_report(&report, ReportFormat::Csv, &csv)?;
    Ok(vec![json, csv])
}
