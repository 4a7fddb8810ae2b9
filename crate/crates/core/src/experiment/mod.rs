//! Simulated study: three-map sessions over a cohort of synthetic users,
//! with similarity, complaint, rank and satisfaction metrics.

pub mod stats;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complaint::ComplaintMessage;
use crate::domain::{cos_sim, AttributeId, PreferenceVector};
use crate::error::{Error, Result};
use crate::fitness::FitnessParams;
use crate::ga::GaConfig;
use crate::map::{bundled, MapGraph};
use crate::planner::RouteSet;
use crate::rng::derive_seed;
use crate::session::{Session, SessionSettings, SessionTrace};
use crate::user_sim::{
    sample_true_preferences, SimulatedUser, UserProfile, DEFAULT_COMPLAINT_MARGIN, DEFAULT_DOMINANCE_MARGIN,
};

use stats::Quartiles;

/// How hidden preferences are drawn across the cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CohortProfile {
    Uniform,
    AttributeBiased(AttributeId),
    /// User `i` is biased towards attribute `1 + i mod n`.
    RotatingBias,
}

impl CohortProfile {
    pub fn for_user(self, index: usize, n: usize) -> UserProfile {
        match self {
            CohortProfile::Uniform => UserProfile::Uniform,
            CohortProfile::AttributeBiased(a) => UserProfile::AttributeBiased(a),
            CohortProfile::RotatingBias => UserProfile::AttributeBiased(AttributeId::from_position(index % n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserConfig {
    pub profile: CohortProfile,
    /// Symmetric Dirichlet parameter of the hidden preferences.
    pub concentration: f64,
    pub complaint_margin: f64,
    pub dominance_margin: f64,
}

impl Default for UserConfig {
    fn default() -> Self {
        UserConfig {
            profile: CohortProfile::Uniform,
            concentration: 1.0,
            complaint_margin: DEFAULT_COMPLAINT_MARGIN,
            dominance_margin: DEFAULT_DOMINANCE_MARGIN,
        }
    }
}

/// Experiment configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Bundled map names or paths to map files, in session order.
    pub maps: Vec<String>,
    pub cohort_size: usize,
    pub user: UserConfig,
    pub fitness: FitnessParams,
    pub ga: GaConfig,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            maps: bundled::FILES.iter().map(|(name, _)| name.to_string()).collect(),
            cohort_size: 20,
            user: UserConfig::default(),
            fitness: FitnessParams::default(),
            ga: GaConfig::default(),
            seed: 2024,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(document: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(document)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.maps.is_empty() {
            return Err(Error::InvalidConfig("maps must not be empty".into()));
        }
        if self.cohort_size == 0 {
            return Err(Error::InvalidConfig("cohort_size must be at least 1".into()));
        }
        let UserConfig {
            complaint_margin,
            dominance_margin,
            ..
        } = self.user;
        if !(self.user.concentration > 0.0 && self.user.concentration.is_finite()) {
            return Err(Error::InvalidConfig("user concentration must be positive".into()));
        }
        if !(complaint_margin >= 0.0 && (0.0..=1.0).contains(&dominance_margin)) {
            return Err(Error::InvalidConfig("user margins out of range".into()));
        }
        self.fitness.validate()?;
        self.ga.validate()
    }

    /// Resolves `maps` against the bundled corpus, then the filesystem
    /// (relative paths are taken from `base`).
    pub fn load_maps(&self, base: Option<&Path>) -> Result<Vec<MapGraph>> {
        self.maps
            .iter()
            .map(|name| match bundled::by_name(name) {
                Some(map) => Ok(map),
                None => {
                    let path = Path::new(name);
                    match base {
                        Some(dir) if path.is_relative() => MapGraph::from_file(dir.join(path)),
                        _ => MapGraph::from_file(path),
                    }
                }
            })
            .collect()
    }

    fn session_settings(&self, seed: u64) -> SessionSettings {
        SessionSettings {
            initial: None,
            fitness: self.fitness,
            ga: self.ga.clone(),
            seed,
        }
    }
}

/// Enumerates the routes of each map once.
pub fn prepare_maps(maps: Vec<MapGraph>) -> Result<Vec<Arc<RouteSet>>> {
    maps.into_iter().map(|m| RouteSet::new(m).map(Arc::new)).collect()
}

/// Runs one simulated participant through the maps in order.
pub fn run_session(maps: &[MapGraph], user: &SimulatedUser, cfg: &ExperimentConfig) -> Result<SessionTrace> {
    let sets = prepare_maps(maps.to_vec())?;
    run_session_on(&sets, user, cfg, cfg.seed)
}

/// [`run_session`] over prepared route sets with an explicit GA seed base.
pub fn run_session_on(
    maps: &[Arc<RouteSet>],
    user: &SimulatedUser,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<SessionTrace> {
    let mut session = Session::new("sim", maps.to_vec(), cfg.session_settings(seed))?;
    while let Some(rec) = session.recommendation() {
        let routes = session.current_routes().expect("recommendation implies a current map");
        let option = user.react(routes, &rec.route);
        let ratings: Vec<(usize, u8)> = routes
            .routes()
            .iter()
            .map(|r| (r.id, user.rate_route(routes, r)))
            .collect();
        for (id, likert) in ratings {
            session.rate(id, likert)?;
        }
        session.complain(&ComplaintMessage::Study { option })?;
    }
    let mut trace = session.into_trace();
    trace.set_reference(user.true_prefs.clone());
    Ok(trace)
}

/// `cos_sim(pᵏ, reference)` for every checkpoint.
pub fn similarity_trajectory(trace: &SessionTrace, reference: &PreferenceVector) -> Vec<f64> {
    trace.checkpoints.iter().map(|p| cos_sim(p, reference)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSession {
    pub user_id: usize,
    pub seed: u64,
    pub true_prefs: PreferenceVector,
    pub trace: SessionTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub map: String,
    pub complaints: usize,
    pub complaint_options: BTreeMap<String, usize>,
    /// `rank_histogram[r - 1]` users ranked the recommended route `r`-th.
    pub rank_histogram: Vec<usize>,
    pub first_rank_share: f64,
    pub satisfaction: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub seed: u64,
    pub config: ExperimentConfig,
    /// One entry per checkpoint `p⁰..pᵏ`.
    pub similarity: Vec<Quartiles>,
    pub maps: Vec<MapSummary>,
    pub sessions: Vec<UserSession>,
}

impl CohortReport {
    pub fn complaint_counts(&self) -> Vec<usize> {
        self.maps.iter().map(|m| m.complaints).collect()
    }

    pub fn median_similarity(&self) -> Vec<f64> {
        self.similarity.iter().map(|q| q.median).collect()
    }

    pub fn median_satisfaction(&self) -> Vec<Option<f64>> {
        self.maps.iter().map(|m| m.satisfaction.map(|q| q.median)).collect()
    }
}

/// Runs `n_users` independent simulated sessions and aggregates them.
pub fn run_cohort(n_users: usize, maps: &[MapGraph], cfg: &ExperimentConfig, seed: u64) -> Result<CohortReport> {
    if n_users == 0 {
        return Err(Error::InvalidConfig("n_users must be at least 1".into()));
    }
    if maps.is_empty() {
        return Err(Error::InvalidConfig("at least one map is required".into()));
    }
    cfg.validate()?;
    let sets = prepare_maps(maps.to_vec())?;
    let n = sets[0].map().attribute_count();
    let sessions = (0..n_users)
        .map(|user_id| {
            let user_seed = derive_seed(seed, user_id as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(user_seed);
            let true_prefs = sample_true_preferences(&mut rng, cfg.user.profile.for_user(user_id, n), cfg.user.concentration, n);
            let user = SimulatedUser::with_margins(
                true_prefs.clone(),
                cfg.user.complaint_margin,
                cfg.user.dominance_margin,
            );
            let trace = run_session_on(&sets, &user, cfg, user_seed)?;
            Ok(UserSession {
                user_id,
                seed: user_seed,
                true_prefs,
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut config = cfg.clone();
    config.cohort_size = n_users;
    config.seed = seed;
    Ok(aggregate(sessions, &sets, config))
}

/// Runs the cohort described entirely by the configuration.
pub fn run_configured(cfg: &ExperimentConfig, base: Option<&Path>) -> Result<CohortReport> {
    cfg.validate()?;
    let maps = cfg.load_maps(base)?;
    run_cohort(cfg.cohort_size, &maps, cfg, cfg.seed)
}

/// Summarises finished sessions over the maps they were run on.
pub fn aggregate(sessions: Vec<UserSession>, sets: &[Arc<RouteSet>], config: ExperimentConfig) -> CohortReport {
    let checkpoints = sets.len() + 1;
    let similarity = (0..checkpoints)
        .map(|k| {
            let values: Vec<f64> = sessions.iter().map(|s| s.trace.similarities[k]).collect();
            Quartiles::of(&values).expect("cohort is non-empty")
        })
        .collect();
    let maps = sets
        .iter()
        .enumerate()
        .map(|(k, set)| {
            let records: Vec<_> = sessions.iter().map(|s| &s.trace.records[k]).collect();
            let mut complaint_options = BTreeMap::new();
            for r in &records {
                *complaint_options.entry(r.complaint_label().to_string()).or_insert(0) += 1;
            }
            let mut rank_histogram = vec![0; set.routes().len()];
            for rank in records.iter().filter_map(|r| r.recommended_rank) {
                rank_histogram[rank - 1] += 1;
            }
            let satisfaction: Vec<f64> = records.iter().filter_map(|r| r.recommended_score_norm).collect();
            MapSummary {
                map: set.map().name().to_string(),
                complaints: records.iter().filter(|r| r.is_complaint()).count(),
                complaint_options,
                first_rank_share: rank_histogram[0] as f64 / records.len() as f64,
                rank_histogram,
                satisfaction: Quartiles::of(&satisfaction),
            }
        })
        .collect();
    CohortReport {
        seed: config.seed,
        config,
        similarity,
        maps,
        sessions,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidConfig(format!("unknown report format {other:?}"))),
        }
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "user_id",
    "map_index",
    "complaint_option",
    "recommended_rank",
    "recommended_score_norm",
    "checkpoint_index",
    "cos_sim",
];

pub fn report_to_json(report: &CohortReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// One row per (user, checkpoint); checkpoint `k ≥ 1` follows map `k`
/// and checkpoint 0 leaves the map columns blank.
pub fn report_to_csv(report: &CohortReport) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    writer.write_record(CSV_HEADER).map_err(csv_err)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for s in &report.sessions {
        for (k, sim) in s.trace.similarities.iter().enumerate() {
            let record = k.checked_sub(1).and_then(|m| s.trace.records.get(m));
            writer
                .write_record([
                    s.user_id.to_string(),
                    opt(record.map(|_| k.to_string())),
                    opt(record.map(|r| r.complaint_label().to_string())),
                    opt(record.and_then(|r| r.recommended_rank).map(|v| v.to_string())),
                    opt(record.and_then(|r| r.recommended_score_norm).map(|v| v.to_string())),
                    k.to_string(),
                    sim.to_string(),
                ])
                .map_err(csv_err)?;
        }
    }
    let bytes = writer.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn export_report(report: &CohortReport, format: ReportFormat, destination: impl AsRef<Path>) -> Result<()> {
    let body = match format {
        ReportFormat::Json => report_to_json(report)?,
        ReportFormat::Csv => report_to_csv(report)?,
    };
    fs::write(destination, body)?;
    Ok(())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<CohortReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
