//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use prefloop_core::complaint::{option_to_complaint, Complaint};
use prefloop_core::experiment::{self, report_to_json, ExperimentConfig, ReportFormat};
use prefloop_core::fitness::specific_discontent_penalty;
use prefloop_core::ga::{crossover, mutate, select, Population};
use prefloop_core::map::{bundled, random_map};
use prefloop_core::planner::cost_graph_best_route;
use prefloop_core::{
    adapt_preferences, cos_sim, AttributeId, ComplaintLedger, CrossoverRepair, FitnessContext, FitnessParams,
    GaConfig, MapGraph, PreferenceVector, RouteSet, StudyOption,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn pv(w: &[f64]) -> PreferenceVector {
    PreferenceVector::new(w.to_vec()).unwrap()
}

fn scenario() -> RouteSet {
    RouteSet::new(bundled::by_name("scenario1.map.json").unwrap()).unwrap()
}

fn bundled_sets() -> Vec<RouteSet> {
    bundled::load_all().into_iter().map(|m| RouteSet::new(m).unwrap()).collect()
}

/// Every point of the simplex grid with spacing `1 / steps`.
fn simplex_grid(steps: usize) -> Vec<PreferenceVector> {
    let mut grid = Vec::new();
    for i in 0..=steps {
        for j in 0..=steps - i {
            let k = steps - i - j;
            let w = [i as f64 / steps as f64, j as f64 / steps as f64, k as f64 / steps as f64];
            grid.push(PreferenceVector::normalized(&w).unwrap());
        }
    }
    grid
}

fn on_simplex(p: &PreferenceVector) -> bool {
    p.weights().iter().all(|w| (0.0..=1.0).contains(w)) && (p.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-9
}

/// Random vector that lands on a face or vertex of the simplex now and then.
fn edge_biased(rng: &mut ChaCha8Rng) -> PreferenceVector {
    let p = PreferenceVector::random(3, rng);
    match rng.random_range(0..6) {
        0 => {
            let mut w = [0.0; 3];
            w[rng.random_range(0..3)] = 1.0;
            pv(&w)
        }
        1 => {
            let mut w = p.weights().to_vec();
            w[rng.random_range(0..3)] = 0.0;
            PreferenceVector::normalized(&w).unwrap_or(p)
        }
        _ => p,
    }
}

fn simplex_preservation() -> Check {
    let started = Instant::now();
    let set = scenario();
    let prev = PreferenceVector::study_baseline(3);
    let complaint =
        option_to_complaint(StudyOption::ExcessiveNoise, set.map().name(), set.best_route(&prev)).unwrap();
    let ledger = ComplaintLedger::new().record(complaint, &set);
    let ctx = FitnessContext::new(&set, &ledger, &prev, FitnessParams::default());
    let mut produced = 0usize;
    for (repair, seed) in [(CrossoverRepair::Normalize, 1), (CrossoverRepair::Revert, 2)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100_000 {
            let individuals: Vec<PreferenceVector> = (0..4).map(|_| edge_biased(&mut rng)).collect();
            let pop = select(&Population::evaluate(individuals, &ctx), &mut rng);
            let k = rng.random_range(1..=3);
            let (c1, c2) = crossover(&pop.individuals[0], &pop.individuals[1], k, repair);
            let gene = AttributeId::from_position(rng.random_range(0..3));
            let delta = rng.random_range(-0.5..0.5);
            let m1 = mutate(&c1, gene, delta);
            let m2 = mutate(&c2, gene, -delta);
            for p in pop.individuals.iter().chain([&c1, &c2, &m1, &m2]) {
                if !on_simplex(p) {
                    return Err(format!("{repair:?} produced {p}"));
                }
                produced += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    if elapsed > Duration::from_secs(30) {
        return Err(format!("took {elapsed:.1?}"));
    }
    Ok(format!("2 × 10^5 sequences, {produced} vectors, {elapsed:.1?}"))
}

fn fitness_fixtures() -> Check {
    let set = scenario();
    let baseline = PreferenceVector::study_baseline(3);
    let empty = ComplaintLedger::new();
    let mut checked = 0;
    let mut expect = |label: &str, got: f64, want: f64| -> Result<(), String> {
        checked += 1;
        if (got - want).abs() <= 1e-12 {
            Ok(())
        } else {
            Err(format!("{label}: got {got}, want {want}"))
        }
    };

    // f1
    let ctx = FitnessContext::new(&set, &empty, &baseline, FitnessParams::default());
    expect("f1 identical", ctx.f1(&baseline), 1.0)?;
    let y = pv(&[0.0, 1.0, 0.0]);
    let ctx_y = FitnessContext::new(&set, &empty, &y, FitnessParams::default());
    expect("f1 orthogonal", ctx_y.f1(&pv(&[1.0, 0.0, 0.0])), 0.0)?;
    let dot = 0.333 * 0.2 + 0.333 * 0.3 + 0.334 * 0.5;
    let norms = (0.333f64 * 0.333 * 2.0 + 0.334 * 0.334).sqrt() * (0.04f64 + 0.09 + 0.25).sqrt();
    expect("f1 ⟨0.2,0.3,0.5⟩", ctx.f1(&pv(&[0.2, 0.3, 0.5])), dot / norms)?;

    // f2 with ℂ = the rough edges of Route 1
    expect("f2 empty ledger", ctx.f2(&y), 0.0)?;
    let route1 = &set.routes()[0];
    let bumps = option_to_complaint(StudyOption::ExcessiveBumpiness, set.map().name(), route1).unwrap();
    let ledger = ComplaintLedger::new().record(bumps, &set);
    let marked: Vec<&str> = ledger.complained_states().iter().map(|s| s.edge.as_str()).collect();
    if marked != route1.edges.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(format!("expected all Route 1 edges marked, got {marked:?}"));
    }
    let ctx = FitnessContext::new(&set, &ledger, &baseline, FitnessParams::default());
    if set.best_route(&y).id != 1 || set.best_route(&pv(&[1.0, 0.0, 0.0])).id != 4 {
        return Err("vertex preferences no longer select Routes 1 and 4".into());
    }
    expect("f2 crossing", ctx.f2(&y), -100.0)?;
    expect("f2 smooth route", ctx.f2(&pv(&[1.0, 0.0, 0.0])), 0.0)?;

    // f3, specific discontent ramp with w′ = 0.333, φ = 0.1
    let prev = pv(&[0.333, 0.333, 0.334]);
    let params = FitnessParams {
        phi: 0.1,
        ..FitnessParams::default()
    };
    let ctx = FitnessContext::new(&set, &ledger, &prev, params);
    let with_road = |w1: f64| PreferenceVector::normalized(&[w1, (1.0 - w1) / 2.0, (1.0 - w1) / 2.0]).unwrap();
    expect("f3 w=0.30", ctx.f3(&with_road(0.30)), -1.0)?;
    expect("f3 w=0.383", ctx.f3(&with_road(0.383)), -0.5)?;
    expect("f3 w=0.50", ctx.f3(&with_road(0.50)), 0.0)?;
    expect("ramp at w′", specific_discontent_penalty(0.333, 0.333, 0.1, -1.0), -1.0)?;
    expect("ramp at w′+b", specific_discontent_penalty(0.333 + 0.1, 0.333, 0.1, -1.0), 0.0)?;
    expect("ramp just above w′", specific_discontent_penalty(0.333 + 1e-13, 0.333, 0.1, -1.0), -1.0)?;
    expect("collapsed band at 1", specific_discontent_penalty(1.0, 1.0, 0.15, -1.0), 0.0)?;

    // f3, preference complaints
    let order = Complaint::general_preference(AttributeId::ROAD_CONDITION, AttributeId::EFFICIENCY).unwrap();
    let ledger_order = ComplaintLedger::new().record(order, &set);
    let ctx = FitnessContext::new(&set, &ledger_order, &baseline, FitnessParams::default());
    expect("f3 order violated", ctx.f3(&pv(&[0.3, 0.5, 0.2])), -1.0)?;
    let value = Complaint::specific_preference(AttributeId::ROAD_CONDITION, 0.8).unwrap();
    let ledger_value = ComplaintLedger::new().record(value, &set);
    let ctx = FitnessContext::new(&set, &ledger_value, &baseline, FitnessParams::default());
    expect("f3 ideal value met", ctx.f3(&pv(&[0.8, 0.1, 0.1])), 0.0)?;

    // totals
    let ctx = FitnessContext::new(&set, &empty, &baseline, FitnessParams::default());
    expect("fitness fixpoint", ctx.fitness(&baseline), 1.0)?;
    let ctx = FitnessContext::new(&set, &ledger, &baseline, FitnessParams::default());
    let both = y.clone();
    expect("fitness sum of cases", ctx.fitness(&both), cos_sim(&both, &baseline) - 100.0 - 1.0)?;
    let grid = simplex_grid(50);
    let (mut worst_clean, mut best_dirty) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &grid {
        let f = ctx.fitness(p);
        if ctx.f2(p) == 0.0 {
            worst_clean = worst_clean.min(f);
        } else {
            best_dirty = best_dirty.max(f);
        }
    }
    if worst_clean <= best_dirty {
        return Err(format!("dominance bound broken: {worst_clean} <= {best_dirty}"));
    }
    Ok(format!("{checked} fixtures within 1e-12, dominance gap {:.3}", worst_clean - best_dirty))
}

/// Random single complaints on bundled maps: `(set index, p_prev, complaint)`.
fn complaint_scenarios(seed: u64, count: usize, sets: &[RouteSet]) -> Vec<(usize, PreferenceVector, Complaint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let options = [
        StudyOption::DislikeRoad,
        StudyOption::ExcessiveNoise,
        StudyOption::ExcessiveBumpiness,
        StudyOption::ExcessiveDistance,
    ];
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * count {
        attempts += 1;
        let m = rng.random_range(0..sets.len());
        let prev = PreferenceVector::random(3, &mut rng);
        let option = options[rng.random_range(0..options.len())];
        let route = sets[m].best_route(&prev);
        if let Some(c) = option_to_complaint(option, sets[m].map().name(), route) {
            out.push((m, prev, c));
        }
    }
    out
}

fn penalty_dominance() -> Check {
    let sets = bundled_sets();
    let grid = simplex_grid(100);
    let mut rng_seed = 0;
    let mut tested = 0;
    let mut skipped = 0;
    for (m, prev, complaint) in complaint_scenarios(17, 400, &sets) {
        if tested == 50 {
            break;
        }
        let set = &sets[m];
        let ledger = ComplaintLedger::new().record(complaint, set);
        let ctx = FitnessContext::new(set, &ledger, &prev, FitnessParams::default());
        let avoidable = grid.iter().any(|p| !ctx.route_crosses_complaint(set.best_index(p)));
        if ledger.complained_states().is_empty() || !avoidable {
            skipped += 1;
            continue;
        }
        rng_seed += 1;
        let (winner, _) = adapt_preferences(&ctx, &GaConfig::default().with_seed(rng_seed)).map_err(|e| e.to_string())?;
        if ctx.route_crosses_complaint(set.best_index(&winner)) {
            return Err(format!("scenario {tested} on {}: {winner} still crosses ℂ", set.map().name()));
        }
        tested += 1;
    }
    if tested < 50 {
        return Err(format!("only {tested} avoidable scenarios generated"));
    }
    Ok(format!("{tested} scenarios avoid ℂ ({skipped} unavoidable or empty skipped)"))
}

/// Complaint of a uniformly drawn category about the route recommended for `prev`.
fn random_complaint(rng: &mut ChaCha8Rng, set: &RouteSet, prev: &PreferenceVector) -> Complaint {
    let attr = |rng: &mut ChaCha8Rng| AttributeId::from_position(rng.random_range(0..3));
    let route = set.best_route(prev);
    match rng.random_range(0..4) {
        0 => option_to_complaint(StudyOption::DislikeRoad, set.map().name(), route).unwrap(),
        1 => {
            let option = StudyOption::for_attribute(attr(rng)).unwrap();
            option_to_complaint(option, set.map().name(), route).unwrap()
        }
        2 => {
            let id1 = attr(rng);
            let id2 = AttributeId::from_position((id1.position() + rng.random_range(1..3)) % 3);
            Complaint::general_preference(id1, id2).unwrap()
        }
        _ => Complaint::specific_preference(attr(rng), rng.random_range(0.0..=1.0)).unwrap(),
    }
}

fn describe(complaint: &Complaint) -> String {
    match complaint {
        Complaint::GeneralDiscontent { .. } => "general discontent".into(),
        Complaint::SpecificDiscontent { attr, .. } => format!("too little w{}", attr.position() + 1),
        Complaint::GeneralPreferenceDiscontent { id1, id2 } => {
            format!("w{} above w{}", id1.position() + 1, id2.position() + 1)
        }
        Complaint::SpecificPreferenceDiscontent { id, w_opt } => format!("w{} = {w_opt:.3}", id.position() + 1),
    }
}

fn ga_vs_oracle() -> Check {
    let started = Instant::now();
    let sets = bundled_sets();
    let grid = simplex_grid(100);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let scenarios: Vec<(usize, PreferenceVector, Complaint)> = (0..10)
        .map(|_| {
            let m = rng.random_range(0..sets.len());
            let prev = PreferenceVector::random(3, &mut rng);
            let complaint = random_complaint(&mut rng, &sets[m], &prev);
            (m, prev, complaint)
        })
        .collect();
    let mut worst_gap = f64::NEG_INFINITY;
    let mut misses = Vec::new();
    for (i, (m, prev, complaint)) in scenarios.into_iter().enumerate() {
        let set = &sets[m];
        let kind = describe(&complaint);
        let ledger = ComplaintLedger::new().record(complaint, set);
        let ctx = FitnessContext::new(set, &ledger, &prev, FitnessParams::default());
        let oracle = grid.iter().map(|p| ctx.fitness(p)).fold(f64::NEG_INFINITY, f64::max);
        let (winner, _) =
            adapt_preferences(&ctx, &GaConfig::default().with_seed(1000 + i as u64)).map_err(|e| e.to_string())?;
        let got = ctx.fitness(&winner);
        worst_gap = worst_gap.max(oracle - got);
        if got < oracle - 0.01 {
            misses.push(format!("#{i} {kind}: GA {got:.4} < grid {oracle:.4} − 0.01"));
        }
    }
    let elapsed = started.elapsed();
    if !misses.is_empty() {
        return Err(format!("{}/10 scenarios below oracle: {}", misses.len(), misses.join("; ")));
    }
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:.1?}"));
    }
    Ok(format!("10 scenarios, worst grid − GA = {worst_gap:.5}, {elapsed:.1?}"))
}

fn planner_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut maps: Vec<MapGraph> = bundled::load_all();
    let bundled_count = maps.len();
    for _ in 0..100 {
        let nodes = rng.random_range(3..=12);
        let extra = rng.random_range(0..=nodes);
        maps.push(random_map(&mut rng, nodes, extra));
    }
    let mut comparisons = 0;
    let mut total_routes = 0;
    for (i, map) in maps.iter().enumerate() {
        let set = RouteSet::new(map.clone()).map_err(|e| format!("map {i}: {e}"))?;
        total_routes += set.routes().len();
        let mut probes = vec![
            PreferenceVector::study_baseline(3),
            pv(&[1.0, 0.0, 0.0]),
            pv(&[0.0, 1.0, 0.0]),
            pv(&[0.0, 0.0, 1.0]),
        ];
        probes.extend((0..16).map(|_| PreferenceVector::random(3, &mut rng)));
        for p in &probes {
            let exhaustive = set.best_route(p).utility(p);
            let graph = cost_graph_best_route(map, p).map_err(|e| format!("map {i}: {e}"))?;
            let via_graph = graph.utility(p);
            if (exhaustive - via_graph).abs() > 1e-12 {
                return Err(format!("map {i} ({}), p = {p}: enumeration {exhaustive} vs cost graph {via_graph}", map.name()));
            }
            comparisons += 1;
        }
    }
    Ok(format!(
        "{bundled_count} bundled + 100 random maps ({total_routes} routes), {comparisons} comparisons"
    ))
}

fn route_three_anchor() -> Check {
    let set = scenario();
    let p = pv(&[0.333, 0.333, 0.334]);
    let best = set.best_route(&p);
    let via_graph = cost_graph_best_route(set.map(), &p).map_err(|e| e.to_string())?;
    if best.id != 3 || via_graph.edges != best.edges {
        return Err(format!("recommended route {} / cost graph {:?}", best.id, via_graph.edges));
    }
    Ok(format!("route 3, U = {:.4}", best.utility(&p)))
}

fn default_config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json")
}

fn study_trends() -> Check {
    let started = Instant::now();
    let cfg = ExperimentConfig::from_file(default_config_path()).map_err(|e| e.to_string())?;
    let report = experiment::run_configured(&cfg, None).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let sim = report.median_similarity();
    let complaints = report.complaint_counts();
    let satisfaction: Vec<f64> = report.median_satisfaction().into_iter().map(|s| s.unwrap_or(f64::NAN)).collect();
    let first_share = report.maps.last().map_or(0.0, |m| m.first_rank_share);
    let detail = format!(
        "n={} seed={}: median cos_sim {:?}, complaints {:?}, first-rank on last map {:.0}%, median satisfaction {:?}, {elapsed:.1?}",
        cfg.cohort_size,
        cfg.seed,
        sim.iter().map(|s| (s * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        complaints,
        first_share * 100.0,
        satisfaction
    );
    let mut failures = Vec::new();
    if !(sim.windows(2).all(|w| w[1] >= w[0]) && sim.last().is_some_and(|&s| s >= 0.95)) {
        failures.push("(a) similarity");
    }
    if !complaints.windows(2).all(|w| w[1] < w[0]) {
        failures.push("(b) complaints");
    }
    if first_share < 0.8 {
        failures.push("(c) first rank");
    }
    if !satisfaction.windows(2).all(|w| w[1] >= w[0]) {
        failures.push("(d) satisfaction");
    }
    if elapsed > Duration::from_secs(60) {
        failures.push("runtime");
    }
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{} failed; {detail}", failures.join(", ")))
    }
}

fn determinism() -> Check {
    let cfg = ExperimentConfig::from_file(default_config_path()).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let report = experiment::run_configured(&cfg, None).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("report{run}.json"));
        experiment::export_report(&report, ReportFormat::Json, &path).map_err(|e| e.to_string())?;
        outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        if report_to_json(&report).map_err(|e| e.to_string())?.as_bytes() != outputs[run].as_slice() {
            return Err("exported file differs from in-memory JSON".into());
        }
    }
    if outputs[0] != outputs[1] {
        return Err("reports differ".into());
    }
    let reloaded = experiment::load_report(dir.path().join("report0.json")).map_err(|e| e.to_string())?;
    if report_to_json(&reloaded).map_err(|e| e.to_string())?.as_bytes() != outputs[0].as_slice() {
        return Err("JSON round trip is lossy".into());
    }
    Ok(format!("two runs byte-identical ({} bytes), lossless reload", outputs[0].len()))
}

fn no_complaint_fixpoint() -> Check {
    let sets = bundled_sets();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let empty = ComplaintLedger::new();
    let mut worst = f64::INFINITY;
    for i in 0..30 {
        let set = &sets[i % sets.len()];
        let prev = if i == 0 { PreferenceVector::study_baseline(3) } else { PreferenceVector::random(3, &mut rng) };
        let ctx = FitnessContext::new(set, &empty, &prev, FitnessParams::default());
        let (winner, _) = adapt_preferences(&ctx, &GaConfig::default().with_seed(i as u64)).map_err(|e| e.to_string())?;
        worst = worst.min(cos_sim(&winner, &prev));
    }
    if worst < 0.999 {
        return Err(format!("lowest cos_sim {worst}"));
    }
    Ok(format!("30 runs, lowest cos_sim {worst:.6}"))
}

fn main() -> ExitCode {
    let checks: [Criterion; 9] = [
        ("simplex preservation", simplex_preservation),
        ("fitness unit fixtures", fitness_fixtures),
        ("penalty dominance", penalty_dominance),
        ("GA vs grid oracle", ga_vs_oracle),
        ("planner equivalence", planner_equivalence),
        ("route-3 anchor", route_three_anchor),
        ("study-trend reproduction", study_trends),
        ("determinism", determinism),
        ("no-complaint fixpoint", no_complaint_fixpoint),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
