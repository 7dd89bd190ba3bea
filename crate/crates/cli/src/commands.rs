//! Subcommand implementations. Every command computes all of its results
//! before creating or writing any output file.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use gcar::diagnostics::{diagnose, DiagnosticsReport};
use gcar::graph::build_graph;
use gcar::io;
use gcar::model::{ModelSpec, PUpdate, Variant};
use gcar::sampler::{run_chains, top_abs_indices, SampleStore, SamplerConfig, StorageMode};
use gcar::scoring::score;
use gcar::simgen::{self, CascadeParams, IsingParams, PathwayParams, SimOutput};
use gcar::{GcarError, InclusionReport, NeighborhoodGraph};

use crate::{
    Command, DiagnoseArgs, FitArgs, PUpdateArg, ReportArgs, ScenarioArg, ScoreArgs, SimulateArgs, StorageArg,
    VariantArg,
};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_MODEL: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

pub const STORE_FILE: &str = "store.gcar";
pub const FITTED_FILE: &str = "fitted.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MORAN_FILE: &str = "moran_ppd.csv";

/// Diagnostics above this PSRF trigger a warning line.
const PSRF_WARN: f64 = 1.1;

#[derive(Debug)]
pub struct CliError {
    pub error: GcarError,
    pub code: u8,
    pub hint: Option<String>,
}

impl From<GcarError> for CliError {
    fn from(error: GcarError) -> Self {
        let (code, hint) = classify(&error);
        CliError { error, code, hint }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        GcarError::Io(e).into()
    }
}

fn classify(e: &GcarError) -> (u8, Option<String>) {
    match e {
        GcarError::IsolatedWithZeroD(_) => (
            EXIT_MODEL,
            Some("set --d 1 or supply edges (or pass --drop-isolated to fit only connected cases)".into()),
        ),
        GcarError::ChainAborted { source, .. } => classify(source),
        GcarError::Io(_) => (EXIT_USAGE, None),
        GcarError::CorruptStore(_) => (EXIT_MODEL, None),
        e if e.is_validation() => (EXIT_MODEL, None),
        _ => (EXIT_NUMERICAL, None),
    }
}

type CmdResult<T = ()> = std::result::Result<T, CliError>;

fn usage(msg: String) -> CliError {
    CliError {
        error: GcarError::InvalidParameter(msg),
        code: EXIT_USAGE,
        hint: None,
    }
}

fn require_file(p: &Path, what: &str) -> CmdResult {
    if !p.is_file() {
        return Err(usage(format!("{what} `{}` does not exist", p.display())));
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> CmdResult<File> {
    Ok(File::create(dir.join(name))?)
}

pub fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Diagnose(a) => cmd_diagnose(&a),
        Command::Report(a) => cmd_report(&a),
        Command::Score(a) => cmd_score(&a),
    }
}

pub fn simulate(a: &SimulateArgs) -> gcar::Result<SimOutput> {
    match a.scenario {
        ScenarioArg::Ising => Ok(simgen::gen_ising_with(&IsingParams::default(), a.seed)),
        ScenarioArg::Microarray => simgen::gen_adjacency_microarray(a.seed),
        ScenarioArg::Pathway => simgen::gen_pathway_with(
            &PathwayParams {
                expression: !a.direct_draws,
                ..Default::default()
            },
            a.seed,
        ),
        ScenarioArg::Cascade => simgen::gen_cascade_with(
            &CascadeParams {
                remainder_uses_mean: a.remainder_mean,
                ..Default::default()
            },
            a.seed,
        ),
    }
}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let sim = simulate(a)?;
    fs::create_dir_all(&a.out)?;
    io::write_statistics(create(&a.out, "statistics.csv")?, &sim.ids, &sim.y)?;
    io::write_truth(create(&a.out, "truth.csv")?, &sim.ids, &sim.truth)?;
    for g in &sim.graphs {
        io::write_edges(create(&a.out, &format!("edges_{}.tsv", g.name))?, &sim.ids, &g.edges)?;
    }
    io::write_manifest(create(&a.out, "manifest.csv")?, &sim)?;
    println!(
        "{}: {} cases, {} active, graphs: {}",
        sim.scenario,
        sim.len(),
        sim.n_active(),
        sim.graphs.iter().map(|g| g.name.as_str()).collect::<Vec<_>>().join(", ")
    );
    Ok(())
}

fn read_all_edges(paths: &[PathBuf]) -> CmdResult<Vec<(String, String, f64)>> {
    let mut edges = Vec::new();
    for p in paths {
        require_file(p, "edge list")?;
        edges.extend(io::read_edges(p)?);
    }
    Ok(edges)
}

/// Fitted cases after optional removal of isolated nodes, with their graph.
struct Prepared {
    ids: Vec<String>,
    y: Vec<f64>,
    graph: Option<NeighborhoodGraph>,
}

fn prepare(a: &FitArgs) -> CmdResult<Prepared> {
    require_file(&a.stats, "statistics file")?;
    let (ids, y) = io::read_statistics(&a.stats)?;
    let edges = read_all_edges(&a.edges)?;
    let needs_graph = a.variant == VariantArg::Gcar || !edges.is_empty();
    if !needs_graph {
        return Ok(Prepared { ids, y, graph: None });
    }
    // d only shapes the precision matrix; the independence model uses the
    // graph for Moran's I alone
    let d = if a.variant == VariantArg::Gcar { a.d } else { 1.0 };
    if !a.drop_isolated {
        let g = build_graph(&ids, &edges, d)?;
        return Ok(Prepared { ids, y, graph: Some(g) });
    }
    let full = build_graph(&ids, &edges, 1.0)?;
    let (g, keep) = full.drop_isolated(d)?;
    if keep.is_empty() {
        return Err(GcarError::InvalidParameter("every case is isolated; nothing left to fit".into()).into());
    }
    log::info!("dropped {} isolated cases", ids.len() - keep.len());
    Ok(Prepared {
        ids: keep.iter().map(|&k| ids[k].clone()).collect(),
        y: keep.iter().map(|&k| y[k]).collect(),
        graph: Some(g),
    })
}

pub fn sampler_config(a: &FitArgs, y: &[f64]) -> SamplerConfig {
    SamplerConfig {
        n_chains: a.chains,
        burn_in: a.burn_in,
        n_iter: a.iter,
        thin: a.thin,
        seed: a.seed,
        slice_width: a.slice_width,
        slice_max_doublings: a.slice_max_doublings,
        langevin_step: a.langevin_step,
        metropolis_mix_prob: a.metropolis_mix,
        storage: match a.storage {
            StorageArg::Auto => StorageMode::Auto,
            StorageArg::Full => StorageMode::Full,
            StorageArg::Sketch => StorageMode::Sketch,
        },
        track: top_abs_indices(y, 5),
        ..Default::default()
    }
}

pub fn model_spec(a: &FitArgs) -> ModelSpec {
    let mut spec = match a.variant {
        VariantArg::Gcar => ModelSpec::gcar(a.alpha, a.d),
        VariantArg::Sb => ModelSpec::sb(a.alpha),
    };
    spec.p_update = match a.p_update {
        PUpdateArg::Conjugate => PUpdate::ConjugateBeta,
        PUpdateArg::Langevin => PUpdate::LangevinLogit,
    };
    spec
}

fn warn_unconverged(d: &DiagnosticsReport) {
    let bad = d.unconverged(PSRF_WARN);
    if !bad.is_empty() {
        eprintln!("warning: PSRF above {PSRF_WARN} for {}; consider longer chains", bad.join(", "));
    }
}

fn write_diagnostics(dir: &Path, d: &DiagnosticsReport) -> CmdResult {
    io::write_diagnostics(create(dir, DIAGNOSTICS_FILE)?, d)?;
    if !d.moran_ppd.is_empty() {
        io::write_moran_ppd(create(dir, MORAN_FILE)?, &d.moran_ppd)?;
    }
    Ok(())
}

fn cmd_fit(a: &FitArgs) -> CmdResult {
    let prep = prepare(a)?;
    let spec = model_spec(a);
    spec.validate()?;
    let cfg = sampler_config(a, &prep.y);
    let mut store = match spec.variant {
        Variant::Gcar => run_chains(&prep.y, prep.graph.as_ref().expect("gCAR graph"), &spec, &cfg)?,
        Variant::SbIndependence => gcar::sb_run(&prep.y, spec.alpha, &cfg)?,
    };
    log::info!("sampling took {:.1}s", store.meta.wall_clock_secs);
    // keep written artifacts a pure function of inputs and seed
    store.meta.wall_clock_secs = 0.0;

    let report = InclusionReport::from_store(&store, &prep.ids, a.threshold, a.level)?;
    let diag = diagnose(&store, &prep.y, &prep.ids, prep.graph.as_ref(), a.moran_reps, a.seed)?;

    fs::create_dir_all(&a.out)?;
    store.save(&a.out.join(STORE_FILE))?;
    io::write_statistics(create(&a.out, FITTED_FILE)?, &prep.ids, &prep.y)?;
    io::write_report(create(&a.out, REPORT_FILE)?, &report)?;
    write_diagnostics(&a.out, &diag)?;
    if a.emit_raw_draws {
        for c in 0..store.n_chains() {
            io::write_raw_draws(create(&a.out, &format!("draws_chain{}.csv", c + 1))?, &store, c, &prep.ids)?;
        }
    }
    println!(
        "{} cases fitted ({}), {} selected at threshold {}; WAIC {:.3}, RMSPE {:.4}",
        prep.ids.len(),
        spec.variant.as_str(),
        report.n_selected(),
        a.threshold,
        diag.waic,
        diag.rmspe
    );
    warn_unconverged(&diag);
    Ok(())
}

/// Store plus the statistics it was fitted to. Defaults to the `fitted.csv`
/// written next to the store.
fn load_fit(store_path: &Path, stats: Option<&PathBuf>) -> CmdResult<(SampleStore, Vec<String>, Vec<f64>)> {
    require_file(store_path, "store")?;
    let store = SampleStore::load(store_path)?;
    let stats = stats
        .cloned()
        .unwrap_or_else(|| store_path.parent().unwrap_or(Path::new(".")).join(FITTED_FILE));
    require_file(&stats, "statistics file")?;
    let (ids, y) = io::read_statistics(&stats)?;
    if ids.len() != store.n_cases {
        return Err(GcarError::IdMismatch(format!(
            "store holds {} cases but `{}` has {}",
            store.n_cases,
            stats.display(),
            ids.len()
        ))
        .into());
    }
    Ok((store, ids, y))
}

fn cmd_diagnose(a: &DiagnoseArgs) -> CmdResult {
    let (store, ids, y) = load_fit(&a.store, a.stats.as_ref())?;
    let edges = read_all_edges(&a.edges)?;
    let g = if edges.is_empty() {
        None
    } else {
        // Moran's I only reads the weights, so d is immaterial here
        Some(build_graph(&ids, &edges, 1.0)?)
    };
    let diag = diagnose(&store, &y, &ids, g.as_ref(), a.moran_reps, store.meta.config.seed)?;
    fs::create_dir_all(&a.out)?;
    write_diagnostics(&a.out, &diag)?;
    let mut out = std::io::stdout().lock();
    for (m, t, v) in diag.rows() {
        if writeln!(out, "{m},{t},{v}").is_err() {
            break;
        }
    }
    warn_unconverged(&diag);
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> CmdResult {
    let (store, ids, _) = load_fit(&a.store, a.stats.as_ref())?;
    let report = InclusionReport::from_store(&store, &ids, a.threshold, a.level)?;
    fs::create_dir_all(&a.out)?;
    io::write_report(create(&a.out, REPORT_FILE)?, &report)?;
    println!("{} of {} cases selected at threshold {}", report.n_selected(), ids.len(), a.threshold);
    Ok(())
}

/// Probabilities and truth aligned on the report's ids.
pub fn align(report: &InclusionReport, truth_ids: &[String], truth: &[bool]) -> gcar::Result<(Vec<f64>, Vec<bool>)> {
    let lookup: HashMap<&str, bool> = truth_ids.iter().map(String::as_str).zip(truth.iter().copied()).collect();
    let mut t = Vec::with_capacity(report.cases.len());
    for c in &report.cases {
        match lookup.get(c.id.as_str()) {
            Some(&v) => t.push(v),
            None => return Err(GcarError::IdMismatch(format!("report id `{}` missing from truth file", c.id))),
        }
    }
    Ok((report.probs(), t))
}

fn cmd_score(a: &ScoreArgs) -> CmdResult {
    require_file(&a.report, "report")?;
    require_file(&a.truth, "truth file")?;
    let report = io::read_report(&a.report)?;
    let (tids, truth) = io::read_truth(&a.truth)?;
    let (probs, t) = align(&report, &tids, &truth)?;
    let thr = a.threshold.unwrap_or(report.threshold);
    let s = score(&probs, &t, thr)?;

    let mut summary = String::from("metric,value\n");
    for (k, v) in [
        ("threshold", thr.to_string()),
        ("fnp", s.rates.fnp.to_string()),
        ("fdp", s.rates.fdp.to_string()),
        ("mcp", s.rates.mcp.to_string()),
        ("n_selected", s.rates.n_selected.to_string()),
        ("false_pos", s.rates.false_pos.to_string()),
        ("false_neg", s.rates.false_neg.to_string()),
        ("auc", s.auc.to_string()),
    ] {
        summary.push_str(&format!("{k},{v}\n"));
    }
    let mut roc = String::from("threshold,fpr,tpr\n");
    for p in &s.roc {
        roc.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
    }
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("score.csv"), &summary)?;
    fs::write(a.out.join("roc.csv"), roc)?;
    print!("{summary}");
    Ok(())
}
