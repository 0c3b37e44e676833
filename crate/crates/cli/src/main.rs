mod output;
mod sketch;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stateseek_api::{AppState, Dataset};
use stateseek_core::ingest::{
    parse_match_json, render_match, synth_generate, BuyThresholds, ParseOptions, SynthConfig,
};
use stateseek_core::summarize::{heatmap_with, Smoothing};
use stateseek_core::winprob::{auc, examples_from_matches, train_with, TrainConfig, WinProbModel};
use stateseek_core::{index_states, ExecMode, MeshCatalog, Side, StateStore, StoreConfig};

#[derive(Parser)]
#[command(
    name = "stateseek",
    version,
    about = "Game-state retrieval over esports replays"
)]
struct Cli {
    /// Run lookups and index builds on the thread pool or on one thread.
    #[arg(long, global = true, value_enum, default_value_t = Exec::Parallel)]
    exec: Exec,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Exec {
    Parallel,
    Sequential,
}

impl From<Exec> for ExecMode {
    fn from(e: Exec) -> Self {
        match e {
            Exec::Parallel => ExecMode::Parallel,
            Exec::Sequential => ExecMode::Sequential,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse replay files (or directories of them) and write a snapshot.
    Ingest(IngestArgs),
    /// Generate synthetic replay files.
    Synth(SynthArgs),
    /// Run a sketch file against a snapshot.
    Query(QueryArgs),
    /// Fit the win-probability model on a snapshot.
    TrainWp(TrainArgs),
    /// Export a positional heatmap for a sketch file's results.
    Heatmap(HeatmapArgs),
    /// Serve the HTTP API over a snapshot.
    Serve(ServeArgs),
    /// Print snapshot contents.
    Info(InfoArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Table,
    Json,
}

#[derive(Args)]
struct IngestArgs {
    /// Replay JSON files or directories searched recursively for *.json.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Directory of mesh JSON files.
    #[arg(long, env = "STATESEEK_MESHES")]
    meshes: PathBuf,
    /// Snapshot file to write.
    #[arg(long, short)]
    out: PathBuf,
    /// TOML file with a `[buy_thresholds]` table.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct IngestConfig {
    buy_thresholds: BuyThresholds,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, env = "STATESEEK_MESHES")]
    meshes: PathBuf,
    /// TOML generator config; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, one `<match_id>.json` per match.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long, env = "STATESEEK_SNAPSHOT")]
    snapshot: PathBuf,
    sketch: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Maximum rows to print; 0 prints all.
    #[arg(long, default_value_t = 20)]
    limit: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, env = "STATESEEK_SNAPSHOT")]
    snapshot: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
    /// Hold out every n-th match (by match id order) and report its AUC.
    #[arg(long)]
    holdout_every: Option<usize>,
    /// Subsample larger corpora to this many frames.
    #[arg(long, default_value_t = TrainConfig::default().max_samples)]
    max_samples: usize,
}

#[derive(Args)]
struct HeatmapArgs {
    #[arg(long, env = "STATESEEK_SNAPSHOT")]
    snapshot: PathBuf,
    sketch: PathBuf,
    #[arg(long, value_enum)]
    side: SideArg,
    /// Cells as `NXxNY`, e.g. `64x48`.
    #[arg(long, default_value = "64x64", value_parser = parse_resolution)]
    resolution: (usize, usize),
    #[arg(long, value_enum, default_value_t = SmoothingArg::Binomial3)]
    smoothing: SmoothingArg,
    /// Write the grid document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render a PNG with one pixel per cell, north up.
    #[arg(long)]
    png: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    T,
    Ct,
}

#[derive(Clone, Copy, ValueEnum)]
enum SmoothingArg {
    Binomial3,
    None,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "STATESEEK_SNAPSHOT")]
    snapshot: PathBuf,
    #[arg(long, env = "STATESEEK_LISTEN", default_value = "127.0.0.1:8080")]
    listen: String,
    /// Win-probability model; one is trained on the snapshot when absent.
    #[arg(long, env = "STATESEEK_MODEL")]
    model: Option<PathBuf>,
    /// Seed for the fallback model.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InfoArgs {
    #[arg(long, env = "STATESEEK_SNAPSHOT")]
    snapshot: PathBuf,
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NXxNY, got {s:?}"))?;
    let nx: usize = a.trim().parse().map_err(|_| format!("bad width {a:?}"))?;
    let ny: usize = b.trim().parse().map_err(|_| format!("bad height {b:?}"))?;
    if nx == 0 || ny == 0 || nx > 4096 || ny > 4096 {
        return Err("resolution must be within 1..=4096 per axis".into());
    }
    Ok((nx, ny))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = ExecMode::from(cli.exec);
    let result = match cli.command {
        Command::Ingest(a) => ingest(a, exec),
        Command::Synth(a) => synth(a).map(|_| true),
        Command::Query(a) => query(a, exec).map(|_| true),
        Command::TrainWp(a) => train_wp(a, exec).map(|_| true),
        Command::Heatmap(a) => heatmap(a, exec).map(|_| true),
        Command::Serve(a) => serve(a, exec).map(|_| true),
        Command::Info(a) => info(a, exec).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_store(path: &Path, exec: ExecMode) -> Result<StateStore> {
    StateStore::load_snapshot_file(
        path,
        StoreConfig {
            exec,
            ..Default::default()
        },
    )
    .with_context(|| format!("loading snapshot {}", path.display()))
}

fn load_meshes(dir: &Path) -> Result<MeshCatalog> {
    let cat = MeshCatalog::load_dir(dir).with_context(|| format!("loading meshes from {}", dir.display()))?;
    if cat.is_empty() {
        bail!("no meshes found in {}", dir.display());
    }
    Ok(cat)
}

fn collect_json(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(&path, out)?;
            } else if path.extension().is_some_and(|e| e == "json") {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            walk(input, &mut files).with_context(|| format!("reading {}", input.display()))?;
        } else {
            files.push(input.clone());
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

#[derive(Serialize)]
struct IngestSummary {
    files: usize,
    failed_files: usize,
    matches: usize,
    rounds: usize,
    rejected_rounds: usize,
    states: usize,
    snapshot: PathBuf,
}

/// Returns whether everything ingested cleanly.
fn ingest(a: IngestArgs, exec: ExecMode) -> Result<bool> {
    let meshes = load_meshes(&a.meshes)?;
    let cfg: IngestConfig = match &a.config {
        Some(p) => toml::from_str(&std::fs::read_to_string(p)?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => IngestConfig::default(),
    };
    let opts = ParseOptions {
        buy_thresholds: cfg.buy_thresholds,
        ..Default::default()
    };
    let files = collect_json(&a.inputs)?;
    let parsed: Vec<_> = files
        .par_iter()
        .map(|f| {
            std::fs::read_to_string(f)
                .map_err(|e| e.to_string())
                .and_then(|text| parse_match_json(&text, &opts).map_err(|e| e.to_string()))
        })
        .collect();

    let mut clean = true;
    let mut failed_files = 0;
    let mut rejected_rounds = 0;
    let mut matches = Vec::new();
    for (file, result) in files.iter().zip(parsed) {
        match result {
            Ok(p) => {
                for d in &p.rejected {
                    eprintln!("error: {}: {d}", file.display());
                }
                rejected_rounds += p.rejected.len();
                clean &= p.rejected.is_empty();
                matches.push(p.record);
            }
            Err(e) => {
                eprintln!("error: {}: {e}", file.display());
                failed_files += 1;
                clean = false;
            }
        }
    }
    let (store, diags) = index_states(
        meshes,
        matches,
        StoreConfig {
            exec,
            ..Default::default()
        },
    );
    for d in &diags {
        eprintln!("error: {d}");
    }
    clean &= diags.is_empty();
    store
        .save_snapshot_file(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    let summary = IngestSummary {
        files: files.len(),
        failed_files,
        matches: store.matches().len(),
        rounds: store.round_count(),
        rejected_rounds,
        states: store.len(),
        snapshot: a.out,
    };
    match a.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&summary)?),
        Format::Table => {
            println!("files            {}", summary.files);
            println!("failed_files     {}", summary.failed_files);
            println!("matches          {}", summary.matches);
            println!("rounds           {}", summary.rounds);
            println!("rejected_rounds  {}", summary.rejected_rounds);
            println!("states           {}", summary.states);
            println!("snapshot         {}", summary.snapshot.display());
        }
    }
    Ok(clean)
}

fn synth(a: SynthArgs) -> Result<()> {
    let meshes = load_meshes(&a.meshes)?;
    let cfg: SynthConfig = match &a.config {
        Some(p) => toml::from_str(&std::fs::read_to_string(p)?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => SynthConfig::default(),
    };
    let matches = synth_generate(&cfg, &meshes, a.seed)?;
    std::fs::create_dir_all(&a.out)?;
    let mut rounds = 0;
    let mut states = 0;
    for m in &matches {
        let path = a.out.join(format!("{}.json", m.match_id));
        std::fs::write(&path, serde_json::to_string(&render_match(m))?)
            .with_context(|| format!("writing {}", path.display()))?;
        rounds += m.rounds.len();
        states += m.state_count();
    }
    println!("matches  {}", matches.len());
    println!("rounds   {rounds}");
    println!("states   {states}");
    println!("out      {}", a.out.display());
    Ok(())
}

fn query(a: QueryArgs, exec: ExecMode) -> Result<()> {
    let spec = sketch::load(&a.sketch)?;
    let store = load_store(&a.snapshot, exec)?;
    let hits = store.query(&spec)?;
    let shown = if a.limit == 0 {
        hits.len()
    } else {
        a.limit.min(hits.len())
    };
    let rows: Vec<output::ResultRow> = hits[..shown]
        .iter()
        .enumerate()
        .map(|(i, h)| output::ResultRow::new(&store, i + 1, h))
        .collect();
    eprintln!("{} results, showing {shown}", hits.len());
    match a.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&output::QueryOutput {
                total: hits.len(),
                results: rows
            })?
        ),
        Format::Table => print!("{}", output::table(&rows)),
    }
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    samples: usize,
    iterations: usize,
    converged: bool,
    train_auc: Option<f64>,
    holdout_auc: Option<f64>,
    out: PathBuf,
}

fn train_wp(a: TrainArgs, exec: ExecMode) -> Result<()> {
    let store = load_store(&a.snapshot, exec)?;
    let (fit, held): (Vec<_>, Vec<_>) = store
        .matches()
        .iter()
        .enumerate()
        .partition(|(i, _)| a.holdout_every.is_none_or(|n| n == 0 || (i + 1) % n != 0));
    let fit = examples_from_matches(fit.into_iter().map(|(_, m)| m));
    let held = examples_from_matches(held.into_iter().map(|(_, m)| m));
    let corpus_id = format!(
        "{}:{}",
        a.snapshot
            .file_name()
            .map(|f| f.to_string_lossy())
            .unwrap_or_default(),
        store.len()
    );
    let cfg = TrainConfig {
        max_samples: a.max_samples,
        ..Default::default()
    };
    let model = train_with(&fit, a.seed, &corpus_id, &cfg)?;
    model.save(&a.out)?;
    let score = |ex: &[stateseek_core::winprob::Example]| {
        let s: Vec<f64> = ex.iter().map(|e| model.predict_features(&e.features)).collect();
        let l: Vec<bool> = ex.iter().map(|e| e.ct_won).collect();
        if s.is_empty() {
            None
        } else {
            auc(&s, &l)
        }
    };
    let summary = TrainSummary {
        samples: model.training_meta.samples,
        iterations: model.training_meta.iterations,
        converged: model.training_meta.converged,
        train_auc: score(&fit),
        holdout_auc: score(&held),
        out: a.out,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn heatmap(a: HeatmapArgs, exec: ExecMode) -> Result<()> {
    let spec = sketch::load(&a.sketch)?;
    let store = load_store(&a.snapshot, exec)?;
    let ids: Vec<_> = store.query(&spec)?.into_iter().map(|h| h.id).collect();
    let side = match a.side {
        SideArg::T => Side::T,
        SideArg::Ct => Side::CT,
    };
    let smoothing = match a.smoothing {
        SmoothingArg::Binomial3 => Smoothing::Binomial3,
        SmoothingArg::None => Smoothing::None,
    };
    let grid = heatmap_with(&store, &spec.map, &ids, side, a.resolution, smoothing)?;
    eprintln!("{} states, {} positions", ids.len(), grid.total_count());
    let doc = serde_json::to_string(&grid)?;
    match &a.out {
        Some(p) => std::fs::write(p, doc).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{doc}"),
    }
    if let Some(p) = &a.png {
        output::heatmap_png(&grid)
            .save(p)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn load_dataset(a: &ServeArgs, exec: ExecMode) -> Result<Dataset> {
    let store = load_store(&a.snapshot, exec)?;
    let model = match &a.model {
        Some(p) => WinProbModel::load(p).with_context(|| format!("loading model {}", p.display()))?,
        None => {
            let ex = examples_from_matches(store.matches());
            tracing::info!(samples = ex.len(), "no model given; training one");
            train_with(&ex, a.seed, "serve", &TrainConfig::default())?
        }
    };
    Ok(Dataset::new(store, Some(model)))
}

fn serve(a: ServeArgs, exec: ExecMode) -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .init();
    let state = AppState::new(load_dataset(&a, exec)?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&a.listen)
            .await
            .with_context(|| format!("binding {}", a.listen))?;
        tracing::info!(addr = %listener.local_addr()?, "listening");
        #[cfg(unix)]
        {
            let state = state.clone();
            tokio::spawn(async move {
                use tokio::signal::unix::{signal, SignalKind};
                let Ok(mut hup) = signal(SignalKind::hangup()) else {
                    return;
                };
                while hup.recv().await.is_some() {
                    let a = ServeArgs {
                        snapshot: a.snapshot.clone(),
                        listen: String::new(),
                        model: a.model.clone(),
                        seed: a.seed,
                    };
                    match tokio::task::spawn_blocking(move || load_dataset(&a, exec)).await {
                        Ok(Ok(d)) => {
                            state.swap(d);
                            tracing::info!("snapshot reloaded");
                        }
                        Ok(Err(e)) => tracing::error!("reload failed: {e:#}"),
                        Err(e) => tracing::error!("reload failed: {e}"),
                    }
                }
            });
        }
        stateseek_api::serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok(())
    })
}

#[derive(Serialize)]
struct MapInfo {
    name: String,
    states: usize,
    distinct_tokens: usize,
    places: usize,
}

#[derive(Serialize)]
struct SnapshotInfo {
    matches: usize,
    rounds: usize,
    states: usize,
    maps: Vec<MapInfo>,
    teams: Vec<String>,
}

fn info(a: InfoArgs, exec: ExecMode) -> Result<()> {
    let store = load_store(&a.snapshot, exec)?;
    let maps = store
        .map_names()
        .into_iter()
        .filter_map(|n| store.map_index(n).map(|i| (n, i)))
        .map(|(n, i)| MapInfo {
            name: n.to_string(),
            states: i.state_count(),
            distinct_tokens: i.distinct_tokens(),
            places: i.mesh().place_count(),
        })
        .collect();
    let info = SnapshotInfo {
        matches: store.matches().len(),
        rounds: store.round_count(),
        states: store.len(),
        maps,
        teams: store.teams().to_vec(),
    };
    println!("{}", serde_json::to_string_pretty(&info)?);
    Ok(())
}
