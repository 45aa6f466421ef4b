//! `gulfclim` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 the run
//! completed but its answer is flagged (incomplete or ungrounded).

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use config::LoadedConfig;
use gulfclim::agent::{Agent, AgentConfig};
use gulfclim::eval::{evaluate, load_instances, render_csv, render_text, EvalOptions};
use gulfclim::geoforge::{forge_visual, CityInventory, GriddedProduct};
use gulfclim::textforge::{forge_text, write_dataset, HashingEmbedder, KeywordIndex, DEFAULT_TAU};
use gulfclim::toolkit::{render_tool_prompt, ToolCall};
use manifest::RunManifest;

const EMBED_DIM: usize = 256;

#[derive(Parser)]
#[command(name = "gulfclim", version, about = "Gulf climate agent, benchmark harness and dataset builders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Answer one question with the tool-using agent.
    Ask {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Render charts for series observations.
        #[arg(long)]
        charts: bool,
        /// Backend conversation key; defaults to a hash of the question.
        #[arg(long)]
        session: Option<String>,
        question: String,
    },
    /// Score a benchmark suite.
    Bench {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Benchmark instances, one JSON object per line.
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        /// Also score chart output in end-to-end mode.
        #[arg(long)]
        images: bool,
    },
    /// Build QA datasets.
    Forge {
        #[command(subcommand)]
        kind: ForgeKind,
    },
    /// Inspect or invoke tools directly.
    Tools {
        #[command(subcommand)]
        action: ToolsAction,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Step,
    E2e,
    Both,
}

#[derive(Subcommand)]
enum ForgeKind {
    /// Text QA from web retrieval.
    Text {
        #[command(flatten)]
        cfg: ConfigArg,
    },
    /// Chart QA from a gridded product.
    Visual {
        #[command(flatten)]
        cfg: ConfigArg,
    },
}

#[derive(Subcommand)]
enum ToolsAction {
    /// Print the tool listing shown to the model.
    List {
        #[command(flatten)]
        cfg: ConfigArg,
    },
    /// Run one tool: `tools call -c run.toml rain_inquiry lat=25.28 lon=51.53 date=2023-04-15`.
    Call {
        #[command(flatten)]
        cfg: ConfigArg,
        tool: String,
        /// Arguments as name=value.
        args: Vec<String>,
    },
}

enum Outcome {
    Ok,
    Flagged,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Flagged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load(cfg: &ConfigArg) -> Result<(LoadedConfig, PathBuf)> {
    let loaded = LoadedConfig::load(&cfg.config)?;
    let out = cfg.out.clone().unwrap_or_else(|| loaded.config.output_dir.clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok((loaded, out))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Ask { cfg, charts, session, question } => ask(&cfg, charts, session, &question),
        Command::Bench { cfg, suite, mode, images } => bench(&cfg, &suite, mode, images),
        Command::Forge { kind: ForgeKind::Text { cfg } } => forge_text_cmd(&cfg),
        Command::Forge { kind: ForgeKind::Visual { cfg } } => forge_visual_cmd(&cfg),
        Command::Tools { action: ToolsAction::List { cfg } } => {
            let (loaded, _) = load(&cfg)?;
            let registry = loaded.registry(loaded.backend()?)?;
            print!("{}", render_tool_prompt(&registry));
            Ok(Outcome::Ok)
        }
        Command::Tools { action: ToolsAction::Call { cfg, tool, args } } => tools_call(&cfg, tool, &args),
    }
}

fn ask(cfg: &ConfigArg, charts: bool, session: Option<String>, question: &str) -> Result<Outcome> {
    let (loaded, out) = load(cfg)?;
    let backend = loaded.backend()?;
    let registry = loaded.registry(backend.clone())?;
    let session = session.unwrap_or_else(|| format!("ask-{}", &hex::encode(Sha256::digest(question.as_bytes()))[..12]));
    let agent_cfg = AgentConfig {
        session: session.clone(),
        budget: loaded.config.agent.budget,
        observation_cap: loaded.config.agent.observation_cap,
        emit_charts: charts,
    };
    let run = Agent::new(&registry, backend.as_ref(), agent_cfg).run(question)?;
    let mut manifest = RunManifest::new("ask", &loaded, backend.name(), loaded.clock().now());
    write_json(&out.join("trajectory.json"), &run.trajectory)?;
    write_json(&out.join("answer.json"), &run.answer)?;
    manifest.outputs.extend(["trajectory.json".to_string(), "answer.json".to_string()]);
    for chart in &run.answer.charts {
        let files = chart.write(&out.join("charts"))?;
        manifest.outputs.push(format!("charts/{}", files.svg.file_name().unwrap_or_default().to_string_lossy()));
    }
    manifest.extra.insert("session".into(), session);
    manifest.write(&out)?;

    println!("{}", run.answer.text);
    if !run.answer.citations.is_empty() {
        let cites: Vec<String> = run.answer.citations.iter().map(|c| format!("[step {c}]")).collect();
        println!("sources: {}", cites.join(" "));
    }
    if !run.answer.complete {
        eprintln!("warning: no final answer within the budget of {} calls", loaded.config.agent.budget);
    }
    if !run.answer.ungrounded_numbers.is_empty() {
        eprintln!("warning: ungrounded numbers: {}", run.answer.ungrounded_numbers.join(", "));
    }
    Ok(if run.answer.flagged() { Outcome::Flagged } else { Outcome::Ok })
}

fn bench(cfg: &ConfigArg, suite: &Path, mode: Mode, images: bool) -> Result<Outcome> {
    let (loaded, out) = load(cfg)?;
    let instances = load_instances(suite)?;
    let backend = loaded.backend()?;
    let registry = loaded.registry(backend.clone())?;
    let opts = EvalOptions {
        step: matches!(mode, Mode::Step | Mode::Both),
        e2e: matches!(mode, Mode::E2e | Mode::Both),
        images,
        budget: loaded.config.agent.budget,
    };
    let report = evaluate(&instances, &registry, backend.as_ref(), &opts);
    let text = render_text(&report);
    std::fs::write(out.join("report.txt"), &text)?;
    std::fs::write(out.join("report.csv"), render_csv(&report))?;
    write_json(&out.join("report.json"), &report)?;
    let mut manifest = RunManifest::new("bench", &loaded, backend.name(), loaded.clock().now());
    manifest.outputs = vec!["report.txt".into(), "report.csv".into(), "report.json".into()];
    manifest.extra.insert("suite".into(), suite.display().to_string());
    manifest.write(&out)?;
    print!("{text}");
    Ok(Outcome::Ok)
}

fn forge_text_cmd(cfg: &ConfigArg) -> Result<Outcome> {
    let (loaded, out) = load(cfg)?;
    let backend = loaded.backend()?;
    let search = loaded.search()?;
    let embedder = HashingEmbedder::new(EMBED_DIM);
    let mut index = KeywordIndex::new(EMBED_DIM, DEFAULT_TAU)?;
    let clock = loaded.clock();
    let result =
        forge_text(&loaded.config.text, backend.as_ref(), search.as_ref(), &embedder, clock.as_ref(), &mut index)?;
    let file = std::fs::File::create(out.join("dataset.jsonl"))?;
    let n = write_dataset(&result.records, std::io::BufWriter::new(file))?;
    write_json(&out.join("drops.json"), &result.drops)?;
    write_json(&out.join("keywords.json"), &result.keywords)?;
    let mut manifest = RunManifest::new("forge-text", &loaded, backend.name(), clock.now());
    manifest.outputs = vec!["dataset.jsonl".into(), "drops.json".into(), "keywords.json".into()];
    manifest.extra = BTreeMap::from([
        ("documents".to_string(), result.documents.to_string()),
        ("chunks".to_string(), result.chunks.to_string()),
        ("facts".to_string(), result.facts.to_string()),
        ("records".to_string(), n.to_string()),
    ]);
    manifest.write(&out)?;
    println!(
        "{n} records from {} documents, {} chunks, {} facts; {} dropped",
        result.documents,
        result.chunks,
        result.facts,
        result.drops.total()
    );
    Ok(Outcome::Ok)
}

fn forge_visual_cmd(cfg: &ConfigArg) -> Result<Outcome> {
    let (loaded, out) = load(cfg)?;
    let visual = &loaded.config.visual;
    let Some(product_path) = &visual.product else { bail!("forge visual needs visual.product in the config") };
    let text = std::fs::read_to_string(product_path).with_context(|| format!("reading {}", product_path.display()))?;
    let product = GriddedProduct::parse(&text)?;
    let mut forge_cfg = visual.forge.clone();
    forge_cfg.seed = loaded.config.seed;
    let backend = loaded.backend()?;
    let clock = loaded.clock();
    let result = forge_visual(&product, &CityInventory::builtin(), &forge_cfg, backend.as_ref(), clock.as_ref())?;
    let charts_dir = out.join("charts");
    for chart in &result.charts {
        chart.write(&charts_dir)?;
    }
    let file = std::fs::File::create(out.join("dataset.jsonl"))?;
    let n = write_dataset(&result.records, std::io::BufWriter::new(file))?;
    write_json(&out.join("drops.json"), &result.drops)?;
    let mut manifest = RunManifest::new("forge-visual", &loaded, backend.name(), clock.now());
    manifest.outputs = vec!["charts/".into(), "dataset.jsonl".into(), "drops.json".into()];
    manifest.extra = BTreeMap::from([
        ("charts".to_string(), result.charts.len().to_string()),
        ("windows_kept".to_string(), result.windows_kept.to_string()),
        ("records".to_string(), n.to_string()),
    ]);
    manifest.write(&out)?;
    println!("{n} records over {} windows; {} dropped", result.windows_kept, result.drops.total());
    Ok(Outcome::Ok)
}

fn tools_call(cfg: &ConfigArg, tool: String, args: &[String]) -> Result<Outcome> {
    let (loaded, _) = load(cfg)?;
    let registry = loaded.registry(loaded.backend()?)?;
    let mut parsed = BTreeMap::new();
    for a in args {
        let Some((k, v)) = a.split_once('=') else { bail!("argument `{a}` is not name=value") };
        parsed.insert(k.to_string(), v.to_string());
    }
    let call = ToolCall { tool, args: parsed };
    if let Some(failure) = registry.validate(&call).to_failure() {
        bail!("invalid call: {}", failure.message);
    }
    let obs = registry.execute(&call);
    println!("{}", serde_json::to_string_pretty(&obs)?);
    Ok(if obs.is_ok() { Outcome::Ok } else { Outcome::Flagged })
}
