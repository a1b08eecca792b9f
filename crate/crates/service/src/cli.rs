//! Command-line front end.

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use drivesim_core::dsl::parse_command;
use drivesim_core::orchestrator::Session;
use drivesim_core::render::{FrameRenderer, NoRender, RenderOptions};
use drivesim_core::scene::{EditConfig, Violation};
use serde::{Deserialize, Serialize};

use crate::artifacts::{frame_rate, write_export, write_frames, ParallelRenderer};
use crate::formats;
use crate::scene_file::{bank_or_demo, load_scene, write_scene};
use crate::server::{serve, ServerConfig, ASSET_BANK_ENV, DEFAULT_PORT, PORT_ENV};

#[derive(Debug, Parser)]
#[command(name = "drivesim", version, about = "Driving-scene editing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a command script, then render frames and write the export.
    Run(RunArgs),
    /// Execute a command script and write the export without rendering.
    Plan(RunArgs),
    /// Check that every line of a command file parses.
    LintDsl {
        file: PathBuf,
    },
    /// Start the HTTP session service.
    Serve(ServeArgs),
    /// Write the demo scene and a sample command script into a directory.
    InitDemo {
        dir: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scene file, or `demo`.
    #[arg(long)]
    pub scene: String,
    /// Command script: one command per line, `#` starts a comment.
    #[arg(long)]
    pub commands: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Asset bank JSON; the demo bank when absent.
    #[arg(long, env = ASSET_BANK_ENV)]
    pub asset_bank: Option<PathBuf>,
    /// Resolution multiplier for rendered frames.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Render every n-th frame.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Apply directional motion blur to added vehicles.
    #[arg(long)]
    pub motion_blur: bool,
    /// Camera to render; the rig's reference camera by default.
    #[arg(long)]
    pub camera: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, env = PORT_ENV, default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, env = ASSET_BANK_ENV)]
    pub asset_bank: Option<PathBuf>,
    /// Resolution multiplier for frames returned by the service.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Skip rendering; rounds return no frames.
    #[arg(long)]
    pub no_render: bool,
}

/// Outcome of one script line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub line: usize,
    pub command: String,
    pub ok: bool,
    #[serde(default)]
    pub round: Option<u32>,
    #[serde(default)]
    pub configs: Vec<EditConfig>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub violations: Vec<Violation>,
    #[serde(default)]
    pub error: Option<String>,
}

/// Non-empty, non-comment lines with their 1-based line numbers.
pub fn script_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

/// Runs every script line as a round. Failed rounds leave the session
/// untouched and the remaining lines still run.
pub fn run_rounds(session: &mut Session, script: &str) -> Vec<RoundRecord> {
    script_lines(script)
        .into_iter()
        .map(|(line, cmd)| match session.command(cmd, &NoRender) {
            Ok(r) => RoundRecord {
                line,
                command: cmd.to_string(),
                ok: true,
                round: Some(r.round),
                configs: r.configs,
                warnings: r.warnings,
                violations: r.violations,
                error: None,
            },
            Err(e) => RoundRecord {
                line,
                command: cmd.to_string(),
                ok: false,
                round: None,
                configs: Vec::new(),
                warnings: Vec::new(),
                violations: Vec::new(),
                error: Some(e.to_string()),
            },
        })
        .collect()
}

fn render_options(args: &RunArgs) -> RenderOptions {
    RenderOptions { camera: args.camera.clone(), scale: args.scale, motion_blur: args.motion_blur, ..Default::default() }
}

/// `run` and `plan`. Writes `rounds.json`, the export and, when rendering,
/// the frames. Succeeds iff every round succeeded.
pub fn run(args: &RunArgs, render: bool) -> anyhow::Result<bool> {
    let scene = load_scene(&args.scene).with_context(|| format!("loading scene {}", args.scene))?;
    let (bank, notes) = bank_or_demo(args.asset_bank.as_deref()).context("loading asset bank")?;
    for n in notes {
        eprintln!("asset bank: {n}");
    }
    let script = std::fs::read_to_string(&args.commands).with_context(|| format!("reading {}", args.commands.display()))?;
    let mut session = Session::new("cli", scene, bank, args.seed);
    let records = run_rounds(&mut session, &script);
    for r in &records {
        match &r.error {
            Some(e) => eprintln!("line {}: round failed: {e}", r.line),
            None => eprintln!("line {}: round {} ok ({} configs)", r.line, r.round.unwrap_or(0), r.configs.len()),
        }
    }
    formats::write_file(&args.out.join("rounds.json"), &serde_json::to_vec_pretty(&records)?)?;
    write_export(&args.out, &session.state, &session.bank)?;
    if render {
        let renderer = ParallelRenderer { options: render_options(args), stride: args.stride };
        let frames = renderer.render(&session.state, &session.bank)?;
        let m = write_frames(&args.out, &frames, frame_rate(&session.state, args.stride))?;
        eprintln!("wrote {} frames ({:.1} s at {} fps)", m.frame_count, m.duration, m.fps);
    }
    Ok(records.iter().all(|r| r.ok))
}

/// Parses each line independently; returns one diagnostic per bad line.
pub fn lint(text: &str) -> Vec<String> {
    script_lines(text)
        .into_iter()
        .filter_map(|(line, cmd)| parse_command(cmd, 0).err().map(|e| format!("line {line}: {e}")))
        .collect()
}

pub const DEMO_COMMANDS: &str = "\
# Rounds run in order against the same session.
Remove all cars in the scene and add a Porsche driving the wrong way toward me fast. Additionally, add a police car also driving the wrong way and chasing behind the Porsche. The view should be moved 5 meters ahead and 0.5 meters above.
Create a traffic jam.
";

pub fn init_demo(dir: &Path) -> anyhow::Result<PathBuf> {
    let path = write_scene(&drivesim_core::demo::demo_scene(), dir)?;
    formats::write_file(&dir.join("commands.txt"), DEMO_COMMANDS.as_bytes())?;
    formats::write_file(&dir.join("assets.json"), &serde_json::to_vec_pretty(&drivesim_core::demo::demo_bank())?)?;
    Ok(path)
}

pub fn main_with(cli: Cli) -> anyhow::Result<ExitCode> {
    let code = |ok: bool| if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE };
    match cli.command {
        Command::Run(a) => run(&a, true).map(code),
        Command::Plan(a) => run(&a, false).map(code),
        Command::LintDsl { file } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let problems = lint(&text);
            for p in &problems {
                eprintln!("{}: {p}", file.display());
            }
            Ok(code(problems.is_empty()))
        }
        Command::Serve(a) => {
            let (bank, notes) = bank_or_demo(a.asset_bank.as_deref()).context("loading asset bank")?;
            for n in notes {
                eprintln!("asset bank: {n}");
            }
            let renderer: crate::server::SharedRenderer = if a.no_render {
                Arc::new(NoRender)
            } else {
                Arc::new(ParallelRenderer {
                    options: RenderOptions { scale: a.scale, ..Default::default() },
                    stride: a.stride,
                })
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(SocketAddr::new(a.host, a.port), ServerConfig { bank, renderer }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::InitDemo { dir } => {
            let path = init_demo(&dir)?;
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
