use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod inputs;

#[derive(Parser, Debug)]
#[command(name = "crossview", version, about = "Satellite-to-street-view panorama geometry pipeline")]
struct Cli {
    /// Pipeline config (JSON). Relative scene paths resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config value, e.g. `--set render.height=128`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Worker threads; results do not depend on it.
    #[arg(long, env = "CROSSVIEW_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the resolved config as JSON.
    Config,
    /// Write the bundled sample scene, a synthetic center frame and a config.
    Sample(SampleArgs),
    /// Extrude the height field into a semantic occupancy grid (CVGX).
    Voxelize(VoxelizeArgs),
    /// Visible-point extraction along the configured trajectory.
    Extract(ExtractArgs),
    /// Color the extracted cloud procedurally and render every frame.
    Render(RenderArgs),
    /// Build a ground-truth video from a captured center frame.
    GtVideo(GtVideoArgs),
    /// Warp the satellite image into every frame.
    Warp(WarpArgs),
    /// Compare two frame directories.
    Metrics(MetricsArgs),
    /// U-turn self-consistency of a rendered out-and-back sequence.
    Uturn(UturnArgs),
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VoxelizeArgs {
    /// Output CVGX file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Occupancy grid; built from the scene when absent.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Output directory for cloud.ply, map.cvpm, stats.json and cameras.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Directory written by `extract`.
    #[arg(long)]
    pub extract: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write 2x upsampled frames.
    #[arg(long)]
    pub upsample: bool,
}

#[derive(Args, Debug)]
pub struct GtVideoArgs {
    #[arg(long)]
    pub center_rgb: PathBuf,
    #[arg(long)]
    pub center_semantics: PathBuf,
    #[arg(long)]
    pub center_depth: PathBuf,
    /// Rendered semantics to compare against; writes misalignment masks.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct WarpArgs {
    #[arg(long)]
    pub extract: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Directory of 1-bit PNG weight masks, one per frame.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Mask file prefix inside the weights directory.
    #[arg(long, default_value = "mask_")]
    pub weights_prefix: String,
    /// Only files starting with this prefix are frames.
    #[arg(long, default_value = "rgb_")]
    pub prefix: String,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct UturnArgs {
    /// Rendered out-and-back frames; when absent the sequence is rendered
    /// from the scene along a u-turn path.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Frame count of the generated u-turn path.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long, default_value = "rgb_")]
    pub prefix: String,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the generated frames here.
    #[arg(long)]
    pub frames_out: Option<PathBuf>,
}

/// 2 for I/O failures, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|e| {
        e.downcast_ref::<std::io::Error>().is_some()
            || matches!(e.downcast_ref::<crossview_core::Error>(), Some(crossview_core::Error::Io(_)))
    });
    if io {
        2
    } else {
        1
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", one_line(first.trim_start_matches("error:")));
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            ExitCode::from(exit_code(&e))
        }
    }
}
