mod light_path;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dynpaint::compositor::render;
use dynpaint::demo::{write_demo, DemoKind};
use dynpaint::image::save_image;
use dynpaint::scene_io::{apply_override_strings, apply_overrides, load_scene, parse_override_value, parse_scene, SceneDoc};
use dynpaint::LightSpec;
use serde_json::json;

use crate::light_path::{frame_vector, parse_point, PathKind};

#[derive(Parser)]
#[command(name = "dynpaint", version, about = "Relight dynamic paintings from their image sets")]
struct Cli {
    /// Worker thread cap for row-parallel rendering.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SceneArgs {
    /// Scene document (JSON); image paths are relative to it.
    scene: PathBuf,
    /// Override a document key, e.g. `params.optics.mu=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Png,
    Ppm,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Png => "png",
            Format::Ppm => "ppm",
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum LightKind {
    Directional,
    Point,
}

#[derive(Subcommand)]
enum Command {
    /// Render one frame.
    Render {
        #[command(flatten)]
        scene: SceneArgs,
        /// Output image (.png, .ppm).
        #[arg(long)]
        out: PathBuf,
    },
    /// Render frames while the first light moves along a path.
    Animate {
        #[command(flatten)]
        scene: SceneArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Light path key point `x,y,z` (direction or position). Repeatable.
        #[arg(long = "path", value_name = "X,Y,Z", required = true, allow_hyphen_values = true)]
        path: Vec<String>,
        #[arg(long, default_value_t = 2)]
        frames: usize,
        /// Light kind; defaults to the kind of the scene's first light.
        #[arg(long, value_enum)]
        kind: Option<LightKind>,
        #[arg(long, value_enum, default_value = "png")]
        format: Format,
    },
    /// Render one frame per value of a document key.
    Sweep {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        out: PathBuf,
        /// Document key path, e.g. `params.optics.eta`.
        #[arg(long)]
        key: String,
        /// Values, comma separated or repeated.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<String>,
        #[arg(long, value_enum, default_value = "png")]
        format: Format,
    },
    /// Run the HTTP render service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Write a procedural demo scene bundle.
    Demo {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "sphere")]
        kind: String,
        #[arg(long, default_value_t = 256)]
        size: usize,
    },
}

fn read_doc(args: &SceneArgs) -> Result<SceneDoc> {
    let text = std::fs::read_to_string(&args.scene).with_context(|| format!("reading {}", args.scene.display()))?;
    let doc = parse_scene(&text)?;
    Ok(apply_override_strings(&doc, &args.overrides)?)
}

fn base_dir(scene: &Path) -> &Path {
    scene.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn render_doc(doc: &SceneDoc, base: &Path, out: &Path) -> Result<()> {
    let loaded = load_scene(doc, base)?;
    let img = render(&loaded.scene, &loaded.lights, &loaded.params)?;
    save_image(&img, out)?;
    Ok(())
}

fn frame_name(dir: &Path, i: usize, format: Format) -> PathBuf {
    dir.join(format!("frame_{i:05}.{}", format.ext()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Render { scene, out } => {
            let doc = read_doc(&scene)?;
            render_doc(&doc, base_dir(&scene.scene), &out)?;
        }
        Command::Animate { scene, out, path, frames, kind, format } => {
            if frames < 2 {
                bail!("--frames must be at least 2");
            }
            let doc = read_doc(&scene)?;
            let keys = path.iter().map(|p| parse_point(p)).collect::<Result<Vec<_>>>()?;
            let kind = match kind {
                Some(LightKind::Directional) => PathKind::Directional,
                Some(LightKind::Point) => PathKind::Point,
                None => match doc.lights.first() {
                    Some(LightSpec::Point { .. }) => PathKind::Point,
                    _ => PathKind::Directional,
                },
            };
            let color = doc.lights.first().map(|l| l.color()).unwrap_or([1.0; 3]);
            create_dir(&out)?;
            let base = base_dir(&scene.scene);
            for i in 0..frames {
                let v = frame_vector(&keys, kind, i, frames)?;
                let light = match kind {
                    PathKind::Directional => json!({"kind": "directional", "direction": [v.x, v.y, v.z], "color": color}),
                    PathKind::Point => json!({"kind": "point", "position": [v.x, v.y, v.z], "color": color}),
                };
                let frame_doc = apply_overrides(&doc, &[("lights.0".to_string(), light)])?;
                render_doc(&frame_doc, base, &frame_name(&out, i, format))?;
            }
        }
        Command::Sweep { scene, out, key, values, format } => {
            let doc = read_doc(&scene)?;
            create_dir(&out)?;
            let base = base_dir(&scene.scene);
            for (i, raw) in values.iter().enumerate() {
                let frame_doc = apply_overrides(&doc, &[(key.clone(), parse_override_value(raw))])?;
                render_doc(&frame_doc, base, &frame_name(&out, i, format))?;
            }
        }
        Command::Serve { addr } => {
            let runtime = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://{addr}");
            runtime.block_on(dynpaint_service::serve(&addr))?;
        }
        Command::Demo { out, kind, size } => {
            let Some(kind) = DemoKind::from_name(&kind) else {
                bail!("unknown demo {kind:?} (expected sphere or relief)");
            };
            if size < 2 {
                bail!("--size must be at least 2");
            }
            let path = write_demo(kind, &out, size)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
