//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 data or validation error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use crate::config::{describe_keys, Config};
use crate::dct::blur_map;
use crate::edas::{rank, DecisionMatrix, Orientation};
use crate::error::{Error, Result};
use crate::eval::{evaluate_dataset_with, read_index};
use crate::io::{format_matrix, load_gray, write_pgm, write_text};
use crate::pcnn::format_trace;
use crate::segment::{segment, segment_detailed};
use crate::synth::{synthesize, write_fixture, Rect, SynthSpec, Texture};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "defocus",
    version,
    about = "In-focus region segmentation of defocus-blurred images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the sharpness map of an image.
    Blurmap(BlurmapArgs),
    /// Segment the in-focus region into a binary mask.
    Segment(SegmentArgs),
    /// Score a method over an image/ground-truth index.
    Eval(EvalArgs),
    /// Rank alternatives from a decision-matrix CSV.
    Rank(RankArgs),
    /// Generate a synthetic fixture with its ground truth.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Configuration file (see `defocus --help` for keys).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MapFormat {
    Pgm,
    Text,
}

#[derive(Args, Debug)]
struct BlurmapArgs {
    /// Input image (binary PGM or PNG).
    #[arg(long = "in", value_name = "IMAGE")]
    input: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Output format; defaults to pgm for files and text for standard output.
    #[arg(long, value_enum)]
    format: Option<MapFormat>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Args, Debug)]
struct SegmentArgs {
    #[arg(long = "in", value_name = "IMAGE")]
    input: PathBuf,
    /// Binary mask output (PGM, 0/255).
    #[arg(long, value_name = "MASK")]
    out: PathBuf,
    /// Also write the refined blur map (PGM).
    #[arg(long, value_name = "FILE")]
    map: Option<PathBuf>,
    /// Write per-iteration PCNN firing counts (`-` for standard output).
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    /// Sweep thresholds over the refined blur map.
    Blurmap,
    /// Score the binary segmentation mask.
    Segment,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Index file with one `image<TAB>gt` pair per line.
    #[arg(long, value_name = "FILE")]
    index: PathBuf,
    /// Per-image CSV; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Directory for per-image and mean PR curve CSVs.
    #[arg(long, value_name = "DIR")]
    curves: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "blurmap")]
    method: Method,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Args, Debug)]
struct RankArgs {
    /// Decision matrix CSV.
    #[arg(long, value_name = "FILE")]
    matrix: PathBuf,
    /// Ranking CSV; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Textbook orientation: highest appraisal score ranks first.
    #[arg(long)]
    canonical: bool,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TextureArg {
    Noise,
    Checker,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// File stem for `<name>.pgm`, `<name>_gt.pgm` and `<name>.tsv`.
    #[arg(long, default_value = "fixture")]
    name: String,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, value_enum, default_value = "noise")]
    texture: TextureArg,
    /// Checker cell side in pixels.
    #[arg(long, default_value_t = 4)]
    cell: usize,
    /// Foreground rectangle `x0,y0,x1,y1` (x1, y1 exclusive).
    #[arg(long, default_value = "16,16,48,48", value_parser = parse_rect)]
    rect: Rect,
    /// Background blur sigma.
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    sigma: f64,
    #[arg(long)]
    seed: u64,
}

fn parse_rect(s: &str) -> std::result::Result<Rect, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("{s:?}: {e}"))?;
    match v[..] {
        [left, top, right, bottom] => Ok(Rect {
            left,
            top,
            right,
            bottom,
        }),
        _ => Err(format!("expected x0,y0,x1,y1, got {s:?}")),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_DATA,
    }
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let command = Cli::command().after_help(format!("Configuration keys and defaults:\n\n{}", describe_keys()));
    let cli = match command
        .try_get_matches_from(argv)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(arg: &ConfigArg) -> Result<Config> {
    match &arg.config {
        Some(path) => Config::load(path),
        None => Ok(Config::default()),
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Blurmap(a) => {
            let cfg = load_config(&a.config)?;
            let image = load_gray(&a.input)?;
            let map = blur_map(&image, &cfg.blur)?;
            let format = a.format.unwrap_or(if a.out.is_some() {
                MapFormat::Pgm
            } else {
                MapFormat::Text
            });
            match (format, &a.out) {
                (MapFormat::Pgm, Some(path)) => write_pgm(path, map.as_image()),
                (MapFormat::Pgm, None) => out
                    .write_all(&crate::io::encode_pgm(map.as_image()))
                    .map_err(|e| Error::io("<stdout>", e)),
                (MapFormat::Text, path) => emit(out, path.as_deref(), &format_matrix(map.width(), map.values())),
            }
        }
        Command::Segment(a) => {
            let cfg = load_config(&a.config)?;
            let image = load_gray(&a.input)?;
            let result = segment_detailed(&image, &cfg.pipeline)?;
            write_pgm(&a.out, &result.mask.to_image())?;
            if let Some(path) = &a.map {
                write_pgm(path, result.blur_map.as_image())?;
            }
            if let Some(path) = &a.trace {
                let text = format_trace(&result.trace);
                let target = (path.as_os_str() != "-").then_some(path.as_path());
                emit(out, target, &text)?;
            }
            Ok(())
        }
        Command::Eval(a) => {
            let cfg = load_config(&a.config)?;
            let index = read_index(&a.index)?;
            let pipeline = cfg.pipeline.clone();
            let report = match a.method {
                Method::Blurmap => evaluate_dataset_with(
                    &index,
                    |img| Ok(blur_map(img, &pipeline.dct)?.into_image()),
                    cfg.alpha_sq,
                    cfg.empty,
                ),
                Method::Segment => evaluate_dataset_with(
                    &index,
                    |img| Ok(segment(img, &pipeline)?.to_image()),
                    cfg.alpha_sq,
                    cfg.empty,
                ),
            };
            for s in &report.skipped {
                let _ = writeln!(err, "warning: skipped {}: {}", s.path.display(), s.reason);
            }
            if let Some(dir) = &a.curves {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                for (i, s) in report.images.iter().enumerate() {
                    let stem = s
                        .path
                        .file_stem()
                        .map_or_else(|| "image".into(), |p| p.to_string_lossy());
                    write_text(dir.join(format!("{i:04}_{stem}_pr.csv")), &s.curve.to_csv())?;
                }
                if let Some(mean) = &report.mean_curve {
                    write_text(dir.join("mean_pr.csv"), &mean.to_csv())?;
                }
            }
            emit(out, a.out.as_deref(), &report.to_csv()?)
        }
        Command::Rank(a) => {
            let cfg = load_config(&a.config)?;
            let matrix = DecisionMatrix::load(&a.matrix)?;
            let orientation = if a.canonical {
                Orientation::Canonical
            } else {
                cfg.orientation
            };
            let result = rank(&matrix, orientation)?;
            emit(out, a.out.as_deref(), &result.to_csv()?)
        }
        Command::Synth(a) => {
            let spec = SynthSpec {
                height: a.height,
                width: a.width,
                texture: match a.texture {
                    TextureArg::Noise => Texture::Noise,
                    TextureArg::Checker => Texture::Checker(a.cell),
                },
                rect: a.rect,
                sigma: a.sigma,
                seed: a.seed,
            };
            let fixture = synthesize(&spec)?;
            std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
            write_fixture(&fixture, &a.out_dir, &a.name)?;
            Ok(())
        }
    }
}
