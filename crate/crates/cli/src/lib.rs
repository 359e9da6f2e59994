//! `glyphfactor` command line: training, evaluation, reconstruction, split
//! mining, interpolation and latent analysis.
//!
//! Every subcommand also reads `--config FILE`, a plain-text file of
//! `key = value` lines naming the subcommand's long flags; flags given on
//! the command line win.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use glyphfactor::data::{
    default_char_labels, load_sprite_sheet, load_sprite_sheet_dir, mine_hard_split, save_sprite_sheet,
    unpack_collection, FontCollection, SplitManifest, GLYF_MAGIC,
};
use glyphfactor::eval::{evaluate, hard_subset, render_csv, render_table, EvalConfig, Split, System, HARD_FRACTION};
use glyphfactor::kmeans::kmeans;
use glyphfactor::model::{Arch, FontLatent, FontModel, ModelConfig, Widths, DEFAULT_LATENT_DIM};
use glyphfactor::reconstruct::{export_latents, interpolate, reconstruct, LatentTable, ReconstructionRequest};
use glyphfactor::rng::seeded;
use glyphfactor::train::{load_checkpoint, save_checkpoint, Checkpoint, TrainConfig, Trainer};
use glyphfactor::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "glyphfactor", version, about = "Deep factorization of font glyphs into style and content")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Plain-text `key = value` file of default flags for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model, early-stopping on the hard dev fonts.
    Train(TrainArgs),
    /// Reconstruction error of a trained model.
    Evaluate(EvalArgs),
    /// Reconstruction error of the nearest-neighbor baseline.
    BaselineNn(NnArgs),
    /// Select the candidate fonts farthest from the training set.
    MineHardSplit(MineArgs),
    /// Reconstruct a whole font from a few observed glyphs.
    Reconstruct(ReconstructArgs),
    /// Decode fonts along the line between two encoded fonts.
    Interpolate(InterpolateArgs),
    /// Posterior-mean latent of every font in a collection, as CSV.
    ExportLatents(ExportArgs),
    /// k-means over an exported latent table.
    ClusterLatents(ClusterArgs),
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Characters per font in sprite-sheet inputs.
    #[arg(long, default_value_t = 26)]
    chars: usize,
    /// Glyph side length in pixels for sprite-sheet inputs.
    #[arg(long, default_value_t = 64)]
    glyph_size: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ArchArg {
    Conv,
    Fc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SplitArg {
    Full,
    Hard,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training fonts: a directory of sprite sheets or a GLYF file.
    #[arg(long)]
    data: PathBuf,
    /// Dev fonts, same formats.
    #[arg(long)]
    dev: PathBuf,
    /// Manifest of the hard dev fonts; mined from --dev (fraction 0.1) if absent.
    #[arg(long)]
    hard_dev: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "conv")]
    arch: ArchArg,
    #[arg(long, default_value_t = DEFAULT_LATENT_DIM)]
    latent_dim: usize,
    /// Adam step size.
    #[arg(long, default_value_t = 1e-5)]
    lr: f64,
    /// Probability of hiding each glyph from the encoder.
    #[arg(long, default_value_t = 0.7)]
    drop_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    max_steps: u64,
    /// Evaluations without improvement before stopping.
    #[arg(long, default_value_t = 10)]
    patience: u32,
    #[arg(long, default_value_t = 1000)]
    eval_interval: u64,
    #[arg(long, default_value_t = 16)]
    fonts_per_batch: usize,
    #[arg(long, default_value_t = 1)]
    mc_samples: usize,
    /// Divide every layer width by this factor (1 = full size).
    #[arg(long, default_value_t = 1)]
    width_divisor: usize,
    /// Cauchy scale on DCT coefficients.
    #[arg(long, default_value_t = 0.001)]
    gamma: f64,
    /// Continue from this checkpoint instead of initializing.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Checkpoint path; rewritten at every evaluation and at the end.
    #[arg(long)]
    out: PathBuf,
    /// Training log path (default: <out>.log).
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    data_args: DataArgs,
}

#[derive(Args, Debug)]
struct EvalCommon {
    /// Test fonts: a directory of sprite sheets or a GLYF file.
    #[arg(long)]
    test: PathBuf,
    /// Training fonts (nearest-neighbor pool; defines the hard split).
    #[arg(long)]
    train: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    split: SplitArg,
    /// Use this manifest for the hard split instead of mining it.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Comma-separated observation counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    observations: Vec<usize>,
    /// Random observed subsets per test font.
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    data_args: DataArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[command(flatten)]
    common: EvalCommon,
}

#[derive(Args, Debug)]
struct NnArgs {
    #[command(flatten)]
    common: EvalCommon,
}

#[derive(Args, Debug)]
struct MineArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long, default_value_t = HARD_FRACTION)]
    fraction: f64,
    /// Split name recorded in the manifest.
    #[arg(long, default_value = "hard")]
    name: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    data_args: DataArgs,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Sprite sheet of the font (unobserved glyphs may be blank).
    #[arg(long)]
    font: PathBuf,
    /// Comma-separated labels of the glyphs to observe, e.g. A,B.
    #[arg(long, value_delimiter = ',', required = true)]
    observed: Vec<String>,
    /// Output sprite sheet with every character.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InterpolateArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    font_a: PathBuf,
    #[arg(long)]
    font_b: PathBuf,
    #[arg(long, default_value_t = 8)]
    steps: usize,
    /// Output directory; one sprite sheet per frame.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    /// Latent table CSV from export-latents.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    max_iters: usize,
    /// Assignments CSV (font_id,cluster).
    #[arg(long)]
    out: PathBuf,
    /// Optional centroid CSV (cluster,z0,…).
    #[arg(long)]
    centroids: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Divergence { .. } => EXIT_DIVERGENCE,
            Error::Parameter(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: msg.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Output goes to stdout, diagnostics to stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match with_config_file(argv) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return f.code;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Splices `--key value` pairs from the `--config` file in front of the
/// command-line flags, right after the subcommand name, so later (explicit)
/// flags override them.
fn with_config_file(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let pos = argv.iter().position(|a| a == "--config");
    let path = match pos.and_then(|p| argv.get(p + 1)) {
        Some(p) => PathBuf::from(p),
        None => {
            if let Some(a) = argv.iter().find_map(|a| a.to_str()?.strip_prefix("--config=").map(PathBuf::from)) {
                a
            } else {
                return Ok(argv);
            }
        }
    };
    let text = fs::read_to_string(&path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        extra.push(OsString::from(format!("--{}", k.trim().replace('_', "-"))));
        extra.push(OsString::from(v.trim()));
    }
    // Subcommand = first argument that is not a global flag or its value.
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--config" || a == "--threads" {
            i += 2;
        } else if a.starts_with("--config=") || a.starts_with("--threads=") {
            i += 1;
        } else {
            break;
        }
    }
    if i >= argv.len() {
        return Ok(argv);
    }
    let mut out = argv[..=i].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[i + 1..]);
    Ok(out)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        // Fails only if a pool already exists (repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(Some(&a.ckpt), &a.common),
        Command::BaselineNn(a) => cmd_evaluate(None, &a.common),
        Command::MineHardSplit(a) => cmd_mine(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Interpolate(a) => cmd_interpolate(a),
        Command::ExportLatents(a) => cmd_export(a),
        Command::ClusterLatents(a) => cmd_cluster(a),
    }
}

fn require_input(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(usage(format!("input {} does not exist", path.display())))
    }
}

fn require_output_dir(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            Err(usage(format!("output directory {} does not exist", p.display())))
        }
        _ => Ok(()),
    }
}

/// A GLYF file or a directory of sprite sheets.
fn load_collection(path: &Path, data: &DataArgs) -> CliResult<FontCollection> {
    if path.is_file() {
        let head = fs::read(path).map_err(|e| Failure::from(Error::Io { path: path.into(), source: e }))?;
        if head.starts_with(GLYF_MAGIC) {
            return Ok(unpack_collection(path)?);
        }
        return Err(Failure {
            code: EXIT_DATA,
            message: format!("{} is neither a GLYF file nor a directory of sprite sheets", path.display()),
        });
    }
    Ok(load_sprite_sheet_dir(path, data.chars, data.glyph_size)?)
}

fn cmd_train(a: TrainArgs) -> CliResult<()> {
    require_input(&a.data)?;
    require_input(&a.dev)?;
    if let Some(p) = &a.hard_dev {
        require_input(p)?;
    }
    if let Some(p) = &a.resume {
        require_input(p)?;
    }
    require_output_dir(&a.out)?;
    let log_path = a.log.clone().unwrap_or_else(|| a.out.with_extension("log"));
    require_output_dir(&log_path)?;

    let train = load_collection(&a.data, &a.data_args)?;
    let dev = load_collection(&a.dev, &a.data_args)?;
    let hard = match &a.hard_dev {
        Some(p) => SplitManifest::load(p)?,
        None => mine_hard_split(&dev, &train, HARD_FRACTION)?,
    };
    hard.validate_against(&dev)?;
    let hard_dev = dev.subset(&hard.font_ids)?;

    let mut trainer = match &a.resume {
        Some(p) => Trainer::resume(load_checkpoint(p)?, &train, Some(hard_dev))?,
        None => {
            let model_config = ModelConfig {
                latent_dim: a.latent_dim,
                char_count: train.num_chars(),
                glyph_size: train.height(),
                arch: match a.arch {
                    ArchArg::Conv => Arch::Conv,
                    ArchArg::Fc => Arch::Fc,
                },
                gamma: a.gamma,
                widths: Widths::divided(a.width_divisor),
                ..ModelConfig::default()
            };
            let train_config = TrainConfig {
                step_size: a.lr,
                drop_prob: a.drop_prob,
                fonts_per_batch: a.fonts_per_batch,
                mc_samples: a.mc_samples,
                max_steps: a.max_steps,
                patience: a.patience,
                seed: a.seed,
                eval_interval: a.eval_interval,
                ..TrainConfig::default()
            };
            Trainer::new(model_config, train_config, &train, Some(hard_dev))?
        }
    };
    let mut log = String::new();
    while !trainer.is_finished() {
        let out = trainer.step()?;
        writeln!(log, "{}", out.record).unwrap();
        if out.record.dev_elbo.is_some() {
            println!("{}", out.record);
            save_checkpoint(&trainer.checkpoint(), &a.out)?;
            fs::write(&log_path, &log).map_err(|e| Failure::from(Error::Io { path: log_path.clone(), source: e }))?;
        }
    }
    save_checkpoint(&trainer.checkpoint(), &a.out)?;
    fs::write(&log_path, &log).map_err(|e| Failure::from(Error::Io { path: log_path.clone(), source: e }))?;
    println!(
        "trained {} steps; best dev ELBO {}",
        trainer.step_count(),
        trainer.best_dev().map_or("-".into(), |d| format!("{d:.3}"))
    );
    Ok(())
}

fn load_model(path: &Path) -> CliResult<(FontModel, Checkpoint)> {
    let ckpt = load_checkpoint(path)?;
    let model = FontModel::new(ckpt.model_config.clone())?;
    Ok((model, ckpt))
}

fn cmd_evaluate(ckpt: Option<&Path>, a: &EvalCommon) -> CliResult<()> {
    require_input(&a.test)?;
    require_input(&a.train)?;
    if let Some(p) = ckpt {
        require_input(p)?;
    }
    if let Some(p) = &a.manifest {
        require_input(p)?;
    }
    if let Some(p) = &a.out {
        require_output_dir(p)?;
    }
    let loaded = ckpt.map(load_model).transpose()?;
    let data_args = match &loaded {
        Some((m, _)) => DataArgs {
            chars: m.config().char_count,
            glyph_size: m.config().glyph_size,
        },
        None => a.data_args.clone(),
    };
    let train = load_collection(&a.train, &data_args)?;
    let mut test = load_collection(&a.test, &data_args)?;
    let split = match a.split {
        SplitArg::Full => Split::Full,
        SplitArg::Hard => Split::Hard,
    };
    if split == Split::Hard {
        test = match &a.manifest {
            Some(p) => {
                let m = SplitManifest::load(p)?;
                m.validate_against(&test)?;
                test.subset(&m.font_ids)?
            }
            None => hard_subset(&test, &train)?,
        };
    }
    let cfg = EvalConfig {
        observation_counts: a.observations.clone(),
        trials_per_font: a.trials,
        seed: a.seed,
        split,
    };
    let system = match &loaded {
        Some((model, ckpt)) => System::Model {
            name: format!("model-{}", model.config().arch),
            model,
            params: ckpt.inference_params(),
        },
        None => System::NearestNeighbor,
    };
    let report = evaluate(&system, &test, &train, &cfg)?;
    let reports = [report];
    print!("{}", render_table(&reports));
    if let Some(p) = &a.out {
        fs::write(p, render_csv(&reports)).map_err(|e| Failure::from(Error::Io { path: p.clone(), source: e }))?;
    }
    Ok(())
}

fn cmd_mine(a: MineArgs) -> CliResult<()> {
    require_input(&a.train)?;
    require_input(&a.candidates)?;
    require_output_dir(&a.out)?;
    let train = load_collection(&a.train, &a.data_args)?;
    let cand = load_collection(&a.candidates, &a.data_args)?;
    let mut m = mine_hard_split(&cand, &train, a.fraction)?;
    m.split_name = a.name;
    m.save(&a.out)?;
    println!("{} of {} fonts selected", m.font_ids.len(), cand.num_fonts());
    Ok(())
}

fn parse_labels(labels: &[String], chars: usize) -> CliResult<Vec<usize>> {
    let known = default_char_labels(chars);
    labels
        .iter()
        .map(|l| {
            let l = l.trim();
            known
                .iter()
                .position(|k| k.eq_ignore_ascii_case(l))
                .ok_or_else(|| usage(format!("unknown character {l:?}")))
        })
        .collect()
}

fn cmd_reconstruct(a: ReconstructArgs) -> CliResult<()> {
    require_input(&a.ckpt)?;
    require_input(&a.font)?;
    require_output_dir(&a.out)?;
    let (model, ckpt) = load_model(&a.ckpt)?;
    let (chars, g) = (model.config().char_count, model.config().glyph_size);
    let observed = parse_labels(&a.observed, chars)?;
    let font = load_sprite_sheet(&a.font, chars, g)?;
    let n = g * g;
    let req = ReconstructionRequest::new(
        observed.iter().map(|&i| (i, font[i * n..(i + 1) * n].to_vec())).collect(),
        (0..chars).collect(),
    )?;
    let out = reconstruct(&model, ckpt.inference_params(), &req)?;
    save_sprite_sheet(&a.out, &out, g, g)?;
    Ok(())
}

fn encode_sheet(model: &FontModel, ckpt: &Checkpoint, path: &Path) -> CliResult<FontLatent<f32>> {
    let (chars, g) = (model.config().char_count, model.config().glyph_size);
    let font = load_sprite_sheet(path, chars, g)?;
    let obs: Vec<(usize, &[f32])> = (0..chars).map(|i| (i, &font[i * g * g..(i + 1) * g * g])).collect();
    Ok(model.encode(ckpt.inference_params(), &obs)?.mean_latent())
}

fn cmd_interpolate(a: InterpolateArgs) -> CliResult<()> {
    require_input(&a.ckpt)?;
    require_input(&a.font_a)?;
    require_input(&a.font_b)?;
    require_output_dir(&a.out.join("x"))?;
    if a.steps < 2 {
        return Err(usage("--steps must be at least 2"));
    }
    let (model, ckpt) = load_model(&a.ckpt)?;
    let za = encode_sheet(&model, &ckpt, &a.font_a)?;
    let zb = encode_sheet(&model, &ckpt, &a.font_b)?;
    let chars: Vec<usize> = (0..model.config().char_count).collect();
    let frames = interpolate(&model, ckpt.inference_params(), &za, &zb, a.steps, &chars)?;
    let g = model.config().glyph_size;
    for (s, frame) in frames.iter().enumerate() {
        save_sprite_sheet(&a.out.join(format!("frame_{s:03}.png")), frame, g, g)?;
    }
    Ok(())
}

fn cmd_export(a: ExportArgs) -> CliResult<()> {
    require_input(&a.ckpt)?;
    require_input(&a.data)?;
    require_output_dir(&a.out)?;
    let (model, ckpt) = load_model(&a.ckpt)?;
    let data_args = DataArgs {
        chars: model.config().char_count,
        glyph_size: model.config().glyph_size,
    };
    let data = load_collection(&a.data, &data_args)?;
    let table = export_latents(&model, ckpt.inference_params(), &data)?;
    table.save(&a.out)?;
    Ok(())
}

fn cmd_cluster(a: ClusterArgs) -> CliResult<()> {
    require_input(&a.input)?;
    require_output_dir(&a.out)?;
    if let Some(p) = &a.centroids {
        require_output_dir(p)?;
    }
    let table = LatentTable::load(&a.input)?;
    let points: Vec<Vec<f64>> = table.latents.iter().map(|z| z.iter().map(|&v| v as f64).collect()).collect();
    let result = kmeans(&points, a.k, &mut seeded(a.seed), a.max_iters)?;
    let mut s = String::from("font_id,cluster\n");
    for (id, c) in table.font_ids.iter().zip(&result.assignments) {
        writeln!(s, "{id},{c}").unwrap();
    }
    fs::write(&a.out, s).map_err(|e| Failure::from(Error::Io { path: a.out.clone(), source: e }))?;
    if let Some(p) = &a.centroids {
        let mut s = String::from("cluster");
        for d in 0..table.dim() {
            write!(s, ",z{d}").unwrap();
        }
        s.push('\n');
        for (c, cen) in result.centroids.iter().enumerate() {
            write!(s, "{c}").unwrap();
            for v in cen {
                write!(s, ",{v}").unwrap();
            }
            s.push('\n');
        }
        fs::write(p, s).map_err(|e| Failure::from(Error::Io { path: p.clone(), source: e }))?;
    }
    println!("k={} wcss={} iterations={}", a.k, result.wcss, result.iterations);
    Ok(())
}
