//! Command-line front end. Every subcommand writes its files under `--out`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::camera::{adaptive_stack, fixed_stack, gamma_crf, geometric_ladder, load_crf, Crf, ExposureStack};
use crate::error::{Error, Result};
use crate::image::{LdrImage, RadianceMap};
use crate::io::{read_ldr_file, read_ppm, read_radiance_file, write_hdr_file, write_ldr_file, write_pfm_file};
use crate::merge::{debevec_merge, hat_weight};
use crate::nn::{
    grad_check, load_checkpoint_file, save_checkpoint_file, CheckpointMeta, GradCheckConfig, Network, NetworkSpec, Real,
    Tensor4,
};
use crate::pipeline::{
    build_ldr2hdr_net, build_tonemap_net, decompose_tonemap_channels, hyperparam_search, infer_ldr2hdr, infer_tonemap,
    ldr2hdr_samples, loss_curve_csv, normalize_hdr, resolve, synth_scene, tonemap_samples, Channel, ChannelScaling, Dtype,
    Ladder, Manifest, SampleSet, SceneEntry, Split, TrainConfig, Trainer,
};
use crate::tmo::{
    drago, mertens_fuse, reinhard_global, score_csv, select_best_tmo, tmqi, MertensParams, Operator, TmqiParams, ToneMap,
};

#[derive(Parser, Debug)]
#[command(name = "hdrcnn", version, about = "HDR reconstruction and tone mapping with per-channel CNNs")]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file with training settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    dtype: Option<DtypeArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DtypeArg {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OperatorArg {
    Reinhard,
    Drago,
    Mertens,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Arch {
    Ldr2hdr,
    Tonemap,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ImageFormat {
    Hdr,
    Pfm,
}

/// Flags that override individual training settings.
#[derive(Args, Debug, Clone, Default)]
struct TrainFlags {
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patch: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    freeze_batchnorm: bool,
    #[arg(long)]
    log_target: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate seeded synthetic HDR scenes and a dataset manifest.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        count: usize,
        /// Of `count`, how many go to the validation split.
        #[arg(long, default_value_t = 0)]
        val: usize,
        /// Of `count`, how many go to the test split.
        #[arg(long, default_value_t = 0)]
        test: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 2.2)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = Mode::Fixed)]
        ladder: Mode,
        #[arg(long, value_enum, default_value_t = ImageFormat::Hdr)]
        format: ImageFormat,
    },
    /// Expose a radiance map (or every scene of a manifest) into an LDR stack.
    Expose {
        #[command(flatten)]
        common: Common,
        /// `.hdr`/`.pfm` file or dataset manifest (`.json`).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        crf: Option<PathBuf>,
    },
    /// Merge an exposure stack directory into a radiance map.
    Merge {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        stack: PathBuf,
        #[arg(long)]
        crf: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ImageFormat::Hdr)]
        format: ImageFormat,
    },
    /// Apply one tone-mapping operator.
    Tmo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        operator: OperatorArg,
        #[arg(long, default_value_t = 0.18)]
        key: f64,
        #[arg(long)]
        white: Option<f64>,
        #[arg(long, default_value_t = 0.85)]
        bias: f64,
        #[arg(long)]
        crf: Option<PathBuf>,
    },
    /// Pick the best operator per scene by TMQI and record the tone maps.
    SelectTmo {
        #[command(flatten)]
        common: Common,
        /// `.hdr`/`.pfm` file or dataset manifest.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        crf: Option<PathBuf>,
    },
    /// Score a tone map against its radiance map.
    Tmqi {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        hdr: PathBuf,
        /// `.pfm` or `.ppm` tone map.
        #[arg(long)]
        tonemap: PathBuf,
    },
    /// Train the three per-channel radiance networks.
    TrainLdr2hdr {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Train the four Lab-channel tone-mapping networks.
    TrainTonemap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Two-epoch sweep over learning rates and dropout rates for one channel.
    Search {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = Arch::Ldr2hdr)]
        arch: Arch,
        /// Channel name (R, G, B, Lbase, Ldetail, a, b); defaults to G or Lbase.
        #[arg(long)]
        channel: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0")]
        lrs: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.4")]
        dropouts: Vec<f64>,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Reconstruct a radiance map from an exposure stack.
    InferLdr2hdr {
        #[command(flatten)]
        common: Common,
        /// Directory with `ldr2hdr_{R,G,B}.ckpt`.
        #[arg(long)]
        checkpoints: PathBuf,
        #[arg(long)]
        stack: PathBuf,
        /// Multiplies the prediction, undoing input normalization.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, value_enum, default_value_t = ImageFormat::Hdr)]
        format: ImageFormat,
    },
    /// Tone map a radiance map with the trained Lab-channel networks.
    InferTonemap {
        #[command(flatten)]
        common: Common,
        /// Directory with `tonemap_{Lbase,Ldetail,a,b}.ckpt`.
        #[arg(long)]
        checkpoints: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Finite-difference check of the backward pass.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Arch::Ldr2hdr)]
        arch: Arch,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 8)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        batch: usize,
    },
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code: 0 success, 1 invalid input, 2 I/O failure.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error:usage: {first}");
            return 1;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error:{}: {e}", e.category());
            if matches!(e, Error::Io { .. }) {
                2
            } else {
                1
            }
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string()
}

fn read_crf(path: Option<&Path>) -> Result<Crf> {
    match path {
        Some(p) => load_crf(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
        None => gamma_crf(2.2),
    }
}

fn is_manifest(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some("json")
}

fn absolute(path: &Path) -> Result<String> {
    let p = fs::canonicalize(path).map_err(|e| Error::io(path, e))?;
    Ok(p.to_string_lossy().into_owned())
}

fn write_radiance(dir: &Path, name: &str, map: &RadianceMap, format: ImageFormat) -> Result<PathBuf> {
    Ok(match format {
        ImageFormat::Hdr => {
            let p = dir.join(format!("{name}.hdr"));
            write_hdr_file(&p, map)?;
            p
        }
        ImageFormat::Pfm => {
            let p = dir.join(format!("{name}.pfm"));
            write_pfm_file(&p, map)?;
            p
        }
    })
}

/// Tone maps are stored as PFM (exact) with an 8-bit PPM preview.
fn write_tone_map(dir: &Path, name: &str, tm: &ToneMap) -> Result<PathBuf> {
    let p = dir.join(format!("{name}.pfm"));
    write_pfm_file(&p, &tm.to_radiance())?;
    let preview = dir.join(format!("{name}.ppm"));
    fs::write(&preview, crate::io::write_ppm(&tm.to_ldr())).map_err(|e| Error::io(&preview, e))?;
    Ok(p)
}

fn read_tone_map(path: &Path) -> Result<ToneMap> {
    if path.extension().and_then(|e| e.to_str()) == Some("ppm") {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let img = read_ppm(&bytes)?;
        let data = img.data().iter().map(|&v| v as f32 / 255.0).collect();
        return ToneMap::from_clipped(img.width(), img.height(), data);
    }
    Ok(ToneMap::from_radiance(&read_radiance_file(path)?))
}

/// Every `.ppm` in `dir` with its sidecar, ordered by exposure time.
fn read_stack(dir: &Path) -> Result<ExposureStack> {
    let mut images: Vec<LdrImage> = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("ppm"))
        .collect();
    paths.sort();
    for p in paths {
        images.push(read_ldr_file(&p)?);
    }
    if images.is_empty() {
        return Err(Error::Validation(format!("{}: no .ppm exposures found", dir.display())));
    }
    images.sort_by(|a, b| a.exposure().total_cmp(&b.exposure()));
    let n = images.len();
    ExposureStack::new(images, (0..n).collect())
}

fn write_stack(dir: &Path, stack: &ExposureStack) -> Result<()> {
    ensure_dir(dir)?;
    for (i, img) in stack.images().iter().enumerate() {
        write_ldr_file(dir.join(format!("exp_{i}.ppm")), img)?;
    }
    Ok(())
}

fn train_config(common: &Common, flags: &TrainFlags) -> Result<TrainConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text)?
        }
        None => TrainConfig::default(),
    };
    macro_rules! set {
        ($field:ident, $value:expr) => {
            if let Some(v) = $value {
                cfg.$field = v;
            }
        };
    }
    set!(seed, common.seed);
    set!(workers, common.workers);
    set!(dtype, common.dtype.map(|d| match d {
        DtypeArg::F32 => Dtype::F32,
        DtypeArg::F64 => Dtype::F64,
    }));
    set!(lr, flags.lr);
    set!(momentum, flags.momentum);
    set!(epochs, flags.epochs);
    set!(batch_size, flags.batch_size);
    set!(patch, flags.patch);
    set!(dropout_p, flags.dropout);
    cfg.freeze_batchnorm |= flags.freeze_batchnorm;
    cfg.log_target |= flags.log_target;
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth {
            common,
            count,
            val,
            test,
            width,
            height,
            gamma,
            ladder,
            format,
        } => cmd_synth(&common, count, val, test, (width, height), gamma, ladder, format),
        Command::Expose { common, input, mode, crf } => cmd_expose(&common, &input, mode, crf.as_deref()),
        Command::Merge {
            common,
            stack,
            crf,
            format,
        } => {
            ensure_dir(&common.out)?;
            let map = debevec_merge(&read_stack(&stack)?, &read_crf(crf.as_deref())?, &hat_weight())?;
            let p = write_radiance(&common.out, "merged", &map, format)?;
            println!("{}", p.display());
            Ok(())
        }
        Command::Tmo {
            common,
            input,
            operator,
            key,
            white,
            bias,
            crf,
        } => {
            ensure_dir(&common.out)?;
            let map = read_radiance_file(&input)?;
            let (name, tm) = match operator {
                OperatorArg::Reinhard => ("reinhard", reinhard_global(&map, key, white)),
                OperatorArg::Drago => ("drago", drago(&map, bias, None)),
                OperatorArg::Mertens => {
                    let stack = fixed_stack(&map, &read_crf(crf.as_deref())?);
                    ("mertens", mertens_fuse(&stack, &MertensParams::default()))
                }
            };
            let p = write_tone_map(&common.out, &format!("{}_{name}", stem(&input)), &tm)?;
            println!("{}", p.display());
            Ok(())
        }
        Command::SelectTmo { common, input, crf } => cmd_select(&common, &input, crf.as_deref()),
        Command::Tmqi { hdr, tonemap, .. } => {
            let map = read_radiance_file(&hdr)?;
            let tm = read_tone_map(&tonemap)?;
            let s = tmqi(&map, &tm, &TmqiParams::default())?;
            print!("{}", score_csv(&[(hdr.display().to_string(), "input", s)]));
            Ok(())
        }
        Command::TrainLdr2hdr { common, manifest, train } => {
            let cfg = train_config(&common, &train)?;
            match cfg.dtype {
                Dtype::F32 => train_ldr2hdr::<f32>(&common.out, &manifest, &cfg),
                Dtype::F64 => train_ldr2hdr::<f64>(&common.out, &manifest, &cfg),
            }
        }
        Command::TrainTonemap { common, manifest, train } => {
            let cfg = train_config(&common, &train)?;
            match cfg.dtype {
                Dtype::F32 => train_tonemap::<f32>(&common.out, &manifest, &cfg),
                Dtype::F64 => train_tonemap::<f64>(&common.out, &manifest, &cfg),
            }
        }
        Command::Search {
            common,
            manifest,
            arch,
            channel,
            lrs,
            dropouts,
            train,
        } => {
            let cfg = train_config(&common, &train)?;
            let channel = match (channel, arch) {
                (Some(c), _) => c.parse()?,
                (None, Arch::Ldr2hdr) => Channel::G,
                (None, Arch::Tonemap) => Channel::LBase,
            };
            match cfg.dtype {
                Dtype::F32 => cmd_search::<f32>(&common.out, &manifest, arch, channel, &lrs, &dropouts, &cfg),
                Dtype::F64 => cmd_search::<f64>(&common.out, &manifest, arch, channel, &lrs, &dropouts, &cfg),
            }
        }
        Command::InferLdr2hdr {
            common,
            checkpoints,
            stack,
            scale,
            format,
        } => {
            ensure_dir(&common.out)?;
            let stack = read_stack(&stack)?;
            let map = match common.dtype {
                Some(DtypeArg::F64) => run_ldr2hdr::<f64>(&checkpoints, &stack, scale)?,
                _ => run_ldr2hdr::<f32>(&checkpoints, &stack, scale)?,
            };
            let p = write_radiance(&common.out, "reconstructed", &map, format)?;
            println!("{}", p.display());
            Ok(())
        }
        Command::InferTonemap {
            common,
            checkpoints,
            input,
        } => {
            ensure_dir(&common.out)?;
            let map = read_radiance_file(&input)?;
            let tm = match common.dtype {
                Some(DtypeArg::F64) => run_tonemap::<f64>(&checkpoints, &map)?,
                _ => run_tonemap::<f32>(&checkpoints, &map)?,
            };
            let p = write_tone_map(&common.out, &format!("{}_tonemap", stem(&input)), &tm)?;
            println!("{}", p.display());
            Ok(())
        }
        Command::Gradcheck {
            common,
            arch,
            tolerance,
            step,
            size,
            batch,
        } => cmd_gradcheck(&common, arch, tolerance, step, size, batch),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    common: &Common,
    count: usize,
    val: usize,
    test: usize,
    (width, height): (usize, usize),
    gamma: f64,
    ladder: Mode,
    format: ImageFormat,
) -> Result<()> {
    if val + test > count {
        return Err(Error::Parameter(format!("val ({val}) + test ({test}) exceeds count ({count})")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Parameter("scene size must be positive".into()));
    }
    ensure_dir(&common.out)?;
    let crf = gamma_crf(gamma)?;
    write_text(&common.out.join("crf.txt"), &crf.to_text())?;
    let seed = common.seed.unwrap_or(0);
    let mut scenes = Vec::with_capacity(count);
    for i in 0..count {
        let map = synth_scene(width, height, seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
        let p = write_radiance(&common.out, &format!("scene_{i:03}"), &map, format)?;
        let split = if i < count - val - test {
            Split::Train
        } else if i < count - test {
            Split::Val
        } else {
            Split::Test
        };
        scenes.push(SceneEntry {
            file: p.file_name().expect("file name").to_string_lossy().into_owned(),
            split,
            stack: None,
            tonemap: None,
        });
    }
    let manifest = Manifest {
        scenes,
        crf: Some("crf.txt".into()),
        ladder: match ladder {
            Mode::Fixed => Ladder::Fixed,
            Mode::Adaptive => Ladder::Adaptive,
        },
    };
    let path = common.out.join("manifest.json");
    manifest.save(&path)?;
    println!("{}", path.display());
    Ok(())
}

fn expose_map(map: &RadianceMap, mode: Mode, crf: &Crf) -> Result<ExposureStack> {
    let (normalized, scale) = normalize_hdr(map)?;
    if (scale - 1.0).abs() > 1e-6 {
        log::info!("normalized by 99th-percentile luminance {scale}");
    }
    match mode {
        Mode::Fixed => Ok(fixed_stack(&normalized, crf)),
        Mode::Adaptive => adaptive_stack(&normalized, crf, &geometric_ladder()),
    }
}

fn cmd_expose(common: &Common, input: &Path, mode: Option<Mode>, crf: Option<&Path>) -> Result<()> {
    ensure_dir(&common.out)?;
    if !is_manifest(input) {
        let crf = read_crf(crf)?;
        let stack = expose_map(&read_radiance_file(input)?, mode.unwrap_or(Mode::Fixed), &crf)?;
        write_stack(&common.out, &stack)?;
        for img in stack.images() {
            println!("{}", img.exposure());
        }
        return Ok(());
    }
    let mut manifest = Manifest::load(input)?;
    let crf_path = match crf {
        Some(p) => Some(p.to_path_buf()),
        None => manifest.crf.as_ref().map(|c| resolve(input, c)),
    };
    let crf_curve = read_crf(crf_path.as_deref())?;
    let mode = mode.unwrap_or(match manifest.ladder {
        Ladder::Fixed => Mode::Fixed,
        Ladder::Adaptive => Mode::Adaptive,
    });
    for scene in &mut manifest.scenes {
        let src = resolve(input, &scene.file);
        let name = stem(&src);
        let stack = expose_map(&read_radiance_file(&src)?, mode, &crf_curve)?;
        write_stack(&common.out.join(&name), &stack)?;
        scene.file = absolute(&src)?;
        scene.stack = Some(name);
        if let Some(t) = &scene.tonemap {
            scene.tonemap = Some(absolute(&resolve(input, t))?);
        }
    }
    manifest.crf = crf_path.map(|p| absolute(&p)).transpose()?;
    manifest.ladder = match mode {
        Mode::Fixed => Ladder::Fixed,
        Mode::Adaptive => Ladder::Adaptive,
    };
    let path = common.out.join("manifest.json");
    manifest.save(&path)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_select(common: &Common, input: &Path, crf: Option<&Path>) -> Result<()> {
    ensure_dir(&common.out)?;
    let params = TmqiParams::default();
    let mut rows = Vec::new();
    let mut select = |src: &Path, crf: &Crf| -> Result<PathBuf> {
        let map = read_radiance_file(src)?;
        let ops = Operator::default_set(crf);
        let sel = select_best_tmo(&map, &ops, &params)?;
        let name = stem(src);
        for (op, s) in ops.iter().zip(&sel.scores) {
            rows.push((name.clone(), op.name(), *s));
        }
        log::info!("{name}: {} (Q {:.4})", sel.name, sel.score.q);
        write_tone_map(&common.out, &format!("{name}_tm"), &sel.tone_map)
    };
    if is_manifest(input) {
        let mut manifest = Manifest::load(input)?;
        let crf_path = match crf {
            Some(p) => Some(p.to_path_buf()),
            None => manifest.crf.as_ref().map(|c| resolve(input, c)),
        };
        let curve = read_crf(crf_path.as_deref())?;
        for scene in &mut manifest.scenes {
            let src = resolve(input, &scene.file);
            let tm = select(&src, &curve)?;
            scene.file = absolute(&src)?;
            scene.tonemap = Some(tm.file_name().expect("file name").to_string_lossy().into_owned());
            if let Some(s) = &scene.stack {
                scene.stack = Some(absolute(&resolve(input, s))?);
            }
        }
        manifest.crf = crf_path.map(|p| absolute(&p)).transpose()?;
        manifest.save(common.out.join("manifest.json"))?;
    } else {
        select(input, &read_crf(crf)?)?;
    }
    let csv = score_csv(&rows);
    write_text(&common.out.join("scores.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn load_pairs(manifest_path: &Path, split: Split) -> Result<Vec<(ExposureStack, RadianceMap)>> {
    let manifest = Manifest::load(manifest_path)?;
    let mut pairs = Vec::new();
    for scene in manifest.scenes_in(split) {
        let stack_dir = scene.stack.as_ref().ok_or_else(|| {
            Error::Validation(format!("{}: scene {} has no exposure stack; run `expose` first", manifest_path.display(), scene.file))
        })?;
        let stack = read_stack(&resolve(manifest_path, stack_dir))?;
        let map = read_radiance_file(resolve(manifest_path, &scene.file))?;
        pairs.push((stack, normalize_hdr(&map)?.0));
    }
    Ok(pairs)
}

fn meta(role: String, scaling: ChannelScaling, input: ChannelScaling, cfg: &TrainConfig) -> CheckpointMeta {
    CheckpointMeta {
        trained: true,
        role,
        target_scale: scaling.scale,
        target_offset: scaling.offset,
        input_scale: input.scale,
        input_offset: input.offset,
        log_target: cfg.log_target,
        patch: cfg.patch,
        epochs: cfg.epochs,
    }
}

fn train_one<T: Real>(
    out: &Path,
    name: &str,
    spec: NetworkSpec,
    cfg: &TrainConfig,
    train: &SampleSet,
    val: &SampleSet,
    meta: CheckpointMeta,
) -> Result<()> {
    if train.is_empty() {
        return Err(Error::Validation("no training samples; check the manifest's train split".into()));
    }
    let mut t = Trainer::<T>::new(spec, cfg.clone())?;
    t.fit(train, Some(val))?;
    write_text(&out.join(format!("{name}_loss.csv")), &loss_curve_csv(t.curve()))?;
    let last = t.curve().last().map(|r| r.loss).unwrap_or(f64::NAN);
    save_checkpoint_file(out.join(format!("{name}.ckpt")), t.network(), &meta)?;
    println!("{name}: {} samples, final loss {last:.6e}", train.len());
    Ok(())
}

fn train_ldr2hdr<T: Real>(out: &Path, manifest: &Path, cfg: &TrainConfig) -> Result<()> {
    ensure_dir(out)?;
    let train = load_pairs(manifest, Split::Train)?;
    let val = load_pairs(manifest, Split::Val)?;
    for c in Channel::RGB {
        let tset = ldr2hdr_samples(&train, c, cfg.patch, cfg.log_target)?;
        let vset = ldr2hdr_samples(&val, c, cfg.patch, cfg.log_target)?;
        let m = meta(format!("ldr2hdr:{c}"), ChannelScaling::IDENTITY, ChannelScaling::IDENTITY, cfg);
        let seed = cfg.seed;
        train_one::<T>(out, &format!("ldr2hdr_{c}"), build_ldr2hdr_net(c, seed), cfg, &tset, &vset, m)?;
    }
    Ok(())
}

fn load_decompositions(manifest_path: &Path, split: Split) -> Result<Vec<crate::pipeline::TonemapDecomposition>> {
    let manifest = Manifest::load(manifest_path)?;
    let mut out = Vec::new();
    for scene in manifest.scenes_in(split) {
        let tm_path = scene.tonemap.as_ref().ok_or_else(|| {
            Error::Validation(format!("{}: scene {} has no tone map; run `select-tmo` first", manifest_path.display(), scene.file))
        })?;
        let map = read_radiance_file(resolve(manifest_path, &scene.file))?;
        let tm = read_tone_map(&resolve(manifest_path, tm_path))?;
        out.push(decompose_tonemap_channels(&normalize_hdr(&map)?.0, &tm)?);
    }
    Ok(out)
}

fn train_tonemap<T: Real>(out: &Path, manifest: &Path, cfg: &TrainConfig) -> Result<()> {
    ensure_dir(out)?;
    let train = load_decompositions(manifest, Split::Train)?;
    let val = load_decompositions(manifest, Split::Val)?;
    for c in Channel::LAB {
        let tset = tonemap_samples(&train, c, cfg.patch)?;
        let vset = tonemap_samples(&val, c, cfg.patch)?;
        let s = ChannelScaling::for_channel(c);
        let m = meta(format!("tonemap:{c}"), s, s, cfg);
        train_one::<T>(out, &format!("tonemap_{c}"), build_tonemap_net(c, cfg.seed), cfg, &tset, &vset, m)?;
    }
    Ok(())
}

fn cmd_search<T: Real>(
    out: &Path,
    manifest: &Path,
    arch: Arch,
    channel: Channel,
    lrs: &[f64],
    dropouts: &[f64],
    cfg: &TrainConfig,
) -> Result<()> {
    ensure_dir(out)?;
    let (train, mut val, spec) = match arch {
        Arch::Ldr2hdr => {
            let mk = |s| ldr2hdr_samples(&load_pairs(manifest, s)?, channel, cfg.patch, cfg.log_target);
            (mk(Split::Train)?, mk(Split::Val)?, build_ldr2hdr_net(channel, cfg.seed))
        }
        Arch::Tonemap => {
            let mk = |s| tonemap_samples(&load_decompositions(manifest, s)?, channel, cfg.patch);
            (mk(Split::Train)?, mk(Split::Val)?, build_tonemap_net(channel, cfg.seed))
        }
    };
    if val.is_empty() {
        log::warn!("manifest has no validation scenes; scoring on the training set");
        val = train.clone();
    }
    let mut configs = Vec::new();
    for &dropout_p in dropouts {
        for &lr in lrs {
            let c = TrainConfig { lr, dropout_p, ..cfg.clone() };
            c.validate()?;
            configs.push((spec.clone(), c));
        }
    }
    if configs.is_empty() {
        return Err(Error::Parameter("search needs at least one configuration".into()));
    }
    let ranked = hyperparam_search::<T>(&configs, &train, &val)?;
    let mut csv = String::from("rank,config_id,lr,dropout,val_error,loss_epoch1,loss_epoch2\n");
    for (rank, r) in ranked.iter().enumerate() {
        let c = &configs[r.config_id].1;
        csv += &format!(
            "{},{},{},{},{:.9e},{:.9e},{:.9e}\n",
            rank + 1,
            r.config_id,
            c.lr,
            c.dropout_p,
            r.val_error,
            r.train_curve[0],
            r.train_curve[1]
        );
    }
    write_text(&out.join("search.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn load_nets<T: Real>(dir: &Path, prefix: &str, channels: &[Channel]) -> Result<(Vec<Network<T>>, CheckpointMeta)> {
    let mut nets = Vec::new();
    let mut first = None;
    for c in channels {
        let (net, m) = load_checkpoint_file::<T>(dir.join(format!("{prefix}_{c}.ckpt")))?;
        nets.push(net);
        first.get_or_insert(m);
    }
    Ok((nets, first.expect("at least one channel")))
}

fn run_ldr2hdr<T: Real>(dir: &Path, stack: &ExposureStack, scale: f64) -> Result<RadianceMap> {
    let (mut nets, m) = load_nets::<T>(dir, "ldr2hdr", &Channel::RGB)?;
    infer_ldr2hdr(&mut nets, stack, m.patch.max(8), m.log_target, scale)
}

fn run_tonemap<T: Real>(dir: &Path, map: &RadianceMap) -> Result<ToneMap> {
    let (mut nets, m) = load_nets::<T>(dir, "tonemap", &Channel::LAB)?;
    infer_tonemap(&mut nets, &normalize_hdr(map)?.0, m.patch.max(8))
}

fn cmd_gradcheck(common: &Common, arch: Arch, tolerance: f64, step: f64, size: usize, batch: usize) -> Result<()> {
    if size == 0 || batch == 0 {
        return Err(Error::Parameter("size and batch must be positive".into()));
    }
    let seed = common.seed.unwrap_or(0);
    let spec = match arch {
        Arch::Ldr2hdr => build_ldr2hdr_net(Channel::G, seed),
        Arch::Tonemap => build_tonemap_net(Channel::LBase, seed),
    };
    let net = Network::<f64>::new(spec.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::StandardNormal;
    use rand_distr::Distribution;
    let x = Tensor4::from_fn([batch, spec.input_depth(), size, size], |_| normal.sample(&mut rng));
    let y = Tensor4::from_fn([batch, 1, size, size], |_| normal.sample(&mut rng));
    let cfg = GradCheckConfig {
        h: step,
        tolerance,
        seed,
        ..GradCheckConfig::default()
    };
    let report = grad_check(&net, &x, &y, &cfg)?;
    println!("{report}");
    if common.out != Path::new(".") {
        ensure_dir(&common.out)?;
        write_text(&common.out.join("gradcheck.txt"), &format!("{report}\n"))?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Error::Validation(format!("gradient check failed for {}", report.failing_layers().join(", "))))
    }
}

