//! Command-line front end. `main` parses [`Cli`] and calls [`run`].
//!
//! Image inputs ending in `.lab` are expanded to full size; other paths are
//! read as PNG. Commands that need block data (`pipeline-run`, `search`)
//! read `.lab` directly, or a PNG of the low-resolution observation with
//! `--step`.

pub mod figures;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use resonant_sr::codec::{compress, expand, read_lab, write_lab};
use resonant_sr::deconv::{
    deconvolve, motion_psf, sweep, DeconvSettings, NoiseMode, Source, SweepSettings, MAX_LENGTH,
};
use resonant_sr::pipeline::{
    import_parameter_matrix, parse, parse_matrix_rows, preset, run_stages, serialize,
};
use resonant_sr::raster::{psnr, resize_to, ResizeMethod};
use resonant_sr::search::{optimize_with_progress, threshold_grid, SearchConfig};
use resonant_sr::sparsity::{
    builtin_filters, coherence, decay_csv, decay_curve, estimate_rip_delta, filter, gaussian_matrix,
    ista_inpaint_with_trace, parse_dense_matrix, random_mask, topk_approx, SparseProblem,
};
use resonant_sr::{BlockAverageImage, PipelineSpec, RasterImage, Stage};
use resonant_service::ServiceConfig;

#[derive(Parser, Debug)]
#[command(name = "resonant", version, about = "Super-resolution toolkit for block-averaged images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Seed for every random choice
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format; defaults to the extension of the output path
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Png,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct MotionArgs {
    /// Motion length in pixels (0 and 1 are the identity)
    #[arg(long = "L", value_name = "L", default_value_t = 0)]
    pub length: u32,
    /// Motion angle in degrees, counterclockwise from horizontal
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
}

#[derive(Args, Debug, Clone)]
pub struct FilterArgs {
    /// Magnification applied before deconvolution
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Optics model: DVC or OFC
    #[arg(long, default_value = "DVC")]
    pub source: Source,
    /// Restoration strength, 0..=300 (25 per Richardson-Lucy iteration)
    #[arg(long, default_value_t = 100)]
    pub amount: u32,
    /// Noise prefilter: NO, YES, DO (dark only), LO (light only) or AUTO
    #[arg(long, default_value = "NO")]
    pub noise: NoiseMode,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Block-average a PNG into a .lab file
    Compress {
        /// Source PNG
        input: PathBuf,
        /// Destination .lab (or --out)
        #[arg(required_unless_present = "out")]
        output: Option<PathBuf>,
        /// Block side: 2, 3 or 4
        #[arg(long, default_value_t = 4)]
        step: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Expand a .lab file to a block-constant PNG
    Expand {
        /// Source .lab
        input: PathBuf,
        /// Destination PNG (or --out)
        #[arg(required_unless_present = "out")]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run one conditional interpolation pass
    Interp {
        /// Source image (.lab or PNG)
        input: PathBuf,
        /// Destination PNG (or --out)
        #[arg(required_unless_present = "out")]
        output: Option<PathBuf>,
        /// 1 works on codec blocks, 2 on 2x2 cells
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        level: u8,
        /// Use the asymmetric 3x3 split (LEVEL 1, step 3 only)
        #[arg(long)]
        step3: bool,
        /// Block step for PNG input; .lab input uses its header
        #[arg(long)]
        step: Option<usize>,
        /// Horizontal-neighbour threshold, 0 (never) to 255 (always)
        #[arg(long, default_value_t = 255)]
        p2: u8,
        /// Vertical-neighbour threshold
        #[arg(long, default_value_t = 255)]
        p3: u8,
        /// Diagonal-neighbour threshold
        #[arg(long, default_value_t = 255)]
        p4: u8,
        #[command(flatten)]
        common: Common,
    },
    /// Build a motion-blur kernel
    Psf {
        #[command(flatten)]
        motion: MotionArgs,
        /// Print the kernel to stdout (the default without --out)
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Deconvolve an image with one motion kernel
    Deconv {
        /// Source image (.lab or PNG)
        input: PathBuf,
        /// Destination PNG (or --out)
        #[arg(required_unless_present = "out")]
        output: Option<PathBuf>,
        #[command(flatten)]
        motion: MotionArgs,
        #[command(flatten)]
        filter: FilterArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Deconvolve over a grid of lengths and angles
    #[command(alias = "fig-sweep")]
    Sweep {
        /// Source image (.lab or PNG)
        input: PathBuf,
        /// Lengths: a..b, a..b:step or a,b,c
        #[arg(long = "L", value_name = "RANGE", default_value = "0..20")]
        lengths: String,
        /// Angles in degrees: a..b (step 5), a..b:step or a,b,c
        #[arg(long, value_name = "RANGE", default_value = "0..175")]
        theta: String,
        #[command(flatten)]
        filter: FilterArgs,
        /// Reference image at original size; adds objective columns
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Regularization weight for the objective
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// Largest thumbnail side in the PNG grid
        #[arg(long, default_value_t = 64)]
        thumb: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run a pipeline on block data
    PipelineRun {
        /// Source .lab, or a PNG observation with --step
        input: PathBuf,
        /// Destination PNG (or --out)
        #[arg(required_unless_present = "out")]
        output: Option<PathBuf>,
        /// Pipeline text file
        #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
        pipeline: Option<PathBuf>,
        /// Shipped preset name
        #[arg(long)]
        preset: Option<String>,
        /// Block step when the input is a PNG observation
        #[arg(long)]
        step: Option<usize>,
        /// Also write the result area-averaged to the original size
        #[arg(long, value_name = "PATH")]
        view: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Convert a parameter matrix CSV to pipeline text
    PipelineImport {
        /// Matrix CSV: three columns per row
        input: PathBuf,
        /// Pipeline name; defaults to the file stem
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Search for a pipeline that matches a reference
    Search {
        /// Source .lab, or a PNG observation with --step
        #[arg(long)]
        input: PathBuf,
        /// Reference PNG at the original size
        #[arg(long)]
        reference: PathBuf,
        /// Block step when the input is a PNG observation
        #[arg(long)]
        step: Option<usize>,
        /// Regularization weight
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// Stop once the objective is at or below this value
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        /// Most search occurrences
        #[arg(long, default_value_t = 4)]
        max_occurrences: usize,
        /// Passes over the parameter blocks per occurrence
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        /// Spacing of the threshold grid (always ends at 255)
        #[arg(long, default_value_t = 5)]
        threshold_step: u8,
        /// Motion lengths to try (default 0..=20)
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<u32>,
        /// Motion angles to try (default 0..=175 by 5)
        #[arg(long, value_delimiter = ',')]
        thetas: Vec<f64>,
        /// Amounts to try (default 0..=300 by 25)
        #[arg(long, value_delimiter = ',')]
        amounts: Vec<u32>,
        /// Sources to try (default DVC,OFC)
        #[arg(long, value_delimiter = ',')]
        sources: Vec<Source>,
        /// Noise modes to try (default all)
        #[arg(long, value_delimiter = ',')]
        noises: Vec<NoiseMode>,
        /// Magnifications to try first (default 1,2,2.25,3,3.5,4)
        #[arg(long, value_delimiter = ',')]
        gammas: Vec<f64>,
        /// Write the objective trace as CSV
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        /// Write the final image
        #[arg(long, value_name = "PATH")]
        image: Option<PathBuf>,
        /// No progress on stderr
        #[arg(long)]
        quiet: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Keep the largest wavelet coefficients and reconstruct
    #[command(alias = "fig-topk")]
    WaveletTopk {
        /// Source image (.lab or PNG)
        input: PathBuf,
        /// Wavelet basis
        #[arg(long, default_value = "villasenor-1")]
        basis: String,
        /// Percentages to keep; several give a strip (PNG) or rows (CSV)
        #[arg(long, value_delimiter = ',', default_value = "10")]
        percent: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Sorted wavelet coefficient magnitudes
    #[command(alias = "fig-decay")]
    WaveletDecay {
        /// Source image (.lab or PNG)
        input: PathBuf,
        /// Bases to compare (default all registered)
        #[arg(long, value_delimiter = ',')]
        basis: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Fill in a random subset of pixels with ISTA
    Inpaint {
        /// Source image (.lab or PNG)
        input: PathBuf,
        /// Destination PNG (or --out)
        #[arg(required_unless_present = "out")]
        output: Option<PathBuf>,
        /// Fraction of pixels kept, drawn with --seed
        #[arg(long, default_value_t = 0.5)]
        known: f64,
        /// Wavelet basis
        #[arg(long, default_value = "villasenor-1")]
        basis: String,
        /// Sparsity weight
        #[arg(long, default_value_t = 1e-2)]
        mu: f64,
        /// ISTA iterations
        #[arg(long, default_value_t = 500)]
        iterations: usize,
        /// Write the per-iteration objective as CSV
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Mutual coherence of a matrix
    Coherence {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Restricted isometry constant by support enumeration
    Rip {
        #[command(flatten)]
        matrix: MatrixArgs,
        /// Sparsity level
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Start the HTTP service
    Serve {
        /// Listening port
        #[arg(long, default_value_t = resonant_service::DEFAULT_PORT)]
        port: u16,
        /// Idle session lifetime in seconds
        #[arg(long, default_value_t = resonant_service::DEFAULT_TTL.as_secs())]
        ttl: u64,
        /// Request body limit in bytes
        #[arg(long, default_value_t = resonant_service::DEFAULT_MAX_UPLOAD)]
        max_upload: usize,
    },
}

#[derive(Args, Debug, Clone)]
pub struct MatrixArgs {
    /// Matrix file: one row per line
    #[arg(long, conflicts_with_all = ["rows", "cols"])]
    pub matrix: Option<PathBuf>,
    /// Rows of a Gaussian matrix drawn with --seed
    #[arg(long, default_value_t = 8)]
    pub rows: usize,
    /// Columns of a Gaussian matrix
    #[arg(long, default_value_t = 12)]
    pub cols: usize,
}

fn is_lab(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("lab"))
}

fn read_block_file(path: &Path) -> Result<BlockAverageImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    read_lab(&mut &bytes[..]).with_context(|| format!("decoding {}", path.display()))
}

/// `.lab` expanded to full size, or a PNG as is.
pub fn load_raster(path: &Path) -> Result<RasterImage> {
    if is_lab(path) {
        return Ok(expand(&read_block_file(path)?));
    }
    RasterImage::load_png(path).with_context(|| format!("loading {}", path.display()))
}

/// `.lab` as is, or a PNG observation block-expanded with `step`.
pub fn load_blocks(path: &Path, step: Option<usize>) -> Result<BlockAverageImage> {
    if is_lab(path) {
        return read_block_file(path);
    }
    let step = step.ok_or_else(|| anyhow!("{} is a PNG observation; pass --step", path.display()))?;
    let observation = RasterImage::load_png(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(BlockAverageImage::from_observation(&observation, step)?)
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn save_png(image: &RasterImage, path: &Path) -> Result<()> {
    write_file(path, image.encode_png()?)
}

fn output_path(positional: Option<PathBuf>, common: &Common) -> Result<PathBuf> {
    positional
        .or_else(|| common.out.clone())
        .ok_or_else(|| anyhow!("no output path"))
}

/// Explicit `--format`, else the extension of `--out`, else `fallback`.
fn format_of(common: &Common, fallback: Format) -> Format {
    common.format.unwrap_or_else(|| {
        match common.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("png") => Format::Png,
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => fallback,
        }
    })
}

fn require_png(common: &Common, command: &str) -> Result<()> {
    if common.format == Some(Format::Csv) {
        bail!("{command} writes PNG only");
    }
    Ok(())
}

/// Writes text to `--out`, or stdout without one.
fn emit_text(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn axis(field: &str, text: &str, step: f64, max: f64) -> Result<Vec<f64>> {
    resonant_service::parse_axis(field, text, step, 0.0, max).map_err(|e| anyhow!("{}", e.message))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compress { input, output, step, common } => {
            let image = RasterImage::load_png(&input).with_context(|| format!("loading {}", input.display()))?;
            let blocks = compress(&image, step)?;
            let path = output_path(output, &common)?;
            let mut file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_lab(&blocks, &mut file)?;
            Ok(())
        }
        Command::Expand { input, output, common } => {
            require_png(&common, "expand")?;
            save_png(&expand(&read_block_file(&input)?), &output_path(output, &common)?)
        }
        Command::Interp { input, output, level, step3, step, p2, p3, p4, common } => {
            require_png(&common, "interp")?;
            let (image, step) = if is_lab(&input) {
                let blocks = read_block_file(&input)?;
                if step.is_some_and(|s| s != blocks.step()) {
                    bail!("--step {} disagrees with the .lab step {}", step.unwrap_or(0), blocks.step());
                }
                (expand(&blocks), blocks.step())
            } else {
                (load_raster(&input)?, step.unwrap_or(if step3 { 3 } else { 4 }))
            };
            let stage = match (level, step3) {
                (2, true) => bail!("--step3 applies to LEVEL 1 only"),
                (2, false) => Stage::level2(p2, p3, p4),
                (_, true) => Stage::level1_step3(p2, p3, p4),
                (_, false) => Stage::level1(p2, p3, p4),
            };
            let out = run_stages(&image, &[stage], step)?;
            save_png(&out, &output_path(output, &common)?)
        }
        Command::Psf { motion, print, common } => {
            let k = motion_psf(motion.length, motion.theta)?;
            if print || common.out.is_none() {
                println!("L={} theta={}: {}x{} (rows x cols), sum {:.4}", k.length, k.theta, k.height, k.width, k.sum());
                for r in 0..k.height {
                    let row: Vec<String> = (0..k.width).map(|c| format!("{:.4}", k.at(r, c))).collect();
                    println!("{}", row.join(" "));
                }
            }
            if let Some(path) = &common.out {
                match format_of(&common, Format::Csv) {
                    Format::Csv => {
                        let mut text = String::new();
                        for r in 0..k.height {
                            let row: Vec<String> = (0..k.width).map(|c| k.at(r, c).to_string()).collect();
                            text.push_str(&row.join(","));
                            text.push('\n');
                        }
                        write_file(path, text)?;
                    }
                    Format::Png => {
                        // 16x magnified, scaled so the largest tap is white
                        let peak = k.taps.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
                        let img = RasterImage::from_fn(k.width * 16, k.height * 16, 1, |_, x, y| {
                            (k.at(y / 16, x / 16) / peak * 255.0).round() as u8
                        })?;
                        save_png(&img, path)?;
                    }
                }
            }
            Ok(())
        }
        Command::Deconv { input, output, motion, filter: f, common } => {
            require_png(&common, "deconv")?;
            let settings = DeconvSettings {
                gamma: f.gamma,
                length: motion.length,
                theta: motion.theta,
                source: f.source,
                amount: f.amount,
                noise: f.noise,
            };
            let out = deconvolve(&load_raster(&input)?, &settings)?;
            save_png(&out, &output_path(output, &common)?)
        }
        Command::Sweep { input, lengths, theta, filter: f, reference, lambda, thumb, common } => {
            let lengths: Vec<u32> = axis("L", &lengths, 1.0, MAX_LENGTH as f64)?
                .into_iter()
                .map(|v| if v.fract() == 0.0 { Ok(v as u32) } else { Err(anyhow!("L value {v} is not an integer")) })
                .collect::<Result<_>>()?;
            let thetas = axis("theta", &theta, 5.0, 179.0)?;
            let image = load_raster(&input)?;
            let reference = reference.as_deref().map(load_raster).transpose()?;
            let fixed = SweepSettings {
                gamma: f.gamma,
                source: f.source,
                amount: f.amount,
                noise: f.noise,
            };
            let grid = sweep(&image, &lengths, &thetas, &fixed, reference.as_ref().map(|r| (r, lambda)))?;
            match format_of(&common, Format::Csv) {
                Format::Csv => {
                    let mut text = String::from("L,theta,fidelity,R,total\n");
                    for c in &grid.cells {
                        match c.objective {
                            Some(o) => text.push_str(&format!("{},{},{},{},{}\n", c.length, c.theta, o.fidelity, o.regularizer, o.total)),
                            None => text.push_str(&format!("{},{},,,\n", c.length, c.theta)),
                        }
                    }
                    emit_text(&common, &text)
                }
                Format::Png => {
                    let path = common.out.as_ref().ok_or_else(|| anyhow!("PNG output needs --out"))?;
                    let thumbs = grid
                        .cells
                        .iter()
                        .map(|c| {
                            let side = c.image.width().max(c.image.height());
                            if side <= thumb {
                                return Ok(c.image.clone());
                            }
                            let s = thumb as f64 / side as f64;
                            let w = ((c.image.width() as f64 * s).round() as usize).max(1);
                            let h = ((c.image.height() as f64 * s).round() as usize).max(1);
                            Ok(resize_to(&c.image, w, h, ResizeMethod::AreaAverage)?)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    save_png(&figures::tile(&thumbs, thetas.len())?, path)
                }
            }
        }
        Command::PipelineRun { input, output, pipeline, preset: name, step, view, common } => {
            require_png(&common, "pipeline-run")?;
            let spec: PipelineSpec = match (&pipeline, &name) {
                (Some(path), _) => {
                    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    parse(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                (None, Some(n)) => preset(n)?,
                (None, None) => bail!("pass --pipeline or --preset"),
            };
            let blocks = load_blocks(&input, step)?;
            spec.validate_for_step(blocks.step())?;
            let out = run_stages(&expand(&blocks), &spec.stages, blocks.step())?;
            save_png(&out, &output_path(output, &common)?)?;
            if let Some(path) = view {
                let v = resize_to(&out, blocks.orig_width(), blocks.orig_height(), ResizeMethod::AreaAverage)?;
                save_png(&v, &path)?;
            }
            Ok(())
        }
        Command::PipelineImport { input, name, common } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let name = name.unwrap_or_else(|| input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
            let spec = import_parameter_matrix(&name, &parse_matrix_rows(&text)?)?;
            emit_text(&common, &serialize(&spec))
        }
        Command::Search {
            input,
            reference,
            step,
            lambda,
            threshold,
            max_occurrences,
            rounds,
            threshold_step,
            lengths,
            thetas,
            amounts,
            sources,
            noises,
            gammas,
            trace,
            image,
            quiet,
            common,
        } => {
            if threshold_step == 0 {
                bail!("--threshold-step must be positive");
            }
            let blocks = load_blocks(&input, step)?;
            let reference = load_raster(&reference)?;
            let mut cfg = SearchConfig {
                lambda,
                threshold,
                max_occurrences,
                rounds,
                thresholds: threshold_grid(threshold_step),
                ..SearchConfig::default()
            };
            if !lengths.is_empty() {
                cfg.lengths = lengths;
            }
            if !thetas.is_empty() {
                cfg.thetas = thetas;
            }
            if !amounts.is_empty() {
                cfg.amounts = amounts;
            }
            if !sources.is_empty() {
                cfg.sources = sources;
            }
            if !noises.is_empty() {
                cfg.noises = noises;
            }
            if !gammas.is_empty() {
                cfg.first_gammas = gammas;
            }
            let state = optimize_with_progress(&blocks, &reference, &cfg, |s| {
                if !quiet {
                    let last = s.trace.last().expect("trace starts with the initial row");
                    eprintln!("occurrence {}: total {:.3} ({} stages)", last.iteration, last.total, s.spec.stages.len());
                }
            })?;
            emit_text(&common, &serialize(&state.spec))?;
            if let Some(path) = trace {
                write_file(&path, state.trace_csv())?;
            }
            if let Some(path) = image {
                save_png(&run_stages(&expand(&blocks), &state.spec.stages, blocks.step())?, &path)?;
            }
            Ok(())
        }
        Command::WaveletTopk { input, basis, percent, common } => {
            let image = load_raster(&input)?;
            let basis = filter(&basis)?;
            let approximations = percent
                .iter()
                .map(|&p| Ok((p, topk_approx(&image, &basis, p)?)))
                .collect::<Result<Vec<_>>>()?;
            match format_of(&common, Format::Csv) {
                Format::Csv => {
                    let mut text = String::from("percent,psnr\n");
                    for (p, a) in &approximations {
                        text.push_str(&format!("{p},{}\n", psnr(a, &image)?));
                    }
                    emit_text(&common, &text)
                }
                Format::Png => {
                    let path = common.out.as_ref().ok_or_else(|| anyhow!("PNG output needs --out"))?;
                    let images: Vec<RasterImage> = approximations.into_iter().map(|(_, a)| a).collect();
                    save_png(&figures::tile(&images, images.len())?, path)
                }
            }
        }
        Command::WaveletDecay { input, basis, common } => {
            let image = load_raster(&input)?;
            let bases = if basis.is_empty() {
                builtin_filters()
            } else {
                basis.iter().map(|b| filter(b)).collect::<resonant_sr::Result<_>>()?
            };
            let series = bases
                .iter()
                .map(|b| Ok((b.name.clone(), decay_curve(&image, b)?)))
                .collect::<Result<Vec<_>>>()?;
            match format_of(&common, Format::Csv) {
                Format::Csv => {
                    let mut text = String::from("basis,rank,magnitude,cumulative\n");
                    for (name, rows) in &series {
                        for line in decay_csv(rows).lines().skip(1) {
                            text.push_str(&format!("{name},{line}\n"));
                        }
                    }
                    emit_text(&common, &text)
                }
                Format::Png => {
                    let path = common.out.as_ref().ok_or_else(|| anyhow!("PNG output needs --out"))?;
                    save_png(&figures::decay_plot(&series, 320, 240)?, path)
                }
            }
        }
        Command::Inpaint { input, output, known, basis, mu, iterations, trace, common } => {
            require_png(&common, "inpaint")?;
            let image = load_raster(&input)?;
            let mask = random_mask(image.width() * image.height(), known, common.seed)?;
            let problem = SparseProblem {
                mu,
                iterations,
                ..SparseProblem::new(mask, image.clone(), filter(&basis)?)?
            };
            let (out, traces) = ista_inpaint_with_trace(&problem)?;
            println!("psnr {:.2} dB", psnr(&out, &image)?);
            save_png(&out, &output_path(output, &common)?)?;
            if let Some(path) = trace {
                let mut text = String::from("iteration");
                for c in 0..traces.len() {
                    text.push_str(&format!(",channel{c}"));
                }
                text.push('\n');
                for i in 0..iterations {
                    text.push_str(&(i + 1).to_string());
                    for t in &traces {
                        text.push_str(&format!(",{}", t[i]));
                    }
                    text.push('\n');
                }
                write_file(&path, text)?;
            }
            Ok(())
        }
        Command::Coherence { matrix, common } => {
            let m = load_matrix(&matrix, common.seed)?;
            emit_text(&common, &format!("{}\n", coherence(&m)?))
        }
        Command::Rip { matrix, k, common } => {
            let m = load_matrix(&matrix, common.seed)?;
            emit_text(&common, &format!("{}\n", estimate_rip_delta(&m, k)?))
        }
        Command::Serve { port, ttl, max_upload } => {
            let config = ServiceConfig {
                port,
                ttl: Duration::from_secs(ttl),
                max_upload,
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(resonant_service::serve(config))?;
            Ok(())
        }
    }
}

fn load_matrix(args: &MatrixArgs, seed: u64) -> Result<resonant_sr::sparsity::Matrix> {
    match &args.matrix {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_dense_matrix(&text).with_context(|| format!("parsing {}", path.display()))
        }
        None => Ok(gaussian_matrix(args.rows, args.cols, seed)?),
    }
}
