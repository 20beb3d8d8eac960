//! Command-line entry point: detection, description, codebook training,
//! encoding, retrieval evaluation, sweeps, overlays, and filter bank export.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use densefeat::config::Config;
use densefeat::descriptor::{
    extract_patch, read_descriptors, rootsift_in_place, sift, write_descriptors, write_rows,
    ScalingRule, NORM_FILTER_THRESHOLD,
};
use densefeat::detect::zernike::{build_filter_bank, export_bank};
use densefeat::driver::DetectorDriver;
use densefeat::encode::{kmeans_train, l2_normalize, power_law, read_codebook, vlad_encode, write_codebook};
use densefeat::error::{Error, Result};
use densefeat::eval::{evaluate_retrieval, load_manifest, CODEBOOK_KMEANS_ITERS};
use densefeat::img::{load_image, save_rgb_png};
use densefeat::keypoint::{read_keypoints, write_keypoints, DetectorId};
use densefeat::plot::line_chart;
use densefeat::sweep::{chart_points, load_sweep_spec, render_tsv, run_sweep};
use densefeat::viz::visualize;

#[derive(Parser)]
#[command(name = "densefeat", version, about = "Dense local-feature detection and retrieval toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect keypoints in an image or every image in a directory.
    Detect {
        /// Detector name: dense, dense-ip, dense-l2norm, harris, frobenius,
        /// hessian, dog, zernike, mser, ssr, mser-edge, ssr-edge, fast-edge.
        detector: String,
        #[arg(long)]
        config: PathBuf,
        /// Image file or directory of .png/.pgm images.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory; one <stem>.kp file per image.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute raw patch descriptors for a keypoint file.
    Describe {
        #[arg(long)]
        kp: PathBuf,
        #[arg(long)]
        img: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = densefeat::config::DEFAULT_PATCH_SIZE)]
        patch_size: usize,
    },
    /// Train a visual codebook from descriptor files.
    TrainCodebook {
        #[arg(long = "in", num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long, default_value_t = 256)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Squared-norm threshold applied to raw descriptors before rootsift.
        #[arg(long, default_value_t = NORM_FILTER_THRESHOLD)]
        filter: f32,
    },
    /// Aggregate one descriptor file into a normalized image vector.
    Encode {
        #[arg(long)]
        cbk: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        beta: f32,
        #[arg(long, default_value_t = NORM_FILTER_THRESHOLD)]
        filter: f32,
    },
    /// Evaluate retrieval over a dataset manifest.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Also write the report to a file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one evaluation per parameter value and plot score against
    /// descriptor count.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for sweep.tsv and sweep.png.
        #[arg(long, default_value = "sweep_out")]
        out: PathBuf,
    },
    /// Draw keypoint markers over an image.
    Viz {
        #[arg(long)]
        img: PathBuf,
        #[arg(long)]
        kp: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Only draw keypoints with scale index 0.
        #[arg(long)]
        first_scale_only: bool,
    },
    /// Export the filter bank kernels as images.
    ZernikeBank {
        #[arg(long)]
        order: u32,
        #[arg(long, default_value_t = 11)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Sorted .png/.pgm files of a directory, or the single file itself.
fn list_images(input: &Path) -> Result<Vec<PathBuf>> {
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut out = Vec::new();
    let entries = std::fs::read_dir(input).map_err(|e| Error::io(input, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(input, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("png") | Some("pgm")) {
            out.push(path);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::param(format!(
            "{}: no .png or .pgm images found",
            input.display()
        )));
    }
    Ok(out)
}

fn cmd_detect(detector: &str, config: &Path, input: &Path, out: &Path) -> Result<()> {
    let id = DetectorId::from_token(detector)
        .ok_or_else(|| Error::param(format!("unknown detector '{detector}'")))?;
    let cfg = Config::load(config)?;
    let base = config.parent().unwrap_or(Path::new(""));
    let driver = DetectorDriver::from_config(id, &cfg, base)?;
    create_dir(out)?;
    for path in list_images(input)? {
        let img = load_image(&path)?;
        let kps = driver.detect(&img, Some(&path))?;
        let stem = path
            .file_stem()
            .ok_or_else(|| Error::param(format!("{}: no file stem", path.display())))?;
        let kp_path = out.join(Path::new(stem).with_extension("kp"));
        write_keypoints(&kp_path, &kps)?;
        println!("{}\t{}", path.display(), kps.len());
    }
    Ok(())
}

fn cmd_describe(kp: &Path, img_path: &Path, out: &Path, patch_size: usize) -> Result<()> {
    let img = load_image(img_path)?;
    let kps = read_keypoints(kp)?;
    let mut descs = Vec::with_capacity(kps.len());
    let mut dropped = 0usize;
    for kp in &kps {
        let family = ScalingRule::for_detector(kp.detector);
        match extract_patch(&img, kp, family, patch_size)? {
            Some(patch) => descs.push(sift(&patch)),
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("{dropped} of {} measurement regions leave the image", kps.len());
    }
    write_descriptors(out, &descs)?;
    println!("{}\t{}", out.display(), descs.len());
    Ok(())
}

/// Raw rows from disk to the encoding space: norm filter, then rootsift.
fn prepare_rows(path: &Path, filter: f32) -> Result<Vec<Vec<f32>>> {
    let (_, rows) = read_descriptors(path)?;
    Ok(rows
        .into_iter()
        .filter(|r| r.iter().map(|&v| v as f64 * v as f64).sum::<f64>() >= filter as f64)
        .map(|mut r| {
            rootsift_in_place(&mut r);
            r
        })
        .collect())
}

fn cmd_train_codebook(input: &[PathBuf], k: usize, seed: u64, out: &Path, filter: f32) -> Result<()> {
    let mut rows = Vec::new();
    for path in input {
        rows.extend(prepare_rows(path, filter)?);
    }
    let book = kmeans_train(&rows, k, seed, CODEBOOK_KMEANS_ITERS)?;
    write_codebook(out, &book)?;
    println!("{}\t{}x{}", out.display(), book.k, book.dim);
    Ok(())
}

fn cmd_encode(cbk: &Path, input: &Path, out: &Path, beta: f32, filter: f32) -> Result<()> {
    let book = read_codebook(cbk)?;
    let rows = prepare_rows(input, filter)?;
    let v = vlad_encode(&rows, &book);
    let v = l2_normalize(&power_law(&v, beta)?);
    write_rows(out, &[v.values])?;
    println!("{}\t{}", out.display(), rows.len());
    Ok(())
}

fn cmd_eval(manifest: &Path, config: &Path, out: Option<&Path>) -> Result<()> {
    let m = load_manifest(manifest)?;
    let cfg = Config::load(config)?;
    let base = config.parent().unwrap_or(Path::new(""));
    let report = evaluate_retrieval(&m, &cfg, base)?;
    let text = report.render();
    print!("{text}");
    if let Some(out) = out {
        densefeat::io::write_file(out, text.as_bytes())?;
    }
    Ok(())
}

fn cmd_sweep(manifest: &Path, spec: &Path, out: &Path) -> Result<()> {
    let m = load_manifest(manifest)?;
    let spec = load_sweep_spec(spec)?;
    let rows = run_sweep(&m, &spec)?;
    create_dir(out)?;
    let tsv = render_tsv(spec.detector, &rows);
    densefeat::io::write_file(&out.join("sweep.tsv"), tsv.as_bytes())?;
    let (w, h) = (640, 480);
    let rgb = line_chart(&chart_points(&rows), w, h);
    save_rgb_png(&out.join("sweep.png"), w, h, &rgb)?;
    print!("{tsv}");
    Ok(())
}

fn cmd_viz(img: &Path, kp: &Path, out: &Path, first_scale_only: bool) -> Result<()> {
    let drawn = visualize(img, kp, out, first_scale_only)?;
    println!("{}\t{drawn}", out.display());
    Ok(())
}

fn cmd_zernike_bank(order: u32, size: usize, out: &Path) -> Result<()> {
    let bank = build_filter_bank(order, size)?;
    create_dir(out)?;
    export_bank(&bank, out)?;
    println!("{}\t{}", out.display(), bank.filters.len());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Detect {
            detector,
            config,
            input,
            out,
        } => cmd_detect(detector, config, input, out),
        Command::Describe {
            kp,
            img,
            out,
            patch_size,
        } => cmd_describe(kp, img, out, *patch_size),
        Command::TrainCodebook {
            input,
            k,
            seed,
            out,
            filter,
        } => cmd_train_codebook(input, *k, *seed, out, *filter),
        Command::Encode {
            cbk,
            input,
            out,
            beta,
            filter,
        } => cmd_encode(cbk, input, out, *beta, *filter),
        Command::Eval {
            manifest,
            config,
            out,
        } => cmd_eval(manifest, config, out.as_deref()),
        Command::Sweep {
            manifest,
            spec,
            out,
        } => cmd_sweep(manifest, spec, out),
        Command::Viz {
            img,
            kp,
            out,
            first_scale_only,
        } => cmd_viz(img, kp, out, *first_scale_only),
        Command::ZernikeBank { order, size, out } => cmd_zernike_bank(*order, *size, out),
    }
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code() as i32);
    }
}
