//! Command-line front end.
//!
//! Every subcommand computes its outputs in memory and writes them only
//! once everything succeeded, so a failing run leaves no files behind.
//! Exit codes: 0 success, 1 bad input, 2 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::illumination::{light_height_range, HeightRange, ObjectiveSpec, SubstrateSpec};
use crate::integration::DepthMap;
use crate::io::config::{load_lights, load_scene, to_json_bytes, JobConfig, LightsConfig};
use crate::io::csv::{
    comparison_csv, measurements_csv, read_references, read_summary, summary_csv, summary_path,
};
use crate::io::fdm::{encode_fdm, load_depth_map};
use crate::io::pgm::{encode_pgm16, load_image_stack};
use crate::leveling::{level_depth_in, LevelingParams, MeanRegion};
use crate::metrology::{
    compare_measurements, compare_to_reference, measure_via, Reference, ViaMeasurement,
};
use crate::photometric::DEFAULT_SHADOW_THRESHOLD;
use crate::pipeline::reconstruct;
use crate::synthetic::{analytic_depth, render_scene};

#[derive(Debug, Parser)]
#[command(
    name = "viascope",
    version,
    about = "Photometric-stereo via inspection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic scene to one 16-bit PGM per light plus its true depth.
    Render(RenderArgs),
    /// Recover a depth map from PGM frames, one per light, in light order.
    Reconstruct(ReconstructArgs),
    /// Mean-anchored Gaussian leveling of a depth map.
    Level(LevelArgs),
    /// Slice a depth map into contours and write per-slice circle metrics.
    Inspect(InspectArgs),
    /// Compare measured depth and diameter against reference values.
    Compare(CompareArgs),
    /// Report the dark-field light height range for an objective and substrate.
    Lightcheck(LightcheckArgs),
    /// Reconstruct, level, inspect and compare in one go from a JSON job file.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct RenderArgs {
    scene: PathBuf,
    #[arg(long)]
    lights: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Overrides the scene's noise_sigma.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[arg(long)]
    lights: PathBuf,
    /// Pixel pitch, micrometers.
    #[arg(long)]
    pitch: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SHADOW_THRESHOLD)]
    shadow_threshold: f64,
    images: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegionArg {
    All,
    Surface,
}

impl From<RegionArg> for MeanRegion {
    fn from(r: RegionArg) -> Self {
        match r {
            RegionArg::All => MeanRegion::All,
            RegionArg::Surface => MeanRegion::Surface,
        }
    }
}

#[derive(Debug, Args)]
struct LevelArgs {
    /// Pixels.
    #[arg(long)]
    spatial_sigma: f64,
    /// Micrometers.
    #[arg(long)]
    depth_sigma: f64,
    /// Defaults to ceil(3 * spatial_sigma).
    #[arg(long)]
    window_radius: Option<usize>,
    #[arg(long, value_enum, default_value_t = RegionArg::All)]
    mean_region: RegionArg,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    slices: usize,
    /// Split the map into COLSxROWS tiles, one via each.
    #[arg(long, default_value = "1x1", value_parser = parse_tiles)]
    tiles: (usize, usize),
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    reference: PathBuf,
    /// Metrics CSV written by `inspect`; its summary sidecar is read.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LightcheckArgs {
    #[arg(long)]
    na: f64,
    #[arg(long)]
    n_substrate: f64,
    #[arg(long)]
    offset_mm: f64,
    #[arg(long, default_value_t = 1.0)]
    immersion: f64,
    #[arg(long, default_value_t = 1.0)]
    exit_index: f64,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
}

fn parse_tiles(s: &str) -> std::result::Result<(usize, usize), String> {
    let (c, r) = s
        .split_once(['x', 'X'])
        .ok_or("expected COLSxROWS, e.g. 2x2")?;
    let c: usize = c
        .trim()
        .parse()
        .map_err(|_| format!("bad column count `{c}`"))?;
    let r: usize = r
        .trim()
        .parse()
        .map_err(|_| format!("bad row count `{r}`"))?;
    if c == 0 || r == 0 {
        return Err("tile counts must be at least 1".into());
    }
    Ok((c, r))
}

/// Files to create, written together at the end of a subcommand.
#[derive(Default)]
struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
    dirs: Vec<PathBuf>,
}

impl Outputs {
    fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    fn ensure_dir(&mut self, dir: &Path) {
        self.dirs.push(dir.to_path_buf());
    }

    /// Writes everything or, on the first failure, removes what was written.
    fn commit(self) -> Result<()> {
        let mut created_dirs = Vec::new();
        let mut written = Vec::new();
        let result = (|| {
            for dir in &self.dirs {
                if !dir.is_dir() {
                    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                    created_dirs.push(dir.clone());
                }
            }
            for (path, bytes) in &self.files {
                std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
                written.push(path.clone());
            }
            Ok(())
        })();
        if result.is_err() {
            for path in written.iter().rev() {
                let _ = std::fs::remove_file(path);
            }
            for dir in created_dirs.iter().rev() {
                let _ = std::fs::remove_dir(dir);
            }
        }
        result
    }
}

fn render(args: &RenderArgs, out: &mut Outputs) -> Result<Vec<String>> {
    let mut scene = load_scene(&args.scene)?;
    if let Some(noise) = args.noise {
        scene.noise_sigma = noise;
        scene.validate()?;
    }
    let lights = load_lights(&args.lights)?;
    let stack = render_scene(&scene, &lights, args.seed)?;
    let truth = analytic_depth(&scene)?;
    let min = truth.z.min();
    let truth = DepthMap::new(truth.z.map(|v| v - min), truth.pixel_pitch)?;

    out.ensure_dir(&args.out_dir);
    let width = digits(stack.count());
    for (k, frame) in stack.frames().iter().enumerate() {
        out.add(
            args.out_dir.join(format!("frame_{k:0width$}.pgm")),
            encode_pgm16(frame),
        );
    }
    out.add(args.out_dir.join("truth.fdm1"), encode_fdm(&truth));
    out.add(
        args.out_dir.join("lights.json"),
        to_json_bytes(&LightsConfig::from_light_set(&lights)),
    );
    Ok(vec![format!(
        "rendered {} frames of {}x{} to {}",
        stack.count(),
        scene.width,
        scene.height,
        args.out_dir.display()
    )])
}

/// Zero-padding width for frame indices, at least 2.
fn digits(count: usize) -> usize {
    count.saturating_sub(1).to_string().len().max(2)
}

fn reconstruct_cmd(args: &ReconstructArgs, out: &mut Outputs) -> Result<Vec<String>> {
    if args.images.len() < 3 {
        return Err(Error::TooFewImages {
            got: args.images.len(),
        });
    }
    let lights = load_lights(&args.lights)?;
    let stack = load_image_stack(&args.images, args.pitch)?;
    let map = reconstruct(&stack, &lights, args.shadow_threshold)?;
    let pv = map.peak_to_valley();
    out.add(&args.out, encode_fdm(&map));
    Ok(vec![format!(
        "depth map {}x{}, peak-to-valley {pv:.4} um",
        map.width(),
        map.height()
    )])
}

fn level_cmd(args: &LevelArgs, out: &mut Outputs) -> Result<Vec<String>> {
    let params = match args.window_radius {
        Some(r) => LevelingParams::new(args.spatial_sigma, args.depth_sigma, r)?,
        None => LevelingParams::with_sigmas(args.spatial_sigma, args.depth_sigma)?,
    };
    let map = load_depth_map(&args.input)?;
    let leveled = level_depth_in(&map, &params, args.mean_region.into())?;
    out.add(&args.out, encode_fdm(&leveled));
    Ok(Vec::new())
}

fn measure_tiles(
    map: &DepthMap,
    tiles: (usize, usize),
    slices: usize,
) -> Result<Vec<ViaMeasurement>> {
    if slices < 1 {
        return Err(Error::InvalidParameter(
            "--slices must be at least 1".into(),
        ));
    }
    let (cols, rows) = tiles;
    if cols > map.width() || rows > map.height() {
        return Err(Error::InvalidParameter(format!(
            "{cols}x{rows} tiles do not fit a {}x{} map",
            map.width(),
            map.height()
        )));
    }
    map.tiles(cols, rows)
        .iter()
        .map(|t| measure_via(t, slices))
        .collect()
}

fn add_metrics(out: &mut Outputs, path: &Path, measurements: &[ViaMeasurement]) {
    out.add(path, measurements_csv(measurements).into_bytes());
    out.add(summary_path(path), summary_csv(measurements).into_bytes());
}

fn via_lines(measurements: &[ViaMeasurement]) -> Vec<String> {
    measurements
        .iter()
        .enumerate()
        .map(|(i, m)| {
            format!(
                "via {i}: depth {:.4} um, diameter {:.4} um",
                m.depth, m.diameter
            )
        })
        .collect()
}

fn inspect_cmd(args: &InspectArgs, out: &mut Outputs) -> Result<Vec<String>> {
    if summary_path(&args.out) == args.input {
        return Err(Error::InvalidParameter(
            "summary sidecar would overwrite the input".into(),
        ));
    }
    let map = load_depth_map(&args.input)?;
    let measurements = measure_tiles(&map, args.tiles, args.slices)?;
    add_metrics(out, &args.out, &measurements);
    Ok(via_lines(&measurements))
}

fn compare_cmd(args: &CompareArgs, out: &mut Outputs) -> Result<Vec<String>> {
    let references = read_references(&args.reference)?;
    let measured = read_summary(&summary_path(&args.input))?;
    let report = compare_to_reference(&measured, &references)?;
    out.add(&args.out, comparison_csv(&report).into_bytes());
    Ok(vec![format!(
        "depth MAPE {:.4}%, diameter MAPE {:.4}%",
        report.depth_mape, report.diameter_mape
    )])
}

fn lightcheck_cmd(args: &LightcheckArgs) -> Result<Vec<String>> {
    let objective = ObjectiveSpec {
        numerical_aperture: args.na,
        immersion_index: args.immersion,
    };
    let mut substrate = SubstrateSpec::new("substrate", args.n_substrate);
    substrate.exit_index = args.exit_index;
    Ok(vec![
        match light_height_range(&objective, &substrate, args.offset_mm)? {
            HeightRange::Range { min, max } => format!("h_min_mm={min:.6} h_max_mm={max:.6}"),
            HeightRange::Empty => "EMPTY".to_string(),
        },
    ])
}

fn run_cmd(args: &RunArgs, out: &mut Outputs) -> Result<Vec<String>> {
    let job = JobConfig::load(&args.config)?;
    // relative paths in the job file resolve against its directory
    let base = args.config.parent().unwrap_or(Path::new("")).to_path_buf();
    let resolve = |p: &Path| base.join(p);

    let lights = job.lights.to_light_set()?;
    let images: Vec<PathBuf> = job.images.iter().map(|p| resolve(p)).collect();
    let stack = load_image_stack(&images, job.pixel_pitch_um)?;
    let depth = reconstruct(&stack, &lights, job.shadow_threshold)?;
    out.add(resolve(&job.outputs.depth), encode_fdm(&depth));

    let inspected = match &job.leveling {
        Some(l) => {
            let defaults = LevelingParams::defaults_for(&depth);
            let depth_sigma = l.depth_sigma.unwrap_or(defaults.depth_sigma);
            let params = match l.window_radius {
                Some(r) => LevelingParams::new(l.spatial_sigma, depth_sigma, r)?,
                None => LevelingParams::with_sigmas(l.spatial_sigma, depth_sigma)?,
            };
            let leveled = level_depth_in(&depth, &params, MeanRegion::All)?;
            if let Some(p) = &job.outputs.leveled {
                out.add(resolve(p), encode_fdm(&leveled));
            }
            leveled
        }
        None => depth,
    };

    let measurements = measure_tiles(&inspected, (job.tiles[0], job.tiles[1]), job.slice_count)?;
    add_metrics(out, &resolve(&job.outputs.metrics), &measurements);
    let mut lines = via_lines(&measurements);
    if !job.references.is_empty() {
        let refs: Vec<Reference> = job.references.iter().map(|r| Reference::from(*r)).collect();
        let report = compare_measurements(&measurements, &refs)?;
        lines.push(format!(
            "depth MAPE {:.4}%, diameter MAPE {:.4}%",
            report.depth_mape, report.diameter_mape
        ));
        if let Some(p) = &job.outputs.report {
            out.add(resolve(p), comparison_csv(&report).into_bytes());
        }
    }
    Ok(lines)
}

fn dispatch(cli: &Cli, out: &mut Outputs) -> Result<Vec<String>> {
    match &cli.command {
        Command::Render(a) => render(a, out),
        Command::Reconstruct(a) => reconstruct_cmd(a, out),
        Command::Level(a) => level_cmd(a, out),
        Command::Inspect(a) => inspect_cmd(a, out),
        Command::Compare(a) => compare_cmd(a, out),
        Command::Lightcheck(a) => lightcheck_cmd(a),
        Command::Run(a) => run_cmd(a, out),
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run_cli<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    let mut outputs = Outputs::default();
    let result = dispatch(&cli, &mut outputs).and_then(|lines| outputs.commit().map(|()| lines));
    match result {
        Ok(lines) => {
            for line in lines {
                let _ = writeln!(stdout, "{line}");
            }
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_cli(
            std::iter::once("viascope").chain(args.iter().copied()),
            &mut o,
            &mut e,
        );
        (
            code,
            String::from_utf8(o).unwrap(),
            String::from_utf8(e).unwrap(),
        )
    }

    #[test]
    fn lightcheck_examples() {
        let (code, out, _) = run(&[
            "lightcheck",
            "--na",
            "0.25",
            "--n-substrate",
            "1.5",
            "--offset-mm",
            "10",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("h_min_mm=11.18"), "{out}");
        assert!(out.contains("h_max_mm=18.07"), "{out}");
        let (code, out, _) = run(&[
            "lightcheck",
            "--na",
            "0.4",
            "--n-substrate",
            "1.5",
            "--offset-mm",
            "10",
        ]);
        assert_eq!((code, out.as_str()), (0, "EMPTY\n"));
        let (code, _, err) = run(&[
            "lightcheck",
            "--na",
            "1.2",
            "--n-substrate",
            "1.5",
            "--offset-mm",
            "10",
        ]);
        assert_eq!(code, 1);
        assert!(err.contains("numerical aperture"));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(&[]).0, 1);
        assert_eq!(run(&["bogus"]).0, 1);
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn tile_parser() {
        assert_eq!(parse_tiles("2x3"), Ok((2, 3)));
        assert!(parse_tiles("0x1").is_err());
        assert!(parse_tiles("22").is_err());
    }

    #[test]
    fn frame_name_width() {
        assert_eq!(digits(7), 2);
        assert_eq!(digits(101), 3);
    }
}
