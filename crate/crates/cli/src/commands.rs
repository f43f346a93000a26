use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use hgsp_core::baseline::pca_surface_variation;
use hgsp_core::metrics::{cloud_distance, edge_prf, mean_edge_distance, EvalReport};
use hgsp_core::pointcloud::{
    add_noise, add_noise_sigma, intrinsic_resolution, intrinsic_resolution_with, load_cloud,
    save_cloud, CloudFormat,
};
use hgsp_core::resample::{
    select_points_as, write_scores_csv, write_selection_csv, KernelScorer, LhfConfig, Selection,
};
use hgsp_core::spectrum::{write_spectrum_csv, KernelConfig};
use hgsp_core::synth::{generate_cube_union, CubeUnionSpec, Cuboid};
use hgsp_core::{PointCloud, SpatialIndex};

use crate::{
    EvalDistanceArgs, EvalEdgesArgs, FormatArg, InfoArgs, MethodArg, NoiseArgs, ResampleArgs,
    SelectArg, SynthArgs,
};

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) | CliError::Invalid(m) => f.write_str(m),
        }
    }
}

impl From<hgsp_core::Error> for CliError {
    fn from(e: hgsp_core::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn input_format(path: &Path) -> CliResult<CloudFormat> {
    CloudFormat::from_path(path).ok_or_else(|| {
        invalid(format!(
            "{}: cannot tell the format from the extension (use .xyz, .ply or .csv)",
            path.display()
        ))
    })
}

fn output_format(path: &Path, explicit: Option<FormatArg>) -> CliResult<CloudFormat> {
    match explicit {
        Some(FormatArg::Xyz) => Ok(CloudFormat::Xyz),
        Some(FormatArg::Ply) => Ok(CloudFormat::Ply),
        Some(FormatArg::Csv) => Ok(CloudFormat::Csv),
        None => input_format(path),
    }
}

fn load(path: &Path) -> CliResult<PointCloud> {
    Ok(load_cloud(path, input_format(path)?)?)
}

/// Refuse to write over an input file.
fn ensure_distinct(input: &Path, output: &Path) -> CliResult {
    if let (Ok(a), Ok(b)) = (input.canonicalize(), output.canonicalize()) {
        if a == b {
            return Err(invalid(format!(
                "output {} would overwrite the input",
                output.display()
            )));
        }
    }
    Ok(())
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> CliResult {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| io_error(path, e))
}

fn parse_cuboid(text: &str) -> CliResult<Cuboid> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid(format!("cube '{text}': expected comma-separated numbers")))?;
    match values[..] {
        [x, y, z, s] => Ok(Cuboid::cube([x, y, z], s)),
        [x, y, z, sx, sy, sz] => Ok(Cuboid {
            min: [x, y, z],
            size: [sx, sy, sz],
        }),
        _ => Err(invalid(format!(
            "cube '{text}': expected x,y,z,side or x,y,z,sx,sy,sz"
        ))),
    }
}

pub fn synth(a: SynthArgs) -> CliResult {
    let format = output_format(&a.out, a.format)?;
    let cubes = if a.cubes.is_empty() {
        CubeUnionSpec::default().cubes
    } else {
        a.cubes
            .iter()
            .map(|c| parse_cuboid(c))
            .collect::<CliResult<_>>()?
    };
    let mut spec = CubeUnionSpec::new(cubes, a.spacing);
    if let Some(band) = a.edge_band {
        spec.edge_band = band;
    }
    spec.seed = a.seed;
    spec.jitter = a.jitter;
    let cloud = generate_cube_union(&spec)?;
    save_cloud(&cloud, &a.out, format)?;
    eprintln!(
        "wrote {} points ({} edge) to {}",
        cloud.len(),
        cloud.edge_count(),
        a.out.display()
    );
    Ok(())
}

pub fn noise(a: NoiseArgs) -> CliResult {
    let format = output_format(&a.out, a.format)?;
    ensure_distinct(&a.input, &a.out)?;
    let cloud = load(&a.input)?;
    let noisy = match a.sigma {
        Some(sigma) => add_noise_sigma(&cloud, sigma, a.seed)?,
        None => add_noise(&cloud, a.level, a.seed)?,
    };
    save_cloud(&noisy, &a.out, format)?;
    Ok(())
}

pub fn resample(a: ResampleArgs) -> CliResult {
    let format = output_format(&a.out, a.format)?;
    if !(a.alpha > 0.0 && a.alpha <= 1.0) {
        return Err(invalid(format!(
            "--alpha must lie in (0, 1], got {}",
            a.alpha
        )));
    }
    if a.kernel_k % 2 == 0 || a.kernel_k < 3 {
        return Err(invalid(format!(
            "--kernel-k must be odd and at least 3, got {}",
            a.kernel_k
        )));
    }
    if let Some(d) = a.kernel_d {
        if !(d > 0.0 && d.is_finite()) {
            return Err(invalid(format!("--kernel-d must be positive, got {d}")));
        }
    }
    let lhf_cfg = LhfConfig::new(a.n_a, a.n_b, a.alpha)?;
    if a.threads == Some(0) {
        return Err(invalid("--threads must be at least 1"));
    }
    if a.dump_spectrum.is_some() && !matches!(a.method, MethodArg::Hkc | MethodArg::Hkf) {
        return Err(invalid("--dump-spectrum needs --method hkc or hkf"));
    }
    for out in [
        Some(&a.out),
        a.scores.as_ref(),
        a.flags.as_ref(),
        a.dump_spectrum.as_ref(),
    ]
    .into_iter()
    .flatten()
    {
        ensure_distinct(&a.input, out)?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = a.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| invalid(format!("cannot start worker threads: {e}")))?;
    pool.install(|| run_resample(&a, format, &lhf_cfg))
}

fn run_resample(a: &ResampleArgs, format: CloudFormat, lhf_cfg: &LhfConfig) -> CliResult {
    let total = Instant::now();
    let mut stages: Vec<(&str, f64)> = Vec::new();
    let mut stage = |name: &'static str, t: Instant| stages.push((name, t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let cloud = load(&a.input)?;
    stage("load", t);

    let t = Instant::now();
    let index = SpatialIndex::build(&cloud);
    stage("index", t);

    let mut params = format!("alpha={}", a.alpha);
    let t = Instant::now();
    let scores = match a.method {
        MethodArg::Hkc | MethodArg::Hkf => {
            let d = match a.kernel_d {
                Some(d) => d,
                None => intrinsic_resolution_with(&cloud, &index)?,
            };
            let scorer = KernelScorer::new(KernelConfig::new(a.kernel_k, d)?)?;
            params.push_str(&format!(" k={} d={d}", a.kernel_k));
            if let Some(path) = &a.dump_spectrum {
                write_with(path, |w| write_spectrum_csv(scorer.basis(), w))?;
            }
            if matches!(a.method, MethodArg::Hkc) {
                scorer.hkc(&cloud, &index)?
            } else {
                scorer.hkf(&cloud, &index)?
            }
        }
        MethodArg::Lhf => {
            params.push_str(&format!(" Na={} Nb={}", lhf_cfg.n_a, lhf_cfg.n_b));
            hgsp_core::resample::lhf_scores(&cloud, &index, lhf_cfg)?
        }
        MethodArg::Pca => {
            params.push_str(&format!(" m={}", a.pca_m));
            pca_surface_variation(&cloud, &index, a.pca_m)?
        }
    };
    stage("score", t);

    let t = Instant::now();
    let selection = match a.select {
        SelectArg::Sharp => Selection::Sharp,
        SelectArg::Smooth => Selection::Smooth,
    };
    let kept = select_points_as(&scores, a.alpha, selection)?;
    let out = cloud.subset(&kept)?;
    stage("select", t);

    let t = Instant::now();
    save_cloud(&out, &a.out, format)?;
    if let Some(path) = &a.scores {
        write_with(path, |w| write_scores_csv(&scores, w))?;
    }
    if let Some(path) = &a.flags {
        write_with(path, |w| write_selection_csv(&cloud, &kept, w))?;
    }
    stage("write", t);

    eprintln!(
        "method={} select={} N={} N_r={} {params}",
        scores.method().name(),
        match selection {
            Selection::Sharp => "sharp",
            Selection::Smooth => "smooth",
        },
        cloud.len(),
        out.len()
    );
    let timing: Vec<String> = stages
        .iter()
        .map(|(n, s)| format!("{n}={:.3}s", s))
        .collect();
    eprintln!(
        "time total={:.3}s {}",
        total.elapsed().as_secs_f64(),
        timing.join(" ")
    );
    Ok(())
}

/// Cloud files in `dir`, by file name.
fn batch_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| io_error(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        if path.is_file() && CloudFormat::from_path(&path).is_some() {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(invalid(format!(
            "{}: no .xyz, .ply or .csv files",
            dir.display()
        )));
    }
    Ok(files)
}

fn report_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn print_reports(reports: &[EvalReport], batch: bool) {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if batch {
        let _ = writeln!(out, "{}", EvalReport::csv_header());
        for r in reports {
            let _ = writeln!(out, "{}", r.to_csv_row());
        }
    } else {
        for r in reports {
            let _ = write!(out, "{}", r.to_key_values());
        }
    }
}

fn edge_report(original: &PointCloud, index: &SpatialIndex, path: &Path) -> CliResult<EvalReport> {
    let labels = original
        .labels()
        .ok_or_else(|| invalid("the original cloud has no edge labels"))?;
    let resampled = load(path)?;
    // resampled points are copies of original points: recover their indices
    let mut selected = Vec::with_capacity(resampled.len());
    for p in resampled.points() {
        let (i, d2) = index.nearest_to(p).expect("original is non-empty");
        if d2 > 1e-12 {
            return Err(invalid(format!(
                "{}: point {p:?} is not a point of the original cloud",
                path.display()
            )));
        }
        selected.push(i);
    }
    let scores = edge_prf(&selected, labels)?;
    let med = mean_edge_distance(resampled.points(), &original.edge_points())?;
    Ok(EvalReport {
        name: report_name(path),
        ..Default::default()
    }
    .with_edges(scores, med))
}

pub fn eval_edges(a: EvalEdgesArgs) -> CliResult {
    let original = load(&a.original)?;
    let index = SpatialIndex::build(&original);
    let (files, batch) = match (&a.resampled, &a.batch) {
        (Some(p), _) => (vec![p.clone()], false),
        (None, Some(dir)) => (batch_files(dir)?, true),
        (None, None) => return Err(invalid("give --resampled or --batch")),
    };
    let reports = files
        .iter()
        .map(|f| edge_report(&original, &index, f))
        .collect::<CliResult<Vec<_>>>()?;
    print_reports(&reports, batch);
    Ok(())
}

pub fn eval_distance(a: EvalDistanceArgs) -> CliResult {
    let original = load(&a.original)?;
    let d_theta = match a.d_theta {
        Some(d) => d,
        None => 3.0 * intrinsic_resolution(&original)?,
    };
    let (files, batch) = match (&a.recovered, &a.batch) {
        (Some(p), _) => (vec![p.clone()], false),
        (None, Some(dir)) => (batch_files(dir)?, true),
        (None, None) => return Err(invalid("give --recovered or --batch")),
    };
    let mut reports = Vec::with_capacity(files.len());
    for f in &files {
        let recovered = load(f)?;
        let d = cloud_distance(&original, &recovered, d_theta)?;
        reports.push(
            EvalReport {
                name: report_name(f),
                ..Default::default()
            }
            .with_distance(d),
        );
    }
    print_reports(&reports, batch);
    Ok(())
}

pub fn info(a: InfoArgs) -> CliResult {
    let cloud = load(&a.input)?;
    let (lo, hi) = cloud.bounds();
    println!("points={}", cloud.len());
    match cloud.labels() {
        Some(_) => println!("edge_points={}", cloud.edge_count()),
        None => println!("edge_points=unlabelled"),
    }
    println!("min={},{},{}", lo[0], lo[1], lo[2]);
    println!("max={},{},{}", hi[0], hi[1], hi[2]);
    if cloud.len() >= 2 {
        println!("intrinsic_resolution={}", intrinsic_resolution(&cloud)?);
    }
    Ok(())
}
