use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use loadlens::features::{correlation_matrix, extract_features, read_features_csv, write_features_csv};
use loadlens::ingest::{accel_magnitude, parse_accel_csv, parse_rr_csv, parse_sessions_csv, MagnitudeSeries};
use loadlens::learn::{kmeans, Intensity, KMeansConfig};
use loadlens::momentplane::{PlaneExport, Trajectory, ZoneParams};
use loadlens::stats::{bootstrap, sliding_windows, write_windows_csv};
use loadlens::synth::Protocol;
use loadlens::{Feature, SessionFeatures};
use serde::Serialize;

use crate::failure::{config, CmdResult, OrFail};
use crate::manifest::{beside, Manifest};
use crate::{Channel, ClusterArgs, CorrelateArgs, FeaturesArgs, MomentsArgs, PlaneArgs};

pub fn create(path: &Path) -> CmdResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).or_fail(format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).or_fail(format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CmdResult {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).or_fail(format!("cannot write {}", path.display()))?;
    writeln!(w).and_then(|_| w.flush()).or_fail(format!("cannot write {}", path.display()))
}

pub fn read_features(path: &Path) -> CmdResult<Vec<SessionFeatures>> {
    let f = File::open(path).or_fail(format!("cannot open {}", path.display()))?;
    read_features_csv(BufReader::new(f)).or_fail(format!("cannot read features from {}", path.display()))
}

pub fn parse_columns(list: &str) -> CmdResult<Vec<Feature>> {
    let cols = list
        .split(',')
        .map(|s| s.trim().parse::<Feature>())
        .collect::<Result<Vec<_>, _>>()
        .or_fail("invalid column list")?;
    if cols.is_empty() {
        return Err(config("no columns selected"));
    }
    Ok(cols)
}

fn load_series(input: &Path, channel: Channel, center: bool) -> CmdResult<MagnitudeSeries> {
    let context = || format!("cannot read {}", input.display());
    match channel {
        Channel::Accel => {
            let samples = parse_accel_csv(input).or_fail(context())?;
            accel_magnitude(&samples, center).or_fail(context())
        }
        Channel::Rr => {
            if center {
                return Err(config("--center applies to the accel channel only"));
            }
            Ok(MagnitudeSeries::from_rr(&parse_rr_csv(input).or_fail(context())?))
        }
    }
}

pub fn moments(args: &MomentsArgs) -> CmdResult {
    let series = load_series(&args.input, args.channel, args.center)?;
    let windows = sliding_windows(&series, args.window, args.stride).or_fail("cannot window the series")?;
    let mut w = create(&args.out)?;
    write_windows_csv(&mut w, &windows)
        .and_then(|_| w.flush())
        .or_fail(format!("cannot write {}", args.out.display()))?;
    drop(w);
    Manifest::new("moments", None, args)
        .inputs([args.input.as_path()])?
        .outputs([args.out.as_path()])?
        .write(&beside(&args.out))
}

pub fn plane(args: &PlaneArgs) -> CmdResult {
    if !(args.radius > 0.0 && args.band > 0.0) {
        return Err(config("--radius and --band must be positive"));
    }
    let series = load_series(&args.input, Channel::Rr, false)?;
    let windows = sliding_windows(&series, args.window, args.stride).or_fail("cannot window the series")?;
    let marks = match &args.protocol {
        Some(name) => Protocol::preset(name).or_fail("invalid --protocol")?.phase_marks(),
        None => Vec::new(),
    };
    let traj = Trajectory::from_windows(&windows, marks);
    if traj.points.is_empty() {
        return Err(crate::failure::fail(
            crate::failure::Kind::Numeric,
            anyhow::anyhow!("every window is degenerate [AllWindowsDegenerate]"),
        ));
    }
    let cloud = match (args.bootstrap, windows.iter().rev().find(|w| !w.is_degenerate())) {
        (0, _) | (_, None) => None,
        (b, Some(last)) => {
            let values = &series.value[last.start_index..last.start_index + last.length];
            let mut c = bootstrap(values, b, args.seed).or_fail("bootstrap failed")?;
            c.source_window = Some(last.start_index);
            Some(c)
        }
    };
    let params = ZoneParams { radius: args.radius, band: args.band };
    write_json(&args.out, &PlaneExport::build(&traj, cloud.as_ref(), params))?;
    Manifest::new("plane", Some(args.seed), args)
        .inputs([args.input.as_path()])?
        .outputs([args.out.as_path()])?
        .write(&beside(&args.out))
}

pub fn features(args: &FeaturesArgs) -> CmdResult {
    let records = parse_sessions_csv(&args.sessions).or_fail(format!("cannot read {}", args.sessions.display()))?;
    let mut rows = Vec::with_capacity(records.len());
    let mut inputs: Vec<PathBuf> = vec![args.sessions.clone()];
    for r in &records {
        let id = &r.meta.session_id;
        let accel = parse_accel_csv(&r.accel_file).or_fail(format!("session {id}: accelerometer file"))?;
        let rr = parse_rr_csv(&r.rr_file).or_fail(format!("session {id}: heartbeat file"))?;
        let mag = accel_magnitude(&accel, args.center).or_fail(format!("session {id}"))?;
        rows.push(extract_features(&r.meta, &mag, &rr).or_fail(format!("session {id}"))?);
        inputs.push(r.accel_file.clone());
        inputs.push(r.rr_file.clone());
    }
    let mut w = create(&args.out)?;
    write_features_csv(&mut w, &rows)
        .and_then(|_| w.flush())
        .or_fail(format!("cannot write {}", args.out.display()))?;
    drop(w);
    log::info!("{} sessions -> {}", rows.len(), args.out.display());
    Manifest::new("features", None, args)
        .inputs(inputs.iter().map(PathBuf::as_path))?
        .outputs([args.out.as_path()])?
        .write(&beside(&args.out))
}

pub fn correlate(args: &CorrelateArgs) -> CmdResult {
    let rows = read_features(&args.features)?;
    let cols = match &args.columns {
        Some(list) => parse_columns(list)?,
        None => Feature::ALL.to_vec(),
    };
    let m = correlation_matrix(&rows, &cols).or_fail("cannot correlate")?;
    let mut w = create(&args.out)?;
    m.write_csv(&mut w)
        .and_then(|_| w.flush())
        .or_fail(format!("cannot write {}", args.out.display()))?;
    drop(w);
    Manifest::new("correlate", None, args)
        .inputs([args.features.as_path()])?
        .outputs([args.out.as_path()])?
        .write(&beside(&args.out))
}

#[derive(Serialize)]
struct ClusteredSession<'a> {
    session_id: &'a str,
    activity: &'a str,
    cluster: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    intensity: Option<Intensity>,
}

#[derive(Serialize)]
struct ClusterOutput<'a> {
    k: usize,
    columns: Vec<&'static str>,
    centroids: &'a [Vec<f64>],
    #[serde(skip_serializing_if = "Option::is_none")]
    intensity: Option<&'a [Intensity]>,
    sessions: Vec<ClusteredSession<'a>>,
    skipped_sessions: usize,
    inertia_history: &'a [f64],
    iterations: usize,
}

pub fn cluster(args: &ClusterArgs) -> CmdResult {
    let rows = read_features(&args.features)?;
    let cols = parse_columns(&args.columns)?;
    let (kept, points): (Vec<&SessionFeatures>, Vec<Vec<f64>>) = rows
        .iter()
        .filter_map(|r| Some((r, cols.iter().map(|&c| r.get(c)).collect::<Option<Vec<f64>>>()?)))
        .unzip();
    let cfg = KMeansConfig {
        k: args.k,
        seed: args.seed,
        max_iter: args.max_iter,
        tol: args.tol,
        intensity_column: cols.iter().position(|&c| c == Feature::AccStd),
    };
    let result = kmeans(&points, &cfg).or_fail("clustering failed")?;
    let out = ClusterOutput {
        k: result.k,
        columns: cols.iter().map(|c| c.name()).collect(),
        centroids: &result.centroids,
        intensity: result.intensity.as_deref(),
        sessions: kept
            .iter()
            .zip(&result.assignments)
            .map(|(r, &a)| ClusteredSession {
                session_id: &r.session_id,
                activity: r.activity.as_str(),
                cluster: a,
                intensity: result.intensity.as_ref().map(|l| l[a]),
            })
            .collect(),
        skipped_sessions: rows.len() - kept.len(),
        inertia_history: &result.inertia_history,
        iterations: result.iterations,
    };
    write_json(&args.out, &out)?;
    Manifest::new("cluster", Some(args.seed), args)
        .inputs([args.features.as_path()])?
        .outputs([args.out.as_path()])?
        .write(&beside(&args.out))
}
