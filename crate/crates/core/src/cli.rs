//! The `delone` command line.
//!
//! Exit status is 0 on success, 1 when a computation or verification fails,
//! 2 on usage errors and 3 when an input cannot be read or parsed or an
//! output cannot be written.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::generators::{generate, GeneratorSpec};
use crate::geom::{Point, PointSet, Window};
use crate::matching::{bottleneck_match_with, order_preserving_match, DisplacementMap, MatchPolicy};
use crate::rectify::{build_plan, source_separation, GeneralPositionParams, HomeoPlan};
use crate::render::{render_scene, RenderStyle};
use crate::verify::{verify_plan, VerificationReport, VerifyOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("{0}")]
    Failed(String),
    #[error("verification failed, see {0}")]
    VerificationFailed(PathBuf),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Parse { .. } => 3,
            CliError::Failed(_) | CliError::VerificationFailed(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "delone", version, about = "Rectify boundedly displaced Delone sets onto the integer lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a point set from a generator spec.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        /// Output path; `.csv` selects CSV, anything else JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Match a point set onto lattice points.
    Match {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        margin: f64,
        #[arg(long)]
        out: PathBuf,
        /// One-dimensional order-preserving matching.
        #[arg(long)]
        order_preserving: bool,
        /// Require only core sources to be matched.
        #[arg(long)]
        sources_only: bool,
    },
    /// Build the rectifying homeomorphism of a displacement map.
    Rectify {
        #[arg(long)]
        map: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a plan against its displacement map.
    Verify {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a planar plan as SVG.
    Render {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// JSON render style; defaults apply to missing keys.
        #[arg(long)]
        style: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run gen, match, rectify, verify and render in sequence.
    Pipeline {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args, Debug, Default, Clone)]
struct ParamArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps_prime: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Overrides of the defaults derived from the source separation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamOverrides {
    pub epsilon: Option<f64>,
    pub epsilon_prime: Option<f64>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub max_retries: Option<u32>,
    pub epsilon_floor: Option<f64>,
}

impl ParamOverrides {
    pub fn resolve(&self, r_sep: f64) -> GeneralPositionParams {
        let mut p = GeneralPositionParams::for_separation(r_sep);
        if let Some(e) = self.epsilon {
            p.epsilon = e;
            p.epsilon_prime = 0.45 * e;
            p.epsilon_floor = p.epsilon_floor.min(e);
        }
        if let Some(v) = self.epsilon_prime {
            p.epsilon_prime = v;
        }
        if let Some(v) = self.delta {
            p.delta = v;
        }
        if let Some(v) = self.seed {
            p.seed = v;
        }
        if let Some(v) = self.max_retries {
            p.max_retries = v;
        }
        if let Some(v) = self.epsilon_floor {
            p.epsilon_floor = v;
        }
        p
    }
}

fn default_margin() -> f64 {
    2.0
}

/// Full pipeline configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub generator: GeneratorSpec,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub order_preserving: bool,
    #[serde(default)]
    pub policy: MatchPolicy,
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default)]
    pub verify: VerifyOptions,
    #[serde(default)]
    pub render: RenderStyle,
}

/// A pipeline spec file holds either a [`RunConfig`] or a bare generator
/// spec, which runs with default settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PipelineConfig {
    Full(RunConfig),
    Bare(GeneratorSpec),
}

impl PipelineConfig {
    pub fn into_run_config(self) -> RunConfig {
        match self {
            PipelineConfig::Full(c) => c,
            PipelineConfig::Bare(generator) => RunConfig {
                order_preserving: generator.dim == 1,
                generator,
                margin: default_margin(),
                policy: MatchPolicy::default(),
                params: ParamOverrides::default(),
                verify: VerifyOptions::default(),
                render: RenderStyle::default(),
            },
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn parse_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Unit cells covering the points: `[floor(min), floor(max) + 1)` per axis.
fn csv_window(text: &str, path: &Path) -> Result<Window, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_err(path, e))?;
        if lo.is_empty() {
            lo = row.clone();
            hi = row;
        } else if row.len() != lo.len() {
            return Err(parse_err(path, "rows differ in length"));
        } else {
            for (a, x) in row.iter().enumerate() {
                lo[a] = lo[a].min(*x);
                hi[a] = hi[a].max(*x);
            }
        }
    }
    Window::new(
        Point::new(lo.iter().map(|x| x.floor()).collect()),
        Point::new(hi.iter().map(|x| x.floor() + 1.0).collect()),
    )
    .ok_or_else(|| parse_err(path, "no finite points"))
}

fn read_points(path: &Path) -> Result<PointSet, CliError> {
    let text = read(path)?;
    if is_csv(path) {
        let window = csv_window(&text, path)?;
        PointSet::from_csv(&text, window).map_err(|e| parse_err(path, e))
    } else {
        PointSet::from_json(&text).map_err(|e| parse_err(path, e))
    }
}

fn read_map(path: &Path) -> Result<DisplacementMap, CliError> {
    DisplacementMap::from_json(&read(path)?).map_err(|e| parse_err(path, e))
}

fn read_plan(path: &Path) -> Result<HomeoPlan, CliError> {
    HomeoPlan::from_json(&read(path)?).map_err(|e| parse_err(path, e))
}

fn write_points(path: &Path, s: &PointSet) -> Result<(), CliError> {
    write(path, &if is_csv(path) { s.to_csv() } else { s.to_json() })
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn do_match(
    s: &PointSet,
    margin: f64,
    order_preserving: bool,
    policy: MatchPolicy,
) -> Result<DisplacementMap, CliError> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(CliError::Usage(format!("margin must be a non-negative number, got {margin}")));
    }
    let m = if order_preserving {
        order_preserving_match(s, margin)
    } else {
        bottleneck_match_with(s, margin, policy)
    }
    .map_err(failed)?;
    log::info!("matched {} pairs, bound {}", m.len(), m.bound);
    Ok(m)
}

fn do_rectify(m: &DisplacementMap, o: &ParamOverrides) -> Result<HomeoPlan, CliError> {
    let r_sep = source_separation(m).unwrap_or(1.0);
    let params = o.resolve(r_sep);
    params
        .validate(r_sep)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let plan = build_plan(m, &params, r_sep).map_err(failed)?;
    log::info!(
        "plan has {} maps, {} twists, epsilon {}",
        plan.maps().len() + plan.perturb_prefix().len(),
        plan.twist_count(),
        plan.epsilon_final()
    );
    Ok(plan)
}

fn do_verify(
    plan: &HomeoPlan,
    m: &DisplacementMap,
    opts: &VerifyOptions,
    out: &Path,
) -> Result<VerificationReport, CliError> {
    let report = verify_plan(plan, m, opts).map_err(|e| CliError::Usage(e.to_string()))?;
    write(out, &report.to_json())?;
    if report.pass {
        Ok(report)
    } else {
        Err(CliError::VerificationFailed(out.to_path_buf()))
    }
}

fn pipeline(spec: &Path, dir: &Path) -> Result<(), CliError> {
    let text = read(spec)?;
    let config: PipelineConfig = serde_json::from_str(&text).map_err(|e| parse_err(spec, e))?;
    let c = config.into_run_config();
    c.generator.validate().map_err(|e| parse_err(spec, e))?;
    c.verify.validate().map_err(|e| parse_err(spec, e))?;
    c.render.validate().map_err(|e| parse_err(spec, e))?;
    let (pts, _) = generate(&c.generator).map_err(failed)?;
    write(&dir.join("points.json"), &pts.to_json())?;
    write(&dir.join("points.csv"), &pts.to_csv())?;
    let m = do_match(&pts, c.margin, c.order_preserving, c.policy)?;
    write(&dir.join("map.json"), &m.to_json())?;
    let plan = do_rectify(&m, &c.params)?;
    write(&dir.join("plan.json"), &plan.to_json())?;
    let result = do_verify(&plan, &m, &c.verify, &dir.join("report.json"));
    if plan.dim() == 2 {
        let svg = render_scene(&plan, &m, &c.render).map_err(failed)?;
        write(&dir.join("figure.svg"), &svg)?;
    }
    result.map(|_| ())
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Gen { spec, out } => {
            let g = GeneratorSpec::from_json(&read(&spec)?).map_err(|e| parse_err(&spec, e))?;
            let (pts, _) = generate(&g).map_err(failed)?;
            write_points(&out, &pts)
        }
        Command::Match {
            input,
            margin,
            out,
            order_preserving,
            sources_only,
        } => {
            let s = read_points(&input)?;
            let policy = if sources_only {
                MatchPolicy::SourcesOnly
            } else {
                MatchPolicy::CoverBoth
            };
            let m = do_match(&s, margin, order_preserving, policy)?;
            write(&out, &m.to_json())
        }
        Command::Rectify { map, params, out } => {
            let m = read_map(&map)?;
            let o = ParamOverrides {
                epsilon: params.eps,
                epsilon_prime: params.eps_prime,
                delta: params.delta,
                seed: params.seed,
                ..ParamOverrides::default()
            };
            let plan = do_rectify(&m, &o)?;
            write(&out, &plan.to_json())
        }
        Command::Verify {
            plan,
            map,
            samples,
            seed,
            tol,
            out,
        } => {
            let p = read_plan(&plan)?;
            let m = read_map(&map)?;
            let opts = VerifyOptions {
                samples,
                seed,
                tol,
                ..VerifyOptions::default()
            };
            do_verify(&p, &m, &opts, &out).map(|_| ())
        }
        Command::Render {
            plan,
            map,
            style,
            out,
        } => {
            let p = read_plan(&plan)?;
            let m = read_map(&map)?;
            let style = match style {
                Some(path) => serde_json::from_str(&read(&path)?).map_err(|e| parse_err(&path, e))?,
                None => RenderStyle::default(),
            };
            let svg = render_scene(&p, &m, &style).map_err(|e| CliError::Usage(e.to_string()))?;
            write(&out, &svg)
        }
        Command::Pipeline { spec, out_dir } => pipeline(&spec, &out_dir),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status. Messages go to stderr.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
