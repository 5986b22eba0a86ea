//! The `scn` command line: generate or ingest tracks, slice them into
//! interaction scenarios, compare scenarios with Graph-DTW and label the
//! extreme ones.

mod config;
mod export;
mod io;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use scn_core::graph_dtw::{encode, scenario_distance};
use scn_core::ingest::{parse_road_map, parse_tracks, resample_and_smooth, validate, write_tracks, IngestConfig, RoadMap, TrackSet};
use scn_core::labeling::{
    encode_all, label_from_matrices, pairwise_distances, pairwise_vector_distances, ttc_label, LabelReport,
};
use scn_core::slicing::{segment_stats, slice, slice_all, AtomScenario, InteractionType};
use scn_core::synthgen::{self, ScriptSpec};
use scn_core::VehicleId;

pub use config::{check_outputs, Paths, PipelineConfig};
pub use export::export_plotdata;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] scn_core::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Input(String),
}

macro_rules! from_module {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        })*
    };
}

from_module!(
    scn_core::IngestError,
    scn_core::SliceError,
    scn_core::SceneError,
    scn_core::MetricError,
    scn_core::DtwError,
    scn_core::LabelError,
    scn_core::SynthError
);

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Input(_) => "input",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(io::io_err(path))
}

#[derive(Parser, Debug)]
#[command(name = "scn", version, about = "Interaction scenario slicing, Graph-DTW distance and extreme-scenario labeling")]
struct Cli {
    /// Pipeline config JSON; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective config (defaults merged with --config) and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Clone)]
struct Inputs {
    /// Tracks CSV in the normalized layout.
    #[arg(long)]
    tracks: Option<PathBuf>,
    /// Road map JSON.
    #[arg(long)]
    map: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus: tracks.csv, map.json, truth.json, spec.json.
    Gen {
        /// three-phase, following, filtering, merge, crossing, labeling or performance.
        #[arg(long, default_value = "three-phase", conflicts_with = "spec")]
        script: String,
        /// ScriptSpec JSON to use instead of a named script.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Groups for the filtering script.
        #[arg(long, default_value_t = 8)]
        groups: usize,
        /// Vehicle count for the performance script.
        #[arg(long, default_value_t = 30)]
        vehicles: usize,
        /// Frame count for the performance script.
        #[arg(long, default_value_t = 10_000)]
        frames: usize,
        /// Duration in seconds for the following script.
        #[arg(long, default_value_t = 20.0)]
        duration: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Parse raw tracks, resample, smooth and validate against the map.
    Ingest {
        #[command(flatten)]
        inputs: Inputs,
        /// Normalized tracks CSV.
        #[arg(long)]
        out: PathBuf,
        /// Validation findings JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Slice tracks into atomic scenarios (JSON lines).
    Slice {
        #[command(flatten)]
        inputs: Inputs,
        /// Slice only this ego.
        #[arg(long)]
        ego: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment statistics of a scenario store.
    Stats {
        #[arg(long)]
        atoms: Option<PathBuf>,
        #[arg(long, default_value_t = 5.0)]
        bin_width: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Graph-DTW distance between two scenarios.
    Dist {
        #[arg(long)]
        atoms: Option<PathBuf>,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
    },
    /// Pairwise distance matrix over one interaction type.
    Matrix {
        #[arg(long)]
        atoms: Option<PathBuf>,
        #[command(flatten)]
        inputs: Inputs,
        /// Interaction type, e.g. static_conflict_line.
        #[arg(long = "type")]
        itype: Option<String>,
        /// Use the flat vector baseline instead of Graph-DTW.
        #[arg(long)]
        vector: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster, embed and flag extreme scenarios.
    Label {
        #[arg(long)]
        atoms: Option<PathBuf>,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long = "type")]
        itype: Option<String>,
        /// Precomputed Graph-DTW matrix; its ids select the scenarios.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// LabelReport JSON; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Coordinates CSV for plotting.
        #[arg(long)]
        coords: Option<PathBuf>,
    },
    /// Venn region counts of a label report.
    Venn {
        #[arg(long)]
        report: PathBuf,
    },
    /// Plot-ready histogram and scatter tables.
    Export {
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        atoms: Option<PathBuf>,
        #[arg(long, default_value_t = 5.0)]
        bin_width: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

struct Ctx {
    cfg: PipelineConfig,
    out: Vec<u8>,
}

impl Ctx {
    fn emit<T: Serialize>(&mut self, v: &T) -> Result<(), CliError> {
        self.out.extend_from_slice(pretty(v).as_bytes());
        Ok(())
    }

    fn path(&self, flag: &Option<PathBuf>, from_cfg: &Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
        flag.clone()
            .or_else(|| from_cfg.clone())
            .ok_or_else(|| CliError::Usage(format!("missing --{name} (or paths.{name} in the config)")))
    }

    /// Resolves the input paths, rejects colliding outputs, then loads
    /// the tracks (normalized layout at the configured frame period), the
    /// map and, when `atoms` is given, the scenario store.
    fn load(&self, inputs: &Inputs, atoms: Option<&Option<PathBuf>>, extra: &[&Path], outputs: &[&Path]) -> Result<Loaded, CliError> {
        let tp = self.path(&inputs.tracks, &self.cfg.paths.tracks, "tracks")?;
        let mp = self.path(&inputs.map, &self.cfg.paths.map, "map")?;
        let ap = atoms.map(|a| self.path(a, &self.cfg.paths.atoms, "atoms")).transpose()?;
        let mut ins: Vec<&Path> = vec![&tp, &mp];
        ins.extend(ap.as_deref());
        ins.extend(extra);
        check_outputs(&ins, outputs)?;
        let cfg = IngestConfig {
            columns: Default::default(),
            source_dt: None,
            ..self.cfg.ingest.clone()
        };
        Ok(Loaded {
            atoms: ap.map(|p| io::read_atoms(&p)).transpose()?.unwrap_or_default(),
            ts: parse_tracks(&tp, &cfg)?,
            map: parse_road_map(&mp, self.cfg.ingest.node_interval)?,
        })
    }

    fn atoms(&self, flag: &Option<PathBuf>) -> Result<(PathBuf, Vec<AtomScenario>), CliError> {
        let path = self.path(flag, &self.cfg.paths.atoms, "atoms")?;
        let atoms = io::read_atoms(&path)?;
        Ok((path, atoms))
    }
}

struct Loaded {
    ts: TrackSet,
    map: RoadMap,
    atoms: Vec<AtomScenario>,
}

fn parse_type(s: &str) -> Result<InteractionType, CliError> {
    InteractionType::ALL
        .into_iter()
        .find(|t| t.as_str() == s)
        .ok_or_else(|| {
            let names: Vec<&str> = InteractionType::ALL.iter().map(|t| t.as_str()).collect();
            CliError::Usage(format!("unknown interaction type {s:?}; expected one of {}", names.join(", ")))
        })
}

fn by_type(atoms: Vec<AtomScenario>, itype: &Option<String>) -> Result<Vec<AtomScenario>, CliError> {
    match itype {
        None => Ok(atoms),
        Some(s) => {
            let t = parse_type(s)?;
            Ok(atoms.into_iter().filter(|a| a.itype == t).collect())
        }
    }
}

fn find(atoms: &[AtomScenario], id: u64) -> Result<&AtomScenario, CliError> {
    atoms
        .iter()
        .find(|a| a.id == id)
        .ok_or_else(|| CliError::Input(format!("scenario {id} is not in the store")))
}

fn script(name: &str, seed: u64, groups: usize, vehicles: usize, frames: usize, duration: f64) -> Result<ScriptSpec, CliError> {
    Ok(match name {
        "three-phase" => synthgen::three_phase(seed),
        "following" => synthgen::following(seed, duration),
        "filtering" => synthgen::filtering_corpus(seed, groups),
        "merge" => synthgen::merge(seed),
        "crossing" => synthgen::crossing(seed),
        "labeling" => synthgen::labeling_corpus(seed),
        "performance" => synthgen::performance_stream(seed, vehicles, frames),
        other => return Err(CliError::Usage(format!("unknown script {other:?}"))),
    })
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct DistOutput {
    a_id: u64,
    b_id: u64,
    normalized: f64,
    M: usize,
    N: usize,
    W: Option<usize>,
}

fn dispatch(cmd: Command, ctx: &mut Ctx) -> Result<(), CliError> {
    match cmd {
        Command::Gen {
            script: name,
            spec,
            seed,
            groups,
            vehicles,
            frames,
            duration,
            out_dir,
        } => {
            let spec = match spec {
                Some(p) => serde_json::from_str(&read_text(&p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
                None => script(&name, seed, groups, vehicles, frames, duration)?,
            };
            let (ts, map, truth) = synthgen::generate(&spec)?;
            let tracks_path = out_dir.join("tracks.csv");
            let mut w = io::create(&tracks_path)?;
            write_tracks(&ts, &mut w)?;
            std::io::Write::flush(&mut w).map_err(io::io_err(&tracks_path))?;
            io::write_text(&out_dir.join("map.json"), &pretty(&map.to_doc()))?;
            io::write_text(&out_dir.join("truth.json"), &pretty(&truth))?;
            io::write_text(&out_dir.join("spec.json"), &pretty(&spec))?;
            ctx.emit(&serde_json::json!({
                "vehicles": ts.tracks.len(),
                "planted": truth.planted.len(),
                "segments": truth.segments.len(),
            }))
        }
        Command::Ingest { inputs, out, report } => {
            let raw = inputs.tracks.clone().or(ctx.cfg.paths.tracks.clone());
            let raw = raw.ok_or_else(|| CliError::Usage("missing --tracks (or paths.tracks in the config)".into()))?;
            let map_path = ctx.path(&inputs.map, &ctx.cfg.paths.map, "map")?;
            let outs: Vec<&Path> = std::iter::once(out.as_path()).chain(report.as_deref()).collect();
            check_outputs(&[&raw, &map_path], &outs)?;
            let map = parse_road_map(&map_path, ctx.cfg.ingest.node_interval)?;
            let ts = resample_and_smooth(&parse_tracks(&raw, &ctx.cfg.ingest)?, &ctx.cfg.ingest)?;
            let findings = validate(&ts, &map, &ctx.cfg.validate);
            let mut w = io::create(&out)?;
            write_tracks(&ts, &mut w)?;
            std::io::Write::flush(&mut w).map_err(io::io_err(&out))?;
            if let Some(p) = &report {
                io::write_text(p, &pretty(&findings))?;
            }
            ctx.emit(&serde_json::json!({
                "vehicles": ts.tracks.len(),
                "samples": ts.tracks.values().map(|t| t.points.len()).sum::<usize>(),
                "findings": findings.findings.len(),
            }))
        }
        Command::Slice { inputs, ego, out } => {
            let Loaded { ts, map, .. } = ctx.load(&inputs, None, &[], &[&out])?;
            let atoms = match ego {
                Some(e) => slice(&ts, &map, &VehicleId::new(e), &ctx.cfg.slice)?,
                None => slice_all(&ts, &map, &ctx.cfg.slice)?,
            };
            io::write_atoms(&out, &atoms)?;
            ctx.emit(&serde_json::json!({ "segments": atoms.len() }))
        }
        Command::Stats { atoms, bin_width, out } => {
            if !(bin_width > 0.0) {
                return Err(CliError::Usage("--bin-width must be positive".into()));
            }
            let (ap, atoms) = ctx.atoms(&atoms)?;
            let report = segment_stats(&atoms, ctx.cfg.ingest.dt, bin_width);
            match out {
                Some(p) => {
                    check_outputs(&[&ap], &[&p])?;
                    io::write_text(&p, &pretty(&report))
                }
                None => ctx.emit(&report),
            }
        }
        Command::Dist { atoms, inputs, a, b } => {
            let Loaded { ts, map, atoms } = ctx.load(&inputs, Some(&atoms), &[], &[])?;
            let (cfg, dcfg) = (&ctx.cfg.metric, &ctx.cfg.dtw);
            let ea = encode(find(&atoms, a)?, &ts, &map, cfg, dcfg)?;
            let eb = encode(find(&atoms, b)?, &ts, &map, cfg, dcfg)?;
            let normalized = scenario_distance(&ea, &eb, dcfg, cfg)?;
            ctx.emit(&DistOutput {
                a_id: a,
                b_id: b,
                normalized,
                M: ea.frames.len(),
                N: eb.frames.len(),
                W: dcfg.window,
            })
        }
        Command::Matrix {
            atoms,
            inputs,
            itype,
            vector,
            out,
        } => {
            let Loaded { ts, map, atoms } = ctx.load(&inputs, Some(&atoms), &[], &[&out])?;
            let atoms = by_type(atoms, &itype)?;
            let encoded = encode_all(&atoms, &ts, &map, &ctx.cfg.metric, &ctx.cfg.dtw)?;
            let m = if vector {
                pairwise_vector_distances(&encoded, &ctx.cfg.dtw)?
            } else {
                pairwise_distances(&encoded, &ctx.cfg.dtw, &ctx.cfg.metric)?
            };
            io::write_matrix(&out, &m)?;
            ctx.emit(&serde_json::json!({ "scenarios": m.len() }))
        }
        Command::Label {
            atoms,
            inputs,
            itype,
            matrix,
            out,
            coords,
        } => {
            let outs: Vec<&Path> = out.as_deref().into_iter().chain(coords.as_deref()).collect();
            let extra: Vec<&Path> = matrix.as_deref().into_iter().collect();
            let Loaded { ts, map, atoms } = ctx.load(&inputs, Some(&atoms), &extra, &outs)?;
            let (atoms, graph) = match &matrix {
                Some(p) => {
                    let m = io::read_matrix(p)?;
                    let picked = m.ids.iter().map(|&id| find(&atoms, id).cloned()).collect::<Result<Vec<_>, _>>()?;
                    if let Some(s) = &itype {
                        let t = parse_type(s)?;
                        if picked.iter().any(|a| a.itype != t) {
                            return Err(CliError::Usage(format!("matrix holds scenarios that are not {s}")));
                        }
                    }
                    (picked, Some(m))
                }
                None => (by_type(atoms, &itype)?, None),
            };
            let cfg = &ctx.cfg;
            let encoded = encode_all(&atoms, &ts, &map, &cfg.metric, &cfg.dtw)?;
            let graph = match graph {
                Some(m) => m,
                None => pairwise_distances(&encoded, &cfg.dtw, &cfg.metric)?,
            };
            let vector = pairwise_vector_distances(&encoded, &cfg.dtw)?;
            let ttc = ttc_label(&atoms, &ts, &map, &cfg.label.ttc);
            let report = label_from_matrices(&graph, &vector, &ttc, &cfg.label)?;
            if let Some(p) = &coords {
                io::write_text(p, &report.coordinates_csv())?;
            }
            match &out {
                Some(p) => {
                    io::write_text(p, &pretty(&report))?;
                    let noise = report.entries.iter().filter(|e| e.cluster.is_noise()).count();
                    ctx.emit(&serde_json::json!({
                        "scenarios": report.entries.len(),
                        "noise": noise,
                        "venn": report.venn,
                    }))
                }
                None => ctx.emit(&report),
            }
        }
        Command::Venn { report } => {
            let text = read_text(&report)?;
            let r: LabelReport = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", report.display())))?;
            ctx.emit(&r.venn)
        }
        Command::Export {
            report,
            atoms,
            bin_width,
            out_dir,
        } => {
            if !(bin_width > 0.0) {
                return Err(CliError::Usage("--bin-width must be positive".into()));
            }
            let report = match &report {
                Some(p) => Some(
                    serde_json::from_str::<LabelReport>(&read_text(p)?)
                        .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
                ),
                None => None,
            };
            let atoms = match atoms.or(ctx.cfg.paths.atoms.clone()) {
                Some(p) => io::read_atoms(&p)?,
                None => Vec::new(),
            };
            let files = export_plotdata(report.as_ref(), &atoms, ctx.cfg.ingest.dt, bin_width, &out_dir)?;
            ctx.emit(&files)
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default() + "\n"
}

/// Runs one invocation. Returns the exit code and the bytes for stdout and
/// stderr.
pub fn run<I, T>(argv: I) -> (i32, Vec<u8>, Vec<u8>)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return (0, e.to_string().into_bytes(), Vec::new());
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            let err = CliError::Usage(first.to_owned());
            return (2, Vec::new(), (err.to_json() + "\n").into_bytes());
        }
    };
    match run_cli(cli) {
        Ok(out) => (0, out, Vec::new()),
        Err(e) => (e.exit_code(), Vec::new(), (e.to_json() + "\n").into_bytes()),
    }
}

fn run_cli(cli: Cli) -> Result<Vec<u8>, CliError> {
    let cfg = PipelineConfig::load(cli.config.as_deref())?;
    cfg.check()?;
    let mut ctx = Ctx { cfg, out: Vec::new() };
    if cli.print_config {
        let cfg = ctx.cfg.clone();
        ctx.emit(&cfg)?;
        return Ok(ctx.out);
    }
    let cmd = cli
        .command
        .ok_or_else(|| CliError::Usage("no subcommand given; see --help".into()))?;
    let threads = ctx.cfg.thread_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| dispatch(cmd, &mut ctx))?;
    Ok(ctx.out)
}
