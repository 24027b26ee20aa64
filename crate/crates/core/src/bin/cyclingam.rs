use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use cyclingam::bench::{gnuplot_script, run_benchmark, summarize, write_records, write_summary, BenchConfig, NoiseFamily};
use cyclingam::data::Dataset;
use cyclingam::discovery::{discover, DiscoveryInput};
use cyclingam::equivalence::{apply_permutation, factoring_permutations, transform_parameters};
use cyclingam::error::{Error, Result};
use cyclingam::graph::{DirectedGraph, GraphJson};
use cyclingam::moments::sample_moments;
use cyclingam::sem::{sample, ModelJson, MomentPair, MomentsJson, NoiseSpec, SemParameters};
use cyclingam::stats::{Correction, Mode, TestConfig};

/// Causal discovery for linear non-Gaussian models with disjoint cycles.
///
/// Formats (vertex labels are 1-based everywhere):
///   graph JSON   {"p": 3, "edges": [[1, 2], [2, 3]]}
///   model JSON   {"p": 2, "edges": [[1, 2, 0.5]], "omega2": [1, 1], "omega3": [1, 1]}
///   moments JSON {"p": 2, "S": [row-major p*p], "T": [[i, j, k, t_ijk], ...] for i <= j <= k}
///   data CSV     header X1,...,Xp then one sample per line
///   result JSON  {"status", "layers", "edges": [[i, j, weight]], "remaining", "notes", "diagnostics"}
///
/// Exit status: 0 on success, 1 on usage or input errors, 2 on numerical failure.
#[derive(Parser, Debug)]
#[command(name = "cyclingam", version, verbatim_doc_comment)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Dist {
    Mixnorm,
    Gamma,
}

impl From<Dist> for NoiseFamily {
    fn from(d: Dist) -> Self {
        match d {
            Dist::Mixnorm => NoiseFamily::Mixnorm,
            Dist::Gamma => NoiseFamily::Gamma,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Sample,
    Population,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sample => Mode::Sample,
            ModeArg::Population => Mode::Population,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CorrectionArg {
    None,
    Holm,
    Bh,
}

impl From<CorrectionArg> for Correction {
    fn from(c: CorrectionArg) -> Self {
        match c {
            CorrectionArg::None => Correction::None,
            CorrectionArg::Holm => Correction::Holm,
            CorrectionArg::Bh => Correction::Bh,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a data CSV from a model JSON. Noise sd per variable is
    /// sqrt(omega2); the third moments follow from --dist.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "mixnorm")]
        dist: Dist,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Raw second and third sample moments of a data CSV, or exact moments of
    /// a model JSON.
    Moments {
        #[arg(long, conflicts_with = "model", required_unless_present = "model")]
        data: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Subtract column means first.
        #[arg(long)]
        center: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover layers, edges and weights from data or moments.
    Discover {
        #[arg(long, conflicts_with = "moments", required_unless_present = "moments")]
        data: Option<PathBuf>,
        #[arg(long)]
        moments: Option<PathBuf>,
        /// Defaults to population for --moments and sample for --data.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "holm")]
        correction: CorrectionArg,
        /// Zero threshold in population mode.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Subtract column means from --data first.
        #[arg(long)]
        center: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the distribution-equivalence class of a graph, or of a model with
    /// its transformed parameters.
    Equiv {
        #[arg(long, conflicts_with = "model", required_unless_present = "model")]
        graph: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulation study over random chained-cycle models.
    Bench {
        #[arg(long, default_value_t = 9)]
        p: usize,
        #[arg(long, default_value_t = 3)]
        cycle_size: usize,
        #[arg(long, value_enum, default_value = "mixnorm")]
        dist: Dist,
        /// Sample size; repeat for a grid.
        #[arg(long = "n", default_values_t = vec![100_000usize])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Test level; repeat for a grid.
        #[arg(long = "alpha", default_values_t = vec![0.01f64])]
        alpha: Vec<f64>,
        /// Multiple-testing correction; repeat for a grid.
        #[arg(long = "correction", value_enum, default_values = ["holm"])]
        correction: Vec<CorrectionArg>,
        #[arg(long, value_enum, default_value = "sample")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Per-replication CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-cell summary CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Gnuplot script for the summary (requires --summary).
        #[arg(long, requires = "summary")]
        gnuplot: Option<PathBuf>,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_csv(path: &Path) -> Result<Dataset> {
    let f = File::open(path).map_err(io_err(path))?;
    Dataset::read_csv(BufReader::new(f)).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn with_output(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(io_err(path))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(io_err(path))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush().map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    with_output(out, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w).map_err(io_err(out.unwrap_or(Path::new("<stdout>"))))
    })
}

#[derive(Serialize)]
struct ClassMember {
    permutation: String,
    #[serde(flatten)]
    model: ModelJson,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { model, n, seed, dist, out } => {
            let params = SemParameters::from_json(&read_json(&model)?)?;
            let scales = params.omega2().iter().map(|w| w.sqrt()).collect();
            let noise = NoiseSpec::new(NoiseFamily::from(dist).kind(), scales)?;
            let data = sample(&params, &noise, n, seed)?;
            with_output(out.as_deref(), |w| data.write_csv(w))
        }
        Command::Moments { data, model, center, out } => {
            let m = match (data, model) {
                (Some(path), _) => {
                    let d = read_csv(&path)?;
                    sample_moments(&if center { d.centered() } else { d })
                }
                (None, Some(path)) => cyclingam::sem::population_moments(&SemParameters::from_json(&read_json(&path)?)?)?,
                (None, None) => unreachable!("clap requires one input"),
            };
            write_json(out.as_deref(), &m.to_json())
        }
        Command::Discover { data, moments, mode, alpha, correction, tol, center, out } => {
            let input = match (data, moments) {
                (Some(path), _) => {
                    if matches!(mode, Some(ModeArg::Population)) {
                        return Err(Error::InvalidConfig("--mode population needs --moments, not --data".into()));
                    }
                    DiscoveryInput::sample(read_csv(&path)?, center)
                }
                (None, Some(path)) => {
                    if matches!(mode, Some(ModeArg::Sample)) {
                        return Err(Error::InvalidConfig("--mode sample needs --data, not --moments".into()));
                    }
                    let json: MomentsJson = read_json(&path)?;
                    DiscoveryInput::Population(MomentPair::from_json(&json)?)
                }
                (None, None) => unreachable!("clap requires one input"),
            };
            let mode = match &input {
                DiscoveryInput::Population(_) => Mode::Population,
                DiscoveryInput::Sample(_) => Mode::Sample,
            };
            let cfg = TestConfig::new(alpha, correction.into(), mode, tol)?;
            let result = discover(&input, &cfg)?;
            write_json(out.as_deref(), &result.to_json())
        }
        Command::Equiv { graph, model, out } => match (graph, model) {
            (Some(path), _) => {
                let json: GraphJson = read_json(&path)?;
                let g = DirectedGraph::from_json(&json)?;
                let class: Vec<GraphJson> = factoring_permutations(&g)?
                    .iter()
                    .map(|pi| apply_permutation(&g, pi).map(|h| h.to_json()))
                    .collect::<Result<_>>()?;
                write_json(out.as_deref(), &class)
            }
            (None, Some(path)) => {
                let params = SemParameters::from_json(&read_json(&path)?)?;
                let class: Vec<ClassMember> = factoring_permutations(params.graph())?
                    .iter()
                    .map(|pi| {
                        transform_parameters(&params, pi)
                            .map(|m| ClassMember { permutation: pi.to_string(), model: m.to_json() })
                    })
                    .collect::<Result<_>>()?;
                write_json(out.as_deref(), &class)
            }
            (None, None) => unreachable!("clap requires one input"),
        },
        Command::Bench {
            p,
            cycle_size,
            dist,
            n,
            reps,
            seed,
            alpha,
            correction,
            mode,
            tol,
            out,
            summary,
            gnuplot,
        } => {
            let cfg = BenchConfig {
                p,
                cycle_size,
                ns: n,
                dist: dist.into(),
                reps,
                seed,
                alphas: alpha,
                corrections: correction.into_iter().map(Into::into).collect(),
                mode: mode.into(),
                tol,
            };
            let records = run_benchmark(&cfg)?;
            with_output(out.as_deref(), |w| write_records(&records, w))?;
            if let Some(path) = &summary {
                with_output(Some(path), |w| write_summary(&summarize(&records), w))?;
                if let Some(script) = &gnuplot {
                    let png = script.with_extension("png");
                    let text = gnuplot_script(&path.display().to_string(), &png.display().to_string());
                    std::fs::write(script, text).map_err(io_err(script))?;
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
