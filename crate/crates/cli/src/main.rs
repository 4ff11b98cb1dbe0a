use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use autologistic::estimator::{bootstrap_variance, BootstrapReport, BootstrapStart};
use autologistic::io::{
    generate_surrogate_vineyard, load_dataset, load_dataset_dir, save_dataset, with_past_neighbor_covariate,
    Dataset, Metadata, SurrogateConfig,
};
use autologistic::presets::Scenario;
use autologistic::selector::{
    enumerate_ellipse_candidates, enumerate_rect_candidates, select_by_pl, Candidate, CandidateSet,
};
use autologistic::simstudy::{replicate_study, StudyConfig};
use autologistic::{
    build_neighbor_graph, empl_fit, simulate_trajectory, CenteringVariant, EmplOptions, FitResult, InitialSlice,
    NeighborhoodSpec, RngStream, SamplerConfig,
};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "autologistic", version, about = "Centered autologistic models on lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory and write it as a dataset.
    Simulate {
        /// model1, model2 or selection.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Fit a model by maximum pseudo-likelihood.
    Fit {
        /// Dataset directory (field.csv, covariates.csv, metadata.json).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Rank candidate neighborhoods by pseudo-likelihood.
    Select {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Replicate study of L_t, C_t and D_t across centerings.
    Study {
        /// model1 or model2.
        #[arg(long)]
        preset: Option<String>,
        /// Override the number of replicates.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Generate a synthetic vineyard dataset.
    Surrogate,
}

/// Failure classes, mapped to exit codes.
enum Failure {
    Config(anyhow::Error),
    Data(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Data(e) | Failure::Numerical(e) => e,
        }
    }
}

impl From<autologistic::Error> for Failure {
    fn from(e: autologistic::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.into())
        } else if e.is_validation() || matches!(e, autologistic::Error::Io(_)) {
            Failure::Data(e.into())
        } else {
            Failure::Config(e.into())
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn output_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

fn read_config<C: DeserializeOwned + Default>(path: Option<&Path>) -> Outcome<C> {
    match path {
        None => Ok(C::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))
                .map_err(config_err)?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", p.display()))
                .map_err(config_err)
        }
    }
}

/// The fully resolved invocation, echoed to stdout and saved next to the
/// outputs.
#[derive(Serialize)]
struct RunConfig<'a, C: Serialize> {
    command: &'a str,
    seed: u64,
    threads: Option<usize>,
    out: &'a Path,
    config: &'a C,
}

fn echo<C: Serialize>(cli: &Cli, command: &str, config: &C) -> Outcome {
    let run = RunConfig {
        command,
        seed: cli.seed,
        threads: cli.threads,
        out: &cli.out,
        config,
    };
    let text = serde_json::to_string_pretty(&run).map_err(config_err)?;
    println!("{text}");
    fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating {}", cli.out.display()))
        .map_err(output_err)?;
    fs::write(cli.out.join("run_config.json"), text + "\n").map_err(output_err)?;
    Ok(())
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct DataPaths {
    /// Directory written by `simulate` or `surrogate`.
    dir: Option<PathBuf>,
    field: Option<PathBuf>,
    covariates: Option<PathBuf>,
}

impl DataPaths {
    fn load(&self) -> Outcome<Dataset<f64>> {
        match (&self.dir, &self.field) {
            (Some(dir), _) => Ok(load_dataset_dir(dir)?),
            (None, Some(field)) => Ok(load_dataset(field, self.covariates.as_deref())?),
            (None, None) => Err(config_err(anyhow!("no data given: use --data <dir> or `data` in the config"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct SimulateConfig {
    #[serde(flatten)]
    scenario: Scenario,
    variant: CenteringVariant,
    sampler: SamplerConfig,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            scenario: Scenario::default(),
            variant: CenteringVariant::NewCentered,
            sampler: SamplerConfig::default(),
        }
    }
}

fn simulate(cli: &Cli, preset: Option<&str>) -> Outcome {
    let mut cfg: SimulateConfig = read_config(cli.config.as_deref())?;
    if let Some(name) = preset {
        cfg.scenario = Scenario::preset(name).ok_or_else(|| config_err(anyhow!("unknown preset `{name}`")))?;
    }
    echo(cli, "simulate", &cfg)?;
    let sc = &cfg.scenario;
    let params = sc.params::<f64>(cfg.variant)?;
    let x = sc.covariates::<f64>()?;
    let graph = build_neighbor_graph(sc.shape, sc.neighborhood);
    let sampler = SamplerConfig {
        initial: InitialSlice::Bernoulli(sc.p0),
        ..cfg.sampler.fallback_for(&params)
    };
    let z = simulate_trajectory(sc.horizon, &x, &params, &graph, &sampler, &RngStream::new(cli.seed))?;
    let metadata = Metadata {
        shape: Some(sc.shape),
        seed: Some(cli.seed),
        generator: Some(serde_json::to_value(&cfg).map_err(config_err)?),
        notes: None,
    };
    save_dataset(&cli.out, &Dataset::new(sc.shape, z, x, metadata)?).map_err(output_err)?;
    eprintln!("wrote dataset to {}", cli.out.display());
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct BootstrapConfig {
    replicates: usize,
    start: BootstrapStart,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 100,
            start: BootstrapStart::Observed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct FitConfig {
    data: DataPaths,
    neighborhood: NeighborhoodSpec,
    /// Past neighborhood whose infected count is added as a covariate.
    past: Option<NeighborhoodSpec>,
    variant: CenteringVariant,
    estimation: EmplOptions,
    bootstrap: Option<BootstrapConfig>,
    sampler: SamplerConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            data: DataPaths::default(),
            neighborhood: NeighborhoodSpec::Rect(2, 1),
            past: None,
            variant: CenteringVariant::NewCentered,
            estimation: EmplOptions::default(),
            bootstrap: None,
            sampler: SamplerConfig::default(),
        }
    }
}

#[derive(Serialize)]
struct FitOutput<'a> {
    fit: &'a FitResult<f64>,
    bootstrap: Option<&'a BootstrapReport<f64>>,
}

fn print_fit(out: &mut impl Write, fit: &FitResult<f64>) -> io::Result<()> {
    writeln!(out, "{:<16} {:>12} {:>12} {:>12}", "parameter", "estimate", "sd", "boot sd")?;
    let boot = fit.bootstrap_std_errors();
    for (k, name) in fit.names.iter().enumerate() {
        let b = boot.as_ref().map_or("-".to_string(), |b| format!("{:.5}", b[k]));
        writeln!(
            out,
            "{:<16} {:>12.5} {:>12.5} {:>12}",
            name,
            fit.params.to_vec()[k],
            fit.std_errors[k],
            b
        )?;
    }
    writeln!(
        out,
        "log-PL {:.6}  EM iterations {}  converged {}",
        fit.pl_value, fit.em_iterations, fit.converged
    )
}

fn fit(cli: &Cli, data: Option<&Path>) -> Outcome {
    let mut cfg: FitConfig = read_config(cli.config.as_deref())?;
    if let Some(d) = data {
        cfg.data = DataPaths {
            dir: Some(d.to_path_buf()),
            ..DataPaths::default()
        };
    }
    echo(cli, "fit", &cfg)?;
    let ds = cfg.data.load()?;
    let graph = build_neighbor_graph(ds.shape, cfg.neighborhood);
    let x = match cfg.past {
        Some(p) => with_past_neighbor_covariate(&ds.x, &ds.z, &build_neighbor_graph(ds.shape, p))?,
        None => ds.x.clone(),
    };
    let mut result = empl_fit(&ds.z, &x, &graph, cfg.variant, &cfg.estimation)?;
    let mut report = None;
    if let Some(b) = &cfg.bootstrap {
        if cfg.past.is_some() {
            return Err(config_err(anyhow!(
                "bootstrap with a past neighborhood is not supported from the command line"
            )));
        }
        let r = bootstrap_variance(
            &result,
            &ds.z,
            &x,
            &graph,
            b.replicates,
            &RngStream::new(cli.seed),
            &cfg.sampler,
            &b.start,
            &cfg.estimation,
        )?;
        for (idx, e) in &r.failures {
            eprintln!("bootstrap replicate {idx} dropped: {e}");
        }
        result.cov_bootstrap = Some(r.covariance.clone());
        report = Some(r);
    }
    let json = serde_json::to_string_pretty(&FitOutput {
        fit: &result,
        bootstrap: report.as_ref(),
    })
    .map_err(output_err)?;
    fs::write(cli.out.join("fit.json"), json + "\n").map_err(output_err)?;
    print_fit(&mut io::stdout().lock(), &result).map_err(output_err)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CandidateSpec {
    Rect {
        v_r: Vec<usize>,
        v_c: Vec<usize>,
        #[serde(default)]
        triangular: bool,
    },
    Ellipse {
        a_r: Vec<f64>,
        a_c: Vec<f64>,
        #[serde(default)]
        past_r: Option<Vec<f64>>,
        #[serde(default)]
        past_c: Option<Vec<f64>>,
    },
    List(Vec<Candidate>),
}

impl CandidateSpec {
    fn build(&self) -> Outcome<CandidateSet> {
        let set = match self {
            CandidateSpec::Rect { v_r, v_c, triangular } => enumerate_rect_candidates(v_r, v_c, *triangular),
            CandidateSpec::Ellipse { a_r, a_c, past_r, past_c } => {
                let past = match (past_r, past_c) {
                    (Some(r), Some(c)) => Some((r.as_slice(), c.as_slice())),
                    (None, None) => None,
                    _ => return Err(config_err(anyhow!("past_r and past_c must be given together"))),
                };
                enumerate_ellipse_candidates(a_r, a_c, past)
            }
            CandidateSpec::List(v) => CandidateSet::new(v.clone()),
        };
        Ok(set?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct SelectConfig {
    data: DataPaths,
    variant: CenteringVariant,
    candidates: CandidateSpec,
    estimation: EmplOptions,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            data: DataPaths::default(),
            variant: CenteringVariant::NewCentered,
            candidates: CandidateSpec::Rect {
                v_r: vec![1, 2, 3],
                v_c: vec![1, 2, 3],
                triangular: true,
            },
            estimation: EmplOptions::default(),
        }
    }
}

fn select(cli: &Cli, data: Option<&Path>) -> Outcome {
    let mut cfg: SelectConfig = read_config(cli.config.as_deref())?;
    if let Some(d) = data {
        cfg.data = DataPaths {
            dir: Some(d.to_path_buf()),
            ..DataPaths::default()
        };
    }
    echo(cli, "select", &cfg)?;
    let candidates = cfg.candidates.build()?;
    let ds = cfg.data.load()?;
    let report = select_by_pl(&ds.z, &ds.x, ds.shape, &candidates, cfg.variant, &cfg.estimation)?;
    let file = fs::File::create(cli.out.join("selection.csv")).map_err(output_err)?;
    report.write_csv(file)?;
    let json = serde_json::to_string_pretty(&report).map_err(output_err)?;
    fs::write(cli.out.join("selection.json"), json + "\n").map_err(output_err)?;
    for f in report.failures() {
        eprintln!("candidate {} failed: {}", f.candidate.label, f.error.as_deref().unwrap_or(""));
    }
    for (rank, &i) in report.ranking.iter().take(10).enumerate() {
        let f = &report.fits[i];
        println!("{:>3}  {:<32} log-PL {:.6}", rank + 1, f.candidate.label, f.log_pl().unwrap_or(f64::NAN));
    }
    match &report.winner {
        Some(w) => {
            println!("winner {w}");
            Ok(())
        }
        None => Err(Failure::Numerical(anyhow!("every candidate fit failed"))),
    }
}

fn study(cli: &Cli, preset: Option<&str>, replicates: Option<usize>) -> Outcome {
    let mut cfg: StudyConfig = read_config(cli.config.as_deref())?;
    if let Some(name) = preset {
        cfg = StudyConfig::preset(name).ok_or_else(|| config_err(anyhow!("unknown preset `{name}`")))?;
    }
    if let Some(b) = replicates {
        cfg.replicates = b;
    }
    echo(cli, "study", &cfg)?;
    let series = replicate_study(&cfg, &RngStream::new(cli.seed))?;
    series.write_records_csv(fs::File::create(cli.out.join("study_series.csv")).map_err(output_err)?)?;
    series.write_bands_csv(fs::File::create(cli.out.join("study_bands.csv")).map_err(output_err)?)?;
    eprintln!(
        "wrote {} series rows and {} band rows to {}",
        series.records.len(),
        series.bands.len(),
        cli.out.display()
    );
    Ok(())
}

fn surrogate(cli: &Cli) -> Outcome {
    let cfg: SurrogateConfig = read_config(cli.config.as_deref())?;
    echo(cli, "surrogate", &cfg)?;
    let ds = generate_surrogate_vineyard(&cfg, &RngStream::new(cli.seed))?;
    save_dataset(&cli.out, &ds).map_err(output_err)?;
    eprintln!("wrote surrogate vineyard to {}", cli.out.display());
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(config_err)?;
    }
    match &cli.command {
        Command::Simulate { preset } => simulate(cli, preset.as_deref()),
        Command::Fit { data } => fit(cli, data.as_deref()),
        Command::Select { data } => select(cli, data.as_deref()),
        Command::Study { preset, replicates } => study(cli, preset.as_deref(), *replicates),
        Command::Surrogate => surrogate(cli),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
