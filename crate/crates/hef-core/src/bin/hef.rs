//! `hef`: simulate range-only localization worlds, replay the four filters
//! over datasets, and reproduce the banana demo, the S¹ fidelity sweep and
//! the convolution runtime benchmark. Outputs are JSONL/CSV plus `HEF1`
//! binary belief dumps; plotting is out of scope.

use clap::{Args, Parser, Subcommand};
use hef_core::analysis::fidelity_sweep;
use hef_core::bench::{bench_convolution, bench_csv};
use hef_core::error::{HefError, Result};
use hef_core::filter::DiffDriveModel;
use hef_core::harness::{run_filter, FilterKind, HarnessConfig};
use hef_core::io::{atomic_write, run_log_bytes, save_density};
use hef_core::metrics::{metrics_csv, summarize, MetricsRow};
use hef_core::sim::{banana_scenario, load_dataset, save_dataset, simulate_range_world, SimConfig};
use hef_core::GridSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "hef", version, about = "Harmonic exponential filtering on SE(2)")]
struct Cli {
    /// Emit machine-readable error JSON on stderr instead of plain text.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a range-only landmark dataset (JSON lines).
    Simulate(SimulateArgs),
    /// Replay filters over datasets; writes run logs and metrics CSVs.
    Run(RunArgs),
    /// Five-step prediction-only rollout from a rectangular prior; dumps
    /// every filter's belief after each step.
    DemoBanana(BananaArgs),
    /// D_KL of histogram vs harmonic-exponential fits of a von Mises
    /// mixture at matched parameter counts.
    AnalyzeKl(KlArgs),
    /// Spectral vs direct SE(2) convolution wall times with a correctness
    /// gate.
    BenchConv(BenchArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON file with the simulator configuration; defaults apply when
    /// omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration (see `RunConfig`); defaults apply when
    /// omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replay this dataset file instead of simulating per seed.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Comma-separated subset of hef,ekf,histf,pf.
    #[arg(long, default_value = "hef,ekf,histf,pf", value_delimiter = ',')]
    filters: Vec<String>,
    /// First simulation seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds to run.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Write per-step belief densities (HEF1) next to each run log.
    #[arg(long)]
    dump_beliefs: bool,
    /// Noise-sweep mode: grid over the config's σ lists, report the
    /// argmin-NLL choice per filter.
    #[arg(long)]
    sweep: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BananaArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "hef,ekf,histf,pf", value_delimiter = ',')]
    filters: Vec<String>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct KlArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Timing repetitions per size (median reported).
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[command(flatten)]
    out: OutArgs,
}

/// Configuration for `hef run`. Every field has a default, so an empty
/// object (or no --config at all) reproduces the paper-style experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunConfig {
    /// Simulator used when no dataset file is given; its seed field is
    /// replaced by the per-run seed.
    sim: SimConfig,
    /// Motion noise assumed by the filters (may differ from the simulator's).
    sigma_trans: f64,
    sigma_rot: f64,
    /// HEF transform bands (n_lambda, n_psi, band_n); null picks defaults.
    bands: Option<(usize, usize, usize)>,
    n_particles: usize,
    /// Candidate σ grids for --sweep.
    sweep_sigma_trans: Vec<f64>,
    sweep_sigma_rot: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        RunConfig {
            sigma_trans: sim.sigma_trans,
            sigma_rot: sim.sigma_rot,
            sim,
            bands: None,
            n_particles: 80_000,
            sweep_sigma_trans: vec![],
            sweep_sigma_rot: vec![],
        }
    }
}

/// Configuration for `hef demo-banana`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BananaConfig {
    grid: GridSpec,
    n_steps: usize,
    step_len: f64,
    /// Motion noise of the rollout model.
    sigma_trans: f64,
    sigma_rot: f64,
    n_particles: usize,
    bands: Option<(usize, usize, usize)>,
}

impl Default for BananaConfig {
    fn default() -> Self {
        BananaConfig {
            grid: GridSpec::unit_box(50, 50, 32).expect("static grid"),
            n_steps: 5,
            step_len: 0.1,
            sigma_trans: 0.01,
            sigma_rot: 0.02,
            n_particles: 80_000,
            bands: None,
        }
    }
}

/// Configuration for `hef analyze-kl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct KlConfig {
    /// Means of the two equal-weight von Mises components.
    mus: (f64, f64),
    /// Parameter counts swept (bin count / real coefficient count).
    params: Vec<usize>,
    kappas: Vec<f64>,
    n_quad: usize,
}

impl Default for KlConfig {
    fn default() -> Self {
        KlConfig {
            mus: (2.0, 4.5),
            params: vec![8, 16, 32, 64],
            kappas: vec![1.0, 2.0, 4.0, 8.0],
            n_quad: 8192,
        }
    }
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| HefError::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// Atomic write that refuses to clobber existing files unless forced.
fn write_out(path: &Path, bytes: &[u8], force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(HefError::Config(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    atomic_write(path, bytes)
}

fn parse_filters(names: &[String]) -> Result<Vec<FilterKind>> {
    let mut out = Vec::new();
    for n in names {
        let k: FilterKind = n.parse()?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    if out.is_empty() {
        return Err(HefError::Config("empty --filters list".into()));
    }
    Ok(out)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg: SimConfig = load_config(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let ds = simulate_range_world(&cfg)?;
    let path = args.out.out.join("dataset.jsonl");
    if path.exists() && !args.out.force {
        return Err(HefError::Config(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    std::fs::create_dir_all(&args.out.out)?;
    save_dataset(&ds, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run_one(
    ds: &hef_core::sim::Dataset,
    kind: FilterKind,
    seed: u64,
    hcfg: &HarnessConfig,
    out_dir: &Path,
    force: bool,
) -> Result<MetricsRow> {
    let out = run_filter(ds, kind, hcfg)
        .map_err(|e| e.map_msg(|m| format!("{} seed {seed}: {m}", kind.name())))?;
    let log_path = out_dir.join(format!("run_{}_{seed}.jsonl", kind.name()));
    write_out(&log_path, &run_log_bytes(&out.records), force)?;
    for (t, b) in out.beliefs.iter().enumerate() {
        let p = out_dir.join(format!("beliefs_{}_{seed}/step_{t:03}.hef1", kind.name()));
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        save_density(b, &p)?;
    }
    Ok(MetricsRow {
        filter: kind.name().to_string(),
        seed,
        ate_mode: out.metrics.ate_mode,
        ate_mean: out.metrics.ate_mean,
        nll: out.metrics.nll,
    })
}

fn summary_csv(rows: &[MetricsRow]) -> String {
    let mut out =
        String::from("filter,ate_mode_mean,ate_mode_std,ate_mean_mean,ate_mean_std,nll_mean,nll_std\n");
    for s in summarize(rows) {
        out.push_str(&format!(
            "{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9}\n",
            s.filter, s.ate_mode.0, s.ate_mode.1, s.ate_mean.0, s.ate_mean.1, s.nll.0, s.nll.1
        ));
    }
    out
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg: RunConfig = load_config(&args.config)?;
    let filters = parse_filters(&args.filters)?;
    let model = DiffDriveModel::new(cfg.sigma_trans, cfg.sigma_rot)?;
    let hcfg = HarnessConfig {
        bands: cfg.bands,
        n_particles: cfg.n_particles,
        dump_beliefs: args.dump_beliefs,
        ..HarnessConfig::new(model)
    };

    // one dataset per seed: either the given file (single run) or a fresh
    // simulation with the seed substituted
    let datasets: Vec<(u64, hef_core::sim::Dataset)> = match &args.dataset {
        Some(p) => {
            let ds = load_dataset(p)?;
            vec![(ds.header.seed, ds)]
        }
        None => (args.seed..args.seed + args.seeds.max(1))
            .map(|s| {
                let sim = SimConfig { seed: s, ..cfg.sim.clone() };
                Ok((s, simulate_range_world(&sim)?))
            })
            .collect::<Result<_>>()?,
    };

    std::fs::create_dir_all(&args.out.out)?;

    if args.sweep {
        return cmd_run_sweep(args, &cfg, &filters, &datasets);
    }

    let jobs: Vec<(FilterKind, usize)> = filters
        .iter()
        .flat_map(|&k| (0..datasets.len()).map(move |i| (k, i)))
        .collect();
    let mut rows: Vec<MetricsRow> = jobs
        .par_iter()
        .map(|&(kind, i)| {
            let (seed, ds) = &datasets[i];
            // PF resampling noise follows the dataset seed so reruns are
            // byte-identical
            let hcfg = HarnessConfig { pf_seed: *seed, ..hcfg };
            run_one(ds, kind, *seed, &hcfg, &args.out.out, args.out.force)
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| (&a.filter, a.seed).cmp(&(&b.filter, b.seed)));

    write_out(&args.out.out.join("metrics.csv"), metrics_csv(&rows).as_bytes(), args.out.force)?;
    write_out(&args.out.out.join("summary.csv"), summary_csv(&rows).as_bytes(), args.out.force)?;
    print!("{}", summary_csv(&rows));
    Ok(())
}

/// Grid-search σ candidates, score each filter by mean NLL across seeds,
/// and report the argmin per filter.
fn cmd_run_sweep(
    args: &RunArgs,
    cfg: &RunConfig,
    filters: &[FilterKind],
    datasets: &[(u64, hef_core::sim::Dataset)],
) -> Result<()> {
    let sts = if cfg.sweep_sigma_trans.is_empty() {
        vec![0.5 * cfg.sigma_trans, cfg.sigma_trans, 2.0 * cfg.sigma_trans]
    } else {
        cfg.sweep_sigma_trans.clone()
    };
    let srs = if cfg.sweep_sigma_rot.is_empty() {
        vec![0.5 * cfg.sigma_rot, cfg.sigma_rot, 2.0 * cfg.sigma_rot]
    } else {
        cfg.sweep_sigma_rot.clone()
    };

    let mut cells: Vec<(FilterKind, f64, f64)> = Vec::new();
    for &k in filters {
        for &st in &sts {
            for &sr in &srs {
                cells.push((k, st, sr));
            }
        }
    }
    let scored: Vec<(FilterKind, f64, f64, f64)> = cells
        .par_iter()
        .map(|&(kind, st, sr)| {
            let model = DiffDriveModel::new(st, sr)?;
            let mut nll_sum = 0.0;
            for (seed, ds) in datasets {
                let hcfg = HarnessConfig {
                    bands: cfg.bands,
                    n_particles: cfg.n_particles,
                    pf_seed: *seed,
                    ..HarnessConfig::new(model)
                };
                // a candidate that diverges numerically scores +inf and
                // is simply never the argmin; real config errors abort
                match run_filter(ds, kind, &hcfg) {
                    Ok(out) => nll_sum += out.metrics.nll,
                    Err(HefError::Numeric(_)) => nll_sum = f64::INFINITY,
                    Err(e) => {
                        return Err(e.map_msg(|m| {
                            format!("{} σ=({st},{sr}) seed {seed}: {m}", kind.name())
                        }))
                    }
                }
            }
            Ok((kind, st, sr, nll_sum / datasets.len() as f64))
        })
        .collect::<Result<_>>()?;

    let mut csv = String::from("filter,sigma_trans,sigma_rot,nll,chosen\n");
    for &k in filters {
        let best = scored
            .iter()
            .filter(|r| r.0 == k)
            .min_by(|a, b| a.3.partial_cmp(&b.3).unwrap())
            .expect("non-empty sweep");
        for r in scored.iter().filter(|r| r.0 == k) {
            let chosen = (r.1, r.2) == (best.1, best.2);
            csv.push_str(&format!(
                "{},{:.9},{:.9},{:.9},{}\n",
                k.name(),
                r.1,
                r.2,
                r.3,
                chosen as u8
            ));
        }
    }
    write_out(&args.out.out.join("sweep.csv"), csv.as_bytes(), args.out.force)?;
    print!("{csv}");
    Ok(())
}

fn cmd_demo_banana(args: &BananaArgs) -> Result<()> {
    let cfg: BananaConfig = load_config(&args.config)?;
    let filters = parse_filters(&args.filters)?;
    let ds = banana_scenario(cfg.grid, cfg.n_steps, cfg.step_len, cfg.sigma_trans, cfg.sigma_rot)?;
    let model = DiffDriveModel::new(cfg.sigma_trans, cfg.sigma_rot)?;
    let prior = ds.header.prior.density_grid(&cfg.grid)?;
    std::fs::create_dir_all(&args.out.out)?;

    let mut csv = String::from("filter,step,mode_x,mode_y,mode_theta,entropy\n");
    for &kind in &filters {
        let hcfg = HarnessConfig {
            bands: cfg.bands,
            n_particles: cfg.n_particles,
            dump_beliefs: true,
            ..HarnessConfig::new(model)
        };
        let out = run_filter(&ds, kind, &hcfg)
            .map_err(|e| e.map_msg(|m| format!("{}: {m}", kind.name())))?;
        // prior + one dump per prediction step
        let mut dumps = vec![&prior];
        dumps.extend(out.beliefs.iter());
        for (k, b) in dumps.iter().enumerate() {
            let p = args.out.out.join(format!("banana_{}_step{k}.hef1", kind.name()));
            if p.exists() && !args.out.force {
                return Err(HefError::Config(format!(
                    "{} exists; pass --force to overwrite",
                    p.display()
                )));
            }
            save_density(b, &p)?;
            let mode = b.mode_pose();
            csv.push_str(&format!(
                "{},{k},{:.9},{:.9},{:.9},{:.9}\n",
                kind.name(),
                mode.x,
                mode.y,
                mode.theta,
                b.entropy()
            ));
        }
    }
    write_out(&args.out.out.join("banana_modes.csv"), csv.as_bytes(), args.out.force)?;
    print!("{csv}");
    Ok(())
}

fn cmd_analyze_kl(args: &KlArgs) -> Result<()> {
    let cfg: KlConfig = load_config(&args.config)?;
    let rows = fidelity_sweep(cfg.mus, &cfg.params, &cfg.kappas, cfg.n_quad)?;
    let mut csv = String::from("method,params,kappa,d_kl\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{:.9e}\n", r.method, r.params, r.kappa, r.d_kl));
    }
    write_out(&args.out.out.join("fidelity.csv"), csv.as_bytes(), args.out.force)?;
    print!("{csv}");
    Ok(())
}

fn cmd_bench_conv(args: &BenchArgs) -> Result<()> {
    let sizes = [(10, 10, 8), (20, 20, 8), (40, 40, 8)];
    let rows = bench_convolution(&sizes, args.reps)?;
    let csv = bench_csv(&rows);
    write_out(&args.out.out.join("bench.csv"), csv.as_bytes(), args.out.force)?;
    print!("{csv}");
    Ok(())
}

fn error_kind(e: &HefError) -> &'static str {
    match e {
        HefError::Config(_) => "config",
        HefError::Shape(_) => "shape",
        HefError::Numeric(_) => "numeric",
        HefError::Io(_) => "io",
        HefError::Parse(_) => "parse",
    }
}

fn main() {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("HEF_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                // ignore the error if a pool already exists (tests)
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("warning: ignoring invalid HEF_THREADS={v:?}");
            }
        }
    }
    let res = match &cli.cmd {
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::DemoBanana(a) => cmd_demo_banana(a),
        Cmd::AnalyzeKl(a) => cmd_analyze_kl(a),
        Cmd::BenchConv(a) => cmd_bench_conv(a),
    };
    if let Err(e) = res {
        if cli.json_errors {
            eprintln!(
                "{}",
                serde_json::json!({
                    "kind": error_kind(&e),
                    "exit_code": e.exit_code(),
                    "message": e.to_string(),
                })
            );
        } else {
            eprintln!("error: {e}");
        }
        std::process::exit(e.exit_code());
    }
}
