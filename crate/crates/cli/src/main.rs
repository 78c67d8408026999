use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sdperc::experiment::{parse_kv, run_experiment, ExperimentKind, ExperimentSpec};
use sdperc::harness::McConfig;

/// Monte Carlo experiments for self-destructive percolation.
#[derive(Parser, Debug)]
#[command(name = "sdperc", version)]
struct Cli {
    /// Base seed; sample i uses stream i.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Samples per estimate.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Worker threads (0 = all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for <kind>.csv and <kind>.json; CSV goes to stdout otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Key-value file with defaults for any flag (`samples = 1000`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Estimate p_c by bisection on box crossings.
    PcBisect(PcBisectArgs),
    /// Crossing probabilities of Box(aspect*n, n), optionally self-destructive.
    Crossing(CrossingArgs),
    /// Horizontal crossing of S_n followed by a vertical crossing of R_n after killing.
    SdpCross(SdpCrossArgs),
    /// Annulus connection in the recovered configuration.
    Annulus(AnnulusArgs),
    /// Finite-volume proxy for theta(p, delta).
    Theta(ThetaArgs),
    /// Scan of the critical enhancement delta_c(p).
    DeltaScan(DeltaScanArgs),
    /// Arm-event probabilities and power-law fits.
    Arms(ArmsArgs),
    /// Merger-tree census against the combinatorial bound.
    Merger(MergerArgs),
    /// Forest-fire runs on a finite box.
    ForestFire(ForestFireArgs),
}

/// Shared critical-point options. `p = pc` or an omitted `p` means the
/// estimated critical point.
#[derive(Args, Debug, Default)]
struct PcArgs {
    /// Fixed critical point instead of bisection.
    #[arg(long)]
    p_c: Option<String>,
    /// Box size for the p_c bisection.
    #[arg(long)]
    pc_n: Option<String>,
    /// Samples for the p_c bisection.
    #[arg(long)]
    pc_samples: Option<String>,
    /// Bisection tolerance.
    #[arg(long)]
    pc_tol: Option<String>,
}

#[derive(Args, Debug)]
struct PcBisectArgs {
    /// Box sizes, comma separated.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    tol: Option<String>,
}

#[derive(Args, Debug)]
struct CrossingArgs {
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    aspect: Option<String>,
    /// horizontal or vertical.
    #[arg(long)]
    direction: Option<String>,
    /// Enhancement; runs the self-destructive pipeline when set.
    #[arg(long)]
    delta: Option<String>,
    /// Burning horizon margin around the rectangle.
    #[arg(long)]
    margin: Option<String>,
    #[command(flatten)]
    pc: PcArgs,
}

#[derive(Args, Debug)]
struct SdpCrossArgs {
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[command(flatten)]
    pc: PcArgs,
}

#[derive(Args, Debug)]
struct AnnulusArgs {
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Burning horizon radius in units of n.
    #[arg(long)]
    halo: Option<String>,
    #[command(flatten)]
    pc: PcArgs,
}

#[derive(Args, Debug)]
struct ThetaArgs {
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// Target ball radius.
    #[arg(long)]
    m: Option<String>,
    /// Burning horizon radius.
    #[arg(long)]
    horizon: Option<String>,
    #[command(flatten)]
    pc: PcArgs,
}

#[derive(Args, Debug)]
struct DeltaScanArgs {
    #[arg(long)]
    p_grid: Option<String>,
    #[arg(long)]
    delta_grid: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[command(flatten)]
    pc: PcArgs,
}

#[derive(Args, Debug)]
struct ArmsArgs {
    #[arg(long)]
    p: Option<String>,
    /// Named sequence (Arm1, Arm3hp, Arm4hp, Arm5, Arm6) or bits like 1,0,1.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    inner: Option<String>,
    /// Outer radii, comma separated.
    #[arg(long)]
    outer: Option<String>,
    /// full-plane, half-plane-above or half-plane-below.
    #[arg(long)]
    variant: Option<String>,
    /// Allow one wildcard defect site.
    #[arg(long)]
    defect: Option<String>,
    #[command(flatten)]
    pc: PcArgs,
}

#[derive(Args, Debug)]
struct MergerArgs {
    #[arg(long)]
    max_n: Option<String>,
}

#[derive(Args, Debug)]
struct ForestFireArgs {
    /// Half side of the centred box.
    #[arg(long = "box")]
    box_: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    tmax: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    /// sites or diameter.
    #[arg(long)]
    size_metric: Option<String>,
    /// Radii for the touches flags in events.jsonl.
    #[arg(long)]
    radii: Option<String>,
}

fn pc_pairs(pc: PcArgs) -> Vec<(&'static str, Option<String>)> {
    vec![("p-c", pc.p_c), ("pc-n", pc.pc_n), ("pc-samples", pc.pc_samples), ("pc-tol", pc.pc_tol)]
}

impl Cmd {
    fn into_parts(self) -> (ExperimentKind, Vec<(&'static str, Option<String>)>) {
        use ExperimentKind as K;
        match self {
            Cmd::PcBisect(a) => (K::PcBisect, vec![("n", a.n), ("tol", a.tol)]),
            Cmd::Crossing(a) => {
                let mut v = vec![
                    ("p", a.p),
                    ("n", a.n),
                    ("aspect", a.aspect),
                    ("direction", a.direction),
                    ("delta", a.delta),
                    ("margin", a.margin),
                ];
                v.extend(pc_pairs(a.pc));
                (K::Crossing, v)
            }
            Cmd::SdpCross(a) => {
                let mut v = vec![("p", a.p), ("delta", a.delta), ("n", a.n)];
                v.extend(pc_pairs(a.pc));
                (K::TheoremCross, v)
            }
            Cmd::Annulus(a) => {
                let mut v = vec![("p", a.p), ("delta", a.delta), ("n", a.n), ("halo", a.halo)];
                v.extend(pc_pairs(a.pc));
                (K::AnnulusRecovery, v)
            }
            Cmd::Theta(a) => {
                let mut v = vec![("p", a.p), ("delta", a.delta), ("m", a.m), ("horizon", a.horizon)];
                v.extend(pc_pairs(a.pc));
                (K::Theta, v)
            }
            Cmd::DeltaScan(a) => {
                let mut v = vec![
                    ("p-grid", a.p_grid),
                    ("delta-grid", a.delta_grid),
                    ("m", a.m),
                    ("horizon", a.horizon),
                ];
                v.extend(pc_pairs(a.pc));
                (K::DeltaCScan, v)
            }
            Cmd::Arms(a) => {
                let mut v = vec![
                    ("p", a.p),
                    ("sigma", a.sigma),
                    ("inner", a.inner),
                    ("outer", a.outer),
                    ("variant", a.variant),
                    ("defect", a.defect),
                ];
                v.extend(pc_pairs(a.pc));
                (K::ArmScaling, v)
            }
            Cmd::Merger(a) => (K::Merger, vec![("max-n", a.max_n)]),
            Cmd::ForestFire(a) => (
                K::ForestFire,
                vec![
                    ("box", a.box_),
                    ("threshold", a.threshold),
                    ("tmax", a.tmax),
                    ("runs", a.runs),
                    ("size-metric", a.size_metric),
                    ("radii", a.radii),
                ],
            ),
        }
    }
}

const GLOBAL_KEYS: [&str; 4] = ["seed", "samples", "threads", "out"];

fn git_revision() -> Option<String> {
    let out = Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    out.status.success().then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn parse_global<T: std::str::FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    file.get(key)
        .map(|v| v.parse().map_err(|_| anyhow::anyhow!("config: bad value {v:?} for {key}")))
        .transpose()
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_kv(&text)?
        }
        None => BTreeMap::new(),
    };
    let seed = cli.seed.or(parse_global(&file, "seed")?).unwrap_or(1);
    let samples = cli.samples.or(parse_global(&file, "samples")?).unwrap_or(1000);
    let threads = cli.threads.or(parse_global(&file, "threads")?).unwrap_or(0);
    let out = cli.out.clone().or(file.get("out").map(PathBuf::from));
    for k in GLOBAL_KEYS {
        file.remove(k);
    }
    let (kind, flags) = cli.cmd.into_parts();
    if let Some(named) = file.remove("experiment") {
        if named.parse::<ExperimentKind>()? != kind {
            bail!("config names experiment {named:?} but the subcommand is {kind}");
        }
    }
    let mut spec = ExperimentSpec { kind, params: file };
    for (key, value) in flags {
        if let Some(v) = value {
            spec = spec.with(key, v);
        }
    }

    let cfg = McConfig::new(seed, samples, threads);
    let start = Instant::now();
    let result = run_experiment(&spec, &cfg)?;
    let runtime = start.elapsed().as_secs_f64();

    let mut meta = result.metadata;
    if let Some(obj) = meta.as_object_mut() {
        obj.insert("git_revision".into(), git_revision().into());
        obj.insert("runtime_seconds".into(), runtime.into());
        obj.insert("threads".into(), threads.into());
    }
    match out {
        Some(dir) => {
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let name = kind.name();
            fs::write(dir.join(format!("{name}.csv")), &result.csv)?;
            fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&meta)? + "\n")?;
            if let Some(lines) = &result.jsonl {
                fs::write(dir.join("events.jsonl"), lines)?;
            }
            eprintln!("wrote {} ({runtime:.1}s)", dir.join(format!("{name}.csv")).display());
        }
        None => print!("{}", result.csv),
    }
    Ok(())
}
