//! Experiment descriptors and the runner behind the command line.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::arms::{canonical, ArmQuery, ArmVariant, ColorSequence};
use crate::cluster::Direction;
use crate::error::{param, Error, Result};
use crate::fire::{simulate, SizeMetric};
use crate::harness::{
    bisect_pc, estimate_annulus_recovery, estimate_arm_scaling, estimate_crossing, estimate_sdp_crossing,
    estimate_theorem_cross, estimate_theta, run_indexed, scan_delta_c, McConfig, PcBisection,
};
use crate::lattice::{ball, Coord, Rect};
use crate::merger::census_csv;
use crate::stats::{fit_power_law, Estimate, FitPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PcBisect,
    Crossing,
    TheoremCross,
    AnnulusRecovery,
    Theta,
    DeltaCScan,
    ArmScaling,
    Merger,
    ForestFire,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::PcBisect,
        ExperimentKind::Crossing,
        ExperimentKind::TheoremCross,
        ExperimentKind::AnnulusRecovery,
        ExperimentKind::Theta,
        ExperimentKind::DeltaCScan,
        ExperimentKind::ArmScaling,
        ExperimentKind::Merger,
        ExperimentKind::ForestFire,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PcBisect => "pc-bisect",
            ExperimentKind::Crossing => "crossing",
            ExperimentKind::TheoremCross => "sdp-cross",
            ExperimentKind::AnnulusRecovery => "annulus",
            ExperimentKind::Theta => "theta",
            ExperimentKind::DeltaCScan => "delta-scan",
            ExperimentKind::ArmScaling => "arms",
            ExperimentKind::Merger => "merger",
            ExperimentKind::ForestFire => "forest-fire",
        }
    }

    /// Accepted parameter keys besides the shared critical-point keys.
    fn keys(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::PcBisect => &["n", "tol"],
            ExperimentKind::Crossing => &["p", "n", "aspect", "direction", "delta", "margin"],
            ExperimentKind::TheoremCross => &["p", "delta", "n"],
            ExperimentKind::AnnulusRecovery => &["p", "delta", "n", "halo"],
            ExperimentKind::Theta => &["p", "delta", "m", "horizon"],
            ExperimentKind::DeltaCScan => &["p-grid", "delta-grid", "m", "horizon"],
            ExperimentKind::ArmScaling => &["p", "sigma", "inner", "outer", "variant", "defect"],
            ExperimentKind::Merger => &["max-n"],
            ExperimentKind::ForestFire => &["box", "threshold", "tmax", "runs", "size-metric", "radii"],
        }
    }

    fn uses_pc(self) -> bool {
        !matches!(self, ExperimentKind::PcBisect | ExperimentKind::Merger | ExperimentKind::ForestFire)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ExperimentKind> {
        let norm = s.replace('_', "-");
        let alias = match norm.as_str() {
            "theorem-cross" => "sdp-cross",
            "annulus-recovery" => "annulus",
            "delta-c-scan" => "delta-scan",
            "arm-scaling" => "arms",
            other => other,
        };
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == alias)
            .ok_or_else(|| Error::Parameter(format!("unknown experiment {s:?}")))
    }
}

const PC_KEYS: [&str; 4] = ["p-c", "pc-n", "pc-samples", "pc-tol"];

/// An experiment kind with its string parameters. Keys use dashes; values
/// that are lists are comma separated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub params: BTreeMap<String, String>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> ExperimentSpec {
        ExperimentSpec { kind, params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> ExperimentSpec {
        self.params.insert(key.replace('_', "-"), value.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        for k in self.params.keys() {
            let ok = self.kind.keys().contains(&k.as_str()) || (self.kind.uses_pc() && PC_KEYS.contains(&k.as_str()));
            if !ok {
                return param(format!("{} does not take parameter {k:?}", self.kind));
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(|s| s.trim())
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Parameter(format!("bad value {v:?} for {key}"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str, default: &str) -> Result<Vec<T>> {
        let v = self.raw(key).unwrap_or(default);
        v.split(',')
            .map(|s| s.trim().parse().map_err(|_| Error::Parameter(format!("bad list item {s:?} for {key}"))))
            .collect()
    }

    /// Probability parameter; `pc` (or absence) means the run's `p̂_c`.
    fn prob(&self, key: &str, pc: &mut PcCache) -> Result<f64> {
        match self.raw(key) {
            None | Some("pc") => pc.get(),
            Some(v) => v.parse().map_err(|_| Error::Parameter(format!("bad probability {v:?} for {key}"))),
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Format(format!("line {}: expected key = value", no + 1)));
        };
        out.insert(k.trim().trim_start_matches("--").replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

/// `p̂_c`, estimated on first use unless given.
struct PcCache<'a> {
    spec: &'a ExperimentSpec,
    cfg: &'a McConfig,
    value: Option<f64>,
    bisection: Option<PcBisection>,
}

impl PcCache<'_> {
    fn get(&mut self) -> Result<f64> {
        if let Some(v) = self.value {
            return Ok(v);
        }
        if let Some(v) = self.spec.raw("p-c") {
            let v: f64 = v.parse().map_err(|_| Error::Parameter(format!("bad p-c {v:?}")))?;
            self.value = Some(v);
            return Ok(v);
        }
        let n = self.spec.get("pc-n", 64u32)?;
        let samples = self.spec.get("pc-samples", 2000u64)?;
        let tol = self.spec.get("pc-tol", 1e-4f64)?;
        let b = bisect_pc(n, tol, &McConfig { samples, ..*self.cfg })?;
        self.value = Some(b.estimate.value);
        self.bisection = Some(b);
        Ok(self.value.unwrap())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub csv: String,
    pub metadata: serde_json::Value,
    /// Per-event JSON lines (forest fires only).
    pub jsonl: Option<String>,
}

fn estimate_row(out: &mut String, prefix: &str, e: &Estimate) {
    let _ = writeln!(out, "{prefix},{},{},{},{},{}", e.hits, e.samples, e.value, e.ci_lo, e.ci_hi);
}

fn fit_json(points: &[FitPoint]) -> serde_json::Value {
    match fit_power_law(points) {
        Ok(f) => serde_json::to_value(f).unwrap(),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Runs one experiment. The CSV depends only on `(spec, seed, samples)`.
pub fn run_experiment(spec: &ExperimentSpec, cfg: &McConfig) -> Result<ExperimentOutput> {
    spec.validate()?;
    let mut pc = PcCache { spec, cfg, value: None, bisection: None };
    let mut csv = String::new();
    let mut meta = serde_json::Map::new();
    let mut jsonl = None;
    match spec.kind {
        ExperimentKind::PcBisect => {
            let tol = spec.get("tol", 1e-4)?;
            csv.push_str("n,step,p,hits,samples,freq,ci_lo,ci_hi\n");
            let mut finals = Vec::new();
            for n in spec.list::<u32>("n", "64")? {
                let b = bisect_pc(n, tol, cfg)?;
                for (k, s) in b.trace.iter().enumerate() {
                    let freq = s.hits as f64 / s.samples as f64;
                    let _ = writeln!(csv, "{n},{k},{},{},{},{freq},{},{}", s.p, s.hits, s.samples, s.ci_lo, s.ci_hi);
                }
                let e = &b.estimate;
                let _ = writeln!(csv, "{n},final,{},{},{},{},{},{}", e.value, e.hits, e.samples, e.hits as f64 / e.samples as f64, e.ci_lo, e.ci_hi);
                finals.push(serde_json::to_value(e).unwrap());
            }
            meta.insert("estimates".into(), json!(finals));
        }
        ExperimentKind::Crossing => {
            let p = spec.prob("p", &mut pc)?;
            let aspect = spec.get("aspect", 2u32)?;
            let direction = match spec.raw("direction").unwrap_or("horizontal") {
                "horizontal" | "h" => Direction::Horizontal,
                "vertical" | "v" => Direction::Vertical,
                d => return param(format!("unknown direction {d:?}")),
            };
            let delta: Option<f64> = spec.raw("delta").map(|_| spec.get("delta", 0.0)).transpose()?;
            csv.push_str("n,width,height,p,delta,hits,samples,p_hat,ci_lo,ci_hi\n");
            for n in spec.list::<u32>("n", "16,32,64")? {
                let rect = Rect::box_mn(aspect * n, n);
                let e = match delta {
                    None => estimate_crossing(p, rect, direction, cfg)?,
                    Some(d) => {
                        let margin = spec.get("margin", n)? as i32;
                        estimate_sdp_crossing(p, d, rect, rect.expand(margin), direction, cfg)?
                    }
                };
                let prefix = format!("{n},{},{},{p},{}", aspect * n, n, delta.unwrap_or(0.0));
                estimate_row(&mut csv, &prefix, &e);
            }
        }
        ExperimentKind::TheoremCross | ExperimentKind::AnnulusRecovery => {
            let p = spec.prob("p", &mut pc)?;
            let theorem = spec.kind == ExperimentKind::TheoremCross;
            let delta = spec.get("delta", if theorem { 0.05 } else { 0.02 })?;
            let halo = spec.get("halo", 6u32)?;
            let default_n = if theorem { "8,16,32,64,128" } else { "8,16,32,64" };
            csv.push_str("n,p,delta,hits,samples,p_hat,ci_lo,ci_hi\n");
            let mut points = Vec::new();
            for n in spec.list::<u32>("n", default_n)? {
                let e = if theorem {
                    estimate_theorem_cross(p, delta, n, cfg)?
                } else {
                    estimate_annulus_recovery(p, delta, n, halo, cfg)?
                };
                estimate_row(&mut csv, &format!("{n},{p},{delta}"), &e);
                points.push(FitPoint::from((n as f64, &e)));
            }
            if theorem && points.len() >= 3 {
                meta.insert("fit".into(), fit_json(&points));
            }
        }
        ExperimentKind::Theta => {
            let p = spec.prob("p", &mut pc)?;
            let m = spec.get("m", 16u32)?;
            let horizon = spec.get("horizon", 3 * m)?;
            csv.push_str("p,delta,m,horizon,hits,samples,p_hat,ci_lo,ci_hi\n");
            for d in spec.list::<f64>("delta", "0.1")? {
                let e = estimate_theta(p, d, m, ball(Coord::ORIGIN, horizon), cfg)?;
                estimate_row(&mut csv, &format!("{p},{d},{m},{horizon}"), &e);
            }
        }
        ExperimentKind::DeltaCScan => {
            let p_c = pc.get()?;
            let m = spec.get("m", 16u32)?;
            let horizon = spec.get("horizon", 3 * m)?;
            let ps = spec.list::<f64>("p-grid", "0,0.2,0.4,0.6,0.7")?;
            let ds = spec.list::<f64>("delta-grid", "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7")?;
            let rows = scan_delta_c(&ps, &ds, m, ball(Coord::ORIGIN, horizon), p_c, cfg)?;
            csv.push_str("p,delta_hat,closed_form,linear_bound\n");
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            for r in &rows {
                let _ = writeln!(csv, "{},{},{},{}", r.p, opt(r.delta_hat), opt(r.closed_form), opt(r.linear_bound));
            }
            meta.insert("cells".into(), serde_json::to_value(&rows).unwrap());
        }
        ExperimentKind::ArmScaling => {
            let p = spec.prob("p", &mut pc)?;
            let sigma_s = spec.raw("sigma").unwrap_or("Arm3hp");
            let sequence = match canonical(sigma_s) {
                Some(s) => s,
                None => sigma_s.parse::<ColorSequence>()?,
            };
            let default_variant = if sigma_s.ends_with("hp") { "above" } else { "full" };
            let variant: ArmVariant = spec.raw("variant").unwrap_or(default_variant).parse()?;
            let inner = spec.get("inner", 6u32)?;
            let outers = spec.list::<u32>("outer", "48,96,192,384")?;
            let defect = spec.get("defect", false)?;
            let q = ArmQuery::new(Coord::ORIGIN, inner, 0, sequence, variant).with_defect(defect);
            let est = estimate_arm_scaling(std::slice::from_ref(&q), p, &outers, cfg)?;
            let n = q.normalized().inner;
            csv.push_str("n,N,hits,samples,p_hat,ci_lo,ci_hi\n");
            let mut points = Vec::new();
            for (e, &big) in est[0].iter().zip(&outers) {
                estimate_row(&mut csv, &format!("{n},{big}"), e);
                points.push(FitPoint::from((big as f64 / n as f64, e)));
            }
            if points.len() >= 3 {
                meta.insert("fit".into(), fit_json(&points));
            }
        }
        ExperimentKind::Merger => {
            csv = census_csv(spec.get("max-n", 2u32)?)?;
        }
        ExperimentKind::ForestFire => {
            let half = spec.get("box", 16u32)? as i32;
            let domain = Rect::new(-half, half, -half, half)?;
            let threshold = spec.get("threshold", 64u32)?;
            let t_max = spec.get("tmax", 3.0f64)?;
            let runs = spec.get("runs", cfg.samples)?;
            let metric: SizeMetric = spec.raw("size-metric").unwrap_or("sites").parse()?;
            let radii = spec.list::<u32>("radii", &format!("{}", half / 2))?;
            let logs = run_indexed(runs, cfg.threads, |i| simulate(domain, threshold, t_max, metric, &cfg.source(i)))?;
            csv.push_str("run,time,size,sites,min_dist,x_min,x_max,y_min,y_max\n");
            let mut lines = String::new();
            for (run, log) in logs.iter().enumerate() {
                for e in &log.events {
                    let b = e.bbox;
                    let _ = writeln!(
                        csv,
                        "{run},{},{},{},{},{},{},{},{}",
                        e.time, e.cluster_size, e.sites, e.min_dist, b.x_min(), b.x_max(), b.y_min(), b.y_max()
                    );
                }
                for l in log.to_json_lines(&radii).lines() {
                    let mut v: serde_json::Value = serde_json::from_str(l).expect("own output");
                    v["run"] = json!(run);
                    lines.push_str(&v.to_string());
                    lines.push('\n');
                }
            }
            let max_sites = logs.iter().map(|l| l.max_cluster_sites).max().unwrap_or(0);
            meta.insert("box".into(), json!([-half, half, -half, half]));
            meta.insert("max_cluster_sites".into(), json!(max_sites));
            meta.insert("events".into(), json!(logs.iter().map(|l| l.events.len()).sum::<usize>()));
            jsonl = Some(lines);
        }
    }
    meta.insert("experiment".into(), json!(spec.kind.name()));
    meta.insert("params".into(), json!(spec.params));
    meta.insert("seed".into(), json!(cfg.seed));
    meta.insert("samples".into(), json!(cfg.samples));
    if let Some(v) = pc.value {
        meta.insert("p_c".into(), json!(v));
    }
    if let Some(b) = &pc.bisection {
        meta.insert("p_c_estimate".into(), serde_json::to_value(&b.estimate).unwrap());
    }
    Ok(ExperimentOutput { csv, metadata: serde_json::Value::Object(meta), jsonl })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert_eq!("theorem_cross".parse::<ExperimentKind>().unwrap(), ExperimentKind::TheoremCross);
        assert!("nope".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn key_value_text() {
        let kv = parse_kv("# run\nseed = 3\n--samples=10  # inline\nsize_metric = diameter\n").unwrap();
        assert_eq!(kv["seed"], "3");
        assert_eq!(kv["samples"], "10");
        assert_eq!(kv["size-metric"], "diameter");
        assert!(parse_kv("oops").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let s = ExperimentSpec::new(ExperimentKind::Merger).with("p", 0.5);
        assert!(s.validate().is_err());
        let s = ExperimentSpec::new(ExperimentKind::Theta).with("p_c", 0.59);
        assert!(s.validate().is_ok());
    }
}
