use std::path::{Path, PathBuf};
use std::sync::Arc;

use gext_core::driver::{bootstrap_regular, run_factor, run_isomorphism, seed_from_orbit, IterationSchedule};
use gext_core::improvement::{hypothesis_distance, improve, ImproveConfig};
use gext_core::name_distributions::{kantorovich, name_distribution};
use gext_core::{GExtensionSystem, PartialSpeedup, TwistFunction};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::spec::{parse_system_spec, speedup_to_spec, system_to_spec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Metrics,
    Improve,
    Factor,
    Iso,
    SeedOrbit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub target: PathBuf,
    pub source: Option<PathBuf>,
    pub n: usize,
    pub delta: f64,
    pub n1: usize,
    pub delta1: f64,
    pub epsilon: f64,
    pub budget: usize,
    pub zeta: f64,
    /// Orbit length for `seed-orbit`; the source size when absent.
    pub len: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub strict_schedule: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [("delta", self.delta), ("delta1", self.delta1), ("epsilon", self.epsilon), ("zeta", self.zeta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::Validation(format!("--{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.n == 0 || self.n1 == 0 {
            return Err(CliError::Validation("--n and --n1 must be positive".into()));
        }
        if self.command != Command::Metrics && self.source.is_none() {
            return Err(CliError::Validation("--source is required".into()));
        }
        Ok(())
    }

    fn schedule(&self) -> Result<IterationSchedule, CliError> {
        let mut s = if self.strict_schedule {
            IterationSchedule::strict(self.epsilon, self.n, self.delta, self.budget)?
        } else {
            IterationSchedule::halving(self.epsilon, self.n, self.delta, &vec![self.n1; self.budget], self.budget)?
        };
        s.template.seed = self.seed;
        Ok(s)
    }
}

/// Rounds every float to 12 significant digits so reports diff cleanly.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(num) if num.is_f64() => {
            let x = num.as_f64().expect("f64 number");
            let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
            *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let io = |e: std::io::Error, p: &Path| CliError::Io { path: p.display().to_string(), message: e.to_string() };
    std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    let mut v = serde_json::to_value(value).expect("reports serialize");
    round_floats(&mut v);
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(&v).expect("values serialize");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| io(e, &path))?;
    Ok(path)
}

fn load(cfg: &RunConfig) -> Result<(GExtensionSystem, Option<Arc<GExtensionSystem>>), CliError> {
    let target = parse_system_spec(&cfg.target)?;
    let source = cfg.source.as_deref().map(parse_system_spec).transpose()?.map(Arc::new);
    if let Some(s) = &source {
        if s.group() != target.group() {
            return Err(CliError::Validation("target and source must share the group".into()));
        }
    }
    Ok((target, source))
}

fn write_speedup(cfg: &RunConfig, s: &PartialSpeedup, alpha: &TwistFunction, pbar: &[u32]) -> Result<(), CliError> {
    write_json(&cfg.out, "speedup.json", &speedup_to_spec(s, alpha, pbar)).map(|_| ())
}

fn metrics(cfg: &RunConfig) -> Result<Value, CliError> {
    let (target, source) = load(cfg)?;
    let source = source.unwrap_or_else(|| Arc::new(target.clone()));
    let group = target.group();
    let a = name_distribution(&target, target.labels(), None, cfg.n, group)?;
    let b = name_distribution(source.as_ref(), source.labels(), None, cfg.n, group)?;
    let report = json!({
        "n": cfg.n,
        "distance": kantorovich(&a, &b)?,
        "target_size": target.size(),
        "source_size": source.size(),
        "group_order": group.order(),
        "target_ergodic": target.check_extension_ergodic().ergodic,
        "source_ergodic": source.check_extension_ergodic().ergodic,
    });
    write_json(&cfg.out, "metrics.json", &report)?;
    Ok(report)
}

fn improve_step(cfg: &RunConfig) -> Result<Value, CliError> {
    let (target, source) = load(cfg)?;
    let source = source.expect("validated");
    let (current, cert) = bootstrap_regular(source.clone(), source.labels(), cfg.n, cfg.delta, cfg.epsilon)?;
    let mut icfg = ImproveConfig::new(cfg.n, cfg.delta, cfg.n1, cfg.delta1, cfg.epsilon);
    icfg.seed = cfg.seed;
    let out = improve(&target, &current, source.labels(), &icfg)?;
    let twisted = Arc::new(source.twist(&out.alpha)?);
    write_speedup(cfg, &out.speedup.with_parent(twisted)?, &out.alpha, &out.pbar1)?;
    let report = json!({ "bootstrap": cert, "report": out.report });
    write_json(&cfg.out, "improve_report.json", &report)?;
    Ok(report)
}

fn factor(cfg: &RunConfig) -> Result<Value, CliError> {
    let (target, source) = load(cfg)?;
    let source = source.expect("validated");
    let schedule = cfg.schedule()?;
    let run = run_factor(&target, source.clone(), source.labels(), None, &schedule)?;
    write_speedup(cfg, &run.closed, &run.beta, &run.pbar)?;
    let report = json!({ "schedule": schedule, "log": run.log });
    write_json(&cfg.out, "factor_log.json", &report)?;
    Ok(report)
}

fn iso(cfg: &RunConfig) -> Result<Value, CliError> {
    let (target, source) = load(cfg)?;
    let source = source.expect("validated");
    let schedule = cfg.schedule()?;
    let run = run_isomorphism(&target, source.clone(), source.labels(), None, &schedule, cfg.zeta)?;
    write_speedup(cfg, &run.factor.closed, &run.factor.beta, &run.factor.pbar)?;
    let report = json!({
        "schedule": schedule,
        "log": run.factor.log,
        "generator": run.generator,
        "separation_failure": run.separation_failure,
    });
    write_json(&cfg.out, "iso_log.json", &report)?;
    Ok(report)
}

fn seed_orbit(cfg: &RunConfig) -> Result<Value, CliError> {
    let (target, source) = load(cfg)?;
    let source = source.expect("validated");
    let len = cfg.len.unwrap_or(source.size());
    let (pbar, alpha) = seed_from_orbit(&target, &source, len, cfg.zeta, cfg.n)?;
    let distance = hypothesis_distance(&target, source.as_ref(), &pbar, Some(&alpha), cfg.n)?;
    let seeded = source.twist(&alpha)?.with_labels(pbar.clone())?;
    write_json(&cfg.out, "seeded_source.json", &system_to_spec(&seeded))?;
    let report = json!({ "len": len, "n": cfg.n, "hypothesis_distance": distance, "pbar": pbar, "alpha": alpha.values() });
    write_json(&cfg.out, "seed_report.json", &report)?;
    Ok(report)
}

/// Runs one subcommand. On refusal the caller writes `refusal.json` and
/// exits with [`CliError::exit_code`].
pub fn run_command(cfg: &RunConfig) -> Result<Value, CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Metrics => metrics(cfg),
        Command::Improve => improve_step(cfg),
        Command::Factor => factor(cfg),
        Command::Iso => iso(cfg),
        Command::SeedOrbit => seed_orbit(cfg),
    }
}
