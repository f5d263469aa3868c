use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use conical_fronts::experiment::report::{emit_report, ReportFormat};
use conical_fronts::experiment::{run_experiment_with, ExperimentConfig, RunManifest};
use conical_fronts::model::validate_nonlinearity;
use conical_fronts::pulsating::{planar_front_speed_1d, PlanarOptions};

#[derive(Parser)]
#[command(name = "conical-fronts", version, about = "Pulsating and conical combustion fronts in shear flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration without solving anything.
    Validate(Common),
    /// One-dimensional planar front speed.
    SolvePlanar(Common),
    /// Strip solves for every angle.
    SolvePulsating(Common),
    /// Strip solves and barriers.
    BuildBarriers(Common),
    /// Everything up to the plane evolution.
    Evolve(Common),
    /// Evolution followed by the verification checks.
    Verify(Common),
    /// The whole pipeline with every stage the config enables.
    RunAll(Common),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `outputs.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Uniform grid refinement factor.
    #[arg(long, default_value_t = 1)]
    grid_scale: usize,
    /// Override a scalar config field, e.g. `--set tolerances.speed_formula=0.01`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    /// Write only the JSON manifest.
    #[arg(long)]
    json_only: bool,
}

fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec.split_once('=').with_context(|| format!("override {spec:?} is not PATH=VALUE"))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    if value.is_object() || value.is_array() {
        bail!("override {path} must be a scalar");
    }
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (k, key) in keys.iter().enumerate() {
        let obj = node.as_object_mut().with_context(|| format!("{path}: not an object at {key}"))?;
        if k + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields a key")
}

fn load(c: &Common) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&c.config).with_context(|| format!("reading {}", c.config.display()))?;
    let mut doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", c.config.display()))?;
    for o in &c.overrides {
        apply_override(&mut doc, o)?;
    }
    Ok(serde_json::from_value(doc)?)
}

fn summary(m: &RunManifest) {
    for s in &m.stages {
        let alpha = s.alpha.map(|a| format!(" alpha={a:.6}")).unwrap_or_default();
        match &s.error {
            None => println!("stage {}{alpha}: ok ({:.1} s)", s.stage, s.seconds),
            Some(e) => println!("stage {}{alpha}: FAILED ({e})", s.stage),
        }
    }
    for c in &m.checks {
        let alpha = c.alpha.map(|a| format!(" alpha={a:.6}")).unwrap_or_default();
        println!("{} {}{alpha}: value {:.6e}, tolerance {:.3e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    println!("overall: {}", if m.pass { "pass" } else { "fail" });
}

fn run(cli: Cli) -> Result<bool> {
    let (common, level) = match &cli.command {
        Command::Validate(c) => (c, 0),
        Command::SolvePlanar(c) => (c, 1),
        Command::SolvePulsating(c) => (c, 2),
        Command::BuildBarriers(c) => (c, 3),
        Command::Evolve(c) => (c, 4),
        Command::Verify(c) | Command::RunAll(c) => (c, 5),
    };
    let mut cfg = load(common)?;
    cfg.validate()?;
    if level == 0 {
        let nv = validate_nonlinearity(&cfg.nonlinearity()?);
        println!("{}", serde_json::to_string_pretty(&serde_json::json!({"config": cfg.name, "nonlinearity": nv}))?);
        return Ok(nv.all_pass());
    }
    if level == 1 {
        let front = planar_front_speed_1d(&cfg.nonlinearity()?, &PlanarOptions::default())?;
        println!(
            "{}",
            serde_json::json!({"c0": front.c, "bracket": front.bracket, "richardson_delta": front.richardson_delta})
        );
        return Ok(true);
    }
    let st = &mut cfg.stages;
    st.barriers &= level >= 3;
    st.evolve &= level >= 4;
    st.from_super &= level >= 4;
    st.verify &= level >= 5;
    let exp = run_experiment_with(&cfg, common.grid_scale, common.jobs)?;
    summary(&exp.manifest);
    let out = common.out.clone().or_else(|| cfg.outputs.directory.as_ref().map(PathBuf::from));
    if let Some(dir) = out {
        let format = if common.json_only || !cfg.outputs.csv { ReportFormat::Json } else { ReportFormat::Bundle };
        let files = emit_report(&exp, &dir, format)?;
        println!("wrote {} files to {}", files.len(), dir.display());
    }
    Ok(exp.manifest.pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
