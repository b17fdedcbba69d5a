use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use spinmem::engine::event_times;
use spinmem::experiments::{ensemble_for, fmt12, preset, run_experiment, EXPERIMENTS};
use spinmem::sequence::{compile, parse_sequence, Directive, LetValue, ParamValue, Params, SequenceAst, SequenceError};
use spinmem::{integrate_echo, run_sequence, EchoReport, SequenceEvent, Signal, SimConfig};

use crate::error::CliError;
use crate::output::{create_dir, manifest_path_for, read, signal_csv, write_atomic, RunManifest};

pub struct RunArgs<'a> {
    pub seq: &'a Path,
    pub config: Option<&'a Path>,
    pub seed: Option<u64>,
    pub out: &'a Path,
}

pub struct SweepArgs<'a> {
    pub seq: &'a Path,
    pub config: Option<&'a Path>,
    pub param: &'a str,
    pub values: &'a str,
    pub out_dir: &'a Path,
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn sequence_error(path: &Path) -> impl Fn(SequenceError) -> CliError + '_ {
    move |source| CliError::Sequence { path: path.display().to_string(), source }
}

fn parse_file(path: &Path) -> Result<SequenceAst, CliError> {
    parse_sequence(&read(path)?).map_err(sequence_error(path))
}

fn split_set(s: &str) -> Result<(&str, &str), CliError> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{s}`")))
}

fn let_names(ast: &SequenceAst) -> Vec<&str> {
    ast.statements
        .iter()
        .filter_map(|s| match &s.directive {
            Directive::Let { name, .. } => Some(name.as_str()),
            _ => None,
        })
        .collect()
}

/// Parses `text` as the right-hand side of `let name = ...`.
fn param_value(name: &str, text: &str) -> Result<ParamValue, CliError> {
    let bad = |message: String| CliError::Usage(format!("bad value for `{name}`: {message}"));
    let ast = parse_sequence(&format!("let {name} = {text}")).map_err(|e| bad(e.message))?;
    match ast.statements.as_slice() {
        [s] => match &s.directive {
            Directive::Let { value: LetValue::Scalar(l), .. } => Ok(ParamValue::Scalar(l.clone())),
            Directive::Let { value: LetValue::List(ls), .. } => Ok(ParamValue::List(ls.clone())),
            _ => Err(bad(format!("`{text}` is not a literal"))),
        },
        _ => Err(bad(format!("`{text}` is not a single literal"))),
    }
}

/// Config layered as `base`, then the config file, then the config-key
/// `--set` flags. Flags naming a `let` of `ast` become sequence parameters.
struct Resolved {
    cfg: SimConfig,
    params: Params,
    param_text: BTreeMap<String, String>,
}

fn resolve(base: SimConfig, file: Option<&Path>, sets: &[String], ast: Option<&SequenceAst>) -> Result<Resolved, CliError> {
    let mut cfg = base;
    if let Some(path) = file {
        cfg.apply_text(&read(path)?)?;
    }
    let names = ast.map(let_names).unwrap_or_default();
    let mut params = Params::new();
    let mut param_text = BTreeMap::new();
    for s in sets {
        let (k, v) = split_set(s)?;
        if SimConfig::is_key(k) {
            cfg.set(k, v)?;
        } else if names.contains(&k) {
            params.insert(k.to_string(), param_value(k, v)?);
            param_text.insert(k.to_string(), v.to_string());
        } else if ast.is_some() {
            return Err(CliError::UnknownParam(k.to_string()));
        } else {
            cfg.set(k, v)?;
        }
    }
    Ok(Resolved { cfg, params, param_text })
}

fn simulate(cfg: &SimConfig, events: &[SequenceEvent]) -> Result<Vec<Signal>, CliError> {
    let mut ensemble = ensemble_for(cfg)?;
    Ok(run_sequence(&mut ensemble, events)?)
}

pub fn cmd_run(args: &RunArgs, sets: &[String]) -> Result<(), CliError> {
    let start = Instant::now();
    let ast = parse_file(args.seq)?;
    let mut r = resolve(SimConfig::default(), args.config, sets, Some(&ast))?;
    if let Some(seed) = args.seed {
        r.cfg.set("seed", &seed.to_string())?;
    }
    let events = compile(&ast, &r.params).map_err(sequence_error(args.seq))?;
    let signal = Signal::concat(&simulate(&r.cfg, &events)?);
    write_atomic(args.out, signal_csv(&signal).as_bytes())?;

    let mut manifest = RunManifest::new(command_line(), &r.cfg, r.param_text);
    manifest.outputs.push(args.out.display().to_string());
    manifest.wall_time = start.elapsed().as_secs_f64();
    let manifest_path = manifest_path_for(args.out);
    manifest.write(&manifest_path)?;
    println!("wrote {} ({} samples)", args.out.display(), signal.len());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

pub fn cmd_experiment(name: &str, config: Option<&Path>, out_dir: &Path, sets: &[String]) -> Result<(), CliError> {
    if !EXPERIMENTS.contains(&name) {
        return Err(CliError::UnknownExperiment(name.to_string()));
    }
    let start = Instant::now();
    let base = preset(name).expect("every listed experiment has a preset");
    let r = resolve(base, config, sets, None)?;
    let report = run_experiment(name, &r.cfg)?;

    create_dir(out_dir)?;
    let mut manifest = RunManifest::new(command_line(), &r.cfg, BTreeMap::new());
    let json_path = out_dir.join(format!("{name}.json"));
    write_atomic(&json_path, format!("{}\n", report.to_json()).as_bytes())?;
    manifest.outputs.push(json_path.display().to_string());
    for curve in &report.curves {
        let path = out_dir.join(format!("{}.csv", curve.name));
        write_atomic(&path, curve.to_csv().as_bytes())?;
        manifest.outputs.push(path.display().to_string());
    }
    manifest.wall_time = start.elapsed().as_secs_f64();
    manifest.write(&out_dir.join("manifest.json"))?;

    println!("{name}: config {} seed {}", &report.config_digest[..12], report.seed);
    for c in &report.comparisons {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("  {verdict} {}: {:.6e} (theory {:.6e}, tolerance {:.3e})", c.name, c.value, c.theory, c.tolerance);
    }
    for path in &manifest.outputs {
        println!("wrote {path}");
    }
    match report.comparisons.iter().filter(|c| !c.pass).count() {
        0 => Ok(()),
        n => Err(CliError::ComparisonFailed(n)),
    }
}

struct SweepPoint {
    value: String,
    cfg: SimConfig,
    params: Params,
}

/// Echo at the middle of every acquisition window.
fn window_echoes(cfg: &SimConfig, events: &[SequenceEvent], signals: &[Signal]) -> Result<Vec<EchoReport>, CliError> {
    let windows = events.iter().zip(event_times(events, 0.0)).filter_map(|(ev, t)| match *ev {
        SequenceEvent::Acquire { duration, dt } => Some((t + 0.5 * duration, (0.5 * duration - dt).min(cfg.halfwidth()))),
        _ => None,
    });
    windows.zip(signals).map(|((centre, half), s)| Ok(integrate_echo(s, centre, half, 0.0)?)).collect()
}

fn run_point(i: usize, p: &SweepPoint, ast: &SequenceAst, args: &SweepArgs) -> Result<(PathBuf, Vec<EchoReport>), CliError> {
    let events = compile(ast, &p.params).map_err(sequence_error(args.seq))?;
    let signals = simulate(&p.cfg, &events)?;
    let path = args.out_dir.join(format!("point_{i:03}.csv"));
    write_atomic(&path, signal_csv(&Signal::concat(&signals)).as_bytes())?;
    Ok((path, window_echoes(&p.cfg, &events, &signals)?))
}

pub fn cmd_sweep(args: &SweepArgs, sets: &[String]) -> Result<(), CliError> {
    let start = Instant::now();
    let ast = parse_file(args.seq)?;
    let r = resolve(SimConfig::default(), args.config, sets, Some(&ast))?;
    let values: Vec<&str> = args.values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Usage("--values is empty".into()));
    }
    let is_key = SimConfig::is_key(args.param);
    if !is_key && !let_names(&ast).contains(&args.param) {
        return Err(CliError::UnknownParam(args.param.to_string()));
    }
    let points = values
        .iter()
        .map(|&v| {
            let (mut cfg, mut params) = (r.cfg.clone(), r.params.clone());
            if is_key {
                cfg.set(args.param, v)?;
            } else {
                params.insert(args.param.to_string(), param_value(args.param, v)?);
            }
            Ok(SweepPoint { value: v.to_string(), cfg, params })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    create_dir(args.out_dir)?;
    let results: Vec<_> = points.par_iter().enumerate().map(|(i, p)| run_point(i, p, &ast, args)).collect();
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let n_echoes = results.iter().map(|(_, e)| e.len()).max().unwrap_or(0);
    let mut csv = format!("point,{}", args.param);
    for k in 1..=n_echoes {
        let _ = write!(csv, ",echo{k}_t_us,echo{k}_re,echo{k}_im,echo{k}_intensity");
    }
    csv.push('\n');
    for (i, (p, (_, echoes))) in points.iter().zip(&results).enumerate() {
        let _ = write!(csv, "{i},{}", p.value);
        for k in 0..n_echoes {
            match echoes.get(k) {
                Some(e) => {
                    let cells = [e.t_center * 1e6, e.amplitude.re, e.amplitude.im, e.intensity].map(fmt12);
                    let _ = write!(csv, ",{}", cells.join(","));
                }
                None => csv.push_str(",,,,"),
            }
        }
        csv.push('\n');
    }
    let sweep_path = args.out_dir.join("sweep.csv");
    write_atomic(&sweep_path, csv.as_bytes())?;

    let mut manifest = RunManifest::new(command_line(), &r.cfg, r.param_text);
    manifest.outputs = results.iter().map(|(p, _)| p.display().to_string()).collect();
    manifest.outputs.push(sweep_path.display().to_string());
    manifest.wall_time = start.elapsed().as_secs_f64();
    manifest.write(&args.out_dir.join("manifest.json"))?;
    println!("{} points over `{}`", points.len(), args.param);
    println!("wrote {}", sweep_path.display());
    Ok(())
}
