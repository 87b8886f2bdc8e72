use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde_json::json;

use capflow::flow::{run_from, FlowState};
use capflow::io::Checkpoint;
use capflow::trajectory::{read_csv_rows, write_csv_header, write_csv_row};
use capflow::verify::{convergence_check, monotonicity_report};
use capflow::{cap, quermass_vector, reconstruct, CapParams, CapflowError, TrajectoryRecord, TrajectoryRow};

use crate::manifest::{config_from_args, Initial, RunManifest, Snapshot};
use crate::{RunArgs, Status};

pub const MANIFEST: &str = "manifest.json";
pub const CHECKPOINT: &str = "checkpoint.json";
pub const TRAJECTORY: &str = "trajectory.csv";
pub const REPORT: &str = "report.json";

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn output(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn manifest_from_args(a: &RunArgs) -> anyhow::Result<RunManifest> {
    if let Some(path) = &a.manifest {
        return RunManifest::load(path);
    }
    let config = config_from_args(&a.flow)?;
    let initial = match a.initial.as_str() {
        "cap" => Initial::Cap { radius: a.radius },
        "flat" => Initial::Flat,
        "perturbed" => Initial::PerturbedCap {
            radius: a.radius,
            amplitude: a.amplitude,
            wavenumber: a.wavenumber,
        },
        "random" => Initial::Random { index: 0 },
        path => Initial::File { path: path.into() },
    };
    Ok(RunManifest {
        config_hash: config.hash(),
        config,
        initial,
        seed: a.seed,
        checkpoint_every: a.checkpoint_every,
    })
}

pub fn run(args: &RunArgs) -> anyhow::Result<Status> {
    let manifest = manifest_from_args(args)?;
    manifest.validate()?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_json(&args.out.join(MANIFEST), &manifest)?;
    let cfg = &manifest.config;
    let start = FlowState::new(manifest.initial_state()?, cfg)?.guarded(cfg)?;
    drive(&manifest, start, &args.out, Vec::new())
}

pub fn resume(out: &Path, checkpoint: Option<&Path>) -> anyhow::Result<Status> {
    let manifest = RunManifest::load(&out.join(MANIFEST))?;
    manifest.validate()?;
    let ckpt_path = checkpoint.map_or_else(|| out.join(CHECKPOINT), Path::to_path_buf);
    let ckpt = Checkpoint::load(&ckpt_path)?;
    let start = ckpt.restore(&manifest.config)?;
    let traj = out.join(TRAJECTORY);
    let prior = if traj.is_file() {
        read_csv_rows(BufReader::new(File::open(&traj)?))?
            .into_iter()
            .filter(|r| r.step <= ckpt.step)
            .collect()
    } else {
        Vec::new()
    };
    drive(&manifest, start, out, prior)
}

/// Runs from `start`, streaming rows after `prior` into the trajectory file
/// and checkpointing every `checkpoint_every` steps and at the end.
fn drive(manifest: &RunManifest, start: FlowState, out: &Path, prior: Vec<TrajectoryRow>) -> anyhow::Result<Status> {
    let cfg = &manifest.config;
    let hash = cfg.hash();
    let ckpt_path = out.join(CHECKPOINT);
    let mut csv = BufWriter::new(File::create(out.join(TRAJECTORY))?);
    writeln!(csv, "# config_hash: {hash}")?;
    write_csv_header(&mut csv, cfg.n + 1)?;
    for r in &prior {
        write_csv_row(&mut csv, r)?;
    }
    let last_prior = prior.last().map(|r| r.step);
    let mut written = 0;
    let mut last = Checkpoint::capture(&start, cfg);
    let mut io_error: Option<anyhow::Error> = None;
    let mut observer = |s: &FlowState, rec: &TrajectoryRecord| {
        let res = (|| -> anyhow::Result<()> {
            for r in &rec.rows[written..] {
                if last_prior.is_none_or(|p| r.step > p) {
                    write_csv_row(&mut csv, r)?;
                }
            }
            written = rec.rows.len();
            last = Checkpoint::capture(s, cfg);
            if s.step_index % manifest.checkpoint_every == 0 {
                csv.flush()?;
                last.save(&ckpt_path)?;
            }
            Ok(())
        })();
        if let (Err(e), None) = (res, &io_error) {
            io_error = Some(e);
        }
    };
    let result = run_from(cfg, start, &mut observer);
    drop(observer);
    csv.flush()?;
    last.save(&ckpt_path)?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let (record, status) = match result {
        Ok(r) => (r, Status::Ok),
        Err(CapflowError::NotConverged { trajectory, t_max, max_f }) => {
            eprintln!("not converged by t = {t_max} (max|F| = {max_f:e})");
            (*trajectory, Status::NotConverged)
        }
        Err(e) => return Err(e.into()),
    };
    let mut merged = record.clone();
    merged.rows = prior.into_iter().chain(record.rows.into_iter().filter(|r| last_prior.is_none_or(|p| r.step > p))).collect();
    merged.kappa_inf = merged.rows.iter().map(|r| r.kappa_min).fold(record.kappa_inf, f64::min);
    write_report(out, &merged, cfg)?;
    Ok(status)
}

fn write_report(out: &Path, rec: &TrajectoryRecord, cfg: &capflow::flow::FlowConfig) -> anyhow::Result<()> {
    let convergence = convergence_check(rec, cfg.theta, &cfg.grid)?;
    let monotonicity = monotonicity_report(rec);
    let report = json!({
        "config_hash": rec.config_hash,
        "grid": cfg.grid.label(),
        "sign_convention": rec.sign_convention,
        "fitted_factor": rec.fitted_factor,
        "converged": rec.converged,
        "steps": rec.steps,
        "rejections": rec.rejections,
        "final_t": rec.final_t,
        "convergence": convergence,
        "monotonicity": monotonicity,
    });
    write_json(&out.join(REPORT), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

pub fn cap(theta: f64, r: f64, n: usize) -> anyhow::Result<Status> {
    let params = if r.is_infinite() && r > 0.0 {
        CapParams::flat(theta, n)?
    } else {
        CapParams::new(theta, r, n)?
    };
    let f = cap::cap_quermass_all(&params)?;
    let value = json!({
        "theta": theta,
        "r": if params.is_flat() { None } else { Some(r) },
        "flat": params.is_flat(),
        "n": n,
        "f": f,
    });
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(Status::Ok)
}

fn load_sample(path: &Path) -> anyhow::Result<(Snapshot, capflow::SurfaceSample)> {
    let snap = Snapshot::load(path)?;
    let sample = reconstruct(&snap.state(), &snap.grid)?;
    Ok((snap, sample))
}

pub fn quermass(path: &Path) -> anyhow::Result<Status> {
    let (_, sample) = load_sample(path)?;
    println!("{}", serde_json::to_string_pretty(&quermass_vector(&sample)?)?);
    Ok(Status::Ok)
}

pub fn export_obj(path: &Path, out: Option<&Path>) -> anyhow::Result<Status> {
    let (snap, sample) = load_sample(path)?;
    let dir = capflow::Direction::axis(snap.grid.n + 1);
    let mut w = output(out)?;
    capflow::surface::write_obj(&sample, &dir, &mut w)?;
    w.flush()?;
    Ok(Status::Ok)
}

pub fn export_csv(path: &Path, out: Option<&Path>) -> anyhow::Result<Status> {
    let (snap, sample) = load_sample(path)?;
    let mut w = output(out)?;
    capflow::surface::write_axisym_csv(&snap.state(), &sample, &mut w)?;
    w.flush()?;
    Ok(Status::Ok)
}
