use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use capflow::flow::{run, FlowConfig};
use capflow::verify::{
    af_check, calibrate_tol_disc, consistency_suite, convergence_check, estimates_check, monotonicity_report,
    random_convex_samples, EstimateBundle,
};
use capflow::{perturbed_cap, CapflowError, HemisphereGrid, TrajectoryRecord};

use crate::commands::write_json;
use crate::manifest::config_from_args;
use crate::{Status, Suite, VerifyArgs};

const W0_DRIFT: f64 = 1e-3;
const DISSIPATION_TOL: f64 = 0.05;
const DIST_TOL: f64 = 5e-3;
const UMBILIC_DEFECT: f64 = 0.05;

struct Table {
    name: &'static str,
    text: String,
}

impl Table {
    fn new(name: &'static str, header: &str) -> Self {
        Self {
            name,
            text: format!("{header}\n"),
        }
    }

    fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }
}

pub fn verify(args: &VerifyArgs) -> anyhow::Result<Status> {
    let cfg = config_from_args(&args.flow)?;
    let (report, tables, passed) = match args.suite {
        Suite::Af => af_suite(&cfg, args)?,
        Suite::Est => est_suite(&cfg, args)?,
        Suite::Order => order_suite(&cfg)?,
        Suite::Mono | Suite::Conv => flow_suite(&cfg, args)?,
    };
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        write_json(&out.join("report.json"), &report)?;
        for t in &tables {
            write_table(&out.join(format!("{}.csv", t.name)), t)?;
        }
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if passed { Status::Ok } else { Status::GateFailed })
}

fn write_table(path: &Path, t: &Table) -> anyhow::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(t.text.as_bytes())?;
    Ok(())
}

fn af_suite(cfg: &FlowConfig, args: &VerifyArgs) -> anyhow::Result<(Value, Vec<Table>, bool)> {
    let grid = &cfg.grid;
    let n = grid.n;
    let tol = calibrate_tol_disc(cfg.theta, grid)?;
    let samples = random_convex_samples(cfg.theta, grid, args.samples, args.seed)?;
    let ks: Vec<String> = (1..n).map(|k| format!("slack_k{k}")).collect();
    let mut table = Table::new("af", &format!("index,radius,amplitude,umbilicity_defect,kappa_min,{}", ks.join(",")));
    let mut passed = true;
    let mut worst = f64::INFINITY;
    for s in &samples {
        let defect = s.sample.umbilicity_defect();
        let slacks: Vec<f64> = (1..n).map(|k| af_check(&s.sample, k)).collect::<capflow::Result<_>>()?;
        for &sl in &slacks {
            worst = worst.min(sl);
            passed &= sl >= -tol && (defect <= UMBILIC_DEFECT || sl > tol);
        }
        let mut fields = vec![
            s.draw.index.to_string(),
            s.draw.radius.to_string(),
            s.draw.amplitude.to_string(),
            defect.to_string(),
            s.sample.kappa_min().to_string(),
        ];
        fields.extend(slacks.iter().map(|v| v.to_string()));
        table.row(&fields);
    }
    let report = json!({
        "suite": "af",
        "theta": cfg.theta,
        "grid": grid.label(),
        "seed": args.seed,
        "samples": samples.len(),
        "tol_disc": tol,
        "min_slack": worst,
        "passed": passed,
    });
    Ok((report, vec![table], passed))
}

fn est_suite(cfg: &FlowConfig, args: &VerifyArgs) -> anyhow::Result<(Value, Vec<Table>, bool)> {
    let grid = &cfg.grid;
    let tol = calibrate_tol_disc(cfg.theta, grid)?;
    let samples = random_convex_samples(cfg.theta, grid, args.samples, args.seed)?;
    let mut table = Table::new("est", "index,r1,r2,support,star,height_low,height_high,tilt,passed");
    let mut passed = true;
    let mut reports = Vec::new();
    for s in &samples {
        let bundle = EstimateBundle::bracketing(&s.state, grid)?;
        let rep = estimates_check(&s.sample, &bundle, tol);
        passed &= rep.passed;
        table.row(&[
            s.draw.index.to_string(),
            bundle.r1.to_string(),
            bundle.r2.to_string(),
            rep.support.to_string(),
            rep.star.to_string(),
            rep.height_low.to_string(),
            rep.height_high.to_string(),
            rep.tilt.to_string(),
            rep.passed.to_string(),
        ]);
        reports.push(rep);
    }
    let report = json!({
        "suite": "est",
        "theta": cfg.theta,
        "grid": grid.label(),
        "seed": args.seed,
        "tol_disc": tol,
        "samples": reports,
        "passed": passed,
    });
    Ok((report, vec![table], passed))
}

/// The grid of `grid`'s kind with the widths divided by `factor`.
fn coarsened(grid: &HemisphereGrid, factor: usize) -> capflow::Result<HemisphereGrid> {
    let nxi = if grid.n_xi > 1 { grid.n_xi / factor } else { grid.n_xi };
    HemisphereGrid::new(grid.mode, grid.n, (grid.n_beta - 1) / factor + 1, nxi)
}

fn order_suite(cfg: &FlowConfig) -> anyhow::Result<(Value, Vec<Table>, bool)> {
    let levels = [coarsened(&cfg.grid, 4)?, coarsened(&cfg.grid, 2)?, cfg.grid];
    let rep = consistency_suite(cfg.theta, &levels)?;
    let mut table = Table::new("order", "quantity,level,h,error,order");
    let h: Vec<f64> = levels.iter().map(HemisphereGrid::h_min).collect();
    for row in &rep.rows {
        for (l, e) in row.errors.iter().enumerate() {
            let order = if l == 0 { None } else { row.orders[l - 1] };
            table.row(&[
                row.quantity.clone(),
                levels[l].label(),
                h[l].to_string(),
                e.to_string(),
                order.map_or(String::new(), |o| o.to_string()),
            ]);
        }
    }
    let check = rep.check();
    let report = json!({
        "suite": "order",
        "report": rep,
        "min_order": rep.min_order(),
        "passed": check.is_ok(),
    });
    if let Err(e @ CapflowError::OrderRegression { .. }) = &check {
        eprintln!("{e}");
    }
    Ok((report, vec![table], check.is_ok()))
}

fn flow_suite(cfg: &FlowConfig, args: &VerifyArgs) -> anyhow::Result<(Value, Vec<Table>, bool)> {
    let init = perturbed_cap(cfg.theta, 1.0, args.amplitude, 1, &cfg.grid)?;
    let (record, converged_run): (TrajectoryRecord, bool) = match run(cfg, init) {
        Ok(r) => (r, true),
        Err(CapflowError::NotConverged { trajectory, .. }) => (*trajectory, false),
        Err(e) => return Err(e.into()),
    };
    let mut traj = Vec::new();
    record.write_csv(&mut traj)?;
    let table = Table {
        name: "trajectory",
        text: String::from_utf8(traj)?,
    };
    let (report, passed) = if args.suite == Suite::Mono {
        let m = monotonicity_report(&record);
        let diss_ok = m.dissipation.as_ref().is_some_and(|d| d.rel_error <= DISSIPATION_TOL);
        let passed = m.w0_drift <= W0_DRIFT && m.w1_violations == 0 && diss_ok;
        (json!({"suite": "mono", "config_hash": record.config_hash, "report": m, "passed": passed}), passed)
    } else {
        let c = convergence_check(&record, cfg.theta, &cfg.grid)?;
        let passed = converged_run && c.final_dist <= DIST_TOL && c.kappa_inf > 0.0;
        (json!({"suite": "conv", "config_hash": record.config_hash, "report": c, "passed": passed}), passed)
    };
    Ok((report, vec![table], passed))
}
