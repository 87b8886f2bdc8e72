use serde::{Deserialize, Serialize};

use crate::error::{CapflowError, Result};
use crate::quermass::BoundarySign;

/// One monitored step of a flow run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub max_f: f64,
    pub kappa_min: f64,
    /// `W_{0,theta}, ..., W_{n,theta}`.
    pub w: Vec<f64>,
    /// Sup distance of the graph function to the best-fitting cap.
    pub dist_to_cap: f64,
    /// Predicted `d W_{1,theta} / dt`.
    pub dissipation: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub config_hash: String,
    pub sign_convention: Option<BoundarySign>,
    /// Proportionality constant between the normal speed and the graph speed.
    pub fitted_factor: Option<f64>,
    pub rows: Vec<TrajectoryRow>,
    /// Radius of the cap with the initial `W_{0,theta}`.
    pub r_inf: Option<f64>,
    pub final_u: Vec<f64>,
    pub final_t: f64,
    /// Sup distance of the final graph to the cap of radius `r_inf`.
    pub final_dist_to_cap: Option<f64>,
    /// Infimum of the smallest principal curvature over accepted states.
    pub kappa_inf: f64,
    pub converged: bool,
    pub steps: usize,
    pub rejections: usize,
}

impl TrajectoryRecord {
    pub fn last(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }

    /// Column `k` of the quermassintegral history.
    pub fn w_series(&self, k: usize) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.w[k])).collect()
    }

    /// Writes the monitored rows as CSV.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        write_csv_header(&mut w, self.rows.first().map_or(0, |r| r.w.len()))?;
        for r in &self.rows {
            write_csv_row(&mut w, r)?;
        }
        Ok(())
    }
}

pub fn write_csv_header<W: std::io::Write>(mut w: W, nw: usize) -> std::io::Result<()> {
    write!(w, "step,t,dt,max_f,kappa_min")?;
    for k in 0..nw {
        write!(w, ",w{k}")?;
    }
    writeln!(w, ",dist_to_cap,dissipation")
}

/// One CSV line; floats use the shortest representation that parses back exactly.
pub fn write_csv_row<W: std::io::Write>(mut w: W, r: &TrajectoryRow) -> std::io::Result<()> {
    write!(w, "{},{},{},{},{}", r.step, r.t, r.dt, r.max_f, r.kappa_min)?;
    for v in &r.w {
        write!(w, ",{v}")?;
    }
    let d = r.dissipation.map_or(String::new(), |d| d.to_string());
    writeln!(w, ",{},{d}", r.dist_to_cap)
}

/// Parses rows written by [`write_csv_row`]. Lines starting with `#` and the
/// header are skipped.
pub fn read_csv_rows<R: std::io::BufRead>(r: R) -> Result<Vec<TrajectoryRow>> {
    let mut rows = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.starts_with("step") || line.trim().is_empty() {
            continue;
        }
        let bad = || CapflowError::invalid(format!("trajectory line {}: `{line}`", lineno + 1));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 8 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let nw = fields.len() - 7;
        rows.push(TrajectoryRow {
            step: fields[0].parse().map_err(|_| bad())?,
            t: num(fields[1])?,
            dt: num(fields[2])?,
            max_f: num(fields[3])?,
            kappa_min: num(fields[4])?,
            w: fields[5..5 + nw].iter().map(|s| num(s)).collect::<Result<_>>()?,
            dist_to_cap: num(fields[5 + nw])?,
            dissipation: match fields[6 + nw] {
                "" => None,
                s => Some(num(s)?),
            },
        });
    }
    Ok(rows)
}
