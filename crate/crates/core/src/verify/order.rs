use serde::{Deserialize, Serialize};

use crate::cap::{cap_graph, cap_quermass_all, CapParams};
use crate::error::{CapflowError, Result};
use crate::flow::{graph_speed, FlowMode};
use crate::quermass::{minkowski_residual, quermass_vector, sign_resolution, SignResolution};
use crate::surface::{reconstruct, HemisphereGrid};

/// Observed order below which a suite fails.
pub const ORDER_FLOOR: f64 = 1.5;
/// Observed order a healthy quantity is expected to reach.
pub const ORDER_TARGET: f64 = 1.9;
/// Errors below this are round-off; orders involving them are not reported.
pub const NOISE_FLOOR: f64 = 1e-11;

/// Observed orders `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` of one quantity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderRow {
    pub quantity: String,
    pub errors: Vec<f64>,
    /// `None` where either error is at the noise floor.
    pub orders: Vec<Option<f64>>,
}

impl OrderRow {
    pub fn new(quantity: impl Into<String>, h: &[f64], errors: Vec<f64>) -> Self {
        let orders = (1..errors.len())
            .map(|i| {
                let (a, b) = (errors[i - 1], errors[i]);
                (a > NOISE_FLOOR && b > NOISE_FLOOR).then(|| (a / b).ln() / (h[i - 1] / h[i]).ln())
            })
            .collect();
        Self {
            quantity: quantity.into(),
            errors,
            orders,
        }
    }

    /// Smallest reported order, or `None` if every pair is at the noise floor.
    pub fn min_order(&self) -> Option<f64> {
        self.orders.iter().flatten().copied().reduce(f64::min)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub theta: f64,
    pub levels: Vec<HemisphereGrid>,
    pub rows: Vec<OrderRow>,
    pub sign: SignResolution,
}

impl ConsistencyReport {
    pub fn min_order(&self) -> Option<f64> {
        self.rows.iter().filter_map(OrderRow::min_order).reduce(f64::min)
    }

    pub fn row(&self, quantity: &str) -> Option<&OrderRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    /// `OrderRegression` for the first quantity below `ORDER_FLOOR`.
    pub fn check(&self) -> Result<()> {
        for r in &self.rows {
            if let Some(o) = r.min_order() {
                if o < ORDER_FLOOR {
                    return Err(CapflowError::OrderRegression {
                        quantity: r.quantity.clone(),
                        order: o,
                        threshold: ORDER_FLOOR,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Mesh widths of a refinement family; rejects fewer than three levels,
/// mixed grids and repeated widths.
pub fn refinement_widths(levels: &[HemisphereGrid]) -> Result<Vec<f64>> {
    if levels.len() < 3 {
        return Err(CapflowError::invalid("a refinement study needs at least three grid levels"));
    }
    let (mode, n) = (levels[0].mode, levels[0].n);
    if levels.iter().any(|g| g.mode != mode || g.n != n) {
        return Err(CapflowError::invalid("grid levels must share mode and dimension"));
    }
    let h: Vec<f64> = levels.iter().map(HemisphereGrid::h_min).collect();
    if h.windows(2).any(|p| !(p[1] < p[0] * (1.0 - 1e-12))) {
        return Err(CapflowError::invalid("grid levels must be strictly refining; order is undefined"));
    }
    Ok(h)
}

const SUITE_RADII: [f64; 3] = [0.5, 1.0, 2.0];

/// Refinement orders of the cap-family checks at contact angle `theta`:
/// stationarity, curvatures, Minkowski residuals and quermassintegrals.
/// Fails with `OrderRegression` if any observed order is below `ORDER_FLOOR`.
pub fn consistency_suite(theta: f64, levels: &[HemisphereGrid]) -> Result<ConsistencyReport> {
    let h = refinement_widths(levels)?;
    let n = levels[0].n;
    let caps: Vec<CapParams> = SUITE_RADII
        .iter()
        .map(|&r| CapParams::new(theta, r, n))
        .collect::<Result<_>>()?;
    let exact: Vec<Vec<f64>> = caps.iter().map(cap_quermass_all).collect::<Result<_>>()?;
    let names: Vec<String> = ["stationarity".to_string(), "curvature".to_string()]
        .into_iter()
        .chain((1..=n).map(|k| format!("minkowski_k{k}")))
        .chain((0..=n).map(|k| format!("quermass_k{k}")))
        .collect();
    // per level: worst error of each quantity over the caps
    let per_level = crate::par::map_tasks(levels, |_, grid| -> Result<Vec<f64>> {
        let mut worst = vec![0.0f64; names.len()];
        for (p, ex) in caps.iter().zip(&exact) {
            let state = cap_graph(p, grid);
            let s = reconstruct(&state, grid)?;
            let mut e = Vec::with_capacity(names.len());
            e.push(graph_speed(&state, grid, FlowMode::Mct)?.iter().fold(0.0f64, |m, f| m.max(f.abs())));
            e.push(
                (0..s.node_count())
                    .flat_map(|i| s.kappa(i).iter().map(|k| (k - 1.0 / p.r).abs()).collect::<Vec<_>>())
                    .fold(0.0f64, f64::max),
            );
            for k in 1..=n {
                e.push(minkowski_residual(&s, k, theta)?.abs());
            }
            let w = quermass_vector(&s)?.w;
            e.extend(w.iter().zip(ex).map(|(a, b)| (a - b).abs()));
            worst.iter_mut().zip(e).for_each(|(m, v)| *m = m.max(v));
        }
        Ok(worst)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rows = names
        .iter()
        .enumerate()
        .map(|(q, name)| OrderRow::new(name.clone(), &h, per_level.iter().map(|e| e[q]).collect()))
        .collect();
    let report = ConsistencyReport {
        theta,
        levels: levels.to_vec(),
        rows,
        sign: sign_resolution().clone(),
    };
    report.check()?;
    Ok(report)
}
