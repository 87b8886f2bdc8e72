//! JSON checkpoints of flow states.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CapflowError, Result};
use crate::flow::{BracketParts, FlowConfig, FlowMode, FlowState, RunBracket, RunGuard, Scheme};
use crate::surface::{GraphState, GridMode, HemisphereGrid};

pub const CHECKPOINT_VERSION: u64 = 1;

/// Everything needed to continue a run exactly where it stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u64,
    pub config_hash: String,
    pub n: usize,
    pub theta: f64,
    pub mode: FlowMode,
    pub scheme: Scheme,
    pub grid: HemisphereGrid,
    pub t: f64,
    pub step: usize,
    pub dt_last: f64,
    pub rejections: usize,
    /// Graph values, latitude-major.
    pub u: Vec<f64>,
    pub convex: bool,
    pub w0_initial: Option<f64>,
    pub bracket: Option<BracketParts>,
}

/// Serializes infinite values as `null`.
pub(crate) mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn bad(field: &str, reason: impl Into<String>) -> CapflowError {
    CapflowError::InvalidCheckpoint {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn get<'a>(obj: &'a serde_json::Map<String, Value>, field: &str) -> Result<&'a Value> {
    obj.get(field).ok_or_else(|| bad(field, "missing"))
}

fn get_f64(obj: &serde_json::Map<String, Value>, field: &str) -> Result<f64> {
    get(obj, field)?
        .as_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad(field, "expected a finite number"))
}

fn get_usize(obj: &serde_json::Map<String, Value>, field: &str) -> Result<usize> {
    get(obj, field)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| bad(field, "expected a non-negative integer"))
}

impl Checkpoint {
    pub fn capture(state: &FlowState, config: &FlowConfig) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config_hash: config.hash(),
            n: config.n,
            theta: config.theta,
            mode: config.mode,
            scheme: config.scheme,
            grid: config.grid,
            t: state.graph.t,
            step: state.step_index,
            dt_last: state.dt_last,
            rejections: state.rejections,
            u: state.graph.u.clone(),
            convex: state.guard.convex,
            w0_initial: state.guard.w0_initial,
            bracket: state.guard.bracket.as_ref().map(|b| b.parts()),
        }
    }

    /// Parses and validates a checkpoint; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| bad("<document>", e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| bad("<document>", "expected a JSON object"))?;
        let version = get(obj, "version")?.as_u64().ok_or_else(|| bad("version", "expected an integer"))?;
        if version != CHECKPOINT_VERSION {
            return Err(bad("version", format!("unsupported version {version}")));
        }
        get(obj, "config_hash")?
            .as_str()
            .filter(|s| s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit()))
            .ok_or_else(|| bad("config_hash", "expected 64 hex digits"))?;
        let n = get_usize(obj, "n")?;
        let theta = get_f64(obj, "theta")?;
        crate::cap::validate_theta(theta).map_err(|e| bad("theta", e.to_string()))?;
        serde_json::from_value::<FlowMode>(get(obj, "mode")?.clone()).map_err(|e| bad("mode", e.to_string()))?;
        serde_json::from_value::<Scheme>(get(obj, "scheme")?.clone()).map_err(|e| bad("scheme", e.to_string()))?;
        let grid_obj = get(obj, "grid")?.as_object().ok_or_else(|| bad("grid", "expected an object"))?;
        let gmode = serde_json::from_value::<GridMode>(get(grid_obj, "mode").map_err(|_| bad("grid.mode", "missing"))?.clone())
            .map_err(|e| bad("grid.mode", e.to_string()))?;
        let gn = get_usize(grid_obj, "n").map_err(|_| bad("grid.n", "expected a non-negative integer"))?;
        let n_beta = get_usize(grid_obj, "n_beta").map_err(|_| bad("grid.n_beta", "expected a non-negative integer"))?;
        let n_xi = get_usize(grid_obj, "n_xi").map_err(|_| bad("grid.n_xi", "expected a non-negative integer"))?;
        let grid = HemisphereGrid::new(gmode, gn, n_beta, n_xi).map_err(|e| bad("grid", e.to_string()))?;
        if gn != n {
            return Err(bad("n", format!("dimension {n} differs from grid dimension {gn}")));
        }
        get_f64(obj, "t")?;
        get_usize(obj, "step")?;
        get_f64(obj, "dt_last")?;
        get_usize(obj, "rejections")?;
        let u = get(obj, "u")?.as_array().ok_or_else(|| bad("u", "expected an array"))?;
        if u.len() != grid.node_count() {
            return Err(bad("u", format!("{} values for {} grid nodes", u.len(), grid.node_count())));
        }
        if let Some(k) = u.iter().position(|v| !v.as_f64().is_some_and(f64::is_finite)) {
            return Err(bad("u", format!("entry {k} is not a finite number")));
        }
        get(obj, "convex")?.as_bool().ok_or_else(|| bad("convex", "expected a boolean"))?;
        match get(obj, "w0_initial")? {
            Value::Null => {}
            v if v.as_f64().is_some_and(|x| x > 0.0) => {}
            _ => return Err(bad("w0_initial", "expected a positive number or null")),
        }
        serde_json::from_value::<Option<BracketParts>>(get(obj, "bracket")?.clone())
            .map_err(|e| bad("bracket", e.to_string()))?;
        serde_json::from_value(value).map_err(|e| bad("<document>", e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, self.to_json()?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    /// The flow state to continue with `config`, which must hash to the
    /// recorded value.
    pub fn restore(&self, config: &FlowConfig) -> Result<FlowState> {
        let hash = config.hash();
        if hash != self.config_hash {
            return Err(bad(
                "config_hash",
                format!("checkpoint was written by config {}, not {hash}", self.config_hash),
            ));
        }
        let mut graph = GraphState::new(self.u.clone(), self.theta);
        graph.t = self.t;
        let mut state = FlowState::new(graph, config)?;
        state.step_index = self.step;
        state.dt_last = self.dt_last;
        state.rejections = self.rejections;
        let bracket = match &self.bracket {
            Some(p) => Some(std::sync::Arc::new(RunBracket::from_parts(self.theta, &config.grid, p)?)),
            None => None,
        };
        state.guard = RunGuard {
            bracket,
            convex: self.convex,
            w0_initial: self.w0_initial,
        };
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::perturbed_cap;

    fn sample_checkpoint() -> (Checkpoint, FlowConfig) {
        let grid = HemisphereGrid::axisym(2, 32).unwrap();
        let cfg = FlowConfig::new(FlowMode::Mct, 1.0, grid);
        let s = FlowState::new(perturbed_cap(1.0, 1.0, 0.05, 1, &grid).unwrap(), &cfg)
            .unwrap()
            .guarded(&cfg)
            .unwrap();
        (Checkpoint::capture(&s, &cfg), cfg)
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (c, _) = sample_checkpoint();
        let back = Checkpoint::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn infinite_shell_radius_survives() {
        let (mut c, _) = sample_checkpoint();
        if let Some(b) = c.bracket.as_mut() {
            b.r2 = f64::INFINITY;
        }
        let text = c.to_json().unwrap();
        assert!(text.contains("\"r2\": null"));
        assert_eq!(Checkpoint::from_json(&text).unwrap(), c);
    }

    #[test]
    fn corrupt_fields_are_named() {
        let (c, _) = sample_checkpoint();
        let good: Value = serde_json::to_value(&c).unwrap();
        let cases: [(&str, Value); 5] = [
            ("theta", Value::from("abc")),
            ("u", Value::from(vec![1.0, 2.0])),
            ("config_hash", Value::from("xyz")),
            ("mode", Value::from("fast")),
            ("step", Value::from(-3)),
        ];
        for (field, v) in cases {
            let mut doc = good.clone();
            doc[field] = v;
            match Checkpoint::from_json(&doc.to_string()) {
                Err(CapflowError::InvalidCheckpoint { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{field}: {other:?}"),
            }
        }
        let mut doc = good.clone();
        doc.as_object_mut().unwrap().remove("grid");
        assert!(matches!(
            Checkpoint::from_json(&doc.to_string()),
            Err(CapflowError::InvalidCheckpoint { field, .. }) if field == "grid"
        ));
        assert!(matches!(
            Checkpoint::from_json("{not json"),
            Err(CapflowError::InvalidCheckpoint { .. })
        ));
    }

    #[test]
    fn mismatched_config_is_refused() {
        let (c, mut cfg) = sample_checkpoint();
        assert!(c.restore(&cfg).is_ok());
        cfg.stop_tol = 1e-3;
        assert!(matches!(
            c.restore(&cfg),
            Err(CapflowError::InvalidCheckpoint { field, .. }) if field == "config_hash"
        ));
    }
}
