use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("case schema violation at `{path}`: {reason}")]
    Schema { path: String, reason: String },
    #[error("duplicate bus id {0}")]
    DuplicateBus(u32),
    #[error("branch {index} refers to unknown bus {bus}")]
    DanglingBranch { index: usize, bus: u32 },
    #[error("device {index} refers to unknown bus {bus}")]
    DanglingDevice { index: usize, bus: u32 },
    #[error("branch {index} has zero series reactance")]
    ZeroReactance { index: usize },
    #[error("expected exactly one slack bus, found {0}")]
    SlackCount(usize),
    #[error("invalid parameter `{what}` = {value}")]
    InvalidParameter { what: String, value: f64 },
    #[error("bus {bus} has more than one {kind} device")]
    DuplicateDevice { bus: u32, kind: &'static str },
    #[error("cannot read case file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Base {
    /// System power base, MVA.
    pub mva: f64,
    /// Fundamental frequency, Hz.
    pub f0: f64,
}

impl Base {
    /// Base angular frequency, rad/s.
    pub fn omega_b(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Pq,
    Pv,
    Slack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: u32,
    pub kind: BusKind,
    /// Voltage magnitude setpoint (PV, slack) or initial guess, pu.
    #[serde(default = "one")]
    pub v: f64,
    /// Slack angle, rad.
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub p_gen: f64,
    #[serde(default)]
    pub q_gen: f64,
    #[serde(default)]
    pub p_load: f64,
    #[serde(default)]
    pub q_load: f64,
    /// Shunt conductance at v = 1, pu.
    #[serde(default)]
    pub g_shunt: f64,
    /// Shunt susceptance at v = 1, pu.
    #[serde(default)]
    pub b_shunt: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, pu.
    #[serde(default)]
    pub b: f64,
    /// Off-nominal turns ratio at the `from` end; 0 means 1.
    #[serde(default = "one")]
    pub tap: f64,
    /// Phase shift, rad.
    #[serde(default)]
    pub shift: f64,
}

impl Branch {
    pub fn ratio(&self) -> f64 {
        if self.tap == 0.0 {
            1.0
        } else {
            self.tap
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DeviceSpec {
    /// Classical synchronous machine behind transient reactance.
    Sm2 {
        bus: u32,
        /// Mechanical starting time `2H`, s.
        m: f64,
        #[serde(default)]
        d: f64,
        #[serde(default)]
        ra: f64,
        xd1: f64,
    },
    /// Grid-following converter with frequency droop.
    Gfl {
        bus: u32,
        t: f64,
        tf: f64,
        r: f64,
        #[serde(default = "one")]
        omega_ref: f64,
    },
    /// Constant impedance load, sized from the bus load at the operating point.
    Zload { bus: u32 },
}

impl DeviceSpec {
    pub fn bus(&self) -> u32 {
        match self {
            DeviceSpec::Sm2 { bus, .. } | DeviceSpec::Gfl { bus, .. } | DeviceSpec::Zload { bus } => {
                *bus
            }
        }
    }

    pub fn is_source(&self) -> bool {
        !matches!(self, DeviceSpec::Zload { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DeviceSpec::Sm2 { .. } => "sm2",
            DeviceSpec::Gfl { .. } => "gfl",
            DeviceSpec::Zload { .. } => "zload",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemCase {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub provenance: Option<String>,
    pub base: Base,
    /// Fold constant-impedance loads into the admittance matrix.
    #[serde(default)]
    pub embed_zloads: bool,
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub devices: Vec<DeviceSpec>,
}

impl SystemCase {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn omega_b(&self) -> f64 {
        self.base.omega_b()
    }

    /// Position of a bus id in the bus ordering.
    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn bus_ids(&self) -> Vec<u32> {
        self.buses.iter().map(|b| b.id).collect()
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CaseError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
            path: path.display().to_string(),
            source,
        })?;
        parse_case(&text)
    }

    pub fn validate(&self) -> Result<(), CaseError> {
        let bad = |what: &str, value: f64| CaseError::InvalidParameter {
            what: what.to_string(),
            value,
        };
        if !(self.base.mva > 0.0) {
            return Err(bad("base.mva", self.base.mva));
        }
        if !(self.base.f0 > 0.0) {
            return Err(bad("base.f0", self.base.f0));
        }
        let mut ids = HashSet::new();
        for b in &self.buses {
            if !ids.insert(b.id) {
                return Err(CaseError::DuplicateBus(b.id));
            }
            let fields = [
                b.v, b.theta, b.p_gen, b.q_gen, b.p_load, b.q_load, b.g_shunt, b.b_shunt,
            ];
            if let Some(x) = fields.iter().find(|x| !x.is_finite()) {
                return Err(bad(&format!("bus {} field", b.id), *x));
            }
            if !(b.v > 0.0) {
                return Err(bad(&format!("bus {} v", b.id), b.v));
            }
        }
        let slacks = self.buses.iter().filter(|b| b.kind == BusKind::Slack).count();
        if slacks != 1 {
            return Err(CaseError::SlackCount(slacks));
        }
        for (index, br) in self.branches.iter().enumerate() {
            for bus in [br.from, br.to] {
                if !ids.contains(&bus) {
                    return Err(CaseError::DanglingBranch { index, bus });
                }
            }
            if br.x == 0.0 {
                return Err(CaseError::ZeroReactance { index });
            }
            for (what, v) in [("r", br.r), ("x", br.x), ("b", br.b), ("tap", br.tap), ("shift", br.shift)] {
                if !v.is_finite() {
                    return Err(bad(&format!("branch {index} {what}"), v));
                }
            }
            if br.ratio() < 0.0 {
                return Err(bad(&format!("branch {index} tap"), br.tap));
            }
        }
        let mut seen: HashMap<(u32, bool), ()> = HashMap::new();
        for (index, dev) in self.devices.iter().enumerate() {
            let bus = dev.bus();
            if !ids.contains(&bus) {
                return Err(CaseError::DanglingDevice { index, bus });
            }
            if seen.insert((bus, dev.is_source()), ()).is_some() {
                let kind = if dev.is_source() { "generating" } else { "load" };
                return Err(CaseError::DuplicateDevice { bus, kind });
            }
            match dev {
                DeviceSpec::Sm2 { m, d, ra, xd1, .. } => {
                    if !(*m > 0.0) || !m.is_finite() {
                        return Err(bad(&format!("device {index} m"), *m));
                    }
                    if !(*d >= 0.0) || !d.is_finite() {
                        return Err(bad(&format!("device {index} d"), *d));
                    }
                    if !(*ra >= 0.0) || !ra.is_finite() {
                        return Err(bad(&format!("device {index} ra"), *ra));
                    }
                    if !xd1.is_finite() || (*ra == 0.0 && *xd1 == 0.0) {
                        return Err(bad(&format!("device {index} xd1"), *xd1));
                    }
                }
                DeviceSpec::Gfl {
                    t,
                    tf,
                    r,
                    omega_ref,
                    ..
                } => {
                    for (what, v) in [("t", t), ("tf", tf), ("r", r), ("omega_ref", omega_ref)] {
                        if !(*v > 0.0) || !v.is_finite() {
                            return Err(bad(&format!("device {index} {what}"), *v));
                        }
                    }
                }
                DeviceSpec::Zload { .. } => {}
            }
        }
        Ok(())
    }
}

/// Parses and validates a JSON case document.
pub fn parse_case(text: &str) -> Result<SystemCase, CaseError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let case: SystemCase = serde_path_to_error::deserialize(de).map_err(|e| CaseError::Schema {
        path: e.path().to_string(),
        reason: e.inner().to_string(),
    })?;
    case.validate()?;
    Ok(case)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"{
        "base": {"mva": 100.0, "f0": 50.0},
        "buses": [
            {"id": 1, "kind": "slack", "v": 1.0},
            {"id": 2, "kind": "pq", "p_load": 0.5}
        ],
        "branches": [{"from": 1, "to": 2, "r": 0.0, "x": 0.1}],
        "devices": [{"type": "sm2", "bus": 1, "m": 10.0, "xd1": 0.2}, {"type": "zload", "bus": 2}]
    }"#;

    #[test]
    fn minimal_case() {
        let c = parse_case(TWO_BUS).unwrap();
        assert_eq!(c.n_buses(), 2);
        assert_eq!(c.branches.len(), 1);
        assert_eq!(c.branches[0].ratio(), 1.0);
        assert_eq!(c.devices.len(), 2);
        assert!((c.omega_b() - 100.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn zero_reactance_rejected() {
        let text = TWO_BUS.replace("\"x\": 0.1", "\"x\": 0.0");
        assert!(matches!(parse_case(&text), Err(CaseError::ZeroReactance { index: 0 })));
    }

    #[test]
    fn schema_error_has_path() {
        let text = TWO_BUS.replace("\"r\": 0.0", "\"r\": \"zero\"");
        match parse_case(&text) {
            Err(CaseError::Schema { path, .. }) => assert_eq!(path, "branches[0].r"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reference_errors() {
        let dup = TWO_BUS.replace("\"id\": 2", "\"id\": 1");
        assert!(matches!(parse_case(&dup), Err(CaseError::DuplicateBus(1))));
        let dangling = TWO_BUS.replace("\"to\": 2", "\"to\": 7");
        assert!(matches!(parse_case(&dangling), Err(CaseError::DanglingBranch { bus: 7, .. })));
        let dev = TWO_BUS.replace("\"type\": \"zload\", \"bus\": 2", "\"type\": \"zload\", \"bus\": 9");
        assert!(matches!(parse_case(&dev), Err(CaseError::DanglingDevice { bus: 9, .. })));
        let no_slack = TWO_BUS.replace("\"slack\"", "\"pv\"");
        assert!(matches!(parse_case(&no_slack), Err(CaseError::SlackCount(0))));
        let bad_m = TWO_BUS.replace("\"m\": 10.0", "\"m\": -1.0");
        assert!(matches!(parse_case(&bad_m), Err(CaseError::InvalidParameter { .. })));
    }
}
