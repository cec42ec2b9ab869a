//! Native JSON case format.
//!
//! ```json
//! { "base_mva": 100,
//!   "buses": [{"id", "kind", "p_load_mw", "q_load_mvar", "g_shunt_mw",
//!              "b_shunt_mvar", "v_setpoint_pu", "v_min_pu", "v_max_pu"}],
//!   "branches": [{"from", "to", "r_pu", "x_pu", "b_charging_pu", "tap",
//!                 "shift_deg", "in_service"}],
//!   "generators": [{"bus", "p_gen_mw", "v_setpoint_pu", "in_service"}] }
//! ```
//!
//! Floats are written in shortest round-trip form, so parsing the output
//! reproduces the network bit for bit.

use serde::Serialize;
use serde_json::{Map, Value};

use super::CaseError;
use crate::netmodel::{Branch, Bus, BusKind, Generator, Network};

#[derive(Serialize)]
struct CaseDoc {
    base_mva: f64,
    buses: Vec<BusDoc>,
    branches: Vec<BranchDoc>,
    generators: Vec<GeneratorDoc>,
}

#[derive(Serialize)]
struct BusDoc {
    id: usize,
    kind: BusKind,
    p_load_mw: f64,
    q_load_mvar: f64,
    g_shunt_mw: f64,
    b_shunt_mvar: f64,
    v_setpoint_pu: f64,
    v_min_pu: f64,
    v_max_pu: f64,
}

#[derive(Serialize)]
struct BranchDoc {
    from: usize,
    to: usize,
    r_pu: f64,
    x_pu: f64,
    b_charging_pu: f64,
    tap: f64,
    shift_deg: f64,
    in_service: bool,
}

#[derive(Serialize)]
struct GeneratorDoc {
    bus: usize,
    p_gen_mw: f64,
    v_setpoint_pu: f64,
    in_service: bool,
}

pub fn write_json_case(net: &Network) -> String {
    let doc = CaseDoc {
        base_mva: net.base_mva,
        buses: net
            .buses
            .iter()
            .map(|b| BusDoc {
                id: b.id,
                kind: b.kind,
                p_load_mw: b.p_load,
                q_load_mvar: b.q_load,
                g_shunt_mw: b.g_shunt,
                b_shunt_mvar: b.b_shunt,
                v_setpoint_pu: b.v_setpoint,
                v_min_pu: b.v_min,
                v_max_pu: b.v_max,
            })
            .collect(),
        branches: net
            .branches
            .iter()
            .map(|b| BranchDoc {
                from: b.from_bus,
                to: b.to_bus,
                r_pu: b.r,
                x_pu: b.x,
                b_charging_pu: b.b_charging,
                tap: b.tap,
                shift_deg: b.shift,
                in_service: b.in_service,
            })
            .collect(),
        generators: net
            .generators
            .iter()
            .map(|g| GeneratorDoc {
                bus: g.bus,
                p_gen_mw: g.p_gen,
                v_setpoint_pu: g.v_setpoint,
                in_service: g.in_service,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("case document always serializes");
    s.push('\n');
    s
}

pub fn parse_json_case(text: &str) -> Result<Network, CaseError> {
    if text.trim().is_empty() {
        return Err(CaseError::EmptyInput);
    }
    let root: Value = serde_json::from_str(text).map_err(|e| CaseError::Syntax {
        line: e.line(),
        col: e.column(),
        message: e.to_string(),
    })?;
    let root = object(&root, "")?;
    let base_mva = number(root, "", "base_mva")?;

    let buses = array(root, "", "buses")?
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let path = format!("/buses/{k}");
            let o = object(v, &path)?;
            Ok(Bus {
                id: id(o, &path, "id")?,
                kind: kind(o, &path)?,
                p_load: number(o, &path, "p_load_mw")?,
                q_load: number(o, &path, "q_load_mvar")?,
                g_shunt: number(o, &path, "g_shunt_mw")?,
                b_shunt: number(o, &path, "b_shunt_mvar")?,
                v_setpoint: number(o, &path, "v_setpoint_pu")?,
                v_min: number(o, &path, "v_min_pu")?,
                v_max: number(o, &path, "v_max_pu")?,
            })
        })
        .collect::<Result<Vec<_>, CaseError>>()?;

    let branches = array(root, "", "branches")?
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let path = format!("/branches/{k}");
            let o = object(v, &path)?;
            Ok(Branch {
                from_bus: id(o, &path, "from")?,
                to_bus: id(o, &path, "to")?,
                r: number(o, &path, "r_pu")?,
                x: number(o, &path, "x_pu")?,
                b_charging: number(o, &path, "b_charging_pu")?,
                tap: number(o, &path, "tap")?,
                shift: number(o, &path, "shift_deg")?,
                in_service: boolean(o, &path, "in_service")?,
            })
        })
        .collect::<Result<Vec<_>, CaseError>>()?;

    let generators = array(root, "", "generators")?
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let path = format!("/generators/{k}");
            let o = object(v, &path)?;
            Ok(Generator {
                bus: id(o, &path, "bus")?,
                p_gen: number(o, &path, "p_gen_mw")?,
                v_setpoint: number(o, &path, "v_setpoint_pu")?,
                in_service: boolean(o, &path, "in_service")?,
            })
        })
        .collect::<Result<Vec<_>, CaseError>>()?;

    Ok(Network {
        base_mva,
        buses,
        branches,
        generators,
    })
}

fn schema(path: String, message: impl Into<String>) -> CaseError {
    CaseError::Schema {
        path: if path.is_empty() { "/".into() } else { path },
        message: message.into(),
    }
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, CaseError> {
    v.as_object()
        .ok_or_else(|| schema(path.to_string(), "expected an object"))
}

fn field<'a>(o: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value, CaseError> {
    o.get(key)
        .ok_or_else(|| schema(format!("{path}/{key}"), "missing required field"))
}

fn number(o: &Map<String, Value>, path: &str, key: &str) -> Result<f64, CaseError> {
    field(o, path, key)?
        .as_f64()
        .ok_or_else(|| schema(format!("{path}/{key}"), "expected a number"))
}

fn id(o: &Map<String, Value>, path: &str, key: &str) -> Result<usize, CaseError> {
    field(o, path, key)?
        .as_u64()
        .and_then(|v| usize::try_from(v).ok())
        .ok_or_else(|| schema(format!("{path}/{key}"), "expected a non-negative integer"))
}

fn boolean(o: &Map<String, Value>, path: &str, key: &str) -> Result<bool, CaseError> {
    field(o, path, key)?
        .as_bool()
        .ok_or_else(|| schema(format!("{path}/{key}"), "expected a boolean"))
}

fn array<'a>(o: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Vec<Value>, CaseError> {
    field(o, path, key)?
        .as_array()
        .ok_or_else(|| schema(format!("{path}/{key}"), "expected an array"))
}

fn kind(o: &Map<String, Value>, path: &str) -> Result<BusKind, CaseError> {
    match field(o, path, "kind")?.as_str() {
        Some("slack") => Ok(BusKind::Slack),
        Some("pv") => Ok(BusKind::Pv),
        Some("pq") => Ok(BusKind::Pq),
        _ => Err(schema(
            format!("{path}/kind"),
            "expected one of \"slack\", \"pv\", \"pq\"",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    #[test]
    fn toy_round_trip() {
        let net = cases::two_bus(0.0);
        assert_eq!(parse_json_case(&write_json_case(&net)).unwrap(), net);
    }

    #[test]
    fn output_is_deterministic_and_ordered() {
        let net = cases::three_bus();
        let a = write_json_case(&net);
        assert_eq!(a, write_json_case(&net.clone()));
        let base = a.find("\"base_mva\"").unwrap();
        let buses = a.find("\"buses\"").unwrap();
        let gens = a.find("\"generators\"").unwrap();
        assert!(base < buses && buses < gens);
    }

    #[test]
    fn missing_base_mva_points_at_field() {
        let text = r#"{"buses": [], "branches": [], "generators": []}"#;
        assert_eq!(
            parse_json_case(text),
            Err(CaseError::Schema {
                path: "/base_mva".into(),
                message: "missing required field".into()
            })
        );
    }

    #[test]
    fn nested_errors_have_pointer_paths() {
        let net = cases::two_bus(0.0);
        let text = write_json_case(&net).replace("\"pq\"", "\"load\"");
        match parse_json_case(&text) {
            Err(CaseError::Schema { path, .. }) => assert_eq!(path, "/buses/1/kind"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_json_case("[1, 2"), Err(CaseError::Syntax { .. })));
        assert!(matches!(parse_json_case("[]"), Err(CaseError::Schema { path, .. }) if path == "/"));
    }
}
