//! Flat `key = value` configuration files.
//!
//! One assignment per line; `#` starts a comment. Keys carry their unit:
//! `_s` and `_ms` for times (converted to seconds), `_m` for lengths.
//! Sensor-specific keys read `sensor.<id>.<field>` with 1-based ids.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `t0_s` / `t0_ms` | event time | 0 |
//! | `v_mps` | propagation speed | 3e8 |
//! | `d_max_m` | deployment radius | 100 |
//! | `sensors` | sensor count I | 2 |
//! | `c_min_s` / `c_min_ms` | best-case computation delay | 10 ms |
//! | `c_max_s` / `c_max_ms` | worst-case computation delay | 500 ms |
//! | `allow_degenerate_comp` | accept `c_min == c_max` | false |
//! | `t_f_s` / `t_f_ms` | frame duration | 10 ms |
//! | `t_p_s` / `t_p_ms` | packet sub-frame duration | unset |
//! | `bandwidth_hz` | bandwidth B | unset |
//! | `packet_bits` | packet size b | unset |
//! | `n0_w_per_hz` | noise density N0 | unset |
//! | `m_max`, `n_max` | retry limits | 5, 5 |
//! | `preamble_len` | preamble count S | I |
//! | `gamma_th` | outage threshold | 1 unless `packet_bits`, `bandwidth_hz` or `t_p_*` are set |
//! | `serialize_grants` | one grant per frame, round-robin | false |
//! | `sensor.<id>.gamma` | average SNR | 1 unless `power_w`/`beta` are set |
//! | `sensor.<id>.power_w`, `sensor.<id>.beta` | link budget | unset |
//! | `sensor.<id>.perfect_detection`, `sensor.<id>.perfect_transmission` | ideal link | false |
//!
//! Sensors without any key inherit the link of sensor 2 when it is
//! configured, otherwise that of the lowest configured sensor.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use twi_core::params::{CommConfig, ScenarioConfig, SensorLink, Setup};
use twi_core::{Error, Result};

#[derive(Clone, Copy)]
enum Unit {
    Time,
    Plain,
}

const SCALARS: &[(&str, Unit)] = &[
    ("t0", Unit::Time),
    ("v_mps", Unit::Plain),
    ("d_max_m", Unit::Plain),
    ("sensors", Unit::Plain),
    ("c_min", Unit::Time),
    ("c_max", Unit::Time),
    ("allow_degenerate_comp", Unit::Plain),
    ("t_f", Unit::Time),
    ("t_p", Unit::Time),
    ("bandwidth_hz", Unit::Plain),
    ("packet_bits", Unit::Plain),
    ("n0_w_per_hz", Unit::Plain),
    ("m_max", Unit::Plain),
    ("n_max", Unit::Plain),
    ("preamble_len", Unit::Plain),
    ("gamma_th", Unit::Plain),
    ("serialize_grants", Unit::Plain),
];

const SENSOR_FIELDS: &[&str] = &[
    "power_w",
    "beta",
    "gamma",
    "perfect_detection",
    "perfect_transmission",
];

/// A value with the line it came from.
#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed but not yet resolved assignments, keyed by base name in SI.
#[derive(Debug, Default)]
struct RawConfig {
    scalars: HashMap<&'static str, Entry>,
    sensors: BTreeMap<usize, HashMap<&'static str, Entry>>,
}

fn err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn parse_raw(text: &str) -> Result<RawConfig> {
    let mut raw = RawConfig::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(n, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(err(n, format!("missing value for `{key}`")));
        }

        let (canonical, scaled) =
            resolve_key(key).ok_or_else(|| err(n, format!("unknown key `{key}`")))?;
        if let Some(prev) = seen.insert(canonical.clone(), n) {
            return Err(err(n, format!("`{key}` already set on line {prev}")));
        }
        let value = match scaled {
            Some(factor) => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| err(n, format!("`{key}` expects a number, got `{value}`")))?;
                (v / factor).to_string()
            }
            None => value.to_string(),
        };
        let entry = Entry { value, line: n };
        match key.strip_prefix("sensor.") {
            Some(rest) => {
                let (id, field) = rest.split_once('.').expect("checked by resolve_key");
                let id: usize = id.parse().expect("checked by resolve_key");
                let field = SENSOR_FIELDS
                    .iter()
                    .find(|f| **f == field)
                    .expect("checked");
                raw.sensors.entry(id).or_default().insert(field, entry);
            }
            None => {
                let base = SCALARS
                    .iter()
                    .map(|(b, _)| *b)
                    .find(|b| canonical == *b)
                    .expect("checked by resolve_key");
                raw.scalars.insert(base, entry);
            }
        }
    }
    Ok(raw)
}

/// Canonical key, and for time keys the number of units per second.
fn resolve_key(key: &str) -> Option<(String, Option<f64>)> {
    if let Some(rest) = key.strip_prefix("sensor.") {
        let (id, field) = rest.split_once('.')?;
        let id: usize = id.parse().ok().filter(|&i| i >= 1)?;
        return SENSOR_FIELDS
            .contains(&field)
            .then(|| (format!("sensor.{id}.{field}"), None));
    }
    SCALARS.iter().find_map(|&(base, unit)| match unit {
        Unit::Plain => (key == base).then(|| (base.to_string(), None)),
        Unit::Time => {
            let suffix = key.strip_prefix(base)?;
            match suffix {
                "_s" => Some((base.to_string(), Some(1.0))),
                "_ms" => Some((base.to_string(), Some(1e3))),
                _ => None,
            }
        }
    })
}

fn num(e: &Entry, key: &str) -> Result<f64> {
    e.value.parse::<f64>().map_err(|_| {
        err(
            e.line,
            format!("`{key}` expects a number, got `{}`", e.value),
        )
    })
}

fn int<T: std::str::FromStr>(e: &Entry, key: &str) -> Result<T> {
    e.value.parse::<T>().map_err(|_| {
        err(
            e.line,
            format!("`{key}` expects a non-negative integer, got `{}`", e.value),
        )
    })
}

fn boolean(e: &Entry, key: &str) -> Result<bool> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(err(
            e.line,
            format!("`{key}` expects true or false, got `{other}`"),
        )),
    }
}

/// Parses configuration text into a validated setup.
pub fn parse_config(text: &str) -> Result<Setup> {
    let raw = parse_raw(text)?;
    let s = &raw.scalars;
    let f = |key: &str, default: f64| s.get(key).map_or(Ok(default), |e| num(e, key));
    let opt = |key: &str| s.get(key).map(|e| num(e, key)).transpose();
    let b = |key: &str| s.get(key).map_or(Ok(false), |e| boolean(e, key));

    let sensors: usize = s.get("sensors").map_or(Ok(2), |e| int(e, "sensors"))?;
    let scenario = ScenarioConfig {
        t0: f("t0", 0.0)?,
        speed: f("v_mps", 3e8)?,
        max_distance: f("d_max_m", 100.0)?,
        sensors,
        comp_min: f("c_min", 0.01)?,
        comp_max: f("c_max", 0.5)?,
        allow_degenerate_comp: b("allow_degenerate_comp")?,
    };
    let bandwidth = opt("bandwidth_hz")?;
    let pt_duration = opt("t_p")?;
    let packet_bits = opt("packet_bits")?;
    let link_budget = bandwidth.is_some() || pt_duration.is_some() || packet_bits.is_some();
    let comm = CommConfig {
        bandwidth,
        frame: f("t_f", 0.01)?,
        pt_duration,
        packet_bits,
        noise_density: opt("n0_w_per_hz")?,
        max_sr_attempts: s.get("m_max").map_or(Ok(5), |e| int(e, "m_max"))?,
        max_pt_attempts: s.get("n_max").map_or(Ok(5), |e| int(e, "n_max"))?,
        preamble_len: s
            .get("preamble_len")
            .map(|e| int(e, "preamble_len"))
            .transpose()?,
        gamma_th_override: match opt("gamma_th")? {
            Some(g) => Some(g),
            None if link_budget => None,
            None => Some(1.0),
        },
        serialize_grants: b("serialize_grants")?,
    };

    let mut configured: BTreeMap<usize, SensorLink> = BTreeMap::new();
    for (&id, fields) in &raw.sensors {
        if id > sensors {
            let line = fields.values().map(|e| e.line).min().unwrap_or(0);
            return Err(err(
                line,
                format!("sensor {id} exceeds the sensor count {sensors}"),
            ));
        }
        let get = |k: &str| fields.get(k).map(|e| num(e, k)).transpose();
        let flag = |k: &str| fields.get(k).map_or(Ok(false), |e| boolean(e, k));
        let power = get("power_w")?;
        let beta = get("beta")?;
        let gamma = get("gamma")?;
        configured.insert(
            id,
            SensorLink {
                power,
                beta,
                gamma_override: gamma.or((power.is_none() && beta.is_none()).then_some(1.0)),
                perfect_detection: flag("perfect_detection")?,
                perfect_transmission: flag("perfect_transmission")?,
            },
        );
    }
    let fallback = configured
        .get(&2)
        .or_else(|| configured.values().next())
        .cloned()
        .unwrap_or_else(|| SensorLink::with_gamma(1.0));
    let links = (1..=sensors)
        .map(|id| {
            configured
                .get(&id)
                .cloned()
                .unwrap_or_else(|| fallback.clone())
        })
        .collect();

    let setup = Setup {
        scenario,
        comm,
        links,
    };
    setup.validate()?;
    Ok(setup)
}

/// Reads and parses a configuration file; `None` gives the defaults.
pub fn load_config(path: Option<&Path>) -> Result<Setup> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_config(&text).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}: {msg}", p.display())),
                other => other,
            })
        }
        None => parse_config(""),
    }
}

/// Fully resolved configuration in SI units; parsing it back yields the
/// same setup.
pub fn echo_config(setup: &Setup) -> String {
    let sc = &setup.scenario;
    let c = &setup.comm;
    let mut lines = vec![
        "# resolved configuration (SI units)".to_string(),
        format!("t0_s = {}", sc.t0),
        format!("v_mps = {}", sc.speed),
        format!("d_max_m = {}", sc.max_distance),
        format!("sensors = {}", sc.sensors),
        format!("c_min_s = {}", sc.comp_min),
        format!("c_max_s = {}", sc.comp_max),
        format!("allow_degenerate_comp = {}", sc.allow_degenerate_comp),
        format!("t_f_s = {}", c.frame),
        format!("m_max = {}", c.max_sr_attempts),
        format!("n_max = {}", c.max_pt_attempts),
        format!("serialize_grants = {}", c.serialize_grants),
    ];
    let optional = [
        ("t_p_s", c.pt_duration),
        ("bandwidth_hz", c.bandwidth),
        ("packet_bits", c.packet_bits),
        ("n0_w_per_hz", c.noise_density),
        ("gamma_th", c.gamma_th_override),
    ];
    lines.extend(
        optional
            .iter()
            .filter_map(|(k, v)| v.map(|v| format!("{k} = {v}"))),
    );
    if let Some(s) = c.preamble_len {
        lines.push(format!("preamble_len = {s}"));
    }
    for (i, l) in setup.links.iter().enumerate() {
        let id = i + 1;
        for (k, v) in [
            ("power_w", l.power),
            ("beta", l.beta),
            ("gamma", l.gamma_override),
        ] {
            if let Some(v) = v {
                lines.push(format!("sensor.{id}.{k} = {v}"));
            }
        }
        lines.push(format!(
            "sensor.{id}.perfect_detection = {}",
            l.perfect_detection
        ));
        lines.push(format!(
            "sensor.{id}.perfect_transmission = {}",
            l.perfect_transmission
        ));
    }
    lines.join("\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_computation_dominated_scenario() {
        let s = parse_config("").unwrap();
        assert_eq!((s.scenario.comp_min, s.scenario.comp_max), (0.01, 0.5));
        assert_eq!(s.comm.frame, 0.01);
        assert_eq!(s.comm.gamma_th_override, Some(1.0));
        assert_eq!(s.links, vec![SensorLink::with_gamma(1.0); 2]);
    }

    #[test]
    fn units_are_converted() {
        let s = parse_config("c_min_ms = 10\nc_max_s = 0.1\nt_f_ms = 5 # frame\n").unwrap();
        assert_eq!(s.scenario.comp_min, 0.01);
        assert_eq!(s.scenario.comp_max, 0.1);
        assert_eq!(s.comm.frame, 0.005);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("# header\nv_mps = 300\nfoo = 1\n").unwrap_err();
        assert!(
            matches!(&e, Error::Config(m) if m.contains("line 3") && m.contains("foo")),
            "{e}"
        );
        let e = parse_config("c_min_ms = 10\nc_min_s = 0.01\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = parse_config("v_mps 300\n").unwrap_err();
        assert!(e.to_string().contains("line 1"));
        let e = parse_config("m_max = -1\n").unwrap_err();
        assert!(e.to_string().contains("line 1"));
        let e = parse_config("sensor.3.gamma = 4\n").unwrap_err();
        assert!(e.to_string().contains("sensor 3"));
        let e = parse_config("d_max = 100\n").unwrap_err();
        assert!(e.to_string().contains("unknown key"));
    }

    #[test]
    fn unconfigured_sensors_inherit_sensor_two() {
        let s = parse_config("sensors = 3\nsensor.2.gamma = 4\n").unwrap();
        assert!(s.links.iter().all(|l| l.gamma_override == Some(4.0)));
        let s = parse_config("sensors = 3\nsensor.3.gamma = 10\nsensor.2.gamma = 4\n").unwrap();
        let g: Vec<_> = s.links.iter().map(|l| l.gamma_override.unwrap()).collect();
        assert_eq!(g, vec![4.0, 4.0, 10.0]);
        let s = parse_config("sensor.1.perfect_detection = true\n").unwrap();
        assert!(s.links[1].perfect_detection);
    }

    #[test]
    fn link_budget_disables_default_threshold() {
        let s = parse_config(
            "bandwidth_hz = 1e6\nt_p_ms = 1\npacket_bits = 1000\nn0_w_per_hz = 1e-20\nsensor.1.power_w = 0.1\nsensor.1.beta = 1e-12\n",
        )
        .unwrap();
        assert_eq!(s.comm.gamma_th_override, None);
        assert_eq!(s.links[0].gamma_override, None);
        let l = s.derived_links().unwrap()[0];
        assert!((l.gamma_th - 1.0).abs() < 1e-12);
        assert!((l.gamma - 10.0).abs() < 1e-9);
    }

    #[test]
    fn echo_round_trips() {
        let text = "t0_ms = 3\nv_mps = 343\nc_min_ms = 0\nc_max_ms = 7\nt_f_ms = 1\nm_max = 9\nn_max = 7\nsensors = 3\npreamble_len = 4\nsensor.1.gamma = 0.1\nsensor.2.gamma = 4\nsensor.3.perfect_transmission = true\n";
        let s = parse_config(text).unwrap();
        let echoed = echo_config(&s);
        assert_eq!(parse_config(&echoed).unwrap(), s);
        assert_eq!(echo_config(&parse_config(&echoed).unwrap()), echoed);
    }
}
