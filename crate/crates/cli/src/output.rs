// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

use sha2::{Digest, Sha256};

use crate::{CliError, Config, Scenario};

pub const TOOL: &str = concat!("sapa ", env!("CARGO_PKG_VERSION"));

/// Scenario output before rendering.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    /// Summary values written as header lines after the configuration.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }
}

/// Shortest round-trip form; scientific outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Hex SHA-256 of the scenario name and its echoed configuration.
pub fn config_hash(scenario: Scenario, cfg: &Config) -> String {
    let mut h = Sha256::new();
    h.update(scenario.name().as_bytes());
    h.update(b"\n");
    h.update(cfg.echo(scenario).as_bytes());
    hex::encode(h.finalize())
}

pub fn render(scenario: Scenario, cfg: &Config, seed: u64, table: &Table) -> Result<String, CliError> {
    let mut out = String::new();
    let mut line = |k: &str, v: &str| {
        out.push_str("# ");
        out.push_str(k);
        out.push_str(": ");
        out.push_str(v);
        out.push('\n');
    };
    line("tool", TOOL);
    line("scenario", scenario.name());
    line("seed", &seed.to_string());
    line("config_hash", &config_hash(scenario, cfg));
    for l in cfg.echo(scenario).lines().filter(|l| !l.trim().is_empty()) {
        line("config", l);
    }
    for (k, v) in &table.meta {
        line(k, v);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    out.push_str(&String::from_utf8(body).map_err(|e| CliError::Io(e.to_string()))?);
    Ok(out)
}

/// The `# key: value` lines at the top of an output file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Header {
    pub entries: Vec<(String, String)>,
}

impl Header {
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .map_while(|l| l.strip_prefix("# "))
            .filter_map(|l| l.split_once(": ").map(|(k, v)| (k.to_string(), v.to_string())))
            .collect();
        Self { entries }
    }

    /// First value under `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn scenario(&self) -> Option<Scenario> {
        self.get("scenario").and_then(Scenario::from_name)
    }

    pub fn seed(&self) -> Option<u64> {
        self.get("seed").and_then(|s| s.parse().ok())
    }

    /// The echoed configuration, parsed back under the strict schema.
    pub fn config(&self) -> Result<Config, CliError> {
        let text: String = self
            .entries
            .iter()
            .filter(|(k, _)| k == "config")
            .map(|(_, v)| format!("{v}\n"))
            .collect();
        Config::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse_header() {
        let cfg = Config::default();
        let mut t = Table::new(&["a", "b"]);
        t.meta("answer", 42);
        t.row(vec![num(1.5), num(f64::NAN)]);
        let text = render(Scenario::NoiseBudget, &cfg, 7, &t).unwrap();
        let h = Header::parse(&text);
        assert_eq!(h.get("tool"), Some(TOOL));
        assert_eq!(h.seed(), Some(7));
        assert_eq!(h.scenario(), Some(Scenario::NoiseBudget));
        assert_eq!(h.get("answer"), Some("42"));
        assert_eq!(h.get("config_hash"), Some(config_hash(Scenario::NoiseBudget, &cfg).as_str()));
        let back = h.config().unwrap();
        assert_eq!(config_hash(Scenario::NoiseBudget, &back), config_hash(Scenario::NoiseBudget, &cfg));
        assert!(text.ends_with("a,b\n1.5,NaN\n"));
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, -2.5, 1.7628e-24, 5.198e9, 3.2e17, f64::INFINITY] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.7628e-24), "1.7628e-24");
    }

    #[test]
    fn hash_tracks_relevant_sections_only() {
        let a = Config::default();
        let mut b = Config::default();
        b.rabi_map.dqd = 0;
        b.fit.noise_rel = 0.5;
        assert_eq!(config_hash(Scenario::RabiMap, &a), config_hash(Scenario::RabiMap, &b));
        assert_ne!(config_hash(Scenario::Fit, &a), config_hash(Scenario::Fit, &b));
    }
}
