//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` or `;` are ignored. Every key is
//! one of [`KEYS`] or `tol.<check>`; anything else is rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use biconserve_core::meancurv::{Branch, ModelParams};
use biconserve_core::verify::{Tolerances, VerifyGrid};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const KEYS: &[&str] = &[
    "c", "c2", "f0", "eps", "span", "grid", "perturb", "strict", "out", "outputs", "tol_ode", "grid_n", "f_floor",
    "sweep_c", "sweep_c2", "sweep_f0",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Output {
    Csv,
    Obj,
    Report,
}

impl Output {
    fn parse(text: &str) -> Option<Self> {
        match text {
            "csv" => Some(Output::Csv),
            "obj" => Some(Output::Obj),
            "report" => Some(Output::Report),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Output::Csv => "csv",
            Output::Obj => "obj",
            Output::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub grid: VerifyGrid,
    /// Explicit overrides; `--strict` halves the defaults before these apply.
    pub tolerance_overrides: BTreeMap<String, f64>,
    pub strict: bool,
    pub perturb: f64,
    pub outputs: BTreeSet<Output>,
    pub out: PathBuf,
    pub sweep_c: Option<Vec<f64>>,
    pub sweep_c2: Option<Vec<f64>>,
    pub sweep_f0: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            grid: VerifyGrid::default(),
            tolerance_overrides: BTreeMap::new(),
            strict: false,
            perturb: 0.0,
            outputs: [Output::Csv, Output::Obj, Output::Report].into(),
            out: PathBuf::from("."),
            sweep_c: None,
            sweep_c2: None,
            sweep_f0: None,
        }
    }
}

fn number(key: &str, value: &str) -> Result<f64, String> {
    value.trim().parse::<f64>().map_err(|_| format!("`{key}` expects a number, got `{value}`"))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    let items: Vec<f64> = value.split(',').map(|v| number(key, v)).collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(format!("`{key}` expects a comma-separated list"));
    }
    Ok(items)
}

fn pair<T: std::str::FromStr>(key: &str, value: &str, sep: char) -> Result<(T, T), String> {
    let bad = || format!("`{key}` expects A{sep}B, got `{value}`");
    let (a, b) = value.split_once(sep).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

impl RunConfig {
    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        if let Some(check) = key.strip_prefix("tol.") {
            if Tolerances::default().get(check).is_none() {
                return Err(format!("unknown tolerance `{check}`"));
            }
            let tol = number(key, value)?;
            if tol.is_nan() || tol <= 0.0 {
                return Err(format!("tolerance `{check}` must be positive"));
            }
            self.tolerance_overrides.insert(check.to_string(), tol);
            return Ok(());
        }
        match key {
            "c" => self.model.c = number(key, value)?,
            "c2" => self.model.c2 = number(key, value)?,
            "f0" => self.model.f0 = number(key, value)?,
            "eps" => {
                self.model.eps0 = Branch::from_sign(number(key, value)?).ok_or("`eps` must be +1 or -1")?;
            }
            "span" => self.model.s_span = pair(key, value, ':')?,
            "grid" => {
                let (n_s, n_t): (usize, usize) = pair(key, value, 'x')?;
                if n_s == 0 || n_t == 0 {
                    return Err("grid dimensions must be positive".into());
                }
                self.grid = VerifyGrid { n_s, n_t };
            }
            "perturb" => self.perturb = number(key, value)?,
            "strict" => {
                self.strict = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(format!("`strict` expects true or false, got `{value}`")),
                }
            }
            "out" => self.out = PathBuf::from(value),
            "outputs" => {
                let mut set = BTreeSet::new();
                for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    set.insert(Output::parse(item).ok_or_else(|| format!("unknown output `{item}`"))?);
                }
                self.outputs = set;
            }
            "tol_ode" => self.model.tol_ode = number(key, value)?,
            "grid_n" => {
                self.model.grid_n = value.parse().map_err(|_| format!("`grid_n` expects an integer, got `{value}`"))?
            }
            "f_floor" => self.model.f_floor = number(key, value)?,
            "sweep_c" => self.sweep_c = Some(list(key, value)?),
            "sweep_c2" => self.sweep_c2 = Some(list(key, value)?),
            "sweep_f0" => self.sweep_f0 = Some(list(key, value)?),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Parses config file text on top of the current values.
    pub fn merge_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let err = |message: String| CliError::Config { line: i + 1, message };
            let (key, value) =
                line.split_once('=').ok_or_else(|| err(format!("expected key = value, got `{line}`")))?;
            self.set(key.trim(), value).map_err(err)?;
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        let mut tol = if self.strict { Tolerances::default().strict() } else { Tolerances::default() };
        for (name, value) in &self.tolerance_overrides {
            tol.set(name, *value)?;
        }
        Ok(tol)
    }

    pub fn wants(&self, output: Output) -> bool {
        self.outputs.contains(&output)
    }

    /// Every effective setting as sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        let m = &self.model;
        let join =
            |v: &Option<Vec<f64>>| v.as_ref().map(|v| v.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        entries.insert("c".into(), m.c.to_string());
        entries.insert("c2".into(), m.c2.to_string());
        entries.insert("f0".into(), m.f0.to_string());
        entries.insert("eps".into(), m.eps0.sign().to_string());
        entries.insert("span".into(), format!("{}:{}", m.s_span.0, m.s_span.1));
        entries.insert("grid".into(), format!("{}x{}", self.grid.n_s, self.grid.n_t));
        entries.insert("perturb".into(), self.perturb.to_string());
        entries.insert("strict".into(), self.strict.to_string());
        entries.insert("outputs".into(), self.outputs.iter().map(|o| o.name()).collect::<Vec<_>>().join(","));
        entries.insert("tol_ode".into(), m.tol_ode.to_string());
        entries.insert("grid_n".into(), m.grid_n.to_string());
        entries.insert("f_floor".into(), m.f_floor.to_string());
        for (key, value) in [("sweep_c", &self.sweep_c), ("sweep_c2", &self.sweep_c2), ("sweep_f0", &self.sweep_f0)] {
            if let Some(v) = join(value) {
                entries.insert(key.into(), v);
            }
        }
        for (name, value) in &self.tolerance_overrides {
            entries.insert(format!("tol.{name}"), value.to_string());
        }
        entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}
