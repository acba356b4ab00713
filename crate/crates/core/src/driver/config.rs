use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::RockFluidModel;
use crate::geostats::FieldSpec;
use crate::integrator::CflPolicy;
use crate::scheme::SchemeKind;

/// Environment variable that replaces `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "CENTRALFLOW_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Rectangular reservoir, uniform injection along the left edge and
    /// production along the right edge.
    Slab,
    /// Square reservoir, injector and producer at opposite corners.
    FiveSpotDiagonal,
    /// Square reservoir, injectors at two opposite corners and producers at
    /// the other two.
    FiveSpotParallel,
}

impl ScenarioKind {
    /// Physical extent in meters used when the configuration gives none.
    pub fn default_extent(self) -> (f64, f64) {
        match self {
            ScenarioKind::Slab => (256.0, 64.0),
            _ => (64.0, 64.0),
        }
    }

    pub fn default_cells(self) -> (usize, usize) {
        match self {
            ScenarioKind::Slab => (256, 64),
            _ => (64, 64),
        }
    }
}

fn default_scheme() -> SchemeKind {
    SchemeKind::Sd2
}
fn default_theta() -> f64 {
    1.8
}
fn default_cfl() -> f64 {
    0.45
}
fn default_dt_max() -> f64 {
    365.0
}
fn default_pressure_days() -> f64 {
    5.0
}
fn default_pressure_steps() -> usize {
    10
}
fn default_injection_rate() -> f64 {
    0.2
}
fn default_initial() -> f64 {
    0.21
}
fn default_injected() -> f64 {
    0.85
}
fn default_mean_perm() -> f64 {
    100.0
}
fn default_beta() -> f64 {
    FieldSpec::DEFAULT_SPECTRAL_EXPONENT
}
fn default_s_rw() -> f64 {
    0.2
}
fn default_s_ro() -> f64 {
    0.15
}
fn default_mu_w() -> f64 {
    0.05
}
fn default_mu_o() -> f64 {
    10.0
}
fn default_max_steps() -> usize {
    10_000_000
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}
fn default_true() -> bool {
    true
}

/// Everything a run needs. Read from a flat TOML document whose keys are
/// exactly these field names; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub scenario: ScenarioKind,
    /// Cell counts; scenario defaults when absent.
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    /// Extent in meters; scenario defaults when absent.
    pub lx: Option<f64>,
    pub ly: Option<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeKind,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Upper bound on a single convection step (days).
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    /// Pressure is re-solved after this many days of convection...
    #[serde(default = "default_pressure_days")]
    pub pressure_interval_days: f64,
    /// ...or after this many micro-steps, whichever comes first.
    #[serde(default = "default_pressure_steps")]
    pub pressure_interval_steps: usize,
    pub total_time: f64,
    /// Pore volumes per year.
    #[serde(default = "default_injection_rate")]
    pub injection_rate: f64,
    #[serde(default = "default_initial")]
    pub initial_saturation: f64,
    #[serde(default = "default_injected")]
    pub injected_saturation: f64,
    #[serde(default = "default_mean_perm")]
    pub mean_perm: f64,
    #[serde(default)]
    pub cv: f64,
    #[serde(default = "default_beta")]
    pub spectral_exponent: f64,
    #[serde(default)]
    pub seed: u64,
    /// Snapshot CSV to read permeability from instead of generating it.
    pub permeability_file: Option<PathBuf>,
    #[serde(default = "default_s_rw")]
    pub s_rw: f64,
    #[serde(default = "default_s_ro")]
    pub s_ro: f64,
    #[serde(default = "default_mu_w")]
    pub mu_w: f64,
    #[serde(default = "default_mu_o")]
    pub mu_o: f64,
    /// Times (days) at which saturation snapshots are written.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Also write legacy VTK files next to the CSV snapshots.
    #[serde(default)]
    pub write_vtk: bool,
    /// Write the run history as `history.csv`.
    #[serde(default = "default_true")]
    pub write_history: bool,
    /// Micro-steps after which the run is aborted as a runaway.
    #[serde(default = "default_max_steps")]
    pub max_micro_steps: usize,
    /// Stop cleanly (with a final snapshot) after this many micro-steps.
    pub stop_after_micro_steps: Option<usize>,
}

impl SimulationConfig {
    /// A configuration with every optional key at its default.
    pub fn new(scenario: ScenarioKind, total_time: f64) -> Self {
        let table = toml::toml! {
            scenario = "slab"
            total_time = 0.0
        };
        let mut cfg: Self = toml::Value::Table(table).try_into().expect("defaults deserialize");
        cfg.scenario = scenario;
        cfg.total_time = total_time;
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text` and applies `key=value` overrides on top. Values are
    /// read as TOML and fall back to plain strings.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not of the form key=value")))?;
            let key = key.trim();
            let value = value.trim();
            let parsed = format!("v = {value}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(value.to_string()));
            table.insert(key.to_string(), parsed);
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, applies overrides, then the output-directory
    /// environment variable unless an override already set `output_dir`.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_with_overrides(&text, overrides)?;
        let overridden = overrides.iter().any(|o| o.split('=').next().map(str::trim) == Some("output_dir"));
        if !overridden {
            if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
                cfg.output_dir = PathBuf::from(dir);
            }
        }
        if let Some(file) = &cfg.permeability_file {
            if file.is_relative() {
                if let Some(parent) = path.parent() {
                    cfg.permeability_file = Some(parent.join(file));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn cells(&self) -> (usize, usize) {
        let (nx, ny) = self.scenario.default_cells();
        (self.nx.unwrap_or(nx), self.ny.unwrap_or(ny))
    }

    pub fn extent(&self) -> (f64, f64) {
        let (lx, ly) = self.scenario.default_extent();
        (self.lx.unwrap_or(lx), self.ly.unwrap_or(ly))
    }

    pub fn model(&self) -> Result<RockFluidModel> {
        RockFluidModel::new(self.s_rw, self.s_ro, self.mu_w, self.mu_o)
    }

    pub fn cfl_policy(&self) -> Result<CflPolicy> {
        CflPolicy::new(self.cfl, 0.0, self.dt_max)
    }

    pub fn field_spec(&self) -> FieldSpec {
        let (nx, ny) = self.cells();
        FieldSpec {
            nx,
            ny,
            seed: self.seed,
            mean_perm: self.mean_perm,
            cv: self.cv,
            spectral_exponent: self.spectral_exponent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let (nx, ny) = self.cells();
        let (lx, ly) = self.extent();
        if nx < 2 || ny < 2 {
            return bad(format!("grid needs at least 2x2 cells, got {nx}x{ny}"));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return bad(format!("extent must be positive, got {lx} x {ly}"));
        }
        let aspect = (lx / nx as f64) / (ly / ny as f64);
        if !(0.01..=100.0).contains(&aspect) {
            return bad(format!("cell aspect ratio {aspect} is outside [0.01, 100]"));
        }
        if !(self.theta >= 1.0 && self.theta <= 2.0) {
            return bad(format!("theta must lie in [1, 2], got {}", self.theta));
        }
        self.cfl_policy()?;
        if !(self.pressure_interval_days > 0.0) || self.pressure_interval_steps == 0 {
            return bad("pressure interval must be positive".into());
        }
        if !(self.total_time >= 0.0 && self.total_time.is_finite()) {
            return bad(format!("total_time must be >= 0, got {}", self.total_time));
        }
        if !(self.injection_rate >= 0.0 && self.injection_rate.is_finite()) {
            return bad(format!("injection_rate must be >= 0, got {}", self.injection_rate));
        }
        let model = self.model().map_err(|e| Error::Config(e.to_string()))?;
        for (name, s) in [
            ("initial_saturation", self.initial_saturation),
            ("injected_saturation", self.injected_saturation),
        ] {
            if !(s >= model.s_rw() && s <= model.s_max()) {
                return bad(format!("{name} {s} outside the mobile range [{}, {}]", model.s_rw(), model.s_max()));
            }
        }
        if self.permeability_file.is_none() {
            let spec = self.field_spec();
            if !(spec.mean_perm > 0.0) || !(spec.cv >= 0.0) || !spec.spectral_exponent.is_finite() {
                return bad("permeability spec needs mean_perm > 0 and cv >= 0".into());
            }
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return bad(format!("snapshot time {t} must be finite and >= 0"));
        }
        if self.max_micro_steps == 0 {
            return bad("max_micro_steps must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_uses_defaults() {
        let cfg = SimulationConfig::from_toml_str("scenario = \"slab\"\ntotal_time = 350.0\n").unwrap();
        assert_eq!(cfg.cells(), (256, 64));
        assert_eq!(cfg.extent(), (256.0, 64.0));
        assert_eq!(cfg.scheme, SchemeKind::Sd2);
        assert_eq!(cfg.theta, 1.8);
        assert_eq!(cfg.initial_saturation, 0.21);
        assert_eq!(cfg.injected_saturation, 0.85);
        assert_eq!(cfg, SimulationConfig::new(ScenarioKind::Slab, 350.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = SimulationConfig::from_toml_str("scenario = \"slab\"\ntotal_time = 1.0\nbogus = 3\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn overrides_take_precedence() {
        let cfg = SimulationConfig::from_toml_with_overrides(
            "scenario = \"slab\"\ntotal_time = 1.0\n",
            &[
                "scheme=kt_dxd".into(),
                "nx = 32".into(),
                "snapshot_times=[0.5, 1.0]".into(),
                "output_dir=/tmp/x".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.scheme, SchemeKind::KtDxd);
        assert_eq!(cfg.nx, Some(32));
        assert_eq!(cfg.snapshot_times, vec![0.5, 1.0]);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/x"));
        assert!(SimulationConfig::from_toml_with_overrides("scenario = \"slab\"\ntotal_time = 1.0\n", &["nx".into()]).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = SimulationConfig::new(ScenarioKind::FiveSpotParallel, 260.0);
        cfg.snapshot_times = vec![100.0, 260.0];
        cfg.stop_after_micro_steps = Some(5);
        let back = SimulationConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for (key, value) in [
            ("cfl", "0.6"),
            ("theta", "2.5"),
            ("nx", "1"),
            ("lx", "-3.0"),
            ("initial_saturation", "0.9"),
            ("total_time", "-1.0"),
            ("mu_o", "0.0"),
        ] {
            let r = SimulationConfig::from_toml_with_overrides(
                "scenario = \"five_spot_diagonal\"\ntotal_time = 1.0\n",
                &[format!("{key}={value}")],
            );
            assert!(matches!(r, Err(Error::Config(_))), "{key}");
        }
    }
}
