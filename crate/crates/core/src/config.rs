//! Run configuration: a TOML file with fixed sections, unknown keys rejected,
//! plus `section.key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circle_map::ZoneSide;
use crate::error::{Error, Result};
use crate::sequences::{Alpha1Policy, SeqParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub omega: f64,
    pub delta: f64,
    pub big_c: f64,
    pub big_b: f64,
    pub truncation_m: usize,
    /// `"half_abs_k1"` or `{ fixed = <value> }`
    pub alpha1: Alpha1Policy,
    pub zone: ZoneSide,
    pub quadrature_tolerance: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let p = SeqParams::default();
        ParamsConfig {
            omega: p.omega,
            delta: p.delta,
            big_c: p.big_c,
            big_b: p.big_b,
            truncation_m: p.truncation_m,
            alpha1: p.alpha1_policy,
            zone: ZoneSide::Normal,
            quadrature_tolerance: 1e-13,
        }
    }
}

impl ParamsConfig {
    pub fn seq_params(&self) -> SeqParams {
        SeqParams {
            omega: self.omega,
            delta: self.delta,
            big_c: self.big_c,
            big_b: self.big_b,
            truncation_m: self.truncation_m,
            alpha1_policy: self.alpha1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub write_csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), write_csv: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub invariance: f64,
    pub recurrence: f64,
    pub zero_seed: f64,
    pub linearity_deviation: f64,
    pub linearity_slope: f64,
    pub manifold: f64,
    pub contraction: f64,
    pub curve_side: f64,
    pub on_curve: f64,
    pub regularity_mismatch: f64,
    pub plateau: f64,
    pub jump: f64,
    pub inverse_round_trip: f64,
    pub determinant: f64,
    pub translation: f64,
    pub periodicity: f64,
    pub semiconjugacy: f64,
    pub wandering: f64,
    pub convergence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            invariance: 1e-10,
            recurrence: 1e-13,
            zero_seed: 1e-12,
            linearity_deviation: 1e-11,
            linearity_slope: 1e-10,
            manifold: 1e-10,
            contraction: 1e-10,
            curve_side: 1e-12,
            on_curve: 1e-11,
            regularity_mismatch: 1e-6,
            plateau: 1e-11,
            jump: 1e-14,
            inverse_round_trip: 1e-12,
            determinant: 1e-9,
            translation: 1e-14,
            periodicity: 1e-13,
            semiconjugacy: 1e-10,
            wandering: 1e-10,
            convergence: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub invariance_samples: usize,
    pub rotation_iterates: usize,
    pub rotation_starts: Vec<f64>,
    pub structural_samples: usize,
    pub scan_points: usize,
    pub wandering_steps: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            invariance_samples: 10_000,
            rotation_iterates: 100_000,
            rotation_starts: vec![0.0, 0.31, 0.77],
            structural_samples: 1000,
            scan_points: 10_000,
            wandering_steps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularityConfig {
    /// When positive, rebuild with `C * c_factor` and compare global suprema.
    pub c_factor: f64,
    pub min_ratio: f64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        RegularityConfig { c_factor: 0.0, min_ratio: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortraitConfig {
    pub orbits: usize,
    pub steps: usize,
    /// initial heights spread over curve +- spread
    pub spread: f64,
    pub curve_points: usize,
}

impl Default for PortraitConfig {
    fn default() -> Self {
        PortraitConfig { orbits: 20, steps: 10_000, spread: 0.05, curve_points: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldsConfig {
    pub k_max: i64,
    pub family: usize,
    pub side_samples: usize,
    pub convergence_steps: usize,
}

impl Default for ManifoldsConfig {
    fn default() -> Self {
        ManifoldsConfig { k_max: 50, family: 5, side_samples: 32, convergence_steps: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionConfig {
    pub offsets: Vec<f64>,
    /// starting angle; defaults to `mu_1 + l_1/16`
    pub theta0: Option<f64>,
    pub iterations: usize,
    pub thresholds: Vec<f64>,
    pub checkpoints: usize,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            offsets: vec![-1e-3, 1e-3],
            theta0: None,
            iterations: 100_000,
            thresholds: vec![2e-3, 1e-2, 1e-1],
            checkpoints: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed of every random sample.
    pub seed: u64,
    /// Use the rigid rotation instead of the constructed map.
    pub rigid_rotation: bool,
    pub params: ParamsConfig,
    pub output: OutputConfig,
    pub tolerances: Tolerances,
    pub verify: VerifyConfig,
    pub regularity: RegularityConfig,
    pub portrait: PortraitConfig,
    pub manifolds: ManifoldsConfig,
    pub diffusion: DiffusionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 2024,
            rigid_rotation: false,
            params: ParamsConfig::default(),
            output: OutputConfig::default(),
            tolerances: Tolerances::default(),
            verify: VerifyConfig::default(),
            regularity: RegularityConfig::default(),
            portrait: PortraitConfig::default(),
            manifolds: ManifoldsConfig::default(),
            diffusion: DiffusionConfig::default(),
        }
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidParameter { name: "config", reason: msg.into() }
}

/// Parses a value written on the command line as TOML, falling back to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `path.to.key=value` to a TOML table.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) =
        assignment.split_once('=').ok_or_else(|| config_error(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_error(format!("bad override key `{path}`")));
    }
    let mut cur = table;
    for key in &keys[..keys.len() - 1] {
        let entry = cur.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| config_error(format!("`{key}` is not a section")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), parse_override_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_error(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| config_error(e.to_string()))?;
        cfg.params.seq_params().validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_str("", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.params.seq_params(), SeqParams::default());
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml_str(&c.to_toml_string(), &[]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn shipped_default_file_matches_defaults() {
        let text = include_str!("../../../configs/default.toml");
        assert_eq!(RunConfig::from_toml_str(text, &[]).unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml_str("[params]\nbogus = 1\n", &[]).is_err());
        assert!(RunConfig::from_toml_str("[nonsense]\n", &[]).is_err());
    }

    #[test]
    fn overrides_apply() {
        let c = RunConfig::from_toml_str(
            "[params]\ndelta = 0.7\n",
            &["params.big_c=200".into(), "params.zone=flipped".into(), "params.alpha1={fixed=0.001}".into()],
        )
        .unwrap();
        assert_eq!(c.params.delta, 0.7);
        assert_eq!(c.params.big_c, 200.0);
        assert_eq!(c.params.zone, ZoneSide::Flipped);
        assert_eq!(c.params.alpha1, Alpha1Policy::Fixed(0.001));
        assert!(RunConfig::from_toml_str("", &["params.nope=1".into()]).is_err());
        assert!(RunConfig::from_toml_str("", &["novalue".into()]).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        let e = RunConfig::from_toml_str("[params]\ndelta = -1.0\n", &[]).unwrap_err();
        assert!(matches!(e, Error::DivergentSum { .. }));
    }
}
