//! Scenario configuration: a TOML key-value schema mirroring the runtime
//! knobs, with unknown keys rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::AttackerConfig;
use crate::rpl::RplConfig;
use crate::sim::{EnergyModel, RadioConfig};
use crate::trust::TrustParams;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Topology(_) => 3,
            HarnessError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Defense {
    #[serde(rename = "uitrust")]
    UiTrust,
    #[serde(rename = "rssi-profile")]
    RssiProfile,
    #[serde(rename = "id-count")]
    IdCount,
    #[serde(rename = "none-mrhof")]
    NoneMrhof,
}

impl Defense {
    pub const ALL: [Defense; 4] = [
        Defense::UiTrust,
        Defense::RssiProfile,
        Defense::IdCount,
        Defense::NoneMrhof,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Defense::UiTrust => "uitrust",
            Defense::RssiProfile => "rssi-profile",
            Defense::IdCount => "id-count",
            Defense::NoneMrhof => "none-mrhof",
        }
    }

    pub fn parse(s: &str) -> Result<Defense, HarnessError> {
        match s {
            "uitrust" => Ok(Defense::UiTrust),
            "rssi-profile" => Ok(Defense::RssiProfile),
            "id-count" => Ok(Defense::IdCount),
            "none-mrhof" => Ok(Defense::NoneMrhof),
            other => Err(HarnessError::Config(format!(
                "unknown defense '{other}' (expected uitrust, rssi-profile, id-count or none-mrhof)"
            ))),
        }
    }
}

impl std::fmt::Display for Defense {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Baseline-detector knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Identities merge when their mean received power differs by less
    /// than this at every common observer.
    pub rssi_epsilon_db: f64,
    /// Profile recency window.
    pub rssi_window_s: f64,
    /// Minimum frames before an identity has a profile at an observer.
    pub rssi_min_frames: u32,
    /// Per-identity DIS counting window.
    pub id_count_window_s: f64,
    /// Flagging threshold as a multiple of the minimum-interval DIO rate.
    pub id_count_rate_factor: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            rssi_epsilon_db: 3.0,
            rssi_window_s: 30.0,
            rssi_min_frames: 3,
            id_count_window_s: 60.0,
            id_count_rate_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    /// Non-root nodes; the root is always added on top.
    pub node_count: u16,
    pub sybil_ratio: f64,
    pub duration_s: f64,
    pub seed: u64,
    pub defense: Defense,
    pub attack_start_s: f64,
    /// Collective query interval (omega).
    pub query_interval_s: f64,
    /// DAO response-time threshold (TH_R).
    pub response_threshold_s: f64,
    /// Counter window length (n of the windowed difference).
    pub counter_window_s: f64,
    /// Explicit alarm threshold; calibrated from the warm-up when unset.
    pub counter_threshold: Option<f64>,
    pub trust_epoch_s: f64,
    pub trust: TrustParams,
    pub data_period_s: f64,
    pub data_bytes: u32,
    /// Give one honest device the same silicon serial as one attacker.
    pub forced_uid_collision: bool,
    pub radio: RadioConfig,
    pub rpl: RplConfig,
    pub attacker: AttackerConfig,
    pub baselines: BaselineConfig,
    pub energy: EnergyModel,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario_id: "scenario".into(),
            node_count: 100,
            sybil_ratio: 0.0,
            duration_s: 3600.0,
            seed: 0,
            defense: Defense::UiTrust,
            attack_start_s: 300.0,
            query_interval_s: 30.0,
            response_threshold_s: 2.0,
            counter_window_s: 10.0,
            counter_threshold: None,
            trust_epoch_s: 30.0,
            trust: TrustParams::default(),
            data_period_s: 60.0,
            data_bytes: 30,
            forced_uid_collision: false,
            radio: RadioConfig::default(),
            rpl: RplConfig::default(),
            attacker: AttackerConfig::default(),
            baselines: BaselineConfig::default(),
            energy: EnergyModel::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn attacker_count(&self) -> u16 {
        (self.sybil_ratio * f64::from(self.node_count)).round() as u16
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |msg: String| Err(HarnessError::Config(msg));
        if self.node_count < 2 {
            return err("node_count must be at least 2".into());
        }
        if !(0.0..=0.5).contains(&self.sybil_ratio) {
            return err("sybil_ratio must be in [0, 0.5]".into());
        }
        let exact = self.sybil_ratio * f64::from(self.node_count);
        if (exact - exact.round()).abs() > 1e-6 {
            return err(format!(
                "sybil_ratio * node_count = {exact} must be an integer count of attackers"
            ));
        }
        if self.duration_s <= 0.0 {
            return err("duration_s must be positive".into());
        }
        if self.sybil_ratio > 0.0 && self.attack_start_s >= self.duration_s {
            return err("attack_start_s must fall inside the run".into());
        }
        if self.query_interval_s <= 0.0 || self.response_threshold_s <= 0.0 {
            return err("query_interval_s and response_threshold_s must be positive".into());
        }
        if 2.0 * self.response_threshold_s > self.query_interval_s {
            return err("query_interval_s must be at least twice response_threshold_s".into());
        }
        if self.counter_window_s < 1.0 {
            return err("counter_window_s must be at least 1 second".into());
        }
        if self.counter_threshold.is_none()
            && self.attack_start_s < 4.0 * self.counter_window_s
        {
            return err(
                "attack_start_s too early to calibrate the counter; set counter_threshold".into(),
            );
        }
        if self.trust_epoch_s <= 0.0 {
            return err("trust_epoch_s must be positive".into());
        }
        if self.data_period_s <= 0.0 {
            return err("data_period_s must be positive".into());
        }
        self.radio
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.attacker.validate().map_err(HarnessError::Config)?;
        self.trust.validate().map_err(HarnessError::Config)?;
        if self.baselines.rssi_epsilon_db <= 0.0 || self.baselines.rssi_window_s <= 0.0 {
            return err("rssi baseline parameters must be positive".into());
        }
        if self.baselines.id_count_window_s <= 0.0 || self.baselines.id_count_rate_factor <= 0.0 {
            return err("id-count baseline parameters must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::from_toml_str("bogus_key = 1\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = ScenarioConfig::from_toml_str("[radio]\nwat = 3\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn fractional_attacker_count_is_rejected() {
        let text = "node_count = 100\nsybil_ratio = 0.123\n";
        assert!(ScenarioConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn round_ratio_parses() {
        let text = "node_count = 100\nsybil_ratio = 0.3\ndefense = \"none-mrhof\"\n";
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.attacker_count(), 30);
        assert_eq!(cfg.defense, Defense::NoneMrhof);
    }

    #[test]
    fn attacker_and_trust_tables_parse() {
        let text = r#"
sybil_ratio = 0.1
[attacker]
dis_rate_hz = 2.0
power_levels_dbm = [-10.0, 0.0]
query_behavior = { mode = "ignore", value = 0.5 }
[trust]
gamma = 0.4
"#;
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.attacker.dis_rate_hz, 2.0);
        assert_eq!(cfg.trust.gamma, 0.4);
    }
}
