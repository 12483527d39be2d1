//! Disk-connectivity radio with Bernoulli frame loss and log-distance RSSI.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub tx_range_m: f64,
    pub forwarding_error_rate: f64,
    pub path_loss_exponent: f64,
    pub ref_loss_db: f64,
    /// Standard deviation of per-frame Gaussian shadowing; 0 disables it.
    pub shadowing_sigma_db: f64,
    /// Default transmit power; attackers override per identity.
    pub tx_power_dbm: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            tx_range_m: 30.0,
            forwarding_error_rate: 0.05,
            path_loss_exponent: 2.0,
            ref_loss_db: 40.0,
            shadowing_sigma_db: 2.0,
            tx_power_dbm: 0.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum RadioError {
    #[error("tx and rx must differ")]
    SelfDelivery,
    #[error("rssi undefined at zero distance")]
    ZeroDistance,
    #[error("invalid radio config: {0}")]
    InvalidConfig(String),
}

impl RadioConfig {
    pub fn validate(&self) -> Result<(), RadioError> {
        if self.tx_range_m <= 0.0 {
            return Err(RadioError::InvalidConfig("tx_range_m must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.forwarding_error_rate) {
            return Err(RadioError::InvalidConfig(
                "forwarding_error_rate must be in [0,1]".into(),
            ));
        }
        if self.shadowing_sigma_db < 0.0 {
            return Err(RadioError::InvalidConfig(
                "shadowing_sigma_db must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeliveryOutcome {
    Delivered { rssi_dbm: f64 },
    DroppedLoss,
    DroppedOutOfRange,
}

impl DeliveryOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            DeliveryOutcome::Delivered { .. } => "delivered",
            DeliveryOutcome::DroppedLoss => "loss",
            DeliveryOutcome::DroppedOutOfRange => "out_of_range",
        }
    }
}

/// Static node positions plus the propagation model.
#[derive(Debug, Clone)]
pub struct Radio {
    cfg: RadioConfig,
    positions: Vec<(f64, f64)>,
    /// In-range peers per node, ascending index order.
    neighbors: Vec<Vec<u16>>,
}

impl Radio {
    pub fn new(cfg: RadioConfig, positions: Vec<(f64, f64)>) -> Result<Self, RadioError> {
        cfg.validate()?;
        let n = positions.len();
        let mut neighbors = vec![Vec::new(); n];
        for a in 0..n {
            for b in (a + 1)..n {
                let d = dist(positions[a], positions[b]);
                if d <= cfg.tx_range_m {
                    neighbors[a].push(b as u16);
                    neighbors[b].push(a as u16);
                }
            }
        }
        Ok(Radio {
            cfg,
            positions,
            neighbors,
        })
    }

    pub fn config(&self) -> &RadioConfig {
        &self.cfg
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn position(&self, node: u16) -> (f64, f64) {
        self.positions[node as usize]
    }

    pub fn neighbors(&self, node: u16) -> &[u16] {
        &self.neighbors[node as usize]
    }

    pub fn distance(&self, a: u16, b: u16) -> f64 {
        dist(self.positions[a as usize], self.positions[b as usize])
    }

    /// Deterministic log-distance received power, without shadowing.
    pub fn rssi_at(&self, tx_power_dbm: f64, distance_m: f64) -> Result<f64, RadioError> {
        if distance_m <= 0.0 {
            return Err(RadioError::ZeroDistance);
        }
        Ok(tx_power_dbm - self.cfg.ref_loss_db
            - 10.0 * self.cfg.path_loss_exponent * distance_m.log10())
    }

    /// One delivery attempt. The rng is consumed in a fixed pattern (one
    /// loss draw, then one shadowing draw on delivery) so traces replay
    /// exactly under the same seed.
    pub fn deliver(
        &self,
        tx: u16,
        rx: u16,
        tx_power_dbm: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<DeliveryOutcome, RadioError> {
        if tx == rx {
            return Err(RadioError::SelfDelivery);
        }
        let d = self.distance(tx, rx);
        if d > self.cfg.tx_range_m {
            return Ok(DeliveryOutcome::DroppedOutOfRange);
        }
        if self.cfg.forwarding_error_rate > 0.0
            && rng.gen::<f64>() < self.cfg.forwarding_error_rate
        {
            return Ok(DeliveryOutcome::DroppedLoss);
        }
        let mut rssi = self.rssi_at(tx_power_dbm, d.max(1e-3))?;
        if self.cfg.shadowing_sigma_db > 0.0 {
            rssi += gaussian(rng) * self.cfg.shadowing_sigma_db;
        }
        Ok(DeliveryOutcome::Delivered { rssi_dbm: rssi })
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Box-Muller standard normal from two uniform draws.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn radio(cfg: RadioConfig, positions: Vec<(f64, f64)>) -> Radio {
        Radio::new(cfg, positions).unwrap()
    }

    fn quiet_cfg() -> RadioConfig {
        RadioConfig {
            shadowing_sigma_db: 0.0,
            ..RadioConfig::default()
        }
    }

    #[test]
    fn out_of_range_is_dropped() {
        let r = radio(quiet_cfg(), vec![(0.0, 0.0), (50.0, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            r.deliver(0, 1, 0.0, &mut rng).unwrap(),
            DeliveryOutcome::DroppedOutOfRange
        );
    }

    #[test]
    fn zero_loss_always_delivers() {
        let cfg = RadioConfig {
            forwarding_error_rate: 0.0,
            ..quiet_cfg()
        };
        let r = radio(cfg, vec![(0.0, 0.0), (10.0, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            assert!(matches!(
                r.deliver(0, 1, 0.0, &mut rng).unwrap(),
                DeliveryOutcome::Delivered { .. }
            ));
        }
    }

    #[test]
    fn empirical_loss_matches_configured_rate() {
        let r = radio(quiet_cfg(), vec![(0.0, 0.0), (10.0, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 10_000;
        let mut drops = 0;
        for _ in 0..trials {
            if matches!(
                r.deliver(0, 1, 0.0, &mut rng).unwrap(),
                DeliveryOutcome::DroppedLoss
            ) {
                drops += 1;
            }
        }
        let fraction = f64::from(drops) / f64::from(trials);
        assert!(
            (fraction - 0.05).abs() <= 0.01,
            "drop fraction {fraction} outside 0.05 +/- 0.01"
        );
    }

    #[test]
    fn rssi_at_reference_distance() {
        let r = radio(quiet_cfg(), vec![(0.0, 0.0), (1.0, 0.0)]);
        assert!((r.rssi_at(0.0, 1.0).unwrap() - (-40.0)).abs() < 1e-12);
    }

    #[test]
    fn rssi_linear_in_tx_power() {
        let r = radio(quiet_cfg(), vec![(0.0, 0.0), (7.0, 0.0)]);
        let hi = r.rssi_at(0.0, 7.0).unwrap();
        let lo = r.rssi_at(-10.0, 7.0).unwrap();
        assert!((hi - lo - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rssi_log_distance_hand_value() {
        let r = radio(quiet_cfg(), vec![(0.0, 0.0), (10.0, 0.0)]);
        assert!((r.rssi_at(0.0, 10.0).unwrap() - (-60.0)).abs() < 1e-12);
    }

    #[test]
    fn rssi_rejects_zero_distance() {
        let r = radio(quiet_cfg(), vec![(0.0, 0.0), (10.0, 0.0)]);
        assert!(r.rssi_at(0.0, 0.0).is_err());
    }

    #[test]
    fn self_delivery_rejected() {
        let r = radio(quiet_cfg(), vec![(0.0, 0.0), (10.0, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(r.deliver(1, 1, 0.0, &mut rng).is_err());
    }

    #[test]
    fn neighbors_respect_range() {
        let r = radio(
            quiet_cfg(),
            vec![(0.0, 0.0), (10.0, 0.0), (29.9, 0.0), (31.0, 0.0)],
        );
        assert_eq!(r.neighbors(0), &[1, 2]);
        assert_eq!(r.neighbors(3), &[1, 2]);
    }
}
