//! Per-node radio energy ledger.
//!
//! Joules are current x voltage x airtime at the configured bitrate,
//! with CC2420-class defaults for a Tmote Sky style mote.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyModel {
    pub tx_ma: f64,
    pub rx_ma: f64,
    pub volts: f64,
    pub bitrate_bps: f64,
    pub idle_ma: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            tx_ma: 17.4,
            rx_ma: 18.8,
            volts: 3.0,
            bitrate_bps: 250_000.0,
            idle_ma: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum EnergyAction {
    TxBytes(u32),
    RxBytes(u32),
    IdleSecs(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EnergyAccount {
    pub tx_joules: f64,
    pub rx_joules: f64,
    pub idle_joules: f64,
}

impl EnergyAccount {
    pub fn total_joules(&self) -> f64 {
        self.tx_joules + self.rx_joules + self.idle_joules
    }
}

impl EnergyModel {
    pub fn airtime_secs(&self, bytes: u32) -> f64 {
        f64::from(bytes) * 8.0 / self.bitrate_bps
    }

    pub fn account(&self, account: &mut EnergyAccount, action: EnergyAction) {
        match action {
            EnergyAction::TxBytes(b) => {
                account.tx_joules += self.tx_ma / 1000.0 * self.volts * self.airtime_secs(b);
            }
            EnergyAction::RxBytes(b) => {
                account.rx_joules += self.rx_ma / 1000.0 * self.volts * self.airtime_secs(b);
            }
            EnergyAction::IdleSecs(s) => {
                debug_assert!(s >= 0.0);
                account.idle_joules += self.idle_ma / 1000.0 * self.volts * s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_bytes_cost_nothing() {
        let model = EnergyModel::default();
        let mut acc = EnergyAccount::default();
        model.account(&mut acc, EnergyAction::TxBytes(0));
        assert_eq!(acc.total_joules(), 0.0);
    }

    #[test]
    fn accounting_is_additive() {
        let model = EnergyModel::default();
        let mut once = EnergyAccount::default();
        let mut twice = EnergyAccount::default();
        model.account(&mut once, EnergyAction::TxBytes(100));
        model.account(&mut twice, EnergyAction::TxBytes(100));
        model.account(&mut twice, EnergyAction::TxBytes(100));
        assert_eq!(twice.tx_joules, 2.0 * once.tx_joules);
    }

    #[test]
    fn hand_computed_frame_energy() {
        // 125 bytes at 250 kbps is 4 ms on air; at 19.5 mA and 3 V that is
        // 0.0195 * 3 * 0.004 = 2.34e-4 J.
        let model = EnergyModel {
            tx_ma: 19.5,
            ..EnergyModel::default()
        };
        assert!((model.airtime_secs(125) - 0.004).abs() < 1e-12);
        let mut acc = EnergyAccount::default();
        model.account(&mut acc, EnergyAction::TxBytes(125));
        assert!((acc.tx_joules - 2.34e-4).abs() < 1e-12);
    }

    #[test]
    fn total_is_component_sum() {
        let model = EnergyModel {
            idle_ma: 0.4,
            ..EnergyModel::default()
        };
        let mut acc = EnergyAccount::default();
        model.account(&mut acc, EnergyAction::TxBytes(60));
        model.account(&mut acc, EnergyAction::RxBytes(60));
        model.account(&mut acc, EnergyAction::IdleSecs(5.0));
        assert!(acc.tx_joules > 0.0 && acc.rx_joules > 0.0 && acc.idle_joules > 0.0);
        assert!(
            (acc.total_joules() - (acc.tx_joules + acc.rx_joules + acc.idle_joules)).abs()
                < 1e-15
        );
    }
}
