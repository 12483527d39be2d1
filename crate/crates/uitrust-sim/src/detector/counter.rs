//! Root-side control-message counter.
//!
//! The root watches the DODAG-wide control-message total per unit time and
//! raises the alarm when the windowed difference exceeds a threshold that
//! was calibrated during attack-free operation.

use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterVerdict {
    Normal,
    Alarm,
}

#[derive(Debug)]
pub struct MessageCounter {
    window_secs: u64,
    /// Control messages observed per whole second of simulated time.
    buckets: Vec<u32>,
    th_c: Option<f64>,
    calibration: Vec<f64>,
}

impl MessageCounter {
    pub fn new(window_secs: u64) -> Self {
        MessageCounter {
            window_secs: window_secs.max(1),
            buckets: Vec::new(),
            th_c: None,
            calibration: Vec::new(),
        }
    }

    pub fn record(&mut self, t: SimTime) {
        let sec = (t.as_micros() / SimTime::MICROS_PER_SEC) as usize;
        if sec >= self.buckets.len() {
            self.buckets.resize(sec + 1, 0);
        }
        self.buckets[sec] += 1;
    }

    /// Windowed difference of the running total ending at `t`.
    pub fn delta(&self, t: SimTime) -> u64 {
        let end = t.as_micros() / SimTime::MICROS_PER_SEC;
        let start = end.saturating_sub(self.window_secs);
        ((start + 1)..=end)
            .filter_map(|s| self.buckets.get(s as usize))
            .map(|c| u64::from(*c))
            .sum()
    }

    pub fn threshold(&self) -> Option<f64> {
        self.th_c
    }

    pub fn set_threshold(&mut self, th_c: f64) {
        self.th_c = Some(th_c);
    }

    /// Feed one attack-free sample of the windowed difference.
    pub fn calibration_sample(&mut self, t: SimTime) {
        let d = self.delta(t) as f64;
        self.calibration.push(d);
    }

    /// Freezes the threshold at `max(mean + 3*stddev, 1.25*max_sample)` of
    /// the calibration samples. Control traffic decays monotonically in a
    /// quiescent trickle network, so the calibration window bounds later
    /// attack-free windows from above.
    pub fn finalize_threshold(&mut self) {
        if self.th_c.is_some() {
            return;
        }
        let n = self.calibration.len().max(1) as f64;
        let mean = self.calibration.iter().sum::<f64>() / n;
        let var = self
            .calibration
            .iter()
            .map(|x| (x - mean).powi(2))
            .sum::<f64>()
            / n;
        let max = self.calibration.iter().cloned().fold(0.0, f64::max);
        self.th_c = Some((mean + 3.0 * var.sqrt()).max(1.25 * max).max(1.0));
    }

    /// Alarm iff the windowed difference strictly exceeds the threshold.
    /// Needs a full window of history and a frozen threshold.
    pub fn check(&self, t: SimTime) -> CounterVerdict {
        let Some(th) = self.th_c else {
            return CounterVerdict::Normal;
        };
        if t.as_micros() / SimTime::MICROS_PER_SEC < self.window_secs {
            return CounterVerdict::Normal;
        }
        if self.delta(t) as f64 > th {
            CounterVerdict::Alarm
        } else {
            CounterVerdict::Normal
        }
    }
}
