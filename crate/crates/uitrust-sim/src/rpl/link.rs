//! ETX link estimation from frame outcomes.

/// EWMA smoothing factor for delivery-ratio estimates.
pub const ETX_EWMA_ALPHA: f64 = 0.2;

/// Cost assigned to links with a vanished delivery ratio.
pub const UNUSABLE: f64 = f64::INFINITY;

/// Directional delivery-ratio estimates for one neighbor, both initialized
/// optimistically at 1.0.
#[derive(Debug, Clone, Copy)]
pub struct LinkStats {
    pub d_fwd: f64,
    pub d_rev: f64,
}

impl Default for LinkStats {
    fn default() -> Self {
        LinkStats {
            d_fwd: 1.0,
            d_rev: 1.0,
        }
    }
}

impl LinkStats {
    pub fn observe_fwd(&mut self, delivered: bool) {
        self.d_fwd = ewma(self.d_fwd, delivered);
    }

    pub fn observe_rev(&mut self, delivered: bool) {
        self.d_rev = ewma(self.d_rev, delivered);
    }

    pub fn etx(&self) -> f64 {
        compute_etx(self.d_fwd, self.d_rev)
    }
}

fn ewma(prev: f64, delivered: bool) -> f64 {
    let sample = if delivered { 1.0 } else { 0.0 };
    prev + ETX_EWMA_ALPHA * (sample - prev)
}

/// `1 / (d_fwd * d_rev)`; zero ratios make the link unusable.
pub fn compute_etx(d_fwd: f64, d_rev: f64) -> f64 {
    if d_fwd <= 0.0 || d_rev <= 0.0 {
        return UNUSABLE;
    }
    1.0 / (d_fwd * d_rev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_link_costs_one() {
        assert_eq!(compute_etx(1.0, 1.0), 1.0);
    }

    #[test]
    fn half_duplex_ratio_doubles_cost() {
        assert!((compute_etx(0.5, 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dead_link_is_unusable() {
        assert_eq!(compute_etx(0.0, 0.7), UNUSABLE);
        assert_eq!(compute_etx(0.7, 0.0), UNUSABLE);
    }

    #[test]
    fn ewma_tracks_outcomes() {
        let mut stats = LinkStats::default();
        assert_eq!(stats.etx(), 1.0);
        for _ in 0..50 {
            stats.observe_fwd(false);
        }
        assert!(stats.d_fwd < 0.01);
        assert!(stats.etx() > 100.0);
        for _ in 0..50 {
            stats.observe_fwd(true);
        }
        assert!(stats.d_fwd > 0.99);
    }
}
