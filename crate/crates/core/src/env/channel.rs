//! Line-of-sight channel, upload rate and UAV energy models.

use super::{Position3, WorldConfig};

/// Ground-plane distance; altitude is ignored.
pub fn horizontal_distance(a: &Position3, b: &Position3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Free-space power gain for a user at horizontal distance `d` from a UAV
/// hovering at the configured altitude.
pub fn channel_gain(d: f64, cfg: &WorldConfig) -> f64 {
    cfg.ref_channel_gain / (cfg.altitude * cfg.altitude + d * d)
}

/// Shannon rate of one user given its bandwidth share (bits/s).
pub fn upload_rate(bandwidth_share: f64, gain: f64, cfg: &WorldConfig) -> f64 {
    let snr = cfg.user_tx_power * gain / cfg.noise_power;
    bandwidth_share * (1.0 + snr).log2()
}

pub fn flight_energy(speed: f64, cfg: &WorldConfig) -> f64 {
    cfg.flight_energy_coeff * speed * speed
}

pub fn compute_energy(rate: f64, cfg: &WorldConfig) -> f64 {
    cfg.switching_capacitance * cfg.cycles_per_bit * rate * cfg.cpu_frequency * cfg.cpu_frequency
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> WorldConfig {
        WorldConfig::default()
    }

    #[test]
    fn distance_ignores_altitude() {
        let a = Position3::new(3.0, 4.0, 0.0);
        let b = Position3::new(0.0, 0.0, 100.0);
        assert_eq!(horizontal_distance(&a, &b), 5.0);
        assert_eq!(horizontal_distance(&a, &a), 0.0);
        let c = Position3::new(10.0, 0.0, 0.0);
        assert_eq!(horizontal_distance(&c, &Position3::default()), 10.0);
    }

    #[test]
    fn gain_values() {
        let c = cfg();
        assert!((channel_gain(0.0, &c) - 1e-9).abs() < 1e-24);
        // 1e-5 / (1e4 + 1e4)
        assert!((channel_gain(100.0, &c) - 5e-10).abs() < 1e-24);
        let mut prev = channel_gain(0.0, &c);
        for i in 1..200 {
            let g = channel_gain(i as f64, &c);
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn rate_values() {
        let c = cfg();
        // snr = P_u * g / sigma^2; pick g so that snr is exactly 1 and 3
        let g1 = c.noise_power / c.user_tx_power;
        assert!((upload_rate(1e6, g1, &c) - 1e6).abs() < 1e-6);
        assert!((upload_rate(1e6, 3.0 * g1, &c) - 2e6).abs() < 1e-6);
        assert_eq!(upload_rate(1e6, 0.0, &c), 0.0);
    }

    #[test]
    fn energy_values() {
        let c = cfg();
        assert_eq!(flight_energy(0.0, &c), 0.0);
        assert_eq!(flight_energy(10.0, &c), 50.0);
        assert_eq!(flight_energy(20.0, &c), 4.0 * flight_energy(10.0, &c));
        assert_eq!(compute_energy(0.0, &c), 0.0);
        assert!((compute_energy(1e6, &c) - 0.1).abs() < 1e-15);
        assert!((compute_energy(2e6, &c) - 2.0 * compute_energy(1e6, &c)).abs() < 1e-15);
    }
}
