//! Piecewise-linear cost shared by the stopping and control examples.

/// Stopping cost: 1 far left, a ramp down to a flat 0.2 around zero, then a
/// ramp up to 0.8.
pub fn stopcost(x: f64) -> f64 {
    if x < -7.0 {
        1.0
    } else if x < -2.0 {
        1.0 - (x + 7.0) * 0.8 / 5.0
    } else if x <= 2.0 {
        0.2
    } else if x < 6.0 {
        0.2 + (x - 2.0) * 0.6 / 4.0
    } else {
        0.8
    }
}

/// Per-step reward of the control example; same shape as [`stopcost`].
pub fn reward(x: f64) -> f64 {
    stopcost(x)
}

/// Constant per-observation sampling cost of the stopping example.
pub fn sampcost(_x: f64) -> f64 {
    0.1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breakpoints() {
        assert_eq!(stopcost(0.0), 0.2);
        assert_eq!(stopcost(-7.0), 1.0);
        assert!((stopcost(4.0) - 0.5).abs() < 1e-15);
        assert_eq!(stopcost(-8.0), 1.0);
        assert!((stopcost(-2.0) - 0.2).abs() < 1e-15);
        assert_eq!(stopcost(2.0), 0.2);
        assert_eq!(stopcost(6.0), 0.8);
        assert_eq!(stopcost(100.0), 0.8);
        assert!((stopcost(-2.0 - 1e-12) - 0.2).abs() < 1e-12);
        assert!((stopcost(6.0 - 1e-12) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn reward_matches_stopcost() {
        for k in -100..=100 {
            let x = k as f64 * 0.1;
            assert_eq!(reward(x), stopcost(x));
        }
    }
}
