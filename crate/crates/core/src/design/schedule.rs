use serde::{Deserialize, Serialize};

/// Entropy-bonus weight that decays linearly from `initial` to zero at the
/// halfway point of training and stays at zero afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySchedule {
    pub initial: f64,
    pub total_iterations: usize,
}

impl EntropySchedule {
    pub fn new(initial: f64, total_iterations: usize) -> Self {
        Self {
            initial,
            total_iterations,
        }
    }

    pub fn weight(&self, iteration: usize) -> f64 {
        if self.total_iterations == 0 {
            return 0.0;
        }
        let frac = 2.0 * iteration as f64 / self.total_iterations as f64;
        self.initial * (1.0 - frac).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reaches_zero_at_half_and_stays() {
        let s = EntropySchedule::new(0.1, 500);
        assert_eq!(s.weight(0), 0.1);
        assert!((s.weight(125) - 0.05).abs() < 1e-15);
        assert_eq!(s.weight(250), 0.0);
        let mut prev = f64::INFINITY;
        for i in 0..=600 {
            let w = s.weight(i);
            assert!(w <= prev);
            if i >= 250 {
                assert_eq!(w, 0.0);
            }
            prev = w;
        }
    }
}
