use super::MixtureParams;
use crate::env::Design;
use crate::error::{Error, Result};
use crate::nn::Adam;

/// Smallest standard deviation used when standardizing returns.
pub const MIN_RETURN_STD: f64 = 1e-8;

/// Shifts and scales returns to zero mean and unit (population) std.
pub fn standardize_returns(returns: &[f64]) -> Vec<f64> {
    if returns.is_empty() {
        return Vec::new();
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(MIN_RETURN_STD);
    returns.iter().map(|r| (r - mean) / std).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignLoss {
    pub loss: f64,
    pub grad: MixtureParams,
}

/// Score-function loss for the design distribution:
/// `-(1/d) Σ (log p(x_i) · R_i − λ · log p(x_i))`, with its exact gradient.
///
/// `returns` enter as given; callers standardize them first.
pub fn design_loss(
    params: &MixtureParams,
    designs: &[Design],
    returns: &[f64],
    entropy_weight: f64,
) -> Result<DesignLoss> {
    if designs.len() != returns.len() || designs.is_empty() {
        return Err(Error::LengthMismatch {
            designs: designs.len(),
            returns: returns.len(),
        });
    }
    let d = designs.len() as f64;
    let mut loss = 0.0;
    let mut grad = params.zeros_like();
    for (x, &r) in designs.iter().zip(returns) {
        let (lp, g) = params.log_prob_grad(x)?;
        let coef = r - entropy_weight;
        loss -= lp * coef / d;
        for (acc, gi) in grad.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *acc -= gi * coef / d;
        }
    }
    Ok(DesignLoss { loss, grad })
}

/// One optimizer step on the mixture parameters (descent on the loss).
pub fn update_design(params: &mut MixtureParams, grad: &MixtureParams, optimizer: &mut Adam) {
    optimizer.step(params, grad);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::init_mixture;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(rng: &mut ChaCha8Rng) -> MixtureParams {
        let logits: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let means: Vec<[f64; 2]> = (0..3)
            .map(|_| [rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5)])
            .collect();
        let stds: Vec<[f64; 2]> = (0..3)
            .map(|_| [rng.random_range(-0.7..0.3), rng.random_range(-0.7..0.3)])
            .collect();
        MixtureParams::new(&logits, &means, &stds).unwrap()
    }

    #[test]
    fn equal_returns_give_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_params(&mut rng);
        let xs = p.sample_designs(6, &mut rng);
        let adv = standardize_returns(&[-3.0; 6]);
        assert!(adv.iter().all(|&a| a == 0.0));
        let out = design_loss(&p, &xs, &adv, 0.0).unwrap();
        assert!(out.grad.as_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_params(&mut rng);
        let xs = p.sample_designs(3, &mut rng);
        assert!(matches!(
            design_loss(&p, &xs, &[1.0, 2.0], 0.0),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_design_mean_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_params(&mut rng);
        let xs = p.sample_designs(1, &mut rng);
        let r = [1.7];
        let g = design_loss(&p, &xs, &r, 0.05).unwrap().grad;
        let eps = 1e-5;
        for k in 0..3 {
            for j in 0..2 {
                let mut hi = p.clone();
                *hi.log_mean_mut(k, j) += eps;
                let mut lo = p.clone();
                *lo.log_mean_mut(k, j) -= eps;
                let num = (design_loss(&hi, &xs, &r, 0.05).unwrap().loss
                    - design_loss(&lo, &xs, &r, 0.05).unwrap().loss)
                    / (2.0 * eps);
                let ana = g.as_slice()[3 + 2 * k + j];
                assert!((ana - num).abs() <= 1e-5 * ana.abs().max(num.abs()) + 1e-9, "{ana} {num}");
            }
        }
    }

    #[test]
    fn logit_gradient_is_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = random_params(&mut rng);
            let xs = p.sample_designs(8, &mut rng);
            let r: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = design_loss(&p, &xs, &r, 0.1).unwrap().grad;
            let s: f64 = g.as_slice()[..3].iter().sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_bonus_raises_surrogate_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut p = init_mixture(3, 0.5, &mut rng);
        let xs = p.sample_designs(16, &mut rng);
        let surrogate = |p: &MixtureParams| {
            -xs.iter().map(|x| p.log_prob(x).unwrap()).sum::<f64>() / xs.len() as f64
        };
        let before = surrogate(&p);
        let out = design_loss(&p, &xs, &[0.0; 16], 0.2).unwrap();
        let mut opt = Adam::new(1e-2);
        update_design(&mut p, &out.grad, &mut opt);
        assert!(surrogate(&p) > before);
    }

    #[test]
    fn zero_gradient_update_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = random_params(&mut rng);
        let before = p.clone();
        let zero = p.zeros_like();
        update_design(&mut p, &zero, &mut Adam::new(5e-3));
        assert_eq!(p, before);
    }

    #[test]
    fn std_stays_positive_under_random_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut p = random_params(&mut rng);
        let mut opt = Adam::new(5e-2);
        for _ in 0..10_000 {
            let mut g = p.zeros_like();
            for v in g.as_mut_slice() {
                *v = rng.random_range(-10.0..10.0);
            }
            update_design(&mut p, &g, &mut opt);
        }
        for k in 0..3 {
            for j in 0..2 {
                let s = p.std(k, j);
                assert!(s > 0.0 && s.is_finite());
            }
        }
    }
}
