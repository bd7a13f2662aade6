//! Dual variables for constrained training: the statistical multiplier μ,
//! the pointwise reweighting λ, their ascent updates, and the exact
//! Euclidean projection onto the scaled simplex.
//!
//! λ lives over all points (labeled and unlabeled together) and is kept a
//! valid reweighting: nonnegative with Σλ equal to the point count. Two
//! ascent flavors are provided — the projected update, and a multiplicative
//! renormalization that preserves the same constraint set; both keep the
//! invariants exactly.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dual state: multiplier μ, reweighting λ, target loss ε, and step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    /// Statistical-constraint multiplier, always ≥ 0.
    pub mu: f64,
    /// Pointwise weights over all points; Σλ = n, λ ≥ 0.
    pub lambda: Vec<f64>,
    /// Target mean loss ε ≥ 0.
    pub eps: f64,
    /// Ascent step for μ.
    pub eta_mu: f64,
    /// Ascent step for λ.
    pub eta_lambda: f64,
}

impl DualState {
    /// Fresh dual state: μ = μ₀, λ uniform (all ones, summing to `n`).
    pub fn new(n: usize, mu0: f64, eps: f64, eta_mu: f64, eta_lambda: f64) -> Result<DualState> {
        if n == 0 {
            return Err(Error::invalid("dual state needs at least one point"));
        }
        if mu0 < 0.0 || eps < 0.0 {
            return Err(Error::invalid(format!(
                "μ₀ and ε must be nonnegative, got μ₀={mu0}, ε={eps}"
            )));
        }
        if !(eta_mu > 0.0) || !(eta_lambda > 0.0) {
            return Err(Error::invalid(format!(
                "dual step sizes must be positive, got η_μ={eta_mu}, η_λ={eta_lambda}"
            )));
        }
        Ok(DualState {
            mu: mu0,
            lambda: vec![1.0; n],
            eps,
            eta_mu,
            eta_lambda,
        })
    }

    /// Number of points λ ranges over.
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    /// True when λ is empty (never for a validly constructed state).
    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Ascent on μ: `μ' = max(0, μ + η_μ·(mean_loss − ε))`; λ unchanged.
    pub fn update_mu(&self, mean_loss: f64) -> DualState {
        let mut next = self.clone();
        next.mu = (self.mu + self.eta_mu * (mean_loss - self.eps)).max(0.0);
        next
    }

    /// Projected ascent on λ: add `η_λ·‖∇f‖²` pointwise, then project back
    /// onto `{λ ≥ 0, Σλ = n}`.
    pub fn update_lambda(&self, grad_norm_sq: &[f64]) -> Result<DualState> {
        self.check_ascent_input(grad_norm_sq)?;
        let n = self.lambda.len();
        let shifted: Vec<f64> = self
            .lambda
            .iter()
            .zip(grad_norm_sq)
            .map(|(l, g)| l + self.eta_lambda * g)
            .collect();
        let mut next = self.clone();
        next.lambda = project_scaled_simplex(&shifted, n as f64);
        Ok(next)
    }

    /// Renormalized ascent on λ: add `η_λ·‖∇f‖²` pointwise, then rescale
    /// multiplicatively so Σλ = n. Keeps the same constraint set as the
    /// projected update but forgets old mass geometrically, which damps the
    /// weight-chasing cycles the projection can fall into during minimax
    /// training.
    pub fn update_lambda_normalized(&self, grad_norm_sq: &[f64]) -> Result<DualState> {
        self.check_ascent_input(grad_norm_sq)?;
        let n = self.lambda.len() as f64;
        let mut shifted: Vec<f64> = self
            .lambda
            .iter()
            .zip(grad_norm_sq)
            .map(|(l, g)| l + self.eta_lambda * g)
            .collect();
        let total: f64 = shifted.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid(
                "λ ascent produced a nonpositive total; cannot renormalize",
            ));
        }
        let scale = n / total;
        for l in &mut shifted {
            *l *= scale;
        }
        let mut next = self.clone();
        next.lambda = shifted;
        Ok(next)
    }

    fn check_ascent_input(&self, grad_norm_sq: &[f64]) -> Result<()> {
        if grad_norm_sq.len() != self.lambda.len() {
            return Err(Error::invalid(format!(
                "got {} gradient-norm entries for {} weights",
                grad_norm_sq.len(),
                self.lambda.len()
            )));
        }
        if grad_norm_sq.iter().any(|&g| !(g >= 0.0)) {
            return Err(Error::invalid(
                "squared gradient norms must be nonnegative and finite",
            ));
        }
        Ok(())
    }
}

/// Euclidean projection of `v` onto the scaled simplex `{x ≥ 0, Σx = total}`.
///
/// Sort-and-threshold: the projection is `max(v − θ, 0)` for the unique
/// threshold θ making the result sum to `total`. O(n log n), exact up to
/// floating-point rounding.
pub fn project_scaled_simplex(v: &[f64], total: f64) -> Vec<f64> {
    assert!(total > 0.0, "simplex total must be positive");
    assert!(!v.is_empty(), "cannot project an empty vector");
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let candidate = (cumsum - total) / (j as f64 + 1.0);
        if uj > candidate {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Value of the empirical Lagrangian:
/// `μ·(mean(losses) − ε) + smooth_term`.
///
/// `smooth_term` is the λ-weighted smoothness functional — either the mean of
/// λ-weighted squared gradient norms or a Dirichlet-energy estimate.
pub fn empirical_lagrangian(losses: &[f64], smooth_term: f64, mu: f64, eps: f64) -> f64 {
    if losses.is_empty() {
        return smooth_term;
    }
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    mu * (mean - eps) + smooth_term
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(n: usize) -> DualState {
        DualState::new(n, 1.0, 0.1, 0.5, 1.0).unwrap()
    }

    #[test]
    fn new_rejects_bad_inputs() {
        assert!(DualState::new(0, 1.0, 0.1, 0.5, 0.1).is_err());
        assert!(DualState::new(3, -1.0, 0.1, 0.5, 0.1).is_err());
        assert!(DualState::new(3, 1.0, -0.1, 0.5, 0.1).is_err());
        assert!(DualState::new(3, 1.0, 0.1, 0.0, 0.1).is_err());
        assert!(DualState::new(3, 1.0, 0.1, 0.5, -0.1).is_err());
    }

    #[test]
    fn update_mu_arithmetic() {
        let s = state(4);
        // mean_loss = ε leaves μ unchanged.
        assert_eq!(s.update_mu(0.1).mu, s.mu);
        // μ=1, η_μ=0.5, mean_loss−ε=0.2 → 1.1.
        assert_relative_eq!(s.update_mu(0.3).mu, 1.1, max_relative = 1e-12);
        // Positive-part clamp: μ=0 and loss below target stays 0.
        let mut zero = s.clone();
        zero.mu = 0.0;
        assert_eq!(zero.update_mu(0.0).mu, 0.0);
    }

    #[test]
    fn update_mu_strictly_increases_while_infeasible() {
        let mut s = state(3);
        let loss = 0.5;
        for _ in 0..10 {
            let next = s.update_mu(loss);
            assert_relative_eq!(
                next.mu - s.mu,
                s.eta_mu * (loss - s.eps),
                max_relative = 1e-12
            );
            assert!(next.mu > s.mu);
            s = next;
        }
    }

    #[test]
    fn update_lambda_zero_ascent_is_identity() {
        let s = state(5);
        let next = s.update_lambda(&[0.0; 5]).unwrap();
        for (a, b) in next.lambda.iter().zip(&s.lambda) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn update_lambda_uniform_ascent_cancels() {
        // A constant shift is removed exactly by the equality-constrained
        // projection when every coordinate stays interior.
        let mut s = state(4);
        s.lambda = vec![0.5, 1.5, 1.0, 1.0];
        let next = s.update_lambda(&[3.0; 4]).unwrap();
        for (a, b) in next.lambda.iter().zip(&s.lambda) {
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn update_lambda_two_point_example() {
        // λ=(1,1), η_λ=1, g=(2,0) → shifted (3,1) → projected (2,0).
        let s = state(2);
        let next = s.update_lambda(&[2.0, 0.0]).unwrap();
        assert_relative_eq!(next.lambda[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(next.lambda[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn update_lambda_rejects_bad_input() {
        let s = state(3);
        assert!(s.update_lambda(&[0.0, 0.0]).is_err());
        assert!(s.update_lambda(&[0.0, -1.0, 0.0]).is_err());
        assert!(s.update_lambda(&[0.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn normalized_update_keeps_invariants() {
        let mut s = state(6);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let g: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..4.0)).collect();
            s = s.update_lambda_normalized(&g).unwrap();
            let sum: f64 = s.lambda.iter().sum();
            assert!((sum - 6.0).abs() < 1e-9 * 6.0);
            assert!(s.lambda.iter().all(|&l| l >= 0.0));
        }
    }

    #[test]
    fn normalized_update_zero_ascent_is_identity() {
        // Uniform λ with zero gradient norms stays exactly uniform.
        let s = state(4);
        let next = s.update_lambda_normalized(&[0.0; 4]).unwrap();
        assert_eq!(next.lambda, s.lambda);
    }

    #[test]
    fn projection_fixes_points_on_the_set() {
        let v = [0.25, 0.5, 1.0, 2.25];
        let p = project_scaled_simplex(&v, 4.0);
        for (a, b) in p.iter().zip(&v) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_symmetric_negative_example() {
        let p = project_scaled_simplex(&[-1.0, -1.0], 2.0);
        assert_relative_eq!(p[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(p[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(1..8);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let total = rng.gen_range(0.5..10.0);
            let p = project_scaled_simplex(&v, total);
            assert!(p.iter().all(|&x| x >= 0.0));
            assert_relative_eq!(p.iter().sum::<f64>(), total, epsilon = 1e-9);
            let pp = project_scaled_simplex(&p, total);
            for (a, b) in pp.iter().zip(&p) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn projection_is_order_equivariant() {
        let v = [2.0, -0.5, 1.25, 0.0, 3.0];
        let p = project_scaled_simplex(&v, 5.0);
        let perm = [4usize, 2, 0, 1, 3];
        let vp: Vec<f64> = perm.iter().map(|&i| v[i]).collect();
        let pp = project_scaled_simplex(&vp, 5.0);
        for (k, &i) in perm.iter().enumerate() {
            assert_relative_eq!(pp[k], p[i], epsilon = 1e-12);
        }
    }

    /// Exhaustive KKT oracle: for every subset S of coordinates allowed to be
    /// positive, solve the equality-constrained problem on S and keep the
    /// unique candidate satisfying all KKT conditions.
    fn project_by_active_set(v: &[f64], total: f64) -> Vec<f64> {
        let n = v.len();
        for mask in 1u32..(1 << n) {
            let support: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let sum: f64 = support.iter().map(|&i| v[i]).sum();
            let theta = (sum - total) / support.len() as f64;
            let mut x = vec![0.0; n];
            let mut ok = true;
            for &i in &support {
                x[i] = v[i] - theta;
                if x[i] < -1e-12 {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            // Complementary slackness for clamped coordinates: v_i − θ ≤ 0.
            if (0..n)
                .filter(|i| !support.contains(i))
                .any(|i| v[i] - theta > 1e-12)
            {
                continue;
            }
            return x;
        }
        unreachable!("projection always has a solution");
    }

    #[test]
    fn projection_matches_active_set_oracle() {
        // 100 random 5-dimensional instances, agreement within 1e-9.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let total = 5.0;
            let fast = project_scaled_simplex(&v, total);
            let oracle = project_by_active_set(&v, total);
            for (a, b) in fast.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9, "{fast:?} vs {oracle:?} on {v:?}");
            }
        }
    }

    #[test]
    fn lagrangian_arithmetic() {
        assert_eq!(empirical_lagrangian(&[0.0, 0.0], 0.0, 0.0, 0.1), 0.0);
        // mean 0.3, ε=0.1, μ=2, smooth 0.5 → 2·0.2 + 0.5 = 0.9.
        assert_relative_eq!(
            empirical_lagrangian(&[0.2, 0.4], 0.5, 2.0, 0.1),
            0.9,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lagrangian_is_linear_in_loss_shift() {
        let losses = [0.3, 0.7, 0.2];
        let shifted: Vec<f64> = losses.iter().map(|l| l + 0.25).collect();
        let base = empirical_lagrangian(&losses, 1.0, 3.0, 0.05);
        let moved = empirical_lagrangian(&shifted, 1.0, 3.0, 0.05);
        assert_relative_eq!(moved - base, 3.0 * 0.25, max_relative = 1e-12);
    }
}
