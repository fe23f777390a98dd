//! Minimum-power transceiver design for one (subcarrier, user) link.
//!
//! Given the decoupled link `x = H' U v + w`, the transmit matrix is
//! `U = V1 diag(lambda_U)^{1/2} S^H` with `V1` the strongest right singular
//! vectors of `H'`, `lambda_U(l) = sqrt(nu sigma^2 / lambda_H'(l))`, and `S`
//! a constant-modulus unitary that spreads the total MSE evenly over the
//! streams. The receiver is the minimum-norm zero-forcing filter.
//!
//! Substituting the loading into the active constraint
//! `sum_l sigma^2 / (lambda_U(l) lambda_H'(l)) = gamma / n` gives
//! `sqrt(nu) = sqrt(sigma^2) (n / gamma) sum_l lambda_H'(l)^{-1/2}`, hence the
//! cost `sigma^2 (n / gamma) (sum_l lambda_H'(l)^{-1/2})^2`.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::linalg::{self, stack_rows};
use crate::precoding::{effective_channel, null_space_basis, EffectiveChannel, NullSpaceBasis};
use crate::{CMat, Error, Result};

/// Unitary DFT matrix of order `streams`; every entry has modulus `1/sqrt(L)`.
pub fn equalizing_rotation(streams: usize) -> CMat {
    let l = streams as f64;
    CMat::from_fn(streams, streams, |i, j| {
        let angle = -2.0 * std::f64::consts::PI * ((i * j) % streams) as f64 / l;
        Complex64::from_polar(1.0 / l.sqrt(), angle)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLoading {
    /// Diagonal of `Lambda_U`, one entry per stream.
    pub lambda_u: Vec<f64>,
    pub nu: f64,
    /// `sum_l lambda_U(l) = tr(U^H U)`.
    pub cost: f64,
    /// `gamma / (L n)`.
    pub per_stream_mse: f64,
}

/// Closed-form loading for stream gains `gains` (eigenvalues of `H'^H H'`).
///
/// Returns `None` when a gain is not strictly positive; the pair is then
/// unusable and must not enter the assignment.
pub fn power_loading(gains: &[f64], budget: f64, quota: usize, noise_variance: f64) -> Option<PowerLoading> {
    if gains.is_empty() || gains.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        return None;
    }
    let share = quota as f64 / budget;
    let inv_root_sum: f64 = gains.iter().map(|g| g.sqrt().recip()).sum();
    let sqrt_nu = noise_variance.sqrt() * share * inv_root_sum;
    let lambda_u: Vec<f64> = gains.iter().map(|&g| sqrt_nu * (noise_variance / g).sqrt()).collect();
    let cost = lambda_u.iter().sum();
    Some(PowerLoading {
        lambda_u,
        nu: sqrt_nu * sqrt_nu,
        cost,
        per_stream_mse: budget / (quota * gains.len()) as f64,
    })
}

/// `U = V1 diag(lambda_U)^{1/2} S^H`.
pub fn transmit_matrix(right_modes: &CMat, loading: &PowerLoading, rotation: &CMat) -> CMat {
    let amps: Vec<f64> = loading.lambda_u.iter().map(|x| x.sqrt()).collect();
    right_modes * linalg::real_diag(&amps) * rotation.adjoint()
}

/// Minimum-norm solution of `G H' U = I`: `(U^H H'^H H' U)^{-1} U^H H'^H`.
pub fn receiver_matrix(projected: &CMat, u: &CMat) -> Result<CMat> {
    let hu = projected * u;
    let gram = hu.adjoint() * &hu;
    let inv = gram.try_inverse().ok_or(Error::SingularReceiver)?;
    Ok(inv * hu.adjoint())
}

/// `sigma^2 [(U^H H'^H H' U)^{-1}]_{ll}` for every stream.
pub fn stream_mses(projected: &CMat, u: &CMat, noise_variance: f64) -> Result<Vec<f64>> {
    let hu = projected * u;
    let inv = (hu.adjoint() * &hu).try_inverse().ok_or(Error::SingularReceiver)?;
    Ok((0..inv.nrows()).map(|l| noise_variance * inv[(l, l)].re).collect())
}

/// Transmit/receive matrices of one assigned (subcarrier, user) pair.
#[derive(Debug, Clone)]
pub struct Transceiver {
    pub null_space: NullSpaceBasis,
    pub effective: EffectiveChannel,
    pub loading: PowerLoading,
    pub rotation: CMat,
    /// `m x L`.
    pub u: CMat,
    /// `F = V0 U`, `N_T x L`.
    pub forward: CMat,
    /// `L x N_R`.
    pub receiver: CMat,
}

/// MSE target of one link: the user's budget spread over its quota.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub streams: usize,
    pub budget: f64,
    pub quota: usize,
    pub noise_variance: f64,
}

/// Full design for user `h` on a subcarrier already carrying `earlier` channels.
pub fn design_transceiver(h: &CMat, earlier: &[&CMat], link: LinkBudget) -> Option<Transceiver> {
    let tx = h.ncols();
    let stacked = stack_rows(earlier, tx);
    if stacked.nrows() >= tx {
        return None;
    }
    let null_space = null_space_basis(&stacked, tx);
    let effective = effective_channel(h, &null_space);
    let gains = effective.stream_gains(link.streams)?;
    let loading = power_loading(&gains, link.budget, link.quota, link.noise_variance)?;
    let rotation = equalizing_rotation(link.streams);
    let u = transmit_matrix(&effective.right_modes(link.streams), &loading, &rotation);
    let receiver = receiver_matrix(&effective.projected, &u).ok()?;
    let forward = &null_space.basis * &u;
    Some(Transceiver {
        null_space,
        effective,
        loading,
        rotation,
        u,
        forward,
        receiver,
    })
}

/// Power cost of giving subcarrier `n` to user `k` when the users in
/// `earlier` already occupy it. `None` marks an unusable pair.
pub fn subcarrier_cost(channels: &ChannelSet, earlier: &[usize], n: usize, k: usize, link: LinkBudget) -> Option<f64> {
    let tx = channels.tx_antennas();
    let stacked: Vec<&CMat> = earlier.iter().map(|&i| channels.h(n, i)).collect();
    let stacked = stack_rows(&stacked, tx);
    if stacked.nrows() >= tx {
        return None;
    }
    let effective = effective_channel(channels.h(n, k), &null_space_basis(&stacked, tx));
    let gains = effective.stream_gains(link.streams)?;
    power_loading(&gains, link.budget, link.quota, link.noise_variance).map(|p| p.cost)
}

/// `diag(S diag(values) S^H)`, used to check the equalizing property.
pub fn rotated_diagonal(rotation: &CMat, values: &[f64]) -> Vec<f64> {
    let m = rotation * linalg::real_diag(values) * rotation.adjoint();
    (0..values.len()).map(|i| m[(i, i)].re).collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::linalg::frobenius;
    use crate::linalg::testutil::random_cmat;

    fn bisect_nu(gains: &[f64], target: f64, noise: f64) -> f64 {
        // sum_l noise / (sqrt(nu noise / g) g) is decreasing in nu
        let mse = |nu: f64| {
            gains
                .iter()
                .map(|&g| noise / ((nu * noise / g).sqrt() * g))
                .sum::<f64>()
        };
        let (mut lo, mut hi) = (1e-12f64, 1e12f64);
        for _ in 0..400 {
            let mid = (lo * hi).sqrt();
            if mse(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo * hi).sqrt()
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(equalizing_rotation(1), CMat::identity(1, 1));
        let d = rotated_diagonal(&equalizing_rotation(2), &[1.0, 3.0]);
        assert!((d[0] - 2.0).abs() < 1e-15 && (d[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_equalizes_random_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for l in 1..=6 {
            let s = equalizing_rotation(l);
            assert!(frobenius(&(&s * s.adjoint() - CMat::identity(l, l))) < 1e-12);
            let vals: Vec<f64> = (0..l).map(|_| rng.random_range(0.1..10.0)).collect();
            let mean = vals.iter().sum::<f64>() / l as f64;
            for d in rotated_diagonal(&s, &vals) {
                assert!((d - mean).abs() < 1e-12 * mean.max(1.0));
            }
        }
    }

    #[test]
    fn single_stream_loading() {
        let p = power_loading(&[1.0], 0.5, 1, 1.0).unwrap();
        assert!((p.lambda_u[0] - 2.0).abs() < 1e-15);
        assert!((p.cost - 2.0).abs() < 1e-15);
        assert!((1.0 / (p.lambda_u[0] * 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_stream_loading() {
        let p = power_loading(&[1.0, 4.0], 0.75, 1, 1.0).unwrap();
        assert_eq!(p.nu, 4.0);
        assert_eq!(p.lambda_u, vec![2.0, 1.0]);
        assert_eq!(p.cost, 3.0);
        let mse: f64 = p.lambda_u.iter().zip([1.0, 4.0]).map(|(u, g)| 1.0 / (u * g)).sum();
        assert_eq!(mse, 0.75);
        assert!((bisect_nu(&[1.0, 4.0], 0.75, 1.0) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn equal_gains_closed_form() {
        let (g, l, sigma2, budget, quota) = (2.5, 3, 0.7, 1.2, 2);
        let p = power_loading(&vec![g; l], budget, quota, sigma2).unwrap();
        let expected = sigma2 * (quota as f64 / budget) * (l * l) as f64 / g;
        assert!((p.cost - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn nonpositive_gain_is_unusable() {
        assert!(power_loading(&[1.0, 0.0], 1.0, 1, 1.0).is_none());
        assert!(power_loading(&[f64::NAN], 1.0, 1, 1.0).is_none());
    }

    #[test]
    fn closed_form_nu_matches_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let l = rng.random_range(1..=4);
            let gains: Vec<f64> = (0..l).map(|_| rng.random_range(0.05..20.0)).collect();
            let (budget, quota, sigma2) = (
                rng.random_range(0.1..3.0),
                rng.random_range(1..5),
                rng.random_range(0.1..2.0),
            );
            let p = power_loading(&gains, budget, quota, sigma2).unwrap();
            let nu = bisect_nu(&gains, budget / quota as f64, sigma2);
            assert!((p.nu - nu).abs() < 1e-8 * nu);
        }
    }

    #[test]
    fn isometry_transmit_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v1 = linalg::svd(&random_cmat(&mut rng, 3, 5)).v;
        let unit = PowerLoading {
            lambda_u: vec![1.0; 3],
            nu: 1.0,
            cost: 3.0,
            per_stream_mse: 1.0,
        };
        let u = transmit_matrix(&v1, &unit, &CMat::identity(3, 3));
        assert!(frobenius(&(&u - &v1)) < 1e-15);
        assert!((linalg::trace_gram(&u) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_link_power() {
        let h = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
        let link = LinkBudget {
            streams: 1,
            budget: 0.5,
            quota: 1,
            noise_variance: 1.0,
        };
        let t = design_transceiver(&h, &[], link).unwrap();
        assert!((linalg::trace_gram(&t.u) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_receiver() {
        let hp = CMat::from_element(1, 1, Complex64::new(2.0, 0.0));
        let u = CMat::identity(1, 1);
        let g = receiver_matrix(&hp, &u).unwrap();
        assert!((g[(0, 0)] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn isometry_receiver_is_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = linalg::svd(&random_cmat(&mut rng, 4, 2)).u;
        let g = receiver_matrix(&q, &CMat::identity(2, 2)).unwrap();
        assert!(frobenius(&(g - q.adjoint())) < 1e-12);
    }

    #[test]
    fn singular_receiver_reported() {
        let hp = CMat::zeros(2, 2);
        assert!(matches!(
            receiver_matrix(&hp, &CMat::identity(2, 2)),
            Err(Error::SingularReceiver)
        ));
    }

    #[test]
    fn random_designs_zero_force_and_equalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let earlier = random_cmat(&mut rng, 2, 4);
            let h = random_cmat(&mut rng, 2, 4);
            let link = LinkBudget {
                streams: 2,
                budget: rng.random_range(0.2..2.0),
                quota: 4,
                noise_variance: rng.random_range(0.5..2.0),
            };
            let t = design_transceiver(&h, &[&earlier], link).unwrap();
            let ghu = &t.receiver * &t.effective.projected * &t.u;
            assert!(frobenius(&(ghu - CMat::identity(2, 2))) < 1e-9);
            assert!((linalg::trace_gram(&t.u) - t.loading.cost).abs() < 1e-9 * t.loading.cost);
            assert!(frobenius(&(&earlier * &t.forward)) < 1e-9 * frobenius(&t.forward));
            let eps = link.budget / (2 * link.quota) as f64;
            let mses = stream_mses(&t.effective.projected, &t.u, link.noise_variance).unwrap();
            for (l, m) in mses.iter().enumerate() {
                assert!(((m - eps) / eps).abs() < 1e-9);
                // row norm of G times sigma^2 gives the same MSE
                let row: f64 = t.receiver.row(l).iter().map(|z| z.norm_sqr()).sum();
                assert!((row * link.noise_variance - m).abs() < 1e-9 * m);
            }
            let total: f64 = mses.iter().sum();
            assert!((total - link.budget / link.quota as f64).abs() < 1e-9 * total);
        }
    }

    #[test]
    fn unit_row_channel_costs_one() {
        let h = CMat::from_row_slice(1, 2, &[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        let set = ChannelSet::new(vec![vec![h]], 2, 1, vec![(0.0, 0.0)], 0).unwrap();
        let link = LinkBudget {
            streams: 1,
            budget: 1.0,
            quota: 1,
            noise_variance: 1.0,
        };
        let c = subcarrier_cost(&set, &[], 0, 0, link).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        let doubled = subcarrier_cost(&set, &[], 0, 0, LinkBudget { budget: 2.0, ..link }).unwrap();
        assert!((doubled - 0.5).abs() < 1e-12);
    }

    #[test]
    fn collinear_users_are_unusable() {
        let h = CMat::from_row_slice(1, 2, &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
        let set = ChannelSet::new(vec![vec![h.clone(), h.scale(2.0)]], 2, 1, vec![(0.0, 0.0); 2], 0).unwrap();
        let link = LinkBudget {
            streams: 1,
            budget: 1.0,
            quota: 1,
            noise_variance: 1.0,
        };
        assert!(subcarrier_cost(&set, &[0], 0, 1, link).is_none());
    }

    proptest! {
        #[test]
        fn cost_scaling_laws(gains in prop::collection::vec(0.01f64..50.0, 1..5), alpha in 0.1f64..10.0, s2 in 0.1f64..4.0) {
            let base = power_loading(&gains, 1.0, 2, s2).unwrap().cost;
            let noisier = power_loading(&gains, 1.0, 2, alpha * s2).unwrap().cost;
            prop_assert!((noisier - alpha * base).abs() < 1e-12 * noisier);
            let looser = power_loading(&gains, alpha, 2, s2).unwrap().cost;
            prop_assert!((looser - base / alpha).abs() < 1e-12 * base.max(looser));
            let scaled: Vec<f64> = gains.iter().map(|g| g * alpha * alpha).collect();
            let stronger = power_loading(&scaled, 1.0, 2, s2).unwrap().cost;
            prop_assert!((stronger - base / (alpha * alpha)).abs() < 1e-12 * base / (alpha * alpha));
        }

        #[test]
        fn constraint_is_active(gains in prop::collection::vec(0.01f64..50.0, 1..5), budget in 0.05f64..5.0, quota in 1usize..8) {
            let p = power_loading(&gains, budget, quota, 1.3).unwrap();
            let mse: f64 = p.lambda_u.iter().zip(&gains).map(|(u, g)| 1.3 / (u * g)).sum();
            let target = budget / quota as f64;
            prop_assert!(((mse - target) / target).abs() < 1e-9);
            for (u, g) in p.lambda_u.iter().zip(&gains) {
                prop_assert!((u - (p.nu * 1.3 / g).sqrt()).abs() < 1e-9 * u);
            }
        }
    }
}
