//! Scenario parameters, random channel drops and channel files.

mod file;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::{linalg, CMat, Error, Result};

pub use file::{load_channels, parse_channels, render_channels, write_channels};

/// QAM orders the modulo lattice supports.
pub const SUPPORTED_QAM: [u32; 4] = [4, 16, 64, 256];

/// Dimensioning and QoS parameters of one simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_subcarriers: usize,
    pub num_users: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub streams_per_user: usize,
    /// Users sharing a subcarrier, `floor(tx / rx)`.
    pub group_count: usize,
    /// Subcarriers each user must receive.
    pub quotas: Vec<usize>,
    /// Sum-MSE budget per user over all its subcarriers and streams.
    pub mse_budgets: Vec<f64>,
    pub noise_variance: f64,
    pub constellation_size: u32,
    /// Metadata only.
    pub bandwidth_hz: f64,
    pub cell_radius: f64,
    pub pathloss_exponent: f64,
    pub min_user_distance: f64,
    pub pdp_taps: usize,
    /// Power ratio between consecutive delay taps.
    pub pdp_decay: f64,
    pub rng_seed: u64,
}

/// Built-in scenarios: 2x1/64 subcarriers, 4x2/32 and 8x4/16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    S1,
    S2,
    S3,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::S1, Preset::S2, Preset::S3];
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Preset::S1 => "S1",
            Preset::S2 => "S2",
            Preset::S3 => "S3",
        };
        f.write_str(s)
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Ok(Preset::S1),
            "S2" => Ok(Preset::S2),
            "S3" => Ok(Preset::S3),
            _ => Err(Error::UnknownPreset(s.to_string())),
        }
    }
}

/// Average per-stream target MSE the presets start from.
pub const DEFAULT_RHO: f64 = 0.25;
pub const DEFAULT_TAPS: usize = 8;
pub const DEFAULT_SEED: u64 = 1;

/// Decay giving a last tap 20 dB below the first.
pub fn default_pdp_decay(taps: usize) -> f64 {
    if taps <= 1 {
        1.0
    } else {
        10f64.powf(-20.0 / (10.0 * (taps - 1) as f64))
    }
}

pub fn scenario_preset(id: Preset) -> ScenarioConfig {
    let (tx, rx, bw, n, l) = match id {
        Preset::S1 => (2, 1, 10e6, 64, 1),
        Preset::S2 => (4, 2, 5e6, 32, 2),
        Preset::S3 => (8, 4, 2.5e6, 16, 4),
    };
    let k = 16;
    let q = tx / rx;
    let quota = n * q / k;
    ScenarioConfig {
        num_subcarriers: n,
        num_users: k,
        tx_antennas: tx,
        rx_antennas: rx,
        streams_per_user: l,
        group_count: q,
        quotas: vec![quota; k],
        mse_budgets: vec![(quota * l) as f64 * DEFAULT_RHO; k],
        noise_variance: 1.0,
        constellation_size: 16,
        bandwidth_hz: bw,
        cell_radius: 100.0,
        pathloss_exponent: 4.0,
        min_user_distance: 10.0,
        pdp_taps: DEFAULT_TAPS,
        pdp_decay: default_pdp_decay(DEFAULT_TAPS),
        rng_seed: DEFAULT_SEED,
    }
}

impl ScenarioConfig {
    /// `2 (M - 1) / 3`, the per-symbol energy of square M-QAM on odd-integer points.
    pub fn symbol_variance(&self) -> f64 {
        2.0 * (self.constellation_size as f64 - 1.0) / 3.0
    }

    pub fn users_per_group(&self) -> usize {
        self.num_users / self.group_count
    }

    pub fn per_stream_mse(&self, user: usize) -> f64 {
        self.mse_budgets[user] / (self.streams_per_user * self.quotas[user]) as f64
    }

    /// Uniform budgets `gamma_k = n_k * L * rho`.
    pub fn with_rho(mut self, rho: f64) -> Self {
        let l = self.streams_per_user;
        self.mse_budgets = self.quotas.iter().map(|&q| (q * l) as f64 * rho).collect();
        self
    }

    /// Resize the user population, with quotas `floor(N Q / K)` and uniform budgets.
    pub fn with_users(mut self, users: usize, rho: f64) -> Self {
        self.num_users = users;
        let quota = (self.num_subcarriers * self.group_count)
            .checked_div(users)
            .unwrap_or(0);
        self.quotas = vec![quota; users];
        self.with_rho(rho)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.num_subcarriers == 0 || self.num_users == 0 {
            return bad("need at least one subcarrier and one user".into());
        }
        if self.rx_antennas == 0 || self.tx_antennas < self.rx_antennas {
            return bad(format!(
                "need 1 <= rx antennas <= tx antennas, got {}x{}",
                self.tx_antennas, self.rx_antennas
            ));
        }
        let q = self.tx_antennas / self.rx_antennas;
        if self.group_count != q {
            return bad(format!(
                "group count {} must equal floor(N_T/N_R) = {q}",
                self.group_count
            ));
        }
        let l = self.streams_per_user;
        if l == 0 || l > self.tx_antennas / q || l > self.rx_antennas {
            return bad(format!(
                "streams per user must be in 1..=min(floor(N_T/Q), N_R) = {}",
                (self.tx_antennas / q).min(self.rx_antennas)
            ));
        }
        if !self.num_users.is_multiple_of(q) {
            return Err(Error::IndivisibleGroups {
                users: self.num_users,
                groups: q,
            });
        }
        if self.quotas.len() != self.num_users || self.mse_budgets.len() != self.num_users {
            return bad("quota and budget lists must have one entry per user".into());
        }
        if self.quotas.contains(&0) {
            return bad("every quota must be at least 1".into());
        }
        if self.mse_budgets.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return bad("MSE budgets must be positive".into());
        }
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return bad("noise variance must be positive".into());
        }
        if !SUPPORTED_QAM.contains(&self.constellation_size) {
            return bad(format!("constellation size must be one of {SUPPORTED_QAM:?}"));
        }
        if !(self.cell_radius > self.min_user_distance && self.min_user_distance >= 0.0) {
            return bad("need 0 <= min user distance < cell radius".into());
        }
        if self.pdp_taps == 0 || !(self.pdp_decay > 0.0) {
            return bad("need at least one tap and a positive decay".into());
        }
        Ok(())
    }

    /// Per-group quota feasibility: the quotas inside any group must fit in N.
    /// Group membership is only known after partitioning, so this checks the
    /// `K/Q` largest quotas.
    pub fn check_quota_capacity(&self) -> Result<()> {
        let mut q = self.quotas.clone();
        q.sort_unstable_by(|a, b| b.cmp(a));
        let worst: usize = q.iter().take(self.users_per_group()).sum();
        if worst > self.num_subcarriers {
            return Err(Error::InvalidConfig(format!(
                "quotas of one group may total {worst} > {} subcarriers",
                self.num_subcarriers
            )));
        }
        Ok(())
    }
}

/// Per-subcarrier, per-user channel matrices of one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    num_subcarriers: usize,
    num_users: usize,
    tx_antennas: usize,
    rx_antennas: usize,
    /// Indexed `n * num_users + k`.
    matrices: Vec<CMat>,
    pub user_positions: Vec<(f64, f64)>,
    pub drop_id: u64,
}

impl ChannelSet {
    /// `matrices[n][k]`, each `rx x tx` and finite.
    pub fn new(
        matrices: Vec<Vec<CMat>>,
        tx_antennas: usize,
        rx_antennas: usize,
        user_positions: Vec<(f64, f64)>,
        drop_id: u64,
    ) -> Result<Self> {
        let num_subcarriers = matrices.len();
        let num_users = matrices.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(num_subcarriers * num_users);
        for (n, row) in matrices.into_iter().enumerate() {
            if row.len() != num_users {
                return Err(Error::DimensionMismatch {
                    line: 0,
                    message: format!("subcarrier {n} has {} users, expected {num_users}", row.len()),
                });
            }
            for (k, h) in row.into_iter().enumerate() {
                if h.nrows() != rx_antennas || h.ncols() != tx_antennas {
                    return Err(Error::DimensionMismatch {
                        line: 0,
                        message: format!(
                            "H[{n}][{k}] is {}x{}, expected {rx_antennas}x{tx_antennas}",
                            h.nrows(),
                            h.ncols()
                        ),
                    });
                }
                if !linalg::is_finite(&h) {
                    return Err(Error::NonFiniteEntry { line: 0 });
                }
                flat.push(h);
            }
        }
        if user_positions.len() != num_users {
            return Err(Error::DimensionMismatch {
                line: 0,
                message: format!("{} positions for {num_users} users", user_positions.len()),
            });
        }
        Ok(Self {
            num_subcarriers,
            num_users,
            tx_antennas,
            rx_antennas,
            matrices: flat,
            user_positions,
            drop_id,
        })
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn tx_antennas(&self) -> usize {
        self.tx_antennas
    }

    pub fn rx_antennas(&self) -> usize {
        self.rx_antennas
    }

    /// Channel of user `k` on subcarrier `n` (both zero-based).
    pub fn h(&self, n: usize, k: usize) -> &CMat {
        &self.matrices[n * self.num_users + k]
    }

    /// Does this set fit the dimensions of `config`?
    pub fn matches(&self, config: &ScenarioConfig) -> bool {
        self.num_subcarriers == config.num_subcarriers
            && self.num_users == config.num_users
            && self.tx_antennas == config.tx_antennas
            && self.rx_antennas == config.rx_antennas
    }
}

/// Normalized exponential power delay profile `p_t = c * decay^t`, summing to one.
pub fn power_delay_profile(taps: usize, decay: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..taps).map(|t| decay.powi(t as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Large-scale gain `(d / R)^-beta`; unity at the cell edge.
pub fn pathloss_gain(distance: f64, config: &ScenarioConfig) -> f64 {
    (distance / config.cell_radius).powf(-config.pathloss_exponent)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent deterministic generator for one drop.
pub fn drop_rng(seed: u64, drop_index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed ^ splitmix64(drop_index))
}

fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// One `rx x tx` Rayleigh matrix per delay tap, scaled by the tap power.
pub fn draw_taps<R: Rng>(rng: &mut R, config: &ScenarioConfig) -> Vec<CMat> {
    power_delay_profile(config.pdp_taps, config.pdp_decay)
        .into_iter()
        .map(|p| CMat::from_fn(config.rx_antennas, config.tx_antennas, |_, _| complex_gaussian(rng, p)))
        .collect()
}

/// `sqrt(gain) * sum_t taps[t] * exp(-j 2 pi n t / N)` for every subcarrier `n`.
pub fn frequency_response(taps: &[CMat], gain: f64, num_subcarriers: usize) -> Vec<CMat> {
    let amp = gain.sqrt();
    (0..num_subcarriers)
        .map(|n| {
            let (rows, cols) = taps[0].shape();
            let mut h = CMat::zeros(rows, cols);
            for (t, tap) in taps.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * ((n * t) % num_subcarriers) as f64 / num_subcarriers as f64;
                h += tap * Complex64::from_polar(amp, phase);
            }
            h
        })
        .collect()
}

/// Users uniform over the annulus `d_min <= d <= R`, frequency-selective
/// Rayleigh fading with an exponential delay profile.
pub fn generate_drop(config: &ScenarioConfig, drop_index: u64) -> ChannelSet {
    let mut rng = drop_rng(config.rng_seed, drop_index);
    let r2 = config.cell_radius.powi(2);
    let d2 = config.min_user_distance.powi(2);
    let mut positions = Vec::with_capacity(config.num_users);
    let mut per_user = Vec::with_capacity(config.num_users);
    for _ in 0..config.num_users {
        let u: f64 = rng.random();
        let angle: f64 = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
        let dist = (u * (r2 - d2) + d2).sqrt();
        positions.push((dist * angle.cos(), dist * angle.sin()));
        let taps = draw_taps(&mut rng, config);
        per_user.push(frequency_response(
            &taps,
            pathloss_gain(dist, config),
            config.num_subcarriers,
        ));
    }
    let matrices = (0..config.num_subcarriers)
        .map(|n| per_user.iter().map(|h| h[n].clone()).collect())
        .collect();
    ChannelSet::new(matrices, config.tx_antennas, config.rx_antennas, positions, drop_index)
        .expect("generated drop is well formed")
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn presets_match_table() {
        let s1 = scenario_preset(Preset::S1);
        assert_eq!((s1.tx_antennas, s1.rx_antennas, s1.num_subcarriers), (2, 1, 64));
        assert_eq!((s1.streams_per_user, s1.quotas[0], s1.bandwidth_hz), (1, 8, 10e6));
        let s2 = scenario_preset(Preset::S2);
        assert_eq!((s2.group_count, s2.quotas[0]), (2, 4));
        assert_eq!(s2.quotas[0] * s2.streams_per_user, 8);
        let s3 = scenario_preset(Preset::S3);
        assert_eq!((s3.tx_antennas, s3.rx_antennas, s3.num_subcarriers), (8, 4, 16));
        assert_eq!((s3.streams_per_user, s3.quotas[0], s3.bandwidth_hz), (4, 2, 2.5e6));
        for p in Preset::ALL {
            let c = scenario_preset(p);
            assert_eq!(c.num_users, 16);
            assert_eq!(c.cell_radius, 100.0);
            assert_eq!(c.pathloss_exponent, 4.0);
            assert_eq!(c.symbol_variance(), 10.0);
            c.validate().unwrap();
            c.check_quota_capacity().unwrap();
        }
    }

    #[test]
    fn unknown_preset_lists_valid_ones() {
        let err = "S9".parse::<Preset>().unwrap_err().to_string();
        assert!(err.contains("S1, S2, S3"), "{err}");
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = scenario_preset(Preset::S2);
        c.num_users = 15;
        c.quotas.pop();
        c.mse_budgets.pop();
        assert!(matches!(c.validate(), Err(Error::IndivisibleGroups { .. })));

        let mut c = scenario_preset(Preset::S2);
        c.streams_per_user = 3;
        assert!(c.validate().is_err());

        let mut c = scenario_preset(Preset::S2);
        c.constellation_size = 32;
        assert!(c.validate().is_err());

        let mut c = scenario_preset(Preset::S3);
        c.quotas = vec![3; 16];
        assert!(c.check_quota_capacity().is_err());
    }

    #[test]
    fn single_tap_is_flat() {
        let mut c = scenario_preset(Preset::S2);
        c.pdp_taps = 1;
        let set = generate_drop(&c, 4);
        for k in 0..c.num_users {
            for n in 1..c.num_subcarriers {
                assert_eq!(set.h(n, k), set.h(0, k));
            }
        }
    }

    #[test]
    fn drops_are_reproducible_and_distinct() {
        let c = scenario_preset(Preset::S3);
        assert_eq!(generate_drop(&c, 7), generate_drop(&c, 7));
        assert_ne!(generate_drop(&c, 7).h(0, 0), generate_drop(&c, 8).h(0, 0));
    }

    #[test]
    fn users_inside_annulus() {
        let c = scenario_preset(Preset::S1);
        for d in 0..20 {
            for &(x, y) in &generate_drop(&c, d).user_positions {
                let r = (x * x + y * y).sqrt();
                assert!((c.min_user_distance..=c.cell_radius).contains(&r));
            }
        }
    }

    #[test]
    fn cell_edge_user_has_unit_average_energy() {
        // Monte Carlo over 10^4 drops against the unit-gain normalization.
        let c = scenario_preset(Preset::S2);
        let drops = 10_000;
        let mut acc = 0.0;
        for d in 0..drops {
            let mut rng = drop_rng(c.rng_seed, d);
            let taps = draw_taps(&mut rng, &c);
            let h = frequency_response(&taps, pathloss_gain(c.cell_radius, &c), c.num_subcarriers);
            let e: f64 = h.iter().map(linalg::trace_gram).sum::<f64>() / c.num_subcarriers as f64;
            acc += e / (c.tx_antennas * c.rx_antennas) as f64;
        }
        let mean = acc / drops as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn nearer_user_scales_by_pathloss_ratio() {
        let c = scenario_preset(Preset::S2);
        let mut rng = drop_rng(9, 0);
        let taps = draw_taps(&mut rng, &c);
        let (near, far) = (20.0, 70.0);
        let hn = frequency_response(&taps, pathloss_gain(near, &c), c.num_subcarriers);
        let hf = frequency_response(&taps, pathloss_gain(far, &c), c.num_subcarriers);
        let ratio = (far / near).powf(c.pathloss_exponent);
        for (a, b) in hn.iter().zip(&hf) {
            let (ea, eb) = (linalg::trace_gram(a), linalg::trace_gram(b));
            assert!(ea >= eb);
            assert!((ea / eb - ratio).abs() < 1e-9 * ratio);
        }
    }

    proptest! {
        #[test]
        fn pdp_sums_to_one(taps in 1usize..40, decay in 0.01f64..1.5) {
            let p = power_delay_profile(taps, decay);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&x| x > 0.0));
        }
    }
}
