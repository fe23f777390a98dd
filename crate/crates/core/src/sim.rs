//! Per-drop orchestration, Monte Carlo sweeps and a link-level check of the
//! analytic MSEs.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::assignment::{solve_assignment, Assignment, CostMatrix};
use crate::baselines::{
    linear_bdzf_cost, linear_bdzf_design, qr_thp, scalar_loading, stream_channel, thp_qr_cost, zf_allocation, zf_cost,
    ArchitectureId,
};
use crate::channel::{drop_rng, generate_drop, ChannelSet, ScenarioConfig};
use crate::loading::{design_transceiver, stream_mses, LinkBudget, Transceiver};
use crate::partition::{all_qualities, partition_worst_first, GroupPartition};
use crate::precoding::{feedback_matrix, modulo, thp_precode, FeedbackMatrix};
use crate::{linalg, CMat, Error, Result};

/// Transmit chain of the proposed scheme on one subcarrier.
#[derive(Debug, Clone)]
pub struct SubcarrierPlan {
    /// Users in placement (precoding) order.
    pub users: Vec<usize>,
    pub transceivers: Vec<Transceiver>,
    pub feedback: FeedbackMatrix,
}

/// One assigned (subcarrier, user) pair after final accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRecord {
    pub subcarrier: usize,
    pub user: usize,
    /// `sigma_d^2 tr(U^H U)`.
    pub power: f64,
    pub stream_mses: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DropResult {
    pub architecture: ArchitectureId,
    pub drop_id: u64,
    pub partition: GroupPartition,
    /// One entry per group solved so far; member `j` is `partition.groups[g][j]`.
    pub assignments: Vec<Assignment>,
    /// Subcarriers held by each user.
    pub user_subcarriers: Vec<Vec<usize>>,
    pub links: Vec<LinkRecord>,
    /// Linear total transmit power, `sigma_d^2 sum tr(U^H U)`.
    pub total_power: f64,
    /// `10 log10(total_power / sigma^2)`; infinite when infeasible.
    pub power_db: f64,
    /// Analytic sum-MSE of every user over its subcarriers and streams.
    pub user_mse: Vec<f64>,
    pub feasible: bool,
    /// First group whose assignment failed, if any.
    pub infeasible_group: Option<usize>,
    /// Filled for `ThpTxLinRx` only.
    pub plans: Vec<Option<SubcarrierPlan>>,
}

fn link_budget(config: &ScenarioConfig, user: usize) -> LinkBudget {
    LinkBudget {
        streams: config.streams_per_user,
        budget: config.mse_budgets[user],
        quota: config.quotas[user],
        noise_variance: config.noise_variance,
    }
}

/// Subcarrier occupancy while groups are being placed.
struct Occupancy<'a> {
    config: &'a ScenarioConfig,
    channels: &'a ChannelSet,
    arch: ArchitectureId,
    users: Vec<Vec<usize>>,
    /// Linear scheme only: forward matrices aligned with `users`.
    forwards: Vec<Vec<CMat>>,
}

impl<'a> Occupancy<'a> {
    fn new(config: &'a ScenarioConfig, channels: &'a ChannelSet, arch: ArchitectureId) -> Self {
        let n = channels.num_subcarriers();
        Self {
            config,
            channels,
            arch,
            users: vec![Vec::new(); n],
            forwards: vec![Vec::new(); n],
        }
    }

    fn streams(&self, n: usize, k: usize) -> CMat {
        stream_channel(self.channels.h(n, k), self.config.streams_per_user)
    }

    fn cost(&self, n: usize, k: usize) -> Option<f64> {
        let link = link_budget(self.config, k);
        let h = self.channels.h(n, k);
        let earlier: Vec<&CMat> = self.users[n].iter().map(|&i| self.channels.h(n, i)).collect();
        match self.arch {
            ArchitectureId::ThpTxLinRx => design_transceiver(h, &earlier, link).map(|t| t.loading.cost),
            ArchitectureId::ZfTx | ArchitectureId::ThpTx => {
                let stacked: Vec<CMat> = self.users[n].iter().map(|&i| self.streams(n, i)).collect();
                let refs: Vec<&CMat> = stacked.iter().collect();
                let cand = self.streams(n, k);
                if self.arch == ArchitectureId::ZfTx {
                    zf_cost(&refs, &cand, link)
                } else {
                    thp_qr_cost(&refs, &cand, link)
                }
            }
            ArchitectureId::LinTxLinRx => {
                let fw: Vec<&CMat> = self.forwards[n].iter().collect();
                linear_bdzf_cost(h, &earlier, &fw, link, self.config.symbol_variance())
            }
        }
    }

    fn place(&mut self, n: usize, k: usize) {
        if self.arch == ArchitectureId::LinTxLinRx {
            let earlier: Vec<&CMat> = self.users[n].iter().map(|&i| self.channels.h(n, i)).collect();
            let fw: Vec<&CMat> = self.forwards[n].iter().collect();
            let design = linear_bdzf_design(
                self.channels.h(n, k),
                &earlier,
                &fw,
                link_budget(self.config, k),
                self.config.symbol_variance(),
            )
            .expect("assigned pair has a finite cost");
            self.forwards[n].push(design.forward);
        }
        self.users[n].push(k);
    }
}

fn check_inputs(config: &ScenarioConfig, channels: &ChannelSet) -> Result<()> {
    config.validate()?;
    if !channels.matches(config) {
        return Err(Error::InvalidConfig(format!(
            "channel set is {}x{} antennas, {} subcarriers, {} users; scenario expects {}x{}, {}, {}",
            channels.tx_antennas(),
            channels.rx_antennas(),
            channels.num_subcarriers(),
            channels.num_users(),
            config.tx_antennas,
            config.rx_antennas,
            config.num_subcarriers,
            config.num_users
        )));
    }
    Ok(())
}

/// Partition, group-by-group assignment and final transceiver accounting for
/// one drop. Group-level infeasibility yields `feasible == false`.
pub fn run_drop(config: &ScenarioConfig, channels: &ChannelSet, arch: ArchitectureId) -> Result<DropResult> {
    check_inputs(config, channels)?;
    let partition = partition_worst_first(&all_qualities(channels), config.group_count)?;
    let n_sub = channels.num_subcarriers();
    let mut occ = Occupancy::new(config, channels, arch);
    let mut result = DropResult {
        architecture: arch,
        drop_id: channels.drop_id,
        partition: partition.clone(),
        assignments: Vec::new(),
        user_subcarriers: vec![Vec::new(); config.num_users],
        links: Vec::new(),
        total_power: f64::INFINITY,
        power_db: f64::INFINITY,
        user_mse: vec![0.0; config.num_users],
        feasible: false,
        infeasible_group: None,
        plans: Vec::new(),
    };

    for (g, members) in partition.groups.iter().enumerate() {
        let costs: Vec<Vec<Option<f64>>> = (0..n_sub)
            .map(|n| members.iter().map(|&k| occ.cost(n, k)).collect())
            .collect();
        let quotas = members.iter().map(|&k| config.quotas[k]).collect();
        let matrix = CostMatrix::new(costs, quotas)?;
        let assignment = match solve_assignment(&matrix) {
            Ok(a) => a,
            Err(Error::Infeasible { .. }) => {
                result.infeasible_group = Some(g);
                return Ok(result);
            }
            Err(e) => return Err(e),
        };
        for n in 0..n_sub {
            if let Some(j) = assignment.owner(n) {
                occ.place(n, members[j]);
                result.user_subcarriers[members[j]].push(n);
            }
        }
        result.assignments.push(assignment);
    }

    let finished = match arch {
        ArchitectureId::ThpTxLinRx => account_proposed(config, channels, &occ.users, &mut result),
        ArchitectureId::ZfTx | ArchitectureId::ThpTx => account_transmit_zf(config, &occ, &mut result),
        ArchitectureId::LinTxLinRx => account_linear(config, channels, &occ.users, &mut result),
    };
    if finished {
        result.total_power = result.links.iter().map(|l| l.power).sum();
        result.power_db = power_db(result.total_power, config.noise_variance);
        for link in &result.links {
            result.user_mse[link.user] += link.stream_mses.iter().sum::<f64>();
        }
        result.feasible = true;
    } else {
        result.links.clear();
    }
    Ok(result)
}

pub fn power_db(power: f64, noise_variance: f64) -> f64 {
    10.0 * (power / noise_variance).log10()
}

/// Transceivers and feedback for every subcarrier of the proposed scheme.
fn account_proposed(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    users: &[Vec<usize>],
    result: &mut DropResult,
) -> bool {
    let sd2 = config.symbol_variance();
    for (n, on_n) in users.iter().enumerate() {
        if on_n.is_empty() {
            result.plans.push(None);
            continue;
        }
        let mut trx: Vec<Transceiver> = Vec::with_capacity(on_n.len());
        for (pos, &k) in on_n.iter().enumerate() {
            let earlier: Vec<&CMat> = on_n[..pos].iter().map(|&i| channels.h(n, i)).collect();
            let Some(t) = design_transceiver(channels.h(n, k), &earlier, link_budget(config, k)) else {
                return false;
            };
            let Ok(mses) = stream_mses(&t.effective.projected, &t.u, config.noise_variance) else {
                return false;
            };
            result.links.push(LinkRecord {
                subcarrier: n,
                user: k,
                power: sd2 * linalg::trace_gram(&t.u),
                stream_mses: mses,
            });
            trx.push(t);
        }
        let t: Vec<Vec<CMat>> = on_n
            .iter()
            .enumerate()
            .map(|(pos, &k)| (0..=pos).map(|i| channels.h(n, k) * &trx[i].forward).collect())
            .collect();
        let Ok(feedback) = feedback_matrix(n, &t) else {
            return false;
        };
        result.plans.push(Some(SubcarrierPlan {
            users: on_n.clone(),
            transceivers: trx,
            feedback,
        }));
    }
    true
}

fn account_transmit_zf(config: &ScenarioConfig, occ: &Occupancy<'_>, result: &mut DropResult) -> bool {
    let sd2 = config.symbol_variance();
    for (n, on_n) in occ.users.iter().enumerate() {
        if on_n.is_empty() {
            continue;
        }
        let stacked: Vec<CMat> = on_n.iter().map(|&k| occ.streams(n, k)).collect();
        let refs: Vec<&CMat> = stacked.iter().collect();
        let links: Vec<LinkBudget> = on_n.iter().map(|&k| link_budget(config, k)).collect();
        let blocks: Vec<(CMat, Vec<f64>)> = if occ.arch == ArchitectureId::ZfTx {
            let Some(alloc) = zf_allocation(&refs, &links) else {
                return false;
            };
            alloc.into_iter().map(|(f, s)| (f, s.powers)).collect()
        } else {
            let Some(thp) = qr_thp(&refs) else {
                return false;
            };
            let mut out = Vec::with_capacity(on_n.len());
            for (f, link) in thp.forwards.into_iter().zip(&links) {
                let norms: Vec<f64> = f.column_iter().map(|c| c.norm()).collect();
                let Some(s) = scalar_loading(&norms, *link) else {
                    return false;
                };
                out.push((f, s.powers));
            }
            out
        };
        for ((f, powers), &k) in blocks.into_iter().zip(on_n) {
            let power: f64 = f.column_iter().zip(&powers).map(|(c, p)| p * c.norm_squared()).sum();
            result.links.push(LinkRecord {
                subcarrier: n,
                user: k,
                power: sd2 * power,
                stream_mses: powers.iter().map(|p| config.noise_variance / p).collect(),
            });
        }
    }
    true
}

fn account_linear(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    users: &[Vec<usize>],
    result: &mut DropResult,
) -> bool {
    let sd2 = config.symbol_variance();
    for (n, on_n) in users.iter().enumerate() {
        let mut forwards: Vec<CMat> = Vec::with_capacity(on_n.len());
        for (pos, &k) in on_n.iter().enumerate() {
            let earlier: Vec<&CMat> = on_n[..pos].iter().map(|&i| channels.h(n, i)).collect();
            let fw: Vec<&CMat> = forwards.iter().collect();
            let Some(d) = linear_bdzf_design(channels.h(n, k), &earlier, &fw, link_budget(config, k), sd2) else {
                return false;
            };
            let Ok(mses) = stream_mses(&d.effective.projected, &d.u, config.noise_variance) else {
                return false;
            };
            result.links.push(LinkRecord {
                subcarrier: n,
                user: k,
                power: sd2 * linalg::trace_gram(&d.u),
                stream_mses: mses,
            });
            forwards.push(d.forward);
        }
    }
    true
}

/// Empirical and analytic per-user sum-MSE from a symbol-level simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkLevelReport {
    pub empirical: Vec<f64>,
    pub analytic: Vec<f64>,
    pub symbol_periods: usize,
}

impl LinkLevelReport {
    /// Largest `|empirical / analytic - 1|` over users with a nonzero budget.
    pub fn max_relative_error(&self) -> f64 {
        self.empirical
            .iter()
            .zip(&self.analytic)
            .filter(|(_, a)| **a > 0.0)
            .map(|(e, a)| (e / a - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Odd-integer M-QAM point with i.i.d. uniform components.
pub fn random_qam<R: Rng>(rng: &mut R, order: u32) -> Complex64 {
    let side = (order as f64).sqrt().round() as i64;
    let mut axis = || (2 * rng.random_range(0..side) - side + 1) as f64;
    Complex64::new(axis(), axis())
}

/// Symbol-level run of the proposed chain over `num_symbols` symbol periods:
/// THP recursion, forward filters, channel, noise, receive filter, modulo.
pub fn link_level_verify(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    drop: &DropResult,
    num_symbols: usize,
    seed: u64,
) -> Result<LinkLevelReport> {
    link_level_with_noise(config, channels, drop, num_symbols, seed, config.noise_variance)
}

/// As [`link_level_verify`] but with the receiver noise variance overridden;
/// the transceivers stay those designed for `config`.
pub fn link_level_with_noise(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    drop: &DropResult,
    num_symbols: usize,
    seed: u64,
    noise_variance: f64,
) -> Result<LinkLevelReport> {
    check_inputs(config, channels)?;
    if drop.architecture != ArchitectureId::ThpTxLinRx || !drop.feasible {
        return Err(Error::InvalidConfig(
            "link-level check needs a feasible drop of the THP Tx-Lin Rx architecture".into(),
        ));
    }
    let order = config.constellation_size;
    let l = config.streams_per_user;
    let rx = config.rx_antennas;
    let noise = Normal::new(0.0, (noise_variance / 2.0).sqrt())
        .map_err(|e| Error::InvalidConfig(format!("noise variance: {e}")))?;
    let mut rng = drop_rng(seed, drop.drop_id);
    let mut err = vec![0.0; config.num_users];

    // receive filter folded into the channel, one per (subcarrier, position)
    let mut chains = Vec::new();
    for (n, plan) in drop.plans.iter().enumerate() {
        let Some(plan) = plan else { continue };
        let forward = CMat::from_columns(
            &plan
                .transceivers
                .iter()
                .flat_map(|t| t.forward.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        );
        let rows: Vec<(CMat, CMat)> = plan
            .users
            .iter()
            .zip(&plan.transceivers)
            .map(|(&k, t)| (&t.receiver * channels.h(n, k) * &forward, t.receiver.clone()))
            .collect();
        chains.push((plan, rows));
    }

    for _ in 0..num_symbols {
        for (plan, rows) in &chains {
            let q = plan.users.len();
            let data: Vec<Complex64> = (0..q * l).map(|_| random_qam(&mut rng, order)).collect();
            let out = thp_precode(&data, &plan.feedback, order);
            let b = nalgebra::DVector::from_vec(out.precoded);
            for (pos, (gain, receiver)) in rows.iter().enumerate() {
                let w = nalgebra::DVector::from_fn(rx, |_, _| {
                    Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng))
                });
                let z = gain * &b + receiver * w;
                let user = plan.users[pos];
                for s in 0..l {
                    let (est, _) = modulo(z[s], order);
                    err[user] += (est - data[pos * l + s]).norm_sqr();
                }
            }
        }
    }
    let empirical = err.iter().map(|e| e / num_symbols.max(1) as f64).collect();
    Ok(LinkLevelReport {
        empirical,
        analytic: drop.user_mse.clone(),
        symbol_periods: num_symbols,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Rho(Vec<f64>),
    Users(Vec<usize>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Rho(_) => "rho",
            SweepAxis::Users(_) => "users",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Rho(v) => v.len(),
            SweepAxis::Users(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            SweepAxis::Rho(v) => v[i],
            SweepAxis::Users(v) => v[i] as f64,
        }
    }

    /// Scenario at point `i`; the users axis keeps `rho`.
    pub fn configure(&self, base: &ScenarioConfig, rho: f64, i: usize) -> ScenarioConfig {
        match self {
            SweepAxis::Rho(v) => base.clone().with_rho(v[i]),
            SweepAxis::Users(v) => base.clone().with_users(v[i], rho),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub drops: usize,
    pub seed: u64,
    pub workers: usize,
    pub architectures: Vec<ArchitectureId>,
    /// Target MSE used on the users axis.
    pub rho: f64,
}

/// Outcome of one architecture on one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct DropSummary {
    pub drop_id: u64,
    pub feasible: bool,
    pub power_db: f64,
    pub user_subcarriers: Vec<Vec<usize>>,
}

impl DropSummary {
    fn from_result(r: &DropResult) -> Self {
        Self {
            drop_id: r.drop_id,
            feasible: r.feasible,
            power_db: r.power_db,
            user_subcarriers: r.user_subcarriers.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchStats {
    pub architecture: ArchitectureId,
    /// Mean of the per-drop dB powers over drops feasible for every architecture.
    pub mean_power_db: f64,
    pub stderr_db: f64,
    /// Drops entering the mean.
    pub drops: usize,
    /// Fraction of all drops this architecture could not serve.
    pub infeasible_rate: f64,
    /// Every drop in order.
    pub per_drop: Vec<DropSummary>,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub config: ScenarioConfig,
    pub stats: Vec<ArchStats>,
    /// Drop indices feasible for every architecture.
    pub paired_drops: Vec<u64>,
}

impl SweepPoint {
    pub fn stats_for(&self, arch: ArchitectureId) -> Option<&ArchStats> {
        self.stats.iter().find(|s| s.architecture == arch)
    }

    /// Mean and standard error of `power_db(a) - power_db(b)` over paired drops.
    pub fn paired_difference(&self, a: ArchitectureId, b: ArchitectureId) -> Option<(f64, f64)> {
        let (sa, sb) = (self.stats_for(a)?, self.stats_for(b)?);
        let diffs: Vec<f64> = sa
            .per_drop
            .iter()
            .zip(&sb.per_drop)
            .filter(|(x, y)| self.paired_drops.contains(&x.drop_id) && x.feasible && y.feasible)
            .map(|(x, y)| x.power_db - y.power_db)
            .collect();
        Some(mean_stderr(&diffs))
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub seed: u64,
    pub drops: usize,
    pub base: ScenarioConfig,
    pub points: Vec<SweepPoint>,
}

pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Paired Monte Carlo over `options.drops` drops for every axis point and
/// architecture. Drop `d` of a point uses channel realization `d` of the
/// seed, so all architectures (and all rho values) see the same channels.
pub fn run_sweep(base: &ScenarioConfig, axis: &SweepAxis, options: &SweepOptions) -> Result<SweepResult> {
    if options.architectures.is_empty() {
        return Err(Error::InvalidConfig("no architecture selected".into()));
    }
    if options.drops == 0 {
        return Err(Error::InvalidConfig("drops must be at least 1".into()));
    }
    if axis.is_empty() {
        return Err(Error::InvalidConfig("empty sweep axis".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;

    let mut points = Vec::with_capacity(axis.len());
    for i in 0..axis.len() {
        let mut config = axis.configure(base, options.rho, i);
        config.rng_seed = options.seed;
        config.validate()?;
        let per_drop: Vec<Result<Vec<DropSummary>>> = pool.install(|| {
            (0..options.drops as u64)
                .into_par_iter()
                .map(|d| {
                    let channels = generate_drop(&config, d);
                    options
                        .architectures
                        .iter()
                        .map(|&a| run_drop(&config, &channels, a).map(|r| DropSummary::from_result(&r)))
                        .collect()
                })
                .collect()
        });
        let per_drop: Vec<Vec<DropSummary>> = per_drop.into_iter().collect::<Result<_>>()?;
        let paired: Vec<u64> = per_drop
            .iter()
            .filter(|row| row.iter().all(|s| s.feasible))
            .map(|row| row[0].drop_id)
            .collect();
        let stats = options
            .architectures
            .iter()
            .enumerate()
            .map(|(a, &arch)| {
                let samples: Vec<f64> = per_drop
                    .iter()
                    .filter(|row| row.iter().all(|s| s.feasible))
                    .map(|row| row[a].power_db)
                    .collect();
                let (mean, se) = mean_stderr(&samples);
                let failures = per_drop.iter().filter(|row| !row[a].feasible).count();
                ArchStats {
                    architecture: arch,
                    mean_power_db: mean,
                    stderr_db: se,
                    drops: samples.len(),
                    infeasible_rate: failures as f64 / options.drops as f64,
                    per_drop: per_drop.iter().map(|row| row[a].clone()).collect(),
                }
            })
            .collect();
        points.push(SweepPoint {
            axis_value: axis.value(i),
            config,
            stats,
            paired_drops: paired,
        });
    }
    Ok(SweepResult {
        axis: axis.clone(),
        seed: options.seed,
        drops: options.drops,
        base: base.clone(),
        points,
    })
}
