//! Comparison architectures sharing the partition and assignment layers.
//!
//! - `ZfTx`: linear zero-forcing over the whole stack of co-channel users,
//!   identity receivers.
//! - `ThpTx`: QR-based THP. `H^H = Q R`; the forward matrix is `Q`, the
//!   feedback cancels the inter-user blocks of `R^H`, and the user's own
//!   diagonal block is inverted at the transmitter so the receiver stays the
//!   identity.
//! - `LinTxLinRx`: block-diagonalization against earlier users, no feedback;
//!   the interference from earlier users is treated as coloured Gaussian
//!   noise and whitened at the receiver.
//!
//! The two transmit-side ZF schemes allocate power per stream by minimizing
//! `sum_l p_l |f_l|^2` under `sum_l sigma^2 / p_l = gamma / n`, which gives
//! `p_l = sqrt(nu' sigma^2) / |f_l|` and cost `sigma^2 (n/gamma) (sum_l |f_l|)^2`.

use std::fmt;
use std::str::FromStr;

use crate::linalg::{self, stack_rows};
use crate::loading::{equalizing_rotation, power_loading, transmit_matrix, LinkBudget, PowerLoading};
use crate::precoding::{effective_channel, null_space_basis, EffectiveChannel, STREAM_CUTOFF};
use crate::{CMat, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArchitectureId {
    /// User-level THP with null-space projection and linear receivers.
    ThpTxLinRx,
    ZfTx,
    ThpTx,
    LinTxLinRx,
}

impl ArchitectureId {
    pub const ALL: [ArchitectureId; 4] = [
        ArchitectureId::ThpTxLinRx,
        ArchitectureId::ZfTx,
        ArchitectureId::ThpTx,
        ArchitectureId::LinTxLinRx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArchitectureId::ThpTxLinRx => "ThpTxLinRx",
            ArchitectureId::ZfTx => "ZfTx",
            ArchitectureId::ThpTx => "ThpTx",
            ArchitectureId::LinTxLinRx => "LinTxLinRx",
        }
    }
}

impl fmt::Display for ArchitectureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArchitectureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        ArchitectureId::ALL
            .into_iter()
            .find(|a| a.name().to_ascii_lowercase() == key)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown architecture '{s}' (valid: ThpTxLinRx, ZfTx, ThpTx, LinTxLinRx, all)"
                ))
            })
    }
}

/// `L x N_T` channel a transmit-ZF scheme inverts for one user. With fewer
/// streams than receive antennas the user combines onto its `L` strongest
/// left singular directions first.
pub fn stream_channel(h: &CMat, streams: usize) -> CMat {
    if h.nrows() == streams {
        return h.clone();
    }
    let dec = linalg::svd(h);
    dec.u.columns(0, streams).adjoint() * h
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarLoading {
    /// Power gain applied to each stream.
    pub powers: Vec<f64>,
    pub nu: f64,
    /// `sum_l p_l |f_l|^2`.
    pub cost: f64,
}

impl ScalarLoading {
    pub fn stream_mses(&self, noise_variance: f64) -> Vec<f64> {
        self.powers.iter().map(|p| noise_variance / p).collect()
    }
}

/// Minimum `sum_l p_l w_l^2` subject to `sum_l sigma^2 / p_l = gamma / n`,
/// where `w_l` are the forward column norms.
pub fn scalar_loading(column_norms: &[f64], link: LinkBudget) -> Option<ScalarLoading> {
    if column_norms.is_empty() || column_norms.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return None;
    }
    let share = link.quota as f64 / link.budget;
    let sum_w: f64 = column_norms.iter().sum();
    let sqrt_nu = link.noise_variance.sqrt() * share * sum_w;
    let scale = sqrt_nu * link.noise_variance.sqrt();
    let powers: Vec<f64> = column_norms.iter().map(|w| scale / w).collect();
    let cost = powers.iter().zip(column_norms).map(|(p, w)| p * w * w).sum();
    Some(ScalarLoading {
        powers,
        nu: sqrt_nu * sqrt_nu,
        cost,
    })
}

fn column_norms(m: &CMat) -> Vec<f64> {
    m.column_iter().map(|c| c.norm()).collect()
}

/// Right pseudo-inverse `H^H (H H^H)^{-1}` of a full-row-rank stack.
pub fn zf_forward(stack: &CMat) -> Option<CMat> {
    if stack.nrows() > stack.ncols() {
        return None;
    }
    let dec = linalg::svd(stack);
    let smax = dec.s.first().copied().unwrap_or(0.0);
    if dec.s.iter().any(|&s| !(s > STREAM_CUTOFF * smax)) {
        return None;
    }
    Some(linalg::pinv(stack, 0.0))
}

/// Power of the candidate's column block when it is zero-forced jointly with
/// the users already on the subcarrier. Rows are stream channels (`L x N_T`).
pub fn zf_cost(earlier: &[&CMat], candidate: &CMat, link: LinkBudget) -> Option<f64> {
    let mut blocks = earlier.to_vec();
    blocks.push(candidate);
    let stack = stack_rows(&blocks, candidate.ncols());
    let f = zf_forward(&stack)?;
    let l = candidate.nrows();
    let own = f.columns(f.ncols() - l, l);
    scalar_loading(&column_norms(&own.into_owned()), link).map(|s| s.cost)
}

/// Per-user ZF allocation for a complete stack; `None` if the stack is
/// rank deficient.
pub fn zf_allocation(users: &[&CMat], links: &[LinkBudget]) -> Option<Vec<(CMat, ScalarLoading)>> {
    let tx = users.first()?.ncols();
    let stack = stack_rows(users, tx);
    let f = zf_forward(&stack)?;
    let mut col = 0;
    let mut out = Vec::with_capacity(users.len());
    for (h, link) in users.iter().zip(links) {
        let block = f.columns(col, h.nrows()).into_owned();
        col += h.nrows();
        let loading = scalar_loading(&column_norms(&block), *link)?;
        out.push((block, loading));
    }
    Some(out)
}

/// QR-based THP forward matrices for a stack in placement order.
#[derive(Debug, Clone)]
pub struct QrThp {
    /// Orthonormal `Q` blocks, one `N_T x L` block per user.
    pub q_blocks: Vec<CMat>,
    /// Diagonal blocks of `R^H` (`L x L`, lower triangular).
    pub diag_blocks: Vec<CMat>,
    /// `Q_k (R_kk^H)^{-1}`: unit-gain forward block of each user.
    pub forwards: Vec<CMat>,
}

pub fn qr_thp(users: &[&CMat]) -> Option<QrThp> {
    let tx = users.first()?.ncols();
    let stack = stack_rows(users, tx);
    if stack.nrows() > tx {
        return None;
    }
    let qr = stack.adjoint().qr();
    let (q, r) = (qr.q(), qr.r());
    let scale = linalg::frobenius(&stack);
    let mut out = QrThp {
        q_blocks: Vec::new(),
        diag_blocks: Vec::new(),
        forwards: Vec::new(),
    };
    let mut at = 0;
    for h in users {
        let l = h.nrows();
        let rkk_h = r.view((at, at), (l, l)).adjoint();
        if (0..l).any(|i| !(rkk_h[(i, i)].norm() > STREAM_CUTOFF * scale)) {
            return None;
        }
        let inv = rkk_h.clone().try_inverse()?;
        let qk = q.columns(at, l).into_owned();
        out.forwards.push(&qk * inv);
        out.q_blocks.push(qk);
        out.diag_blocks.push(rkk_h);
        at += l;
    }
    Some(out)
}

/// Candidate's power under QR-based THP with the users already placed.
pub fn thp_qr_cost(earlier: &[&CMat], candidate: &CMat, link: LinkBudget) -> Option<f64> {
    let mut blocks = earlier.to_vec();
    blocks.push(candidate);
    let thp = qr_thp(&blocks)?;
    let own = thp.forwards.last()?;
    scalar_loading(&column_norms(own), link).map(|s| s.cost)
}

/// Linear BD-ZF design for one user given the interference of earlier users.
#[derive(Debug, Clone)]
pub struct LinearDesign {
    /// `sigma (sigma^2 I + R_I)^{-1/2}`.
    pub whitening: CMat,
    /// Effective channel after whitening and null-space projection.
    pub effective: EffectiveChannel,
    pub loading: PowerLoading,
    pub u: CMat,
    /// `N_T x L`.
    pub forward: CMat,
}

/// Interference covariance `sigma_d^2 sum_i H F_i F_i^H H^H` at channel `h`.
pub fn interference_covariance(h: &CMat, earlier_forwards: &[&CMat], symbol_variance: f64) -> CMat {
    let mut cov = CMat::zeros(h.nrows(), h.nrows());
    for f in earlier_forwards {
        let hf = h * *f;
        cov += &hf * hf.adjoint();
    }
    cov.scale(symbol_variance)
}

pub fn linear_bdzf_design(
    h: &CMat,
    earlier_channels: &[&CMat],
    earlier_forwards: &[&CMat],
    link: LinkBudget,
    symbol_variance: f64,
) -> Option<LinearDesign> {
    let tx = h.ncols();
    let stacked = stack_rows(earlier_channels, tx);
    if stacked.nrows() >= tx {
        return None;
    }
    let v0 = null_space_basis(&stacked, tx);
    let r_i = interference_covariance(h, earlier_forwards, symbol_variance);
    let sigma2 = link.noise_variance;
    let whitening =
        linalg::inv_sqrt_hermitian(&(CMat::identity(h.nrows(), h.nrows()).scale(sigma2) + r_i)).scale(sigma2.sqrt());
    let whitened = &whitening * h;
    let effective = effective_channel(&whitened, &v0);
    let gains = effective.stream_gains(link.streams)?;
    let loading = power_loading(&gains, link.budget, link.quota, sigma2)?;
    let u = transmit_matrix(
        &effective.right_modes(link.streams),
        &loading,
        &equalizing_rotation(link.streams),
    );
    let forward = &v0.basis * &u;
    Some(LinearDesign {
        whitening,
        effective,
        loading,
        u,
        forward,
    })
}

pub fn linear_bdzf_cost(
    h: &CMat,
    earlier_channels: &[&CMat],
    earlier_forwards: &[&CMat],
    link: LinkBudget,
    symbol_variance: f64,
) -> Option<f64> {
    linear_bdzf_design(h, earlier_channels, earlier_forwards, link, symbol_variance).map(|d| d.loading.cost)
}
