//! Channel-quality metric and worst-first user grouping.

use crate::channel::ChannelSet;
use crate::{linalg, Error, Result};

/// Users split into `Q` equally sized groups, weakest group first.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    /// Zero-based user indices; each group is listed in ascending quality.
    pub groups: Vec<Vec<usize>>,
    /// Average channel energy per user.
    pub quality: Vec<f64>,
}

impl GroupPartition {
    /// Group index of `user`.
    pub fn group_of(&self, user: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&user))
    }
}

/// `(1/N) sum_n tr(H_{n,k}^H H_{n,k})`.
pub fn channel_quality(channels: &ChannelSet, k: usize) -> f64 {
    let n = channels.num_subcarriers();
    (0..n).map(|i| linalg::trace_gram(channels.h(i, k))).sum::<f64>() / n as f64
}

pub fn all_qualities(channels: &ChannelSet) -> Vec<f64> {
    (0..channels.num_users())
        .map(|k| channel_quality(channels, k))
        .collect()
}

/// Sort users by ascending quality (ties by index) and cut into `groups` runs.
pub fn partition_worst_first(quality: &[f64], groups: usize) -> Result<GroupPartition> {
    let users = quality.len();
    if groups == 0 || !users.is_multiple_of(groups) {
        return Err(Error::IndivisibleGroups { users, groups });
    }
    let mut order: Vec<usize> = (0..users).collect();
    order.sort_by(|&a, &b| quality[a].total_cmp(&quality[b]).then(a.cmp(&b)));
    let size = users / groups;
    Ok(GroupPartition {
        groups: order.chunks(size).map(<[usize]>::to_vec).collect(),
        quality: quality.to_vec(),
    })
}
