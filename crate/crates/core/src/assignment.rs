//! Exact subcarrier assignment within one user group.
//!
//! The integer program "give every user exactly `n_k` subcarriers, at most
//! one user per subcarrier, minimum total cost" is a transportation problem.
//! It is solved as a min-cost flow on
//!
//! ```text
//! source --(cap n_k, 0)--> user --(cap 1, c[n][k])--> subcarrier --(cap 1, 0)--> sink
//! ```
//!
//! by successive shortest augmenting paths with node potentials. Capacities
//! are integral, so the optimum flow is integral and directly gives the 0/1
//! assignment.

use crate::{Error, Result};

/// Per-subcarrier costs for the users of one group. `None` marks a pair that
/// cannot be used.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    /// `costs[n][j]` for subcarrier `n` and group member `j`.
    costs: Vec<Vec<Option<f64>>>,
    quotas: Vec<usize>,
}

impl CostMatrix {
    pub fn new(costs: Vec<Vec<Option<f64>>>, quotas: Vec<usize>) -> Result<Self> {
        for (n, row) in costs.iter().enumerate() {
            if row.len() != quotas.len() {
                return Err(Error::InvalidConfig(format!(
                    "cost row {n} has {} entries for {} users",
                    row.len(),
                    quotas.len()
                )));
            }
            if row.iter().flatten().any(|&c| !(c >= 0.0 && c.is_finite())) {
                return Err(Error::InvalidConfig(format!(
                    "cost row {n} holds a negative or non-finite entry"
                )));
            }
        }
        Ok(Self { costs, quotas })
    }

    pub fn subcarriers(&self) -> usize {
        self.costs.len()
    }

    pub fn users(&self) -> usize {
        self.quotas.len()
    }

    pub fn quotas(&self) -> &[usize] {
        &self.quotas
    }

    pub fn cost(&self, n: usize, j: usize) -> Option<f64> {
        self.costs[n][j]
    }

    fn demand(&self) -> usize {
        self.quotas.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `allocation[n][j]` is true when subcarrier `n` goes to member `j`.
    pub allocation: Vec<Vec<bool>>,
    pub total_cost: f64,
}

impl Assignment {
    fn from_owner(owner: &[Option<usize>], costs: &CostMatrix) -> Self {
        let users = costs.users();
        let mut allocation = vec![vec![false; users]; owner.len()];
        let mut total_cost = 0.0;
        for (n, o) in owner.iter().enumerate() {
            if let Some(j) = *o {
                allocation[n][j] = true;
                total_cost += costs.cost(n, j).expect("assigned pair has finite cost");
            }
        }
        Self { allocation, total_cost }
    }

    /// Group member holding subcarrier `n`, if any.
    pub fn owner(&self, n: usize) -> Option<usize> {
        self.allocation[n].iter().position(|&a| a)
    }

    pub fn subcarriers_of(&self, j: usize) -> Vec<usize> {
        (0..self.allocation.len()).filter(|&n| self.allocation[n][j]).collect()
    }

    /// Quotas met exactly, subcarriers used at most once, only finite pairs.
    pub fn satisfies(&self, costs: &CostMatrix) -> bool {
        let exclusive = self
            .allocation
            .iter()
            .all(|row| row.iter().filter(|&&a| a).count() <= 1);
        let quotas = (0..costs.users()).all(|j| self.subcarriers_of(j).len() == costs.quotas()[j]);
        let finite = self
            .allocation
            .iter()
            .enumerate()
            .all(|(n, row)| row.iter().enumerate().all(|(j, &a)| !a || costs.cost(n, j).is_some()));
        exclusive && quotas && finite
    }
}

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: usize,
    cost: f64,
    rev: usize,
}

struct FlowNetwork {
    adj: Vec<Vec<Edge>>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
        }
    }

    fn link(&mut self, from: usize, to: usize, cap: usize, cost: f64) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Edge {
            to,
            cap,
            cost,
            rev: rev_from,
        });
        self.adj[to].push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
            rev: rev_to,
        });
    }

    /// Dijkstra on reduced costs. Returns the predecessor edge of every
    /// reached node, or `None` if `sink` is unreachable.
    fn shortest_path(&self, source: usize, sink: usize, potential: &mut [f64]) -> Option<Vec<Option<(usize, usize)>>> {
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut pred: Vec<Option<(usize, usize)>> = vec![None; n];
        dist[source] = 0.0;
        loop {
            let mut u = usize::MAX;
            for v in 0..n {
                if !done[v] && dist[v].is_finite() && (u == usize::MAX || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            for (i, e) in self.adj[u].iter().enumerate() {
                if e.cap == 0 || done[e.to] {
                    continue;
                }
                let reduced = (e.cost + potential[u] - potential[e.to]).max(0.0);
                let cand = dist[u] + reduced;
                if cand < dist[e.to] {
                    dist[e.to] = cand;
                    pred[e.to] = Some((u, i));
                }
            }
        }
        if !dist[sink].is_finite() {
            return None;
        }
        for v in 0..n {
            if dist[v].is_finite() {
                potential[v] += dist[v];
            }
        }
        Some(pred)
    }

    fn reachable(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![source];
        seen[source] = true;
        while let Some(u) = stack.pop() {
            for e in &self.adj[u] {
                if e.cap > 0 && !seen[e.to] {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        seen
    }
}

/// Minimum-cost assignment meeting every quota exactly.
///
/// Among equal-cost optima the result is fixed by the arc order (subcarrier
/// major, then member index) and the lowest-index choice in Dijkstra.
pub fn solve_assignment(costs: &CostMatrix) -> Result<Assignment> {
    let users = costs.users();
    let subs = costs.subcarriers();
    if costs.demand() > subs {
        return Err(Error::Infeasible {
            blocking: (0..users).filter(|&j| costs.quotas()[j] > 0).collect(),
        });
    }
    let scale = (0..subs)
        .flat_map(|n| (0..users).filter_map(move |j| costs.cost(n, j)))
        .fold(0.0f64, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };

    let source = 0;
    let user_node = |j: usize| 1 + j;
    let sub_node = |n: usize| 1 + users + n;
    let sink = 1 + users + subs;
    let mut net = FlowNetwork::new(sink + 1);
    for j in 0..users {
        net.link(source, user_node(j), costs.quotas()[j], 0.0);
    }
    for n in 0..subs {
        for j in 0..users {
            if let Some(c) = costs.cost(n, j) {
                net.link(user_node(j), sub_node(n), 1, c / scale);
            }
        }
    }
    for n in 0..subs {
        net.link(sub_node(n), sink, 1, 0.0);
    }

    let mut potential = vec![0.0; sink + 1];
    for _ in 0..costs.demand() {
        let Some(pred) = net.shortest_path(source, sink, &mut potential) else {
            let seen = net.reachable(source);
            return Err(Error::Infeasible {
                blocking: (0..users).filter(|&j| seen[user_node(j)]).collect(),
            });
        };
        let mut v = sink;
        while let Some((u, i)) = pred[v] {
            let rev = net.adj[u][i].rev;
            net.adj[u][i].cap -= 1;
            net.adj[v][rev].cap += 1;
            v = u;
        }
    }

    let mut owner = vec![None; subs];
    for j in 0..users {
        for e in &net.adj[user_node(j)] {
            if e.to >= sub_node(0) && e.to < sink && e.cap == 0 && e.cost >= 0.0 {
                owner[e.to - sub_node(0)] = Some(j);
            }
        }
    }
    Ok(Assignment::from_owner(&owner, costs))
}

/// Largest instance [`brute_force_assignment`] accepts, in subcarriers and in
/// total quota.
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Exhaustive search over every feasible assignment. Test oracle.
pub fn brute_force_assignment(costs: &CostMatrix) -> Result<Assignment> {
    let subs = costs.subcarriers();
    let demand = costs.demand();
    if subs > BRUTE_FORCE_LIMIT || demand > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge {
            subcarriers: subs,
            demand,
        });
    }
    struct Search<'a> {
        costs: &'a CostMatrix,
        remaining: Vec<usize>,
        owner: Vec<Option<usize>>,
        best: Option<(f64, Vec<Option<usize>>)>,
    }
    impl Search<'_> {
        fn run(&mut self, n: usize, acc: f64, left: usize) {
            let subs = self.owner.len();
            if left > subs - n {
                return;
            }
            if n == subs {
                if self.best.as_ref().is_none_or(|(b, _)| acc < *b) {
                    self.best = Some((acc, self.owner.clone()));
                }
                return;
            }
            self.run(n + 1, acc, left);
            for j in 0..self.remaining.len() {
                if self.remaining[j] == 0 {
                    continue;
                }
                if let Some(c) = self.costs.cost(n, j) {
                    self.remaining[j] -= 1;
                    self.owner[n] = Some(j);
                    self.run(n + 1, acc + c, left - 1);
                    self.owner[n] = None;
                    self.remaining[j] += 1;
                }
            }
        }
    }
    let mut search = Search {
        costs,
        remaining: costs.quotas().to_vec(),
        owner: vec![None; subs],
        best: None,
    };
    search.run(0, 0.0, demand);
    match search.best {
        Some((_, owner)) => Ok(Assignment::from_owner(&owner, costs)),
        None => Err(Error::Infeasible {
            blocking: (0..costs.users()).collect(),
        }),
    }
}
