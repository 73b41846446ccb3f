//! Primal network simplex for the dense transportation problem.
//!
//! The basis is a spanning tree over the `m + n` supply/demand nodes plus an
//! artificial root joined to every node by an artificial arc (the strongly
//! feasible start of LEMON's `NetworkSimplex`). Entering arcs are chosen by
//! block search; the leaving arc follows the strongly feasible rule, which
//! rules out cycling on degenerate pivots.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;
const STATE_TREE: u8 = 0;
const STATE_LOWER: u8 = 1;
/// Relative threshold on reduced costs, scaled per arc by the magnitude of
/// the terms that enter it.
const EPSILON: f64 = 2.220446049250313e-15;

/// One positive-flow arc of an optimal basic solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Flow {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    dense: usize,
    root: usize,
    cost: &'a [f64],
    art_cost: f64,
    supply: Vec<f64>,
    flow: Vec<f64>,
    state: Vec<u8>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_up: Vec<bool>,
    depth: Vec<u32>,
    pi: Vec<f64>,
    first_child: Vec<usize>,
    next_sib: Vec<usize>,
    prev_sib: Vec<usize>,
    block_size: usize,
    next_arc: usize,
    stack: Vec<usize>,
}

/// Solves `min Σ cost[i·n + j]·flow_ij` subject to row sums `supply` and
/// column sums `demand`. Both sides must have the same total (the caller
/// enforces this); the returned flows are recomputed from the final tree so
/// that every node balance holds up to one rounding per tree arc.
pub(crate) fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<Vec<Flow>> {
    let m = supply.len();
    let n = demand.len();
    assert_eq!(cost.len(), m * n, "cost matrix must be m x n");
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("empty transport problem".into()));
    }
    let mut s = Simplex::new(supply, demand, cost);
    s.run()?;
    Ok(s.extract())
}

impl<'a> Simplex<'a> {
    fn new(supply: &[f64], demand: &[f64], cost: &'a [f64]) -> Self {
        let m = supply.len();
        let n = demand.len();
        let dense = m * n;
        let nodes = m + n;
        let root = nodes;
        let max_cost = cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let art_cost = (max_cost + 1.0) * nodes as f64;

        let mut node_supply = Vec::with_capacity(nodes + 1);
        node_supply.extend_from_slice(supply);
        node_supply.extend(demand.iter().map(|d| -d));
        node_supply.push(0.0);

        let mut flow = vec![0.0; dense + nodes];
        let mut state = vec![STATE_LOWER; dense + nodes];
        let mut parent = vec![NONE; nodes + 1];
        let mut pred = vec![NONE; nodes + 1];
        let mut pred_up = vec![false; nodes + 1];
        let mut depth = vec![0u32; nodes + 1];
        let mut pi = vec![0.0; nodes + 1];
        let mut first_child = vec![NONE; nodes + 1];
        let mut next_sib = vec![NONE; nodes + 1];
        let mut prev_sib = vec![NONE; nodes + 1];

        for u in 0..nodes {
            let a = dense + u;
            parent[u] = root;
            pred[u] = a;
            depth[u] = 1;
            state[a] = STATE_TREE;
            if u < m {
                // u -> root, zero cost
                pred_up[u] = true;
                flow[a] = supply[u];
                pi[u] = 0.0;
            } else {
                // root -> u, artificial cost
                pred_up[u] = false;
                flow[a] = demand[u - m];
                pi[u] = art_cost;
            }
            // children of the root in index order
            next_sib[u] = if u + 1 < nodes { u + 1 } else { NONE };
            prev_sib[u] = if u > 0 { u - 1 } else { NONE };
        }
        first_child[root] = 0;

        let block_size = ((dense as f64).sqrt().ceil() as usize).max(10).min(dense);

        Simplex {
            m,
            n,
            dense,
            root,
            cost,
            art_cost,
            supply: node_supply,
            flow,
            state,
            parent,
            pred,
            pred_up,
            depth,
            pi,
            first_child,
            next_sib,
            prev_sib,
            block_size,
            next_arc: 0,
            stack: Vec::new(),
        }
    }

    fn arc_source(&self, a: usize) -> usize {
        if a < self.dense {
            a / self.n
        } else {
            let u = a - self.dense;
            if u < self.m {
                u
            } else {
                self.root
            }
        }
    }

    fn arc_target(&self, a: usize) -> usize {
        if a < self.dense {
            self.m + a % self.n
        } else {
            let u = a - self.dense;
            if u < self.m {
                self.root
            } else {
                u
            }
        }
    }

    fn arc_cost(&self, a: usize) -> f64 {
        if a < self.dense {
            self.cost[a]
        } else if a - self.dense < self.m {
            0.0
        } else {
            self.art_cost
        }
    }

    /// Block search over the dense arcs, starting where the previous search
    /// stopped. Within a block the most negative reduced cost wins; ties keep
    /// the first arc scanned.
    fn find_entering(&mut self) -> Option<usize> {
        let n = self.n;
        let m = self.m;
        let mut min = 0.0f64;
        let mut best = NONE;
        let mut best_scale = 0.0f64;
        let mut cnt = self.block_size;
        let mut e = self.next_arc;
        let mut i = e / n;
        let mut j = e % n;
        for _ in 0..self.dense {
            if self.state[e] == STATE_LOWER {
                let ps = self.pi[i];
                let pt = self.pi[m + j];
                let c = self.cost[e];
                let rc = c + ps - pt;
                if rc < min {
                    min = rc;
                    best = e;
                    best_scale = ps.abs().max(pt.abs()).max(c.abs());
                }
            }
            e += 1;
            j += 1;
            if j == n {
                j = 0;
                i += 1;
            }
            if e == self.dense {
                e = 0;
                i = 0;
                j = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if best != NONE && min < -EPSILON * best_scale {
                    self.next_arc = e;
                    return Some(best);
                }
                cnt = self.block_size;
            }
        }
        if best != NONE && min < -EPSILON * best_scale {
            self.next_arc = e;
            return Some(best);
        }
        None
    }

    fn find_join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            if self.depth[u] > self.depth[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        u
    }

    fn detach(&mut self, w: usize) {
        let p = self.parent[w];
        let prev = self.prev_sib[w];
        let next = self.next_sib[w];
        if prev != NONE {
            self.next_sib[prev] = next;
        } else {
            self.first_child[p] = next;
        }
        if next != NONE {
            self.prev_sib[next] = prev;
        }
        self.prev_sib[w] = NONE;
        self.next_sib[w] = NONE;
    }

    fn attach(&mut self, w: usize, p: usize) {
        let head = self.first_child[p];
        self.next_sib[w] = head;
        self.prev_sib[w] = NONE;
        if head != NONE {
            self.prev_sib[head] = w;
        }
        self.first_child[p] = w;
        self.parent[w] = p;
    }

    fn pivot(&mut self, in_arc: usize) -> Result<()> {
        let first = self.arc_source(in_arc);
        let second = self.arc_target(in_arc);
        let join = self.find_join(first, second);

        // Leaving arc: strict comparison on the first path, non-strict on
        // the second, which keeps the basis strongly feasible.
        let mut delta = f64::INFINITY;
        let mut u_out = NONE;
        let mut side = 0;
        let mut u = first;
        while u != join {
            if self.pred_up[u] {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    u_out = u;
                    side = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != join {
            if !self.pred_up[u] {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    u_out = u;
                    side = 2;
                }
            }
            u = self.parent[u];
        }
        if side == 0 {
            return Err(Error::InfeasibleInput(
                "transport problem is unbounded".into(),
            ));
        }

        if delta > 0.0 {
            self.flow[in_arc] += delta;
            let mut u = first;
            while u != join {
                let a = self.pred[u];
                if self.pred_up[u] {
                    self.flow[a] -= delta;
                } else {
                    self.flow[a] += delta;
                }
                u = self.parent[u];
            }
            let mut u = second;
            while u != join {
                let a = self.pred[u];
                if self.pred_up[u] {
                    self.flow[a] += delta;
                } else {
                    self.flow[a] -= delta;
                }
                u = self.parent[u];
            }
        }
        let out_arc = self.pred[u_out];
        self.state[in_arc] = STATE_TREE;
        self.state[out_arc] = STATE_LOWER;
        self.flow[out_arc] = 0.0;

        let (u_in, v_in) = if side == 1 {
            (first, second)
        } else {
            (second, first)
        };
        self.reroot(in_arc, u_in, v_in, u_out);
        Ok(())
    }

    /// Removes the tree arc above `u_out`, reverses the stem `u_in .. u_out`
    /// and hangs the moved subtree below `v_in` through `in_arc`.
    fn reroot(&mut self, in_arc: usize, u_in: usize, v_in: usize, u_out: usize) {
        self.stack.clear();
        let mut w = u_in;
        self.stack.push(w);
        while w != u_out {
            w = self.parent[w];
            self.stack.push(w);
        }
        let stem = std::mem::take(&mut self.stack);
        let old: Vec<(usize, bool)> = stem.iter().map(|&w| (self.pred[w], self.pred_up[w])).collect();
        for &w in &stem {
            self.detach(w);
        }
        self.attach(u_in, v_in);
        self.pred[u_in] = in_arc;
        self.pred_up[u_in] = self.arc_source(in_arc) == u_in;
        for k in 1..stem.len() {
            let w = stem[k];
            self.attach(w, stem[k - 1]);
            self.pred[w] = old[k - 1].0;
            self.pred_up[w] = !old[k - 1].1;
        }

        let dir = if self.pred_up[u_in] { 1.0 } else { -1.0 };
        let sigma = self.pi[v_in] - self.pi[u_in] - dir * self.arc_cost(in_arc);
        let mut stack = stem;
        stack.clear();
        stack.push(u_in);
        while let Some(w) = stack.pop() {
            self.pi[w] += sigma;
            self.depth[w] = self.depth[self.parent[w]] + 1;
            let mut c = self.first_child[w];
            while c != NONE {
                stack.push(c);
                c = self.next_sib[c];
            }
        }
        self.stack = stack;
    }

    fn run(&mut self) -> Result<()> {
        let limit = 200usize
            .saturating_mul(self.dense.max(16))
            .max(1_000_000);
        let mut iterations = 0usize;
        while let Some(in_arc) = self.find_entering() {
            self.pivot(in_arc)?;
            iterations += 1;
            if iterations > limit {
                return Err(Error::InfeasibleInput(format!(
                    "network simplex exceeded {limit} pivots"
                )));
            }
        }
        Ok(())
    }

    /// Positive tree flows, recomputed by eliminating leaves so that each
    /// node balance is exact up to rounding.
    fn extract(&mut self) -> Vec<Flow> {
        let mut order = Vec::with_capacity(self.root + 1);
        let mut stack = vec![self.root];
        while let Some(w) = stack.pop() {
            order.push(w);
            let mut c = self.first_child[w];
            while c != NONE {
                stack.push(c);
                c = self.next_sib[c];
            }
        }
        let mut subtree = self.supply.clone();
        let mut flows = Vec::with_capacity(self.m + self.n);
        for &w in order.iter().rev() {
            if w == self.root {
                continue;
            }
            let p = self.parent[w];
            subtree[p] += subtree[w];
            let a = self.pred[w];
            let f = if self.pred_up[w] { subtree[w] } else { -subtree[w] };
            if a < self.dense && f > 0.0 {
                flows.push(Flow {
                    source: a / self.n,
                    target: a % self.n,
                    mass: f,
                });
            }
        }
        flows.sort_by_key(|f| (f.source, f.target));
        flows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_permutation(cost: &[f64], n: usize) -> f64 {
        fn rec(cost: &[f64], n: usize, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(cost, n, row + 1, used, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, n, 0, &mut vec![false; n], 0.0, &mut best);
        best
    }

    #[test]
    fn assignment_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=7 {
            for _ in 0..10 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..10.0)).collect();
                let ones = vec![1.0; n];
                let flows = solve_transport(&ones, &ones, &cost).unwrap();
                let total: f64 = flows.iter().map(|f| f.mass * cost[f.source * n + f.target]).sum();
                let brute = brute_force_permutation(&cost, n);
                assert!((total - brute).abs() <= 1e-9 * (1.0 + brute), "n={n}: {total} vs {brute}");
            }
        }
    }

    #[test]
    fn balances_hold_for_unequal_sizes() {
        let supply = [0.5, 0.25, 0.25];
        let demand = [0.1, 0.2, 0.3, 0.4];
        let cost: Vec<f64> = (0..12).map(|k| ((k * 7) % 5) as f64).collect();
        let flows = solve_transport(&supply, &demand, &cost).unwrap();
        let mut rows = [0.0; 3];
        let mut cols = [0.0; 4];
        for f in &flows {
            rows[f.source] += f.mass;
            cols[f.target] += f.mass;
        }
        for (r, s) in rows.iter().zip(supply) {
            assert!((r - s).abs() < 1e-15);
        }
        for (c, d) in cols.iter().zip(demand) {
            assert!((c - d).abs() < 1e-15);
        }
    }
}
