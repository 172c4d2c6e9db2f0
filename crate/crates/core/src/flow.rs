//! Exact max-flow over rational capacities.
//!
//! Capacities are scaled to integers by the lcm of their denominators and the
//! flow is solved with Dinic's algorithm, on `i128` when the scaled values fit
//! comfortably and on `BigInt` otherwise. Integer capacities guarantee
//! termination and exact results.

use std::collections::VecDeque;
use std::ops::{AddAssign, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::rational::scale_to_integers;

pub(crate) struct Network {
    nodes: usize,
    edges: Vec<(usize, usize, BigRational)>,
}

pub(crate) struct FlowSolution {
    pub value: BigRational,
    /// Flow on each edge, in insertion order.
    pub flows: Vec<BigRational>,
    /// Nodes reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

impl Network {
    pub fn new(nodes: usize) -> Self {
        Network {
            nodes,
            edges: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: BigRational) -> usize {
        debug_assert!(from < self.nodes && to < self.nodes);
        self.edges.push((from, to, cap));
        self.edges.len() - 1
    }

    pub fn solve(&self, source: usize, sink: usize) -> FlowSolution {
        self.solve_seeded(source, sink, &[])
    }

    /// Pushes as much as possible along each seed path (a list of edge ids) in order,
    /// then completes the flow with augmenting paths.
    pub fn solve_seeded(&self, source: usize, sink: usize, seeds: &[Vec<usize>]) -> FlowSolution {
        let caps: Vec<BigRational> = self.edges.iter().map(|e| e.2.clone()).collect();
        let (ints, scale) = scale_to_integers(&caps);
        let total_bits: u64 = ints.iter().map(|c| c.bits()).max().unwrap_or(0)
            + (64 - (ints.len() as u64 + 1).leading_zeros() as u64);
        let (value, flows, side) = if total_bits < 120 {
            let small: Vec<i128> = ints.iter().map(|c| c.to_i128().unwrap()).collect();
            let (v, f, s) = Dinic::build(self, small).run(source, sink, seeds);
            (
                BigInt::from(v),
                f.into_iter().map(BigInt::from).collect::<Vec<_>>(),
                s,
            )
        } else {
            Dinic::build(self, ints).run(source, sink, seeds)
        };
        let unscale = |v: BigInt| BigRational::new(v, scale.clone());
        FlowSolution {
            value: unscale(value),
            flows: flows.into_iter().map(unscale).collect(),
            source_side: side,
        }
    }
}

trait Capacity: Clone + Ord + Zero + AddAssign + SubAssign {}
impl<T: Clone + Ord + Zero + AddAssign + SubAssign> Capacity for T {}

struct Dinic<C> {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    residual: Vec<C>,
    original: Vec<C>,
    level: Vec<i32>,
    cursor: Vec<usize>,
}

impl<C: Capacity> Dinic<C> {
    fn build(net: &Network, caps: Vec<C>) -> Self {
        let mut adj = vec![Vec::new(); net.nodes];
        let mut to = Vec::with_capacity(net.edges.len() * 2);
        let mut residual = Vec::with_capacity(net.edges.len() * 2);
        for ((from, dest, _), cap) in net.edges.iter().zip(caps.iter()) {
            adj[*from].push(to.len());
            to.push(*dest);
            residual.push(cap.clone());
            adj[*dest].push(to.len());
            to.push(*from);
            residual.push(C::zero());
        }
        Dinic {
            adj,
            to,
            residual,
            original: caps,
            level: vec![-1; net.nodes],
            cursor: vec![0; net.nodes],
        }
    }

    fn push(&mut self, e: usize, amount: &C) {
        self.residual[e] -= amount.clone();
        self.residual[e ^ 1] += amount.clone();
    }

    fn run(mut self, s: usize, t: usize, seeds: &[Vec<usize>]) -> (C, Vec<C>, Vec<bool>) {
        let mut total = C::zero();
        for path in seeds {
            let amount = path.iter().map(|&e| self.residual[2 * e].clone()).min();
            if let Some(amount) = amount.filter(|a| !a.is_zero()) {
                for &e in path {
                    self.push(2 * e, &amount);
                }
                total += amount;
            }
        }
        let mut limit = C::zero();
        for c in &self.original {
            limit += c.clone();
        }
        while self.bfs(s, t) {
            self.cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let pushed = self.dfs(s, t, limit.clone());
                if pushed.is_zero() {
                    break;
                }
                total += pushed;
            }
        }
        self.bfs(s, t);
        let side = self.level.iter().map(|&l| l >= 0).collect();
        let flows = (0..self.original.len())
            .map(|k| {
                let mut f = self.original[k].clone();
                f -= self.residual[2 * k].clone();
                f
            })
            .collect();
        (total, flows, side)
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.level[v] < 0 && !self.residual[e].is_zero() {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: C) -> C {
        if u == t {
            return pushed;
        }
        while self.cursor[u] < self.adj[u].len() {
            let e = self.adj[u][self.cursor[u]];
            let v = self.to[e];
            if self.level[v] == self.level[u] + 1 && !self.residual[e].is_zero() {
                let cap = if self.residual[e] < pushed {
                    self.residual[e].clone()
                } else {
                    pushed.clone()
                };
                let d = self.dfs(v, t, cap);
                if !d.is_zero() {
                    self.push(e, &d);
                    return d;
                }
            }
            self.cursor[u] += 1;
        }
        C::zero()
    }
}
