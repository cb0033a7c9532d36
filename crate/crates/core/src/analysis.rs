//! Structural checks on a pair of schedules: the algorithm's trace and an
//! optimal trace (SRPT) on the same instance.
//!
//! Everything here is evaluated exactly. "Executed during an interval" always
//! means executed on a subinterval of positive length; the instant of an
//! emission belongs to the clairvoyant side for anything that happens right
//! after it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use log::debug;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::JobId;
use crate::scalar::Scalar;
use crate::trace::{ScheduleTrace, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    N,
    C,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BorrowGraph {
    pub vertices: BTreeSet<JobId>,
    pub edges: BTreeSet<(JobId, JobId, Tag)>,
}

impl BorrowGraph {
    pub fn has_edge(&self, j: JobId, i: JobId, tag: Tag) -> bool {
        self.edges.contains(&(j, i, tag))
    }

    /// Edges with tags forgotten.
    pub fn job_adjacency(&self) -> BTreeSet<(JobId, JobId)> {
        self.edges.iter().map(|&(j, i, _)| (j, i)).collect()
    }

    fn successors(&self) -> BTreeMap<JobId, BTreeSet<JobId>> {
        let mut out: BTreeMap<JobId, BTreeSet<JobId>> = BTreeMap::new();
        for &(j, i, _) in &self.edges {
            out.entry(j).or_default().insert(i);
        }
        out
    }
}

struct Classifier<'a, T> {
    trace: &'a ScheduleTrace<T>,
    alpha: T,
}

impl<'a, T: Scalar> Classifier<'a, T> {
    fn new(trace: &'a ScheduleTrace<T>) -> Self {
        Classifier {
            trace,
            alpha: trace.instance().alpha().value().clone(),
        }
    }

    fn threshold(&self, id: JobId) -> T {
        self.alpha.clone() * self.trace.proc(id).expect("known job").clone()
    }

    /// Non-clairvoyant at the instant `t` (`y <= alpha p`, or uncommitted).
    fn n_at(&self, id: JobId, y: &T, t: &T) -> bool {
        !self.trace.is_committed_at(id, t) || *y <= self.threshold(id)
    }

    /// Non-clairvoyant right after `t` when `y` does not grow past the threshold.
    fn n_after(&self, id: JobId, y: &T, t: &T) -> bool {
        !self.trace.is_committed_at(id, t) || *y < self.threshold(id)
    }
}

/// Pieces of positive length on which a job receives rate, clipped to `[0, t]`:
/// `(start, end, rate, y at start)`.
fn execution_pieces<T: Scalar>(trace: &ScheduleTrace<T>, t: &T) -> BTreeMap<JobId, Vec<(T, T, T, T)>> {
    let mut y: BTreeMap<JobId, T> = BTreeMap::new();
    let mut out: BTreeMap<JobId, Vec<(T, T, T, T)>> = BTreeMap::new();
    for seg in trace.segments() {
        if seg.start >= *t {
            break;
        }
        let end = T::min_of(seg.end.clone(), t.clone());
        let len = end.clone() - seg.start.clone();
        for (id, rate) in &seg.rates {
            let before = y.get(id).cloned().unwrap_or_else(T::zero);
            out.entry(*id)
                .or_default()
                .push((seg.start.clone(), end.clone(), rate.clone(), before.clone()));
            y.insert(*id, before + rate.clone() * len.clone());
        }
    }
    out
}

/// Borrow graph of `trace` at time `t`: `(j, i, N)` if `i` is executed while
/// non-clairvoyant during the lifetime of `j`, `(j, i, C)` likewise while
/// clairvoyant. Vertices are the jobs released by `t`.
pub fn build_borrow_graph<T: Scalar>(trace: &ScheduleTrace<T>, t: &T) -> Result<BorrowGraph> {
    let cls = Classifier::new(trace);
    let mut graph = BorrowGraph::default();
    let mut lifetimes = Vec::new();
    for job in trace.instance().jobs() {
        if let Some(iv) = trace.job_lifetime(job.id, t)? {
            graph.vertices.insert(job.id);
            lifetimes.push((job.id, iv));
        }
    }
    let pieces = execution_pieces(trace, t);
    for (&i, list) in &pieces {
        let threshold = cls.threshold(i);
        let commit = trace.commits().get(&i).cloned().unwrap_or_else(T::zero);
        for (a, b, rate, y_a) in list {
            for (j, (r_j, e_j)) in &lifetimes {
                if *j == i {
                    continue;
                }
                let lo = T::max_of(a.clone(), r_j.clone());
                let hi = T::min_of(b.clone(), e_j.clone());
                if lo >= hi {
                    continue;
                }
                let y_lo = y_a.clone() + rate.clone() * (lo.clone() - a.clone());
                let y_hi = y_a.clone() + rate.clone() * (hi.clone() - a.clone());
                if lo < commit || y_lo < threshold {
                    graph.edges.insert((*j, i, Tag::N));
                }
                if T::max_of(lo.clone(), commit.clone()) < hi && y_hi > threshold {
                    graph.edges.insert((*j, i, Tag::C));
                }
            }
        }
    }
    Ok(graph)
}

/// Jobs reachable from `j`, including `j`.
pub fn reachable(graph: &BorrowGraph, j: JobId) -> Result<BTreeSet<JobId>> {
    if !graph.vertices.contains(&j) {
        return Err(Error::UnknownJob(j));
    }
    let succ = graph.successors();
    let mut seen = BTreeSet::from([j]);
    let mut queue = VecDeque::from([j]);
    while let Some(v) = queue.pop_front() {
        for &w in succ.get(&v).into_iter().flatten() {
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    Ok(seen)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dummy<T> {
    pub job: JobId,
    /// Index `l` of the interval `[times[l], times[l + 1]]`.
    pub interval: usize,
    pub capacity: T,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowNetwork<T> {
    pub t: T,
    pub times: Vec<T>,
    pub jobs: Vec<JobId>,
    pub supply: BTreeMap<JobId, T>,
    pub demand: BTreeMap<JobId, T>,
    pub dummies: Vec<Dummy<T>>,
    /// Uncapacitated arcs `job -> dummy`.
    pub arcs: Vec<(JobId, usize)>,
    pub infinity: T,
}

impl<T: Scalar> FlowNetwork<T> {
    pub fn total_supply(&self) -> T {
        self.supply.values().fold(T::zero(), |acc, v| acc + v.clone())
    }

    pub fn is_demand(&self, id: JobId) -> bool {
        self.demand.contains_key(&id)
    }

    /// Job pairs `(j, i)` joined by a path `j -> v -> i` of positive capacity.
    pub fn positive_job_adjacency(&self) -> BTreeSet<(JobId, JobId)> {
        self.arcs
            .iter()
            .filter(|(_, d)| self.dummies[*d].capacity > T::zero())
            .map(|(j, d)| (*j, self.dummies[*d].job))
            .collect()
    }

    fn vertex_of_job(&self) -> BTreeMap<JobId, usize> {
        self.jobs.iter().enumerate().map(|(k, id)| (*id, k + 1)).collect()
    }

    fn dummy_vertex(&self, d: usize) -> usize {
        self.jobs.len() + 1 + d
    }

    fn sink(&self) -> usize {
        self.jobs.len() + self.dummies.len() + 1
    }
}

/// The flow network at `t` over the coarsest admissible discretization.
pub fn build_flow_network<T: Scalar>(alg: &ScheduleTrace<T>, opt: &ScheduleTrace<T>, t: &T) -> Result<FlowNetwork<T>> {
    build_flow_network_with(alg, opt, t, &[])
}

/// As [`build_flow_network`], with `extra` points added to the discretization.
pub fn build_flow_network_with<T: Scalar>(
    alg: &ScheduleTrace<T>,
    opt: &ScheduleTrace<T>,
    t: &T,
    extra: &[T],
) -> Result<FlowNetwork<T>> {
    if alg.instance().jobs() != opt.instance().jobs() {
        return Err(Error::InvalidParameter("traces are on different instances".into()));
    }
    let mut times = BTreeSet::from([T::zero(), t.clone()]);
    let mut jobs = Vec::new();
    for job in alg.instance().jobs() {
        if job.release <= *t {
            jobs.push(job.id);
            times.insert(job.release.clone());
            if let Some(c) = alg.completion(job.id) {
                if c <= t {
                    times.insert(c.clone());
                }
            }
        }
    }
    jobs.sort();
    times.extend(extra.iter().filter(|x| **x >= T::zero() && *x <= t).cloned());
    let times: Vec<T> = times.into_iter().collect();

    let alive = alg.partition(t)?.alive;
    let opt_alive = opt.partition(t)?.alive;
    let mut supply = BTreeMap::new();
    let mut demand = BTreeMap::new();
    for &id in &jobs {
        if opt_alive.contains(&id) {
            demand.insert(id, alg.elapsed_work(id, t)?);
        } else if alive.contains(&id) {
            supply.insert(id, alg.remaining(id, t)?);
        }
    }

    let snaps: Vec<Snapshot<T>> = times.iter().map(|x| alg.snapshot(x)).collect::<Result<_>>()?;
    let index: BTreeMap<JobId, usize> = alg
        .instance()
        .jobs()
        .iter()
        .enumerate()
        .map(|(k, j)| (j.id, k))
        .collect();
    let mut dummies = Vec::new();
    for &i in &jobs {
        let k = index[&i];
        for l in 0..times.len().saturating_sub(1) {
            dummies.push(Dummy {
                job: i,
                interval: l,
                capacity: snaps[l + 1].elapsed[k].clone() - snaps[l].elapsed[k].clone(),
            });
        }
    }
    let mut arcs = Vec::new();
    for &j in &jobs {
        let (r, e) = alg.job_lifetime(j, t)?.expect("released by t");
        for (d, dummy) in dummies.iter().enumerate() {
            if dummy.job != j && times[dummy.interval] >= r && times[dummy.interval + 1] <= e {
                arcs.push((j, d));
            }
        }
    }
    let infinity = supply.values().chain(demand.values()).fold(T::one(), |acc, v| acc + v.clone());
    Ok(FlowNetwork {
        t: t.clone(),
        times,
        jobs,
        supply,
        demand,
        dummies,
        arcs,
        infinity,
    })
}

/// A flow on a [`FlowNetwork`], arc by arc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow<T> {
    pub value: T,
    /// Used supply per supply job.
    pub source: BTreeMap<JobId, T>,
    /// Met demand per demand job.
    pub sink: BTreeMap<JobId, T>,
    /// Aligned with `network.arcs`.
    pub arcs: Vec<T>,
    /// Flow on `dummy -> job`, aligned with `network.dummies`.
    pub dummies: Vec<T>,
}

impl<T: Scalar> Flow<T> {
    /// `f(j, i)`: flow sent from `j` into dummies of `i`.
    pub fn job_flow(&self, network: &FlowNetwork<T>) -> BTreeMap<(JobId, JobId), T> {
        let mut out: BTreeMap<(JobId, JobId), T> = BTreeMap::new();
        for (k, (j, d)) in network.arcs.iter().enumerate() {
            if self.arcs[k] > T::zero() {
                let e = out.entry((*j, network.dummies[*d].job)).or_insert_with(T::zero);
                *e = e.clone() + self.arcs[k].clone();
            }
        }
        out
    }
}

struct Residual<T> {
    to: Vec<usize>,
    cap: Vec<T>,
    flow: Vec<T>,
    adj: Vec<Vec<usize>>,
}

impl<T: Scalar> Residual<T> {
    fn new(n: usize) -> Self {
        Residual {
            to: Vec::new(),
            cap: Vec::new(),
            flow: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, u: usize, v: usize, cap: T) -> usize {
        let e = self.to.len();
        self.to.push(v);
        self.cap.push(cap);
        self.flow.push(T::zero());
        self.adj[u].push(e);
        self.to.push(u);
        self.cap.push(T::zero());
        self.flow.push(T::zero());
        self.adj[v].push(e + 1);
        e
    }

    fn residual(&self, e: usize) -> T {
        self.cap[e].clone() - self.flow[e].clone()
    }

    /// Edmonds-Karp: shortest augmenting paths, adjacency in insertion order.
    fn max_flow(&mut self, s: usize, t: usize) -> T {
        let mut total = T::zero();
        loop {
            let mut via: Vec<Option<usize>> = vec![None; self.adj.len()];
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &e in &self.adj[u] {
                    let v = self.to[e];
                    if !seen[v] && self.residual(e) > T::zero() {
                        seen[v] = true;
                        via[v] = Some(e);
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut bottleneck: Option<T> = None;
            let mut v = t;
            while let Some(e) = via[v] {
                let r = self.residual(e);
                bottleneck = Some(match bottleneck {
                    Some(b) => T::min_of(b, r),
                    None => r,
                });
                v = self.to[e ^ 1];
            }
            let push = bottleneck.expect("path has an edge");
            let mut v = t;
            while let Some(e) = via[v] {
                self.flow[e] = self.flow[e].clone() + push.clone();
                self.flow[e ^ 1] = self.flow[e ^ 1].clone() - push.clone();
                v = self.to[e ^ 1];
            }
            total = total + push;
        }
    }
}

/// Exact maximum flow. With `restricted`, arcs leaving demand vertices
/// (other than to the sink) are left out, so no flow passes through them.
pub fn max_flow<T: Scalar>(network: &FlowNetwork<T>, restricted: bool) -> Flow<T> {
    let vertex = network.vertex_of_job();
    let sink = network.sink();
    let mut g = Residual::new(sink + 1);
    let source_edges: Vec<(JobId, usize)> = network
        .supply
        .iter()
        .map(|(id, s)| (*id, g.add(0, vertex[id], s.clone())))
        .collect();
    let arc_edges: Vec<Option<usize>> = network
        .arcs
        .iter()
        .map(|(j, d)| {
            if restricted && network.is_demand(*j) {
                None
            } else {
                Some(g.add(vertex[j], network.dummy_vertex(*d), network.infinity.clone()))
            }
        })
        .collect();
    let dummy_edges: Vec<usize> = network
        .dummies
        .iter()
        .enumerate()
        .map(|(d, dummy)| g.add(network.dummy_vertex(d), vertex[&dummy.job], dummy.capacity.clone()))
        .collect();
    let sink_edges: Vec<(JobId, usize)> = network
        .demand
        .iter()
        .map(|(id, y)| (*id, g.add(vertex[id], sink, y.clone())))
        .collect();
    let value = g.max_flow(0, sink);
    Flow {
        value,
        source: source_edges.into_iter().map(|(id, e)| (id, g.flow[e].clone())).collect(),
        sink: sink_edges.into_iter().map(|(id, e)| (id, g.flow[e].clone())).collect(),
        arcs: arc_edges
            .into_iter()
            .map(|e| e.map_or_else(T::zero, |e| g.flow[e].clone()))
            .collect(),
        dummies: dummy_edges.into_iter().map(|e| g.flow[e].clone()).collect(),
    }
}

/// Maximum flow without passing through demand vertices, and whether it uses
/// the whole supply.
pub fn max_flow_saturates<T: Scalar>(network: &FlowNetwork<T>) -> (bool, Flow<T>) {
    let flow = max_flow(network, true);
    (flow.value == network.total_supply(), flow)
}

/// Feasibility of `flow` on `network`; returns the violations found.
pub fn check_flow<T: Scalar>(network: &FlowNetwork<T>, flow: &Flow<T>) -> Vec<String> {
    let mut errs = Vec::new();
    let zero = T::zero();
    let mut balance: BTreeMap<JobId, T> = network.jobs.iter().map(|id| (*id, T::zero())).collect();
    let mut dummy_in = vec![T::zero(); network.dummies.len()];
    let add = |m: &mut BTreeMap<JobId, T>, id: JobId, v: T| {
        let e = m.get_mut(&id).expect("known vertex");
        *e = e.clone() + v;
    };
    let mut value = T::zero();
    for (id, f) in &flow.source {
        let cap = network.supply.get(id).cloned().unwrap_or_else(T::zero);
        if *f < zero || *f > cap {
            errs.push(format!("source arc of job {id} carries {f} outside [0, {cap}]"));
        }
        add(&mut balance, *id, f.clone());
        value = value + f.clone();
    }
    for (id, f) in &flow.sink {
        let cap = network.demand.get(id).cloned().unwrap_or_else(T::zero);
        if *f < zero || *f > cap {
            errs.push(format!("sink arc of job {id} carries {f} outside [0, {cap}]"));
        }
        add(&mut balance, *id, -f.clone());
    }
    for (k, (j, d)) in network.arcs.iter().enumerate() {
        let f = &flow.arcs[k];
        if *f < zero {
            errs.push(format!("negative flow on arc {j} -> dummy {d}"));
        }
        add(&mut balance, *j, -f.clone());
        dummy_in[*d] = dummy_in[*d].clone() + f.clone();
    }
    for (d, dummy) in network.dummies.iter().enumerate() {
        let f = &flow.dummies[d];
        if *f < zero || *f > dummy.capacity {
            errs.push(format!(
                "dummy {d} of job {} carries {f} outside [0, {}]",
                dummy.job, dummy.capacity
            ));
        }
        if dummy_in[d] != *f {
            errs.push(format!("flow not conserved at dummy {d} of job {}", dummy.job));
        }
        add(&mut balance, dummy.job, f.clone());
    }
    for (id, b) in balance {
        if !b.is_zero() {
            errs.push(format!("flow not conserved at job {id} (excess {b})"));
        }
    }
    if value != flow.value {
        errs.push(format!("flow value {} differs from used supply {value}", flow.value));
    }
    errs
}

/// `β(j, i)`; absent pairs are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetaMatrix<T> {
    pub values: BTreeMap<(JobId, JobId), T>,
}

impl<T> Default for BetaMatrix<T> {
    fn default() -> Self {
        BetaMatrix { values: BTreeMap::new() }
    }
}

impl<T: Scalar> BetaMatrix<T> {
    pub fn get(&self, j: JobId, i: JobId) -> T {
        self.values.get(&(j, i)).cloned().unwrap_or_else(T::zero)
    }

    pub fn row_sum(&self, j: JobId) -> T {
        self.values
            .iter()
            .filter(|((a, _), _)| *a == j)
            .fold(T::zero(), |acc, (_, v)| acc + v.clone())
    }

    pub fn col_sum(&self, i: JobId) -> T {
        self.values
            .iter()
            .filter(|((_, b), _)| *b == i)
            .fold(T::zero(), |acc, (_, v)| acc + v.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition<T> {
    pub beta: BetaMatrix<T>,
    /// Peeled paths as vertex sequences (0 is the source) with their flow.
    pub paths: Vec<(Vec<usize>, T)>,
    pub cancelled_cycles: usize,
}

fn find_cycle<T>(out: &[BTreeMap<usize, T>]) -> Option<Vec<usize>> {
    // 0 unvisited, 1 on stack, 2 finished
    let mut color = vec![0u8; out.len()];
    for root in 0..out.len() {
        if color[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(root, out[root].keys().rev().copied().collect())];
        color[root] = 1;
        while let Some((v, pending)) = stack.last_mut() {
            let v = *v;
            match pending.pop() {
                Some(w) if color[w] == 1 => {
                    let pos = stack.iter().position(|(u, _)| *u == w).expect("on stack");
                    return Some(stack[pos..].iter().map(|(u, _)| *u).collect());
                }
                Some(w) if color[w] == 0 => {
                    color[w] = 1;
                    stack.push((w, out[w].keys().rev().copied().collect()));
                }
                Some(_) => {}
                None => {
                    color[v] = 2;
                    stack.pop();
                }
            }
        }
    }
    None
}

fn subtract<T: Scalar>(out: &mut [BTreeMap<usize, T>], u: usize, v: usize, amount: &T) {
    let f = out[u].get_mut(&v).expect("arc carries flow");
    *f = f.clone() - amount.clone();
    if f.is_zero() {
        out[u].remove(&v);
    }
}

/// Path decomposition of `flow`. Flow cycles are cancelled first; then the
/// lexicographically smallest source-sink path (by vertex number: source,
/// jobs in id order, dummies, sink) is peeled until the source is exhausted.
pub fn decompose_beta<T: Scalar>(network: &FlowNetwork<T>, flow: &Flow<T>) -> Result<Decomposition<T>> {
    let vertex = network.vertex_of_job();
    let sink = network.sink();
    let mut out: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); sink + 1];
    let mut put = |u: usize, v: usize, f: &T| {
        if *f > T::zero() {
            let e = out[u].entry(v).or_insert_with(T::zero);
            *e = e.clone() + f.clone();
        }
    };
    for (id, f) in &flow.source {
        put(0, vertex[id], f);
    }
    for (k, (j, d)) in network.arcs.iter().enumerate() {
        put(vertex[j], network.dummy_vertex(*d), &flow.arcs[k]);
    }
    for (d, dummy) in network.dummies.iter().enumerate() {
        put(network.dummy_vertex(d), vertex[&dummy.job], &flow.dummies[d]);
    }
    for (id, f) in &flow.sink {
        put(vertex[id], sink, f);
    }

    let mut cancelled_cycles = 0;
    while let Some(cycle) = find_cycle(&out) {
        let closing: Vec<(usize, usize)> = (0..cycle.len()).map(|k| (cycle[k], cycle[(k + 1) % cycle.len()])).collect();
        let amount = closing
            .iter()
            .map(|(u, v)| out[*u][v].clone())
            .min()
            .expect("cycle has arcs");
        debug!("cancelling flow cycle {cycle:?} carrying {amount}");
        for (u, v) in closing {
            subtract(&mut out, u, v, &amount);
        }
        cancelled_cycles += 1;
    }

    let job_at = |v: usize| network.jobs[v - 1];
    let mut beta = BetaMatrix::default();
    let mut paths = Vec::new();
    while let Some((&first, _)) = out[0].iter().next() {
        let mut path = vec![0, first];
        let mut v = first;
        while v != sink {
            let next = *out[v]
                .keys()
                .next()
                .ok_or_else(|| Error::InvalidParameter(format!("flow is not conserved at vertex {v}")))?;
            path.push(next);
            v = next;
        }
        let amount = path
            .windows(2)
            .map(|w| out[w[0]][&w[1]].clone())
            .min()
            .expect("path has arcs");
        for w in path.windows(2) {
            subtract(&mut out, w[0], w[1], &amount);
        }
        let key = (job_at(path[1]), job_at(path[path.len() - 2]));
        let e = beta.values.entry(key).or_insert_with(T::zero);
        *e = e.clone() + amount.clone();
        paths.push((path, amount));
    }
    Ok(Decomposition {
        beta,
        paths,
        cancelled_cycles,
    })
}

/// Properties (i)-(iii) of the β-values, plus their support.
pub fn check_beta_properties<T: Scalar>(
    beta: &BetaMatrix<T>,
    graph: &BorrowGraph,
    network: &FlowNetwork<T>,
) -> Result<Vec<String>> {
    let mut errs = Vec::new();
    for ((j, i), v) in &beta.values {
        if *v <= T::zero() {
            continue;
        }
        if !network.supply.contains_key(j) || !network.demand.contains_key(i) {
            errs.push(format!("beta({j}, {i}) = {v} outside supply x demand"));
        }
        if !reachable(graph, *j)?.contains(i) {
            errs.push(format!("(i) beta({j}, {i}) = {v} but {i} is not reachable from {j}"));
        }
    }
    for (j, p) in &network.supply {
        let row = beta.row_sum(*j);
        if row != *p {
            errs.push(format!("(ii) row sum of {j} is {row}, remaining work is {p}"));
        }
    }
    for (i, y) in &network.demand {
        let col = beta.col_sum(*i);
        if col > *y {
            errs.push(format!("(iii) column sum of {i} is {col}, exceeds elapsed work {y}"));
        }
    }
    Ok(errs)
}

/// Halves every interval of the discretization, carries `flow` over by
/// splitting each dummy's flow in proportion to the work in the two halves,
/// and checks that the carried flow is feasible with the same job-to-job
/// amounts and β sums, and that a fresh maximum flow still saturates.
pub fn check_refinement<T: Scalar>(
    alg: &ScheduleTrace<T>,
    opt: &ScheduleTrace<T>,
    network: &FlowNetwork<T>,
    flow: &Flow<T>,
    beta: &BetaMatrix<T>,
) -> Result<Vec<String>> {
    let mids: Vec<T> = network
        .times
        .windows(2)
        .map(|w| (w[0].clone() + w[1].clone()) * T::half())
        .collect();
    let fine = build_flow_network_with(alg, opt, &network.t, &mids)?;
    let fine_dummy: BTreeMap<(JobId, T), usize> = fine
        .dummies
        .iter()
        .enumerate()
        .map(|(d, dm)| ((dm.job, fine.times[dm.interval].clone()), d))
        .collect();
    let fine_arc: BTreeMap<(JobId, usize), usize> = fine.arcs.iter().enumerate().map(|(k, a)| (*a, k)).collect();
    let mut carried = Flow {
        value: flow.value.clone(),
        source: flow.source.clone(),
        sink: flow.sink.clone(),
        arcs: vec![T::zero(); fine.arcs.len()],
        dummies: vec![T::zero(); fine.dummies.len()],
    };
    let mut errs = Vec::new();
    let split = |d: usize| -> (usize, usize, T, T) {
        let dm = &network.dummies[d];
        let lo = network.times[dm.interval].clone();
        let d1 = fine_dummy[&(dm.job, lo.clone())];
        let d2 = fine_dummy[&(dm.job, mids[dm.interval].clone())];
        (d1, d2, fine.dummies[d1].capacity.clone(), fine.dummies[d2].capacity.clone())
    };
    for (d, dm) in network.dummies.iter().enumerate() {
        let (d1, d2, q1, q2) = split(d);
        if q1.clone() + q2.clone() != dm.capacity {
            errs.push(format!("refined capacities of job {} do not add up", dm.job));
            continue;
        }
        let f = flow.dummies[d].clone();
        if dm.capacity.is_zero() {
            continue;
        }
        carried.dummies[d1] = f.clone() * q1.clone() / dm.capacity.clone();
        carried.dummies[d2] = f * q2 / dm.capacity.clone();
    }
    for (k, (j, d)) in network.arcs.iter().enumerate() {
        let f = flow.arcs[k].clone();
        let dm = &network.dummies[*d];
        if dm.capacity.is_zero() {
            if !f.is_zero() {
                errs.push(format!("flow {f} into zero-capacity dummy of job {}", dm.job));
            }
            continue;
        }
        let (d1, d2, q1, q2) = split(*d);
        for (fd, q) in [(d1, q1), (d2, q2)] {
            match fine_arc.get(&(*j, fd)) {
                Some(&a) => carried.arcs[a] = f.clone() * q / dm.capacity.clone(),
                None => errs.push(format!("refined network lacks arc {j} -> dummy of job {}", dm.job)),
            }
        }
    }
    errs.extend(check_flow(&fine, &carried).into_iter().map(|e| format!("refined flow: {e}")));
    if carried.job_flow(&fine) != flow.job_flow(network) {
        errs.push("refinement changed job-to-job flow".into());
    }
    let fine_beta = decompose_beta(&fine, &carried)?.beta;
    for j in network.supply.keys() {
        if fine_beta.row_sum(*j) != beta.row_sum(*j) {
            errs.push(format!("refinement changed the beta row sum of {j}"));
        }
    }
    for i in network.demand.keys() {
        if fine_beta.col_sum(*i) != beta.col_sum(*i) {
            errs.push(format!("refinement changed the beta column sum of {i}"));
        }
    }
    let (saturated, _) = max_flow_saturates(&fine);
    if !saturated {
        errs.push("refined network does not saturate".into());
    }
    Ok(errs)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentInfo {
    pub jobs: BTreeSet<JobId>,
    /// `O_S`: jobs `i ∈ O` with truncated progress at most that of the segment.
    pub dominated: BTreeSet<JobId>,
    /// Jobs of the segment that can borrow from some `i ∈ O \ O_S`.
    pub bar: BTreeSet<JobId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPartition<T> {
    /// `min(y_j(t), alpha p_j)` for the jobs in `A(t) ∪ O(t)`.
    pub truncated: BTreeMap<JobId, T>,
    /// Ordered by inclusion of `dominated`.
    pub segments: Vec<SegmentInfo>,
}

/// Segments of `N(t) \ O(t)`.
pub fn compute_segments<T: Scalar>(
    alg: &ScheduleTrace<T>,
    opt: &ScheduleTrace<T>,
    t: &T,
) -> Result<SegmentPartition<T>> {
    let graph = build_borrow_graph(alg, t)?;
    segments_with(alg, opt, t, &graph)
}

fn segments_with<T: Scalar>(
    alg: &ScheduleTrace<T>,
    opt: &ScheduleTrace<T>,
    t: &T,
    graph: &BorrowGraph,
) -> Result<SegmentPartition<T>> {
    let alpha = alg.instance().alpha().value().clone();
    let part = alg.partition(t)?;
    let o = opt.partition(t)?.alive;
    let mut truncated = BTreeMap::new();
    for id in part.alive.iter().chain(o.iter()) {
        let y = alg.elapsed_work(*id, t)?;
        let cap = alpha.clone() * alg.proc(*id)?.clone();
        truncated.insert(*id, T::min_of(y, cap));
    }
    let mut by_dominated: BTreeMap<Vec<JobId>, BTreeSet<JobId>> = BTreeMap::new();
    for j in part.non_clairvoyant.difference(&o) {
        let dominated: Vec<JobId> = o.iter().copied().filter(|i| truncated[j] >= truncated[i]).collect();
        by_dominated.entry(dominated).or_default().insert(*j);
    }
    let mut segments = Vec::new();
    for (dominated, jobs) in by_dominated {
        let dominated: BTreeSet<JobId> = dominated.into_iter().collect();
        let outside: BTreeSet<JobId> = o.difference(&dominated).copied().collect();
        let mut bar = BTreeSet::new();
        for j in &jobs {
            if !reachable(graph, *j)?.is_disjoint(&outside) {
                bar.insert(*j);
            }
        }
        segments.push(SegmentInfo { jobs, dominated, bar });
    }
    segments.sort_by(|a, b| a.dominated.len().cmp(&b.dominated.len()).then(a.dominated.cmp(&b.dominated)));
    Ok(SegmentPartition { truncated, segments })
}

/// Strict inclusion chain and `|segments| <= |O| + 1`.
pub fn check_segments<T>(part: &SegmentPartition<T>, o_size: usize) -> Vec<String> {
    let mut errs = Vec::new();
    for pair in part.segments.windows(2) {
        let (a, b) = (&pair[0].dominated, &pair[1].dominated);
        if !(a.is_subset(b) && a.len() < b.len()) {
            errs.push(format!("segments {a:?} and {b:?} are not strictly nested"));
        }
    }
    if part.segments.len() > o_size + 1 {
        errs.push(format!("{} segments but |O| = {o_size}", part.segments.len()));
    }
    errs
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalBounds {
    pub alive: usize,
    pub opt_alive: usize,
    pub alive_not_opt: usize,
    pub nonclairvoyant_not_opt: usize,
    pub clairvoyant_not_opt: usize,
    /// `1 / (1 - alpha)` rounded up; `None` at `alpha = 1`.
    pub slack: Option<u64>,
    /// Set when `1 / (1 - alpha)` is not an integer (or undefined).
    pub extrapolated: bool,
    pub violations: Vec<String>,
}

/// The counting bounds on `A \ O`, `N \ O`, `C \ O` and `A`.
pub fn check_local_bounds<T: Scalar>(alg: &ScheduleTrace<T>, opt: &ScheduleTrace<T>, t: &T) -> Result<LocalBounds> {
    let part = alg.partition(t)?;
    let o = opt.partition(t)?.alive;
    let alpha = alg.instance().alpha();
    let (slack, extrapolated) = match alpha.inverse_slack() {
        Some(c) => {
            let floor = c.floor_int();
            let exact = floor == c;
            let up = if exact { floor } else { floor + T::one() };
            (Some(up.to_i64().expect("small slack") as u64), !exact)
        }
        None => (None, true),
    };
    let mut report = LocalBounds {
        alive: part.alive.len(),
        opt_alive: o.len(),
        alive_not_opt: part.alive.difference(&o).count(),
        nonclairvoyant_not_opt: part.non_clairvoyant.difference(&o).count(),
        clairvoyant_not_opt: part.clairvoyant.difference(&o).count(),
        slack,
        extrapolated,
        violations: Vec::new(),
    };
    if report.opt_alive == 0 && report.alive > 0 {
        report
            .violations
            .push(format!("optimum is empty but {} jobs are alive", report.alive));
    }
    if let Some(c) = slack {
        let o = report.opt_alive as u64;
        let checks = [
            ("|A \\ O|", report.alive_not_opt, 3 + 2 * c),
            ("|N \\ O|", report.nonclairvoyant_not_opt, 2 + c),
            ("|C \\ O|", report.clairvoyant_not_opt, 1 + c),
            ("|A|", report.alive, 4 + 2 * c),
        ];
        for (name, count, factor) in checks {
            if count as u64 > factor * o {
                report
                    .violations
                    .push(format!("{name} = {count} exceeds {factor} * |O| = {}", factor * o));
            }
        }
    }
    Ok(report)
}

/// Options for [`verify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub refinement: bool,
    /// Also solve without the restriction on demand vertices and compare values.
    pub compare_unrestricted: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            refinement: true,
            compare_unrestricted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointReport<T> {
    pub t: T,
    pub bounds: LocalBounds,
    pub supply: T,
    pub flow_value: T,
    pub saturated: bool,
    pub segments: usize,
    pub cancelled_cycles: usize,
    pub violations: Vec<String>,
}

impl<T: Scalar> PointReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "t": self.t.to_ratio_string(),
            "pass": self.passed(),
            "alive": self.bounds.alive,
            "opt_alive": self.bounds.opt_alive,
            "alive_not_opt": self.bounds.alive_not_opt,
            "nonclairvoyant_not_opt": self.bounds.nonclairvoyant_not_opt,
            "clairvoyant_not_opt": self.bounds.clairvoyant_not_opt,
            "extrapolated": self.bounds.extrapolated,
            "supply": self.supply.to_ratio_string(),
            "flow_value": self.flow_value.to_ratio_string(),
            "saturated": self.saturated,
            "segments": self.segments,
            "cancelled_cycles": self.cancelled_cycles,
            "violations": self.violations,
        })
    }
}

/// Execution pieces of positive length on `[0, t]`, per job.
fn executed_intervals<T: Scalar>(trace: &ScheduleTrace<T>, t: &T) -> BTreeMap<JobId, Vec<(T, T)>> {
    execution_pieces(trace, t)
        .into_iter()
        .map(|(id, list)| (id, list.into_iter().map(|(a, b, _, _)| (a, b)).collect()))
        .collect()
}

/// All checks at a single time `t`.
pub fn check_point<T: Scalar>(
    alg: &ScheduleTrace<T>,
    opt: &ScheduleTrace<T>,
    t: &T,
    options: VerifyOptions,
) -> Result<PointReport<T>> {
    let mut errs = Vec::new();
    let graph = build_borrow_graph(alg, t)?;
    let part = alg.partition(t)?;

    let executed = executed_intervals(alg, t);
    for &j in &graph.vertices {
        let r_j = reachable(&graph, j)?;
        let life = alg.lifetime(&r_j, t)?;
        if part.alive.contains(&j) {
            let start = r_j.iter().map(|id| alg.release(*id).expect("known").clone()).min().expect("nonempty");
            if life != vec![(start.clone(), t.clone())] {
                errs.push(format!("lifetime of R_{j} is {life:?}, expected one interval ending at {t}"));
            }
        }
        for (k, pieces) in &executed {
            if r_j.contains(k) {
                continue;
            }
            let inside = pieces.iter().any(|(a, b)| {
                life.iter()
                    .any(|(lo, hi)| T::max_of(a.clone(), lo.clone()) < T::min_of(b.clone(), hi.clone()))
            });
            if inside {
                errs.push(format!("job {k} runs during the lifetime of R_{j} but is not in R_{j}"));
            }
        }
    }

    let snap = alg.snapshot(t)?;
    let index: BTreeMap<JobId, usize> = alg
        .instance()
        .jobs()
        .iter()
        .enumerate()
        .map(|(k, j)| (j.id, k))
        .collect();
    for &(j, i, tag) in &graph.edges {
        if tag == Tag::N && part.non_clairvoyant.contains(&j) && part.non_clairvoyant.contains(&i) {
            let (yj, yi) = (&snap.elapsed[index[&j]], &snap.elapsed[index[&i]]);
            if yj < yi {
                errs.push(format!("direct non-clairvoyant borrow {j} -> {i} with y_{j} = {yj} < y_{i} = {yi}"));
            }
        }
    }

    let network = build_flow_network(alg, opt, t)?;
    let supply = network.total_supply();
    let (saturated, flow) = max_flow_saturates(&network);
    if !saturated {
        errs.push(format!("maximum flow {} does not use the total supply {supply}", flow.value));
    }
    errs.extend(check_flow(&network, &flow));
    for (k, (j, _)) in network.arcs.iter().enumerate() {
        if network.is_demand(*j) && !flow.arcs[k].is_zero() {
            errs.push(format!("demand job {j} has outgoing flow"));
        }
    }
    if options.compare_unrestricted {
        let free = max_flow(&network, false);
        if free.value != flow.value {
            errs.push(format!(
                "restricted maximum flow {} differs from unrestricted {}",
                flow.value, free.value
            ));
        }
    }
    if network.positive_job_adjacency() != graph.job_adjacency() {
        errs.push("positive-capacity job adjacency differs from the borrow graph".into());
    }
    let decomposition = decompose_beta(&network, &flow)?;
    if saturated {
        errs.extend(check_beta_properties(&decomposition.beta, &graph, &network)?);
        if options.refinement {
            errs.extend(check_refinement(alg, opt, &network, &flow, &decomposition.beta)?);
        }
    }

    let segments = segments_with(alg, opt, t, &graph)?;
    let bounds = check_local_bounds(alg, opt, t)?;
    errs.extend(check_segments(&segments, bounds.opt_alive));
    errs.extend(bounds.violations.iter().cloned());
    Ok(PointReport {
        t: t.clone(),
        bounds,
        supply,
        flow_value: flow.value,
        saturated,
        segments: segments.segments.len(),
        cancelled_cycles: decomposition.cancelled_cycles,
        violations: errs,
    })
}

/// Behavioural invariants of an alpha-clairvoyant trace: the shape of every
/// decision, the blocking property of clairvoyant jobs, and catch-up.
pub fn check_trace_invariants<T: Scalar>(trace: &ScheduleTrace<T>) -> Result<Vec<String>> {
    let cls = Classifier::new(trace);
    let jobs: Vec<JobId> = trace.instance().jobs().iter().map(|j| j.id).collect();
    let end = trace.end();
    let mut errs = Vec::new();
    let alive_at = |id: JobId, x: &T| trace.is_alive(id, x).expect("known job");

    // (time, rated set) right after every event time
    let mut decisions = Vec::new();
    for tau in trace.event_times() {
        if tau >= end {
            continue;
        }
        let seg = trace
            .segments()
            .iter()
            .find(|s| s.start <= tau && tau < s.end)
            .expect("segments tile the trace");
        decisions.push((tau, seg.rates.clone()));
    }

    let samples = trace.check_times();
    let sample_snaps: Vec<Snapshot<T>> = samples.iter().map(|x| trace.snapshot(x)).collect::<Result<_>>()?;

    for (tau, rates) in &decisions {
        let snap = trace.snapshot(tau)?;
        let y = |id: JobId| snap.elapsed[jobs.iter().position(|k| *k == id).expect("known")].clone();
        let remaining = |id: JobId| trace.proc(id).expect("known").clone() - y(id);
        let alive: Vec<JobId> = jobs.iter().copied().filter(|id| alive_at(*id, tau)).collect();
        let total = rates.iter().fold(T::zero(), |acc, (_, r)| acc + r.clone());
        if !alive.is_empty() && total != T::one() {
            errs.push(format!("idle capacity at {tau} with {} alive jobs", alive.len()));
        }
        if rates.is_empty() {
            continue;
        }
        let clairvoyant: Vec<JobId> = rates
            .iter()
            .map(|(id, _)| *id)
            .filter(|id| !cls.n_after(*id, &y(*id), tau))
            .collect();
        if clairvoyant.len() == 1 && rates.len() == 1 {
            let k = clairvoyant[0];
            for j in &alive {
                if remaining(k) > remaining(*j) {
                    errs.push(format!(
                        "at {tau} clairvoyant job {k} runs with remaining {} above job {j}'s {}",
                        remaining(k),
                        remaining(*j)
                    ));
                }
            }
        } else if clairvoyant.is_empty() {
            for (k, _) in rates {
                for j in &alive {
                    if y(*k) > y(*j) {
                        errs.push(format!(
                            "at {tau} non-clairvoyant job {k} runs with progress {} above job {j}'s {}",
                            y(*k),
                            y(*j)
                        ));
                    }
                }
            }
        } else {
            errs.push(format!("at {tau} the rated set {rates:?} mixes clairvoyant and non-clairvoyant jobs"));
        }

        // catch-up from this instant on
        for (i, _) in rates {
            if !cls.n_after(*i, &y(*i), tau) {
                continue;
            }
            for j in &alive {
                if j == i || !cls.n_after(*j, &y(*j), tau) {
                    continue;
                }
                for (x, s) in samples.iter().zip(&sample_snaps) {
                    if x < tau || !alive_at(*i, x) || !alive_at(*j, x) {
                        continue;
                    }
                    let yi = &s.elapsed[jobs.iter().position(|k| k == i).expect("known")];
                    let yj = &s.elapsed[jobs.iter().position(|k| k == j).expect("known")];
                    if cls.n_at(*i, yi, x) && cls.n_at(*j, yj, x) && yj < yi {
                        errs.push(format!("job {i} ran at {tau} but overtook job {j} by {x}"));
                    }
                }
            }
        }
    }

    // clairvoyant jobs block every earlier job until they complete
    for seg in trace.segments() {
        for (k, _) in &seg.rates {
            let Some(s_k) = trace.emission(*k) else { continue };
            if *s_k >= seg.end {
                continue;
            }
            let start = T::max_of(seg.start.clone(), s_k.clone());
            if !trace.is_committed_at(*k, &start) {
                continue;
            }
            let c_k = trace.completion(*k).cloned();
            for j in &jobs {
                if j == k {
                    continue;
                }
                let r_j = trace.release(*j)?;
                let c_j = trace.completion(*j);
                if !(*r_j < start && c_j.is_none_or(|c| start < *c)) {
                    continue;
                }
                let runs = trace.segments().iter().any(|s| {
                    s.rate_of(*j).is_some()
                        && T::max_of(s.start.clone(), start.clone())
                            < c_k.clone().map_or_else(|| s.end.clone(), |c| T::min_of(s.end.clone(), c))
                });
                if runs {
                    errs.push(format!("job {j} runs while clairvoyant job {k} (running from {start}) is unfinished"));
                }
                let order_ok = match (&c_k, c_j) {
                    (Some(a), Some(b)) => a <= b,
                    (_, None) => true,
                    (None, Some(_)) => false,
                };
                if !order_ok {
                    errs.push(format!("clairvoyant job {k} completes after job {j}"));
                }
            }
        }
    }
    errs.sort();
    errs.dedup();
    Ok(errs)
}

/// Times at which [`verify`] evaluates point checks: event times of both
/// traces and the midpoints between consecutive ones.
pub fn analysis_times<T: Scalar>(alg: &ScheduleTrace<T>, opt: &ScheduleTrace<T>) -> Vec<T> {
    let events: BTreeSet<T> = alg.event_times().into_iter().chain(opt.event_times()).collect();
    let events: Vec<T> = events.into_iter().collect();
    let mut out = Vec::with_capacity(events.len() * 2);
    for (k, t) in events.iter().enumerate() {
        if k > 0 {
            out.push((events[k - 1].clone() + t.clone()) * T::half());
        }
        out.push(t.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport<T> {
    pub trace_violations: Vec<String>,
    pub points: Vec<PointReport<T>>,
}

impl<T: Scalar> VerificationReport<T> {
    pub fn passed(&self) -> bool {
        self.trace_violations.is_empty() && self.points.iter().all(|p| p.passed())
    }

    pub fn first_failure(&self) -> Option<String> {
        if let Some(v) = self.trace_violations.first() {
            return Some(v.clone());
        }
        self.points
            .iter()
            .find(|p| !p.passed())
            .map(|p| format!("t = {}: {}", p.t, p.violations[0]))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "pass": self.passed(),
            "trace_violations": self.trace_violations,
            "points": self.points.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
        })
    }
}

/// Trace invariants of `alg` plus point checks at every analysis time.
pub fn verify<T: Scalar>(
    alg: &ScheduleTrace<T>,
    opt: &ScheduleTrace<T>,
    options: VerifyOptions,
) -> Result<VerificationReport<T>> {
    let trace_violations = check_trace_invariants(alg)?;
    let points = analysis_times(alg, opt)
        .iter()
        .map(|t| check_point(alg, opt, t, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport {
        trace_violations,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::BuiltinPolicy;
    use crate::{simulate, Alpha, Instance, Rational};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn traces(alpha: Rational, pairs: &[(i64, i64)]) -> (ScheduleTrace<Rational>, ScheduleTrace<Rational>) {
        let pairs: Vec<_> = pairs.iter().map(|&(r, p)| (q(r, 1), q(p, 1))).collect();
        let inst = Instance::from_pairs(alpha.clone(), &pairs).unwrap();
        let alg = simulate(&inst, &BuiltinPolicy::alpha_clairvoyant(Alpha::new(alpha).unwrap()), None)
            .unwrap()
            .0;
        let opt = simulate(&inst, &BuiltinPolicy::srpt(), None).unwrap().0;
        (alg, opt)
    }

    #[test]
    fn setf_pair_graph() {
        let pairs = vec![(q(0, 1), q(2, 1)), (q(0, 1), q(2, 1))];
        let inst = Instance::from_pairs(q(1, 2), &pairs).unwrap();
        let (trace, _) = simulate(&inst, &BuiltinPolicy::setf(), None).unwrap();
        let g = build_borrow_graph(&trace, &q(3, 1)).unwrap();
        assert!(g.has_edge(JobId(1), JobId(2), Tag::N));
        assert!(g.has_edge(JobId(2), JobId(1), Tag::N));
        assert_eq!(reachable(&g, JobId(1)).unwrap(), BTreeSet::from([JobId(1), JobId(2)]));
        assert!(reachable(&g, JobId(9)).is_err());
    }

    #[test]
    fn half_example_network() {
        let (alg, opt) = traces(q(1, 2), &[(0, 2), (0, 2)]);
        let t = q(5, 2);
        let net = build_flow_network(&alg, &opt, &t).unwrap();
        assert_eq!(net.supply, BTreeMap::from([(JobId(1), q(1, 2))]));
        assert_eq!(net.demand, BTreeMap::from([(JobId(2), q(1, 1))]));
        let (sat, flow) = max_flow_saturates(&net);
        assert!(sat);
        assert_eq!(flow.value, q(1, 2));
        let dec = decompose_beta(&net, &flow).unwrap();
        assert_eq!(dec.beta.get(JobId(1), JobId(2)), q(1, 2));
        let graph = build_borrow_graph(&alg, &t).unwrap();
        assert!(check_beta_properties(&dec.beta, &graph, &net).unwrap().is_empty());
        let mut bumped = dec.beta.clone();
        bumped.values.insert((JobId(1), JobId(2)), q(3, 1));
        let errs = check_beta_properties(&bumped, &graph, &net).unwrap();
        assert!(errs.iter().any(|e| e.starts_with("(iii)")));
        assert!(check_refinement(&alg, &opt, &net, &flow, &dec.beta).unwrap().is_empty());
    }

    #[test]
    fn empty_supply_at_zero() {
        let (alg, opt) = traces(q(1, 2), &[(0, 2), (0, 2)]);
        let net = build_flow_network(&alg, &opt, &q(0, 1)).unwrap();
        assert!(net.supply.is_empty());
        let (sat, flow) = max_flow_saturates(&net);
        assert!(sat);
        assert!(decompose_beta(&net, &flow).unwrap().beta.values.is_empty());
    }

    #[test]
    fn local_bounds_example() {
        let (alg, opt) = traces(q(1, 2), &[(0, 2), (0, 2)]);
        let b = check_local_bounds(&alg, &opt, &q(5, 2)).unwrap();
        assert_eq!((b.alive_not_opt, b.opt_alive, b.slack), (1, 1, Some(2)));
        assert!(b.violations.is_empty() && !b.extrapolated);
        let (alg, opt) = traces(q(1, 3), &[(0, 2)]);
        assert!(check_local_bounds(&alg, &opt, &q(1, 1)).unwrap().extrapolated);
    }

    #[test]
    fn cycle_cancellation() {
        let mut out: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); 3];
        out[0].insert(1, q(1, 1));
        out[1].insert(2, q(1, 1));
        out[2].insert(0, q(2, 1));
        let cycle = find_cycle(&out).unwrap();
        assert_eq!(cycle, vec![0, 1, 2]);
    }

    #[test]
    fn verify_small_instances_pass() {
        for pairs in [vec![(0, 4), (0, 2)], vec![(0, 3), (1, 1), (2, 5)], vec![(0, 2), (4, 1)]] {
            let (alg, opt) = traces(q(1, 2), &pairs);
            let options = VerifyOptions {
                refinement: true,
                compare_unrestricted: true,
            };
            let report = verify(&alg, &opt, options).unwrap();
            assert!(report.passed(), "{:?}", report.first_failure());
        }
    }

    #[test]
    fn segments_nest() {
        let (alg, opt) = traces(q(1, 2), &[(0, 6), (0, 5), (1, 1), (1, 7)]);
        for t in analysis_times(&alg, &opt) {
            let part = compute_segments(&alg, &opt, &t).unwrap();
            let o = opt.partition(&t).unwrap().alive.len();
            assert!(check_segments(&part, o).is_empty());
        }
    }
}
