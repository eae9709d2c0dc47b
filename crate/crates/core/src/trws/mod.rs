//! Sequential tree-reweighted message passing (TRW-S) and a loopy min-sum
//! baseline.
//!
//! Both run on a pairwise model whose edges are either hard consistency
//! constraints (messages via the grouped kernel) or dense cost tables. The TRW-S
//! lower bound comes from the monotonic-chain decomposition induced by the scan
//! order: each node weight is split over `max(#earlier, #later)` chains and the
//! bound is accumulated from the normalisation constants of the backward pass.

mod kernel;

use std::time::Instant;

pub use kernel::{
    precompute_group_order, send_message_grouped, send_message_naive, Direction, GroupLayout,
    GroupOrder,
};

use crate::energy::{FactorGraph, Labeling, INF};
use crate::error::{Error, Result};
use crate::lift::{SuperGraph, SuperLabeling};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Trws,
    Lbp,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// TRW-S stops when the bound grows by at most this much (relative to
    /// `max(1, |bound|)`) over `stall_window` iterations. LBP uses it as the
    /// message-change threshold.
    pub lb_stall_tolerance: f64,
    pub stall_window: usize,
    /// Node processing order; `None` means index order (row-major for grids).
    pub schedule: Option<Vec<usize>>,
    pub algorithm: Algorithm,
    /// Prune labels without support across some edge before solving.
    pub arc_consistency: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 10_000,
            lb_stall_tolerance: 1e-9,
            stall_window: 10,
            schedule: None,
            algorithm: Algorithm::Trws,
            arc_consistency: true,
        }
    }
}

impl SolverOptions {
    pub fn lbp() -> Self {
        SolverOptions {
            algorithm: Algorithm::Lbp,
            ..Default::default()
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::input("max_iters must be at least 1"));
        }
        if !(self.lb_stall_tolerance >= 0.0) {
            return Err(Error::input("stall tolerance must be non-negative"));
        }
        if let Some(s) = &self.schedule {
            let mut seen = vec![false; n];
            if s.len() != n || s.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
                return Err(Error::input("schedule must be a permutation of the nodes"));
            }
        }
        Ok(())
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub lower_bound: Option<f64>,
    /// Best energy found so far (`INF` while no consistent labeling was seen).
    pub energy: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub labeling: SuperLabeling,
    pub base: Labeling,
    pub consistent: bool,
    pub energy: f64,
    pub lower_bound: Option<f64>,
    pub relative_gap: Option<f64>,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
}

/// Result of running on a plain pairwise energy.
#[derive(Debug, Clone)]
pub struct PairwiseResult {
    pub labeling: Labeling,
    pub energy: f64,
    pub lower_bound: Option<f64>,
    pub relative_gap: Option<f64>,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
}

/// `(energy - bound) / max(|bound|, 1e-12)`.
pub fn relative_gap(energy: f64, lower_bound: f64) -> f64 {
    if energy == INF || lower_bound == INF {
        return INF;
    }
    (energy - lower_bound) / lower_bound.abs().max(1e-12)
}

enum Potential {
    Consistency {
        layout: GroupLayout,
        groups_a: Vec<u32>,
        groups_b: Vec<u32>,
    },
    /// Row-major `[x_a][x_b]` table.
    Dense(Vec<f64>),
}

struct ModelEdge {
    a: usize,
    b: usize,
    pot: Potential,
}

impl ModelEdge {
    fn cost(&self, xa: usize, xb: usize, kb: usize) -> f64 {
        match &self.pot {
            Potential::Consistency {
                groups_a, groups_b, ..
            } => {
                if groups_a[xa] == groups_b[xb] {
                    0.0
                } else {
                    INF
                }
            }
            Potential::Dense(t) => t[xa * kb + xb],
        }
    }
}

struct Model {
    unary: Vec<Vec<f64>>,
    edges: Vec<ModelEdge>,
}

impl Model {
    fn from_super_graph(sg: &SuperGraph) -> Self {
        Model {
            unary: sg.nodes().iter().map(|n| n.unary.clone()).collect(),
            edges: sg
                .edges()
                .iter()
                .map(|e| ModelEdge {
                    a: e.a,
                    b: e.b,
                    pot: Potential::Consistency {
                        layout: precompute_group_order(e),
                        groups_a: e.groups_a.clone(),
                        groups_b: e.groups_b.clone(),
                    },
                })
                .collect(),
        }
    }

    fn from_pairwise(graph: &FactorGraph) -> Result<Self> {
        let k = graph.label_counts();
        let mut unary: Vec<Vec<f64>> = k.iter().map(|&n| vec![0.0; n]).collect();
        let mut pairs: std::collections::BTreeMap<(usize, usize), Vec<f64>> = Default::default();
        for f in graph.factors() {
            match *f.scope() {
                [i] => {
                    for (u, &c) in unary[i].iter_mut().zip(f.table()) {
                        *u += c;
                    }
                }
                [i, j] => {
                    let t = pairs.entry((i, j)).or_insert_with(|| vec![0.0; k[i] * k[j]]);
                    for (u, &c) in t.iter_mut().zip(f.table()) {
                        *u += c;
                    }
                }
                _ => {
                    return Err(Error::input(format!(
                        "pairwise solver cannot handle factor over {:?}",
                        f.scope()
                    )))
                }
            }
        }
        Ok(Model {
            unary,
            edges: pairs
                .into_iter()
                .map(|((a, b), t)| ModelEdge {
                    a,
                    b,
                    pot: Potential::Dense(t),
                })
                .collect(),
        })
    }

    fn energy(&self, x: &[usize]) -> f64 {
        let u: f64 = self.unary.iter().zip(x).map(|(u, &l)| u[l]).sum();
        let p: f64 = self
            .edges
            .iter()
            .map(|e| e.cost(x[e.a], x[e.b], self.unary[e.b].len()))
            .sum();
        u + p
    }
}

/// An edge incident to a node, seen from that node.
#[derive(Clone, Copy)]
struct Incidence {
    edge: usize,
    /// The node is endpoint `a` of the edge.
    is_a: bool,
    other: usize,
}

struct Engine<'m> {
    model: &'m Model,
    incident: Vec<Vec<Incidence>>,
    /// `to_b[e]` is the message into endpoint `b`, `to_a[e]` into `a`.
    to_a: Vec<Vec<f64>>,
    to_b: Vec<Vec<f64>>,
    order: Vec<usize>,
    position: Vec<usize>,
}

impl<'m> Engine<'m> {
    fn new(model: &'m Model, schedule: Option<&[usize]>) -> Self {
        let n = model.unary.len();
        let mut incident = vec![Vec::new(); n];
        for (k, e) in model.edges.iter().enumerate() {
            incident[e.a].push(Incidence {
                edge: k,
                is_a: true,
                other: e.b,
            });
            incident[e.b].push(Incidence {
                edge: k,
                is_a: false,
                other: e.a,
            });
        }
        let order: Vec<usize> = schedule.map_or_else(|| (0..n).collect(), <[usize]>::to_vec);
        let mut position = vec![0; n];
        for (p, &i) in order.iter().enumerate() {
            position[i] = p;
        }
        Engine {
            model,
            incident,
            to_a: model.edges.iter().map(|e| vec![0.0; model.unary[e.a].len()]).collect(),
            to_b: model.edges.iter().map(|e| vec![0.0; model.unary[e.b].len()]).collect(),
            order,
            position,
        }
    }

    fn incoming(&self, inc: &Incidence) -> &[f64] {
        if inc.is_a {
            &self.to_a[inc.edge]
        } else {
            &self.to_b[inc.edge]
        }
    }

    fn earlier(&self, i: usize, j: usize) -> bool {
        self.position[j] < self.position[i]
    }

    /// Unary plus all incoming messages.
    fn belief(&self, i: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.model.unary[i]);
        for inc in &self.incident[i] {
            for (o, &m) in out.iter_mut().zip(self.incoming(inc)) {
                *o += m;
            }
        }
    }

    /// Sends `weight * belief - incoming` from `i` across `inc`; returns the
    /// normalisation constant that was subtracted.
    fn send(&mut self, i: usize, inc: Incidence, belief: &[f64], weight: f64, h: &mut Vec<f64>) -> f64 {
        let back = self.incoming(&inc);
        h.clear();
        h.extend(belief.iter().zip(back).map(|(&b, &m)| {
            if b == INF {
                INF
            } else {
                weight * b - m
            }
        }));
        let e = &self.model.edges[inc.edge];
        let out = if inc.is_a {
            &mut self.to_b[inc.edge]
        } else {
            &mut self.to_a[inc.edge]
        };
        match &e.pot {
            Potential::Consistency { layout, .. } => {
                let dir = if inc.is_a { Direction::AtoB } else { Direction::BtoA };
                send_message_grouped(layout, dir, h, out);
            }
            Potential::Dense(t) => {
                let kb = self.model.unary[e.b].len();
                let ka = self.model.unary[e.a].len();
                if inc.is_a {
                    for (xb, o) in out.iter_mut().enumerate() {
                        *o = (0..ka).map(|xa| h[xa] + t[xa * kb + xb]).fold(INF, f64::min);
                    }
                } else {
                    for (xa, o) in out.iter_mut().enumerate() {
                        *o = (0..kb).map(|xb| h[xb] + t[xa * kb + xb]).fold(INF, f64::min);
                    }
                }
            }
        }
        let _ = i;
        normalize(out)
    }

    /// Greedy conditional argmin in scan order, used during the forward pass.
    fn choose_label(&self, i: usize, fixed: &[usize], scratch: &mut Vec<f64>) -> usize {
        scratch.clear();
        scratch.extend_from_slice(&self.model.unary[i]);
        for inc in &self.incident[i] {
            if !self.earlier(i, inc.other) {
                for (s, &m) in scratch.iter_mut().zip(self.incoming(inc)) {
                    *s += m;
                }
            }
        }
        let unconstrained = argmin(scratch);
        for inc in &self.incident[i] {
            if !self.earlier(i, inc.other) {
                continue;
            }
            let e = &self.model.edges[inc.edge];
            let xo = fixed[inc.other];
            let kb = self.model.unary[e.b].len();
            for (x, s) in scratch.iter_mut().enumerate() {
                let c = if inc.is_a { e.cost(x, xo, kb) } else { e.cost(xo, x, kb) };
                *s += c;
            }
        }
        let best = argmin(scratch);
        if scratch[best] == INF {
            unconstrained
        } else {
            best
        }
    }

    fn trws(&mut self, opts: &SolverOptions) -> (Vec<usize>, f64, Option<f64>, usize, Vec<TraceRecord>) {
        let n = self.model.unary.len();
        let weights: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let n_in = self.incident[i].iter().filter(|c| self.earlier(i, c.other)).count();
                let n_out = self.incident[i].len() - n_in;
                let chains = n_in.max(n_out).max(1) as f64;
                // (message weight, share of the node bound term)
                (1.0 / chains, (chains - n_in as f64) / chains)
            })
            .collect();
        let start = Instant::now();
        let mut belief = Vec::new();
        let mut h = Vec::new();
        let mut scratch = Vec::new();
        let mut x = vec![0usize; n];
        let mut best_x = x.clone();
        let mut best_e = INF;
        let mut history: Vec<f64> = Vec::new();
        let mut trace = Vec::new();
        let mut lb = -INF;
        let mut iters = 0;
        for it in 1..=opts.max_iters {
            iters = it;
            for p in 0..n {
                let i = self.order[p];
                x[i] = self.choose_label(i, &x, &mut scratch);
                self.belief(i, &mut belief);
                for c in self.incident[i].clone() {
                    if !self.earlier(i, c.other) {
                        self.send(i, c, &belief, weights[i].0, &mut h);
                    }
                }
            }
            let e = self.model.energy(&x);
            if e < best_e {
                best_e = e;
                best_x.copy_from_slice(&x);
            }

            let mut bound = 0.0;
            for p in (0..n).rev() {
                let i = self.order[p];
                self.belief(i, &mut belief);
                let share = weights[i].1;
                if share > 0.0 {
                    bound += share * belief.iter().copied().fold(INF, f64::min);
                }
                for c in self.incident[i].clone() {
                    if self.earlier(i, c.other) {
                        bound += self.send(i, c, &belief, weights[i].0, &mut h);
                    }
                }
            }
            lb = bound;
            history.push(bound);
            trace.push(TraceRecord {
                iteration: it,
                lower_bound: Some(bound),
                energy: best_e,
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            });
            if bound == INF {
                break;
            }
            let scale = bound.abs().max(1.0);
            if best_e < INF && best_e - bound <= 1e-13 * scale {
                break;
            }
            if history.len() > opts.stall_window {
                let old = history[history.len() - 1 - opts.stall_window];
                if bound - old <= opts.lb_stall_tolerance * scale {
                    break;
                }
            }
        }
        if best_e == INF {
            best_x = x;
        }
        (best_x, best_e, Some(lb), iters, trace)
    }

    fn lbp(&mut self, opts: &SolverOptions) -> (Vec<usize>, f64, Option<f64>, usize, Vec<TraceRecord>) {
        let n = self.model.unary.len();
        let start = Instant::now();
        let mut beliefs: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut h = Vec::new();
        let mut best_x = vec![0; n];
        let mut best_e = INF;
        let mut last_x = best_x.clone();
        let mut trace = Vec::new();
        let mut iters = 0;
        for it in 1..=opts.max_iters {
            iters = it;
            for (i, b) in beliefs.iter_mut().enumerate() {
                self.belief(i, b);
            }
            let old_a = self.to_a.clone();
            let old_b = self.to_b.clone();
            for i in 0..n {
                for c in self.incident[i].clone() {
                    self.send(i, c, &beliefs[i], 1.0, &mut h);
                }
            }
            let change = self
                .to_a
                .iter()
                .zip(&old_a)
                .chain(self.to_b.iter().zip(&old_b))
                .flat_map(|(new, old)| new.iter().zip(old))
                .map(|(&a, &b)| if a == b { 0.0 } else { (a - b).abs() })
                .fold(0.0, |m: f64, d| if d.is_nan() { INF } else { m.max(d) });

            for (i, b) in beliefs.iter_mut().enumerate() {
                self.belief(i, b);
                last_x[i] = argmin(b);
            }
            let e = self.model.energy(&last_x);
            if e < best_e {
                best_e = e;
                best_x.copy_from_slice(&last_x);
            }
            trace.push(TraceRecord {
                iteration: it,
                lower_bound: None,
                energy: best_e,
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            });
            if change <= opts.lb_stall_tolerance {
                break;
            }
        }
        if best_e == INF {
            best_x = last_x;
        }
        (best_x, best_e, None, iters, trace)
    }
}

/// Subtracts the finite minimum; returns it (or `INF` when every entry is `INF`).
fn normalize(v: &mut [f64]) -> f64 {
    let m = v.iter().copied().fold(INF, f64::min);
    if m < INF {
        for x in v.iter_mut() {
            *x -= m;
        }
    }
    m
}

/// Index of the smallest entry, lowest index on ties.
fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

fn run_model(model: &Model, opts: &SolverOptions) -> (Vec<usize>, f64, Option<f64>, usize, Vec<TraceRecord>) {
    let mut engine = Engine::new(model, opts.schedule.as_deref());
    match opts.algorithm {
        Algorithm::Trws => engine.trws(opts),
        Algorithm::Lbp => engine.lbp(opts),
    }
}

/// Minimises the super-graph energy.
pub fn run(sg: &SuperGraph, opts: &SolverOptions) -> Result<SolveResult> {
    opts.validate(sg.nodes().len())?;
    let (work, kept) = if opts.arc_consistency {
        let (g, k) = sg.arc_consistent()?;
        (std::borrow::Cow::Owned(g), Some(k))
    } else {
        (std::borrow::Cow::Borrowed(sg), None)
    };
    if let Some(k) = work.nodes().iter().position(|n| n.labels.is_empty()) {
        return Err(Error::Infeasible(format!("node {k} has no labels")));
    }
    let model = Model::from_super_graph(&work);
    let (x, _, lower_bound, iterations, trace) = run_model(&model, opts);
    let labels: Vec<usize> = match &kept {
        Some(k) => x.iter().zip(k).map(|(&l, keep)| keep[l]).collect(),
        None => x,
    };
    let labeling = SuperLabeling(labels);
    let energy = sg.super_energy(&labeling);
    let (base, consistent) = sg.decode(&labeling);
    Ok(SolveResult {
        relative_gap: lower_bound.map(|lb| relative_gap(energy, lb)),
        labeling,
        base,
        consistent: consistent && energy < INF,
        energy,
        lower_bound,
        iterations,
        trace,
    })
}

/// Runs directly on an energy with unary and pairwise factors only.
pub fn run_pairwise(graph: &FactorGraph, opts: &SolverOptions) -> Result<PairwiseResult> {
    opts.validate(graph.num_vars())?;
    let model = Model::from_pairwise(graph)?;
    let (x, _, lower_bound, iterations, trace) = run_model(&model, opts);
    let energy = graph.evaluate(&x)?;
    Ok(PairwiseResult {
        relative_gap: lower_bound.map(|lb| relative_gap(energy, lb)),
        labeling: Labeling(x),
        energy,
        lower_bound,
        iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::{build_super_graph, PatchCover};

    #[test]
    fn all_zero_unaries_close_immediately() {
        let g = FactorGraph::binary(9);
        let sg = build_super_graph(&g, &PatchCover::sliding_grid(3, 3, 2).unwrap()).unwrap();
        let r = run(&sg, &SolverOptions::default()).unwrap();
        assert_eq!(r.energy, 0.0);
        assert_eq!(r.lower_bound, Some(0.0));
        assert_eq!(r.relative_gap, Some(0.0));
        assert!(r.consistent);
    }

    #[test]
    fn chain_is_solved_exactly() {
        let mut g = FactorGraph::binary(4);
        for i in 0..4 {
            g.add_unary(i, vec![0.0, if i % 2 == 0 { -1.0 } else { 0.5 }]).unwrap();
        }
        for i in 0..3 {
            g.add_pairwise(i, i + 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        }
        let (bx, be) = g.brute_force_min().unwrap();
        let r = run_pairwise(&g, &SolverOptions::default()).unwrap();
        assert!((r.energy - be).abs() < 1e-12);
        assert!((r.lower_bound.unwrap() - be).abs() < 1e-9);
        assert_eq!(r.labeling, bx);
    }

    #[test]
    fn rejects_bad_options() {
        let g = FactorGraph::binary(4);
        let sg = build_super_graph(&g, &PatchCover::sliding_grid(2, 2, 2).unwrap()).unwrap();
        let mut o = SolverOptions::default();
        o.max_iters = 0;
        assert!(run(&sg, &o).is_err());
        let o = SolverOptions {
            schedule: Some(vec![0, 0]),
            ..Default::default()
        };
        assert!(run(&sg, &o).is_err());
    }

    #[test]
    fn lbp_reports_no_bound() {
        let mut g = FactorGraph::binary(9);
        g.add_unary(4, vec![0.0, -1.0]).unwrap();
        let sg = build_super_graph(&g, &PatchCover::sliding_grid(3, 3, 2).unwrap()).unwrap();
        let r = run(&sg, &SolverOptions::lbp()).unwrap();
        assert!(r.lower_bound.is_none() && r.relative_gap.is_none());
        assert!(r.consistent);
        assert!((r.energy + 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_leaves_all_infinite_vectors() {
        let mut v = vec![INF, INF];
        assert_eq!(normalize(&mut v), INF);
        assert_eq!(v, vec![INF, INF]);
        let mut v = vec![3.0, INF, 1.0];
        assert_eq!(normalize(&mut v), 1.0);
        assert_eq!(v, vec![2.0, INF, 0.0]);
    }
}
