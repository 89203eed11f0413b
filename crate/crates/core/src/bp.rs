//! Max-product message passing for maximum-weight matching.
//!
//! Every edge carries one message per direction. A synchronous step sets
//! `m[i->j] = (w_ij - max_{k in N(i) \ j} m[k->i])_+` from the previous
//! state only. From the all-zero start this finds the maximum-weight
//! matching when the LP optimum is unique and integral; started from a
//! known maximum-weight matching instead, it climbs monotonically to a
//! fixed point within `2|E|` steps. Either fixed point yields a dual
//! optimum, hence a stable allocation.

use std::collections::HashSet;

use crate::error::{BpError, InstanceError};
use crate::exec::Exec;
use crate::instance::{check_allocation, EdgeId, Instance, Matching, NodeId};
use crate::verify;
use crate::DEFAULT_TOL_EQ;

pub const DEFAULT_DELTA: f64 = 1e-12;

/// Index of the message sent by `from` along edge `edge`.
#[inline]
pub fn message_index(inst: &Instance, from: NodeId, edge: EdgeId) -> usize {
    if inst.edge(edge).u == from {
        2 * edge
    } else {
        2 * edge + 1
    }
}

/// Messages for every directed edge plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    /// `values[2e]` travels `u -> v` on edge `e`, `values[2e + 1]` travels back.
    pub values: Vec<f64>,
    pub t: usize,
}

impl MessageState {
    pub fn zeros(inst: &Instance) -> Self {
        Self {
            values: vec![0.0; 2 * inst.edge_count()],
            t: 0,
        }
    }

    /// Weight on both directions of matched edges, zero elsewhere.
    pub fn matching_init(inst: &Instance, matching: &Matching) -> Self {
        let mut state = Self::zeros(inst);
        for &id in matching.edge_ids() {
            let w = inst.edge(id).w;
            state.values[2 * id] = w;
            state.values[2 * id + 1] = w;
        }
        state
    }

    /// Message `from -> to`, if the edge exists.
    pub fn get(&self, inst: &Instance, from: NodeId, to: NodeId) -> Option<f64> {
        let e = inst.find_edge(from, to)?;
        Some(self.values[message_index(inst, from, e)])
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Values listed by source node, then destination, for display.
    pub fn directed(&self, inst: &Instance) -> Vec<(NodeId, NodeId, f64)> {
        let mut out: Vec<(NodeId, NodeId, f64)> = inst
            .edges()
            .iter()
            .enumerate()
            .flat_map(|(id, e)| {
                [
                    (e.u, e.v, self.values[2 * id]),
                    (e.v, e.u, self.values[2 * id + 1]),
                ]
            })
            .collect();
        out.sort_by_key(|&(a, b, _)| (a, b));
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct TopTwo {
    best: f64,
    best_from: Option<NodeId>,
    second: f64,
}

impl TopTwo {
    /// Max over incoming messages excluding the one from `skip`.
    #[inline]
    fn excluding(&self, skip: NodeId) -> f64 {
        if self.best_from == Some(skip) {
            self.second
        } else {
            self.best
        }
    }
}

fn incoming_top_two(inst: &Instance, values: &[f64], node: NodeId) -> TopTwo {
    let mut top = TopTwo {
        best: 0.0,
        best_from: None,
        second: 0.0,
    };
    for &(k, e) in inst.neighbors(node) {
        let x = values[message_index(inst, k, e)];
        if top.best_from.is_none() || x > top.best {
            top.second = if top.best_from.is_some() { top.best } else { 0.0 };
            top.best = x;
            top.best_from = Some(k);
        } else if x > top.second {
            top.second = x;
        }
    }
    top
}

pub fn bp_step(inst: &Instance, m: &MessageState) -> MessageState {
    bp_step_with(inst, m, Exec::default())
}

pub fn bp_step_with(inst: &Instance, m: &MessageState, exec: Exec) -> MessageState {
    let tops = exec.map_indexed(inst.node_count(), |i| incoming_top_two(inst, &m.values, i));
    let values = exec.map_indexed(2 * inst.edge_count(), |idx| {
        let e = inst.edge(idx / 2);
        let (from, to) = if idx % 2 == 0 { (e.u, e.v) } else { (e.v, e.u) };
        (e.w - tops[from].excluding(to)).max(0.0)
    });
    MessageState { values, t: m.t + 1 }
}

/// Half the sum of the two largest incoming messages at each node.
pub fn dual_from_fixed_point(inst: &Instance, m_star: &MessageState) -> Vec<f64> {
    (0..inst.node_count())
        .map(|i| {
            let top = incoming_top_two(inst, &m_star.values, i);
            (top.best + top.second) / 2.0
        })
        .collect()
}

/// Each node picks the unique neighbour sending it the largest positive
/// message; nodes receiving only zeros stay unmatched.
pub fn extract_matching(inst: &Instance, m: &MessageState, delta: f64) -> Result<Matching, BpError> {
    let n = inst.node_count();
    let mut pick: Vec<Option<(NodeId, EdgeId)>> = vec![None; n];
    for (i, slot) in pick.iter_mut().enumerate() {
        let mut best: Option<(f64, NodeId, EdgeId)> = None;
        for &(k, e) in inst.neighbors(i) {
            let x = m.values[message_index(inst, k, e)];
            if best.is_none_or(|(b, _, _)| x > b) {
                best = Some((x, k, e));
            }
        }
        let Some((mx, k, e)) = best else { continue };
        if mx <= delta {
            continue;
        }
        for &(k2, e2) in inst.neighbors(i) {
            if k2 != k && m.values[message_index(inst, k2, e2)] >= mx - delta {
                return Err(BpError::AmbiguousArgmax {
                    node: i + 1,
                    first: k.min(k2) + 1,
                    second: k.max(k2) + 1,
                });
            }
        }
        *slot = Some((k, e));
    }
    let mut ids = Vec::new();
    for i in 0..n {
        if let Some((j, e)) = pick[i] {
            let back = pick[j].map(|(b, _)| b);
            if back != Some(i) {
                return Err(BpError::InconsistentMatching {
                    node: i + 1,
                    picked: j + 1,
                    back: back.map(|b| b + 1),
                });
            }
            if i < j {
                ids.push(e);
            }
        }
    }
    Ok(Matching::from_edge_ids(inst, ids)?)
}

/// Checks that `(y, matching)` is a stable outcome to `tol`. On failure
/// returns the largest violation found.
pub fn check_stable_pair(
    inst: &Instance,
    y: &[f64],
    matching: &Matching,
    tol: f64,
) -> Result<(), f64> {
    if let Err(e) = check_allocation(inst, matching, y, tol) {
        let worst = match e {
            InstanceError::MatchedSum { sum, weight, .. } => (sum - weight).abs(),
            InstanceError::UnmatchedEarns { value, .. } => value.abs(),
            _ => f64::INFINITY,
        };
        return Err(worst);
    }
    if let Some(neg) = y.iter().copied().filter(|&v| v < -tol).reduce(f64::min) {
        return Err(-neg);
    }
    let report = verify::stability_report(inst, matching, y, tol);
    if report.is_stable() {
        Ok(())
    } else {
        let offers = report.unmatched_offers.iter().map(|&(_, o)| o);
        Err(offers.fold(report.max_deficit, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpResult {
    pub converged: bool,
    /// Fixed point when converged, otherwise the last state computed.
    pub fixed_point: MessageState,
    /// First `t` with `m^t` equal to `m^(t+1)` within `delta`, or the
    /// number of steps taken when not converged.
    pub iterations: usize,
    pub matching: Option<Matching>,
    pub dual: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpOptions {
    pub max_iters: usize,
    pub delta: f64,
    pub exec: Exec,
}

impl BpOptions {
    pub fn new(max_iters: usize) -> Self {
        Self {
            max_iters,
            delta: DEFAULT_DELTA,
            exec: Exec::default(),
        }
    }
}

/// `ceil(2 |V| W / g)`: steps to the fixed point from zero when the LP
/// optimum is unique with gap `g`.
pub fn convergence_bound(inst: &Instance, g: f64) -> usize {
    (2.0 * inst.node_count() as f64 * inst.weight_bound() / g).ceil() as usize
}

/// `10 |V| ceil(W / w_min)`: an iteration cap for when no gap is known.
/// It carries no guarantee.
pub fn heuristic_max_iters(inst: &Instance) -> usize {
    let Some(w_min) = inst.min_weight() else {
        return 1;
    };
    let ratio = (inst.weight_bound() / w_min).ceil();
    (10.0 * inst.node_count() as f64 * ratio).min(usize::MAX as f64) as usize
}

fn iterate(
    inst: &Instance,
    mut m: MessageState,
    opts: &BpOptions,
    observe: &mut dyn FnMut(&MessageState),
) -> (bool, MessageState, usize) {
    for t in 0..=opts.max_iters {
        observe(&m);
        let next = bp_step_with(inst, &m, opts.exec);
        if next.sup_distance(&m) <= opts.delta {
            return (true, m, t);
        }
        m = next;
    }
    (false, m, opts.max_iters)
}

pub fn run_bp_mwm(inst: &Instance, opts: &BpOptions) -> Result<BpResult, BpError> {
    run_bp_mwm_with(inst, opts, |_| {})
}

/// Runs from the all-zero state; `observe` sees every state `m^0, m^1, ...`
/// up to the fixed point.
pub fn run_bp_mwm_with(
    inst: &Instance,
    opts: &BpOptions,
    mut observe: impl FnMut(&MessageState),
) -> Result<BpResult, BpError> {
    let (converged, state, iterations) =
        iterate(inst, MessageState::zeros(inst), opts, &mut observe);
    if !converged {
        return Ok(BpResult {
            converged,
            fixed_point: state,
            iterations,
            matching: None,
            dual: None,
        });
    }
    let matching = extract_matching(inst, &state, opts.delta)?;
    let dual = dual_from_fixed_point(inst, &state);
    Ok(BpResult {
        converged,
        fixed_point: state,
        iterations,
        matching: Some(matching),
        dual: Some(dual),
    })
}

pub fn run_algorithm_a(inst: &Instance, matching: &Matching) -> Result<BpResult, BpError> {
    run_algorithm_a_with(inst, matching, DEFAULT_DELTA, Exec::default(), |_| {})
}

/// Message passing started from the matching-weighted state, capped at
/// `2|E|` steps. The fixed point's dual construction must be stable with
/// `matching`; failure of either means `matching` is not a maximum-weight
/// matching of an instance with a stable outcome.
pub fn run_algorithm_a_with(
    inst: &Instance,
    matching: &Matching,
    delta: f64,
    exec: Exec,
    mut observe: impl FnMut(&MessageState),
) -> Result<BpResult, BpError> {
    let cap = 2 * inst.edge_count();
    let opts = BpOptions {
        max_iters: cap,
        delta,
        exec,
    };
    let (converged, state, iterations) = iterate(
        inst,
        MessageState::matching_init(inst, matching),
        &opts,
        &mut observe,
    );
    if !converged {
        return Err(BpError::NoFixedPoint(cap));
    }
    let y = dual_from_fixed_point(inst, &state);
    check_stable_pair(inst, &y, matching, DEFAULT_TOL_EQ).map_err(BpError::Unstable)?;
    Ok(BpResult {
        converged,
        fixed_point: state,
        iterations,
        matching: Some(matching.clone()),
        dual: Some(y),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageOrder {
    Equal,
    LessEqual,
    GreaterEqual,
    Incomparable,
}

/// Orders states by: `m <= m_hat` iff `m` is at least `m_hat` on both
/// directions of every matched edge and at most `m_hat` everywhere else.
pub fn message_partial_order(
    inst: &Instance,
    m: &MessageState,
    m_hat: &MessageState,
    matching: &Matching,
    tol: f64,
) -> Result<MessageOrder, BpError> {
    let expected = 2 * inst.edge_count();
    if m.values.len() != expected || m_hat.values.len() != expected {
        return Err(BpError::StateMismatch(m.values.len(), m_hat.values.len()));
    }
    let mut le = true;
    let mut ge = true;
    for (idx, (&a, &b)) in m.values.iter().zip(&m_hat.values).enumerate() {
        let (lo, hi) = if matching.contains_edge(idx / 2) { (b, a) } else { (a, b) };
        // lo <= hi is needed for m <= m_hat, the reverse for m_hat <= m
        if lo > hi + tol {
            le = false;
        }
        if hi > lo + tol {
            ge = false;
        }
    }
    Ok(match (le, ge) {
        (true, true) => MessageOrder::Equal,
        (true, false) => MessageOrder::LessEqual,
        (false, true) => MessageOrder::GreaterEqual,
        (false, false) => MessageOrder::Incomparable,
    })
}

/// Walks backwards from message `from -> to` through the predecessor that
/// attains each maximum, returning `(i_k, ..., i_1, i_0)` with
/// `i_1 = from`, `i_0 = to`.
///
/// Stops at a zero message, at a node with no other neighbour, or when a
/// directed edge repeats. Ties go to the lowest node id.
pub fn critical_path(
    inst: &Instance,
    m_star: &MessageState,
    from: NodeId,
    to: NodeId,
) -> Result<Vec<NodeId>, BpError> {
    let tol = DEFAULT_TOL_EQ;
    if inst.find_edge(from, to).is_none() {
        return Err(InstanceError::UnknownEdge(from + 1, to + 1).into());
    }
    let msg = |a: NodeId, b: NodeId| m_star.get(inst, a, b).unwrap_or(0.0);
    let mut path = vec![to, from];
    let mut seen = HashSet::new();
    seen.insert((from, to));
    loop {
        let k = path.len() - 1;
        let (cur, prev) = (path[k], path[k - 1]);
        if msg(cur, prev) <= tol {
            break;
        }
        let candidates: Vec<(NodeId, f64)> = inst
            .neighbors(cur)
            .iter()
            .filter(|&&(j, _)| j != prev)
            .map(|&(j, _)| (j, msg(j, cur)))
            .collect();
        let Some(mx) = candidates.iter().map(|&(_, x)| x).reduce(f64::max) else {
            break;
        };
        let next = candidates
            .iter()
            .filter(|&&(_, x)| x >= mx - tol)
            .map(|&(j, _)| j)
            .min()
            .expect("non-empty");
        path.push(next);
        if !seen.insert((next, cur)) {
            break;
        }
    }
    path.reverse();
    Ok(path)
}
