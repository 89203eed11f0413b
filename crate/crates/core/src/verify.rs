//! Edge surplus, best alternatives, stability and ε-correct division.
//!
//! Maxima over empty neighbour sets are 0, matching the `(x)_+` floor and
//! the zero earnings of unmatched nodes.

use crate::error::InstanceError;
use crate::instance::{EdgeId, Instance, NodeId, Outcome};

/// `max_{k in N(i) \ exclude} (w_ik - gamma_k)_+`, or 0 when the set is empty.
pub fn best_alternative(
    inst: &Instance,
    gamma: &[f64],
    node: NodeId,
    exclude: Option<NodeId>,
) -> f64 {
    inst.neighbors(node)
        .iter()
        .filter(|&&(k, _)| Some(k) != exclude)
        .map(|&(k, e)| (inst.edge(e).w - gamma[k]).max(0.0))
        .fold(0.0, f64::max)
}

/// Surplus of edge `id`: its weight minus both endpoints' best alternatives.
pub fn edge_surplus(inst: &Instance, gamma: &[f64], id: EdgeId) -> f64 {
    let e = inst.edge(id);
    e.w - best_alternative(inst, gamma, e.u, Some(e.v))
        - best_alternative(inst, gamma, e.v, Some(e.u))
}

/// Surplus of the edge joining `i` and `j`. Negative values mean `gamma`
/// is not stable around the edge.
pub fn surplus(inst: &Instance, gamma: &[f64], i: NodeId, j: NodeId) -> Result<f64, InstanceError> {
    let id = inst
        .find_edge(i, j)
        .ok_or(InstanceError::UnknownEdge(i + 1, j + 1))?;
    Ok(edge_surplus(inst, gamma, id))
}

/// Division residual of matched edge `id` evaluated at both endpoints.
///
/// The two values agree whenever the matched sum holds; the first is the
/// one reported everywhere else.
pub fn endpoint_residuals(inst: &Instance, gamma: &[f64], id: EdgeId) -> (f64, f64) {
    let e = inst.edge(id);
    let alt_u = best_alternative(inst, gamma, e.u, Some(e.v));
    let alt_v = best_alternative(inst, gamma, e.v, Some(e.u));
    let surp = e.w - alt_u - alt_v;
    (
        (gamma[e.u] - alt_u - e.r * surp).abs(),
        (gamma[e.v] - alt_v - (1.0 - e.r) * surp).abs(),
    )
}

#[inline]
pub fn division_residual(inst: &Instance, gamma: &[f64], id: EdgeId) -> f64 {
    endpoint_residuals(inst, gamma, id).0
}

/// Everything wrong with an outcome.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViolationReport {
    /// Unmatched edges with `w - gamma_i - gamma_j > tol`, with that deficit.
    pub stability_violations: Vec<(EdgeId, f64)>,
    /// Unmatched nodes offered more than `tol`, with the best offer.
    pub unmatched_offers: Vec<(NodeId, f64)>,
    /// Division residual of every matched edge.
    pub division_residuals: Vec<(EdgeId, f64)>,
    /// Largest deficit over unmatched edges, clamped below at 0.
    pub max_deficit: f64,
    pub max_residual: f64,
}

impl ViolationReport {
    pub fn is_stable(&self) -> bool {
        self.stability_violations.is_empty() && self.unmatched_offers.is_empty()
    }

    /// Stable and within `eps` of correct division.
    pub fn is_eps_ud(&self, eps: f64) -> bool {
        self.is_stable() && self.max_residual <= eps
    }
}

/// Stability part of the report; division fields are left empty.
pub fn check_stability(inst: &Instance, out: &Outcome, tol: f64) -> ViolationReport {
    stability_report(inst, &out.matching, &out.gamma, tol)
}

/// [`check_stability`] on a bare matching and allocation.
pub fn stability_report(
    inst: &Instance,
    matching: &crate::instance::Matching,
    gamma: &[f64],
    tol: f64,
) -> ViolationReport {
    let mut report = ViolationReport::default();
    for (id, e) in inst.edges().iter().enumerate() {
        if matching.contains_edge(id) {
            continue;
        }
        let deficit = e.w - gamma[e.u] - gamma[e.v];
        report.max_deficit = report.max_deficit.max(deficit);
        if deficit > tol {
            report.stability_violations.push((id, deficit));
        }
    }
    for node in 0..inst.node_count() {
        if matching.is_matched(node) {
            continue;
        }
        let offer = best_alternative(inst, gamma, node, None);
        if offer > tol {
            report.unmatched_offers.push((node, offer));
        }
    }
    report
}

/// Largest division residual over matched edges (0 for an empty matching).
pub fn check_eps_correct_division(inst: &Instance, out: &Outcome) -> f64 {
    out.matching
        .edge_ids()
        .iter()
        .map(|&id| division_residual(inst, &out.gamma, id))
        .fold(0.0, f64::max)
}

/// Full report: stability to `tol` plus every division residual.
pub fn verify(inst: &Instance, out: &Outcome, tol: f64) -> ViolationReport {
    let mut report = check_stability(inst, out, tol);
    report.division_residuals = out
        .matching
        .edge_ids()
        .iter()
        .map(|&id| (id, division_residual(inst, &out.gamma, id)))
        .collect();
    report.max_residual = report
        .division_residuals
        .iter()
        .map(|&(_, r)| r)
        .fold(0.0, f64::max);
    report
}
