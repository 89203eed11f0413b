//! Exhaustive references for small instances.
//!
//! Vertices of the fractional matching polytope are half-integral: the
//! edges at 1/2 form node-disjoint odd cycles and the edges at 1 form a
//! matching avoiding those cycles. Enumerating these structures gives the
//! exact LP optimum without a general LP solver.

use crate::error::OracleError;
use crate::instance::{EdgeId, Instance, Matching, NodeId, Outcome};
use crate::verify;
use crate::DEFAULT_TOL_EQ;

pub const DEFAULT_EDGE_CAP: usize = 24;

/// A vertex of the fractional matching polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct LpVertex {
    /// Edges at value 1, increasing.
    pub full: Vec<EdgeId>,
    /// Edges at value 1/2, increasing.
    pub half: Vec<EdgeId>,
    pub objective: f64,
}

impl LpVertex {
    pub fn is_integral(&self) -> bool {
        self.half.is_empty()
    }

    fn support(&self) -> Vec<EdgeId> {
        let mut s: Vec<EdgeId> = self.full.iter().chain(&self.half).copied().collect();
        s.sort_unstable();
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MwmReport {
    pub weight: f64,
    /// Every maximum-weight matching, in enumeration order.
    pub matchings: Vec<Matching>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub best_matching_weight: f64,
    /// Second entry of the sorted list of matching weights (ties count).
    pub second_best_corner_weight: f64,
    /// `best - second`, over matchings only.
    pub g: f64,
    /// False when two matchings tie for the maximum.
    pub unique: bool,
    /// LP optimum minus the runner-up over all half-integral vertices.
    /// Equals `g` on bipartite graphs and can only be smaller elsewhere.
    pub polytope_gap: f64,
}

/// Brute-force reference bounded by an edge cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oracle {
    pub edge_cap: usize,
    pub tol_eq: f64,
}

impl Default for Oracle {
    fn default() -> Self {
        Self {
            edge_cap: DEFAULT_EDGE_CAP,
            tol_eq: DEFAULT_TOL_EQ,
        }
    }
}

struct Enumerator<'a> {
    inst: &'a Instance,
    covered: Vec<bool>,
    full: Vec<EdgeId>,
    half: Vec<EdgeId>,
    cycles: bool,
}

impl<'a> Enumerator<'a> {
    fn new(inst: &'a Instance, cycles: bool) -> Self {
        Self {
            inst,
            covered: vec![false; inst.node_count()],
            full: Vec::new(),
            half: Vec::new(),
            cycles,
        }
    }

    /// Visits every structure once, deciding nodes in increasing order.
    fn run(&mut self, node: NodeId, value: f64, visit: &mut dyn FnMut(&[EdgeId], &[EdgeId], f64)) {
        let n = self.inst.node_count();
        let mut v = node;
        while v < n && self.covered[v] {
            v += 1;
        }
        if v == n {
            visit(&self.full, &self.half, value);
            return;
        }
        // v left exposed
        self.covered[v] = true;
        self.run(v + 1, value, visit);

        let inst = self.inst;
        for &(u, id) in inst.neighbors(v) {
            if self.covered[u] {
                continue;
            }
            self.covered[u] = true;
            self.full.push(id);
            self.run(v + 1, value + inst.edge(id).w, visit);
            self.full.pop();
            self.covered[u] = false;
        }

        if self.cycles {
            let mut path = vec![v];
            let mut path_edges = Vec::new();
            self.cycles_from(v, &mut path, &mut path_edges, value, visit);
        }
        self.covered[v] = false;
    }

    /// Extends a simple path from `start` through uncovered nodes above it
    /// and closes every odd cycle with `start` as its smallest node.
    fn cycles_from(
        &mut self,
        start: NodeId,
        path: &mut Vec<NodeId>,
        path_edges: &mut Vec<EdgeId>,
        value: f64,
        visit: &mut dyn FnMut(&[EdgeId], &[EdgeId], f64),
    ) {
        let last = *path.last().unwrap();
        if path.len() >= 3 && path.len() % 2 == 1 && path[1] < last {
            if let Some(close) = self.inst.find_edge(last, start) {
                let added = path_edges.len() + 1;
                let mut cycle_weight = self.inst.edge(close).w;
                self.half.push(close);
                for &e in path_edges.iter() {
                    self.half.push(e);
                    cycle_weight += self.inst.edge(e).w;
                }
                self.run(start + 1, value + cycle_weight / 2.0, visit);
                self.half.truncate(self.half.len() - added);
            }
        }
        let inst = self.inst;
        for &(next, id) in inst.neighbors(last) {
            if next <= start || self.covered[next] {
                continue;
            }
            self.covered[next] = true;
            path.push(next);
            path_edges.push(id);
            self.cycles_from(start, path, path_edges, value, visit);
            path_edges.pop();
            path.pop();
            self.covered[next] = false;
        }
    }
}

impl Oracle {
    fn check_cap(&self, inst: &Instance) -> Result<(), OracleError> {
        if inst.edge_count() > self.edge_cap {
            return Err(OracleError::CapExceeded {
                edges: inst.edge_count(),
                cap: self.edge_cap,
            });
        }
        Ok(())
    }

    /// Calls `visit(edges, weight)` for every matching, including the empty one.
    pub fn for_each_matching(
        &self,
        inst: &Instance,
        mut visit: impl FnMut(&[EdgeId], f64),
    ) -> Result<(), OracleError> {
        self.check_cap(inst)?;
        Enumerator::new(inst, false).run(0, 0.0, &mut |full, _, value| visit(full, value));
        Ok(())
    }

    pub fn brute_force_mwm(&self, inst: &Instance) -> Result<MwmReport, OracleError> {
        let mut best = f64::NEG_INFINITY;
        let mut winners: Vec<Vec<EdgeId>> = Vec::new();
        let tol = self.tol_eq;
        self.for_each_matching(inst, |edges, w| {
            if w > best + tol {
                best = w;
                winners.clear();
                winners.push(edges.to_vec());
            } else if w >= best - tol {
                best = best.max(w);
                winners.push(edges.to_vec());
            }
        })?;
        // drop early entries that a later, heavier matching pushed out of the tie window
        let matchings = winners
            .into_iter()
            .filter(|edges| edges.iter().map(|&e| inst.edge(e).w).sum::<f64>() >= best - tol)
            .map(|edges| {
                Matching::from_edge_ids(inst, edges).expect("enumerated matchings are valid")
            })
            .collect();
        Ok(MwmReport {
            weight: best,
            matchings,
        })
    }

    /// Exact optimum of the fractional matching LP with one optimal vertex.
    ///
    /// Ties prefer integral vertices, then the lexicographically smallest
    /// support.
    pub fn fractional_lp_optimum(&self, inst: &Instance) -> Result<LpVertex, OracleError> {
        self.check_cap(inst)?;
        let tol = self.tol_eq;
        let mut best: Option<LpVertex> = None;
        Enumerator::new(inst, true).run(0, 0.0, &mut |full, half, value| {
            let replace = match &best {
                None => true,
                Some(b) if value > b.objective + tol => true,
                Some(b) if value >= b.objective - tol => {
                    let integral = half.is_empty();
                    if integral != b.is_integral() {
                        integral
                    } else {
                        let mut support: Vec<EdgeId> = full.iter().chain(half).copied().collect();
                        support.sort_unstable();
                        support < b.support()
                    }
                }
                Some(_) => false,
            };
            if replace {
                let mut full = full.to_vec();
                let mut half = half.to_vec();
                full.sort_unstable();
                half.sort_unstable();
                best = Some(LpVertex {
                    full,
                    half,
                    objective: value,
                });
            }
        });
        Ok(best.expect("the zero vertex always exists"))
    }

    /// Stable outcomes exist iff this holds.
    pub fn has_integral_optimum(&self, inst: &Instance) -> Result<bool, OracleError> {
        let mwm = self.brute_force_mwm(inst)?;
        let lp = self.fractional_lp_optimum(inst)?;
        Ok(mwm.weight >= lp.objective - self.tol_eq)
    }

    pub fn lp_gap(&self, inst: &Instance) -> Result<GapReport, OracleError> {
        let mut top = [f64::NEG_INFINITY; 2];
        let mut count = 0usize;
        self.for_each_matching(inst, |_, w| {
            count += 1;
            push_top2(&mut top, w);
        })?;
        let best = top[0];
        let second = if count >= 2 { top[1] } else { 0.0 };
        let g = (best - second).max(0.0);

        let mut vtop = [f64::NEG_INFINITY; 2];
        let mut vcount = 0usize;
        Enumerator::new(inst, true).run(0, 0.0, &mut |_, _, value| {
            vcount += 1;
            push_top2(&mut vtop, value);
        });
        let polytope_gap = if vcount >= 2 {
            (vtop[0] - vtop[1]).max(0.0)
        } else {
            vtop[0]
        };
        Ok(GapReport {
            best_matching_weight: best,
            second_best_corner_weight: second,
            g,
            unique: count < 2 || g > self.tol_eq,
            polytope_gap,
        })
    }

    /// Stable to `tol` and division residual at most `tol`.
    pub fn exact_ud_check(&self, inst: &Instance, out: &Outcome, tol: f64) -> bool {
        verify::verify(inst, out, tol).is_eps_ud(tol)
    }
}

fn push_top2(top: &mut [f64; 2], w: f64) {
    if w > top[0] {
        top[1] = top[0];
        top[0] = w;
    } else if w > top[1] {
        top[1] = w;
    }
}

pub fn brute_force_mwm(inst: &Instance) -> Result<MwmReport, OracleError> {
    Oracle::default().brute_force_mwm(inst)
}

pub fn fractional_lp_optimum(inst: &Instance) -> Result<LpVertex, OracleError> {
    Oracle::default().fractional_lp_optimum(inst)
}

pub fn has_integral_optimum(inst: &Instance) -> Result<bool, OracleError> {
    Oracle::default().has_integral_optimum(inst)
}

pub fn lp_gap(inst: &Instance) -> Result<GapReport, OracleError> {
    Oracle::default().lp_gap(inst)
}

pub fn exact_ud_check(inst: &Instance, out: &Outcome, tol: f64) -> bool {
    Oracle::default().exact_ud_check(inst, out, tol)
}
