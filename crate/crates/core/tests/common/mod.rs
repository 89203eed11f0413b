#![allow(dead_code)]

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use udbargain::instance::{generate_random_bipartite, BipartiteParams};
use udbargain::oracle::{self, DEFAULT_EDGE_CAP};
use udbargain::{Edge, Instance, Matching};

pub fn path() -> Instance {
    Instance::new(
        3,
        vec![
            Edge { u: 0, v: 1, w: 1.0, r: 0.5 },
            Edge { u: 1, v: 2, w: 0.6, r: 0.5 },
        ],
    )
    .unwrap()
}

pub fn triangle() -> Instance {
    Instance::new(
        3,
        vec![
            Edge { u: 0, v: 1, w: 1.0, r: 0.5 },
            Edge { u: 1, v: 2, w: 1.0, r: 0.5 },
            Edge { u: 0, v: 2, w: 1.0, r: 0.5 },
        ],
    )
    .unwrap()
}

/// Seeded random bipartite instances with at most 16 nodes, unit bound and
/// at most `DEFAULT_EDGE_CAP` edges. Draws that break the edge budget or
/// come out empty are skipped, so the stream is still deterministic.
pub fn bipartite_suite(count: usize, stream: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let params = BipartiteParams {
            n_left: rng.gen_range(2..=8),
            n_right: rng.gen_range(2..=8),
            density: rng.gen_range(0.25..=0.7),
            max_weight: 1.0,
            r_min: 0.05,
            r_max: 0.95,
            seed: rng.gen(),
        };
        let inst = generate_random_bipartite(&params).unwrap();
        if inst.edge_count() == 0 || inst.edge_count() > DEFAULT_EDGE_CAP {
            continue;
        }
        out.push(inst);
    }
    out
}

/// Bipartite instances whose best matching beats every other by `min_gap`.
pub fn unique_optimum_suite(count: usize, stream: u64, min_gap: f64) -> Vec<(Instance, f64)> {
    let mut out = Vec::with_capacity(count);
    let mut batch = stream;
    while out.len() < count {
        for inst in bipartite_suite(64, batch) {
            let gap = oracle::lp_gap(&inst).unwrap();
            if gap.unique && gap.g >= min_gap && out.len() < count {
                out.push((inst, gap.g));
            }
        }
        batch += 1;
    }
    out
}

/// A heavy odd cycle with light pendant edges and occasional light chords.
/// Only draws whose fractional LP optimum beats every matching are kept.
pub fn odd_cycle_dominant(count: usize, stream: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let len = [3usize, 5, 7, 9][rng.gen_range(0..4)];
        let mut edges = Vec::new();
        for i in 0..len {
            edges.push(Edge {
                u: i,
                v: (i + 1) % len,
                w: rng.gen_range(0.7..=1.0),
                r: rng.gen_range(0.05..=0.95),
            });
        }
        let mut n = len;
        for i in 0..len {
            if rng.gen_bool(0.4) {
                edges.push(Edge {
                    u: i,
                    v: n,
                    w: rng.gen_range(0.01..=0.3),
                    r: rng.gen_range(0.05..=0.95),
                });
                n += 1;
            }
        }
        if len >= 5 && rng.gen_bool(0.5) {
            let a = rng.gen_range(0..len);
            let b = (a + 2) % len;
            edges.push(Edge {
                u: a.min(b),
                v: a.max(b),
                w: rng.gen_range(0.01..=0.3),
                r: 0.5,
            });
        }
        let inst = Instance::new(n, edges).unwrap();
        if inst.edge_count() > DEFAULT_EDGE_CAP {
            continue;
        }
        let mwm = oracle::brute_force_mwm(&inst).unwrap();
        let lp = oracle::fractional_lp_optimum(&inst).unwrap();
        if lp.objective > mwm.weight + 1e-6 {
            out.push(inst);
        }
    }
    out
}

/// Greedy maximal matching over a shuffled edge order.
pub fn random_matching(inst: &Instance, rng: &mut impl Rng) -> Matching {
    let mut ids: Vec<usize> = (0..inst.edge_count()).collect();
    ids.shuffle(rng);
    let mut used = vec![false; inst.node_count()];
    let mut picked = Vec::new();
    for id in ids {
        let e = inst.edge(id);
        if !used[e.u] && !used[e.v] {
            used[e.u] = true;
            used[e.v] = true;
            picked.push(id);
        }
    }
    Matching::from_edge_ids(inst, picked).unwrap()
}

/// Uniform split of every matched edge, zero elsewhere.
pub fn random_allocation(inst: &Instance, matching: &Matching, rng: &mut impl Rng) -> Vec<f64> {
    let mut gamma = vec![0.0; inst.node_count()];
    for &id in matching.edge_ids() {
        let e = inst.edge(id);
        let share = rng.gen_range(0.0..=e.w);
        gamma[e.u] = share;
        gamma[e.v] = e.w - share;
    }
    gamma
}

/// Erdos-Renyi graph with unit bound, used where bipartiteness is not needed.
pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Instance {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push(Edge {
                    u,
                    v,
                    w: 1.0 - rng.gen::<f64>(),
                    r: rng.gen_range(0.05..=0.95),
                });
            }
        }
    }
    Instance::new(n, edges).unwrap()
}
