//! Instance generators: the adversarial ring and seeded random bipartite graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Edge, EdgeId, Instance, Matching, Outcome};
use crate::error::InstanceError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingParams {
    /// Number of 8-node blocks; the ring has `8 * blocks` nodes.
    pub blocks: usize,
    /// Lower end of the split-fraction range, strictly inside (0, 1/2).
    pub r: f64,
    /// Extra nodes appended as a disjoint dummy component.
    pub pad: usize,
}

impl RingParams {
    pub fn new(blocks: usize, r: f64) -> Self {
        Self { blocks, r, pad: 0 }
    }

    /// Largest ring that fits in `nodes >= 8` nodes, padded up to exactly `nodes`.
    pub fn for_node_count(nodes: usize, r: f64) -> Self {
        Self {
            blocks: nodes / 8,
            r,
            pad: nodes % 8,
        }
    }
}

/// A ring instance together with its near-balanced but unstable outcome.
#[derive(Debug, Clone)]
pub struct RingInstance {
    pub instance: Instance,
    /// Outcome on the alternating matching {(1,2),(3,4),...} whose only
    /// division error sits next to the reflection point and which violates
    /// stability on the far side of the ring.
    pub bad_outcome: Outcome,
    /// `(1 - r) / r`.
    pub beta: f64,
    /// Common edge weight `1 + 2 / (beta - 1)`.
    pub weight: f64,
    /// `beta^-(blocks - 1)`: the division residual of `bad_outcome` is at most this.
    pub eps_prime: f64,
    /// Edge between nodes `6N` and `6N + 1` (1-based) where stability fails by 1.
    pub bad_edge: EdgeId,
}

impl RingInstance {
    /// The outcome where every matched node earns `W / 2`, an exact solution.
    pub fn balanced_outcome(&self) -> Outcome {
        let gamma = (0..self.instance.node_count())
            .map(|i| {
                if self.bad_outcome.matching.is_matched(i) {
                    self.weight / 2.0
                } else {
                    0.0
                }
            })
            .collect();
        Outcome {
            gamma,
            matching: self.bad_outcome.matching.clone(),
        }
    }

    /// `floor(1 / (4 eps'))`: fewest damped steps before the bad edge can
    /// become (1/2)-stable.
    pub fn slow_progress_bound(&self) -> u64 {
        (1.0 / (4.0 * self.eps_prime)).floor() as u64
    }
}

pub fn generate_ring(params: RingParams) -> Result<RingInstance, InstanceError> {
    let RingParams { blocks, r, pad } = params;
    if blocks == 0 {
        return Err(InstanceError::Parameter("ring needs at least one block".into()));
    }
    if !(r > 0.0 && r < 0.5) {
        return Err(InstanceError::Parameter(format!(
            "ring split fraction {r} outside (0, 1/2)"
        )));
    }
    let n_ring = 8 * blocks;
    let big_n = blocks;
    let beta = (1.0 - r) / r;
    let weight = 1.0 + 2.0 / (beta - 1.0);
    // 1-based reflection of the second half onto the first.
    let reflect = |l: usize| 8 * big_n - l + 1;

    // Fraction owned by the odd (first) endpoint of matched edge (2k-1, 2k), 1-based.
    let mut odd_share = vec![0.0; n_ring + 1];
    for odd in (1..n_ring).step_by(2) {
        odd_share[odd] = if odd < 2 * big_n {
            r
        } else if odd < 4 * big_n {
            1.0 - r
        } else {
            let image = reflect(odd);
            // image is the even endpoint of a first-half edge
            if image <= 2 * big_n {
                1.0 - r
            } else {
                r
            }
        };
    }

    let mut edges = Vec::with_capacity(n_ring + pad / 2);
    for i in 1..n_ring {
        let share = if i % 2 == 1 { odd_share[i] } else { 0.5 };
        edges.push(Edge {
            u: i - 1,
            v: i,
            w: weight,
            r: share,
        });
    }
    edges.push(Edge {
        u: 0,
        v: n_ring - 1,
        w: weight,
        r: 0.5,
    });
    let node_count = n_ring + pad;
    for k in 0..pad / 2 {
        edges.push(Edge {
            u: n_ring + 2 * k,
            v: n_ring + 2 * k + 1,
            w: weight,
            r: 0.5,
        });
    }
    let instance = Instance::with_bound(node_count, weight, edges)?;

    let mut gamma1 = vec![0.0; n_ring + 1];
    for i in 0..big_n {
        let value =
            weight / 2.0 + 0.5 + (1.0 - beta.powi(-(i as i32))) / (beta - 1.0);
        let even = 2 * (big_n - i);
        let odd = 2 * (big_n + i) + 1;
        gamma1[even] = value;
        gamma1[even - 1] = weight - value;
        gamma1[odd] = value;
        gamma1[odd + 1] = weight - value;
    }
    for l in 4 * big_n + 1..=n_ring {
        gamma1[l] = weight - gamma1[reflect(l)];
    }
    let mut gamma: Vec<f64> = gamma1[1..].to_vec();
    gamma.resize(node_count, 0.0);

    let mut matched: Vec<EdgeId> = (0..n_ring / 2).map(|k| 2 * k).collect();
    let mut pad_gamma = Vec::new();
    for k in 0..pad / 2 {
        matched.push(n_ring + k);
        pad_gamma.push((n_ring + 2 * k, n_ring + 2 * k + 1));
    }
    for (a, b) in pad_gamma {
        gamma[a] = weight / 2.0;
        gamma[b] = weight / 2.0;
    }
    let matching = Matching::from_edge_ids(&instance, matched)?;
    let bad_outcome = Outcome::new(&instance, gamma, matching)?;

    Ok(RingInstance {
        instance,
        bad_outcome,
        beta,
        weight,
        eps_prime: beta.powi(-((big_n - 1) as i32)),
        bad_edge: 6 * big_n - 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteParams {
    pub n_left: usize,
    pub n_right: usize,
    /// Probability that each left-right pair is an edge.
    pub density: f64,
    pub max_weight: f64,
    /// Split fractions are uniform on `[r_min, r_max]`.
    pub r_min: f64,
    pub r_max: f64,
    pub seed: u64,
}

impl Default for BipartiteParams {
    fn default() -> Self {
        Self {
            n_left: 4,
            n_right: 4,
            density: 0.5,
            max_weight: 1.0,
            r_min: 0.2,
            r_max: 0.8,
            seed: 0,
        }
    }
}

/// Left nodes come first, then right nodes; every edge is listed left to
/// right. Weights are i.i.d. uniform on `(0, max_weight]`.
pub fn generate_random_bipartite(p: &BipartiteParams) -> Result<Instance, InstanceError> {
    if p.n_left == 0 || p.n_right == 0 {
        return Err(InstanceError::Parameter("both sides need a node".into()));
    }
    if !(p.density > 0.0 && p.density <= 1.0) {
        return Err(InstanceError::Parameter(format!(
            "density {} outside (0, 1]",
            p.density
        )));
    }
    if !(p.max_weight.is_finite() && p.max_weight > 0.0) {
        return Err(InstanceError::Parameter(format!(
            "max weight {} must be positive",
            p.max_weight
        )));
    }
    if !(p.r_min > 0.0 && p.r_min <= p.r_max && p.r_max < 1.0) {
        return Err(InstanceError::Parameter(format!(
            "split range [{}, {}] not inside (0, 1)",
            p.r_min, p.r_max
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut edges = Vec::new();
    for a in 0..p.n_left {
        for b in 0..p.n_right {
            let keep: f64 = rng.gen();
            let u: f64 = rng.gen();
            let r = if p.r_min == p.r_max {
                p.r_min
            } else {
                rng.gen_range(p.r_min..=p.r_max)
            };
            if keep < p.density {
                edges.push(Edge {
                    u: a,
                    v: p.n_left + b,
                    w: p.max_weight * (1.0 - u),
                    r,
                });
            }
        }
    }
    Instance::with_bound(p.n_left + p.n_right, p.max_weight, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn ring_two_blocks() {
        let ring = generate_ring(RingParams::new(2, 1.0 / 3.0)).unwrap();
        let g = &ring.bad_outcome.gamma;
        assert_eq!(ring.instance.node_count(), 16);
        assert_eq!(ring.instance.edge_count(), 16);
        assert!((ring.weight - 3.0).abs() < TOL);
        assert!((ring.eps_prime - 0.5).abs() < TOL);
        // 1-based nodes 4,2,1,16
        assert!((g[3] - 2.0).abs() < TOL);
        assert!((g[1] - 2.5).abs() < TOL);
        assert!((g[0] - 0.5).abs() < TOL);
        assert!((g[15] - 2.5).abs() < TOL);
        // gamma_4 + gamma_5 = W + 1, gamma_12 + gamma_13 = W - 1
        assert!((g[3] + g[4] - 4.0).abs() < TOL);
        assert!((g[11] + g[12] - 2.0).abs() < TOL);
        let bad = ring.instance.edge(ring.bad_edge);
        assert_eq!((bad.u, bad.v), (11, 12));
        assert_eq!(ring.slow_progress_bound(), 0);
    }

    #[test]
    fn ring_fractions_follow_reflection() {
        let r = 0.3;
        let ring = generate_ring(RingParams::new(3, r)).unwrap();
        let inst = &ring.instance;
        let n = 24;
        for k in 0..n / 2 {
            let e = inst.edge(2 * k);
            assert_eq!((e.u, e.v), (2 * k, 2 * k + 1));
            // mirrored edge (R(2k+2), R(2k+1)) in 1-based terms
            let mirror = inst.edge(n - 2 * k - 2);
            assert!((e.r - (1.0 - mirror.r)).abs() < TOL, "k={k}");
            assert!(e.r == r || (e.r - (1.0 - r)).abs() < TOL);
        }
        for e in inst.edges().iter().skip(1).step_by(2) {
            assert_eq!(e.r, 0.5);
        }
    }

    #[test]
    fn ring_padding() {
        let ring = generate_ring(RingParams::for_node_count(13, 0.25)).unwrap();
        assert_eq!(ring.instance.node_count(), 13);
        assert_eq!(ring.instance.edge_count(), 10);
        assert_eq!(ring.bad_outcome.matching.len(), 6);
        assert_eq!(ring.bad_outcome.gamma[12], 0.0);
        assert!((ring.bad_outcome.gamma[8] - ring.weight / 2.0).abs() < TOL);
    }

    #[test]
    fn ring_rejects_bad_parameters() {
        assert!(generate_ring(RingParams::new(0, 0.3)).is_err());
        assert!(generate_ring(RingParams::new(2, 0.5)).is_err());
        assert!(generate_ring(RingParams::new(2, 0.0)).is_err());
    }

    #[test]
    fn bipartite_single_edge() {
        for seed in 0..5 {
            let inst = generate_random_bipartite(&BipartiteParams {
                n_left: 1,
                n_right: 1,
                density: 1.0,
                seed,
                ..Default::default()
            })
            .unwrap();
            assert_eq!(inst.edge_count(), 1);
            let e = inst.edge(0);
            assert!(e.w > 0.0 && e.w <= 1.0);
            assert!((0.2..=0.8).contains(&e.r));
        }
    }

    #[test]
    fn bipartite_is_deterministic() {
        let p = BipartiteParams {
            n_left: 3,
            n_right: 3,
            density: 1.0,
            seed: 7,
            ..Default::default()
        };
        let a = generate_random_bipartite(&p).unwrap();
        let b = generate_random_bipartite(&p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edge_count(), 9);
        assert!(a.is_bipartite());
        let c = generate_random_bipartite(&BipartiteParams { seed: 8, ..p }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bipartite_rejects_bad_parameters() {
        let base = BipartiteParams::default();
        for p in [
            BipartiteParams { n_left: 0, ..base },
            BipartiteParams { density: 0.0, ..base },
            BipartiteParams { density: 1.5, ..base },
            BipartiteParams { max_weight: -1.0, ..base },
            BipartiteParams { r_min: 0.9, r_max: 0.1, ..base },
            BipartiteParams { r_max: 1.0, ..base },
        ] {
            assert!(generate_random_bipartite(&p).is_err(), "{p:?}");
        }
    }
}
