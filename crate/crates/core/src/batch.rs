//! Solving many instances at once.

use crate::error::SolveError;
use crate::exec::Exec;
use crate::instance::Instance;
use crate::rebalance::{solve, SolveConfig, SolveResult};

/// Solves every instance with `cfg`, fanning the jobs out under
/// [`Exec::Parallel`]. Results come back in input order and do not depend
/// on the mode. Each job runs its own inner loops sequentially.
pub fn solve_all(instances: &[Instance], cfg: &SolveConfig, exec: Exec) -> Vec<Result<SolveResult, SolveError>> {
    let inner = SolveConfig {
        exec: Exec::Sequential,
        ..*cfg
    };
    exec.map_jobs(instances, |inst| solve(inst, &inner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_random_bipartite, BipartiteParams};

    #[test]
    fn modes_agree() {
        let instances: Vec<Instance> = (0..12)
            .map(|seed| {
                generate_random_bipartite(&BipartiteParams {
                    seed,
                    ..Default::default()
                })
                .unwrap()
            })
            .collect();
        let cfg = SolveConfig::with_epsilon(1e-3);
        let seq = solve_all(&instances, &cfg, Exec::Sequential);
        let par = solve_all(&instances, &cfg, Exec::Parallel);
        assert_eq!(seq, par);
        assert_eq!(seq.len(), 12);
    }
}
