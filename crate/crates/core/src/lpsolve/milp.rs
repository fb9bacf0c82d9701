//! Exact branch-and-bound over binary columns.
//!
//! Best-bound node selection with deterministic tie-breaking by node id,
//! most-fractional branching with lowest-index ties. No heuristic gap: a
//! node is pruned only when its relaxation bound cannot improve the
//! incumbent beyond roundoff.

use super::{simplex, LpSolution, LpStatus, MixedProgram, SolverConfig, SolverError};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct Node {
    bound: f64,
    fixes: Vec<(usize, f64)>,
}

struct Key {
    bound: f64,
    id: u64,
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    // BinaryHeap is a max-heap; invert so the smallest bound pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Solve a mixed-binary program to exact optimality.
pub fn solve_milp(mp: &MixedProgram, cfg: &SolverConfig) -> Result<LpSolution, SolverError> {
    solve_milp_warm(mp, cfg, None)
}

/// Like [`solve_milp`] but seeded with a known feasible solution used as the
/// initial incumbent, which keeps restarts deterministic.
pub fn solve_milp_warm(
    mp: &MixedProgram,
    cfg: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<LpSolution, SolverError> {
    let mut base = mp.lp.clone();
    for &j in &mp.binaries {
        let (l, u) = base.bounds(j);
        base.set_bounds(j, l.max(0.0), u.min(1.0));
    }

    let mut incumbent: Option<LpSolution> = None;
    if let Some(x0) = warm {
        let mut fixed = base.clone();
        for &j in &mp.binaries {
            let v = x0[j].round().clamp(0.0, 1.0);
            fixed.set_bounds(j, v, v);
        }
        let sol = simplex::solve(&fixed, cfg)?;
        if sol.status == LpStatus::Optimal {
            incumbent = Some(sol);
        }
    }

    let root = simplex::solve(&base, cfg)?;
    match root.status {
        LpStatus::Infeasible => return Ok(LpSolution::non_optimal(LpStatus::Infeasible)),
        LpStatus::Unbounded => return Ok(LpSolution::non_optimal(LpStatus::Unbounded)),
        LpStatus::Optimal => {}
    }

    let mut heap: BinaryHeap<Key> = BinaryHeap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut solved: Vec<Option<LpSolution>> = Vec::new();
    nodes.push(Node {
        bound: root.objective,
        fixes: Vec::new(),
    });
    solved.push(Some(root));
    heap.push(Key {
        bound: nodes[0].bound,
        id: 0,
    });

    let mut explored = 0usize;
    let prune_eps = |inc: f64| 1e-9 * (1.0 + inc.abs());

    while let Some(key) = heap.pop() {
        if let Some(ref inc) = incumbent {
            if key.bound >= inc.objective - prune_eps(inc.objective) {
                break; // best-bound order: everything left is no better
            }
        }
        explored += 1;
        if explored > cfg.node_limit {
            return Err(SolverError::NodeLimit {
                best_bound: key.bound,
            });
        }
        let idx = key.id as usize;
        let sol = match solved[idx].take() {
            Some(s) => s,
            None => {
                let mut lp = base.clone();
                for &(j, v) in &nodes[idx].fixes {
                    lp.set_bounds(j, v, v);
                }
                let s = simplex::solve(&lp, cfg)?;
                if s.status != LpStatus::Optimal {
                    continue;
                }
                s
            }
        };
        if let Some(ref inc) = incumbent {
            if sol.objective >= inc.objective - prune_eps(inc.objective) {
                continue;
            }
        }

        // most fractional binary, lowest index on ties
        let mut branch: Option<(usize, f64)> = None;
        for &j in &mp.binaries {
            let v = sol.x[j];
            let frac = (v - v.round()).abs();
            if frac > cfg.int_tol {
                let score = 0.5 - (v.fract().abs() - 0.5).abs();
                match branch {
                    Some((_, best)) if score <= best => {}
                    _ => branch = Some((j, score)),
                }
            }
        }

        match branch {
            None => {
                let better = incumbent
                    .as_ref()
                    .map(|inc| sol.objective < inc.objective)
                    .unwrap_or(true);
                if better {
                    incumbent = Some(sol);
                }
            }
            Some((j, _)) => {
                for v in [0.0, 1.0] {
                    let mut fixes = nodes[idx].fixes.clone();
                    fixes.push((j, v));
                    let id = nodes.len() as u64;
                    nodes.push(Node {
                        bound: sol.objective,
                        fixes,
                    });
                    solved.push(None);
                    heap.push(Key {
                        bound: sol.objective,
                        id,
                    });
                }
            }
        }
    }

    match incumbent {
        Some(sol) => Ok(sol),
        None => Ok(LpSolution::non_optimal(LpStatus::Infeasible)),
    }
}
