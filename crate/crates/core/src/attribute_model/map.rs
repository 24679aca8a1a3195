use super::pair::{check_pair, pair_map, raw_pair_score};
use super::{AttributePosterior, AttributePriorModel, ModelError};

pub const MAX_EXHAUSTIVE_ATTRIBUTES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub assignment: Vec<bool>,
    /// Sum over pairs `i < j` of the log pair score; may be −∞.
    pub objective: f64,
    /// True when the assignment is a certified single-flip local maximum.
    pub converged: bool,
    pub sweeps: usize,
    pub flips: usize,
}

pub trait MapSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, posterior: &AttributePosterior, priors: &AttributePriorModel) -> Result<MapResult, ModelError>;
}

/// Log pair scores, `[s_i][s_j]` per unordered pair, upper triangle row-major.
struct LogScores {
    n: usize,
    table: Vec<[[f64; 2]; 2]>,
}

impl LogScores {
    fn new(posterior: &AttributePosterior, priors: &AttributePriorModel) -> Result<Self, ModelError> {
        let n = priors.len();
        if posterior.len() != n {
            return Err(ModelError::PosteriorLength {
                got: posterior.len(),
                want: n,
            });
        }
        let mut table = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                check_pair(i, j, posterior, priors)?;
                let mut t = [[0.0; 2]; 2];
                for si in [false, true] {
                    for sj in [false, true] {
                        t[si as usize][sj as usize] = raw_pair_score(i, j, si, sj, posterior, priors).ln();
                    }
                }
                table.push(t);
            }
        }
        Ok(LogScores { n, table })
    }

    fn get(&self, i: usize, j: usize, si: bool, sj: bool) -> f64 {
        let n = self.n;
        if i < j {
            self.table[i * (2 * n - i - 1) / 2 + (j - i - 1)][si as usize][sj as usize]
        } else {
            self.table[j * (2 * n - j - 1) / 2 + (i - j - 1)][sj as usize][si as usize]
        }
    }

    /// Terms of the objective involving attribute `k` in state `s`.
    fn local(&self, assignment: &[bool], k: usize, s: bool) -> f64 {
        (0..self.n)
            .filter(|&j| j != k)
            .map(|j| self.get(k, j, s, assignment[j]))
            .sum()
    }

    fn objective(&self, assignment: &[bool]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                total += self.get(i, j, assignment[i], assignment[j]);
            }
        }
        total
    }

    fn is_local_max(&self, assignment: &[bool]) -> bool {
        (0..self.n).all(|k| self.local(assignment, k, !assignment[k]) <= self.local(assignment, k, assignment[k]))
    }
}

/// Log of the product of pair scores over all pairs `i < j`.
pub fn objective(
    assignment: &[bool],
    posterior: &AttributePosterior,
    priors: &AttributePriorModel,
) -> Result<f64, ModelError> {
    Ok(LogScores::new(posterior, priors)?.objective(assignment))
}

/// True when no single flip strictly increases the objective.
pub fn is_local_max(
    assignment: &[bool],
    posterior: &AttributePosterior,
    priors: &AttributePriorModel,
) -> Result<bool, ModelError> {
    Ok(LogScores::new(posterior, priors)?.is_local_max(assignment))
}

/// Iterated conditional modes from the thresholded posteriors. Two
/// attributes form a single factor and are solved exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Icm {
    pub max_sweeps: usize,
}

impl Icm {
    /// Same as [`MapSolver::solve`], also reporting the objective after every
    /// accepted flip.
    pub fn solve_traced(
        &self,
        posterior: &AttributePosterior,
        priors: &AttributePriorModel,
    ) -> Result<(MapResult, Vec<f64>), ModelError> {
        if self.max_sweeps == 0 {
            return Err(ModelError::ZeroSweeps);
        }
        let scores = LogScores::new(posterior, priors)?;
        let mut assignment: Vec<bool> = posterior.values().iter().map(|&p| p >= 0.5).collect();
        let mut trace = vec![scores.objective(&assignment)];
        if scores.n == 2 {
            // a single factor: its argmax is the exact MAP, which single flips can miss
            let best = pair_map(0, 1, posterior, priors)?.state;
            let flips = (assignment[0] != best.0) as usize + (assignment[1] != best.1) as usize;
            assignment = vec![best.0, best.1];
            let objective = scores.objective(&assignment);
            if flips > 0 {
                trace.push(objective);
            }
            let result = MapResult {
                assignment,
                objective,
                converged: true,
                sweeps: 1,
                flips,
            };
            return Ok((result, trace));
        }
        let mut flips = 0;
        let mut sweeps = 0;
        let mut settled = false;
        while sweeps < self.max_sweeps {
            sweeps += 1;
            let mut changed = false;
            for k in 0..scores.n {
                let stay = scores.local(&assignment, k, assignment[k]);
                let flip = scores.local(&assignment, k, !assignment[k]);
                if flip > stay {
                    assignment[k] = !assignment[k];
                    flips += 1;
                    changed = true;
                    trace.push(scores.objective(&assignment));
                }
            }
            if !changed {
                settled = true;
                break;
            }
        }
        let converged = settled || scores.is_local_max(&assignment);
        let result = MapResult {
            objective: scores.objective(&assignment),
            assignment,
            converged,
            sweeps,
            flips,
        };
        Ok((result, trace))
    }
}

impl MapSolver for Icm {
    fn name(&self) -> &'static str {
        "icm"
    }

    fn solve(&self, posterior: &AttributePosterior, priors: &AttributePriorModel) -> Result<MapResult, ModelError> {
        self.solve_traced(posterior, priors).map(|(r, _)| r)
    }
}

pub fn joint_map_icm(
    posterior: &AttributePosterior,
    priors: &AttributePriorModel,
    max_sweeps: usize,
) -> Result<MapResult, ModelError> {
    Icm { max_sweeps }.solve(posterior, priors)
}

/// Exact MAP by enumerating all 2^n assignments. Ties keep the first
/// assignment in enumeration order (bit `k` of the counter is attribute `k`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Exhaustive;

impl MapSolver for Exhaustive {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn solve(&self, posterior: &AttributePosterior, priors: &AttributePriorModel) -> Result<MapResult, ModelError> {
        let n = priors.len();
        if n > MAX_EXHAUSTIVE_ATTRIBUTES {
            return Err(ModelError::TooManyAttributes {
                got: n,
                max: MAX_EXHAUSTIVE_ATTRIBUTES,
            });
        }
        let scores = LogScores::new(posterior, priors)?;
        let mut best: Option<(f64, Vec<bool>)> = None;
        let mut assignment = vec![false; n];
        for mask in 0u32..(1u32 << n) {
            for (k, s) in assignment.iter_mut().enumerate() {
                *s = mask >> k & 1 == 1;
            }
            let value = scores.objective(&assignment);
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, assignment.clone()));
            }
        }
        let (objective, assignment) = best.expect("at least one assignment");
        Ok(MapResult {
            converged: true,
            objective,
            assignment,
            sweeps: 0,
            flips: 0,
        })
    }
}
