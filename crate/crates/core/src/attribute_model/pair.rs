use super::{AttributePosterior, AttributePriorModel, ModelError};

pub(super) fn check_pair(
    i: usize,
    j: usize,
    posterior: &AttributePosterior,
    priors: &AttributePriorModel,
) -> Result<(), ModelError> {
    let len = priors.len();
    if posterior.len() != len {
        return Err(ModelError::PosteriorLength {
            got: posterior.len(),
            want: len,
        });
    }
    for index in [i, j] {
        if index >= len {
            return Err(ModelError::Index { index, len });
        }
        let value = priors.marginal(index);
        if !(value > 0.0 && value < 1.0) {
            return Err(ModelError::DegenerateMarginal { index, value });
        }
    }
    if i == j {
        return Err(ModelError::SelfPair(i));
    }
    Ok(())
}

/// Unchecked pair score; callers validate indices and marginals.
pub(super) fn raw_pair_score(
    i: usize,
    j: usize,
    si: bool,
    sj: bool,
    posterior: &AttributePosterior,
    priors: &AttributePriorModel,
) -> f64 {
    let ratio_i = posterior.state_prob(i, si) / priors.state_prob(i, si);
    let ratio_j = posterior.state_prob(j, sj) / priors.state_prob(j, sj);
    ratio_i * ratio_j * priors.joint(i, j)[si as usize][sj as usize]
}

/// Unnormalized score of configuration `(s_i, s_j)`.
pub fn pair_score(
    i: usize,
    j: usize,
    si: bool,
    sj: bool,
    posterior: &AttributePosterior,
    priors: &AttributePriorModel,
) -> Result<f64, ModelError> {
    check_pair(i, j, posterior, priors)?;
    Ok(raw_pair_score(i, j, si, sj, posterior, priors))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMap {
    pub state: (bool, bool),
    /// Normalized over the four states, indexed `[s_i][s_j]`.
    pub distribution: [[f64; 2]; 2],
}

/// States in tie-break order: true before false, `i` decided before `j`.
pub(super) const PAIR_STATES: [(bool, bool); 4] = [(true, true), (true, false), (false, true), (false, false)];

/// Normalizes the four scores of `(i, j)` and picks the most probable state.
pub fn pair_map(
    i: usize,
    j: usize,
    posterior: &AttributePosterior,
    priors: &AttributePriorModel,
) -> Result<PairMap, ModelError> {
    check_pair(i, j, posterior, priors)?;
    let mut scores = [[0.0; 2]; 2];
    for (si, sj) in PAIR_STATES {
        scores[si as usize][sj as usize] = raw_pair_score(i, j, si, sj, posterior, priors);
    }
    normalize_pair(i, j, scores)
}

pub(super) fn normalize_pair(i: usize, j: usize, scores: [[f64; 2]; 2]) -> Result<PairMap, ModelError> {
    let total: f64 = scores.iter().flatten().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(ModelError::DegeneratePair(i, j));
    }
    let mut distribution = [[0.0; 2]; 2];
    let mut best = PAIR_STATES[0];
    for (si, sj) in PAIR_STATES {
        distribution[si as usize][sj as usize] = scores[si as usize][sj as usize] / total;
        if scores[si as usize][sj as usize] > scores[best.0 as usize][best.1 as usize] {
            best = (si, sj);
        }
    }
    Ok(PairMap {
        state: best,
        distribution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(m_i: f64, m_j: f64, joint: [[f64; 2]; 2]) -> AttributePriorModel {
        AttributePriorModel::new(vec!["i".into(), "j".into()], vec![m_i, m_j], vec![joint]).unwrap()
    }

    // joint(1,1)=0.4, joint(1,0)=0.1, joint(0,1)=0.1, joint(0,0)=0.4 keeps both marginals at 0.5
    fn worked_priors() -> AttributePriorModel {
        two(0.5, 0.5, [[0.4, 0.1], [0.1, 0.4]])
    }

    #[test]
    fn worked_example() {
        let post = AttributePosterior::new(vec![0.8, 0.6]).unwrap();
        let s = pair_score(0, 1, true, true, &post, &worked_priors()).unwrap();
        assert!((s - 0.768).abs() < 1e-15, "{s}");
    }

    #[test]
    fn independent_joint_factorizes() {
        let priors = two(0.5, 0.5, [[0.25, 0.25], [0.25, 0.25]]);
        let post = AttributePosterior::new(vec![0.8, 0.6]).unwrap();
        let s = pair_score(0, 1, true, true, &post, &priors).unwrap();
        assert!((s - 0.48).abs() < 1e-15);
    }

    #[test]
    fn uninformative_evidence_returns_joint() {
        let priors = two(0.3, 0.6, [[0.3, 0.4], [0.1, 0.2]]);
        let post = AttributePosterior::new(vec![0.3, 0.6]).unwrap();
        for (si, sj) in PAIR_STATES {
            let s = pair_score(0, 1, si, sj, &post, &priors).unwrap();
            assert!((s - priors.joint(0, 1)[si as usize][sj as usize]).abs() < 1e-12);
        }
        let map = pair_map(0, 1, &post, &priors).unwrap();
        assert_eq!(map.state, (false, true));
    }

    #[test]
    fn pair_map_matches_enumeration() {
        // cells (0,0)=0.3, (0,1)=0.1, (1,0)=0.2, (1,1)=0.4 → marginals 0.6, 0.5
        let priors = two(0.6, 0.5, [[0.3, 0.1], [0.2, 0.4]]);
        let post = AttributePosterior::new(vec![0.2, 0.4]).unwrap();
        let map = pair_map(0, 1, &post, &priors).unwrap();
        let mut best = (f64::MIN, (false, false));
        let mut total = 0.0;
        for si in [true, false] {
            for sj in [true, false] {
                let q = if si { 0.2 } else { 0.8 } / if si { 0.6 } else { 0.4 };
                let r = if sj { 0.4 } else { 0.6 } / 0.5;
                let s = q * r * [[0.3, 0.1], [0.2, 0.4]][si as usize][sj as usize];
                total += s;
                if s > best.0 {
                    best = (s, (si, sj));
                }
            }
        }
        assert_eq!(map.state, best.1);
        let sum: f64 = map.distribution.iter().flatten().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let tt = pair_score(0, 1, true, true, &post, &priors).unwrap() / total;
        assert!((map.distribution[1][1] - tt).abs() < 1e-12);
    }

    #[test]
    fn symmetric_inputs_use_tie_break() {
        let priors = two(0.5, 0.5, [[0.25, 0.25], [0.25, 0.25]]);
        let post = AttributePosterior::new(vec![0.5, 0.5]).unwrap();
        let map = pair_map(0, 1, &post, &priors).unwrap();
        assert_eq!(map.state, (true, true));
        assert_eq!(map.distribution[0][1], map.distribution[1][0]);
    }

    #[test]
    fn errors() {
        let post = AttributePosterior::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(
            pair_score(0, 0, true, true, &post, &worked_priors()),
            Err(ModelError::SelfPair(0))
        );
        assert!(matches!(
            pair_score(0, 2, true, true, &post, &worked_priors()),
            Err(ModelError::Index { .. })
        ));
        let zero = AttributePosterior::new(vec![0.0, 0.0]).unwrap();
        // evidence rules out "present" for both, leaving only (false,false)
        let map = pair_map(0, 1, &zero, &worked_priors()).unwrap();
        assert_eq!(map.state, (false, false));
        assert!(matches!(
            normalize_pair(0, 1, [[0.0; 2]; 2]),
            Err(ModelError::DegeneratePair(0, 1))
        ));
    }
}
