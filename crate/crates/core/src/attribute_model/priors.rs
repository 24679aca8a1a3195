use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::fpgrowth::AttributeSet;

/// P(A_i = s_i, A_j = s_j) indexed `[s_i][s_j]` with `false = 0`, `true = 1`.
pub type JointTable = [[f64; 2]; 2];

const TOLERANCE: f64 = 1e-9;

/// Prior marginals and pairwise joint tables over boolean attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributePriorModel {
    names: Vec<String>,
    marginal: Vec<f64>,
    /// Upper triangle, row-major over `i < j`.
    joint: Vec<JointTable>,
    alpha: Option<f64>,
    n_sets: Option<usize>,
}

fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl AttributePriorModel {
    /// Builds a model from explicit tables, checking normalization,
    /// marginal consistency and marginals strictly inside (0,1).
    pub fn new(names: Vec<String>, marginal: Vec<f64>, joint: Vec<JointTable>) -> Result<Self, ModelError> {
        let n = names.len();
        if marginal.len() != n || joint.len() != n * n.saturating_sub(1) / 2 {
            return Err(ModelError::InvalidPriors(format!(
                "{n} names, {} marginals, {} joint tables",
                marginal.len(),
                joint.len()
            )));
        }
        let model = AttributePriorModel {
            names,
            marginal,
            joint,
            alpha: None,
            n_sets: None,
        };
        model.validate()?;
        Ok(model)
    }

    /// Independent model: every joint table is the product of its marginals.
    pub fn factorized(names: Vec<String>, marginal: Vec<f64>) -> Result<Self, ModelError> {
        let n = marginal.len();
        let mut joint = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let (mi, mj) = (marginal[i], marginal[j]);
                joint.push([[(1.0 - mi) * (1.0 - mj), (1.0 - mi) * mj], [mi * (1.0 - mj), mi * mj]]);
            }
        }
        AttributePriorModel::new(names, marginal, joint)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.names.len();
        for (index, &value) in self.marginal.iter().enumerate() {
            if !(value > 0.0 && value < 1.0) {
                return Err(ModelError::DegenerateMarginal { index, value });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let t = self.joint[tri_index(n, i, j)];
                let sum: f64 = t.iter().flatten().sum();
                if t.iter().flatten().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > TOLERANCE {
                    return Err(ModelError::InvalidPriors(format!("joint ({i},{j}) sums to {sum}")));
                }
                let row_true = t[1][0] + t[1][1];
                let col_true = t[0][1] + t[1][1];
                if (row_true - self.marginal[i]).abs() > TOLERANCE || (col_true - self.marginal[j]).abs() > TOLERANCE {
                    return Err(ModelError::InvalidPriors(format!(
                        "joint ({i},{j}) does not marginalize to ({}, {})",
                        self.marginal[i], self.marginal[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn marginal(&self, i: usize) -> f64 {
        self.marginal[i]
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginal
    }

    /// m_i(s): prior probability of state `s` for attribute `i`.
    pub fn state_prob(&self, i: usize, s: bool) -> f64 {
        if s {
            self.marginal[i]
        } else {
            1.0 - self.marginal[i]
        }
    }

    /// Joint table oriented as `[s_i][s_j]`, for any `i != j`.
    pub fn joint(&self, i: usize, j: usize) -> JointTable {
        let n = self.names.len();
        if i < j {
            self.joint[tri_index(n, i, j)]
        } else {
            let t = self.joint[tri_index(n, j, i)];
            [[t[0][0], t[1][0]], [t[0][1], t[1][1]]]
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn to_json_string(&self) -> String {
        let n = self.names.len();
        let mut joint: BTreeMap<String, BTreeMap<String, JointTable>> = BTreeMap::new();
        for i in 0..n {
            for j in i + 1..n {
                joint
                    .entry(self.names[i].clone())
                    .or_default()
                    .insert(self.names[j].clone(), self.joint[tri_index(n, i, j)]);
            }
        }
        let file = PriorsFile {
            alpha: self.alpha,
            n_sets: self.n_sets,
            attributes: self.names.clone(),
            marginals: self.marginal.clone(),
            joint,
        };
        serde_json::to_string_pretty(&file).expect("priors serialize")
    }

    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let file: PriorsFile = serde_json::from_str(text).map_err(|e| ModelError::InvalidPriors(e.to_string()))?;
        let n = file.attributes.len();
        let index: BTreeMap<&str, usize> = file
            .attributes
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut joint = vec![None; n * n.saturating_sub(1) / 2];
        for (a, inner) in &file.joint {
            for (b, table) in inner {
                let (Some(&i), Some(&j)) = (index.get(a.as_str()), index.get(b.as_str())) else {
                    return Err(ModelError::InvalidPriors(format!(
                        "joint entry ({a},{b}) names an unknown attribute"
                    )));
                };
                let (i, j, t) = match i.cmp(&j) {
                    std::cmp::Ordering::Less => (i, j, *table),
                    std::cmp::Ordering::Greater => (j, i, [[table[0][0], table[1][0]], [table[0][1], table[1][1]]]),
                    std::cmp::Ordering::Equal => {
                        return Err(ModelError::InvalidPriors(format!("self-pair `{a}`")));
                    }
                };
                joint[tri_index(n, i, j)] = Some(t);
            }
        }
        let joint = joint
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| ModelError::InvalidPriors("missing joint tables".into()))?;
        let mut model = AttributePriorModel::new(file.attributes, file.marginals, joint)?;
        model.alpha = file.alpha;
        model.n_sets = file.n_sets;
        Ok(model)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PriorsFile {
    alpha: Option<f64>,
    n_sets: Option<usize>,
    attributes: Vec<String>,
    marginals: Vec<f64>,
    /// `joint[a][b]` for `a` before `b` in `attributes`, indexed `[s_a][s_b]`.
    joint: BTreeMap<String, BTreeMap<String, JointTable>>,
}

/// Add-α estimates from binarized attribute sets.
///
/// marginal = (count + α) / (N + 2α); each joint cell = (count + α/2) / (N + 2α),
/// which sums to one and marginalizes exactly onto the marginals.
pub fn estimate_priors(
    sets: &[AttributeSet],
    vocabulary: &[String],
    alpha: f64,
) -> Result<AttributePriorModel, ModelError> {
    if sets.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ModelError::Alpha(alpha));
    }
    let n = vocabulary.len();
    let n_pairs = n * n.saturating_sub(1) / 2;
    let rows: Vec<Vec<usize>> = sets
        .iter()
        .map(|s| {
            vocabulary
                .iter()
                .enumerate()
                .filter(|(_, name)| s.contains(*name))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    let (single, both) = rows
        .par_iter()
        .fold(
            || (vec![0u64; n], vec![0u64; n_pairs]),
            |(mut single, mut both), present| {
                for (a, &i) in present.iter().enumerate() {
                    single[i] += 1;
                    for &j in &present[a + 1..] {
                        both[tri_index(n, i, j)] += 1;
                    }
                }
                (single, both)
            },
        )
        .reduce(
            || (vec![0u64; n], vec![0u64; n_pairs]),
            |(mut s1, mut b1), (s2, b2)| {
                s1.iter_mut().zip(s2).for_each(|(a, b)| *a += b);
                b1.iter_mut().zip(b2).for_each(|(a, b)| *a += b);
                (s1, b1)
            },
        );

    let total = sets.len() as f64;
    let denom = total + 2.0 * alpha;
    let marginal: Vec<f64> = single.iter().map(|&c| (c as f64 + alpha) / denom).collect();
    let cell = |c: f64| (c + alpha / 2.0) / denom;
    let mut joint = Vec::with_capacity(n_pairs);
    for i in 0..n {
        for j in i + 1..n {
            let c11 = both[tri_index(n, i, j)] as f64;
            let c10 = single[i] as f64 - c11;
            let c01 = single[j] as f64 - c11;
            let c00 = total - c11 - c10 - c01;
            joint.push([[cell(c00), cell(c01)], [cell(c10), cell(c11)]]);
        }
    }
    let mut model = AttributePriorModel::new(vocabulary.to_vec(), marginal, joint)?;
    model.alpha = Some(alpha);
    model.n_sets = Some(sets.len());
    Ok(model)
}
