use std::collections::BTreeSet;

use super::{AttributeSet, MineError};

const ROOT: usize = 0;
const NO_ITEM: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub(super) struct Node {
    pub item: u32,
    pub count: u64,
    /// Weight of insertions that ended exactly at this node.
    pub ends: u64,
    pub parent: usize,
    pub children: Vec<usize>,
    /// Next node carrying the same item (header chain).
    pub next: Option<usize>,
}

#[derive(Debug, Clone)]
pub(super) struct HeaderEntry {
    pub item: u32,
    pub support: u64,
    pub head: Option<usize>,
    tail: Option<usize>,
}

/// Id-level prefix tree. Item ids are positions in a lexicographically
/// sorted name table, so comparing ids compares names.
#[derive(Debug, Clone)]
pub(super) struct Tree {
    pub nodes: Vec<Node>,
    /// Frequent items in canonical order: support descending, then id ascending.
    pub header: Vec<HeaderEntry>,
    /// item id -> index into `header`, for frequent items only.
    rank: Vec<Option<usize>>,
}

impl Tree {
    /// Builds a tree from weighted paths over items `0..n_items`; items whose
    /// total weight is below `min_support` are dropped before insertion.
    pub fn from_weighted<'a>(
        paths: impl Iterator<Item = (&'a [u32], u64)> + Clone,
        n_items: usize,
        min_support: u64,
    ) -> Tree {
        let mut support = vec![0u64; n_items];
        for (path, w) in paths.clone() {
            for &i in path {
                support[i as usize] += w;
            }
        }
        let mut frequent: Vec<u32> = (0..n_items as u32)
            .filter(|&i| support[i as usize] >= min_support && support[i as usize] > 0)
            .collect();
        frequent.sort_by(|&a, &b| support[b as usize].cmp(&support[a as usize]).then(a.cmp(&b)));

        let mut rank = vec![None; n_items];
        for (r, &i) in frequent.iter().enumerate() {
            rank[i as usize] = Some(r);
        }
        let header = frequent
            .iter()
            .map(|&i| HeaderEntry {
                item: i,
                support: support[i as usize],
                head: None,
                tail: None,
            })
            .collect();
        let mut tree = Tree {
            nodes: vec![Node {
                item: NO_ITEM,
                count: 0,
                ends: 0,
                parent: ROOT,
                children: Vec::new(),
                next: None,
            }],
            header,
            rank,
        };

        let mut buf = Vec::new();
        for (path, w) in paths {
            buf.clear();
            buf.extend(path.iter().filter_map(|&i| tree.rank[i as usize]));
            buf.sort_unstable();
            buf.dedup();
            tree.insert(&buf, w);
        }
        tree
    }

    fn insert(&mut self, ranks: &[usize], weight: u64) {
        let mut cur = ROOT;
        self.nodes[ROOT].count += weight;
        for &r in ranks {
            let item = self.header[r].item;
            let found = self.nodes[cur]
                .children
                .iter()
                .copied()
                .find(|&c| self.nodes[c].item == item);
            cur = match found {
                Some(c) => c,
                None => {
                    let idx = self.nodes.len();
                    self.nodes.push(Node {
                        item,
                        count: 0,
                        ends: 0,
                        parent: cur,
                        children: Vec::new(),
                        next: None,
                    });
                    self.nodes[cur].children.push(idx);
                    let entry = &mut self.header[r];
                    match entry.tail {
                        Some(t) => self.nodes[t].next = Some(idx),
                        None => entry.head = Some(idx),
                    }
                    entry.tail = Some(idx);
                    idx
                }
            };
            self.nodes[cur].count += weight;
        }
        self.nodes[cur].ends += weight;
    }

    pub fn chain(&self, header_index: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.header[header_index].head, move |&n| self.nodes[n].next)
    }

    /// Items on the path from `node`'s parent up to (not including) the root.
    pub fn prefix_path(&self, node: usize, out: &mut Vec<u32>) {
        out.clear();
        let mut cur = self.nodes[node].parent;
        while cur != ROOT {
            out.push(self.nodes[cur].item);
            cur = self.nodes[cur].parent;
        }
    }

    pub fn rank_of(&self, item: u32) -> Option<usize> {
        self.rank.get(item as usize).copied().flatten()
    }
}

/// FP-tree over named attributes.
#[derive(Debug, Clone)]
pub struct FpTree {
    pub(super) names: Vec<String>,
    pub(super) tree: Tree,
    min_support: u64,
    transactions: usize,
}

pub fn build_tree(transactions: &[AttributeSet], min_support: u64) -> Result<FpTree, MineError> {
    FpTree::build(transactions, min_support)
}

impl FpTree {
    pub fn build(transactions: &[AttributeSet], min_support: u64) -> Result<FpTree, MineError> {
        if min_support < 1 {
            return Err(MineError::ZeroSupport);
        }
        let universe: BTreeSet<&String> = transactions.iter().flatten().collect();
        let names: Vec<String> = universe.into_iter().cloned().collect();
        let encoded: Vec<Vec<u32>> = transactions
            .iter()
            .map(|t| {
                t.iter()
                    .map(|a| names.binary_search(a).expect("name interned") as u32)
                    .collect()
            })
            .collect();
        let tree = Tree::from_weighted(encoded.iter().map(|t| (t.as_slice(), 1)), names.len(), min_support);
        Ok(FpTree {
            names,
            tree,
            min_support,
            transactions: transactions.len(),
        })
    }

    pub fn min_support(&self) -> u64 {
        self.min_support
    }

    pub fn transaction_count(&self) -> usize {
        self.transactions
    }

    /// Number of non-root nodes.
    pub fn node_count(&self) -> usize {
        self.tree.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.node_count() == 0
    }

    /// Frequent attributes in insertion order with their global support.
    pub fn header(&self) -> Vec<(&str, u64)> {
        self.tree
            .header
            .iter()
            .map(|h| (self.names[h.item as usize].as_str(), h.support))
            .collect()
    }

    /// Counts of the nodes on the header chain of `attribute`, in chain order.
    pub fn chain_counts(&self, attribute: &str) -> Vec<u64> {
        let Ok(id) = self.names.binary_search_by(|n| n.as_str().cmp(attribute)) else {
            return Vec::new();
        };
        match self.tree.rank_of(id as u32) {
            Some(r) => self.tree.chain(r).map(|n| self.tree.nodes[n].count).collect(),
            None => Vec::new(),
        }
    }

    /// Every root-to-leaf path as attribute names with the leaf count.
    pub fn paths(&self) -> Vec<(Vec<String>, u64)> {
        let mut out = Vec::new();
        let mut buf = Vec::new();
        for (idx, node) in self.tree.nodes.iter().enumerate().skip(1) {
            if node.children.is_empty() {
                self.tree.prefix_path(idx, &mut buf);
                let mut path: Vec<String> = buf.iter().rev().map(|&i| self.names[i as usize].clone()).collect();
                path.push(self.names[node.item as usize].clone());
                out.push((path, node.count));
            }
        }
        out
    }

    /// Checks the structural invariants: canonical order along every path,
    /// count conservation at every node, and header chains that visit each
    /// node of their attribute exactly once.
    pub fn check_invariants(&self) -> Result<(), String> {
        let t = &self.tree;
        if t.nodes[ROOT].count != self.transactions as u64 {
            return Err(format!(
                "root count {} != transaction count {}",
                t.nodes[ROOT].count, self.transactions
            ));
        }
        for (idx, node) in t.nodes.iter().enumerate() {
            let child_sum: u64 = node.children.iter().map(|&c| t.nodes[c].count).sum();
            if node.count != child_sum + node.ends {
                return Err(format!(
                    "node {idx}: count {} != children {child_sum} + ends {}",
                    node.count, node.ends
                ));
            }
            if idx != ROOT {
                let my_rank = t
                    .rank_of(node.item)
                    .ok_or_else(|| format!("node {idx}: infrequent item"))?;
                if node.parent != ROOT {
                    let parent_rank = t.rank_of(t.nodes[node.parent].item).expect("parent item frequent");
                    if parent_rank >= my_rank {
                        return Err(format!("node {idx}: order violated below node {}", node.parent));
                    }
                }
            }
        }
        let mut visited = vec![false; t.nodes.len()];
        for (r, entry) in t.header.iter().enumerate() {
            let mut chain_sum = 0;
            for n in t.chain(r) {
                if t.nodes[n].item != entry.item {
                    return Err(format!("chain of item {} reaches node {n} of another item", entry.item));
                }
                if std::mem::replace(&mut visited[n], true) {
                    return Err(format!("node {n} visited twice"));
                }
                chain_sum += t.nodes[n].count;
            }
            if chain_sum != entry.support {
                return Err(format!(
                    "chain of item {} sums to {chain_sum}, support {}",
                    entry.item, entry.support
                ));
            }
        }
        if let Some(n) = visited.iter().skip(1).position(|v| !v) {
            return Err(format!("node {} not on any header chain", n + 1));
        }
        Ok(())
    }
}
