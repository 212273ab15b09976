//! Random forest of Gini decision trees.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{check_dim, LearnError};
use crate::corpus::RteLabel;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf { class: RteLabel, n: usize },
    /// `x[feature] <= threshold` goes left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Nodes in an arena; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> RteLabel {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class, .. } => return class,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub n_trees: usize,
    pub mtry: usize,
    pub seed: u64,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

fn gini(counts: &[usize; 3], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize; 3]) -> RteLabel {
    let mut best = 0;
    for k in 1..3 {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    RteLabel::ALL[best]
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [RteLabel],
    mtry: usize,
    rng: Rng,
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> [usize; 3] {
        let mut c = [0; 3];
        for &i in idx {
            c[self.y[i].index()] += 1;
        }
        c
    }

    /// Best split over `mtry` sampled features by weighted child Gini.
    fn best_split(&mut self, idx: &mut [usize]) -> Option<Split> {
        let n_features = self.x[0].len();
        let candidates = index::sample(&mut self.rng, n_features, self.mtry);
        let n = idx.len();
        let mut best: Option<Split> = None;
        for f in candidates {
            idx.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left = [0usize; 3];
            let mut right = self.counts(idx);
            for pos in 0..n - 1 {
                let label = self.y[idx[pos]].index();
                left[label] += 1;
                right[label] -= 1;
                let (v, next) = (self.x[idx[pos]][f], self.x[idx[pos + 1]][f]);
                if v == next {
                    continue;
                }
                let nl = pos + 1;
                let impurity = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = v + (next - v) / 2.0;
                    // keep the threshold strictly below the right neighbour
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(Split { feature: f, threshold, impurity });
                }
            }
        }
        best
    }

    fn grow(mut self, sample: Vec<usize>) -> Tree {
        let mut nodes = vec![Node::Leaf { class: RteLabel::Ent, n: 0 }];
        let mut stack = vec![(0usize, sample)];
        while let Some((slot, mut idx)) = stack.pop() {
            let counts = self.counts(&idx);
            let n = idx.len();
            let parent = gini(&counts, n);
            let leaf = Node::Leaf { class: majority(&counts), n };
            if n < 2 || parent == 0.0 {
                nodes[slot] = leaf;
                continue;
            }
            match self.best_split(&mut idx) {
                Some(s) if s.impurity < parent => {
                    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][s.feature] <= s.threshold);
                    let (left, right) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf { class: RteLabel::Ent, n: 0 });
                    nodes.push(Node::Leaf { class: RteLabel::Ent, n: 0 });
                    nodes[slot] = Node::Split { feature: s.feature, threshold: s.threshold, left, right };
                    stack.push((right, r));
                    stack.push((left, l));
                }
                _ => nodes[slot] = leaf,
            }
        }
        Tree { nodes }
    }
}

fn grow_tree(x: &[Vec<f64>], y: &[RteLabel], mtry: usize, seed: u64, k: usize) -> Tree {
    let mut boot = rng::indexed_substream(seed, "bootstrap", k as u64);
    let sample: Vec<usize> = (0..x.len()).map(|_| boot.random_range(0..x.len())).collect();
    let grower = Grower { x, y, mtry, rng: rng::indexed_substream(seed, "mtry", k as u64) };
    grower.grow(sample)
}

pub fn rf_train(x: &[Vec<f64>], y: &[RteLabel], n_trees: usize, mtry: usize, seed: u64) -> Result<RfModel, LearnError> {
    if n_trees == 0 {
        return Err(LearnError::NoTrees);
    }
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch { features: x.len(), labels: y.len() });
    }
    let d = x.first().ok_or(LearnError::EmptyTraining)?.len();
    for row in x {
        check_dim(d, row.len())?;
    }
    if mtry == 0 || mtry > d {
        return Err(LearnError::BadMtry { mtry, features: d });
    }
    #[cfg(feature = "parallel")]
    let trees = {
        use rayon::prelude::*;
        (0..n_trees).into_par_iter().map(|k| grow_tree(x, y, mtry, seed, k)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let trees = (0..n_trees).map(|k| grow_tree(x, y, mtry, seed, k)).collect();
    Ok(RfModel { n_trees, mtry, seed, n_features: d, trees })
}

/// Vote counts per class, in label order.
pub fn rf_votes(model: &RfModel, x: &[f64]) -> Result<[usize; 3], LearnError> {
    check_dim(model.n_features, x.len())?;
    let mut votes = [0; 3];
    for t in &model.trees {
        votes[t.predict(x).index()] += 1;
    }
    Ok(votes)
}

pub fn rf_predict(model: &RfModel, x: &[f64]) -> Result<RteLabel, LearnError> {
    Ok(majority(&rf_votes(model, x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use RteLabel::*;

    fn leaf(class: RteLabel) -> Tree {
        Tree { nodes: vec![Node::Leaf { class, n: 1 }] }
    }

    #[test]
    fn separable_single_tree() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![f64::from(i)]).collect();
        let y: Vec<RteLabel> = (0..20).map(|i| if i < 7 { Ent } else if i < 14 { Con } else { Unk }).collect();
        let m = rf_train(&x, &y, 1, 1, 4).unwrap();
        let tree = &m.trees[0];
        for n in &tree.nodes {
            if let Node::Leaf { n, .. } = n {
                assert!(*n >= 1);
            }
        }
        let full = Grower { x: &x, y: &y, mtry: 1, rng: rng::substream(0, "t") }.grow((0..20).collect());
        assert!(x.iter().zip(&y).all(|(r, l)| full.predict(r) == *l));
        assert_eq!(full.depth(), 2);
    }

    #[test]
    fn votes_and_ties() {
        let mut m = RfModel { n_trees: 3, mtry: 1, seed: 0, n_features: 1, trees: vec![leaf(Con), leaf(Unk), leaf(Con)] };
        assert_eq!(rf_predict(&m, &[0.0]).unwrap(), Con);
        m.trees = vec![leaf(Unk), leaf(Con)];
        assert_eq!(rf_predict(&m, &[0.0]).unwrap(), Con);
        m.trees = vec![leaf(Unk); 3];
        assert_eq!(rf_predict(&m, &[0.0]).unwrap(), Unk);
        assert!(matches!(rf_predict(&m, &[0.0, 1.0]), Err(LearnError::DimensionMismatch { .. })));
    }

    #[test]
    fn errors() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let y = [Ent, Con];
        assert!(matches!(rf_train(&x, &y, 0, 1, 0), Err(LearnError::NoTrees)));
        assert!(matches!(rf_train(&x, &y, 1, 3, 0), Err(LearnError::BadMtry { mtry: 3, features: 2 })));
        assert!(matches!(rf_train(&x, &y, 1, 0, 0), Err(LearnError::BadMtry { .. })));
    }

    #[test]
    fn duplicate_points_with_conflicting_labels() {
        let x = vec![vec![1.0]; 4];
        let m = rf_train(&x, &[Ent, Con, Con, Unk], 5, 1, 2).unwrap();
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn reproducible() {
        let x: Vec<Vec<f64>> = (0..60).map(|i| vec![f64::from(i % 7), f64::from(i % 5), f64::from(i % 3)]).collect();
        let y: Vec<RteLabel> = (0..60).map(|i| RteLabel::from_index(i % 3).unwrap()).collect();
        let a = rf_train(&x, &y, 20, 2, 77).unwrap();
        assert_eq!(a, rf_train(&x, &y, 20, 2, 77).unwrap());
        assert_ne!(a, rf_train(&x, &y, 20, 2, 78).unwrap());
    }
}
