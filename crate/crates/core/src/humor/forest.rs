use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{FeatureVector, LabeledExample, NUM_FEATURES};
use crate::error::{read_to_string, Error, Result};

const FORMAT_TAG: &str = "humor-forest";
const FORMAT_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub trees: usize,
    pub max_depth: usize,
    /// Features tried at each split; `None` means ⌈√F⌉.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl ForestConfig {
    pub fn new(seed: u64) -> Self {
        ForestConfig {
            trees: 100,
            max_depth: 12,
            max_features: None,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Class proportions of the training samples reaching this node.
        p_humorous: f64,
    },
    Leaf {
        p_humorous: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: &FeatureVector) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { p_humorous } => return p_humorous,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x.get(feature) <= threshold { left } else { right },
            }
        }
    }
}

/// Bagged CART trees with Gini splits and soft voting.
#[derive(Debug, Clone, PartialEq)]
pub struct HumorForest {
    trees: Vec<Tree>,
}

pub fn gini(positive: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = positive as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Searches features in the given order until `max_features` of them have
/// been found non-constant on this node.
fn best_split(data: &[LabeledExample], idx: &[usize], order: &[usize], max_features: usize) -> Option<Split> {
    let n = idx.len();
    let total_pos = idx.iter().filter(|&&i| data[i].humorous).count();
    let mut best: Option<Split> = None;
    let mut sorted = idx.to_vec();
    let mut visited = 0;
    for &f in order {
        if visited == max_features {
            break;
        }
        sorted.sort_by(|&a, &b| data[a].features.get(f).total_cmp(&data[b].features.get(f)));
        if data[sorted[0]].features.get(f) == data[sorted[n - 1]].features.get(f) {
            continue;
        }
        visited += 1;
        let mut left_pos = 0;
        for k in 0..n - 1 {
            if data[sorted[k]].humorous {
                left_pos += 1;
            }
            let lo = data[sorted[k]].features.get(f);
            let hi = data[sorted[k + 1]].features.get(f);
            if lo == hi {
                continue;
            }
            let nl = k + 1;
            let nr = n - nl;
            let impurity = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(total_pos - left_pos, nr)) / n as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mid = lo + (hi - lo) / 2.0;
                best = Some(Split {
                    feature: f,
                    threshold: if mid < hi { mid } else { lo },
                    impurity,
                });
            }
        }
    }
    best
}

fn grow_tree(data: &[LabeledExample], config: &ForestConfig, max_features: usize, tree_index: usize) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(tree_index as u64);
    let bootstrap: Vec<usize> = (0..data.len()).map(|_| rng.random_range(0..data.len())).collect();

    let mut nodes = Vec::new();
    // (node slot, sample indices, depth)
    let mut stack = vec![(0usize, bootstrap, 0usize)];
    nodes.push(Node::Leaf { p_humorous: 0.0 });
    while let Some((slot, idx, depth)) = stack.pop() {
        let pos = idx.iter().filter(|&&i| data[i].humorous).count();
        let p_humorous = pos as f64 / idx.len() as f64;
        let parent = gini(pos, idx.len());
        let pure = pos == 0 || pos == idx.len();
        let split = if pure || depth >= config.max_depth || idx.len() < 2 {
            None
        } else {
            let order = sample(&mut rng, NUM_FEATURES, NUM_FEATURES).into_vec();
            best_split(data, &idx, &order, max_features).filter(|s| s.impurity < parent - 1e-12)
        };
        match split {
            None => nodes[slot] = Node::Leaf { p_humorous },
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx
                    .iter()
                    .partition(|&&i| data[i].features.get(s.feature) <= s.threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(Node::Leaf { p_humorous: 0.0 });
                nodes.push(Node::Leaf { p_humorous: 0.0 });
                nodes[slot] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                    p_humorous,
                };
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
        }
    }
    Tree { nodes }
}

/// Trains one tree per bootstrap sample. Trees are grown in parallel, each
/// from its own stream of the seeded generator, so results depend only on
/// data, config and seed.
pub fn train_forest(examples: &[LabeledExample], config: &ForestConfig) -> Result<HumorForest> {
    let pos = examples.iter().filter(|e| e.humorous).count();
    if examples.len() < 2 || pos == 0 || pos == examples.len() {
        return Err(Error::Data(
            "forest training needs at least two examples covering both classes".into(),
        ));
    }
    if config.trees == 0 {
        return Err(Error::Config("forest needs at least one tree".into()));
    }
    let max_features = config
        .max_features
        .unwrap_or_else(|| (NUM_FEATURES as f64).sqrt().ceil() as usize)
        .clamp(1, NUM_FEATURES);
    let trees = (0..config.trees)
        .into_par_iter()
        .map(|t| grow_tree(examples, config, max_features, t))
        .collect();
    Ok(HumorForest { trees })
}

/// Mean over trees of the humorous-class proportion at the reached leaf.
pub fn humor_prob(forest: &HumorForest, features: &FeatureVector) -> f64 {
    let sum: f64 = forest.trees.iter().map(|t| t.predict(features)).sum();
    (sum / forest.trees.len() as f64).clamp(0.0, 1.0)
}

impl HumorForest {
    pub fn from_trees(trees: Vec<Tree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Data("forest without trees".into()));
        }
        Ok(HumorForest { trees })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Flat node table: `tree node feature threshold left right p_not p_humorous`,
    /// with feature, left and right set to -1 on leaves.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "{FORMAT_TAG}\t{FORMAT_VERSION}\ttrees={}\tfeatures={NUM_FEATURES}",
            self.trees.len()
        )?;
        for (t, tree) in self.trees.iter().enumerate() {
            for (i, node) in tree.nodes.iter().enumerate() {
                match *node {
                    Node::Leaf { p_humorous } => {
                        writeln!(w, "{t}\t{i}\t-1\t0\t-1\t-1\t{}\t{p_humorous}", 1.0 - p_humorous)?
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                        p_humorous,
                    } => writeln!(
                        w,
                        "{t}\t{i}\t{feature}\t{threshold}\t{left}\t{right}\t{}\t{p_humorous}",
                        1.0 - p_humorous
                    )?,
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let what = "forest";
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l).unwrap_or("");
        let h: Vec<&str> = header.split('\t').collect();
        if h.len() != 4 || h[0] != FORMAT_TAG {
            return Err(Error::parse(what, 1, "missing forest header"));
        }
        if h[1] != FORMAT_VERSION {
            return Err(Error::parse(what, 1, format!("unsupported version {}", h[1])));
        }
        let n_trees: usize = h[2]
            .strip_prefix("trees=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(what, 1, "bad tree count"))?;
        if h[3] != format!("features={NUM_FEATURES}") {
            return Err(Error::parse(what, 1, format!("expected features={NUM_FEATURES}")));
        }

        let mut trees: Vec<Vec<Node>> = vec![Vec::new(); n_trees];
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let err = |m: &str| Error::parse(what, i + 1, m.to_owned());
            if f.len() != 8 {
                return Err(err("expected 8 fields"));
            }
            let t: usize = f[0].parse().map_err(|_| err("bad tree id"))?;
            let id: usize = f[1].parse().map_err(|_| err("bad node id"))?;
            let feature: i64 = f[2].parse().map_err(|_| err("bad feature index"))?;
            let threshold: f64 = f[3].parse().map_err(|_| err("bad threshold"))?;
            let left: i64 = f[4].parse().map_err(|_| err("bad left child"))?;
            let right: i64 = f[5].parse().map_err(|_| err("bad right child"))?;
            let p_not: f64 = f[6].parse().map_err(|_| err("bad proportion"))?;
            let p_humorous: f64 = f[7].parse().map_err(|_| err("bad proportion"))?;
            if !(0.0..=1.0).contains(&p_humorous) || (p_not + p_humorous - 1.0).abs() > 1e-9 {
                return Err(err("leaf proportions must sum to 1"));
            }
            let nodes = trees.get_mut(t).ok_or_else(|| err("tree id out of range"))?;
            if id != nodes.len() {
                return Err(err("node ids must be consecutive"));
            }
            nodes.push(if feature < 0 {
                Node::Leaf { p_humorous }
            } else {
                if feature as usize >= NUM_FEATURES || left <= id as i64 || right <= id as i64 {
                    return Err(err("invalid split node"));
                }
                Node::Split {
                    feature: feature as usize,
                    threshold,
                    left: left as usize,
                    right: right as usize,
                    p_humorous,
                }
            });
        }
        for (t, nodes) in trees.iter().enumerate() {
            let valid = !nodes.is_empty()
                && nodes.iter().all(|n| match n {
                    Node::Split { left, right, .. } => *left < nodes.len() && *right < nodes.len(),
                    Node::Leaf { .. } => true,
                });
            if !valid {
                return Err(Error::parse(
                    what,
                    0,
                    format!("tree {t} is empty or has dangling children"),
                ));
            }
        }
        HumorForest::from_trees(trees.into_iter().map(|nodes| Tree { nodes }).collect())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?)
    }
}
