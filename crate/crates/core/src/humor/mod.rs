//! Humor classifier: lexical/phonetic features and a random forest.

mod features;
mod forest;

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use features::{extract_features, FeatureVector, FEATURE_NAMES, NUM_FEATURES};
pub use forest::{gini, humor_prob, train_forest, ForestConfig, HumorForest, Node, Tree};

use crate::error::{read_to_string, Error, Result};
use crate::lexicons::LexiconSet;
use crate::split_tokens;

/// Class ratio band that counts as balanced.
pub const BALANCED_RATIO: (f64, f64) = (0.8, 1.25);

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub features: FeatureVector,
    pub humorous: bool,
}

fn class_ratio(pos: usize, neg: usize) -> f64 {
    pos as f64 / neg as f64
}

/// Replicates the minority class and down-samples the majority class to the
/// geometric mean of the two class sizes.
///
/// Every minority example survives at least once. Input that is already
/// inside [`BALANCED_RATIO`] is returned unchanged.
pub fn rebalance(examples: &[LabeledExample], seed: u64) -> Result<Vec<LabeledExample>> {
    let (pos, neg): (Vec<&LabeledExample>, Vec<&LabeledExample>) = examples.iter().partition(|e| e.humorous);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Data("rebalancing needs examples of both classes".into()));
    }
    let ratio = class_ratio(pos.len(), neg.len());
    if (BALANCED_RATIO.0..=BALANCED_RATIO.1).contains(&ratio) {
        return Ok(examples.to_vec());
    }
    let (minority, majority) = if pos.len() < neg.len() { (pos, neg) } else { (neg, pos) };
    let target =
        ((minority.len() as f64 * majority.len() as f64).sqrt().round() as usize).clamp(minority.len(), majority.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<LabeledExample> = Vec::with_capacity(2 * target);

    let mut keep: Vec<usize> = (0..majority.len()).collect();
    keep.shuffle(&mut rng);
    keep.truncate(target);
    keep.sort_unstable();
    out.extend(keep.into_iter().map(|i| majority[i].clone()));

    for _ in 0..target / minority.len() {
        out.extend(minority.iter().map(|&e| e.clone()));
    }
    let mut extra: Vec<usize> = (0..minority.len()).collect();
    extra.shuffle(&mut rng);
    extra.truncate(target % minority.len());
    extra.sort_unstable();
    out.extend(extra.into_iter().map(|i| minority[i].clone()));

    out.shuffle(&mut rng);
    Ok(out)
}

fn parse_label(s: &str) -> Option<bool> {
    match s {
        "1" | "humorous" => Some(true),
        "0" | "not_humorous" => Some(false),
        _ => None,
    }
}

/// Reads labeled examples. Each line is either `label<TAB>f1..fN` or
/// `label<TAB>input<TAB>response`; the latter has features computed here.
pub fn parse_labeled(text: &str, lex: &LexiconSet) -> Result<Vec<LabeledExample>> {
    let what = "labeled humor data";
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let humorous = parse_label(fields[0])
            .ok_or_else(|| Error::parse(what, i + 1, format!("unknown label {:?}", fields[0])))?;
        let features = if fields.len() == NUM_FEATURES + 1 {
            let mut f = [0.0; NUM_FEATURES];
            for (slot, raw) in f.iter_mut().zip(&fields[1..]) {
                *slot = raw
                    .parse()
                    .map_err(|_| Error::parse(what, i + 1, format!("bad feature value {raw:?}")))?;
            }
            FeatureVector(f)
        } else if fields.len() == 3 {
            extract_features(&split_tokens(fields[1]), &split_tokens(fields[2]), lex)
        } else {
            return Err(Error::parse(
                what,
                i + 1,
                format!("expected {} or 3 tab-separated fields", NUM_FEATURES + 1),
            ));
        };
        out.push(LabeledExample { features, humorous });
    }
    Ok(out)
}

pub fn load_labeled(path: &Path, lex: &LexiconSet) -> Result<Vec<LabeledExample>> {
    parse_labeled(&read_to_string(path)?, lex)
}

/// Writes examples in the `label<TAB>f1..fN` form, with a `#` header naming
/// the features.
pub fn write_labeled<W: Write>(mut w: W, examples: &[LabeledExample]) -> std::io::Result<()> {
    writeln!(w, "# label\t{}", FEATURE_NAMES.join("\t"))?;
    for e in examples {
        write!(w, "{}", if e.humorous { "1" } else { "0" })?;
        for v in e.features.0 {
            write!(w, "\t{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
