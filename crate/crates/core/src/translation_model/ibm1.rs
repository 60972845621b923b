use std::collections::HashMap;

use super::Alignment;
use crate::corpus::UtterancePair;
use crate::error::{Error, Result};

/// Output of EM training: one Viterbi alignment per pair plus the corpus
/// log-likelihood before the first and after every iteration.
#[derive(Debug, Clone)]
pub struct AlignmentModel {
    pub alignments: Vec<Alignment>,
    pub log_likelihood: Vec<f64>,
    /// Lexical probabilities t(response | source) keyed by (source, response);
    /// source `<NULL>` included.
    pub lexical: HashMap<(String, String), f64>,
}

struct Interned {
    /// Per pair: source ids with NULL (id 0) first, then response ids.
    pairs: Vec<(Vec<u32>, Vec<u32>)>,
    source_words: Vec<String>,
    response_words: Vec<String>,
}

fn intern(pairs: &[UtterancePair]) -> Interned {
    let mut src_ids: HashMap<&str, u32> = HashMap::new();
    let mut rsp_ids: HashMap<&str, u32> = HashMap::new();
    let mut source_words = vec![super::NULL_TOKEN.to_owned()];
    let mut response_words = Vec::new();
    src_ids.insert(super::NULL_TOKEN, 0);
    let mut out = Vec::with_capacity(pairs.len());
    for p in pairs {
        let mut s = vec![0u32];
        for w in &p.source {
            let id = *src_ids.entry(w.as_str()).or_insert_with(|| {
                source_words.push(w.clone());
                (source_words.len() - 1) as u32
            });
            s.push(id);
        }
        let r = p
            .reference
            .iter()
            .map(|w| {
                *rsp_ids.entry(w.as_str()).or_insert_with(|| {
                    response_words.push(w.clone());
                    (response_words.len() - 1) as u32
                })
            })
            .collect();
        out.push((s, r));
    }
    Interned {
        pairs: out,
        source_words,
        response_words,
    }
}

/// IBM Model 1 EM from a uniform start, then Viterbi alignment.
///
/// Each response word is aligned to its most probable source word (leftmost
/// on ties). It goes to NULL only when t(r | NULL) is strictly larger.
pub fn train_alignment(pairs: &[UtterancePair], iterations: usize) -> Result<AlignmentModel> {
    if pairs.is_empty() {
        return Err(Error::Data("cannot train alignments on an empty corpus".into()));
    }
    if iterations == 0 {
        return Err(Error::Config("alignment training needs at least one iteration".into()));
    }
    let data = intern(pairs);
    let uniform = 1.0 / data.response_words.len().max(1) as f64;

    let mut t: HashMap<(u32, u32), f64> = HashMap::new();
    for (s, r) in &data.pairs {
        for &sw in s {
            for &rw in r {
                t.insert((sw, rw), uniform);
            }
        }
    }

    let mut log_likelihood = Vec::with_capacity(iterations + 1);
    for _ in 0..iterations {
        let mut counts: HashMap<(u32, u32), f64> = HashMap::with_capacity(t.len());
        let mut totals: HashMap<u32, f64> = HashMap::new();
        let mut ll = 0.0;
        for (s, r) in &data.pairs {
            for &rw in r {
                let denom: f64 = s.iter().map(|&sw| t[&(sw, rw)]).sum();
                ll += (denom / s.len() as f64).ln();
                for &sw in s {
                    let post = t[&(sw, rw)] / denom;
                    *counts.entry((sw, rw)).or_insert(0.0) += post;
                    *totals.entry(sw).or_insert(0.0) += post;
                }
            }
        }
        log_likelihood.push(ll);
        for (key, value) in t.iter_mut() {
            *value = counts[key] / totals[&key.0];
        }
    }
    log_likelihood.push(corpus_log_likelihood(&data, &t));

    let alignments = data
        .pairs
        .iter()
        .map(|(s, r)| {
            Alignment(
                r.iter()
                    .map(|&rw| {
                        let mut best = 0;
                        let mut best_p = f64::NEG_INFINITY;
                        for (pos, &sw) in s.iter().enumerate().skip(1) {
                            let p = t[&(sw, rw)];
                            if p > best_p {
                                best = pos;
                                best_p = p;
                            }
                        }
                        if t[&(0, rw)] > best_p {
                            0
                        } else {
                            best
                        }
                    })
                    .collect(),
            )
        })
        .collect();

    let lexical = t
        .into_iter()
        .map(|((s, r), p)| {
            (
                (
                    data.source_words[s as usize].clone(),
                    data.response_words[r as usize].clone(),
                ),
                p,
            )
        })
        .collect();

    Ok(AlignmentModel {
        alignments,
        log_likelihood,
        lexical,
    })
}

fn corpus_log_likelihood(data: &Interned, t: &HashMap<(u32, u32), f64>) -> f64 {
    let mut ll = 0.0;
    for (s, r) in &data.pairs {
        for &rw in r {
            let denom: f64 = s.iter().map(|&sw| t[&(sw, rw)]).sum();
            ll += (denom / s.len() as f64).ln();
        }
    }
    ll
}
