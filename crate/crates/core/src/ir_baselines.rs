//! Retrieval baselines: nearest response, nearest utterance, and nearest
//! response to the utterance plus its preceding turns.

use std::collections::HashMap;

use crate::corpus::{UtterancePair, CONTEXT_TURNS};
use crate::error::{Error, Result};
use crate::Tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TermWeighting {
    /// tf · ln(1 + N/df), with N counting utterances and responses.
    #[default]
    TfIdf,
    RawTf,
}

type SparseVec = Vec<(u32, f64)>;

/// Immutable bag-of-words index over a pool of pairs.
#[derive(Debug, Clone)]
pub struct RetrievalIndex {
    pool: Vec<UtterancePair>,
    weighting: TermWeighting,
    terms: HashMap<String, u32>,
    idf: Vec<f64>,
    utterance_postings: Vec<Vec<(usize, f64)>>,
    response_postings: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval<'a> {
    pub pair_id: usize,
    pub response: &'a Tokens,
    /// True when nothing in the pool shares a term with the query.
    pub no_overlap: bool,
}

fn normalize(v: &mut SparseVec) {
    let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in v.iter_mut() {
            *w /= norm;
        }
    }
}

impl RetrievalIndex {
    pub fn build(pool: Vec<UtterancePair>, weighting: TermWeighting) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::Data("retrieval pool is empty".into()));
        }
        let mut terms: HashMap<String, u32> = HashMap::new();
        let mut df: Vec<u64> = Vec::new();
        for pair in &pool {
            for doc in [&pair.source, &pair.reference] {
                let mut seen: Vec<u32> = doc
                    .iter()
                    .map(|t| {
                        let next = terms.len() as u32;
                        *terms.entry(t.clone()).or_insert(next)
                    })
                    .collect();
                seen.sort_unstable();
                seen.dedup();
                df.resize(terms.len(), 0);
                for id in seen {
                    df[id as usize] += 1;
                }
            }
        }
        let docs = 2.0 * pool.len() as f64;
        let idf = df.iter().map(|&d| (1.0 + docs / d as f64).ln()).collect();
        let mut index = RetrievalIndex {
            weighting,
            idf,
            utterance_postings: vec![Vec::new(); terms.len()],
            response_postings: vec![Vec::new(); terms.len()],
            terms,
            pool: Vec::new(),
        };
        for (id, pair) in pool.iter().enumerate() {
            for (term, w) in index.vectorize(pair.source.iter()) {
                index.utterance_postings[term as usize].push((id, w));
            }
            for (term, w) in index.vectorize(pair.reference.iter()) {
                index.response_postings[term as usize].push((id, w));
            }
        }
        index.pool = pool;
        Ok(index)
    }

    pub fn pool(&self) -> &[UtterancePair] {
        &self.pool
    }

    pub fn len(&self) -> usize {
        self.pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.terms.get(term).map(|&t| self.idf[t as usize])
    }

    /// Unit-length weighted vector; terms outside the index vocabulary are dropped.
    fn vectorize<'t>(&self, tokens: impl Iterator<Item = &'t String>) -> SparseVec {
        let mut tf: HashMap<u32, f64> = HashMap::new();
        for t in tokens {
            if let Some(&id) = self.terms.get(t.as_str()) {
                *tf.entry(id).or_insert(0.0) += 1.0;
            }
        }
        let mut v: SparseVec = tf
            .into_iter()
            .map(|(id, f)| match self.weighting {
                TermWeighting::TfIdf => (id, f * self.idf[id as usize]),
                TermWeighting::RawTf => (id, f),
            })
            .collect();
        v.sort_unstable_by_key(|&(id, _)| id);
        normalize(&mut v);
        v
    }

    /// Cosine of the query against every pool document reachable through
    /// `postings`; the highest wins, ties to the lowest pair id.
    fn nearest<'a>(&'a self, query: &SparseVec, postings: &[Vec<(usize, f64)>]) -> Retrieval<'a> {
        let mut sims = vec![0.0; self.pool.len()];
        for &(term, qw) in query {
            for &(id, dw) in &postings[term as usize] {
                sims[id] += qw * dw;
            }
        }
        let mut best = 0;
        for (id, &s) in sims.iter().enumerate() {
            if s > sims[best] {
                best = id;
            }
        }
        Retrieval {
            pair_id: best,
            response: &self.pool[best].reference,
            no_overlap: sims[best] <= 0.0,
        }
    }

    /// IR-UR: the pool response most similar to the query.
    pub fn ir_ur<S: AsRef<str>>(&self, query: &[S]) -> Retrieval<'_> {
        let owned: Vec<String> = query.iter().map(|s| s.as_ref().to_owned()).collect();
        self.nearest(&self.vectorize(owned.iter()), &self.response_postings)
    }

    /// IR-UU: the response paired with the pool utterance most similar to the query.
    pub fn ir_uu<S: AsRef<str>>(&self, query: &[S]) -> Retrieval<'_> {
        let owned: Vec<String> = query.iter().map(|s| s.as_ref().to_owned()).collect();
        self.nearest(&self.vectorize(owned.iter()), &self.utterance_postings)
    }

    /// IR-CXT: the pool response most similar to the preceding turns and the
    /// query taken together.
    pub fn ir_cxt<S: AsRef<str>>(&self, query: &[S], context: &[Vec<S>]) -> Result<Retrieval<'_>> {
        if context.len() > CONTEXT_TURNS {
            return Err(Error::Config(format!(
                "at most {CONTEXT_TURNS} context turns, got {}",
                context.len()
            )));
        }
        let owned: Vec<String> = context
            .iter()
            .flatten()
            .chain(query)
            .map(|s| s.as_ref().to_owned())
            .collect();
        Ok(self.nearest(&self.vectorize(owned.iter()), &self.response_postings))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::split_tokens;
    use proptest::prelude::*;

    fn pair(source: &str, reference: &str) -> UtterancePair {
        UtterancePair {
            source: split_tokens(source),
            reference: split_tokens(reference),
            dialogue_id: String::new(),
            turn_index: 0,
            context: vec![],
        }
    }

    fn fixture() -> RetrievalIndex {
        RetrievalIndex::build(
            vec![pair("x y", "a b"), pair("q", "x"), pair("r", "c d")],
            TermWeighting::TfIdf,
        )
        .unwrap()
    }

    #[test]
    fn idf_values() {
        let idx = fixture();
        // six documents; x appears in one utterance and one response
        assert!((idx.idf("x").unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!((idx.idf("a").unwrap() - 7f64.ln()).abs() < 1e-12);
        assert_eq!(idx.idf("zzz"), None);
    }

    #[test]
    fn exact_response_match() {
        let idx = fixture();
        let r = idx.ir_ur(&["c", "d"]);
        assert_eq!((r.pair_id, r.no_overlap), (2, false));
    }

    #[test]
    fn utterance_match_returns_its_response() {
        let idx = fixture();
        assert_eq!(idx.ir_uu(&["x", "y"]).response, &split_tokens("a b"));
        assert_eq!(idx.ir_uu(&["r"]).pair_id, 2);
    }

    #[test]
    fn no_overlap_falls_back_to_first_pair() {
        let idx = fixture();
        for r in [
            idx.ir_ur(&["zzz"]),
            idx.ir_uu(&["zzz"]),
            idx.ir_cxt(&["zzz"], &[]).unwrap(),
        ] {
            assert_eq!((r.pair_id, r.no_overlap), (0, true));
        }
    }

    #[test]
    fn ties_go_to_lower_id() {
        let idx = RetrievalIndex::build(
            vec![pair("u", "m n"), pair("v", "n m"), pair("w", "m")],
            TermWeighting::TfIdf,
        )
        .unwrap();
        assert_eq!(idx.ir_ur(&["m", "n"]).pair_id, 0);
        assert_eq!(idx.ir_ur(&["n", "m"]).pair_id, 0);
    }

    #[test]
    fn context_shifts_the_winner() {
        let idx = fixture();
        assert_eq!(idx.ir_ur(&["x"]).pair_id, 1);
        // query {x, a, b}: against "a b" the cosine is sqrt(2)·ln 7 / |q|,
        // against "x" it is ln 4 / |q|
        let (ln4, ln7) = (4f64.ln(), 7f64.ln());
        let q = (ln4 * ln4 + 2.0 * ln7 * ln7).sqrt();
        let cos_ab = 2.0 * ln7 * ln7 / (q * ln7 * 2f64.sqrt());
        let cos_x = ln4 * ln4 / (q * ln4);
        assert!(cos_ab > cos_x);
        let r = idx.ir_cxt(&["x"], &[vec!["a", "b"]]).unwrap();
        assert_eq!(r.pair_id, 0);
    }

    #[test]
    fn too_much_context_is_an_error() {
        let idx = fixture();
        let ctx = vec![vec!["a"]; 4];
        assert!(idx.ir_cxt(&["x"], &ctx).is_err());
    }

    #[test]
    fn raw_tf_mode() {
        let idx = RetrievalIndex::build(vec![pair("x", "a a b"), pair("y", "a b b")], TermWeighting::RawTf).unwrap();
        assert_eq!(idx.ir_ur(&["b"]).pair_id, 1);
        assert_eq!(idx.ir_ur(&["a"]).pair_id, 0);
    }

    #[test]
    fn empty_pool_is_an_error() {
        assert!(RetrievalIndex::build(vec![], TermWeighting::TfIdf).is_err());
    }

    fn pool_strategy() -> impl Strategy<Value = Vec<(Vec<String>, Vec<String>)>> {
        let doc = proptest::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 1..5)
            .prop_map(|v| v.into_iter().map(String::from).collect::<Vec<_>>());
        proptest::collection::vec((doc.clone(), doc), 1..8)
    }

    proptest! {
        #[test]
        fn utterance_query_finds_an_identical_vector(pool in pool_strategy(), pick in any::<prop::sample::Index>()) {
            let pairs: Vec<UtterancePair> = pool.iter().map(|(s, r)| pair(&s.join(" "), &r.join(" "))).collect();
            let idx = RetrievalIndex::build(pairs.clone(), TermWeighting::TfIdf).unwrap();
            let i = pick.index(pairs.len());
            let hit = idx.ir_uu(&pairs[i].source);
            prop_assert!(!hit.no_overlap);
            // the winner is the query's own pair or one whose bag of words points the same way
            let bag = |t: &[String]| { let mut v = t.to_vec(); v.sort(); v };
            let same_direction = |a: &[String], b: &[String]| {
                let (ba, bb) = (bag(a), bag(b));
                let mut ua = ba.clone(); ua.dedup();
                let mut ub = bb.clone(); ub.dedup();
                ua == ub && ua.iter().all(|t| ba.iter().filter(|x| *x == t).count() * bb.len() == bb.iter().filter(|x| *x == t).count() * ba.len())
            };
            prop_assert!(same_direction(&pairs[hit.pair_id].source, &pairs[i].source));
        }

        #[test]
        fn empty_context_reduces_to_ir_ur(pool in pool_strategy(), query in proptest::collection::vec(prop::sample::select(vec!["a", "b", "z"]), 0..4)) {
            let pairs: Vec<UtterancePair> = pool.iter().map(|(s, r)| pair(&s.join(" "), &r.join(" "))).collect();
            let idx = RetrievalIndex::build(pairs, TermWeighting::TfIdf).unwrap();
            prop_assert_eq!(idx.ir_cxt(&query, &[]).unwrap(), idx.ir_ur(&query));
        }
    }
}
