use crate::lexicons::{are_homophones, cosine, same_rhyme, LexiconSet};

/// Number of humor features.
pub const NUM_FEATURES: usize = 15;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "min_dist_response",
    "max_dist_response",
    "min_dist_turn",
    "max_dist_turn",
    "antonyms_response",
    "antonyms_turn",
    "synonyms_response",
    "synonyms_turn",
    "polarity_response",
    "polarity_turn",
    "homophones_response",
    "homophones_turn",
    "rhymes_response",
    "rhymes_turn",
    "slang_response",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

/// Min and max of 1 − cosine over pairs of embedded tokens; (0, 0) with
/// fewer than two embedded tokens.
fn distance_range(tokens: &[&str], lex: &LexiconSet) -> (f64, f64) {
    let vectors: Vec<&[f64]> = tokens.iter().filter_map(|t| lex.embeddings.get(t)).collect();
    if vectors.len() < 2 {
        return (0.0, 0.0);
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            let d = 1.0 - cosine(vectors[i], vectors[j]).unwrap_or(0.0);
            min = min.min(d);
            max = max.max(d);
        }
    }
    (min, max)
}

fn count_pairs(tokens: &[&str], pred: impl Fn(&str, &str) -> bool) -> f64 {
    let mut n = 0usize;
    for i in 0..tokens.len() {
        for j in i + 1..tokens.len() {
            if pred(tokens[i], tokens[j]) {
                n += 1;
            }
        }
    }
    n as f64
}

/// Features of `response` alone and of the whole turn (input followed by response).
///
/// Pair counts are over unordered pairs of distinct positions, so every
/// feature is invariant to token order.
pub fn extract_features<S: AsRef<str>>(input: &[S], response: &[S], lex: &LexiconSet) -> FeatureVector {
    let resp: Vec<&str> = response.iter().map(AsRef::as_ref).collect();
    let turn: Vec<&str> = input.iter().map(AsRef::as_ref).chain(resp.iter().copied()).collect();

    let antonym = |a: &str, b: &str| lex.antonyms.contains(a, b);
    let synonym = |a: &str, b: &str| lex.synonyms.contains(a, b);
    let homophone = |a: &str, b: &str| are_homophones(a, b, &lex.pinyin, lex.tone_mode);
    let rhyme = |a: &str, b: &str| same_rhyme(a, b, &lex.pinyin);
    let polarity = |ts: &[&str]| ts.iter().map(|t| lex.sentiment.polarity(t)).sum::<f64>();

    let (min_r, max_r) = distance_range(&resp, lex);
    let (min_t, max_t) = distance_range(&turn, lex);
    FeatureVector([
        min_r,
        max_r,
        min_t,
        max_t,
        count_pairs(&resp, antonym),
        count_pairs(&turn, antonym),
        count_pairs(&resp, synonym),
        count_pairs(&turn, synonym),
        polarity(&resp),
        polarity(&turn),
        count_pairs(&resp, homophone),
        count_pairs(&turn, homophone),
        count_pairs(&resp, rhyme),
        count_pairs(&turn, rhyme),
        resp.iter().filter(|t| lex.slang.contains(t)).count() as f64,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicons::{EmbeddingTable, PairLexicon, PinyinTable, SentimentLexicon, SlangList};
    use proptest::prelude::*;

    fn lexicons() -> LexiconSet {
        let mut emb = EmbeddingTable::new(2);
        emb.insert("好", vec![1.0, 0.0]).unwrap();
        emb.insert("坏", vec![-1.0, 0.0]).unwrap();
        emb.insert("高", vec![1.0, 1.0]).unwrap();
        let mut pinyin = PinyinTable::default();
        for (c, s) in [
            ('猪', "zhu1"),
            ('尾', "yi3"),
            ('注', "zhu4"),
            ('意', "yi4"),
            ('花', "hua1"),
            ('瓜', "gua1"),
        ] {
            pinyin.insert(c, s).unwrap();
        }
        LexiconSet {
            embeddings: emb,
            pinyin,
            sentiment: SentimentLexicon::new([("好".to_owned(), 1.0), ("坏".to_owned(), -1.0)]),
            antonyms: PairLexicon::new([("高", "低"), ("好", "坏")]),
            synonyms: PairLexicon::new([("高", "好")]),
            slang: SlangList::new(["牛"]),
            ..Default::default()
        }
    }

    #[test]
    fn identical_embeddings_have_zero_distance() {
        let f = extract_features(&["高"], &["好", "好"], &lexicons());
        assert_eq!(f.get(0), 0.0);
        assert_eq!(f.get(1), 0.0);
        assert!(f.get(3) > 0.0);
    }

    #[test]
    fn single_antonym_pair() {
        let f = extract_features(&["我"], &["高", "低"], &lexicons());
        assert_eq!(f.get(4), 1.0);
        assert_eq!(f.get(5), 1.0);
    }

    #[test]
    fn polarity_sums() {
        let f = extract_features(&["坏"], &["好", "好", "坏"], &lexicons());
        assert_eq!(f.get(8), 1.0);
        assert_eq!(f.get(9), 0.0);
    }

    #[test]
    fn homophones_across_the_turn() {
        let f = extract_features(&["注意"], &["猪尾"], &lexicons());
        assert_eq!(f.get(10), 0.0);
        assert!(f.get(11) >= 1.0);
    }

    #[test]
    fn rhymes_and_slang() {
        let f = extract_features(&["西瓜"], &["花", "牛", "牛"], &lexicons());
        assert_eq!(f.get(12), 0.0);
        // only the last syllable counts, so the unmapped 西 does not matter
        assert_eq!(f.get(13), 1.0);
        assert_eq!(f.get(14), 2.0);
    }

    #[test]
    fn fewer_than_two_embedded_tokens_give_zero() {
        let f = extract_features::<&str>(&[], &["好", "猫"], &lexicons());
        assert_eq!((f.get(0), f.get(1)), (0.0, 0.0));
    }

    proptest! {
        #[test]
        fn order_invariant(
            input in proptest::collection::vec(prop::sample::select(vec!["好", "坏", "高", "低", "注意", "猪尾", "花", "瓜", "牛"]), 0..5),
            response in proptest::collection::vec(prop::sample::select(vec!["好", "坏", "高", "低", "注意", "猪尾", "花", "瓜", "牛"]), 0..6),
            seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let lex = lexicons();
            let base = extract_features(&input, &response, &lex);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut r2 = response.clone();
            r2.shuffle(&mut rng);
            let mut i2 = input.clone();
            i2.shuffle(&mut rng);
            let shuffled = extract_features(&i2, &r2, &lex);
            for k in 0..NUM_FEATURES {
                prop_assert!((base.get(k) - shuffled.get(k)).abs() < 1e-12, "feature {}", k);
            }
            for k in 0..4 {
                prop_assert!((0.0..=2.0).contains(&base.get(k)));
            }
        }
    }
}
