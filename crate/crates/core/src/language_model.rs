//! Word n-gram language model (up to order 4) with recursive linear
//! interpolation down to a uniform distribution.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use crate::error::{read_to_string, Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub const MAX_ORDER: usize = 4;
pub const DEFAULT_MU: f64 = 0.75;

const UNK_ID: u32 = 0;
const BOS_ID: u32 = 1;
const EOS_ID: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    mu: f64,
    ids: HashMap<String, u32>,
    words: Vec<String>,
    ngrams: HashMap<Box<[u32]>, u64>,
    /// Continuation totals Σ_w c(h w), keyed by history h (empty = all tokens).
    histories: HashMap<Box<[u32]>, u64>,
    /// Predictable types excluding `<unk>`.
    vocab_size: usize,
}

impl NGramModel {
    fn empty(order: usize, mu: f64) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::Config(format!(
                "language model order {order} outside 1..={MAX_ORDER}"
            )));
        }
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::Config(format!("interpolation weight {mu} outside [0, 1]")));
        }
        let words: Vec<String> = [UNK, BOS, EOS].iter().map(|s| s.to_string()).collect();
        let ids = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Ok(NGramModel {
            order,
            mu,
            ids,
            words,
            ngrams: HashMap::new(),
            histories: HashMap::new(),
            vocab_size: 0,
        })
    }

    fn intern(&mut self, w: &str) -> u32 {
        if w == BOS || w == EOS {
            return UNK_ID;
        }
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(w.to_owned());
        self.ids.insert(w.to_owned(), id);
        id
    }

    fn add_count(&mut self, gram: &[u32], count: u64) {
        *self.ngrams.entry(gram.into()).or_insert(0) += count;
        *self.histories.entry(gram[..gram.len() - 1].into()).or_insert(0) += count;
    }

    fn finish(&mut self) {
        self.vocab_size = self.ngrams.keys().filter(|g| g.len() == 1 && g[0] != UNK_ID).count();
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Number of predictable word types, `</s>` included and `<unk>` excluded.
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Id of a word; unknown words and literal boundary markers map to `<unk>`.
    pub fn id(&self, w: &str) -> u32 {
        match self.ids.get(w) {
            Some(&id) if id != BOS_ID => id,
            _ => UNK_ID,
        }
    }

    pub fn bos(&self) -> u32 {
        BOS_ID
    }

    pub fn eos(&self) -> u32 {
        EOS_ID
    }

    /// All outcomes a conditional distribution ranges over: `<unk>` plus the vocabulary.
    pub fn outcomes(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .ngrams
            .keys()
            .filter(|g| g.len() == 1)
            .map(|g| g[0])
            .filter(|&id| id != UNK_ID)
            .collect();
        out.push(UNK_ID);
        out.sort_unstable();
        out
    }

    pub fn count(&self, gram: &[&str]) -> u64 {
        let ids: Vec<u32> = gram
            .iter()
            .map(|w| if *w == BOS { BOS_ID } else { self.id(w) })
            .collect();
        self.ngrams.get(ids.as_slice()).copied().unwrap_or(0)
    }

    /// Interpolated p(word | history); only the last `order − 1` history ids matter.
    pub fn prob(&self, word: u32, history: &[u32]) -> f64 {
        let mut p = 1.0 / (self.vocab_size + 1) as f64;
        let usable = history.len().min(self.order - 1);
        let mut gram: Vec<u32> = Vec::with_capacity(usable + 1);
        for k in 0..=usable {
            let h = &history[history.len() - k..];
            let Some(&total) = self.histories.get(h) else {
                continue;
            };
            gram.clear();
            gram.extend_from_slice(h);
            gram.push(word);
            let c = self.ngrams.get(gram.as_slice()).copied().unwrap_or(0);
            p = self.mu * c as f64 / total as f64 + (1.0 - self.mu) * p;
        }
        p
    }

    pub fn log_prob(&self, word: u32, history: &[u32]) -> f64 {
        self.prob(word, history).ln()
    }

    /// Boundary padding that starts every sentence.
    pub fn start_history(&self) -> Vec<u32> {
        vec![BOS_ID; self.order - 1]
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "ngram-counts\torder={}\tvocab={}\tmu={}",
            self.order, self.vocab_size, self.mu
        )?;
        let sorted: BTreeMap<(usize, String), u64> = self
            .ngrams
            .iter()
            .map(|(g, &c)| {
                let words: Vec<&str> = g.iter().map(|&id| self.words[id as usize].as_str()).collect();
                ((g.len(), words.join(" ")), c)
            })
            .collect();
        for ((n, gram), c) in sorted {
            writeln!(w, "{n}\t{gram}\t{c}")?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let what = "language model counts";
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(what, 1, "missing header"))?;
        let mut fields = header.split('\t');
        if fields.next() != Some("ngram-counts") {
            return Err(Error::parse(what, 1, "header must start with ngram-counts"));
        }
        let mut order = None;
        let mut vocab = None;
        let mut mu = None;
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| Error::parse(what, 1, format!("bad header field {f:?}")))?;
            let bad = |_| Error::parse(what, 1, format!("bad value in {f:?}"));
            match k {
                "order" => order = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "vocab" => vocab = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "mu" => mu = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                _ => return Err(Error::parse(what, 1, format!("unknown header key {k}"))),
            }
        }
        let (Some(order), Some(vocab), Some(mu)) = (order, vocab, mu) else {
            return Err(Error::parse(what, 1, "header needs order, vocab and mu"));
        };
        let mut model = Self::empty(order, mu)?;
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 {
                return Err(Error::parse(what, i + 1, "expected n<TAB>words<TAB>count"));
            }
            let n: usize = parts[0].parse().map_err(|_| Error::parse(what, i + 1, "bad order"))?;
            let count: u64 = parts[2].parse().map_err(|_| Error::parse(what, i + 1, "bad count"))?;
            let words: Vec<&str> = parts[1].split(' ').collect();
            if n == 0 || n > order || words.len() != n {
                return Err(Error::parse(what, i + 1, "n-gram length mismatch"));
            }
            let ids: Vec<u32> = words
                .iter()
                .map(|w| match *w {
                    BOS => BOS_ID,
                    EOS => EOS_ID,
                    UNK => UNK_ID,
                    other => model.intern(other),
                })
                .collect();
            model.add_count(&ids, count);
        }
        model.finish();
        if model.vocab_size != vocab {
            return Err(Error::parse(
                what,
                1,
                format!("header vocab {vocab} but counts define {}", model.vocab_size),
            ));
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?)
    }
}

/// Counts all n-grams up to `order` over `<s>`-padded, `</s>`-terminated sentences.
pub fn train_lm<S: AsRef<str>>(sentences: &[Vec<S>], order: usize, mu: f64) -> Result<NGramModel> {
    if sentences.is_empty() {
        return Err(Error::Data("cannot train a language model on no sentences".into()));
    }
    let mut model = NGramModel::empty(order, mu)?;
    for sentence in sentences {
        let mut padded = vec![BOS_ID; order - 1];
        for w in sentence {
            let id = model.intern(w.as_ref());
            padded.push(id);
        }
        padded.push(EOS_ID);
        for j in order - 1..padded.len() {
            for n in 1..=order {
                model.add_count(&padded[j + 1 - n..=j], 1);
            }
        }
    }
    model.finish();
    Ok(model)
}

/// Natural-log probability of a complete sentence, end marker included.
pub fn lm_log_prob<S: AsRef<str>>(model: &NGramModel, tokens: &[S]) -> f64 {
    let mut history = model.start_history();
    let mut total = 0.0;
    for w in tokens {
        let id = model.id(w.as_ref());
        total += model.log_prob(id, &history);
        history.push(id);
    }
    total + model.log_prob(EOS_ID, &history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sents(lines: &[&str]) -> Vec<Vec<String>> {
        lines.iter().map(|l| crate::split_tokens(l)).collect()
    }

    #[test]
    fn hand_counts() {
        let m = train_lm(&sents(&["a b", "a c"]), 4, DEFAULT_MU).unwrap();
        assert_eq!(m.count(&["a"]), 2);
        assert_eq!(m.count(&["a", "b"]), 1);
        assert_eq!(m.count(&["<s>", "<s>", "<s>", "a"]), 2);
        assert_eq!(m.vocab_size(), 4);

        let single = train_lm(&sents(&["a"]), 4, DEFAULT_MU).unwrap();
        assert_eq!(single.count(&["<s>", "<s>", "a", "</s>"]), 1);

        assert!(train_lm::<String>(&[], 4, DEFAULT_MU).is_err());
        assert!(train_lm(&sents(&["a"]), 5, DEFAULT_MU).is_err());
    }

    #[test]
    fn bigram_interpolation_matches_hand_evaluation() {
        // V = {a, b, c, </s>}, uniform floor 1/(V+1) = 1/5;
        // p1(b) = 0.75 * 1/6 + 0.25 * 1/5; p2(b|a) = 0.75 * 1/2 + 0.25 * p1(b)
        let m = train_lm(&sents(&["a b", "a c"]), 2, 0.75).unwrap();
        let expected = 0.75 * 0.5 + 0.25 * (0.75 * (1.0 / 6.0) + 0.25 * (1.0 / 5.0));
        let p = m.prob(m.id("b"), &[m.id("a")]);
        assert!((p - expected).abs() < 1e-15, "{p} vs {expected}");
    }

    #[test]
    fn unseen_history_backs_off_fully() {
        let m = train_lm(&sents(&["a b", "a c"]), 4, 0.75).unwrap();
        let unk = m.id("zzz");
        let unigram = m.prob(m.id("b"), &[]);
        assert_eq!(m.prob(m.id("b"), &[unk, unk, unk]), unigram);
        // an unknown word under an unseen history only gets the uniform share
        assert_eq!(m.prob(unk, &[unk, unk, unk]), 0.25 * (1.0 / 5.0));
    }

    #[test]
    fn empty_sequence_is_end_marker_only() {
        let m = train_lm(&sents(&["a b", "a c", ""]), 4, 0.75).unwrap();
        let expected = m.log_prob(m.eos(), &m.start_history());
        assert_eq!(lm_log_prob::<&str>(&m, &[]), expected);
    }

    #[test]
    fn more_data_never_lowers_seen_bigram() {
        let base = train_lm(&sents(&["a b", "a c", "c a"]), 2, 0.75).unwrap();
        let more = train_lm(&sents(&["a b", "a c", "c a", "a b"]), 2, 0.75).unwrap();
        assert!(more.prob(more.id("b"), &[more.id("a")]) >= base.prob(base.id("b"), &[base.id("a")]));
    }

    #[test]
    fn counts_round_trip() {
        let m = train_lm(&sents(&["a b c", "b c d e", "a"]), 4, 0.6).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("ngram-counts\torder=4\tvocab=6\tmu=0.6\n"));
        let back = NGramModel::parse(&text).unwrap();
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        assert_eq!(buf, again);
        for s in ["a b", "e d c", "q"] {
            let t = crate::split_tokens(s);
            assert_eq!(lm_log_prob(&m, &t), lm_log_prob(&back, &t));
        }
        assert!(NGramModel::parse("ngram-counts\torder=4\tvocab=9\tmu=0.6\n1\ta\t1\n").is_err());
    }

    #[test]
    fn ngram_counts_bounded_by_history() {
        let m = train_lm(&sents(&["a b a b", "b a", "c"]), 4, 0.75).unwrap();
        for (g, &c) in &m.ngrams {
            assert!(c <= m.histories[&g[..g.len() - 1]]);
        }
    }

    proptest! {
        #[test]
        fn distributions_are_normalized(
            corpus in proptest::collection::vec(proptest::collection::vec(0u8..5, 0..6), 1..6),
            history in proptest::collection::vec(0u8..7, 0..4),
            order in 1usize..=4,
        ) {
            let sentences: Vec<Vec<String>> = corpus.iter().map(|s| s.iter().map(|c| format!("w{c}")).collect()).collect();
            let m = train_lm(&sentences, order, 0.75).unwrap();
            let h: Vec<u32> = history.iter().map(|c| if *c == 6 { m.bos() } else { m.id(&format!("w{c}")) }).collect();
            let total: f64 = m.outcomes().iter().map(|&w| m.prob(w, &h)).sum();
            prop_assert!((total - 1.0).abs() < 1e-6);
        }

        #[test]
        fn scores_are_finite(tokens in proptest::collection::vec("[a-f]", 0..8)) {
            let m = train_lm(&sents(&["a b", "c d e"]), 4, 0.75).unwrap();
            let s = lm_log_prob(&m, &tokens);
            prop_assert!(s.is_finite() && s <= 0.0);
        }
    }
}
