//! External word resources used by the humor features.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{read_to_string, Error, Result};

/// Syllable shown for a character missing from the pinyin table. It never
/// matches anything, itself included.
pub const UNKNOWN_SYLLABLE: &str = "?";

static FINALS_TSV: &str = include_str!("../data/syllable_finals.tsv");

fn finals() -> &'static HashMap<&'static str, &'static str> {
    static TABLE: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    TABLE.get_or_init(|| FINALS_TSV.lines().filter_map(|l| l.split_once('\t')).collect())
}

/// Final (rhyme part) of a toneless pinyin syllable, e.g. `hua` -> `ua`.
///
/// `y`/`w` spellings and the `j q x` + `u` convention are normalized, so
/// `yu` and `ju` share the final `v`.
pub fn syllable_final(syllable: &str) -> Option<&'static str> {
    finals().get(syllable).copied()
}

#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Data(format!(
                "embedding of length {} in a table of dimension {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|x| x.is_nan()) {
            return Err(Error::Data("NaN in embedding".into()));
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    /// Parses the word2vec text format. A leading `COUNT DIM` header is optional.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if i == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                let dim: usize = fields[1].parse().unwrap_or(0);
                if dim == 0 {
                    return Err(Error::parse("embeddings", 1, "dimension must be positive"));
                }
                table = Some(EmbeddingTable::new(dim));
                continue;
            }
            if fields.len() < 2 {
                return Err(Error::parse("embeddings", i + 1, "expected a word followed by values"));
            }
            let vector = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse("embeddings", i + 1, e.to_string()))?;
            let t = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
            t.insert(fields[0], vector)
                .map_err(|e| Error::parse("embeddings", i + 1, e.to_string()))?;
        }
        Ok(table.unwrap_or_default())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Cosine similarity; 0 when either vector is all zeros.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Data(format!(
            "cosine of vectors with dimensions {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ToneMode {
    /// Compare syllables with tone digits removed.
    #[default]
    Toneless,
    Toned,
}

/// Character to pinyin reading. Only the first listed reading is kept.
#[derive(Debug, Clone, Default)]
pub struct PinyinTable {
    readings: HashMap<char, String>,
}

impl PinyinTable {
    pub fn insert(&mut self, ch: char, syllable: &str) -> Result<()> {
        let s = syllable.trim();
        let valid = !s.is_empty()
            && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
            && s.starts_with(|c: char| c.is_ascii_lowercase());
        if !valid {
            return Err(Error::Data(format!("invalid pinyin syllable {s:?} for {ch}")));
        }
        self.readings.entry(ch).or_insert_with(|| s.to_owned());
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = PinyinTable::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (ch, readings) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse("pinyin table", i + 1, "expected char<TAB>syllables"))?;
            let mut chars = ch.chars();
            let c = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(Error::parse("pinyin table", i + 1, "first field must be one character")),
            };
            let first = readings.split(',').next().unwrap_or("");
            table
                .insert(c, &first.to_lowercase())
                .map_err(|e| Error::parse("pinyin table", i + 1, e.to_string()))?;
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?)
    }

    pub fn syllables(&self, word: &str, mode: ToneMode) -> Vec<String> {
        word.chars()
            .map(|c| match self.readings.get(&c) {
                Some(s) => match mode {
                    ToneMode::Toned => s.clone(),
                    ToneMode::Toneless => s.trim_end_matches(|c: char| c.is_ascii_digit()).to_owned(),
                },
                None => UNKNOWN_SYLLABLE.to_owned(),
            })
            .collect()
    }
}

/// Toneless syllables of `word`, one per character.
pub fn pinyin_of(word: &str, table: &PinyinTable) -> Vec<String> {
    table.syllables(word, ToneMode::Toneless)
}

fn fully_mapped(syllables: &[String]) -> bool {
    !syllables.is_empty() && syllables.iter().all(|s| s != UNKNOWN_SYLLABLE)
}

pub fn are_homophones(w1: &str, w2: &str, table: &PinyinTable, mode: ToneMode) -> bool {
    let a = table.syllables(w1, mode);
    fully_mapped(&a) && a == table.syllables(w2, mode)
}

/// True when the last syllables of both words share a final.
pub fn same_rhyme(w1: &str, w2: &str, table: &PinyinTable) -> bool {
    let last_final = |w: &str| {
        let last = w.chars().last()?;
        let syl = table.syllables(&last.to_string(), ToneMode::Toneless).pop()?;
        syllable_final(&syl)
    };
    match (last_final(w1), last_final(w2)) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    }
}

#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    polarity: HashMap<String, f64>,
}

impl SentimentLexicon {
    pub fn new<I: IntoIterator<Item = (String, f64)>>(entries: I) -> Self {
        SentimentLexicon {
            polarity: entries.into_iter().collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut polarity = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (w, p) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse("sentiment lexicon", i + 1, "expected word<TAB>polarity"))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::parse("sentiment lexicon", i + 1, e.to_string()))?;
            polarity.insert(w.trim().to_owned(), p);
        }
        Ok(SentimentLexicon { polarity })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?)
    }

    pub fn polarity(&self, word: &str) -> f64 {
        self.polarity.get(word).copied().unwrap_or(0.0)
    }
}

/// Unordered word pairs (antonyms or synonyms).
#[derive(Debug, Clone, Default)]
pub struct PairLexicon {
    pairs: HashSet<(String, String)>,
}

impl PairLexicon {
    fn key(a: &str, b: &str) -> (String, String) {
        if a <= b {
            (a.to_owned(), b.to_owned())
        } else {
            (b.to_owned(), a.to_owned())
        }
    }

    pub fn new<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        PairLexicon {
            pairs: pairs
                .into_iter()
                .map(|(a, b)| Self::key(a.as_ref(), b.as_ref()))
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse("pair lexicon", i + 1, "expected w1<TAB>w2"))?;
            pairs.insert(Self::key(a.trim(), b.trim()));
        }
        Ok(PairLexicon { pairs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?)
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        self.pairs.contains(&Self::key(a, b))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SlangList {
    words: HashSet<String>,
}

impl SlangList {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        SlangList {
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    pub fn parse(text: &str) -> Self {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }
}

/// Everything the humor features look up. Any part may be empty.
#[derive(Debug, Clone, Default)]
pub struct LexiconSet {
    pub embeddings: EmbeddingTable,
    pub pinyin: PinyinTable,
    pub sentiment: SentimentLexicon,
    pub antonyms: PairLexicon,
    pub synonyms: PairLexicon,
    pub slang: SlangList,
    pub tone_mode: ToneMode,
}

/// File locations for a [`LexiconSet`]; missing entries load as empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LexiconPaths {
    pub embeddings: Option<std::path::PathBuf>,
    pub pinyin: Option<std::path::PathBuf>,
    pub sentiment: Option<std::path::PathBuf>,
    pub antonyms: Option<std::path::PathBuf>,
    pub synonyms: Option<std::path::PathBuf>,
    pub slang: Option<std::path::PathBuf>,
}

impl LexiconSet {
    pub fn load(paths: &LexiconPaths, tone_mode: ToneMode) -> Result<Self> {
        fn opt<T: Default>(p: &Option<std::path::PathBuf>, f: impl Fn(&Path) -> Result<T>) -> Result<T> {
            p.as_deref().map_or_else(|| Ok(T::default()), f)
        }
        Ok(LexiconSet {
            embeddings: opt(&paths.embeddings, EmbeddingTable::load)?,
            pinyin: opt(&paths.pinyin, PinyinTable::load)?,
            sentiment: opt(&paths.sentiment, SentimentLexicon::load)?,
            antonyms: opt(&paths.antonyms, PairLexicon::load)?,
            synonyms: opt(&paths.synonyms, PairLexicon::load)?,
            slang: opt(&paths.slang, SlangList::load)?,
            tone_mode,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(entries: &[(char, &str)]) -> PinyinTable {
        let mut t = PinyinTable::default();
        for &(c, s) in entries {
            t.insert(c, s).unwrap();
        }
        t
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[0.3, -2.0], &[0.3, -2.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn pinyin_examples() {
        let t = table(&[('注', "zhu4"), ('意', "yi4")]);
        assert_eq!(pinyin_of("注意", &t), vec!["zhu", "yi"]);
        assert_eq!(pinyin_of("猫", &t), vec!["?"]);
        assert!(pinyin_of("", &t).is_empty());
        assert_eq!(t.syllables("注", ToneMode::Toned), vec!["zhu4"]);
    }

    #[test]
    fn homophones_ignore_tone_by_default() {
        let t = table(&[('注', "zhu4"), ('意', "yi4"), ('猪', "zhu1"), ('尾', "yi3")]);
        assert!(are_homophones("猪尾", "注意", &t, ToneMode::Toneless));
        assert!(!are_homophones("猪尾", "注意", &t, ToneMode::Toned));
        assert!(!are_homophones("猫", "猫", &t, ToneMode::Toneless));
    }

    #[test]
    fn rhyme_examples() {
        let t = table(&[
            ('花', "hua1"),
            ('家', "jia1"),
            ('瓜', "gua1"),
            ('去', "qu4"),
            ('鱼', "yu2"),
        ]);
        assert!(!same_rhyme("花", "家", &t));
        assert!(same_rhyme("花", "花", &t));
        assert!(same_rhyme("西瓜", "花", &t));
        assert!(same_rhyme("去", "鱼", &t));
        assert!(!same_rhyme("花", "猫", &t));
        assert!(!same_rhyme("猫", "猫", &t));
    }

    #[test]
    fn bundled_finals() {
        assert_eq!(syllable_final("zhu"), Some("u"));
        assert_eq!(syllable_final("liu"), Some("iou"));
        assert_eq!(syllable_final("you"), Some("iou"));
        assert_eq!(syllable_final("shi"), Some("ii"));
        assert!(finals().len() > 400);
    }

    #[test]
    fn embeddings_with_and_without_header() {
        let a = EmbeddingTable::parse("2 3\nx 1 0 0\ny 0 1 0\n").unwrap();
        assert_eq!((a.len(), a.dim()), (2, 3));
        let b = EmbeddingTable::parse("x 1 0\ny 0 1\n").unwrap();
        assert_eq!(b.dim(), 2);
        assert!(EmbeddingTable::parse("x 1 0\ny 1\n").is_err());
        assert!(EmbeddingTable::parse("x 1 NaN\n").is_err());
    }

    #[test]
    fn other_lexicons_parse() {
        let s = SentimentLexicon::parse("好\t1\n坏\t-1.5\n").unwrap();
        assert_eq!(s.polarity("坏"), -1.5);
        assert_eq!(s.polarity("猫"), 0.0);
        let p = PairLexicon::parse("高\t低\n").unwrap();
        assert!(p.contains("低", "高") && p.contains("高", "低"));
        assert!(PairLexicon::parse("高 低\n").is_err());
        let pin = PinyinTable::parse("好\thao3,hao4\n").unwrap();
        assert_eq!(pin.syllables("好", ToneMode::Toned), vec!["hao3"]);
        assert!(PinyinTable::parse("好好\thao\n").is_err());
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(
            u in proptest::collection::vec(-5.0f64..5.0, 4),
            v in proptest::collection::vec(-5.0f64..5.0, 4),
            k in 0.01f64..100.0,
        ) {
            let c = cosine(&u, &v).unwrap();
            prop_assert!((-1.0..=1.0).contains(&c));
            prop_assert!((c - cosine(&v, &u).unwrap()).abs() < 1e-12);
            let ku: Vec<f64> = u.iter().map(|x| x * k).collect();
            prop_assert!((c - cosine(&ku, &v).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn pinyin_length_matches_chars(word in "[注意猪尾a-c]{0,6}") {
            let t = table(&[('注', "zhu"), ('意', "yi")]);
            prop_assert_eq!(pinyin_of(&word, &t).len(), word.chars().count());
        }
    }
}
