//! Dialogue transcripts, utterance pairs, segmentation and splitting.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};
use crate::{join_tokens, split_tokens, Tokens};

/// Number of preceding turns kept as retrieval context for each pair.
pub const CONTEXT_TURNS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// The leading comedian.
    Dougen,
    /// The supporting role, whose lines we generate.
    Penggen,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub dialogue_id: String,
    #[serde(rename = "turn")]
    pub turn_index: u64,
    pub role: Role,
    pub text: String,
}

/// A dougen utterance and the penggen reply that followed it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtterancePair {
    pub source: Tokens,
    pub reference: Tokens,
    pub dialogue_id: String,
    pub turn_index: u64,
    /// Up to three turns preceding the source, oldest first.
    pub context: Vec<Tokens>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<UtterancePair>,
    pub dev: Vec<UtterancePair>,
    pub test: Vec<UtterancePair>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractStats {
    pub pairs: usize,
    /// Dougen turns with no following penggen turn in the same dialogue.
    pub dropped_trailing: usize,
    /// Penggen turns that open a dialogue and so answer nothing.
    pub unpaired_penggen: usize,
}

/// Parses JSONL turn records and validates per-dialogue structure.
///
/// Dialogues keep the order of their first appearance; turns within a
/// dialogue are ordered by turn index.
pub fn parse_turns(text: &str) -> Result<Vec<DialogueTurn>> {
    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, Vec<DialogueTurn>> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let turn: DialogueTurn =
            serde_json::from_str(line).map_err(|e| Error::parse("turn record", i + 1, e.to_string()))?;
        if !grouped.contains_key(&turn.dialogue_id) {
            order.push(turn.dialogue_id.clone());
        }
        grouped.entry(turn.dialogue_id.clone()).or_default().push(turn);
    }

    let mut out = Vec::new();
    for id in order {
        let mut turns = grouped.remove(&id).unwrap_or_default();
        turns.sort_by_key(|t| t.turn_index);
        for w in turns.windows(2) {
            if w[0].turn_index == w[1].turn_index {
                return Err(Error::Structure(format!(
                    "dialogue {id}: duplicate turn index {}",
                    w[0].turn_index
                )));
            }
            if w[0].role == w[1].role {
                return Err(Error::Structure(format!(
                    "dialogue {id}: roles do not alternate at turns {} and {}",
                    w[0].turn_index, w[1].turn_index
                )));
            }
        }
        out.extend(turns);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<DialogueTurn>> {
    parse_turns(&read_to_string(path)?)
}

/// Word list for greedy longest-match segmentation.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: HashSet<String>,
    max_chars: usize,
}

impl Lexicon {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut lex = Lexicon::default();
        for w in words {
            let w: String = w.into();
            let w = w.trim();
            if w.is_empty() {
                continue;
            }
            lex.max_chars = lex.max_chars.max(w.chars().count());
            lex.words.insert(w.to_owned());
        }
        lex
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::new(read_to_string(path)?.lines()))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Greedy left-to-right longest-match segmentation.
///
/// Whitespace always separates tokens. A character that does not start any
/// lexicon word becomes a token of its own.
pub fn segment(text: &str, lexicon: &Lexicon) -> Tokens {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let longest = lexicon.max_chars.min(chars.len() - i).max(1);
            let mut taken = 1;
            for len in (2..=longest).rev() {
                let candidate: String = chars[i..i + len].iter().collect();
                if lexicon.contains(&candidate) {
                    taken = len;
                    break;
                }
            }
            out.push(chars[i..i + taken].iter().collect());
            i += taken;
        }
    }
    out
}

/// How raw turn text becomes tokens.
#[derive(Debug, Clone, Default)]
pub enum Segmenter {
    /// Text is already tokenized; split on whitespace only.
    #[default]
    Pretokenized,
    Greedy(Lexicon),
}

impl Segmenter {
    pub fn tokenize(&self, text: &str) -> Tokens {
        match self {
            Segmenter::Pretokenized => split_tokens(text),
            Segmenter::Greedy(lex) => segment(text, lex),
        }
    }
}

/// One pair per adjacent (dougen, penggen) turns of the same dialogue.
pub fn extract_pairs(turns: &[DialogueTurn], segmenter: &Segmenter) -> (Vec<UtterancePair>, ExtractStats) {
    let mut pairs = Vec::new();
    let mut stats = ExtractStats::default();
    let mut start = 0;
    while start < turns.len() {
        let id = &turns[start].dialogue_id;
        let end = turns[start..]
            .iter()
            .position(|t| &t.dialogue_id != id)
            .map_or(turns.len(), |p| start + p);
        let dialogue = &turns[start..end];
        let tokens: Vec<Tokens> = dialogue.iter().map(|t| segmenter.tokenize(&t.text)).collect();

        let mut i = 0;
        while i < dialogue.len() {
            match dialogue[i].role {
                Role::Penggen => {
                    if i == 0 {
                        stats.unpaired_penggen += 1;
                    }
                    i += 1;
                }
                Role::Dougen => {
                    if i + 1 < dialogue.len() && dialogue[i + 1].role == Role::Penggen {
                        let ctx_start = i.saturating_sub(CONTEXT_TURNS);
                        pairs.push(UtterancePair {
                            source: tokens[i].clone(),
                            reference: tokens[i + 1].clone(),
                            dialogue_id: id.clone(),
                            turn_index: dialogue[i].turn_index,
                            context: tokens[ctx_start..i].to_vec(),
                        });
                        i += 2;
                    } else {
                        stats.dropped_trailing += 1;
                        i += 1;
                    }
                }
            }
        }
        start = end;
    }
    stats.pairs = pairs.len();
    (pairs, stats)
}

/// Keeps pairs whose response length lies in `[min_response_words, max_response_words]`.
///
/// Pairs with an empty source are dropped as well.
pub fn filter_pairs(
    pairs: Vec<UtterancePair>,
    max_response_words: usize,
    min_response_words: usize,
) -> Result<Vec<UtterancePair>> {
    if max_response_words < min_response_words {
        return Err(Error::Config(format!(
            "max response length {max_response_words} is below min {min_response_words}"
        )));
    }
    Ok(pairs
        .into_iter()
        .filter(|p| !p.source.is_empty() && (min_response_words..=max_response_words).contains(&p.reference.len()))
        .collect())
}

/// Random test/dev/train partition. Each part keeps the input order.
pub fn split(pairs: Vec<UtterancePair>, test_size: usize, dev_size: usize, seed: u64) -> Result<CorpusSplit> {
    if test_size + dev_size > pairs.len() {
        return Err(Error::Data(format!(
            "test ({test_size}) + dev ({dev_size}) exceeds corpus size {}",
            pairs.len()
        )));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    // 0 = train, 1 = dev, 2 = test
    let mut part = vec![0u8; pairs.len()];
    for &i in &order[..test_size] {
        part[i] = 2;
    }
    for &i in &order[test_size..test_size + dev_size] {
        part[i] = 1;
    }

    let mut out = CorpusSplit {
        seed,
        ..Default::default()
    };
    for (pair, p) in pairs.into_iter().zip(part) {
        match p {
            2 => out.test.push(pair),
            1 => out.dev.push(pair),
            _ => out.train.push(pair),
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    dialogue_id: String,
    turn: u64,
    source: String,
    reference: String,
    #[serde(default)]
    context: Vec<String>,
}

/// Serializes pairs as JSONL, tokens joined by single spaces.
pub fn write_pairs<W: Write>(mut w: W, pairs: &[UtterancePair]) -> std::io::Result<()> {
    for p in pairs {
        let rec = PairRecord {
            dialogue_id: p.dialogue_id.clone(),
            turn: p.turn_index,
            source: join_tokens(&p.source),
            reference: join_tokens(&p.reference),
            context: p.context.iter().map(|c| join_tokens(c)).collect(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn parse_pairs(text: &str) -> Result<Vec<UtterancePair>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PairRecord =
            serde_json::from_str(line).map_err(|e| Error::parse("pair record", i + 1, e.to_string()))?;
        out.push(UtterancePair {
            source: split_tokens(&rec.source),
            reference: split_tokens(&rec.reference),
            dialogue_id: rec.dialogue_id,
            turn_index: rec.turn,
            context: rec.context.iter().map(|c| split_tokens(c)).collect(),
        });
    }
    Ok(out)
}

pub fn read_pairs(path: &Path) -> Result<Vec<UtterancePair>> {
    parse_pairs(&read_to_string(path)?)
}
