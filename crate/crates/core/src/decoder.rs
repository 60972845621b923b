//! Beam-search decoding into scored n-best lists, and humor reranking.
//!
//! Every source word is replaced by one translation, in any order allowed by
//! the distortion limit. Hypotheses are stacked by the number of emitted
//! words and pruned on the weighted translation + distortion + LM score.
//! Completed candidates are rescored from scratch, get their humor score, and
//! are ranked by the full log-linear score.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{read_to_string, Error, Result};
use crate::humor::{extract_features, humor_prob, HumorForest};
use crate::language_model::{lm_log_prob, NGramModel};
use crate::lexicons::LexiconSet;
use crate::translation_model::{jump, tm_log_score, Alignment, TranslationTable, NULL_TOKEN};
use crate::{join_tokens, split_tokens, Tokens};

/// Humor probabilities are floored here before taking the log.
pub const HUMOR_PROB_FLOOR: f64 = 1e-4;

pub const COMPONENT_NAMES: [&str; 4] = ["tm", "ds", "lm", "hm"];

/// Log-linear weights for (translation, distortion, language model, humor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector {
    pub tm: f64,
    pub ds: f64,
    pub lm: f64,
    pub hm: f64,
}

impl Default for WeightVector {
    fn default() -> Self {
        WeightVector::new([1.0; 4])
    }
}

impl WeightVector {
    pub fn new(w: [f64; 4]) -> Self {
        WeightVector {
            tm: w[0],
            ds: w[1],
            lm: w[2],
            hm: w[3],
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.tm, self.ds, self.lm, self.hm]
    }

    pub fn scaled(self, c: f64) -> Self {
        WeightVector::new(self.to_array().map(|w| w * c))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let what = "weights";
        let mut w: [Option<f64>; 4] = [None; 4];
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(what, i + 1, "expected key=value"))?;
            let slot = COMPONENT_NAMES
                .iter()
                .position(|c| k.trim() == format!("lambda_{c}"))
                .ok_or_else(|| Error::parse(what, i + 1, format!("unknown weight {:?}", k.trim())))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::parse(what, i + 1, format!("bad number {:?}", v.trim())))?;
            if !value.is_finite() {
                return Err(Error::parse(what, i + 1, "weights must be finite"));
            }
            w[slot] = Some(value);
        }
        match w {
            [Some(tm), Some(ds), Some(lm), Some(hm)] => Ok(WeightVector { tm, ds, lm, hm }),
            _ => Err(Error::parse(
                what,
                0,
                "all of lambda_tm, lambda_ds, lambda_lm, lambda_hm are required",
            )),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?)
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, w) in COMPONENT_NAMES.iter().zip(self.to_array()) {
            writeln!(f, "lambda_{name}={w}")?;
        }
        Ok(())
    }
}

/// Weighted sum of component log scores. A −∞ component poisons the sum
/// unless its weight is zero.
pub fn combined_score(components: &[f64; 4], weights: &WeightVector) -> f64 {
    let mut total = 0.0;
    for (c, w) in components.iter().zip(weights.to_array()) {
        if w == 0.0 {
            continue;
        }
        if *c == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        total += w * c;
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub tokens: Tokens,
    /// Empty for candidates read back from an n-best file.
    pub alignment: Alignment,
    /// (tm, ds, lm, hm) log scores.
    pub components: [f64; 4],
    pub combined: f64,
}

/// Candidates in rank order: non-increasing combined score, ties broken by
/// token order, no repeated token sequences.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NBestList {
    pub candidates: Vec<Candidate>,
    /// Why the list is empty, when it is.
    pub diagnostic: Option<String>,
}

impl NBestList {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.candidates.first()
    }

    /// Re-ranks under new weights.
    pub fn rescore(&mut self, weights: &WeightVector) {
        for c in &mut self.candidates {
            c.combined = combined_score(&c.components, weights);
        }
        sort_candidates(&mut self.candidates);
    }
}

pub(crate) fn rank_order(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    b.combined.total_cmp(&a.combined).then_with(|| a.tokens.cmp(&b.tokens))
}

fn sort_candidates(c: &mut [Candidate]) {
    c.sort_by(rank_order);
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub beam_width: usize,
    pub distortion_limit: usize,
    /// Translation options kept per source word.
    pub max_options: usize,
    /// Words generated from NULL per hypothesis; 0 disables insertions.
    pub null_insertions: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beam_width: 100,
            distortion_limit: 4,
            max_options: 20,
            null_insertions: 0,
        }
    }
}

/// The humor classifier with the resources its features need.
#[derive(Debug, Clone, Copy)]
pub struct HumorScorer<'a> {
    pub forest: &'a HumorForest,
    pub lexicons: &'a LexiconSet,
}

impl HumorScorer<'_> {
    pub fn prob<S: AsRef<str>>(&self, input: &[S], response: &[S]) -> f64 {
        humor_prob(self.forest, &extract_features(input, response, self.lexicons))
    }

    pub fn log_score<S: AsRef<str>>(&self, input: &[S], response: &[S]) -> f64 {
        self.prob(input, response).max(HUMOR_PROB_FLOOR).ln()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Models<'a> {
    pub table: &'a TranslationTable,
    pub lm: &'a NGramModel,
    /// Without a humor model the hm component is 0 (log 1).
    pub humor: Option<HumorScorer<'a>>,
}

impl Models<'_> {
    /// Scores a complete candidate from scratch.
    pub fn score<S: AsRef<str>>(&self, source: &[S], tokens: &[S], alignment: &Alignment) -> [f64; 4] {
        let (tm, ds) = tm_log_score(source, tokens, alignment, self.table);
        let lm = lm_log_prob(self.lm, tokens);
        let hm = self.humor.map_or(0.0, |h| h.log_score(source, tokens));
        [tm, ds, lm, hm]
    }
}

#[derive(Clone)]
struct Hyp<'t> {
    tokens: Vec<&'t str>,
    alignment: Vec<usize>,
    coverage: Vec<bool>,
    covered: usize,
    last: usize,
    insertions: usize,
    history: Vec<u32>,
    partial: [f64; 3],
    score: f64,
}

/// Coverage, emitted words, last covered position, insertions used. Only
/// hypotheses with identical output merge, so no n-best entry is lost.
type HypKey<'t> = (Vec<bool>, Vec<&'t str>, usize, usize);

struct PartialScorer<'m> {
    lm: &'m NGramModel,
    log_alpha: f64,
    weights: WeightVector,
}

impl<'t> Hyp<'t> {
    fn key(&self) -> HypKey<'t> {
        (self.coverage.clone(), self.tokens.clone(), self.last, self.insertions)
    }

    /// Emits `word` for source position `pos` (0 = NULL insertion).
    fn extend(&self, word: &'t str, phi: f64, pos: usize, scorer: &PartialScorer) -> Hyp<'t> {
        let mut h = self.clone();
        let id = scorer.lm.id(word);
        h.partial[0] += phi.ln();
        if pos > 0 {
            h.partial[1] += jump(pos, self.last) as f64 * scorer.log_alpha;
            h.coverage[pos - 1] = true;
            h.covered += 1;
            h.last = pos;
        } else {
            h.insertions += 1;
        }
        h.partial[2] += scorer.lm.log_prob(id, &h.history);
        if !h.history.is_empty() {
            h.history.remove(0);
            h.history.push(id);
        }
        h.tokens.push(word);
        h.alignment.push(pos);
        let w = &scorer.weights;
        h.score = w.tm * h.partial[0] + w.ds * h.partial[1] + w.lm * h.partial[2];
        h
    }
}

/// Best first: weighted partial score, then token order, then alignment.
fn hyp_order(a: &Hyp, b: &Hyp) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.tokens.cmp(&b.tokens))
        .then_with(|| a.alignment.cmp(&b.alignment))
}

/// Decodes one utterance into an n-best list of at most `beam_width` candidates.
pub fn decode_nbest<S: AsRef<str>>(
    source: &[S],
    models: &Models,
    weights: &WeightVector,
    config: &DecoderConfig,
) -> NBestList {
    let src: Vec<&str> = source.iter().map(AsRef::as_ref).collect();
    if src.is_empty() {
        return NBestList {
            candidates: vec![],
            diagnostic: Some("empty input".into()),
        };
    }
    let options: Vec<Vec<(&str, f64)>> = src
        .iter()
        .map(|s| models.table.options(s, config.max_options))
        .collect();
    let missing: Vec<&str> = src
        .iter()
        .zip(&options)
        .filter(|(_, o)| o.is_empty())
        .map(|(s, _)| *s)
        .collect();
    if !missing.is_empty() {
        return NBestList {
            candidates: vec![],
            diagnostic: Some(format!("no translation options for: {}", missing.join(" "))),
        };
    }
    let null_options = if config.null_insertions > 0 {
        models.table.options(NULL_TOKEN, config.max_options)
    } else {
        Vec::new()
    };

    let lm = models.lm;
    let scorer = PartialScorer {
        lm,
        log_alpha: models.table.alpha().ln(),
        weights: *weights,
    };

    let max_len = src.len() + config.null_insertions;
    let mut stacks: Vec<Vec<Hyp>> = vec![Vec::new(); max_len + 1];
    stacks[0].push(Hyp {
        tokens: vec![],
        alignment: vec![],
        coverage: vec![false; src.len()],
        covered: 0,
        last: 0,
        insertions: 0,
        history: lm.start_history(),
        partial: [0.0; 3],
        score: 0.0,
    });
    let mut completed: Vec<Hyp> = Vec::new();

    for len in 0..max_len {
        let current = std::mem::take(&mut stacks[len]);
        let mut next: HashMap<HypKey, Hyp> = HashMap::new();
        for hyp in &current {
            let mut expansions = Vec::new();
            for pos in 1..=src.len() {
                if hyp.coverage[pos - 1] || jump(pos, hyp.last) > config.distortion_limit {
                    continue;
                }
                for &(word, phi) in &options[pos - 1] {
                    expansions.push(hyp.extend(word, phi, pos, &scorer));
                }
            }
            if hyp.insertions < config.null_insertions {
                for &(word, phi) in &null_options {
                    expansions.push(hyp.extend(word, phi, 0, &scorer));
                }
            }
            for h in expansions {
                let key = h.key();
                match next.get(&key) {
                    Some(old) if hyp_order(&h, old).is_ge() => {}
                    _ => {
                        next.insert(key, h);
                    }
                }
            }
        }
        let mut survivors: Vec<Hyp> = next.into_values().collect();
        survivors.sort_by(hyp_order);
        survivors.truncate(config.beam_width);
        completed.extend(survivors.iter().filter(|h| h.covered == src.len()).cloned());
        stacks[len + 1] = survivors;
    }

    let mut best: BTreeMap<Vec<&str>, Candidate> = BTreeMap::new();
    for h in completed {
        let alignment = Alignment(h.alignment);
        let components = models.score(&src, &h.tokens, &alignment);
        let combined = combined_score(&components, weights);
        if combined == f64::NEG_INFINITY || combined.is_nan() {
            continue;
        }
        let cand = Candidate {
            tokens: h.tokens.iter().map(|t| t.to_string()).collect(),
            alignment,
            components,
            combined,
        };
        match best.get(&h.tokens) {
            Some(old) if old.combined >= cand.combined => {}
            _ => {
                best.insert(h.tokens, cand);
            }
        }
    }
    let mut candidates: Vec<Candidate> = best.into_values().collect();
    sort_candidates(&mut candidates);
    candidates.truncate(config.beam_width);
    let diagnostic = candidates
        .is_empty()
        .then(|| "no complete hypothesis with a finite score".to_owned());
    NBestList { candidates, diagnostic }
}

/// Decodes many utterances on `jobs` worker threads; output keeps input order.
pub fn decode_corpus<S: AsRef<str> + Sync>(
    sources: &[Vec<S>],
    models: &Models,
    weights: &WeightVector,
    config: &DecoderConfig,
    jobs: usize,
) -> Result<Vec<NBestList>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    Ok(pool.install(|| {
        sources
            .par_iter()
            .map(|s| decode_nbest(s, models, weights, config))
            .collect()
    }))
}

/// Index of the most humorous of the first `depth` candidates; earlier rank
/// wins ties.
pub fn rerank(nbest: &NBestList, depth: usize) -> Result<usize> {
    if nbest.is_empty() {
        return Err(Error::Data("cannot rerank an empty n-best list".into()));
    }
    let mut best = 0;
    for (i, c) in nbest.candidates.iter().enumerate().take(depth.max(1)) {
        if c.components[3] > nbest.candidates[best].components[3] {
            best = i;
        }
    }
    Ok(best)
}

/// The final humor rerank over the top five.
pub fn rerank_top5(nbest: &NBestList) -> Result<&Candidate> {
    rerank(nbest, 5).map(|i| &nbest.candidates[i])
}

/// Writes `sent_id ||| tokens ||| tm ds lm hm ||| combined` lines.
pub fn write_nbest<W: Write>(mut w: W, sent_id: usize, nbest: &NBestList) -> std::io::Result<()> {
    for c in &nbest.candidates {
        let [tm, ds, lm, hm] = c.components;
        writeln!(
            w,
            "{sent_id} ||| {} ||| {tm} {ds} {lm} {hm} ||| {}",
            join_tokens(&c.tokens),
            c.combined
        )?;
    }
    Ok(())
}

/// Parses an n-best file into lists keyed by sentence id. Candidate order
/// within each sentence is kept as written.
pub fn parse_nbest(text: &str) -> Result<BTreeMap<usize, NBestList>> {
    let what = "n-best";
    let mut out: BTreeMap<usize, NBestList> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(what, i + 1, "expected 4 |||-separated fields"));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(what, i + 1, "bad sentence id"))?;
        let scores = fields[2]
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(what, i + 1, e.to_string()))?;
        let components: [f64; 4] = scores
            .try_into()
            .map_err(|_| Error::parse(what, i + 1, "expected 4 component scores"))?;
        let combined: f64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(what, i + 1, "bad combined score"))?;
        out.entry(id).or_default().candidates.push(Candidate {
            tokens: split_tokens(fields[1]),
            alignment: Alignment::default(),
            components,
            combined,
        });
    }
    Ok(out)
}

pub fn load_nbest(path: &Path) -> Result<BTreeMap<usize, NBestList>> {
    parse_nbest(&read_to_string(path)?)
}
