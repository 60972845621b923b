//! Corpus BLEU and relative human-rating ratios.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::ops::{Add, AddAssign};
use std::path::Path;

use serde::Serialize;

use crate::error::{read_to_string, Error, Result};

pub const MAX_ORDER: usize = 4;

/// Sufficient statistics for corpus BLEU up to 4-grams.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct BleuStats {
    /// Clipped n-gram matches, index 0 = unigrams.
    pub matches: [u64; MAX_ORDER],
    /// Hypothesis n-gram counts.
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

impl BleuStats {
    pub fn sentence<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> Self {
        let mut stats = BleuStats {
            hyp_len: hyp.len() as u64,
            ref_len: reference.len() as u64,
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            let h = ngram_counts(hyp, n);
            let r = ngram_counts(reference, n);
            stats.totals[n - 1] = h.values().sum();
            stats.matches[n - 1] = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
        }
        stats
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len >= self.ref_len {
            1.0
        } else if self.hyp_len == 0 {
            0.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        }
    }

    /// BLEU-n on a 0..100 scale; 0 as soon as any precision up to n is 0.
    pub fn bleu(&self, n: usize) -> f64 {
        assert!((1..=MAX_ORDER).contains(&n), "BLEU order {n} outside 1..=4");
        let mut log_sum = 0.0;
        for k in 0..n {
            if self.matches[k] == 0 {
                return 0.0;
            }
            log_sum += (self.matches[k] as f64 / self.totals[k] as f64).ln();
        }
        100.0 * self.brevity_penalty() * (log_sum / n as f64).exp()
    }
}

impl Add for BleuStats {
    type Output = BleuStats;

    fn add(mut self, rhs: BleuStats) -> BleuStats {
        self += rhs;
        self
    }
}

impl AddAssign for BleuStats {
    fn add_assign(&mut self, rhs: BleuStats) {
        for k in 0..MAX_ORDER {
            self.matches[k] += rhs.matches[k];
            self.totals[k] += rhs.totals[k];
        }
        self.hyp_len += rhs.hyp_len;
        self.ref_len += rhs.ref_len;
    }
}

impl std::ops::Sub for BleuStats {
    type Output = BleuStats;

    fn sub(mut self, rhs: BleuStats) -> BleuStats {
        for k in 0..MAX_ORDER {
            self.matches[k] -= rhs.matches[k];
            self.totals[k] -= rhs.totals[k];
        }
        self.hyp_len -= rhs.hyp_len;
        self.ref_len -= rhs.ref_len;
        self
    }
}

pub fn corpus_stats<S: AsRef<str>>(hypotheses: &[Vec<S>], references: &[Vec<S>]) -> Result<BleuStats> {
    if hypotheses.len() != references.len() {
        return Err(Error::Data(format!(
            "{} hypotheses but {} references",
            hypotheses.len(),
            references.len()
        )));
    }
    if references.is_empty() {
        return Err(Error::Data("BLEU of an empty corpus".into()));
    }
    Ok(hypotheses
        .iter()
        .zip(references)
        .map(|(h, r)| BleuStats::sentence(h, r))
        .fold(BleuStats::default(), Add::add))
}

/// Corpus BLEU-1 through BLEU-`max_n`, single reference per sentence.
pub fn bleu<S: AsRef<str>>(hypotheses: &[Vec<S>], references: &[Vec<S>], max_n: usize) -> Result<Vec<f64>> {
    if !(1..=MAX_ORDER).contains(&max_n) {
        return Err(Error::Config(format!("BLEU order {max_n} outside 1..=4")));
    }
    let stats = corpus_stats(hypotheses, references)?;
    Ok((1..=max_n).map(|n| stats.bleu(n)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Readability,
    Entertainment,
    Relevance,
}

impl Aspect {
    pub const ALL: [Aspect; 3] = [Aspect::Readability, Aspect::Entertainment, Aspect::Relevance];

    pub fn name(self) -> &'static str {
        match self {
            Aspect::Readability => "readability",
            Aspect::Entertainment => "entertainment",
            Aspect::Relevance => "relevance",
        }
    }
}

impl std::str::FromStr for Aspect {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Aspect::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown aspect {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingRecord {
    pub system: String,
    pub aspect: Aspect,
    pub item: String,
    pub rater: String,
    /// 0 = poor, 1 = acceptable, 2 = good.
    pub score: u8,
}

pub fn parse_ratings(text: &str) -> Result<Vec<RatingRecord>> {
    let what = "ratings";
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::parse(what, i + 1, "expected system, aspect, item, rater, score"));
        }
        let aspect = f[1].parse().map_err(|e: String| Error::parse(what, i + 1, e))?;
        let score: u8 = f[4]
            .trim()
            .parse()
            .ok()
            .filter(|s| *s <= 2)
            .ok_or_else(|| Error::parse(what, i + 1, format!("score {:?} is not an integer in 0..=2", f[4])))?;
        out.push(RatingRecord {
            system: f[0].to_owned(),
            aspect,
            item: f[2].to_owned(),
            rater: f[3].to_owned(),
            score,
        });
    }
    Ok(out)
}

pub fn load_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    parse_ratings(&read_to_string(path)?)
}

/// Mean rating per (system, aspect): raters averaged per item, then items averaged.
pub fn mean_ratings(records: &[RatingRecord]) -> BTreeMap<(String, Aspect), f64> {
    let mut per_item: BTreeMap<(&str, Aspect, &str), (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = per_item.entry((&r.system, r.aspect, &r.item)).or_insert((0.0, 0));
        e.0 += r.score as f64;
        e.1 += 1;
    }
    let mut per_system: BTreeMap<(String, Aspect), (f64, usize)> = BTreeMap::new();
    for ((system, aspect, _), (sum, n)) in per_item {
        let e = per_system.entry((system.to_owned(), aspect)).or_insert((0.0, 0));
        e.0 += sum / n as f64;
        e.1 += 1;
    }
    per_system.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// 100 × mean(system, aspect) / mean(baseline, aspect). Pairs with no data or
/// a zero baseline mean are absent.
pub fn rating_ratios(records: &[RatingRecord], baseline: &str) -> BTreeMap<(String, Aspect), f64> {
    ratios_from_means(&mean_ratings(records), baseline)
}

pub fn ratios_from_means(means: &BTreeMap<(String, Aspect), f64>, baseline: &str) -> BTreeMap<(String, Aspect), f64> {
    means
        .iter()
        .filter_map(|((system, aspect), &m)| {
            let base = *means.get(&(baseline.to_owned(), *aspect))?;
            (base != 0.0).then(|| ((system.clone(), *aspect), 100.0 * m / base))
        })
        .collect()
}

/// BLEU scores of several systems.
#[derive(Debug, Clone, Serialize)]
pub struct BleuReport {
    pub systems: Vec<(String, Vec<f64>)>,
}

impl BleuReport {
    /// Rows per system, columns BLEU-max down to BLEU-1.
    pub fn to_table(&self) -> String {
        let max_n = self.systems.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
        let width = self
            .systems
            .iter()
            .map(|(n, _)| n.chars().count())
            .max()
            .unwrap_or(0)
            .max(6);
        let mut out = format!("{:width$}", "");
        for n in (1..=max_n).rev() {
            let _ = write!(out, "  {:>7}", format!("BLEU-{n}"));
        }
        out.push('\n');
        for (name, scores) in &self.systems {
            let _ = write!(out, "{name:width$}");
            for s in scores.iter().rev() {
                let _ = write!(out, "  {s:>7.2}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let systems: Vec<serde_json::Value> = self
            .systems
            .iter()
            .map(|(name, scores)| {
                let bleu: serde_json::Map<String, serde_json::Value> = scores
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (format!("bleu{}", i + 1), serde_json::json!(s)))
                    .collect();
                serde_json::json!({ "system": name, "scores": bleu })
            })
            .collect();
        serde_json::json!({ "bleu": systems })
    }
}

/// Ratio table: rows are aspects, columns systems in first-seen order.
pub fn ratio_table(ratios: &BTreeMap<(String, Aspect), f64>, systems: &[String]) -> String {
    let width = systems.iter().map(|s| s.chars().count()).max().unwrap_or(0).max(8);
    let mut out = format!("{:13}", "");
    for s in systems {
        let _ = write!(out, "  {s:>width$}");
    }
    out.push('\n');
    for aspect in Aspect::ALL {
        if !systems.iter().any(|s| ratios.contains_key(&(s.clone(), aspect))) {
            continue;
        }
        let mut name = aspect.name().to_owned();
        name[..1].make_ascii_uppercase();
        let _ = write!(out, "{name:13}");
        for s in systems {
            let cell = ratios
                .get(&(s.clone(), aspect))
                .map_or_else(|| "-".to_owned(), |r| format!("{r:.2}%"));
            let _ = write!(out, "  {cell:>width$}");
        }
        out.push('\n');
    }
    out
}

pub fn ratios_json(ratios: &BTreeMap<(String, Aspect), f64>) -> serde_json::Value {
    let mut systems: BTreeMap<&str, serde_json::Map<String, serde_json::Value>> = BTreeMap::new();
    for ((system, aspect), r) in ratios {
        systems
            .entry(system)
            .or_default()
            .insert(aspect.name().to_owned(), serde_json::json!(r));
    }
    serde_json::json!({ "ratios": systems })
}
