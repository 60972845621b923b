use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use super::Alignment;
use crate::corpus::UtterancePair;
use crate::error::{read_to_string, Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.6;

/// Unsmoothed word translation probabilities φ(response | source) and the
/// distortion base α.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable {
    /// Rows sorted by response word.
    rows: HashMap<String, Vec<(String, f64)>>,
    alpha: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("distortion base {alpha} must lie in (0, 1)")))
    }
}

impl TranslationTable {
    /// Builds a table from explicit entries. Rows are not renormalized.
    pub fn from_entries<I>(entries: I, alpha: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String, f64)>,
    {
        check_alpha(alpha)?;
        let mut rows: HashMap<String, Vec<(String, f64)>> = HashMap::new();
        for (s, r, p) in entries {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Data(format!("probability {p} for ({s}, {r}) outside [0, 1]")));
            }
            rows.entry(s).or_default().push((r, p));
        }
        for row in rows.values_mut() {
            row.sort_by(|a, b| a.0.cmp(&b.0));
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Data("duplicate translation entry".into()));
            }
        }
        Ok(TranslationTable { rows, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        Ok(())
    }

    pub fn phi(&self, source: &str, response: &str) -> f64 {
        self.rows
            .get(source)
            .and_then(|row| {
                row.binary_search_by(|(r, _)| r.as_str().cmp(response))
                    .ok()
                    .map(|i| row[i].1)
            })
            .unwrap_or(0.0)
    }

    pub fn row(&self, source: &str) -> &[(String, f64)] {
        self.rows.get(source).map_or(&[], Vec::as_slice)
    }

    /// The `k` most probable translations of `source`; ties in lexical order.
    pub fn options(&self, source: &str, k: usize) -> Vec<(&str, f64)> {
        let mut opts: Vec<(&str, f64)> = self
            .row(source)
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(r, p)| (r.as_str(), *p))
            .collect();
        opts.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        opts.truncate(k);
        opts
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    /// Writes `source<TAB>response<TAB>phi` lines sorted by (source, response).
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let sorted: BTreeMap<&String, &Vec<(String, f64)>> = self.rows.iter().collect();
        for (s, row) in sorted {
            for (r, p) in row {
                writeln!(w, "{s}\t{r}\t{p}")?;
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, alpha: f64) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    "translation table",
                    i + 1,
                    "expected 3 tab-separated fields",
                ));
            }
            let p: f64 = fields[2]
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::parse("translation table", i + 1, e.to_string()))?;
            entries.push((fields[0].to_owned(), fields[1].to_owned(), p));
        }
        Self::from_entries(entries, alpha).map_err(|e| match e {
            Error::Data(msg) => Error::parse("translation table", 0, msg),
            other => other,
        })
    }

    pub fn load(path: &Path, alpha: f64) -> Result<Self> {
        Self::parse(&read_to_string(path)?, alpha)
    }
}

/// Relative-frequency estimate over aligned word pairs, NULL included.
pub fn estimate_phi(pairs: &[UtterancePair], alignments: &[Alignment], alpha: f64) -> Result<TranslationTable> {
    if pairs.len() != alignments.len() {
        return Err(Error::Data(format!(
            "{} pairs but {} alignments",
            pairs.len(),
            alignments.len()
        )));
    }
    let mut counts: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    let mut totals: HashMap<&str, u64> = HashMap::new();
    for (pair, al) in pairs.iter().zip(alignments) {
        if al.len() != pair.reference.len() {
            return Err(Error::Data("alignment length differs from response length".into()));
        }
        for (i, r) in pair.reference.iter().enumerate() {
            let s = al
                .source_word(&pair.source, i)
                .ok_or_else(|| Error::Data(format!("alignment points past source of length {}", pair.source.len())))?;
            *counts.entry((s, r.as_str())).or_insert(0) += 1;
            *totals.entry(s).or_insert(0) += 1;
        }
    }
    let entries = counts
        .into_iter()
        .map(|((s, r), c)| (s.to_owned(), r.to_owned(), c as f64 / totals[s] as f64));
    TranslationTable::from_entries(entries, alpha)
}

/// Distortion factor α^|a − b_prev − 1|. NULL-sourced words (a = 0) get 1.
pub fn distortion(a: usize, b_prev: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if a == 0 {
        return Ok(1.0);
    }
    Ok(alpha.powi(jump(a, b_prev) as i32))
}

pub(crate) fn jump(a: usize, b_prev: usize) -> usize {
    (a as i64 - b_prev as i64 - 1).unsigned_abs() as usize
}

/// Log translation score split into (Σ log φ, Σ log d).
///
/// The φ component is −∞ as soon as any aligned pair has zero probability.
pub fn tm_log_score<S: AsRef<str>>(
    source: &[S],
    response: &[S],
    alignment: &Alignment,
    table: &TranslationTable,
) -> (f64, f64) {
    let log_alpha = table.alpha.ln();
    let mut log_phi = 0.0;
    let mut log_d = 0.0;
    let mut b_prev = 0;
    for (i, r) in response.iter().enumerate() {
        let a = alignment.0.get(i).copied().unwrap_or(usize::MAX);
        let phi = match alignment.source_word(source, i) {
            Some(s) => table.phi(s, r.as_ref()),
            None => 0.0,
        };
        log_phi += phi.ln();
        if a != 0 && a != usize::MAX {
            log_d += jump(a, b_prev) as f64 * log_alpha;
            b_prev = a;
        }
    }
    if log_phi.is_nan() {
        log_phi = f64::NEG_INFINITY;
    }
    (log_phi, log_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::split_tokens;
    use crate::translation_model::NULL_TOKEN;
    use proptest::prelude::*;

    fn pair(s: &str, r: &str) -> UtterancePair {
        UtterancePair {
            source: split_tokens(s),
            reference: split_tokens(r),
            dialogue_id: "d".into(),
            turn_index: 0,
            context: vec![],
        }
    }

    #[test]
    fn hand_counted_phi() {
        // aligned pairs (a,x) (a,x) (a,y) (b,z)
        let pairs = [pair("a b", "x z"), pair("a", "x"), pair("a", "y")];
        let al = [Alignment(vec![1, 2]), Alignment(vec![1]), Alignment(vec![1])];
        let t = estimate_phi(&pairs, &al, 0.5).unwrap();
        assert_eq!(t.phi("a", "x"), 2.0 / 3.0);
        assert_eq!(t.phi("a", "y"), 1.0 / 3.0);
        assert_eq!(t.phi("b", "z"), 1.0);
        assert_eq!(t.phi("b", "x"), 0.0);
    }

    #[test]
    fn null_is_an_ordinary_source() {
        let t = estimate_phi(&[pair("a", "x y")], &[Alignment(vec![1, 0])], 0.5).unwrap();
        assert_eq!(t.phi(NULL_TOKEN, "y"), 1.0);
        assert_eq!(t.phi("a", "x"), 1.0);
    }

    #[test]
    fn distortion_examples() {
        assert_eq!(distortion(3, 2, 0.5).unwrap(), 1.0);
        assert_eq!(distortion(4, 1, 0.5).unwrap(), 0.25);
        assert_eq!(distortion(1, 2, 0.5).unwrap(), 0.25);
        assert_eq!(distortion(0, 5, 0.5).unwrap(), 1.0);
        assert!(distortion(1, 0, 1.0).is_err());
        assert!(distortion(1, 0, 0.0).is_err());
    }

    #[test]
    fn score_examples() {
        let t = TranslationTable::from_entries(
            [
                ("a", "x", 1.0),
                ("b", "y", 0.5),
                ("b", "z", 0.5),
                ("c", "z", 0.5),
                ("c", "w", 0.5),
            ]
            .map(|(s, r, p)| (s.to_owned(), r.to_owned(), p)),
            0.5,
        )
        .unwrap();
        assert_eq!(tm_log_score(&["a"], &["x"], &Alignment(vec![1]), &t), (0.0, 0.0));
        let (phi, d) = tm_log_score(&["b", "c"], &["y", "z"], &Alignment(vec![1, 2]), &t);
        assert_eq!((phi, d), (2.0 * 0.5f64.ln(), 0.0));
        let (phi, _) = tm_log_score(&["a"], &["q"], &Alignment(vec![1]), &t);
        assert_eq!(phi, f64::NEG_INFINITY);
    }

    #[test]
    fn table_round_trip() {
        let t = estimate_phi(
            &[pair("a b", "x z"), pair("a", "y")],
            &[Alignment(vec![1, 0]), Alignment(vec![1])],
            0.6,
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "<NULL>\tz\t1\na\tx\t0.5\na\ty\t0.5\n");
        assert_eq!(TranslationTable::parse(&text, 0.6).unwrap(), t);
        assert!(TranslationTable::parse("a\tx\n", 0.6).is_err());
    }

    #[test]
    fn options_are_ranked() {
        let t = TranslationTable::from_entries(
            [("a", "y", 0.25), ("a", "x", 0.25), ("a", "z", 0.5)].map(|(s, r, p)| (s.to_owned(), r.to_owned(), p)),
            0.5,
        )
        .unwrap();
        assert_eq!(t.options("a", 2), vec![("z", 0.5), ("x", 0.25)]);
        assert!(t.options("b", 5).is_empty());
    }

    fn aligned_corpus() -> impl Strategy<Value = (Vec<UtterancePair>, Vec<Alignment>)> {
        proptest::collection::vec(
            (
                proptest::collection::vec(0u8..6, 1..5),
                proptest::collection::vec((0u8..6, 0usize..5), 1..6),
            ),
            1..8,
        )
        .prop_map(|items| {
            let mut pairs = Vec::new();
            let mut als = Vec::new();
            for (src, rsp) in items {
                let source: Vec<String> = src.iter().map(|c| format!("s{c}")).collect();
                let reference: Vec<String> = rsp.iter().map(|(c, _)| format!("r{c}")).collect();
                let al = rsp.iter().map(|(_, a)| a % (source.len() + 1)).collect();
                pairs.push(UtterancePair {
                    source,
                    reference,
                    dialogue_id: String::new(),
                    turn_index: 0,
                    context: vec![],
                });
                als.push(Alignment(al));
            }
            (pairs, als)
        })
    }

    proptest! {
        #[test]
        fn rows_are_normalized((pairs, als) in aligned_corpus()) {
            let t = estimate_phi(&pairs, &als, 0.6).unwrap();
            for s in t.sources() {
                let sum: f64 = t.row(s).iter().map(|(_, p)| p).sum();
                prop_assert!((sum - 1.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn distortion_symmetric_around_one(x in -20i64..20, alpha in 0.01f64..0.99) {
            // a − b_prev = x, realized with b_prev = 30
            let b = 30usize;
            let d = distortion((b as i64 + x) as usize, b, alpha).unwrap();
            let mirrored = distortion((b as i64 + 2 - x) as usize, b, alpha).unwrap();
            prop_assert_eq!(d, mirrored);
            prop_assert!(d > 0.0 && d <= 1.0);
            prop_assert_eq!(d == 1.0, x == 1);
        }

        #[test]
        fn permuting_response_changes_only_distortion(perm_seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let t = TranslationTable::from_entries(
                [("a", "x", 0.3), ("b", "y", 0.6), ("c", "z", 0.9), ("d", "w", 0.2)]
                    .map(|(s, r, p)| (s.to_owned(), r.to_owned(), p)),
                0.4,
            ).unwrap();
            let src = ["a", "b", "c", "d"];
            let mut idx = [0usize, 1, 2, 3];
            idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
            let rsp_all = ["x", "y", "z", "w"];
            let rsp: Vec<&str> = idx.iter().map(|&i| rsp_all[i]).collect();
            let al = Alignment(idx.iter().map(|&i| i + 1).collect());
            let (phi, _) = tm_log_score(&src, &rsp, &al, &t);
            let (phi0, _) = tm_log_score(&src, &rsp_all, &Alignment(vec![1, 2, 3, 4]), &t);
            prop_assert!((phi - phi0).abs() < 1e-12);
        }
    }
}
