use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;

use crosstalk::config::PipelineConfig;
use crosstalk::corpus::{self, extract_pairs, filter_pairs, load_corpus, read_pairs, write_pairs, Lexicon, Segmenter};
use crosstalk::decoder::{decode_corpus, load_nbest, rerank as rerank_nbest, write_nbest, NBestList};
use crosstalk::evaluator::{bleu, load_ratings, rating_ratios, ratio_table, ratios_json, BleuReport};
use crosstalk::humor::{load_labeled, rebalance, train_forest, ForestConfig};
use crosstalk::ir_baselines::{RetrievalIndex, TermWeighting};
use crosstalk::language_model::train_lm as train_ngrams;
use crosstalk::mert::{dev_bleu, mert, TuningInstance};
use crosstalk::random_baseline::rnd_ids;
use crosstalk::translation_model::{estimate_phi, train_alignment};
use crosstalk::{join_tokens, Error, Result, Tokens};

use crate::args::{seed, thread_pool, DecodeArgs, LexiconArgs, ModelArgs};
use crate::io::{read_inputs, read_lines, read_references, write_file, write_token_lines};

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Dialogue turns, one JSON object per line
    #[arg(long)]
    input: PathBuf,
    /// Word list for greedy longest-match segmentation; without it text is split on whitespace
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    min_len: Option<usize>,
}

pub fn segment(a: SegmentArgs, config: &PipelineConfig) -> Result<()> {
    let turns = load_corpus(&a.input)?;
    let lexicon = a.lexicon.or_else(|| config.segmentation_lexicon.clone());
    let segmenter = match lexicon {
        Some(p) => Segmenter::Greedy(Lexicon::load(&p)?),
        None => Segmenter::Pretokenized,
    };
    let (pairs, stats) = extract_pairs(&turns, &segmenter);
    let kept = filter_pairs(
        pairs,
        a.max_len.unwrap_or(config.max_response_len),
        a.min_len.unwrap_or(config.min_response_len),
    )?;
    eprintln!(
        "{} pairs extracted, {} kept; {} trailing dougen turns dropped",
        stats.pairs,
        kept.len(),
        stats.dropped_trailing
    );
    write_file(&a.output, |w| write_pairs(w, &kept))
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Pair file written by segment
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    dev: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Receives train.jsonl, dev.jsonl and test.jsonl
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn split(a: SplitArgs, config: &PipelineConfig) -> Result<()> {
    let pairs = read_pairs(&a.input)?;
    let parts = corpus::split(
        pairs,
        a.test.unwrap_or(config.test_size),
        a.dev.unwrap_or(config.dev_size),
        seed(a.seed, config)?,
    )?;
    for (name, part) in [("train", &parts.train), ("dev", &parts.dev), ("test", &parts.test)] {
        write_file(&a.out_dir.join(format!("{name}.jsonl")), |w| write_pairs(w, part))?;
    }
    eprintln!(
        "train {}, dev {}, test {}",
        parts.train.len(),
        parts.dev.len(),
        parts.test.len()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrainTmArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    output: PathBuf,
    /// Also write the Viterbi alignment of each pair, one line per pair
    #[arg(long)]
    alignments: Option<PathBuf>,
}

pub fn train_tm(a: TrainTmArgs, config: &PipelineConfig) -> Result<()> {
    let pairs = read_pairs(&a.train)?;
    let model = train_alignment(&pairs, a.iterations.unwrap_or(config.em_iterations))?;
    for (i, ll) in model.log_likelihood.iter().enumerate() {
        eprintln!("iteration {i}: log-likelihood {ll:.4}");
    }
    let table = estimate_phi(&pairs, &model.alignments, config.alpha)?;
    write_file(&a.output, |w| table.write(w))?;
    if let Some(path) = a.alignments {
        write_file(&path, |w| {
            for al in &model.alignments {
                let cells: Vec<String> = al.0.iter().map(ToString::to_string).collect();
                writeln!(w, "{}", cells.join(" "))?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrainLmArgs {
    /// Pair file; its responses are the training text
    #[arg(long)]
    train: PathBuf,
    /// Extra tokenized text, one sentence per line
    #[arg(long)]
    extra: Vec<PathBuf>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    output: PathBuf,
}

pub fn train_lm(a: TrainLmArgs, config: &PipelineConfig) -> Result<()> {
    let mut sentences: Vec<Tokens> = read_pairs(&a.train)?.into_iter().map(|p| p.reference).collect();
    for path in &a.extra {
        sentences.extend(read_lines(path)?.into_iter().filter(|s| !s.is_empty()));
    }
    let model = train_ngrams(
        &sentences,
        a.order.unwrap_or(config.lm_order),
        a.mu.unwrap_or(config.lm_mu),
    )?;
    eprintln!("{} sentences, vocabulary {}", sentences.len(), model.vocab_size());
    write_file(&a.output, |w| model.write(w))
}

#[derive(Debug, Args)]
pub struct TrainHumorArgs {
    /// `label<TAB>input<TAB>response` or `label<TAB>f1..f15` lines
    #[arg(long)]
    labeled: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Train on the classes as given
    #[arg(long)]
    no_rebalance: bool,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    lexicons: LexiconArgs,
}

pub fn train_humor(a: TrainHumorArgs, config: &PipelineConfig) -> Result<()> {
    let seed = seed(a.seed, config)?;
    let lexicons = a.lexicons.load(config)?;
    let examples = load_labeled(&a.labeled, &lexicons)?;
    let training = if a.no_rebalance {
        examples.clone()
    } else {
        rebalance(&examples, seed)?
    };
    let forest_config = ForestConfig {
        trees: a.trees.unwrap_or(config.trees),
        max_depth: a.max_depth.unwrap_or(config.max_depth),
        max_features: None,
        seed,
    };
    let forest = train_forest(&training, &forest_config)?;
    let correct = examples
        .iter()
        .filter(|e| (crosstalk::humor::humor_prob(&forest, &e.features) >= 0.5) == e.humorous)
        .count();
    eprintln!(
        "{} examples ({} after rebalancing), training accuracy {:.4}",
        examples.len(),
        training.len(),
        correct as f64 / examples.len() as f64
    );
    write_file(&a.output, |w| forest.write(w))
}

#[derive(Debug, Args)]
pub struct DecodeCmdArgs {
    /// Pair file or one tokenized utterance per line
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    models: ModelArgs,
    #[command(flatten)]
    decoding: DecodeArgs,
}

fn report_empty(lists: &[NBestList]) {
    for (i, l) in lists.iter().enumerate() {
        if let Some(d) = &l.diagnostic {
            eprintln!("warning: sentence {i}: {d}");
        }
    }
}

pub fn decode(a: DecodeCmdArgs, config: &PipelineConfig) -> Result<()> {
    let loaded = a.models.load(config)?;
    let sources: Vec<Tokens> = read_inputs(&a.input)?.into_iter().map(|p| p.source).collect();
    let lists = decode_corpus(
        &sources,
        &loaded.models(),
        &a.decoding.weights(config)?,
        &a.decoding.decoder_config(config)?,
        a.jobs,
    )?;
    report_empty(&lists);
    write_file(&a.output, |w| {
        for (i, l) in lists.iter().enumerate() {
            write_nbest(&mut *w, i, l)?;
        }
        Ok(())
    })
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// N-best file written by decode on the dev inputs
    #[arg(long)]
    nbest: PathBuf,
    /// Dev references: a pair file or one tokenized sentence per line
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Re-decode the dev inputs with the tuned weights this many times,
    /// merging the new candidates into the n-best lists
    #[arg(long, default_value_t = 0)]
    rounds: usize,
    /// Dev inputs, needed with --rounds
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    models: ModelArgs,
    #[command(flatten)]
    decoding: DecodeArgs,
}

type CandidatePool = Vec<Vec<(Tokens, [f64; 4])>>;

fn instances(refs: &[Tokens], pool: &CandidatePool) -> Result<Vec<TuningInstance>> {
    refs.iter()
        .zip(pool)
        .filter(|(_, c)| !c.is_empty())
        .map(|(r, c)| TuningInstance::new(r.clone(), c.iter().cloned()))
        .filter(|i| !matches!(i, Err(Error::Data(_))))
        .collect()
}

pub fn tune(a: TuneArgs, config: &PipelineConfig) -> Result<()> {
    let seed = seed(a.seed, config)?;
    let refs = read_references(&a.reference)?;
    let mut pool: CandidatePool = vec![Vec::new(); refs.len()];
    for (id, list) in load_nbest(&a.nbest)? {
        let slot = pool
            .get_mut(id)
            .ok_or_else(|| Error::Data(format!("n-best sentence {id} has no reference")))?;
        slot.extend(list.candidates.into_iter().map(|c| (c.tokens, c.components)));
    }
    let skipped = pool.iter().filter(|c| c.is_empty()).count();
    if skipped > 0 {
        eprintln!("warning: {skipped} dev sentences have no candidates and are left out");
    }
    let restarts = a.restarts.unwrap_or(config.mert_restarts);
    let iterations = a.iterations.unwrap_or(config.mert_iterations);
    let mut init = a.decoding.weights(config)?;

    let mut redecode = None;
    if a.rounds > 0 {
        let input = a
            .input
            .as_ref()
            .ok_or_else(|| Error::Config("--rounds needs --input with the dev utterances".into()))?;
        let sources: Vec<Tokens> = read_inputs(input)?.into_iter().map(|p| p.source).collect();
        if sources.len() != refs.len() {
            return Err(Error::Data(format!(
                "{} dev inputs but {} references",
                sources.len(),
                refs.len()
            )));
        }
        redecode = Some((a.models.load(config)?, sources, a.decoding.decoder_config(config)?));
    }

    let mut round = 0;
    let result = loop {
        let data = instances(&refs, &pool)?;
        let result = mert(&data, init, iterations, restarts, seed)?;
        eprintln!(
            "round {round}: dev BLEU-4 {:.4} -> {:.4}",
            dev_bleu(&data, &init),
            result.bleu
        );
        let Some((loaded, sources, decoder)) = redecode.as_ref().filter(|_| round < a.rounds) else {
            break result;
        };
        let lists = decode_corpus(sources, &loaded.models(), &result.weights, decoder, a.jobs)?;
        let mut added = 0;
        for (slot, list) in pool.iter_mut().zip(lists) {
            for c in list.candidates {
                if !slot.iter().any(|(t, _)| *t == c.tokens) {
                    slot.push((c.tokens, c.components));
                    added += 1;
                }
            }
        }
        init = result.weights;
        round += 1;
        if added == 0 {
            break result;
        }
    };
    write_file(&a.output, |w| write!(w, "{}", result.weights))
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// System output, `NAME=PATH` or just `PATH`; repeatable
    #[arg(long, required_unless_present = "ratings")]
    hyp: Vec<String>,
    /// References: a pair file or one tokenized sentence per line
    #[arg(long, requires = "hyp")]
    reference: Option<PathBuf>,
    /// Human ratings, `system<TAB>aspect<TAB>item<TAB>rater<TAB>score`
    #[arg(long)]
    ratings: Option<PathBuf>,
    /// System the rating ratios are relative to
    #[arg(long, default_value = "SMT")]
    baseline: String,
    /// Also write the report as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn named_path(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) => (name.to_owned(), PathBuf::from(path)),
        None => {
            let path = PathBuf::from(arg);
            let name = path
                .file_stem()
                .map_or_else(|| arg.to_owned(), |s| s.to_string_lossy().into_owned());
            (name, path)
        }
    }
}

pub fn evaluate(a: EvaluateArgs, _config: &PipelineConfig) -> Result<()> {
    let mut json = serde_json::Map::new();
    if !a.hyp.is_empty() {
        let reference = a
            .reference
            .as_ref()
            .ok_or_else(|| Error::Config("--hyp needs --reference".into()))?;
        let refs = read_references(reference)?;
        let systems: Vec<(String, PathBuf)> = a.hyp.iter().map(|s| named_path(s)).collect();
        let scores = thread_pool(a.jobs)?.install(|| {
            systems
                .par_iter()
                .map(|(name, path)| Ok((name.clone(), bleu(&read_lines(path)?, &refs, 4)?)))
                .collect::<Result<Vec<_>>>()
        })?;
        let report = BleuReport { systems: scores };
        print!("{}", report.to_table());
        json.extend(report.to_json().as_object().cloned().unwrap_or_default());
    }
    if let Some(path) = &a.ratings {
        let records = load_ratings(path)?;
        let mut systems: Vec<String> = Vec::new();
        for r in &records {
            if !systems.contains(&r.system) {
                systems.push(r.system.clone());
            }
        }
        let ratios = rating_ratios(&records, &a.baseline);
        print!("{}", ratio_table(&ratios, &systems));
        json.extend(ratios_json(&ratios).as_object().cloned().unwrap_or_default());
    }
    if let Some(path) = &a.json {
        let text = serde_json::to_string_pretty(&serde_json::Value::Object(json)).expect("JSON values serialize");
        write_file(path, |w| writeln!(w, "{text}"))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    IrUr,
    IrUu,
    IrCxt,
    Rnd,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Pair files forming the retrieval pool (usually train and dev); repeatable
    #[arg(long, required = true)]
    pool: Vec<PathBuf>,
    /// Queries: a pair file (with context) or one tokenized utterance per line
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Needed by rnd
    #[arg(long)]
    seed: Option<u64>,
    /// Weight terms by raw frequency instead of tf-idf
    #[arg(long)]
    raw_tf: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

pub fn baseline(a: BaselineArgs, config: &PipelineConfig) -> Result<()> {
    let mut pairs = Vec::new();
    for p in &a.pool {
        pairs.extend(read_pairs(p)?);
    }
    let queries = read_inputs(&a.input)?;
    let outputs: Vec<Tokens> = if let Method::Rnd = a.method {
        rnd_ids(&pairs, queries.len(), seed(a.seed, config)?)?
            .into_iter()
            .map(|i| pairs[i].reference.clone())
            .collect()
    } else {
        let weighting = if a.raw_tf {
            TermWeighting::RawTf
        } else {
            TermWeighting::TfIdf
        };
        let index = RetrievalIndex::build(pairs, weighting)?;
        let hits = thread_pool(a.jobs)?.install(|| {
            queries
                .par_iter()
                .map(|q| match a.method {
                    Method::IrUr => Ok(index.ir_ur(&q.source)),
                    Method::IrUu => Ok(index.ir_uu(&q.source)),
                    _ => index.ir_cxt(&q.source, &q.context),
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let misses = hits.iter().filter(|h| h.no_overlap).count();
        if misses > 0 {
            eprintln!("warning: {misses} queries share no term with the pool; first pair returned");
        }
        hits.into_iter().map(|h| h.response.clone()).collect()
    };
    write_token_lines(&a.output, &outputs)
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[arg(long)]
    nbest: PathBuf,
    /// The decoded inputs; echoed back for sentences without candidates
    #[arg(long)]
    input: PathBuf,
    /// Candidates considered per sentence
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    output: PathBuf,
}

pub fn rerank(a: RerankArgs, config: &PipelineConfig) -> Result<()> {
    let depth = a.top.unwrap_or(config.rerank_depth);
    if depth == 0 {
        return Err(Error::Config("--top must be positive".into()));
    }
    let inputs = read_inputs(&a.input)?;
    let lists: BTreeMap<usize, NBestList> = load_nbest(&a.nbest)?;
    if let Some(id) = lists.keys().find(|&&id| id >= inputs.len()) {
        return Err(Error::Data(format!(
            "n-best sentence {id} is beyond the {} inputs",
            inputs.len()
        )));
    }
    let mut out = Vec::with_capacity(inputs.len());
    for (i, input) in inputs.iter().enumerate() {
        match lists.get(&i).filter(|l| !l.is_empty()) {
            Some(list) => out.push(list.candidates[rerank_nbest(list, depth)?].tokens.clone()),
            None => {
                eprintln!(
                    "warning: sentence {i} has no candidates; echoing the input: {}",
                    join_tokens(&input.source)
                );
                out.push(input.source.clone());
            }
        }
    }
    write_token_lines(&a.output, &out)
}
