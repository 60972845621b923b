//! Pipeline settings read from `key = value` files.

use std::path::{Path, PathBuf};

use crate::decoder::{DecoderConfig, WeightVector};
use crate::error::{read_to_string, Error, Result};
use crate::language_model::{DEFAULT_MU, MAX_ORDER};
use crate::lexicons::LexiconPaths;
use crate::mert::{DEFAULT_OUTER_ITERATIONS, DEFAULT_RESTARTS};
use crate::translation_model::DEFAULT_ALPHA;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "CROSSTALK_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub models_dir: Option<PathBuf>,
    pub segmentation_lexicon: Option<PathBuf>,
    pub lexicons: LexiconPaths,

    pub alpha: f64,
    pub em_iterations: usize,
    pub lm_order: usize,
    pub lm_mu: f64,
    pub decoder: DecoderConfig,
    pub rerank_depth: usize,
    pub weights: WeightVector,

    pub test_size: usize,
    pub dev_size: usize,
    pub max_response_len: usize,
    pub min_response_len: usize,

    pub trees: usize,
    pub max_depth: usize,
    pub mert_restarts: usize,
    pub mert_iterations: usize,
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            models_dir: None,
            segmentation_lexicon: None,
            lexicons: LexiconPaths::default(),
            alpha: DEFAULT_ALPHA,
            em_iterations: 10,
            lm_order: MAX_ORDER,
            lm_mu: DEFAULT_MU,
            decoder: DecoderConfig::default(),
            rerank_depth: 5,
            weights: WeightVector::default(),
            test_size: 2000,
            dev_size: 4000,
            max_response_len: 60,
            min_response_len: 2,
            trees: 100,
            max_depth: 12,
            mert_restarts: DEFAULT_RESTARTS,
            mert_iterations: DEFAULT_OUTER_ITERATIONS,
            seed: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse("config", line, format!("bad value {value:?} for {key}")))
}

impl PipelineConfig {
    /// Applies `key = value` lines on top of the current settings. Relative
    /// paths are resolved against `base`.
    pub fn apply(&mut self, text: &str, base: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::parse("config", line, "expected key = value"))?;
            let path = || Some(base.join(value));
            match key {
                "corpus" => self.corpus = path(),
                "models_dir" => self.models_dir = path(),
                "segmentation_lexicon" => self.segmentation_lexicon = path(),
                "embeddings" => self.lexicons.embeddings = path(),
                "pinyin" => self.lexicons.pinyin = path(),
                "sentiment" => self.lexicons.sentiment = path(),
                "antonyms" => self.lexicons.antonyms = path(),
                "synonyms" => self.lexicons.synonyms = path(),
                "slang" => self.lexicons.slang = path(),
                "alpha" => self.alpha = num(key, value, line)?,
                "em_iterations" => self.em_iterations = num(key, value, line)?,
                "lm_order" => self.lm_order = num(key, value, line)?,
                "lm_mu" => self.lm_mu = num(key, value, line)?,
                "beam" => self.decoder.beam_width = num(key, value, line)?,
                "distortion_limit" => self.decoder.distortion_limit = num(key, value, line)?,
                "max_options" => self.decoder.max_options = num(key, value, line)?,
                "null_insertions" => self.decoder.null_insertions = num(key, value, line)?,
                "rerank_depth" => self.rerank_depth = num(key, value, line)?,
                "lambda_tm" => self.weights.tm = num(key, value, line)?,
                "lambda_ds" => self.weights.ds = num(key, value, line)?,
                "lambda_lm" => self.weights.lm = num(key, value, line)?,
                "lambda_hm" => self.weights.hm = num(key, value, line)?,
                "test_size" => self.test_size = num(key, value, line)?,
                "dev_size" => self.dev_size = num(key, value, line)?,
                "max_response_len" => self.max_response_len = num(key, value, line)?,
                "min_response_len" => self.min_response_len = num(key, value, line)?,
                "trees" => self.trees = num(key, value, line)?,
                "max_depth" => self.max_depth = num(key, value, line)?,
                "mert_restarts" => self.mert_restarts = num(key, value, line)?,
                "mert_iterations" => self.mert_iterations = num(key, value, line)?,
                "seed" => self.seed = Some(num(key, value, line)?),
                _ => return Err(Error::parse("config", line, format!("unknown key {key:?}"))),
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut config = PipelineConfig::default();
        config.apply(&read_to_string(path)?, path.parent().unwrap_or(Path::new(".")))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.decoder.beam_width == 0 {
            return Err(Error::Config("beam width must be positive".into()));
        }
        if self.rerank_depth == 0 || self.rerank_depth > self.decoder.beam_width {
            return Err(Error::Config(format!(
                "rerank depth {} must lie in 1..={}",
                self.rerank_depth, self.decoder.beam_width
            )));
        }
        if !(1..=MAX_ORDER).contains(&self.lm_order) {
            return Err(Error::Config(format!("LM order must lie in 1..={MAX_ORDER}")));
        }
        if !(0.0..=1.0).contains(&self.lm_mu) {
            return Err(Error::Config("lm_mu must lie in [0, 1]".into()));
        }
        if self.min_response_len > self.max_response_len {
            return Err(Error::Config("min_response_len exceeds max_response_len".into()));
        }
        Ok(())
    }

    /// The seed, which every randomized step must have.
    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("this step is randomized; pass --seed or set seed in the config".into()))
    }
}
