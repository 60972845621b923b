//! Flag groups shared by several subcommands.

use std::path::PathBuf;

use clap::Args;
use crosstalk::config::PipelineConfig;
use crosstalk::decoder::{DecoderConfig, HumorScorer, Models, WeightVector};
use crosstalk::humor::HumorForest;
use crosstalk::language_model::NGramModel;
use crosstalk::lexicons::{LexiconPaths, LexiconSet, ToneMode};
use crosstalk::translation_model::TranslationTable;
use crosstalk::{Error, Result};

#[derive(Debug, Args)]
pub struct LexiconArgs {
    /// Word embeddings, `word v1 .. vD` per line
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Character readings, `char<TAB>syllable[,syllable..]` per line
    #[arg(long)]
    pub pinyin: Option<PathBuf>,
    /// `word<TAB>polarity` per line
    #[arg(long)]
    pub sentiment: Option<PathBuf>,
    #[arg(long)]
    pub antonyms: Option<PathBuf>,
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// One slang word per line
    #[arg(long)]
    pub slang: Option<PathBuf>,
    /// Compare readings with tones
    #[arg(long)]
    pub toned: bool,
}

impl LexiconArgs {
    pub fn load(&self, config: &PipelineConfig) -> Result<LexiconSet> {
        let pick = |flag: &Option<PathBuf>, fallback: &Option<PathBuf>| flag.clone().or_else(|| fallback.clone());
        let c = &config.lexicons;
        let paths = LexiconPaths {
            embeddings: pick(&self.embeddings, &c.embeddings),
            pinyin: pick(&self.pinyin, &c.pinyin),
            sentiment: pick(&self.sentiment, &c.sentiment),
            antonyms: pick(&self.antonyms, &c.antonyms),
            synonyms: pick(&self.synonyms, &c.synonyms),
            slang: pick(&self.slang, &c.slang),
        };
        let mode = if self.toned {
            ToneMode::Toned
        } else {
            ToneMode::Toneless
        };
        LexiconSet::load(&paths, mode)
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Translation table written by train-tm
    #[arg(long)]
    pub tm: Option<PathBuf>,
    /// Language model counts written by train-lm
    #[arg(long)]
    pub lm: Option<PathBuf>,
    /// Humor forest written by train-humor; without it the humor score is 0
    #[arg(long)]
    pub forest: Option<PathBuf>,
    /// Distortion base in (0, 1)
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
}

pub struct LoadedModels {
    pub table: TranslationTable,
    pub lm: NGramModel,
    pub forest: Option<HumorForest>,
    pub lexicons: LexiconSet,
}

impl LoadedModels {
    pub fn models(&self) -> Models<'_> {
        Models {
            table: &self.table,
            lm: &self.lm,
            humor: self.forest.as_ref().map(|forest| HumorScorer {
                forest,
                lexicons: &self.lexicons,
            }),
        }
    }
}

fn model_path(flag: &Option<PathBuf>, config: &PipelineConfig, file: &str, what: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| config.models_dir.as_ref().map(|d| d.join(file)))
        .ok_or_else(|| Error::Config(format!("no {what} given (pass --{what} or set models_dir)")))
}

impl ModelArgs {
    pub fn load(&self, config: &PipelineConfig) -> Result<LoadedModels> {
        let alpha = self.alpha.unwrap_or(config.alpha);
        let table = TranslationTable::load(&model_path(&self.tm, config, "tm.tsv", "tm")?, alpha)?;
        let lm = NGramModel::load(&model_path(&self.lm, config, "lm.counts", "lm")?)?;
        let forest = match &self.forest {
            Some(p) => Some(HumorForest::load(p)?),
            None => None,
        };
        Ok(LoadedModels {
            table,
            lm,
            forest,
            lexicons: self.lexicons.load(config)?,
        })
    }
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Hypotheses kept per stack and candidates per n-best list
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub distortion_limit: Option<usize>,
    /// Translation options per source word
    #[arg(long)]
    pub max_options: Option<usize>,
    /// Words that may be generated from NULL per candidate
    #[arg(long)]
    pub null_insertions: Option<usize>,
    /// Weights file written by tune
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_tm: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_ds: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_lm: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_hm: Option<f64>,
}

impl DecodeArgs {
    pub fn decoder_config(&self, config: &PipelineConfig) -> Result<DecoderConfig> {
        let d = &config.decoder;
        let out = DecoderConfig {
            beam_width: self.beam.unwrap_or(d.beam_width),
            distortion_limit: self.distortion_limit.unwrap_or(d.distortion_limit),
            max_options: self.max_options.unwrap_or(d.max_options),
            null_insertions: self.null_insertions.unwrap_or(d.null_insertions),
        };
        if out.beam_width == 0 || out.max_options == 0 {
            return Err(Error::Config("beam and max options must be positive".into()));
        }
        Ok(out)
    }

    pub fn weights(&self, config: &PipelineConfig) -> Result<WeightVector> {
        let mut w = match &self.weights {
            Some(p) => WeightVector::load(p)?,
            None => config.weights,
        };
        w.tm = self.lambda_tm.unwrap_or(w.tm);
        w.ds = self.lambda_ds.unwrap_or(w.ds);
        w.lm = self.lambda_lm.unwrap_or(w.lm);
        w.hm = self.lambda_hm.unwrap_or(w.hm);
        Ok(w)
    }
}

/// A seed from the flag or the config; randomized steps refuse to run without one.
pub fn seed(flag: Option<u64>, config: &PipelineConfig) -> Result<u64> {
    match flag {
        Some(s) => Ok(s),
        None => config.require_seed(),
    }
}

pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))
}
