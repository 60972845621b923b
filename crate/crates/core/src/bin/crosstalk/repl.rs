use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::Args;
use crosstalk::config::PipelineConfig;
use crosstalk::corpus::{Lexicon, Segmenter};
use crosstalk::decoder::{decode_nbest, rerank};
use crosstalk::{join_tokens, Result};

use crate::args::{DecodeArgs, ModelArgs};

#[derive(Debug, Args)]
pub struct ReplArgs {
    /// Print the top candidates with their component scores
    #[arg(long)]
    verbose: bool,
    /// Word list for segmenting typed input; without it input is split on whitespace
    #[arg(long)]
    segmentation_lexicon: Option<PathBuf>,
    /// Candidates considered by the humor rerank
    #[arg(long)]
    top: Option<usize>,
    #[command(flatten)]
    models: ModelArgs,
    #[command(flatten)]
    decoding: DecodeArgs,
}

pub fn run(a: ReplArgs, config: &PipelineConfig) -> Result<()> {
    let loaded = a.models.load(config)?;
    let models = loaded.models();
    let weights = a.decoding.weights(config)?;
    let decoder = a.decoding.decoder_config(config)?;
    let depth = a.top.unwrap_or(config.rerank_depth).max(1);
    let segmenter = match a.segmentation_lexicon.or_else(|| config.segmentation_lexicon.clone()) {
        Some(p) => Segmenter::Greedy(Lexicon::load(&p)?),
        None => Segmenter::Pretokenized,
    };

    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    let mut line = String::new();
    loop {
        eprint!("> ");
        line.clear();
        let read = stdin
            .lock()
            .read_line(&mut line)
            .map_err(|e| crosstalk::Error::io("<stdin>", e))?;
        if read == 0 {
            return Ok(());
        }
        let input = segmenter.tokenize(line.trim());
        if input.is_empty() {
            continue;
        }
        let nbest = decode_nbest(&input, &models, &weights, &decoder);
        let response = if nbest.is_empty() {
            eprintln!(
                "warning: {}; echoing the input",
                nbest.diagnostic.as_deref().unwrap_or("no candidates")
            );
            input.clone()
        } else {
            let pick = rerank(&nbest, depth)?;
            if a.verbose {
                for (i, c) in nbest.candidates.iter().take(depth).enumerate() {
                    let [tm, ds, lm, hm] = c.components;
                    let mark = if i == pick { '*' } else { ' ' };
                    eprintln!(
                        "{mark} {i}: {}  [tm {tm:.3} ds {ds:.3} lm {lm:.3} hm {hm:.3}] {:.3}",
                        join_tokens(&c.tokens),
                        c.combined
                    );
                }
            }
            nbest.candidates[pick].tokens.clone()
        };
        writeln!(stdout, "{}", join_tokens(&response)).map_err(|e| crosstalk::Error::io("<stdout>", e))?;
        stdout.flush().map_err(|e| crosstalk::Error::io("<stdout>", e))?;
    }
}
