//! Statistical response generation for two-performer comedic dialogue.
//!
//! The leading comedian's utterance is "translated" into the supporting
//! role's reply. Candidates come from a word translation model with
//! distortion and a 4-gram language model, get a humor score from a random
//! forest over lexical/phonetic features, and are ranked by a log-linear
//! combination whose weights are tuned with minimum error rate training.

pub mod config;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod evaluator;
pub mod humor;
pub mod ir_baselines;
pub mod language_model;
pub mod lexicons;
pub mod mert;
pub mod random_baseline;
pub mod translation_model;

pub use error::{Error, Result};

/// A segmented utterance.
pub type Tokens = Vec<String>;

/// Joins tokens with single spaces, the on-disk representation of a token sequence.
pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}

/// Splits an already tokenized line on whitespace.
pub fn split_tokens(line: &str) -> Tokens {
    line.split_whitespace().map(str::to_owned).collect()
}
