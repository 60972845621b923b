//! Word translation model with relative distortion.

mod ibm1;
mod table;

pub use ibm1::{train_alignment, AlignmentModel};
pub(crate) use table::jump;
pub use table::{distortion, estimate_phi, tm_log_score, TranslationTable, DEFAULT_ALPHA};

/// Source token that "generates" response words with no aligned source word.
pub const NULL_TOKEN: &str = "<NULL>";

/// For each response position, the 1-based source position it was translated
/// from, or 0 when the word came from NULL. Word-based: start = end.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alignment(pub Vec<usize>);

impl Alignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Source token for response position `i`, with NULL for position 0.
    pub fn source_word<'a, S: AsRef<str>>(&self, source: &'a [S], i: usize) -> Option<&'a str> {
        match self.0.get(i)? {
            0 => Some(NULL_TOKEN),
            &a => source.get(a - 1).map(AsRef::as_ref),
        }
    }
}
